//! Solve one sum-throughput instance and inspect the optimum.
//!
//! ```bash
//! cargo run -p wpcn --example solve_stm
//! ```

use wpcn::model::Instance;
use wpcn::oracle::kkt_residuals;
use wpcn::stm::solve_stm;

fn main() -> wpcn::Result<()> {
    // Three users in transmission order; γ is the only per-user parameter
    // that matters (h·η·g·P_H/σ² collapsed into one number).
    let inst = Instance::from_gammas(&[0.8, 2.0, 5.0])?;
    let sol = solve_stm(&inst)?;

    println!("optimal allocation over the unit block:");
    println!("  charging slot τ0 = {:.6}", sol.allocation.tau()[0]);
    for (i, t) in sol.allocation.tau()[1..].iter().enumerate() {
        println!("  user {} slot  τ{} = {t:.6}", i + 1, i + 1);
    }
    println!("  sum of slots     = {:.12}", sol.allocation.total());
    println!(
        "total throughput = {:.6} nats ({:.6} bits)",
        sol.total_throughput,
        sol.total_throughput / std::f64::consts::LN_2
    );

    // The stationarity system certifies optimality.
    let diag = kkt_residuals(&inst, &sol.allocation)?;
    let worst = diag
        .stationarity_residuals
        .iter()
        .fold(0.0_f64, |acc, r| acc.max(r.abs()));
    println!(
        "KKT: lambda = {:.6}, max residual = {worst:.2e}",
        diag.lambda
    );
    Ok(())
}
