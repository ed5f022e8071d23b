//! Cross-validate the closed-form solvers against the independent oracles:
//! grid search, projected-gradient ascent, and the KKT residual system.
//! The `wpcn oracle-check` subcommand runs a bigger battery of the same
//! checks for CI.
//!
//! ```bash
//! cargo run -p wpcn --example oracle_cross_check
//! ```

use wpcn::model::{evaluate, Instance};
use wpcn::oracle::{kkt_residuals, stm_grid_oracle, stm_projected_gradient, ttm_grid_oracle};
use wpcn::stm::solve_stm;
use wpcn::ttm::solve_ttm;

fn main() -> wpcn::Result<()> {
    let inst = Instance::from_gammas(&[0.7, 3.2])?;

    let sol = solve_stm(&inst)?;
    let (_, grid) = stm_grid_oracle(&inst, 1e-3)?;
    let pg_alloc = stm_projected_gradient(&inst, 100_000, 1e-12)?;
    let pg = evaluate(&inst, &pg_alloc)?.total_throughput;
    let diag = kkt_residuals(&inst, &sol.allocation)?;
    let worst = diag
        .stationarity_residuals
        .iter()
        .fold(0.0_f64, |acc, r| acc.max(r.abs()));

    println!("sum-throughput maximization:");
    println!("  closed form         {:.9}", sol.total_throughput);
    println!(
        "  grid search         {:.9}  (diff {:+.2e})",
        grid,
        grid - sol.total_throughput
    );
    println!(
        "  projected gradient  {:.9}  (diff {:+.2e})",
        pg,
        pg - sol.total_throughput
    );
    println!("  max KKT residual    {worst:.2e}");

    let sol = solve_ttm(&inst)?;
    let (_, grid) = ttm_grid_oracle(&inst, 3e-4)?;
    println!("total-time minimization:");
    println!("  two-pass solver     {:.9}", sol.total_time);
    println!(
        "  grid search         {:.9}  (diff {:+.2e})",
        grid,
        grid - sol.total_time
    );
    Ok(())
}
