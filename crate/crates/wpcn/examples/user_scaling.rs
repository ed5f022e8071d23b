//! Throughput as users join the network. Demonstrates two things: the sweep
//! over K at fixed power, and the incremental solver extension that appends
//! a user by rerunning only the backward pass.
//!
//! ```bash
//! cargo run -p wpcn --example user_scaling
//! ```

use wpcn::model::{Instance, SchedulingPolicy};
use wpcn::sim::{stream_exponential, sweep_users, Problem, Scheme, SimConfig};
use wpcn::stm::{extend_with_user, solve_stm};

fn main() -> wpcn::Result<()> {
    // Mean throughput per K, optimal vs equal-time, 10 dB.
    let config = SimConfig {
        hap_power_db: vec![10.0],
        num_realizations: 500,
        seed: 5,
        scheduling: vec![SchedulingPolicy::AsGiven],
        schemes: vec![Scheme::StmOptimal, Scheme::StmEqual],
        problem: Problem::Stm,
        ..SimConfig::default()
    };
    let result = sweep_users(&config, &[1, 2, 3, 4, 5, 6, 7, 8])?;
    println!("{:>3} {:>12} {:>12} {:>8}", "K", "optimal", "equal", "gap");
    for pair in result.rows.chunks(2) {
        println!(
            "{:>3} {:>12.4} {:>12.4} {:>8.4}",
            pair[0].sweep_value,
            pair[0].mean_objective,
            pair[1].mean_objective,
            pair[0].mean_objective - pair[1].mean_objective
        );
    }

    // One draw grown user by user; the throughput never drops.
    println!("\nincrementally appending users to one draw (10 dB):");
    let gammas: Vec<f64> = (0..8)
        .map(|i| stream_exponential(1.0, 99, i) * 10.0)
        .collect();
    let mut sol = solve_stm(&Instance::from_gammas(&gammas[..1])?)?;
    println!("  K = 1: {:.6}", sol.total_throughput);
    for (k, &gamma) in gammas.iter().enumerate().skip(1) {
        sol = extend_with_user(&sol, gamma)?;
        println!("  K = {}: {:.6}", k + 1, sol.total_throughput);
    }
    Ok(())
}
