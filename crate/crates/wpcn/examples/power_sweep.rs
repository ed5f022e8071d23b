//! Mean throughput vs access-point power for the optimal and equal-time
//! schemes, emitted as the same CSV the `wpcn sweep` subcommand produces.
//!
//! ```bash
//! cargo run -p wpcn --example power_sweep > sweep.csv
//! ```

use wpcn::cli::{sweep_csv, RateUnit};
use wpcn::model::SchedulingPolicy;
use wpcn::sim::{run_sweep_threaded, Problem, Scheme, SimConfig};

fn main() -> wpcn::Result<()> {
    let config = SimConfig {
        num_users: 2,
        hap_power_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
        num_realizations: 1000,
        seed: 42,
        scheduling: vec![SchedulingPolicy::AsGiven],
        schemes: vec![Scheme::StmOptimal, Scheme::StmFixedTdma, Scheme::StmEqual],
        problem: Problem::Stm,
        ..SimConfig::default()
    };
    let result = run_sweep_threaded(&config, 4)?;
    print!("{}", sweep_csv(&result, RateUnit::Nats));
    Ok(())
}
