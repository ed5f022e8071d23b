//! Which user should transmit first? Paired Monte-Carlo comparison of
//! increasing- vs decreasing-SNR scheduling for both problems.
//!
//! Throughput gains from scheduling weak users first (they free harvesting
//! time for the strong late users); collection time prefers strong users
//! first, but barely, because the weak users dominate the total either way.
//!
//! ```bash
//! cargo run -p wpcn --example scheduling_policies
//! ```

use wpcn::model::SchedulingPolicy;
use wpcn::sim::{point_objectives, Problem, Scheme, SimConfig};

fn mean(series: &[f64]) -> f64 {
    series.iter().sum::<f64>() / series.len() as f64
}

fn main() -> wpcn::Result<()> {
    let base = SimConfig {
        num_users: 5,
        num_realizations: 1000,
        seed: 2024,
        scheduling: vec![
            SchedulingPolicy::IncreasingSnr,
            SchedulingPolicy::DecreasingSnr,
        ],
        ..SimConfig::default()
    };

    println!("K = 5, 1000 paired realizations per point\n");
    println!("sum throughput (nats):");
    println!(
        "{:>8} {:>12} {:>12}",
        "P_H dB", "weak first", "strong first"
    );
    let stm = SimConfig {
        schemes: vec![Scheme::StmOptimal],
        problem: Problem::Stm,
        ..base.clone()
    };
    for &db in &[0.0, 5.0, 10.0, 15.0, 20.0] {
        let cells = point_objectives(&stm, db, 1)?;
        println!(
            "{db:>8} {:>12.4} {:>12.4}",
            mean(&cells[0].1),
            mean(&cells[1].1)
        );
    }

    println!("\ntotal collection time:");
    println!(
        "{:>8} {:>12} {:>12}",
        "P_H dB", "weak first", "strong first"
    );
    let ttm = SimConfig {
        schemes: vec![Scheme::TtmOptimal],
        problem: Problem::Ttm,
        ..base
    };
    for &db in &[0.0, 5.0, 10.0, 15.0, 20.0] {
        let cells = point_objectives(&ttm, db, 1)?;
        println!(
            "{db:>8} {:>12.4} {:>12.4}",
            mean(&cells[0].1),
            mean(&cells[1].1)
        );
    }
    Ok(())
}
