//! Optimal allocation vs the cheap baselines on a single instance, for both
//! problem families.
//!
//! ```bash
//! cargo run -p wpcn --example compare_heuristics
//! ```

use wpcn::heuristics::{stm_equal, stm_fixed_tdma, ttm_equal, ttm_tangent};
use wpcn::model::Instance;
use wpcn::stm::solve_stm;
use wpcn::ttm::solve_ttm;

fn main() -> wpcn::Result<()> {
    let inst = Instance::from_gammas(&[0.5, 1.0, 2.0, 4.0])?;

    println!("sum-throughput (nats, unit block):");
    println!("  optimal     {:.6}", solve_stm(&inst)?.total_throughput);
    println!("  fixed-TDMA  {:.6}", stm_fixed_tdma(&inst)?.objective);
    println!("  equal time  {:.6}", stm_equal(&inst)?.objective);

    println!("total collection time (unit demands):");
    println!("  optimal     {:.6}", solve_ttm(&inst)?.total_time);
    println!("  tangent     {:.6}", ttm_tangent(&inst)?.objective);
    println!("  equal time  {:.6}", ttm_equal(&inst)?.objective);
    Ok(())
}
