//! Solve one total-time instance: every user must deliver its demand, the
//! solver finds the shortest charging-plus-transmission schedule.
//!
//! ```bash
//! cargo run -p wpcn --example solve_ttm
//! ```

use wpcn::model::{evaluate, Instance};
use wpcn::ttm::{geometry, solve_ttm};

fn main() -> wpcn::Result<()> {
    let gammas = [4.0, 1.5, 0.9];
    let demands = [1.0, 1.0, 0.5];
    let inst = Instance::from_gammas_demands(&gammas, &demands)?;

    let sol = solve_ttm(&inst)?;
    println!(
        "pivot user k = {} (anchored at its tangent point)",
        sol.pivot_k
    );
    println!("charging slot τ0 = {:.6}", sol.allocation.tau()[0]);

    let geo = geometry(&inst, &sol.allocation)?;
    let eval = evaluate(&inst, &sol.allocation)?;
    for i in 0..inst.num_users() {
        println!(
            "user {}: slot {:.6}  completion C{} = {:.6}  (tangent minimum {:.6})  demand slack {:+.2e}",
            i + 1,
            sol.allocation.tau()[i + 1],
            i + 1,
            geo.completion[i],
            geo.c_m[i],
            eval.constraint_slack[i]
        );
    }
    println!("total time = {:.6}", sol.total_time);
    Ok(())
}
