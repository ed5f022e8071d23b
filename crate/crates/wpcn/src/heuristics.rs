//! The four cheap suboptimal allocation schemes used as simulation baselines:
//! equal-time and fixed-TDMA for throughput maximization, equal-time and
//! tangent-point for time minimization.

use crate::error::{Error, Result};
use crate::model::{evaluate, positive_finite, Instance, TimeAllocation};
use crate::ttm::tangent_point;

/// Identifies which suboptimal scheme produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeId {
    StmEqual,
    StmFixedTdma,
    TtmEqual,
    TtmTangent,
}

/// Allocation and objective of one suboptimal scheme. The objective is
/// throughput in nats for throughput schemes and total time for
/// time-minimization schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicResult {
    pub allocation: TimeAllocation,
    pub objective: f64,
    pub scheme_id: SchemeId,
}

/// Equal time for every slot including the charging slot: `τ_i = 1/(K+1)`.
pub fn stm_equal(inst: &Instance) -> Result<HeuristicResult> {
    let k = inst.num_users();
    let allocation = TimeAllocation::new(vec![1.0 / (k + 1) as f64; k + 1])?;
    let objective = evaluate(inst, &allocation)?.total_throughput;
    Ok(HeuristicResult {
        allocation,
        objective,
        scheme_id: SchemeId::StmEqual,
    })
}

/// Substituted fixed-TDMA objective: equal transmit slots `(1-τ₀)/K`, with
/// only the charging slot free. User `i` (1-based) sees the rate argument
/// `1 + γ_i(i-1) + γ_i·K·τ₀/(1-τ₀)`. The solver itself works on the
/// derivative; this form anchors the tests.
#[cfg(test)]
fn fixed_tdma_objective(gammas: &[f64], tau0: f64) -> f64 {
    let k = gammas.len() as f64;
    let s = 1.0 - tau0;
    if s <= 0.0 {
        return 0.0;
    }
    gammas
        .iter()
        .enumerate()
        .map(|(idx, &g)| {
            let arg = 1.0 + g * idx as f64 + g * k * tau0 / s;
            s / k * arg.ln()
        })
        .sum()
}

/// Derivative of the substituted objective in τ₀; strictly decreasing on
/// (0, 1) by concavity, so its sign change locates the maximizer.
fn fixed_tdma_derivative(gammas: &[f64], tau0: f64) -> f64 {
    let k = gammas.len() as f64;
    let s = 1.0 - tau0;
    gammas
        .iter()
        .enumerate()
        .map(|(idx, &g)| {
            let arg = 1.0 + g * idx as f64 + g * k * tau0 / s;
            -arg.ln() / k + g / (s * arg)
        })
        .sum()
}

/// Fixed-TDMA allocation: `τ_i = (1-τ₀)/K` with τ₀ maximizing the
/// substituted concave objective, located to `1e-10` by bisection on the
/// analytic derivative.
pub fn stm_fixed_tdma(inst: &Instance) -> Result<HeuristicResult> {
    let gammas = inst.effective_snr();
    let k = gammas.len();

    let tau0 = if fixed_tdma_derivative(&gammas, 0.0) <= 0.0 {
        0.0
    } else {
        let mut lo = 0.0;
        let mut hi = 1.0 - 1e-12;
        for _ in 0..200 {
            if hi - lo <= 1e-12 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if fixed_tdma_derivative(&gammas, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    let mut tau = vec![(1.0 - tau0) / k as f64; k + 1];
    tau[0] = tau0;
    let allocation = TimeAllocation::new(tau)?;
    let objective = evaluate(inst, &allocation)?.total_throughput;
    Ok(HeuristicResult {
        allocation,
        objective,
        scheme_id: SchemeId::StmFixedTdma,
    })
}

/// Equal time for every slot, stretched until each demand holds:
/// `τ₀ = max_i D_i / ln(1 + i·γ_i)` and every slot equals τ₀.
pub fn ttm_equal(inst: &Instance) -> Result<HeuristicResult> {
    let gammas = inst.effective_snr();
    let demands = inst.demands();
    let k = gammas.len();
    let mut tau0 = 0.0_f64;
    for (idx, (&g, &d)) in gammas.iter().zip(&demands).enumerate() {
        if !positive_finite(d) {
            return Err(Error::invalid_instance(format!(
                "equal-time scheme requires positive demands; user {} has D = {d}",
                idx + 1
            )));
        }
        tau0 = tau0.max(d / (1.0 + (idx + 1) as f64 * g).ln());
    }
    let allocation = TimeAllocation::new(vec![tau0; k + 1])?;
    Ok(HeuristicResult {
        objective: (k + 1) as f64 * tau0,
        allocation,
        scheme_id: SchemeId::TtmEqual,
    })
}

/// Tangent-point allocation: every user transmits for its tangent slot
/// `τ_iᵐ`, and the charging slot is the smallest value making every demand
/// constraint hold. Each constraint is monotone in τ₀, so the minimal τ₀ is
/// the largest per-user deficit `V_i(τ_iᵐ) - Σ_{j<i} τ_jᵐ`, clamped at 0.
pub fn ttm_tangent(inst: &Instance) -> Result<HeuristicResult> {
    let gammas = inst.effective_snr();
    let demands = inst.demands();
    let k = gammas.len();
    for (idx, &d) in demands.iter().enumerate() {
        if !positive_finite(d) {
            return Err(Error::invalid_instance(format!(
                "tangent-point scheme requires positive demands; user {} has D = {d}",
                idx + 1
            )));
        }
    }

    let mut tau = vec![0.0; k + 1];
    let mut tau0 = 0.0_f64;
    let mut prior = 0.0; // Σ_{j=1}^{i-1} τ_jᵐ
    for i in 1..=k {
        let tp = tangent_point(gammas[i - 1], demands[i - 1])?;
        tau[i] = tp.tau;
        // V(τᵐ) = Cᵐ - τᵐ by the touching identity.
        tau0 = tau0.max(tp.completion - tp.tau - prior);
        prior += tp.tau;
    }
    tau[0] = tau0.max(0.0);

    let allocation = TimeAllocation::new(tau)?;
    Ok(HeuristicResult {
        objective: allocation.total(),
        allocation,
        scheme_id: SchemeId::TtmTangent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{stream_exponential, stream_uniform};
    use crate::stm::solve_stm;
    use crate::ttm::solve_ttm;
    use std::f64::consts::E;

    fn random_instance(seed: u64, max_users: usize) -> Instance {
        let k = 1 + (seed % max_users as u64) as usize;
        let gammas: Vec<f64> = (0..k)
            .map(|i| 0.05 + stream_exponential(1.0, seed, i as u64) * 8.0)
            .collect();
        let demands: Vec<f64> = (0..k)
            .map(|i| 0.2 + 2.0 * stream_uniform(seed ^ 0xABCD, i as u64))
            .collect();
        Instance::from_gammas_demands(&gammas, &demands).unwrap()
    }

    #[test]
    fn stm_equal_anchors() {
        let one = stm_equal(&Instance::from_gammas(&[1.0]).unwrap()).unwrap();
        assert_eq!(one.allocation.tau(), &[0.5, 0.5]);
        assert!((one.objective - 0.5 * 2f64.ln()).abs() < 1e-15);

        let two = stm_equal(&Instance::from_gammas(&[1.0, 2.0]).unwrap()).unwrap();
        for &t in two.allocation.tau() {
            assert!((t - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn fixed_tdma_single_user_is_exact_optimum() {
        // With K=1 the family covers the full problem: τ₀* = 1 - 1/e.
        let res = stm_fixed_tdma(&Instance::from_gammas(&[1.0]).unwrap()).unwrap();
        assert!((res.allocation.tau()[0] - (1.0 - 1.0 / E)).abs() <= 1e-10);
        assert!((res.objective - 1.0 / E).abs() <= 1e-10);

        for seed in 0..50u64 {
            let gamma = 0.05 + stream_exponential(1.0, 600 + seed, 0) * 10.0;
            let inst = Instance::from_gammas(&[gamma]).unwrap();
            let gap = solve_stm(&inst).unwrap().total_throughput
                - stm_fixed_tdma(&inst).unwrap().objective;
            assert!(gap.abs() <= 1e-9, "seed {seed}: gap {gap}");
        }
    }

    #[test]
    fn fixed_tdma_interior_for_equal_gains() {
        let inst = Instance::from_gammas(&[1.0; 8]).unwrap();
        let res = stm_fixed_tdma(&inst).unwrap();
        let tau0 = res.allocation.tau()[0];
        assert!(tau0 > 0.0 && tau0 < 1.0, "tau0 = {tau0}");
    }

    #[test]
    fn fixed_tdma_charging_slot_is_a_local_maximum() {
        for seed in 0..50u64 {
            let inst = random_instance(300 + seed, 6);
            let gammas = inst.effective_snr();
            let tau0 = stm_fixed_tdma(&inst).unwrap().allocation.tau()[0];
            let here = fixed_tdma_objective(&gammas, tau0);
            if tau0 > 1e-6 {
                assert!(here >= fixed_tdma_objective(&gammas, tau0 - 1e-6) - 1e-12);
            }
            assert!(here >= fixed_tdma_objective(&gammas, tau0 + 1e-6) - 1e-12);
        }
    }

    #[test]
    fn stm_heuristics_sandwich() {
        for seed in 0..150u64 {
            let inst = random_instance(seed, 9);
            let optimal = solve_stm(&inst).unwrap().total_throughput;
            let fixed = stm_fixed_tdma(&inst).unwrap().objective;
            let equal = stm_equal(&inst).unwrap().objective;
            assert!(fixed <= optimal + 1e-9, "seed {seed}");
            // Equal time is the τ₀ = 1/(K+1) member of the fixed-TDMA family.
            assert!(fixed >= equal - 1e-9, "seed {seed}: {fixed} < {equal}");
        }
    }

    #[test]
    fn ttm_equal_anchors() {
        let two = ttm_equal(&Instance::from_gammas(&[1.0, 1.0]).unwrap()).unwrap();
        let expected = 1.0 / 2f64.ln();
        assert!((two.allocation.tau()[0] - expected).abs() < 1e-12);
        assert!((two.objective - 3.0 * expected).abs() < 1e-12);
        assert!((two.objective - 4.328085).abs() < 1e-5);

        let one = ttm_equal(&Instance::from_gammas(&[1.0]).unwrap()).unwrap();
        assert!((one.objective - 2.0 / 2f64.ln()).abs() < 1e-12);
        assert!(one.objective >= E);
    }

    #[test]
    fn ttm_equal_binding_user_is_tight() {
        for seed in 0..100u64 {
            let inst = random_instance(1000 + seed, 6);
            let res = ttm_equal(&inst).unwrap();
            let eval = evaluate(&inst, &res.allocation).unwrap();
            let min_slack = eval
                .constraint_slack
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            assert!(min_slack >= -1e-9, "seed {seed}: {min_slack}");
            assert!(min_slack <= 1e-9, "seed {seed}: argmax user should bind");
        }
    }

    #[test]
    fn ttm_tangent_anchors() {
        let one = ttm_tangent(&Instance::from_gammas(&[1.0]).unwrap()).unwrap();
        assert!((one.allocation.tau()[1] - 1.0).abs() < 1e-12);
        assert!((one.allocation.tau()[0] - (E - 1.0)).abs() < 1e-12);
        // Coincides with the K=1 optimum.
        let opt = solve_ttm(&Instance::from_gammas(&[1.0]).unwrap()).unwrap();
        assert!((one.objective - opt.total_time).abs() < 1e-12);

        let two = ttm_tangent(&Instance::from_gammas(&[1.0, 1.0]).unwrap()).unwrap();
        assert!((two.allocation.tau()[0] - (E - 1.0)).abs() < 1e-12);
        assert!((two.objective - (E + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn ttm_heuristics_dominated_by_optimum() {
        for seed in 0..150u64 {
            let inst = random_instance(5000 + seed, 7);
            let optimal = solve_ttm(&inst).unwrap().total_time;
            let tangent = ttm_tangent(&inst).unwrap();
            let equal = ttm_equal(&inst).unwrap();
            assert!(tangent.objective >= optimal - 1e-9, "seed {seed}");
            assert!(equal.objective >= optimal - 1e-9, "seed {seed}");

            let eval = evaluate(&inst, &tangent.allocation).unwrap();
            let min_slack = eval
                .constraint_slack
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            assert!(min_slack >= -1e-9, "seed {seed}: {min_slack}");
            if tangent.allocation.tau()[0] > 1e-12 {
                assert!(min_slack <= 1e-9, "seed {seed}: some constraint must bind");
            }
        }
    }

    #[test]
    fn ttm_tangent_tau0_matches_bisection() {
        // Cross-check the closed-form charging slot against a bisection on
        // the monotone feasibility predicate.
        for seed in 0..50u64 {
            let inst = random_instance(9000 + seed, 5);
            let res = ttm_tangent(&inst).unwrap();
            let transmit: Vec<f64> = res.allocation.tau()[1..].to_vec();

            let feasible = |tau0: f64| {
                let mut tau = vec![tau0];
                tau.extend_from_slice(&transmit);
                let alloc = TimeAllocation::new(tau).unwrap();
                evaluate(&inst, &alloc)
                    .unwrap()
                    .constraint_slack
                    .iter()
                    .all(|&s| s >= 0.0)
            };
            let mut hi = 1.0;
            while !feasible(hi) {
                hi *= 2.0;
            }
            let mut lo = 0.0;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if feasible(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            assert!(
                (res.allocation.tau()[0] - hi).abs() < 1e-9,
                "seed {seed}: closed form {} vs bisection {hi}",
                res.allocation.tau()[0]
            );
        }
    }

    #[test]
    fn ttm_schemes_reject_zero_demand() {
        let inst = Instance::from_gammas_demands(&[1.0], &[0.0]).unwrap();
        assert!(ttm_equal(&inst).is_err());
        assert!(ttm_tangent(&inst).is_err());
    }
}
