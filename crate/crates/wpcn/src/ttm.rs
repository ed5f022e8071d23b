//! Optimal solver for total-time minimization: each demand constraint is the
//! region above a strictly decreasing curve `V_i(τ) = (τ/γ_i)(e^{D_i/τ}-1)`,
//! the minimum completion time of user `i` sits where a slope `-1` line is
//! tangent to that curve, and the optimum anchors the largest user index
//! whose tangent point still admits a feasible backward chain. Earlier slots
//! follow from the smaller intersection root, later slots from the unique
//! root of `V(τ) = C`.

use crate::error::{Error, Result};
use crate::model::{positive_finite, Instance, TimeAllocation};
use crate::specialfn::{lambert_w0, EXP_OVERFLOW_LIMIT};

/// Completion chains may undershoot a tangent minimum by this much before
/// the candidate pivot is declared infeasible; within the window the roots
/// coincide and the tangent point is returned directly.
const TANGENCY_WINDOW: f64 = 1e-12;

/// Relative tolerance of the bisection in the transformed variable u = D/τ.
const ROOT_TOL: f64 = 1e-13;

const ROOT_MAX_ITER: usize = 200;

/// Tangent point of one user's V-curve: the smallest completion time at
/// which its demand is satisfiable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentPoint {
    /// Slot length τᵐ at the tangent point.
    pub tau: f64,
    /// Completion time Cᵐ = V(τᵐ) + τᵐ.
    pub completion: f64,
}

/// Per-user tangent geometry plus the completion times of an allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct TtmGeometry {
    /// Tangent slot lengths τᵢᵐ.
    pub tau_m: Vec<f64>,
    /// Tangent completion times Cᵢᵐ.
    pub c_m: Vec<f64>,
    /// Completion times Cᵢ = Σ_{j<=i} τⱼ of the allocation, nondecreasing.
    pub completion: Vec<f64>,
}

/// Minimal-time allocation and the binding pivot user.
#[derive(Debug, Clone, PartialEq)]
pub struct TtmSolution {
    pub allocation: TimeAllocation,
    /// Total completion time C_K = Σ τᵢ.
    pub total_time: f64,
    /// 1-based index of the user anchored at its tangent point.
    pub pivot_k: usize,
}

/// Minimum charging time `V(τ) = (τ/γ)(e^{D/τ} - 1)` a user needs to deliver
/// `D` nats in a slot of length `τ`. Strictly decreasing in `τ` with
/// asymptote `D/γ`.
pub fn v_curve(gamma: f64, demand: f64, tau: f64) -> Result<f64> {
    if !(positive_finite(gamma) && positive_finite(demand) && positive_finite(tau)) {
        return Err(Error::invalid_instance(format!(
            "v_curve requires gamma, demand, tau > 0; got ({gamma}, {demand}, {tau})"
        )));
    }
    let exponent = demand / tau;
    if exponent > EXP_OVERFLOW_LIMIT {
        return Err(Error::Overflow {
            value: exponent,
            limit: EXP_OVERFLOW_LIMIT,
        });
    }
    Ok(tau / gamma * exponent.exp_m1())
}

/// Tangent point `τᵐ = D/(W((γ-1)/e) + 1)`, `Cᵐ = (D/γ)·e^{W((γ-1)/e)+1}`.
/// The W argument is at least `-1/e` for every positive `γ`, so this cannot
/// leave the principal branch.
pub fn tangent_point(gamma: f64, demand: f64) -> Result<TangentPoint> {
    if !(positive_finite(gamma) && positive_finite(demand)) {
        return Err(Error::invalid_instance(format!(
            "tangent_point requires gamma, demand > 0; got ({gamma}, {demand})"
        )));
    }
    let w = lambert_w0((gamma - 1.0) / std::f64::consts::E)?;
    Ok(TangentPoint {
        tau: demand / (w + 1.0),
        completion: demand / gamma * (w + 1.0).exp(),
    })
}

/// Deterministic bisection for a sign change of `f` on `[lo, hi]` with
/// `f(lo) <= 0 <= f(hi)`, relative tolerance [`ROOT_TOL`] on the midpoint.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..ROOT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= ROOT_TOL * mid.abs() {
            break;
        }
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Smaller root `τ' ∈ (0, τᵐ]` of `V(τ) = completion - τ`.
///
/// Solved in the transformed variable `u = D/τ`, where the equation becomes
/// `u = ln(1 + γ(Cu - D)/D)` and never overflows for tiny slots; the smaller
/// τ root is the larger u root, bracketed from the tangent point upward.
pub fn root_smaller(gamma: f64, demand: f64, completion: f64) -> Result<f64> {
    let tp = tangent_point(gamma, demand)?;
    if completion < tp.completion - TANGENCY_WINDOW {
        return Err(Error::NoIntersection {
            completion,
            minimum: tp.completion,
        });
    }
    if completion <= tp.completion + TANGENCY_WINDOW {
        return Ok(tp.tau);
    }

    let phi = |u: f64| u - (gamma * (completion * u - demand) / demand).ln_1p();
    let u_m = demand / tp.tau;
    let mut hi = 2.0 * u_m;
    while phi(hi) <= 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numerical {
                reason: "root_smaller bracket expansion diverged".into(),
            });
        }
    }
    Ok(demand / bisect(u_m, hi, phi))
}

/// Unique root of `V(τ) = prior_completion`; exists iff the completion
/// exceeds the curve's asymptote `D/γ`.
pub fn root_unique(gamma: f64, demand: f64, prior_completion: f64) -> Result<f64> {
    if !(positive_finite(gamma) && positive_finite(demand)) {
        return Err(Error::invalid_instance(format!(
            "root_unique requires gamma, demand > 0; got ({gamma}, {demand})"
        )));
    }
    let asymptote = demand / gamma;
    if prior_completion <= asymptote {
        return Err(Error::Infeasible {
            completion: prior_completion,
            asymptote,
        });
    }

    let phi = |u: f64| u - (gamma * prior_completion * u / demand).ln_1p();
    // phi < 0 near the origin (slope 1 - γC/D < 0) and grows to +inf.
    let mut lo = 1.0;
    while phi(lo) >= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::Numerical {
                reason: "root_unique lower bracket collapsed".into(),
            });
        }
    }
    let mut hi = 2.0 * lo;
    while phi(hi) <= 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numerical {
                reason: "root_unique bracket expansion diverged".into(),
            });
        }
    }
    Ok(demand / bisect(lo, hi, phi))
}

fn ttm_inputs(inst: &Instance) -> Result<(Vec<f64>, Vec<f64>, Vec<TangentPoint>)> {
    let gammas = inst.effective_snr();
    let demands = inst.demands();
    for (i, &d) in demands.iter().enumerate() {
        if !positive_finite(d) {
            return Err(Error::invalid_instance(format!(
                "time minimization requires positive demands; user {} has D = {d} \
                 (drop zero-demand users from the instance)",
                i + 1
            )));
        }
    }
    let tangents = gammas
        .iter()
        .zip(&demands)
        .map(|(&g, &d)| tangent_point(g, d))
        .collect::<Result<Vec<_>>>()?;
    Ok((gammas, demands, tangents))
}

/// Backward chain below a candidate pivot: slots and completions for users
/// `pivot-1 .. 1`, or `None` when some completion undershoots its tangent
/// minimum. On success `chain[i-1] = (τ_i, C_i)` for `i < pivot`.
fn backward_chain(
    gammas: &[f64],
    demands: &[f64],
    tangents: &[TangentPoint],
    pivot: usize,
) -> Result<Option<Vec<(f64, f64)>>> {
    let mut chain = vec![(0.0, 0.0); pivot - 1];
    let mut completion = tangents[pivot - 1].completion - tangents[pivot - 1].tau;
    for i in (1..pivot).rev() {
        if completion < tangents[i - 1].completion - TANGENCY_WINDOW {
            return Ok(None);
        }
        let tau = root_smaller(gammas[i - 1], demands[i - 1], completion)?;
        chain[i - 1] = (tau, completion);
        completion -= tau;
    }
    Ok(Some(chain))
}

/// Largest pivot `k` whose tangent point admits a feasible backward chain.
/// `k = 1` always qualifies, so this cannot fail on a valid instance.
pub fn find_pivot_k(inst: &Instance) -> Result<usize> {
    let (gammas, demands, tangents) = ttm_inputs(inst)?;
    for pivot in (1..=gammas.len()).rev() {
        if backward_chain(&gammas, &demands, &tangents, pivot)?.is_some() {
            return Ok(pivot);
        }
    }
    unreachable!("pivot 1 has an empty chain and is always feasible")
}

/// Minimal total charging-plus-transmission time meeting every demand.
///
/// Anchors the pivot user at its tangent point, fills earlier users with the
/// smaller intersection root walking completions down, later users with the
/// unique root walking completions up. Every demand constraint holds and the
/// last one is tight. When the optimum is not unique this deterministically
/// returns the smaller-root selection.
pub fn solve_ttm(inst: &Instance) -> Result<TtmSolution> {
    let (gammas, demands, tangents) = ttm_inputs(inst)?;
    let k = gammas.len();

    let mut pivot = 1;
    let mut chain = Vec::new();
    for candidate in (1..=k).rev() {
        if let Some(found) = backward_chain(&gammas, &demands, &tangents, candidate)? {
            pivot = candidate;
            chain = found;
            break;
        }
    }

    let mut tau = vec![0.0; k + 1];
    let mut completion = vec![0.0; k]; // completion[i-1] = C_i
    tau[pivot] = tangents[pivot - 1].tau;
    completion[pivot - 1] = tangents[pivot - 1].completion;
    for i in 1..pivot {
        let (t, c) = chain[i - 1];
        tau[i] = t;
        completion[i - 1] = c;
    }
    tau[0] = completion[0] - tau[1];
    for i in pivot + 1..=k {
        tau[i] = root_unique(gammas[i - 1], demands[i - 1], completion[i - 2])?;
        completion[i - 1] = completion[i - 2] + tau[i];
    }

    Ok(TtmSolution {
        allocation: TimeAllocation::new(tau)?,
        total_time: completion[k - 1],
        pivot_k: pivot,
    })
}

/// Tangent geometry of every user plus the completion times of a concrete
/// allocation (diagnostics for plots and tests).
pub fn geometry(inst: &Instance, alloc: &TimeAllocation) -> Result<TtmGeometry> {
    let (_, _, tangents) = ttm_inputs(inst)?;
    let k = inst.num_users();
    if alloc.tau().len() != k + 1 {
        return Err(Error::LengthMismatch {
            expected: k + 1,
            got: alloc.tau().len(),
        });
    }
    let mut completion = Vec::with_capacity(k);
    let mut acc = alloc.tau()[0];
    for i in 1..=k {
        acc += alloc.tau()[i];
        completion.push(acc);
    }
    Ok(TtmGeometry {
        tau_m: tangents.iter().map(|t| t.tau).collect(),
        c_m: tangents.iter().map(|t| t.completion).collect(),
        completion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{evaluate, Instance};
    use crate::sim::{stream_exponential, stream_uniform};
    use std::f64::consts::E;

    #[test]
    fn v_curve_anchors() {
        assert!((v_curve(1.0, 1.0, 1.0).unwrap() - (E - 1.0)).abs() < 1e-15);
        // Series: V = D + D²/(2τ) + O(τ⁻²) as τ grows.
        let far = v_curve(1.0, 1.0, 1e6).unwrap();
        assert!((far - 1.0000005).abs() < 1e-12, "{far}");
        assert!((v_curve(2.0, 1.0, 1.0).unwrap() - (E - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn v_curve_overflow_and_domain() {
        assert!(matches!(
            v_curve(1.0, 800.0, 1.0),
            Err(Error::Overflow { .. })
        ));
        assert!(v_curve(1.0, 1.0, 0.0).is_err());
        assert!(v_curve(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn v_curve_strictly_decreasing() {
        for seed in 0..100u64 {
            let gamma = 0.1 + 5.0 * stream_uniform(3, seed);
            let demand = 0.1 + 3.0 * stream_uniform(4, seed);
            let t1 = 0.05 + 2.0 * stream_uniform(5, seed);
            let t2 = t1 + 0.01 + stream_uniform(6, seed);
            assert!(v_curve(gamma, demand, t1).unwrap() > v_curve(gamma, demand, t2).unwrap());
        }
    }

    #[test]
    fn tangent_anchors() {
        let tp = tangent_point(1.0, 1.0).unwrap();
        assert!((tp.tau - 1.0).abs() < 1e-14);
        assert!((tp.completion - E).abs() < 1e-14);

        // Linear in the demand.
        let tp2 = tangent_point(1.0, 2.0).unwrap();
        assert!((tp2.tau - 2.0).abs() < 1e-14);
        assert!((tp2.completion - 2.0 * E).abs() < 1e-13);
    }

    #[test]
    fn tangent_slope_and_touch_identities() {
        for &(gamma, demand) in &[(10.0, 1.0), (0.3, 2.0), (1.0, 1.0), (77.0, 0.25)] {
            let tp = tangent_point(gamma, demand).unwrap();
            // Centered finite difference of V at the tangent slot is -1.
            let h = 1e-6 * tp.tau;
            let dv = (v_curve(gamma, demand, tp.tau + h).unwrap()
                - v_curve(gamma, demand, tp.tau - h).unwrap())
                / (2.0 * h);
            assert!((dv + 1.0).abs() < 1e-6, "slope {dv} at gamma={gamma}");
            // The line touches the curve: V(τᵐ) = Cᵐ - τᵐ.
            let v = v_curve(gamma, demand, tp.tau).unwrap();
            assert!((v - (tp.completion - tp.tau)).abs() < 1e-9);
        }
    }

    /// Test-only oracle: bisection on g(τ) = V(τ) + τ - C over a bracket.
    fn smaller_root_oracle(gamma: f64, demand: f64, completion: f64, lo: f64, hi: f64) -> f64 {
        let g = |t: f64| v_curve(gamma, demand, t).unwrap() + t - completion;
        assert!(g(lo) > 0.0 && g(hi) < 0.0, "oracle bracket invalid");
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn root_smaller_anchors() {
        let root = root_smaller(1.0, 1.0, 3.0).unwrap();
        assert!((0.6..0.7).contains(&root), "{root}");
        let oracle = smaller_root_oracle(1.0, 1.0, 3.0, 0.6, 0.7);
        assert!((root - oracle).abs() < 1e-9, "{root} vs {oracle}");

        // Tangency: single intersection at the tangent slot.
        assert!((root_smaller(1.0, 1.0, E).unwrap() - 1.0).abs() < 1e-12);

        // Fine-grid scan oracle at step 1e-6 confirms the C = 2.8 root.
        let root = root_smaller(1.0, 1.0, 2.8).unwrap();
        let g = |t: f64| v_curve(1.0, 1.0, t).unwrap() + t - 2.8;
        let step = 1e-6;
        let i = (root / step).floor();
        assert!(
            g(i * step) * g((i + 1.0) * step) <= 0.0,
            "scan cell misses root"
        );
        assert!(
            (v_curve(1.0, 1.0, root).unwrap() + root - 2.8).abs() <= 1e-10 * 2.8,
            "residual too large"
        );
    }

    #[test]
    fn root_smaller_rejects_no_intersection() {
        // For γ = D = 1 the tangent minimum is e, so these lines miss the
        // curve entirely.
        assert!(matches!(
            root_smaller(1.0, 1.0, 2.5),
            Err(Error::NoIntersection { .. })
        ));
        assert!(matches!(
            root_smaller(1.0, 1.0, 2.0),
            Err(Error::NoIntersection { .. })
        ));
    }

    #[test]
    fn root_unique_anchors() {
        // Bisection oracle for V(τ) = 2.
        let root = root_unique(1.0, 1.0, 2.0).unwrap();
        let g = |t: f64| v_curve(1.0, 1.0, t).unwrap() - 2.0;
        let (mut lo, mut hi) = (0.5, 1.5);
        assert!(g(lo) > 0.0 && g(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((root - 0.5 * (lo + hi)).abs() < 1e-9);
        assert!((root - 0.796).abs() < 1e-3);

        // V(1) = e - 1 exactly.
        assert!((root_unique(1.0, 1.0, E - 1.0).unwrap() - 1.0).abs() < 1e-12);

        // At the asymptote the demand needs an infinite slot.
        assert!(matches!(
            root_unique(1.0, 1.0, 1.0),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn pivot_anchors() {
        let k1 = Instance::from_gammas(&[1.0]).unwrap();
        assert_eq!(find_pivot_k(&k1).unwrap(), 1);

        // Equal users: the chain from user 2 undershoots C₁ᵐ = e.
        let even = Instance::from_gammas(&[1.0, 1.0]).unwrap();
        assert_eq!(find_pivot_k(&even).unwrap(), 1);

        // A strong first user shrinks C₁ᵐ until the chain from 2 fits.
        let skewed = Instance::from_gammas(&[100.0, 1.0]).unwrap();
        assert_eq!(find_pivot_k(&skewed).unwrap(), 2);
    }

    #[test]
    fn single_user_closed_form() {
        let sol = solve_ttm(&Instance::from_gammas(&[1.0]).unwrap()).unwrap();
        let tau = sol.allocation.tau();
        assert!((tau[1] - 1.0).abs() < 1e-12);
        assert!((tau[0] - (E - 1.0)).abs() < 1e-12);
        assert!((sol.total_time - E).abs() < 1e-12);
        assert_eq!(sol.pivot_k, 1);
    }

    #[test]
    fn two_equal_users() {
        let inst = Instance::from_gammas(&[1.0, 1.0]).unwrap();
        let sol = solve_ttm(&inst).unwrap();
        let tau = sol.allocation.tau();
        assert_eq!(sol.pivot_k, 1);
        assert!((tau[1] - 1.0).abs() < 1e-12);
        assert!((tau[0] - (E - 1.0)).abs() < 1e-12);
        let tau2 = root_unique(1.0, 1.0, E).unwrap();
        assert!((tau[2] - tau2).abs() < 1e-12);
        assert!((sol.total_time - (E + tau2)).abs() < 1e-12);
    }

    #[test]
    fn feasibility_and_tightness_on_random_instances() {
        for seed in 0..200u64 {
            let k = 1 + (seed % 8) as usize;
            let gammas: Vec<f64> = (0..k)
                .map(|i| 0.05 + stream_exponential(1.0, 31 + seed, i as u64) * 10.0)
                .collect();
            let demands: Vec<f64> = (0..k)
                .map(|i| 0.2 + 2.0 * stream_uniform(47 + seed, i as u64))
                .collect();
            let inst = Instance::from_gammas_demands(&gammas, &demands).unwrap();
            let sol = solve_ttm(&inst).unwrap();
            let eval = evaluate(&inst, &sol.allocation).unwrap();

            for (i, &slack) in eval.constraint_slack.iter().enumerate() {
                assert!(slack >= -1e-9, "seed {seed}: user {} slack {slack}", i + 1);
            }
            let last = eval.constraint_slack[k - 1];
            assert!(last.abs() <= 1e-9, "seed {seed}: last slack {last}");

            // The pivot sits on its tangent point.
            let tp = tangent_point(gammas[sol.pivot_k - 1], demands[sol.pivot_k - 1]).unwrap();
            assert!((sol.allocation.tau()[sol.pivot_k] - tp.tau).abs() < 1e-10);
            let geo = geometry(&inst, &sol.allocation).unwrap();
            assert!((geo.completion[sol.pivot_k - 1] - tp.completion).abs() < 1e-10);
            for w in geo.completion.windows(2) {
                assert!(w[1] >= w[0]);
            }
            assert!((geo.completion[k - 1] - sol.total_time).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_zero_demand() {
        let inst = Instance::from_gammas_demands(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!(solve_ttm(&inst).is_err());
        assert!(find_pivot_k(&inst).is_err());
    }
}
