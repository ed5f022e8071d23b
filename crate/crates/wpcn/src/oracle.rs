//! Independent verification machinery: KKT stationarity diagnostics,
//! brute-force grid searches for small instances, and a projected-gradient
//! ascent that exploits concavity of the throughput objective. These are the
//! ground truth the closed-form solvers are tested against; every comparison
//! value is computed from the model directly, never through solver code.
//! (The time-minimization search box is sized by the tangent heuristic,
//! which only affects how far the search looks, not what it measures.)

use crate::error::{Error, Result};
use crate::heuristics::ttm_tangent;
use crate::model::{positive_finite, slot_throughput, Instance, TimeAllocation};
use crate::specialfn::EXP_OVERFLOW_LIMIT;

/// Dual variable and stationarity residuals of an allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct KktDiagnostics {
    /// Dual variable λ recovered from the charging-slot stationarity
    /// equation.
    pub lambda: f64,
    /// Per-user stationarity residuals; all ~0 at the optimum.
    pub stationarity_residuals: Vec<f64>,
    /// `Σ τ - 1`.
    pub primal_feasibility: f64,
    /// `λ·(Σ τ - 1)`.
    pub complementary_slackness: f64,
}

/// `B(x) = ln(1+γx) - γx/(1+γx)`, the own-slot marginal throughput.
fn own_marginal(gamma: f64, x: f64) -> f64 {
    let gx = gamma * x;
    gx.ln_1p() - gx / (1.0 + gx)
}

/// `γ/(1+γx)`, the marginal value of one more unit of harvesting time.
fn harvest_marginal(gamma: f64, x: f64) -> f64 {
    gamma / (1.0 + gamma * x)
}

fn slot_ratios(inst: &Instance, alloc: &TimeAllocation) -> Result<Vec<f64>> {
    let k = inst.num_users();
    if alloc.tau().len() != k + 1 {
        return Err(Error::LengthMismatch {
            expected: k + 1,
            got: alloc.tau().len(),
        });
    }
    let tau = alloc.tau();
    let mut ratios = Vec::with_capacity(k);
    let mut prior = 0.0;
    for i in 1..=k {
        prior += tau[i - 1];
        if tau[i] == 0.0 {
            return Err(Error::Numerical {
                reason: format!("KKT ratios undefined: transmit slot {i} is zero"),
            });
        }
        ratios.push(prior / tau[i]);
    }
    Ok(ratios)
}

/// Evaluates the stationarity system at an allocation: λ from the
/// charging-slot equation, then one residual per user. All residuals vanish
/// (to solver tolerance) exactly at the optimum.
pub fn kkt_residuals(inst: &Instance, alloc: &TimeAllocation) -> Result<KktDiagnostics> {
    let gammas = inst.effective_snr();
    let ratios = slot_ratios(inst, alloc)?;
    let k = gammas.len();

    // suffix[i] = Σ_{k>i} γ_k/(γ_k x_k + 1), 1-based users.
    let mut suffix = vec![0.0; k + 1];
    for i in (0..k).rev() {
        suffix[i] = suffix[i + 1] + harvest_marginal(gammas[i], ratios[i]);
    }
    let lambda = suffix[0];

    let stationarity_residuals: Vec<f64> = (0..k)
        .map(|i| own_marginal(gammas[i], ratios[i]) + suffix[i + 1] - lambda)
        .collect();

    let primal_feasibility = alloc.total() - 1.0;
    Ok(KktDiagnostics {
        lambda,
        stationarity_residuals,
        primal_feasibility,
        complementary_slackness: lambda * primal_feasibility,
    })
}

/// Analytic gradient of the throughput objective at an interior allocation.
/// Entry 0 is the charging-slot derivative.
pub fn throughput_gradient(inst: &Instance, tau: &[f64]) -> Vec<f64> {
    let gammas = inst.effective_snr();
    let k = gammas.len();
    debug_assert_eq!(tau.len(), k + 1);

    let mut ratios = Vec::with_capacity(k);
    let mut prior = 0.0;
    for i in 1..=k {
        prior += tau[i - 1];
        ratios.push(prior / tau[i]);
    }
    let mut suffix = vec![0.0; k + 1];
    for i in (0..k).rev() {
        suffix[i] = suffix[i + 1] + harvest_marginal(gammas[i], ratios[i]);
    }

    let mut grad = Vec::with_capacity(k + 1);
    grad.push(suffix[0]);
    for i in 0..k {
        grad.push(own_marginal(gammas[i], ratios[i]) + suffix[i + 1]);
    }
    grad
}

// ---------------------------------------------------------------------------
// Simplex projection
// ---------------------------------------------------------------------------

/// Euclidean projection onto the simplex `{τ >= 0, Σ τ = mass}` by
/// sort-and-threshold; ties resolve by index through the stable sort.
fn project_simplex_mass(v: &[f64], mass: f64) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite coordinates"));
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (mass - cumulative) / (j + 1) as f64;
        if u + candidate > 0.0 {
            threshold = candidate;
        } else {
            break;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|&u| (u + threshold).max(0.0)).collect();
    // Pin the sum exactly by absorbing rounding into the largest entry.
    for _ in 0..4 {
        let sum: f64 = out.iter().sum();
        if sum == mass {
            break;
        }
        let argmax = out
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
            .map(|(i, _)| i)
            .expect("nonempty");
        out[argmax] += mass - sum;
    }
    out
}

/// Euclidean projection onto the unit simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    project_simplex_mass(v, 1.0)
}

/// Projection onto the unit simplex intersected with `τ_i >= floor`, used to
/// keep gradient iterates strictly interior.
fn project_simplex_floored(v: &[f64], floor: f64) -> Vec<f64> {
    let n = v.len() as f64;
    let shifted: Vec<f64> = v.iter().map(|&u| u - floor).collect();
    let mut out = project_simplex_mass(&shifted, 1.0 - n * floor);
    for u in &mut out {
        *u += floor;
    }
    out
}

// ---------------------------------------------------------------------------
// STM oracles
// ---------------------------------------------------------------------------

const STM_ORACLE_MAX_USERS: usize = 3;
const TTM_ORACLE_MAX_USERS: usize = 2;

fn throughput_of(gammas: &[f64], tau: &[f64]) -> f64 {
    let mut prior = 0.0;
    let mut total = 0.0;
    for (i, &g) in gammas.iter().enumerate() {
        prior += tau[i];
        total += slot_throughput(g, prior, tau[i + 1]);
    }
    total
}

/// Exhaustive search of the unit simplex at the given step, followed by one
/// local refinement pass at `step/100` around the best point. Ground truth
/// for instances of up to three users.
pub fn stm_grid_oracle(inst: &Instance, step: f64) -> Result<(TimeAllocation, f64)> {
    let gammas = inst.effective_snr();
    let k = gammas.len();
    if k > STM_ORACLE_MAX_USERS {
        return Err(Error::OracleSize {
            limit: STM_ORACLE_MAX_USERS,
            got: k,
        });
    }
    if !(1e-4..=1e-1).contains(&step) {
        return Err(Error::config(format!(
            "stm_grid_oracle step must lie in [1e-4, 1e-1], got {step}"
        )));
    }

    let n = (1.0 / step).round() as usize;
    let mut best_tau = vec![0.0; k + 1];
    best_tau[0] = 1.0;
    let mut best = 0.0_f64;

    // Transmit-slot lattice; the charging slot takes the remainder.
    let mut counters = vec![0usize; k];
    loop {
        let used: usize = counters.iter().sum();
        if used <= n {
            let mut tau = Vec::with_capacity(k + 1);
            tau.push((n - used) as f64 / n as f64);
            tau.extend(counters.iter().map(|&c| c as f64 / n as f64));
            let value = throughput_of(&gammas, &tau);
            if value > best {
                best = value;
                best_tau = tau;
            }
        }
        // Odometer over the K transmit slots.
        let mut dim = 0;
        loop {
            if dim == k {
                let refined = refine_stm(&gammas, &best_tau, step, step / 100.0);
                let (tau, value) = refined;
                return Ok((TimeAllocation::new(tau)?, value));
            }
            counters[dim] += 1;
            if counters[dim] <= n {
                break;
            }
            counters[dim] = 0;
            dim += 1;
        }
    }
}

fn refine_stm(gammas: &[f64], center: &[f64], radius: f64, step: f64) -> (Vec<f64>, f64) {
    let k = gammas.len();
    let span = (2.0 * radius / step).round() as i64;
    let mut best_tau = center.to_vec();
    let mut best = throughput_of(gammas, center);

    let mut offsets = vec![0i64; k];
    loop {
        let mut tau = Vec::with_capacity(k + 1);
        let mut used = 0.0;
        let mut valid = true;
        for (i, &o) in offsets.iter().enumerate() {
            let t = center[i + 1] - radius + o as f64 * step;
            if t < 0.0 {
                valid = false;
                break;
            }
            used += t;
            tau.push(t);
        }
        if valid && used <= 1.0 {
            let mut full = Vec::with_capacity(k + 1);
            full.push(1.0 - used);
            full.extend(tau);
            let value = throughput_of(gammas, &full);
            if value > best {
                best = value;
                best_tau = full;
            }
        }
        let mut dim = 0;
        loop {
            if dim == k {
                return (best_tau, best);
            }
            offsets[dim] += 1;
            if offsets[dim] <= span {
                break;
            }
            offsets[dim] = 0;
            dim += 1;
        }
    }
}

/// Projected-gradient ascent on the throughput objective with
/// Barzilai-Borwein step sizes and Armijo backtracking. Converges when the
/// iterate displacement drops below `tol`.
pub fn stm_projected_gradient(
    inst: &Instance,
    max_iters: usize,
    tol: f64,
) -> Result<TimeAllocation> {
    let (tau, _) = projected_gradient_run(inst, max_iters, tol, None)?;
    Ok(tau)
}

/// Like [`stm_projected_gradient`] but records the objective after every
/// iteration (ascent diagnostics for tests).
pub fn stm_projected_gradient_trace(
    inst: &Instance,
    max_iters: usize,
    tol: f64,
) -> Result<(TimeAllocation, Vec<f64>)> {
    let mut trace = Vec::new();
    let (tau, _) = projected_gradient_run(inst, max_iters, tol, Some(&mut trace))?;
    Ok((tau, trace))
}

fn projected_gradient_run(
    inst: &Instance,
    max_iters: usize,
    tol: f64,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<(TimeAllocation, f64)> {
    const FLOOR: f64 = 1e-12;
    const ARMIJO: f64 = 1e-4;

    let gammas = inst.effective_snr();
    let n = gammas.len() + 1;
    let mut x = vec![1.0 / n as f64; n];
    let mut f = throughput_of(&gammas, &x);
    let mut g = throughput_gradient(inst, &x);
    let norm: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut alpha = 1.0 / (1.0 + norm);

    for _ in 0..max_iters {
        let mut step = alpha;
        let mut candidate = x.clone();
        let mut f_candidate = f;
        let mut moved = false;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(&xi, &gi)| xi + step * gi).collect();
            let trial = project_simplex_floored(&trial, FLOOR);
            let f_trial = throughput_of(&gammas, &trial);
            let along: f64 = g
                .iter()
                .zip(trial.iter().zip(&x))
                .map(|(&gi, (&ti, &xi))| gi * (ti - xi))
                .sum();
            if f_trial >= f + ARMIJO * along {
                candidate = trial;
                f_candidate = f_trial;
                moved = true;
                break;
            }
            step *= 0.5;
        }

        let displacement: f64 = candidate
            .iter()
            .zip(&x)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();

        let g_next = throughput_gradient(inst, &candidate);
        // Barzilai-Borwein step for the next iterate; the curvature product
        // is negative for a concave objective.
        let mut dx_dg = 0.0;
        let mut dx_dx = 0.0;
        for i in 0..n {
            let dx = candidate[i] - x[i];
            dx_dg += dx * (g_next[i] - g[i]);
            dx_dx += dx * dx;
        }
        if dx_dg < 0.0 {
            alpha = (-dx_dx / dx_dg).clamp(1e-10, 1e8);
        }

        x = candidate;
        f = f_candidate;
        g = g_next;
        if let Some(t) = trace.as_deref_mut() {
            t.push(f);
        }

        if !moved || displacement <= tol {
            return Ok((TimeAllocation::new(x)?, f));
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iters,
    })
}

// ---------------------------------------------------------------------------
// TTM oracle
// ---------------------------------------------------------------------------

/// Minimum charging time needed for the demands given the transmit slots, or
/// `None` when it exceeds `bound` (including the overflow regime where a
/// tiny slot would need an astronomically long charge).
fn min_charging_slot(gammas: &[f64], demands: &[f64], transmit: &[f64], bound: f64) -> Option<f64> {
    let mut tau0 = 0.0_f64;
    let mut prior = 0.0;
    for i in 0..gammas.len() {
        let t = transmit[i];
        if t <= 0.0 {
            return None;
        }
        let exponent = demands[i] / t;
        if exponent > EXP_OVERFLOW_LIMIT {
            return None;
        }
        let v = t / gammas[i] * exponent.exp_m1();
        tau0 = tau0.max(v - prior);
        if tau0 > bound {
            return None;
        }
        prior += t;
    }
    Some(tau0.max(0.0))
}

/// Grid search for the time-minimization problem: transmit slots range over
/// a `[0, B]` lattice per axis with `B` twice the tangent-point heuristic
/// total, the charging slot takes its exact smallest feasible value (its
/// constraint set is monotone in τ₀, so nothing below that value and no
/// larger value can win), and one refinement pass at `step/100` runs around
/// the best point.
///
/// With the charging slot resolved, the column total is convex in each
/// remaining slot, so the per-column lattice minimum is located by binary
/// search; the result equals a full scan of the lattice.
pub fn ttm_grid_oracle(inst: &Instance, step: f64) -> Result<(TimeAllocation, f64)> {
    let gammas = inst.effective_snr();
    let demands = inst.demands();
    let k = gammas.len();
    if k > TTM_ORACLE_MAX_USERS {
        return Err(Error::OracleSize {
            limit: TTM_ORACLE_MAX_USERS,
            got: k,
        });
    }
    if !positive_finite(step) {
        return Err(Error::config(format!(
            "ttm_grid_oracle step must be positive, got {step}"
        )));
    }
    for (i, &d) in demands.iter().enumerate() {
        if !positive_finite(d) {
            return Err(Error::invalid_instance(format!(
                "ttm_grid_oracle requires positive demands; user {} has D = {d}",
                i + 1
            )));
        }
    }

    // The tangent heuristic is always feasible, so the optimum fits in a box
    // of twice its total.
    let bound = 2.0 * ttm_tangent(inst)?.objective;
    let coarse = ttm_grid_pass(&gammas, &demands, &vec![0.0; k], bound, step, bound);
    let (tau, total) = coarse.ok_or_else(|| Error::Numerical {
        reason: "ttm_grid_oracle: no feasible grid point inside the search box".into(),
    })?;

    // Refinement around the coarse best.
    let fine_step = step / 100.0;
    let origins: Vec<f64> = (1..=k).map(|i| (tau[i] - step).max(0.0)).collect();
    let refined = ttm_grid_pass(&gammas, &demands, &origins, 2.0 * step, fine_step, bound);
    let (tau, total) = match refined {
        Some((fine_tau, fine_total)) if fine_total < total => (fine_tau, fine_total),
        _ => (tau, total),
    };
    Ok((TimeAllocation::new(tau)?, total))
}

/// One lattice pass over the transmit slots starting at `origins`, spanning
/// `span` per axis at the given step. Returns the best feasible point, if
/// any, identical to an ascending full scan with strict improvement.
fn ttm_grid_pass(
    gammas: &[f64],
    demands: &[f64],
    origins: &[f64],
    span: f64,
    step: f64,
    bound: f64,
) -> Option<(Vec<f64>, f64)> {
    let cells = (span / step).ceil() as usize;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut best_total = f64::INFINITY;

    let evaluate_point = |transmit: &[f64]| -> Option<(f64, f64)> {
        min_charging_slot(gammas, demands, transmit, bound)
            .map(|tau0| (tau0, tau0 + transmit.iter().sum::<f64>()))
    };
    fn record(
        best: &mut Option<(Vec<f64>, f64)>,
        best_total: &mut f64,
        tau0: f64,
        total: f64,
        transmit: &[f64],
    ) {
        if total < *best_total {
            *best_total = total;
            let mut tau = Vec::with_capacity(transmit.len() + 1);
            tau.push(tau0);
            tau.extend_from_slice(transmit);
            *best = Some((tau, total));
        }
    }

    match gammas.len() {
        1 => {
            for j in 0..=cells {
                let t1 = origins[0] + j as f64 * step;
                if t1 <= 0.0 {
                    continue;
                }
                if t1 >= best_total {
                    break;
                }
                if let Some((tau0, total)) = evaluate_point(&[t1]) {
                    record(&mut best, &mut best_total, tau0, total, &[t1]);
                }
            }
        }
        2 => {
            for j1 in 0..=cells {
                let t1 = origins[0] + j1 as f64 * step;
                if t1 <= 0.0 {
                    continue;
                }
                if t1 >= best_total {
                    break;
                }
                let column_total = |j2: usize| -> Option<f64> {
                    let t2 = origins[1] + j2 as f64 * step;
                    if t2 <= 0.0 {
                        return None;
                    }
                    evaluate_point(&[t1, t2]).map(|(_, total)| total)
                };
                // Feasibility is monotone in τ₂ (bigger slots only relax the
                // charging requirement): find the first feasible index.
                if column_total(cells).is_none() {
                    continue;
                }
                let mut lo = 0usize;
                let mut hi = cells;
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    if column_total(mid).is_some() {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                // The column total is convex in τ₂; binary-search the
                // leftmost lattice minimum on the feasible suffix.
                let mut a = lo;
                let mut b = cells;
                while a < b {
                    let mid = a + (b - a) / 2;
                    let here = column_total(mid).expect("feasible suffix");
                    let next = column_total(mid + 1).expect("feasible suffix");
                    if here <= next {
                        b = mid;
                    } else {
                        a = mid + 1;
                    }
                }
                let t2 = origins[1] + a as f64 * step;
                if t2 > 0.0 {
                    if let Some((tau0, total)) = evaluate_point(&[t1, t2]) {
                        record(&mut best, &mut best_total, tau0, total, &[t1, t2]);
                    }
                }
            }
        }
        _ => unreachable!("oracle size validated above"),
    }
    best
}
