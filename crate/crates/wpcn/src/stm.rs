//! Closed-form solver for sum-throughput maximization over one block: a
//! forward pass computes the slot ratios `x_i` through the Lambert W
//! function, a backward pass turns them into the allocation. Runs in O(K).
//!
//! The stationarity system reduces to `F_i(x_i) = c_i` with
//! `F(x) = ln(1+γx) - γx/(1+γx) - γ/(1+γx)` and constants `c_i` accumulated
//! from the previous users, solved exactly by
//! `x = (1/γ)·(e^{W((γ-1)/e^{c+1}) + c + 1} - 1)`.

use crate::error::{Error, Result};
use crate::model::{nonnegative_finite, positive_finite, Instance, TimeAllocation};
use crate::specialfn::lambert_w0;

/// Intermediate quantities of the two-pass solve, retained so the solution
/// can be extended by one user without rerunning the forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct StmIntermediates {
    /// Slot ratios `x_i = Σ_{j<i} τ_j / τ_i`, strictly positive.
    pub x: Vec<f64>,
    /// Accumulated constants `c_1 = 0, c_{i+1} = Σ_{k<=i} γ_k/(γ_k x_k + 1)`;
    /// holds K+1 entries so one forward step can append a user.
    pub c: Vec<f64>,
    /// Effective SNRs the passes were run with.
    pub gamma: Vec<f64>,
}

/// Optimal allocation, its throughput in nats, and forward-pass state.
#[derive(Debug, Clone, PartialEq)]
pub struct StmSolution {
    pub allocation: TimeAllocation,
    pub total_throughput: f64,
    pub intermediates: StmIntermediates,
}

/// Defensive stationarity residual allowed after each closed-form ratio.
const RATIO_RESIDUAL_TOL: f64 = 1e-10;

/// Left side of the per-user stationarity equation `F(x) = c`.
fn stationarity_lhs(gamma: f64, x: f64) -> f64 {
    let gx = gamma * x;
    gx.ln_1p() - gx / (1.0 + gx) - gamma / (1.0 + gx)
}

/// Solves `F(x) = c` in closed form via the Lambert W function.
///
/// Requires `gamma > 0` and `c >= 0`; the W argument `(γ-1)/e^{c+1}` then
/// always lies on the principal branch. The result is checked against the
/// defining equation to a residual of `1e-10`.
pub fn solve_x(gamma: f64, c: f64) -> Result<f64> {
    if !positive_finite(gamma) {
        return Err(Error::invalid_instance(format!(
            "solve_x requires positive gamma, got {gamma}"
        )));
    }
    if !nonnegative_finite(c) {
        return Err(Error::invalid_instance(format!(
            "solve_x requires nonnegative c, got {c}"
        )));
    }
    let w = lambert_w0((gamma - 1.0) / (c + 1.0).exp())?;
    let x = ((w + c + 1.0).exp() - 1.0) / gamma;

    let residual = (stationarity_lhs(gamma, x) - c).abs();
    let residual_ok = residual.is_finite() && residual <= RATIO_RESIDUAL_TOL;
    if !residual_ok {
        return Err(Error::Numerical {
            reason: format!(
                "stationarity residual {residual:e} for gamma={gamma}, c={c} exceeds {RATIO_RESIDUAL_TOL:e}"
            ),
        });
    }
    Ok(x)
}

/// Forward step: extends `(x, c)` by one user.
fn forward_step(x: &mut Vec<f64>, c: &mut Vec<f64>, gamma: f64) -> Result<()> {
    let ci = *c.last().expect("c holds at least c_1 = 0");
    let xi = solve_x(gamma, ci)?;
    c.push(ci + gamma / (gamma * xi + 1.0));
    x.push(xi);
    Ok(())
}

/// Backward pass: turns ratios into slot durations on the unit block.
/// Walks the running remainder `1 - Σ_{j>i} τ_j` down to the charging slot.
fn allocation_from_ratios(x: &[f64]) -> Vec<f64> {
    let k = x.len();
    let mut tau = vec![0.0; k + 1];
    let mut remainder = 1.0;
    for i in (1..=k).rev() {
        tau[i] = remainder / (1.0 + x[i - 1]);
        remainder -= tau[i];
    }
    tau[0] = remainder;
    tau
}

fn solution_from_intermediates(inter: StmIntermediates) -> Result<StmSolution> {
    let tau = allocation_from_ratios(&inter.x);
    let total_throughput = inter
        .gamma
        .iter()
        .zip(&inter.x)
        .zip(&tau[1..])
        .map(|((&g, &x), &t)| t * (g * x).ln_1p())
        .sum();
    Ok(StmSolution {
        allocation: TimeAllocation::new(tau)?,
        total_throughput,
        intermediates: inter,
    })
}

/// Optimal time allocation for sum-throughput maximization on the unit
/// block. The returned slots are strictly positive and sum to 1.
pub fn solve_stm(inst: &Instance) -> Result<StmSolution> {
    let gammas = inst.effective_snr();
    for &g in &gammas {
        if !positive_finite(g) {
            return Err(Error::invalid_instance(format!(
                "sum-throughput solver requires positive effective SNR, got {g}"
            )));
        }
    }
    let mut x = Vec::with_capacity(gammas.len());
    let mut c = Vec::with_capacity(gammas.len() + 1);
    c.push(0.0);
    for &gamma in &gammas {
        forward_step(&mut x, &mut c, gamma)?;
    }
    solution_from_intermediates(StmIntermediates {
        x,
        c,
        gamma: gammas,
    })
}

/// Optimal allocation for a block of length `block_time`; slots and
/// throughput both scale linearly with the block.
pub fn solve_stm_scaled(inst: &Instance, block_time: f64) -> Result<StmSolution> {
    if !positive_finite(block_time) {
        return Err(Error::config(format!(
            "block time must be positive and finite, got {block_time}"
        )));
    }
    let unit = solve_stm(inst)?;
    Ok(StmSolution {
        allocation: unit.allocation.scaled(block_time)?,
        total_throughput: unit.total_throughput * block_time,
        intermediates: unit.intermediates,
    })
}

/// Appends one user to a solved instance, reusing the stored forward-pass
/// state: a single forward step plus a rerun of the backward pass. The
/// result matches a full solve on the extended instance.
pub fn extend_with_user(sol: &StmSolution, new_gamma: f64) -> Result<StmSolution> {
    if !positive_finite(new_gamma) {
        return Err(Error::invalid_instance(format!(
            "extension requires positive effective SNR, got {new_gamma}"
        )));
    }
    let mut inter = sol.intermediates.clone();
    forward_step(&mut inter.x, &mut inter.c, new_gamma)?;
    inter.gamma.push(new_gamma);
    solution_from_intermediates(inter)
}
