//! Numerically robust scalar special functions backing the closed-form
//! solutions: the principal branch of the Lambert W function and an
//! overflow-safe exponential helper.
//!
//! Every closed-form expression in the solvers funnels through `W((γ-1)/e^c)`
//! style arguments, which always lie in `[-1/e, ∞)`, so only the principal
//! branch is provided.

use crate::error::{Error, Result};

/// Largest exponent passed to `exp` before we signal overflow instead of
/// returning infinity. Callers are expected to switch to log-domain forms.
pub const EXP_OVERFLOW_LIMIT: f64 = 700.0;

/// Branch point of the principal Lambert W branch, `-1/e`.
pub const BRANCH_POINT: f64 = -1.0 / std::f64::consts::E;

/// Arguments this far below the branch point are clamped to it; anything
/// lower is a domain error. Absorbs rounding in expressions like
/// `(γ-1)/e^(c+1)` whose exact value sits on the branch point.
const BRANCH_CLAMP: f64 = 1e-15;

/// Halley stops once the update is below `1e-15 * (1 + |w|)`.
const STEP_TOL: f64 = 1e-15;

const MAX_ITER: usize = 50;

/// Principal branch `W₀(x)` of the Lambert W function, the inverse of
/// `w ↦ w·e^w` on `[-1, ∞)`.
///
/// Uses a piecewise initial guess (series near the branch point, log-based
/// for large arguments) refined by Halley iteration. The result satisfies
/// `|W·e^W - x| ≤ 1e-12·max(1, |x|)` over `[-1/e, 1e6]`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if !x.is_finite() || x < BRANCH_POINT - BRANCH_CLAMP {
        return Err(Error::LambertDomain { value: x });
    }
    let x = x.max(BRANCH_POINT);

    if x == BRANCH_POINT {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }

    let mut w = initial_guess(x);
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        // Halley update: f / (f' - f·f'' / (2 f')) with
        // f' = e^w (1 + w), f'' = e^w (2 + w).
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        w -= step;
        if step.abs() <= STEP_TOL * (1.0 + w.abs()) {
            break;
        }
    }
    // w >= -1 on the principal branch; rounding may leave it a hair below.
    Ok(w.max(-1.0))
}

/// Piecewise starting point for the Halley iteration.
fn initial_guess(x: f64) -> f64 {
    if x < -0.25 {
        // Series in p = sqrt(2(e·x + 1)) around the branch point.
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 * p * p * p / 72.0
    } else if x < std::f64::consts::E {
        // W(x) ≈ ln(1+x) is accurate enough near the origin.
        x.ln_1p()
    } else {
        // Asymptotic guess for large arguments.
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}

/// `e^x - 1` with full relative precision for small `|x|`.
///
/// Signals [`Error::Overflow`] for `x > 700` instead of returning infinity;
/// callers in that regime must use a log-domain formulation.
pub fn expm1_safe(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Numerical {
            reason: format!("expm1_safe: non-finite argument {x}"),
        });
    }
    if x > EXP_OVERFLOW_LIMIT {
        return Err(Error::Overflow {
            value: x,
            limit: EXP_OVERFLOW_LIMIT,
        });
    }
    Ok(x.exp_m1())
}
