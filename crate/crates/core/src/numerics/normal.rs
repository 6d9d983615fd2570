//! Standard normal distribution: density, cdf, tails and quantiles.
//!
//! The cdf is built on `erfc` up to `|x| = 8`; beyond that the upper tail is
//! evaluated in log space through the Laplace continued fraction for the
//! Mills ratio, so tail probabilities far past the `f64` underflow point still
//! have a finite logarithm.

use crate::error::{Error, Result};
use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

/// ln(sqrt(2 pi))
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

const TAIL_SWITCH: f64 = 8.0;
const MILLS_TERMS: usize = 80;

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Mills ratio (1 - Phi(t)) / phi(t) for t >= TAIL_SWITCH.
fn mills_ratio(t: f64) -> f64 {
    let mut r = t;
    for k in (1..=MILLS_TERMS).rev() {
        r = t + k as f64 / r;
    }
    1.0 / r
}

/// Upper tail `1 - Phi(x)` without cancellation.
pub fn phi_upper(x: f64) -> f64 {
    if x > TAIL_SWITCH {
        log_phi_upper(x).exp()
    } else {
        0.5 * erfc(x * FRAC_1_SQRT_2)
    }
}

/// `Phi(x)`. Unchecked: NaN propagates.
pub fn phi(x: f64) -> f64 {
    if x < 0.0 {
        phi_upper(-x)
    } else {
        1.0 - phi_upper(x)
    }
}

/// `ln(1 - Phi(x))`, finite for every finite `x`.
pub fn log_phi_upper(x: f64) -> f64 {
    if x > TAIL_SWITCH {
        -0.5 * x * x - LN_SQRT_2PI + mills_ratio(x).ln()
    } else if x > 0.0 {
        (0.5 * erfc(x * FRAC_1_SQRT_2)).ln()
    } else {
        (-phi_upper(-x)).ln_1p()
    }
}

/// `ln Phi(x)`.
pub fn log_phi(x: f64) -> f64 {
    log_phi_upper(-x)
}

/// `P(lo < Z < hi)` for standard normal `Z`, evaluated on whichever tail
/// avoids cancellation. Returns 0 when `hi <= lo`.
pub fn normal_interval(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        0.0
    } else if lo >= 0.0 {
        phi_upper(lo) - phi_upper(hi)
    } else if hi <= 0.0 {
        phi_upper(-hi) - phi_upper(-lo)
    } else {
        1.0 - phi_upper(hi) - phi_upper(-lo)
    }
}

/// Checked standard normal cdf.
pub fn normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("normal_cdf: non-finite argument {x}")));
    }
    Ok(phi(x))
}

/// Lower-tail quantile for `q` in (0, 0.5], polished by Newton steps on
/// `ln Phi` so tiny probabilities keep full relative accuracy.
fn lower_quantile(q: f64) -> f64 {
    let mut x = -SQRT_2 * erfc_inv(2.0 * q);
    if !x.is_finite() {
        // erfc_inv saturates for q below the subnormal range of 2q
        x = -(-2.0 * q.ln()).sqrt();
    }
    let target = q.ln();
    for _ in 0..4 {
        let lp = log_phi(x);
        let step = (lp - target) * (lp - (-0.5 * x * x - LN_SQRT_2PI)).exp();
        if !step.is_finite() {
            break;
        }
        x -= step;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Checked standard normal quantile `Phi^{-1}(q)`.
pub fn normal_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!("normal_quantile: q = {q} outside (0, 1)")));
    }
    Ok(if q <= 0.5 { lower_quantile(q) } else { -lower_quantile(1.0 - q) })
}

/// `q_N(eta)`: the `(1 - eta)`-quantile, i.e. the point with upper-tail mass `eta`.
pub fn upper_quantile(eta: f64) -> Result<f64> {
    normal_quantile(eta).map(|x| -x)
}
