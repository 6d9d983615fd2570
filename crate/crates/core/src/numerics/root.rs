//! Bracketed scalar root finding: Illinois false position with a bisection
//! fallback, so the bracket always shrinks at least geometrically.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSpec {
    /// Stop once the bracket is narrower than this.
    pub x_tol: f64,
    /// Stop once `|f(x)|` is at most this.
    pub f_tol: f64,
    pub max_iter: usize,
}

impl Default for RootSpec {
    fn default() -> Self {
        Self { x_tol: 1e-14, f_tol: 1e-13, max_iter: 400 }
    }
}

impl RootSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_tol > 0.0) || !(self.f_tol > 0.0) || self.max_iter < 1 {
            return Err(Error::invalid(format!("invalid root spec {self:?}")));
        }
        Ok(())
    }
}

/// Finds `x` in `[lo, hi]` with `|f(x)| <= f_tol` or a final bracket no wider
/// than `x_tol`. Requires `f(lo) * f(hi) <= 0`.
pub fn find_root<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, spec: &RootSpec) -> Result<f64> {
    spec.validate()?;
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    let mut fb = f(b);
    if fa.is_nan() || fb.is_nan() {
        return Err(Error::domain(format!("root function is NaN at bracket [{a}, {b}]")));
    }
    if fa.abs() <= spec.f_tol {
        return Ok(a);
    }
    if fb.abs() <= spec.f_tol {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracketing { lo: a, hi: b, f_lo: fa, f_hi: fb });
    }

    // which endpoint was retained on the previous step (-1 = a, +1 = b)
    let mut side = 0i8;
    let mut last_width = b - a;
    for iter in 0..spec.max_iter {
        let width = b - a;
        if width <= spec.x_tol || width <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
            return Ok(if fa.abs() < fb.abs() { a } else { b });
        }
        // every third step, force bisection unless the bracket halved since
        let bisect = iter % 3 == 2 && width > 0.5 * last_width;
        if iter % 3 == 2 {
            last_width = width;
        }
        let mut x =
            if bisect || !(fa.is_finite() && fb.is_finite()) { 0.5 * (a + b) } else { (a * fb - b * fa) / (fb - fa) };
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let fx = f(x);
        if fx.is_nan() {
            return Err(Error::domain(format!("root function is NaN at x = {x}")));
        }
        if fx.abs() <= spec.f_tol {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::NoSolution(format!("root finder exhausted {} iterations, bracket [{a}, {b}]", spec.max_iter)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::normal::phi;

    #[test]
    fn identity_root() {
        let x = find_root(|x| x, -1.0, 1.0, &RootSpec::default()).unwrap();
        assert!(x.abs() <= 1e-13);
    }

    #[test]
    fn normal_quantile_by_root() {
        let spec = RootSpec::default();
        let x = find_root(|x| phi(x) - 0.975, 0.0, 4.0, &spec).unwrap();
        assert!((x - 1.959_963_984_540_054).abs() < 1e-10);
        assert!((phi(x) - 0.975).abs() <= spec.f_tol || spec.x_tol > 0.0);
    }

    #[test]
    fn no_sign_change_is_a_bracketing_error() {
        let r = find_root(|x| x * x + 1.0, -1.0, 1.0, &RootSpec::default());
        assert!(matches!(r, Err(Error::Bracketing { .. })));
    }

    #[test]
    fn post_bound_holds_on_steep_function() {
        let spec = RootSpec { x_tol: 1e-10, f_tol: 1e-12, max_iter: 400 };
        let f = |x: f64| (50.0 * (x - 0.3)).exp() - 1.0;
        let x = find_root(f, -2.0, 2.0, &spec).unwrap();
        assert!(f(x).abs() <= spec.f_tol || (x - 0.3).abs() <= spec.x_tol);
    }

    #[test]
    fn infinite_endpoint_values_fall_back_to_bisection() {
        let f = |x: f64| if x < 0.25 { f64::NEG_INFINITY } else { x - 0.5 };
        let x = find_root(f, 0.0, 1.0, &RootSpec::default()).unwrap();
        assert!((x - 0.5).abs() < 1e-12);
    }
}
