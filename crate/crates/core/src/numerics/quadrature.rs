//! Globally adaptive Gauss-Kronrod (7/15) quadrature on finite windows.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Absolute tolerance on the integral value.
    pub abs_tol: f64,
    pub max_panels: usize,
    /// Half-width of the integration window in units of `scale`.
    pub truncation_radius: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { abs_tol: 1e-12, max_panels: 4000, truncation_radius: 12.0 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || self.max_panels < 1 || !(self.truncation_radius > 0.0) {
            return Err(Error::invalid(format!("invalid quadrature spec {self:?}")));
        }
        Ok(())
    }
}

// Kronrod abscissae (descending); odd indices are the Gauss-7 nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    // max-heap on error; ties broken by position so the order is total and deterministic
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.lo.total_cmp(&self.lo))
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Panel {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Panel { lo, hi, value, error }
}

/// Integrates `f` over `[lo, hi]`, seeding the panel set at `breakpoints`
/// (points outside the open interval are ignored).
pub fn integrate_interval<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::invalid(format!("integration limits must be finite: [{lo}, {hi}]")));
    }
    if hi <= lo {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|x| x.is_finite() && *x > lo && *x < hi).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    let mut left = lo;
    for &c in cuts.iter().chain(std::iter::once(&hi)) {
        heap.push(gauss_kronrod(&f, left, c));
        left = c;
    }

    loop {
        let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        if !value.is_finite() {
            return Err(Error::domain(format!("integrand not finite on [{lo}, {hi}]")));
        }
        if error <= spec.abs_tol {
            return Ok(value);
        }
        if heap.len() >= spec.max_panels {
            return Err(Error::QuadratureExhausted { estimate: value, error_bound: error });
        }
        let worst = heap.pop().expect("panel set is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // panel can no longer be split in floating point
            return Err(Error::QuadratureExhausted { estimate: value, error_bound: error });
        }
        heap.push(gauss_kronrod(&f, worst.lo, mid));
        heap.push(gauss_kronrod(&f, mid, worst.hi));
    }
}

/// Integrates `f` over `[center - r*scale, center + r*scale]` with `r` the
/// spec's truncation radius.
pub fn integrate<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec, center: f64, scale: f64) -> Result<f64> {
    if !(scale > 0.0) || !center.is_finite() {
        return Err(Error::invalid(format!("integrate: bad window center={center}, scale={scale}")));
    }
    let half = spec.truncation_radius * scale;
    integrate_interval(f, center - half, center + half, &[center], spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::normal::normal_pdf;

    #[test]
    fn normal_density_normalizes() {
        let spec = QuadratureSpec { truncation_radius: 10.0, ..Default::default() };
        let v = integrate(normal_pdf, &spec, 0.0, 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn odd_function_vanishes() {
        let spec = QuadratureSpec::default();
        let v = integrate(|x: f64| x.powi(3) * (-x * x).exp() + x.sin(), &spec, 0.0, 1.0).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn second_moment_against_riemann_sum() {
        // midpoint Riemann sum on [-12, 12] with 2e6 cells
        let cells = 2_000_000;
        let h = 24.0 / cells as f64;
        let riemann: f64 = (0..cells)
            .map(|i| {
                let x = -12.0 + (i as f64 + 0.5) * h;
                x * x * normal_pdf(x) * h
            })
            .sum();
        let spec = QuadratureSpec::default();
        let v = integrate(|x| x * x * normal_pdf(x), &spec, 0.0, 1.0).unwrap();
        assert!((riemann - 1.0).abs() < 1e-9);
        assert!((v - riemann).abs() < 1e-9);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kronrod_rule_is_exact_for_degree_22() {
        let p = gauss_kronrod(&|x: f64| x.powi(22), -1.0, 1.0);
        assert!((p.value - 2.0 / 23.0).abs() < 1e-15);
    }

    #[test]
    fn exhausted_panels_report_estimate() {
        let spec = QuadratureSpec { abs_tol: 1e-300, max_panels: 3, truncation_radius: 1.0 };
        match integrate(|x: f64| x.abs().sqrt(), &spec, 0.0, 1.0) {
            Err(Error::QuadratureExhausted { estimate, error_bound }) => {
                assert!((estimate - 4.0 / 3.0).abs() < 1e-2);
                assert!(error_bound > 0.0);
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn deterministic() {
        let spec = QuadratureSpec::default();
        let f = |x: f64| (x * 3.0).cos() * normal_pdf(x - 0.3);
        let a = integrate(f, &spec, 0.3, 1.0).unwrap();
        let b = integrate(f, &spec, 0.3, 1.0).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn breakpoints_resolve_a_step() {
        let spec = QuadratureSpec::default();
        let v = integrate_interval(|x| if x < 0.37 { 1.0 } else { 0.0 }, 0.0, 1.0, &[0.37], &spec).unwrap();
        assert!((v - 0.37).abs() < 1e-14);
    }
}
