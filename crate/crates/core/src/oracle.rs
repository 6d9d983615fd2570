//! Bayes-oracle cutoffs for the two-groups model.
//!
//! The oracle accepts `H0` iff the sample mean lands in `(a, b)`, where `a < 0 < b`
//! solve
//!
//! ```text
//! (1 - p) delta0 = p deltaA * int exp(n (t mu - mu^2 / 2) / sigma^2) d nu(mu),   t in {a, b}
//! ```
//!
//! The right-hand side is log-convex in `t`, so each half-line holds exactly one
//! root whenever the integral at `t = 0` sits below `f delta`.

use crate::error::{Error, Result};
use crate::model::{AsymptoticParams, TwoGroupsModel};
use crate::numerics::{find_root, phi_upper, QuadratureSpec, RootSpec, LN_SQRT_2PI};
use serde::Serialize;

/// Acceptance region `(a, b)` on the sample-mean scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdPair {
    pub a: f64,
    pub b: f64,
}

impl ThresholdPair {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a < 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid(format!("thresholds need a < 0 < b, got ({a}, {b})")));
        }
        Ok(Self { a, b })
    }

    /// Symmetric pair from a cutoff `c` on the `|Z|` scale.
    pub fn from_scaled(c: f64, model: &TwoGroupsModel) -> Result<Self> {
        let s = model.mean_sd();
        Self::new(-c * s, c * s)
    }

    /// `(sqrt(n) |a| / sigma, sqrt(n) |b| / sigma)`.
    pub fn c_scaled(&self, model: &TwoGroupsModel) -> (f64, f64) {
        let s = model.mean_sd();
        (self.a.abs() / s, self.b.abs() / s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRates {
    pub t1: f64,
    pub t2: f64,
}

/// `R = m (1 - p) t1 delta0 + m p t2 deltaA`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskBreakdown {
    pub r1: f64,
    pub r2: f64,
    pub total: f64,
}

/// Result of comparing a threshold pair with the optimal rate `log v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbosDiagnostics {
    /// `n a^2 / sigma^2 - log v`
    pub z_a: f64,
    pub z_b: f64,
    /// `max(|z_a|, |z_b|) / log v` is below the caller's tolerance.
    pub satisfies_optcv1: bool,
    /// `min(z_a, z_b) + 2 log log v`; should diverge to `+inf` along a sequence.
    pub satisfies_optcv2_trend: f64,
}

/// `ln(p deltaA I(t)) - ln((1 - p) delta0)`.
pub fn jt1_residual(model: &TwoGroupsModel, t: f64, spec: &QuadratureSpec) -> Result<f64> {
    let log_i = model.prior().log_tilted_mass(t, model.n(), model.sigma(), spec)?;
    Ok(log_i - (model.f() * model.delta()).ln())
}

fn solve_side(model: &TwoGroupsModel, sign: f64, spec: &QuadratureSpec) -> Result<f64> {
    let sigma = model.sigma();
    let n = model.n();
    let at_zero = jt1_residual(model, 0.0, spec)?;
    if at_zero >= 0.0 {
        return Err(Error::domain(format!(
            "oracle rejects everything: tilted mass at 0 exceeds f delta (log residual {at_zero:.3e})"
        )));
    }
    let guess = (2.0 * (model.f() * model.delta()).ln() + n.ln() + 10.0).max(1.0);
    let mut far = sigma * (guess / n).sqrt();
    let limit = 10.0 * sigma;
    let mut value = jt1_residual(model, sign * far.min(limit), spec)?;
    while value <= 0.0 {
        if far >= limit {
            return Err(Error::domain(format!(
                "no oracle threshold with |t| <= 10 sigma on the {} side",
                if sign < 0.0 { "negative" } else { "positive" }
            )));
        }
        far = (2.0 * far).min(limit);
        value = jt1_residual(model, sign * far, spec)?;
    }
    let far = far.min(limit);
    let root_spec = RootSpec { x_tol: 1e-15 * far, f_tol: 1e-12, max_iter: 400 };
    let mut failure = None;
    let root = find_root(
        |t| match jt1_residual(model, t, spec) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        sign * far,
        0.0,
        &root_spec,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    root
}

/// Exact oracle cutoffs with the default quadrature settings.
pub fn oracle_thresholds_exact(model: &TwoGroupsModel) -> Result<ThresholdPair> {
    oracle_thresholds_exact_with(model, &QuadratureSpec::default())
}

pub fn oracle_thresholds_exact_with(model: &TwoGroupsModel, spec: &QuadratureSpec) -> Result<ThresholdPair> {
    let a = solve_side(model, -1.0, spec)?;
    let b = solve_side(model, 1.0, spec)?;
    ThresholdPair::new(a, b)
}

fn require_sparse(model: &TwoGroupsModel) -> Result<f64> {
    let v = model.v();
    if !(v > 1.0) {
        return Err(Error::domain(format!("asymptotic formulas need v = n delta^2 f^2 > 1, got {v}")));
    }
    Ok(v)
}

/// Leading-order cutoffs: `(-T, T)` when `C > 0`, otherwise the inversion of
/// `sqrt(n) exp(-n a^2 / 2 sigma^2) f delta = sqrt(2 pi) sigma rho(0-)`.
pub fn oracle_thresholds_asymptotic(model: &TwoGroupsModel, params: &AsymptoticParams) -> Result<ThresholdPair> {
    if params.c > 0.0 {
        return ThresholdPair::new(-params.t, params.t);
    }
    require_sparse(model)?;
    let (rho_minus, rho_plus) = model.prior().density_at_zero()?;
    let n = model.n();
    let sigma = model.sigma();
    let side = |rho: f64| -> Result<f64> {
        let inner = (model.f() * model.delta() * n.sqrt() / (sigma * rho)).ln() - LN_SQRT_2PI;
        if !(rho > 0.0) || !(inner > 0.0) {
            return Err(Error::domain(format!(
                "asymptotic cutoff undefined: log argument {inner} with rho(0) = {rho}"
            )));
        }
        Ok(sigma / n.sqrt() * (2.0 * inner).sqrt())
    };
    ThresholdPair::new(-side(rho_minus)?, side(rho_plus)?)
}

pub fn error_rates(model: &TwoGroupsModel, thr: &ThresholdPair) -> Result<ErrorRates> {
    error_rates_with(model, thr, &QuadratureSpec::default())
}

pub fn error_rates_with(model: &TwoGroupsModel, thr: &ThresholdPair, spec: &QuadratureSpec) -> Result<ErrorRates> {
    let s = model.mean_sd();
    let t1 = phi_upper(-thr.a / s) + phi_upper(thr.b / s);
    let t2 = model.prior().acceptance_mass(thr.a, thr.b, s, spec)?;
    Ok(ErrorRates { t1: t1.min(1.0), t2 })
}

pub fn bayes_risk(model: &TwoGroupsModel, m: u64, rates: &ErrorRates) -> Result<RiskBreakdown> {
    if m < 1 {
        return Err(Error::invalid("bayes_risk needs m >= 1"));
    }
    let m = m as f64;
    let r1 = m * (1.0 - model.p()) * rates.t1 * model.delta0();
    let r2 = m * model.p() * rates.t2 * model.delta_a();
    Ok(RiskBreakdown { r1, r2, total: r1 + r2 })
}

/// Leading term of the oracle risk.
pub fn oracle_risk_asymptotic(model: &TwoGroupsModel, params: &AsymptoticParams, m: u64) -> Result<f64> {
    if m < 1 {
        return Err(Error::invalid("oracle_risk_asymptotic needs m >= 1"));
    }
    let scale = m as f64 * model.p() * model.delta_a();
    if params.c > 0.0 {
        return Ok(scale * model.prior().open_interval_mass(-params.t, params.t));
    }
    let v = require_sparse(model)?;
    let (rho_minus, rho_plus) = model.prior().density_at_zero()?;
    Ok(scale * model.sigma() * (v.ln() / model.n()).sqrt() * (rho_minus + rho_plus))
}

/// Compares `n t^2 / sigma^2` for both cutoffs with `log v`.
pub fn abos_diagnostics(model: &TwoGroupsModel, thr: &ThresholdPair, tolerance: f64) -> Result<AbosDiagnostics> {
    let log_v = require_sparse(model)?.ln();
    let scale = model.n() / model.sigma().powi(2);
    let z_a = scale * thr.a * thr.a - log_v;
    let z_b = scale * thr.b * thr.b - log_v;
    let log_log_v = log_v.ln();
    Ok(AbosDiagnostics {
        z_a,
        z_b,
        satisfies_optcv1: z_a.abs().max(z_b.abs()) / log_v < tolerance,
        satisfies_optcv2_trend: z_a.min(z_b) + 2.0 * log_log_v,
    })
}

/// `sqrt(n) exp(-n a^2 / 2 sigma^2) f delta / (sqrt(2 pi) sigma rho(0-))`, which
/// tends to one for the exact lower cutoff along a sparse sequence.
pub fn lower_cutoff_ratio(model: &TwoGroupsModel, a: f64) -> Result<f64> {
    let (rho_minus, _) = model.prior().density_at_zero()?;
    let n = model.n();
    let sigma = model.sigma();
    let log_ratio = 0.5 * n.ln() - n * a * a / (2.0 * sigma * sigma) + (model.f() * model.delta()).ln()
        - LN_SQRT_2PI
        - (sigma * rho_minus).ln();
    Ok(log_ratio.exp())
}


#[cfg(test)]
mod props {
    use super::*;
    use crate::model::EffectPrior;
    use proptest::prelude::*;

    fn model_strategy() -> impl Strategy<Value = TwoGroupsModel> {
        let prior = prop_oneof![
            (0.05f64..3.0).prop_map(|t| EffectPrior::normal(t).unwrap()),
            (-2.0f64..-0.05, 0.05f64..2.0, 0.1f64..0.9).prop_map(|(a, b, w)| EffectPrior::two_point(a, b, w).unwrap()),
        ];
        (0.001f64..0.3, 0.5f64..2.0, 5u64..2000, prior, 0.5f64..2.0)
            .prop_map(|(p, sigma, n, prior, d0)| TwoGroupsModel::new(p, sigma, n, prior, d0, 1.0).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn residual_changes_sign_once_per_side(model in model_strategy()) {
            let spec = QuadratureSpec::default();
            prop_assume!(jt1_residual(&model, 0.0, &spec).unwrap() < 0.0);
            let sigma = model.sigma();
            for sign in [-1.0, 1.0] {
                let points = 10_000;
                let (lo, hi) = ((1e-8f64).ln(), 0.0f64);
                let mut changes = 0;
                let mut prev = None;
                for i in 0..points {
                    let t = sign * 10.0 * sigma * (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp();
                    let r = jt1_residual(&model, t, &spec).unwrap();
                    if let Some(q) = prev {
                        if (q < 0.0) != (r < 0.0) {
                            changes += 1;
                        }
                    }
                    prev = Some(r);
                }
                prop_assert!(changes <= 1, "{changes} sign changes");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn exact_cutoffs_minimise_risk(model in model_strategy(), seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let thr = match oracle_thresholds_exact(&model) {
                Ok(t) => t,
                Err(_) => return Ok(()),
            };
            let best = bayes_risk(&model, 1, &error_rates(&model, &thr).unwrap()).unwrap().total;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..100 {
                let a = thr.a * (1.0 + rng.random_range(-0.5..0.5));
                let b = thr.b * (1.0 + rng.random_range(-0.5..0.5));
                let other = ThresholdPair::new(a, b).unwrap();
                let risk = bayes_risk(&model, 1, &error_rates(&model, &other).unwrap()).unwrap().total;
                prop_assert!(best <= risk + 1e-11, "{best} > {risk}");
            }
        }
    }
}
