//! Penalised model-size criteria: mBIC, its refinements mBIC1-3 and the
//! FDR-penalised scheme.

use crate::error::{Error, Result};
use crate::numerics::upper_quantile;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Family {
    Mbic,
    Mbic1,
    Mbic2,
    Mbic3,
    FdrPen,
}

impl Family {
    /// Default constant: `d = d2 = -2 log 4`, `d1 = 0`, `d3 = d2 + 2`, `alpha = 0.05`.
    pub fn default_constant(self) -> f64 {
        let d2 = -2.0 * 4f64.ln();
        match self {
            Family::Mbic | Family::Mbic2 => d2,
            Family::Mbic1 => 0.0,
            Family::Mbic3 => d2 + 2.0,
            Family::FdrPen => 0.05,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Mbic => "mBIC",
            Family::Mbic1 => "mBIC1",
            Family::Mbic2 => "mBIC2",
            Family::Mbic3 => "mBIC3",
            Family::FdrPen => "FDR_PEN",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mbic" => Ok(Family::Mbic),
            "mbic1" => Ok(Family::Mbic1),
            "mbic2" => Ok(Family::Mbic2),
            "mbic3" => Ok(Family::Mbic3),
            "fdr_pen" | "fdrpen" => Ok(Family::FdrPen),
            _ => Err(Error::config(format!("unknown criterion `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SigmaMode {
    Known(f64),
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Criterion {
    pub family: Family,
    pub constant: f64,
    pub sigma_mode: SigmaMode,
    pub k_max: usize,
}

impl Criterion {
    /// Default constant; `k_max` is `m_total - 1` for known sigma and
    /// `floor(0.3 m_total)` otherwise.
    pub fn new(family: Family, sigma_mode: SigmaMode, m_total: usize) -> Self {
        let k_max = match sigma_mode {
            SigmaMode::Known(_) => m_total.saturating_sub(1),
            SigmaMode::Unknown => (0.3 * m_total as f64).floor() as usize,
        };
        Self { family, constant: family.default_constant(), sigma_mode, k_max }
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.k_max = k_max;
        self
    }

    pub fn validate(&self, n: usize, m_total: usize) -> Result<()> {
        if !self.constant.is_finite() {
            return Err(Error::invalid("criterion constant must be finite"));
        }
        if self.family == Family::FdrPen && !(self.constant > 0.0 && self.constant < 1.0) {
            return Err(Error::invalid(format!("FDR_PEN alpha must lie in (0, 1), got {}", self.constant)));
        }
        if let SigmaMode::Known(s) = self.sigma_mode {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid(format!("known sigma must be positive, got {s}")));
            }
        }
        if self.k_max > m_total.saturating_sub(1) {
            return Err(Error::invalid(format!("k_max = {} exceeds m_total - 1 = {}", self.k_max, m_total - 1)));
        }
        if self.sigma_mode == SigmaMode::Unknown && self.k_max + 2 > n {
            return Err(Error::invalid(format!("unknown sigma needs k_max <= n - 2, got {}", self.k_max)));
        }
        Ok(())
    }

    /// Penalty increments `pen(k) - pen(k - 1)` for `k = 1..=k_max`.
    pub fn penalty_increments(&self, n: usize, m: usize) -> Result<Vec<f64>> {
        (1..=self.k_max).map(|k| Ok(self.penalty(n, k, m)? - self.penalty(n, k - 1, m)?)).collect()
    }

    /// Penalty for a model with `k` regressors out of `m` candidates.
    pub fn penalty(&self, n: usize, k: usize, m: usize) -> Result<f64> {
        if k == 0 {
            return Ok(0.0);
        }
        if m == 0 || n == 0 {
            return Err(Error::invalid("penalty needs n, m >= 1"));
        }
        let (nf, mf, kf) = (n as f64, m as f64, k as f64);
        let log_nm2 = nf.ln() + 2.0 * mf.ln();
        let ln_k_fact = |k: usize| (2..=k).map(|i| (i as f64).ln()).sum::<f64>();
        Ok(match self.family {
            Family::Mbic => kf * (nf.ln() + 2.0 * mf.ln() + self.constant),
            Family::Mbic1 => {
                let mut loglog = 0.0;
                for i in 1..=k {
                    let inner = log_nm2 - 2.0 * (i as f64).ln();
                    if !(inner > 1.0) {
                        return Err(Error::domain(format!("mBIC1 needs n m^2 / i^2 > e, fails at i = {i}")));
                    }
                    loglog += inner.ln();
                }
                kf * (log_nm2 + self.constant) - 2.0 * ln_k_fact(k) - loglog
            }
            Family::Mbic2 => kf * (log_nm2 + self.constant) - 2.0 * ln_k_fact(k),
            Family::Mbic3 => kf * (log_nm2 + self.constant) - 2.0 * kf * kf.ln(),
            Family::FdrPen => {
                let mut total = 0.0;
                for l in 1..=k {
                    total += upper_quantile(self.constant * l as f64 / (2.0 * mf))?.powi(2);
                }
                total
            }
        })
    }

    /// `pen(0), ..., pen(k_max)` built incrementally.
    pub fn penalty_path(&self, n: usize, m: usize) -> Result<Vec<f64>> {
        let mut path = Vec::with_capacity(self.k_max + 1);
        path.push(0.0);
        if self.k_max == 0 {
            return Ok(path);
        }
        if m == 0 || n == 0 {
            return Err(Error::invalid("penalty needs n, m >= 1"));
        }
        let (nf, mf) = (n as f64, m as f64);
        let log_nm2 = nf.ln() + 2.0 * mf.ln();
        let mut acc = 0.0;
        for k in 1..=self.k_max {
            let kf = k as f64;
            let step = match self.family {
                Family::Mbic => nf.ln() + 2.0 * mf.ln() + self.constant,
                Family::Mbic1 => {
                    let inner = log_nm2 - 2.0 * kf.ln();
                    if !(inner > 1.0) {
                        return Err(Error::domain(format!("mBIC1 needs n m^2 / i^2 > e, fails at i = {k}")));
                    }
                    log_nm2 + self.constant - 2.0 * kf.ln() - inner.ln()
                }
                Family::Mbic2 => log_nm2 + self.constant - 2.0 * kf.ln(),
                Family::Mbic3 => {
                    path.push(kf * (log_nm2 + self.constant) - 2.0 * kf * kf.ln());
                    continue;
                }
                Family::FdrPen => upper_quantile(self.constant * kf / (2.0 * mf))?.powi(2),
            };
            acc += step;
            path.push(acc);
        }
        Ok(path)
    }

    /// Fit term plus penalty: `RSS / sigma^2` for known sigma, `n log RSS` otherwise.
    pub fn value(&self, n: usize, k: usize, rss: f64, m: usize) -> Result<f64> {
        let fit = match self.sigma_mode {
            SigmaMode::Known(s) => rss / (s * s),
            SigmaMode::Unknown => {
                if !(rss > 0.0) {
                    return Err(Error::DegenerateFit(format!("RSS = {rss} for a model with {k} regressors")));
                }
                n as f64 * rss.ln()
            }
        };
        Ok(fit + self.penalty(n, k, m)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_model_has_no_penalty() {
        for family in [Family::Mbic, Family::Mbic1, Family::Mbic2, Family::Mbic3, Family::FdrPen] {
            let c = Criterion::new(family, SigmaMode::Known(1.0), 256);
            assert_eq!(c.value(256, 0, 12.5, 255).unwrap(), 12.5);
            let u = Criterion::new(family, SigmaMode::Unknown, 256);
            assert_eq!(u.value(256, 0, 12.5, 255).unwrap(), 256.0 * 12.5f64.ln());
        }
    }

    #[test]
    fn mbic2_differs_from_mbic_by_log_factorial() {
        let d = -1.3;
        let a = Criterion::new(Family::Mbic, SigmaMode::Known(1.0), 256).with_constant(d);
        let b = Criterion::new(Family::Mbic2, SigmaMode::Known(1.0), 256).with_constant(d);
        for k in 0..20usize {
            let lf: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
            let diff = b.penalty(256, k, 255).unwrap() - a.penalty(256, k, 255).unwrap();
            assert!((diff + 2.0 * lf).abs() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn fdr_penalty_from_quantiles() {
        let c = Criterion::new(Family::FdrPen, SigmaMode::Known(1.0), 101);
        // squared upper quantiles at 0.00025 and 0.0005 from a reference table
        let want = 12.11566514639717 + 10.82756617066273;
        assert!((c.penalty(100, 2, 100).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn mbic3_limits_and_constants() {
        let c = Criterion::new(Family::Mbic3, SigmaMode::Known(1.0), 64);
        assert!((c.constant - (2.0 - 2.0 * 4f64.ln())).abs() < 1e-15);
        let one = c.penalty(64, 1, 63).unwrap();
        assert!((one - (64f64.ln() + 2.0 * 63f64.ln() + c.constant)).abs() < 1e-12);
        assert_eq!(Family::Mbic1.default_constant(), 0.0);
    }

    #[test]
    fn mbic1_domain_error() {
        let c = Criterion::new(Family::Mbic1, SigmaMode::Known(1.0), 2);
        assert!(matches!(c.penalty(1, 1, 1), Err(Error::Domain(_))));
        assert!(c.penalty(256, 1, 255).is_ok());
    }

    #[test]
    fn penalty_path_matches_direct_sums() {
        for family in [Family::Mbic, Family::Mbic1, Family::Mbic2, Family::Mbic3, Family::FdrPen] {
            let c = Criterion::new(family, SigmaMode::Known(1.0), 512);
            let path = c.penalty_path(512, 511).unwrap();
            assert_eq!(path.len(), 512);
            for k in [0usize, 1, 2, 7, 100, 511] {
                let direct = c.penalty(512, k, 511).unwrap();
                assert!((path[k] - direct).abs() < 1e-9 * direct.abs().max(1.0), "{family} k={k}");
            }
        }
    }

    #[test]
    fn unknown_sigma_rejects_zero_rss() {
        let c = Criterion::new(Family::Mbic, SigmaMode::Unknown, 16);
        assert!(matches!(c.value(16, 1, 0.0, 15), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn defaults_and_validation() {
        let u = Criterion::new(Family::Mbic2, SigmaMode::Unknown, 256);
        assert_eq!(u.k_max, 76);
        assert!(u.validate(256, 256).is_ok());
        assert!(u.with_k_max(255).validate(256, 256).is_err());
        assert!(Criterion::new(Family::FdrPen, SigmaMode::Known(1.0), 8).with_constant(1.5).validate(8, 8).is_err());
        assert_eq!("MBIC2".parse::<Family>().unwrap(), Family::Mbic2);
        assert!("aic".parse::<Family>().is_err());
    }
}
