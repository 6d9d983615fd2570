//! The two-groups mixture: each effect is exactly zero with probability
//! `1 - p`, otherwise drawn from the alternative prior `nu`.
//!
//! All integrals against `nu` go through [`EffectPrior`], which knows where
//! its mass lives and picks quadrature windows accordingly. Two-point priors
//! are handled by finite sums.

use crate::error::{Error, Result};
use crate::numerics::{integrate_interval, normal_interval, phi, phi_upper, QuadratureSpec, LN_SQRT_2PI};
use rand::Rng;
use rand_distr::StandardNormal;
use std::fmt::Write as _;

/// Piecewise-linear density on an increasing grid, normalised to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    support: Vec<f64>,
    density: Vec<f64>,
    /// cumulative mass at each node
    cumulative: Vec<f64>,
}

impl GridDensity {
    fn new(support: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if support.len() < 2 || support.len() != density.len() {
            return Err(Error::invalid(format!(
                "grid prior needs >= 2 nodes and matching lengths (support {}, density {})",
                support.len(),
                density.len()
            )));
        }
        if support.iter().chain(&density).any(|v| !v.is_finite()) {
            return Err(Error::invalid("grid prior contains non-finite values"));
        }
        if support.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("grid support must be strictly increasing"));
        }
        if density.iter().any(|&d| d < 0.0) {
            return Err(Error::invalid("grid density must be nonnegative"));
        }
        let mut cumulative = Vec::with_capacity(support.len());
        cumulative.push(0.0);
        for i in 1..support.len() {
            let area = 0.5 * (density[i - 1] + density[i]) * (support[i] - support[i - 1]);
            cumulative.push(cumulative[i - 1] + area);
        }
        let total = *cumulative.last().unwrap();
        if !(total > 0.0) {
            return Err(Error::invalid("grid density has zero mass"));
        }
        let density = density.into_iter().map(|d| d / total).collect();
        let cumulative = cumulative.into_iter().map(|c| c / total).collect();
        Ok(Self { support, density, cumulative })
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    /// Normalised density values at the support nodes.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    fn segment(&self, x: f64) -> Option<usize> {
        let s = &self.support;
        if x < s[0] || x > s[s.len() - 1] {
            return None;
        }
        Some(s.partition_point(|&node| node <= x).saturating_sub(1).min(s.len() - 2))
    }

    fn density_at(&self, x: f64) -> f64 {
        match self.segment(x) {
            None => 0.0,
            Some(i) => {
                let t = (x - self.support[i]) / (self.support[i + 1] - self.support[i]);
                self.density[i] + t * (self.density[i + 1] - self.density[i])
            }
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        let s = &self.support;
        if x <= s[0] {
            return 0.0;
        }
        if x >= s[s.len() - 1] {
            return 1.0;
        }
        let i = self.segment(x).unwrap();
        let dx = s[i + 1] - s[i];
        let t = x - s[i];
        let slope = (self.density[i + 1] - self.density[i]) / dx;
        self.cumulative[i] + self.density[i] * t + 0.5 * slope * t * t
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let i = self.cumulative.partition_point(|&c| c <= u).saturating_sub(1).min(self.support.len() - 2);
        let residual = u - self.cumulative[i];
        let dx = self.support[i + 1] - self.support[i];
        let (d0, slope) = (self.density[i], (self.density[i + 1] - self.density[i]) / dx);
        // solve d0 t + slope t^2 / 2 = residual for t in [0, dx]
        let disc = (d0 * d0 + 2.0 * slope * residual).max(0.0);
        let denom = d0 + disc.sqrt();
        let t = if denom > 0.0 { 2.0 * residual / denom } else { 0.0 };
        self.support[i] + t.clamp(0.0, dx)
    }
}

/// Which family an [`EffectPrior`] belongs to.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorKind {
    /// Centred normal with variance `tau2`.
    Normal {
        tau2: f64,
    },
    /// Atoms at `mu_minus < 0` (weight `w`) and `mu_plus > 0` (weight `1 - w`).
    TwoPoint {
        mu_minus: f64,
        mu_plus: f64,
        w: f64,
    },
    Grid(GridDensity),
}

/// The alternative distribution `nu` of nonzero effects.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectPrior {
    kind: PriorKind,
}

impl EffectPrior {
    pub fn normal(tau2: f64) -> Result<Self> {
        if !(tau2 > 0.0 && tau2.is_finite()) {
            return Err(Error::invalid(format!("normal prior needs tau2 > 0, got {tau2}")));
        }
        Ok(Self { kind: PriorKind::Normal { tau2 } })
    }

    pub fn two_point(mu_minus: f64, mu_plus: f64, w: f64) -> Result<Self> {
        if !(mu_minus < 0.0 && mu_minus.is_finite()) || !(mu_plus > 0.0 && mu_plus.is_finite()) {
            return Err(Error::invalid(format!(
                "two-point prior needs mu_minus < 0 < mu_plus, got ({mu_minus}, {mu_plus})"
            )));
        }
        if !(w > 0.0 && w < 1.0) {
            return Err(Error::invalid(format!(
                "two-point weight must lie in (0, 1) so both signs carry mass, got {w}"
            )));
        }
        Ok(Self { kind: PriorKind::TwoPoint { mu_minus, mu_plus, w } })
    }

    /// Piecewise-linear density through `(support[i], density[i])`, renormalised.
    /// Rejected unless both `(-inf, 0)` and `(0, inf)` receive positive mass.
    pub fn grid(support: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        let grid = GridDensity::new(support, density)?;
        let below = grid.cdf(0.0);
        if !(below > 0.0 && below < 1.0) {
            return Err(Error::invalid(format!(
                "grid prior must put mass on both sides of zero (mass below 0 = {below})"
            )));
        }
        Ok(Self { kind: PriorKind::Grid(grid) })
    }

    pub fn kind(&self) -> &PriorKind {
        &self.kind
    }

    /// `nu((-inf, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.kind {
            PriorKind::Normal { tau2 } => phi(x / tau2.sqrt()),
            PriorKind::TwoPoint { mu_minus, mu_plus, w } => {
                if x < *mu_minus {
                    0.0
                } else if x < *mu_plus {
                    *w
                } else {
                    1.0
                }
            }
            PriorKind::Grid(g) => g.cdf(x),
        }
    }

    /// `nu((lo, hi))`, the open interval.
    pub fn open_interval_mass(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        match &self.kind {
            PriorKind::Normal { tau2 } => {
                let tau = tau2.sqrt();
                normal_interval(lo / tau, hi / tau)
            }
            PriorKind::TwoPoint { mu_minus, mu_plus, w } => {
                let inside = |mu: f64| mu > lo && mu < hi;
                let mut mass = 0.0;
                if inside(*mu_minus) {
                    mass += w;
                }
                if inside(*mu_plus) {
                    mass += 1.0 - w;
                }
                mass
            }
            PriorKind::Grid(g) => (g.cdf(hi) - g.cdf(lo)).max(0.0),
        }
    }

    /// One-sided density limits `(rho(0-), rho(0+))`.
    pub fn density_at_zero(&self) -> Result<(f64, f64)> {
        match &self.kind {
            PriorKind::Normal { tau2 } => {
                let rho = (-LN_SQRT_2PI).exp() / tau2.sqrt();
                Ok((rho, rho))
            }
            PriorKind::TwoPoint { .. } => {
                Err(Error::UnsupportedPrior("two-point prior has no density near zero".into()))
            }
            PriorKind::Grid(g) => {
                let rho = g.density_at(0.0);
                Ok((rho, rho))
            }
        }
    }

    /// Density at `mu`, `None` for atomic priors.
    pub fn density(&self, mu: f64) -> Option<f64> {
        match &self.kind {
            PriorKind::Normal { tau2 } => {
                let tau = tau2.sqrt();
                Some((-0.5 * mu * mu / tau2 - LN_SQRT_2PI).exp() / tau)
            }
            PriorKind::TwoPoint { .. } => None,
            PriorKind::Grid(g) => Some(g.density_at(mu)),
        }
    }

    /// Interval outside of which the prior has negligible mass, and the
    /// natural kink points of the density inside it.
    fn support_window(&self, spec: &QuadratureSpec) -> (f64, f64, Vec<f64>) {
        match &self.kind {
            PriorKind::Normal { tau2 } => {
                let tau = tau2.sqrt();
                let r = spec.truncation_radius;
                let breaks = [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0].iter().map(|k| k * tau).collect();
                (-r * tau, r * tau, breaks)
            }
            PriorKind::TwoPoint { mu_minus, mu_plus, .. } => (*mu_minus, *mu_plus, vec![]),
            PriorKind::Grid(g) => {
                let s = g.support();
                (s[0], s[s.len() - 1], s.to_vec())
            }
        }
    }

    /// `int_{lo}^{hi} f(mu) d nu(mu)`, with extra breakpoints where `f` changes fast.
    pub fn integrate_over<F: Fn(f64) -> f64>(
        &self,
        f: F,
        lo: f64,
        hi: f64,
        breaks: &[f64],
        spec: &QuadratureSpec,
    ) -> Result<f64> {
        if let PriorKind::TwoPoint { mu_minus, mu_plus, w } = &self.kind {
            let mut total = 0.0;
            if *mu_minus >= lo && *mu_minus <= hi {
                total += w * f(*mu_minus);
            }
            if *mu_plus >= lo && *mu_plus <= hi {
                total += (1.0 - w) * f(*mu_plus);
            }
            return Ok(total);
        }
        let (s_lo, s_hi, mut kinks) = self.support_window(spec);
        let (lo, hi) = (lo.max(s_lo), hi.min(s_hi));
        if hi <= lo {
            return Ok(0.0);
        }
        kinks.extend_from_slice(breaks);
        integrate_interval(
            |mu| {
                let rho = self.density(mu).unwrap_or(0.0);
                if rho == 0.0 {
                    0.0
                } else {
                    f(mu) * rho
                }
            },
            lo,
            hi,
            &kinks,
            spec,
        )
    }

    /// `int [Phi((b - mu)/s) - Phi((a - mu)/s)] d nu(mu)`: the probability
    /// that a noisy effect with noise sd `s` lands in `(a, b)`.
    pub fn acceptance_mass(&self, a: f64, b: f64, s: f64, spec: &QuadratureSpec) -> Result<f64> {
        if !(s > 0.0) || !(a < b) {
            return Err(Error::invalid(format!("acceptance_mass: need a < b and s > 0 ({a}, {b}, {s})")));
        }
        let accept = |mu: f64| normal_interval((a - mu) / s, (b - mu) / s);
        let r = spec.truncation_radius;
        let breaks = [a - 3.0 * s, a, a + 3.0 * s, b - 3.0 * s, b, b + 3.0 * s, 0.0];
        self.integrate_over(accept, a - r * s, b + r * s, &breaks, spec).map(|v| v.clamp(0.0, 1.0))
    }

    /// `ln int exp(n (a mu - mu^2 / 2) / sigma^2) d nu(mu)`, the tilted mass that
    /// defines the Bayes-oracle cutoffs.
    pub fn log_tilted_mass(&self, a: f64, n: f64, sigma: f64, spec: &QuadratureSpec) -> Result<f64> {
        let prec = n / (sigma * sigma);
        let exponent = |mu: f64| prec * (a * mu - 0.5 * mu * mu);
        match &self.kind {
            PriorKind::TwoPoint { mu_minus, mu_plus, w } => {
                let t1 = w.ln() + exponent(*mu_minus);
                let t2 = (1.0 - w).ln() + exponent(*mu_plus);
                let hi = t1.max(t2);
                Ok(hi + ((t1 - hi).exp() + (t2 - hi).exp()).ln())
            }
            PriorKind::Normal { tau2 } => {
                let total_prec = prec + 1.0 / tau2;
                let peak = prec * a / total_prec;
                let width = total_prec.sqrt().recip();
                let log_h = |mu: f64| exponent(mu) - 0.5 * mu * mu / tau2 - LN_SQRT_2PI - 0.5 * tau2.ln();
                let h_max = log_h(peak);
                let j = crate::numerics::integrate(|mu| (log_h(mu) - h_max).exp(), spec, peak, width)?;
                if !(j > 0.0) {
                    return Err(Error::domain("tilted mass underflowed"));
                }
                Ok(h_max + j.ln())
            }
            PriorKind::Grid(g) => {
                let s = g.support();
                let (lo, hi) = (s[0], s[s.len() - 1]);
                let log_h = |mu: f64| {
                    let rho = g.density_at(mu);
                    if rho > 0.0 {
                        exponent(mu) + rho.ln()
                    } else {
                        f64::NEG_INFINITY
                    }
                };
                let center = std::iter::once(a.clamp(lo, hi))
                    .chain(s.iter().copied())
                    .max_by(|x, y| log_h(*x).total_cmp(&log_h(*y)))
                    .unwrap();
                let h_max = log_h(center);
                if !h_max.is_finite() {
                    return Err(Error::domain("grid prior has no positive density"));
                }
                let half = spec.truncation_radius / prec.sqrt();
                let j = integrate_interval(
                    |mu| (log_h(mu) - h_max).exp(),
                    (center - half).max(lo),
                    (center + half).min(hi),
                    &[&[center][..], s].concat(),
                    spec,
                )?;
                if !(j > 0.0) {
                    return Err(Error::domain("tilted mass underflowed"));
                }
                Ok(h_max + j.ln())
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            PriorKind::Normal { tau2 } => tau2.sqrt() * rng.sample::<f64, _>(StandardNormal),
            PriorKind::TwoPoint { mu_minus, mu_plus, w } => {
                if rng.random::<f64>() < *w {
                    *mu_minus
                } else {
                    *mu_plus
                }
            }
            PriorKind::Grid(g) => g.sample(rng),
        }
    }

    /// Plain-text `key=value` form used in scenario files.
    pub fn to_kv(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        match &self.kind {
            PriorKind::Normal { tau2 } => {
                let _ = write!(out, "kind=normal\ntau2={tau2}\n");
            }
            PriorKind::TwoPoint { mu_minus, mu_plus, w } => {
                let _ = write!(out, "kind=two_point\nmu_minus={mu_minus}\nmu_plus={mu_plus}\nw={w}\n");
            }
            PriorKind::Grid(g) => {
                let _ = write!(out, "kind=grid\nsupport={}\ndensity={}\n", join(&g.support), join(&g.density));
            }
        }
        out
    }

    /// Parses the `key=value` block written by [`EffectPrior::to_kv`].
    /// Blank lines and `#` comments are skipped; unknown keys are rejected.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut values: Vec<(String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("prior line {}: expected key=value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "kind" {
                kind = Some(value.to_string());
            } else {
                values.push((key.to_string(), value.to_string()));
            }
        }
        let kind = kind.ok_or_else(|| Error::config("prior block is missing `kind`"))?;
        let allowed: &[&str] = match kind.as_str() {
            "normal" => &["tau2"],
            "two_point" => &["mu_minus", "mu_plus", "w"],
            "grid" => &["support", "density"],
            other => return Err(Error::config(format!("unknown prior kind `{other}`"))),
        };
        if let Some((k, _)) = values.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(Error::config(format!("unknown prior key `{k}` for kind `{kind}`")));
        }
        let get = |key: &str| -> Result<&str> {
            values
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::config(format!("prior kind `{kind}` requires `{key}`")))
        };
        let num = |key: &str| -> Result<f64> {
            let v = get(key)?;
            v.parse().map_err(|_| Error::config(format!("prior key `{key}`: not a number: `{v}`")))
        };
        let list = |key: &str| -> Result<Vec<f64>> {
            get(key)?
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| Error::config(format!("prior key `{key}`: bad number `{t}`"))))
                .collect()
        };
        match kind.as_str() {
            "normal" => Self::normal(num("tau2")?),
            "two_point" => Self::two_point(num("mu_minus")?, num("mu_plus")?, num("w")?),
            _ => Self::grid(list("support")?, list("density")?),
        }
    }
}

/// Sample `m` effects from `(1 - p) delta_0 + p nu`. Accepts the degenerate
/// endpoints `p = 0` and `p = 1`.
pub fn sample_effects<R: Rng + ?Sized>(p: f64, prior: &EffectPrior, m: usize, rng: &mut R) -> Vec<f64> {
    (0..m).map(|_| if rng.random::<f64>() < p { prior.sample(rng) } else { 0.0 }).collect()
}

/// Parameters of the mixture and of the additive 0-1-type loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoGroupsModel {
    p: f64,
    sigma: f64,
    n: f64,
    prior: EffectPrior,
    delta0: f64,
    delta_a: f64,
}

impl TwoGroupsModel {
    /// `n` is the per-test sample size (an integer >= 1, stored as `f64`).
    pub fn new(p: f64, sigma: f64, n: u64, prior: EffectPrior, delta0: f64, delta_a: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid(format!("p must lie in (0, 1), got {p}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
        }
        if n < 1 {
            return Err(Error::invalid("n must be >= 1"));
        }
        if !(delta0 > 0.0 && delta0.is_finite()) || !(delta_a > 0.0 && delta_a.is_finite()) {
            return Err(Error::invalid(format!("losses must be positive, got ({delta0}, {delta_a})")));
        }
        Ok(Self { p, sigma, n: n as f64, prior, delta0, delta_a })
    }

    /// Equal losses `delta0 = deltaA = 1`.
    pub fn with_unit_loss(p: f64, sigma: f64, n: u64, prior: EffectPrior) -> Result<Self> {
        Self::new(p, sigma, n, prior, 1.0, 1.0)
    }

    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn n(&self) -> f64 {
        self.n
    }
    pub fn prior(&self) -> &EffectPrior {
        &self.prior
    }
    pub fn delta0(&self) -> f64 {
        self.delta0
    }
    pub fn delta_a(&self) -> f64 {
        self.delta_a
    }
    /// Loss ratio `delta0 / deltaA`.
    pub fn delta(&self) -> f64 {
        self.delta0 / self.delta_a
    }
    /// Sparsity odds `(1 - p) / p`.
    pub fn f(&self) -> f64 {
        (1.0 - self.p) / self.p
    }
    /// `n delta^2 f^2`.
    pub fn v(&self) -> f64 {
        self.n * (self.delta() * self.f()).powi(2)
    }
    /// Standard deviation of a sample mean, `sigma / sqrt(n)`.
    pub fn mean_sd(&self) -> f64 {
        self.sigma / self.n.sqrt()
    }

    /// `P(|Z| <= y)` for the scaled statistic `Z = sqrt(n) Xbar / sigma`.
    pub fn marginal_abs_z_cdf(&self, y: f64, spec: &QuadratureSpec) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::invalid(format!("marginal_abs_z_cdf: y must be >= 0, got {y}")));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        let s = self.mean_sd();
        let alt = self.prior.acceptance_mass(-y * s, y * s, s, spec)?;
        Ok((1.0 - self.p) * normal_interval(-y, y) + self.p * alt)
    }

    /// `P(|Z| > y)`, computed without forming `1 - F(y)` from a near-one value
    /// on the null component.
    pub fn marginal_abs_z_sf(&self, y: f64, spec: &QuadratureSpec) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::invalid(format!("marginal_abs_z_sf: y must be >= 0, got {y}")));
        }
        if y == 0.0 {
            return Ok(1.0);
        }
        let s = self.mean_sd();
        let alt = self.prior.acceptance_mass(-y * s, y * s, s, spec)?;
        Ok((1.0 - self.p) * 2.0 * phi_upper(y) + self.p * (1.0 - alt))
    }

    pub fn sample_effects<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Vec<f64> {
        sample_effects(self.p, &self.prior, m, rng)
    }
}

/// Limits characterising a sequence of models: `C = lim 2 log(delta f) / n`,
/// `T = sigma sqrt(C)` and `C1 = 1 - nu(-T, T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticParams {
    pub c: f64,
    pub t: f64,
    pub c1: f64,
}

impl AsymptoticParams {
    /// Derives `T` and `C1` from `C` and the model's `sigma` and prior.
    pub fn new(c: f64, model: &TwoGroupsModel) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!("C must be finite and >= 0, got {c}")));
        }
        let t = model.sigma() * c.sqrt();
        let c1 = if t > 0.0 { 1.0 - model.prior().open_interval_mass(-t, t) } else { 1.0 };
        Ok(Self { c, t, c1 })
    }

    /// Accepts caller-supplied values after checking `T = sigma sqrt(C)` and `0 <= C1 <= 1`.
    pub fn from_parts(c: f64, t: f64, c1: f64, sigma: f64) -> Result<Self> {
        if !(c >= 0.0) || !(t >= 0.0) {
            return Err(Error::invalid("C and T must be >= 0"));
        }
        let expected = sigma * c.sqrt();
        if (t - expected).abs() > 1e-12 * expected.max(1.0) {
            return Err(Error::invalid(format!("T = {t} does not equal sigma sqrt(C) = {expected}")));
        }
        if !(0.0..=1.0).contains(&c1) {
            return Err(Error::invalid(format!("C1 must lie in [0, 1], got {c1}")));
        }
        Ok(Self { c, t, c1 })
    }

    /// Numerical check of the density condition near `+-T` for `C > 0`:
    /// the density must be positive on `[T - eps, T + eps]` and its mirror,
    /// with `eps` the local grid spacing for grid priors.
    pub fn density_positive_near_threshold(&self, prior: &EffectPrior) -> bool {
        if self.c == 0.0 {
            return prior.density_at_zero().map(|(a, b)| a > 0.0 && b > 0.0).unwrap_or(false);
        }
        match prior.kind() {
            PriorKind::Normal { .. } => true,
            PriorKind::TwoPoint { .. } => false,
            PriorKind::Grid(g) => {
                let s = g.support();
                [-self.t, self.t].iter().all(|&centre| {
                    let eps = match g.segment(centre) {
                        Some(i) => s[i + 1] - s[i],
                        None => return false,
                    };
                    g.density_at(centre) > 0.0
                        && s.iter().zip(g.density()).filter(|(x, _)| (**x - centre).abs() <= eps).all(|(_, d)| *d > 0.0)
                })
            }
        }
    }
}
