//! Orthogonal regression with Hadamard designs and penalised model selection.
//!
//! Column 0 is the intercept and belongs to every model; the `m = m_total - 1`
//! remaining columns are the candidates. Under `X'X = n I` the least-squares
//! coefficients do not depend on which other columns are in the model, so the
//! residual sum of squares of a model is `sum over excluded j of n beta_j^2`.

mod criteria;
mod design;

pub use criteria::{Criterion, Family, SigmaMode};
pub use design::{fwht, hadamard_design, OrthogonalDesign};

use crate::error::{Error, Result};
use crate::rules::{bh_step_up, pvalues_from_z, sd_step_down, PValueVector, RejectionSet};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use statrs::function::beta::checked_beta_reg;

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData {
    pub design: OrthogonalDesign,
    pub y: Vec<f64>,
    pub beta_true: Vec<f64>,
    pub sigma: f64,
    pub k_star: usize,
}

impl RegressionData {
    pub fn new(design: OrthogonalDesign, y: Vec<f64>, beta_true: Vec<f64>, sigma: f64) -> Result<Self> {
        if y.len() != design.n() || beta_true.len() != design.m_total() {
            return Err(Error::invalid(format!(
                "data shape mismatch: y {} (n = {}), beta {} (m_total = {})",
                y.len(),
                design.n(),
                beta_true.len(),
                design.m_total()
            )));
        }
        if !(sigma >= 0.0) {
            return Err(Error::invalid(format!("sigma must be >= 0, got {sigma}")));
        }
        let k_star = beta_true.iter().skip(1).filter(|&&b| b != 0.0).count();
        Ok(Self { design, y, beta_true, sigma, k_star })
    }

    /// `y = X beta + sigma eps` with standard normal `eps`.
    pub fn generate<R: Rng + ?Sized>(
        design: OrthogonalDesign,
        beta_true: Vec<f64>,
        sigma: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if beta_true.len() != design.m_total() {
            return Err(Error::invalid("beta length must equal m_total"));
        }
        let mut y = design.apply(&beta_true);
        for v in y.iter_mut() {
            *v += sigma * rng.sample::<f64, _>(StandardNormal);
        }
        Self::new(design, y, beta_true, sigma)
    }

    pub fn n(&self) -> usize {
        self.design.n()
    }

    /// Number of candidate regressors, `m_total - 1`.
    pub fn m(&self) -> usize {
        self.design.m_total() - 1
    }

    pub fn true_support(&self) -> Vec<bool> {
        self.beta_true.iter().skip(1).map(|&b| b != 0.0).collect()
    }
}

/// `beta_hat = X' y / n`.
pub fn ols_orthogonal(data: &RegressionData) -> Vec<f64> {
    data.design.project(&data.y)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectedModel {
    /// Mask over the candidates (intercept excluded).
    pub included: Vec<bool>,
    pub k: usize,
    pub criterion_value: f64,
    pub rss: f64,
}

impl SelectedModel {
    fn from_mask(included: Vec<bool>, criterion_value: f64, rss: f64) -> Self {
        let k = included.iter().filter(|&&b| b).count();
        Self { included, k, criterion_value, rss }
    }
}

/// Candidates ordered by decreasing `|beta_hat|`, ties by index (0-based, intercept excluded).
pub fn nested_order(beta_hat: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..beta_hat.len() - 1).collect();
    order.sort_by(|&i, &j| beta_hat[j + 1].abs().total_cmp(&beta_hat[i + 1].abs()).then(i.cmp(&j)));
    order
}

/// RSS of every model on the nested path, `rss[k]` for `k = 0..=m`, as suffix sums
/// of `n beta_hat^2` so that nothing is subtracted.
fn nested_rss(beta_hat: &[f64], order: &[usize], n: f64) -> Vec<f64> {
    let mut rss = vec![0.0; order.len() + 1];
    for k in (0..order.len()).rev() {
        let b = beta_hat[order[k] + 1];
        rss[k] = rss[k + 1] + n * b * b;
    }
    rss
}

/// Minimises the criterion along the path of nested models built from the
/// largest `|beta_hat|`; returns the first global minimiser.
pub fn select_nested(crit: &Criterion, data: &RegressionData) -> Result<SelectedModel> {
    let (n, m) = (data.n(), data.m());
    crit.validate(n, m + 1)?;
    let penalties = crit.penalty_path(n, m)?;
    select_nested_with(crit, data, &penalties)
}

/// [`select_nested`] with a precomputed `crit.penalty_path(n, m)`, for repeated
/// selection on data of one shape.
pub fn select_nested_with(crit: &Criterion, data: &RegressionData, penalties: &[f64]) -> Result<SelectedModel> {
    let (n, m) = (data.n(), data.m());
    if penalties.len() != crit.k_max + 1 || crit.k_max > m {
        return Err(Error::invalid("penalty path does not match the criterion"));
    }
    let beta_hat = ols_orthogonal(data);
    let order = nested_order(&beta_hat);
    let rss = nested_rss(&beta_hat, &order, n as f64);
    let fit = |rss: f64| -> Result<f64> {
        match crit.sigma_mode {
            SigmaMode::Known(s) => Ok(rss / (s * s)),
            SigmaMode::Unknown if rss > 0.0 => Ok(n as f64 * rss.ln()),
            SigmaMode::Unknown => Err(Error::DegenerateFit(format!("RSS = {rss} on the nested path"))),
        }
    };
    let mut best = (0usize, fit(rss[0])?);
    for k in 1..=crit.k_max {
        let value = fit(rss[k])? + penalties[k];
        if value < best.1 {
            best = (k, value);
        }
    }
    let mut included = vec![false; m];
    for &j in &order[..best.0] {
        included[j] = true;
    }
    Ok(SelectedModel::from_mask(included, best.1, rss[best.0]))
}

/// Brute-force minimiser over every subset with at most `k_max` candidates.
/// Residuals are formed explicitly from the design entries.
pub fn select_exhaustive(crit: &Criterion, data: &RegressionData) -> Result<SelectedModel> {
    let (n, m) = (data.n(), data.m());
    if m + 1 > 16 {
        return Err(Error::invalid(format!("exhaustive search is limited to m_total <= 16, got {}", m + 1)));
    }
    crit.validate(n, m + 1)?;
    let x = data.design.matrix();
    let coef: Vec<f64> = (0..=m).map(|j| (0..n).map(|i| x[i][j] as f64 * data.y[i]).sum::<f64>() / n as f64).collect();
    let mut best: Option<(u32, f64, f64)> = None;
    for mask in 0u32..(1 << m) {
        let k = mask.count_ones() as usize;
        if k > crit.k_max {
            continue;
        }
        let rss: f64 = (0..n)
            .map(|i| {
                let mut fit = coef[0];
                for j in 0..m {
                    if mask >> j & 1 == 1 {
                        fit += coef[j + 1] * x[i][j + 1] as f64;
                    }
                }
                (data.y[i] - fit).powi(2)
            })
            .sum();
        let value = crit.value(n, k, rss, m)?;
        if best.is_none_or(|(_, v, _)| value < v) {
            best = Some((mask, value, rss));
        }
    }
    let (mask, value, rss) = best.expect("the empty model is always admissible");
    let included = (0..m).map(|j| mask >> j & 1 == 1).collect();
    Ok(SelectedModel::from_mask(included, value, rss))
}

/// Candidates with `n beta_hat^2 / sigma^2 > log n + 2 log m + d`.
pub fn mbic_threshold_set(data: &RegressionData, sigma: f64, d: f64) -> Vec<bool> {
    let (n, m) = (data.n() as f64, data.m() as f64);
    let cut = n.ln() + 2.0 * m.ln() + d;
    ols_orthogonal(data).iter().skip(1).map(|b| n * b * b / (sigma * sigma) > cut).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NestingCheck {
    pub k_sel: usize,
    pub k_g_minus_1: usize,
    pub k_f: usize,
    /// SD set is contained in the selected set, which is contained in the BH set.
    pub sets_nested: bool,
}

/// Runs FDR-penalised selection (known sigma, `k_max = m`) next to the BH and
/// SD rules on `sqrt(n) beta_hat / sigma`.
pub fn fdr_nesting_check(data: &RegressionData, alpha: f64) -> Result<NestingCheck> {
    let sigma = data.sigma;
    let crit =
        Criterion::new(Family::FdrPen, SigmaMode::Known(sigma), data.m() + 1).with_constant(alpha).with_k_max(data.m());
    let selected = select_nested(&crit, data)?;
    let z = known_sigma_z(data, sigma);
    let p = pvalues_from_z(&z)?;
    let bh = bh_step_up(&p, alpha)?;
    let sd = sd_step_down(&p, alpha)?;
    let as_set = RejectionSet { rejected: selected.included.clone(), k: selected.k, threshold_on_z: f64::NAN };
    Ok(NestingCheck {
        k_sel: selected.k,
        k_g_minus_1: sd.k,
        k_f: bh.k,
        sets_nested: sd.is_subset_of(&as_set) && as_set.is_subset_of(&bh),
    })
}

fn known_sigma_z(data: &RegressionData, sigma: f64) -> Vec<f64> {
    let root_n = (data.n() as f64).sqrt();
    ols_orthogonal(data).iter().skip(1).map(|b| root_n * b / sigma).collect()
}

/// Cutoff on `n beta_hat^2 / sigma^2` of the known-`p` oracle for a normal
/// prior with variance `tau2`: `((u + 1)/u)(log(u + 1) + 2 log((1 - p)/p))`, `u = n tau2 / sigma^2`.
pub fn oracle_break_threshold(n: usize, p: f64, tau2: f64, sigma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !(tau2 > 0.0) || !(sigma > 0.0) {
        return Err(Error::invalid(format!("oracle rule needs p in [0,1], tau2 > 0, sigma > 0 (p={p}, tau2={tau2})")));
    }
    let u = n as f64 * tau2 / (sigma * sigma);
    Ok((u + 1.0) / u * ((u + 1.0).ln() + 2.0 * ((1.0 - p) / p).ln()))
}

/// Known-`p` oracle selection. `criterion_value` holds the cutoff.
pub fn oracle_select(data: &RegressionData, p: f64, tau2: f64) -> Result<SelectedModel> {
    let sigma = if data.sigma > 0.0 { data.sigma } else { 1.0 };
    oracle_select_with_sigma(data, p, tau2, sigma)
}

pub fn oracle_select_with_sigma(data: &RegressionData, p: f64, tau2: f64, sigma: f64) -> Result<SelectedModel> {
    let cut = oracle_break_threshold(data.n(), p, tau2, sigma)?;
    let n = data.n() as f64;
    let beta_hat = ols_orthogonal(data);
    let score: Vec<f64> = beta_hat.iter().skip(1).map(|b| n * b * b / (sigma * sigma)).collect();
    let included: Vec<bool> = score.iter().map(|&s| s > cut).collect();
    let rss = score.iter().zip(&included).filter(|(_, &inc)| !inc).map(|(s, _)| s * sigma * sigma).sum();
    Ok(SelectedModel::from_mask(included, cut, rss))
}

/// Two-sided tail `P(|T| > t)` of Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> Result<f64> {
    if !(df > 0.0) || t.is_nan() {
        return Err(Error::invalid(format!("t tail needs df > 0 and t not NaN (t={t}, df={df})")));
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    let x = df / (df + t * t);
    checked_beta_reg(0.5 * df, 0.5, x).map_err(|e| Error::domain(format!("incomplete beta failed: {e}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimpleTests {
    pub statistics: Vec<f64>,
    pub pvalues: PValueVector,
    /// Marks coordinates whose one-regressor fit left no residual variance.
    pub degenerate: Vec<bool>,
}

/// Marginal tests of each candidate: z tests for known sigma, otherwise
/// t tests from the fit of `y` on the intercept and that column alone (`n - 2` df).
pub fn simple_regression_tests(data: &RegressionData, sigma_mode: SigmaMode) -> Result<SimpleTests> {
    let n = data.n();
    if n < 3 {
        return Err(Error::invalid("simple regression tests need n >= 3"));
    }
    match sigma_mode {
        SigmaMode::Known(sigma) => {
            let z = known_sigma_z(data, sigma);
            let pvalues = pvalues_from_z(&z)?;
            Ok(SimpleTests { degenerate: vec![false; z.len()], statistics: z, pvalues })
        }
        SigmaMode::Unknown => {
            let nf = n as f64;
            let df = nf - 2.0;
            let beta_hat = ols_orthogonal(data);
            let total: f64 = beta_hat.iter().skip(1).map(|b| nf * b * b).sum();
            let mut statistics = Vec::with_capacity(data.m());
            let mut pvalues = Vec::with_capacity(data.m());
            let mut degenerate = Vec::with_capacity(data.m());
            for b in beta_hat.iter().skip(1) {
                let resid = total - nf * b * b;
                let scale = resid / (df * nf);
                if !(scale > total * f64::EPSILON / nf) {
                    statistics.push(if *b == 0.0 { 0.0 } else { f64::INFINITY.copysign(*b) });
                    pvalues.push(0.0);
                    degenerate.push(true);
                    continue;
                }
                let t = b / scale.sqrt();
                statistics.push(t);
                pvalues.push(student_t_two_sided(t, df)?.clamp(0.0, 1.0));
                degenerate.push(false);
            }
            Ok(SimpleTests { statistics, pvalues: PValueVector::new(pvalues)?, degenerate })
        }
    }
}
