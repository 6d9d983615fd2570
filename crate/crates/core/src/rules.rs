//! Multiple-testing rules on two-sided z statistics.
//!
//! Step rules follow the usual conventions: the step-up (BH) rule rejects the
//! `k_F = max{i : p_(i) <= i alpha / m}` smallest p-values and the step-down
//! rule stops at the first `p_(i) > i alpha / m`. Fixed-threshold rules (BFDR,
//! GW) are expressed as cutoffs on `|Z|`.

use crate::error::{Error, Result};
use crate::model::{AsymptoticParams, TwoGroupsModel};
use crate::numerics::{find_root, phi_upper, upper_quantile, QuadratureSpec, RootSpec};

/// Two-sided p-values.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueVector {
    values: Vec<f64>,
}

impl PValueVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("p-value {bad} outside [0, 1]")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Indices sorted by increasing p-value, ties by index.
    fn order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        idx.sort_by(|&i, &j| self.values[i].total_cmp(&self.values[j]).then(i.cmp(&j)));
        idx
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionSet {
    pub rejected: Vec<bool>,
    pub k: usize,
    /// Realised cutoff on `|Z|`; `+inf` when nothing is rejected.
    pub threshold_on_z: f64,
}

impl RejectionSet {
    fn from_cut(p: &PValueVector, cut: Option<f64>) -> Self {
        let rejected: Vec<bool> = match cut {
            Some(c) => p.values.iter().map(|&v| v <= c).collect(),
            None => vec![false; p.len()],
        };
        let k = rejected.iter().filter(|&&r| r).count();
        let threshold_on_z = match cut {
            Some(c) if k > 0 => z_from_p(c),
            _ => f64::INFINITY,
        };
        Self { rejected, k, threshold_on_z }
    }

    /// Every rejection here is also a rejection in `other`.
    pub fn is_subset_of(&self, other: &RejectionSet) -> bool {
        self.rejected.len() == other.rejected.len() && self.rejected.iter().zip(&other.rejected).all(|(a, b)| !a || *b)
    }
}

fn z_from_p(p: f64) -> f64 {
    if p >= 1.0 {
        0.0
    } else if p <= 0.0 {
        f64::INFINITY
    } else {
        upper_quantile(0.5 * p).unwrap_or(f64::INFINITY)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// `p_i = 2 (1 - Phi(|z_i|))`.
pub fn pvalues_from_z(z: &[f64]) -> Result<PValueVector> {
    if let Some(bad) = z.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite z statistic {bad}")));
    }
    Ok(PValueVector { values: z.iter().map(|v| (2.0 * phi_upper(v.abs())).min(1.0)).collect() })
}

/// Cutoff `c_Bon` with `1 - Phi(c_Bon) = alpha / 2m`.
pub fn bonferroni_cutoff(m: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if m == 0 {
        return Err(Error::invalid("bonferroni needs m >= 1"));
    }
    upper_quantile(alpha / (2.0 * m as f64))
}

pub fn bonferroni(p: &PValueVector, alpha: f64) -> Result<RejectionSet> {
    let c = bonferroni_cutoff(p.len().max(1), alpha)?;
    let level = alpha / p.len().max(1) as f64;
    let rejected: Vec<bool> = p.values.iter().map(|&v| v <= level).collect();
    let k = rejected.iter().filter(|&&r| r).count();
    Ok(RejectionSet { rejected, k, threshold_on_z: c })
}

/// Benjamini-Hochberg step-up. Ties with the last rejected p-value are rejected too.
pub fn bh_step_up(p: &PValueVector, alpha: f64) -> Result<RejectionSet> {
    check_alpha(alpha)?;
    let m = p.len() as f64;
    let order = p.order();
    let k_f = order
        .iter()
        .enumerate()
        .rev()
        .find(|(i, &j)| p.values[j] <= (*i as f64 + 1.0) * alpha / m)
        .map(|(i, _)| i + 1)
        .unwrap_or(0);
    let cut = (k_f > 0).then(|| p.values[order[k_f - 1]]);
    Ok(RejectionSet::from_cut(p, cut))
}

/// Step-down: `k_G = min{i : p_(i) > i alpha / m}` (or `m + 1`), reject `k_G - 1`.
pub fn sd_step_down(p: &PValueVector, alpha: f64) -> Result<RejectionSet> {
    check_alpha(alpha)?;
    let m = p.len() as f64;
    let order = p.order();
    let k_g = order
        .iter()
        .enumerate()
        .find(|(i, &j)| p.values[j] > (*i as f64 + 1.0) * alpha / m)
        .map(|(i, _)| i + 1)
        .unwrap_or(order.len() + 1);
    let cut = (k_g > 1).then(|| p.values[order[k_g - 2]]);
    Ok(RejectionSet::from_cut(p, cut))
}

/// `c_BH = min(c_Bon, c_hat)` where `c_hat` is the smallest `y` with
/// `2 (1 - Phi(y)) <= alpha #{|z_i| >= y} / m`. Thresholding `|z|` at the
/// result reproduces the step-up rejections.
pub fn random_threshold_bh(z: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if z.is_empty() {
        return Err(Error::invalid("random_threshold_bh needs at least one statistic"));
    }
    if let Some(bad) = z.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite z statistic {bad}")));
    }
    let m = z.len();
    let mut abs: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    abs.sort_by(|a, b| b.total_cmp(a));
    let c_bon = bonferroni_cutoff(m, alpha)?;
    // while y runs over (abs[k], abs[k-1]] the count #{|z| >= y} equals k
    let mut best = f64::INFINITY;
    for k in 1..=m {
        let top = abs[k - 1];
        let need = upper_quantile(alpha * k as f64 / (2.0 * m as f64))?;
        if need <= top {
            let floor = if k < m { abs[k] } else { 0.0 };
            if need > floor {
                best = best.min(need);
            } else {
                // the infimum sits on the open end; take the smallest feasible statistic
                best = best.min(abs[..k].iter().copied().filter(|&v| v > floor).fold(top, f64::min));
            }
        }
    }
    Ok(best.min(c_bon))
}

/// Probability under the alternative of landing outside `(-c s, c s)`.
fn alt_rejection(model: &TwoGroupsModel, c: f64, spec: &QuadratureSpec) -> Result<f64> {
    let s = model.mean_sd();
    Ok(1.0 - model.prior().acceptance_mass(-c * s, c * s, s, spec)?)
}

/// Bayesian FDR of the symmetric rule `|Z| >= c`.
pub fn bfdr(model: &TwoGroupsModel, c: f64) -> Result<f64> {
    bfdr_with(model, c, &QuadratureSpec::default())
}

pub fn bfdr_with(model: &TwoGroupsModel, c: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(Error::invalid(format!("bfdr: c must be >= 0, got {c}")));
    }
    let p = model.p();
    if c == 0.0 {
        return Ok(1.0 - p);
    }
    let null = (1.0 - p) * 2.0 * phi_upper(c);
    let alt = p * alt_rejection(model, c, spec)?;
    if null + alt == 0.0 {
        return Ok(0.0);
    }
    Ok(null / (null + alt))
}

const C_MAX: f64 = 50.0;

/// Solves `bfdr(c) = alpha` for `0 < alpha < 1 - p`.
pub fn bfdr_threshold(model: &TwoGroupsModel, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    if alpha >= 1.0 - model.p() {
        return Err(Error::NoSolution(format!(
            "BFDR never falls to alpha = {alpha}: need alpha < 1 - p = {}",
            1.0 - model.p()
        )));
    }
    let spec = QuadratureSpec::default();
    let mut hi = 1.0;
    while bfdr_with(model, hi, &spec)? >= alpha {
        if hi >= C_MAX {
            return Err(Error::domain(format!("BFDR stays above {alpha} up to c = {C_MAX}")));
        }
        hi = (2.0 * hi).min(C_MAX);
    }
    solve_monotone(|c| bfdr_with(model, c, &spec).map(|v| v - alpha), hi)
}

fn solve_monotone<F: Fn(f64) -> Result<f64>>(f: F, hi: f64) -> Result<f64> {
    let spec = RootSpec { x_tol: 1e-13, f_tol: 1e-12, max_iter: 400 };
    let mut failure = None;
    let root = find_root(
        |c| match f(c) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        hi,
        &spec,
    );
    match failure {
        Some(e) => Err(e),
        None => root,
    }
}

/// Leading-order BFDR cutoff
/// `c^2 = 2 log(f/alpha) - log(2 log(f/alpha)) + 2 log(sqrt(2) (1 - alpha_inf) / (sqrt(pi) C1))`.
pub fn bfdr_threshold_asymptotic(
    model: &TwoGroupsModel,
    params: &AsymptoticParams,
    alpha: f64,
    alpha_inf: f64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || !(0.0..1.0).contains(&alpha_inf) {
        return Err(Error::invalid(format!("need alpha in (0,1) and alpha_inf in [0,1), got {alpha}, {alpha_inf}")));
    }
    if !(params.c1 > 0.0) {
        return Err(Error::domain("C1 = 0: the prior puts all its mass inside (-T, T)"));
    }
    let l = (model.f() / alpha).ln();
    if !(l > 1.0) {
        return Err(Error::domain(format!("need f / alpha > e, got log(f/alpha) = {l}")));
    }
    let c2 = 2.0 * l - (2.0 * l).ln()
        + 2.0 * (std::f64::consts::SQRT_2 * (1.0 - alpha_inf) / (std::f64::consts::PI.sqrt() * params.c1)).ln();
    if !(c2 > 0.0) {
        return Err(Error::domain(format!("asymptotic c^2 = {c2} is not positive")));
    }
    Ok(c2.sqrt())
}

/// Solves `2 (1 - Phi(c)) / (1 - F(c)) = alpha` with `F` the marginal cdf of `|Z|`.
pub fn gw_threshold(model: &TwoGroupsModel, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let spec = QuadratureSpec::default();
    let h = |c: f64| -> Result<f64> {
        if c == 0.0 {
            return Ok(1.0 - alpha);
        }
        let sf = model.marginal_abs_z_sf(c, &spec)?;
        if !(sf > 0.0) {
            return Err(Error::domain(format!("marginal tail of |Z| underflows at c = {c}")));
        }
        Ok(2.0 * phi_upper(c) / sf - alpha)
    };
    let mut hi = 1.0;
    while h(hi)? > 0.0 {
        if hi >= C_MAX {
            return Err(Error::domain(format!("GW equation has no solution in [0, {C_MAX}]")));
        }
        hi = (2.0 * hi).min(C_MAX);
    }
    solve_monotone(h, hi)
}
