//! Seeded Monte-Carlo study of selection rules on Hadamard regressions.
//!
//! Each replicate draws `k*` signal positions, gives them `N(0, tau2)`
//! coefficients, adds `N(0, sigma^2)` noise and runs every configured method
//! on the same data. Replicate `i` of a scenario always uses ChaCha stream `i`
//! under a key derived from `(seed, m_total, p)`, so results do not depend on
//! thread scheduling.

mod csv;

pub use csv::{config_hash, format_number, write_csv, Manifest, CSV_HEADER};

use crate::error::{Error, Result};
use crate::regression::{
    hadamard_design, oracle_select_with_sigma, select_nested_with, simple_regression_tests, Criterion, Family,
    RegressionData, SigmaMode,
};
use crate::rules::{bh_step_up, sd_step_down};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Method {
    Oracle,
    Mbic,
    Mbic1,
    Mbic2,
    Mbic3,
    Bh,
    Sd,
}

impl Method {
    pub const ALL: [Method; 7] =
        [Method::Oracle, Method::Mbic, Method::Mbic1, Method::Mbic2, Method::Mbic3, Method::Bh, Method::Sd];

    pub fn name(self) -> &'static str {
        match self {
            Method::Oracle => "oracle",
            Method::Mbic => "mBIC",
            Method::Mbic1 => "mBIC1",
            Method::Mbic2 => "mBIC2",
            Method::Mbic3 => "mBIC3",
            Method::Bh => "BH",
            Method::Sd => "SD",
        }
    }

    fn family(self) -> Option<Family> {
        match self {
            Method::Mbic => Some(Family::Mbic),
            Method::Mbic1 => Some(Family::Mbic1),
            Method::Mbic2 => Some(Family::Mbic2),
            Method::Mbic3 => Some(Family::Mbic3),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::config(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum NoiseMode {
    Known,
    Unknown,
}

impl NoiseMode {
    pub fn name(self) -> &'static str {
        match self {
            NoiseMode::Known => "known",
            NoiseMode::Unknown => "unknown",
        }
    }
}

impl FromStr for NoiseMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "known" => Ok(NoiseMode::Known),
            "unknown" => Ok(NoiseMode::Unknown),
            other => Err(Error::config(format!("sigma mode must be `known` or `unknown`, got `{other}`"))),
        }
    }
}

/// Number of Bernoulli trials behind `k*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KStarTrials {
    /// `m_total - 1`: one trial per candidate regressor.
    Candidates,
    /// `m_total`, capped at `m_total - 1` placements.
    Columns,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub m_total: usize,
    pub p: f64,
    pub tau2: f64,
    pub sigma_mode: NoiseMode,
    pub methods: Vec<Method>,
    pub alpha: f64,
    pub replicates: usize,
    pub seed: u64,
    pub k_max_fraction: f64,
    /// Noise standard deviation of the generated data.
    pub sigma: f64,
    pub k_star_trials: KStarTrials,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            m_total: 256,
            p: 0.01,
            tau2: 0.9,
            sigma_mode: NoiseMode::Known,
            methods: Method::ALL.to_vec(),
            alpha: 0.05,
            replicates: 10_000,
            seed: 20_110_101,
            k_max_fraction: 0.3,
            sigma: 1.0,
            k_star_trials: KStarTrials::Candidates,
        }
    }
}

impl ScenarioConfig {
    /// `p = 0` is accepted and gives the global null.
    pub fn validate(&self) -> Result<()> {
        if self.m_total < 4 || !self.m_total.is_power_of_two() {
            return Err(Error::config(format!("m must be a power of two >= 4, got {}", self.m_total)));
        }
        if !(0.0..1.0).contains(&self.p) {
            return Err(Error::config(format!("p must lie in [0, 1), got {}", self.p)));
        }
        if !(self.tau2 > 0.0 && self.tau2.is_finite()) {
            return Err(Error::config(format!("tau2 must be positive, got {}", self.tau2)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.replicates < 1 {
            return Err(Error::config("replicates must be >= 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("at least one method is required"));
        }
        if !(self.k_max_fraction > 0.0 && self.k_max_fraction <= 1.0) {
            return Err(Error::config(format!("k_max_fraction must lie in (0, 1], got {}", self.k_max_fraction)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.sigma_mode == NoiseMode::Unknown && self.k_max() + 2 > self.m_total {
            return Err(Error::config("k_max_fraction leaves no residual degrees of freedom"));
        }
        Ok(())
    }

    /// Largest model size considered in unknown-sigma mode.
    pub fn k_max(&self) -> usize {
        match self.sigma_mode {
            NoiseMode::Known => self.m_total - 1,
            NoiseMode::Unknown => ((self.k_max_fraction * self.m_total as f64).floor() as usize).min(self.m_total - 1),
        }
    }

    fn criterion_sigma(&self) -> SigmaMode {
        match self.sigma_mode {
            NoiseMode::Known => SigmaMode::Known(self.sigma),
            NoiseMode::Unknown => SigmaMode::Unknown,
        }
    }

    /// Key of the scenario's random streams.
    pub fn stream_key(&self) -> u64 {
        splitmix64(splitmix64(self.seed ^ splitmix64(self.m_total as u64)) ^ self.p.to_bits())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReplicateResult {
    pub method: Method,
    pub fp: usize,
    pub fn_: usize,
    pub k_star: usize,
}

/// The dataset of replicate `index`.
pub fn replicate_data(cfg: &ScenarioConfig, index: u64) -> Result<RegressionData> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.stream_key());
    rng.set_stream(index);
    let m = cfg.m_total - 1;
    let trials = match cfg.k_star_trials {
        KStarTrials::Candidates => m,
        KStarTrials::Columns => cfg.m_total,
    };
    let k_star = Binomial::new(trials as u64, cfg.p)
        .map_err(|e| Error::config(format!("binomial draw: {e}")))?
        .sample(&mut rng) as usize;
    let k_star = k_star.min(m);
    let tau = cfg.tau2.sqrt();
    let mut beta = vec![0.0; cfg.m_total];
    for j in sample(&mut rng, m, k_star).into_iter() {
        let mut b = 0.0;
        while b == 0.0 {
            b = tau * rng.sample::<f64, _>(StandardNormal);
        }
        beta[j + 1] = b;
    }
    RegressionData::generate(hadamard_design(cfg.m_total)?, beta, cfg.sigma, &mut rng)
}

/// Reusable per-scenario state: criteria and their penalty tables.
struct Prepared {
    criteria: Vec<(Method, Criterion, Vec<f64>)>,
}

impl Prepared {
    fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let mut criteria = vec![];
        for &method in &cfg.methods {
            if let Some(family) = method.family() {
                let crit = Criterion::new(family, cfg.criterion_sigma(), cfg.m_total).with_k_max(cfg.k_max());
                crit.validate(cfg.m_total, cfg.m_total)?;
                let pen = crit.penalty_path(cfg.m_total, cfg.m_total - 1)?;
                criteria.push((method, crit, pen));
            }
        }
        Ok(Self { criteria })
    }
}

fn count_errors(selected: &[bool], truth: &[bool], method: Method, k_star: usize) -> ReplicateResult {
    let mut fp = 0;
    let mut fn_ = 0;
    for (&s, &t) in selected.iter().zip(truth) {
        match (s, t) {
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    ReplicateResult { method, fp, fn_, k_star }
}

fn run_prepared(cfg: &ScenarioConfig, prepared: &Prepared, index: u64) -> Result<Vec<ReplicateResult>> {
    let data = replicate_data(cfg, index)?;
    let truth = data.true_support();
    let mut tests = None;
    let mut out = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let selected = match method {
            Method::Oracle => oracle_select_with_sigma(&data, cfg.p, cfg.tau2, cfg.sigma)?.included,
            Method::Bh | Method::Sd => {
                if tests.is_none() {
                    tests = Some(simple_regression_tests(&data, cfg.criterion_sigma())?);
                }
                let p = &tests.as_ref().unwrap().pvalues;
                let set = if method == Method::Bh { bh_step_up(p, cfg.alpha)? } else { sd_step_down(p, cfg.alpha)? };
                set.rejected
            }
            _ => {
                let (_, crit, pen) = prepared.criteria.iter().find(|(m, _, _)| *m == method).expect("prepared");
                select_nested_with(crit, &data, pen)?.included
            }
        };
        out.push(count_errors(&selected, &truth, method, data.k_star));
    }
    Ok(out)
}

/// Runs every configured method on replicate `index`.
pub fn run_replicate(cfg: &ScenarioConfig, index: u64) -> Result<Vec<ReplicateResult>> {
    cfg.validate()?;
    run_prepared(cfg, &Prepared::new(cfg)?, index)
}

/// All replicates of a scenario, in replicate order.
pub fn run_scenario_raw(cfg: &ScenarioConfig) -> Result<Vec<Vec<ReplicateResult>>> {
    cfg.validate()?;
    let prepared = Prepared::new(cfg)?;
    let indices = 0..cfg.replicates as u64;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        indices.into_par_iter().map(|i| run_prepared(cfg, &prepared, i)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        indices.map(|i| run_prepared(cfg, &prepared, i)).collect()
    }
}

/// Per-method summaries, in the configured method order.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<(Method, MetricsSummary)>> {
    let raw = run_scenario_raw(cfg)?;
    cfg.methods
        .iter()
        .enumerate()
        .map(|(slot, &method)| {
            let column: Vec<ReplicateResult> = raw.iter().map(|r| r[slot]).collect();
            Ok((method, aggregate(&column, cfg.m_total)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsSummary {
    pub mp: f64,
    pub fdr: f64,
    /// `None` when no replicate had a true signal.
    pub power: Option<f64>,
    pub mp_se: f64,
    pub fdr_se: f64,
    pub power_se: Option<f64>,
    pub n_power_replicates: usize,
    pub replicates: usize,
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-replicate `MP = (FP + FN)/(m_total - 1)`, `FDR = FP/(FP + k* - FN)` (0 without
/// discoveries) and `Power = (k* - FN)/k*` (only when `k* > 0`), averaged.
pub fn aggregate(results: &[ReplicateResult], m_total: usize) -> Result<MetricsSummary> {
    if results.is_empty() {
        return Err(Error::invalid("aggregate needs at least one replicate"));
    }
    if m_total < 2 {
        return Err(Error::invalid("aggregate needs m_total >= 2"));
    }
    let m = (m_total - 1) as f64;
    let mut mp = Vec::with_capacity(results.len());
    let mut fdr = Vec::with_capacity(results.len());
    let mut power = Vec::new();
    for r in results {
        if r.fn_ > r.k_star || r.fp + r.k_star > m_total - 1 {
            return Err(Error::invalid(format!("inconsistent replicate counts {r:?}")));
        }
        mp.push((r.fp + r.fn_) as f64 / m);
        let discoveries = r.fp + r.k_star - r.fn_;
        fdr.push(if discoveries == 0 { 0.0 } else { r.fp as f64 / discoveries as f64 });
        if r.k_star > 0 {
            power.push((r.k_star - r.fn_) as f64 / r.k_star as f64);
        }
    }
    let (mp, mp_se) = mean_and_se(&mp);
    let (fdr, fdr_se) = mean_and_se(&fdr);
    let (power_mean, power_se) = if power.is_empty() {
        (None, None)
    } else {
        let (a, b) = mean_and_se(&power);
        (Some(a), Some(b))
    };
    Ok(MetricsSummary {
        mp,
        fdr,
        power: power_mean,
        mp_se,
        fdr_se,
        power_se,
        n_power_replicates: power.len(),
        replicates: results.len(),
    })
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioRow {
    pub scenario_id: String,
    pub method: Method,
    pub m_total: usize,
    pub n: usize,
    pub p: f64,
    pub beta_exponent: Option<f64>,
    pub sigma_mode: NoiseMode,
    pub alpha: f64,
    pub replicates: usize,
    pub seed: u64,
    pub summary: MetricsSummary,
}

pub const PART1_P_GRID: [f64; 7] = [0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2];
pub const PART1_M_GRID: [usize; 2] = [256, 1024];
pub const PART2_M_GRID: [usize; 6] = [128, 256, 512, 1024, 2048, 4096];
pub const PART2_BETA_GRID: [f64; 4] = [1.0, 0.5, 0.25, 0.125];

/// `p = c_beta m^-beta` with `c_beta = 0.125 * 128^beta`, so every curve starts at `p = 0.125`.
pub fn part2_p(m_total: usize, beta: f64) -> f64 {
    0.125 * (128.0 / m_total as f64).powf(beta)
}

fn rows_for(cfg: &ScenarioConfig, id: String, beta: Option<f64>) -> Result<Vec<ScenarioRow>> {
    Ok(run_scenario(cfg)?
        .into_iter()
        .map(|(method, summary)| ScenarioRow {
            scenario_id: id.clone(),
            method,
            m_total: cfg.m_total,
            n: cfg.m_total,
            p: cfg.p,
            beta_exponent: beta,
            sigma_mode: cfg.sigma_mode,
            alpha: cfg.alpha,
            replicates: cfg.replicates,
            seed: cfg.seed,
            summary,
        })
        .collect())
}

/// The sparsity grid crossed with `m_total in {256, 1024}` and the given sigma modes.
pub fn sweep_part1(base: &ScenarioConfig, modes: &[NoiseMode]) -> Result<Vec<ScenarioRow>> {
    let mut rows = vec![];
    for &mode in modes {
        for &m_total in &PART1_M_GRID {
            for &p in &PART1_P_GRID {
                let cfg = ScenarioConfig { m_total, p, sigma_mode: mode, ..base.clone() };
                rows.extend(rows_for(&cfg, format!("part1-{}-m{m_total}-p{p}", mode.name()), None)?);
            }
        }
    }
    Ok(rows)
}

/// `m_total in {128, ..., 4096}` crossed with `beta in {1, 1/2, 1/4, 1/8}`.
pub fn sweep_part2(base: &ScenarioConfig, modes: &[NoiseMode]) -> Result<Vec<ScenarioRow>> {
    let mut rows = vec![];
    for &mode in modes {
        for &beta in &PART2_BETA_GRID {
            for &m_total in &PART2_M_GRID {
                let cfg = ScenarioConfig { m_total, p: part2_p(m_total, beta), sigma_mode: mode, ..base.clone() };
                rows.extend(rows_for(&cfg, format!("part2-{}-beta{beta}-m{m_total}", mode.name()), Some(beta))?);
            }
        }
    }
    Ok(rows)
}

pub fn sweep_single(base: &ScenarioConfig) -> Result<Vec<ScenarioRow>> {
    let id = format!("single-{}-m{}-p{}", base.sigma_mode.name(), base.m_total, base.p);
    rows_for(base, id, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sha2::{Digest, Sha256};

    fn quick(p: f64, mode: NoiseMode) -> ScenarioConfig {
        ScenarioConfig { m_total: 64, p, sigma_mode: mode, replicates: 50, seed: 7, ..Default::default() }
    }

    #[test]
    fn null_scenario() {
        let cfg = quick(0.0, NoiseMode::Known);
        for i in 0..20 {
            for r in run_replicate(&cfg, i).unwrap() {
                assert_eq!((r.k_star, r.fn_), (0, 0));
            }
        }
        let summaries = run_scenario(&cfg).unwrap();
        assert!(summaries.iter().all(|(_, s)| s.power.is_none() && s.n_power_replicates == 0));
    }

    #[test]
    fn oracle_is_perfect_without_noise() {
        let cfg = ScenarioConfig { sigma: 1e-6, methods: vec![Method::Oracle], ..quick(0.2, NoiseMode::Known) };
        for i in 0..50 {
            let r = run_replicate(&cfg, i).unwrap()[0];
            assert_eq!((r.fp, r.fn_), (0, 0), "replicate {i}: {r:?}");
        }
    }

    #[test]
    fn replicates_are_deterministic_and_paired() {
        let cfg = quick(0.1, NoiseMode::Unknown);
        let a = run_replicate(&cfg, 13).unwrap();
        let b = run_replicate(&cfg, 13).unwrap();
        assert_eq!(a, b);
        let hash = |d: &RegressionData| {
            let mut h = Sha256::new();
            d.y.iter().for_each(|v| h.update(v.to_le_bytes()));
            h.finalize()
        };
        let d1 = replicate_data(&cfg, 13).unwrap();
        let known = ScenarioConfig { sigma_mode: NoiseMode::Known, ..cfg.clone() };
        assert_eq!(hash(&d1), hash(&replicate_data(&known, 13).unwrap()));
        assert_ne!(hash(&d1), hash(&replicate_data(&cfg, 14).unwrap()));
        let k = a[0].k_star;
        assert!(a.iter().all(|r| r.k_star == k));
    }

    #[test]
    fn aggregate_examples() {
        let one = [ReplicateResult { method: Method::Bh, fp: 2, fn_: 1, k_star: 3 }];
        let s = aggregate(&one, 256).unwrap();
        assert!((s.mp - 3.0 / 255.0).abs() < 1e-15);
        assert_eq!(s.fdr, 0.5);
        assert!((s.power.unwrap() - 2.0 / 3.0).abs() < 1e-15);

        let perfect = [
            ReplicateResult { method: Method::Bh, fp: 0, fn_: 0, k_star: 4 },
            ReplicateResult { method: Method::Bh, fp: 0, fn_: 0, k_star: 0 },
        ];
        let s = aggregate(&perfect, 64).unwrap();
        assert_eq!((s.mp, s.fdr, s.power), (0.0, 0.0, Some(1.0)));
        assert_eq!(s.n_power_replicates, 1);

        // MP = (3/15 + 1/15 + 0)/3; FDR = (1/3 + 0 + 0)/3; Power = (1/2 + 2/3)/2
        let three = [
            ReplicateResult { method: Method::Sd, fp: 1, fn_: 2, k_star: 4 },
            ReplicateResult { method: Method::Sd, fp: 0, fn_: 1, k_star: 3 },
            ReplicateResult { method: Method::Sd, fp: 0, fn_: 0, k_star: 0 },
        ];
        let s = aggregate(&three, 16).unwrap();
        assert!((s.mp - 4.0 / 45.0).abs() < 1e-15);
        assert!((s.fdr - 1.0 / 9.0).abs() < 1e-15);
        assert!((s.power.unwrap() - 7.0 / 12.0).abs() < 1e-15);
        assert!(aggregate(&[], 16).is_err());
    }

    #[test]
    fn part2_grid() {
        assert!((part2_p(4096, 1.0) - 0.00390625).abs() < 1e-18);
        assert!((part2_p(128, 0.125) - 0.125).abs() < 1e-15);
        assert!((0.125 * 128f64.powf(1.0) - 16.0).abs() < 1e-12);
    }

    #[test]
    fn part1_cardinality() {
        let base = ScenarioConfig { replicates: 2, methods: vec![Method::Oracle, Method::Bh], ..Default::default() };
        let rows = sweep_part1(&base, &[NoiseMode::Known, NoiseMode::Unknown]).unwrap();
        assert_eq!(rows.len(), 7 * 2 * 2 * 2);
    }

    #[test]
    fn config_validation() {
        assert!(ScenarioConfig { m_total: 100, ..Default::default() }.validate().is_err());
        assert!(ScenarioConfig { p: 1.0, ..Default::default() }.validate().is_err());
        assert!(ScenarioConfig { replicates: 0, ..Default::default() }.validate().is_err());
        assert!(ScenarioConfig::default().validate().is_ok());
        assert_eq!("mbic2".parse::<Method>().unwrap(), Method::Mbic2);
        assert!("lasso".parse::<Method>().is_err());
    }

    #[test]
    fn methods_never_beat_oracle_by_much() {
        let cfg = ScenarioConfig { m_total: 128, p: 0.05, replicates: 2000, seed: 3, ..Default::default() };
        let raw = run_scenario_raw(&cfg).unwrap();
        let oracle_slot = cfg.methods.iter().position(|&m| m == Method::Oracle).unwrap();
        for slot in 0..cfg.methods.len() {
            // paired differences in per-replicate MP
            let diffs: Vec<f64> = raw
                .iter()
                .map(|r| (r[slot].fp + r[slot].fn_) as f64 - (r[oracle_slot].fp + r[oracle_slot].fn_) as f64)
                .collect();
            let (mean, se) = mean_and_se(&diffs);
            assert!(mean >= -2.0 * se, "{}: {mean} (se {se})", cfg.methods[slot]);
        }
    }
}
