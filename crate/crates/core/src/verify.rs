//! Named property suites with per-check margins, for the `verify` command.

use crate::error::{Error, Result};
use crate::model::{AsymptoticParams, EffectPrior, TwoGroupsModel};
use crate::oracle::{lower_cutoff_ratio, oracle_thresholds_asymptotic, oracle_thresholds_exact};
use crate::regression::{
    fdr_nesting_check, hadamard_design, mbic_threshold_set, select_exhaustive, select_nested, Criterion, Family,
    RegressionData, SigmaMode,
};
use crate::rules::{bfdr_threshold, bfdr_threshold_asymptotic, bh_step_up, pvalues_from_z, random_threshold_bh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Asymptotics,
    Nesting,
    OracleEquivalence,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asymptotics" => Ok(Suite::Asymptotics),
            "nesting" => Ok(Suite::Nesting),
            "oracle-equivalence" => Ok(Suite::OracleEquivalence),
            other => Err(Error::invalid(format!(
                "unknown suite `{other}` (expected asymptotics, nesting or oracle-equivalence)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub instances: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { instances: 10_000, seed: 1 }
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<Report> {
    let checks = match suite {
        Suite::Asymptotics => asymptotics()?,
        Suite::Nesting => nesting(opts)?,
        Suite::OracleEquivalence => oracle_equivalence(opts)?,
    };
    Ok(Report { checks })
}

/// `p = 1/n`, normal prior with `tau2 = 0.9`.
pub fn sparse_sequence_model(n: u64) -> Result<TwoGroupsModel> {
    TwoGroupsModel::with_unit_loss(1.0 / n as f64, 1.0, n, EffectPrior::normal(0.9)?)
}

pub const SEQUENCE_N: [u64; 3] = [1_000, 10_000, 100_000];

/// Relative gaps `|c_exact - c_asym| / c_exact` of the BFDR cutoff at `alpha = n^-1/2`.
pub fn bfdr_gaps() -> Result<Vec<f64>> {
    SEQUENCE_N
        .iter()
        .map(|&n| {
            let model = sparse_sequence_model(n)?;
            let params = AsymptoticParams::new(0.0, &model)?;
            let alpha = (n as f64).powf(-0.5);
            let exact = bfdr_threshold(&model, alpha)?;
            let asym = bfdr_threshold_asymptotic(&model, &params, alpha, 0.0)?;
            Ok((exact - asym).abs() / exact)
        })
        .collect()
}

/// Lower-cutoff ratios along the sparse sequence using the exact cutoffs.
pub fn lower_cutoff_ratios() -> Result<Vec<f64>> {
    SEQUENCE_N
        .iter()
        .map(|&n| {
            let model = sparse_sequence_model(n)?;
            lower_cutoff_ratio(&model, oracle_thresholds_exact(&model)?.a)
        })
        .collect()
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn asymptotics() -> Result<Vec<Check>> {
    let mut checks = vec![];
    let ratios = lower_cutoff_ratios()?;
    let last = *ratios.last().unwrap();
    checks.push(Check {
        name: "lower-cutoff ratio at n = 1e5".into(),
        passed: (last - 1.0).abs() <= 0.05,
        detail: format!("ratios {ratios:.5?}, margin {:.4}", 0.05 - (last - 1.0).abs()),
    });
    let gaps = bfdr_gaps()?;
    checks.push(Check {
        name: "BFDR asymptotic gap".into(),
        passed: decreasing(&gaps) && gaps[2] < 0.05,
        detail: format!("relative gaps {gaps:.5?}, margin {:.4}", 0.05 - gaps[2]),
    });
    let mut oracle_gaps = vec![];
    for &n in &SEQUENCE_N {
        let model = sparse_sequence_model(n)?;
        let exact = oracle_thresholds_exact(&model)?;
        let asym = oracle_thresholds_asymptotic(&model, &AsymptoticParams::new(0.0, &model)?)?;
        oracle_gaps.push(((exact.a - asym.a) / exact.a).abs());
    }
    checks.push(Check {
        name: "oracle cutoff asymptotic gap".into(),
        passed: decreasing(&oracle_gaps),
        detail: format!("relative gaps {oracle_gaps:.5?}"),
    });
    Ok(checks)
}

/// Random Hadamard regression with normal effects on a random support.
pub fn random_instance(rng: &mut ChaCha8Rng, sizes: &[usize]) -> Result<RegressionData> {
    let m_total = sizes[rng.random_range(0..sizes.len())];
    let p: f64 = rng.random_range(0.0..0.4);
    let tau: f64 = rng.random_range(0.05..1.5);
    let mut beta = vec![0.0; m_total];
    for b in beta.iter_mut().skip(1) {
        if rng.random::<f64>() < p {
            *b = tau * rng.sample::<f64, _>(StandardNormal);
        }
    }
    RegressionData::generate(hadamard_design(m_total)?, beta, 1.0, rng)
}

fn instance_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Counts instances where SD, FDR-penalised selection and BH fail to nest.
pub fn nesting_violations(opts: &VerifyOptions, alpha: f64) -> Result<(usize, usize)> {
    let mut violations = 0;
    for i in 0..opts.instances {
        let mut rng = instance_rng(opts.seed, i as u64);
        let data = random_instance(&mut rng, &[16, 32, 64, 128, 256])?;
        let check = fdr_nesting_check(&data, alpha)?;
        if !(check.sets_nested && check.k_g_minus_1 <= check.k_sel && check.k_sel <= check.k_f) {
            violations += 1;
        }
    }
    Ok((violations, opts.instances))
}

fn nesting(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let (bad, total) = nesting_violations(opts, 0.05)?;
    Ok(vec![Check {
        name: "SD within FDR_PEN within BH".into(),
        passed: bad == 0,
        detail: format!("{bad} violations in {total} instances"),
    }])
}

/// Instances where known-sigma mBIC differs from fixed thresholding.
pub fn threshold_mismatches(opts: &VerifyOptions) -> Result<(usize, usize)> {
    let mut bad = 0;
    for i in 0..opts.instances {
        let mut rng = instance_rng(opts.seed ^ 0x5eed, i as u64);
        let data = random_instance(&mut rng, &[16, 64, 256, 1024])?;
        let crit = Criterion::new(Family::Mbic, SigmaMode::Known(1.0), data.m() + 1);
        if select_nested(&crit, &data)?.included != mbic_threshold_set(&data, 1.0, crit.constant) {
            bad += 1;
        }
    }
    Ok((bad, opts.instances))
}

/// Datasets (out of `datasets`) where nested and exhaustive search disagree,
/// over all k-only penalty families with known sigma.
pub fn exhaustive_mismatches(datasets: usize, seed: u64) -> Result<(usize, usize)> {
    let mut bad = 0;
    for i in 0..datasets {
        let mut rng = instance_rng(seed ^ 0xe4a5, i as u64);
        let data = random_instance(&mut rng, &[4, 8, 16])?;
        for family in [Family::Mbic, Family::Mbic1, Family::Mbic2, Family::Mbic3, Family::FdrPen] {
            let crit = Criterion::new(family, SigmaMode::Known(1.0), data.m() + 1);
            if select_nested(&crit, &data)?.included != select_exhaustive(&crit, &data)?.included {
                bad += 1;
                break;
            }
        }
    }
    Ok((bad, datasets))
}

fn oracle_equivalence(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut checks = vec![];
    let (bad, total) = threshold_mismatches(opts)?;
    checks.push(Check {
        name: "known-sigma mBIC equals thresholding".into(),
        passed: bad == 0,
        detail: format!("{bad} mismatches in {total} instances"),
    });
    let (bad, total) = exhaustive_mismatches(100, opts.seed)?;
    checks.push(Check {
        name: "nested path equals exhaustive search".into(),
        passed: bad == 0,
        detail: format!("{bad} mismatches in {total} datasets"),
    });
    let mut bad = 0;
    let trials = opts.instances.min(1000);
    for i in 0..trials {
        let mut rng = instance_rng(opts.seed ^ 0xb4, i as u64);
        let m = rng.random_range(1..300);
        let z: Vec<f64> = (0..m).map(|_| 1.5 * rng.sample::<f64, _>(StandardNormal)).collect();
        let c = random_threshold_bh(&z, 0.05)?;
        let bh = bh_step_up(&pvalues_from_z(&z)?, 0.05)?;
        if z.iter().map(|v| v.abs() >= c).collect::<Vec<_>>() != bh.rejected {
            bad += 1;
        }
    }
    checks.push(Check {
        name: "random BH threshold reproduces step-up".into(),
        passed: bad == 0,
        detail: format!("{bad} mismatches in {trials} instances"),
    });
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_on_small_runs() {
        let opts = VerifyOptions { instances: 300, seed: 9 };
        for suite in [Suite::Nesting, Suite::OracleEquivalence] {
            let report = run_suite(suite, &opts).unwrap();
            assert!(report.passed(), "{report}");
        }
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!("speed".parse::<Suite>().is_err());
        assert_eq!("oracle-equivalence".parse::<Suite>().unwrap(), Suite::OracleEquivalence);
    }
}
