//! WebAssembly bindings for the static page in `www/`.
//!
//! Every export returns a JSON string; the plain Rust functions underneath
//! are what the tests exercise.

use serde::Serialize;
use sparse_oracle::experiment::{run_scenario, Method, NoiseMode, ScenarioConfig};
use sparse_oracle::model::{AsymptoticParams, EffectPrior, TwoGroupsModel};
use sparse_oracle::oracle::{oracle_thresholds_asymptotic, oracle_thresholds_exact};
use sparse_oracle::rules::{bfdr, bfdr_threshold, bonferroni_cutoff, gw_threshold};
use sparse_oracle::{Error, Result};
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct BfdrCurve {
    pub c: Vec<f64>,
    pub bfdr: Vec<f64>,
    /// Absent when `alpha >= 1 - p`.
    pub bfdr_cutoff: Option<f64>,
    pub gw_cutoff: Option<f64>,
    pub bonferroni_cutoff: f64,
}

/// BFDR of `|Z| >= c` on `[0, c_max]` together with the BFDR, GW and Bonferroni cutoffs at `alpha`.
/// Bonferroni uses `m = round(1 / p)` tests.
pub fn bfdr_curve_data(p: f64, tau2: f64, alpha: f64, c_max: f64, points: usize) -> Result<BfdrCurve> {
    if !(c_max > 0.0) || !(2..=10_000).contains(&points) {
        return Err(Error::InvalidInput(format!("need c_max > 0 and 2 <= points <= 10000, got {c_max}, {points}")));
    }
    let model = TwoGroupsModel::with_unit_loss(p, 1.0, 1, EffectPrior::normal(tau2)?)?;
    let c: Vec<f64> = (0..points).map(|i| c_max * i as f64 / (points - 1) as f64).collect();
    let values = c.iter().map(|&x| bfdr(&model, x)).collect::<Result<Vec<_>>>()?;
    let bfdr_cutoff = match bfdr_threshold(&model, alpha) {
        Ok(v) => Some(v),
        Err(Error::NoSolution(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(BfdrCurve {
        c,
        bfdr: values,
        bfdr_cutoff,
        gw_cutoff: gw_threshold(&model, alpha).ok(),
        bonferroni_cutoff: bonferroni_cutoff((1.0 / p).round().max(1.0) as usize, alpha)?,
    })
}

#[derive(Debug, Serialize)]
pub struct OracleCutoffs {
    pub n: u64,
    pub exact_a: f64,
    pub exact_b: f64,
    pub asymptotic_a: f64,
    pub asymptotic_b: f64,
}

/// Exact and leading-order oracle cutoffs (z scale) for `n = 10^2 .. 10^max_exponent`, `p = 1/n`.
pub fn oracle_sequence_data(tau2: f64, max_exponent: u32) -> Result<Vec<OracleCutoffs>> {
    if !(2..=7).contains(&max_exponent) {
        return Err(Error::InvalidInput(format!("max_exponent must lie in 2..=7, got {max_exponent}")));
    }
    let prior = EffectPrior::normal(tau2)?;
    (2..=max_exponent)
        .map(|k| {
            let n = 10u64.pow(k);
            let model = TwoGroupsModel::with_unit_loss(1.0 / n as f64, 1.0, n, prior.clone())?;
            let exact = oracle_thresholds_exact(&model)?;
            let asym = oracle_thresholds_asymptotic(&model, &AsymptoticParams::new(0.0, &model)?)?;
            let (ea, eb) = exact.c_scaled(&model);
            let (aa, ab) = asym.c_scaled(&model);
            Ok(OracleCutoffs { n, exact_a: -ea, exact_b: eb, asymptotic_a: -aa, asymptotic_b: ab })
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct MethodRow {
    pub method: &'static str,
    pub mp: f64,
    pub fdr: f64,
    pub power: Option<f64>,
}

/// A small single-scenario simulation, capped at `m = 1024` and 2000 replicates.
pub fn simulate_data(m: usize, p: f64, replicates: usize, seed: u64, unknown_sigma: bool) -> Result<Vec<MethodRow>> {
    if m > 1024 || replicates > 2000 {
        return Err(Error::InvalidInput("the demo is limited to m <= 1024 and 2000 replicates".into()));
    }
    let cfg = ScenarioConfig {
        m_total: m,
        p,
        replicates,
        seed,
        sigma_mode: if unknown_sigma { NoiseMode::Unknown } else { NoiseMode::Known },
        methods: Method::ALL.to_vec(),
        ..Default::default()
    };
    cfg.validate()?;
    Ok(run_scenario(&cfg)?
        .into_iter()
        .map(|(method, s)| MethodRow { method: method.name(), mp: s.mp, fdr: s.fdr, power: s.power })
        .collect())
}

fn to_js<T: Serialize>(value: Result<T>) -> std::result::Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn bfdr_curve(p: f64, tau2: f64, alpha: f64, c_max: f64, points: usize) -> std::result::Result<String, JsError> {
    to_js(bfdr_curve_data(p, tau2, alpha, c_max, points))
}

#[wasm_bindgen]
pub fn oracle_sequence(tau2: f64, max_exponent: u32) -> std::result::Result<String, JsError> {
    to_js(oracle_sequence_data(tau2, max_exponent))
}

#[wasm_bindgen]
pub fn simulate(
    m: usize,
    p: f64,
    replicates: usize,
    seed: u64,
    unknown_sigma: bool,
) -> std::result::Result<String, JsError> {
    to_js(simulate_data(m, p, replicates, seed, unknown_sigma))
}
