//! End-to-end acceptance checks. Each test prints one `criterion N: PASS|FAIL` line.
//!
//! Run with `cargo test -p sparse-oracle --test acceptance -- --nocapture` to see them.

use sparse_oracle::experiment::{
    part2_p, run_scenario, run_scenario_raw, sweep_part1, write_csv, Manifest, Method, MetricsSummary, NoiseMode,
    ReplicateResult, ScenarioConfig, PART1_P_GRID, PART2_M_GRID,
};
use sparse_oracle::verify::{
    bfdr_gaps, exhaustive_mismatches, lower_cutoff_ratios, nesting_violations, threshold_mismatches, VerifyOptions,
};

const REPLICATES: usize = 10_000;
const SEED: u64 = 20_110_101;

const ORACLE_FDR_256: (f64, f64) = (0.08, 0.015);
const ORACLE_FDR_1024: (f64, f64) = (0.03, 0.01);
const BH_FDR_BAND: (f64, f64) = (0.035, 0.055);
const MBIC_FDR_SPARSE: (f64, f64) = (0.043, 0.01);
const MBIC_FDR_DENSE: (f64, f64) = (0.0015, 0.002);
const RATIO_CAP_4096: f64 = 1.15;
/// A step up in the MP ratio counts as an increase only beyond this many standard errors.
const RATIO_NOISE_SE: f64 = 2.0;
const BFDR_GAP_MAX: f64 = 0.05;
const RATIO_BAND: (f64, f64) = (0.95, 1.05);

fn report(n: u32, passed: bool, detail: String) {
    println!("criterion {n}: {} {detail}", if passed { "PASS" } else { "FAIL" });
}

fn summary_of(cfg: &ScenarioConfig, method: Method) -> MetricsSummary {
    run_scenario(&ScenarioConfig { methods: vec![method], ..cfg.clone() }).unwrap()[0].1
}

fn known(m_total: usize, p: f64) -> ScenarioConfig {
    ScenarioConfig { m_total, p, replicates: REPLICATES, seed: SEED, ..Default::default() }
}

#[test]
fn criterion_01_oracle_fdr_endpoint() {
    let start = std::time::Instant::now();
    let fdr_256 = summary_of(&known(256, 0.2), Method::Oracle);
    let elapsed = start.elapsed();
    let fdr_1024 = summary_of(&known(1024, 0.2), Method::Oracle);
    let ok_256 = (fdr_256.fdr - ORACLE_FDR_256.0).abs() <= ORACLE_FDR_256.1;
    let ok_1024 = (fdr_1024.fdr - ORACLE_FDR_1024.0).abs() <= ORACLE_FDR_1024.1;
    let ok_time = elapsed.as_secs() < 600;
    // same rule at one tenth of the prior variance, for comparison only
    let small = ScenarioConfig { tau2: 0.09, ..known(256, 0.2) };
    let small_1024 = ScenarioConfig { tau2: 0.09, ..known(1024, 0.2) };
    let alt = (summary_of(&small, Method::Oracle), summary_of(&small_1024, Method::Oracle));
    report(
        1,
        ok_256 && ok_1024 && ok_time,
        format!(
            "oracle FDR m=256: {:.4} (se {:.4}, target {}±{}), m=1024: {:.4} (se {:.4}, target {}±{}), {:.1}s; \
             with tau2=0.09: {:.4} / {:.4}, power {:.3} / {:.3}",
            fdr_256.fdr,
            fdr_256.fdr_se,
            ORACLE_FDR_256.0,
            ORACLE_FDR_256.1,
            fdr_1024.fdr,
            fdr_1024.fdr_se,
            ORACLE_FDR_1024.0,
            ORACLE_FDR_1024.1,
            elapsed.as_secs_f64(),
            alt.0.fdr,
            alt.1.fdr,
            alt.0.power.unwrap(),
            alt.1.power.unwrap(),
        ),
    );
    assert!(ok_256 && ok_1024 && ok_time, "oracle FDR {:.4} / {:.4}", fdr_256.fdr, fdr_1024.fdr);
}

#[test]
fn criterion_02_bh_fdr_flat() {
    let mut values = vec![];
    for &p in &PART1_P_GRID {
        values.push(summary_of(&known(256, p), Method::Bh).fdr);
    }
    let ok = values.iter().all(|&v| v >= BH_FDR_BAND.0 && v <= BH_FDR_BAND.1);
    report(2, ok, format!("BH FDR over p grid {values:.4?}, band {BH_FDR_BAND:?}"));
    assert!(ok);
}

#[test]
fn criterion_03_mbic_fdr_collapse() {
    let sparse = summary_of(&known(256, 0.001), Method::Mbic);
    let dense = summary_of(&known(256, 0.2), Method::Mbic);
    let ok = (sparse.fdr - MBIC_FDR_SPARSE.0).abs() <= MBIC_FDR_SPARSE.1
        && (dense.fdr - MBIC_FDR_DENSE.0).abs() <= MBIC_FDR_DENSE.1;
    report(
        3,
        ok,
        format!(
            "mBIC FDR p=0.001: {:.4} (se {:.4}), p=0.2: {:.5} (se {:.5})",
            sparse.fdr, sparse.fdr_se, dense.fdr, dense.fdr_se
        ),
    );
    assert!(ok);
}

/// MP ratio of `slot` to the oracle with a paired delta-method standard error.
fn mp_ratio(raw: &[Vec<ReplicateResult>], slot: usize, oracle: usize) -> (f64, f64) {
    let n = raw.len() as f64;
    let x: Vec<f64> = raw.iter().map(|r| (r[slot].fp + r[slot].fn_) as f64).collect();
    let y: Vec<f64> = raw.iter().map(|r| (r[oracle].fp + r[oracle].fn_) as f64).collect();
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let ratio = mx / my;
    let var = x.iter().zip(&y).map(|(a, b)| (a - ratio * b).powi(2)).sum::<f64>() / (n - 1.0);
    (ratio, (var / n).sqrt() / my)
}

#[test]
fn criterion_04_mp_ratio_trend() {
    let methods = vec![Method::Oracle, Method::Mbic, Method::Mbic1, Method::Mbic2, Method::Mbic3];
    let mut ratios: Vec<Vec<(f64, f64)>> = vec![vec![]; methods.len()];
    for &m_total in &PART2_M_GRID {
        let cfg = ScenarioConfig {
            m_total,
            p: part2_p(m_total, 1.0),
            sigma_mode: NoiseMode::Unknown,
            methods: methods.clone(),
            replicates: REPLICATES,
            seed: SEED,
            ..Default::default()
        };
        let raw = run_scenario_raw(&cfg).unwrap();
        for (slot, r) in ratios.iter_mut().enumerate().skip(1) {
            r.push(mp_ratio(&raw, slot, 0));
        }
    }
    let mut ok = true;
    let mut lines = vec![];
    for slot in 1..methods.len() {
        let r = &ratios[slot];
        let no_real_increase = r.windows(2).all(|w| w[1].0 - w[0].0 <= RATIO_NOISE_SE * (w[0].1.hypot(w[1].1)));
        let net_decrease = r.last().unwrap().0 < r[0].0;
        let capped = methods[slot] == Method::Mbic || r.last().unwrap().0 < RATIO_CAP_4096;
        ok &= no_real_increase && net_decrease && capped;
        lines.push(format!(
            "{} [{}]",
            methods[slot],
            r.iter().map(|(v, s)| format!("{v:.3}±{s:.3}")).collect::<Vec<_>>().join(", ")
        ));
    }
    report(4, ok, format!("MP/oracle for m in {PART2_M_GRID:?}: {}", lines.join("; ")));
    assert!(ok);
}

#[test]
fn criterion_05_fdr_penalty_sandwich() {
    let (bad, total) = nesting_violations(&VerifyOptions { instances: 10_000, seed: SEED }, 0.05).unwrap();
    report(5, bad == 0, format!("{bad} violations in {total} instances"));
    assert_eq!(bad, 0);
}

#[test]
fn criterion_06_mbic_threshold_equivalence() {
    let (bad, total) = threshold_mismatches(&VerifyOptions { instances: 10_000, seed: SEED }).unwrap();
    report(6, bad == 0, format!("{bad} mismatches in {total} instances"));
    assert_eq!(bad, 0);
}

#[test]
fn criterion_07_bfdr_asymptotic_gap() {
    let gaps = bfdr_gaps().unwrap();
    let ok = gaps.windows(2).all(|w| w[1] < w[0]) && gaps[2] < BFDR_GAP_MAX;
    report(7, ok, format!("relative gaps at n = 1e3, 1e4, 1e5: {gaps:.5?}"));
    assert!(ok);
}

#[test]
fn criterion_08_lower_cutoff_ratio() {
    let ratios = lower_cutoff_ratios().unwrap();
    let last = ratios[2];
    let ok = last >= RATIO_BAND.0 && last <= RATIO_BAND.1;
    report(8, ok, format!("ratios at n = 1e3, 1e4, 1e5: {ratios:.5?}"));
    assert!(ok);
}

#[test]
fn criterion_09_exhaustive_equivalence() {
    let (bad, total) = exhaustive_mismatches(100, SEED).unwrap();
    report(9, bad == 0, format!("{bad} mismatches in {total} datasets"));
    assert_eq!(bad, 0);
}

#[test]
fn criterion_10_deterministic_csv() {
    let base = ScenarioConfig { replicates: 40, seed: SEED, ..Default::default() };
    let render = || {
        let rows = sweep_part1(&base, &[NoiseMode::Known, NoiseMode::Unknown]).unwrap();
        let mut out = Vec::new();
        write_csv(&mut out, &rows, &Manifest::new(SEED, "acceptance", "part1")).unwrap();
        out
    };
    let first = render();
    let second = render();
    let ok = first == second && !first.is_empty();
    report(10, ok, format!("{} bytes, identical: {}", first.len(), first == second));
    assert!(ok);
}
