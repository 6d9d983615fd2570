use sparse_oracle_demo::{bfdr_curve_data, oracle_sequence_data, simulate_data};

#[test]
fn bfdr_curve_is_monotone_and_crosses_alpha_at_cutoff() {
    let curve = bfdr_curve_data(0.01, 0.9, 0.1, 6.0, 121).unwrap();
    assert_eq!(curve.c.len(), 121);
    assert_eq!(curve.bfdr[0], 0.99);
    assert!(curve.bfdr.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    let cutoff = curve.bfdr_cutoff.unwrap();
    let i = curve.c.iter().position(|&c| c > cutoff).unwrap();
    assert!(curve.bfdr[i - 1] >= 0.1 && curve.bfdr[i] < 0.1);
    assert!(curve.gw_cutoff.is_some());
    // m = 100 tests
    let tail = 0.5 * libm::erfc(curve.bonferroni_cutoff / std::f64::consts::SQRT_2);
    assert!((tail / 5e-4 - 1.0).abs() < 1e-8);
}

#[test]
fn bfdr_cutoff_absent_when_unreachable() {
    assert!(bfdr_curve_data(0.2, 0.9, 0.85, 5.0, 11).unwrap().bfdr_cutoff.is_none());
    assert!(bfdr_curve_data(0.2, 0.9, 0.05, 5.0, 1).is_err());
}

#[test]
fn oracle_sequence_matches_normal_closed_form() {
    let rows = oracle_sequence_data(0.9, 4).unwrap();
    assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![100, 1000, 10_000]);
    for r in &rows {
        let n = r.n as f64;
        let u = n * 0.9;
        // n a^2 / sigma^2 = ((u+1)/u)(log(u+1) + 2 log f) with f = n - 1
        let z = ((u + 1.0) / u * ((u + 1.0).ln() + 2.0 * (n - 1.0).ln())).sqrt();
        assert!((r.exact_b - z).abs() < 1e-7, "{} vs {z}", r.exact_b);
        assert!((r.exact_a + r.exact_b).abs() < 1e-9);
        assert!(r.asymptotic_b > 0.0 && r.asymptotic_a < 0.0);
    }
    assert!(oracle_sequence_data(0.9, 9).is_err());
}

#[test]
fn small_simulation_reports_every_method() {
    let rows = simulate_data(64, 0.05, 50, 4, false).unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r.method).collect();
    assert_eq!(names, ["oracle", "mBIC", "mBIC1", "mBIC2", "mBIC3", "BH", "SD"]);
    for r in &rows {
        assert!((0.0..=1.0).contains(&r.mp) && (0.0..=1.0).contains(&r.fdr));
    }
    let again = simulate_data(64, 0.05, 50, 4, false).unwrap();
    assert_eq!(rows.iter().map(|r| r.mp).collect::<Vec<_>>(), again.iter().map(|r| r.mp).collect::<Vec<_>>());
    assert!(simulate_data(4096, 0.05, 10, 1, false).is_err());
    assert!(simulate_data(100, 0.05, 10, 1, false).is_err());
}
