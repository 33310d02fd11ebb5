use std::f64::consts::PI;

use proptest::prelude::*;
use rates_lab::rate_lab::{validate_model, ExperimentConfig};
use rates_lab::SpectrumModel;

#[test]
fn decay_params_reproduce_eigenvalues() {
    let m = SpectrumModel::power_law(0.7, 0.25, 200).unwrap();
    let d = m.decay_params().unwrap();
    for i in 1..=200 {
        assert_eq!(m.eigenvalue(i), 0.7 * (i as f64).powf(-4.0));
        assert_eq!(m.eigenvalue(i), d.eigenvalue(i));
    }
    let mut config = ExperimentConfig::new(0.5, 0.25, 0.5, 0.0, 0.1);
    config.c = 0.7;
    config.truncation = 200;
    let checks = validate_model(&config, &m);
    let decay = checks.iter().find(|c| c.name.contains("c·i")).unwrap();
    assert!(decay.passed, "{decay}");
}

#[test]
fn embedding_constant_matches_grid_sup() {
    let m = SpectrumModel::power_law(1.0, 0.5, 64).unwrap();
    for gamma in [0.3, 0.5, 1.0] {
        let closed = m.embedding_constant(gamma).unwrap();
        let (grid, argmax) = m.embedding_constant_on_grid(gamma, 4096).unwrap();
        assert!((closed - grid).abs() < 1e-12);
        assert_eq!(argmax, 0.0);
        let direct: f64 = (1..=64)
            .map(|i| m.eigenvalue(i).powf(gamma) * if i == 1 { 1.0 } else { 2.0 })
            .sum::<f64>()
            .sqrt();
        assert!((closed - direct).abs() < 1e-12);
    }
}

#[test]
fn spec_file_roundtrip() {
    let m = SpectrumModel::power_law(2.0, 0.5, 10).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spectrum.txt");
    std::fs::write(&path, m.to_spec_string()).unwrap();
    assert_eq!(SpectrumModel::from_spec_file(&path).unwrap(), m);
}

proptest! {
    #[test]
    fn mercer_sum_agrees_with_cosine_expansion(x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
        let m = SpectrumModel::power_law(1.0, 0.5, 48).unwrap();
        let mut oracle = 1.0;
        for i in 2..=48 {
            let k = (i - 1) as f64 * PI;
            oracle += (i as f64).powi(-2) * 2.0 * (k * x).cos() * (k * y).cos();
        }
        prop_assert!((m.kernel_eval(x, y).unwrap() - oracle).abs() <= 1e-12);
    }

    #[test]
    fn gram_matrix_is_psd(points in prop::collection::vec(0.0f64..=1.0, 1..=32)) {
        let m = SpectrumModel::power_law(1.0, 0.5, 128).unwrap();
        let g = m.gram_matrix(&points).unwrap();
        let eig = g.symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|v| *v >= -1e-10), "{:?}", eig.min());
    }

    #[test]
    fn embedding_constant_non_increasing_in_gamma(
        c in 0.05f64..=1.0,
        p in 0.2f64..=1.0,
        g1 in 0.0f64..=1.0,
        g2 in 0.0f64..=1.0,
    ) {
        let m = SpectrumModel::power_law(c, p, 64).unwrap();
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        prop_assert!(m.embedding_constant(hi).unwrap() <= m.embedding_constant(lo).unwrap() * (1.0 + 1e-12));
    }
}
