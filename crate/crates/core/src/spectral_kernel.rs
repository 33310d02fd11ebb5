//! Kernels defined by an explicit truncated Mercer expansion
//! `k(x, x') = Σ_{i≤T} μ_i e_i(x) e_i(x')` over the uniform measure on `[0, 1]`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::KeyValueFile;
use crate::error::{arg, LabError, Result};

/// Default truncation for power-law spectra.
pub const DEFAULT_TRUNCATION: usize = 1024;

/// Grid density factor for the sup in [`SpectrumModel::embedding_constant_on_grid`].
pub const EMBEDDING_GRID_FACTOR: usize = 64;

/// Orthonormal eigenfunction families in `L2(ν)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenfunctionFamily {
    /// `e_1 = 1`, `e_i(x) = √2 cos((i−1)πx)` for `i ≥ 2`, with `ν` uniform on `[0, 1]`.
    CosineUniform01,
}

impl EigenfunctionFamily {
    pub fn id(self) -> &'static str {
        match self {
            EigenfunctionFamily::CosineUniform01 => "cosine_uniform_01",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "cosine_uniform_01" => Ok(EigenfunctionFamily::CosineUniform01),
            other => Err(LabError::Config(format!("unknown eigenfunction family `{other}`"))),
        }
    }

    /// `e_i(x)` with 1-based `i`. No domain check.
    #[inline]
    pub fn eval(self, i: usize, x: f64) -> f64 {
        match self {
            EigenfunctionFamily::CosineUniform01 => {
                if i <= 1 {
                    1.0
                } else {
                    SQRT_2 * ((i - 1) as f64 * PI * x).cos()
                }
            }
        }
    }

    /// Writes `e_1(x), …, e_T(x)` into `out` (`T = out.len()`).
    pub fn fill(self, x: f64, out: &mut [f64]) {
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = self.eval(k + 1, x);
        }
    }

    /// Sup over `x` of `e_i(x)²`.
    pub fn sup_square(self, i: usize) -> f64 {
        match self {
            EigenfunctionFamily::CosineUniform01 => {
                if i <= 1 {
                    1.0
                } else {
                    2.0
                }
            }
        }
    }
}

/// `μ_i = c · i^{−1/p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    pub c: f64,
    pub p: f64,
}

impl DecayParams {
    pub fn eigenvalue(&self, i: usize) -> f64 {
        self.c * (i as f64).powf(-1.0 / self.p)
    }
}

/// Truncated Mercer spectrum `(μ_i, e_i)_{i≤T}`. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumModel {
    family: EigenfunctionFamily,
    eigenvalues: Vec<f64>,
    decay: Option<DecayParams>,
}

pub(crate) fn check_point(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(LabError::Domain(x))
    }
}

impl SpectrumModel {
    /// Power-law spectrum `μ_i = c · i^{−1/p}`, `i = 1..=truncation`.
    pub fn power_law(c: f64, p: f64, truncation: usize) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return arg(format!("decay scale c must be positive, got {c}"));
        }
        if !(p > 0.0 && p <= 1.0) {
            return arg(format!("decay exponent p must lie in (0, 1], got {p}"));
        }
        if truncation == 0 {
            return arg("truncation must be at least 1");
        }
        let decay = DecayParams { c, p };
        let eigenvalues = (1..=truncation).map(|i| decay.eigenvalue(i)).collect();
        Ok(SpectrumModel {
            family: EigenfunctionFamily::CosineUniform01,
            eigenvalues,
            decay: Some(decay),
        })
    }

    /// Explicit eigenvalues; must be finite, positive and non-increasing.
    pub fn from_eigenvalues(eigenvalues: Vec<f64>) -> Result<Self> {
        Self::with_family(EigenfunctionFamily::CosineUniform01, eigenvalues)
    }

    pub fn with_family(family: EigenfunctionFamily, eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return arg("spectrum needs at least one eigenvalue");
        }
        for (k, &mu) in eigenvalues.iter().enumerate() {
            if !(mu > 0.0 && mu.is_finite()) {
                return arg(format!("eigenvalue μ_{} = {mu} is not positive", k + 1));
            }
            if k > 0 && mu > eigenvalues[k - 1] {
                return arg(format!(
                    "eigenvalues must be non-increasing: μ_{} = {mu} > μ_{} = {}",
                    k + 1,
                    k,
                    eigenvalues[k - 1]
                ));
            }
        }
        Ok(SpectrumModel {
            family,
            eigenvalues,
            decay: None,
        })
    }

    pub fn family(&self) -> EigenfunctionFamily {
        self.family
    }

    pub fn truncation(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `μ_i`, 1-based.
    pub fn eigenvalue(&self, i: usize) -> f64 {
        self.eigenvalues[i - 1]
    }

    pub fn decay_params(&self) -> Option<DecayParams> {
        self.decay
    }

    /// `Σ μ_i`, i.e. `‖k‖²_{L2(ν)}` at truncation.
    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn kernel_eval(&self, x: f64, x2: f64) -> Result<f64> {
        check_point(x)?;
        check_point(x2)?;
        Ok(self
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(k, mu)| mu * (self.family.eval(k + 1, x) * self.family.eval(k + 1, x2)))
            .sum())
    }

    /// `n × T` matrix `Φ[j][i] = e_{i+1}(x_j)`.
    pub fn feature_matrix(&self, points: &[f64]) -> Result<DMatrix<f64>> {
        let t = self.truncation();
        let mut phi = DMatrix::zeros(points.len(), t);
        let mut row = vec![0.0; t];
        for (j, &x) in points.iter().enumerate() {
            check_point(x)?;
            self.family.fill(x, &mut row);
            for (i, v) in row.iter().enumerate() {
                phi[(j, i)] = *v;
            }
        }
        Ok(phi)
    }

    /// `Ψ = Φ · diag(√μ)`, so that `K = Ψ Ψᵀ`.
    pub fn scaled_feature_matrix(&self, points: &[f64]) -> Result<DMatrix<f64>> {
        let mut psi = self.feature_matrix(points)?;
        for (i, mu) in self.eigenvalues.iter().enumerate() {
            psi.column_mut(i).scale_mut(mu.sqrt());
        }
        Ok(psi)
    }

    pub fn gram_matrix(&self, points: &[f64]) -> Result<DMatrix<f64>> {
        if points.is_empty() {
            return arg("gram matrix needs at least one point");
        }
        let psi = self.scaled_feature_matrix(points)?;
        let mut k = &psi * psi.transpose();
        // exact symmetry
        let n = k.nrows();
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (k[(i, j)] + k[(j, i)]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        Ok(k)
    }

    /// `‖k^γ‖_{L∞(ν)} = sup_x (Σ μ_i^γ e_i(x)²)^{1/2}`.
    ///
    /// Evaluated on a uniform grid of `64·T` points plus `x = 0`. For the
    /// cosine family every term is maximal at `x = 0`, so the returned value
    /// is exactly `(Σ μ_i^γ e_i(0)²)^{1/2}`.
    pub fn embedding_constant(&self, gamma: f64) -> Result<f64> {
        check_gamma_embedding(gamma)?;
        let at_zero = self.embedding_sum_at(gamma, 0.0);
        let sup_bound: f64 = self
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(k, mu)| mu.powf(gamma) * self.family.sup_square(k + 1))
            .sum();
        // The termwise sup bound is attained at x = 0 whenever it equals the
        // value there; only fall back to the grid otherwise.
        if (sup_bound - at_zero).abs() <= 1e-14 * sup_bound {
            return Ok(at_zero.sqrt());
        }
        let (grid_sup, _) =
            self.embedding_constant_on_grid(gamma, EMBEDDING_GRID_FACTOR * self.truncation())?;
        Ok(grid_sup.max(at_zero.sqrt()))
    }

    /// Grid search for `sup_x (Σ μ_i^γ e_i(x)²)^{1/2}` over `points + 1` uniform
    /// nodes of `[0, 1]`. Returns `(sup, argmax)`.
    pub fn embedding_constant_on_grid(&self, gamma: f64, points: usize) -> Result<(f64, f64)> {
        check_gamma_embedding(gamma)?;
        if points == 0 {
            return arg("grid needs at least one interval");
        }
        let weights: Vec<f64> = self.eigenvalues.iter().map(|mu| mu.powf(gamma)).collect();
        let mut best = (f64::NEG_INFINITY, 0.0);
        let mut basis = vec![0.0; self.truncation()];
        for g in 0..=points {
            let x = g as f64 / points as f64;
            self.family.fill(x, &mut basis);
            let s: f64 = weights.iter().zip(&basis).map(|(w, e)| w * e * e).sum();
            if s > best.0 {
                best = (s, x);
            }
        }
        Ok((best.0.sqrt(), best.1))
    }

    fn embedding_sum_at(&self, gamma: f64, x: f64) -> f64 {
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(k, mu)| {
                let e = self.family.eval(k + 1, x);
                mu.powf(gamma) * e * e
            })
            .sum()
    }

    /// Least-squares fit of `log μ_i = log c − (1/p) log i`; returns `(c, p)`.
    /// Power-law models return their exact parameters.
    pub fn decay_fit(&self) -> Result<(f64, f64)> {
        if self.truncation() < 4 {
            return arg(format!(
                "decay fit needs at least 4 eigenvalues, got {}",
                self.truncation()
            ));
        }
        if let Some(d) = self.decay {
            return Ok((d.c, d.p));
        }
        let xs: Vec<f64> = (1..=self.truncation()).map(|i| (i as f64).ln()).collect();
        let ys: Vec<f64> = self.eigenvalues.iter().map(|mu| mu.ln()).collect();
        let (intercept, slope) = crate::linalg::least_squares_line(&xs, &ys)?;
        if slope >= 0.0 {
            return Err(LabError::Numerical(format!(
                "fitted log-log slope {slope} is not negative; no polynomial decay"
            )));
        }
        Ok((intercept.exp(), -1.0 / slope))
    }

    /// Parses a spectrum file (see [`crate::config`]): `family`, and either
    /// `c`, `p`, `T` for a power law or bare eigenvalue lines.
    pub fn from_key_values(kv: &KeyValueFile) -> Result<Self> {
        let family = match kv.raw("family") {
            Some(id) => EigenfunctionFamily::from_id(id)?,
            None => EigenfunctionFamily::CosineUniform01,
        };
        if !kv.bare_values().is_empty() {
            let values = kv.bare_values().to_vec();
            if let Some(t) = kv.get::<usize>("T")? {
                if t != values.len() {
                    return Err(LabError::Config(format!(
                        "T = {t} but {} eigenvalues listed",
                        values.len()
                    )));
                }
            }
            return Self::with_family(family, values);
        }
        let c: f64 = kv.get_or("c", 1.0)?;
        let p: f64 = kv.require("p")?;
        let t: usize = kv.get_or("T", DEFAULT_TRUNCATION)?;
        let mut model = Self::power_law(c, p, t)?;
        model.family = family;
        Ok(model)
    }

    pub fn from_spec_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_key_values(&KeyValueFile::from_path(path)?)
    }

    /// Inverse of [`SpectrumModel::from_key_values`].
    pub fn to_spec_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "family={}", self.family.id());
        let _ = writeln!(s, "T={}", self.truncation());
        match self.decay {
            Some(d) => {
                let _ = writeln!(s, "c={:?}", d.c);
                let _ = writeln!(s, "p={:?}", d.p);
            }
            None => {
                for mu in &self.eigenvalues {
                    let _ = writeln!(s, "{mu:?}");
                }
            }
        }
        s
    }
}

fn check_gamma_embedding(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        arg(format!("embedding exponent must lie in (0, 1], got {gamma}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;
    use rand::Rng;

    fn two_mode() -> SpectrumModel {
        SpectrumModel::from_eigenvalues(vec![1.0, 0.5]).unwrap()
    }

    #[test]
    fn kernel_two_mode_at_origin() {
        // 1·1·1 + 0.5·√2·√2
        assert!((two_mode().kernel_eval(0.0, 0.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn kernel_single_constant_mode() {
        let m = SpectrumModel::from_eigenvalues(vec![1.0]).unwrap();
        assert_eq!(m.kernel_eval(0.3, 0.9).unwrap(), 1.0);
    }

    #[test]
    fn kernel_rejects_outside_domain() {
        let m = two_mode();
        assert!(matches!(m.kernel_eval(1.5, 0.0), Err(LabError::Domain(_))));
        assert!(matches!(m.kernel_eval(0.0, -0.1), Err(LabError::Domain(_))));
        assert!(m.kernel_eval(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn mercer_sum_matches_termwise_oracle() {
        let m = SpectrumModel::power_law(1.0, 0.5, 64).unwrap();
        let mut rng = stream_rng(7, 0);
        for _ in 0..100 {
            let (x, y): (f64, f64) = (rng.random(), rng.random());
            let mut oracle = m.eigenvalue(1);
            for i in 2..=64 {
                let a = ((i - 1) as f64 * PI * x).cos();
                let b = ((i - 1) as f64 * PI * y).cos();
                oracle += m.eigenvalue(i) * 2.0 * a * b;
            }
            let k = m.kernel_eval(x, y).unwrap();
            assert!((k - oracle).abs() <= 1e-12, "{k} vs {oracle}");
            assert_eq!(k, m.kernel_eval(y, x).unwrap());
        }
    }

    #[test]
    fn orthonormality_by_midpoint_quadrature() {
        // composite midpoint rule with 4T nodes integrates cos products of
        // degree < 2T exactly
        let t = 32;
        let fam = EigenfunctionFamily::CosineUniform01;
        let nodes = 4 * t;
        for i in 1..=t {
            for j in 1..=t {
                let q: f64 = (0..nodes)
                    .map(|k| {
                        let x = (k as f64 + 0.5) / nodes as f64;
                        fam.eval(i, x) * fam.eval(j, x)
                    })
                    .sum::<f64>()
                    / nodes as f64;
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((q - expected).abs() < 1e-8, "({i},{j}) -> {q}");
            }
        }
    }

    #[test]
    fn gram_single_point_kills_second_mode() {
        let k = two_mode().gram_matrix(&[0.5]).unwrap();
        assert_eq!(k.shape(), (1, 1));
        assert!((k[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gram_duplicate_points_rank_one() {
        let k = two_mode().gram_matrix(&[0.3, 0.3]).unwrap();
        assert_eq!(k[(0, 0)], k[(0, 1)]);
        assert_eq!(k[(1, 0)], k[(1, 1)]);
        let eig = SymmetricEigen::new(k);
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!(ev[0].abs() < 1e-12);
    }

    #[test]
    fn gram_empty_is_error() {
        assert!(two_mode().gram_matrix(&[]).is_err());
    }

    #[test]
    fn embedding_constant_examples() {
        assert!((two_mode().embedding_constant(1.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let expected = (1.0 + 2.0 * 0.5f64.sqrt()).sqrt();
        assert!((two_mode().embedding_constant(0.5).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 1.55377).abs() < 1e-5);
        let one = SpectrumModel::from_eigenvalues(vec![1.0]).unwrap();
        for g in [0.1, 0.5, 1.0] {
            assert_eq!(one.embedding_constant(g).unwrap(), 1.0);
        }
        assert!(two_mode().embedding_constant(0.0).is_err());
        assert!(two_mode().embedding_constant(1.1).is_err());
    }

    #[test]
    fn embedding_grid_agrees_and_peaks_at_origin() {
        let m = SpectrumModel::power_law(1.0, 0.5, 16).unwrap();
        for g in [0.25, 0.5, 1.0] {
            let (sup, at) = m.embedding_constant_on_grid(g, 64 * 16).unwrap();
            let closed = m.embedding_constant(g).unwrap();
            assert!((sup - closed).abs() < 1e-12);
            assert!(at == 0.0 || at == 1.0);
        }
    }

    #[test]
    fn decay_fit_exact_power_laws() {
        let m = SpectrumModel::power_law(1.0, 0.5, 64).unwrap();
        assert_eq!(m.decay_fit().unwrap(), (1.0, 0.5));
        // explicit list without decay metadata still recovers the law
        let m = SpectrumModel::from_eigenvalues(
            (1..=64).map(|i| 2.0 * (i as f64).powi(-4)).collect(),
        )
        .unwrap();
        let (c, p) = m.decay_fit().unwrap();
        assert!((c - 2.0).abs() < 1e-10 && (p - 0.25).abs() < 1e-10, "{c} {p}");
    }

    #[test]
    fn decay_fit_four_points_matches_hand_regression() {
        let mu = [1.0f64, 0.9, 0.2, 0.1];
        let m = SpectrumModel::from_eigenvalues(mu.to_vec()).unwrap();
        // independent two-column normal equations
        let x: Vec<f64> = (1..=4).map(|i| (i as f64).ln()).collect();
        let y: Vec<f64> = mu.iter().map(|v| v.ln()).collect();
        let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let det = 4.0 * sxx - sx * sx;
        let slope = (4.0 * sxy - sx * sy) / det;
        let intercept = (sxx * sy - sx * sxy) / det;
        let (c, p) = m.decay_fit().unwrap();
        assert!((c - intercept.exp()).abs() < 1e-12);
        assert!((p + 1.0 / slope).abs() < 1e-12);
    }

    #[test]
    fn decay_fit_needs_four() {
        assert!(two_mode().decay_fit().is_err());
    }

    #[test]
    fn power_law_bounds_hold_with_equality() {
        let m = SpectrumModel::power_law(3.0, 0.4, 128).unwrap();
        let d = m.decay_params().unwrap();
        for i in 1..=128 {
            assert_eq!(m.eigenvalue(i), d.c * (i as f64).powf(-1.0 / d.p));
        }
    }

    #[test]
    fn rejects_bad_spectra() {
        assert!(SpectrumModel::from_eigenvalues(vec![]).is_err());
        assert!(SpectrumModel::from_eigenvalues(vec![1.0, 2.0]).is_err());
        assert!(SpectrumModel::from_eigenvalues(vec![1.0, 0.0]).is_err());
        assert!(SpectrumModel::power_law(1.0, 1.5, 8).is_err());
        assert!(SpectrumModel::power_law(-1.0, 0.5, 8).is_err());
    }

    #[test]
    fn spec_file_roundtrip() {
        let m = SpectrumModel::power_law(2.0, 0.25, 32).unwrap();
        let back =
            SpectrumModel::from_key_values(&KeyValueFile::parse(&m.to_spec_string()).unwrap())
                .unwrap();
        assert_eq!(m, back);
        let listed = SpectrumModel::from_eigenvalues(vec![1.0, 0.3, 0.1]).unwrap();
        let back = SpectrumModel::from_key_values(
            &KeyValueFile::parse(&listed.to_spec_string()).unwrap(),
        )
        .unwrap();
        assert_eq!(listed, back);
    }

    proptest! {
        #[test]
        fn gram_is_psd(points in prop::collection::vec(0.0f64..=1.0, 1..=32)) {
            let m = SpectrumModel::power_law(1.0, 0.5, 48).unwrap();
            let k = m.gram_matrix(&points).unwrap();
            let eig = SymmetricEigen::new(k);
            let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert!(min >= -1e-10, "min eigenvalue {}", min);
        }

        #[test]
        fn embedding_non_increasing_in_gamma(g1 in 0.01f64..=1.0, g2 in 0.01f64..=1.0) {
            let m = SpectrumModel::power_law(1.0, 0.5, 64).unwrap();
            let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
            prop_assert!(m.embedding_constant(hi).unwrap() <= m.embedding_constant(lo).unwrap() + 1e-12);
        }
    }
}
