//! Functions as `L2(ν)` coefficient vectors against the eigenbasis, and the
//! `γ`-power norms `‖f‖²_{[H]^γ} = Σ a_i² μ_i^{−γ}`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::{arg, LabError, Result};
use crate::spectral_kernel::{check_point, SpectrumModel};

/// Largest exponent accepted by [`CoefficientVector::power_norm`]; the source
/// condition ranges up to `β = 2`.
pub const MAX_POWER: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    coeffs: Vec<f64>,
    model: Arc<SpectrumModel>,
}

fn check_power(gamma: f64) -> Result<()> {
    if (0.0..=MAX_POWER).contains(&gamma) {
        Ok(())
    } else {
        arg(format!("power exponent must lie in [0, 2], got {gamma}"))
    }
}

impl CoefficientVector {
    pub fn new(model: Arc<SpectrumModel>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != model.truncation() {
            return arg(format!(
                "coefficient vector has length {} but the model truncation is {}",
                coeffs.len(),
                model.truncation()
            ));
        }
        Ok(CoefficientVector { coeffs, model })
    }

    pub fn zeros(model: Arc<SpectrumModel>) -> Self {
        let coeffs = vec![0.0; model.truncation()];
        CoefficientVector { coeffs, model }
    }

    /// Builds `a_i = g(i)` for `i = 1..=T`.
    pub fn from_fn(model: Arc<SpectrumModel>, g: impl Fn(usize) -> f64) -> Self {
        let coeffs = (1..=model.truncation()).map(g).collect();
        CoefficientVector { coeffs, model }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn model(&self) -> &Arc<SpectrumModel> {
        &self.model
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `Σ a_i² μ_i^{−γ}`.
    pub fn power_norm_sq(&self, gamma: f64) -> Result<f64> {
        check_power(gamma)?;
        Ok(self
            .coeffs
            .iter()
            .zip(self.model.eigenvalues())
            .map(|(a, mu)| {
                if *a == 0.0 {
                    0.0
                } else {
                    a * a * mu.powf(-gamma)
                }
            })
            .sum())
    }

    pub fn power_norm(&self, gamma: f64) -> Result<f64> {
        self.power_norm_sq(gamma).map(f64::sqrt)
    }

    /// `‖k^α‖_{L∞} · ‖f‖_{[H]^α}`, an upper bound on `ess sup |f|`.
    pub fn linf_bound(&self, alpha: f64) -> Result<f64> {
        let a = self.model.embedding_constant(alpha)?;
        Ok(a * self.power_norm(alpha)?)
    }

    /// `Σ a_i e_i(x)`.
    pub fn eval_function(&self, x: f64) -> Result<f64> {
        check_point(x)?;
        let fam = self.model.family();
        Ok(self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, a)| if *a == 0.0 { 0.0 } else { a * fam.eval(k + 1, x) })
            .sum())
    }

    fn check_same_model(&self, other: &CoefficientVector) -> Result<()> {
        if self.len() != other.len() {
            return arg(format!(
                "coefficient vectors differ in length ({} vs {})",
                self.len(),
                other.len()
            ));
        }
        if !Arc::ptr_eq(&self.model, &other.model) && self.model != other.model {
            return arg("coefficient vectors refer to different spectra");
        }
        Ok(())
    }

    pub fn sub(&self, other: &CoefficientVector) -> Result<CoefficientVector> {
        self.check_same_model(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(CoefficientVector {
            coeffs,
            model: Arc::clone(&self.model),
        })
    }

    pub fn scaled(&self, factor: f64) -> CoefficientVector {
        CoefficientVector {
            coeffs: self.coeffs.iter().map(|a| a * factor).collect(),
            model: Arc::clone(&self.model),
        }
    }

    /// `index,coefficient` rows with a header; indices are 1-based.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,coefficient\n");
        for (k, a) in self.coeffs.iter().enumerate() {
            let _ = writeln!(s, "{},{:?}", k + 1, a);
        }
        s
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    /// Reads the [`CoefficientVector::to_csv`] layout. Missing indices are zero.
    pub fn read_csv(model: Arc<SpectrumModel>, r: impl BufRead) -> Result<Self> {
        let mut coeffs = vec![0.0; model.truncation()];
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with("index")) {
                continue;
            }
            let bad = || LabError::Config(format!("coefficient csv line {}: `{line}`", lineno + 1));
            let (i, a) = line.split_once(',').ok_or_else(bad)?;
            let i: usize = i.trim().parse().map_err(|_| bad())?;
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            if i == 0 || i > coeffs.len() {
                return arg(format!(
                    "coefficient index {i} outside 1..={}",
                    coeffs.len()
                ));
            }
            coeffs[i - 1] = a;
        }
        Ok(CoefficientVector { coeffs, model })
    }
}
