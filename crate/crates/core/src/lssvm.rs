//! Empirical LS-SVM fits `min_f λ‖f‖²_H + (1/n)Σ(y_i − f(x_i))²` and the
//! spectral closed forms around them.

use std::fmt::Write as _;
use std::io::BufRead;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{arg, LabError, Result};
use crate::linalg::spd_solve;
use crate::power_space::CoefficientVector;
use crate::spectral_kernel::{check_point, SpectrumModel};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    xs: Vec<f64>,
    ys: Vec<f64>,
    seed: Option<u64>,
}

impl Dataset {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, seed: Option<u64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return arg(format!(
                "dataset has {} points but {} responses",
                xs.len(),
                ys.len()
            ));
        }
        if xs.is_empty() {
            return arg("dataset must contain at least one sample");
        }
        for &x in &xs {
            check_point(x)?;
        }
        Ok(Dataset { xs, ys, seed })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y\n");
        for (x, y) in self.xs.iter().zip(&self.ys) {
            let _ = writeln!(s, "{x:?},{y:?}");
        }
        s
    }

    pub fn read_csv(r: impl BufRead, seed: Option<u64>) -> Result<Self> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('x')) {
                continue;
            }
            let bad = || LabError::Config(format!("dataset csv line {}: `{line}`", lineno + 1));
            let (x, y) = line.split_once(',').ok_or_else(bad)?;
            xs.push(x.trim().parse().map_err(|_| bad())?);
            ys.push(y.trim().parse().map_err(|_| bad())?);
        }
        Dataset::new(xs, ys, seed)
    }
}

/// Which linear system produced the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveRoute {
    /// `(K + nλI) α = y`, used when `n ≤ T`.
    Dual,
    /// `(ΨᵀΨ + nλI) b = Ψᵀy` with `α = (y − Ψb)/(nλ)`, used when `n > T`.
    Feature,
}

/// Representer weights `f̂ = Σ_j α_j k(x_j, ·)` of an LS-SVM fit.
#[derive(Debug, Clone)]
pub struct DualWeights {
    alphas: Vec<f64>,
    lambda: f64,
    model: Arc<SpectrumModel>,
    xs: Vec<f64>,
    residual: f64,
    jitter: f64,
    route: SolveRoute,
    coefficients: CoefficientVector,
}

/// JSON record of a single fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub lambda: f64,
    pub n: usize,
    pub residual: f64,
    pub seed: Option<u64>,
    pub jitter: f64,
    pub route: SolveRoute,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        arg(format!("lambda must be positive, got {lambda}"))
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn coefficients_from_projection(model: &Arc<SpectrumModel>, h: &DVector<f64>) -> CoefficientVector {
    // a_i = μ_i Σ_j α_j e_i(x_j) = √μ_i (Ψᵀα)_i
    let mu = model.eigenvalues();
    CoefficientVector::from_fn(Arc::clone(model), |i| mu[i - 1].sqrt() * h[i - 1])
}

/// Solves the regularized least-squares problem at `lambda`.
pub fn fit(model: &Arc<SpectrumModel>, data: &Dataset, lambda: f64) -> Result<DualWeights> {
    check_lambda(lambda)?;
    let n = data.len();
    let t = model.truncation();
    let nl = n as f64 * lambda;
    let y = DVector::from_column_slice(data.ys());
    let psi = model.scaled_feature_matrix(data.xs())?;
    let (alpha, jitter, route) = if n <= t {
        let mut a = &psi * psi.transpose();
        symmetrize(&mut a);
        for i in 0..n {
            a[(i, i)] += nl;
        }
        let sol = spd_solve(&a, &y)?;
        (sol.x, sol.jitter, SolveRoute::Dual)
    } else {
        let mut g = psi.transpose() * &psi;
        symmetrize(&mut g);
        for i in 0..t {
            g[(i, i)] += nl;
        }
        let sol = spd_solve(&g, &(psi.transpose() * &y))?;
        let alpha = (&y - &psi * &sol.x) / nl;
        (alpha, sol.jitter, SolveRoute::Feature)
    };
    let h = psi.transpose() * &alpha;
    let k_alpha = &psi * &h;
    let residual = (0..n)
        .map(|j| (k_alpha[j] + nl * alpha[j] - y[j]).abs())
        .fold(0.0, f64::max);
    let y_norm = y.amax();
    if !residual.is_finite() || residual > 1e-8 * (1.0 + y_norm) {
        return Err(LabError::Numerical(format!(
            "first-order residual {residual:e} exceeds 1e-8·(1 + ‖y‖∞) at n = {n}, λ = {lambda:e}"
        )));
    }
    Ok(DualWeights {
        alphas: alpha.as_slice().to_vec(),
        lambda,
        model: Arc::clone(model),
        xs: data.xs().to_vec(),
        residual,
        jitter,
        route,
        coefficients: coefficients_from_projection(model, &h),
    })
}

impl DualWeights {
    /// Wraps externally supplied weights; `residual` is reported as NaN since no
    /// right-hand side is known.
    pub fn from_alphas(
        model: &Arc<SpectrumModel>,
        xs: Vec<f64>,
        alphas: Vec<f64>,
        lambda: f64,
    ) -> Result<Self> {
        check_lambda(lambda)?;
        if xs.len() != alphas.len() || xs.is_empty() {
            return arg("weights and points must be non-empty and of equal length");
        }
        let psi = model.scaled_feature_matrix(&xs)?;
        let h = psi.transpose() * DVector::from_column_slice(&alphas);
        Ok(DualWeights {
            coefficients: coefficients_from_projection(model, &h),
            alphas,
            lambda,
            model: Arc::clone(model),
            xs,
            residual: f64::NAN,
            jitter: 0.0,
            route: SolveRoute::Dual,
        })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn model(&self) -> &Arc<SpectrumModel> {
        &self.model
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// `‖(K + nλI)α − y‖∞` measured after the solve.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn route(&self) -> SolveRoute {
        self.route
    }

    /// `f̂(x) = Σ_j α_j k(x_j, x)`, summed over the kernel sections.
    pub fn predict(&self, x: f64) -> Result<f64> {
        let mut s = 0.0;
        for (a, xj) in self.alphas.iter().zip(&self.xs) {
            s += a * self.model.kernel_eval(*xj, x)?;
        }
        Ok(s)
    }

    /// `L2(ν)` coefficients `a_i = μ_i Σ_j α_j e_i(x_j)` of the predictor.
    pub fn extract_coefficients(&self) -> CoefficientVector {
        self.coefficients.clone()
    }

    pub fn record(&self, seed: Option<u64>) -> FitRecord {
        FitRecord {
            lambda: self.lambda,
            n: self.alphas.len(),
            residual: self.residual,
            seed,
            jitter: self.jitter,
            route: self.route,
        }
    }
}

/// Value of `λ αᵀKα + (1/n)‖y − Kα‖²` for arbitrary weights.
pub fn objective(model: &SpectrumModel, data: &Dataset, alphas: &[f64], lambda: f64) -> Result<f64> {
    if alphas.len() != data.len() {
        return arg("objective: weights and data differ in length");
    }
    let k = model.gram_matrix(data.xs())?;
    let a = DVector::from_column_slice(alphas);
    let ka = &k * &a;
    let norm_sq = a.dot(&ka);
    let fit: f64 = data
        .ys()
        .iter()
        .zip(ka.iter())
        .map(|(y, f)| (y - f) * (y - f))
        .sum::<f64>()
        / data.len() as f64;
    Ok(lambda * norm_sq + fit)
}

/// Coefficients `a_i μ_i/(μ_i + λ)` of the population solution `f_{P,λ}`.
pub fn population_solution(f_star: &CoefficientVector, lambda: f64) -> Result<CoefficientVector> {
    check_lambda(lambda)?;
    let mu = f_star.model().eigenvalues();
    let a = f_star.coeffs();
    Ok(CoefficientVector::from_fn(Arc::clone(f_star.model()), |i| {
        a[i - 1] * mu[i - 1] / (mu[i - 1] + lambda)
    }))
}

/// `‖f_{P,λ} − f*‖²_{[H]^γ} = λ² Σ a_i² μ_i^{−γ}/(μ_i + λ)²`.
pub fn approximation_error(f_star: &CoefficientVector, lambda: f64, gamma: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !(0.0..=2.0).contains(&gamma) {
        return arg(format!("gamma must lie in [0, 2], got {gamma}"));
    }
    let mu = f_star.model().eigenvalues();
    Ok(f_star
        .coeffs()
        .iter()
        .zip(mu)
        .map(|(a, m)| {
            if *a == 0.0 {
                0.0
            } else {
                let r = lambda / (m + lambda);
                a * a * m.powf(-gamma) * r * r
            }
        })
        .sum())
}

/// `N(λ) = Σ μ_i/(μ_i + λ)`.
pub fn effective_dimension(model: &SpectrumModel, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(model.eigenvalues().iter().map(|m| m / (m + lambda)).sum())
}

/// `C λ^{−p}` with `C = c^p/(1 − p)` for `p < 1` and `C = Σ μ_i` for `p = 1`.
pub fn effective_dimension_bound(model: &SpectrumModel, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let Some(d) = model.decay_params() else {
        return arg("effective dimension bound needs a power-law spectrum");
    };
    let c = if d.p < 1.0 {
        d.c.powf(d.p) / (1.0 - d.p)
    } else {
        model.trace()
    };
    Ok(c * lambda.powf(-d.p))
}

/// Inputs of the oracle inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleInputs {
    pub lambda: f64,
    pub n: usize,
    pub tau: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleBound {
    pub bound: f64,
    pub n0: f64,
    pub sigma_lambda: f64,
    pub b_lambda: f64,
    pub effective_dimension: f64,
    pub embedding_constant: f64,
}

/// Right-hand side of the estimation-error oracle inequality
/// `128 τ²/(nλ^γ) (5 N(λ) σ_λ² + A² B_λ²/(nλ^α))` and the sample threshold
/// `n₀ = max{256 τ² A² λ^{−α} N(λ), 16 τ A² λ^{−α}, τ}`, with `A = ‖k^α‖∞`.
pub fn oracle_bound(
    model: &SpectrumModel,
    f_star: &CoefficientVector,
    inp: OracleInputs,
) -> Result<OracleBound> {
    let OracleInputs {
        lambda,
        n,
        tau,
        alpha,
        gamma,
        sigma,
        b,
    } = inp;
    check_lambda(lambda)?;
    if !(tau >= 1.0) {
        return arg(format!("tau must be at least 1, got {tau}"));
    }
    if n == 0 {
        return arg("n must be at least 1");
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return arg(format!("alpha must lie in (0, 1], got {alpha}"));
    }
    if !(sigma >= 0.0 && b >= 0.0) {
        return arg("sigma and B must be non-negative");
    }
    let a = model.embedding_constant(alpha)?;
    let a2 = a * a;
    let surrogate = a * approximation_error(f_star, lambda, alpha)?.sqrt();
    let sigma_l = sigma.max(surrogate);
    let b_l = b.max(surrogate);
    let nd = effective_dimension(model, lambda)?;
    let nf = n as f64;
    let la = lambda.powf(-alpha);
    let bound = 128.0 * tau * tau / (nf * lambda.powf(gamma))
        * (5.0 * nd * sigma_l * sigma_l + a2 * b_l * b_l * la / nf);
    let n0 = (256.0 * tau * tau * a2 * la * nd)
        .max(16.0 * tau * a2 * la)
        .max(tau);
    Ok(OracleBound {
        bound,
        n0,
        sigma_lambda: sigma_l,
        b_lambda: b_l,
        effective_dimension: nd,
        embedding_constant: a,
    })
}
