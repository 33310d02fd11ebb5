//! Lower-bound machinery: binary codes with large Hamming distance, the
//! packing family `f_ω` built from them, Gaussian-regression KL divergences
//! and the multiple-testing bound.

use std::fmt::Debug;
use std::sync::Arc;

use num_traits::Num;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::check::CheckResult;
use crate::error::{arg, LabError, Result};
use crate::lssvm::fit;
use crate::power_space::CoefficientVector;
use crate::rate_lab::sample_dataset_with;
use crate::rng::{cell_stream, stream_rng};
use crate::spectral_kernel::SpectrumModel;

/// Binary words of common length `m`; word 0 is all zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCode {
    m: usize,
    words: Vec<Vec<u8>>,
}

/// `Σ (ω_i − ω'_i)²`.
pub fn squared_distance(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// `⌈2^{m/8}⌉`, the number of non-zero words requested from the construction.
pub fn gv_target(m: usize) -> usize {
    2f64.powf(m as f64 / 8.0).ceil() as usize
}

impl BinaryCode {
    pub fn new(m: usize, words: Vec<Vec<u8>>) -> Result<Self> {
        if words.is_empty() || words[0].iter().any(|b| *b != 0) {
            return arg("code must start with the all-zeros word");
        }
        for w in &words {
            if w.len() != m || w.iter().any(|b| *b > 1) {
                return arg(format!("code words must be 0/1 strings of length {m}"));
            }
        }
        Ok(BinaryCode { m, words })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn words(&self) -> &[Vec<u8>] {
        &self.words
    }

    /// Number of words including the zero word (`M + 1`).
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// `M`, the number of words other than the zero word.
    pub fn alternatives(&self) -> usize {
        self.words.len() - 1
    }

    pub fn min_squared_distance(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for i in 0..self.words.len() {
            for j in 0..i {
                let d = squared_distance(&self.words[i], &self.words[j]);
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }

    /// All-pairs scan for `8 · d(ω, ω') ≥ m`.
    pub fn verify(&self) -> Result<()> {
        for i in 0..self.words.len() {
            for j in 0..i {
                let d = squared_distance(&self.words[i], &self.words[j]);
                if 8 * d < self.m {
                    return Err(LabError::Construction(format!(
                        "words {j} and {i} are at squared distance {d} < m/8 = {}",
                        self.m as f64 / 8.0
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn word_strings(&self) -> Vec<String> {
        self.words
            .iter()
            .map(|w| w.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect())
            .collect()
    }
}

/// Randomized greedy code: draw uniform words and keep those at squared
/// distance `≥ m/8` from every kept word until `target` non-zero words are
/// found. The result is verified exhaustively.
pub fn gilbert_varshamov(m: usize, target: usize, seed: u64, max_tries: usize) -> Result<BinaryCode> {
    if m < 8 {
        return arg(format!("code length must be at least 8, got {m}"));
    }
    let mut rng = stream_rng(seed, m as u64);
    let mut words = vec![vec![0u8; m]];
    let mut tries = 0;
    while words.len() < target + 1 {
        if tries == max_tries {
            return Err(LabError::Construction(format!(
                "found {} of {target} words of length {m} after {max_tries} draws",
                words.len() - 1
            )));
        }
        tries += 1;
        let w: Vec<u8> = (0..m).map(|_| rng.random_range(0..=1u8)).collect();
        if words.iter().all(|v| 8 * squared_distance(&w, v) >= m) {
            words.push(w);
        }
    }
    let code = BinaryCode { m, words };
    code.verify()?;
    Ok(code)
}

/// Alternatives `f_ω = 2(8ε/m)^{1/2} Σ_i ω_i μ_{i+m}^{γ/2} e_{i+m}`, one per word.
#[derive(Debug, Clone)]
pub struct PackingFamily {
    eps: f64,
    gamma: f64,
    code: BinaryCode,
    functions: Vec<CoefficientVector>,
    model: Arc<SpectrumModel>,
}

/// Serialized form of a [`PackingFamily`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingRecord {
    pub eps: f64,
    pub m: usize,
    pub gamma: f64,
    pub truncation: usize,
    /// Word bit `i` (0-based) drives eigenfunction index `offset + i + 1`.
    pub offset: usize,
    pub amplitudes: Vec<f64>,
    pub words: Vec<String>,
}

pub fn build_alternatives(
    model: &Arc<SpectrumModel>,
    code: &BinaryCode,
    eps: f64,
    gamma: f64,
) -> Result<PackingFamily> {
    let m = code.m();
    if model.truncation() < 2 * m {
        return arg(format!(
            "packing of length {m} needs truncation ≥ {}, got {}",
            2 * m,
            model.truncation()
        ));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return arg(format!("eps must be positive, got {eps}"));
    }
    if !(0.0..=2.0).contains(&gamma) {
        return arg(format!("gamma must lie in [0, 2], got {gamma}"));
    }
    let amp = amplitudes(model, m, eps, gamma);
    let functions = code
        .words()
        .iter()
        .map(|w| {
            let mut a = vec![0.0; model.truncation()];
            for (i, bit) in w.iter().enumerate() {
                if *bit == 1 {
                    a[m + i] = amp[i];
                }
            }
            CoefficientVector::new(Arc::clone(model), a)
        })
        .collect::<Result<_>>()?;
    Ok(PackingFamily {
        eps,
        gamma,
        code: code.clone(),
        functions,
        model: Arc::clone(model),
    })
}

fn amplitudes(model: &SpectrumModel, m: usize, eps: f64, gamma: f64) -> Vec<f64> {
    let c = 2.0 * (8.0 * eps / m as f64).sqrt();
    (1..=m)
        .map(|i| c * model.eigenvalue(i + m).powf(gamma / 2.0))
        .collect()
}

impl PackingFamily {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn m(&self) -> usize {
        self.code.m()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn code(&self) -> &BinaryCode {
        &self.code
    }

    pub fn functions(&self) -> &[CoefficientVector] {
        &self.functions
    }

    pub fn model(&self) -> &Arc<SpectrumModel> {
        &self.model
    }

    pub fn record(&self) -> PackingRecord {
        PackingRecord {
            eps: self.eps,
            m: self.m(),
            gamma: self.gamma,
            truncation: self.model.truncation(),
            offset: self.m(),
            amplitudes: amplitudes(&self.model, self.m(), self.eps, self.gamma),
            words: self.code.word_strings(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.record())?)
    }

    /// Smallest `‖f_i − f_j‖²_γ` over pairs, with the pair attaining it.
    pub fn min_separation(&self) -> Result<(f64, usize, usize)> {
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..self.functions.len() {
            for j in 0..i {
                let d = self.functions[i].sub(&self.functions[j])?.power_norm_sq(self.gamma)?;
                if d < best.0 {
                    best = (d, j, i);
                }
            }
        }
        Ok(best)
    }

    /// `‖f_i − f_j‖²_γ ≥ 4ε − 1e−12` for every pair.
    pub fn separation_check(&self) -> Result<CheckResult> {
        let (d, i, j) = self.min_separation()?;
        let need = 4.0 * self.eps;
        Ok(CheckResult::new(
            "packing separation",
            d >= need - 1e-12,
            format!("min ‖f_{i} − f_{j}‖²_γ = {d:.6e} vs 4ε = {need:.6e}"),
        ))
    }

    /// `‖f_ω − f_ω'‖²_{L2} ≤ 32 c^γ ε m^{−γ/p}` for every pair.
    pub fn l2_budget_check(&self) -> Result<CheckResult> {
        let Some(d) = self.model.decay_params() else {
            return arg("L2 budget needs a power-law spectrum");
        };
        let m = self.m() as f64;
        let cap = 32.0 * d.c.powf(self.gamma) * self.eps * m.powf(-self.gamma / d.p);
        let mut worst: f64 = 0.0;
        for i in 0..self.functions.len() {
            for j in 0..i {
                worst = worst.max(self.functions[i].sub(&self.functions[j])?.power_norm_sq(0.0)?);
            }
        }
        Ok(CheckResult::new(
            "packing L2 budget",
            worst <= cap,
            format!("max pair ‖f − f'‖²_L2 = {worst:.6e} vs 32c^γ ε m^(−γ/p) = {cap:.6e}"),
        ))
    }
}

/// Per-word norm budgets: exact `‖f_ω‖²_β` and `‖f_ω‖²_{L∞}` surrogate
/// `A ‖f_ω‖²_α` (`A = ‖k^α‖²∞`) against the caller's caps and the closed forms
/// `32ε μ_{2m}^{−(β−γ)}` and `32Aε μ_{2m}^{−(α−γ)}` (`γ < α`) or
/// `32Aε μ_m^{γ−α}` (`γ ≥ α`).
pub fn budget_check(
    family: &PackingFamily,
    beta: f64,
    alpha: f64,
    bnorm_cap: f64,
    linf_cap: f64,
) -> Vec<CheckResult> {
    let model = family.model();
    let m = family.m();
    let (eps, gamma) = (family.eps(), family.gamma());
    let a = match model.embedding_constant(alpha) {
        Ok(v) => v * v,
        Err(e) => return vec![CheckResult::new("embedding constant", false, e.to_string())],
    };
    let beta_closed = 32.0 * eps * model.eigenvalue(2 * m).powf(-(beta - gamma));
    let linf_closed = if gamma < alpha {
        32.0 * a * eps * model.eigenvalue(2 * m).powf(-(alpha - gamma))
    } else {
        32.0 * a * eps * model.eigenvalue(m).powf(gamma - alpha)
    };
    let mut worst_b: f64 = 0.0;
    let mut worst_l: f64 = 0.0;
    let mut ok_closed = true;
    for f in family.functions() {
        let (Ok(b), Ok(l)) = (f.power_norm_sq(beta), f.power_norm_sq(alpha)) else {
            return vec![CheckResult::new("norm evaluation", false, "exponent out of range")];
        };
        let l = a * l;
        ok_closed &= b <= beta_closed * (1.0 + 1e-12) && l <= linf_closed * (1.0 + 1e-12);
        worst_b = worst_b.max(b);
        worst_l = worst_l.max(l);
    }
    vec![
        CheckResult::new(
            "β-norm within cap",
            worst_b <= bnorm_cap,
            format!("max ‖f_ω‖²_β = {worst_b:.6e} vs cap {bnorm_cap:.6e}"),
        ),
        CheckResult::new(
            "L∞ within cap",
            worst_l <= linf_cap,
            format!("max A‖f_ω‖²_α = {worst_l:.6e} vs cap {linf_cap:.6e}"),
        ),
        CheckResult::new(
            "norms within closed-form bounds",
            ok_closed,
            format!("β bound {beta_closed:.6e}, L∞ bound {linf_closed:.6e}"),
        ),
    ]
}

/// `K(P_f^n, P_{f'}^n) = n/(2σ̃²) ‖f − f'‖²_{L2}` for Gaussian noise of level `σ̃`.
pub fn kl_divergence(
    f: &CoefficientVector,
    f2: &CoefficientVector,
    n: usize,
    sigma_tilde: f64,
) -> Result<f64> {
    if !(sigma_tilde > 0.0) {
        return arg(format!("sigma_tilde must be positive, got {sigma_tilde}"));
    }
    if n == 0 {
        return arg("n must be at least 1");
    }
    let d = f.sub(f2)?.power_norm_sq(0.0)?;
    Ok(n as f64 / (2.0 * sigma_tilde * sigma_tilde) * d)
}

/// Monte-Carlo estimate of the KL divergence from simulated `(x, y) ~ P_f`:
/// `n` times the mean log-likelihood ratio. Returns `(estimate, standard error)`.
pub fn kl_monte_carlo(
    f: &CoefficientVector,
    f2: &CoefficientVector,
    n: usize,
    sigma_tilde: f64,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if !(sigma_tilde > 0.0) {
        return arg(format!("sigma_tilde must be positive, got {sigma_tilde}"));
    }
    if samples < 2 {
        return arg("need at least two samples");
    }
    let mut rng = stream_rng(seed, 0);
    let s2 = 2.0 * sigma_tilde * sigma_tilde;
    let mut llr = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x: f64 = rng.random();
        let g: f64 = rng.sample(StandardNormal);
        let fx = f.eval_function(x)?;
        let y = fx + sigma_tilde * g;
        let f2x = f2.eval_function(x)?;
        llr.push(((y - f2x).powi(2) - (y - fx).powi(2)) / s2);
    }
    let k = samples as f64;
    let mean = llr.iter().sum::<f64>() / k;
    let var = llr.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Ok((n as f64 * mean, n as f64 * (var / k).sqrt()))
}

/// `σ̃ = min{σ, B}`.
pub fn sigma_tilde(sigma: f64, b: f64) -> f64 {
    sigma.min(b)
}

/// `α* = (1/M) Σ_{j≥1} K(P_j^n, P_0^n)`.
pub fn alpha_star(family: &PackingFamily, n: usize, sigma_tilde: f64) -> Result<f64> {
    let fs = family.functions();
    if fs.len() < 2 {
        return arg("family needs at least one alternative besides f_0");
    }
    let mut s = 0.0;
    for f in &fs[1..] {
        s += kl_divergence(f, &fs[0], n, sigma_tilde)?;
    }
    Ok(s / (fs.len() - 1) as f64)
}

/// `ε` for which `α*` equals `target` (the divergence is linear in `ε`).
pub fn eps_for_alpha_star(
    model: &Arc<SpectrumModel>,
    code: &BinaryCode,
    gamma: f64,
    n: usize,
    sigma_tilde: f64,
    target: f64,
) -> Result<f64> {
    if !(target > 0.0) {
        return arg(format!("target α* must be positive, got {target}"));
    }
    let unit = build_alternatives(model, code, 1.0, gamma)?;
    let a1 = alpha_star(&unit, n, sigma_tilde)?;
    if !(a1 > 0.0) {
        return arg("code has no non-zero alternative");
    }
    Ok(target / a1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundValue {
    /// `max{raw, 0}`.
    pub value: f64,
    pub raw: f64,
}

/// `√M/(√M + 1) (1 − 3α*/ln M − 1/(2 ln M))`.
pub fn lower_bound_value(m_alt: f64, alpha_star: f64) -> Result<LowerBoundValue> {
    if !(m_alt >= 2.0) {
        return arg(format!("need M ≥ 2, got {m_alt}"));
    }
    if !(alpha_star >= 0.0) {
        return arg(format!("alpha_star must be non-negative, got {alpha_star}"));
    }
    let s = m_alt.sqrt();
    let l = m_alt.ln();
    let raw = s / (s + 1.0) * (1.0 - 3.0 * alpha_star / l - 1.0 / (2.0 * l));
    Ok(LowerBoundValue {
        value: raw.max(0.0),
        raw,
    })
}

fn max_of<T: PartialOrd>(a: T, b: T) -> T {
    if a >= b {
        a
    } else {
        b
    }
}

/// `(max{α,β} − γ)/(max{α,β} + q − γ(1 − q/p))`.
pub fn lower_rate_exponent<T>(beta: T, gamma: T, p: T, q: T, alpha: T) -> Result<T>
where
    T: Num + PartialOrd + Copy + Debug,
{
    let (zero, one, two) = (T::zero(), T::one(), T::one() + T::one());
    if !(zero < q && q <= p && p <= alpha && alpha <= one) {
        return arg(format!(
            "need 0 < q ≤ p ≤ α ≤ 1, got q = {q:?}, p = {p:?}, α = {alpha:?}"
        ));
    }
    if !(zero <= gamma && gamma < beta && beta <= two && gamma <= one) {
        return arg(format!(
            "need 0 ≤ γ ≤ 1 and γ < β ≤ 2, got γ = {gamma:?}, β = {beta:?}"
        ));
    }
    let mx = max_of(alpha, beta);
    Ok((mx - gamma) / (mx + q - gamma * (one - q / p)))
}

/// Inputs for coupling `ε` and the code length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanInputs {
    pub beta: f64,
    pub gamma: f64,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    /// Lower decay constant in `μ_i ≥ c_lb i^{−1/q}`.
    pub c_lb: f64,
    /// Cap on `‖f‖²_β`.
    pub c_src: f64,
    /// Cap on `‖f‖²_{L∞}`.
    pub c_inf: f64,
    /// `A = ‖k^α‖²∞`.
    pub a_emb: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PackingPlan {
    pub eps: f64,
    pub u: f64,
    pub v: f64,
    pub c_v1: f64,
    pub c_v2: Option<f64>,
    pub c_v: f64,
    /// `⌊C_v ε^{−u}⌋`.
    pub m: usize,
    /// `⌈2^{m/8}⌉`.
    pub code_size: usize,
}

/// `m = ⌊C_v ε^{−u}⌋` with `u = q/(max{α,β} − γ)`, `v = γ/p`,
/// `C_v1 = ½ c_lb^q (C_src/32)^{q/(β−γ)}` and, when `γ < α`,
/// `C_v2 = ½ c_lb^q (C_inf/(32A))^{q/(α−γ)}`.
pub fn packing_plan(inp: PlanInputs, eps: f64) -> Result<PackingPlan> {
    let PlanInputs {
        beta,
        gamma,
        p,
        q,
        alpha,
        c_lb,
        c_src,
        c_inf,
        a_emb,
    } = inp;
    lower_rate_exponent(beta, gamma, p, q, alpha)?;
    if !(eps > 0.0) {
        return arg(format!("eps must be positive, got {eps}"));
    }
    if !(c_lb > 0.0 && c_src > 0.0 && c_inf > 0.0 && a_emb > 0.0) {
        return arg("plan constants must be positive");
    }
    let u = q / (alpha.max(beta) - gamma);
    let v = gamma / p;
    let c_v1 = 0.5 * c_lb.powf(q) * (c_src / 32.0).powf(q / (beta - gamma));
    let c_v2 = (gamma < alpha).then(|| 0.5 * c_lb.powf(q) * (c_inf / (32.0 * a_emb)).powf(q / (alpha - gamma)));
    let c_v = c_v2.map_or(c_v1, |c2| c_v1.min(c2));
    let m_real = (c_v * eps.powf(-u)).floor();
    if !(m_real.is_finite() && m_real < 1e9) {
        return arg(format!("code length {m_real} is not representable"));
    }
    let m = m_real as usize;
    Ok(PackingPlan {
        eps,
        u,
        v,
        c_v1,
        c_v2,
        c_v,
        m,
        code_size: if m >= 8 { gv_target(m) } else { 0 },
    })
}

/// `2^{(C_v/9) ε^{−u}} ≤ M ≤ 2^{3 (C_v/9) ε^{−u}}` for a code with `M` non-zero words.
pub fn code_size_window_check(plan: &PackingPlan, m_alt: usize) -> CheckResult {
    let e = plan.c_v / 9.0 * plan.eps.powf(-plan.u);
    let lg = (m_alt as f64).log2();
    let ok = plan.m >= 8 && e <= lg + 1e-12 && lg <= 3.0 * e + 1e-12;
    CheckResult::new(
        "code-size window",
        ok,
        format!("log2 M = {lg:.4} in [{e:.4}, {:.4}] (m = {})", 3.0 * e, plan.m),
    )
}

/// Setup of the empirical testing game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub n: usize,
    pub sigma_tilde: f64,
    pub lambda: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameReport {
    pub spec: GameSpec,
    pub alternatives: usize,
    pub error_rates: Vec<f64>,
    pub max_error: f64,
    pub alpha_star: f64,
    pub bound: LowerBoundValue,
    pub standard_error: f64,
    pub consistent: bool,
}

/// Index of the alternative nearest to `f` in `[H]^γ`; ties go to the lowest index.
pub fn nearest_alternative(family: &PackingFamily, f: &CoefficientVector) -> Result<usize> {
    let mut best = (f64::INFINITY, 0);
    for (j, g) in family.functions().iter().enumerate() {
        let d = f.sub(g)?.power_norm_sq(family.gamma())?;
        if d < best.0 {
            best = (d, j);
        }
    }
    Ok(best.1)
}

/// For every alternative `j`, simulate datasets from `P_{f_j}`, fit an
/// LS-SVM, classify by nearest alternative and record the misclassification
/// rate. The max over `j` is compared to the testing lower bound.
pub fn testing_game(family: &PackingFamily, spec: GameSpec) -> Result<GameReport> {
    if spec.trials == 0 {
        return arg("testing game needs at least one trial");
    }
    let model = family.model();
    let k = family.functions().len();
    let tasks: Vec<(usize, usize)> = (0..k).flat_map(|j| (0..spec.trials).map(move |t| (j, t))).collect();
    let wrong: Vec<bool> = tasks
        .par_iter()
        .map(|&(j, t)| {
            let mut rng = stream_rng(spec.seed, cell_stream(j, t));
            let data = sample_dataset_with(&family.functions()[j], spec.n, spec.sigma_tilde, &mut rng, Some(spec.seed))?;
            let w = fit(model, &data, spec.lambda)?;
            Ok(nearest_alternative(family, &w.extract_coefficients())? != j)
        })
        .collect::<Result<_>>()?;
    let error_rates: Vec<f64> = (0..k)
        .map(|j| {
            let block = &wrong[j * spec.trials..(j + 1) * spec.trials];
            block.iter().filter(|w| **w).count() as f64 / spec.trials as f64
        })
        .collect();
    let max_error = error_rates.iter().cloned().fold(0.0, f64::max);
    let a_star = alpha_star(family, spec.n, spec.sigma_tilde)?;
    let bound = lower_bound_value((k - 1) as f64, a_star)?;
    let b = bound.value;
    let se = (b * (1.0 - b) / spec.trials as f64).sqrt();
    Ok(GameReport {
        spec,
        alternatives: k - 1,
        error_rates,
        max_error,
        alpha_star: a_star,
        bound,
        standard_error: se,
        consistent: max_error >= b - 3.0 * se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn model(t: usize) -> Arc<SpectrumModel> {
        Arc::new(SpectrumModel::power_law(1.0, 0.5, t).unwrap())
    }

    #[test]
    fn gv_small_codes() {
        assert!(gilbert_varshamov(7, 2, 0, 100).is_err());
        let c8 = gilbert_varshamov(8, gv_target(8), 1, 10_000).unwrap();
        assert!(c8.alternatives() >= 2);
        assert!(c8.min_squared_distance().unwrap() >= 1);
        let c16 = gilbert_varshamov(16, gv_target(16), 1, 10_000).unwrap();
        assert!(c16.alternatives() >= 4);
        assert!(c16.min_squared_distance().unwrap() >= 2);
        let hopeless = gilbert_varshamov(8, 300, 1, 50);
        assert!(matches!(hopeless, Err(LabError::Construction(_))));
    }

    #[test]
    fn family_examples() {
        let m = model(32);
        let code = BinaryCode::new(
            8,
            vec![vec![0; 8], vec![1, 0, 0, 0, 0, 0, 0, 0], vec![0, 1, 0, 0, 0, 0, 0, 0]],
        )
        .unwrap();
        let fam = build_alternatives(&m, &code, 0.5, 0.0).unwrap();
        assert!(fam.functions()[0].coeffs().iter().all(|a| *a == 0.0));
        let d = fam.functions()[1].sub(&fam.functions()[0]).unwrap().power_norm_sq(0.0).unwrap();
        assert!((d - 2.0).abs() < 1e-14);
        assert!(build_alternatives(&model(15), &code, 0.5, 0.0).is_err());
        let fam_g = build_alternatives(&m, &code, 0.5, 0.7).unwrap();
        let dg = fam_g.functions()[1].sub(&fam_g.functions()[0]).unwrap().power_norm_sq(0.7).unwrap();
        // (32ε/m)·(m/8) = 4ε with a single differing bit at m = 8
        assert!((dg - 2.0).abs() < 1e-13);
        let rec = fam.record();
        assert_eq!(rec.offset, 8);
        assert_eq!(rec.words[1], "10000000");
    }

    #[test]
    fn kl_examples() {
        let m = model(4);
        let f = CoefficientVector::new(Arc::clone(&m), vec![0.0, 0.2f64.sqrt(), 0.0, 0.0]).unwrap();
        let z = CoefficientVector::zeros(Arc::clone(&m));
        assert_eq!(kl_divergence(&f, &f, 10, 1.0).unwrap(), 0.0);
        assert!((kl_divergence(&f, &z, 10, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(
            kl_divergence(&f, &z, 20, 1.0).unwrap(),
            2.0 * kl_divergence(&f, &z, 10, 1.0).unwrap()
        );
        assert!(kl_divergence(&f, &z, 10, 0.0).is_err());
    }

    #[test]
    fn lower_bound_examples() {
        let v = lower_bound_value(4.0, 0.0).unwrap();
        let want = 2.0 / 3.0 * (1.0 - 1.0 / (2.0 * 4f64.ln()));
        assert!((v.value - want).abs() < 1e-15);
        assert!((v.value - 0.4262).abs() < 1e-4);
        let vac = lower_bound_value(4.0, 1e6).unwrap();
        assert!(vac.raw < 0.0);
        assert_eq!(vac.value, 0.0);
        // the 1/(2 ln M) term dominates the approach to 1
        let big = lower_bound_value(1e8, 0.0).unwrap().value;
        let want = 1e4 / (1e4 + 1.0) * (1.0 - 1.0 / (2.0 * 1e8f64.ln()));
        assert!((big - want).abs() < 1e-15 && big > 0.97);
        assert!(lower_bound_value(1e25, 0.0).unwrap().value >= 0.99);
        assert!(lower_bound_value(1.5, 0.0).is_err());
    }

    #[test]
    fn lower_exponent_examples() {
        let r = |a, b| Ratio::new(a, b);
        assert_eq!(
            lower_rate_exponent(r(1, 1), r(0, 1), r(1, 2), r(1, 2), r(1, 2)).unwrap(),
            r(2, 3)
        );
        // γ = 0, β ≤ α gives α/(α + q)
        assert_eq!(
            lower_rate_exponent(r(1, 4), r(0, 1), r(1, 2), r(1, 3), r(3, 4)).unwrap(),
            r(3, 4) / (r(3, 4) + r(1, 3))
        );
        assert!(lower_rate_exponent(1.0, 0.0, 0.5, 0.6, 0.5).is_err());
    }

    #[test]
    fn plan_bookkeeping() {
        let inp = PlanInputs {
            beta: 1.0,
            gamma: 0.0,
            p: 0.5,
            q: 0.5,
            alpha: 0.5,
            c_lb: 1.0,
            c_src: 32.0,
            c_inf: 32.0,
            a_emb: 1.0,
        };
        let plan = packing_plan(inp, 1e-3).unwrap();
        assert!((plan.u - 0.5).abs() < 1e-15);
        assert!((plan.c_v1 - 0.5).abs() < 1e-15);
        assert_eq!(plan.m, (0.5 * 1e-3f64.powf(-0.5)).floor() as usize);
        assert!(code_size_window_check(&plan, plan.code_size).passed);
    }
}
