//! Bernstein inequalities for Hilbert-space valued averages, checked by
//! Monte Carlo on finite-dimensional vectors, and the elementary bound on
//! `sup_t t^b/(a + t)`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::config::KeyValueFile;
use crate::error::{arg, LabError, Result};
use crate::rng::{stream_rng, LabRng};

/// Largest moment order used when matching `B` to a Gaussian.
const GAUSSIAN_MOMENT_ORDERS: usize = 100;
/// Dimension cap for vector-valued variables.
pub const MAX_DIMENSION: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BernsteinVariant {
    /// `E‖ξ‖^m ≤ ½ m! σ² B^{m−2}`: `σ*² = 5σ²`, `B* = B`.
    MomentForm,
    /// `‖ξ‖ ≤ B` a.s. and `E‖ξ‖² ≤ σ²`: `σ*² = 4σ²`, `B* = 2B`.
    SupForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernsteinParams {
    pub sigma: f64,
    pub b: f64,
    pub n: usize,
    pub tau: f64,
    pub variant: BernsteinVariant,
}

/// `2τ(√(σ*²/n) + B*/n)`.
pub fn bernstein_threshold(params: &BernsteinParams) -> Result<f64> {
    let BernsteinParams {
        sigma,
        b,
        n,
        tau,
        variant,
    } = *params;
    if !(tau >= 1.0) {
        return arg(format!("tau must be at least 1, got {tau}"));
    }
    if !(sigma > 0.0 && b > 0.0) {
        return arg(format!("sigma and B must be positive, got σ = {sigma}, B = {b}"));
    }
    if n == 0 {
        return arg("n must be at least 1");
    }
    let nf = n as f64;
    let (s2, bs) = match variant {
        BernsteinVariant::MomentForm => (5.0 * sigma * sigma, b),
        BernsteinVariant::SupForm => (4.0 * sigma * sigma, 2.0 * b),
    };
    Ok(2.0 * tau * ((s2 / nf).sqrt() + bs / nf))
}

/// Finite-dimensional random vectors used as summands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    /// `N(0, s² I_d)`.
    Gaussian { dimension: usize, scale: f64 },
    /// Uniform on the cube `[−r, r]^d`.
    Bounded { dimension: usize, radius: f64 },
    /// The fixed vector `value`.
    Constant { value: Vec<f64> },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        let d = self.dimension();
        if d == 0 || d > MAX_DIMENSION {
            return arg(format!("dimension must lie in 1..={MAX_DIMENSION}, got {d}"));
        }
        match self {
            DistributionSpec::Gaussian { scale, .. } if !(*scale > 0.0) => {
                arg(format!("gaussian scale must be positive, got {scale}"))
            }
            DistributionSpec::Bounded { radius, .. } if !(*radius > 0.0) => {
                arg(format!("cube radius must be positive, got {radius}"))
            }
            DistributionSpec::Constant { value } if value.iter().any(|v| !v.is_finite()) => {
                arg("constant vector must be finite")
            }
            _ => Ok(()),
        }
    }

    /// Reads `kind`, `dimension` and `scale` / `radius` / `value` keys.
    pub fn from_key_values(kv: &KeyValueFile) -> Result<Self> {
        let kind: String = kv.require("kind")?;
        let spec = match kind.as_str() {
            "gaussian" => DistributionSpec::Gaussian {
                dimension: kv.require("dimension")?,
                scale: kv.get_or("scale", 1.0)?,
            },
            "bounded" => DistributionSpec::Bounded {
                dimension: kv.require("dimension")?,
                radius: kv.get_or("radius", 1.0)?,
            },
            "constant" => DistributionSpec::Constant {
                value: kv
                    .get_list("value")?
                    .ok_or_else(|| LabError::Config("missing key `value`".into()))?,
            },
            other => {
                return Err(LabError::Config(format!(
                    "unknown distribution kind `{other}` (expected gaussian, bounded or constant)"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dimension(&self) -> usize {
        match self {
            DistributionSpec::Gaussian { dimension, .. } | DistributionSpec::Bounded { dimension, .. } => {
                *dimension
            }
            DistributionSpec::Constant { value } => value.len(),
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        match self {
            DistributionSpec::Constant { value } => value.clone(),
            _ => vec![0.0; self.dimension()],
        }
    }

    pub fn sample_into(&self, rng: &mut LabRng, out: &mut [f64]) {
        match self {
            DistributionSpec::Gaussian { scale, .. } => {
                for v in out.iter_mut() {
                    let g: f64 = rng.sample(StandardNormal);
                    *v = scale * g;
                }
            }
            DistributionSpec::Bounded { radius, .. } => {
                for v in out.iter_mut() {
                    *v = rng.random_range(-*radius..=*radius);
                }
            }
            DistributionSpec::Constant { value } => out.copy_from_slice(value),
        }
    }

    /// Almost-sure bound on `‖ξ‖`, if any.
    pub fn sup_norm(&self) -> Option<f64> {
        match self {
            DistributionSpec::Gaussian { .. } => None,
            DistributionSpec::Bounded { dimension, radius } => Some(radius * (*dimension as f64).sqrt()),
            DistributionSpec::Constant { value } => Some(norm(value)),
        }
    }

    /// An upper bound on `E‖ξ‖^m`. Exact for the Gaussian, the constant and the
    /// cube at `m ∈ {0, 2, 4}`; for the cube at `m = 1, 3` Cauchy–Schwarz is used
    /// and for `m ≥ 5` the bound `R^{m−2} E‖ξ‖²` with `R = radius·√d`.
    pub fn norm_moment(&self, m: usize) -> f64 {
        match self {
            DistributionSpec::Gaussian { dimension, scale } => {
                // ‖ξ‖/s is chi-distributed with d degrees of freedom
                let (d, mf) = (*dimension as f64, m as f64);
                (mf * scale.ln() + 0.5 * mf * 2f64.ln() + ln_gamma((d + mf) / 2.0) - ln_gamma(d / 2.0)).exp()
            }
            DistributionSpec::Bounded { dimension, radius } => {
                let d = *dimension as f64;
                let r2 = radius * radius;
                let second = d * r2 / 3.0;
                let fourth = d * r2 * r2 / 5.0 + d * (d - 1.0) * r2 * r2 / 9.0;
                match m {
                    0 => 1.0,
                    1 => second.sqrt(),
                    2 => second,
                    3 => (second * fourth).sqrt(),
                    4 => fourth,
                    _ => (radius * d.sqrt()).powi(m as i32 - 2) * second,
                }
            }
            DistributionSpec::Constant { value } => norm(value).powi(m as i32),
        }
    }

    /// Smallest `(σ, B)` for the chosen variant: `σ² = E‖ξ‖²` and `B` either the
    /// a.s. bound or the least `B` with `E‖ξ‖^m ≤ ½ m! σ² B^{m−2}` for
    /// `3 ≤ m ≤ 100`.
    pub fn matched_params(&self, variant: BernsteinVariant) -> Result<(f64, f64)> {
        self.validate()?;
        let m2 = self.norm_moment(2);
        if m2 == 0.0 {
            // all moments vanish; any positive pair works
            return Ok((1.0, 1.0));
        }
        let sigma = m2.sqrt();
        let b = match (variant, self.sup_norm()) {
            (_, Some(r)) => r,
            (BernsteinVariant::SupForm, None) => {
                return Err(LabError::Precondition(
                    "sup form needs an almost surely bounded distribution".into(),
                ))
            }
            (BernsteinVariant::MomentForm, None) => (3..=GAUSSIAN_MOMENT_ORDERS)
                .map(|m| {
                    let ln_fact = ln_gamma(m as f64 + 1.0);
                    let ln_ratio = (2.0f64).ln() + self.norm_moment(m).ln() - ln_fact - m2.ln();
                    (ln_ratio / (m as f64 - 2.0)).exp()
                })
                .fold(0.0, f64::max),
        };
        Ok((sigma, b))
    }

    /// Moment hypothesis of `variant` for `(σ, B)`; returns the failing
    /// conditions (empty when all hold). The moment form checks `m ∈ {2, 3, 4}`.
    pub fn moment_precheck(&self, variant: BernsteinVariant, sigma: f64, b: f64) -> Vec<String> {
        let mut failed = Vec::new();
        let slack = 1.0 + 1e-12;
        match variant {
            BernsteinVariant::MomentForm => {
                for m in 2..=4usize {
                    let lhs = self.norm_moment(m);
                    let fact = (1..=m).product::<usize>() as f64;
                    let rhs = 0.5 * fact * sigma * sigma * b.powi(m as i32 - 2);
                    if lhs > rhs * slack {
                        failed.push(format!("m = {m}: E‖ξ‖^m = {lhs:.6e} > {rhs:.6e}"));
                    }
                }
            }
            BernsteinVariant::SupForm => {
                match self.sup_norm() {
                    Some(r) if r <= b * slack => {}
                    Some(r) => failed.push(format!("‖ξ‖∞ = {r:.6e} > B = {b:.6e}")),
                    None => failed.push("‖ξ‖ is not almost surely bounded".to_string()),
                }
                let m2 = self.norm_moment(2);
                if m2 > sigma * sigma * slack {
                    failed.push(format!("m = 2: E‖ξ‖² = {m2:.6e} > σ² = {:.6e}", sigma * sigma));
                }
            }
        }
        failed
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCheckReport {
    pub params: BernsteinParams,
    pub distribution: DistributionSpec,
    pub threshold: f64,
    pub trials: usize,
    pub violations: usize,
    pub violation_rate: f64,
    /// `2e^{−τ}`.
    pub allowed_rate: f64,
    pub standard_error: f64,
    pub pass: bool,
}

/// Fraction of trials in which `‖(1/n)Σξ_i − Eξ‖ ≥ threshold`.
pub fn bernstein_tail_check(
    params: &BernsteinParams,
    dist: &DistributionSpec,
    trials: usize,
    seed: u64,
) -> Result<TailCheckReport> {
    dist.validate()?;
    if trials == 0 {
        return arg("tail check needs at least one trial");
    }
    let threshold = bernstein_threshold(params)?;
    let failed = dist.moment_precheck(params.variant, params.sigma, params.b);
    if !failed.is_empty() {
        return Err(LabError::Precondition(format!(
            "moment condition fails: {}",
            failed.join("; ")
        )));
    }
    let d = dist.dimension();
    let mean = dist.mean();
    let n = params.n;
    let violations = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t as u64);
            let mut acc = vec![0.0; d];
            let mut xi = vec![0.0; d];
            for _ in 0..n {
                dist.sample_into(&mut rng, &mut xi);
                for (a, x) in acc.iter_mut().zip(&xi) {
                    *a += x;
                }
            }
            let dev: Vec<f64> = acc.iter().zip(&mean).map(|(a, m)| a / n as f64 - m).collect();
            usize::from(norm(&dev) >= threshold)
        })
        .sum::<usize>();
    let rate = violations as f64 / trials as f64;
    let p0 = (2.0 * (-params.tau).exp()).min(1.0);
    let se = (p0 * (1.0 - p0) / trials as f64).sqrt();
    Ok(TailCheckReport {
        params: *params,
        distribution: dist.clone(),
        threshold,
        trials,
        violations,
        violation_rate: rate,
        allowed_rate: p0,
        standard_error: se,
        pass: rate <= p0 + 3.0 * se,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupFraction {
    pub value: f64,
    /// `+∞` when the supremum is only approached (`b = 1`).
    pub argmax: f64,
    pub lower: f64,
    pub upper: f64,
}

impl SupFraction {
    pub fn within_bounds(&self) -> bool {
        self.lower <= self.value * (1.0 + 1e-12) && self.value <= self.upper * (1.0 + 1e-12)
    }
}

fn check_ab(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return arg(format!("a must be positive, got {a}"));
    }
    if !(0.0..=1.0).contains(&b) {
        return arg(format!("b must lie in [0, 1], got {b}"));
    }
    Ok(())
}

fn frac(a: f64, b: f64, t: f64) -> f64 {
    // 0^0 = 1
    let num = if b == 0.0 { 1.0 } else { t.powf(b) };
    num / (a + t)
}

/// `sup_{t ≥ 0} t^b/(a + t)` in closed form, with the bounds `½a^{b−1}` and `a^{b−1}`.
pub fn sup_fraction(a: f64, b: f64) -> Result<SupFraction> {
    check_ab(a, b)?;
    let (value, argmax) = if b == 1.0 {
        (1.0, f64::INFINITY)
    } else {
        let t = a * b / (1.0 - b);
        (frac(a, b, t), t)
    };
    let upper = a.powf(b - 1.0);
    Ok(SupFraction {
        value,
        argmax,
        lower: 0.5 * upper,
        upper,
    })
}

/// Numerical maximum of `t^b/(a + t)` over `t = 0` and a log grid
/// `a·[1e−12, 1e15]`, refined by golden-section search around the best node.
pub fn sup_fraction_numeric(a: f64, b: f64, points: usize) -> Result<f64> {
    check_ab(a, b)?;
    if points < 3 {
        return arg("need at least 3 grid points");
    }
    let (lo, hi) = ((a * 1e-12).ln(), (a * 1e15).ln());
    let step = (hi - lo) / (points - 1) as f64;
    let mut best = (frac(a, b, 0.0), None);
    for k in 0..points {
        let t = (lo + k as f64 * step).exp();
        let v = frac(a, b, t);
        if v > best.0 {
            best = (v, Some(k));
        }
    }
    let Some(k) = best.1 else {
        return Ok(best.0);
    };
    let g = |s: f64| frac(a, b, s.exp());
    let (mut x0, mut x1) = (lo + (k as f64 - 1.0) * step, lo + (k as f64 + 1.0) * step);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = x1 - r * (x1 - x0);
        let d = x0 + r * (x1 - x0);
        if g(c) >= g(d) {
            x1 = d;
        } else {
            x0 = c;
        }
    }
    Ok(best.0.max(g(0.5 * (x0 + x1))))
}
