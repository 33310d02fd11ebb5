//! One function per command. Each returns checks, info lines and artifacts;
//! nothing here touches the file system except for reading inputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use rates_lab::concentration::{
    bernstein_tail_check, sup_fraction, sup_fraction_numeric, BernsteinParams, BernsteinVariant, DistributionSpec,
};
use rates_lab::config::KeyValueFile;
use rates_lab::lssvm::{approximation_error, effective_dimension, effective_dimension_bound};
use rates_lab::minimax::{
    alpha_star, budget_check, build_alternatives, code_size_window_check, eps_for_alpha_star, gilbert_varshamov,
    gv_target, kl_divergence, kl_monte_carlo, lower_rate_exponent, packing_plan, sigma_tilde, testing_game,
    GameSpec, PlanInputs,
};
use rates_lab::rate_lab::{run_sweep, schedule_value, theoretical_exponent, ExperimentConfig, ScheduleCase};
use rates_lab::rng::stream_rng;
use rates_lab::{CheckResult, CoefficientVector, LabError, SpectrumModel};
use serde::Serialize;

use crate::tables::{exponent_table, render_tables, RateRow};
use crate::{Artifact, CliError, CommandOutput};

fn load(path: Option<&Path>) -> Result<KeyValueFile, CliError> {
    Ok(match path {
        Some(p) => KeyValueFile::from_path(p)?,
        None => KeyValueFile::default(),
    })
}

fn reject_unknown(kv: &KeyValueFile, allowed: &[&str]) -> Result<(), CliError> {
    match kv.keys().find(|k| !allowed.contains(k)) {
        Some(k) => Err(LabError::Config(format!("unknown key `{k}`")).into()),
        None => Ok(()),
    }
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(value).map_err(LabError::from)? + "\n")
}

/// Default experiment: `μ_i = i^{−2}`, `β = 1`, `α = 0.5`, `γ = 0`, `σ = 0.3`.
pub fn default_rates_config() -> ExperimentConfig {
    ExperimentConfig::new(1.0, 0.5, 0.5, 0.0, 0.3)
}

pub fn rates(config: Option<&Path>, seed: Option<u64>) -> Result<CommandOutput, CliError> {
    let mut cfg = match config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => default_rates_config(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let model = Arc::new(cfg.model()?);
    let report = run_sweep(&model, &cfg)?;
    let mut out = CommandOutput::default();
    out.info.push(format!(
        "schedule {}, abscissa {}, n = {:?}, {} replications",
        cfg.schedule.id(),
        report.abscissa,
        cfg.n_grid,
        cfg.replications
    ));
    for s in &report.per_n {
        out.info.push(format!(
            "n = {:>6}  λ = {:.4e}  mean error² = {:.4e}  q90 = {:.4e}  approximation = {:.4e}",
            s.n, s.lambda, s.mean_error_sq, s.q90_error_sq, s.approximation_error_sq
        ));
    }
    if let Some(d) = &report.lambda_diagnostic {
        out.info.push(format!(
            "λ-constant diagnostic: slopes {:?} for constants {:?}; closest constant {}",
            d.slopes, d.constants, d.best_constant
        ));
    }
    out.info.extend(report.notes.iter().map(|n| format!("note: {n}")));
    out.checks.push(CheckResult::new(
        "rate slope",
        report.pass,
        format!(
            "slope {:.4} vs {:.4} ± {} (q90 slope {:.4})",
            report.slope, report.expected_slope, report.slope_tol, report.q90_slope
        ),
    ));
    let row = RateRow::from_report(&report);
    let (_, csv) = render_tables(&[row]);
    out.artifacts.push(Artifact::new("report.json", report.to_json()? + "\n"));
    out.artifacts.push(Artifact::new("cells.csv", report.cells_csv()));
    out.artifacts.push(Artifact::new("summary.csv", report.summary_csv()));
    out.artifacts.push(Artifact::new("table.csv", csv));
    out.artifacts.push(Artifact::new("config.txt", cfg.to_key_values()));
    Ok(out)
}

const LOWER_BOUND_KEYS: &[&str] = &[
    "beta",
    "gamma",
    "p",
    "q",
    "alpha",
    "c",
    "truncation",
    "m",
    "eps",
    "target_alpha_star",
    "n",
    "sigma",
    "b",
    "lambda",
    "trials",
    "kl_samples",
    "seed",
    "gv_tries",
    "c_src",
    "c_inf",
    "c_lb",
];

/// Setup of the `lower-bound` command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundConfig {
    pub beta: f64,
    pub gamma: f64,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub c: f64,
    pub truncation: usize,
    pub m: usize,
    /// Packing scale; derived from `target_alpha_star` when absent.
    pub eps: Option<f64>,
    pub target_alpha_star: f64,
    pub n: usize,
    pub sigma: f64,
    /// Noise bound `B`; `σ̃ = min{σ, B}`.
    pub b: Option<f64>,
    /// Defaults to the upper-rate schedule at `n`.
    pub lambda: Option<f64>,
    pub trials: usize,
    pub kl_samples: usize,
    pub seed: u64,
    pub gv_tries: usize,
    pub c_src: Option<f64>,
    pub c_inf: Option<f64>,
    pub c_lb: Option<f64>,
}

impl Default for LowerBoundConfig {
    fn default() -> Self {
        LowerBoundConfig {
            beta: 1.0,
            gamma: 0.0,
            p: 0.5,
            q: 0.5,
            alpha: 0.5,
            c: 1.0,
            truncation: 256,
            m: 16,
            eps: None,
            target_alpha_star: 0.05,
            n: 200,
            sigma: 0.5,
            b: None,
            lambda: None,
            trials: 100,
            kl_samples: 100_000,
            seed: 0,
            gv_tries: 1_000_000,
            c_src: None,
            c_inf: None,
            c_lb: None,
        }
    }
}

impl LowerBoundConfig {
    pub fn from_key_values(kv: &KeyValueFile) -> Result<Self, CliError> {
        reject_unknown(kv, LOWER_BOUND_KEYS)?;
        let d = LowerBoundConfig::default();
        let p = kv.get_or("p", d.p)?;
        Ok(LowerBoundConfig {
            beta: kv.get_or("beta", d.beta)?,
            gamma: kv.get_or("gamma", d.gamma)?,
            p,
            q: kv.get_or("q", p)?,
            alpha: kv.get_or("alpha", d.alpha)?,
            c: kv.get_or("c", d.c)?,
            truncation: kv.get_or("truncation", d.truncation)?,
            m: kv.get_or("m", d.m)?,
            eps: kv.get("eps")?,
            target_alpha_star: kv.get_or("target_alpha_star", d.target_alpha_star)?,
            n: kv.get_or("n", d.n)?,
            sigma: kv.get_or("sigma", d.sigma)?,
            b: kv.get("b")?,
            lambda: kv.get("lambda")?,
            trials: kv.get_or("trials", d.trials)?,
            kl_samples: kv.get_or("kl_samples", d.kl_samples)?,
            seed: kv.get_or("seed", d.seed)?,
            gv_tries: kv.get_or("gv_tries", d.gv_tries)?,
            c_src: kv.get("c_src")?,
            c_inf: kv.get("c_inf")?,
            c_lb: kv.get("c_lb")?,
        })
    }
}

#[derive(Debug, Serialize)]
struct LowerBoundReport<'a> {
    config: &'a LowerBoundConfig,
    lower_rate_exponent: f64,
    upper_rate_exponent: f64,
    eps: f64,
    sigma_tilde: f64,
    alpha_star: f64,
    kl_closed_form: f64,
    kl_monte_carlo: f64,
    kl_standard_error: f64,
    packing: rates_lab::minimax::PackingRecord,
    plan: Option<rates_lab::minimax::PackingPlan>,
    game: rates_lab::minimax::GameReport,
    checks: &'a [CheckResult],
}

pub fn lower_bound(config: Option<&Path>, seed: Option<u64>) -> Result<CommandOutput, CliError> {
    let mut cfg = match config {
        Some(_) => LowerBoundConfig::from_key_values(&load(config)?)?,
        None => LowerBoundConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let lower = lower_rate_exponent(cfg.beta, cfg.gamma, cfg.p, cfg.q, cfg.alpha)?;
    let upper = theoretical_exponent(cfg.beta, cfg.gamma, cfg.p, cfg.alpha)?;
    let model = Arc::new(SpectrumModel::power_law(cfg.c, cfg.p, cfg.truncation)?);
    let code = gilbert_varshamov(cfg.m, gv_target(cfg.m), cfg.seed, cfg.gv_tries)?;
    let s_tilde = sigma_tilde(cfg.sigma, cfg.b.unwrap_or(cfg.sigma));
    let eps = match cfg.eps {
        Some(e) => e,
        None => eps_for_alpha_star(&model, &code, cfg.gamma, cfg.n, s_tilde, cfg.target_alpha_star)?,
    };
    let fam = build_alternatives(&model, &code, eps, cfg.gamma)?;
    let mut checks = vec![CheckResult::new(
        "Gilbert–Varshamov code",
        code.verify().is_ok() && code.alternatives() >= gv_target(cfg.m),
        format!(
            "m = {}, M = {} ≥ {}, min distance {:?} ≥ m/8",
            cfg.m,
            code.alternatives(),
            gv_target(cfg.m),
            code.min_squared_distance()
        ),
    )];
    checks.push(fam.separation_check()?);
    checks.push(fam.l2_budget_check()?);
    let caps = (cfg.c_src, cfg.c_inf);
    checks.extend(
        budget_check(
            &fam,
            cfg.beta,
            cfg.alpha,
            caps.0.unwrap_or(f64::INFINITY),
            caps.1.unwrap_or(f64::INFINITY),
        )
        .into_iter()
        .filter(|c| c.name.contains("closed-form") || (c.name.contains("β") && caps.0.is_some()) || (c.name.contains("L∞") && caps.1.is_some())),
    );

    let plan = match (cfg.c_src, cfg.c_inf) {
        (Some(c_src), Some(c_inf)) => {
            let a = model.embedding_constant(cfg.alpha)?;
            let plan = packing_plan(
                PlanInputs {
                    beta: cfg.beta,
                    gamma: cfg.gamma,
                    p: cfg.p,
                    q: cfg.q,
                    alpha: cfg.alpha,
                    c_lb: cfg.c_lb.unwrap_or(cfg.c),
                    c_src,
                    c_inf,
                    a_emb: a * a,
                },
                eps,
            )?;
            if plan.m >= 8 && plan.m <= 64 {
                let planned = gilbert_varshamov(plan.m, plan.code_size, cfg.seed, cfg.gv_tries)?;
                checks.push(code_size_window_check(&plan, planned.alternatives()));
            }
            Some(plan)
        }
        _ => None,
    };

    let fs = fam.functions();
    let kl = kl_divergence(&fs[1], &fs[0], cfg.n, s_tilde)?;
    let (kl_mc, kl_se) = kl_monte_carlo(&fs[1], &fs[0], cfg.n, s_tilde, cfg.kl_samples, cfg.seed)?;
    checks.push(CheckResult::new(
        "KL identity",
        (kl - kl_mc).abs() <= 3.0 * kl_se,
        format!("closed form {kl:.5}, Monte Carlo {kl_mc:.5} ± {kl_se:.5}"),
    ));

    let lambda = match cfg.lambda {
        Some(l) => l,
        None => schedule_value(
            cfg.n,
            ScheduleCase::for_params(cfg.beta, cfg.alpha),
            cfg.beta,
            cfg.p,
            cfg.alpha,
        )?,
    };
    let game = testing_game(
        &fam,
        GameSpec {
            n: cfg.n,
            sigma_tilde: s_tilde,
            lambda,
            trials: cfg.trials,
            seed: cfg.seed,
        },
    )?;
    checks.push(CheckResult::new(
        "testing game above lower bound",
        game.consistent,
        format!(
            "max error {:.4} vs bound {:.4} − 3·{:.4} (M = {}, α* = {:.4})",
            game.max_error, game.bound.value, game.standard_error, game.alternatives, game.alpha_star
        ),
    ));

    let mut out = CommandOutput::default();
    out.info.push(format!(
        "lower exponent {lower:.6}, upper exponent {upper:.6}{}",
        if (lower - upper).abs() < 1e-12 { " (rates coincide)" } else { "" }
    ));
    out.info.push(format!("ε = {eps:.6e}, σ̃ = {s_tilde}, α* = {:.6}", alpha_star(&fam, cfg.n, s_tilde)?));
    let mut game_csv = String::from("alternative,error_rate\n");
    for (j, r) in game.error_rates.iter().enumerate() {
        let _ = writeln!(game_csv, "{j},{r:?}");
    }
    let mut words_csv = String::from("index,word\n");
    for (j, w) in code.word_strings().iter().enumerate() {
        let _ = writeln!(words_csv, "{j},{w}");
    }
    let report = LowerBoundReport {
        config: &cfg,
        lower_rate_exponent: lower,
        upper_rate_exponent: upper,
        eps,
        sigma_tilde: s_tilde,
        alpha_star: game.alpha_star,
        kl_closed_form: kl,
        kl_monte_carlo: kl_mc,
        kl_standard_error: kl_se,
        packing: fam.record(),
        plan,
        game: game.clone(),
        checks: &checks,
    };
    out.artifacts.push(Artifact::new("lower_bound.json", json(&report)?));
    out.artifacts.push(Artifact::new("game.csv", game_csv));
    out.artifacts.push(Artifact::new("codewords.csv", words_csv));
    out.checks = checks;
    Ok(out)
}

const LEMMA_KEYS: &[&str] = &[
    "p",
    "c",
    "truncation",
    "seed",
    "kind",
    "dimension",
    "scale",
    "radius",
    "value",
    "trials",
    "n",
    "sup_samples",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub passed: usize,
    pub total: usize,
    pub detail: String,
}

impl SuiteResult {
    fn check(&self) -> CheckResult {
        CheckResult::new(
            self.suite.clone(),
            self.passed == self.total,
            format!("{}/{} passed; {}", self.passed, self.total, self.detail),
        )
    }
}

fn suite(name: &str, results: &[bool], detail: impl Into<String>) -> SuiteResult {
    SuiteResult {
        suite: name.to_string(),
        passed: results.iter().filter(|r| **r).count(),
        total: results.len(),
        detail: detail.into(),
    }
}

pub fn lemmas(config: Option<&Path>, seed: Option<u64>) -> Result<CommandOutput, CliError> {
    let kv = load(config)?;
    reject_unknown(&kv, LEMMA_KEYS)?;
    let p: f64 = kv.get_or("p", 0.5)?;
    let c: f64 = kv.get_or("c", 1.0)?;
    let t: usize = kv.get_or("truncation", 256)?;
    let seed = match seed {
        Some(s) => s,
        None => kv.get_or("seed", 0)?,
    };
    let dist = if kv.contains("kind") {
        DistributionSpec::from_key_values(&kv)?
    } else {
        DistributionSpec::Gaussian {
            dimension: 3,
            scale: 1.0,
        }
    };
    let trials: usize = kv.get_or("trials", 10_000)?;
    let n: usize = kv.get_or("n", 25)?;
    let sup_samples: usize = kv.get_or("sup_samples", 1000)?;
    let model = Arc::new(SpectrumModel::power_law(c, p, t)?);
    let mut suites = Vec::new();

    // approximation error against λ^{β−γ}‖f‖²_β
    let f = CoefficientVector::from_fn(Arc::clone(&model), |i| (i as f64).powf(-(1.0 + 1.0 / p)));
    let mut res = Vec::new();
    for l in [1e-4, 1e-3, 1e-2, 1e-1, 1.0] {
        for g in [0.0, 0.25, 0.5, 0.75, 1.0] {
            for b in [1.0, 1.25, 1.5, 1.75, 2.0] {
                let err = approximation_error(&f, l, g)?;
                res.push(err <= f.power_norm_sq(b)? * l.powf(b - g) * (1.0 + 1e-12));
            }
        }
    }
    suites.push(suite("approximation error bound", &res, "(λ, γ, β) grid"));

    // effective dimension against Cλ^{−p}
    let res: Vec<bool> = (0..20)
        .map(|k| {
            let l = 10f64.powf(-6.0 + 6.0 * k as f64 / 19.0);
            Ok(effective_dimension(&model, l)? <= effective_dimension_bound(&model, l)?)
        })
        .collect::<Result<_, LabError>>()?;
    suites.push(suite("effective dimension bound", &res, "20-point λ grid"));

    // mean and sup of the leverage function Σ μ/(μ+λ) e_i(x)²
    let mut res = Vec::new();
    let grid = 100_000;
    let mut row = vec![0.0; t];
    for l in [1e-3, 1e-2, 1e-1, 1.0] {
        let w: Vec<f64> = model.eigenvalues().iter().map(|mu| mu / (mu + l)).collect();
        let (mut total, mut sup) = (0.0, 0.0f64);
        for k in 0..grid {
            model.family().fill((k as f64 + 0.5) / grid as f64, &mut row);
            let v: f64 = row.iter().zip(&w).map(|(e, w)| w * e * e).sum();
            total += v;
            sup = sup.max(v);
        }
        model.family().fill(0.0, &mut row);
        sup = sup.max(row.iter().zip(&w).map(|(e, w)| w * e * e).sum());
        res.push((total / grid as f64 - effective_dimension(&model, l)?).abs() <= 1e-4);
        for alpha in [0.5, 1.0] {
            if alpha >= p {
                let a = model.embedding_constant(alpha)?;
                res.push(sup <= a * a * l.powf(-alpha) * (1.0 + 1e-12));
            }
        }
    }
    suites.push(suite("L2 and L∞ leverage bounds", &res, "mean = N(λ), sup ≤ A²λ^(−α)"));

    // sup_t t^b/(a + t)
    let mut rng = stream_rng(seed, 1);
    let mut res = Vec::new();
    for _ in 0..sup_samples {
        let a = 10f64.powf(rng.random_range(-2.0..2.0));
        let b: f64 = rng.random_range(0.0..=1.0);
        let s = sup_fraction(a, b)?;
        let num = sup_fraction_numeric(a, b, 20_000)?;
        res.push(s.within_bounds() && (num - s.value).abs() <= 1e-6);
    }
    suites.push(suite("sup lemma", &res, "random (a, b), closed form vs log-grid maximum"));

    // Gilbert–Varshamov codes
    let res: Vec<bool> = [8usize, 16, 32, 64]
        .iter()
        .map(|&m| gilbert_varshamov(m, gv_target(m), seed, 1_000_000).is_ok_and(|c| c.verify().is_ok()))
        .collect();
    suites.push(suite("Gilbert–Varshamov verification", &res, "m ∈ {8, 16, 32, 64}"));

    // Bernstein tail
    let variant = if dist.sup_norm().is_some() {
        BernsteinVariant::SupForm
    } else {
        BernsteinVariant::MomentForm
    };
    let (sigma, b) = dist.matched_params(variant)?;
    let mut res = Vec::new();
    let mut rates = Vec::new();
    for tau in [1.0, 3.0, 5.0] {
        let r = bernstein_tail_check(
            &BernsteinParams {
                sigma,
                b,
                n,
                tau,
                variant,
            },
            &dist,
            trials,
            seed,
        )?;
        rates.push(format!("τ={tau}: {:.4}", r.violation_rate));
        res.push(r.pass);
    }
    suites.push(suite("Bernstein tail", &res, format!("{variant:?}, {}", rates.join(", "))));

    let mut out = CommandOutput::default();
    let mut csv = String::from("suite,passed,total\n");
    for s in &suites {
        let _ = writeln!(csv, "{},{},{}", s.suite, s.passed, s.total);
        out.checks.push(s.check());
    }
    out.artifacts.push(Artifact::new("lemmas.json", json(&suites)?));
    out.artifacts.push(Artifact::new("lemmas.csv", csv));
    Ok(out)
}

#[derive(Debug, Serialize)]
struct EmbeddingRow {
    gamma: f64,
    closed_form: f64,
    grid_sup: f64,
}

#[derive(Debug, Serialize)]
struct DimensionRow {
    lambda: f64,
    effective_dimension: f64,
    bound: Option<f64>,
}

#[derive(Debug, Serialize)]
struct KernelInfo {
    family: String,
    truncation: usize,
    trace: f64,
    decay: Option<rates_lab::spectral_kernel::DecayParams>,
    fitted_c: Option<f64>,
    fitted_p: Option<f64>,
    embedding: Vec<EmbeddingRow>,
    effective_dimension: Vec<DimensionRow>,
}

pub fn kernel_info(config: Option<&Path>) -> Result<CommandOutput, CliError> {
    let model = match config {
        Some(p) => SpectrumModel::from_spec_file(p)?,
        None => SpectrumModel::power_law(1.0, 0.5, rates_lab::spectral_kernel::DEFAULT_TRUNCATION)?,
    };
    let mut checks = Vec::new();
    let fitted = model.decay_fit().ok();
    let mut embedding = Vec::new();
    let mut emb_ok = true;
    for gamma in [0.25, 0.5, 0.75, 1.0] {
        let closed = model.embedding_constant(gamma)?;
        let (grid, _) = model.embedding_constant_on_grid(gamma, 64 * model.truncation())?;
        emb_ok &= grid <= closed * (1.0 + 1e-12);
        embedding.push(EmbeddingRow {
            gamma,
            closed_form: closed,
            grid_sup: grid,
        });
    }
    checks.push(CheckResult::new(
        "embedding constant attained",
        emb_ok,
        "grid sup of Σ μ_i^γ e_i(x)² never exceeds the closed form",
    ));
    let mut dims = Vec::new();
    let mut dim_ok = true;
    for k in 0..20 {
        let l = 10f64.powf(-6.0 + 6.0 * k as f64 / 19.0);
        let nl = effective_dimension(&model, l)?;
        let bound = effective_dimension_bound(&model, l).ok();
        dim_ok &= bound.is_none_or(|b| nl <= b);
        dims.push(DimensionRow {
            lambda: l,
            effective_dimension: nl,
            bound,
        });
    }
    if let Some(d) = model.decay_params() {
        checks.push(CheckResult::new(
            "effective dimension bound",
            dim_ok,
            format!("N(λ) ≤ Cλ^(−p) with c = {}, p = {}", d.c, d.p),
        ));
    }
    let info = KernelInfo {
        family: model.family().id().to_string(),
        truncation: model.truncation(),
        trace: model.trace(),
        decay: model.decay_params(),
        fitted_c: fitted.map(|f| f.0),
        fitted_p: fitted.map(|f| f.1),
        embedding,
        effective_dimension: dims,
    };
    let mut out = CommandOutput::default();
    out.info.push(format!(
        "{} spectrum, T = {}, trace {:.6}{}",
        info.family,
        info.truncation,
        info.trace,
        match fitted {
            Some((c, p)) => format!(", decay c = {c:.4}, p = {p:.4}"),
            None => String::new(),
        }
    ));
    for e in &info.embedding {
        out.info.push(format!("‖k^{}‖∞ = {:.6}", e.gamma, e.closed_form));
    }
    let mut csv = String::from("index,eigenvalue\n");
    for (i, mu) in model.eigenvalues().iter().enumerate() {
        let _ = writeln!(csv, "{},{mu:?}", i + 1);
    }
    out.artifacts.push(Artifact::new("kernel_info.json", json(&info)?));
    out.artifacts.push(Artifact::new("eigenvalues.csv", csv));
    out.checks = checks;
    Ok(out)
}

pub fn tables(config: Option<&Path>, reports: &[PathBuf], exponent_mode: bool) -> Result<CommandOutput, CliError> {
    let mut out = CommandOutput::default();
    let (text, csv) = if exponent_mode {
        let kv = load(config)?;
        reject_unknown(&kv, &["p", "alpha", "betas"])?;
        let p = kv.raw("p").unwrap_or("1/2");
        let alpha = kv.raw("alpha").unwrap_or("1/2");
        let betas = kv.raw("betas").unwrap_or("1/4, 1/2, 3/4, 1, 3/2, 2");
        exponent_table(p, alpha, betas)?
    } else {
        let rows = reports
            .iter()
            .map(|path| RateRow::from_path(path))
            .collect::<Result<Vec<_>, _>>()?;
        render_tables(&rows)
    };
    out.info.extend(text.lines().map(str::to_string));
    out.artifacts.push(Artifact::new("tables.txt", text));
    out.artifacts.push(Artifact::new("tables.csv", csv));
    Ok(out)
}
