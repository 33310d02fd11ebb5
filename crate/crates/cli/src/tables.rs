//! Plain-text and CSV tables from rate reports, and the exponent table
//! `(β − γ)_+/(max{β, α} + p)` for `γ ∈ {0, α, 1}` in exact arithmetic.

use std::fmt::Write as _;
use std::path::Path;

use num_rational::Ratio;
use rates_lab::rate_lab::{table_exponent, RateReport};
use rates_lab::LabError;

use crate::CliError;

/// One rate report reduced to the table columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub beta: f64,
    pub p: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub theoretical: f64,
    pub empirical: f64,
    pub pass: bool,
}

impl RateRow {
    pub fn from_report(r: &RateReport) -> Self {
        RateRow {
            beta: r.config.beta,
            p: r.config.p,
            alpha: r.config.alpha,
            gamma: r.config.gamma,
            theoretical: r.theoretical_exponent,
            empirical: -r.slope,
            pass: r.pass,
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read report `{}`: {e}", path.display())))?;
        let report: RateReport = serde_json::from_str(&text)
            .map_err(|e| LabError::Config(format!("report `{}` is not a rate report: {e}", path.display())))?;
        Ok(RateRow::from_report(&report))
    }
}

const HEADER: [&str; 7] = ["beta", "p", "alpha", "gamma", "theoretical", "empirical", "pass"];

fn aligned(rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
        .collect();
    let mut s = String::new();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}", w = *w))
            .collect();
        let _ = writeln!(s, "{}", cells.join("  ").trim_end());
    }
    s
}

/// Rows sorted by `(β, p, α, γ)`; returns `(text, csv)`.
pub fn render_tables(rows: &[RateRow]) -> (String, String) {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| {
        a.beta
            .total_cmp(&b.beta)
            .then(a.p.total_cmp(&b.p))
            .then(a.alpha.total_cmp(&b.alpha))
            .then(a.gamma.total_cmp(&b.gamma))
    });
    let mut cells = vec![HEADER.iter().map(|h| h.to_string()).collect::<Vec<_>>()];
    let mut csv = HEADER.join(",") + "\n";
    for r in &sorted {
        cells.push(vec![
            format!("{}", r.beta),
            format!("{}", r.p),
            format!("{}", r.alpha),
            format!("{}", r.gamma),
            format!("{:.4}", r.theoretical),
            format!("{:.4}", r.empirical),
            if r.pass { "PASS" } else { "FAIL" }.to_string(),
        ]);
        let _ = writeln!(
            csv,
            "{:?},{:?},{:?},{:?},{:?},{:?},{}",
            r.beta, r.p, r.alpha, r.gamma, r.theoretical, r.empirical, r.pass
        );
    }
    (aligned(&cells), csv)
}

/// Parses `a/b`, an integer or a finite decimal into an exact fraction.
pub fn parse_ratio(s: &str) -> Result<Ratio<i64>, CliError> {
    let s = s.trim();
    let bad = || CliError::from(LabError::Config(format!("cannot read `{s}` as a fraction")));
    if let Some((a, b)) = s.split_once('/') {
        let a: i64 = a.trim().parse().map_err(|_| bad())?;
        let b: i64 = b.trim().parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(a, b));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.len() > 12 || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let neg = int.starts_with('-');
    let whole: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().map_err(|_| bad())? };
    let den = 10i64.pow(frac.len() as u32);
    let num: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let magnitude = Ratio::from_integer(whole.abs()) + Ratio::new(num, den);
    Ok(if neg { -magnitude } else { magnitude })
}

/// Exponent table for fixed `p`, `α` and a list of `β` (comma separated).
pub fn exponent_table(p: &str, alpha: &str, betas: &str) -> Result<(String, String), CliError> {
    let p = parse_ratio(p)?;
    let alpha = parse_ratio(alpha)?;
    let zero = Ratio::from_integer(0);
    let one = Ratio::from_integer(1);
    if !(zero < p && p <= alpha && alpha <= one) {
        return Err(LabError::Config(format!("need 0 < p ≤ α ≤ 1, got p = {p}, α = {alpha}")).into());
    }
    let betas = betas
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(parse_ratio)
        .collect::<Result<Vec<_>, _>>()?;
    let header = vec![
        "beta".to_string(),
        "gamma=0".to_string(),
        format!("gamma=alpha={alpha}"),
        "gamma=1".to_string(),
    ];
    let mut cells = vec![header.clone()];
    let mut csv = String::from("beta,gamma_0,gamma_alpha,gamma_1\n");
    for beta in betas {
        if !(zero < beta && beta <= Ratio::from_integer(2)) {
            return Err(LabError::Config(format!("need 0 < β ≤ 2, got β = {beta}")).into());
        }
        let row: Vec<String> = [zero, alpha, one]
            .iter()
            .map(|g| table_exponent(beta, *g, p, alpha).to_string())
            .collect();
        let _ = writeln!(csv, "{beta},{}", row.join(","));
        let mut line = vec![beta.to_string()];
        line.extend(row);
        cells.push(line);
    }
    Ok((format!("p = {p}, alpha = {alpha}\n") + &aligned(&cells), csv))
}
