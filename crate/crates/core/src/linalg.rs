//! Small dense helpers: SPD solves with jitter escalation and line fits.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{arg, LabError, Result};

/// Jitter ladder, relative to `max(1, mean diagonal)`.
pub const JITTER_LADDER: [f64; 6] = [0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8];

#[derive(Debug, Clone)]
pub struct SpdSolution {
    pub x: DVector<f64>,
    /// Absolute jitter that was added to the diagonal (0 if none).
    pub jitter: f64,
}

/// Solves `A x = b` for symmetric positive-definite `A` by Cholesky, adding
/// diagonal jitter from [`JITTER_LADDER`] if the factorization breaks down,
/// followed by one step of iterative refinement against the original `A`.
pub fn spd_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<SpdSolution> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return arg(format!(
            "spd_solve shape mismatch: {}x{} vs rhs {}",
            a.nrows(),
            a.ncols(),
            b.len()
        ));
    }
    let scale = (a.diagonal().sum() / n.max(1) as f64).max(1.0);
    for rel in JITTER_LADDER {
        let jitter = rel * scale;
        let mut m = a.clone();
        if jitter > 0.0 {
            for i in 0..n {
                m[(i, i)] += jitter;
            }
        }
        let Some(chol) = Cholesky::<f64, Dyn>::new(m) else {
            continue;
        };
        let mut x = chol.solve(b);
        let r = b - a * &x;
        x += chol.solve(&r);
        if x.iter().all(|v| v.is_finite()) {
            return Ok(SpdSolution { x, jitter });
        }
    }
    Err(LabError::Numerical(format!(
        "matrix of order {n} is not positive definite after jitter {:e}",
        JITTER_LADDER[JITTER_LADDER.len() - 1] * scale
    )))
}

/// Ordinary least squares `y ≈ intercept + slope · x`. Returns `(intercept, slope)`.
pub fn least_squares_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return arg("line fit: x and y lengths differ");
    }
    if xs.len() < 2 {
        return arg("line fit needs at least two points");
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return arg("line fit: x values are all equal");
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}
