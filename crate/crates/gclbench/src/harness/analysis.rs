//! Scaling analysis over sweep aggregates: Δ tables, crossover estimation,
//! and logarithmic fits.

use serde::Serialize;

use super::sweep::SweepResult;
use super::{HarnessError, Result};

/// Per-size mean differences between two methods, in percentage points.
/// `None` marks grid cells where either side has no finished record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaTable {
    pub method: String,
    pub baseline: String,
    pub sizes: Vec<usize>,
    pub deltas_pp: Vec<Option<f64>>,
}

impl DeltaTable {
    /// The (size, Δ) pairs where both sides have data, for crossover and
    /// fitting routines that cannot use absent cells.
    pub fn present(&self) -> (Vec<usize>, Vec<f64>) {
        let mut sizes = Vec::new();
        let mut deltas = Vec::new();
        for (&n, d) in self.sizes.iter().zip(&self.deltas_pp) {
            if let Some(d) = d {
                sizes.push(n);
                deltas.push(*d);
            }
        }
        (sizes, deltas)
    }
}

/// Δ = mean(method) − mean(baseline) per train-set size, in percentage
/// points (metric values are fractions, so the difference is scaled by 100).
///
/// Both names must appear in the sweep; sizes where one side is missing are
/// reported as absent rather than dropped, so tables across methods stay
/// aligned on the sweep's size axis.
pub fn delta_table(sweep: &SweepResult, method: &str, baseline: &str) -> Result<DeltaTable> {
    for name in [method, baseline] {
        if !sweep.methods.iter().any(|m| m == name) {
            return Err(HarnessError::GridMismatch(method.to_string(), baseline.to_string()));
        }
    }
    let deltas_pp = sweep
        .sizes
        .iter()
        .map(|&n| {
            let a = sweep.aggregate(method, n)?;
            let b = sweep.aggregate(baseline, n)?;
            Some((a.mean - b.mean) * 100.0)
        })
        .collect();
    Ok(DeltaTable {
        method: method.to_string(),
        baseline: baseline.to_string(),
        sizes: sweep.sizes.clone(),
        deltas_pp,
    })
}

/// Estimated size where a Δ-vs-size curve crosses zero.
///
/// `size` is `None` when the curve never changes sign. A reported estimate
/// always lies within `bracket`; an exact zero brackets to its own size.
/// Curves crossing more than once keep the first crossing here and list the
/// rest in `extra_crossings` so reports can warn about them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossoverEstimate {
    pub size: Option<f64>,
    pub bracket: Option<(usize, usize)>,
    pub extra_crossings: Vec<f64>,
}

/// Find where Δ = 0 along ascending sizes.
///
/// Exact zeros count as crossings at their own size. Between samples, the
/// zero of the linear interpolant in (ln size, Δ) space is returned, so a
/// symmetric sign change like (2000, −1), (8000, +1) lands on the geometric
/// mean 4000 rather than the arithmetic 5000.
pub fn estimate_crossover(sizes: &[usize], deltas: &[f64]) -> Result<CrossoverEstimate> {
    check_series(sizes, deltas)?;
    let mut crossings: Vec<(f64, (usize, usize))> = Vec::new();
    for i in 0..sizes.len() {
        if deltas[i] == 0.0 {
            crossings.push((sizes[i] as f64, (sizes[i], sizes[i])));
        }
        if i + 1 < sizes.len() && deltas[i] * deltas[i + 1] < 0.0 {
            let x0 = (sizes[i] as f64).ln();
            let x1 = (sizes[i + 1] as f64).ln();
            let t = deltas[i] / (deltas[i] - deltas[i + 1]);
            crossings.push(((x0 + t * (x1 - x0)).exp(), (sizes[i], sizes[i + 1])));
        }
    }
    let mut it = crossings.into_iter();
    Ok(match it.next() {
        None => CrossoverEstimate { size: None, bracket: None, extra_crossings: Vec::new() },
        Some((size, bracket)) => CrossoverEstimate {
            size: Some(size),
            bracket: Some(bracket),
            extra_crossings: it.map(|(s, _)| s).collect(),
        },
    })
}

/// Least-squares line `value ≈ intercept + slope · ln(size)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
}

/// Fit values against the natural log of their sizes; at least two distinct
/// sizes are required for the slope to exist.
pub fn fit_log_scaling(sizes: &[usize], values: &[f64]) -> Result<LogFit> {
    check_series(sizes, values)?;
    let n = sizes.len() as f64;
    let xs: Vec<f64> = sizes.iter().map(|&s| (s as f64).ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = values.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(values) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    if sxx == 0.0 {
        return Err(HarnessError::BadSeries("all sizes equal; slope is undefined".into()));
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let sse: f64 = xs
        .iter()
        .zip(values)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok(LogFit { slope, intercept, residual_rms: (sse / n).sqrt() })
}

fn check_series(sizes: &[usize], values: &[f64]) -> Result<()> {
    let bad = |msg: String| Err(HarnessError::BadSeries(msg));
    if sizes.len() != values.len() {
        return bad(format!("{} sizes against {} values", sizes.len(), values.len()));
    }
    if sizes.len() < 2 {
        return bad(format!("need at least 2 points, got {}", sizes.len()));
    }
    if let Some(w) = sizes.windows(2).find(|w| w[0] >= w[1]) {
        return bad(format!("sizes must be strictly ascending, found {} before {}", w[0], w[1]));
    }
    if sizes[0] == 0 {
        return bad("size 0 has no logarithm".into());
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return bad(format!("non-finite value {}", v));
    }
    Ok(())
}
