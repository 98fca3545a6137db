//! Binary logistic regression with balanced class weights, trained by
//! gradient descent with backtracking line search.

use super::{ProbeError, Result};

const GRAD_TOL: f64 = 1e-6;
const MAX_ITERS: usize = 10_000;

/// Weighted logistic model; `decision` is the pre-sigmoid logit.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub weight: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub class_weights: [f64; 2],
}

impl LogRegModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.weight.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Weighted negative log-likelihood plus `(1/(2C))‖w‖²` (bias unpenalized).
fn objective(x: &[Vec<f64>], y: &[usize], cw: &[f64; 2], c: f64, w: &[f64], b: f64) -> f64 {
    let mut nll = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let z = w.iter().zip(xi).map(|(a, v)| a * v).sum::<f64>() + b;
        nll += cw[yi] * (softplus(z) - yi as f64 * z);
    }
    nll + w.iter().map(|v| v * v).sum::<f64>() / (2.0 * c)
}

fn gradient(
    x: &[Vec<f64>],
    y: &[usize],
    cw: &[f64; 2],
    c: f64,
    w: &[f64],
    b: f64,
) -> (Vec<f64>, f64) {
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let z = w.iter().zip(xi).map(|(a, v)| a * v).sum::<f64>() + b;
        let r = cw[yi] * (sigmoid(z) - yi as f64);
        for (g, v) in gw.iter_mut().zip(xi) {
            *g += r * v;
        }
        gb += r;
    }
    for (g, v) in gw.iter_mut().zip(w) {
        *g += v / c;
    }
    (gw, gb)
}

/// Fit on `{0,1}` labels; when `balanced`, class `c` carries weight
/// `N / (2·N_c)` so each class contributes equally to the loss. Descent
/// stops at gradient norm below 1e-6 or after 10,000 iterations.
pub fn train_logreg(x: &[Vec<f64>], y: &[usize], c: f64, balanced: bool) -> Result<LogRegModel> {
    let n = x.len();
    if n == 0 || y.len() != n {
        return Err(ProbeError::BadInput(format!("{} rows for {} labels", n, y.len())));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(ProbeError::BadInput(format!("regularization C {} not positive", c)));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(ProbeError::BadInput("ragged feature rows".into()));
    }
    if let Some(&bad) = y.iter().find(|&&l| l > 1) {
        return Err(ProbeError::BadInput(format!("label {} in a binary model", bad)));
    }
    let n_pos = y.iter().filter(|&&l| l == 1).count();
    if n_pos == 0 || n_pos == n {
        return Err(ProbeError::SingleClass("logreg needs both classes".into()));
    }
    let class_weights = if balanced {
        let nf = n as f64;
        [nf / (2.0 * (n - n_pos) as f64), nf / (2.0 * n_pos as f64)]
    } else {
        [1.0, 1.0]
    };

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut f = objective(x, y, &class_weights, c, &w, b);
    let mut step = 1.0;
    for _ in 0..MAX_ITERS {
        let (gw, gb) = gradient(x, y, &class_weights, c, &w, b);
        let gnorm2 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        if gnorm2.sqrt() < GRAD_TOL {
            break;
        }
        // Armijo backtracking along the steepest-descent direction
        step *= 2.0;
        let mut accepted = false;
        for _ in 0..60 {
            let wt: Vec<f64> = w.iter().zip(&gw).map(|(a, g)| a - step * g).collect();
            let bt = b - step * gb;
            let ft = objective(x, y, &class_weights, c, &wt, bt);
            if ft <= f - 1e-4 * step * gnorm2 {
                w = wt;
                b = bt;
                f = ft;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    if !w.iter().all(|v| v.is_finite()) || !b.is_finite() {
        return Err(ProbeError::BadInput("logreg produced non-finite weights".into()));
    }
    Ok(LogRegModel { weight: w, bias: b, c, class_weights })
}
