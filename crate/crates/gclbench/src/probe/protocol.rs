//! The two evaluation protocols layered on top of the solvers.

use log::debug;

use super::logreg::train_logreg;
use super::metrics::{accuracy, roc_auc, MetricKind, MetricReport};
use super::svm::train_one_vs_rest;
use super::{ProbeError, Result};
use crate::baselines::{standardize_apply, standardize_fit};
use crate::data::stratified_kfold;
use crate::rng::RngFactory;

const SVM_C_GRID: [f64; 7] = [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3];
const LOGREG_C_GRID: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

/// Feature source for the SVM protocol. `Fixed` probes one precomputed
/// matrix; `PerFold` recomputes all rows for each outer fold from its
/// training indices, so fold-fit parameters (histogram bin edges) never see
/// test graphs.
pub enum ProbeFeatures<'a> {
    Fixed(&'a [Vec<f64>]),
    PerFold(&'a dyn Fn(&[usize]) -> Result<Vec<Vec<f64>>>),
}

fn gather(rows: &[Vec<f64>], idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter().map(|&i| rows[i].clone()).collect()
}

fn gather_labels(labels: &[usize], idx: &[usize]) -> Vec<usize> {
    idx.iter().map(|&i| labels[i]).collect()
}

/// K-fold stratified linear-SVM accuracy.
///
/// Per seed: stratified K folds; per outer fold, features are standardized
/// on the training folds, C is selected from `{1e-3 … 1e3}` by inner 5-fold
/// accuracy (ties to the smaller C), the model is retrained on the full
/// training folds, and test-fold accuracy recorded. Each seed contributes
/// its mean fold accuracy; the report averages over seeds.
pub fn svm_probe_protocol(
    features: &ProbeFeatures,
    labels: &[usize],
    k: usize,
    seeds: &[u64],
) -> Result<MetricReport> {
    if labels.is_empty() || seeds.is_empty() {
        return Err(ProbeError::BadInput("empty labels or seed list".into()));
    }
    let num_classes = labels.iter().max().unwrap() + 1;
    if num_classes < 2 {
        return Err(ProbeError::SingleClass("probe labels are all one class".into()));
    }
    if let ProbeFeatures::Fixed(rows) = features {
        if rows.len() != labels.len() {
            return Err(ProbeError::BadInput(format!(
                "{} feature rows for {} labels",
                rows.len(),
                labels.len()
            )));
        }
    }

    let mut per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let factory = RngFactory::new(seed, "probe");
        let folds = stratified_kfold(labels, k, &factory)?;
        let mut fold_accs = Vec::with_capacity(k);
        for fold in 0..k {
            let train_idx = folds.train_indices(fold);
            let test_idx = folds.held_out(fold);

            let computed;
            let rows: &[Vec<f64>] = match features {
                ProbeFeatures::Fixed(rows) => rows,
                ProbeFeatures::PerFold(build) => {
                    computed = build(&train_idx)?;
                    if computed.len() != labels.len() {
                        return Err(ProbeError::BadInput(format!(
                            "fold feature builder returned {} rows for {} labels",
                            computed.len(),
                            labels.len()
                        )));
                    }
                    &computed
                }
            };
            let scaler = standardize_fit(&gather(rows, &train_idx))?;
            let scaled = standardize_apply(&scaler, rows);

            let train_rows = gather(&scaled, &train_idx);
            let train_labels = gather_labels(labels, &train_idx);
            let inner_factory = RngFactory::new(seed, &format!("probe-inner-{}", fold));
            let inner = stratified_kfold(&train_labels, 5, &inner_factory)?;
            let mut best = (f64::NEG_INFINITY, SVM_C_GRID[0]);
            for &c in &SVM_C_GRID {
                let mut accs = Vec::with_capacity(5);
                for g in 0..5 {
                    let tr = inner.train_indices(g);
                    let va = inner.held_out(g);
                    let model = train_one_vs_rest(
                        &gather(&train_rows, &tr),
                        &gather_labels(&train_labels, &tr),
                        num_classes,
                        c,
                    )?;
                    let preds: Vec<usize> =
                        va.iter().map(|&i| model.predict(&train_rows[i])).collect();
                    accs.push(accuracy(&preds, &gather_labels(&train_labels, va)));
                }
                let mean = accs.iter().sum::<f64>() / accs.len() as f64;
                if mean > best.0 {
                    best = (mean, c);
                }
            }

            let model = train_one_vs_rest(&train_rows, &train_labels, num_classes, best.1)?;
            let preds: Vec<usize> = test_idx.iter().map(|&i| model.predict(&scaled[i])).collect();
            let acc = accuracy(&preds, &gather_labels(labels, test_idx));
            debug!("seed {} fold {}: C {} accuracy {:.4}", seed, fold, best.1, acc);
            fold_accs.push(acc);
        }
        per_seed.push(fold_accs.iter().sum::<f64>() / fold_accs.len() as f64);
    }
    Ok(MetricReport::from_values(MetricKind::Accuracy, per_seed))
}

/// Chosen regularization strength and held-out ROC-AUC.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegProbeOutcome {
    pub auc: f64,
    pub chosen_c: f64,
}

/// Validation-tuned logistic-regression ROC-AUC over fixed splits.
///
/// The scaler is fit on the training split only; C comes from
/// `{0.01, 0.1, 1, 10}` by validation ROC-AUC with ties resolved toward the
/// smaller value, and the returned score is the test-split ROC-AUC of a
/// model fit on the training split alone.
pub fn logreg_probe_protocol(
    train: (&[Vec<f64>], &[usize]),
    valid: (&[Vec<f64>], &[usize]),
    test: (&[Vec<f64>], &[usize]),
) -> Result<LogRegProbeOutcome> {
    for (name, (x, y)) in [("train", &train), ("valid", &valid), ("test", &test)] {
        if x.is_empty() || x.len() != y.len() {
            return Err(ProbeError::BadInput(format!(
                "{} split has {} rows and {} labels",
                name,
                x.len(),
                y.len()
            )));
        }
    }
    let scaler = standardize_fit(train.0)?;
    let train_x = standardize_apply(&scaler, train.0);
    let valid_x = standardize_apply(&scaler, valid.0);
    let test_x = standardize_apply(&scaler, test.0);

    let mut best = (f64::NEG_INFINITY, LOGREG_C_GRID[0]);
    for &c in &LOGREG_C_GRID {
        let model = train_logreg(&train_x, train.1, c, true)?;
        let scores: Vec<f64> = valid_x.iter().map(|x| model.decision(x)).collect();
        let auc = roc_auc(&scores, valid.1)?;
        debug!("C {}: validation roc-auc {:.4}", c, auc);
        if auc > best.0 {
            best = (auc, c);
        }
    }

    let model = train_logreg(&train_x, train.1, best.1, true)?;
    let scores: Vec<f64> = test_x.iter().map(|x| model.decision(x)).collect();
    Ok(LogRegProbeOutcome { auc: roc_auc(&scores, test.1)?, chosen_c: best.1 })
}
