//! Scaling sweeps over (method, fraction, seed) grids.
//!
//! Every grid cell runs independently and persists one JSON record file, so
//! a crashed or extended sweep recomputes only cells whose file is missing
//! or whose config hash no longer matches. Cells are embarrassingly
//! parallel; the worker count honors the `GCLBENCH_WORKERS` environment
//! variable.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{compute_bin_edges, handcrafted_features, random_features};
use crate::data::{subsample, Graph, GraphDataset};
use crate::encoder::{encode_graphs_eval, init_encoder, EncoderConfig, EncoderParams};
use crate::gcl::{train_graphcl, train_infograph, GclError};
use crate::probe::{self, logreg_probe_protocol, svm_probe_protocol, MetricKind, ProbeFeatures};
use crate::rng::RngFactory;

use super::configfile::{load_dataset, ExperimentConfig, MethodKind, ProbeKind};
use super::{HarnessError, Result};

/// One finished grid cell: which method/seed produced which metric value on
/// how many training graphs, plus the config hash that keys cache reuse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub dataset: String,
    pub train_size: usize,
    pub seed: u64,
    pub metric: MetricKind,
    pub value: f64,
    pub wall_time_s: f64,
    pub config_hash: String,
}

/// A cell whose pretraining diverged; the sweep records it and moves on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedCell {
    pub method: String,
    pub fraction: f64,
    pub seed: u64,
    pub error: String,
}

/// Metric mean/std over seeds at one (method, train size) grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellAggregate {
    pub method: String,
    pub size: usize,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

/// All records of a sweep plus the grid axes and per-cell aggregates, every
/// list deterministically sorted so reruns compare equal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub dataset: String,
    pub records: Vec<RunRecord>,
    pub failed: Vec<FailedCell>,
    pub methods: Vec<String>,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub aggregates: Vec<CellAggregate>,
}

impl SweepResult {
    /// Assemble axes and aggregates from raw records; the aggregates are
    /// always recomputed here, never trusted from disk.
    pub fn from_records(mut records: Vec<RunRecord>, mut failed: Vec<FailedCell>) -> Self {
        records.sort_by(|a, b| {
            (&a.method, a.train_size, a.seed).cmp(&(&b.method, b.train_size, b.seed))
        });
        failed.sort_by(|a, b| {
            (&a.method, a.seed).cmp(&(&b.method, b.seed)).then(a.fraction.total_cmp(&b.fraction))
        });

        let dataset = records.first().map_or_else(String::new, |r| r.dataset.clone());
        let mut methods: Vec<String> = records.iter().map(|r| r.method.clone()).collect();
        methods.sort();
        methods.dedup();
        let mut sizes: Vec<usize> = records.iter().map(|r| r.train_size).collect();
        sizes.sort_unstable();
        sizes.dedup();
        let mut seeds: Vec<u64> = records.iter().map(|r| r.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();

        let mut groups: BTreeMap<(String, usize), Vec<f64>> = BTreeMap::new();
        for r in &records {
            groups.entry((r.method.clone(), r.train_size)).or_default().push(r.value);
        }
        let aggregates = groups
            .into_iter()
            .map(|((method, size), values)| {
                let n = values.len();
                let mean = values.iter().sum::<f64>() / n as f64;
                let var =
                    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                CellAggregate { method, size, mean, std: var.sqrt(), n }
            })
            .collect();

        SweepResult { dataset, records, failed, methods, sizes, seeds, aggregates }
    }

    pub fn aggregate(&self, method: &str, size: usize) -> Option<&CellAggregate> {
        self.aggregates.iter().find(|a| a.method == method && a.size == size)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CellFile {
    config_hash: String,
    method: String,
    fraction: f64,
    seed: u64,
    #[serde(flatten)]
    outcome: CellOutcome,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
enum CellOutcome {
    Ok { record: RunRecord },
    Failed { error: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

fn cell_path(records_dir: &Path, method: MethodKind, fraction: f64, seed: u64) -> PathBuf {
    records_dir.join(format!("{}_f{}_s{}.json", method.name(), fraction, seed))
}

/// Reuse a finished cell only when it parses and its hash and coordinates
/// match; anything stale or unreadable is recomputed rather than trusted.
fn try_load(
    path: &Path,
    hash: &str,
    method: MethodKind,
    fraction: f64,
    seed: u64,
) -> Result<Option<CellFile>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(source) => return Err(HarnessError::Io { path: path.to_path_buf(), source }),
    };
    let parsed: CellFile = match serde_json::from_str(&text) {
        Ok(p) => p,
        Err(e) => {
            warn!("recomputing unreadable record {}: {}", path.display(), e);
            return Ok(None);
        }
    };
    let matches = parsed.config_hash == hash
        && parsed.method == method.name()
        && parsed.fraction == fraction
        && parsed.seed == seed;
    Ok(matches.then_some(parsed))
}

fn store(path: &Path, cell: &CellFile) -> Result<()> {
    let mut line = serde_json::to_string(cell).expect("record serialization cannot fail");
    line.push('\n');
    // write-then-rename so a crash never leaves a truncated record behind
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, line).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Merge the per-cell record files of a sweep directory. Unlike the sweep's
/// own cache probe, report merging is strict: an unreadable file is an
/// error, because silently dropping cells would skew every aggregate.
pub fn load_records(records_dir: &Path) -> Result<(Vec<RunRecord>, Vec<FailedCell>)> {
    let entries = fs::read_dir(records_dir).map_err(io_err(records_dir))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut records = Vec::new();
    let mut failed = Vec::new();
    for path in paths {
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let cell: CellFile = serde_json::from_str(&text).map_err(|e| HarnessError::BadRecord {
            path: path.clone(),
            detail: e.to_string(),
        })?;
        match cell.outcome {
            CellOutcome::Ok { record } => records.push(record),
            CellOutcome::Failed { error } => failed.push(FailedCell {
                method: cell.method,
                fraction: cell.fraction,
                seed: cell.seed,
                error,
            }),
        }
    }
    Ok((records, failed))
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("GCLBENCH_WORKERS") {
        let n: usize = v.trim().parse().unwrap_or(0);
        if n == 0 {
            return Err(HarnessError::Config(format!(
                "GCLBENCH_WORKERS must be a positive integer, got {:?}",
                v
            )));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| HarnessError::Config(format!("failed to build worker pool: {}", e)))
}

/// Load the configured dataset and sweep the full grid.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    let dataset = load_dataset(&config.dataset)?;
    run_sweep_on(config, &dataset)
}

/// Sweep the (method, fraction, seed) grid over an already loaded dataset.
///
/// Finished cells (matching config hash) are reused from disk, so invoking
/// this on a completed directory performs no training and returns an
/// identical result. A cell whose pretraining diverges becomes a
/// [`FailedCell`]; any other error aborts the sweep.
pub fn run_sweep_on(config: &ExperimentConfig, dataset: &GraphDataset) -> Result<SweepResult> {
    config.validate()?;
    if config.probe == ProbeKind::Logreg && dataset.split.is_none() {
        return Err(HarnessError::Config(format!(
            "the logreg probe needs train/valid/test splits, and dataset {:?} has none",
            dataset.name
        )));
    }
    let records_dir = config.out_dir.join("records");
    fs::create_dir_all(&records_dir).map_err(io_err(&records_dir))?;
    let hash = config.cell_hash();

    let mut cells = Vec::with_capacity(
        config.methods.len() * config.fractions.len() * config.seeds.len(),
    );
    for &method in &config.methods {
        for &fraction in &config.fractions {
            for &seed in &config.seeds {
                cells.push((method, fraction, seed));
            }
        }
    }

    let pool = worker_pool()?;
    let files: Vec<CellFile> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(m, f, s)| run_or_load_cell(config, dataset, &records_dir, &hash, m, f, s))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut records = Vec::new();
    let mut failed = Vec::new();
    for cell in files {
        match cell.outcome {
            CellOutcome::Ok { record } => records.push(record),
            CellOutcome::Failed { error } => failed.push(FailedCell {
                method: cell.method,
                fraction: cell.fraction,
                seed: cell.seed,
                error,
            }),
        }
    }
    Ok(SweepResult::from_records(records, failed))
}

fn run_or_load_cell(
    config: &ExperimentConfig,
    dataset: &GraphDataset,
    records_dir: &Path,
    hash: &str,
    method: MethodKind,
    fraction: f64,
    seed: u64,
) -> Result<CellFile> {
    let path = cell_path(records_dir, method, fraction, seed);
    if let Some(cell) = try_load(&path, hash, method, fraction, seed)? {
        info!("reusing finished cell {}", path.display());
        return Ok(cell);
    }

    let started = Instant::now();
    let outcome = match compute_cell(config, dataset, method, fraction, seed) {
        Ok((train_size, metric, value)) => CellOutcome::Ok {
            record: RunRecord {
                method: method.name().to_string(),
                dataset: dataset.name.clone(),
                train_size,
                seed,
                metric,
                value,
                wall_time_s: started.elapsed().as_secs_f64(),
                config_hash: hash.to_string(),
            },
        },
        Err(HarnessError::Gcl(e @ GclError::Diverged { .. })) => {
            warn!("cell {}/f{}/s{} diverged: {}", method, fraction, seed, e);
            CellOutcome::Failed { error: e.to_string() }
        }
        Err(other) => return Err(other),
    };
    let cell = CellFile {
        config_hash: hash.to_string(),
        method: method.name().to_string(),
        fraction,
        seed,
        outcome,
    };
    store(&path, &cell)?;
    Ok(cell)
}

/// One grid cell end to end: subsample the training pool, pretrain when the
/// method calls for it, embed, probe. Returns (train size, metric, value).
fn compute_cell(
    config: &ExperimentConfig,
    dataset: &GraphDataset,
    method: MethodKind,
    fraction: f64,
    seed: u64,
) -> Result<(usize, MetricKind, f64)> {
    let run = format!("{}/f{}/s{}", method.name(), fraction, seed);
    let factory = RngFactory::new(seed, &run);
    let pool: Vec<usize> = match config.probe {
        ProbeKind::Svm => (0..dataset.len()).collect(),
        ProbeKind::Logreg => dataset.split.as_ref().expect("checked by run_sweep_on").train.clone(),
    };
    let subset = subsample(&pool, fraction, &factory)?;
    let value = match config.probe {
        ProbeKind::Svm => svm_cell_value(config, dataset, method, &subset, seed, &run)?,
        ProbeKind::Logreg => logreg_cell_value(config, dataset, method, &subset, seed, &run)?,
    };
    let metric =
        if config.probe == ProbeKind::Svm { MetricKind::Accuracy } else { MetricKind::RocAuc };
    Ok((subset.len(), metric, value))
}

fn labels_at(dataset: &GraphDataset, indices: &[usize]) -> Vec<usize> {
    indices.iter().map(|&i| dataset.graphs[i].label).collect()
}

fn graphs_at<'a>(dataset: &'a GraphDataset, indices: &[usize]) -> Vec<&'a Graph> {
    indices.iter().map(|&i| &dataset.graphs[i]).collect()
}

/// Train (or just initialize) the encoder a cell's method prescribes.
fn cell_encoder(
    config: &ExperimentConfig,
    dataset: &GraphDataset,
    method: MethodKind,
    subset: &[usize],
    seed: u64,
    run: &str,
) -> Result<(EncoderConfig, EncoderParams)> {
    let enc = config.encoder_config(dataset, method, seed)?;
    let params = match method {
        MethodKind::GraphCl => {
            train_graphcl(dataset, subset, &enc, &config.train_config(method, seed), run)?.params
        }
        MethodKind::InfoGraph => {
            train_infograph(dataset, subset, &enc, &config.train_config(method, seed), run)?.params
        }
        MethodKind::Untrained | MethodKind::MolFingerprint => init_encoder(&enc)?,
        MethodKind::Handcrafted | MethodKind::Random => {
            unreachable!("feature baselines have no encoder")
        }
    };
    Ok((enc, params))
}

fn embed_rows(
    params: &EncoderParams,
    enc: &EncoderConfig,
    dataset: &GraphDataset,
    indices: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let t = encode_graphs_eval(params, enc, &graphs_at(dataset, indices))?;
    Ok((0..t.rows()).map(|r| t.row(r).to_vec()).collect())
}

fn random_rows(dim: usize, indices: &[usize], seed: u64) -> Vec<Vec<f64>> {
    indices.iter().map(|&i| random_features(dim, i as u64, seed)).collect()
}

/// K-fold SVM accuracy of the subset's features under the cell's seed.
fn svm_cell_value(
    config: &ExperimentConfig,
    dataset: &GraphDataset,
    method: MethodKind,
    subset: &[usize],
    seed: u64,
    run: &str,
) -> Result<f64> {
    let labels = labels_at(dataset, subset);
    let report = match method {
        MethodKind::Handcrafted => {
            // bin edges must come from each outer fold's training graphs
            let build = |train_idx: &[usize]| -> probe::Result<Vec<Vec<f64>>> {
                let train_graphs: Vec<&Graph> =
                    train_idx.iter().map(|&i| &dataset.graphs[subset[i]]).collect();
                let edges = compute_bin_edges(&train_graphs)?;
                Ok(subset
                    .iter()
                    .map(|&i| handcrafted_features(&dataset.graphs[i], &edges).to_vec())
                    .collect())
            };
            svm_probe_protocol(&ProbeFeatures::PerFold(&build), &labels, config.kfold, &[seed])?
        }
        MethodKind::Random => {
            let rows = random_rows(config.random_dim, subset, seed);
            svm_probe_protocol(&ProbeFeatures::Fixed(&rows), &labels, config.kfold, &[seed])?
        }
        _ => {
            let (enc, params) = cell_encoder(config, dataset, method, subset, seed, run)?;
            let rows = embed_rows(&params, &enc, dataset, subset)?;
            svm_probe_protocol(&ProbeFeatures::Fixed(&rows), &labels, config.kfold, &[seed])?
        }
    };
    Ok(report.mean)
}

/// Validation-tuned logistic-regression ROC-AUC: the probe trains on the
/// subsampled train split, while validation and test always use their full
/// splits.
fn logreg_cell_value(
    config: &ExperimentConfig,
    dataset: &GraphDataset,
    method: MethodKind,
    subset: &[usize],
    seed: u64,
    run: &str,
) -> Result<f64> {
    let split = dataset.split.as_ref().expect("checked by run_sweep_on");
    let (train_rows, valid_rows, test_rows) = match method {
        MethodKind::Handcrafted => {
            let edges = compute_bin_edges(&graphs_at(dataset, subset))?;
            let rows = |idx: &[usize]| -> Vec<Vec<f64>> {
                idx.iter()
                    .map(|&i| handcrafted_features(&dataset.graphs[i], &edges).to_vec())
                    .collect()
            };
            (rows(subset), rows(&split.valid), rows(&split.test))
        }
        MethodKind::Random => (
            random_rows(config.random_dim, subset, seed),
            random_rows(config.random_dim, &split.valid, seed),
            random_rows(config.random_dim, &split.test, seed),
        ),
        _ => {
            let (enc, params) = cell_encoder(config, dataset, method, subset, seed, run)?;
            (
                embed_rows(&params, &enc, dataset, subset)?,
                embed_rows(&params, &enc, dataset, &split.valid)?,
                embed_rows(&params, &enc, dataset, &split.test)?,
            )
        }
    };
    let outcome = logreg_probe_protocol(
        (&train_rows, &labels_at(dataset, subset)),
        (&valid_rows, &labels_at(dataset, &split.valid)),
        (&test_rows, &labels_at(dataset, &split.test)),
    )?;
    Ok(outcome.auc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;
    use crate::data::SplitSpec;
    use crate::harness::configfile::DatasetRef;
    use crate::harness::delta_table;

    /// n tiny graphs: even labels are 3-paths, odd labels are triangles.
    fn tiny_dataset(n: usize) -> GraphDataset {
        let graphs = (0..n)
            .map(|i| {
                let label = i % 2;
                let mut edges = vec![(0, 1), (1, 2)];
                if label == 1 {
                    edges.push((0, 2));
                }
                edges.sort_unstable();
                Graph::new(3, Tensor::matrix(3, 1, vec![1.0; 3]).unwrap(), edges, None, label)
                    .unwrap()
            })
            .collect();
        GraphDataset { graphs, name: "tiny".into(), num_classes: 2, split: None }
    }

    fn base_config(dir: &Path, methods: Vec<MethodKind>) -> ExperimentConfig {
        let mut c = ExperimentConfig::single(
            DatasetRef::Jsonl { path: dir.join("unused.jsonl") },
            methods[0],
            dir.to_path_buf(),
        );
        c.methods = methods;
        c.kfold = 2;
        c.random_dim = 4;
        c
    }

    #[test]
    fn one_by_one_grid_yields_exactly_one_record() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = tiny_dataset(30);
        let config = base_config(tmp.path(), vec![MethodKind::Random]);
        let sweep = run_sweep_on(&config, &ds).unwrap();
        assert_eq!(sweep.records.len(), 1);
        assert!(sweep.failed.is_empty());
        let r = &sweep.records[0];
        assert_eq!((r.method.as_str(), r.train_size, r.seed), ("random", 30, 0));
        assert_eq!(r.metric, MetricKind::Accuracy);
        assert!((0.0..=1.0).contains(&r.value));
        assert_eq!(r.config_hash, config.cell_hash());
    }

    #[test]
    fn eleven_fractions_by_five_seeds_yield_55_records() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = tiny_dataset(80);
        let mut config = base_config(tmp.path(), vec![MethodKind::Random]);
        config.fractions = (0..11).map(|i| 0.5 + 0.05 * i as f64).collect();
        config.seeds = vec![0, 1, 2, 3, 4];
        let sweep = run_sweep_on(&config, &ds).unwrap();
        assert_eq!(sweep.records.len(), 55);
        assert_eq!(sweep.seeds, vec![0, 1, 2, 3, 4]);
        // fraction 0.5 of 80 graphs is 40; fraction 1.0 is all of them
        assert_eq!(*sweep.sizes.first().unwrap(), 40);
        assert_eq!(*sweep.sizes.last().unwrap(), 80);
    }

    #[test]
    fn rerun_reuses_cells_instead_of_recomputing() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = tiny_dataset(60);
        let mut config = base_config(tmp.path(), vec![MethodKind::Random]);
        config.fractions = vec![0.6, 1.0];
        config.seeds = vec![0, 1];
        let first = run_sweep_on(&config, &ds).unwrap();
        assert_eq!(first.records.len(), 4);

        // plant a sentinel value in one record file; a true rerun must
        // surface it untouched, proving no cell was recomputed
        let path = cell_path(&tmp.path().join("records"), MethodKind::Random, 0.6, 1);
        let mut cell: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        cell["record"]["value"] = 0.123.into();
        fs::write(&path, cell.to_string()).unwrap();

        let second = run_sweep_on(&config, &ds).unwrap();
        assert!(second.records.iter().any(|r| r.value == 0.123), "cell was recomputed");
        assert_eq!(second.records.len(), 4);

        // changing a setting rewrites the hash and invalidates the cache
        config.random_dim = 8;
        let third = run_sweep_on(&config, &ds).unwrap();
        assert!(third.records.iter().all(|r| r.value != 0.123));
    }

    #[test]
    fn identical_reruns_return_equal_results() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = tiny_dataset(30);
        let mut config = base_config(tmp.path(), vec![MethodKind::Handcrafted]);
        config.seeds = vec![0, 1];
        let first = run_sweep_on(&config, &ds).unwrap();
        let second = run_sweep_on(&config, &ds).unwrap();
        assert_eq!(first, second);
        // paths vs triangles differ in mean degree, so the handcrafted
        // descriptor separates them perfectly
        assert!(first.records.iter().all(|r| r.value == 1.0), "{:?}", first.records);
    }

    #[test]
    fn diverged_training_becomes_a_failed_cell_and_the_sweep_continues() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = tiny_dataset(8);
        let mut config = base_config(tmp.path(), vec![MethodKind::GraphCl]);
        config.fractions = vec![0.5, 1.0];
        config.epochs = Some(2);
        config.batch_size = Some(2);
        config.lr = Some(1e300);
        let sweep = run_sweep_on(&config, &ds).unwrap();
        assert!(sweep.records.is_empty());
        assert_eq!(sweep.failed.len(), 2, "{:?}", sweep.failed);
        assert!(sweep.failed[0].error.contains("diverged"));

        // the failure itself is cached: rerunning must not retrain
        let path = cell_path(&tmp.path().join("records"), MethodKind::GraphCl, 0.5, 0);
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, text.replace("diverged", "diverged [sentinel]")).unwrap();
        let again = run_sweep_on(&config, &ds).unwrap();
        assert!(again.failed.iter().any(|f| f.error.contains("[sentinel]")));
    }

    #[test]
    fn logreg_probe_draws_its_pool_from_the_train_split() {
        let tmp = tempfile::tempdir().unwrap();
        let mut ds = tiny_dataset(60);
        ds.split = Some(SplitSpec {
            train: (0..30).collect(),
            valid: (30..45).collect(),
            test: (45..60).collect(),
        });
        let mut config = base_config(tmp.path(), vec![MethodKind::Random]);
        config.probe = ProbeKind::Logreg;
        let sweep = run_sweep_on(&config, &ds).unwrap();
        let r = &sweep.records[0];
        assert_eq!(r.metric, MetricKind::RocAuc);
        assert_eq!(r.train_size, 30, "pool must be the train split, not the dataset");
        assert!((0.0..=1.0).contains(&r.value));

        let mut no_split = base_config(tmp.path(), vec![MethodKind::Random]);
        no_split.probe = ProbeKind::Logreg;
        assert!(run_sweep_on(&no_split, &tiny_dataset(10)).is_err());
    }

    #[test]
    fn load_records_round_trips_a_sweep_directory() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = tiny_dataset(30);
        let mut config = base_config(tmp.path(), vec![MethodKind::Random, MethodKind::Handcrafted]);
        config.seeds = vec![0, 1];
        let sweep = run_sweep_on(&config, &ds).unwrap();
        let (records, failed) = load_records(&tmp.path().join("records")).unwrap();
        let merged = SweepResult::from_records(records, failed);
        assert_eq!(merged, sweep);
    }

    fn record(method: &str, size: usize, seed: u64, value: f64) -> RunRecord {
        RunRecord {
            method: method.into(),
            dataset: "d".into(),
            train_size: size,
            seed,
            metric: MetricKind::Accuracy,
            value,
            wall_time_s: 0.0,
            config_hash: "h".into(),
        }
    }

    #[test]
    fn aggregates_match_a_recomputation_from_raw_records() {
        let records = vec![
            record("a", 100, 0, 0.5),
            record("a", 100, 1, 0.6),
            record("a", 100, 2, 0.7),
        ];
        let sweep = SweepResult::from_records(records, vec![]);
        let agg = sweep.aggregate("a", 100).unwrap();
        assert!((agg.mean - 0.6).abs() < 1e-12);
        let manual_var: f64 = (0.01 + 0.0 + 0.01) / 3.0;
        assert!((agg.std - manual_var.sqrt()).abs() < 1e-12);
        assert_eq!(agg.n, 3);
    }

    #[test]
    fn delta_tables_report_percentage_points_and_absent_cells() {
        let records = vec![
            record("graphcl", 1000, 0, 0.7787),
            record("untrained", 1000, 0, 0.7273),
            record("untrained", 4000, 0, 0.74),
        ];
        let sweep = SweepResult::from_records(records, vec![]);
        let table = delta_table(&sweep, "graphcl", "untrained").unwrap();
        assert_eq!(table.sizes, vec![1000, 4000]);
        let d = table.deltas_pp[0].unwrap();
        assert!((d - 5.14).abs() < 1e-9, "Δ = {}", d);
        assert_eq!(table.deltas_pp[1], None, "graphcl has no 4000-graph cell");

        let self_table = delta_table(&sweep, "untrained", "untrained").unwrap();
        assert!(self_table.deltas_pp.iter().all(|d| *d == Some(0.0)));

        assert!(matches!(
            delta_table(&sweep, "graphcl", "wl-kernel"),
            Err(HarnessError::GridMismatch(_, _))
        ));
    }
}
