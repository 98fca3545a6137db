//! Command-line harness: dataset generation, pretraining, embedding,
//! probing, grid sweeps, and report emission.
//!
//! Every failure exits nonzero after printing a one-line JSON object
//! (`{"kind": ..., "error": ...}`) on stderr so callers never have to parse
//! prose. `GCLBENCH_WORKERS` caps sweep parallelism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use gclbench::data::{write_jsonl, GraphDataset};
use gclbench::encoder::{encode_graphs_eval, init_encoder, load_checkpoint, save_checkpoint};
use gclbench::baselines::{read_feature_csv, write_feature_csv};
use gclbench::gcl::{train_graphcl, train_infograph};
use gclbench::harness::{
    apply_settings, load_dataset, load_records, parse_config, parse_dataset_ref, run_sweep,
    write_reports, HarnessError, MethodKind, Preset, ProbeKind, SweepResult,
};
use gclbench::probe::{logreg_probe_protocol, svm_probe_protocol, ProbeFeatures};
use gclbench::rng::RngFactory;
use gclbench::synth::{generate_dataset, SyntheticConfig};

type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Parser)]
#[command(
    name = "gclbench",
    version,
    about = "Benchmark graph contrastive learning against simple baselines \
             as a function of dataset size"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic motif-classification dataset as JSON lines
    GenSynthetic(GenSyntheticArgs),
    /// Pretrain (or just initialize) an encoder and save a checkpoint
    Pretrain(PretrainArgs),
    /// Embed every graph of a dataset with a saved checkpoint
    Embed(EmbedArgs),
    /// Probe an embedding CSV with the SVM or logistic-regression protocol
    Probe(ProbeArgs),
    /// Run the (method, fraction, seed) grid described by a config file
    Sweep(SweepArgs),
    /// Merge sweep records into CSV / JSON / plain-text reports
    Report(ReportArgs),
}

#[derive(Args)]
struct GenSyntheticArgs {
    /// Style multiplier S; background trees have S times the motif size
    #[arg(long)]
    s: usize,
    /// Total number of graphs (balanced over the six motif classes)
    #[arg(long)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output JSON-lines file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PretrainArgs {
    /// graphcl, infograph, untrained, or molfingerprint (the latter two
    /// skip training and checkpoint a fresh initialization)
    #[arg(long)]
    method: String,
    /// Dataset ref: synth:s=..,size=..[,seed=..] | tu:<dir>:<NAME> |
    /// ogb:<dir> | jsonl:<path>
    #[arg(long)]
    dataset: String,
    /// Checkpoint output path (JSON)
    #[arg(long)]
    out: PathBuf,
    /// Fraction of the training pool to pretrain on; pools come from the
    /// dataset's train split when it has one, else from all graphs
    #[arg(long, default_value_t = 1.0)]
    subset_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Settings file (`key = value`: preset, encoder, hyperparameters);
    /// explicit flags below override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// synthetic or molhiv pretraining defaults
    #[arg(long)]
    preset: Option<String>,
    /// gin, gine, or molfingerprint
    #[arg(long)]
    encoder: Option<String>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    proj_dim: Option<usize>,
    /// node-drop, edge-drop, or node-and-edge
    #[arg(long)]
    augmentation: Option<String>,
    #[arg(long)]
    aug_p: Option<f64>,
    /// Optional CSV for the per-epoch mean loss trace
    #[arg(long)]
    loss_out: Option<PathBuf>,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    dataset: String,
    /// Output CSV (`graph_id,f0,...`)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ProbeArgs {
    /// svm (k-fold accuracy) or logreg (split-tuned ROC-AUC)
    #[arg(long)]
    protocol: String,
    /// Embedding CSV as written by `embed`
    #[arg(long)]
    embeddings: PathBuf,
    /// Label file: one integer class per line
    #[arg(long)]
    labels: PathBuf,
    /// Directory with train.csv / valid.csv / test.csv index files
    /// (one row index per line); required by logreg
    #[arg(long)]
    splits: Option<PathBuf>,
    /// Number of probe seeds for the svm protocol (uses seeds 0..n)
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    #[arg(long, default_value_t = 10)]
    kfold: usize,
    /// Optional JSON output; the same object is printed on stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Flat `key = value` experiment config
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Sweep output directory (or its records/ subdirectory)
    #[arg(long = "in")]
    input: PathBuf,
    /// Directory to write aggregate.csv, delta CSVs, summary.json, and
    /// reference_table.txt into
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({ "kind": error_kind(&e), "error": e.to_string() })
            );
            ExitCode::FAILURE
        }
    }
}

fn error_kind(e: &HarnessError) -> &'static str {
    match e {
        HarnessError::Config(_) | HarnessError::ConfigLine { .. } => "config",
        HarnessError::Io { .. } => "io",
        HarnessError::BadRecord { .. } => "record",
        HarnessError::GridMismatch(_, _) | HarnessError::BadSeries(_) => "analysis",
        HarnessError::Data(_) => "data",
        HarnessError::Synth(_) => "synth",
        HarnessError::Encoder(_) => "encoder",
        HarnessError::Gcl(_) => "training",
        HarnessError::Probe(_) => "probe",
        HarnessError::Baseline(_) => "baseline",
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenSynthetic(a) => cmd_gen_synthetic(a),
        Command::Pretrain(a) => cmd_pretrain(a),
        Command::Embed(a) => cmd_embed(a),
        Command::Probe(a) => cmd_probe(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

fn cmd_gen_synthetic(a: GenSyntheticArgs) -> Result<()> {
    let dataset = generate_dataset(&SyntheticConfig::new(a.s, a.size, a.seed))?;
    write_jsonl(&dataset, &a.out)?;
    println!("wrote {} graphs ({} classes) to {}", dataset.len(), dataset.num_classes, a.out.display());
    Ok(())
}

/// Training pool: the train split when the dataset declares one, otherwise
/// every graph. Matches how sweeps choose their pools.
fn train_pool(dataset: &GraphDataset) -> Vec<usize> {
    match &dataset.split {
        Some(split) => split.train.clone(),
        None => (0..dataset.len()).collect(),
    }
}

fn cmd_pretrain(a: PretrainArgs) -> Result<()> {
    let method = MethodKind::parse(&a.method)?;
    if matches!(method, MethodKind::Handcrafted | MethodKind::Random) {
        return Err(HarnessError::Config(format!(
            "method {} computes features directly and has no encoder to checkpoint",
            method
        )));
    }
    let dataset_ref = parse_dataset_ref(&a.dataset)?;
    let mut config =
        gclbench::harness::ExperimentConfig::single(dataset_ref, method, PathBuf::new());
    if let Some(file) = &a.config {
        let text = fs::read_to_string(file).map_err(io_err(file))?;
        apply_settings(&mut config, &text)?;
    }
    if let Some(p) = &a.preset {
        config.preset = Preset::parse(p)?;
    }
    if let Some(e) = &a.encoder {
        config.encoder = gclbench::harness::EncoderKind::parse(e)?;
    }
    config.layers = a.layers.or(config.layers);
    config.hidden_dim = a.hidden_dim.or(config.hidden_dim);
    config.epochs = a.epochs.or(config.epochs);
    config.batch_size = a.batch_size.or(config.batch_size);
    config.lr = a.lr.or(config.lr);
    config.weight_decay = a.weight_decay.or(config.weight_decay);
    config.temperature = a.temperature.or(config.temperature);
    config.proj_dim = a.proj_dim.or(config.proj_dim);
    if let Some(aug) = &a.augmentation {
        config.augmentation = Some(parse_aug_flag(aug)?);
    }
    config.aug_p = a.aug_p.or(config.aug_p);
    config.validate()?;

    let dataset = load_dataset(&config.dataset)?;
    let enc = config.encoder_config(&dataset, method, a.seed)?;
    // the run label matches a sweep cell's, so standalone pretraining
    // reproduces the encoder a sweep would build for the same coordinates
    let run = format!("{}/f{}/s{}", method, a.subset_fraction, a.seed);
    let factory = RngFactory::new(a.seed, &run);

    let (params, trace) = if method.pretrains() {
        let subset =
            gclbench::data::subsample(&train_pool(&dataset), a.subset_fraction, &factory)?;
        info!("pretraining {} on {} graphs", method, subset.len());
        let train_cfg = config.train_config(method, a.seed);
        let outcome = match method {
            MethodKind::GraphCl => train_graphcl(&dataset, &subset, &enc, &train_cfg, &run)?,
            _ => train_infograph(&dataset, &subset, &enc, &train_cfg, &run)?,
        };
        (outcome.params, outcome.loss_trace)
    } else {
        (init_encoder(&enc)?, Vec::new())
    };

    save_checkpoint(&a.out, &enc, &params)?;
    if let Some(loss_path) = &a.loss_out {
        let mut csv = String::from("epoch,loss\n");
        for (i, l) in trace.iter().enumerate() {
            csv.push_str(&format!("{},{}\n", i, l));
        }
        fs::write(loss_path, csv).map_err(io_err(loss_path))?;
    }
    println!("checkpoint written to {}", a.out.display());
    Ok(())
}

fn parse_aug_flag(text: &str) -> Result<gclbench::gcl::AugmentationKind> {
    use gclbench::gcl::AugmentationKind as K;
    match text {
        "node-drop" => Ok(K::NodeDrop),
        "edge-drop" => Ok(K::EdgeDrop),
        "node-and-edge" => Ok(K::NodeAndEdge),
        other => Err(HarnessError::Config(format!("unknown augmentation {:?}", other))),
    }
}

fn cmd_embed(a: EmbedArgs) -> Result<()> {
    let (enc, params) = load_checkpoint(&a.checkpoint)?;
    let dataset = load_dataset(&parse_dataset_ref(&a.dataset)?)?;
    let graphs: Vec<_> = dataset.graphs.iter().collect();
    let t = encode_graphs_eval(&params, &enc, &graphs)?;
    let rows: Vec<Vec<f64>> = (0..t.rows()).map(|r| t.row(r).to_vec()).collect();
    write_feature_csv(&a.out, &rows)?;
    println!("embedded {} graphs into {}-d rows at {}", rows.len(), t.cols(), a.out.display());
    Ok(())
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    read_index_column(&text, path, "label")
}

fn read_indices(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    read_index_column(&text, path, "index")
}

/// One nonnegative integer per line; a single leading `header` line is
/// tolerated so spreadsheet exports work unchanged.
fn read_index_column(text: &str, path: &Path, header: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || (i == 0 && line == header) {
            continue;
        }
        out.push(line.parse().map_err(|_| HarnessError::BadRecord {
            path: path.to_path_buf(),
            detail: format!("line {}: {:?} is not a nonnegative integer", i + 1, line),
        })?);
    }
    Ok(out)
}

fn cmd_probe(a: ProbeArgs) -> Result<()> {
    let rows = read_feature_csv(&a.embeddings)?;
    let labels = read_labels(&a.labels)?;
    if rows.len() != labels.len() {
        return Err(HarnessError::Config(format!(
            "{} embedding rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    let report = match ProbeKind::parse(&a.protocol)? {
        ProbeKind::Svm => {
            let seeds: Vec<u64> = (0..a.seeds as u64).collect();
            let r = svm_probe_protocol(&ProbeFeatures::Fixed(&rows), &labels, a.kfold, &seeds)?;
            serde_json::json!({
                "metric": "accuracy", "mean": r.mean, "std": r.std, "per_seed": r.per_seed,
            })
        }
        ProbeKind::Logreg => {
            let dir = a.splits.as_ref().ok_or_else(|| {
                HarnessError::Config("the logreg protocol needs --splits".into())
            })?;
            let gather = |name: &str| -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
                let idx = read_indices(&dir.join(name))?;
                let bad = idx.iter().find(|&&i| i >= rows.len());
                if let Some(&i) = bad {
                    return Err(HarnessError::Config(format!(
                        "{} index {} outside the {} embedding rows",
                        name,
                        i,
                        rows.len()
                    )));
                }
                Ok((
                    idx.iter().map(|&i| rows[i].clone()).collect(),
                    idx.iter().map(|&i| labels[i]).collect(),
                ))
            };
            let train = gather("train.csv")?;
            let valid = gather("valid.csv")?;
            let test = gather("test.csv")?;
            let out = logreg_probe_protocol(
                (&train.0, &train.1),
                (&valid.0, &valid.1),
                (&test.0, &test.1),
            )?;
            serde_json::json!({ "metric": "roc-auc", "auc": out.auc, "chosen_c": out.chosen_c })
        }
    };
    let text = serde_json::to_string_pretty(&report).expect("report serialization") + "\n";
    if let Some(out) = &a.out {
        fs::write(out, &text).map_err(io_err(out))?;
    }
    print!("{}", text);
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let text = fs::read_to_string(&a.config).map_err(io_err(&a.config))?;
    let config = parse_config(&text)?;
    let sweep = run_sweep(&config)?;
    println!(
        "sweep finished: {} records, {} failed cells; records in {}",
        sweep.records.len(),
        sweep.failed.len(),
        config.out_dir.join("records").display()
    );
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let records_dir =
        if a.input.join("records").is_dir() { a.input.join("records") } else { a.input.clone() };
    let (records, failed) = load_records(&records_dir)?;
    let sweep = SweepResult::from_records(records, failed);
    write_reports(&sweep, &a.out)?;
    println!("reports written to {}", a.out.display());
    Ok(())
}
