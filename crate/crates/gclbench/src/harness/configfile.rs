//! Flat `key = value` experiment configuration and dataset references.
//!
//! Blank lines and `#` comment lines are skipped; every other line must be
//! `key = value` with a documented key, and unknown or repeated keys are
//! errors so typos never pass silently. Keys:
//!
//! | key            | default     | meaning                                             |
//! |----------------|-------------|-----------------------------------------------------|
//! | `dataset`      | required    | dataset ref, see [`parse_dataset_ref`]              |
//! | `methods`      | required    | comma list: `graphcl`, `infograph`, `untrained`, `handcrafted`, `molfingerprint`, `random` |
//! | `out_dir`      | required    | directory for records and reports                   |
//! | `fractions`    | `1.0`       | comma list of train-set fractions in (0, 1]         |
//! | `seeds`        | `0`         | comma list of grid seeds                            |
//! | `probe`        | `svm`       | `svm` (k-fold accuracy) or `logreg` (split ROC-AUC) |
//! | `kfold`        | `10`        | outer fold count for the SVM probe                  |
//! | `preset`       | `synthetic` | `synthetic` or `molhiv` pretraining defaults        |
//! | `encoder`      | `gin`       | `gin`, `gine`, or `molfingerprint`                  |
//! | `layers`       | per encoder | message-passing / MLP depth                         |
//! | `hidden_dim`   | per encoder | hidden width                                        |
//! | `epochs`       | per preset  | pretraining epochs                                  |
//! | `batch_size`   | per preset  | pretraining minibatch size                          |
//! | `lr`           | per preset  | Adam learning rate                                  |
//! | `weight_decay` | per preset  | decoupled weight decay                              |
//! | `temperature`  | per preset  | InfoNCE temperature                                 |
//! | `proj_dim`     | per preset  | projection-head width (InfoGraph defaults to 2)     |
//! | `augmentation` | per preset  | `node-drop`, `edge-drop`, or `node-and-edge`        |
//! | `aug_p`        | per preset  | per-view drop probability                           |
//! | `random_dim`   | `96`        | width of the random-feature control                 |

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use crate::data::{load_ogb_csv, parse_tu_dataset, read_jsonl, GraphDataset};
use crate::encoder::{vocab_from_dataset, EncoderConfig};
use crate::gcl::{AugmentationKind, AugmentationSpec, TrainConfig};
use crate::rng;
use crate::synth::{generate_dataset, SyntheticConfig};

use super::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodKind {
    GraphCl,
    InfoGraph,
    Untrained,
    Handcrafted,
    MolFingerprint,
    Random,
}

impl MethodKind {
    pub const ALL: [MethodKind; 6] = [
        MethodKind::GraphCl,
        MethodKind::InfoGraph,
        MethodKind::Untrained,
        MethodKind::Handcrafted,
        MethodKind::MolFingerprint,
        MethodKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::GraphCl => "graphcl",
            MethodKind::InfoGraph => "infograph",
            MethodKind::Untrained => "untrained",
            MethodKind::Handcrafted => "handcrafted",
            MethodKind::MolFingerprint => "molfingerprint",
            MethodKind::Random => "random",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == text)
            .ok_or_else(|| HarnessError::Config(format!("unknown method {:?}", text)))
    }

    /// Whether the method trains an encoder before embedding.
    pub fn pretrains(self) -> bool {
        matches!(self, MethodKind::GraphCl | MethodKind::InfoGraph)
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    Svm,
    Logreg,
}

impl ProbeKind {
    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::Svm => "svm",
            ProbeKind::Logreg => "logreg",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "svm" => Ok(ProbeKind::Svm),
            "logreg" => Ok(ProbeKind::Logreg),
            other => Err(HarnessError::Config(format!("unknown probe {:?}", other))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Synthetic,
    Molhiv,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Synthetic => "synthetic",
            Preset::Molhiv => "molhiv",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "synthetic" => Ok(Preset::Synthetic),
            "molhiv" => Ok(Preset::Molhiv),
            other => Err(HarnessError::Config(format!("unknown preset {:?}", other))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    Gin,
    Gine,
    MolFingerprint,
}

impl EncoderKind {
    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::Gin => "gin",
            EncoderKind::Gine => "gine",
            EncoderKind::MolFingerprint => "molfingerprint",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "gin" => Ok(EncoderKind::Gin),
            "gine" => Ok(EncoderKind::Gine),
            "molfingerprint" => Ok(EncoderKind::MolFingerprint),
            other => Err(HarnessError::Config(format!("unknown encoder {:?}", other))),
        }
    }
}

fn aug_name(kind: AugmentationKind) -> &'static str {
    match kind {
        AugmentationKind::NodeDrop => "node-drop",
        AugmentationKind::EdgeDrop => "edge-drop",
        AugmentationKind::NodeAndEdge => "node-and-edge",
    }
}

fn parse_aug(text: &str) -> Result<AugmentationKind> {
    match text {
        "node-drop" => Ok(AugmentationKind::NodeDrop),
        "edge-drop" => Ok(AugmentationKind::EdgeDrop),
        "node-and-edge" => Ok(AugmentationKind::NodeAndEdge),
        other => Err(HarnessError::Config(format!("unknown augmentation {:?}", other))),
    }
}

/// Where a dataset comes from. The textual form is `scheme:rest`:
///
/// - `synth:s=4,size=3000,seed=0` — generated motif/background graphs
/// - `tu:<dir>:<NAME>` — TU text files `<dir>/<NAME>_*.txt`
/// - `ogb:<dir>` — OGB-style CSV directory with split files
/// - `jsonl:<path>` — one JSON graph record per line
///
/// A bare path without a scheme is read as `jsonl:`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetRef {
    Synth { s: usize, size: usize, seed: u64 },
    Tu { dir: PathBuf, name: String },
    Ogb { dir: PathBuf },
    Jsonl { path: PathBuf },
}

impl DatasetRef {
    /// Short name used in run records and report rows.
    pub fn name(&self) -> String {
        match self {
            DatasetRef::Synth { s, size, .. } => format!("synth-S{}-{}", s, size),
            DatasetRef::Tu { name, .. } => name.clone(),
            DatasetRef::Ogb { dir } => dir
                .file_name()
                .map_or_else(|| "ogb".to_string(), |n| n.to_string_lossy().into_owned()),
            DatasetRef::Jsonl { path } => path
                .file_stem()
                .map_or_else(|| "jsonl".to_string(), |n| n.to_string_lossy().into_owned()),
        }
    }
}

impl fmt::Display for DatasetRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetRef::Synth { s, size, seed } => {
                write!(f, "synth:s={},size={},seed={}", s, size, seed)
            }
            DatasetRef::Tu { dir, name } => write!(f, "tu:{}:{}", dir.display(), name),
            DatasetRef::Ogb { dir } => write!(f, "ogb:{}", dir.display()),
            DatasetRef::Jsonl { path } => write!(f, "jsonl:{}", path.display()),
        }
    }
}

pub fn parse_dataset_ref(text: &str) -> Result<DatasetRef> {
    // a bare path (no scheme) is read as a JSON-lines dump
    let Some((scheme, rest)) = text.split_once(':') else {
        return Ok(DatasetRef::Jsonl { path: text.into() });
    };
    match scheme {
        "synth" => {
            let (mut s, mut size, mut seed) = (None, None, 0u64);
            for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
                let (k, v) = part.split_once('=').ok_or_else(|| {
                    HarnessError::Config(format!("synth ref part {:?} is not key=value", part))
                })?;
                let v = v.trim();
                match k.trim() {
                    "s" => s = Some(parse_num::<usize>(v, "synth s")?),
                    "size" => size = Some(parse_num::<usize>(v, "synth size")?),
                    "seed" => seed = parse_num::<u64>(v, "synth seed")?,
                    other => {
                        return Err(HarnessError::Config(format!(
                            "unknown synth ref key {:?}",
                            other
                        )))
                    }
                }
            }
            match (s, size) {
                (Some(s), Some(size)) => Ok(DatasetRef::Synth { s, size, seed }),
                _ => Err(HarnessError::Config("synth ref needs s= and size=".into())),
            }
        }
        "tu" => {
            let (dir, name) = rest.rsplit_once(':').ok_or_else(|| {
                HarnessError::Config(format!("tu ref {:?} must be tu:<dir>:<NAME>", text))
            })?;
            Ok(DatasetRef::Tu { dir: dir.into(), name: name.to_string() })
        }
        "ogb" => Ok(DatasetRef::Ogb { dir: rest.into() }),
        "jsonl" => Ok(DatasetRef::Jsonl { path: rest.into() }),
        other => Err(HarnessError::Config(format!("unknown dataset scheme {:?}", other))),
    }
}

/// Load the graphs a reference points at (synthetic refs generate them).
pub fn load_dataset(dataset: &DatasetRef) -> Result<GraphDataset> {
    Ok(match dataset {
        DatasetRef::Synth { s, size, seed } => {
            generate_dataset(&SyntheticConfig::new(*s, *size, *seed))?
        }
        DatasetRef::Tu { dir, name } => parse_tu_dataset(dir, name)?,
        DatasetRef::Ogb { dir } => load_ogb_csv(dir)?,
        DatasetRef::Jsonl { path } => {
            let name = dataset.name();
            read_jsonl(path, &name)?
        }
    })
}

/// A fully resolved experiment: dataset, method set, probe, grid, and
/// pretraining settings. `None` fields fall back to the preset / encoder
/// defaults at the point of use.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetRef,
    pub methods: Vec<MethodKind>,
    pub fractions: Vec<f64>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub probe: ProbeKind,
    pub kfold: usize,
    pub preset: Preset,
    pub encoder: EncoderKind,
    pub layers: Option<usize>,
    pub hidden_dim: Option<usize>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub weight_decay: Option<f64>,
    pub temperature: Option<f64>,
    pub proj_dim: Option<usize>,
    pub augmentation: Option<AugmentationKind>,
    pub aug_p: Option<f64>,
    pub random_dim: usize,
}

impl ExperimentConfig {
    /// Minimal config for one dataset/method pair; grid `{1.0} x {0}`.
    pub fn single(dataset: DatasetRef, method: MethodKind, out_dir: PathBuf) -> Self {
        Self {
            dataset,
            methods: vec![method],
            fractions: vec![1.0],
            seeds: vec![0],
            out_dir,
            probe: ProbeKind::Svm,
            kfold: 10,
            preset: Preset::Synthetic,
            encoder: EncoderKind::Gin,
            layers: None,
            hidden_dim: None,
            epochs: None,
            batch_size: None,
            lr: None,
            weight_decay: None,
            temperature: None,
            proj_dim: None,
            augmentation: None,
            aug_p: None,
            random_dim: 96,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.methods.is_empty() {
            return bad("methods list is empty".into());
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return bad(format!("method {} listed twice", m));
            }
        }
        if self.fractions.is_empty() {
            return bad("fractions list is empty".into());
        }
        for (i, &f) in self.fractions.iter().enumerate() {
            if !(f > 0.0 && f <= 1.0) {
                return bad(format!("fraction {} outside (0, 1]", f));
            }
            if self.fractions[..i].contains(&f) {
                return bad(format!("fraction {} listed twice", f));
            }
        }
        if self.seeds.is_empty() {
            return bad("seeds list is empty".into());
        }
        for (i, &s) in self.seeds.iter().enumerate() {
            if self.seeds[..i].contains(&s) {
                return bad(format!("seed {} listed twice", s));
            }
        }
        if self.kfold < 2 {
            return bad(format!("kfold {} < 2", self.kfold));
        }
        if self.layers == Some(0) || self.hidden_dim == Some(0) || self.proj_dim == Some(0) {
            return bad("layers, hidden_dim, and proj_dim must be >= 1".into());
        }
        if self.batch_size.is_some_and(|b| b < 2) {
            return bad("batch_size must be >= 2".into());
        }
        if self.lr.is_some_and(|v| !(v > 0.0)) || self.temperature.is_some_and(|v| !(v > 0.0)) {
            return bad("lr and temperature must be positive".into());
        }
        if self.weight_decay.is_some_and(|v| !(v >= 0.0)) {
            return bad("weight_decay must be >= 0".into());
        }
        if self.aug_p.is_some_and(|p| !(0.0..=1.0).contains(&p)) {
            return bad("aug_p must lie in [0, 1]".into());
        }
        if self.random_dim == 0 {
            return bad("random_dim must be >= 1".into());
        }
        Ok(())
    }

    /// Pretraining settings for one cell: preset defaults, explicit
    /// overrides, and the InfoGraph projection-width exception.
    pub fn train_config(&self, method: MethodKind, seed: u64) -> TrainConfig {
        let mut t = match self.preset {
            Preset::Synthetic => TrainConfig::synthetic_defaults(seed),
            Preset::Molhiv => TrainConfig::molhiv_defaults(seed),
        };
        if let Some(v) = self.epochs {
            t.epochs = v;
        }
        if let Some(v) = self.batch_size {
            t.batch_size = v;
        }
        if let Some(v) = self.lr {
            t.lr = v;
        }
        if let Some(v) = self.weight_decay {
            t.weight_decay = v;
        }
        if let Some(v) = self.temperature {
            t.temperature = v;
        }
        t.proj_dim = match (self.proj_dim, method) {
            (Some(v), _) => v,
            (None, MethodKind::InfoGraph) => 2,
            (None, _) => t.proj_dim,
        };
        let kind = self.augmentation.unwrap_or_else(|| t.augmentation.kind());
        let p = self.aug_p.unwrap_or_else(|| t.augmentation.probability());
        t.augmentation = AugmentationSpec::new(kind, p).expect("probability validated");
        t
    }

    /// Encoder settings for one cell. The `molfingerprint` method always
    /// uses the MolFingerprint MLP; every other method uses the configured
    /// base encoder. `init_seed` is the cell seed so untrained baselines
    /// vary across the seed axis.
    pub fn encoder_config(
        &self,
        dataset: &GraphDataset,
        method: MethodKind,
        seed: u64,
    ) -> Result<EncoderConfig> {
        let kind = if method == MethodKind::MolFingerprint {
            EncoderKind::MolFingerprint
        } else {
            self.encoder
        };
        let mut cfg = match kind {
            EncoderKind::Gin => EncoderConfig::gin(dataset.node_feature_dim(), seed),
            EncoderKind::Gine => {
                let (node_vocab, edge_vocab) = vocab_from_dataset(dataset)?;
                EncoderConfig::gine(node_vocab, edge_vocab, seed)
            }
            EncoderKind::MolFingerprint => {
                EncoderConfig::mol_fingerprint(dataset.node_feature_dim(), seed)
            }
        };
        if let Some(v) = self.layers {
            cfg.layers = v;
        }
        if let Some(v) = self.hidden_dim {
            cfg.hidden_dim = v;
        }
        Ok(cfg)
    }

    /// Hash of everything that determines a single cell's value.
    ///
    /// The grid lists (methods, fractions, seeds) and the output directory
    /// are excluded: a cell is keyed by (hash, method, fraction, seed), so
    /// growing the grid or moving the directory reuses finished cells while
    /// any change to dataset, encoder, pretraining, or probe settings
    /// invalidates them. Keys are emitted in a fixed order, so the hash is
    /// independent of config-file line order.
    pub fn cell_hash(&self) -> String {
        let ou = |v: Option<usize>| v.map_or_else(|| "default".to_string(), |x| x.to_string());
        let of = |v: Option<f64>| v.map_or_else(|| "default".to_string(), |x| x.to_string());
        let lines = [
            format!("aug_p={}", of(self.aug_p)),
            format!("augmentation={}", self.augmentation.map_or("default", aug_name)),
            format!("batch_size={}", ou(self.batch_size)),
            format!("dataset={}", self.dataset),
            format!("encoder={}", self.encoder.name()),
            format!("epochs={}", ou(self.epochs)),
            format!("hidden_dim={}", ou(self.hidden_dim)),
            format!("kfold={}", self.kfold),
            format!("layers={}", ou(self.layers)),
            format!("lr={}", of(self.lr)),
            format!("preset={}", self.preset.name()),
            format!("probe={}", self.probe.name()),
            format!("proj_dim={}", ou(self.proj_dim)),
            format!("random_dim={}", self.random_dim),
            format!("temperature={}", of(self.temperature)),
            format!("weight_decay={}", of(self.weight_decay)),
        ];
        let canonical = lines.join("\n");
        format!("{:016x}", rng::fnv1a_fold(rng::FNV_OFFSET, canonical.as_bytes()))
    }
}

fn parse_num<T: std::str::FromStr>(text: &str, what: &str) -> Result<T> {
    text.trim()
        .parse()
        .map_err(|_| HarnessError::Config(format!("{} {:?} is not a valid number", what, text)))
}

fn parse_num_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| parse_num(p, what))
        .collect()
}

const KNOWN_KEYS: [&str; 20] = [
    "dataset",
    "methods",
    "out_dir",
    "fractions",
    "seeds",
    "probe",
    "kfold",
    "preset",
    "encoder",
    "layers",
    "hidden_dim",
    "epochs",
    "batch_size",
    "lr",
    "weight_decay",
    "temperature",
    "proj_dim",
    "augmentation",
    "aug_p",
    "random_dim",
];

/// The subset of keys a settings-only file (`pretrain --config`) may use:
/// preset, encoder, and hyperparameter overrides, but not the dataset,
/// method list, grid, or output location — those come from the caller.
const SETTING_KEYS: [&str; 12] = [
    "preset",
    "encoder",
    "layers",
    "hidden_dim",
    "epochs",
    "batch_size",
    "lr",
    "weight_decay",
    "temperature",
    "proj_dim",
    "augmentation",
    "aug_p",
];

/// Split flat `key = value` lines into a map, skipping blanks and `#`
/// comments; keys outside `allowed` and duplicates are line errors.
fn split_kv_lines<'k>(text: &str, allowed: &'k [&'k str]) -> Result<BTreeMap<&'k str, String>> {
    let mut map: BTreeMap<&'k str, String> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |detail: String| HarnessError::ConfigLine { line: i + 1, detail };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, found {:?}", line)))?;
        let key = key.trim();
        let value = value.trim();
        let known = allowed
            .iter()
            .find(|&&k| k == key)
            .ok_or_else(|| err(format!("unknown key {:?}", key)))?;
        if map.insert(known, value.to_string()).is_some() {
            return Err(err(format!("key {:?} set twice", key)));
        }
    }
    Ok(map)
}

/// Write one settings key into the config.
fn apply_setting(config: &mut ExperimentConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "preset" => config.preset = Preset::parse(value)?,
        "encoder" => config.encoder = EncoderKind::parse(value)?,
        "layers" => config.layers = Some(parse_num(value, "layers")?),
        "hidden_dim" => config.hidden_dim = Some(parse_num(value, "hidden_dim")?),
        "epochs" => config.epochs = Some(parse_num(value, "epochs")?),
        "batch_size" => config.batch_size = Some(parse_num(value, "batch_size")?),
        "lr" => config.lr = Some(parse_num(value, "lr")?),
        "weight_decay" => config.weight_decay = Some(parse_num(value, "weight_decay")?),
        "temperature" => config.temperature = Some(parse_num(value, "temperature")?),
        "proj_dim" => config.proj_dim = Some(parse_num(value, "proj_dim")?),
        "augmentation" => config.augmentation = Some(parse_aug(value)?),
        "aug_p" => config.aug_p = Some(parse_num(value, "aug_p")?),
        other => return Err(HarnessError::Config(format!("{:?} is not a settings key", other))),
    }
    Ok(())
}

/// Apply a settings-only file (preset / encoder / hyperparameters) on top
/// of an existing config. Validation is left to the caller so command-line
/// overrides can still land afterwards.
pub fn apply_settings(config: &mut ExperimentConfig, text: &str) -> Result<()> {
    for (key, value) in split_kv_lines(text, &SETTING_KEYS)? {
        apply_setting(config, key, &value)?;
    }
    Ok(())
}

/// Parse the flat config format documented at the top of this module.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let map = split_kv_lines(text, &KNOWN_KEYS)?;

    let required = |key: &str| {
        map.get(key)
            .cloned()
            .ok_or_else(|| HarnessError::Config(format!("missing required key {:?}", key)))
    };
    let methods = required("methods")?
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(MethodKind::parse)
        .collect::<Result<Vec<_>>>()?;

    let mut config = ExperimentConfig {
        dataset: parse_dataset_ref(&required("dataset")?)?,
        methods,
        fractions: match map.get("fractions") {
            Some(v) => parse_num_list(v, "fraction")?,
            None => vec![1.0],
        },
        seeds: match map.get("seeds") {
            Some(v) => parse_num_list(v, "seed")?,
            None => vec![0],
        },
        out_dir: PathBuf::from(required("out_dir")?),
        probe: map.get("probe").map_or(Ok(ProbeKind::Svm), |v| ProbeKind::parse(v))?,
        kfold: map.get("kfold").map_or(Ok(10), |v| parse_num(v, "kfold"))?,
        preset: Preset::Synthetic,
        encoder: EncoderKind::Gin,
        layers: None,
        hidden_dim: None,
        epochs: None,
        batch_size: None,
        lr: None,
        weight_decay: None,
        temperature: None,
        proj_dim: None,
        augmentation: None,
        aug_p: None,
        random_dim: map.get("random_dim").map_or(Ok(96), |v| parse_num(v, "random_dim"))?,
    };
    for key in SETTING_KEYS {
        if let Some(value) = map.get(key) {
            apply_setting(&mut config, key, value)?;
        }
    }
    config.validate()?;
    Ok(config)
}
