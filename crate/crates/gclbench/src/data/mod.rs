//! Graph containers, dataset parsers, subsampling and fold assignment.
//!
//! Datasets are immutable after load and safe to share read-only across
//! worker threads. All parsing is loss-free for the formats we emit:
//! serializing a parsed dataset and re-parsing yields an identical value.

use std::path::PathBuf;

use thiserror::Error;

mod graph;
mod jsonl;
mod ogb;
mod sampling;
mod tu;

pub use graph::{FoldAssignment, Graph, GraphDataset, SplitSpec};
pub use jsonl::{read_jsonl, write_jsonl};
pub use ogb::load_ogb_csv;
pub use sampling::{stratified_kfold, subsample};
pub use tu::{parse_tu_dataset, write_tu_dataset};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {detail}")]
    Parse { path: PathBuf, line: usize, detail: String },
    #[error("node count mismatch: {detail}")]
    NodeCountMismatch { detail: String },
    #[error("count mismatch: {detail}")]
    CountMismatch { detail: String },
    #[error("{path}:{line}: edge references unknown node {node}")]
    UnknownNode { path: PathBuf, line: usize, node: i64 },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("subsample fraction must lie in (0, 1], got {0}")]
    BadFraction(f64),
    #[error("cannot subsample an empty index list")]
    EmptyTarget,
    #[error("stratified folds need K >= 2, got {0}")]
    BadFoldCount(usize),
    #[error("class {class} has {count} members, fewer than K = {k}")]
    ClassTooSmall { class: usize, count: usize, k: usize },
}

pub type Result<T> = std::result::Result<T, DataError>;
