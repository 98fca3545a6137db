//! Canonical dataset dump: one JSON object per line, one graph per object.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::graph::{Graph, GraphDataset};
use super::{DataError, Result};
use crate::autodiff::Tensor;

#[derive(Serialize, Deserialize)]
struct GraphRecord {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    node_features: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    edge_features: Option<Vec<Vec<f64>>>,
    label: usize,
}

fn rows(t: &Tensor) -> Vec<Vec<f64>> {
    (0..t.rows()).map(|i| t.row(i).to_vec()).collect()
}

fn from_rows(rows: &[Vec<f64>], expected_rows: usize, what: &str) -> Result<Tensor> {
    let width = rows.first().map_or(0, Vec::len);
    if rows.len() != expected_rows {
        return Err(DataError::InvalidGraph(format!(
            "{} has {} rows, expected {}",
            what,
            rows.len(),
            expected_rows
        )));
    }
    let mut flat = Vec::with_capacity(rows.len() * width);
    for r in rows {
        if r.len() != width {
            return Err(DataError::InvalidGraph(format!("ragged {} rows", what)));
        }
        flat.extend_from_slice(r);
    }
    Tensor::matrix(expected_rows, width, flat).map_err(|e| DataError::InvalidGraph(e.to_string()))
}

/// Write `dataset` to `path` in the JSON-lines dump format.
pub fn write_jsonl(dataset: &GraphDataset, path: &Path) -> Result<()> {
    let io_err = |source: std::io::Error| DataError::Io { path: path.to_path_buf(), source };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    for g in &dataset.graphs {
        let rec = GraphRecord {
            num_nodes: g.num_nodes,
            edges: g.edges.clone(),
            node_features: rows(&g.node_features),
            edge_features: g.edge_features.as_ref().map(rows),
            label: g.label,
        };
        serde_json::to_writer(&mut w, &rec).map_err(|e| DataError::Parse {
            path: path.to_path_buf(),
            line: 0,
            detail: e.to_string(),
        })?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Read a JSON-lines dump back into a dataset named `name`.
///
/// The class count is inferred as `max label + 1`; the dump format carries
/// no split.
pub fn read_jsonl(path: &Path, name: &str) -> Result<GraphDataset> {
    let text = fs::read_to_string(path)
        .map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    let mut graphs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: GraphRecord = serde_json::from_str(line).map_err(|e| DataError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            detail: e.to_string(),
        })?;
        let node_features = from_rows(&rec.node_features, rec.num_nodes, "node features")?;
        let edge_features = match &rec.edge_features {
            Some(rows) => Some(from_rows(rows, rec.edges.len(), "edge features")?),
            None => None,
        };
        graphs.push(Graph::new(rec.num_nodes, node_features, rec.edges, edge_features, rec.label)?);
    }
    let num_classes = graphs.iter().map(|g| g.label + 1).max().unwrap_or(0);
    let dataset = GraphDataset { graphs, name: name.to_string(), num_classes, split: None };
    dataset.validate()?;
    Ok(dataset)
}
