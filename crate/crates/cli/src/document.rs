//! JSON interchange format for embedded trees.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "nodes": [{"id": 0, "kind": "terminal", "neighbors": [3]}, ...],
//!   "root": 0,
//!   "positions": {"0": [0.0, 0.0], ...},
//!   "metadata": {"construction": "tk", "eps": 0.01, "params": {"k": 3}}
//! }
//! ```
//!
//! Node ids are indices into `nodes`. A Steiner point's neighbour order is
//! kept as given and fixes the child order used by the constructions.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use steiner_core::geometry::point;
use steiner_core::{EmbeddedTree, FullTopology, NodeId, NodeKind};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DocError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format_version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("{0}")]
    Malformed(String),
    #[error(transparent)]
    Core(#[from] steiner_core::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Terminal,
    Steiner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub id: NodeId,
    pub kind: Kind,
    pub neighbors: Vec<NodeId>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub construction: String,
    /// Declared ε of the construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub format_version: u32,
    pub nodes: Vec<NodeEntry>,
    pub root: NodeId,
    pub positions: BTreeMap<NodeId, [f64; 2]>,
    pub metadata: Metadata,
}

impl TreeDocument {
    pub fn from_tree(tree: &EmbeddedTree<f64>, metadata: Metadata) -> Self {
        let topo = tree.topology();
        let nodes = (0..topo.node_count())
            .map(|v| NodeEntry {
                id: v,
                kind: match topo.kind(v) {
                    NodeKind::Terminal => Kind::Terminal,
                    NodeKind::Steiner => Kind::Steiner,
                },
                neighbors: topo.neighbors(v).to_vec(),
            })
            .collect();
        let positions = tree.positions().iter().enumerate().map(|(v, p)| (v, [p.re, p.im])).collect();
        Self {
            format_version: FORMAT_VERSION,
            nodes,
            root: topo.root(),
            positions,
            metadata,
        }
    }

    pub fn to_tree(&self) -> Result<EmbeddedTree<f64>, DocError> {
        if self.format_version != FORMAT_VERSION {
            return Err(DocError::Version(self.format_version));
        }
        let n = self.nodes.len();
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i {
                return Err(DocError::Malformed(format!("node at index {i} has id {}", node.id)));
            }
        }
        if self.positions.len() != n || self.positions.keys().any(|&v| v >= n) {
            return Err(DocError::Malformed(format!(
                "expected one position per node (0..{n}), found {}",
                self.positions.len()
            )));
        }
        let kinds = self
            .nodes
            .iter()
            .map(|e| match e.kind {
                Kind::Terminal => NodeKind::Terminal,
                Kind::Steiner => NodeKind::Steiner,
            })
            .collect();
        let adjacency = self.nodes.iter().map(|e| e.neighbors.clone()).collect();
        let topology = FullTopology::new(kinds, adjacency, self.root)?;
        let positions = self.positions.values().map(|&[x, y]| point(x, y)).collect();
        Ok(EmbeddedTree::new(topology, positions)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document is always serialisable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, DocError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self, DocError> {
        let text = std::fs::read_to_string(path).map_err(|source| DocError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn param_u32(&self, key: &str) -> Option<u32> {
        self.metadata.params.get(key)?.as_u64()?.try_into().ok()
    }

    pub fn param_f64(&self, key: &str) -> Option<f64> {
        self.metadata.params.get(key)?.as_f64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use steiner_core::approx::{build_tk_closed_form, witness3};
    use steiner_core::TkParams;

    #[test]
    fn tk_survives_round_trip() {
        let tree = build_tk_closed_form(TkParams::new(3, 0.01).unwrap()).unwrap();
        let doc = TreeDocument::from_tree(&tree, Metadata::default());
        let back = TreeDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
        let t2 = back.to_tree().unwrap();
        assert_eq!(t2.positions(), tree.positions());
        assert_eq!(t2.topology(), tree.topology());
    }

    #[test]
    fn rejects_wrong_version_and_missing_positions() {
        let tree = witness3(0.2, 1e-3).unwrap();
        let mut doc = TreeDocument::from_tree(&tree, Metadata::default());
        doc.format_version = 9;
        assert!(matches!(doc.to_tree(), Err(DocError::Version(9))));
        doc.format_version = FORMAT_VERSION;
        doc.positions.remove(&2);
        assert!(matches!(doc.to_tree(), Err(DocError::Malformed(_))));
    }

    #[test]
    fn rejects_bad_degree() {
        let tree = witness3(0.2, 1e-3).unwrap();
        let mut doc = TreeDocument::from_tree(&tree, Metadata::default());
        doc.nodes[3].neighbors.pop();
        assert!(matches!(doc.to_tree(), Err(DocError::Core(_))));
    }
}
