//! Rooted tree of action concepts.
//!
//! The taxonomy file is a JSON document naming the root and listing every
//! other node with its parent:
//!
//! ```json
//! {
//!   "root": "resuscitation",
//!   "nodes": [
//!     { "id": "thermal", "parent": "resuscitation" },
//!     { "id": "dry_infant", "parent": "thermal" }
//!   ]
//! }
//! ```
//!
//! Node order is preserved so that re-serializing a parsed document yields
//! the same document.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("malformed taxonomy document: {0}")]
    Malformed(String),
    #[error("empty action identifier")]
    EmptyId,
    #[error("duplicate action identifier `{0}`")]
    DuplicateId(String),
    #[error("`{0}` has no parent but `{1}` is the declared root")]
    MultipleRoots(String, String),
    #[error("`{child}` names unknown parent `{parent}`")]
    DanglingParent { child: String, parent: String },
    #[error("parent chain starting at `{0}` forms a cycle")]
    Cycle(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeEntry {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaxonomyDocument {
    root: String,
    #[serde(default)]
    nodes: Vec<NodeEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Node {
    id: String,
    parent: Option<usize>,
    depth: u32,
}

/// Validated action taxonomy. Index 0 is always the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionTaxonomy {
    nodes: Vec<Node>,
    index: HashMap<String, usize>,
}

impl ActionTaxonomy {
    /// Parses and validates a taxonomy document.
    pub fn parse(document: &str) -> Result<Self, TaxonomyError> {
        let doc: TaxonomyDocument =
            serde_json::from_str(document).map_err(|e| TaxonomyError::Malformed(e.to_string()))?;
        let mut edges = Vec::with_capacity(doc.nodes.len());
        for entry in doc.nodes {
            match entry.parent {
                Some(parent) => edges.push((entry.id, parent)),
                None => {
                    if entry.id == doc.root {
                        return Err(TaxonomyError::DuplicateId(entry.id));
                    }
                    return Err(TaxonomyError::MultipleRoots(entry.id, doc.root));
                }
            }
        }
        Self::from_edges(&doc.root, edges)
    }

    /// Builds a taxonomy from a root and `(child, parent)` edges, in order.
    pub fn from_edges<S: Into<String>>(
        root: &str,
        edges: impl IntoIterator<Item = (S, S)>,
    ) -> Result<Self, TaxonomyError> {
        let edges: Vec<(String, String)> =
            edges.into_iter().map(|(c, p)| (c.into(), p.into())).collect();
        if root.is_empty() {
            return Err(TaxonomyError::EmptyId);
        }

        let mut slot: HashMap<&str, usize> = HashMap::with_capacity(edges.len() + 1);
        slot.insert(root, 0);
        for (i, (child, _)) in edges.iter().enumerate() {
            if child.is_empty() {
                return Err(TaxonomyError::EmptyId);
            }
            if slot.insert(child.as_str(), i + 1).is_some() {
                return Err(TaxonomyError::DuplicateId(child.clone()));
            }
        }

        let mut parent_of = vec![None; edges.len() + 1];
        for (i, (child, parent)) in edges.iter().enumerate() {
            match slot.get(parent.as_str()) {
                Some(&p) => parent_of[i + 1] = Some(p),
                None => {
                    return Err(TaxonomyError::DanglingParent {
                        child: child.clone(),
                        parent: parent.clone(),
                    })
                }
            }
        }

        // Every node has exactly one parent and only the root lacks one, so a
        // node is unreachable from the root iff its parent chain loops.
        let mut depth: Vec<Option<u32>> = vec![None; parent_of.len()];
        depth[0] = Some(0);
        for start in 1..parent_of.len() {
            let mut chain = Vec::new();
            let mut cursor = start;
            while depth[cursor].is_none() {
                if chain.contains(&cursor) {
                    return Err(TaxonomyError::Cycle(edges[cursor - 1].0.clone()));
                }
                chain.push(cursor);
                cursor = parent_of[cursor].expect("only the root lacks a parent");
            }
            let mut d = depth[cursor].unwrap_or_default();
            for &n in chain.iter().rev() {
                d += 1;
                depth[n] = Some(d);
            }
        }

        let ids = std::iter::once(root.to_string()).chain(edges.into_iter().map(|(c, _)| c));
        let nodes: Vec<Node> = ids
            .zip(parent_of)
            .zip(depth)
            .map(|((id, parent), depth)| Node {
                id,
                parent,
                depth: depth.unwrap_or_default(),
            })
            .collect();
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
        Ok(Self { nodes, index })
    }

    pub fn to_json(&self) -> String {
        let doc = TaxonomyDocument {
            root: self.root().to_string(),
            nodes: self.nodes[1..]
                .iter()
                .map(|n| NodeEntry {
                    id: n.id.clone(),
                    parent: n.parent.map(|p| self.nodes[p].id.clone()),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("taxonomy document serializes")
    }

    pub fn root(&self) -> &str {
        &self.nodes[0].id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Node identifiers in document order, root first.
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.id.as_str())
    }

    fn slot(&self, id: &str) -> Result<usize, TaxonomyError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| TaxonomyError::UnknownAction(id.to_string()))
    }

    pub fn depth(&self, id: &str) -> Result<u32, TaxonomyError> {
        Ok(self.nodes[self.slot(id)?].depth)
    }

    pub fn parent(&self, id: &str) -> Result<Option<&str>, TaxonomyError> {
        let node = &self.nodes[self.slot(id)?];
        Ok(node.parent.map(|p| self.nodes[p].id.as_str()))
    }

    pub fn children<'a>(&'a self, id: &str) -> Result<Vec<&'a str>, TaxonomyError> {
        let slot = self.slot(id)?;
        Ok(self
            .nodes
            .iter()
            .filter(|n| n.parent == Some(slot))
            .map(|n| n.id.as_str())
            .collect())
    }

    /// Other children of the same parent. Empty for the root.
    pub fn siblings<'a>(&'a self, id: &str) -> Result<Vec<&'a str>, TaxonomyError> {
        match self.parent(id)? {
            Some(parent) => Ok(self
                .children(parent)?
                .into_iter()
                .filter(|&c| c != id)
                .collect()),
            None => Ok(Vec::new()),
        }
    }

    /// Lowest common ancestor of two nodes.
    pub fn lca<'a>(&'a self, a: &str, b: &str) -> Result<&'a str, TaxonomyError> {
        let mut x = self.slot(a)?;
        let mut y = self.slot(b)?;
        while self.nodes[x].depth > self.nodes[y].depth {
            x = self.nodes[x].parent.expect("non-root");
        }
        while self.nodes[y].depth > self.nodes[x].depth {
            y = self.nodes[y].parent.expect("non-root");
        }
        while x != y {
            x = self.nodes[x].parent.expect("non-root");
            y = self.nodes[y].parent.expect("non-root");
        }
        Ok(&self.nodes[x].id)
    }
}
