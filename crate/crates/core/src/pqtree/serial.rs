//! JSON form of a tree: `{variant, nodes:[{id, kind, label?, neighbors}]}`.
//! Null trees additionally list their leaves so arc maps stay checkable.

use super::{NodeKind, PQError, PQTree, RawNode, Variant};
use crate::orders::Label;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Serialize, Deserialize)]
struct NodeJson {
    id: usize,
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    label: Option<Label>,
    #[serde(default)]
    neighbors: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct TreeJson {
    variant: String,
    #[serde(default)]
    nodes: Vec<NodeJson>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    leaves: Option<Vec<Label>>,
}

impl Serialize for PQTree {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let variant = match self.variant {
            Variant::Normal => "Normal",
            Variant::Null => "Null",
            Variant::Empty => "Empty",
        };
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| NodeJson {
                id,
                kind: match n.kind {
                    NodeKind::P => "P".into(),
                    NodeKind::Q => "Q".into(),
                    NodeKind::Leaf(_) => "leaf".into(),
                },
                label: n.label().cloned(),
                neighbors: n.neighbors.clone(),
            })
            .collect();
        let leaves =
            (self.variant == Variant::Null).then(|| self.leaves.iter().cloned().collect());
        TreeJson { variant: variant.into(), nodes, leaves }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PQTree {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let json = TreeJson::deserialize(d)?;
        from_json(json).map_err(serde::de::Error::custom)
    }
}

fn from_json(json: TreeJson) -> Result<PQTree, PQError> {
    match json.variant.as_str() {
        "Null" => return Ok(PQTree::null(json.leaves.unwrap_or_default())),
        "Empty" => return Ok(PQTree::empty()),
        "Normal" => {}
        v => return Err(PQError::Malformed(format!("unknown variant {v}"))),
    }
    if json.nodes.is_empty() {
        return Ok(PQTree::empty());
    }
    let index: BTreeMap<usize, usize> =
        json.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    if index.len() != json.nodes.len() {
        return Err(PQError::Malformed("duplicate node ids".into()));
    }
    let mut raw = Vec::with_capacity(json.nodes.len());
    let mut seen = BTreeSet::new();
    for n in &json.nodes {
        let kind = match (n.kind.as_str(), &n.label) {
            ("P", _) => NodeKind::P,
            ("Q", _) => NodeKind::Q,
            ("leaf", Some(l)) => {
                if !seen.insert(l.clone()) {
                    return Err(PQError::Malformed(format!("duplicate leaf {l}")));
                }
                NodeKind::Leaf(l.clone())
            }
            (k, _) => return Err(PQError::Malformed(format!("bad node kind {k} for node {}", n.id))),
        };
        let mut r = RawNode::new(kind);
        for y in &n.neighbors {
            r.neighbors.push(
                *index
                    .get(y)
                    .ok_or_else(|| PQError::Malformed(format!("unknown neighbor {y}")))?,
            );
        }
        raw.push(r);
    }
    validate_tree(&raw)?;
    Ok(PQTree::from_raw(raw).0)
}

/// Symmetric adjacency, connected, acyclic, leaves of degree ≤ 1.
fn validate_tree(raw: &[RawNode]) -> Result<(), PQError> {
    let mut edges = 0;
    for (i, r) in raw.iter().enumerate() {
        if matches!(r.kind, NodeKind::Leaf(_)) && r.neighbors.len() > 1 {
            return Err(PQError::Malformed(format!("leaf node {i} has degree > 1")));
        }
        for &y in &r.neighbors {
            if y == i || raw[y].neighbors.iter().filter(|&&z| z == i).count() != 1 {
                return Err(PQError::Malformed(format!("edge {i}-{y} is not symmetric")));
            }
        }
        edges += r.neighbors.len();
    }
    if edges / 2 + 1 != raw.len() {
        return Err(PQError::Malformed("node/edge count is not that of a tree".into()));
    }
    let mut seen = vec![false; raw.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(x) = stack.pop() {
        for &y in &raw[x].neighbors {
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(PQError::Malformed("tree is disconnected".into()));
    }
    if !raw.iter().any(|r| matches!(r.kind, NodeKind::Leaf(_))) {
        return Err(PQError::Malformed("tree without leaves".into()));
    }
    Ok(())
}
