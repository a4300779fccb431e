//! Instances of simultaneous PQ-ordering: a DAG of PQ-trees whose arcs carry
//! injective leaf maps (target → source) and a reversing flag.

use crate::orders::Label;
use crate::pqtree::{side_representatives, NodeId, NodeKind, PQError, PQTree, SideReps, TreeIndex};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("arcs form a cycle through tree {0}")]
    CyclicDAG(String),
    #[error("invalid map on arc {arc}: {reason}")]
    InvalidMap { arc: usize, reason: String },
    #[error("unknown tree {0}")]
    UnknownTree(String),
    #[error("duplicate tree id {0}")]
    DuplicateTree(String),
    #[error("triple {0:?} does not consist of three distinct labels of L")]
    InvalidTriple(Vec<Label>),
    #[error(transparent)]
    Tree(#[from] PQError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arc {
    pub source: usize,
    pub target: usize,
    /// Target leaf → source leaf.
    pub map: BTreeMap<Label, Label>,
    pub reversing: bool,
}

impl Arc {
    pub fn new(source: usize, target: usize, map: BTreeMap<Label, Label>, reversing: bool) -> Arc {
        Arc { source, target, map, reversing }
    }

    /// Arc whose map is the identity on the target's leaves.
    pub fn identity(source: usize, target: usize, leaves: &BTreeSet<Label>, reversing: bool) -> Arc {
        Arc::new(source, target, leaves.iter().map(|l| (l.clone(), l.clone())).collect(), reversing)
    }

    pub fn image(&self) -> BTreeSet<Label> {
        self.map.values().cloned().collect()
    }

    pub fn inverse(&self) -> HashMap<Label, Label> {
        self.map.iter().map(|(t, s)| (s.clone(), t.clone())).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub names: Vec<String>,
    pub trees: Vec<PQTree>,
    /// In creation order.
    pub arcs: Vec<Arc>,
}

impl Instance {
    pub fn build(
        names: Vec<String>,
        trees: Vec<PQTree>,
        arcs: Vec<Arc>,
    ) -> Result<Instance, InstanceError> {
        let mut seen = BTreeSet::new();
        for n in &names {
            if !seen.insert(n) {
                return Err(InstanceError::DuplicateTree(n.clone()));
            }
        }
        assert_eq!(names.len(), trees.len(), "one name per tree");
        let d = Instance { names, trees, arcs };
        for (i, a) in d.arcs.iter().enumerate() {
            if a.source >= d.trees.len() || a.target >= d.trees.len() {
                return Err(InstanceError::UnknownTree(format!("arc {i}")));
            }
            let bad = |reason: &str| InstanceError::InvalidMap { arc: i, reason: reason.into() };
            let tl = d.trees[a.target].leaf_set();
            if a.map.keys().collect::<BTreeSet<_>>() != tl.iter().collect() {
                return Err(bad("map domain differs from the target's leaves"));
            }
            let img = a.image();
            if img.len() != a.map.len() {
                return Err(bad("map is not injective"));
            }
            if !img.is_subset(d.trees[a.source].leaf_set()) {
                return Err(bad("map image is not contained in the source's leaves"));
            }
        }
        d.topological_order()?;
        Ok(d)
    }

    /// Unnamed trees get their index as id.
    pub fn from_trees(trees: Vec<PQTree>, arcs: Vec<Arc>) -> Result<Instance, InstanceError> {
        let names = (0..trees.len()).map(|i| i.to_string()).collect();
        Instance::build(names, trees, arcs)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn out_arcs(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.trees.len()];
        for (i, a) in self.arcs.iter().enumerate() {
            out[a.source].push(i);
        }
        out
    }

    pub fn in_arcs(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.trees.len()];
        for (i, a) in self.arcs.iter().enumerate() {
            inc[a.target].push(i);
        }
        inc
    }

    /// Sources first; ties by creation order.
    pub fn topological_order(&self) -> Result<Vec<usize>, InstanceError> {
        topological_order(self.trees.len(), self.arcs.iter().map(|a| (a.source, a.target)))
            .map_err(|t| InstanceError::CyclicDAG(self.names[t].clone()))
    }

    /// Σ tree sizes + Σ arc sizes.
    pub fn size(&self) -> usize {
        self.trees.iter().map(|t| t.size()).sum::<usize>()
            + self.arcs.iter().map(|a| a.map.len()).sum::<usize>()
    }

    /// Replaces every arc target by its intersection with the projection of
    /// the source, top-down.
    pub fn normalize(&self) -> Result<Normalized, InstanceError> {
        let mut d = self.clone();
        let inc = d.in_arcs();
        for t in d.topological_order()? {
            for &ai in &inc[t] {
                let a = &d.arcs[ai];
                let src = &d.trees[a.source];
                let back = a.inverse();
                let proj = src.project(&a.image())?.relabel(|l| back[l].clone());
                let refined = proj.intersect(&d.trees[t])?;
                d.trees[t] = refined;
            }
        }
        let infos = d.arcs.iter().map(|a| ProjectionInfo::new(&d.trees[a.source], a)).collect();
        Ok(Normalized { instance: d, infos })
    }
}

/// Kahn's algorithm with a min-heap on indices; on a cycle returns a node of it.
pub(crate) fn topological_order(
    n: usize,
    arcs: impl Iterator<Item = (usize, usize)>,
) -> Result<Vec<usize>, usize> {
    let mut indeg = vec![0usize; n];
    let mut out = vec![Vec::new(); n];
    for (s, t) in arcs {
        out[s].push(t);
        indeg[t] += 1;
    }
    let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> =
        (0..n).filter(|&i| indeg[i] == 0).map(std::cmp::Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(std::cmp::Reverse(x)) = ready.pop() {
        order.push(x);
        for &y in &out[x] {
            indeg[y] -= 1;
            if indeg[y] == 0 {
                ready.push(std::cmp::Reverse(y));
            }
        }
    }
    if order.len() < n {
        return Err((0..n).find(|&i| indeg[i] > 0).unwrap());
    }
    Ok(order)
}

/// What an arc's target sees of its source: for every neighbor slot of every
/// source node, the smallest target label on that side, plus the projection
/// itself with links from its nodes to the source nodes they stem from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectionInfo {
    pub projection: PQTree,
    pub origin: Vec<NodeId>,
    pub reps: SideReps,
}

impl ProjectionInfo {
    pub fn new(source: &PQTree, arc: &Arc) -> ProjectionInfo {
        let back = arc.inverse();
        let reps = side_representatives(source, &|l| back.get(l).cloned());
        let (projection, origin) = source
            .project_with_origin(&arc.image())
            .expect("arc image lies in the source");
        let projection = projection.relabel(|l| back[l].clone());
        ProjectionInfo { projection, origin, reps }
    }

    /// Slots of `x` whose side contains target leaves.
    pub fn fixed_slots(&self, x: NodeId) -> Vec<usize> {
        self.reps[x].iter().enumerate().filter(|(_, r)| r.is_some()).map(|(i, _)| i).collect()
    }

    /// A node is fixed iff at least three of its sides carry target leaves,
    /// i.e. iff it survives in the projection.
    pub fn is_fixed(&self, x: NodeId) -> bool {
        self.reps[x].iter().filter(|r| r.is_some()).count() >= 3
    }
}

#[derive(Clone, Debug)]
pub struct Normalized {
    pub instance: Instance,
    pub infos: Vec<ProjectionInfo>,
}

/// fixed(µ) for every P-node of every tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixednessMap {
    pub fixed: Vec<BTreeMap<NodeId, usize>>,
}

impl FixednessMap {
    pub fn max(&self) -> usize {
        self.fixed.iter().flat_map(|m| m.values().copied()).max().unwrap_or(0)
    }

    pub fn is_2_fixed(&self) -> bool {
        self.max() <= 2
    }
}

/// The P-node of `parent` that a P-node `mu` of `child` stems from, found as
/// the median of three leaves from distinct sides of `mu`.
pub fn stems_from(
    child: &PQTree,
    mu: NodeId,
    arc: &Arc,
    parent: &PQTree,
    parent_index: &TreeIndex,
) -> Option<NodeId> {
    let reps = side_representatives(child, &|l| arc.map.get(l).cloned());
    let picks: Vec<NodeId> = reps[mu]
        .iter()
        .flatten()
        .take(3)
        .map(|l| parent_index.leaf[l])
        .collect();
    if picks.len() < 3 {
        return None;
    }
    Some(parent_index.median(parent, picks[0], picks[1], picks[2]))
}

impl Normalized {
    /// fixed(µ) = k′ + Σ (fixed(µ_i) − 1), top-down.
    pub fn fixedness(&self) -> FixednessMap {
        let d = &self.instance;
        let mut k_prime: Vec<BTreeMap<NodeId, usize>> = vec![BTreeMap::new(); d.trees.len()];
        for (a, info) in d.arcs.iter().zip(&self.infos) {
            for x in d.trees[a.source].p_nodes() {
                if info.is_fixed(x) {
                    *k_prime[a.source].entry(x).or_default() += 1;
                }
            }
        }
        let inc = d.in_arcs();
        let indexes: Vec<TreeIndex> = d.trees.iter().map(TreeIndex::new).collect();
        let mut fixed: Vec<BTreeMap<NodeId, usize>> = vec![BTreeMap::new(); d.trees.len()];
        for t in d.topological_order().expect("validated DAG") {
            let tree = &d.trees[t];
            for mu in tree.p_nodes() {
                let mut f = k_prime[t].get(&mu).copied().unwrap_or(0);
                for &ai in &inc[t] {
                    let a = &d.arcs[ai];
                    let parent = &d.trees[a.source];
                    if let Some(src) = stems_from(tree, mu, a, parent, &indexes[a.source]) {
                        if parent.node(src).kind == NodeKind::P {
                            f += fixed[a.source].get(&src).copied().unwrap_or(0).saturating_sub(1);
                        }
                    }
                }
                fixed[t].insert(mu, f);
            }
        }
        FixednessMap { fixed }
    }
}

/// Cyclic ordering as simultaneous PQ-ordering: a P-star over L, one 3-leaf
/// tree per triple and a shared sink over {1,2,3}.
pub fn reduce_cyclic_ordering(
    leaves: &BTreeSet<Label>,
    triples: &[[Label; 3]],
) -> Result<Instance, InstanceError> {
    let mut names = vec!["T".to_string()];
    let mut trees = vec![PQTree::universal(leaves.iter().cloned())];
    let mut arcs = Vec::new();
    let sink_leaves: Vec<Label> = ["1", "2", "3"].iter().map(|s| Label::from(*s)).collect();
    let sink = triples.len() + 1;
    for (i, tr) in triples.iter().enumerate() {
        let set: BTreeSet<Label> = tr.iter().cloned().collect();
        if set.len() != 3 || !set.is_subset(leaves) {
            return Err(InstanceError::InvalidTriple(tr.to_vec()));
        }
        names.push(format!("T{}", i + 1));
        trees.push(PQTree::universal(set.iter().cloned()));
        arcs.push(Arc::identity(0, i + 1, &set, false));
    }
    for (i, tr) in triples.iter().enumerate() {
        let map = sink_leaves.iter().cloned().zip(tr.iter().cloned()).collect();
        arcs.push(Arc::new(i + 1, sink, map, false));
    }
    names.push("Tx".to_string());
    trees.push(PQTree::universal(sink_leaves));
    Instance::build(names, trees, arcs)
}

#[derive(Serialize, Deserialize)]
struct TreeEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(flatten)]
    tree: PQTree,
}

#[derive(Serialize, Deserialize)]
struct ArcJson {
    source: String,
    target: String,
    map: BTreeMap<Label, Label>,
    #[serde(default)]
    reversing: bool,
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    trees: Vec<TreeEntry>,
    #[serde(default)]
    arcs: Vec<ArcJson>,
}

impl Instance {
    pub fn from_json(s: &str) -> Result<Instance, String> {
        let j: InstanceJson = serde_json::from_str(s).map_err(|e| e.to_string())?;
        let names: Vec<String> = j
            .trees
            .iter()
            .enumerate()
            .map(|(i, t)| t.id.clone().unwrap_or_else(|| i.to_string()))
            .collect();
        let trees = j.trees.into_iter().map(|t| t.tree).collect();
        let find = |n: &str| {
            names.iter().position(|m| m == n).ok_or_else(|| format!("unknown tree {n}"))
        };
        let mut arcs = Vec::new();
        for a in j.arcs {
            arcs.push(Arc::new(find(&a.source)?, find(&a.target)?, a.map, a.reversing));
        }
        Instance::build(names, trees, arcs).map_err(|e| e.to_string())
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let j = InstanceJson {
            trees: self
                .trees
                .iter()
                .zip(&self.names)
                .map(|(t, n)| TreeEntry { id: Some(n.clone()), tree: t.clone() })
                .collect(),
            arcs: self
                .arcs
                .iter()
                .map(|a| ArcJson {
                    source: self.names[a.source].clone(),
                    target: self.names[a.target].clone(),
                    map: a.map.clone(),
                    reversing: a.reversing,
                })
                .collect(),
        };
        serde_json::to_value(j).expect("serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orders::labels;

    fn set(s: &str) -> BTreeSet<Label> {
        labels(s).into_iter().collect()
    }

    #[test]
    fn build_validates_maps_and_cycles() {
        let t = PQTree::universal(labels("abc"));
        assert!(Instance::from_trees(vec![t.clone()], vec![]).is_ok());
        let mut m = BTreeMap::new();
        m.insert(Label::from("a"), Label::from("a"));
        let e = Instance::from_trees(vec![t.clone(), t.clone()], vec![Arc::new(0, 1, m, false)]);
        assert!(matches!(e, Err(InstanceError::InvalidMap { .. })));
        let e = Instance::from_trees(
            vec![t.clone(), t.clone()],
            vec![Arc::identity(0, 1, &set("abc"), false), Arc::identity(1, 0, &set("abc"), false)],
        );
        assert!(matches!(e, Err(InstanceError::CyclicDAG(_))));
    }

    #[test]
    fn cyclic_ordering_topology() {
        let d = reduce_cyclic_ordering(
            &set("abcd"),
            &[labels("abc").try_into().unwrap(), labels("bda").try_into().unwrap()],
        )
        .unwrap();
        assert_eq!(d.trees.len(), 4);
        assert_eq!(d.arcs.len(), 4);
        assert!(reduce_cyclic_ordering(&set("abc"), &[labels("aab").try_into().unwrap()]).is_err());
    }

    #[test]
    fn normalization_keeps_projections() {
        let parent = PQTree::universal(labels("abcd"));
        let child = PQTree::universal(labels("abc"));
        let d = Instance::from_trees(
            vec![parent, child.clone()],
            vec![Arc::identity(0, 1, &set("abc"), false)],
        )
        .unwrap();
        let n = d.normalize().unwrap();
        assert_eq!(n.instance.trees[1], child);
        assert_eq!(n.instance.normalize().unwrap().instance, n.instance);
    }

    #[test]
    fn normalization_restricts_children() {
        let parent =
            PQTree::from_consecutive_sets(labels("abcde"), &[set("ab")]).unwrap();
        let child = PQTree::universal(labels("abce"));
        let d = Instance::from_trees(
            vec![parent, child],
            vec![Arc::identity(0, 1, &set("abce"), false)],
        )
        .unwrap();
        let n = d.normalize().unwrap();
        assert_eq!(n.instance.trees[1].count_orders(), 4);
    }

    #[test]
    fn fixedness_counts() {
        let star = PQTree::universal(labels("abcde"));
        let lone = Instance::from_trees(vec![star.clone()], vec![]).unwrap();
        let f = lone.normalize().unwrap().fixedness();
        assert_eq!(f.max(), 0);
        let kids = ["abc", "bcd", "cde"];
        let mut trees = vec![star];
        let mut arcs = Vec::new();
        for (i, k) in kids.iter().enumerate() {
            trees.push(PQTree::universal(labels(k)));
            arcs.push(Arc::identity(0, i + 1, &set(k), false));
        }
        let d = Instance::from_trees(trees, arcs).unwrap();
        let f = d.normalize().unwrap().fixedness();
        assert_eq!(f.max(), 3);
        assert!(!f.is_2_fixed());
    }

    #[test]
    fn fixedness_inherits_from_parents() {
        // a P-node fixed by two children passes 2 − 1 down to a child's P-node
        let top = PQTree::universal(labels("abcdef"));
        let mid = PQTree::universal(labels("abcde"));
        let side = PQTree::universal(labels("abcf"));
        let low = PQTree::universal(labels("abcd"));
        let d = Instance::from_trees(
            vec![top, mid, side, low],
            vec![
                Arc::identity(0, 1, &set("abcde"), false),
                Arc::identity(0, 2, &set("abcf"), false),
                Arc::identity(1, 3, &set("abcd"), false),
            ],
        )
        .unwrap();
        let f = d.normalize().unwrap().fixedness();
        let top_p = d.trees[0].p_nodes().next().unwrap();
        let mid_p = d.trees[1].p_nodes().next().unwrap();
        assert_eq!(f.fixed[0][&top_p], 2);
        assert_eq!(f.fixed[1][&mid_p], 2);
    }

    #[test]
    fn json_round_trip() {
        let d = reduce_cyclic_ordering(&set("abcd"), &[labels("abc").try_into().unwrap()]).unwrap();
        let s = serde_json::to_string(&d.to_json_value()).unwrap();
        assert_eq!(Instance::from_json(&s).unwrap(), d);
    }
}
