//! Fixed and free nodes and edges of a parent tree with respect to a child,
//! and representatives of fixed Q-nodes.

use super::{NodeId, NodeKind, PQError, PQTree, Variant};
use crate::orders::Label;
use std::collections::{BTreeMap, HashMap};

/// Per node and neighbor slot: the smallest mapped label on that side.
pub type SideReps = Vec<Vec<Option<Label>>>;

/// For every neighbor slot of every node, the smallest image under `f` of a
/// leaf on that side of the edge (None when no leaf on that side is mapped).
pub fn side_representatives(t: &PQTree, f: &dyn Fn(&Label) -> Option<Label>) -> SideReps {
    let n = t.nodes.len();
    if t.variant != Variant::Normal || n == 0 {
        return vec![Vec::new(); n];
    }
    let mut down: Vec<Option<Label>> = vec![None; n];
    for x in (0..n).rev() {
        if let NodeKind::Leaf(l) = &t.nodes[x].kind {
            down[x] = f(l);
        }
        if x != 0 {
            let p = t.nodes[x].neighbors[0];
            if down[x].is_some() && (down[p].is_none() || down[x] < down[p]) {
                down[p] = down[x].clone();
            }
        }
    }
    // the root leaf contributes to its own subtree only through `up`
    if t.nodes[0].is_leaf() {
        down[0] = t.nodes[0].label().and_then(f);
    }
    let mut up: Vec<Option<Label>> = vec![None; n];
    let min = |a: &Option<Label>, b: &Option<Label>| -> Option<Label> {
        match (a, b) {
            (None, x) | (x, None) => x.clone(),
            (Some(x), Some(y)) => Some(x.min(y).clone()),
        }
    };
    for x in 0..n {
        let ch = t.children(x);
        let above = if x == 0 { down[0].clone() } else { up[x].clone() };
        let k = ch.len();
        let mut suffix = vec![None; k + 1];
        for i in (0..k).rev() {
            suffix[i] = min(&suffix[i + 1], &down[ch[i]]);
        }
        let mut prefix = above;
        for i in 0..k {
            up[ch[i]] = min(&prefix, &suffix[i + 1]);
            prefix = min(&prefix, &down[ch[i]]);
        }
    }
    let mut out = Vec::with_capacity(n);
    for x in 0..n {
        let slots = t.nodes[x]
            .neighbors
            .iter()
            .enumerate()
            .map(|(slot, &y)| if slot == 0 && x != 0 { up[x].clone() } else { down[y].clone() })
            .collect();
        out.push(slots);
    }
    out
}

/// Parent pointers, depths and subtree ranges for ancestor queries.
#[derive(Clone, Debug)]
pub struct TreeIndex {
    pub depth: Vec<usize>,
    pub size: Vec<usize>,
    pub leaf: HashMap<Label, NodeId>,
}

impl TreeIndex {
    pub fn new(t: &PQTree) -> TreeIndex {
        let n = t.nodes.len();
        let mut depth = vec![0; n];
        for x in 1..n {
            depth[x] = depth[t.nodes[x].neighbors[0]] + 1;
        }
        TreeIndex { depth, size: t.subtree_sizes(), leaf: t.leaf_nodes() }
    }

    fn lca(&self, t: &PQTree, mut a: NodeId, mut b: NodeId) -> NodeId {
        while self.depth[a] > self.depth[b] {
            a = t.nodes[a].neighbors[0];
        }
        while self.depth[b] > self.depth[a] {
            b = t.nodes[b].neighbors[0];
        }
        while a != b {
            a = t.nodes[a].neighbors[0];
            b = t.nodes[b].neighbors[0];
        }
        a
    }

    /// The unique node on all three paths between three distinct leaves.
    pub fn median(&self, t: &PQTree, a: NodeId, b: NodeId, c: NodeId) -> NodeId {
        [self.lca(t, a, b), self.lca(t, a, c), self.lca(t, b, c)]
            .into_iter()
            .max_by_key(|&x| self.depth[x])
            .unwrap()
    }

    /// Neighbor slot of `x` whose side contains node `u` (u ≠ x).
    pub fn slot_towards(&self, t: &PQTree, x: NodeId, mut u: NodeId) -> usize {
        if u < x || u >= x + self.size[x] {
            return 0;
        }
        while t.nodes[u].neighbors[0] != x {
            u = t.nodes[u].neighbors[0];
        }
        t.nodes[x].neighbors.iter().position(|&y| y == u).unwrap()
    }
}

/// True iff slots `a`, `b`, `c` appear in this cyclic rotation order.
pub(crate) fn cyclic_forward(a: usize, b: usize, c: usize) -> bool {
    (a < b && b < c) || (b < c && c < a) || (c < a && a < b)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixednessReport {
    /// Per node of the parent: whether it is fixed by the child.
    pub fixed: Vec<bool>,
    /// Per node and neighbor slot: whether the edge carries child leaves
    /// (meaningful for fixed nodes; all edges of a free node are free).
    pub fixed_edges: Vec<Vec<bool>>,
    /// For fixed Q-nodes: the representative Q-node in the child and whether
    /// its stored orientation agrees with the parent node's.
    pub representative: BTreeMap<NodeId, (NodeId, bool)>,
}

/// Classifies the nodes of `parent` with respect to a child whose leaves map
/// to parent leaves through `child_to_parent`.
pub fn classify_fixedness(
    parent: &PQTree,
    child_to_parent: &BTreeMap<Label, Label>,
    child: &PQTree,
) -> Result<FixednessReport, PQError> {
    let back: HashMap<&Label, &Label> = child_to_parent.iter().map(|(c, p)| (p, c)).collect();
    if back.len() != child_to_parent.len()
        || child_to_parent.values().any(|p| !parent.leaves.contains(p))
    {
        return Err(PQError::NotAChild("map is not injective into the parent's leaves".into()));
    }
    let reps = side_representatives(parent, &|l| back.get(l).map(|c| (*c).clone()));
    let n = parent.nodes.len();
    let mut fixed = vec![false; n];
    let mut fixed_edges = vec![Vec::new(); n];
    let mut representative = BTreeMap::new();
    let index = if child.variant == Variant::Normal { Some(TreeIndex::new(child)) } else { None };
    for x in parent.inner_nodes() {
        let slots: Vec<usize> = (0..reps[x].len()).filter(|&s| reps[x][s].is_some()).collect();
        if slots.len() < 3 {
            fixed_edges[x] = vec![false; reps[x].len()];
            continue;
        }
        fixed[x] = true;
        fixed_edges[x] = reps[x].iter().map(|r| r.is_some()).collect();
        if parent.nodes[x].kind == NodeKind::Q {
            let Some(index) = &index else { continue };
            let leaves: Vec<NodeId> = slots[..3]
                .iter()
                .map(|&s| index.leaf.get(reps[x][s].as_ref().unwrap()).copied())
                .collect::<Option<_>>()
                .ok_or_else(|| PQError::NotAChild("representative leaf missing in child".into()))?;
            let eta = index.median(child, leaves[0], leaves[1], leaves[2]);
            if child.nodes[eta].kind != NodeKind::Q {
                return Err(PQError::NotAChild(format!(
                    "Q-node {x} is determined by a non-Q node {eta} of the child"
                )));
            }
            let t: Vec<usize> = leaves.iter().map(|&u| index.slot_towards(child, eta, u)).collect();
            representative.insert(x, (eta, cyclic_forward(t[0], t[1], t[2])));
        }
    }
    Ok(FixednessReport { fixed, fixed_edges, representative })
}
