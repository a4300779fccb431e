//! Unrooted PQ-trees representing sets of circular leaf orders.
//!
//! Trees are kept in a canonical form: inner nodes have degree at least 3,
//! every inner node of degree 3 is a Q-node, node 0 is the smallest leaf and
//! every other node lists its parent (towards node 0) as its first neighbor.
//! Node ids follow a preorder walk from node 0, so every subtree occupies a
//! contiguous id range.

mod fixedness;
mod reduce;
mod rooted;
mod serial;

pub use fixedness::{classify_fixedness, side_representatives, FixednessReport, SideReps, TreeIndex};
pub use rooted::{root_at, unroot, RootedPQTree};

use crate::orders::{CircularOrder, Label};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PQError {
    #[error("label set is not a subset of the tree's leaves")]
    InvalidSubset,
    #[error("leaf sets differ")]
    LeafMismatch,
    #[error("special leaf {0} is missing or already present")]
    InvalidSpecialLeaf(Label),
    #[error("more than {0} orders")]
    TooLarge(u64),
    #[error("child tree is not a refinement of the parent's projection: {0}")]
    NotAChild(String),
    #[error("malformed tree: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Normal,
    Null,
    Empty,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    P,
    Q,
    Leaf(Label),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Node {
    pub kind: NodeKind,
    pub neighbors: Vec<NodeId>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf(_))
    }

    pub fn label(&self) -> Option<&Label> {
        match &self.kind {
            NodeKind::Leaf(l) => Some(l),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PQTree {
    variant: Variant,
    nodes: Vec<Node>,
    leaves: BTreeSet<Label>,
}

/// Node record used while building a tree before canonicalization.
#[derive(Clone, Debug)]
pub(crate) struct RawNode {
    pub kind: NodeKind,
    pub neighbors: Vec<usize>,
    pub alive: bool,
}

impl RawNode {
    pub fn new(kind: NodeKind) -> Self {
        RawNode { kind, neighbors: Vec::new(), alive: true }
    }
}

impl PQTree {
    pub fn universal(leaves: impl IntoIterator<Item = Label>) -> PQTree {
        let leaves: BTreeSet<Label> = leaves.into_iter().collect();
        let mut raw: Vec<RawNode> =
            leaves.iter().map(|l| RawNode::new(NodeKind::Leaf(l.clone()))).collect();
        let n = raw.len();
        if n == 2 {
            raw[0].neighbors.push(1);
            raw[1].neighbors.push(0);
        } else if n >= 3 {
            let mut center = RawNode::new(NodeKind::P);
            for (i, r) in raw.iter_mut().enumerate() {
                r.neighbors.push(n);
                center.neighbors.push(i);
            }
            raw.push(center);
        }
        PQTree::from_raw(raw).0
    }

    pub fn null(leaves: impl IntoIterator<Item = Label>) -> PQTree {
        PQTree { variant: Variant::Null, nodes: Vec::new(), leaves: leaves.into_iter().collect() }
    }

    pub fn empty() -> PQTree {
        PQTree { variant: Variant::Empty, nodes: Vec::new(), leaves: BTreeSet::new() }
    }

    /// A tree with a single Q-node whose edges lead to the given leaves in order.
    pub fn q_star(leaves: &[Label]) -> PQTree {
        let n = leaves.len();
        if n <= 3 {
            return PQTree::universal(leaves.iter().cloned());
        }
        let mut raw: Vec<RawNode> =
            leaves.iter().map(|l| RawNode::new(NodeKind::Leaf(l.clone()))).collect();
        let mut center = RawNode::new(NodeKind::Q);
        for (i, r) in raw.iter_mut().enumerate() {
            r.neighbors.push(n);
            center.neighbors.push(i);
        }
        raw.push(center);
        PQTree::from_raw(raw).0
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn is_null(&self) -> bool {
        self.variant == Variant::Null
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn leaf_set(&self) -> &BTreeSet<Label> {
        &self.leaves
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn inner_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&i| !self.nodes[i].is_leaf())
    }

    pub fn p_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].kind == NodeKind::P)
    }

    pub fn q_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].kind == NodeKind::Q)
    }

    pub fn num_edges(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    /// Nodes plus edges; the size measure used for instance accounting.
    pub fn size(&self) -> usize {
        self.nodes.len() + self.num_edges()
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.nodes[id].neighbors.len()
    }

    /// True iff the tree consists of exactly one inner node, a P-node.
    pub fn is_single_pnode(&self) -> bool {
        self.variant == Variant::Normal
            && self.nodes.iter().filter(|n| !n.is_leaf()).count() == 1
            && self.nodes.iter().any(|n| n.kind == NodeKind::P)
    }

    pub fn leaf_node(&self, label: &Label) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.label() == Some(label))
    }

    pub fn leaf_nodes(&self) -> HashMap<Label, NodeId> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.label().map(|l| (l.clone(), i)))
            .collect()
    }

    /// Parent of a node in the canonical rooting (None for node 0).
    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        if id == 0 {
            None
        } else {
            Some(self.nodes[id].neighbors[0])
        }
    }

    /// Children of a node in the canonical rooting.
    pub fn children(&self, id: NodeId) -> &[NodeId] {
        if id == 0 {
            &self.nodes[0].neighbors
        } else {
            &self.nodes[id].neighbors[1..]
        }
    }

    /// Number of nodes in the subtree of every node; subtree(x) is the id
    /// range `x..x + size[x]`.
    pub fn subtree_sizes(&self) -> Vec<usize> {
        let mut size = vec![1; self.nodes.len()];
        for x in (1..self.nodes.len()).rev() {
            let p = self.nodes[x].neighbors[0];
            size[p] += size[x];
        }
        size
    }

    /// Leaf labels below every neighbor slot of `x`: slot 0 of a non-root
    /// node is the side of its parent.
    pub fn side_leaf_sets(&self, x: NodeId, sizes: &[usize]) -> Vec<BTreeSet<Label>> {
        let inside = |lo: usize, hi: usize| -> BTreeSet<Label> {
            (lo..hi).filter_map(|i| self.nodes[i].label().cloned()).collect()
        };
        self.nodes[x]
            .neighbors
            .iter()
            .enumerate()
            .map(|(slot, &y)| {
                if slot == 0 && x != 0 {
                    let own = inside(x, x + sizes[x]);
                    self.leaves.difference(&own).cloned().collect()
                } else {
                    inside(y, y + sizes[y])
                }
            })
            .collect()
    }

    /// Canonicalizes a raw tree. The second component maps every node of the
    /// result to the raw index it came from.
    pub(crate) fn from_raw(mut raw: Vec<RawNode>) -> (PQTree, Vec<usize>) {
        simplify(&mut raw);
        let leaves: BTreeSet<Label> = raw
            .iter()
            .filter(|r| r.alive)
            .filter_map(|r| match &r.kind {
                NodeKind::Leaf(l) => Some(l.clone()),
                _ => None,
            })
            .collect();
        let Some(first) = leaves.iter().next() else {
            return (PQTree::empty(), Vec::new());
        };
        let root = raw
            .iter()
            .position(|r| r.alive && r.kind == NodeKind::Leaf(first.clone()))
            .unwrap();

        // parent pointers and a preorder walk
        let mut parent = vec![usize::MAX; raw.len()];
        let mut order = Vec::new();
        let mut stack = vec![root];
        parent[root] = root;
        while let Some(x) = stack.pop() {
            order.push(x);
            for &y in &raw[x].neighbors {
                if parent[y] == usize::MAX {
                    parent[y] = x;
                    stack.push(y);
                }
            }
        }
        let mut min_leaf: Vec<Option<Label>> = vec![None; raw.len()];
        for &x in order.iter().rev() {
            if let NodeKind::Leaf(l) = &raw[x].kind {
                min_leaf[x] = Some(l.clone());
            }
            if x != root {
                let p = parent[x];
                if min_leaf[p].is_none() || min_leaf[x] < min_leaf[p] {
                    min_leaf[p] = min_leaf[x].clone();
                }
            }
        }
        let children_of = |x: usize| -> Vec<usize> {
            let nb = &raw[x].neighbors;
            if x == root {
                return nb.clone();
            }
            let at = nb.iter().position(|&y| y == parent[x]).unwrap();
            let mut ch: Vec<usize> =
                (1..nb.len()).map(|i| nb[(at + i) % nb.len()]).collect();
            match raw[x].kind {
                NodeKind::P => ch.sort_by(|a, b| min_leaf[*a].cmp(&min_leaf[*b])),
                NodeKind::Q => {
                    if min_leaf[ch[0]] > min_leaf[*ch.last().unwrap()] {
                        ch.reverse();
                    }
                }
                NodeKind::Leaf(_) => {}
            }
            ch
        };

        let mut new_id = vec![usize::MAX; raw.len()];
        let mut origin = Vec::new();
        let mut nodes: Vec<Node> = Vec::new();
        let mut stack = vec![(root, usize::MAX)];
        while let Some((x, p)) = stack.pop() {
            let id = nodes.len();
            new_id[x] = id;
            origin.push(x);
            let mut neighbors = Vec::new();
            if p != usize::MAX {
                neighbors.push(p);
            }
            nodes.push(Node { kind: raw[x].kind.clone(), neighbors });
            for &c in children_of(x).iter().rev() {
                stack.push((c, id));
            }
        }
        // children were pushed in reverse so ids come out in preorder; now
        // fill child links in that same order
        for id in 1..nodes.len() {
            let p = nodes[id].neighbors[0];
            nodes[p].neighbors.push(id);
        }
        let tree = PQTree { variant: Variant::Normal, nodes, leaves };
        (tree, origin)
    }

    pub(crate) fn to_raw(&self) -> Vec<RawNode> {
        self.nodes
            .iter()
            .map(|n| RawNode { kind: n.kind.clone(), neighbors: n.neighbors.clone(), alive: true })
            .collect()
    }

    /// The projection to `keep`; the second component maps result nodes to
    /// the nodes of `self` they stem from.
    pub fn project_with_origin(
        &self,
        keep: &BTreeSet<Label>,
    ) -> Result<(PQTree, Vec<NodeId>), PQError> {
        if !keep.is_subset(&self.leaves) {
            return Err(PQError::InvalidSubset);
        }
        match self.variant {
            Variant::Null => return Ok((PQTree::null(keep.iter().cloned()), Vec::new())),
            Variant::Empty => return Ok((PQTree::empty(), Vec::new())),
            Variant::Normal => {}
        }
        let mut raw = self.to_raw();
        let dropped: Vec<usize> = (0..raw.len())
            .filter(|&i| matches!(&raw[i].kind, NodeKind::Leaf(l) if !keep.contains(l)))
            .collect();
        for i in dropped {
            raw[i].alive = false;
            for y in std::mem::take(&mut raw[i].neighbors) {
                raw[y].neighbors.retain(|&z| z != i);
            }
        }
        Ok(PQTree::from_raw(raw))
    }

    pub fn project(&self, keep: &BTreeSet<Label>) -> Result<PQTree, PQError> {
        Ok(self.project_with_origin(keep)?.0)
    }

    /// Renames leaves; `f` must be injective on the leaf set.
    pub fn relabel(&self, f: impl Fn(&Label) -> Label) -> PQTree {
        match self.variant {
            Variant::Null => PQTree::null(self.leaves.iter().map(&f)),
            Variant::Empty => PQTree::empty(),
            Variant::Normal => {
                let mut raw = self.to_raw();
                for r in &mut raw {
                    if let NodeKind::Leaf(l) = &r.kind {
                        r.kind = NodeKind::Leaf(f(l));
                    }
                }
                PQTree::from_raw(raw).0
            }
        }
    }

    pub fn reduce(&self, set: &BTreeSet<Label>) -> Result<PQTree, PQError> {
        if !set.is_subset(&self.leaves) {
            return Err(PQError::InvalidSubset);
        }
        Ok(reduce::reduce(self, set))
    }

    pub fn from_consecutive_sets<'a>(
        leaves: impl IntoIterator<Item = Label>,
        family: impl IntoIterator<Item = &'a BTreeSet<Label>>,
    ) -> Result<PQTree, PQError> {
        let mut t = PQTree::universal(leaves);
        for s in family {
            t = t.reduce(s)?;
            if t.is_null() {
                break;
            }
        }
        Ok(t)
    }

    /// The reductions that characterize `self`: one leaf set per edge and,
    /// for every Q-node, the union of every two consecutive edge sides.
    pub fn defining_sets(&self) -> Vec<BTreeSet<Label>> {
        let mut out = Vec::new();
        if self.variant != Variant::Normal {
            return out;
        }
        let n = self.leaves.len();
        let sizes = self.subtree_sizes();
        for x in 1..self.nodes.len() {
            let set: BTreeSet<Label> =
                (x..x + sizes[x]).filter_map(|i| self.nodes[i].label().cloned()).collect();
            if set.len() >= 2 && set.len() + 2 <= n {
                out.push(set);
            }
        }
        for y in self.q_nodes() {
            let sides = self.side_leaf_sets(y, &sizes);
            let k = sides.len();
            for i in 0..k {
                let u: BTreeSet<Label> = sides[i].union(&sides[(i + 1) % k]).cloned().collect();
                if u.len() + 2 <= n {
                    out.push(u);
                }
            }
        }
        out
    }

    pub fn intersect(&self, other: &PQTree) -> Result<PQTree, PQError> {
        if self.leaves != other.leaves {
            return Err(PQError::LeafMismatch);
        }
        if self.is_null() || other.is_null() {
            return Ok(PQTree::null(self.leaves.iter().cloned()));
        }
        let mut t = other.clone();
        for s in self.defining_sets() {
            t = reduce::reduce(&t, &s);
            if t.is_null() {
                break;
            }
        }
        Ok(t)
    }

    /// Membership test via the defining consecutive sets.
    pub fn contains_order(&self, order: &CircularOrder) -> bool {
        match self.variant {
            Variant::Null => false,
            Variant::Empty => order.is_empty(),
            Variant::Normal => {
                order.label_set() == self.leaves
                    && self.defining_sets().iter().all(|s| order.is_consecutive(s))
            }
        }
    }

    /// Number of represented circular orders (saturating).
    pub fn count_orders(&self) -> u64 {
        match self.variant {
            Variant::Null => 0,
            Variant::Empty => 1,
            Variant::Normal => {
                let mut c: u64 = 1;
                for x in self.inner_nodes() {
                    let f = match self.nodes[x].kind {
                        NodeKind::P => (1..self.degree(x) as u64).fold(1u64, |a, b| a.saturating_mul(b)),
                        _ => 2,
                    };
                    c = c.saturating_mul(f);
                }
                c
            }
        }
    }

    pub fn enumerate_orders(&self, cap: u64) -> Result<BTreeSet<CircularOrder>, PQError> {
        let count = self.count_orders();
        if count > cap {
            return Err(PQError::TooLarge(cap));
        }
        let mut out = BTreeSet::new();
        match self.variant {
            Variant::Null => {}
            Variant::Empty => {
                out.insert(CircularOrder::empty());
            }
            Variant::Normal => {
                let root_label = self.nodes[0].label().unwrap().clone();
                let tails = if self.nodes.len() == 1 {
                    vec![Vec::new()]
                } else {
                    self.linear_sequences(1)
                };
                for t in tails {
                    let mut seq = vec![root_label.clone()];
                    seq.extend(t);
                    out.insert(CircularOrder::new(seq).unwrap());
                }
            }
        }
        Ok(out)
    }

    /// All leaf sequences of the subtree below `x` (rooted at node 0).
    fn linear_sequences(&self, x: NodeId) -> Vec<Vec<Label>> {
        match &self.nodes[x].kind {
            NodeKind::Leaf(l) => vec![vec![l.clone()]],
            kind => {
                let kids: Vec<Vec<Vec<Label>>> =
                    self.children(x).iter().map(|&c| self.linear_sequences(c)).collect();
                let arrangements: Vec<Vec<usize>> = match kind {
                    NodeKind::P => permutations(kids.len()),
                    _ => {
                        let fwd: Vec<usize> = (0..kids.len()).collect();
                        let mut bwd = fwd.clone();
                        bwd.reverse();
                        vec![fwd, bwd]
                    }
                };
                let mut out = Vec::new();
                for arr in arrangements {
                    let mut partial: Vec<Vec<Label>> = vec![Vec::new()];
                    for &k in &arr {
                        let mut next = Vec::with_capacity(partial.len() * kids[k].len());
                        for p in &partial {
                            for s in &kids[k] {
                                let mut q = p.clone();
                                q.extend(s.iter().cloned());
                                next.push(q);
                            }
                        }
                        partial = next;
                    }
                    out.extend(partial);
                }
                out
            }
        }
    }

    /// The order obtained by walking the tree with every node in its stored
    /// orientation.
    pub fn frontier(&self) -> CircularOrder {
        if self.variant != Variant::Normal {
            return CircularOrder::empty();
        }
        let mut seq = Vec::with_capacity(self.leaves.len());
        // preorder ids visit leaves in stored order
        for n in &self.nodes {
            if let Some(l) = n.label() {
                seq.push(l.clone());
            }
        }
        CircularOrder::new(seq).unwrap()
    }

    /// Structural signature used to compare trees up to isomorphism.
    pub fn shape(&self) -> String {
        fn walk(t: &PQTree, x: NodeId, out: &mut String) {
            match &t.nodes[x].kind {
                NodeKind::Leaf(l) => out.push_str(&format!("{:?}", l.as_str())),
                k => {
                    out.push(if *k == NodeKind::P { 'P' } else { 'Q' });
                    out.push('(');
                    for (i, &c) in t.children(x).iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        walk(t, c, out);
                    }
                    out.push(')');
                }
            }
        }
        let mut s = String::new();
        match self.variant {
            Variant::Null => s.push_str("Null"),
            Variant::Empty => s.push_str("Empty"),
            Variant::Normal => {
                walk(self, 0, &mut s);
                for &c in self.children(0) {
                    s.push('|');
                    walk(self, c, &mut s);
                }
            }
        }
        s
    }

    /// Checks the canonical-form invariants; returns a description of the
    /// first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.variant != Variant::Normal {
            return if self.nodes.is_empty() { Ok(()) } else { Err("non-normal tree has nodes".into()) };
        }
        let n1 = self.leaves.len();
        let inner = self.inner_nodes().count();
        if n1 >= 2 && inner > n1 - 2 {
            return Err(format!("{inner} inner nodes for {n1} leaves"));
        }
        if n1 >= 2 && self.num_edges() > 2 * n1 - 3 {
            return Err(format!("{} edges for {n1} leaves", self.num_edges()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match node.kind {
                NodeKind::Leaf(_) if node.neighbors.len() > 1 => {
                    return Err(format!("leaf {i} has degree {}", node.neighbors.len()))
                }
                NodeKind::P if node.neighbors.len() < 4 => {
                    return Err(format!("P-node {i} has degree {}", node.neighbors.len()))
                }
                NodeKind::Q if node.neighbors.len() < 3 => {
                    return Err(format!("Q-node {i} has degree {}", node.neighbors.len()))
                }
                _ => {}
            }
            for &y in &node.neighbors {
                if !self.nodes[y].neighbors.contains(&i) {
                    return Err(format!("asymmetric edge {i}-{y}"));
                }
            }
        }
        Ok(())
    }
}

/// Removes dead ends, suppresses degree-2 inner nodes and turns degree-3
/// P-nodes into Q-nodes.
fn simplify(raw: &mut [RawNode]) {
    let mut work: Vec<usize> = (0..raw.len()).collect();
    while let Some(x) = work.pop() {
        if !raw[x].alive || matches!(raw[x].kind, NodeKind::Leaf(_)) {
            continue;
        }
        match raw[x].neighbors.len() {
            0 => raw[x].alive = false,
            1 => {
                let y = raw[x].neighbors[0];
                raw[y].neighbors.retain(|&z| z != x);
                raw[x].neighbors.clear();
                raw[x].alive = false;
                work.push(y);
            }
            2 => {
                let (u, w) = (raw[x].neighbors[0], raw[x].neighbors[1]);
                for (a, b) in [(u, w), (w, u)] {
                    for z in raw[a].neighbors.iter_mut() {
                        if *z == x {
                            *z = b;
                        }
                    }
                }
                raw[x].neighbors.clear();
                raw[x].alive = false;
            }
            3 if raw[x].kind == NodeKind::P => raw[x].kind = NodeKind::Q,
            _ => {}
        }
    }
}

pub(crate) fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    fn rec(i: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i + 1 >= cur.len() {
            out.push(cur.clone());
            return;
        }
        for j in i..cur.len() {
            cur.swap(i, j);
            rec(i + 1, cur, out);
            cur.swap(i, j);
        }
    }
    rec(0, &mut cur, &mut out);
    out
}

/// Sets of labels built from strings of single-character labels.
pub fn label_sets(specs: &[&str]) -> Vec<BTreeSet<Label>> {
    specs.iter().map(|s| crate::orders::labels(s).into_iter().collect()).collect()
}

/// Helper for inverting arc maps (target → source) into source → target.
pub fn invert_map(map: &BTreeMap<Label, Label>) -> HashMap<Label, Label> {
    map.iter().map(|(a, b)| (b.clone(), a.clone())).collect()
}

#[cfg(test)]
mod tests;
