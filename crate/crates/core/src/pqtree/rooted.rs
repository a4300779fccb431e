//! Rooted PQ-trees (linear orders) as unrooted trees broken at a special leaf.

use super::{permutations, NodeKind, PQError, PQTree, RawNode, Variant};
use crate::orders::{Label, LinearOrder};
use std::collections::BTreeSet;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedPQTree {
    pub variant: Variant,
    pub kind: Vec<NodeKind>,
    pub children: Vec<Vec<usize>>,
    pub root: Option<usize>,
}

impl RootedPQTree {
    pub fn leaves(&self) -> BTreeSet<Label> {
        self.kind
            .iter()
            .filter_map(|k| match k {
                NodeKind::Leaf(l) => Some(l.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn linear_orders(&self, cap: usize) -> Result<BTreeSet<LinearOrder>, PQError> {
        let mut out = BTreeSet::new();
        match (self.variant, self.root) {
            (Variant::Null, _) => {}
            (_, None) => {
                out.insert(LinearOrder { seq: Vec::new() });
            }
            (_, Some(r)) => {
                for seq in self.sequences(r, cap)? {
                    out.insert(LinearOrder { seq });
                }
            }
        }
        Ok(out)
    }

    fn sequences(&self, x: usize, cap: usize) -> Result<Vec<Vec<Label>>, PQError> {
        if let NodeKind::Leaf(l) = &self.kind[x] {
            return Ok(vec![vec![l.clone()]]);
        }
        let kids = self.children[x]
            .iter()
            .map(|&c| self.sequences(c, cap))
            .collect::<Result<Vec<_>, _>>()?;
        let arrangements = if self.kind[x] == NodeKind::P {
            permutations(kids.len())
        } else {
            let f: Vec<usize> = (0..kids.len()).collect();
            vec![f.clone(), f.into_iter().rev().collect()]
        };
        let mut out = Vec::new();
        for arr in arrangements {
            let mut partial = vec![Vec::new()];
            for k in arr {
                let mut next = Vec::new();
                for p in &partial {
                    for s in &kids[k] {
                        let mut q: Vec<Label> = p.clone();
                        q.extend(s.iter().cloned());
                        next.push(q);
                    }
                }
                partial = next;
                if partial.len() > cap {
                    return Err(PQError::TooLarge(cap as u64));
                }
            }
            out.extend(partial);
            if out.len() > cap {
                return Err(PQError::TooLarge(cap as u64));
            }
        }
        Ok(out)
    }
}

/// Breaks every circular order of `t` at `special`.
pub fn root_at(t: &PQTree, special: &Label) -> Result<RootedPQTree, PQError> {
    if !t.leaves.contains(special) {
        return Err(PQError::InvalidSpecialLeaf(special.clone()));
    }
    if t.variant == Variant::Null {
        return Ok(RootedPQTree { variant: Variant::Null, kind: vec![], children: vec![], root: None });
    }
    let s = t.leaf_node(special).unwrap();
    if t.nodes.len() == 1 {
        return Ok(RootedPQTree { variant: Variant::Empty, kind: vec![], children: vec![], root: None });
    }
    let top = t.nodes[s].neighbors[0];
    let mut kind = Vec::new();
    let mut children: Vec<Vec<usize>> = Vec::new();
    let mut queue = vec![(top, s)];
    let mut pos = vec![usize::MAX; t.nodes.len()];
    let mut i = 0;
    while i < queue.len() {
        let (x, p) = queue[i];
        pos[x] = i;
        kind.push(t.nodes[x].kind.clone());
        children.push(Vec::new());
        let nb = &t.nodes[x].neighbors;
        let at = nb.iter().position(|&y| y == p).unwrap();
        for k in 1..nb.len() {
            queue.push((nb[(at + k) % nb.len()], x));
        }
        i += 1;
    }
    for (j, &(_, p)) in queue.iter().enumerate().skip(1) {
        children[pos[p]].push(j);
    }
    Ok(RootedPQTree { variant: Variant::Normal, kind, children, root: Some(0) })
}

/// Inserts `special` above the root, turning linear orders into circular ones.
pub fn unroot(r: &RootedPQTree, special: &Label) -> Result<PQTree, PQError> {
    let leaves = r.leaves();
    if leaves.contains(special) {
        return Err(PQError::InvalidSpecialLeaf(special.clone()));
    }
    match (r.variant, r.root) {
        (Variant::Null, _) => {
            let mut all = leaves;
            all.insert(special.clone());
            Ok(PQTree::null(all))
        }
        (_, None) => Ok(PQTree::universal([special.clone()])),
        (_, Some(root)) => {
            let mut raw: Vec<RawNode> = r.kind.iter().map(|k| RawNode::new(k.clone())).collect();
            let s = raw.len();
            raw.push(RawNode::new(NodeKind::Leaf(special.clone())));
            raw[s].neighbors.push(root);
            let mut stack = vec![(root, s)];
            while let Some((x, p)) = stack.pop() {
                raw[x].neighbors.push(p);
                for &c in &r.children[x] {
                    raw[x].neighbors.push(c);
                    stack.push((c, x));
                }
            }
            Ok(PQTree::from_raw(raw).0)
        }
    }
}
