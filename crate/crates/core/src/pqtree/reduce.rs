//! Reduction of an unrooted tree: root it at a leaf outside the set, apply
//! the rooted templates bottom-up over the pertinent subtree, unroot.

use super::{NodeKind, PQTree, RawNode, Variant};
use crate::orders::Label;
use std::collections::BTreeSet;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Status {
    Empty,
    Full,
    Partial,
}

struct Work {
    kind: Vec<NodeKind>,
    children: Vec<Vec<usize>>,
}

impl Work {
    fn add(&mut self, kind: NodeKind, children: Vec<usize>) -> usize {
        self.kind.push(kind);
        self.children.push(children);
        self.kind.len() - 1
    }

    /// One subtree from a list of siblings: the sibling itself or a new P-node.
    fn group(&mut self, mut nodes: Vec<usize>) -> Option<usize> {
        match nodes.len() {
            0 => None,
            1 => nodes.pop(),
            _ => Some(self.add(NodeKind::P, nodes)),
        }
    }
}

pub(super) fn reduce(t: &PQTree, set: &BTreeSet<Label>) -> PQTree {
    if t.variant != Variant::Normal {
        return t.clone();
    }
    let n = t.leaves.len();
    if set.len() <= 1 || set.len() + 1 >= n {
        return t.clone();
    }
    let special = t.leaves.iter().find(|l| !set.contains(*l)).unwrap().clone();
    let s = t.leaf_node(&special).unwrap();
    let top = t.nodes[s].neighbors[0];

    // rooted copy hanging below the special leaf
    let mut work = Work { kind: Vec::new(), children: Vec::new() };
    for node in &t.nodes {
        work.kind.push(node.kind.clone());
        work.children.push(Vec::new());
    }
    let mut order = vec![top];
    let mut parent = vec![usize::MAX; t.nodes.len()];
    parent[top] = s;
    let mut i = 0;
    while i < order.len() {
        let x = order[i];
        i += 1;
        let nb = &t.nodes[x].neighbors;
        let at = nb.iter().position(|&y| y == parent[x]).unwrap();
        let ch: Vec<usize> = (1..nb.len()).map(|k| nb[(at + k) % nb.len()]).collect();
        for &c in &ch {
            parent[c] = x;
            order.push(c);
        }
        work.children[x] = ch;
    }

    // counts of set leaves and of all leaves below every node
    let total = set.len();
    let mut full = vec![0usize; t.nodes.len()];
    let mut leaves = vec![0usize; t.nodes.len()];
    for &x in order.iter().rev() {
        if let NodeKind::Leaf(l) = &t.nodes[x].kind {
            leaves[x] = 1;
            full[x] = usize::from(set.contains(l));
        }
        if x != top {
            let p = parent[x];
            leaves[p] += leaves[x];
            full[p] += full[x];
        }
    }
    let status = |x: usize, full: &[usize], leaves: &[usize]| {
        if full[x] == 0 {
            Status::Empty
        } else if full[x] == leaves[x] {
            Status::Full
        } else {
            Status::Partial
        }
    };

    let mut root = top;
    loop {
        match work.children[root].iter().find(|&&c| full[c] == total) {
            Some(&c) => root = c,
            None => break,
        }
    }
    if work.children[root].is_empty() {
        return t.clone();
    }

    // partial nodes strictly below the pertinent root, children first
    let mut seqs: Vec<Option<Vec<usize>>> = vec![None; t.nodes.len()];
    for &x in order.iter().rev() {
        if full[x] == 0 || full[x] >= total || full[x] == leaves[x] {
            continue;
        }
        let ch = work.children[x].clone();
        let st: Vec<Status> = ch.iter().map(|&c| status(c, &full, &leaves)).collect();
        let seq = match work.kind[x] {
            NodeKind::P => {
                let partials: Vec<usize> =
                    (0..ch.len()).filter(|&k| st[k] == Status::Partial).map(|k| ch[k]).collect();
                if partials.len() > 1 {
                    return PQTree::null(t.leaves.iter().cloned());
                }
                let empties = pick(&ch, &st, Status::Empty);
                let fulls = pick(&ch, &st, Status::Full);
                let mut seq = Vec::new();
                seq.extend(work.group(empties));
                if let Some(&p) = partials.first() {
                    seq.extend(seqs[p].take().unwrap());
                }
                seq.extend(work.group(fulls));
                seq
            }
            _ => match q_partial(&ch, &st, &mut seqs) {
                Some(seq) => seq,
                None => return PQTree::null(t.leaves.iter().cloned()),
            },
        };
        seqs[x] = Some(seq);
    }

    let ch = work.children[root].clone();
    let st: Vec<Status> = ch.iter().map(|&c| status(c, &full, &leaves)).collect();
    match work.kind[root] {
        NodeKind::P => {
            let partials: Vec<usize> =
                (0..ch.len()).filter(|&k| st[k] == Status::Partial).map(|k| ch[k]).collect();
            if partials.len() > 2 {
                return PQTree::null(t.leaves.iter().cloned());
            }
            let mut empties = pick(&ch, &st, Status::Empty);
            let fulls = pick(&ch, &st, Status::Full);
            if partials.is_empty() {
                if !empties.is_empty() && fulls.len() >= 2 {
                    let g = work.group(fulls).unwrap();
                    empties.push(g);
                    work.children[root] = empties;
                }
            } else {
                let mut seq = seqs[partials[0]].take().unwrap();
                seq.extend(work.group(fulls));
                if let Some(&p2) = partials.get(1) {
                    let mut other = seqs[p2].take().unwrap();
                    other.reverse();
                    seq.extend(other);
                }
                let q = work.add(NodeKind::Q, seq);
                empties.push(q);
                work.children[root] = empties;
            }
        }
        NodeKind::Q => {
            let nonempty: Vec<usize> = (0..ch.len()).filter(|&k| st[k] != Status::Empty).collect();
            let (a, b) = (nonempty[0], *nonempty.last().unwrap());
            if nonempty.len() != b - a + 1 {
                return PQTree::null(t.leaves.iter().cloned());
            }
            if (a + 1..b).any(|k| st[k] != Status::Full) {
                return PQTree::null(t.leaves.iter().cloned());
            }
            let mut out: Vec<usize> = ch[..a].to_vec();
            for k in a..=b {
                if st[k] == Status::Partial {
                    let mut seq = seqs[ch[k]].take().unwrap();
                    if k == b && k != a {
                        seq.reverse();
                    }
                    out.extend(seq);
                } else {
                    out.push(ch[k]);
                }
            }
            out.extend_from_slice(&ch[b + 1..]);
            work.children[root] = out;
        }
        NodeKind::Leaf(_) => {}
    }

    // unroot: the special leaf becomes the parent of the top node
    let mut raw: Vec<RawNode> = work.kind.iter().map(|k| RawNode::new(k.clone())).collect();
    for r in raw.iter_mut() {
        r.alive = false;
    }
    raw[s].alive = true;
    raw[s].neighbors.push(top);
    let mut stack = vec![(top, s)];
    while let Some((x, p)) = stack.pop() {
        raw[x].alive = true;
        raw[x].neighbors.push(p);
        for &c in &work.children[x] {
            raw[x].neighbors.push(c);
            stack.push((c, x));
        }
    }
    PQTree::from_raw(raw).0
}

fn pick(ch: &[usize], st: &[Status], want: Status) -> Vec<usize> {
    (0..ch.len()).filter(|&k| st[k] == want).map(|k| ch[k]).collect()
}

/// Q-node below the pertinent root: children must read empty, at most one
/// partial, then full (in one of the two directions).
fn q_partial(ch: &[usize], st: &[Status], seqs: &mut [Option<Vec<usize>>]) -> Option<Vec<usize>> {
    let fits = |idx: &[usize]| {
        let mut seen_nonempty = false;
        for &k in idx {
            match st[k] {
                Status::Empty if seen_nonempty => return false,
                Status::Partial if seen_nonempty => return false,
                Status::Empty => {}
                _ => seen_nonempty = true,
            }
        }
        true
    };
    let fwd: Vec<usize> = (0..ch.len()).collect();
    let bwd: Vec<usize> = (0..ch.len()).rev().collect();
    let idx = if fits(&fwd) {
        fwd
    } else if fits(&bwd) {
        bwd
    } else {
        return None;
    };
    let mut seq = Vec::new();
    for k in idx {
        if st[k] == Status::Partial {
            seq.extend(seqs[ch[k]].take().unwrap());
        } else {
            seq.push(ch[k]);
        }
    }
    Some(seq)
}
