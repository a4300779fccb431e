//! Seeded instance generators for tests, the acceptance suite and the CLI.

use crate::graph::Graph;
use crate::instance::{Arc, Instance};
use crate::orders::{CircularOrder, Label};
use crate::pqtree::PQTree;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet, HashSet};

#[derive(Clone, Copy, Debug)]
pub struct RandomInstanceParams {
    pub max_trees: usize,
    pub max_leaves: usize,
    pub max_arcs: usize,
    /// Probability that the instance is built around a planted solution.
    pub planted: f64,
    /// Probability that a tree is a plain star.
    pub stars: f64,
}

impl Default for RandomInstanceParams {
    fn default() -> Self {
        RandomInstanceParams { max_trees: 5, max_leaves: 6, max_arcs: 6, planted: 0.5, stars: 0.4 }
    }
}

fn letters(n: usize) -> Vec<Label> {
    (0..n).map(|i| Label::new(((b'a' + i as u8) as char).to_string())).collect()
}

fn random_order<R: Rng>(rng: &mut R, leaves: &[Label]) -> CircularOrder {
    let mut v = leaves.to_vec();
    v.shuffle(rng);
    CircularOrder::new(v).unwrap()
}

/// A tree containing `order`, constrained by a few random cyclic intervals of
/// it (or arbitrary random sets when `order` is None).
fn random_tree<R: Rng>(
    rng: &mut R,
    leaves: &[Label],
    order: Option<&CircularOrder>,
    stars: f64,
) -> PQTree {
    let n = leaves.len();
    let mut family = Vec::new();
    let rounds = if rng.gen_bool(stars) { 0 } else { rng.gen_range(1..=3) };
    for _ in 0..rounds {
        let set: BTreeSet<Label> = match order {
            Some(o) if n > 0 => {
                let start = rng.gen_range(0..n);
                let len = rng.gen_range(2..=n.max(2));
                (0..len).map(|k| o.as_slice()[(start + k) % n].clone()).collect()
            }
            _ => leaves.iter().filter(|_| rng.gen_bool(0.4)).cloned().collect(),
        };
        family.push(set);
    }
    let t = PQTree::from_consecutive_sets(leaves.iter().cloned(), &family).unwrap();
    if t.is_null() {
        PQTree::universal(leaves.iter().cloned())
    } else {
        t
    }
}

/// A random DAG of small trees with injective maps and mixed arc flags. With
/// probability `planted` all trees and maps are chosen around one fixed order
/// per tree, so the instance is solvable.
pub fn random_instance<R: Rng>(rng: &mut R, p: &RandomInstanceParams) -> Instance {
    let k = rng.gen_range(1..=p.max_trees);
    let planted = rng.gen_bool(p.planted);
    let mut sizes: Vec<usize> = Vec::with_capacity(k);
    for i in 0..k {
        let n = match sizes.last() {
            Some(&prev) if i > 1 && rng.gen_bool(0.4) => prev,
            _ => rng.gen_range(3..=p.max_leaves),
        };
        sizes.push(n);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let leaves: Vec<Vec<Label>> = sizes.iter().map(|&n| letters(n)).collect();
    let orders: Vec<CircularOrder> = leaves.iter().map(|l| random_order(rng, l)).collect();
    let trees: Vec<PQTree> = leaves
        .iter()
        .zip(&orders)
        .map(|(l, o)| random_tree(rng, l, planted.then_some(o), p.stars))
        .collect();
    let mut arcs = Vec::new();
    // earlier images per source; reusing one lets two children fix the same
    // edges, which is what finalizing steps and double arcs need
    let mut images: Vec<Vec<Vec<usize>>> = vec![Vec::new(); k];
    if k > 1 {
        for _ in 0..rng.gen_range(1..=p.max_arcs) {
            let s = rng.gen_range(0..k - 1);
            let t = rng.gen_range(s + 1..k);
            let reversing = rng.gen_bool(0.5);
            let reuse: Vec<&Vec<usize>> =
                images[s].iter().filter(|im| im.len() == sizes[t]).collect();
            let pick = match reuse.choose(rng) {
                Some(im) if rng.gen_bool(0.5) => (*im).clone(),
                _ => {
                    let mut pick: Vec<usize> = (0..sizes[s]).collect();
                    pick.shuffle(rng);
                    let mut pick = pick[..sizes[t]].to_vec();
                    pick.sort_unstable();
                    pick
                }
            };
            images[s].push(pick.clone());
            let map = if planted {
                // image: the picked positions of the source read along its order
                let src: Vec<Label> = orders[s]
                    .as_slice()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| pick.binary_search(i).is_ok())
                    .map(|(_, l)| l.clone())
                    .collect();
                let mut tgt = orders[t].as_slice().to_vec();
                if reversing {
                    tgt.reverse();
                }
                let shift = rng.gen_range(0..tgt.len());
                tgt.rotate_left(shift);
                tgt.into_iter().zip(src).collect()
            } else {
                let mut src: Vec<Label> = pick.iter().map(|&i| leaves[s][i].clone()).collect();
                src.shuffle(rng);
                leaves[t].iter().cloned().zip(src).collect::<BTreeMap<_, _>>()
            };
            arcs.push(Arc::new(s, t, map, reversing));
        }
    }
    Instance::from_trees(trees, arcs).expect("generated instances are valid")
}

/// Rejection-samples random instances until one is 2-fixed after
/// normalization.
pub fn random_two_fixed<R: Rng>(rng: &mut R, p: &RandomInstanceParams) -> Instance {
    loop {
        let d = random_instance(rng, p);
        let Ok(n) = d.normalize() else { continue };
        if n.fixedness().is_2_fixed() {
            return d;
        }
    }
}

/// Disjoint ladder gadgets. Gadget g has a root star over n leaves and two
/// chains of shrinking stars below it, one dropping the last leaf per step and
/// one dropping the first; every P-node is fixed at most twice and the root's
/// critical triple cascades down both chains.
pub fn scaling_family(gadgets: usize, n: usize) -> Instance {
    let mut names = Vec::new();
    let mut trees = Vec::new();
    let mut arcs = Vec::new();
    for g in 0..gadgets {
        let lab = |i: usize| Label::new(format!("g{g}_{i:03}"));
        let root = trees.len();
        names.push(format!("G{g}"));
        trees.push(PQTree::universal((0..n).map(lab)));
        for side in 0..2 {
            let mut prev = root;
            for i in 1..n.saturating_sub(2) {
                let range = if side == 0 { 0..n - i } else { i..n };
                let leaves: BTreeSet<Label> = range.map(lab).collect();
                names.push(format!("G{g}{}{i}", if side == 0 { "A" } else { "B" }));
                trees.push(PQTree::universal(leaves.iter().cloned()));
                let t = trees.len() - 1;
                arcs.push(Arc::identity(prev, t, &leaves, side == 1 && i % 2 == 1));
                prev = t;
            }
        }
    }
    Instance::build(names, trees, arcs).expect("valid family")
}

fn vertex_name(i: usize) -> String {
    if i < 26 {
        ((b'a' + i as u8) as char).to_string()
    } else {
        format!("v{i}")
    }
}

/// Graph on vertices named a, b, c, ... from index pairs.
pub fn graph_from_pairs(n: usize, pairs: &[(usize, usize)]) -> Graph {
    let mut g = Graph::new();
    for i in 0..n {
        g.add_vertex(&vertex_name(i)).unwrap();
    }
    for &(u, v) in pairs {
        g.add_edge(&vertex_name(u), &vertex_name(v)).expect("simple");
    }
    g
}

/// Canonical adjacency code: colour refinement, then the smallest
/// upper-triangle bit string over all orders that respect the colour
/// classes. Meant for graphs with at most 11 vertices.
fn canonical_code(n: usize, pairs: &[(usize, usize)]) -> (usize, u64) {
    let mut adj = vec![vec![false; n]; n];
    let mut nb: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in pairs {
        adj[u][v] = true;
        adj[v][u] = true;
        nb[u].push(v);
        nb[v].push(u);
    }
    let mut color: Vec<usize> = nb.iter().map(|x| x.len()).collect();
    loop {
        let sig: Vec<(usize, Vec<usize>)> = (0..n)
            .map(|v| {
                let mut c: Vec<usize> = nb[v].iter().map(|&w| color[w]).collect();
                c.sort_unstable();
                (color[v], c)
            })
            .collect();
        let ranks: BTreeSet<&(usize, Vec<usize>)> = sig.iter().collect();
        let rank: BTreeMap<&(usize, Vec<usize>), usize> = ranks.into_iter().enumerate().map(|(i, s)| (s, i)).collect();
        let next: Vec<usize> = sig.iter().map(|s| rank[s]).collect();
        let classes = |c: &[usize]| c.iter().collect::<BTreeSet<_>>().len();
        if classes(&next) == classes(&color) {
            color = next;
            break;
        }
        color = next;
    }
    let mut cells: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..n {
        cells.entry(color[v]).or_default().push(v);
    }
    let cells: Vec<Vec<usize>> = cells.into_values().collect();
    let mut best = u64::MAX;
    let mut order: Vec<usize> = Vec::with_capacity(n);
    fn rec(cells: &[Vec<usize>], ci: usize, order: &mut Vec<usize>, adj: &[Vec<bool>], best: &mut u64) {
        if ci == cells.len() {
            let n = order.len();
            let mut code = 0u64;
            for i in 0..n {
                for j in i + 1..n {
                    code = (code << 1) | u64::from(adj[order[i]][order[j]]);
                }
            }
            *best = (*best).min(code);
            return;
        }
        let mut cell = cells[ci].clone();
        crate::oracle::heap_permutations(&mut cell, &mut |p| {
            let len = order.len();
            order.extend_from_slice(p);
            rec(cells, ci + 1, order, adj, best);
            order.truncate(len);
        });
    }
    rec(&cells, 0, &mut order, &adj, &mut best);
    (n, best)
}

/// Every biconnected simple graph with at most `max_edges` edges, up to
/// isomorphism, grown from cycles by open ear additions.
pub fn biconnected_graphs(max_edges: usize) -> Vec<Graph> {
    let mut seen: HashSet<(usize, u64)> = HashSet::new();
    let mut frontier: Vec<(usize, Vec<(usize, usize)>)> = Vec::new();
    for k in 3..=max_edges {
        let pairs: Vec<(usize, usize)> = (0..k).map(|i| (i, (i + 1) % k)).collect();
        if seen.insert(canonical_code(k, &pairs)) {
            frontier.push((k, pairs));
        }
    }
    let mut out = Vec::new();
    while let Some((n, pairs)) = frontier.pop() {
        let m = pairs.len();
        let present: HashSet<(usize, usize)> = pairs.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        for u in 0..n {
            for v in u + 1..n {
                for len in 1..=max_edges - m {
                    if len == 1 && present.contains(&(u, v)) {
                        continue;
                    }
                    let mut q = pairs.clone();
                    let mut prev = u;
                    for k in 0..len - 1 {
                        q.push((prev, n + k));
                        prev = n + k;
                    }
                    q.push((prev, v));
                    let n2 = n + len - 1;
                    if seen.insert(canonical_code(n2, &q)) {
                        frontier.push((n2, q));
                    }
                }
            }
        }
        out.push((n, pairs));
    }
    out.sort_by_key(|(n, p)| (p.len(), *n, canonical_code(*n, p).1));
    out.into_iter().map(|(n, p)| graph_from_pairs(n, &p)).collect()
}

/// A random biconnected graph with between `min_edges` and `max_edges`
/// edges: a short cycle plus random open ears.
pub fn random_biconnected<R: Rng>(rng: &mut R, min_edges: usize, max_edges: usize) -> Graph {
    let target = rng.gen_range(min_edges..=max_edges);
    let k = rng.gen_range(3..=target.clamp(3, 6));
    let mut n = k;
    let mut pairs: Vec<(usize, usize)> = (0..k).map(|i| (i, (i + 1) % k)).collect();
    let mut misses = 0;
    while pairs.len() < target {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        let len = rng.gen_range(1..=3.min(target - pairs.len()));
        if u == v || (len == 1 && pairs.iter().any(|&(a, b)| (a, b) == (u, v) || (a, b) == (v, u))) {
            misses += 1;
            if misses > 200 {
                // complete graph and one edge left to place
                return random_biconnected(rng, min_edges, max_edges);
            }
            continue;
        }
        let mut prev = u;
        for _ in 0..len - 1 {
            pairs.push((prev, n));
            prev = n;
            n += 1;
        }
        pairs.push((prev, v));
    }
    graph_from_pairs(n, &pairs)
}

/// A random connected graph glued from up to `blocks` small biconnected
/// pieces and bridges at shared vertices.
pub fn random_glued<R: Rng>(rng: &mut R, blocks: usize, block_edges: usize) -> Graph {
    let mut n = 0;
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..blocks.max(1) {
        let (bn, bp): (usize, Vec<(usize, usize)>) = if i > 0 && rng.gen_bool(0.3) {
            (2, vec![(0, 1)])
        } else {
            let b = random_biconnected(rng, 3, block_edges.max(3));
            (b.num_vertices(), b.edges().to_vec())
        };
        let anchor = if n == 0 { None } else { Some(rng.gen_range(0..n)) };
        let pick = rng.gen_range(0..bn);
        let mut map = vec![0; bn];
        for (v, slot) in map.iter_mut().enumerate() {
            *slot = match anchor {
                Some(a) if v == pick => a,
                _ => {
                    n += 1;
                    n - 1
                }
            };
        }
        pairs.extend(bp.iter().map(|&(a, b)| (map[a], map[b])));
    }
    graph_from_pairs(n, &pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn planted_instances_are_solvable() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let p = RandomInstanceParams { planted: 1.0, ..Default::default() };
        for _ in 0..30 {
            let d = random_instance(&mut rng, &p);
            let found = crate::oracle::brute_force_simultaneous_orders(&d, Default::default()).unwrap();
            assert!(found.is_some());
        }
    }

    #[test]
    fn scaling_family_is_two_fixed() {
        let d = scaling_family(3, 8);
        assert!(d.normalize().unwrap().fixedness().is_2_fixed());
        let r = crate::solver::solve_with(&d, Default::default()).unwrap();
        let crate::solver::SolveOutcome::Feasible(s) = r.outcome else { panic!("{:?}", r.outcome) };
        assert!(crate::solver::verify_solution(&d, &s.orders));
        assert!(r.graph.unwrap().stats.expansion_steps > 3);
    }

    #[test]
    fn small_biconnected_counts() {
        // up to isomorphism: C3; C4; C5, K4-e; C6, K4, theta(1,2,3)...
        let by_edges = |m: usize| biconnected_graphs(m).iter().filter(|g| g.num_edges() == m).count();
        assert_eq!(by_edges(3), 1);
        assert_eq!(by_edges(4), 1);
        assert_eq!(by_edges(5), 2);
        assert!(biconnected_graphs(7).iter().all(|g| g.is_biconnected()));
    }

    #[test]
    fn generated_graphs_have_the_requested_shape() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let g = random_biconnected(&mut rng, 10, 14);
            assert!(g.is_biconnected());
            assert!((10..=14).contains(&g.num_edges()));
            assert!(random_glued(&mut rng, 3, 5).is_connected());
        }
    }
}
