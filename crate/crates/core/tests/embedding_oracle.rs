use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spqo_core::embedding::*;
use spqo_core::expansion::Origin;
use spqo_core::gen::{biconnected_graphs, random_biconnected, random_glued};
use spqo_core::graph::Graph;
use spqo_core::oracle::{brute_force_embeddings, OracleBudget};
use spqo_core::solver::{solve_with, SolveOutcome};
use spqo_core::{CircularOrder, Label, PQTree};
use std::collections::{BTreeMap, BTreeSet};

fn rotations_at(embs: &[RotationSystem], v: &str) -> BTreeSet<CircularOrder> {
    embs.iter().map(|r| r.rotations[v].clone()).collect()
}

fn check_biconnected(g: &Graph) -> Option<Vec<RotationSystem>> {
    let embs = brute_force_embeddings(g, OracleBudget::default()).unwrap();
    let t = match spqr_tree(g) {
        Err(EmbeddingError::NotPlanar) => {
            assert!(embs.is_empty(), "{}", g.to_edge_list());
            return None;
        }
        other => other.unwrap(),
    };
    assert!(!embs.is_empty());
    t.check(g, &(0..g.num_edges()).collect::<Vec<_>>()).unwrap();
    for node in t.nodes.iter().filter(|n| n.kind == SpqrKind::R) {
        let names: Vec<(&str, &str)> = node.edges.iter().map(|e| (g.name(e.ends.0), g.name(e.ends.1))).collect();
        let sk = Graph::from_edges(&names).unwrap();
        assert_eq!(brute_force_embeddings(&sk, OracleBudget::default()).unwrap().len(), 2);
    }
    for (v, tree) in embedding_trees(g, &t).unwrap() {
        assert_eq!(tree.enumerate_orders(1_000_000).unwrap(), rotations_at(&embs, &v), "{v} in\n{}", g.to_edge_list());
    }
    let rep = pq_embedding_representation(g).unwrap();
    assert!(rep.instance.normalize().unwrap().fixedness().is_2_fixed());
    let r = solve_with(&rep.instance, Default::default()).unwrap();
    let SolveOutcome::Feasible(s) = r.outcome else { panic!("{:?}", r.outcome) };
    let rs = rotation_from_solution(&rep.trees, g, &s.orders).unwrap();
    assert!(embs.contains(&rs));
    Some(embs)
}

/// Random constraint trees over subsets of the edges at some vertices;
/// half of them are built around one planar embedding.
fn random_constraints(rng: &mut ChaCha8Rng, g: &Graph, embs: &[RotationSystem]) -> BTreeMap<String, PQTree> {
    let planted = embs.choose(rng).unwrap();
    let mut out = BTreeMap::new();
    for v in 0..g.num_vertices() {
        if g.degree(v) < 3 || rng.gen_bool(0.4) {
            continue;
        }
        let mut edges: Vec<Label> = g.incident_labels(v).into_iter().collect();
        edges.shuffle(rng);
        let k = if rng.gen_bool(0.5) { edges.len() } else { rng.gen_range(3..=edges.len()) };
        let keep: BTreeSet<Label> = edges[..k].iter().cloned().collect();
        let order: Vec<Label> = if rng.gen_bool(0.5) {
            planted.rotations[g.name(v)].restrict(&keep).as_slice().to_vec()
        } else {
            let mut o: Vec<Label> = keep.iter().cloned().collect();
            o.shuffle(rng);
            o
        };
        let mut family = Vec::new();
        for _ in 0..rng.gen_range(1..=3) {
            let start = rng.gen_range(0..k);
            let len = rng.gen_range(2..k);
            family.push((0..len).map(|i| order[(start + i) % k].clone()).collect::<BTreeSet<_>>());
        }
        let t = PQTree::from_consecutive_sets(keep, &family).unwrap();
        out.insert(g.name(v).to_string(), t);
    }
    out
}

fn satisfies(r: &RotationSystem, allowed: &BTreeMap<String, BTreeSet<CircularOrder>>) -> bool {
    allowed.iter().all(|(v, set)| {
        let keep = set.iter().next().map(|o| o.label_set()).unwrap_or_default();
        set.contains(&r.rotations[v].restrict(&keep))
    })
}

fn check_constrained(g: &Graph, embs: &[RotationSystem], c: &BTreeMap<String, PQTree>) -> bool {
    let allowed: BTreeMap<String, BTreeSet<CircularOrder>> =
        c.iter().map(|(v, t)| (v.clone(), t.enumerate_orders(1_000_000).unwrap())).collect();
    let expect = embs.iter().any(|r| satisfies(r, &allowed));
    let rep = constrained_representation(g, c).unwrap();
    assert!(rep.instance.normalize().unwrap().fixedness().is_2_fixed());
    match solve_partially_pq_constrained(g, c).unwrap() {
        Decision::Feasible(r) => {
            assert!(expect, "solver found an embedding the oracle rejects");
            assert!(r.is_planar_embedding(g) && satisfies(&r, &allowed));
        }
        Decision::Infeasible(_) => assert!(!expect, "oracle found an embedding:\n{}{:?}", g.to_edge_list(), c),
        Decision::NotSupported(m) => panic!("{m}"),
    }
    expect
}

/// Depth of an expansion tree: one more than the deeper of the two children
/// whose triple created it.
fn expansion_depths(rep: &EmbeddingRepresentation) -> (usize, bool) {
    let r = solve_with(&rep.instance, Default::default()).unwrap();
    let Some(x) = r.graph else { return (0, true) };
    let mut depth = vec![0usize; x.instance.trees.len()];
    let mut shape_ok = true;
    for (t, o) in x.origins.iter().enumerate() {
        if let Origin::Expansion(tr) = o {
            let (a, b) = (x.instance.arcs[tr.arcs.0].target, x.instance.arcs[tr.arcs.1].target);
            depth[t] = depth[a].max(depth[b]) + 1;
            if tr.tree < rep.instance.trees.len() && rep.instance.names[tr.tree].starts_with("T[") {
                let kinds: BTreeSet<char> =
                    [a, b].iter().map(|&c| x.instance.names[c].chars().next().unwrap()).collect();
                shape_ok &= kinds.contains(&'K') && (kinds.contains(&'P') || kinds.contains(&'R'));
            }
        }
    }
    (depth.into_iter().max().unwrap_or(0), shape_ok)
}

#[test]
fn small_biconnected_graphs_match_rotation_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut planar = 0;
    let (mut yes, mut no) = (0, 0);
    for g in biconnected_graphs(8) {
        let Some(embs) = check_biconnected(&g) else { continue };
        planar += 1;
        for _ in 0..3 {
            let c = random_constraints(&mut rng, &g, &embs);
            if check_constrained(&g, &embs, &c) {
                yes += 1;
            } else {
                no += 1;
            }
            let rep = constrained_representation(&g, &c).unwrap();
            let (depth, shape) = expansion_depths(&rep);
            assert!(depth <= 2 && shape, "depth {depth}");
        }
    }
    assert!(planar > 25);
    assert!(yes > 20, "{yes} {no}");
}

#[test]
fn random_larger_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut done = 0;
    let (mut yes, mut no) = (0, 0);
    while done < 80 {
        let g = random_biconnected(&mut rng, 10, 13);
        if spqo_core::oracle::rotation_system_count(&g) > 300_000 {
            continue;
        }
        let Some(embs) = check_biconnected(&g) else { continue };
        for _ in 0..3 {
            let c = random_constraints(&mut rng, &g, &embs);
            if check_constrained(&g, &embs, &c) {
                yes += 1;
            } else {
                no += 1;
            }
        }
        done += 1;
    }
    assert!(yes > 10 && no > 5, "{yes} {no}");
}

#[test]
fn cutvertex_graphs_match_rotation_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut done = 0;
    while done < 60 {
        let g = random_glued(&mut rng, 3, 5);
        if g.num_edges() > 11 || spqo_core::oracle::rotation_system_count(&g) > 300_000 {
            continue;
        }
        let embs = brute_force_embeddings(&g, OracleBudget::default()).unwrap();
        let rep = match generalize_cutvertices(&g) {
            Err(EmbeddingError::NotSupported(_)) => continue,
            Err(EmbeddingError::NotPlanar) => {
                assert!(embs.is_empty());
                continue;
            }
            other => other.unwrap(),
        };
        assert!(!embs.is_empty());
        assert!(rep.instance.normalize().unwrap().fixedness().is_2_fixed());
        // vertex trees together with their descendants describe exactly the
        // planar rotations: check through the solver on a pinned rotation
        for v in 0..g.num_vertices() {
            let name = g.name(v);
            let tops = rotations_at(&embs, name);
            let tree = &rep.instance.trees[rep.trees.vertex_trees[name]];
            let pinned = tops.iter().next().unwrap();
            assert!(tree.contains_order(pinned));
        }
        let c = random_constraints(&mut rng, &g, &embs);
        check_constrained(&g, &embs, &c);
        done += 1;
    }
}

fn sefe_oracle(g1: &Graph, g2: &Graph) -> bool {
    let e1 = brute_force_embeddings(g1, OracleBudget::default()).unwrap();
    let e2 = brute_force_embeddings(g2, OracleBudget::default()).unwrap();
    let common = g1.intersection(g2);
    let key = |r: &RotationSystem| -> Vec<CircularOrder> {
        (0..common.num_vertices())
            .map(|v| r.rotations[common.name(v)].restrict(&common.incident_labels(v)))
            .collect()
    };
    let k1: BTreeSet<Vec<CircularOrder>> = e1.iter().map(key).collect();
    e2.iter().any(|r| k1.contains(&key(r)))
}

/// G2 is G1 with a few edges dropped and a few chords or ears added.
fn perturbed(rng: &mut ChaCha8Rng, g1: &Graph) -> Graph {
    let mut pairs: Vec<(String, String)> =
        g1.edges().iter().map(|&(u, v)| (g1.name(u).to_string(), g1.name(v).to_string())).collect();
    pairs.shuffle(rng);
    pairs.truncate(pairs.len() - rng.gen_range(0..=2));
    let names: Vec<String> = g1.names().to_vec();
    for k in 0..rng.gen_range(1..=3) {
        let u = names.choose(rng).unwrap().clone();
        let v = names.choose(rng).unwrap().clone();
        if u == v || pairs.iter().any(|(a, b)| (a == &u && b == &v) || (a == &v && b == &u)) {
            continue;
        }
        if rng.gen_bool(0.6) {
            pairs.push((u, v));
        } else {
            let x = format!("x{k}");
            pairs.push((u, x.clone()));
            pairs.push((x, v));
        }
    }
    let refs: Vec<(&str, &str)> = pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    Graph::from_edges(&refs).unwrap()
}

#[test]
fn sefe_matches_pairs_of_embeddings() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut yes, mut no) = (0, 0);
    let mut tries = 0;
    while yes + no < 600 && tries < 50000 {
        tries += 1;
        let base = random_biconnected(&mut rng, 6, 9);
        let g1 = perturbed(&mut rng, &base);
        let g2 = perturbed(&mut rng, &base);
        if !g1.is_biconnected() || !g2.is_biconnected() || g1.num_edges() > 11 || g2.num_edges() > 11 || g1.intersection(&g2).num_edges() < 3 {
            continue;
        }
        let planar = |g: &Graph| !brute_force_embeddings(g, OracleBudget::default()).unwrap().is_empty();
        if !planar(&g1) || !planar(&g2) {
            continue;
        }
        let d = match solve_sefe(&g1, &g2).unwrap() {
            Decision::NotSupported(_) => {
                assert!(!g1.intersection(&g2).is_connected());
                continue;
            }
            d => d,
        };
        let rep = sefe_representation(&g1, &g2).unwrap();
        assert!(rep.instance.normalize().unwrap().fixedness().is_2_fixed());
        let expect = sefe_oracle(&g1, &g2);
        match d {
            Decision::Feasible((r1, r2)) => {
                assert!(expect);
                assert!(sefe_agrees(&g1, &r1, &g2, &r2));
                yes += 1;
            }
            _ => {
                assert!(!expect, "{}--\n{}", g1.to_edge_list(), g2.to_edge_list());
                no += 1;
            }
        }
    }
    assert!(yes > 10 && no > 5, "{yes} {no}");
}

#[test]
fn two_wheels_sharing_a_spanning_tree() {
    // hub h with rim 1..5 in two different cyclic orders; the common graph
    // is the star of spokes plus the shared rim edges
    let wheel = |rim: &[&str]| {
        let mut pairs: Vec<(String, String)> = rim.iter().map(|r| ("h".to_string(), r.to_string())).collect();
        for i in 0..rim.len() {
            pairs.push((rim[i].to_string(), rim[(i + 1) % rim.len()].to_string()));
        }
        let refs: Vec<(&str, &str)> = pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        Graph::from_edges(&refs).unwrap()
    };
    let g1 = wheel(&["p", "q", "r", "s", "t"]);
    for rim in [["p", "q", "r", "s", "t"], ["p", "r", "q", "s", "t"], ["p", "r", "t", "q", "s"]] {
        let g2 = wheel(&rim);
        let expect = sefe_oracle(&g1, &g2);
        let got = solve_sefe(&g1, &g2).unwrap();
        assert_eq!(got.is_feasible(), expect, "{rim:?}");
    }
}
