use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spqo_core::graph::Graph;
use spqo_core::interval::*;
use spqo_core::oracle::*;
use std::collections::BTreeMap;

fn budget() -> OracleBudget {
    OracleBudget::default()
}

/// Graph on `names` whose edges are the pairs selected by `mask`.
fn graph_on(names: &[&str], mask: u64) -> Graph {
    let mut g = Graph::new();
    for v in names {
        g.add_vertex(v).unwrap();
    }
    let mut bit = 0;
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            if mask >> bit & 1 == 1 {
                g.add_edge(names[i], names[j]).unwrap();
            }
            bit += 1;
        }
    }
    g
}

fn random_graph(rng: &mut ChaCha8Rng, names: &[&str], range: (f64, f64)) -> Graph {
    let p = if range.0 < range.1 { rng.gen_range(range.0..range.1) } else { range.0 };
    let pairs = names.len() * (names.len() - 1) / 2;
    let mut mask = 0u64;
    for b in 0..pairs {
        if rng.gen_bool(p) {
            mask |= 1 << b;
        }
    }
    graph_on(names, mask)
}

/// Every representation of `h` with endpoints at 1..2k, one per signature.
fn all_signatures(h: &Graph) -> Vec<IntervalRep> {
    fn go(h: &Graph, seq: &mut Vec<(usize, bool)>, out: &mut Vec<IntervalRep>) {
        let k = h.num_vertices();
        if seq.len() == 2 * k {
            let mut intervals = BTreeMap::new();
            for (i, &(v, right)) in seq.iter().enumerate() {
                let e = intervals.entry(h.name(v).to_string()).or_insert((0.0, 0.0));
                if right {
                    e.1 = (i + 1) as f64;
                } else {
                    e.0 = (i + 1) as f64;
                }
            }
            let rep = IntervalRep { intervals };
            if rep.represents(h) {
                out.push(rep);
            }
            return;
        }
        for v in 0..k {
            let started = seq.contains(&(v, false));
            let ended = seq.contains(&(v, true));
            if !started || !ended {
                seq.push((v, started));
                go(h, seq, out);
                seq.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(h, &mut Vec::new(), &mut out);
    out
}

fn check_recognition(g: &Graph) -> bool {
    let got = recognize_interval(g);
    let perm = brute_force_interval(g, budget()).unwrap();
    let sweep = sweep_interval(g, budget()).unwrap();
    assert_eq!(perm.is_some(), sweep.is_some(), "oracles disagree on\n{}", g.to_edge_list());
    assert_eq!(got.is_some(), perm.is_some(), "{}", g.to_edge_list());
    for r in [&got, &perm, &sweep].into_iter().flatten() {
        assert!(r.represents(g));
    }
    got.is_some()
}

fn check_simultaneous(g1: &Graph, g2: &Graph) -> bool {
    let got = simultaneous_interval(g1, g2).unwrap();
    let expect = brute_force_simultaneous_interval(g1, g2, budget()).unwrap();
    assert_eq!(got.is_some(), expect.is_some(), "{}--\n{}", g1.to_edge_list(), g2.to_edge_list());
    if let Some((r1, r2)) = &got {
        assert!(r1.represents(g1) && r2.represents(g2));
        for (v, iv) in &r1.intervals {
            if let Some(jv) = r2.intervals.get(v) {
                assert_eq!(iv, jv);
            }
        }
    }
    got.is_some()
}

fn check_extension(g: &Graph, h: &Graph, rep: &IntervalRep) -> bool {
    let got = extend_partial_interval(g, h, rep).unwrap();
    let expect = brute_force_extension(g, h, rep, budget()).unwrap();
    assert_eq!(got.is_some(), expect.is_some(), "{}\n{:?}", g.to_edge_list(), rep);
    if let Some(out) = &got {
        assert!(out.represents(g));
        for (v, iv) in &rep.intervals {
            assert_eq!(out.intervals[v], *iv);
        }
    }
    got.is_some()
}

#[test]
fn every_graph_up_to_six_vertices() {
    let names = ["a", "b", "c", "d", "e", "f"];
    let (mut yes, mut no) = (0, 0);
    for n in 1..=6 {
        for mask in 0..1u64 << (n * (n - 1) / 2) {
            if check_recognition(&graph_on(&names[..n], mask)) {
                yes += 1;
            } else {
                no += 1;
            }
        }
    }
    assert!(yes > 10_000 && no > 10_000, "{yes} {no}");
}

#[test]
fn random_graphs_on_eight_vertices() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let names = ["a", "b", "c", "d", "e", "f", "g", "h"];
    for _ in 0..300 {
        check_recognition(&random_graph(&mut rng, &names, (0.2, 0.8)));
    }
}

#[test]
fn pairs_sharing_two_vertices() {
    let v1 = ["a", "b", "c", "d"];
    let v2 = ["c", "d", "e", "f"];
    let (mut yes, mut no) = (0, 0);
    for m1 in 0..64 {
        for m2 in 0..64 {
            if check_simultaneous(&graph_on(&v1, m1), &graph_on(&v2, m2)) {
                yes += 1;
            } else {
                no += 1;
            }
        }
    }
    assert!(yes > 100 && no > 100, "{yes} {no}");
}

#[test]
fn pairs_sharing_three_vertices() {
    let v1 = ["a", "b", "c", "d"];
    let v2 = ["b", "c", "d", "e", "f"];
    let (mut yes, mut no) = (0, 0);
    for m1 in 0..64u64 {
        let g1 = graph_on(&v1, m1);
        for m2 in 0..1024u64 {
            let g2 = graph_on(&v2, m2);
            // pairs disagreeing on the common vertices are rejected up front
            if !same_common_subgraph(&g1, &g2) {
                if m2 % 37 == 0 {
                    assert!(!check_simultaneous(&g1, &g2));
                }
                continue;
            }
            if check_simultaneous(&g1, &g2) {
                yes += 1;
            } else {
                no += 1;
            }
        }
    }
    assert!(yes > 100 && no > 100, "{yes} {no}");
}

#[test]
fn random_pairs_up_to_eight_vertices() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let all = ["a", "b", "c", "d", "e", "f", "g", "h"];
    let mut done = 0;
    while done < 300 {
        let n = rng.gen_range(3..=8);
        let k1 = rng.gen_range(2..=n);
        let start = rng.gen_range(0..=n - 2);
        let (v1, v2) = (&all[..k1], &all[start.min(k1 - 1)..n]);
        let g1 = random_graph(&mut rng, v1, (0.3, 0.8));
        let mut g2 = random_graph(&mut rng, v2, (0.3, 0.8));
        if rng.gen_bool(0.8) {
            // copy G1's adjacency onto the shared vertices
            let mut fixed = Graph::new();
            for v in g2.names() {
                fixed.add_vertex(v).unwrap();
            }
            for &(x, y) in g2.edges() {
                let (a, b) = (g2.name(x), g2.name(y));
                if g1.vertex(a).is_none() || g1.vertex(b).is_none() {
                    fixed.add_edge(a, b).unwrap();
                }
            }
            for &(x, y) in g1.edges() {
                let (a, b) = (g1.name(x), g1.name(y));
                if g2.vertex(a).is_some() && g2.vertex(b).is_some() {
                    fixed.add_edge(a, b).unwrap();
                }
            }
            g2 = fixed;
        }
        check_simultaneous(&g1, &g2);
        done += 1;
    }
}

#[test]
fn simultaneous_examples() {
    let p = Graph::from_edges(&[("a", "b"), ("b", "c"), ("c", "d")]).unwrap();
    assert!(check_simultaneous(&p, &p));
    // b and c share a neighbour in G1 and are forced apart by a claw in G2
    let g1 = Graph::from_edges(&[("a", "b"), ("a", "c"), ("b", "x"), ("c", "y")]).unwrap();
    let g2 = Graph::from_edges(&[("a", "b"), ("a", "c"), ("a", "z"), ("z", "w")]).unwrap();
    check_simultaneous(&g1, &g2);
}

#[test]
fn extensions_on_five_vertices() {
    let names = ["a", "b", "c", "d", "e"];
    let (mut yes, mut no) = (0, 0);
    for mask in 0..1024u64 {
        let g = graph_on(&names, mask);
        if recognize_interval(&g).is_none() {
            continue;
        }
        for hv in [&["a", "b"][..], &["a", "c", "e"][..]] {
            let h = g.induced(&hv.iter().map(|v| g.vertex(v).unwrap()).collect::<Vec<_>>());
            for rep in all_signatures(&h) {
                if check_extension(&g, &h, &rep) {
                    yes += 1;
                } else {
                    no += 1;
                }
            }
        }
    }
    assert!(yes > 100 && no > 100, "{yes} {no}");
}

#[test]
fn extensions_on_six_vertices_with_one_prescribed() {
    let names = ["a", "b", "c", "d", "e", "f"];
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..300 {
        let g = random_graph(&mut rng, &names, (0.2, 0.7));
        let h = g.induced(&[0, 3]);
        for rep in all_signatures(&h) {
            check_extension(&g, &h, &rep);
        }
    }
}

#[test]
fn random_extensions_up_to_eight_vertices() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let all = ["a", "b", "c", "d", "e", "f", "g", "h"];
    let (mut yes, mut no) = (0, 0);
    let mut done = 0;
    while done < 300 {
        let n = rng.gen_range(3..=8);
        let g = random_graph(&mut rng, &all[..n], (0.2, 0.7));
        let k = rng.gen_range(1..=n.min(3));
        let mut keep: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(&mut keep[..], &mut rng);
        keep.truncate(k);
        keep.sort_unstable();
        let h = g.induced(&keep);
        let reps = all_signatures(&h);
        if reps.is_empty() {
            continue;
        }
        let rep = &reps[rng.gen_range(0..reps.len())];
        // arbitrary distinct coordinates, not just 1..2k
        let scale = rng.gen_range(0.5..10.0);
        let shift = rng.gen_range(-20.0..20.0);
        let rep = IntervalRep {
            intervals: rep.intervals.iter().map(|(v, &(l, r))| (v.clone(), (l * scale + shift, r * scale + shift))).collect(),
        };
        if check_extension(&g, &h, &rep) {
            yes += 1;
        } else {
            no += 1;
        }
        done += 1;
    }
    assert!(yes > 20 && no > 20, "{yes} {no}");
}

#[test]
fn gadget_shape() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let names = ["a", "b", "c", "d", "e"];
    for _ in 0..50 {
        let n = rng.gen_range(1..=5);
        let h = random_graph(&mut rng, &names[..n], (0.5, 0.5));
        let reps = all_signatures(&h);
        let Some(rep) = reps.first() else { continue };
        let gd = build_extension_gadget(&h, rep).unwrap();
        let g = &gd.graph;
        assert_eq!(g.num_vertices(), 9 * n - 1);
        assert_eq!(gd.markers.len() * 3 + n, 7 * n);
        assert_eq!(gd.connectors.len(), 2 * n - 1);
        assert!(g.induced(&(0..n).collect::<Vec<_>>()).edge_labels() == h.edge_labels());
        // L1 M1 R1 C1 L2 ... R2n is an induced path
        let mut path = Vec::new();
        for (i, m) in gd.markers.iter().enumerate() {
            path.extend(m.iter().map(|x| g.vertex(x).unwrap()));
            if let Some(c) = gd.connectors.get(i) {
                path.push(g.vertex(c).unwrap());
            }
        }
        for i in 0..path.len() {
            for j in i + 1..path.len() {
                assert_eq!(g.adjacent(path[i], path[j]), j == i + 1);
            }
        }
        for m in &gd.markers {
            for x in m {
                let v = g.vertex(x).unwrap();
                assert!(g.degree(v) <= 2 + n);
            }
        }
        assert!(recognize_interval(g).is_some());
    }
}

#[test]
fn gadget_forces_the_signature() {
    let names = ["a", "b", "c"];
    for n in 1..=3 {
        for mask in 0..1u64 << (n * (n - 1) / 2) {
            let h = graph_on(&names[..n], mask);
            let reps = all_signatures(&h);
            for rep in reps.iter().take(4) {
                let gd = build_extension_gadget(&h, rep).unwrap();
                let sig = rep.signature().unwrap();
                for other in &reps {
                    let ok = brute_force_extension(&gd.graph, &h, other, budget()).unwrap().is_some();
                    let o = other.signature().unwrap();
                    let mirrored: Vec<Endpoint> =
                        o.iter().rev().map(|e| Endpoint { vertex: e.vertex.clone(), right: !e.right }).collect();
                    // the marker path fixes the signature up to reflection
                    assert_eq!(ok, o == sig || mirrored == sig);
                }
            }
        }
    }
}

#[test]
fn spec_examples() {
    let gr = Graph::from_edges(&[("a", "b"), ("b", "c")]).unwrap();
    assert!(brute_force_interval(&gr, budget()).unwrap().is_some());
    let c4 = Graph::from_edges(&[("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")]).unwrap();
    assert!(brute_force_interval(&c4, budget()).unwrap().is_none());
    let h = c4.induced(&[0]);
    let rep = IntervalRep { intervals: BTreeMap::from([("a".to_string(), (0.0, 1.0))]) };
    assert!(extend_partial_interval(&c4, &h, &rep).unwrap().is_none());
    // H = G returns I itself
    let rep = recognize_interval(&gr).unwrap();
    let rep = IntervalRep {
        intervals: rep.intervals.iter().map(|(v, &(l, r))| {
            let k = (v.as_bytes()[0] - b'a') as f64;
            (v.clone(), (l * 10.0 + k, r * 10.0 + 5.0 + k))
        }).collect(),
    };
    assert!(rep.represents(&gr) && rep.has_distinct_endpoints());
    assert_eq!(extend_partial_interval(&gr, &gr, &rep).unwrap(), Some(rep));
}
