use super::*;
use crate::oracle::{all_circular_orders, consecutive_filter};
use crate::orders::labels;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn set(s: &str) -> BTreeSet<Label> {
    labels(s).into_iter().collect()
}

fn orders(t: &PQTree) -> BTreeSet<CircularOrder> {
    t.enumerate_orders(1_000_000).unwrap()
}

fn random_family(rng: &mut ChaCha8Rng, l: &BTreeSet<Label>, k: usize) -> Vec<BTreeSet<Label>> {
    let v: Vec<Label> = l.iter().cloned().collect();
    (0..k)
        .map(|_| v.iter().filter(|_| rng.gen_bool(0.4)).cloned().collect())
        .collect()
}

#[test]
fn universal_trees() {
    assert_eq!(orders(&PQTree::universal(labels("abcd"))).len(), 6);
    assert_eq!(orders(&PQTree::universal(labels("abc"))).len(), 2);
    let e = PQTree::universal(Vec::<Label>::new());
    assert_eq!(e.variant(), Variant::Empty);
    assert_eq!(orders(&e).len(), 1);
    assert_eq!(orders(&PQTree::universal(labels("a"))).len(), 1);
    assert_eq!(orders(&PQTree::universal(labels("ab"))).len(), 1);
    assert!(orders(&PQTree::null(labels("ab"))).is_empty());
}

#[test]
fn reduce_adjacent_pair() {
    let t = PQTree::universal(labels("abcde")).reduce(&set("ab")).unwrap();
    let o = orders(&t);
    assert_eq!(o.len(), 12);
    assert_eq!(o, consecutive_filter(&set("abcde"), &[set("ab")]));
    let u = PQTree::universal(labels("abcde"));
    assert_eq!(u.reduce(&set("abcde")).unwrap(), u);
    let three = PQTree::universal(labels("abc")).reduce(&set("ac")).unwrap().reduce(&set("bc")).unwrap();
    assert!(!three.is_null());
    assert!(u.reduce(&set("az")).is_err());
}

#[test]
fn consecutive_families_match_filter() {
    let l = set("abcde");
    let fam = label_sets(&["ab", "bc"]);
    let t = PQTree::from_consecutive_sets(l.iter().cloned(), &fam).unwrap();
    assert_eq!(orders(&t), consecutive_filter(&l, &fam));
    let l = set("abcd");
    let fam = label_sets(&["ac", "bd", "ab"]);
    let t = PQTree::from_consecutive_sets(l.iter().cloned(), &fam).unwrap();
    assert_eq!(orders(&t), consecutive_filter(&l, &fam));
}

#[test]
fn projection_of_star_is_star() {
    let u = PQTree::universal(labels("abcdef"));
    assert_eq!(u.project(&set("ace")).unwrap(), PQTree::universal(labels("ace")));
    assert_eq!(u.project(&set("abcdef")).unwrap(), u);
}

/// The Q-node over c,d,e hanging off a P-node with a,b,f.
fn center_with_q_child() -> PQTree {
    PQTree::from_consecutive_sets(labels("abcdef"), &label_sets(&["cde", "cd", "de"])).unwrap()
}

#[test]
fn p_center_with_q_child() {
    let t = center_with_q_child();
    // (4-1)! arrangements around the center, times two for cde / edc
    assert_eq!(orders(&t).len(), 12);
    for o in orders(&t) {
        let s = o.as_slice().iter().map(|l| l.as_str()).collect::<String>();
        let doubled = format!("{s}{s}");
        assert!(doubled.contains("cde") || doubled.contains("edc"), "{s}");
    }
}

#[test]
fn rooting_round_trip() {
    let t = center_with_q_child();
    let a = Label::from("a");
    let r = root_at(&t, &a).unwrap();
    assert_eq!(unroot(&r, &a).unwrap(), t);
    let lin = r.linear_orders(1000).unwrap();
    assert_eq!(lin.len(), orders(&t).len());
    for o in lin {
        let mut seq = vec![a.clone()];
        seq.extend(o.seq);
        assert!(orders(&t).contains(&CircularOrder::new(seq).unwrap()));
    }
    assert!(root_at(&t, &Label::from("z")).is_err());
    assert!(unroot(&r, &Label::from("b")).is_err());
}

#[test]
fn intersection_identities() {
    let t = center_with_q_child();
    let u = PQTree::universal(labels("abcdef"));
    assert_eq!(t.intersect(&u).unwrap(), t);
    assert_eq!(u.intersect(&t).unwrap(), t);
    assert_eq!(t.intersect(&t).unwrap(), t);
    assert!(t.intersect(&PQTree::universal(labels("abc"))).is_err());
}

#[test]
fn random_operations_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..150 {
        let n = rng.gen_range(1..=7);
        let l: BTreeSet<Label> = (0..n).map(|i| Label::new(((b'a' + i) as char).to_string())).collect();
        let k = rng.gen_range(0..4);
        let fam = random_family(&mut rng, &l, k);
        let t = PQTree::from_consecutive_sets(l.iter().cloned(), &fam).unwrap();
        t.check_invariants().unwrap();
        let ot = orders(&t);
        assert_eq!(ot, consecutive_filter(&l, &fam), "family {fam:?}");
        for o in &ot {
            assert!(ot.contains(&o.reverse()));
            assert!(t.contains_order(o));
        }
        for o in all_circular_orders(&l) {
            assert_eq!(t.contains_order(&o), ot.contains(&o));
        }

        let keep: BTreeSet<Label> = l.iter().filter(|_| rng.gen_bool(0.7)).cloned().collect();
        let p = t.project(&keep).unwrap();
        p.check_invariants().unwrap();
        let expect: BTreeSet<CircularOrder> = ot.iter().map(|o| o.restrict(&keep)).collect();
        assert_eq!(orders(&p), expect);

        let fam2 = random_family(&mut rng, &l, 2);
        let t2 = PQTree::from_consecutive_sets(l.iter().cloned(), &fam2).unwrap();
        let i = t.intersect(&t2).unwrap();
        i.check_invariants().unwrap();
        let expect: BTreeSet<CircularOrder> = ot.intersection(&orders(&t2)).cloned().collect();
        assert_eq!(orders(&i), expect);
        if !expect.is_empty() {
            assert_eq!(i.shape(), t2.intersect(&t).unwrap().shape());
        }
    }
}

#[test]
fn json_round_trip() {
    let t = center_with_q_child();
    let s = serde_json::to_string(&t).unwrap();
    let back: PQTree = serde_json::from_str(&s).unwrap();
    assert_eq!(back, t);
    let n = PQTree::null(labels("ab"));
    let back: PQTree = serde_json::from_str(&serde_json::to_string(&n).unwrap()).unwrap();
    assert_eq!(back, n);
    assert!(serde_json::from_str::<PQTree>(
        r#"{"variant":"Normal","nodes":[{"id":0,"kind":"leaf","label":"a","neighbors":[1]},{"id":1,"kind":"leaf","label":"b","neighbors":[]}]}"#
    )
    .is_err());
}

#[test]
fn fixedness_against_projection() {
    let t = center_with_q_child();
    // child keeps everything but b: the center keeps a, f and the Q side
    let keep = set("acdef");
    let child = t.project(&keep).unwrap();
    let map: BTreeMap<Label, Label> = keep.iter().map(|l| (l.clone(), l.clone())).collect();
    let rep = classify_fixedness(&t, &map, &child).unwrap();
    for x in t.inner_nodes() {
        assert!(rep.fixed[x], "node {x}");
    }
    let q = t.q_nodes().next().unwrap();
    assert!(rep.representative.contains_key(&q));
    // dropping c and d leaves the Q-node with two sides: free
    let keep = set("abef");
    let child = t.project(&keep).unwrap();
    let map: BTreeMap<Label, Label> = keep.iter().map(|l| (l.clone(), l.clone())).collect();
    let rep = classify_fixedness(&t, &map, &child).unwrap();
    assert!(!rep.fixed[q]);
    let p = t.p_nodes().next().unwrap();
    assert!(rep.fixed[p]);
    // one leaf per side for only two sides: P-node free
    let keep = set("ab");
    let child = t.project(&keep).unwrap();
    let map: BTreeMap<Label, Label> = keep.iter().map(|l| (l.clone(), l.clone())).collect();
    let rep = classify_fixedness(&t, &map, &child).unwrap();
    assert!(!rep.fixed[p]);
}
