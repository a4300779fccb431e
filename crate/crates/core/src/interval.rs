//! Interval graphs: recognition from consecutive clique orders, simultaneous
//! interval graphs through a three-tree ordering instance, and extension of
//! partial representations through the marker/connector gadget.

use crate::graph::Graph;
use crate::instance::{Arc, Instance};
use crate::orders::{CircularOrder, Label};
use crate::pqtree::PQTree;
use crate::solver::{solve, SolveOutcome};
use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntervalError {
    #[error("invalid representation: {0}")]
    InvalidRepresentation(String),
    #[error("H is not an induced subgraph of G: {0}")]
    NotInduced(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("internal: {0}")]
    Internal(String),
}

/// Closed intervals keyed by vertex name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IntervalRep {
    pub intervals: BTreeMap<String, (f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Endpoint {
    pub vertex: String,
    pub right: bool,
}

pub type Signature = Vec<Endpoint>;

impl IntervalRep {
    pub fn get(&self, v: &str) -> Option<(f64, f64)> {
        self.intervals.get(v).copied()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Same vertex set as `g`, proper intervals, and intersection iff adjacency.
    pub fn represents(&self, g: &Graph) -> bool {
        if self.intervals.len() != g.num_vertices() {
            return false;
        }
        let mut iv = Vec::with_capacity(g.num_vertices());
        for name in g.names() {
            match self.intervals.get(name) {
                Some(&(l, r)) if l <= r && l.is_finite() && r.is_finite() => iv.push((l, r)),
                _ => return false,
            }
        }
        for u in 0..iv.len() {
            for v in u + 1..iv.len() {
                let meet = iv[u].0 <= iv[v].1 && iv[v].0 <= iv[u].1;
                if meet != g.adjacent(u, v) {
                    return false;
                }
            }
        }
        true
    }

    pub fn has_distinct_endpoints(&self) -> bool {
        let mut all: Vec<f64> = self.intervals.values().flat_map(|&(l, r)| [l, r]).collect();
        all.sort_by(f64::total_cmp);
        all.windows(2).all(|w| w[0] < w[1])
    }

    /// Endpoints in increasing coordinate order; needs distinct endpoints.
    pub fn signature(&self) -> Result<Signature, IntervalError> {
        if !self.has_distinct_endpoints() {
            return Err(IntervalError::InvalidRepresentation("endpoints are not distinct".into()));
        }
        let mut all: Vec<(f64, Endpoint)> = self
            .intervals
            .iter()
            .flat_map(|(v, &(l, r))| {
                [
                    (l, Endpoint { vertex: v.clone(), right: false }),
                    (r, Endpoint { vertex: v.clone(), right: true }),
                ]
            })
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(all.into_iter().map(|(_, e)| e).collect())
    }

    pub fn restrict<'a>(&self, keep: impl IntoIterator<Item = &'a str>) -> IntervalRep {
        let intervals = keep
            .into_iter()
            .filter_map(|v| self.intervals.get(v).map(|&iv| (v.to_string(), iv)))
            .collect();
        IntervalRep { intervals }
    }

    /// `{vertex: [left, right]}`; integral coordinates are written as integers.
    pub fn to_json_value(&self) -> Value {
        let num = |x: f64| {
            if x.fract() == 0.0 && x.abs() < 9.0e15 {
                Value::from(x as i64)
            } else {
                Value::from(x)
            }
        };
        Value::Object(
            self.intervals
                .iter()
                .map(|(v, &(l, r))| (v.clone(), Value::Array(vec![num(l), num(r)])))
                .collect(),
        )
    }

    pub fn from_json(s: &str) -> Result<IntervalRep, IntervalError> {
        let bad = |m: String| IntervalError::InvalidRepresentation(m);
        let v: Value = serde_json::from_str(s).map_err(|e| bad(e.to_string()))?;
        let obj = v.as_object().ok_or_else(|| bad("expected an object".into()))?;
        let mut intervals = BTreeMap::new();
        for (name, iv) in obj {
            let pair = iv
                .as_array()
                .filter(|a| a.len() == 2)
                .and_then(|a| Some((a[0].as_f64()?, a[1].as_f64()?)))
                .ok_or_else(|| bad(format!("{name}: expected [left, right]")))?;
            if pair.0 > pair.1 {
                return Err(bad(format!("{name}: left endpoint exceeds right endpoint")));
            }
            intervals.insert(name.clone(), pair);
        }
        Ok(IntervalRep { intervals })
    }
}

/// Lexicographic breadth-first search order.
pub fn lex_bfs(g: &Graph) -> Vec<usize> {
    let n = g.num_vertices();
    let mut label: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for step in 0..n {
        let v = (0..n)
            .filter(|&v| !done[v])
            .max_by(|&a, &b| label[a].cmp(&label[b]).then(b.cmp(&a)))
            .unwrap();
        done[v] = true;
        order.push(v);
        for w in g.neighbors(v) {
            if !done[w] {
                label[w].push(n - step);
            }
        }
    }
    order
}

/// Maximal cliques as sorted vertex lists, or None when `g` is not chordal.
pub fn maximal_cliques(g: &Graph) -> Option<Vec<Vec<usize>>> {
    let n = g.num_vertices();
    // reverse LexBFS is a perfect elimination ordering iff g is chordal
    let mut peo = lex_bfs(g);
    peo.reverse();
    let mut pos = vec![0; n];
    for (i, &v) in peo.iter().enumerate() {
        pos[v] = i;
    }
    let mut candidates: Vec<BTreeSet<usize>> = Vec::with_capacity(n);
    for &v in &peo {
        let later: Vec<usize> = g.neighbors(v).filter(|&w| pos[w] > pos[v]).collect();
        if let Some(&p) = later.iter().min_by_key(|&&w| pos[w]) {
            if later.iter().any(|&w| w != p && !g.adjacent(w, p)) {
                return None;
            }
        }
        let mut c: BTreeSet<usize> = later.into_iter().collect();
        c.insert(v);
        candidates.push(c);
    }
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        let dominated = candidates
            .iter()
            .enumerate()
            .any(|(j, d)| j != i && c.is_subset(d) && (c.len() < d.len() || j < i));
        if !dominated {
            out.push(c.iter().copied().collect());
        }
    }
    out.sort();
    Some(out)
}

const ROOT: &str = "#root";

fn root() -> Label {
    Label::new(ROOT)
}

/// Linear order of non-special leaves read from a circular order broken at
/// the special leaf.
fn break_at_root(o: &CircularOrder) -> Vec<Label> {
    let seq = o.as_slice();
    let at = seq.iter().position(|l| l.as_str() == ROOT).expect("special leaf");
    seq[at + 1..].iter().chain(&seq[..at]).cloned().collect()
}

/// Interval representation with I(v) = [first, last] clique position.
fn rep_from_positions(g: &Graph, cliques: &[Vec<usize>], position: &[usize]) -> IntervalRep {
    let mut intervals = BTreeMap::new();
    for (c, members) in cliques.iter().enumerate() {
        for &v in members {
            let p = position[c] as f64;
            let e = intervals.entry(g.name(v).to_string()).or_insert((p, p));
            e.0 = e.0.min(p);
            e.1 = e.1.max(p);
        }
    }
    IntervalRep { intervals }
}

fn vertex_sets(cliques: &[Vec<usize>], n: usize, tag: &str) -> Vec<BTreeSet<Label>> {
    let mut sets = vec![BTreeSet::new(); n];
    for (i, c) in cliques.iter().enumerate() {
        for &v in c {
            sets[v].insert(Label::new(format!("{tag}{i}")));
        }
    }
    sets
}

fn clique_leaves(k: usize, tag: &str) -> BTreeSet<Label> {
    let mut leaves: BTreeSet<Label> = (0..k).map(|i| Label::new(format!("{tag}{i}"))).collect();
    leaves.insert(root());
    leaves
}

/// Rooted PQ-tree (special leaf `#root`) of all v-consecutive clique orders.
pub fn clique_tree(g: &Graph, cliques: &[Vec<usize>], tag: &str) -> PQTree {
    let sets = vertex_sets(cliques, g.num_vertices(), tag);
    PQTree::from_consecutive_sets(clique_leaves(cliques.len(), tag), &sets).expect("sets within the leaves")
}

pub fn recognize_interval(g: &Graph) -> Option<IntervalRep> {
    let cliques = maximal_cliques(g)?;
    let t = clique_tree(g, &cliques, "");
    if t.is_null() {
        return None;
    }
    let order = break_at_root(&t.frontier());
    let mut position = vec![0; cliques.len()];
    for (k, l) in order.iter().enumerate() {
        position[l.as_str().parse::<usize>().expect("clique label")] = k + 1;
    }
    Some(rep_from_positions(g, &cliques, &position))
}

/// Both graphs induce the same graph on their common vertices.
pub fn same_common_subgraph(g1: &Graph, g2: &Graph) -> bool {
    let common: Vec<&String> = g1.names().iter().filter(|v| g2.vertex(v).is_some()).collect();
    common.iter().enumerate().all(|(i, u)| {
        common[i + 1..].iter().all(|v| {
            let a = g1.adjacent(g1.vertex(u).unwrap(), g1.vertex(v).unwrap());
            let b = g2.adjacent(g2.vertex(u).unwrap(), g2.vertex(v).unwrap());
            a == b
        })
    })
}

/// The instance T -> T1, T -> T2 over the tagged clique union ("1:i", "2:j").
pub fn simultaneous_instance(
    g1: &Graph,
    c1: &[Vec<usize>],
    g2: &Graph,
    c2: &[Vec<usize>],
) -> Instance {
    let t1 = clique_tree(g1, c1, "1:");
    let t2 = clique_tree(g2, c2, "2:");
    let s1 = vertex_sets(c1, g1.num_vertices(), "1:");
    let s2 = vertex_sets(c2, g2.num_vertices(), "2:");
    let mut common = Vec::new();
    for (v, name) in g1.names().iter().enumerate() {
        if let Some(w) = g2.vertex(name) {
            common.push(s1[v].union(&s2[w]).cloned().collect::<BTreeSet<Label>>());
        }
    }
    let mut leaves = clique_leaves(c1.len(), "1:");
    leaves.extend(clique_leaves(c2.len(), "2:"));
    let t = PQTree::from_consecutive_sets(leaves, &common).expect("sets within the leaves");
    let arcs = vec![Arc::identity(0, 1, t1.leaf_set(), false), Arc::identity(0, 2, t2.leaf_set(), false)];
    Instance::build(vec!["T".into(), "T1".into(), "T2".into()], vec![t, t1, t2], arcs).expect("valid instance")
}

pub fn simultaneous_interval(
    g1: &Graph,
    g2: &Graph,
) -> Result<Option<(IntervalRep, IntervalRep)>, IntervalError> {
    if !same_common_subgraph(g1, g2) {
        return Ok(None);
    }
    let (Some(c1), Some(c2)) = (maximal_cliques(g1), maximal_cliques(g2)) else {
        return Ok(None);
    };
    let d = simultaneous_instance(g1, &c1, g2, &c2);
    let order = match solve(&d).map_err(|e| IntervalError::Solver(e.to_string()))? {
        SolveOutcome::Feasible(s) => break_at_root(&s.orders[0]),
        SolveOutcome::Infeasible(_) => return Ok(None),
        SolveOutcome::NotSupported { tree, .. } => {
            return Err(IntervalError::Internal(format!("instance not 1-critical at {tree}")))
        }
    };
    let mut p1 = vec![0; c1.len()];
    let mut p2 = vec![0; c2.len()];
    for (k, l) in order.iter().enumerate() {
        let (g, i) = l.as_str().split_once(':').expect("tagged clique");
        let i: usize = i.parse().expect("clique index");
        if g == "1" {
            p1[i] = k + 1;
        } else {
            p2[i] = k + 1;
        }
    }
    // common vertices span their cliques in both graphs
    let mut r1 = rep_from_positions(g1, &c1, &p1);
    let mut r2 = rep_from_positions(g2, &c2, &p2);
    for (v, iv) in r1.intervals.iter_mut() {
        if let Some(jv) = r2.intervals.get_mut(v) {
            let joined = (iv.0.min(jv.0), iv.1.max(jv.1));
            *iv = joined;
            *jv = joined;
        }
    }
    if !r1.represents(g1) || !r2.represents(g2) {
        return Err(IntervalError::Internal("clique order does not yield a representation".into()));
    }
    Ok(Some((r1, r2)))
}

/// The gadget graph G' with provenance of its marker and connector vertices.
#[derive(Clone, Debug)]
pub struct Gadget {
    pub graph: Graph,
    /// (L_i, M_i, R_i) per sorted endpoint.
    pub markers: Vec<[String; 3]>,
    pub connectors: Vec<String>,
    /// Sorted endpoints of the prescribed representation.
    pub signature: Signature,
}

fn check_partial(h: &Graph, rep: &IntervalRep) -> Result<Signature, IntervalError> {
    let bad = |m: &str| IntervalError::InvalidRepresentation(m.into());
    if rep.intervals.len() != h.num_vertices() || h.names().iter().any(|v| !rep.intervals.contains_key(v)) {
        return Err(bad("representation and graph have different vertex sets"));
    }
    let sig = rep.signature()?;
    if !rep.represents(h) {
        return Err(bad("intervals do not represent the graph"));
    }
    Ok(sig)
}

pub fn build_extension_gadget(h: &Graph, rep: &IntervalRep) -> Result<Gadget, IntervalError> {
    gadget_avoiding(h, rep, &BTreeSet::new())
}

fn gadget_avoiding(h: &Graph, rep: &IntervalRep, avoid: &BTreeSet<&str>) -> Result<Gadget, IntervalError> {
    let sig = check_partial(h, rep)?;
    let k = sig.len();
    let mut prefix = String::new();
    let clash = |p: &str| {
        (1..=k).any(|i| {
            ["L", "M", "R", "C"].iter().any(|m| {
                let name = format!("{p}{m}{i}");
                avoid.contains(name.as_str()) || h.vertex(&name).is_some()
            })
        })
    };
    while clash(&prefix) {
        prefix.push('_');
    }
    let mut g = Graph::new();
    for v in h.names() {
        g.add_vertex(v).expect("valid name");
    }
    for &(u, v) in h.edges() {
        g.add_edge(h.name(u), h.name(v)).expect("simple");
    }
    let points: Vec<f64> = sig
        .iter()
        .map(|e| {
            let (l, r) = rep.intervals[&e.vertex];
            if e.right {
                r
            } else {
                l
            }
        })
        .collect();
    let mut markers = Vec::with_capacity(k);
    let mut connectors = Vec::with_capacity(k.saturating_sub(1));
    for (i, &p) in points.iter().enumerate() {
        let m = [format!("{prefix}L{}", i + 1), format!("{prefix}M{}", i + 1), format!("{prefix}R{}", i + 1)];
        g.add_edge(&m[1], &m[0]).expect("fresh");
        g.add_edge(&m[1], &m[2]).expect("fresh");
        for (v, &(l, r)) in &rep.intervals {
            if l < p && p <= r {
                g.add_edge(&m[0], v).expect("fresh");
            }
            if l <= p && p <= r {
                g.add_edge(&m[1], v).expect("fresh");
            }
            if l <= p && p < r {
                g.add_edge(&m[2], v).expect("fresh");
            }
        }
        markers.push(m);
    }
    for i in 0..k.saturating_sub(1) {
        let c = format!("{prefix}C{}", i + 1);
        g.add_edge(&c, &markers[i][2]).expect("fresh");
        g.add_edge(&c, &markers[i + 1][0]).expect("fresh");
        // intervals spanning the gap between p_i and p_{i+1}
        for (v, &(l, r)) in &rep.intervals {
            if l <= points[i] && points[i] < r {
                g.add_edge(&c, v).expect("fresh");
            }
        }
        connectors.push(c);
    }
    Ok(Gadget { graph: g, markers, connectors, signature: sig })
}

/// Coordinates for an endpoint sequence: prescribed values are kept, the
/// others are spread evenly between their pinned neighbours.
pub fn pin_endpoints(seq: &[Option<f64>]) -> Vec<f64> {
    let pinned: Vec<usize> = (0..seq.len()).filter(|&i| seq[i].is_some()).collect();
    let mut out = vec![0.0; seq.len()];
    if pinned.is_empty() {
        for (i, x) in out.iter_mut().enumerate() {
            *x = (i + 1) as f64;
        }
        return out;
    }
    let first = pinned[0];
    let last = *pinned.last().unwrap();
    for i in 0..first {
        out[i] = seq[first].unwrap() - (first - i) as f64;
    }
    for i in last..seq.len() {
        out[i] = seq[last].unwrap() + (i - last) as f64;
    }
    for w in pinned.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (x, y) = (seq[a].unwrap(), seq[b].unwrap());
        for i in a..b {
            out[i] = x + (y - x) * (i - a) as f64 / (b - a) as f64;
        }
    }
    out
}

/// Representation of `g` that literally extends `rep` on V(H), or None.
pub fn extend_partial_interval(
    g: &Graph,
    h: &Graph,
    rep: &IntervalRep,
) -> Result<Option<IntervalRep>, IntervalError> {
    let sig = check_partial(h, rep)?;
    for v in h.names() {
        if g.vertex(v).is_none() {
            return Err(IntervalError::NotInduced(format!("{v} is not a vertex of G")));
        }
    }
    if !same_common_subgraph(g, h) {
        return Err(IntervalError::NotInduced("adjacency differs on V(H)".into()));
    }
    let avoid: BTreeSet<&str> = g.names().iter().map(String::as_str).collect();
    let gadget = gadget_avoiding(h, rep, &avoid)?;
    let Some((mut grid, marks)) = simultaneous_interval(g, &gadget.graph)? else {
        return Ok(None);
    };
    // the marker path may run right to left; mirror it
    if let (Some(first), Some(last)) = (gadget.markers.first(), gadget.markers.last()) {
        if marks.intervals[&first[1]].0 > marks.intervals[&last[1]].0 {
            for iv in grid.intervals.values_mut() {
                *iv = (-iv.1, -iv.0);
            }
        }
    }
    // break grid ties: lefts before rights, H endpoints in signature order
    let rank: BTreeMap<&Endpoint, usize> = sig.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let mut events: Vec<(f64, bool, usize, Endpoint)> = Vec::with_capacity(2 * grid.len());
    for (v, &(l, r)) in &grid.intervals {
        for (x, right) in [(l, false), (r, true)] {
            let e = Endpoint { vertex: v.clone(), right };
            let k = rank.get(&e).copied().unwrap_or(usize::MAX);
            events.push((x, right, k, e));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let seq: Vec<Option<f64>> = events
        .iter()
        .map(|(_, _, _, e)| {
            rep.intervals.get(&e.vertex).map(|&(l, r)| if e.right { r } else { l })
        })
        .collect();
    let prescribed: Vec<f64> = seq.iter().flatten().copied().collect();
    if prescribed.windows(2).any(|w| w[0] >= w[1]) {
        return Err(IntervalError::Internal("grid order contradicts the signature".into()));
    }
    let coords = pin_endpoints(&seq);
    let mut out = IntervalRep::default();
    for ((_, _, _, e), x) in events.iter().zip(coords) {
        let iv = out.intervals.entry(e.vertex.clone()).or_insert((x, x));
        if e.right {
            iv.1 = x;
        } else {
            iv.0 = x;
        }
    }
    if !out.represents(g) || h.names().iter().any(|v| out.intervals[v] != rep.intervals[v]) {
        return Err(IntervalError::Internal("extension failed verification".into()));
    }
    Ok(Some(out))
}
