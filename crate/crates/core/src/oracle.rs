//! Exhaustive reference implementations used by tests, the acceptance suite
//! and the CLI's `--oracle` mode. They never call the solver, the embedding
//! decomposition or the interval algorithms; tree order sets come from the
//! plain enumerator, which is itself checked against the consecutive filter.

use crate::embedding::RotationSystem;
use crate::graph::Graph;
use crate::instance::Instance;
use crate::interval::{pin_endpoints, Endpoint, IntervalRep};
use crate::orders::{CircularOrder, Label};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("invalid oracle input: {0}")]
    InvalidInput(String),
}

#[derive(Clone, Copy, Debug)]
pub struct OracleBudget {
    pub max_orders: u64,
    pub max_embeddings: u64,
    pub max_steps: u64,
    pub time_limit: Option<Duration>,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_orders: 50_000,
            max_embeddings: 2_000_000,
            max_steps: 50_000_000,
            time_limit: Some(Duration::from_secs(60)),
        }
    }
}

pub(crate) struct Meter {
    budget: OracleBudget,
    steps: u64,
    start: Instant,
}

impl Meter {
    pub(crate) fn new(budget: OracleBudget) -> Meter {
        Meter { budget, steps: 0, start: Instant::now() }
    }

    pub(crate) fn tick(&mut self) -> Result<(), OracleError> {
        self.steps += 1;
        if self.steps > self.budget.max_steps {
            return Err(OracleError::BudgetExceeded(format!("{} search steps", self.budget.max_steps)));
        }
        if self.steps % 4096 == 0 {
            if let Some(limit) = self.budget.time_limit {
                if self.start.elapsed() > limit {
                    return Err(OracleError::BudgetExceeded(format!("time limit {limit:?}")));
                }
            }
        }
        Ok(())
    }
}

/// Every circular order of `labels`.
pub fn all_circular_orders(labels: &BTreeSet<Label>) -> Vec<CircularOrder> {
    let v: Vec<Label> = labels.iter().cloned().collect();
    let Some((first, rest)) = v.split_first() else {
        return vec![CircularOrder::empty()];
    };
    let mut out = Vec::new();
    let mut rest = rest.to_vec();
    heap_permutations(&mut rest, &mut |perm| {
        let mut seq = Vec::with_capacity(perm.len() + 1);
        seq.push(first.clone());
        seq.extend_from_slice(perm);
        out.push(CircularOrder::new(seq).unwrap());
    });
    out
}

/// Calls `f` once for every permutation of `items` (Heap's algorithm).
pub fn heap_permutations<T: Clone>(items: &mut [T], f: &mut dyn FnMut(&[T])) {
    let n = items.len();
    let mut c = vec![0usize; n];
    f(items);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            f(items);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Circular orders of `labels` in which every set of `family` is consecutive.
pub fn consecutive_filter(
    labels: &BTreeSet<Label>,
    family: &[BTreeSet<Label>],
) -> BTreeSet<CircularOrder> {
    all_circular_orders(labels)
        .into_iter()
        .filter(|o| family.iter().all(|s| o.is_consecutive(s)))
        .collect()
}

/// Order a source order induces on an arc's target labels.
fn induced(source: &CircularOrder, inverse: &HashMap<&Label, &Label>, reversing: bool) -> CircularOrder {
    let seq: Vec<Label> =
        source.as_slice().iter().filter_map(|l| inverse.get(l).map(|t| (*t).clone())).collect();
    let o = CircularOrder::new(seq).expect("distinct labels");
    if reversing {
        o.reverse()
    } else {
        o
    }
}

/// Exhaustive search over the represented orders of every tree: arc
/// consistency filtering, then backtracking in topological order.
pub fn brute_force_simultaneous_orders(
    d: &Instance,
    budget: OracleBudget,
) -> Result<Option<Vec<CircularOrder>>, OracleError> {
    let mut meter = Meter::new(budget);
    let mut domains: Vec<Vec<CircularOrder>> = Vec::with_capacity(d.trees.len());
    for t in &d.trees {
        let orders = t
            .enumerate_orders(budget.max_orders)
            .map_err(|_| OracleError::BudgetExceeded(format!("more than {} orders", budget.max_orders)))?;
        domains.push(orders.into_iter().collect());
    }
    let inverses: Vec<HashMap<&Label, &Label>> =
        d.arcs.iter().map(|a| a.map.iter().map(|(t, s)| (s, t)).collect()).collect();
    loop {
        let mut changed = false;
        for (i, a) in d.arcs.iter().enumerate() {
            let images: Vec<CircularOrder> =
                domains[a.source].iter().map(|o| induced(o, &inverses[i], a.reversing)).collect();
            let targets: HashSet<&CircularOrder> = domains[a.target].iter().collect();
            let keep: Vec<bool> = images.iter().map(|o| targets.contains(o)).collect();
            let reached: HashSet<CircularOrder> =
                images.into_iter().zip(&keep).filter(|(_, k)| **k).map(|(o, _)| o).collect();
            let before = (domains[a.source].len(), domains[a.target].len());
            let mut k = keep.into_iter();
            domains[a.source].retain(|_| k.next().unwrap());
            domains[a.target].retain(|o| reached.contains(o));
            changed |= before != (domains[a.source].len(), domains[a.target].len());
            meter.tick()?;
        }
        if domains.iter().any(|dom| dom.is_empty()) {
            return Ok(None);
        }
        if !changed {
            break;
        }
    }
    let order = d.topological_order().expect("validated DAG");
    let rank: Vec<usize> = {
        let mut r = vec![0; order.len()];
        for (i, &t) in order.iter().enumerate() {
            r[t] = i;
        }
        r
    };
    // arcs checked once both endpoints are assigned: at the later endpoint
    let mut checks: Vec<Vec<usize>> = vec![Vec::new(); order.len()];
    for (i, a) in d.arcs.iter().enumerate() {
        checks[rank[a.source].max(rank[a.target])].push(i);
    }
    let mut chosen: Vec<Option<usize>> = vec![None; d.trees.len()];
    fn search(
        depth: usize,
        order: &[usize],
        d: &Instance,
        domains: &[Vec<CircularOrder>],
        checks: &[Vec<usize>],
        inverses: &[HashMap<&Label, &Label>],
        chosen: &mut Vec<Option<usize>>,
        meter: &mut Meter,
    ) -> Result<bool, OracleError> {
        if depth == order.len() {
            return Ok(true);
        }
        let t = order[depth];
        for i in 0..domains[t].len() {
            meter.tick()?;
            chosen[t] = Some(i);
            let ok = checks[depth].iter().all(|&ai| {
                let a = &d.arcs[ai];
                let s = &domains[a.source][chosen[a.source].unwrap()];
                let o = &domains[a.target][chosen[a.target].unwrap()];
                induced(s, &inverses[ai], a.reversing) == *o
            });
            if ok && search(depth + 1, order, d, domains, checks, inverses, chosen, meter)? {
                return Ok(true);
            }
        }
        chosen[t] = None;
        Ok(false)
    }
    if search(0, &order, d, &domains, &checks, &inverses, &mut chosen, &mut meter)? {
        Ok(Some(
            chosen.iter().enumerate().map(|(t, c)| domains[t][c.unwrap()].clone()).collect(),
        ))
    } else {
        Ok(None)
    }
}

/// A circular order of `leaves` realizing every triple of `delta`, if any.
pub fn brute_force_cyclic_ordering(
    leaves: &BTreeSet<Label>,
    delta: &[[Label; 3]],
    budget: OracleBudget,
) -> Result<Option<CircularOrder>, OracleError> {
    let mut meter = Meter::new(budget);
    let wanted: Vec<(BTreeSet<Label>, CircularOrder)> = delta
        .iter()
        .map(|t| (t.iter().cloned().collect(), CircularOrder::new(t.to_vec()).expect("distinct")))
        .collect();
    for o in all_circular_orders(leaves) {
        meter.tick()?;
        if wanted.iter().all(|(s, w)| o.restrict(s) == *w) {
            return Ok(Some(o));
        }
    }
    Ok(None)
}

/// Number of rotation systems of `g`: the product of (deg - 1)!.
pub fn rotation_system_count(g: &Graph) -> u128 {
    (0..g.num_vertices())
        .map(|v| (1..g.degree(v).max(1) as u128).product::<u128>())
        .product()
}

/// Every planar rotation system of `g`: all combinations of per-vertex
/// circular orders, kept when the traced faces satisfy Euler's formula.
pub fn brute_force_embeddings(g: &Graph, budget: OracleBudget) -> Result<Vec<RotationSystem>, OracleError> {
    let total = rotation_system_count(g);
    if total > budget.max_embeddings as u128 {
        return Err(OracleError::BudgetExceeded(format!("{total} rotation systems")));
    }
    let mut meter = Meter::new(budget);
    let n = g.num_vertices();
    let m = g.num_edges();
    let options: Vec<Vec<Vec<usize>>> = (0..n)
        .map(|v| {
            let mut es = g.incident(v).to_vec();
            es.sort_unstable();
            let Some((&first, rest)) = es.split_first() else { return vec![Vec::new()] };
            let mut rest = rest.to_vec();
            let mut out = Vec::new();
            heap_permutations(&mut rest, &mut |p| {
                let mut seq = vec![first];
                seq.extend_from_slice(p);
                out.push(seq);
            });
            out
        })
        .collect();
    // Euler target: faces = 2c - n + m, isolated vertices contribute no darts
    let mut comp = vec![usize::MAX; n];
    let mut c = 0;
    let mut isolated = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        if g.degree(s) == 0 {
            isolated += 1;
        }
        comp[s] = c;
        let mut stack = vec![s];
        while let Some(x) = stack.pop() {
            for y in g.neighbors(x) {
                if comp[y] == usize::MAX {
                    comp[y] = c;
                    stack.push(y);
                }
            }
        }
        c += 1;
    }
    let target = (2 * c + m) as i64 - n as i64 - isolated as i64;
    let mut next = vec![0usize; 2 * m];
    let set_vertex = |v: usize, seq: &[usize], next: &mut Vec<usize>| {
        for (k, &e) in seq.iter().enumerate() {
            let f = seq[(k + 1) % seq.len()];
            let inbound = if g.endpoints(e).1 == v { 2 * e } else { 2 * e + 1 };
            let outbound = if g.endpoints(f).0 == v { 2 * f } else { 2 * f + 1 };
            next[inbound] = outbound;
        }
    };
    let mut choice = vec![0usize; n];
    for v in 0..n {
        set_vertex(v, &options[v][0], &mut next);
    }
    let mut stamp = vec![0u64; 2 * m];
    let mut round = 0u64;
    let mut out = Vec::new();
    loop {
        meter.tick()?;
        round += 1;
        let mut faces = 0i64;
        for d in 0..2 * m {
            if stamp[d] == round {
                continue;
            }
            faces += 1;
            let mut x = d;
            while stamp[x] != round {
                stamp[x] = round;
                x = next[x];
            }
        }
        if faces == target {
            let rot: Vec<Vec<usize>> = (0..n).map(|v| options[v][choice[v]].clone()).collect();
            out.push(RotationSystem::from_edge_ids(g, &rot));
        }
        let mut v = 0;
        loop {
            if v == n {
                return Ok(out);
            }
            choice[v] += 1;
            if choice[v] < options[v].len() {
                set_vertex(v, &options[v][choice[v]], &mut next);
                break;
            }
            choice[v] = 0;
            set_vertex(v, &options[v][0], &mut next);
            v += 1;
        }
    }
}

/// Maximal cliques by Bron-Kerbosch, as sorted vertex lists in sorted order.
pub fn brute_force_maximal_cliques(g: &Graph) -> Vec<Vec<usize>> {
    fn grow(g: &Graph, r: &mut Vec<usize>, p: Vec<usize>, x: Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if p.is_empty() && x.is_empty() {
            let mut c = r.clone();
            c.sort_unstable();
            out.push(c);
            return;
        }
        let mut p = p;
        let mut x = x;
        while let Some(v) = p.pop() {
            r.push(v);
            let np = p.iter().copied().filter(|&w| g.adjacent(v, w)).collect();
            let nx = x.iter().copied().filter(|&w| g.adjacent(v, w)).collect();
            grow(g, r, np, nx, out);
            r.pop();
            x.push(v);
        }
    }
    let mut out = Vec::new();
    grow(g, &mut Vec::new(), (0..g.num_vertices()).collect(), Vec::new(), &mut out);
    out.sort();
    out
}

/// Interval representation from a permutation of the maximal cliques in
/// which every vertex occupies a contiguous run, if one exists.
pub fn brute_force_interval(g: &Graph, budget: OracleBudget) -> Result<Option<IntervalRep>, OracleError> {
    let cliques = brute_force_maximal_cliques(g);
    // an interval graph has at most n maximal cliques
    if cliques.len() > g.num_vertices() {
        return Ok(None);
    }
    let total: u64 = (1..=cliques.len() as u64).product();
    if total > budget.max_orders {
        return Err(OracleError::BudgetExceeded(format!("{total} clique orders")));
    }
    let mut idx: Vec<usize> = (0..cliques.len()).collect();
    let mut found: Option<Vec<usize>> = None;
    heap_permutations(&mut idx, &mut |perm| {
        if found.is_some() {
            return;
        }
        let ok = (0..g.num_vertices()).all(|v| {
            let hits: Vec<usize> = (0..perm.len()).filter(|&k| cliques[perm[k]].contains(&v)).collect();
            hits.is_empty() || hits[hits.len() - 1] - hits[0] + 1 == hits.len()
        });
        if ok {
            found = Some(perm.to_vec());
        }
    });
    Ok(found.map(|perm| {
        let mut intervals = BTreeMap::new();
        for (k, &c) in perm.iter().enumerate() {
            for &v in &cliques[c] {
                let p = (k + 1) as f64;
                let e = intervals.entry(g.name(v).to_string()).or_insert((p, p));
                e.1 = p;
            }
        }
        IntervalRep { intervals }
    }))
}

/// Left-to-right sweep over endpoint events of the union of the vertices of
/// `graphs`. A state records which vertices have started and which have
/// ended; two vertices that lie in a common graph must overlap exactly when
/// they are adjacent there. `forced` fixes the relative order of the events
/// of its vertices.
fn sweep(graphs: &[&Graph], forced: Option<&[Endpoint]>, budget: OracleBudget) -> Result<Option<Vec<Endpoint>>, OracleError> {
    let mut names: Vec<String> = graphs.iter().flat_map(|g| g.names().iter().cloned()).collect();
    names.sort();
    names.dedup();
    let n = names.len();
    if n > 30 {
        return Err(OracleError::BudgetExceeded(format!("{n} vertices")));
    }
    // rel: 0 unrelated, 1 must overlap, 2 must be disjoint
    let mut rel = vec![vec![0u8; n]; n];
    for g in graphs {
        let ids: Vec<Option<usize>> = names.iter().map(|v| g.vertex(v)).collect();
        for a in 0..n {
            for b in 0..n {
                if let (Some(x), Some(y)) = (ids[a], ids[b]) {
                    if a == b {
                        continue;
                    }
                    let want = if g.adjacent(x, y) { 1 } else { 2 };
                    if rel[a][b] != 0 && rel[a][b] != want {
                        return Ok(None);
                    }
                    rel[a][b] = want;
                }
            }
        }
    }
    let forced: Vec<(usize, bool)> = match forced {
        Some(f) => f
            .iter()
            .map(|e| {
                names
                    .binary_search(&e.vertex)
                    .map(|i| (i, e.right))
                    .map_err(|_| OracleError::InvalidInput(format!("unknown vertex {}", e.vertex)))
            })
            .collect::<Result<_, _>>()?,
        None => Vec::new(),
    };
    let in_forced: Vec<bool> = (0..n).map(|v| forced.iter().any(|&(u, _)| u == v)).collect();
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut meter = Meter::new(budget);
    let mut dead: HashSet<(u32, u32)> = HashSet::new();
    let mut path: Vec<(usize, bool)> = Vec::new();
    #[allow(clippy::too_many_arguments)]
    fn go(
        started: u32,
        ended: u32,
        full: u32,
        n: usize,
        rel: &[Vec<u8>],
        forced: &[(usize, bool)],
        in_forced: &[bool],
        dead: &mut HashSet<(u32, u32)>,
        path: &mut Vec<(usize, bool)>,
        meter: &mut Meter,
    ) -> Result<bool, OracleError> {
        if ended == full {
            return Ok(true);
        }
        if dead.contains(&(started, ended)) {
            return Ok(false);
        }
        meter.tick()?;
        let done_forced = forced
            .iter()
            .filter(|&&(v, r)| if r { ended >> v & 1 == 1 } else { started >> v & 1 == 1 })
            .count();
        let next = forced.get(done_forced).copied();
        for v in 0..n {
            let bit = 1u32 << v;
            let allowed = |right: bool| !in_forced[v] || next == Some((v, right));
            if started & bit == 0 && allowed(false) {
                let ok = (0..n).all(|a| {
                    let active = started >> a & 1 == 1 && ended >> a & 1 == 0;
                    let over = ended >> a & 1 == 1;
                    !(active && rel[v][a] == 2) && !(over && rel[v][a] == 1)
                });
                if ok {
                    path.push((v, false));
                    if go(started | bit, ended, full, n, rel, forced, in_forced, dead, path, meter)? {
                        return Ok(true);
                    }
                    path.pop();
                }
            } else if started & bit != 0 && ended & bit == 0 && allowed(true) {
                let ok = (0..n).all(|a| rel[v][a] != 1 || started >> a & 1 == 1);
                if ok {
                    path.push((v, true));
                    if go(started, ended | bit, full, n, rel, forced, in_forced, dead, path, meter)? {
                        return Ok(true);
                    }
                    path.pop();
                }
            }
        }
        dead.insert((started, ended));
        Ok(false)
    }
    if go(0, 0, full, n, &rel, &forced, &in_forced, &mut dead, &mut path, &mut meter)? {
        Ok(Some(path.into_iter().map(|(v, right)| Endpoint { vertex: names[v].clone(), right }).collect()))
    } else {
        Ok(None)
    }
}

fn rep_from_events(events: &[Endpoint], coords: &[f64], keep: &Graph) -> IntervalRep {
    let mut intervals: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for (e, &x) in events.iter().zip(coords) {
        if keep.vertex(&e.vertex).is_none() {
            continue;
        }
        let iv = intervals.entry(e.vertex.clone()).or_insert((x, x));
        if e.right {
            iv.1 = x;
        } else {
            iv.0 = x;
        }
    }
    IntervalRep { intervals }
}

/// Interval representation by the endpoint sweep.
pub fn sweep_interval(g: &Graph, budget: OracleBudget) -> Result<Option<IntervalRep>, OracleError> {
    let Some(ev) = sweep(&[g], None, budget)? else { return Ok(None) };
    let coords: Vec<f64> = (1..=ev.len()).map(|i| i as f64).collect();
    Ok(Some(rep_from_events(&ev, &coords, g)))
}

/// Simultaneous representations by the endpoint sweep over both graphs.
pub fn brute_force_simultaneous_interval(
    g1: &Graph,
    g2: &Graph,
    budget: OracleBudget,
) -> Result<Option<(IntervalRep, IntervalRep)>, OracleError> {
    let Some(ev) = sweep(&[g1, g2], None, budget)? else { return Ok(None) };
    let coords: Vec<f64> = (1..=ev.len()).map(|i| i as f64).collect();
    Ok(Some((rep_from_events(&ev, &coords, g1), rep_from_events(&ev, &coords, g2))))
}

/// Representation of `g` extending `rep` on V(H), by the endpoint sweep with
/// the events of V(H) forced into the signature of `rep`.
pub fn brute_force_extension(
    g: &Graph,
    h: &Graph,
    rep: &IntervalRep,
    budget: OracleBudget,
) -> Result<Option<IntervalRep>, OracleError> {
    let sig = rep.signature().map_err(|e| OracleError::InvalidInput(e.to_string()))?;
    if !rep.represents(h) {
        return Err(OracleError::InvalidInput("intervals do not represent H".into()));
    }
    let Some(ev) = sweep(&[g, h], Some(&sig), budget)? else { return Ok(None) };
    let seq: Vec<Option<f64>> = ev
        .iter()
        .map(|e| rep.intervals.get(&e.vertex).map(|&(l, r)| if e.right { r } else { l }))
        .collect();
    let coords = pin_endpoints(&seq);
    Ok(Some(rep_from_events(&ev, &coords, g)))
}
