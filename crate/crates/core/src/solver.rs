//! Decides simultaneous PQ-ordering on 1-critical instances: Q-constraints
//! as 2-SAT, critical double arcs via the permutation lemmas, then orders
//! chosen bottom-up through the expansion graph.

use crate::expansion::{build_expansion_graph, ExpansionConfig, ExpansionError, ExpansionGraph};
use crate::instance::{Instance, InstanceError};
use crate::orders::{
    is_suborder, order_preserving_witness, order_reversing_witness, CircularOrder, Label,
};
use crate::pqtree::{classify_fixedness, NodeId, NodeKind, PQError, PQTree};
use serde_json::json;
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Tree(#[from] PQError),
    #[error("expansion graph size {size} exceeds budget {bound}")]
    BudgetExceeded { size: usize, bound: usize },
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InfeasibleReason {
    NullTree,
    QConstraints,
    DoubleArc,
}

impl InfeasibleReason {
    pub fn name(&self) -> &'static str {
        match self {
            InfeasibleReason::NullTree => "NullTree",
            InfeasibleReason::QConstraints => "QConstraints",
            InfeasibleReason::DoubleArc => "DoubleArc",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    /// One order per tree, indexed like the instance.
    pub orders: Vec<CircularOrder>,
    /// Orientation of every Q-node: true keeps the stored neighbor order.
    pub q_assignment: BTreeMap<(usize, NodeId), bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    Feasible(Solution),
    Infeasible(InfeasibleReason),
    /// The instance is not 1-critical.
    NotSupported { tree: String, pnode: NodeId },
}

impl SolveOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, SolveOutcome::Feasible(_))
    }

    pub fn to_json_value(&self, d: &Instance) -> serde_json::Value {
        match self {
            SolveOutcome::Feasible(s) => {
                let orders: BTreeMap<&str, &[Label]> = d
                    .names
                    .iter()
                    .zip(&s.orders)
                    .map(|(n, o)| (n.as_str(), o.as_slice()))
                    .collect();
                let q: BTreeMap<String, bool> = s
                    .q_assignment
                    .iter()
                    .filter(|((t, _), _)| *t < d.trees.len())
                    .map(|((t, x), v)| (format!("{}/{}", d.names[*t], x), *v))
                    .collect();
                json!({"status": "feasible", "orders": orders, "qAssignment": q})
            }
            SolveOutcome::Infeasible(r) => json!({"status": "infeasible", "reason": r.name()}),
            SolveOutcome::NotSupported { tree, pnode } => json!({
                "status": "not-supported", "reason": "NotOneCritical", "tree": tree, "pnode": pnode
            }),
        }
    }
}

/// 2-SAT over variables 0..n; literal 2v is v, 2v+1 is ¬v.
#[derive(Clone, Debug, Default)]
pub struct TwoSat {
    pub n: usize,
    pub clauses: Vec<(usize, usize)>,
}

impl TwoSat {
    pub fn new(n: usize) -> TwoSat {
        TwoSat { n, clauses: Vec::new() }
    }

    pub fn lit(v: usize, value: bool) -> usize {
        2 * v + usize::from(!value)
    }

    pub fn add_clause(&mut self, a: usize, b: usize) {
        self.clauses.push((a, b));
    }

    /// x ⊕ y = differ.
    pub fn add_relation(&mut self, x: usize, y: usize, differ: bool) {
        self.add_clause(Self::lit(x, true), Self::lit(y, differ));
        self.add_clause(Self::lit(x, false), Self::lit(y, !differ));
    }

    /// Assignment from the implication graph's strongly connected components
    /// (Tarjan), or None when some x and ¬x share a component.
    pub fn solve(&self) -> Option<Vec<bool>> {
        let m = 2 * self.n;
        let mut adj = vec![Vec::new(); m];
        for &(a, b) in &self.clauses {
            adj[a ^ 1].push(b);
            adj[b ^ 1].push(a);
        }
        let comp = tarjan(&adj);
        let mut out = Vec::with_capacity(self.n);
        for v in 0..self.n {
            let (t, f) = (comp[2 * v], comp[2 * v + 1]);
            if t == f {
                return None;
            }
            // Tarjan numbers components in reverse topological order
            out.push(t < f);
        }
        Some(out)
    }
}

fn tarjan(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut comp = vec![usize::MAX; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut counter = 0;
    let mut ncomp = 0;
    for s in 0..n {
        if index[s] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(s, 0)];
        index[s] = counter;
        low[s] = counter;
        counter += 1;
        stack.push(s);
        on_stack[s] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < adj[v].len() {
                let w = adj[v][*i];
                *i += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(p, _)) = call.last() {
                    low[p] = low[p].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    comp
}

/// One variable per Q-node of every tree; one relation per fixed Q-node and
/// fixing arc.
#[derive(Clone, Debug, Default)]
pub struct QConstraintSystem {
    pub vars: Vec<(usize, NodeId)>,
    pub index: HashMap<(usize, NodeId), usize>,
    /// (x, y, differ)
    pub relations: Vec<(usize, usize, bool)>,
}

impl QConstraintSystem {
    pub fn to_two_sat(&self) -> TwoSat {
        let mut s = TwoSat::new(self.vars.len());
        for &(x, y, differ) in &self.relations {
            s.add_relation(x, y, differ);
        }
        s
    }
}

pub fn collect_q_constraints(d: &Instance) -> Result<QConstraintSystem, PQError> {
    let mut sys = QConstraintSystem::default();
    for (t, tree) in d.trees.iter().enumerate() {
        for x in tree.q_nodes() {
            sys.index.insert((t, x), sys.vars.len());
            sys.vars.push((t, x));
        }
    }
    for a in &d.arcs {
        let parent = &d.trees[a.source];
        if parent.q_nodes().next().is_none() || d.trees[a.target].is_null() {
            continue;
        }
        let rep = classify_fixedness(parent, &a.map, &d.trees[a.target])?;
        for (&x, &(eta, agree)) in &rep.representative {
            sys.relations.push((sys.index[&(a.source, x)], sys.index[&(a.target, eta)], agree == a.reversing));
        }
    }
    Ok(sys)
}

/// Witness order for the target of every critical double arc.
pub fn check_double_arcs(g: &ExpansionGraph) -> Option<BTreeMap<usize, CircularOrder>> {
    let mut out = BTreeMap::new();
    for da in &g.double_arcs {
        let w = if da.mixed {
            order_reversing_witness(&da.permutation)
        } else {
            order_preserving_witness(&da.permutation)
        }?;
        out.insert(da.target, w);
    }
    Some(out)
}

/// Inserts the elements of `b` missing from `a` right after their nearest
/// predecessor in `b` that is already placed.
fn merge_cyclic(a: &[usize], b: &[usize]) -> Result<Vec<usize>, SolverError> {
    if a.is_empty() {
        return Ok(b.to_vec());
    }
    let in_a: std::collections::HashSet<usize> = a.iter().copied().collect();
    let common: Vec<usize> = b.iter().copied().filter(|x| in_a.contains(x)).collect();
    if common.len() >= 3 {
        let pos: HashMap<usize, usize> = a.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let p: Vec<usize> = common.iter().map(|x| pos[x]).collect();
        let descents = (0..p.len()).filter(|&i| p[i] > p[(i + 1) % p.len()]).count();
        if descents != 1 {
            return Err(SolverError::InternalInconsistency(
                "children induce different orders on commonly fixed edges".into(),
            ));
        }
    }
    let mut out = a.to_vec();
    let Some(start) = b.iter().position(|x| in_a.contains(x)) else {
        out.extend_from_slice(b);
        return Ok(out);
    };
    let mut after = b[start];
    for k in 1..b.len() {
        let x = b[(start + k) % b.len()];
        if in_a.contains(&x) {
            after = x;
        } else {
            let at = out.iter().position(|&y| y == after).unwrap();
            out.insert(at + 1, x);
            after = x;
        }
    }
    Ok(out)
}

/// Leaf order of `t` given a cyclic order of neighbor slots for every inner
/// node.
fn traverse(t: &PQTree, slot_order: &[Vec<usize>]) -> CircularOrder {
    let nodes = t.nodes();
    if nodes.len() <= 1 {
        return t.frontier();
    }
    let mut seq = Vec::with_capacity(t.num_leaves());
    seq.push(nodes[0].label().unwrap().clone());
    let mut stack = vec![(nodes[0].neighbors[0], 0usize)];
    while let Some((x, from)) = stack.pop() {
        if let Some(l) = nodes[x].label() {
            seq.push(l.clone());
            continue;
        }
        let nb = &nodes[x].neighbors;
        let ord = &slot_order[x];
        let p = nb.iter().position(|&y| y == from).unwrap();
        let at = ord.iter().position(|&s| s == p).unwrap();
        for k in (1..ord.len()).rev() {
            stack.push((nb[ord[(at + k) % ord.len()]], x));
        }
    }
    CircularOrder::new(seq).expect("traversal visits every leaf once")
}

/// Orders bottom-up: children first, fixed P-node edges from the (at most
/// two) fixing children, Q-nodes from the assignment, the rest in slot order.
pub fn extend_orders_bottom_up(
    g: &ExpansionGraph,
    q: &BTreeMap<(usize, NodeId), bool>,
    double_arc_orders: &BTreeMap<usize, CircularOrder>,
) -> Result<Vec<CircularOrder>, SolverError> {
    let d = &g.instance;
    let order = d.topological_order()?;
    let out_arcs = d.out_arcs();
    let mut orders: Vec<Option<CircularOrder>> = vec![None; d.trees.len()];
    for &t in order.iter().rev() {
        if let Some(w) = double_arc_orders.get(&t) {
            orders[t] = Some(w.clone());
            continue;
        }
        let tree = &d.trees[t];
        let n = tree.nodes().len();
        let mut fixed_orders: Vec<Vec<Vec<usize>>> = vec![Vec::new(); n];
        for &a in &out_arcs[t] {
            let arc = &d.arcs[a];
            let info = &g.infos[a];
            let child = orders[arc.target].as_ref().expect("children come first");
            let pos: HashMap<&Label, usize> =
                child.as_slice().iter().enumerate().map(|(i, l)| (l, i)).collect();
            for x in tree.p_nodes() {
                if !info.is_fixed(x) {
                    continue;
                }
                let mut slots: Vec<(usize, usize)> = info.reps[x]
                    .iter()
                    .enumerate()
                    .filter_map(|(s, r)| r.as_ref().map(|r| (pos[r], s)))
                    .collect();
                slots.sort_unstable();
                let mut seq: Vec<usize> = slots.into_iter().map(|(_, s)| s).collect();
                if arc.reversing {
                    seq.reverse();
                }
                fixed_orders[x].push(seq);
            }
        }
        let mut slot_order = vec![Vec::new(); n];
        for x in tree.inner_nodes() {
            let deg = tree.degree(x);
            slot_order[x] = match tree.node(x).kind {
                NodeKind::Q => {
                    if q.get(&(t, x)).copied().unwrap_or(true) {
                        (0..deg).collect()
                    } else {
                        (0..deg).rev().collect()
                    }
                }
                _ => {
                    let mut merged = Vec::new();
                    for seq in &fixed_orders[x] {
                        merged = merge_cyclic(&merged, seq)?;
                    }
                    let placed: std::collections::HashSet<usize> = merged.iter().copied().collect();
                    merged.extend((0..deg).filter(|s| !placed.contains(s)));
                    merged
                }
            };
        }
        orders[t] = Some(traverse(tree, &slot_order));
    }
    Ok(orders.into_iter().map(|o| o.unwrap()).collect())
}

/// Independent check: every order is represented by its tree and every arc's
/// (reversed) suborder relation holds.
pub fn verify_solution(d: &Instance, orders: &[CircularOrder]) -> bool {
    if orders.len() != d.trees.len() {
        return false;
    }
    for (t, o) in d.trees.iter().zip(orders) {
        if &o.label_set() != t.leaf_set() || !t.contains_order(o) {
            return false;
        }
    }
    d.arcs.iter().all(|a| {
        is_suborder(&orders[a.source], &orders[a.target], &a.map, a.reversing).unwrap_or(false)
    })
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub outcome: SolveOutcome,
    pub graph: Option<ExpansionGraph>,
    pub two_fixed: bool,
}

pub fn solve(d: &Instance) -> Result<SolveOutcome, SolverError> {
    Ok(solve_with(d, ExpansionConfig::default())?.outcome)
}

pub fn solve_with(d: &Instance, config: ExpansionConfig) -> Result<SolveReport, SolverError> {
    let n = d.normalize()?;
    let done = |outcome, graph, two_fixed| Ok(SolveReport { outcome, graph, two_fixed });
    if n.instance.trees.iter().any(|t| t.is_null()) {
        return done(SolveOutcome::Infeasible(InfeasibleReason::NullTree), None, false);
    }
    let two_fixed = n.fixedness().is_2_fixed();
    let g = match build_expansion_graph(&n, config) {
        Ok(g) => g,
        Err(ExpansionError::NotOneCritical { tree, pnode }) => {
            return done(SolveOutcome::NotSupported { tree, pnode }, None, two_fixed)
        }
        Err(ExpansionError::BudgetExceeded { size, bound }) => {
            return Err(SolverError::BudgetExceeded { size, bound })
        }
        Err(ExpansionError::InvariantViolated(m)) => return Err(SolverError::InternalInconsistency(m)),
        Err(ExpansionError::Tree(e)) => return Err(e.into()),
    };
    if g.instance.trees.iter().any(|t| t.is_null()) {
        return done(SolveOutcome::Infeasible(InfeasibleReason::NullTree), Some(g), two_fixed);
    }
    let sys = collect_q_constraints(&g.instance)?;
    let Some(assignment) = sys.to_two_sat().solve() else {
        return done(SolveOutcome::Infeasible(InfeasibleReason::QConstraints), Some(g), two_fixed);
    };
    let q: BTreeMap<(usize, NodeId), bool> =
        sys.vars.iter().copied().zip(assignment).collect();
    let Some(witnesses) = check_double_arcs(&g) else {
        return done(SolveOutcome::Infeasible(InfeasibleReason::DoubleArc), Some(g), two_fixed);
    };
    let mut orders = extend_orders_bottom_up(&g, &q, &witnesses)?;
    orders.truncate(d.trees.len());
    let q_assignment = q.into_iter().filter(|((t, _), _)| *t < d.trees.len()).collect();
    done(SolveOutcome::Feasible(Solution { orders, q_assignment }), Some(g), two_fixed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{reduce_cyclic_ordering, Arc};
    use crate::orders::labels;
    use std::collections::BTreeSet;

    fn set(s: &str) -> BTreeSet<Label> {
        labels(s).into_iter().collect()
    }

    #[test]
    fn two_sat_small_systems() {
        let mut s = TwoSat::new(3);
        s.add_relation(0, 1, false);
        s.add_relation(1, 2, false);
        let a = s.solve().unwrap();
        assert!(a[0] == a[1] && a[1] == a[2]);
        let mut s = TwoSat::new(2);
        s.add_relation(0, 1, false);
        s.add_relation(0, 1, true);
        assert!(s.solve().is_none());
    }

    #[test]
    fn two_sat_matches_truth_tables() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..400 {
            let n = rng.gen_range(1..=12);
            let mut s = TwoSat::new(n);
            for _ in 0..rng.gen_range(0..2 * n + 2) {
                s.add_clause(rng.gen_range(0..2 * n), rng.gen_range(0..2 * n));
            }
            let holds = |a: &[bool]| {
                s.clauses.iter().all(|&(x, y)| a[x / 2] != (x % 2 == 1) || a[y / 2] != (y % 2 == 1))
            };
            let brute = (0..1u32 << n).any(|m| {
                let a: Vec<bool> = (0..n).map(|i| m >> i & 1 == 1).collect();
                holds(&a)
            });
            match s.solve() {
                Some(a) => assert!(holds(&a)),
                None => assert!(!brute),
            }
            assert_eq!(s.solve().is_some(), brute);
        }
    }

    #[test]
    fn merge_keeps_both_orders() {
        let m = merge_cyclic(&[0, 2, 4], &[2, 3, 4, 0, 1]).unwrap();
        assert_eq!(m, vec![0, 1, 2, 3, 4]);
        assert!(merge_cyclic(&[0, 1, 2], &[0, 2, 1]).is_err());
        assert_eq!(merge_cyclic(&[0, 1], &[2, 3]).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn single_cyclic_triple() {
        let d = reduce_cyclic_ordering(&set("abc"), &[labels("abc").try_into().unwrap()]).unwrap();
        let SolveOutcome::Feasible(s) = solve(&d).unwrap() else { panic!() };
        assert!(verify_solution(&d, &s.orders));
        let sink = d.index_of("Tx").unwrap();
        let t = d.index_of("T").unwrap();
        let ok = CircularOrder::of("123");
        let o = &s.orders[sink];
        assert!(*o == ok || *o == ok.reverse());
        // the sink and the triple read the same way
        assert_eq!(*o == ok, s.orders[t] == CircularOrder::of("abc"));
    }

    #[test]
    fn contradictory_triples() {
        let d = reduce_cyclic_ordering(
            &set("abc"),
            &[labels("abc").try_into().unwrap(), labels("acb").try_into().unwrap()],
        )
        .unwrap();
        assert_eq!(solve(&d).unwrap(), SolveOutcome::Infeasible(InfeasibleReason::QConstraints));
    }

    #[test]
    fn null_tree_is_infeasible() {
        let d = Instance::from_trees(vec![PQTree::null(labels("ab"))], vec![]).unwrap();
        assert_eq!(solve(&d).unwrap(), SolveOutcome::Infeasible(InfeasibleReason::NullTree));
    }

    #[test]
    fn double_arc_cycles() {
        let star = || PQTree::universal(labels("abcdef"));
        let mut rot = BTreeMap::new();
        // (a c e)(b d f): two 3-cycles, preserved by abcdef rotated by two
        for (t, s) in [("a", "c"), ("c", "e"), ("e", "a"), ("b", "d"), ("d", "f"), ("f", "b")] {
            rot.insert(Label::from(t), Label::from(s));
        }
        for (mixed, feasible) in [(false, true), (true, false)] {
            let d = Instance::from_trees(
                vec![star(), star()],
                vec![Arc::identity(0, 1, &set("abcdef"), false), Arc::new(0, 1, rot.clone(), mixed)],
            )
            .unwrap();
            let r = solve(&d).unwrap();
            assert_eq!(r.is_feasible(), feasible, "mixed {mixed}");
            if let SolveOutcome::Feasible(s) = r {
                assert!(verify_solution(&d, &s.orders));
            } else {
                assert_eq!(r, SolveOutcome::Infeasible(InfeasibleReason::DoubleArc));
            }
        }
    }

    #[test]
    fn reversed_child_fails_verification() {
        let d = Instance::from_trees(
            vec![PQTree::universal(labels("abcd")), PQTree::universal(labels("abc"))],
            vec![Arc::identity(0, 1, &set("abc"), false)],
        )
        .unwrap();
        let SolveOutcome::Feasible(mut s) = solve(&d).unwrap() else { panic!() };
        assert!(verify_solution(&d, &s.orders));
        s.orders[1] = s.orders[1].reverse();
        assert!(!verify_solution(&d, &s.orders));
    }

    #[test]
    fn chain_of_stars() {
        let d = Instance::from_trees(
            vec![
                PQTree::universal(labels("abcdef")),
                PQTree::universal(labels("abcde")),
                PQTree::universal(labels("abcd")),
            ],
            vec![Arc::identity(0, 1, &set("abcde"), true), Arc::identity(1, 2, &set("abcd"), false)],
        )
        .unwrap();
        let SolveOutcome::Feasible(s) = solve(&d).unwrap() else { panic!() };
        assert!(verify_solution(&d, &s.orders));
    }
}
