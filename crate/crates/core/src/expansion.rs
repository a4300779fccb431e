//! Expansion graph: resolves every critical triple by an expansion step
//! (new tree from projections of both children) or a finalizing step (a
//! direct arc between two single-P-node children), marking critical double
//! arcs on the way.

use crate::instance::{Arc, Instance, Normalized, ProjectionInfo};
use crate::orders::{Label, Permutation};
use crate::pqtree::{side_representatives, NodeId, PQError, PQTree, SideReps};
use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::hash::{Hash, Hasher};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExpansionError {
    #[error("P-node {pnode} of tree {tree} is fixed by more than two children")]
    NotOneCritical { tree: String, pnode: NodeId },
    #[error("expansion graph size {size} exceeds budget {bound}")]
    BudgetExceeded { size: usize, bound: usize },
    #[error("invariant violated: {0}")]
    InvariantViolated(String),
    #[error(transparent)]
    Tree(#[from] PQError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Discipline {
    Fifo,
    Lifo,
}

#[derive(Clone, Copy, Debug)]
pub struct ExpansionConfig {
    pub discipline: Discipline,
    /// C in the size guard C·(p_max·|N| + |A|).
    pub budget_constant: usize,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig { discipline: Discipline::Fifo, budget_constant: 64 }
    }
}

/// A P-node `pnode` of `tree` fixed by the two out-arcs `arcs`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CriticalTriple {
    pub tree: usize,
    pub pnode: NodeId,
    pub arcs: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Original,
    Expansion(CriticalTriple),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DoubleArc {
    pub triple: CriticalTriple,
    pub target: usize,
    /// ψ on the target's leaves: leaf of the first arc ↦ leaf of the second
    /// arc covering the same edge.
    pub permutation: Permutation,
    /// Exactly one of the two arcs is reversing.
    pub mixed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinalizingArc {
    pub arc: usize,
    pub triple: CriticalTriple,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExpansionStats {
    pub expansion_steps: usize,
    pub finalizing_steps: usize,
    /// Original P-node ↦ number of expansion trees it is transitively
    /// responsible for.
    pub resp: BTreeMap<(usize, NodeId), usize>,
    pub p_max: usize,
    /// |D_ex| / (p_max·|N| + |A|) of the input.
    pub measured_constant: f64,
}

#[derive(Clone, Debug)]
pub struct ExpansionGraph {
    pub instance: Instance,
    pub origins: Vec<Origin>,
    pub infos: Vec<ProjectionInfo>,
    pub finalizing: Vec<FinalizingArc>,
    pub double_arcs: Vec<DoubleArc>,
    /// Processing-order independent identities of trees and arcs.
    pub tree_keys: Vec<u64>,
    pub arc_keys: Vec<u64>,
    pub stats: ExpansionStats,
}

fn key_of(parts: impl Hash) -> u64 {
    let mut h = DefaultHasher::new();
    parts.hash(&mut h);
    h.finish()
}

struct Builder {
    d: Instance,
    infos: Vec<ProjectionInfo>,
    origins: Vec<Origin>,
    tree_keys: Vec<u64>,
    arc_keys: Vec<u64>,
    out: Vec<Vec<usize>>,
    fixers: HashMap<(usize, NodeId), Vec<usize>>,
    queue: VecDeque<CriticalTriple>,
    finalizing: Vec<FinalizingArc>,
    double_arcs: Vec<DoubleArc>,
    own_reps: HashMap<usize, SideReps>,
    /// For expansion trees: (transitive original P-node, degree of the
    /// directly responsible P-node).
    lineage: HashMap<usize, ((usize, NodeId), usize)>,
    stats: ExpansionStats,
    size: usize,
    bound: usize,
    config: ExpansionConfig,
}

impl Builder {
    fn add_arc(&mut self, arc: Arc, key: u64) -> Result<usize, ExpansionError> {
        let info = ProjectionInfo::new(&self.d.trees[arc.source], &arc);
        let idx = self.d.arcs.len();
        let source = arc.source;
        self.size += arc.map.len();
        self.d.arcs.push(arc);
        self.infos.push(info);
        self.arc_keys.push(key);
        self.out[source].push(idx);
        self.register_fixers(idx)?;
        Ok(idx)
    }

    fn register_fixers(&mut self, idx: usize) -> Result<(), ExpansionError> {
        let source = self.d.arcs[idx].source;
        let fixed: Vec<NodeId> =
            self.d.trees[source].p_nodes().filter(|&x| self.infos[idx].is_fixed(x)).collect();
        for x in fixed {
            let list = self.fixers.entry((source, x)).or_default();
            list.push(idx);
            match list.len() {
                1 => {}
                2 => {
                    let t = CriticalTriple { tree: source, pnode: x, arcs: (list[0], list[1]) };
                    match self.config.discipline {
                        Discipline::Fifo => self.queue.push_back(t),
                        Discipline::Lifo => self.queue.push_front(t),
                    }
                }
                _ => {
                    return Err(ExpansionError::NotOneCritical {
                        tree: self.d.names[source].clone(),
                        pnode: x,
                    })
                }
            }
        }
        Ok(())
    }

    fn add_tree(&mut self, name: String, tree: PQTree, origin: Origin, key: u64) -> usize {
        self.d.names.push(name);
        self.size += tree.size();
        self.d.trees.push(tree);
        self.origins.push(origin);
        self.tree_keys.push(key);
        self.out.push(Vec::new());
        self.d.trees.len() - 1
    }

    fn own_reps(&mut self, t: usize) -> &SideReps {
        let tree = &self.d.trees[t];
        self.own_reps.entry(t).or_insert_with(|| side_representatives(tree, &|l| Some(l.clone())))
    }

    fn triple_key(&self, t: &CriticalTriple) -> u64 {
        let (a, b) = (self.arc_keys[t.arcs.0], self.arc_keys[t.arcs.1]);
        key_of(("triple", self.tree_keys[t.tree], t.pnode, a.min(b), a.max(b)))
    }

    fn reaches(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.d.trees.len()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(x) = stack.pop() {
            if x == to {
                return true;
            }
            for &a in &self.out[x] {
                let y = self.d.arcs[a].target;
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        false
    }

    fn size(&self) -> usize {
        self.size
    }

    fn process(&mut self, t: CriticalTriple) -> Result<(), ExpansionError> {
        let (a1, a2) = t.arcs;
        let (t1, t2) = (self.d.arcs[a1].target, self.d.arcs[a2].target);
        let r1 = self.infos[a1].reps[t.pnode].clone();
        let r2 = self.infos[a2].reps[t.pnode].clone();
        let common: Vec<usize> = (0..r1.len()).filter(|&s| r1[s].is_some() && r2[s].is_some()).collect();
        let same_edges = (0..r1.len()).all(|s| r1[s].is_some() == r2[s].is_some());
        let finalizable =
            same_edges && self.d.trees[t1].is_single_pnode() && self.d.trees[t2].is_single_pnode();
        let mixed = self.d.arcs[a1].reversing != self.d.arcs[a2].reversing;
        if finalizable && t1 != t2 {
            let (src, dst, rs, rd) = if self.reaches(t2, t1) {
                (t2, t1, &r2, &r1)
            } else if self.reaches(t1, t2) || self.tree_keys[t1] <= self.tree_keys[t2] {
                (t1, t2, &r1, &r2)
            } else {
                (t2, t1, &r2, &r1)
            };
            let map: BTreeMap<Label, Label> = common
                .iter()
                .map(|&s| (rd[s].clone().unwrap(), rs[s].clone().unwrap()))
                .collect();
            let key = key_of(("finalize", self.triple_key(&t)));
            let arc = self.add_arc(Arc::new(src, dst, map, mixed), key)?;
            self.finalizing.push(FinalizingArc { arc, triple: t });
            self.stats.finalizing_steps += 1;
            return Ok(());
        }
        if finalizable && t1 == t2 && self.origins[t1] != Origin::Original {
            let permutation = Permutation::new(
                common
                    .iter()
                    .map(|&s| (r1[s].clone().unwrap(), r2[s].clone().unwrap()))
                    .collect(),
            )
            .map_err(|e| ExpansionError::InvariantViolated(e.to_string()))?;
            self.double_arcs.push(DoubleArc { triple: t, target: t1, permutation, mixed });
            return Ok(());
        }
        self.expand(t, &common, &r1, &r2)
    }

    fn expand(
        &mut self,
        t: CriticalTriple,
        common: &[usize],
        r1: &[Option<Label>],
        r2: &[Option<Label>],
    ) -> Result<(), ExpansionError> {
        let (a1, a2) = t.arcs;
        let (t1, t2) = (self.d.arcs[a1].target, self.d.arcs[a2].target);
        let own = self.own_reps(t.tree).clone();
        let edge = |s: usize| own[t.pnode][s].clone().expect("every side of an inner node has leaves");
        let project = |tree: &PQTree, reps: &[Option<Label>]| -> Result<PQTree, PQError> {
            let back: HashMap<Label, Label> =
                common.iter().map(|&s| (reps[s].clone().unwrap(), edge(s))).collect();
            let keep: BTreeSet<Label> = back.keys().cloned().collect();
            Ok(tree.project(&keep)?.relabel(|l| back[l].clone()))
        };
        let p1 = project(&self.d.trees[t1], r1)?;
        let p2 = project(&self.d.trees[t2], r2)?;
        let tree = p1.intersect(&p2)?;

        let deg = self.d.trees[t.tree].degree(t.pnode);
        let pdegs: Vec<usize> = tree.p_nodes().map(|x| tree.degree(x)).collect();
        let k = pdegs.len();
        if pdegs.iter().sum::<usize>() + 2 > deg + 2 * k {
            return Err(ExpansionError::InvariantViolated(format!(
                "P-node degrees {pdegs:?} of an expansion tree exceed {deg} + 2k - 2"
            )));
        }
        let root = match self.lineage.get(&t.tree) {
            Some(&(root, parent_deg)) => {
                if parent_deg == deg && pdegs.contains(&deg) {
                    return Err(ExpansionError::InvariantViolated(format!(
                        "three consecutive responsible P-nodes of degree {deg}"
                    )));
                }
                root
            }
            None => (t.tree, t.pnode),
        };
        *self.stats.resp.entry(root).or_default() += 1;

        let tk = self.triple_key(&t);
        let name = format!("X{}", self.d.trees.len());
        let new = self.add_tree(name, tree, Origin::Expansion(t), key_of(("tree", tk)));
        self.lineage.insert(new, (root, deg));
        for (src, reps, arc) in [(t1, r1, a1), (t2, r2, a2)] {
            let map = common.iter().map(|&s| (edge(s), reps[s].clone().unwrap())).collect();
            let rev = self.d.arcs[arc].reversing;
            let key = key_of(("expand", tk, self.arc_keys[arc]));
            self.add_arc(Arc::new(src, new, map, rev), key)?;
        }
        self.stats.expansion_steps += 1;
        if self.size() > self.bound {
            return Err(ExpansionError::BudgetExceeded { size: self.size(), bound: self.bound });
        }
        Ok(())
    }
}

/// Builds the expansion graph of a normalized instance.
pub fn build_expansion_graph(
    n: &Normalized,
    config: ExpansionConfig,
) -> Result<ExpansionGraph, ExpansionError> {
    let d = &n.instance;
    let p_max = d.trees.iter().flat_map(|t| t.p_nodes().map(|x| t.degree(x))).max().unwrap_or(0);
    let tree_size: usize = d.trees.iter().map(|t| t.size()).sum();
    let arc_size: usize = d.arcs.iter().map(|a| a.map.len()).sum();
    let base = p_max.max(1) * tree_size + arc_size;
    let mut b = Builder {
        d: Instance { names: d.names.clone(), trees: d.trees.clone(), arcs: Vec::new() },
        infos: Vec::new(),
        origins: vec![Origin::Original; d.trees.len()],
        tree_keys: (0..d.trees.len()).map(|i| key_of(("original", i))).collect(),
        arc_keys: Vec::new(),
        out: vec![Vec::new(); d.trees.len()],
        fixers: HashMap::new(),
        queue: VecDeque::new(),
        finalizing: Vec::new(),
        double_arcs: Vec::new(),
        own_reps: HashMap::new(),
        lineage: HashMap::new(),
        stats: ExpansionStats { p_max, ..Default::default() },
        size: tree_size,
        bound: config.budget_constant.max(1) * base,
        config,
    };
    for (i, a) in d.arcs.iter().enumerate() {
        b.add_arc(a.clone(), key_of(("input", i)))?;
    }
    while let Some(t) = b.queue.pop_front() {
        b.process(t)?;
    }
    for (&(tree, x), &r) in &b.stats.resp {
        let deg = b.d.trees[tree].degree(x);
        if r + 8 > 3 * deg {
            return Err(ExpansionError::InvariantViolated(format!(
                "P-node {x} of tree {tree} is transitively responsible for {r} > 3·{deg} − 8 trees"
            )));
        }
    }
    b.stats.measured_constant = b.size() as f64 / base as f64;
    Ok(ExpansionGraph {
        instance: b.d,
        origins: b.origins,
        infos: b.infos,
        finalizing: b.finalizing,
        double_arcs: b.double_arcs,
        tree_keys: b.tree_keys,
        arc_keys: b.arc_keys,
        stats: b.stats,
    })
}

/// Critical triples of tree `t` in a graph: pairs of out-arcs fixing the same
/// P-node, parallel arcs included.
pub fn find_critical_triples(d: &Instance, infos: &[ProjectionInfo], t: usize) -> Vec<CriticalTriple> {
    let arcs: Vec<usize> = (0..d.arcs.len()).filter(|&i| d.arcs[i].source == t).collect();
    let mut out = Vec::new();
    for x in d.trees[t].p_nodes() {
        let fixing: Vec<usize> = arcs.iter().copied().filter(|&a| infos[a].is_fixed(x)).collect();
        for i in 0..fixing.len() {
            for j in i + 1..fixing.len() {
                out.push(CriticalTriple { tree: t, pnode: x, arcs: (fixing[i], fixing[j]) });
            }
        }
    }
    out
}

/// Order-independent fingerprint: tree keys with their shapes, non-finalizing
/// arcs with endpoints, finalizing arcs as unordered pairs, double arcs.
pub fn fingerprint(g: &ExpansionGraph) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (i, t) in g.instance.trees.iter().enumerate() {
        out.insert(format!("tree {} {}", g.tree_keys[i], t.shape()));
    }
    let fin: BTreeSet<usize> = g.finalizing.iter().map(|f| f.arc).collect();
    for (i, a) in g.instance.arcs.iter().enumerate() {
        let (s, t) = (g.tree_keys[a.source], g.tree_keys[a.target]);
        if fin.contains(&i) {
            out.insert(format!("final {} {} {}", s.min(t), s.max(t), a.reversing));
        } else {
            out.insert(format!("arc {} {s} {t} {}", g.arc_keys[i], a.reversing));
        }
    }
    for da in &g.double_arcs {
        out.insert(format!(
            "double {} {} {}",
            g.tree_keys[da.target],
            crate::orders::cycle_decomposition(&da.permutation).iter().map(|c| c.len()).sum::<usize>(),
            da.mixed
        ));
    }
    out
}

impl ExpansionGraph {
    pub fn is_expansion_tree(&self, t: usize) -> bool {
        self.origins[t] != Origin::Original
    }

    /// Targets of critical double arcs without outgoing arcs.
    pub fn double_arc_targets_are_sinks(&self) -> bool {
        self.double_arcs.iter().all(|da| self.instance.arcs.iter().all(|a| a.source != da.target))
    }

    /// Every P-node in at most one critical triple.
    pub fn is_one_critical(&self) -> bool {
        (0..self.instance.trees.len())
            .all(|t| {
                let triples = find_critical_triples(&self.instance, &self.infos, t);
                let nodes: BTreeSet<NodeId> = triples.iter().map(|c| c.pnode).collect();
                nodes.len() == triples.len()
            })
    }

    /// Annotated debug dump in the instance JSON format.
    pub fn to_json_value(&self) -> serde_json::Value {
        let mut v = self.instance.to_json_value();
        let origins: Vec<serde_json::Value> = self
            .origins
            .iter()
            .map(|o| match o {
                Origin::Original => serde_json::json!("original"),
                Origin::Expansion(t) => serde_json::json!({
                    "tree": self.instance.names[t.tree], "pnode": t.pnode, "arcs": [t.arcs.0, t.arcs.1]
                }),
            })
            .collect();
        let doubles: Vec<serde_json::Value> = self
            .double_arcs
            .iter()
            .map(|da| serde_json::json!({
                "arcs": [da.triple.arcs.0, da.triple.arcs.1],
                "target": self.instance.names[da.target],
                "permutation": da.permutation.as_map(),
                "mixed": da.mixed,
            }))
            .collect();
        let fin: Vec<usize> = self.finalizing.iter().map(|f| f.arc).collect();
        v["annotations"] =
            serde_json::json!({"origins": origins, "doubleArcs": doubles, "finalizingArcs": fin});
        v
    }
}
