//! Simple undirected graphs with named vertices, shared by the planarity and
//! interval applications.

use crate::orders::Label;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid vertex name {0:?}")]
    InvalidName(String),
    #[error("self-loop at {0}")]
    SelfLoop(String),
    #[error("parallel edge {0}-{1}")]
    ParallelEdge(String, String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Graph {
    names: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<(usize, usize)>,
    incident: Vec<Vec<usize>>,
    edge_index: HashMap<(usize, usize), usize>,
}

impl Graph {
    pub fn new() -> Graph {
        Graph::default()
    }

    /// Adds a vertex unless it exists; returns its index. Names may not be
    /// empty or contain whitespace or '-', which separates edge labels.
    pub fn add_vertex(&mut self, name: &str) -> Result<usize, GraphError> {
        if let Some(&i) = self.index.get(name) {
            return Ok(i);
        }
        if name.is_empty() || name.contains('-') || name.chars().any(char::is_whitespace) {
            return Err(GraphError::InvalidName(name.to_string()));
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        self.incident.push(Vec::new());
        Ok(i)
    }

    pub fn add_edge(&mut self, u: &str, v: &str) -> Result<usize, GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u.to_string()));
        }
        let a = self.add_vertex(u)?;
        let b = self.add_vertex(v)?;
        let key = (a.min(b), a.max(b));
        if self.edge_index.contains_key(&key) {
            return Err(GraphError::ParallelEdge(u.to_string(), v.to_string()));
        }
        let e = self.edges.len();
        self.edges.push((a, b));
        self.incident[a].push(e);
        self.incident[b].push(e);
        self.edge_index.insert(key, e);
        Ok(e)
    }

    pub fn from_edges(pairs: &[(&str, &str)]) -> Result<Graph, GraphError> {
        let mut g = Graph::new();
        for (u, v) in pairs {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Edge list text: one `u v` pair per line, `#` starts a comment, a line
    /// with a single name declares an isolated vertex.
    pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
        let mut g = Graph::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let err = |e: GraphError| GraphError::Parse { line: no + 1, reason: e.to_string() };
            match parts.as_slice() {
                [v] => {
                    g.add_vertex(v).map_err(err)?;
                }
                [u, v] => {
                    g.add_edge(u, v).map_err(err)?;
                }
                _ => {
                    return Err(GraphError::Parse {
                        line: no + 1,
                        reason: format!("expected `u v`, got {line:?}"),
                    })
                }
            }
        }
        Ok(g)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for &(u, v) in &self.edges {
            out.push_str(&format!("{} {}\n", self.names[u], self.names[v]));
        }
        out
    }

    pub fn num_vertices(&self) -> usize {
        self.names.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn vertex(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.edge_index.get(&(u.min(v), u.max(v))).copied()
    }

    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incident[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.incident[v].len()
    }

    pub fn other(&self, e: usize, v: usize) -> usize {
        let (a, b) = self.edges[e];
        if a == v {
            b
        } else {
            a
        }
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.incident[v].iter().map(move |&e| self.other(e, v))
    }

    /// `u-v` with the two names in lexicographic order.
    pub fn edge_label(&self, e: usize) -> Label {
        let (a, b) = self.edges[e];
        let (x, y) = (&self.names[a], &self.names[b]);
        if x <= y {
            Label::new(format!("{x}-{y}"))
        } else {
            Label::new(format!("{y}-{x}"))
        }
    }

    pub fn edge_by_label(&self, l: &Label) -> Option<usize> {
        let (x, y) = l.as_str().split_once('-')?;
        self.edge_between(self.vertex(x)?, self.vertex(y)?)
    }

    pub fn incident_labels(&self, v: usize) -> BTreeSet<Label> {
        self.incident[v].iter().map(|&e| self.edge_label(e)).collect()
    }

    pub fn edge_labels(&self) -> BTreeSet<Label> {
        (0..self.edges.len()).map(|e| self.edge_label(e)).collect()
    }

    /// Vertices reachable from `start` avoiding `removed`.
    fn reach(&self, start: usize, removed: Option<usize>) -> Vec<bool> {
        let mut seen = vec![false; self.names.len()];
        if Some(start) == removed {
            return seen;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for y in self.neighbors(x) {
                if !seen[y] && Some(y) != removed {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        seen
    }

    pub fn is_connected(&self) -> bool {
        self.names.is_empty() || self.reach(0, None).iter().all(|&s| s)
    }

    pub fn is_biconnected(&self) -> bool {
        let n = self.names.len();
        n >= 3
            && self.is_connected()
            && (0..n).all(|v| {
                let start = if v == 0 { 1 } else { 0 };
                self.reach(start, Some(v)).iter().filter(|&&s| s).count() == n - 1
            })
    }

    /// Blocks as sorted edge-id lists. Two edges at `v` share a block iff
    /// their other ends are connected in G - v.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let m = self.edges.len();
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let next = p[y];
                p[y] = r;
                y = next;
            }
            r
        }
        for v in 0..self.names.len() {
            let inc = &self.incident[v];
            if inc.len() < 2 {
                continue;
            }
            let mut comp = vec![usize::MAX; self.names.len()];
            for &e in inc {
                let w = self.other(e, v);
                if comp[w] == usize::MAX {
                    for (x, s) in self.reach(w, Some(v)).into_iter().enumerate() {
                        if s {
                            comp[x] = w;
                        }
                    }
                }
            }
            let mut first: HashMap<usize, usize> = HashMap::new();
            for &e in inc {
                let c = comp[self.other(e, v)];
                match first.get(&c) {
                    Some(&f) => {
                        let (a, b) = (find(&mut parent, f), find(&mut parent, e));
                        parent[a.max(b)] = a.min(b);
                    }
                    None => {
                        first.insert(c, e);
                    }
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for e in 0..m {
            let r = find(&mut parent, e);
            groups.entry(r).or_default().push(e);
        }
        groups.into_values().collect()
    }

    /// The graph formed by the given edges and their endpoints.
    pub fn edge_subgraph(&self, edges: &[usize]) -> Graph {
        let mut g = Graph::new();
        for &e in edges {
            let (u, v) = self.edges[e];
            g.add_edge(&self.names[u], &self.names[v]).expect("subgraph of a simple graph");
        }
        g
    }

    /// Subgraph induced by the named vertices (in the given order).
    pub fn induced(&self, keep: &[usize]) -> Graph {
        let mut g = Graph::new();
        let inside: BTreeSet<usize> = keep.iter().copied().collect();
        for &v in keep {
            g.add_vertex(&self.names[v]).expect("valid name");
        }
        for &(u, v) in &self.edges {
            if inside.contains(&u) && inside.contains(&v) {
                g.add_edge(&self.names[u], &self.names[v]).expect("simple");
            }
        }
        g
    }

    /// Common vertices (by name) and common edges of two graphs.
    pub fn intersection(&self, other: &Graph) -> Graph {
        let mut g = Graph::new();
        for name in &self.names {
            if other.vertex(name).is_some() {
                g.add_vertex(name).expect("valid name");
            }
        }
        for e in 0..self.edges.len() {
            let (u, v) = self.edges[e];
            if let (Some(a), Some(b)) = (other.vertex(&self.names[u]), other.vertex(&self.names[v])) {
                if other.edge_between(a, b).is_some() {
                    g.add_edge(&self.names[u], &self.names[v]).expect("simple");
                }
            }
        }
        g
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.edge_between(u, v).is_some()
    }
}
