use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use spqo_core::embedding::{self, Decision, EmbeddingError, RotationSystem};
use spqo_core::gen;
use spqo_core::graph::Graph;
use spqo_core::instance::{reduce_cyclic_ordering, Instance};
use spqo_core::interval::{self, IntervalRep};
use spqo_core::oracle::{self, OracleBudget, OracleError};
use spqo_core::solver::{self, SolveOutcome, SolverError};
use spqo_core::{CircularOrder, Label, PQTree};
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "spqo", version, about = "Simultaneous PQ-ordering and its planarity and interval applications")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Cross-check the decision against the exhaustive oracle.
    #[arg(long, global = true)]
    oracle: bool,
    /// Re-check the produced certificate independently.
    #[arg(long, global = true)]
    verify: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Seed for the generator subcommand.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a Simultaneous PQ-Ordering instance (JSON).
    Solve { instance: PathBuf },
    /// Planar embedding respecting PQ-tree constraints at vertices.
    PlanarityPq {
        graph: PathBuf,
        /// JSON object: vertex -> PQ-tree over its incident edge labels.
        #[arg(long)]
        constraints: Option<PathBuf>,
    },
    /// Simultaneous embedding with fixed edges of two graphs.
    Sefe { first: PathBuf, second: PathBuf },
    /// Interval representation of a graph.
    Interval { graph: PathBuf },
    /// Simultaneous interval representations of two graphs.
    IntervalSim { first: PathBuf, second: PathBuf },
    /// Extend a partial interval representation (JSON) to the whole graph.
    IntervalExtend { graph: PathBuf, representation: PathBuf },
    /// Cyclic Ordering instance (JSON {leaves?, triples}) to an ordering instance.
    FromCyclic { triples: PathBuf },
    /// Seeded random input for test harnesses.
    Generate { kind: GenKind },
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    /// A 2-fixed ordering instance (JSON).
    Instance,
    /// A biconnected graph (edge list).
    Graph,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Feasible,
    Infeasible,
    NotSupported,
}

enum Failure {
    Input(String),
    Verify(String),
    Internal(String),
}

enum Output {
    Json(Value, Status),
    Text(String),
}

type Run = Result<Output, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s)
            .map_err(|e| Failure::Input(format!("stdin: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_graph(path: &Path) -> Result<Graph, Failure> {
    Graph::parse_edge_list(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn infeasible(reason: &str) -> Output {
    Output::Json(json!({"status": "infeasible", "reason": reason}), Status::Infeasible)
}

fn not_supported(reason: &str) -> Output {
    Output::Json(json!({"status": "not-supported", "reason": reason}), Status::NotSupported)
}

fn feasible(mut doc: Value) -> Output {
    doc["status"] = json!("feasible");
    Output::Json(doc, Status::Feasible)
}

/// Compares a decision with the oracle's; a skipped oracle is only reported.
fn cross_check(status: Status, oracle: Result<bool, OracleError>) -> Result<(), Failure> {
    match (status, oracle) {
        (_, Err(e)) => {
            eprintln!("oracle skipped: {e}");
            Ok(())
        }
        (Status::NotSupported, Ok(b)) => {
            eprintln!("oracle: {}", if b { "feasible" } else { "infeasible" });
            Ok(())
        }
        (s, Ok(b)) if (s == Status::Feasible) != b => Err(Failure::Verify(format!(
            "oracle disagrees: solver {}, oracle {}",
            if s == Status::Feasible { "feasible" } else { "infeasible" },
            if b { "feasible" } else { "infeasible" }
        ))),
        _ => {
            eprintln!("oracle agrees");
            Ok(())
        }
    }
}

fn verified(ok: bool, what: &str) -> Result<(), Failure> {
    if ok {
        eprintln!("verified: {what}");
        Ok(())
    } else {
        Err(Failure::Verify(format!("verification failed: {what}")))
    }
}

fn solver_failure(e: SolverError) -> Failure {
    match e {
        SolverError::Instance(e) => Failure::Input(e.to_string()),
        SolverError::Tree(e) => Failure::Input(e.to_string()),
        e => Failure::Internal(e.to_string()),
    }
}

fn status_of(o: &Output) -> Status {
    match o {
        Output::Json(_, s) => *s,
        Output::Text(_) => Status::Feasible,
    }
}

fn solve(cli: &Cli, path: &Path) -> Run {
    let d = Instance::from_json(&read(path)?).map_err(Failure::Input)?;
    let outcome = match solver::solve(&d) {
        Err(SolverError::BudgetExceeded { size, bound }) => {
            eprintln!("expansion graph size {size} exceeds budget {bound}");
            return Ok(not_supported("BudgetExceeded"));
        }
        r => r.map_err(solver_failure)?,
    };
    let doc = outcome.to_json_value(&d);
    let status = match &outcome {
        SolveOutcome::Feasible(_) => Status::Feasible,
        SolveOutcome::Infeasible(r) => {
            eprintln!("infeasible: {}", r.name());
            Status::Infeasible
        }
        SolveOutcome::NotSupported { tree, pnode } => {
            eprintln!("not 1-critical: P-node {pnode} of tree {tree}");
            Status::NotSupported
        }
    };
    if cli.verify {
        if let SolveOutcome::Feasible(s) = &outcome {
            verified(solver::verify_solution(&d, &s.orders), "orders satisfy every tree and arc")?;
        }
    }
    if cli.oracle {
        cross_check(status, oracle::brute_force_simultaneous_orders(&d, OracleBudget::default()).map(|o| o.is_some()))?;
    }
    Ok(Output::Json(doc, status))
}

fn embedding_failure(e: EmbeddingError) -> Result<Output, Failure> {
    match e {
        EmbeddingError::NotPlanar => Ok(infeasible("NotPlanar")),
        EmbeddingError::NotBiconnected => Ok(not_supported("NotBiconnected")),
        EmbeddingError::NotSupported(s) => {
            eprintln!("not supported: {s}");
            Ok(not_supported("NotSupported"))
        }
        e @ (EmbeddingError::Input(_) | EmbeddingError::InvalidConstraint { .. } | EmbeddingError::Instance(_)) => {
            Err(Failure::Input(e.to_string()))
        }
        EmbeddingError::PlanarityCheckFailed => Err(Failure::Verify(e.to_string())),
        e => Err(Failure::Internal(e.to_string())),
    }
}

fn decision<T>(d: Decision<T>, doc: impl FnOnce(T) -> Value) -> Output {
    match d {
        Decision::Feasible(t) => feasible(doc(t)),
        Decision::Infeasible(r) => infeasible(r.name()),
        Decision::NotSupported(s) => {
            eprintln!("not supported: {s}");
            not_supported("NotOneCritical")
        }
    }
}

fn satisfies(r: &RotationSystem, constraints: &BTreeMap<String, PQTree>) -> bool {
    constraints.iter().all(|(v, t)| {
        t.leaf_set().is_empty()
            || r.rotations.get(v).is_some_and(|o| t.contains_order(&o.restrict(t.leaf_set())))
    })
}

fn planarity_pq(cli: &Cli, graph: &Path, constraints: Option<&Path>) -> Run {
    let g = read_graph(graph)?;
    let c: BTreeMap<String, PQTree> = match constraints {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?,
        None => BTreeMap::new(),
    };
    let (out, rotation) = match embedding::solve_partially_pq_constrained(&g, &c) {
        Ok(d) => {
            let r = match &d {
                Decision::Feasible(r) => Some(r.clone()),
                _ => None,
            };
            (decision(d, |r| json!({"rotation": r.to_json_value()})), r)
        }
        Err(e) => (embedding_failure(e)?, None),
    };
    if cli.verify {
        if let Some(r) = &rotation {
            verified(r.is_planar_embedding(&g), "rotation system satisfies Euler's formula")?;
            verified(satisfies(r, &c), "rotation system respects the constraint trees")?;
        }
    }
    if cli.oracle {
        let o = oracle::brute_force_embeddings(&g, OracleBudget::default())
            .map(|embs| embs.iter().any(|r| satisfies(r, &c)));
        cross_check(status_of(&out), o)?;
    }
    Ok(out)
}

fn sefe(cli: &Cli, first: &Path, second: &Path) -> Run {
    let g1 = read_graph(first)?;
    let g2 = read_graph(second)?;
    let (out, pair) = match embedding::solve_sefe(&g1, &g2) {
        Ok(d) => {
            let p = match &d {
                Decision::Feasible(p) => Some(p.clone()),
                _ => None,
            };
            (decision(d, |(r1, r2)| json!({"first": r1.to_json_value(), "second": r2.to_json_value()})), p)
        }
        Err(e) => (embedding_failure(e)?, None),
    };
    if cli.verify {
        if let Some((r1, r2)) = &pair {
            verified(embedding::sefe_agrees(&g1, r1, &g2, r2), "planar and equal on the common graph")?;
        }
    }
    if cli.oracle {
        let o = (|| {
            let e1 = oracle::brute_force_embeddings(&g1, OracleBudget::default())?;
            let e2 = oracle::brute_force_embeddings(&g2, OracleBudget::default())?;
            let common = g1.intersection(&g2);
            let key = |r: &RotationSystem| -> Vec<CircularOrder> {
                (0..common.num_vertices())
                    .map(|v| r.rotations[common.name(v)].restrict(&common.incident_labels(v)))
                    .collect()
            };
            let k1: BTreeSet<Vec<CircularOrder>> = e1.iter().map(key).collect();
            Ok(e2.iter().any(|r| k1.contains(&key(r))))
        })();
        cross_check(status_of(&out), o)?;
    }
    Ok(out)
}

fn interval_cmd(cli: &Cli, graph: &Path) -> Run {
    let g = read_graph(graph)?;
    let rep = interval::recognize_interval(&g);
    let out = match &rep {
        Some(r) => feasible(json!({"representation": r.to_json_value()})),
        None if interval::maximal_cliques(&g).is_none() => infeasible("NotChordal"),
        None => infeasible("NotInterval"),
    };
    if cli.verify {
        if let Some(r) = &rep {
            verified(r.represents(&g), "intersection graph equals the input")?;
        }
    }
    if cli.oracle {
        cross_check(status_of(&out), oracle::brute_force_interval(&g, OracleBudget::default()).map(|r| r.is_some()))?;
    }
    Ok(out)
}

fn interval_sim(cli: &Cli, first: &Path, second: &Path) -> Run {
    let g1 = read_graph(first)?;
    let g2 = read_graph(second)?;
    let res = interval::simultaneous_interval(&g1, &g2).map_err(|e| Failure::Internal(e.to_string()))?;
    let out = match &res {
        Some((r1, r2)) => feasible(json!({"first": r1.to_json_value(), "second": r2.to_json_value()})),
        None if !interval::same_common_subgraph(&g1, &g2) => infeasible("CommonSubgraphMismatch"),
        None if interval::maximal_cliques(&g1).is_none() || interval::maximal_cliques(&g2).is_none() => {
            infeasible("NotChordal")
        }
        None => infeasible("NoSimultaneousRepresentation"),
    };
    if cli.verify {
        if let Some((r1, r2)) = &res {
            let shared = r1.intervals.iter().all(|(v, iv)| r2.intervals.get(v).is_none_or(|jv| jv == iv));
            verified(r1.represents(&g1) && r2.represents(&g2) && shared, "both represented, common intervals equal")?;
        }
    }
    if cli.oracle {
        let o = oracle::brute_force_simultaneous_interval(&g1, &g2, OracleBudget::default()).map(|r| r.is_some());
        cross_check(status_of(&out), o)?;
    }
    Ok(out)
}

fn interval_extend(cli: &Cli, graph: &Path, representation: &Path) -> Run {
    let g = read_graph(graph)?;
    let rep = IntervalRep::from_json(&read(representation)?).map_err(|e| Failure::Input(e.to_string()))?;
    let mut keep = Vec::new();
    for v in rep.intervals.keys() {
        keep.push(g.vertex(v).ok_or_else(|| Failure::Input(format!("{v} is not a vertex of the graph")))?);
    }
    let h = g.induced(&keep);
    let res = interval::extend_partial_interval(&g, &h, &rep).map_err(|e| match e {
        interval::IntervalError::Internal(_) | interval::IntervalError::Solver(_) => Failure::Internal(e.to_string()),
        _ => Failure::Input(e.to_string()),
    })?;
    let out = match &res {
        Some(r) => feasible(json!({"representation": r.to_json_value()})),
        None if interval::recognize_interval(&g).is_none() => infeasible("NotInterval"),
        None => infeasible("NotExtendable"),
    };
    if cli.verify {
        if let Some(r) = &res {
            let kept = rep.intervals.iter().all(|(v, iv)| r.intervals.get(v) == Some(iv));
            verified(r.represents(&g) && kept, "represents the graph and keeps the prescribed intervals")?;
        }
    }
    if cli.oracle {
        let o = oracle::brute_force_extension(&g, &h, &rep, OracleBudget::default()).map(|r| r.is_some());
        cross_check(status_of(&out), o)?;
    }
    Ok(out)
}

fn from_cyclic(cli: &Cli, path: &Path) -> Run {
    let v: Value = serde_json::from_str(&read(path)?).map_err(|e| Failure::Input(e.to_string()))?;
    let bad = |m: &str| Failure::Input(format!("{}: {m}", path.display()));
    let triples: Vec<[Label; 3]> = v["triples"]
        .as_array()
        .ok_or_else(|| bad("expected {\"triples\": [[a, b, c], ...]}"))?
        .iter()
        .map(|t| {
            let items: Vec<Label> =
                t.as_array().into_iter().flatten().filter_map(|x| x.as_str().map(Label::new)).collect();
            <[Label; 3]>::try_from(items).map_err(|_| bad("every triple needs three labels"))
        })
        .collect::<Result<_, _>>()?;
    let leaves: BTreeSet<Label> = match v.get("leaves") {
        Some(l) => l
            .as_array()
            .ok_or_else(|| bad("leaves must be an array"))?
            .iter()
            .map(|x| x.as_str().map(Label::new).ok_or_else(|| bad("leaves must be strings")))
            .collect::<Result<_, _>>()?,
        None => triples.iter().flatten().cloned().collect(),
    };
    let d = reduce_cyclic_ordering(&leaves, &triples).map_err(|e| Failure::Input(e.to_string()))?;
    let doc = d.to_json_value();
    if cli.verify {
        let back = Instance::from_json(&doc.to_string()).map_err(Failure::Internal)?;
        verified(back == d, "instance round-trips through JSON")?;
    }
    if cli.oracle {
        let o = oracle::brute_force_cyclic_ordering(&leaves, &triples, OracleBudget::default()).map(|o| o.is_some());
        let status = match solver::solve(&d).map_err(solver_failure)? {
            SolveOutcome::Feasible(_) => Status::Feasible,
            SolveOutcome::Infeasible(_) => Status::Infeasible,
            SolveOutcome::NotSupported { .. } => Status::NotSupported,
        };
        cross_check(status, o)?;
    }
    Ok(Output::Json(doc, Status::Feasible))
}

fn generate(cli: &Cli, kind: GenKind) -> Run {
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed.unwrap_or(0));
    Ok(match kind {
        GenKind::Instance => {
            let d = gen::random_two_fixed(&mut rng, &gen::RandomInstanceParams::default());
            Output::Json(d.to_json_value(), Status::Feasible)
        }
        GenKind::Graph => Output::Text(gen::random_biconnected(&mut rng, 6, 12).to_edge_list()),
    })
}

fn emit(s: &str) {
    let _ = std::io::stdout().lock().write_all(s.as_bytes());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Format::Json = cli.format;
    let res = match &cli.cmd {
        Cmd::Solve { instance } => solve(&cli, instance),
        Cmd::PlanarityPq { graph, constraints } => planarity_pq(&cli, graph, constraints.as_deref()),
        Cmd::Sefe { first, second } => sefe(&cli, first, second),
        Cmd::Interval { graph } => interval_cmd(&cli, graph),
        Cmd::IntervalSim { first, second } => interval_sim(&cli, first, second),
        Cmd::IntervalExtend { graph, representation } => interval_extend(&cli, graph, representation),
        Cmd::FromCyclic { triples } => from_cyclic(&cli, triples),
        Cmd::Generate { kind } => generate(&cli, *kind),
    };
    match res {
        Ok(Output::Json(doc, status)) => {
            emit(&format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializable")));
            ExitCode::from(match status {
                Status::Feasible => 0,
                Status::Infeasible => 1,
                Status::NotSupported => 2,
            })
        }
        Ok(Output::Text(t)) => {
            emit(&t);
            ExitCode::SUCCESS
        }
        Err(Failure::Input(m)) => {
            eprintln!("input error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Verify(m)) => {
            eprintln!("{m}");
            ExitCode::from(4)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(4)
        }
    }
}
