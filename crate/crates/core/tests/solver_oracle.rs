use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spqo_core::expansion::{build_expansion_graph, fingerprint, Discipline, ExpansionConfig};
use spqo_core::gen::{random_two_fixed, RandomInstanceParams};
use spqo_core::oracle::{brute_force_simultaneous_orders, OracleBudget};
use spqo_core::solver::{solve, verify_solution, SolveOutcome};

fn agree_on(seed: u64, p: RandomInstanceParams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut yes, mut no) = (0, 0);
    for i in 0..300 {
        let d = random_two_fixed(&mut rng, &p);
        let outcome = solve(&d).unwrap();
        let brute = brute_force_simultaneous_orders(&d, OracleBudget::default()).unwrap();
        if let Some(orders) = &brute {
            assert!(verify_solution(&d, orders));
        }
        match &outcome {
            SolveOutcome::Feasible(s) => {
                assert!(verify_solution(&d, &s.orders), "case {i}: {:?}", d);
                yes += 1;
            }
            SolveOutcome::NotSupported { .. } => panic!("2-fixed instance reported not 1-critical"),
            SolveOutcome::Infeasible(_) => no += 1,
        }
        assert_eq!(outcome.is_feasible(), brute.is_some(), "case {i}: {outcome:?}\n{}", d.to_json_value());
    }
    assert!(yes > 30 && no > 20, "{yes} feasible, {no} infeasible");
}

#[test]
fn solver_agrees_with_exhaustive_search() {
    agree_on(2024, RandomInstanceParams::default());
}

#[test]
fn solver_agrees_on_star_heavy_instances() {
    agree_on(77, RandomInstanceParams { stars: 0.9, ..Default::default() });
}

#[test]
fn expansion_is_independent_of_processing_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let p = RandomInstanceParams::default();
    for _ in 0..100 {
        let d = random_two_fixed(&mut rng, &p);
        let n = d.normalize().unwrap();
        let fifo = build_expansion_graph(&n, ExpansionConfig::default()).unwrap();
        let lifo = build_expansion_graph(
            &n,
            ExpansionConfig { discipline: Discipline::Lifo, ..Default::default() },
        )
        .unwrap();
        assert_eq!(fingerprint(&fifo), fingerprint(&lifo));
        assert!(fifo.double_arc_targets_are_sinks());
        assert!(fifo.is_one_critical());
    }
}
