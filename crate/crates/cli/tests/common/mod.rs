use std::path::PathBuf;
use std::process::{Command, Output};

pub fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "data", name].iter().collect();
    p.to_string_lossy().into_owned()
}

pub fn spqo(args: &[String]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spqo")).args(args).output().expect("run spqo")
}

/// Every golden invocation with its expected exit code.
pub fn corpus() -> Vec<(Vec<String>, i32)> {
    let c = |args: &[&str], code: i32| -> (Vec<String>, i32) {
        let v = args
            .iter()
            .map(|a| if a.contains('.') { data(a) } else { a.to_string() })
            .collect();
        (v, code)
    };
    vec![
        c(&["solve", "cyclic_sat_instance.json"], 0),
        c(&["solve", "cyclic_unsat_instance.json"], 1),
        c(&["solve", "random_instance_yes.json"], 0),
        c(&["solve", "random_instance_no.json"], 1),
        c(&["solve", "missing.json"], 3),
        c(&["from-cyclic", "cyclic_sat.json"], 0),
        c(&["from-cyclic", "cyclic_three.json"], 0),
        c(&["planarity-pq", "k4.txt"], 0),
        c(&["planarity-pq", "k5.txt"], 1),
        c(&["planarity-pq", "bowtie.txt"], 0),
        c(&["planarity-pq", "random_biconnected.txt"], 0),
        c(&["planarity-pq", "wheel5.txt", "--constraints", "wheel5_ok.json"], 0),
        c(&["planarity-pq", "wheel5.txt", "--constraints", "wheel5_bad.json"], 1),
        c(&["sefe", "k4.txt", "k4.txt"], 0),
        c(&["sefe", "sefe_g1.txt", "sefe_g2.txt"], 0),
        c(&["sefe", "wheel5.txt", "random_biconnected.txt"], 2),
        c(&["interval", "c4.txt"], 1),
        c(&["interval", "path3.txt"], 0),
        c(&["interval", "spider.txt"], 1),
        c(&["interval", "interval_g1.txt"], 0),
        c(&["interval-sim", "interval_g1.txt", "interval_g2.txt"], 0),
        c(&["interval-sim", "order_abc.txt", "order_bac.txt"], 1),
        c(&["interval-sim", "sim_no_g1.txt", "sim_mismatch_g2.txt"], 1),
        c(&["interval-extend", "path3.txt", "path3_partial.json"], 0),
        c(&["interval-extend", "path3.txt", "path3_bad_partial.json"], 3),
        c(&["interval-extend", "c4.txt", "path3_partial.json"], 1),
        c(&["generate", "instance", "--seed", "1"], 0),
        c(&["generate", "graph", "--seed", "3"], 0),
    ]
}
