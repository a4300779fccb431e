mod common;

use common::{corpus, data, spqo};
use serde_json::Value;

#[test]
fn exit_codes_with_oracle_and_verify() {
    for (mut args, code) in corpus() {
        args.push("--oracle".into());
        args.push("--verify".into());
        let out = spqo(&args);
        assert_eq!(out.status.code(), Some(code), "{args:?}\n{}", String::from_utf8_lossy(&out.stderr));
        if code != 3 && args[0] != "generate" {
            let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
            if args[0] != "from-cyclic" {
                let want = ["feasible", "infeasible", "not-supported"][code as usize];
                assert_eq!(doc["status"], want, "{args:?}");
            }
        }
    }
}

#[test]
fn outputs_feed_back_in() {
    let out = spqo(&["from-cyclic".into(), data("cyclic_sat.json")]);
    let path = std::env::temp_dir().join(format!("spqo-cyclic-{}.json", std::process::id()));
    std::fs::write(&path, &out.stdout).unwrap();
    let solved = spqo(&["solve".into(), path.to_string_lossy().into_owned(), "--verify".into()]);
    std::fs::remove_file(&path).ok();
    assert_eq!(solved.status.code(), Some(0));
    assert_eq!(
        std::fs::read(data("cyclic_sat_instance.json")).unwrap(),
        out.stdout,
        "golden instance differs from a fresh conversion"
    );
}

#[test]
fn extension_keeps_prescribed_intervals() {
    let out = spqo(&["interval-extend".into(), data("path3.txt"), data("path3_partial.json")]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["representation"]["a"], serde_json::json!([0, 2]));
    assert_eq!(doc["representation"]["c"], serde_json::json!([4, 6]));
}

#[test]
fn sefe_on_identical_graphs_gives_matching_rotations() {
    let out = spqo(&["sefe".into(), data("k4.txt"), data("k4.txt")]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["first"], doc["second"]);
}

#[test]
fn bad_input_is_reported_on_stderr_only() {
    let out = spqo(&["interval".into(), data("cyclic_sat.json")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}
