use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use stonesep_core::pump::PumpCertificate;
use stonesep_core::separation::SeparationCertificate;

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus")
}

fn stonesep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stonesep"))
        .current_dir(corpus())
        .env_remove("STONESEP_CONFIG")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const CONTAINS_A: &str = "alphabet: ab\nstate p initial\nstate q final\np -a-> q\np -b-> p\nq -a-> q\nq -b-> q\n";

#[test]
fn parikh_reports_expression_and_bounds() {
    let o = stonesep(&["parikh", "diagonal.cfg"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("(0,1,0) + N(1,0,1)"), "{s}");
    assert!(s.contains("m = 1") && s.contains("= 4") && s.contains("= 2"), "{s}");

    let o = stonesep(&["parikh", "empty.cfg"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("no pumping bound"));

    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.cfg", "S -> a S c |\n");
    assert_eq!(stonesep(&["parikh", &bad]).status.code(), Some(1));
    assert_eq!(stonesep(&["parikh", "missing.cfg"]).status.code(), Some(1));
}

#[test]
fn json_outputs_are_serialization_fixed_points() {
    for args in [
        &["parikh", "union.cfg", "--json"][..],
        &["sel", "union.cfg", ",a,b,c,", "--json"],
        &["member", "dyck.cfg", "4,4", "--json"],
    ] {
        let o = stonesep(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        let again = serde_json::to_string_pretty(&v).unwrap();
        assert_eq!(again.trim_end(), stdout(&o).trim_end(), "{args:?}");
    }
    let o = stonesep(&["pump", "diagonal.cfg", "--kind", "cumulative", "--n", "4"]);
    let cert: PumpCertificate = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(serde_json::to_string_pretty(&cert).unwrap().trim_end(), stdout(&o).trim_end());
    let o = stonesep(&["separate", "L1", "--ctx-bound", "0", "--horizon", "2:3"]);
    let cert: SeparationCertificate = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(serde_json::to_string_pretty(&cert).unwrap().trim_end(), stdout(&o).trim_end());
}

#[test]
fn pump_kinds_and_exit_codes() {
    let o = stonesep(&["pump", "diagonal.cfg", "--kind", "cumulative", "--n", "4"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["k"], "1");
    assert_eq!(v["kind"], "cumulative");
    assert_eq!(stonesep(&["pump", "diagonal.cfg", "--kind", "cumulative", "--n", "1"]).status.code(), Some(2));
    assert_eq!(stonesep(&["pump", "diagonal.cfg", "--n", "501"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let ab = write(dir.path(), "ab.cfg", "S -> a S | T\nT -> b T | eps\n");
    let o = stonesep(&["pump", &ab, "--kind", "square", "--n", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["case"], "zero_prefix_period");
    // a premise that does not hold is a failed precondition
    let o = stonesep(&["pump", "diagonal.cfg", "--kind", "diagonal", "--context", "a,a,b,c,", "--n", "9"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_accepts_emitted_and_rejects_tampered_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let o = stonesep(&["pump", "union.cfg", "--kind", "cumulative", "--n", "5"]);
    let good = write(dir.path(), "good.json", &stdout(&o));
    let o = stonesep(&["verify", &good]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("OK"));
    assert_eq!(stonesep(&["pump", "--verify", &good]).status.code(), Some(0));

    let mut v: Value = serde_json::from_str(&stdout(&stonesep(&["pump", "union.cfg", "--n", "5"]))).unwrap();
    v["instances"][0]["decomposition"]["coefficients"][0] = Value::String("999".into());
    let bad = write(dir.path(), "bad.json", &v.to_string());
    let o = stonesep(&["verify", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("FAILED"));
}

#[test]
fn synt_examples() {
    let dir = tempfile::tempdir().unwrap();
    let aut = write(dir.path(), "a.aut", CONTAINS_A);
    for (u, v, want) in [("b", "a", "true"), ("a", "b", "false"), ("ab", "ab", "true"), ("eps", "a", "true")] {
        let o = stonesep(&["synt", &aut, u, v, "--json"]);
        assert_eq!(o.status.code(), Some(0));
        let j: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(j["pseudo_ineq_unary"].to_string(), want, "{u} {v}");
        assert_eq!(j["two_sided_order"].to_string(), want, "{u} {v}");
    }
}

#[test]
fn closure_and_random_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let aut = write(dir.path(), "a.aut", CONTAINS_A);
    let o = stonesep(&["closure", &aut, "--json"]);
    let j: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(j["closure_size"], 3);
    let o = stonesep(&["closure", "--random", "5", "--seed", "3", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(o.stdout, stonesep(&["closure", "--random", "5", "--seed", "3", "--json"]).stdout);
}

#[test]
fn separate_and_audit() {
    assert_eq!(stonesep(&["separate", "L7"]).status.code(), Some(1));
    let o = stonesep(&["separate", "L2", "--ctx-bound", "1", "--horizon", "2:5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdict"], "PASS");
    assert_eq!(v["theorem"], "square_pumping");
    assert_eq!(v["audit"]["horizon"], serde_json::json!([2, 5]));

    let o = stonesep(&["audit", "L1", "--ctx-bound", "1", "--horizon", "2:4"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("corpus audit: PASS") && s.contains("diagonal"), "{s}");
    assert_eq!(stonesep(&["audit", "L1", "--horizon", "5:2"]).status.code(), Some(2));
}

#[test]
fn custom_corpus_records_below_bound_cells() {
    // a finite language breaks the witness implication only below its
    // pumping bound, which the audit records without failing
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "finite.cfg", "S -> a a b c c | b\n");
    let o = stonesep(&["audit", "L1", "--corpus", &dir.path().display().to_string(), "--ctx-bound", "0", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["grammars"][0]["name"], "finite");
    assert!(!v["grammars"][0]["condition"]["below_bound"].as_array().unwrap().is_empty());
}

#[test]
fn config_file_and_env_var() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.conf", "# test\nformat = json\nhorizon = 2:3\nctx_bound = 0\n");
    let o = Command::new(env!("CARGO_BIN_EXE_stonesep"))
        .current_dir(corpus())
        .env("STONESEP_CONFIG", &cfg)
        .args(["audit", "L3"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["horizon"], serde_json::json!([2, 3]));
    assert_eq!(v["context_bound"], 0);
    // flags win over the file
    let o = stonesep(&["audit", "L3", "--config", &cfg, "--horizon", "2:4"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["horizon"], serde_json::json!([2, 4]));
    let broken = write(dir.path(), "broken.conf", "colour = red\n");
    assert_eq!(stonesep(&["parikh", "diagonal.cfg", "--config", &broken]).status.code(), Some(1));
}
