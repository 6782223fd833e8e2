//! End-to-end runs of the repgeom binary: spec parsing, report shape,
//! reproducibility, and exit codes.

use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn repgeom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repgeom"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn lattice_reports_heisenberg_counts() {
    let out = repgeom(&["lattice", "--group", "heisenberg(3)"]);
    assert!(out.status.success());
    let r = report(&out);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["command"], "lattice");
    assert_eq!(r["prime"], 3);
    assert_eq!(r["report"]["maximals"].as_array().unwrap().len(), 4);
    let by_rank = r["report"]["counts_by_rank"].as_array().unwrap();
    assert_eq!(by_rank[0]["rank"], 1);
    assert_eq!(by_rank[0]["members"], 13);
}

#[test]
fn verify_passes_on_klein4_with_regular_module() {
    let out = repgeom(&["verify", "--group", "klein4", "--module", "regular"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["report"]["status"], "pass");
    let checks = r["report"]["checks"].as_array().unwrap();
    assert!(checks.len() >= 16);
    assert!(checks
        .iter()
        .all(|c| c["status"] == "pass" || c["status"] == "skip"));
}

#[test]
fn cjt_reports_nonconstant_with_verified_witness() {
    let out = repgeom(&["cjt", "--group", "klein4", "--module", "cyclic_coset(0)"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let status = &r["report"]["jordan_type"]["status"];
    assert_eq!(status["verdict"], "non_constant");
    let w = &status["witness"];
    assert_ne!(w["rank"], w["generic_rank"]);
    assert_eq!(r["seed"], 0);
}

#[test]
fn bundle_reports_flat_splitting_for_radical_square_quotient() {
    let out = repgeom(&[
        "bundle",
        "--group",
        "elementary_abelian(3,2)",
        "--module",
        "radical_square_quotient",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let chart = &r["report"]["charts"][0];
    assert_eq!(chart["splitting"], serde_json::json!([0, 0]));
    assert_eq!(r["report"]["family"]["constant"], true);
}

#[test]
fn springer_suite_passes_on_heisenberg5() {
    let out = repgeom(&["springer", "--group", "heisenberg(5)"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    let checks = r["report"]["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 4);
    assert!(checks.iter().all(|c| c["status"] == "pass"));
}

#[test]
fn identical_config_and_seed_give_byte_identical_reports() {
    let args = ["verify", "--group", "klein4", "--seed", "11"];
    let a = repgeom(&args);
    let b = repgeom(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_supplies_flags_and_flags_override() {
    let dir = std::env::temp_dir().join("repgeom-cli-test-config");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("job.toml");
    std::fs::write(&cfg, "group = \"klein4\"\nmodule = \"trivial\"\nseed = 5\n").unwrap();
    let out = repgeom(&["theta", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["group"], "klein4");
    assert_eq!(r["seed"], 5);
    assert_eq!(r["report"]["p_nilpotent"], true);
    let out = repgeom(&[
        "theta",
        "--config",
        cfg.to_str().unwrap(),
        "--module",
        "regular",
        "--seed",
        "9",
    ]);
    let r = report(&out);
    assert_eq!(r["module"], "regular");
    assert_eq!(r["seed"], 9);
}

#[test]
fn group_and_module_files_load_in_both_formats() {
    let dir = std::env::temp_dir().join("repgeom-cli-test-files");
    std::fs::create_dir_all(&dir).unwrap();
    let gpath = dir.join("heis5.json");
    std::fs::write(
        &gpath,
        r#"{"matrices": {"prime": 5, "dim": 3,
            "generators": [[1,1,0, 0,1,0, 0,0,1], [1,0,0, 0,1,1, 0,0,1]]}}"#,
    )
    .unwrap();
    let mpath = dir.join("nat3.json");
    std::fs::write(
        &mpath,
        r#"{"dim": 3, "generators": [[1,1,0, 0,1,0, 0,0,1], [1,0,0, 0,1,1, 0,0,1]]}"#,
    )
    .unwrap();
    let out = repgeom(&[
        "cjt",
        "--group",
        gpath.to_str().unwrap(),
        "--module",
        mpath.to_str().unwrap(),
        "--method",
        "sampled",
        "--samples",
        "40",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["prime"], 5);
    assert_eq!(
        r["report"]["jordan_type"]["status"]["verdict"],
        "non_constant"
    );

    let tpath = dir.join("klein_table.toml");
    std::fs::write(
        &tpath,
        "table = [[0,1,2,3],[1,0,3,2],[2,3,0,1],[3,2,1,0]]\n",
    )
    .unwrap();
    let out = repgeom(&["lattice", "--group", tpath.to_str().unwrap(), "--prime", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["report"]["members"].as_array().unwrap().len(), 4);
}

#[test]
fn out_flag_writes_the_report_to_a_file() {
    let dir = std::env::temp_dir().join("repgeom-cli-test-out");
    std::fs::create_dir_all(&dir).unwrap();
    let path: PathBuf = dir.join("report.json");
    let out = repgeom(&[
        "lattice",
        "--group",
        "klein4",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let r: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(r["command"], "lattice");
}

#[test]
fn configuration_errors_exit_2() {
    for args in [
        vec!["lattice", "--group", "heisenberg(4)"],
        vec!["lattice", "--group", "klein4", "--prime", "3"],
        vec!["lattice", "--group", "klein4", "--prime", "4"],
        vec!["lattice"],
        vec!["theta", "--group", "klein4"],
        vec!["lattice", "--group", "dihedral(4)"],
    ] {
        let out = repgeom(&args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
    }
}

#[test]
fn resource_limited_decision_exits_3_with_report() {
    let out = repgeom(&[
        "cjt",
        "--group",
        "elementary_abelian(3,2)",
        "--module",
        "regular",
        "--method",
        "exact",
        "--degree-bound",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(
        r["report"]["jordan_type"]["status"]["verdict"],
        "unknown"
    );
}
