use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn prospect(project: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prospect"))
        .arg("--project")
        .arg(project)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn reference() -> PathBuf {
    fixtures().join("reference.prospect.json")
}

#[test]
fn stats_of_the_reference_project() {
    let v = json(&prospect(&reference(), &["--format", "json", "stats"]));
    assert_eq!(v["godet"]["criteria"], 626);
    assert_eq!(v["godet"]["concepts"], 169);
    assert_eq!(v["godet"]["variables"], 12);
    assert_eq!(v["mychoice"]["criteria"], 313);
    assert_eq!(v["mychoice"]["concepts"], 237);
    assert_eq!(v["mychoice"]["variables"], 16);
    assert_eq!(v["sources"]["interviews"], 12);
    assert_eq!(v["sources"]["documents"], 9);
}

#[test]
fn read_commands_are_deterministic() {
    for args in [
        &["suggest", "--limit", "30"][..],
        &["--format", "csv", "micmac"],
        &["keys"],
        &["--format", "csv", "attitude", "--matrix"],
        &["align", "report"],
        &["--format", "json", "align", "to-mychoice"],
    ] {
        let a = prospect(&reference(), args);
        let b = prospect(&reference(), args);
        assert!(a.status.success(), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert!(!a.stdout.is_empty(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn keys_returns_exactly_n() {
    let v = json(&prospect(&reference(), &["--format", "json", "--n-keys", "4", "keys"]));
    let ids: Vec<&str> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|k| k["variable_id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["V01", "V07", "V04", "V10"]);
}

#[test]
fn exit_codes() {
    let missing = tempfile::tempdir().unwrap();
    let path = missing.path().join("none.json");
    let o = prospect(&path, &["stats"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "));

    let o = prospect(&reference(), &["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));

    let o = prospect(&reference(), &["attitude", "--stakeholder", "nobody"]);
    assert_eq!(o.status.code(), Some(1));

    let o = prospect(&reference(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn sample_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("sample.prospect.json");
    let sample = fixtures().join("sample");
    let s = |name: &str| sample.join(name).to_str().unwrap().to_owned();

    let ingest = ["ingest", "--sources", &s("sources.csv"), "--criteria", &s("criteria.csv")];
    assert!(prospect(&p, &ingest).status.success());
    let bytes = std::fs::read(&p).unwrap();
    // Re-ingesting the same rows records nothing.
    assert!(prospect(&p, &ingest).status.success());
    assert_eq!(std::fs::read(&p).unwrap(), bytes);

    let o = prospect(&p, &["apply", "--actions", &s("actions.jsonl")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let v = json(&prospect(&p, &["--format", "json", "suggest"]));
    let top = v[0]["id"].as_str().unwrap().to_owned();
    assert_eq!(top, "c2c:c2:k1");

    let o = prospect(&p, &["apply", "--accept", &top, "--expect-seq", "3"]);
    assert_eq!(o.status.code(), Some(1), "stale sequence number is refused");
    let o = prospect(&p, &["apply", "--accept", &top]);
    assert!(o.status.success());
    let o = prospect(&p, &["apply", "--accept", &top]);
    assert_eq!(o.status.code(), Some(1), "suggestion already applied");

    let v = json(&prospect(&p, &["--format", "json", "suggest"]));
    assert!(v.as_array().unwrap().iter().all(|s| s["id"] != top.as_str()));

    assert!(prospect(&p, &["relations", "import", &s("relations.csv")]).status.success());
    let v = json(&prospect(&p, &["--format", "json", "--n-keys", "2", "keys", "--mark"]));
    assert_eq!(v.as_array().unwrap().len(), 2);

    let v = json(&prospect(
        &p,
        &["--format", "json", "delphi", "aggregate", "--ballots", &s("ballots.json"), "--invited", "4"],
    ));
    assert_eq!(v["ballots"], 3);
    assert_eq!(v["counts"]["V1"], 3);
    assert_eq!(v["counts"]["V2"], 2);
    assert_eq!(v["counts"]["V3"], 1);
    assert_eq!(v["counts"]["V4"], 0);

    let journal = stdout(&prospect(&p, &["journal", "export"]));
    let lines = journal.lines().count();
    let stats = json(&prospect(&p, &["--format", "json", "stats"]));
    assert_eq!(stats["godet"]["criteria"], 8);
    assert!(lines > 30);
}

#[test]
fn micmac_on_a_zero_matrix() {
    let zero = fixtures().join("zero_matrix.csv");
    let dir = tempfile::tempdir().unwrap();
    let v = json(&prospect(
        &dir.path().join("unused.json"),
        &["--format", "json", "micmac", "--matrix", zero.to_str().unwrap()],
    ));
    assert_eq!(v["k_used"], 1);
    assert_eq!(v["converged"], true);
    for s in v["scores"].as_array().unwrap() {
        assert_eq!(s["influence"], 0);
        assert_eq!(s["dependence"], 0);
    }
}

#[test]
fn conversions_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mychoice.json");
    let map = fixtures().join("reference.alignment.json");
    let o = prospect(
        &reference(),
        &[
            "align",
            "to-mychoice",
            "--map",
            map.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["aims"].as_object().map(|a| a.len()), Some(169));
}
