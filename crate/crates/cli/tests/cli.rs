use std::path::Path;
use std::process::{Command, Output};

fn geolink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geolink")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Source {g1, g4}, target {g2, g3}.
fn fixture(dir: &Path) -> (String, String) {
    let s = dir.join("s.tsv");
    let t = dir.join("t.tsv");
    std::fs::write(
        &s,
        "g1\tPOLYGON ((0 0, 10 0, 10 10, 0 10, 0 0))\ng4\tLINESTRING (12 0, 12 8)\n",
    )
    .unwrap();
    std::fs::write(
        &t,
        "g2\tPOLYGON ((2 2, 4 2, 4 4, 2 4, 2 2))\ng3\tLINESTRING (10 5, 15 5)\n",
    )
    .unwrap();
    (p(&s).to_string(), p(&t).to_string())
}

fn synth(dir: &Path) -> (String, String) {
    let o = geolink(&["synth", "--out", p(dir), "--source-count", "200", "--target-count", "150", "--extent", "150", "--seed", "3"]);
    assert!(o.status.success());
    (p(&dir.join("source.tsv")).to_string(), p(&dir.join("target.tsv")).to_string())
}

#[test]
fn fixture_prints_seven_triples() {
    let dir = tempfile::tempdir().unwrap();
    let (s, t) = fixture(dir.path());
    for a in ["giant", "radon", "plane-sweep", "rtree", "crtree"] {
        let o = geolink(&["interlink", "-s", &s, "-t", &t, "-a", a]);
        assert!(o.status.success(), "{a}");
        assert_eq!(
            stdout(&o),
            "g1\tintersects\tg2\ng1\tintersects\tg3\ng1\ttouches\tg3\ng1\tcontains\tg2\n\
             g1\tcovers\tg2\ng4\tintersects\tg3\ng4\tcrosses\tg3\n"
        );
    }
}

#[test]
fn parallel_and_progressive_agree_with_batch() {
    let dir = tempfile::tempdir().unwrap();
    let (s, t) = synth(dir.path());
    let batch = stdout(&geolink(&["interlink", "-s", &s, "-t", &t]));
    assert!(!batch.is_empty());
    for w in ["1", "3"] {
        let o = geolink(&["parallel", "-s", &s, "-t", &t, "--workers", w, "--macro-grid", "2x3"]);
        assert!(o.status.success());
        assert_eq!(stdout(&o), batch);
    }
    let full = geolink(&["progressive", "-s", &s, "-t", &t, "-a", "ipg", "--budget", "1000000"]);
    assert_eq!(stdout(&full), batch);
    let trace = dir.path().join("trace.tsv");
    let o = geolink(&["progressive", "-s", &s, "-t", &t, "--budget", "0.1", "--metrics", "--trace", p(&trace)]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("PGR"));
    let trace = std::fs::read_to_string(trace).unwrap();
    assert!(trace.starts_with("step\tsource\ttarget\trelated\n1\t"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (s, t) = fixture(dir.path());
    let missing = p(&dir.path().join("missing.tsv")).to_string();
    assert_eq!(geolink(&["interlink", "-s", &s, "-t", &t]).status.code(), Some(0));
    assert_eq!(geolink(&["interlink", "-s", &missing, "-t", &t]).status.code(), Some(1));
    assert_eq!(geolink(&["interlink", "-s", &s, "-t", &t, "-a", "nope"]).status.code(), Some(2));
    assert_eq!(
        geolink(&["interlink", "-s", &s, "-t", &t, "-a", "rtree", "--node-capacity", "2"]).status.code(),
        Some(2)
    );
    assert_eq!(
        geolink(&["interlink", "-s", &s, "-t", &t, "-a", "pbsm", "--memory-budget", "1"]).status.code(),
        Some(1)
    );
    assert_eq!(geolink(&["parallel", "-s", &s, "-t", &t, "--macro-grid", "0x2"]).status.code(), Some(2));
    assert_eq!(geolink(&["progressive", "-s", &s, "-t", &t, "--budget", "0"]).status.code(), Some(2));
    assert_eq!(geolink(&["inspect", "nope"]).status.code(), Some(2));
}

#[test]
fn bench_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (s, t) = synth(dir.path());
    let report = dir.path().join("report.json");
    let o = geolink(&[
        "bench", "-s", &s, "-t", &t, "--algorithms", "giant,rtree,plane-sweep", "--progressive", "pg",
        "--budgets", "0.1,0.2", "--repetitions", "1", "-o", p(&report),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("batch LinkSets agree: yes"));
    let json = geolink(&["report", p(&report), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    let table = stdout(&geolink(&["report", p(&report)]));
    assert_eq!(table.lines().filter(|l| l.starts_with("progressive")).count(), 2);
}

#[test]
fn grid_search_marks_the_winner() {
    let dir = tempfile::tempdir().unwrap();
    let (s, t) = synth(dir.path());
    let o = geolink(&["grid-search", "-s", &s, "-t", &t, "-a", "rtree", "--values", "node_capacity=4,16,64"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let trials: Vec<&str> = out.lines().filter(|l| l.contains("node_capacity=")).collect();
    assert_eq!(trials.len(), 3);
    assert_eq!(trials.iter().filter(|l| l.starts_with('*')).count(), 1);
    let bad = geolink(&["grid-search", "-s", &s, "-t", &t, "-a", "giant", "--objective", "max_pgr"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn inspect_documents_every_flag() {
    let list = stdout(&geolink(&["inspect"]));
    for name in ["giant", "crtree", "pradon", "parallel"] {
        assert!(list.lines().any(|l| l.starts_with(name)));
    }
    let o = geolink(&["inspect", "--format", "json"]);
    assert!(o.status.success());
    for (name, command) in [("pbsm", "interlink"), ("crtree", "interlink"), ("pradon", "progressive"), ("parallel", "parallel")] {
        let doc: serde_json::Value =
            serde_json::from_slice(&geolink(&["inspect", name, "--format", "json"]).stdout).unwrap();
        let help = stdout(&geolink(&[command, "--help"]));
        for param in doc["parameters"].as_array().unwrap() {
            let flag = param["flag"].as_str().unwrap();
            assert!(help.contains(flag), "{name}: {flag} missing from `{command} --help`");
        }
    }
    let text = stdout(&geolink(&["inspect", "rtree", "--node-capacity", "32"]));
    assert!(text.contains("\"node_capacity\":32"));
}
