use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_neuromap");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn canonical(dir: &Path) {
    let o = run(dir, &["generate", "-o", "net.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

/// Two 4-cliques under one R1 with a lone one-way edge between them: an R1
/// row would also admit neuron 1, and there are no programmable synapses.
fn one_unplaceable(dir: &Path) {
    let mut edges = Vec::new();
    for base in [0, 4] {
        for a in base..base + 4 {
            for b in base..base + 4 {
                if a != b {
                    edges.push(format!("[{a},{b}]"));
                }
            }
        }
    }
    edges.push("[0,4]".into());
    std::fs::write(
        dir.join("net.json"),
        format!("{{\"neurons\": 8, \"edges\": [{}]}}", edges.join(",")),
    )
    .unwrap();
    std::fs::write(
        dir.join("fabric.json"),
        r#"{"programmable_per_core": 0, "r1_per_r2": 1}"#,
    )
    .unwrap();
}

#[test]
fn compile_clean_exits_zero_and_validates() {
    let d = tempfile::tempdir().unwrap();
    canonical(d.path());
    let o = run(d.path(), &["compile", "net.json", "-o", "out"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).is_empty());

    let o = run(d.path(), &["simulate", "out/tables.json", "--source", "0"]);
    assert_eq!(code(&o), 0);
    let line: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(line["source"], 0);
    assert_eq!(line["receivers"], serde_json::json!([1, 2, 3, 4, 8, 12]));

    let o = run(
        d.path(),
        &[
            "simulate",
            "out/tables.json",
            "--all",
            "--validate",
            "--network",
            "net.json",
            "--placement",
            "out/placement.json",
        ],
    );
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 17);
    assert!(
        out.ends_with("covered: 66, missing: 0, spurious: 0\n"),
        "{out}"
    );
}

#[test]
fn unplaceable_needs_allow_partial() {
    let d = tempfile::tempdir().unwrap();
    one_unplaceable(d.path());
    let o = run(
        d.path(),
        &[
            "compile",
            "net.json",
            "--fabric",
            "fabric.json",
            "-o",
            "strict",
        ],
    );
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("0->4"));
    assert!(!d.path().join("strict/tables.json").exists());

    let o = run(
        d.path(),
        &[
            "compile",
            "net.json",
            "--fabric",
            "fabric.json",
            "-o",
            "partial",
            "--allow-partial",
        ],
    );
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let placement: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(d.path().join("partial/placement.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(placement["unplaceable"], serde_json::json!([[0, 4]]));
}

#[test]
fn fabric_too_small_is_a_hard_error() {
    let d = tempfile::tempdir().unwrap();
    canonical(d.path());
    std::fs::write(
        d.path().join("fabric.json"),
        r#"{"cores_per_r1": 1, "r1_per_r2": 2}"#,
    )
    .unwrap();
    for extra in [&[][..], &["--allow-partial"][..]] {
        let mut args = vec!["compile", "net.json", "--fabric", "fabric.json"];
        args.extend(extra);
        let o = run(d.path(), &args);
        assert_eq!(code(&o), 1);
        assert!(stderr(&o).contains("fabric too small"), "{}", stderr(&o));
        assert!(stdout(&o).is_empty());
    }
}

#[test]
fn validate_reports_missing_deliveries() {
    let d = tempfile::tempdir().unwrap();
    canonical(d.path());
    assert_eq!(
        code(&run(d.path(), &["compile", "net.json", "-o", "out"])),
        0
    );
    let path = d.path().join("out/tables.json");
    let mut tables: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    tables["neurons"][1]["r0_bit"] = 0.into();
    std::fs::write(&path, tables.to_string()).unwrap();
    let o = run(
        d.path(),
        &[
            "simulate",
            "out/tables.json",
            "--all",
            "--validate",
            "--network",
            "net.json",
            "--placement",
            "out/placement.json",
        ],
    );
    assert_eq!(code(&o), 1);
    assert!(
        stdout(&o).contains("missing: 3, spurious: 0"),
        "{}",
        stdout(&o)
    );
    assert!(stderr(&o).contains("missing delivery 0->1"));
}

#[test]
fn trace_is_indented_text() {
    let d = tempfile::tempdir().unwrap();
    canonical(d.path());
    run(d.path(), &["compile", "net.json", "-o", "out"]);
    let o = run(
        d.path(),
        &["simulate", "out/tables.json", "--source", "0", "--trace"],
    );
    let out = stdout(&o);
    assert!(out.starts_with("source 0\n  -> 1 via R0\n"), "{out}");
    assert!(out.contains("  -> 4 via R2\n"));
    assert!(out.lines().skip(1).all(|l| l.starts_with("  ")));
}

#[test]
fn sweep_writes_csv_and_recommends() {
    let d = tempfile::tempdir().unwrap();
    canonical(d.path());
    let o = run(
        d.path(),
        &[
            "sweep",
            "net.json",
            "--remove",
            "1,2,3",
            "--core-sizes",
            "2,3,4",
            "--csv",
            "s.csv",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.path().join("s.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "k,core_size,mean_extra_neurons,mean_unplaceable,samples"
    );
    assert_eq!(lines.len(), 10);
    assert_eq!(lines[4], "2,2,1.51667,10.1917,120");
    assert!(d.path().join("s.csv.manifest.json").exists());

    let table = stdout(&o);
    let row = |size: &str| {
        table
            .lines()
            .find(|l| l.split_whitespace().next() == Some(size))
            .unwrap()
            .to_string()
    };
    assert!(row("3").ends_with("dominated"));
    assert!(row("2").ends_with("recommended"));
}

#[test]
fn sampled_sweep_is_seeded() {
    let d = tempfile::tempdir().unwrap();
    canonical(d.path());
    let args = [
        "sweep",
        "net.json",
        "--remove",
        "2",
        "--core-sizes",
        "4",
        "--sample",
        "10",
        "--seed",
        "7",
        "--csv",
    ];
    for name in ["a.csv", "b.csv"] {
        let mut a = args.to_vec();
        a.push(name);
        assert_eq!(code(&run(d.path(), &a)), 0);
    }
    let a = std::fs::read_to_string(d.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read_to_string(d.path().join("b.csv")).unwrap());
    assert!(a.lines().nth(1).unwrap().ends_with(",10"));
}

#[test]
fn report_lists_each_core_size() {
    let d = tempfile::tempdir().unwrap();
    canonical(d.path());
    let o = run(
        d.path(),
        &[
            "report",
            "net.json",
            "--core-sizes",
            "2,3,4",
            "--json",
            "r.json",
        ],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 4);
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["configurations"].as_array().unwrap().len(), 3);
    assert_eq!(r["manifest"]["command"], "report");
    assert_eq!(r["manifest"]["inputs"][0]["name"], "net.json");
}

#[test]
fn bad_inputs_fail_cleanly() {
    let d = tempfile::tempdir().unwrap();
    canonical(d.path());
    std::fs::write(
        d.path().join("bad.json"),
        "{\"neurons\": 2,\n\"edges\": [[0, 9]]}",
    )
    .unwrap();
    std::fs::write(d.path().join("fabric.json"), r#"{"core_sizes": 4}"#).unwrap();
    let cases: [(&[&str], &str); 5] = [
        (&["compile", "missing.json"], "missing.json"),
        (&["compile", "bad.json"], "edges[0]"),
        (
            &["compile", "net.json", "--fabric", "fabric.json"],
            "core_sizes",
        ),
        (
            &["sweep", "net.json", "--remove", "17", "--csv", "x.csv"],
            "sweep",
        ),
        (&["generate", "--profile", "1-2"], "distance:count"),
    ];
    for (args, needle) in cases {
        let o = run(d.path(), args);
        assert_eq!(code(&o), 1, "{args:?}");
        assert!(stdout(&o).is_empty(), "{args:?}");
        assert!(stderr(&o).contains(needle), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn generate_to_stdout_matches_file() {
    let d = tempfile::tempdir().unwrap();
    canonical(d.path());
    let o = run(d.path(), &["generate"]);
    let file = std::fs::read_to_string(d.path().join("net.json")).unwrap();
    let strip = |s: &str| {
        s.lines()
            .filter(|l| !l.contains("\"timestamp\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&stdout(&o)), strip(&file));
}
