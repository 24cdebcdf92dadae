use std::path::Path;

use carrier_sched_cli::run;

const PATH2: &str = r#"{"nodes":2,"edges":[[0,1]],"tags":[{"id":1,"host":0}]}"#;
const PATH3: &str = r#"{"nodes":3,"edges":[[0,1],[1,2]],"tags":[{"id":1,"host":0},{"id":2,"host":2}]}"#;

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str], stdin: &str) -> Out {
    let mut argv = vec!["carrier-sched"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut stdin.as_bytes(), &mut out, &mut err);
    Out {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_from_stdin() {
    let out = cli(&["solve", "--scheduler", "optimal"], PATH3);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(
        out.stdout.trim(),
        r#"{"L":1,"C":1,"slots":[{"interrogations":[{"node":0,"tag":1,"carrier":1},{"node":2,"tag":2,"carrier":1}]}]}"#
    );
}

#[test]
fn exit_codes() {
    assert_eq!(cli(&["solve", "--scheduler", "quantum"], PATH2).code, 1);
    assert_eq!(cli(&["frobnicate"], "").code, 1);
    assert_eq!(cli(&["solve"], "{not json").code, 1);
    assert_eq!(cli(&["gen", "--node-range", "5", "2"], "").code, 1);
    let lone = r#"{"nodes":1,"edges":[],"tags":[{"id":1,"host":0}]}"#;
    let out = cli(&["solve", "--scheduler", "optimal"], lone);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("infeasible"));
    let big = cli(&["gen", "--node-range", "12", "12", "--seed", "3"], "").stdout;
    assert_eq!(cli(&["solve", "--scheduler", "optimal"], &big).code, 2);
    // gnn without weights
    assert_eq!(cli(&["solve", "--scheduler", "gnn"], PATH2).code, 1);
    let help = cli(&["--help"], "");
    assert_eq!(help.code, 0);
    assert!(help.stdout.contains("Usage:") && help.stderr.is_empty());
}

#[test]
fn gen_is_seeded_jsonl() {
    let args = ["gen", "--node-range", "3", "6", "--tag-range", "1", "5", "--seed", "9", "--count", "25"];
    let a = cli(&args, "");
    assert_eq!(a.code, 0);
    assert_eq!(a.stdout.lines().count(), 25);
    assert_eq!(a.stdout, cli(&args, "").stdout);
    let corpus = carrier_sched::parse_corpus(&a.stdout).unwrap();
    assert!(corpus.iter().all(|i| (3..=6).contains(&i.node_count())));
    let gnp = cli(&["gen", "--graph-model", "erdos-renyi", "--edge-prob", "0.7", "--count", "3"], "");
    assert_eq!(gnp.code, 0);
}

#[test]
fn validate_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let good = dir.path().join("good.json");
    let bad = dir.path().join("bad.json");
    std::fs::write(&inst, PATH3).unwrap();
    let solved = cli(&["solve", "--input", path_str(&inst)], "");
    std::fs::write(&good, &solved.stdout).unwrap();
    std::fs::write(
        &bad,
        r#"{"L":1,"C":1,"slots":[{"interrogations":[{"node":0,"tag":1,"carrier":1},{"node":2,"tag":2,"carrier":0}]}]}"#,
    )
    .unwrap();

    let ok = cli(&["validate", "--instance", path_str(&inst), "--schedule", path_str(&good)], "");
    assert_eq!(ok.code, 0, "{}", ok.stderr);
    let report: serde_json::Value = serde_json::from_str(&ok.stdout).unwrap();
    assert_eq!(report["valid"], true);

    let no = cli(&["validate", "--instance", path_str(&inst), "--schedule", path_str(&bad)], "");
    assert_eq!(no.code, 2);
    let report: serde_json::Value = serde_json::from_str(&no.stdout).unwrap();
    assert_eq!(report["valid"], false);
    let kinds: Vec<&str> = report["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["kind"].as_str().unwrap())
        .collect();
    assert!(kinds.contains(&"carrier_not_neighbor"), "{kinds:?}");
}

#[test]
fn weights_bench_and_gnn_solve() {
    let dir = tempfile::tempdir().unwrap();
    let weights = dir.path().join("model.rgwt");
    let corpus = dir.path().join("corpus.jsonl");
    let init = cli(
        &["init-weights", "--num-blocks", "2", "--num-heads", "2", "--hidden-dim", "8", "--seed", "1", "--output", path_str(&weights)],
        "",
    );
    assert_eq!(init.code, 0, "{}", init.stderr);
    assert_eq!(&std::fs::read(&weights).unwrap()[..4], b"RGWT");
    assert_eq!(cli(&["init-weights", "--num-heads", "5", "--output", path_str(&weights)], "").code, 1);

    let gnn = cli(&["solve", "--scheduler", "gnn", "--policy", "heuristic-fallback", "--weights", path_str(&weights)], PATH3);
    assert_eq!(gnn.code, 0, "{}", gnn.stderr);

    let gen = cli(&["gen", "--node-range", "2", "6", "--seed", "4", "--count", "15", "--output", path_str(&corpus)], "");
    assert_eq!(gen.code, 0);
    let csv = cli(
        &[
            "bench", "--corpus", path_str(&corpus), "--schedulers", "heuristic,optimal,gnn", "--reference", "heuristic",
            "--policy", "heuristic-fallback", "--weights", path_str(&weights),
        ],
        "",
    );
    assert_eq!(csv.code, 0, "{}", csv.stderr);
    let mut lines = csv.stdout.lines();
    assert_eq!(lines.next(), Some("instance_id,N,T,scheduler,success,C,L,objective,runtime_ms"));
    assert_eq!(lines.count(), 45);
    assert!(csv.stderr.contains("gnn: 15/15"));

    let json = cli(&["bench", "--corpus", path_str(&corpus), "--format", "json"], "");
    assert_eq!(json.code, 0);
    let report: serde_json::Value = serde_json::from_str(&json.stdout).unwrap();
    assert_eq!(report["reference"], "heuristic");
    assert_eq!(report["schedulers"][1]["completion_pct"], 100.0);
    for cell in report["cells"].as_array().unwrap() {
        if cell["scheduler"] == "optimal" {
            // the optimum never uses more carriers than the reference
            assert!(cell["carriers_saved"]["percentiles"][0].as_f64().unwrap() >= 0.0);
        }
    }
    assert_eq!(cli(&["bench", "--corpus", path_str(&corpus), "--reference", "gnn"], "").code, 1);
}
