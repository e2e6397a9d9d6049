use std::path::Path;
use std::process::{Command, Output};

fn fedsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedsim"))
        .args(args)
        .env_remove("FEDSIM_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A built-in spec with two seeds and two rounds, written to `dir`.
fn small_spec(dir: &Path, scenario: &str) -> String {
    let out = fedsim(&["init", "--scenario", scenario, "--seeds", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("rounds = 10"), "{text}");
    let path = dir.join(format!("{scenario}.toml"));
    std::fs::write(&path, text.replace("rounds = 10", "rounds = 2")).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path(), "table2");
    let out_dir = dir.path().join("out");
    let out = fedsim(&["run", "--spec", &spec, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("federated/K=3"));

    let rows = std::fs::read_to_string(out_dir.join("rows.csv")).unwrap();
    assert!(rows.starts_with("method,centers,user,seed,hter,eer,auc\n"));
    assert_eq!(rows.lines().count(), 1 + 2 * 24);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    assert!(summary.is_object() || summary.is_array());

    let report = fedsim(&["report", "--in", out_dir.to_str().unwrap()]);
    assert!(report.status.success(), "{}", stderr(&report));
    let text = stdout(&report);
    for label in ["single/K=1", "fused/K=3", "federated/K=3", "all/K=3"] {
        assert!(text.contains(label), "{text}");
    }
}

#[test]
fn runs_are_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path(), "2d-split");
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out_dir = dir.path().join(format!("out{threads}"));
        let out = Command::new(env!("CARGO_BIN_EXE_fedsim"))
            .args(["run", "--spec", &spec, "--out", out_dir.to_str().unwrap()])
            .env("FEDSIM_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        outputs.push((
            std::fs::read(out_dir.join("rows.csv")).unwrap(),
            std::fs::read(out_dir.join("summary.json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn bad_thread_setting_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path(), "2d-split");
    let out = Command::new(env!("CARGO_BIN_EXE_fedsim"))
        .args([
            "run",
            "--spec",
            &spec,
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ])
        .env("FEDSIM_THREADS", "zero")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("FEDSIM_THREADS"), "{}", stderr(&out));
}

#[test]
fn sweep_prints_one_group_per_center_count() {
    let out = fedsim(&["sweep", "--user", "C", "--max-centers", "3", "--seeds", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.contains("federated/K=2") && text.contains("federated/K=3"),
        "{text}"
    );
    assert!(!text.contains("K=4"));
}

#[test]
fn errors_exit_nonzero_with_a_diagnostic() {
    let missing = fedsim(&[
        "run",
        "--spec",
        "/nonexistent/spec.toml",
        "--out",
        "/tmp/never",
    ]);
    assert!(!missing.status.success());
    assert!(
        stderr(&missing).starts_with("error:"),
        "{}",
        stderr(&missing)
    );

    let too_many = fedsim(&["sweep", "--user", "C", "--max-centers", "9", "--seeds", "1"]);
    assert!(!too_many.status.success());
    assert!(stderr(&too_many).contains("max centers"));

    let unknown = fedsim(&["sweep", "--user", "Q", "--max-centers", "2"]);
    assert!(!unknown.status.success());

    let scenario = fedsim(&["init", "--scenario", "table9"]);
    assert!(!scenario.status.success());

    let dir = tempfile::tempdir().unwrap();
    let empty = fedsim(&["report", "--in", dir.path().to_str().unwrap()]);
    assert!(!empty.status.success());
}

#[test]
fn generate_writes_one_file_per_domain() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path(), "3d-holdout");
    let data = dir.path().join("data");
    let out = fedsim(&[
        "generate",
        "--spec",
        &spec,
        "--seed",
        "4",
        "--out",
        data.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    for id in ["O", "C", "M", "H", "3"] {
        let text = std::fs::read_to_string(data.join(format!("{id}.csv"))).unwrap();
        assert!(text.starts_with("domain,split,label,attack,f0,"));
        assert!(text
            .lines()
            .skip(1)
            .all(|l| l.starts_with(&format!("{id},"))));
    }
}

#[test]
fn train_logs_rounds_and_saves_models() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path(), "table2");
    let out_dir = dir.path().join("train");
    let out = fedsim(&[
        "train",
        "--spec",
        &spec,
        "--user",
        "M",
        "--seed",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
        "--checkpoint-every",
        "1",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert!(
        report.get("hter").is_some() && report.get("auc").is_some(),
        "{report}"
    );

    let rounds = std::fs::read_to_string(out_dir.join("rounds.jsonl")).unwrap();
    assert_eq!(rounds.lines().count(), 2);
    for name in [
        "global_round_0.fedw",
        "global_round_1.fedw",
        "global_final.fedw",
        "report.json",
    ] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    assert_eq!(
        std::fs::read(out_dir.join("global_round_1.fedw")).unwrap(),
        std::fs::read(out_dir.join("global_final.fedw")).unwrap()
    );
}
