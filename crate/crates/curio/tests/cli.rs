mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixture;
use curio::io::read_jsonl;
use curio_core::dialogue::DialogueSample;
use curio_core::AbstentionConfig;

fn curio(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curio")).args(args).output().unwrap()
}

fn fx(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

fn run_fixture(out: &Path, backend: &str, run_id: &str, catalogue: Option<&str>) -> Output {
    let mut args = vec![
        "run".to_string(),
        "--fixtures".into(),
        fx(&format!("{backend}.json")),
        "--videos".into(),
        fx("videos.json"),
        "--out".into(),
        out.to_string_lossy().into_owned(),
        "--run".into(),
        run_id.into(),
    ];
    if let Some(c) = catalogue {
        args.extend(["--catalogue".into(), fx(c)]);
    }
    Command::new(env!("CARGO_BIN_EXE_curio")).args(&args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn eval(out: &Path, runs: &[&str], format: &str) -> Output {
    let mut args = vec!["eval", "--gt"];
    let gt = fx("ground_truth.json");
    let out = out.to_string_lossy().into_owned();
    args.extend([gt.as_str(), "--out", out.as_str(), "--format", format]);
    for r in runs {
        args.extend(["--run", r]);
    }
    curio(&args)
}

#[test]
fn run_then_eval_reports_the_table_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    for b in ["vl2_base", "vl2_ft", "q2vl_zs", "q2vl_ft_batch"] {
        let o = run_fixture(dir.path(), b, b, Some("catalogue_gt.json"));
        assert!(o.status.success(), "{b}: {}", String::from_utf8_lossy(&o.stderr));
    }

    let clean = eval(dir.path(), &["vl2_base", "vl2_ft", "q2vl_zs"], "markdown");
    assert_eq!(clean.status.code(), Some(0));
    let md = stdout(&clean);
    assert!(md.contains("| vl2_base | 18 | 1 | 1 | 0 | 1.00 |"), "{md}");
    assert!(md.contains("| vl2_ft | 18 | 2 | 1 | 0 | 1.00 |"), "{md}");
    assert!(md.contains("| q2vl_zs | 18 | 0 | 0 | 0 | -- |"), "{md}");
    assert!(md.contains("vl2_ft +1"), "{md}");

    let dirty = eval(dir.path(), &["q2vl_ft_batch"], "markdown");
    assert_eq!(dirty.status.code(), Some(1));
    assert!(stdout(&dirty).contains("| q2vl_ft_batch | 18 | 2 | 0 | 2 | 0.00 |"));

    let csv = eval(dir.path(), &["vl2_ft"], "csv");
    assert_eq!(stdout(&csv).lines().count(), 19);
}

#[test]
fn run_ids_are_not_overwritten() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_fixture(dir.path(), "vl2_base", "once", Some("catalogue_gt.json")).status.success());
    let again = run_fixture(dir.path(), "vl2_base", "once", Some("catalogue_gt.json"));
    assert_eq!(again.status.code(), Some(2));
}

#[test]
fn run_without_catalogue_abstains_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_fixture(dir.path(), "vl2_ft", "bare", None);
    assert!(o.status.success());
    assert!(stdout(&o).contains("18 videos, 0 accepted"), "{}", stdout(&o));
}

#[test]
fn replay_with_raised_thresholds_accepts_nothing() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_fixture(dir.path(), "vl2_ft", "ft", Some("catalogue_gt.json")).status.success());
    let cfg_path = dir.path().join("strict.json");
    let cfg = AbstentionConfig::default().with_thresholds_shifted(0.2);
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = dir.path().to_string_lossy().into_owned();

    let o = curio(&["replay", "--config", cfg_path.to_str().unwrap(), "--run", "ft", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["videos"], 18);
    assert_eq!(v["accepts"], 0);

    let default_path = dir.path().join("default.json");
    std::fs::write(&default_path, serde_json::to_string(&AbstentionConfig::default()).unwrap()).unwrap();
    let o = curio(&["replay", "--config", default_path.to_str().unwrap(), "--run", "ft", "--out", &out]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["accepts"], 2);
}

#[test]
fn replay_rejects_invalid_config_and_unknown_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    let bad = dir.path().join("bad.json");
    let mut cfg = serde_json::to_value(AbstentionConfig::default()).unwrap();
    cfg["tau_c"] = serde_json::json!(1.5);
    std::fs::write(&bad, cfg.to_string()).unwrap();
    let o = curio(&["replay", "--config", bad.to_str().unwrap(), "--run", "x", "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tau_c"));

    let good = dir.path().join("good.json");
    std::fs::write(&good, serde_json::to_string(&AbstentionConfig::default()).unwrap()).unwrap();
    let o = curio(&["replay", "--config", good.to_str().unwrap(), "--run", "missing", "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn index_reports_malformed_records() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"[{"id": "a", "artist": "X"}]"#).unwrap();
    let o = curio(&["index", "--catalogue", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("record 0") && err.contains("title"), "{err}");

    let ok = curio(&["index", "--catalogue", &fx("catalogue_sft.json")]);
    assert!(ok.status.success());
    assert!(stdout(&ok).contains("20 entries"), "{}", stdout(&ok));
}

#[test]
fn export_dialogues_writes_reproducible_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for p in [&a, &b] {
        let o = curio(&[
            "export-dialogues",
            "--catalogue",
            &fx("catalogue_60.json"),
            "--seed",
            "11",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let samples: Vec<DialogueSample> = read_jsonl(&a).unwrap();
    assert_eq!(samples.len(), 210);

    let none = dir.path().join("none.jsonl");
    let o = curio(&[
        "export-dialogues",
        "--catalogue",
        &fx("catalogue_60.json"),
        "--per-entry",
        "0",
        "--out",
        none.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(std::fs::read(&none).unwrap().is_empty());
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(curio(&["run", "--bogus"]).status.code(), Some(2));
    assert_eq!(curio(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(curio(&["--help"]).status.code(), Some(0));
}
