use std::path::Path;
use std::process::{Command, Output};

use xmf_core::synthetic::{write_pose_fixture, write_warp_fixture, PlaneBoxScene};

fn xmf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xmf")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn scene(dir: &Path, count: usize) {
    for v in PlaneBoxScene::default().views(count, 1.5) {
        xmf_core::io::write_scene_view(dir, &v).unwrap();
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(xmf(&[]).status.code(), Some(2));
    assert_eq!(xmf(&["eval", "--protocol", "nope"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let out = xmf(&["tracks", "build", "--matches", s(dir.path()), "--out", s(&dir.path().join("t.jsonl")), "--window", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent");
    let out = xmf(&["synth", "depth-pairs", "--scene", s(&missing), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn all_failed_evaluation_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_warp_fixture(dir.path(), 3, 1, &[0, 1, 2]).unwrap();
    let out = xmf(&[
        "eval", "--manifest", s(&manifest), "--predictions", s(&dir.path().join("preds")),
        "--protocol", "warp_affine", "--out", s(&dir.path().join("r.json")),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn printed_scores_match_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_pose_fixture(dir.path(), 10, 3, 0.5).unwrap();
    let report = dir.path().join("r.json");
    let out = xmf(&[
        "eval", "--manifest", s(&manifest), "--predictions", s(&dir.path().join("preds")),
        "--protocol", "pose_essential", "--thresholds", "5,10,20", "--out", s(&report),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let sr10 = json["success_rate"]
        .as_array()
        .unwrap()
        .iter()
        .find(|v| v["threshold"] == 10.0)
        .unwrap()["value"]
        .as_f64()
        .unwrap();
    assert!(stdout.contains(&format!("SR@10 = {sr10}")), "{stdout}");
    assert_eq!(json["provenance"]["seed"], 0);
    assert_eq!(json["pairs"], 10);
}

#[test]
fn report_reaggregates_stored_samples() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_warp_fixture(dir.path(), 6, 2, &[1]).unwrap();
    let first = dir.path().join("a.json");
    let out = xmf(&[
        "eval", "--manifest", s(&manifest), "--predictions", s(&dir.path().join("preds")),
        "--protocol", "warp_homography", "--out", s(&first),
    ]);
    assert!(out.status.success());
    let second = dir.path().join("b.json");
    let curve = dir.path().join("b.csv");
    let out = xmf(&["report", "--input", s(&first), "--thresholds", "3", "--out", s(&second), "--curve", s(&curve)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&second).unwrap()).unwrap();
    assert_eq!(json["success_rate"][0]["threshold"], 3.0);
    assert!((json["success_rate"][0]["value"].as_f64().unwrap() - 5.0 / 6.0).abs() < 1e-12);
    assert!(std::fs::read_to_string(&curve).unwrap().starts_with("threshold,success_rate\n"));
}

#[test]
fn warp_pairs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    scene(&dir.path().join("in"), 2);
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = xmf(&[
            "--seed", "7", "synth", "warp-pairs", "--input", s(&dir.path().join("in")), "--out", s(&out_dir),
            "--preset", "train",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(out_dir.join("manifest.jsonl")).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    let text = String::from_utf8(a).unwrap();
    assert!(text.lines().next().unwrap().contains("manifest_header"));
    assert!(text.lines().count() > 1);
}

#[test]
fn config_file_overrides_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    scene(&dir.path().join("in"), 5);
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"synth_depth_pairs": {"grid_step": 16}}"#).unwrap();
    let input = dir.path().join("in");
    let count = |extra: &[&str]| {
        let out_dir = dir.path().join(format!("o{}", extra.len()));
        let mut args = vec!["--config", s(&cfg), "synth", "depth-pairs", "--scene", s(&input)];
        let out_str = out_dir.to_str().unwrap().to_string();
        args.extend(["--out", &out_str]);
        args.extend(extra);
        let out = xmf(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read_dir(out_dir.join("matches"))
            .unwrap()
            .map(|e| std::fs::read_to_string(e.unwrap().path()).unwrap().lines().count())
            .sum::<usize>()
    };
    let coarse = count(&[]);
    let fine = count(&["--grid-step", "8"]);
    assert!(fine > 3 * coarse, "{fine} vs {coarse}");

    std::fs::write(&cfg, r#"{"synth_depth_pairs": {"grid_stepp": 16}}"#).unwrap();
    let out = xmf(&["--config", s(&cfg), "synth", "depth-pairs", "--scene", s(&dir.path().join("in")), "--out", s(&dir.path().join("x"))]);
    assert_eq!(out.status.code(), Some(2));
}
