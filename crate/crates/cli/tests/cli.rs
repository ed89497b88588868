//! End-to-end checks of the command surface: exit codes, file round trips,
//! and byte-level determinism of the JSON reports.

use blackwell_cli::{run, EXIT_ERROR, EXIT_NOT_BETTER, EXIT_OK};
use std::path::PathBuf;

fn invoke(args: &[&str]) -> (i32, String, String) {
    let argv: Vec<String> = std::iter::once("blackwell".to_string())
        .chain(args.iter().map(|s| s.to_string()))
        .collect();
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(&argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn gen(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    let path = dir.path().join(format!("{name}.json"));
    let (code, _, err) = invoke(&["gen-state", name, "--out", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    path
}

#[test]
fn gen_state_roundtrip_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen(&dir, "upsilon-prime");
    let first = std::fs::read(&path).unwrap();
    let (code, _, _) = invoke(&[
        "gen-state",
        "upsilon-prime",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let second = std::fs::read(&path).unwrap();
    assert_eq!(first, second, "reports must be byte-identical");

    let (code, stdout, _) = invoke(&["mutual-info", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.contains("1.000000000000"), "{stdout}");
}

#[test]
fn gen_state_accepts_dimension_params() {
    let (code, stdout, err) = invoke(&["gen-state", "bell", "3"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let parsed: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(parsed["dims"], serde_json::json!([3, 3]));
}

#[test]
fn gen_state_rejects_unknown_names() {
    let (code, _, err) = invoke(&["gen-state", "not-a-state"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("unknown builtin"), "{err}");
}

#[test]
fn compare_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let singlet = gen(&dir, "singlet");
    let uniform = gen(&dir, "product-mixed");

    let (code, stdout, _) = invoke(&[
        "compare",
        singlet.to_str().unwrap(),
        uniform.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code, EXIT_OK);
    let report: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(report["kind"], "better");
    assert!(report["channel"]["kraus"].is_array());

    let (code, stdout, _) = invoke(&[
        "compare",
        uniform.to_str().unwrap(),
        singlet.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code, EXIT_NOT_BETTER);
    let report: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(report["kind"], "not_better");
    assert!(report["margin"].as_f64().unwrap() > 0.0);
    assert!(report["witness"]["actions"].is_array());
}

#[test]
fn compare_incomparable_pair() {
    let dir = tempfile::tempdir().unwrap();
    let upsilon = gen(&dir, "upsilon");
    let prime = gen(&dir, "upsilon-prime");
    let (code, _, _) = invoke(&[
        "compare",
        upsilon.to_str().unwrap(),
        prime.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_NOT_BETTER);
}

#[test]
fn compare_reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let singlet = gen(&dir, "singlet");
    let upsilon = gen(&dir, "upsilon");
    // channel route
    let args = [
        "compare",
        singlet.to_str().unwrap(),
        upsilon.to_str().unwrap(),
        "--format",
        "json",
    ];
    let (c1, first, _) = invoke(&args);
    let (c2, second, _) = invoke(&args);
    assert_eq!(c1, c2);
    assert_eq!(first, second);
    // witness route
    let args = [
        "compare",
        upsilon.to_str().unwrap(),
        singlet.to_str().unwrap(),
        "--format",
        "json",
    ];
    let (c1, first, _) = invoke(&args);
    let (c2, second, _) = invoke(&args);
    assert_eq!(c1, c2);
    assert_eq!(first, second);
}

#[test]
fn payoff_command() {
    let dir = tempfile::tempdir().unwrap();
    let singlet = gen(&dir, "singlet");
    // spin-guess game along z as a game file
    let game = blackwell_core::games::spin_guess_game([0.0, 0.0, 1.0]).unwrap();
    let game_path = dir.path().join("game.json");
    std::fs::write(
        &game_path,
        blackwell_core::formats::to_json(&blackwell_core::formats::GameFile::from_game(&game))
            .unwrap(),
    )
    .unwrap();
    let (code, stdout, _) = invoke(&[
        "payoff",
        singlet.to_str().unwrap(),
        game_path.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code, EXIT_OK);
    let report: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert!((report["value"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
}

#[test]
fn payoff_hits_cap_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let upsilon = gen(&dir, "upsilon");
    let game = blackwell_core::games::random_game(3, (2, 2, 2), 3, 1.0);
    let game_path = dir.path().join("g.json");
    std::fs::write(
        &game_path,
        blackwell_core::formats::to_json(&blackwell_core::formats::GameFile::from_game(&game))
            .unwrap(),
    )
    .unwrap();
    let (code, stdout, _) = invoke(&[
        "payoff",
        upsilon.to_str().unwrap(),
        game_path.to_str().unwrap(),
        "--max-iter",
        "1",
    ]);
    assert_eq!(code, 2, "{stdout}");
    assert!(stdout.contains("iteration cap"));
}

#[test]
fn teleport_check_command() {
    let dir = tempfile::tempdir().unwrap();
    let singlet = gen(&dir, "singlet");
    let (code, stdout, _) = invoke(&["teleport-check", singlet.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{stdout}");
    assert!(stdout.contains("pass"));
}

#[test]
fn classical_compare_command() {
    let dir = tempfile::tempdir().unwrap();
    let p_path = dir.path().join("p.csv");
    let q_path = dir.path().join("q.csv");
    std::fs::write(&p_path, "state,s0,s1\nn0,0.25,0.25\nn1,0.25,0.25\n").unwrap();
    std::fs::write(&q_path, "state,t0,t1\nn0,0.5,0.0\nn1,0.0,0.5\n").unwrap();

    let (code, _, _) = invoke(&[
        "classical-compare",
        p_path.to_str().unwrap(),
        p_path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);

    let (code, stdout, _) = invoke(&[
        "classical-compare",
        p_path.to_str().unwrap(),
        q_path.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code, EXIT_NOT_BETTER);
    let report: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(report["kind"], "infeasible");
    assert!(report["certificate"]["margin"].as_f64().unwrap() > 0.0);
}

#[test]
fn unparseable_files_exit_one_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"labels\": [\"N\"").unwrap();
    let other = gen(&dir, "singlet");
    let (code, _, err) = invoke(&["compare", bad.to_str().unwrap(), other.to_str().unwrap()]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("line"), "{err}");
}

#[test]
fn invalid_config_is_rejected() {
    let (code, _, err) = invoke(&["demo", "--tol", "0"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("--tol"));
    let (code, _, err) = invoke(&["demo", "--max-iter", "0"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("--max-iter"));
}

#[test]
fn demo_passes() {
    let (code, stdout, err) = invoke(&["demo"]);
    assert_eq!(code, EXIT_OK, "stdout:\n{stdout}\nstderr:\n{err}");
    assert!(stdout.contains("all checks passed"));
    assert!(!stdout.contains("FAIL "));
}
