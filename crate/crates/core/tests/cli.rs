use std::path::Path;
use std::process::{Command, Output};

use blockade_cluster::cli::output::{Body, Cell, Document};

fn blockade(args: &[&str], env_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_blockade"));
    cmd.args(args).env_remove("BLOCKADE_OUTPUT_DIR");
    if let Some(dir) = env_dir {
        cmd.env("BLOCKADE_OUTPUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = blockade(args, None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn document(args: &[&str]) -> Document {
    serde_json::from_str(&stdout_of(args)).unwrap()
}

#[test]
fn budget_text_matches_golden_files() {
    for (preset, golden) in [("paper-43d", "budget_43d.txt"), ("paper-58d", "budget_58d.txt")] {
        let expected = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(golden)).unwrap();
        assert_eq!(stdout_of(&["budget", "--preset", preset, "--format", "text"]), expected, "{preset}");
    }
}

#[test]
fn budget_presets_report_expected_magnitudes() {
    let Body::Budget(r43) = document(&["budget", "--preset", "paper-43d"]).body else { panic!() };
    let Body::Budget(r58) = document(&["budget", "--preset", "paper-58d"]).body else { panic!() };
    for r in [&r43, &r58] {
        assert!((r.p_absorption - 0.989).abs() < 0.002);
        assert!(r.p_dark_count > 5e-4 / 3.0 && r.p_dark_count < 5e-4 * 3.0);
        assert!(r.collision_rate_hz > 0.5 && r.collision_rate_hz < 8.0);
    }
    assert!((r43.p_double_excitation - 0.26).abs() < 1e-9);
    assert!((r58.p_double_excitation - 5.7e-4).abs() < 1e-12);
}

#[test]
fn json_documents_round_trip() {
    let runs: [&[&str]; 5] = [
        &["entangle", "--eta", "0.5", "--trials", "200", "--seed", "3"],
        &["ghz", "--qubits", "6", "--eta", "0.4"],
        &["budget", "--preset", "paper-58d"],
        &["grow", "--target", "8", "--trials", "50", "--markov", "true"],
        &["sweep", "--over", "budget", "--vary", "blockade-shift-mhz=0.25,0.5,1.0", "--vary", "eta=0.2:0.4:0.1"],
    ];
    for args in runs {
        let text = stdout_of(args);
        let doc: Document = serde_json::from_str(&text).unwrap();
        assert_eq!(doc.schema_version, 1);
        let again = format!("{}\n", serde_json::to_string_pretty(&doc).unwrap());
        assert_eq!(again, text, "{args:?}");
    }
}

#[test]
fn same_seed_gives_identical_bytes() {
    let args = ["grow", "--target", "10", "--eta", "0.8", "--eta-link", "0.6", "--trials", "500", "--seed", "42"];
    assert_eq!(stdout_of(&args), stdout_of(&args));
    let other = ["grow", "--target", "10", "--eta", "0.8", "--eta-link", "0.6", "--trials", "500", "--seed", "43"];
    assert_ne!(stdout_of(&args), stdout_of(&other));
    let mc = ["entangle", "--eta", "0.3", "--trials", "2000", "--seed", "9", "--format", "csv"];
    assert_eq!(stdout_of(&mc), stdout_of(&mc));
}

#[test]
fn double_excitation_sweep_follows_inverse_square() {
    let doc = document(&["sweep", "--over", "budget", "--preset", "paper-43d", "--vary", "blockade-shift-mhz=0.25:2.0:0.25"]);
    let Body::Sweep(t) = doc.body else { panic!() };
    let b = t.columns.iter().position(|c| c == "blockade_shift_mhz").unwrap();
    let p = t.columns.iter().position(|c| c == "p_double_excitation").unwrap();
    assert_eq!(t.rows.len(), 8);
    for row in &t.rows {
        let (Cell::Num(shift), Cell::Num(p2)) = (&row[b], &row[p]) else { panic!("{row:?}") };
        assert!((p2 * shift * shift - 0.26 * 0.0625).abs() < 1e-12);
    }
}

#[test]
fn empty_range_is_a_config_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out.csv");
    let out = blockade(&["sweep", "--over", "ghz", "--vary", "eta=0.5:0.1:0.1", "--output", target.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(!target.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn exit_codes_by_failure_kind() {
    assert_eq!(blockade(&["budget", "--typo-key", "1"], None).status.code(), Some(2));
    assert_eq!(blockade(&["ghz", "--eta", "abc"], None).status.code(), Some(2));
    assert_eq!(blockade(&["budget", "--blockade-shift-mhz", "-1"], None).status.code(), Some(3));
    assert_eq!(blockade(&["ghz", "--qubits", "3"], None).status.code(), Some(3));
    assert_eq!(blockade(&["budget", "--config", "/nonexistent/blockade.conf"], None).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let nested = blocker.join("out.json");
    assert_eq!(blockade(&["ghz", "--output", nested.to_str().unwrap()], None).status.code(), Some(1));
}

#[test]
fn cap_hit_still_writes_output() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("grow.json");
    let out = blockade(&["grow", "--eta-link", "0", "--cap", "50", "--trials", "4", "--output", target.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(4));
    let doc: Document = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    let Body::Grow(g) = doc.body else { panic!() };
    assert_eq!(g.stats.cap_hits, 4);
    assert_eq!(g.stats.successes, 0);
}

#[test]
fn config_file_supplies_command_and_keys() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# entangler at low efficiency\ncommand = entangle\neta = 0.1\np_abs = 1.0\nseed = 7\n").unwrap();
    let doc = document(&["--config", conf.to_str().unwrap()]);
    assert_eq!(doc.seed, 7);
    let Body::Entangle(r) = doc.body else { panic!() };
    assert!((r.success_probability - 0.1).abs() < 1e-10);
    let doc = document(&["--config", conf.to_str().unwrap(), "--eta", "0.6"]);
    let Body::Entangle(r) = doc.body else { panic!() };
    assert!((r.success_probability - 0.6).abs() < 1e-10);
}

#[test]
fn relative_output_goes_under_env_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = blockade(&["ghz", "--eta", "0.5", "--output", "nested/ghz.csv"], Some(dir.path()));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(dir.path().join("nested/ghz.csv")).unwrap();
    assert!(written.starts_with("qubits,"));
    assert_eq!(std::fs::read_dir(dir.path().join("nested")).unwrap().count(), 1);
}

#[test]
fn equals_syntax_and_flags() {
    let a = stdout_of(&["entangle", "--eta=0.4", "--number-resolving", "--format=csv"]);
    let b = stdout_of(&["entangle", "--eta", "0.4", "--number-resolving", "true", "--format", "csv"]);
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 2);
}
