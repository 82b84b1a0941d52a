//! The `sandpile` binary and its in-process entry point.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use sandpile_core::cli::run_command;
use sandpile_core::io::read_trajectory;
use sandpile_core::scenario::load_scenario;

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn scenario(name: &str) -> PathBuf {
    scenarios().join(name)
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn bin(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_sandpile"))
        .args(args)
        .output()
        .unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn in_process(args: &[&str]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_command(
        std::iter::once("sandpile").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn parse_tuple(line: &str) -> Vec<f64> {
    let inner = line.split('(').nth(1).unwrap().trim_end_matches(')');
    inner.split(", ").map(|v| v.parse().unwrap()).collect()
}

#[test]
fn every_shipped_scenario_runs_within_its_budget() {
    let dir = tempfile::tempdir().unwrap();
    let mut count = 0;
    for entry in std::fs::read_dir(scenarios()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let sc = load_scenario(&path).unwrap();
        let output = dir.path().join(format!("{}.csv", sc.name));
        let start = Instant::now();
        let run = bin(&["simulate", s(&path), "--output", s(&output)]);
        let elapsed = start.elapsed().as_secs_f64();
        assert_eq!(run.code, 0, "{}: {}", path.display(), run.stderr);
        let budget = sc.budget_seconds.expect("shipped scenarios declare a budget");
        assert!(elapsed < budget, "{} took {elapsed:.2}s", sc.name);
        let stored = read_trajectory(&output).unwrap();
        assert!(stored.trajectory.len() > 1);
        assert!(stored.trajectory.max_abs_residual() <= 1e-8, "{}", sc.name);
        count += 1;
    }
    assert!(count >= 10);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let sc = scenario("star.json");
    let ra = bin(&["simulate", s(&sc), "--output", s(&a)]);
    let rb = bin(&["simulate", s(&sc), "--output", s(&b)]);
    assert_eq!((ra.code, rb.code), (0, 0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(
        std::fs::read(dir.path().join("a.mass.csv")).unwrap(),
        std::fs::read(dir.path().join("b.mass.csv")).unwrap()
    );
}

#[test]
fn lattice_csv_has_the_expected_peak() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("z.csv");
    let run = in_process(&["simulate", s(&scenario("z_lattice.json")), "--output", s(&out)]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(run.stdout.contains("event t=1.0000000000000000e0"), "{}", run.stdout);

    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("t,vertex,u\n"));
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let row = rdr
        .records()
        .map(|r| r.unwrap())
        .find(|r| (r[0].parse::<f64>().unwrap() - 4.0).abs() < 1e-9 && &r[1] == "0")
        .expect("row at t=4 for vertex 0");
    assert!((row[2].parse::<f64>().unwrap() - 2.0).abs() < 5e-3);
}

#[test]
fn collapse_prints_the_limit() {
    let run = bin(&["collapse", s(&scenario("p4_b1.json"))]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let last = run.stdout.lines().last().unwrap();
    assert!(last.starts_with("u_inf = ("), "{last}");
    let u = parse_tuple(last);
    for (got, want) in u.iter().zip([0.8, 1.8, 0.8, 1.0]) {
        assert!((got - want).abs() < 1e-2, "{u:?}");
    }
}

#[test]
fn converge_p_reports_decreasing_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("conv/rows.csv");
    let run = bin(&[
        "converge-p",
        s(&scenario("z_lattice.json")),
        "--p-list",
        "8,64",
        "--output",
        s(&out),
    ]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), run.stdout);
    let rows: Vec<(f64, f64)> = run
        .stdout
        .lines()
        .skip(1)
        .map(|l| {
            let (p, e) = l.split_once(',').unwrap();
            (p.parse().unwrap(), e.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0].0, rows[1].0), (8.0, 64.0));
    assert!(rows[1].1 < rows[0].1, "{rows:?}");
}

#[test]
fn project_prints_a_stable_field() {
    let run = bin(&["project", s(&scenario("p4.txt")), s(&scenario("p4_peak.field"))]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let mut lines = run.stdout.lines();
    assert_eq!(lines.next(), Some("vertex,u"));
    let values: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 4);
    for w in values.windows(2) {
        assert!((w[1] - w[0]).abs() <= 1.0 + 1e-8);
    }
    let mass: f64 = values.iter().zip([1.0, 2.0, 2.0, 1.0]).map(|(v, d)| v * d).sum();
    assert!((mass - 7.0).abs() < 1e-8);
}

#[test]
fn transport_check_verifies_growth_potentials() {
    for (name, t) in [
        ("z_lattice.json", "2.5"),
        ("star.json", "3"),
        ("chain_w4_model2.json", "2"),
    ] {
        let run = bin(&["transport-check", s(&scenario(name)), "--t", t]);
        assert_eq!(run.code, 0, "{name}: {}{}", run.stdout, run.stderr);
        assert!(run.stdout.contains("potential = verified"));
    }
    let run = bin(&["transport-check", s(&scenario("z_lattice.json")), "--t", "2.5"]);
    let value = |key: &str| -> f64 {
        let line = run.stdout.lines().find(|l| l.starts_with(key)).unwrap();
        line.split(" = ").nth(1).unwrap().parse().unwrap()
    };
    assert!((value("pairing") - 4.0 / 3.0).abs() < 1e-6);
    assert!((value("ot_cost") - 4.0 / 3.0).abs() < 1e-6);
}

#[test]
fn invalid_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bin(&["frobnicate"]).code, 1);
    assert_eq!(bin(&[]).code, 1);
    assert_eq!(bin(&["simulate", "/nonexistent/scenario.json"]).code, 1);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"graph": {"type": "path", "n": 3}, "mode": "growth", "source": [{"start": 0, "end": 1, "values": {"x9": 1}}], "T": 1}"#).unwrap();
    let run = in_process(&["simulate", s(&bad)]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("x9"), "{}", run.stderr);

    let run = in_process(&["converge-p", s(&scenario("star.json")), "--p-list", "16,8"]);
    assert_eq!(run.code, 1);
    let run = in_process(&["transport-check", s(&scenario("star.json")), "--t", "1000"]);
    assert_eq!(run.code, 1);
}

#[test]
fn solver_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("steep.json");
    let scenario = r#"{
        "graph": {"type": "path", "n": 4},
        "mode": "p-flow",
        "p": 1024,
        "u0": {"x2": 3, "x4": 1},
        "T": 1,
        "dt": 0.01
    }"#;
    std::fs::write(&path, scenario).unwrap();
    let out = dir.path().join("steep.csv");
    let run = in_process(&["simulate", s(&path), "--output", s(&out)]);
    assert_eq!(run.code, 2, "{}{}", run.stdout, run.stderr);
    assert!(run.stderr.starts_with("error:"));
}

#[test]
fn help_and_version_exit_zero() {
    let run = in_process(&["--help"]);
    assert_eq!(run.code, 0);
    assert!(run.stdout.contains("transport-check"));
    assert_eq!(in_process(&["--version"]).code, 0);
}
