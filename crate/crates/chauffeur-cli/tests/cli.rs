use std::fs;
use std::path::Path;
use std::process::{Command as Process, Output};

use chauffeur::export::{ADVANTAGE_HEADER, CURVE_HEADER, TRAJECTORY_HEADER};
use chauffeur_cli::{execute, parse_config, to_toml, CliError, Command};
use tempfile::TempDir;

const PROP: &str = r#"
[game]
mu1 = 0.3
mu2 = 0.2
l = 0.5
pursuer = "estimating"
evader = "deceptive"

[initial]
x0 = 2.152
y0 = -0.214
"#;

fn with_output(base: &str, dir: &Path) -> String {
    format!("{base}\n[output]\npath = {:?}\n", dir.display().to_string())
}

fn binary(args: &[&str]) -> Output {
    Process::new(env!("CARGO_BIN_EXE_chauffeur"))
        .args(args)
        .env_remove("CHAUFFEUR_WORKERS")
        .output()
        .unwrap()
}

fn config_file(dir: &TempDir, text: &str) -> String {
    let p = dir.path().join("run.toml");
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn reference_scenario_parses() {
    let cfg = parse_config(PROP).unwrap();
    assert_eq!((cfg.game.mu1, cfg.game.mu2, cfg.game.l), (0.3, 0.2, 0.5));
    let i = cfg.initial.unwrap();
    assert_eq!((i.x0, i.y0), (2.152, -0.214));
}

#[test]
fn config_round_trips() {
    let dir = TempDir::new().unwrap();
    let text = with_output(PROP, dir.path())
        + "\n[sweep]\nspacing = 0.5\nx_min = 1.0\nworkers = 2\nonly = [\"Secondary\", \"Tributary\"]\n";
    let cfg = parse_config(&text).unwrap();
    let again = parse_config(&to_toml(&cfg)).unwrap();
    assert_eq!(cfg, again);
}

#[test]
fn speed_order_is_checked() {
    let err = parse_config(&PROP.replace("mu2 = 0.2", "mu2 = 0.4")).unwrap_err();
    assert!(matches!(err, CliError::Config(_)));
    assert!(err.to_string().contains("mu1 must be at least"), "{err}");
}

#[test]
fn missing_key_is_named() {
    let err = parse_config(&PROP.replace("l = 0.5\n", "")).unwrap_err();
    assert!(err.to_string().contains("`l`"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn unknown_keys_are_rejected() {
    let err = parse_config(&PROP.replace("l = 0.5", "l = 0.5\nspeed = 2")).unwrap_err();
    assert!(err.to_string().contains("speed"), "{err}");
    let err = parse_config(&format!("{PROP}\n[extra]\na = 1\n")).unwrap_err();
    assert!(err.to_string().contains("extra"), "{err}");
}

#[test]
fn parameter_invariants_are_named() {
    let err = parse_config(&PROP.replace("l = 0.5", "l = 0.99")).unwrap_err();
    assert!(err.to_string().contains("game.mu1"), "{err}");
    let err = parse_config(&format!("{PROP}\n[integrator]\ndt = -1.0\n")).unwrap_err();
    assert!(err.to_string().contains("integrator.dt"), "{err}");
}

#[test]
fn classify_prints_both_regions() {
    let cfg = parse_config(
        &PROP
            .replace("x0 = 2.152", "x0 = 0.0")
            .replace("y0 = -0.214", "y0 = 1.5"),
    )
    .unwrap();
    let mut out = Vec::new();
    execute(&cfg, Command::Classify, &mut out).unwrap();
    assert_eq!(
        String::from_utf8(out).unwrap(),
        "UniversalPositive\nUniversalPositive\n"
    );
}

#[test]
fn simulate_writes_trajectory_and_summary() {
    let dir = TempDir::new().unwrap();
    let cfg = parse_config(&with_output(PROP, dir.path())).unwrap();
    let mut out = Vec::new();
    execute(&cfg, Command::Simulate, &mut out).unwrap();
    let summary = String::from_utf8(out).unwrap();
    assert!(summary.starts_with("capture_time=8.23"), "{summary}");
    assert!(summary.contains(" switch=1 "), "{summary}");
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(TRAJECTORY_HEADER));
}

#[test]
fn geometry_writes_both_solutions() {
    let dir = TempDir::new().unwrap();
    let cfg = parse_config(&with_output(PROP, dir.path())).unwrap();
    execute(&cfg, Command::Geometry, &mut Vec::new()).unwrap();
    for name in ["geometry_mu1.csv", "geometry_mu2.csv"] {
        let csv = fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(csv.lines().next(), Some(CURVE_HEADER));
        for family in ["barrier", "equivocal", "primary", "secondary"] {
            assert!(
                csv.contains(&format!("\n{family},")),
                "{name} lacks {family}"
            );
        }
    }
}

#[test]
fn three_by_three_sweep() {
    let dir = TempDir::new().unwrap();
    let text = with_output(PROP, dir.path())
        + "\n[sweep]\nspacing = 0.5\nx_min = 1.5\nx_max = 2.5\ny_min = -1.0\ny_max = 0.0\nworkers = 2\n";
    let cfg = parse_config(&text).unwrap();
    let mut out = Vec::new();
    execute(&cfg, Command::Sweep, &mut out).unwrap();
    let summary = String::from_utf8(out).unwrap();
    assert!(summary.starts_with("cells=9 "), "{summary}");
    let csv = fs::read_to_string(dir.path().join("advantage.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(ADVANTAGE_HEADER));
    assert_eq!(lines.count(), 9);
}

#[test]
fn binary_runs_command_from_config() {
    let dir = TempDir::new().unwrap();
    let path = config_file(
        &dir,
        &format!("command = \"simulate\"\n{}", with_output(PROP, dir.path())),
    );
    let out = binary(&["run", "--config", &path]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.contains("switch=1"));
}

#[test]
fn binary_exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = config_file(&dir, &PROP.replace("mu2 = 0.2", "mu2 = 0.5"));
    assert_eq!(
        binary(&["classify", "--config", &bad]).status.code(),
        Some(2)
    );

    let short = config_file(
        &dir,
        &format!(
            "{}\n[integrator]\nt_max = 1.0\n",
            with_output(PROP, dir.path())
        ),
    );
    let out = binary(&["simulate", "--config", &short]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stdout).contains("capture_time=none"));

    let unsupported = config_file(&dir, &PROP.replace("mu2 = 0.2", "mu2 = 0.1"));
    assert_eq!(
        binary(&["classify", "--config", &unsupported])
            .status
            .code(),
        Some(3)
    );

    let missing = dir.path().join("absent.toml").display().to_string();
    let out = binary(&["classify", "--config", &missing]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.toml"));
}

#[test]
fn worker_override_from_environment() {
    let dir = TempDir::new().unwrap();
    let text = with_output(PROP, dir.path())
        + "\n[sweep]\nspacing = 0.5\nx_min = 1.5\nx_max = 2.0\ny_min = -0.5\ny_max = 0.0\n";
    let path = config_file(&dir, &text);
    let run = |workers: &str| {
        Process::new(env!("CARGO_BIN_EXE_chauffeur"))
            .args(["sweep", "--config", &path])
            .env("CHAUFFEUR_WORKERS", workers)
            .output()
            .unwrap()
    };
    let out = run("1");
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let serial = fs::read(dir.path().join("advantage.csv")).unwrap();
    assert!(run("3").status.success());
    assert_eq!(serial, fs::read(dir.path().join("advantage.csv")).unwrap());
    assert_eq!(run("zero").status.code(), Some(2));
}
