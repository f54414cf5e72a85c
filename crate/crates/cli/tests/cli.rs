use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn ballistic(out: &Path, args: &[&str], vars: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ballistic"));
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("BALLISTIC_")) {
        c.env_remove(k);
    }
    c.envs(vars.iter().copied()).arg("--out").arg(out).args(args);
    c.output().unwrap()
}

fn ok(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn run_dir(stdout: &str) -> String {
    stdout.lines().next().unwrap().trim().to_string()
}

fn report(dir: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(Path::new(dir).join("report.json")).unwrap()).unwrap()
}

const SMALL: [&str; 6] = ["--set", "budget.n_env=3", "--set", "budget.n_path=30", "--set", "budget.dt=0.02"];

#[test]
fn constant_drift_identity_has_both_sides_at_minus_two_b_l() {
    let t = TempDir::new().unwrap();
    let args = [
        "oned",
        "identity",
        "--set",
        "env.dim=1",
        "--set",
        "env.eps=0.1",
        "--set",
        "env.lambda=0.1",
        "--set",
        "env.site_law=constant",
        "--set",
        "geometry.l=7",
    ];
    let r = report(&run_dir(&ok(&ballistic(t.path(), &args, &[]))));
    for side in ["lhs", "rhs"] {
        let v = r["headline"][side].as_f64().unwrap();
        assert!((v + 2.0 * 0.1 * 7.0).abs() < 1e-9, "{side} = {v}");
    }
    assert_eq!(r["schema"], 1);
}

#[test]
fn infeasible_mean_drift_exits_two() {
    let t = TempDir::new().unwrap();
    let o = ballistic(t.path(), &["env", "axioms", "--set", "env.eps=0.1", "--set", "env.lambda=0.3"], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mean_drift"));
    assert!(!t.path().exists() || std::fs::read_dir(t.path()).unwrap().next().is_none());
}

#[test]
fn unknown_key_exits_two() {
    let t = TempDir::new().unwrap();
    assert_eq!(ballistic(t.path(), &["env", "--set", "budget.paths=3"], &[]).status.code(), Some(2));
    assert_eq!(ballistic(t.path(), &["env"], &[("BALLISTIC_ENV_WHATEVER", "1")]).status.code(), Some(2));
    let cfg = t.path().join("c.txt");
    std::fs::write(&cfg, "[budget]\nn_env = 3\ncolour = red\n").unwrap();
    let o = ballistic(t.path(), &["env", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn timeouts_are_refused_with_exit_three() {
    let t = TempDir::new().unwrap();
    let mut args = vec!["sde", "exit-time", "--set", "budget.max_time=0.3"];
    args.extend(SMALL);
    assert_eq!(ballistic(t.path(), &args, &[]).status.code(), Some(3));
}

#[test]
fn criterion_decision_needs_an_explicit_kappa() {
    let t = TempDir::new().unwrap();
    let mut args = vec!["criterion", "evaluate"];
    args.extend(SMALL);
    let o = ballistic(t.path(), &args, &[]);
    assert_eq!(o.status.code(), Some(2));
    args.extend(["--kappa", "0.4"]);
    let r = report(&run_dir(&ok(&ballistic(t.path(), &args, &[]))));
    assert!(r["headline"]["decision"].is_boolean());
}

#[test]
fn same_config_gives_identical_bytes_whatever_the_workers() {
    let t = TempDir::new().unwrap();
    let mut args = vec!["sde", "exit-stats"];
    args.extend(SMALL);
    let a = run_dir(&ok(&ballistic(t.path(), &[&args[..], &["--workers", "1"]].concat(), &[])));
    let first = std::fs::read(Path::new(&a).join("report.json")).unwrap();
    let b = run_dir(&ok(&ballistic(t.path(), &[&args[..], &["--workers", "4"]].concat(), &[])));
    assert_eq!(a, b);
    assert_eq!(std::fs::read(Path::new(&b).join("report.json")).unwrap(), first);
    let csv = std::fs::read_to_string(Path::new(&a).join("exit_stats.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(Path::new(&a).join("config.resolved").is_file());
    assert!(std::fs::read_to_string(Path::new(&a).join("csv_schema.txt")).unwrap().contains("rho_hat"));
}

#[test]
fn environment_variables_override_the_file_and_flags_override_both() {
    let t = TempDir::new().unwrap();
    let cfg = t.path().join("c.txt");
    std::fs::write(&cfg, "[run]\nseed = 5\n[budget]\nn_env = 100\n").unwrap();
    let c = cfg.to_str().unwrap();
    let shown = ok(&ballistic(t.path(), &["config", "env", "--config", c], &[("BALLISTIC_BUDGET_N_ENV", "120")]));
    assert!(shown.contains("seed = 5") && shown.contains("n_env = 120"), "{shown}");
    let shown = ok(&ballistic(t.path(), &["config", "env", "--config", c, "--seed", "8"], &[("BALLISTIC_RUN_SEED", "6")]));
    assert!(shown.contains("seed = 8"), "{shown}");
}

#[test]
fn registry_lists_runs_and_corrupt_entries() {
    let t = TempDir::new().unwrap();
    let root = t.path().join("runs");
    assert_eq!(ok(&ballistic(&root, &["registry"], &[])), "");

    let a = run_dir(&ok(&ballistic(&root, &["env", "axioms", "--seed", "1"], &[])));
    let b = run_dir(&ok(&ballistic(&root, &["env", "axioms", "--seed", "2"], &[])));
    assert_ne!(a, b);
    let listing = ok(&ballistic(&root, &["registry"], &[]));
    assert_eq!(listing.lines().count(), 2);
    assert!(listing.contains("seed=1") && listing.contains("seed=2") && listing.contains("all_ok=true"));

    let hash = Path::new(&a).file_name().unwrap().to_str().unwrap().to_string();
    let again = ok(&ballistic(&root, &["rerun", &hash], &[]));
    assert!(again.contains("reproduced exactly"));

    std::fs::write(Path::new(&b).join("report.json"), "{").unwrap();
    std::fs::create_dir(root.join("stray")).unwrap();
    let listing = ok(&ballistic(&root, &["registry"], &[]));
    assert_eq!(listing.lines().count(), 3);
    assert_eq!(listing.matches("CORRUPT").count(), 2);
    assert!(!ballistic(&root, &["rerun", "0000000000000000"], &[]).status.success());
}
