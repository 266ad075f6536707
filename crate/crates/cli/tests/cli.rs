use std::path::Path;
use std::process::{Command, Output};

fn dbqsp(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dbqsp"))
        .args(args)
        .arg("--output")
        .arg(out)
        .env_remove("DBQSP_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn summary(dir: &Path, name: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join(format!("{name}_summary.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn verify_writes_tables_and_summary() {
    let d = tempfile::tempdir().unwrap();
    let o = dbqsp(&["verify", "--seed", "7", "--set", "sweep.instances=8", "--set", "sweep.triples=10"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["exact_synthesis_instances.csv", "exact_synthesis_idempotence.csv", "exact_synthesis_examples.csv", "exact_synthesis_config.json"] {
        assert!(d.path().join(f).exists(), "{f}");
    }
    let s = summary(d.path(), "exact_synthesis");
    assert_eq!(s["pass"], true);
    assert_eq!(s["seed"], 7);
    let cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("exact_synthesis_config.json")).unwrap()).unwrap();
    assert_eq!(cfg["sweep"]["instances"], 8);
    let csv = std::fs::read_to_string(d.path().join("exact_synthesis_instances.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["sweep", "--experiment", "stability", "--seed", "11"];
    assert_eq!(dbqsp(&args, a.path()).status.code(), Some(0));
    assert_eq!(dbqsp(&[&args[..], &["--jobs", "1"]].concat(), b.path()).status.code(), Some(0));
    for name in ["stability_parameters.csv", "stability_hamiltonian.csv", "stability_statistical.csv", "stability_summary.json"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn run_from_toml_config() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.toml");
    std::fs::write(
        &cfg,
        r#"
experiment = "run"
seed = 1

[instance]
initial_state = "+"
hamiltonian = { n_qubits = 1, terms = [{ w = 1.0, p = "Z" }] }
poly = { leading = [1.0, 0.0], roots = [[0.0, 0.0]] }
"#,
    )
    .unwrap();
    let o = dbqsp(&["run", "--config", cfg.to_str().unwrap(), "--format", "json"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let steps: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("run_steps.json")).unwrap()).unwrap();
    let s = steps[0]["s"].as_f64().unwrap();
    assert!((s + std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    assert!(steps[0]["dist_raw"].as_f64().unwrap() < 1e-12);
}

#[test]
fn compiled_run_reports_depth() {
    let d = tempfile::tempdir().unwrap();
    let o = dbqsp(&["run", "--set", "instance.n_qubits=2", "--set", "sweep.degree_max=2", "--set", "sweep.N=4"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.path().join("run_steps.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    // N_2 at N = 4 is 17·(19² − 1)/18 = 340.
    assert_eq!(last.split(',').nth(7), Some("340"));
}

#[test]
fn failing_check_exits_one() {
    let d = tempfile::tempdir().unwrap();
    let o = dbqsp(&["verify", "--set", "sweep.instances=3", "--set", "sweep.triples=2", "--set", "sweep.tol=0.0"], d.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
    assert_eq!(summary(d.path(), "exact_synthesis")["pass"], false);
}

#[test]
fn usage_errors_exit_two() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(dbqsp(&["verify", "--set", "sweep.bogus=1"], d.path()).status.code(), Some(2));
    assert_eq!(dbqsp(&["verify", "--set", "nonsense"], d.path()).status.code(), Some(2));
    assert_eq!(dbqsp(&["verify", "--config", "/nonexistent/x.toml"], d.path()).status.code(), Some(2));
    assert_eq!(dbqsp(&["sweep", "--set", "sweep.N_max=64", "--experiment", "depth"], d.path()).status.code(), Some(2));
    assert_eq!(dbqsp(&["frobnicate"], d.path()).status.code(), Some(2));
    let cfg = d.path().join("q.toml");
    std::fs::write(&cfg, "experiment = \"qite\"\n").unwrap();
    assert_eq!(dbqsp(&["verify", "--config", cfg.to_str().unwrap()], d.path()).status.code(), Some(2));
}

#[test]
fn oversized_register_exits_three() {
    let d = tempfile::tempdir().unwrap();
    let o = dbqsp(&["verify", "--set", "instance.n_qubits=13"], d.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cap"));
    assert_eq!(dbqsp(&["qite", "--set", "instance.n_qubits=9"], d.path()).status.code(), Some(3));
}

#[test]
fn output_dir_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_dbqsp"))
        .args(["sweep", "--experiment", "depth", "--set", "sweep.K_max=2", "--set", "sweep.N_max=3"])
        .env("DBQSP_OUTPUT_DIR", d.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let grid = std::fs::read_to_string(d.path().join("depth_grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 7);
}
