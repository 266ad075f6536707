use dbqsp::harness::{run_experiment, ExperimentConfig, ExperimentKind, OutputFormat};
use dbqsp::prelude::*;
use proptest::prelude::*;

fn small(kind: ExperimentKind, seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(kind, seed);
    c.sweep.instances = Some(4);
    c.sweep.triples = 5;
    c.sweep.n_max = 3;
    c
}

#[test]
fn written_files_are_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let c = small(ExperimentKind::ExactSynthesis, 5);
    let fa = run_experiment(&c).unwrap().write(a.path(), OutputFormat::Csv).unwrap();
    let fb = run_experiment(&c).unwrap().write(b.path(), OutputFormat::Csv).unwrap();
    assert_eq!(fa.len(), 4);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
}

#[test]
fn seeds_change_the_instances() {
    let a = run_experiment(&small(ExperimentKind::ExactSynthesis, 1)).unwrap();
    let b = run_experiment(&small(ExperimentKind::ExactSynthesis, 2)).unwrap();
    assert_ne!(a.table("instances"), b.table("instances"));
    assert_ne!(a.config_hash, b.config_hash);
}

#[test]
fn summary_shape() {
    let r = run_experiment(&small(ExperimentKind::Depth, 0)).unwrap();
    let s = r.summary();
    assert_eq!(s["experiment"], "depth");
    assert_eq!(s["pass"], true);
    let cells = s["cells"].as_array().unwrap();
    assert!(cells.iter().all(|c| c["margin"].is_number() && c["bound"].is_number()));
    assert!(r.summary_line().starts_with("depth PASS"));
}

#[test]
fn json_tables_match_csv() {
    let d = tempfile::tempdir().unwrap();
    let r = run_experiment(&small(ExperimentKind::Postselection, 0)).unwrap();
    r.write(d.path(), OutputFormat::Json).unwrap();
    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("postselection_gamma.json")).unwrap()).unwrap();
    let t = r.table("gamma").unwrap();
    assert_eq!(rows.as_array().unwrap().len(), t.rows.len());
    assert_eq!(rows[0]["gamma"], t.rows[0][0]);
}

#[test]
fn single_run_from_instance() {
    let mut c = ExperimentConfig::new(ExperimentKind::Run, 0);
    c.instance.hamiltonian = Some(Observable::from_strs(2, &[(0.5, "ZI"), (0.5, "XX")]).unwrap());
    c.instance.initial_state = Some("+0".into());
    c.instance.poly = Some(PolynomialSpec::from_roots(vec![C64::new(0.3, 1.0), C64::new(-0.2, 0.0)]));
    let r = run_experiment(&c).unwrap();
    assert!(r.pass());
    assert_eq!(r.table("steps").unwrap().rows.len(), 2);
}

#[test]
fn eigenstate_start_is_reported() {
    let mut c = ExperimentConfig::new(ExperimentKind::Run, 0);
    c.instance.hamiltonian = Some(Observable::from_strs(1, &[(1.0, "Z")]).unwrap());
    c.instance.initial_state = Some("0".into());
    c.instance.poly = Some(PolynomialSpec::from_real_roots(&[0.5]));
    assert!(matches!(run_experiment(&c), Err(Error::EigenstateBreakdown { step: 0, .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn config_round_trips_through_toml(seed in any::<u32>(), n_max in 1usize..=12, eps in 0.01f64..0.4) {
        let mut c = ExperimentConfig::new(ExperimentKind::Estimators, seed as u64);
        c.sweep.n_max = n_max;
        c.sweep.n_min = 1;
        c.sweep.epsilon = eps;
        let text = toml::to_string(&c).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.hash(), c.hash());
    }
}
