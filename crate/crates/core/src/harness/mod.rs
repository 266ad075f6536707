//! Seeded experiments with CSV tables and a JSON pass/fail summary.
//!
//! Every experiment is a pure function of its [`ExperimentConfig`]. Cells of a
//! sweep draw from `derive_seed(seed, cell)`, run in parallel, and are
//! collected in cell order, so output files are byte-identical across runs.

mod experiments;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub use experiments::{
    depth_accounting, estimator_suite, gc_error_scaling, matrix_inversion_demo, postselection_comparison,
    qite_groundstate, single_run, stability_experiments, tfim, verify_exact_synthesis, QITE_MAX_QUBITS,
};

use crate::error::{Error, Result};
use crate::pauli::{Observable, Pauli, PauliString, DEFAULT_DENSE_CAP};
use crate::poly::PolynomialSpec;
use crate::state::{HermitianOperator, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// One DB-QSP run of the configured instance.
    Run,
    ExactSynthesis,
    GcScaling,
    Depth,
    Stability,
    Qite,
    Inversion,
    Postselection,
    Estimators,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::ExactSynthesis,
        ExperimentKind::GcScaling,
        ExperimentKind::Depth,
        ExperimentKind::Stability,
        ExperimentKind::Qite,
        ExperimentKind::Inversion,
        ExperimentKind::Postselection,
        ExperimentKind::Estimators,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Run => "run",
            ExperimentKind::ExactSynthesis => "exact_synthesis",
            ExperimentKind::GcScaling => "gc_scaling",
            ExperimentKind::Depth => "depth",
            ExperimentKind::Stability => "stability",
            ExperimentKind::Qite => "qite",
            ExperimentKind::Inversion => "inversion",
            ExperimentKind::Postselection => "postselection",
            ExperimentKind::Estimators => "estimators",
        }
    }
}

/// Fixed parts of an instance. Unset fields fall back to each experiment's
/// default ensemble.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstanceSpec {
    pub n_qubits: Option<usize>,
    pub hamiltonian: Option<Observable>,
    /// Product-state string over `0 1 + - r l`.
    pub initial_state: Option<String>,
    pub poly: Option<PolynomialSpec>,
}

/// Sweep knobs. Each experiment reads the ones it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct Sweep {
    pub instances: Option<usize>,
    pub n_min: usize,
    pub n_max: usize,
    pub degree_max: usize,
    /// Oracle-distance tolerance of exact synthesis.
    pub tol: f64,
    /// Idempotence triples and their residual tolerance.
    pub triples: usize,
    pub idempotence_tol: f64,
    pub K: Option<u32>,
    pub N: Option<u64>,
    pub N_max: Option<u64>,
    pub K_max: Option<u32>,
    pub slope_min: f64,
    pub slope_max: f64,
    pub deltas: Vec<f64>,
    pub delta_h: Vec<f64>,
    pub trials: usize,
    pub shots: Vec<u64>,
    pub g: f64,
    pub steps: usize,
    pub fidelity_target: f64,
    pub kappa: f64,
    pub epsilon: f64,
    pub gammas: Vec<f64>,
    pub gamma_small: f64,
    pub gamma_ref: f64,
    pub resamples: usize,
}

impl Default for Sweep {
    fn default() -> Self {
        Sweep {
            instances: None,
            n_min: 2,
            n_max: 6,
            degree_max: 6,
            tol: 1e-9,
            triples: 200,
            idempotence_tol: 1e-10,
            K: None,
            N: None,
            N_max: None,
            K_max: None,
            slope_min: -0.6,
            slope_max: -0.4,
            deltas: vec![1e-3, 1e-2],
            delta_h: vec![1e-3, 1e-2],
            trials: 10,
            shots: vec![1_000, 10_000, 100_000, 1_000_000],
            g: 1.0,
            steps: 10,
            fidelity_target: 0.99,
            kappa: 2.0,
            epsilon: 0.1,
            gammas: vec![0.5, 0.1, 1e-2, 1e-3, 1e-4],
            gamma_small: 1e-3,
            gamma_ref: 0.5,
            resamples: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub instance: InstanceSpec,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = DEFAULT_DENSE_CAP;

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind, seed: u64) -> Self {
        ExperimentConfig { experiment, seed, instance: InstanceSpec::default(), sweep: Sweep::default(), output_path: None }
    }

    /// Rejects registers beyond [`MAX_QUBITS`] and sweeps beyond the depth grid cap.
    pub fn validate(&self) -> Result<()> {
        let n = self
            .instance
            .n_qubits
            .into_iter()
            .chain(self.instance.hamiltonian.as_ref().map(|h| h.n_qubits()))
            .chain([self.sweep.n_max])
            .max()
            .unwrap_or(0);
        if n > MAX_QUBITS {
            return Err(Error::ResourceCap { n_qubits: n, cap: MAX_QUBITS });
        }
        if self.sweep.n_min > self.sweep.n_max {
            return Err(Error::InvalidArgument("n_min exceeds n_max".into()));
        }
        if self.experiment == ExperimentKind::Depth
            && (self.sweep.K_max.unwrap_or(4) > 4 || self.sweep.N_max.unwrap_or(32) > 32)
        {
            return Err(Error::InvalidArgument("depth grid is capped at K <= 4, N <= 32".into()));
        }
        if let (Some(h), Some(n)) = (&self.instance.hamiltonian, self.instance.n_qubits) {
            if h.n_qubits() != n {
                return Err(Error::Dimension { expected: n, found: h.n_qubits() });
            }
        }
        Ok(())
    }

    /// Output directory, if set.
    pub fn output_dir(&self) -> Option<&Path> {
        self.output_path.as_deref()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// One asserted inequality with its measured value and the bound it is held to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    /// Positive when the inequality holds with room to spare.
    pub margin: f64,
    pub pass: bool,
}

impl Check {
    /// `measured ≤ bound`.
    pub fn le(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        let margin = bound - measured;
        Check { name: name.into(), measured, bound, margin, pass: margin >= 0.0 }
    }

    /// `measured < bound`.
    pub fn lt(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        let margin = bound - measured;
        Check { name: name.into(), measured, bound, margin, pass: margin > 0.0 }
    }

    /// `measured ≥ bound`.
    pub fn ge(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        let margin = measured - bound;
        Check { name: name.into(), measured, bound, margin, pass: margin >= 0.0 }
    }

    /// `measured == expected` for counts.
    pub fn eq(name: impl Into<String>, measured: f64, expected: f64) -> Self {
        Check { name: name.into(), measured, bound: expected, margin: -(measured - expected).abs(), pass: measured == expected }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Index of a column by name.
    pub fn col(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric column values; non-numbers become NaN.
    pub fn column_f64(&self, name: &str) -> Vec<f64> {
        let Some(c) = self.col(name) else { return Vec::new() };
        self.rows.iter().map(|r| r[c].as_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(crate::engine::csv_err)?;
        for r in &self.rows {
            w.write_record(r.iter().map(cell_text)).map_err(crate::engine::csv_err)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Parse(e.to_string()))?).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Rows as JSON objects keyed by header.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| Value::Object(self.header.iter().cloned().zip(r.iter().cloned()).collect()))
                .collect(),
        )
    }
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        v => v.to_string(),
    }
}

/// Float cell. Non-finite values are written as text.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(x.to_string()))
}

/// Integer cell; counts above `u64` are written as text.
pub fn int(x: u128) -> Value {
    u64::try_from(x).map(Value::from).unwrap_or_else(|_| Value::String(x.to_string()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub config_hash: String,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
}

impl ExperimentResult {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// All checks whose name starts with `prefix`.
    pub fn checks_named<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
        self.checks.iter().filter(move |c| c.name.starts_with(prefix))
    }

    /// `{"experiment", "pass", "cells", "seed", "config_hash"}`.
    pub fn summary(&self) -> Value {
        serde_json::json!({
            "experiment": self.experiment.name(),
            "pass": self.pass(),
            "cells": self.checks,
            "seed": self.seed,
            "config_hash": self.config_hash,
        })
    }

    /// One line: name, PASS/FAIL, failing-check count, tightest margin.
    pub fn summary_line(&self) -> String {
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        let worst = self.checks.iter().min_by(|a, b| a.margin.total_cmp(&b.margin));
        let tail = worst.map(|c| format!(", tightest {} margin {:.3e}", c.name, c.margin)).unwrap_or_default();
        format!(
            "{} {}: {}/{} checks pass{}",
            self.experiment.name(),
            if failed == 0 { "PASS" } else { "FAIL" },
            self.checks.len() - failed,
            self.checks.len(),
            tail
        )
    }

    /// Writes `<experiment>_<table>.{csv,json}` and `<experiment>_summary.json` under `dir`.
    pub fn write(&self, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        for t in &self.tables {
            let (ext, body) = match format {
                OutputFormat::Csv => ("csv", t.to_csv()?),
                OutputFormat::Json => ("json", serde_json::to_string_pretty(&t.to_json())? + "\n"),
            };
            let p = dir.join(format!("{}_{}.{ext}", self.experiment.name(), t.name));
            fs::write(&p, body)?;
            out.push(p);
        }
        let p = dir.join(format!("{}_summary.json", self.experiment.name()));
        fs::write(&p, serde_json::to_string_pretty(&self.summary())? + "\n")?;
        out.push(p);
        Ok(out)
    }
}

/// Dispatch on `config.experiment`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let (tables, checks) = match config.experiment {
        ExperimentKind::Run => single_run(config)?,
        ExperimentKind::ExactSynthesis => verify_exact_synthesis(config)?,
        ExperimentKind::GcScaling => gc_error_scaling(config)?,
        ExperimentKind::Depth => depth_accounting(config)?,
        ExperimentKind::Stability => stability_experiments(config)?,
        ExperimentKind::Qite => qite_groundstate(config)?,
        ExperimentKind::Inversion => matrix_inversion_demo(config)?,
        ExperimentKind::Postselection => postselection_comparison(config)?,
        ExperimentKind::Estimators => estimator_suite(config)?,
    };
    Ok(ExperimentResult { experiment: config.experiment, seed: config.seed, config_hash: config.hash(), tables, checks })
}

/// Random 1- and 2-local Pauli sum with `2n` terms, weights uniform in
/// `[−1, 1]`, scaled to spectral norm 1.
pub fn random_local_hamiltonian(n: usize, rng: &mut impl rand::Rng) -> Result<Observable> {
    let letters = [Pauli::X, Pauli::Y, Pauli::Z];
    let mut terms = Vec::new();
    while terms.len() < 2 * n {
        let mut ls = vec![Pauli::I; n];
        let k = if n == 1 { 1 } else { rng.random_range(1..=2) };
        let a = rng.random_range(0..n);
        ls[a] = letters[rng.random_range(0..3)];
        if k == 2 {
            let b = (a + rng.random_range(1..n)) % n;
            ls[b] = letters[rng.random_range(0..3)];
        }
        terms.push((rng.random_range(-1.0..1.0), PauliString::new(ls)?));
    }
    let h = Observable::new(n, terms)?;
    let norm = HermitianOperator::from_observable(&h)?.spectral_norm();
    if norm == 0.0 {
        return random_local_hamiltonian(n, rng);
    }
    Ok(h.scaled(1.0 / norm))
}

/// `degree` roots, a fraction of them complex. Real roots lie in `[−1.5, 1.5]`;
/// complex ones have real part in `[−1, 1]` and `|Im z|` in `[0.2, 1.5]`.
pub fn random_roots(degree: usize, rng: &mut impl rand::Rng) -> Vec<C64> {
    (0..degree)
        .map(|_| {
            if rng.random_bool(0.5) {
                C64::new(rng.random_range(-1.5..1.5), 0.0)
            } else {
                let im = rng.random_range(0.2..1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                C64::new(rng.random_range(-1.0..1.0), im)
            }
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
