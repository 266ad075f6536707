//! `dbqsp`: run DB-QSP instances and the verification experiments.
//!
//! Exit codes: 0 all checks pass, 1 a check failed or the run errored,
//! 2 bad usage or configuration, 3 the instance exceeds the simulator cap.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dbqsp::harness::{run_experiment, ExperimentConfig, ExperimentKind, ExperimentResult, OutputFormat};
use dbqsp::Error;

#[derive(Parser)]
#[command(name = "dbqsp", version, about = "Double-bracket quantum signal processing on a state-vector simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory for tables and summaries.
    #[arg(long, global = true, env = "DBQSP_OUTPUT_DIR")]
    output: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set sweep.N_max=1024`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    GcScaling,
    Depth,
    Stability,
}

#[derive(Subcommand)]
enum Command {
    /// One DB-QSP run of the configured instance (exact unless `sweep.N` is set).
    Run,
    /// Exact synthesis against the polynomial oracle on random instances.
    Verify,
    /// Parameter sweeps: compilation error, depth, stability. All three by default.
    Sweep {
        #[arg(long, value_enum)]
        experiment: Option<SweepKind>,
    },
    /// Monte-Carlo checks of the variance estimators and shot allocation.
    Estimate,
    /// Ground-state preparation by double-bracket imaginary-time steps.
    Qite,
    /// Matrix inversion through a Hermitian dilation.
    Invert,
    /// Post-selection against DB-QSP as the target overlap shrinks.
    Compare,
    /// Every experiment, with a combined summary.
    Report,
}

enum Failure {
    Usage(String),
    Cap(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ResourceCap { .. } => Failure::Cap(e.to_string()),
            Error::InvalidArgument(_) | Error::Parse(_) => Failure::Usage(e.to_string()),
            e => Failure::Run(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Cap(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let c = &cli.common;
    if let Some(j) = c.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Failure::Usage(format!("--jobs: {e}")))?;
    }
    let kinds: Vec<ExperimentKind> = match cli.command {
        Command::Run => vec![ExperimentKind::Run],
        Command::Verify => vec![ExperimentKind::ExactSynthesis],
        Command::Sweep { experiment: Some(SweepKind::GcScaling) } => vec![ExperimentKind::GcScaling],
        Command::Sweep { experiment: Some(SweepKind::Depth) } => vec![ExperimentKind::Depth],
        Command::Sweep { experiment: Some(SweepKind::Stability) } => vec![ExperimentKind::Stability],
        Command::Sweep { experiment: None } => vec![ExperimentKind::GcScaling, ExperimentKind::Depth, ExperimentKind::Stability],
        Command::Estimate => vec![ExperimentKind::Estimators],
        Command::Qite => vec![ExperimentKind::Qite],
        Command::Invert => vec![ExperimentKind::Inversion],
        Command::Compare => vec![ExperimentKind::Postselection],
        Command::Report => ExperimentKind::ALL.to_vec(),
    };
    let base = load_table(c)?;
    let format = match c.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    let strict = kinds.len() == 1;
    let configs = kinds.iter().map(|&k| build_config(&base, k, strict)).collect::<Result<Vec<_>, _>>()?;
    configs.iter().try_for_each(|cfg| cfg.validate().map_err(Failure::from))?;

    let mut results = Vec::new();
    for cfg in &configs {
        let dir = output_dir(c, cfg);
        let res = run_experiment(cfg)?;
        res.write(&dir, format)?;
        write_config(&dir, cfg)?;
        println!("{}", res.summary_line());
        results.push(res);
    }
    let pass = results.iter().all(ExperimentResult::pass);
    if results.len() > 1 {
        let dir = output_dir(c, &configs[0]);
        let summary = serde_json::json!({
            "pass": pass,
            "experiments": results.iter().map(ExperimentResult::summary).collect::<Vec<_>>(),
        });
        let text = serde_json::to_string_pretty(&summary).map_err(|e| Failure::Run(e.to_string()))? + "\n";
        std::fs::write(dir.join("report.json"), text).map_err(|e| Failure::Run(e.to_string()))?;
    }
    Ok(pass)
}

fn load_table(c: &Common) -> Result<toml::Table, Failure> {
    let mut t = match &c.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            text.parse::<toml::Table>().map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for kv in &c.set {
        let (key, raw) = kv.split_once('=').ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        set_path(&mut t, key.trim(), parse_value(raw.trim()))?;
    }
    if let Some(s) = c.seed {
        let s = i64::try_from(s).map_err(|_| Failure::Usage(format!("--seed {s} exceeds the TOML integer range")))?;
        t.insert("seed".into(), toml::Value::Integer(s));
    }
    Ok(t)
}

/// TOML literal if it parses as one, otherwise a bare string.
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(t: &mut toml::Table, key: &str, v: toml::Value) -> Result<(), Failure> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Failure::Usage(format!("empty key in --set {key:?}")))?;
    let mut cur = t;
    for p in parts {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Failure::Usage(format!("--set {key}: {p} is not a table")))?;
    }
    cur.insert(last.to_string(), v);
    Ok(())
}

/// `strict` commands run exactly one experiment and refuse a configuration
/// file written for another.
fn build_config(base: &toml::Table, kind: ExperimentKind, strict: bool) -> Result<ExperimentConfig, Failure> {
    let mut t = base.clone();
    if let Some(named) = t.get("experiment").and_then(|v| v.as_str()) {
        if strict && named != kind.name() {
            return Err(Failure::Usage(format!("configuration is for {named:?}, not {:?}", kind.name())));
        }
    }
    t.insert("experiment".into(), toml::Value::String(kind.name().into()));
    toml::Value::Table(t).try_into().map_err(|e: toml::de::Error| Failure::Usage(format!("configuration: {}", e.message())))
}

fn output_dir(c: &Common, cfg: &ExperimentConfig) -> PathBuf {
    c.output.clone().or_else(|| cfg.output_dir().map(Path::to_path_buf)).unwrap_or_else(|| PathBuf::from("out"))
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(cfg).map_err(|e| Failure::Run(e.to_string()))? + "\n";
    std::fs::write(dir.join(format!("{}_config.json", cfg.experiment.name())), text).map_err(|e| Failure::Run(e.to_string()))
}
