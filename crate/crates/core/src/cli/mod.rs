//! Command-line experiment runner.
//!
//! `cvsteg <experiment> [--param value]... --output DIR [--format csv|json] [--seed N]`
//! writes one or more data tables plus `manifest.json` into `DIR`.
//! `cvsteg list [--json]` prints the catalog.

mod experiments;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};
use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::error::Error as SimError;

pub use experiments::catalog;

/// Environment variable that replaces the Fock cutoff of every experiment using one.
pub const NMAX_OVERRIDE_VAR: &str = "CVSTEG_NMAX_OVERRIDE";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CUTOFF: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Simulation(SimError::CutoffTooSmall { .. } | SimError::GridOverflow { .. }) => EXIT_CUTOFF,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 1,
            _ => EXIT_CONFIG,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Simulation(SimError::CutoffTooSmall { .. }) => "cutoff_too_small",
            CliError::Simulation(SimError::GridOverflow { .. }) => "grid_overflow",
            CliError::Simulation(_) => "simulation",
            CliError::Io(_) => "io",
            CliError::Csv(_) => "csv",
            CliError::Json(_) => "json",
        }
    }

    /// Machine-readable error record.
    pub fn record(&self) -> Value {
        json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ParamKind {
    Float { default: f64 },
    Int { default: u64 },
    Choice { default: &'static str, options: &'static [&'static str] },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    #[serde(flatten)]
    pub kind: ParamKind,
    pub help: &'static str,
}

impl ParamSpec {
    pub const fn float(name: &'static str, default: f64, help: &'static str) -> Self {
        Self {
            name,
            kind: ParamKind::Float { default },
            help,
        }
    }

    pub const fn int(name: &'static str, default: u64, help: &'static str) -> Self {
        Self {
            name,
            kind: ParamKind::Int { default },
            help,
        }
    }

    pub const fn choice(
        name: &'static str,
        default: &'static str,
        options: &'static [&'static str],
        help: &'static str,
    ) -> Self {
        Self {
            name,
            kind: ParamKind::Choice { default, options },
            help,
        }
    }

    fn flag(&self) -> String {
        self.name.replace('_', "-")
    }

    fn arg(&self) -> Arg {
        let arg = Arg::new(self.name).long(self.flag()).help(self.help).action(ArgAction::Set);
        match self.kind {
            ParamKind::Float { default } => arg
                .value_parser(value_parser!(f64))
                .allow_negative_numbers(true)
                .default_value(default.to_string()),
            ParamKind::Int { default } => arg.value_parser(value_parser!(u64)).default_value(default.to_string()),
            ParamKind::Choice { default, options } => arg
                .value_parser(clap::builder::PossibleValuesParser::new(options.iter().copied()))
                .default_value(default),
        }
    }

    fn read(&self, matches: &ArgMatches) -> Value {
        match self.kind {
            ParamKind::Float { .. } => json!(matches.get_one::<f64>(self.name).copied()),
            ParamKind::Int { .. } => json!(matches.get_one::<u64>(self.name).copied()),
            ParamKind::Choice { .. } => json!(matches.get_one::<String>(self.name).cloned()),
        }
    }
}

pub type Runner = fn(&Context) -> CliResult<Outcome>;

#[derive(Clone, Serialize)]
pub struct Experiment {
    pub name: &'static str,
    pub figure: &'static str,
    pub summary: &'static str,
    pub params: Vec<ParamSpec>,
    #[serde(skip)]
    pub run: Runner,
}

/// Resolved parameters of one invocation.
#[derive(Debug, Clone)]
pub struct Context {
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
    pub n_max_override: Option<usize>,
}

impl Context {
    pub fn f64(&self, name: &str) -> CliResult<f64> {
        self.params
            .get(name)
            .and_then(Value::as_f64)
            .ok_or_else(|| CliError::Config(format!("missing numeric parameter {name}")))
    }

    pub fn usize(&self, name: &str) -> CliResult<usize> {
        self.params
            .get(name)
            .and_then(Value::as_u64)
            .map(|v| v as usize)
            .ok_or_else(|| CliError::Config(format!("missing integer parameter {name}")))
    }

    pub fn choice(&self, name: &str) -> CliResult<&str> {
        self.params
            .get(name)
            .and_then(Value::as_str)
            .ok_or_else(|| CliError::Config(format!("missing choice parameter {name}")))
    }

    /// The environment override, else `requested` when nonzero, else `auto`.
    pub fn n_max(&self, requested: usize, auto: usize) -> usize {
        self.n_max_override
            .unwrap_or(if requested > 0 { requested } else { auto })
    }
}

/// A named table written as `<name>.csv` or `<name>.json`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn write(&self, dir: &Path, format: Format) -> CliResult<PathBuf> {
        match format {
            Format::Csv => {
                let path = dir.join(format!("{}.csv", self.name));
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(cell_text))?;
                }
                w.flush()?;
                Ok(path)
            }
            Format::Json => {
                let path = dir.join(format!("{}.json", self.name));
                let records: Vec<Map<String, Value>> = self
                    .rows
                    .iter()
                    .map(|row| self.columns.iter().cloned().zip(row.iter().cloned()).collect())
                    .collect();
                fs::write(&path, serde_json::to_string_pretty(&records)?)?;
                Ok(path)
            }
        }
    }
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// What an experiment hands back for writing.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub summary: Map<String, Value>,
    pub n_max: Option<usize>,
    pub lost_mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

fn command(experiments: &[Experiment]) -> Command {
    let mut cmd = Command::new("cvsteg")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Continuous-variable entanglement sharing experiments")
        .subcommand_required(true)
        .subcommand(
            Command::new("list")
                .about("Print the experiment catalog")
                .arg(Arg::new("json").long("json").action(ArgAction::SetTrue).help("Emit JSON")),
        );
    for exp in experiments {
        let mut sub = Command::new(exp.name)
            .about(format!("{} ({})", exp.summary, exp.figure))
            .arg(
                Arg::new("output")
                    .long("output")
                    .required(true)
                    .value_parser(value_parser!(PathBuf))
                    .help("Directory for data files and manifest"),
            )
            .arg(
                Arg::new("format")
                    .long("format")
                    .value_parser(["csv", "json"])
                    .default_value("csv")
                    .help("Data file format"),
            )
            .arg(
                Arg::new("seed")
                    .long("seed")
                    .value_parser(value_parser!(u64))
                    .default_value("7")
                    .help("Random seed"),
            );
        for p in &exp.params {
            sub = sub.arg(p.arg());
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

fn print_catalog(experiments: &[Experiment], as_json: bool) -> CliResult<()> {
    if as_json {
        println!("{}", serde_json::to_string_pretty(&experiments)?);
        return Ok(());
    }
    for exp in experiments {
        println!("{:<20} {:<12} {}", exp.name, exp.figure, exp.summary);
        for p in &exp.params {
            let default = match p.kind {
                ParamKind::Float { default } => default.to_string(),
                ParamKind::Int { default } => default.to_string(),
                ParamKind::Choice { default, options } => format!("{default} of {}", options.join("|")),
            };
            println!("    --{:<14} {:<24} {}", p.flag(), default, p.help);
        }
    }
    Ok(())
}

fn n_max_override() -> CliResult<Option<usize>> {
    match std::env::var(NMAX_OVERRIDE_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{NMAX_OVERRIDE_VAR}={v} is not a non-negative integer"))),
        Err(_) => Ok(None),
    }
}

fn execute(exp: &Experiment, matches: &ArgMatches) -> CliResult<Value> {
    let output = matches
        .get_one::<PathBuf>("output")
        .cloned()
        .ok_or_else(|| CliError::Config("--output is required".into()))?;
    let format = match matches.get_one::<String>("format").map(String::as_str) {
        Some("json") => Format::Json,
        _ => Format::Csv,
    };
    let seed = *matches.get_one::<u64>("seed").unwrap_or(&7);
    let params: BTreeMap<String, Value> = exp.params.iter().map(|p| (p.name.to_string(), p.read(matches))).collect();
    let ctx = Context {
        params,
        seed,
        n_max_override: n_max_override()?,
    };
    fs::create_dir_all(&output)?;
    let started = Instant::now();
    let outcome = (exp.run)(&ctx)?;
    let runtime = started.elapsed().as_secs_f64();
    let files = outcome
        .tables
        .iter()
        .map(|t| {
            t.write(&output, format)
                .map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default())
        })
        .collect::<CliResult<Vec<String>>>()?;
    let manifest = json!({
        "experiment": exp.name,
        "figure": exp.figure,
        "params": ctx.params,
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "runtime_seconds": runtime,
        "n_max": outcome.n_max,
        "n_max_override": ctx.n_max_override,
        "lost_mass": outcome.lost_mass,
        "format": if format == Format::Json { "json" } else { "csv" },
        "files": files,
        "results": outcome.summary,
    });
    fs::write(output.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let experiments = catalog();
    let matches = match command(&experiments).try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let err = CliError::Config(e.to_string().trim().to_string());
            eprintln!("{}", err.record());
            return err.exit_code();
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let result = if name == "list" {
        print_catalog(&experiments, sub.get_flag("json"))
    } else {
        let exp = experiments.iter().find(|e| e.name == name).expect("catalog entry");
        execute(exp, sub).map(|manifest| println!("{manifest}"))
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(err) => {
            let record = err.record();
            eprintln!("{record}");
            if let Some(dir) = sub.try_get_one::<PathBuf>("output").ok().flatten() {
                let _ = fs::create_dir_all(dir)
                    .and_then(|_| fs::write(dir.join("error.json"), record.to_string()));
            }
            err.exit_code()
        }
    }
}
