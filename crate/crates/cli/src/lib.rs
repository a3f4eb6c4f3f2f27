//! `selmer`: one binary with a subcommand per library module.
//!
//! Exit codes: 0 success, 1 computation failure (or a failed `verify`),
//! 2 usage error.

pub mod commands;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use output::{Format, Header, Report};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) | CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Compute(m) => write!(f, "computation failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

/// Wraps library errors as computation failures.
pub fn compute<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Compute(e.to_string())
}

#[derive(Parser, Debug, Serialize)]
#[command(name = "selmer", version, about = "Selmer-rank distributions, Galois-module checks and 2-descent experiments")]
pub struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = one per core). Never changes results.
    #[arg(long, global = true, default_value_t = 0)]
    #[serde(skip)]
    pub workers: usize,
    /// Output file (default stdout).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Decimal digits for approximate values.
    #[arg(long, global = true, default_value_t = 30)]
    pub precision_digits: usize,
    /// JSON object of flag values; flags given on the command line win.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub params_file: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Corank distribution P(j|n) or its limit.
    Dist(commands::dist::DistArgs),
    /// Theoretical and Monte Carlo moments of #coker.
    Moments(commands::dist::MomentArgs),
    /// Recover a distribution from its moments.
    Invert(commands::invert::InvertArgs),
    /// Cofavored / potentially-favored analysis of a module fixture.
    Module(commands::module::ModuleArgs),
    /// Frobenius-class model simulations.
    Frobenius(commands::frobenius::FrobeniusArgs),
    /// Grid classification and prime-factor counts.
    Grid(commands::grid::GridArgs),
    /// Two-Selmer ranks of quadratic twists.
    Descend(commands::descend::DescendArgs),
    /// Invariant and oracle checks.
    Verify(commands::verify::VerifyArgs),
}

/// Appends `--key value` pairs from a JSON object for keys absent from `argv`.
pub fn merge_params_file(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let strs: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let path = strs.iter().enumerate().find_map(|(i, a)| {
        a.strip_prefix("--params-file=").map(str::to_owned).or_else(|| (a == "--params-file").then(|| strs.get(i + 1).cloned()).flatten())
    });
    let Some(path) = path else { return Ok(argv) };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Usage(format!("cannot read params file {path}: {e}")))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("params file {path}: {e}")))?;
    let Value::Object(map) = doc else {
        return Err(CliError::Usage(format!("params file {path} must hold a JSON object")));
    };
    let mut out = argv;
    for (key, value) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == "--params-file" || strs.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}="))) {
            continue;
        }
        let text = match value {
            Value::Bool(true) => {
                out.push(flag.into());
                continue;
            }
            Value::Bool(false) | Value::Null => continue,
            Value::String(s) => s,
            Value::Number(n) => n.to_string(),
            Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect::<Vec<_>>()
                .join(","),
            Value::Object(_) => return Err(CliError::Usage(format!("params file key `{key}` has an object value"))),
        };
        out.push(format!("{flag}={text}").into());
    }
    Ok(out)
}

/// SHA-256 of the canonical JSON form of the resolved configuration.
pub fn config_hash(cli: &Cli) -> String {
    let canonical = serde_json::to_vec(cli).expect("configuration serializes");
    Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    let ctx = commands::Context { seed: cli.seed, digits: cli.precision_digits };
    match &cli.command {
        Command::Dist(a) => commands::dist::run_dist(a, &ctx),
        Command::Moments(a) => commands::dist::run_moments(a, &ctx),
        Command::Invert(a) => commands::invert::run(a, &ctx),
        Command::Module(a) => commands::module::run(a, &ctx),
        Command::Frobenius(a) => commands::frobenius::run(a, &ctx),
        Command::Grid(a) => commands::grid::run(a, &ctx),
        Command::Descend(a) => commands::descend::run(a, &ctx),
        Command::Verify(a) => commands::verify::run(a, &ctx),
    }
}

/// Full run: parse, merge the params file, execute, write. Returns the exit code.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv = match merge_params_file(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if cli.workers > 0 {
        // a second build in the same process (tests) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global();
    }
    let header = Header { tool: "selmer", version: env!("CARGO_PKG_VERSION"), config_hash: config_hash(&cli), seed: cli.seed };
    let result = execute(&cli).and_then(|report| Ok((report.render(&header, cli.format)?, report.failed)));
    match result {
        Ok((bytes, failed)) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
                None => std::io::stdout().write_all(&bytes).map_err(|e| CliError::Io(e.to_string())),
            };
            match written {
                Err(e) => {
                    eprintln!("{e}");
                    e.exit_code()
                }
                Ok(()) => i32::from(failed),
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
