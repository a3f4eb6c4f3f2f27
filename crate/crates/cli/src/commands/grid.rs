use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use selmer_core::grid::{
    classify_ideal, count_admissible_twists_q, count_pi_rk, fixtures, verdict_histogram, ClassFn, ClassUniverse, GridConfig,
    GridParameters, IdealProfile, ProfileStream, SiegelHook, Thresholds, CRITERION_NAMES,
};

use super::Context;
use crate::output::{bool_cell, float_cell, Report};
use crate::{compute, CliError};

#[derive(Args, Debug, Serialize)]
pub struct GridArgs {
    #[command(subcommand)]
    pub action: GridAction,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridAction {
    /// Verdict histogram over a stream of ideal profiles.
    Classify(ClassifyArgs),
    /// π_{r,k}(x, y) against its Hardy–Ramanujan-type bound.
    Pi(PiArgs),
    /// Squarefree conductors up to H against (6/π²)H.
    Twists(TwistArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamSource {
    /// Closed-form parameters and thresholds at --ln-h.
    Literal,
    /// JSON file given by --grid-file.
    File,
    /// Small built-in override grid under which Good verdicts occur.
    Fixture,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StreamSource {
    /// Every admissible squarefree n ≤ --x, factored by a sieve.
    Sieve,
    /// One profile "norm:class,…" per line of --profiles.
    File,
}

#[derive(Args, Debug, Serialize)]
pub struct ClassifyArgs {
    #[arg(long, value_enum, default_value_t = ParamSource::Literal)]
    pub params: ParamSource,
    /// ln H for literal parameters.
    #[arg(long, default_value_t = 1e9)]
    pub ln_h: f64,
    #[arg(long)]
    pub grid_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = StreamSource::Sieve)]
    pub stream: StreamSource,
    #[arg(long, default_value_t = 100_000)]
    pub x: u64,
    /// `kronecker:D`, `residue:M` or `constant`.
    #[arg(long, default_value = "kronecker:-4", allow_hyphen_values = true)]
    pub class_fn: String,
    /// Primes left out of the stream.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<u64>,
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Classify this many sampled n instead of every n ≤ x.
    #[arg(long)]
    pub sample: Option<usize>,
    /// Loosen every threshold by this factor.
    #[arg(long, default_value_t = 1.0)]
    pub loosen: f64,
    /// One row per ideal instead of the histogram (file stream only).
    #[arg(long)]
    pub detail: bool,
}

/// Grid file: missing override fields fall back to literal values at ln_h.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub ln_h: f64,
    pub alpha: Option<f64>,
    pub a0: Option<f64>,
    pub i_med: Option<u64>,
    pub thresholds: Option<Thresholds>,
    pub siegel: Option<SiegelHook>,
    pub function_cap: Option<u64>,
    pub classes: Option<Vec<String>>,
}

fn parse_class_fn(text: &str) -> Result<ClassFn, CliError> {
    let bad = || CliError::Usage(format!("bad --class-fn `{text}`"));
    match text.split_once(':') {
        Some(("kronecker", d)) => Ok(ClassFn::Kronecker(d.parse().map_err(|_| bad())?)),
        Some(("residue", m)) => match m.parse::<u64>() {
            Ok(m) if m >= 2 => Ok(ClassFn::Residue(m)),
            _ => Err(bad()),
        },
        None if text == "constant" => Ok(ClassFn::Constant),
        _ => Err(bad()),
    }
}

fn setup(args: &ClassifyArgs, default_universe: ClassUniverse) -> Result<(GridParameters, GridConfig), CliError> {
    let (params, mut config) = match args.params {
        ParamSource::Literal => {
            let params = GridParameters::literal(args.ln_h).map_err(|e| CliError::Usage(e.to_string()))?;
            (params, GridConfig::new(default_universe, Thresholds::literal(args.ln_h)))
        }
        ParamSource::Fixture => {
            let (params, mut config) = fixtures::good_setup();
            if args.stream == StreamSource::Sieve {
                config.universe = default_universe;
            }
            (params, config)
        }
        ParamSource::File => {
            let path = args.grid_file.as_ref().ok_or_else(|| CliError::Usage("--params file needs --grid-file".into()))?;
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let f: GridFile = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let params = match (f.alpha, f.a0, f.i_med) {
                (Some(alpha), Some(a0), Some(i_med)) => GridParameters::with_overrides(f.ln_h, alpha, a0, i_med),
                (None, None, None) => GridParameters::literal(f.ln_h),
                _ => return Err(CliError::Usage("grid file overrides need all of alpha, a0, i_med".into())),
            }
            .map_err(|e| CliError::Usage(e.to_string()))?;
            let universe = match (&f.classes, args.stream) {
                (Some(labels), StreamSource::File) => {
                    ClassUniverse::abelian(labels.clone(), 0).map_err(|e| CliError::Usage(e.to_string()))?
                }
                _ => default_universe,
            };
            let mut config = GridConfig::new(universe, f.thresholds.unwrap_or_else(|| Thresholds::literal(f.ln_h)));
            if let Some(s) = f.siegel {
                config.siegel = s;
            }
            if let Some(cap) = f.function_cap {
                config.function_cap = cap;
            }
            (params, config)
        }
    };
    if args.loosen != 1.0 {
        if args.loosen < 1.0 {
            return Err(CliError::Usage("--loosen must be at least 1".into()));
        }
        config.thresholds = config.thresholds.loosened(args.loosen);
    }
    Ok((params, config))
}

fn verdict_label(v: usize) -> String {
    if v == 0 {
        "Good".into()
    } else {
        format!("Bad({v})")
    }
}

fn histogram_report(hist: [u64; 9]) -> Report {
    let rows = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| vec![verdict_label(v), if v == 0 { String::new() } else { CRITERION_NAMES[v - 1].to_string() }, c.to_string()])
        .collect();
    Report::table(vec!["verdict", "criterion", "count"], rows)
}

fn classify(args: &ClassifyArgs, ctx: &Context) -> Result<Report, CliError> {
    match args.stream {
        StreamSource::Sieve => {
            let class_fn = parse_class_fn(&args.class_fn)?;
            let (params, config) = setup(args, class_fn.universe())?;
            let stream = ProfileStream::new(args.x, class_fn, args.exclude.clone()).map_err(|e| CliError::Usage(e.to_string()))?;
            let hist = match args.sample {
                None => verdict_histogram(&stream, &params, &config).map_err(compute)?,
                Some(count) => {
                    let mut h = [0u64; 9];
                    for (_, p) in stream.sample(count, ctx.seed) {
                        h[classify_ideal(&p, &params, &config).map_err(compute)?.verdict.slot()] += 1;
                    }
                    h
                }
            };
            Ok(histogram_report(hist))
        }
        StreamSource::File => {
            let path = args.profiles.as_ref().ok_or_else(|| CliError::Usage("--stream file needs --profiles".into()))?;
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let (params, config) = setup(args, ClassUniverse::abelian(vec!["1", "-1"], 0).expect("two labels"))?;
            let mut hist = [0u64; 9];
            let mut rows = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.starts_with('#') {
                    continue;
                }
                let profile = IdealProfile::parse(line, &config.universe)
                    .map_err(|e| CliError::Usage(format!("{}:{}: {e}", path.display(), i + 1)))?;
                let c = classify_ideal(&profile, &params, &config).map_err(compute)?;
                hist[c.verdict.slot()] += 1;
                if args.detail {
                    let failed = c.criteria.iter().find(|r| !r.passed).map(|r| r.detail.clone()).unwrap_or_default();
                    rows.push(vec![line.to_string(), verdict_label(c.verdict.slot()), failed]);
                }
            }
            if args.detail {
                Ok(Report::table(vec!["profile", "verdict", "first_failure"], rows))
            } else {
                Ok(histogram_report(hist))
            }
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct PiArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub x: u64,
    #[arg(long, default_value_t = 100)]
    pub y: u64,
    #[arg(long, default_value_t = 3)]
    pub r: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Constant in the bound.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<u64>,
}

#[derive(Args, Debug, Serialize)]
pub struct TwistArgs {
    #[arg(long, default_value_t = 10_000_000)]
    pub h: u64,
}

pub fn run(args: &GridArgs, ctx: &Context) -> Result<Report, CliError> {
    match &args.action {
        GridAction::Classify(a) => classify(a, ctx),
        GridAction::Pi(a) => {
            let p = count_pi_rk(a.x, a.y, a.r, a.k, a.c, &a.exclude).map_err(|e| CliError::Usage(e.to_string()))?;
            let row = vec![
                p.x.to_string(),
                p.y.to_string(),
                p.r.to_string(),
                p.k.to_string(),
                p.count.to_string(),
                float_cell(p.bound),
                bool_cell(p.within_bound),
            ];
            Ok(Report::table(vec!["x", "y", "r", "k", "count", "bound", "within_bound"], vec![row]))
        }
        GridAction::Twists(a) => {
            let c = count_admissible_twists_q(a.h).map_err(|e| CliError::Usage(e.to_string()))?;
            let row = vec![c.h.to_string(), c.count.to_string(), c.kappa.to_string(), float_cell(c.density), float_cell(c.relative_error)];
            Ok(Report::table(vec!["h", "count", "kappa", "density", "relative_error"], vec![row])
                .with_json(json!(c)))
        }
    }
}

