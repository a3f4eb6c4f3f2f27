use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::json;

use selmer_core::frobenius::{
    covariance_error, enumerate_congruence_probability, exact_congruence_probability, favored_probability, verify_g1_model,
    ClassModel, Constraint, ConstraintSet,
};

use super::module::FixtureName;
use super::{rational_cell, Context};
use crate::output::{bool_cell, float_cell, Report};
use crate::{compute, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrobeniusMode {
    /// Δ(n) = |P̂(n) − limit| along --ladder with its fitted decay exponent.
    G1,
    /// Multinomial covariance against Σ.
    Covariance,
    /// Exact congruence probability against brute-force enumeration.
    Congruence,
    /// Limit orthant probability of a module's difference vectors.
    Favored,
}

#[derive(Args, Debug, Serialize)]
pub struct FrobeniusArgs {
    #[arg(long, value_enum, default_value_t = FrobeniusMode::G1)]
    pub mode: FrobeniusMode,
    /// Number of classes |G|.
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    /// Constraints separated by `;`, each "f1,…,fk" with optional ":b" threshold.
    #[arg(long, default_value = "1,-1,0", allow_hyphen_values = true)]
    pub constraints: String,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Congruence modulus R.
    #[arg(long, default_value_t = 2)]
    pub modulus: u64,
    /// Residues a(σ) for the classes other than σ₀ (empty: no congruence).
    #[arg(long, value_delimiter = ',')]
    pub target: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000,100000")]
    pub ladder: Vec<u64>,
    #[arg(long, default_value_t = 20_000)]
    pub trials: u64,
    /// Added to the −(1/2 − δ) exponent bound.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub slack: f64,
    /// Number of draws for covariance mode, largest n for congruence mode.
    #[arg(long, default_value_t = 10_000)]
    pub n: u64,
    #[arg(long, value_enum, default_value_t = FixtureName::SingleConstraint)]
    pub fixture: FixtureName,
}

fn parse_constraints(text: &str) -> Result<Vec<Constraint>, CliError> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|part| {
            let (f, b) = part.split_once(':').unwrap_or((part, "0"));
            let f = f
                .split(',')
                .map(|x| x.trim().parse::<i64>().map_err(|_| CliError::Usage(format!("bad constraint `{part}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            let b = b.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad threshold in `{part}`")))?;
            Ok(Constraint { f, b })
        })
        .collect()
}

pub fn run(args: &FrobeniusArgs, ctx: &Context) -> Result<Report, CliError> {
    match args.mode {
        FrobeniusMode::G1 => {
            let model = ClassModel::uniform(args.classes, args.modulus).map_err(|e| CliError::Usage(e.to_string()))?;
            let cs = ConstraintSet::new(parse_constraints(&args.constraints)?, args.delta, args.target.clone());
            let r = verify_g1_model(&model, &cs, &args.ladder, args.trials, ctx.seed, args.slack).map_err(compute)?;
            let fitted = r.fitted_exponent.map(float_cell).unwrap_or_default();
            let rows = r
                .rows
                .iter()
                .map(|row| {
                    vec![
                        row.n.to_string(),
                        float_cell(row.p_hat),
                        float_cell(row.stderr),
                        float_cell(row.p0),
                        float_cell(row.delta),
                        fitted.clone(),
                    ]
                })
                .collect();
            let json = serde_json::to_value(&r).map_err(compute)?;
            let mut report = Report::table(vec!["n", "p_hat", "stderr", "p0_hat", "delta", "fitted_exponent"], rows).with_json(json);
            report.failed = false;
            Ok(report)
        }
        FrobeniusMode::Covariance => {
            if !(2..=8).contains(&args.classes) {
                return Err(CliError::Usage("covariance mode needs 2 ≤ --classes ≤ 8".into()));
            }
            let err = covariance_error(args.classes, args.n, args.trials, ctx.seed);
            let tol = 5.0 / (args.trials as f64).sqrt();
            let row = vec![
                args.classes.to_string(),
                args.n.to_string(),
                args.trials.to_string(),
                float_cell(err),
                float_cell(tol),
                bool_cell(err <= tol),
            ];
            Ok(Report::table(vec!["classes", "n", "trials", "max_abs_error", "tolerance", "within"], vec![row]))
        }
        FrobeniusMode::Congruence => {
            let model = ClassModel::uniform(args.classes, args.modulus).map_err(|e| CliError::Usage(e.to_string()))?;
            let target = if args.target.is_empty() { vec![0; args.classes - 1] } else { args.target.clone() };
            let brute_cap = (1u64 << 22) as f64;
            let mut rows = Vec::new();
            for n in 0..=args.n.min(200) {
                let exact = exact_congruence_probability(&model, &target, n).map_err(compute)?;
                let brute = ((args.classes as f64).powi(n as i32) <= brute_cap)
                    .then(|| enumerate_congruence_probability(&model, &target, n as u32));
                let agree = brute.as_ref().map(|b| bool_cell(*b == exact)).unwrap_or_default();
                rows.push(vec![
                    n.to_string(),
                    rational_cell(&exact),
                    brute.as_ref().map(rational_cell).unwrap_or_default(),
                    agree,
                ]);
            }
            Ok(Report::table(vec!["n", "exact", "enumerated", "agree"], rows))
        }
        FrobeniusMode::Favored => {
            let spec = args.fixture.build();
            let fp = favored_probability(&spec, Some(args.n), args.trials, ctx.seed).map_err(compute)?;
            let doc = json!({
                "fixture": args.fixture,
                "potentially_favored": fp.report.is_potentially_favored(),
                "p0": fp.p0,
                "p0_exact": fp.p0_exact,
                "p_n": fp.p_n,
                "consistent": fp.consistent,
            });
            Ok(Report::document(doc))
        }
    }
}
