use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::json;

use selmer_core::rank_dist::{moment_empirical, moment_theoretical, CaseParams, ParityMode, Prob, RankDistribution};

use super::{decimal_cell, rational_cell, Context};
use crate::output::{float_cell, Report};
use crate::{compute, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseArg {
    /// Uniform (n−u)×n matrices over F_ℓ.
    #[value(alias = "uniform")]
    Nonselfdual,
    /// Uniform alternating n×n matrices over F_2.
    Alternating,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParityArg {
    Even,
    Odd,
    Mixed,
}

#[derive(Args, Debug, Serialize)]
pub struct CaseOpts {
    #[arg(long, value_enum, default_value_t = CaseArg::Alternating)]
    pub case: CaseArg,
    #[arg(long, default_value_t = 2)]
    pub ell: u32,
    /// Row deficit (non-self-dual case).
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub u: i64,
    /// Parity of j in the alternating limit.
    #[arg(long, value_enum, default_value_t = ParityArg::Mixed)]
    pub parity: ParityArg,
}

impl CaseOpts {
    pub fn params(&self) -> Result<CaseParams, CliError> {
        match self.case {
            CaseArg::Nonselfdual => CaseParams::non_self_dual(self.ell, self.u).map_err(|e| CliError::Usage(e.to_string())),
            CaseArg::Alternating => {
                if self.ell != 2 {
                    return Err(CliError::Usage("the alternating case is over F_2; use --ell 2".into()));
                }
                let parity = match self.parity {
                    ParityArg::Even => ParityMode::Invariant(0),
                    ParityArg::Odd => ParityMode::Invariant(1),
                    ParityArg::Mixed => ParityMode::NonInvariant,
                };
                CaseParams::alternating(parity).map_err(|e| CliError::Usage(e.to_string()))
            }
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct DistArgs {
    #[command(flatten)]
    pub case: CaseOpts,
    /// Matrix size, or `inf` for the limit law.
    #[arg(long, default_value = "inf")]
    pub n: String,
    /// Largest j listed for the limit law.
    #[arg(long, default_value_t = 10)]
    pub jmax: usize,
}

fn limit_tolerance(digits: usize) -> f64 {
    10f64.powi(-(digits.min(290) as i32) - 3)
}

pub fn run_dist(args: &DistArgs, ctx: &Context) -> Result<Report, CliError> {
    let params = args.case.params()?;
    let dist = if args.n == "inf" {
        RankDistribution::limit(&params, args.jmax, limit_tolerance(ctx.digits))
    } else {
        let n: usize = args.n.parse().map_err(|_| CliError::Usage(format!("--n expects an integer or `inf`, got `{}`", args.n)))?;
        RankDistribution::finite(n, &params).map_err(compute)?
    };
    let rows = dist
        .entries
        .iter()
        .map(|(j, p)| match p {
            Prob::Exact(r) => vec![j.to_string(), rational_cell(r), decimal_cell(r, ctx.digits), "0".into()],
            Prob::Approx(a) => vec![j.to_string(), String::new(), a.decimal(ctx.digits), format!("{:.3e}", a.err)],
        })
        .collect();
    let json = serde_json::to_value(dist.record(ctx.digits)).map_err(compute)?;
    Ok(Report::table(vec!["j", "p_exact", "p_decimal", "err"], rows).with_json(json))
}

#[derive(Args, Debug, Serialize)]
pub struct MomentArgs {
    #[command(flatten)]
    pub case: CaseOpts,
    /// Moments m = 1..=m-max.
    #[arg(long, default_value_t = 4)]
    pub m_max: usize,
    /// Matrix size for the Monte Carlo (default: the limit proxy).
    #[arg(long)]
    pub n: Option<usize>,
    /// Monte Carlo trials per moment (0 skips sampling).
    #[arg(long, default_value_t = 0)]
    pub trials: u64,
}

pub fn run_moments(args: &MomentArgs, ctx: &Context) -> Result<Report, CliError> {
    let params = args.case.params()?;
    let mut rows = Vec::new();
    let mut docs = Vec::new();
    for m in 1..=args.m_max {
        let exact = moment_theoretical(m, &params);
        let mut row = vec![m.to_string(), rational_cell(&exact), decimal_cell(&exact, ctx.digits)];
        let mut doc = json!({ "m": m, "exact": rational_cell(&exact) });
        if args.trials > 0 {
            let est = moment_empirical(m, &params, args.n, args.trials, ctx.seed.wrapping_add(m as u64));
            row.extend([float_cell(est.mean), float_cell(est.stderr), est.trials.to_string()]);
            doc["monte_carlo"] = serde_json::to_value(est).map_err(compute)?;
        } else {
            row.extend([String::new(), String::new(), "0".into()]);
        }
        rows.push(row);
        docs.push(doc);
    }
    let columns = vec!["m", "exact", "decimal", "mc_mean", "mc_stderr", "mc_trials"];
    Ok(Report::table(columns, rows).with_json(json!({ "params": params, "moments": docs })))
}

