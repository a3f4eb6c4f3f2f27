use clap::Args;
use serde::Serialize;
use serde_json::json;

use selmer_core::exact::parse_rational;
use selmer_core::moment_inversion::{recover_distribution, tail_coefficient_bounds, NodeMode, MAX_J};

use super::{decimal_cell, rational_cell, Context};
use crate::output::float_cell;
use crate::output::Report;
use crate::{compute, CliError};

#[derive(Args, Debug, Serialize)]
pub struct InvertArgs {
    /// Moments M_0, M_1, … (integers, decimals or fractions), comma separated.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub moments: Vec<String>,
    #[arg(long, default_value_t = 2)]
    pub ell: u32,
    /// Largest j recovered (default: one less than the number of moments).
    #[arg(long)]
    pub jmax: Option<usize>,
    /// Also report the tail-coefficient bounds for this B (with --eps).
    #[arg(long)]
    pub tail_b: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
}

pub fn run(args: &InvertArgs, ctx: &Context) -> Result<Report, CliError> {
    let moments = args
        .moments
        .iter()
        .map(|s| parse_rational(s).ok_or_else(|| CliError::Usage(format!("bad moment `{s}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    if moments.is_empty() {
        return Err(CliError::Usage("--moments needs at least one value".into()));
    }
    let j_max = args.jmax.unwrap_or(moments.len() - 1).min(MAX_J);
    let rec = recover_distribution(&moments, args.ell, j_max).map_err(|e| CliError::Usage(e.to_string()))?;
    let rows: Vec<Vec<String>> = rec
        .probabilities
        .iter()
        .enumerate()
        .map(|(j, p)| vec![j.to_string(), rational_cell(p), decimal_cell(p, ctx.digits)])
        .collect();
    let mut doc = json!({
        "ell": args.ell,
        "j_max": j_max,
        "probabilities": rec.probabilities.iter().enumerate().map(|(j, p)| json!({
            "j": j,
            "exact": rational_cell(p),
            "decimal": decimal_cell(p, ctx.digits),
        })).collect::<Vec<_>>(),
        "residual": rational_cell(&rec.residual),
        "underdetermined": rec.underdetermined,
        "negative_mass": rec.negative_mass,
    });
    if let Some(b) = args.tail_b {
        let m = u32::try_from(moments.len()).map_err(compute)?;
        let mut bounds = Vec::new();
        for mode in [NodeMode::Unsigned, NodeMode::Signed] {
            let cb = tail_coefficient_bounds(b, m, args.eps, args.ell, mode).map_err(|e| CliError::Usage(e.to_string()))?;
            bounds.push(json!({
                "mode": mode,
                "c": float_cell(cb.c),
                "bounds": cb.bounds(m).into_iter().map(float_cell).collect::<Vec<_>>(),
            }));
        }
        doc["tail_bounds"] = json!(bounds);
    }
    Ok(Report::table(vec!["j", "p_exact", "p_decimal"], rows).with_json(doc).json_default())
}
