use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::json;

use selmer_descent::curve::{squarefree_twist, CurveSpec};
use selmer_descent::empirics::{
    batch, empirical_distribution, favored_klagsbrun, mean_selmer_size, parity_audit, tamagawa_bound_audit, twist_range,
};

use super::Context;
use crate::output::{bool_cell, float_cell, Report};
use crate::{compute, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveForm {
    /// y² = x(x − e₂)(x − e₃), coefficients "e2,e3".
    Full2torsion,
    /// y² = x(x² + ax + b), coefficients "a,b".
    Klagsbrun,
}

#[derive(Args, Debug, Serialize)]
pub struct DescendArgs {
    #[arg(long, value_enum, default_value_t = CurveForm::Full2torsion)]
    pub form: CurveForm,
    /// Two rational coefficients, e.g. "1,-1" or "1/2,3".
    #[arg(long, allow_hyphen_values = true)]
    pub curve: String,
    #[arg(long, default_value_t = 1)]
    pub dmin: u64,
    #[arg(long, required_unless_present = "d")]
    pub dmax: Option<u64>,
    /// Only positive d.
    #[arg(long)]
    pub positive_only: bool,
    /// Explicit twists instead of a range (reduced to their squarefree parts).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub d: Vec<i64>,
}

const MAX_DMAX: u64 = 10_000_000;

pub fn run(args: &DescendArgs, _ctx: &Context) -> Result<Report, CliError> {
    let form = match args.form {
        CurveForm::Full2torsion => "full2torsion",
        CurveForm::Klagsbrun => "klagsbrun",
    };
    let spec = CurveSpec::parse(form, &args.curve).map_err(|e| CliError::Usage(e.to_string()))?;
    let dmax = args.dmax.unwrap_or(0);
    if dmax > MAX_DMAX {
        return Err(CliError::Usage(format!("--dmax is capped at {MAX_DMAX}")));
    }
    let ds: Vec<i64> = if args.d.is_empty() {
        twist_range(args.dmin, dmax, !args.positive_only)
    } else {
        let mut v = Vec::new();
        for &d in &args.d {
            let s = squarefree_twist(d).map_err(|e| CliError::Usage(e.to_string()))?;
            if !v.contains(&s) {
                v.push(s);
            }
        }
        v
    };
    let columns = vec!["d", "selmer2_dim", "r", "parity_bucket", "favored", "maxT"];
    match spec {
        CurveSpec::Full2Torsion { .. } => {
            let model = spec.two_torsion_model().map_err(compute)?;
            let records = batch(&model, &ds).map_err(compute)?;
            let rows = records
                .iter()
                .map(|r| {
                    vec![
                        r.d.to_string(),
                        r.selmer2_dim.to_string(),
                        r.r.map(|x| x.to_string()).unwrap_or_default(),
                        r.parity_bucket.clone(),
                        bool_cell(r.favored),
                        r.max_tamagawa_exponent.to_string(),
                    ]
                })
                .collect();
            let dist = empirical_distribution(&records, None);
            let parity = parity_audit(&records);
            let doc = json!({
                "model": { "a": model.a, "b": model.b },
                "twists": records.len(),
                "distribution": dist,
                "parity": { "buckets": parity.buckets.len(), "violations": parity.violations },
                "tamagawa": tamagawa_bound_audit(&records),
                "mean_selmer_size": float_cell(mean_selmer_size(&records)),
                "records": records,
            });
            Ok(Report::table(columns, rows).with_json(doc))
        }
        CurveSpec::Klagsbrun { .. } => {
            let model = spec.klagsbrun_model().map_err(compute)?;
            let mut rows = Vec::new();
            let mut favored = 0usize;
            for &d in &ds {
                let f = favored_klagsbrun(&model, d).map_err(compute)?;
                favored += usize::from(f);
                rows.push(vec![d.to_string(), String::new(), String::new(), String::new(), bool_cell(f), String::new()]);
            }
            let doc = json!({
                "model": { "a": model.a, "b": model.b },
                "twists": ds.len(),
                "favored": favored,
                "favored_d": ds.iter().zip(&rows).filter(|(_, r)| r[4] == "true").map(|(d, _)| d).collect::<Vec<_>>(),
            });
            Ok(Report::table(columns, rows).with_json(doc))
        }
    }
}
