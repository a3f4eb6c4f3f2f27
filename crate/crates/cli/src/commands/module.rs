use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use selmer_core::ff_linalg::Subspace;
use selmer_core::module_algebra::{
    fixtures, verify_cofavored_powers, verify_direct_sum, FavorOutcome, GaloisModuleSpec, ModuleFixture,
    PotentialFavorReport,
};

use super::{rational_cell, Context};
use crate::output::Report;
use crate::{compute, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureName {
    Trivial,
    Swap,
    Connecting,
    SingleConstraint,
    SymmetricCancellation,
    TwoTorsionGeneric,
    TwoTorsionMinusSquares,
    CubicTwisted,
    CubicUntwisted,
}

impl FixtureName {
    pub fn build(self) -> GaloisModuleSpec {
        match self {
            FixtureName::Trivial => fixtures::trivial(2, 2),
            FixtureName::Swap => fixtures::swap(),
            FixtureName::Connecting => fixtures::connecting_example(),
            FixtureName::SingleConstraint => fixtures::single_constraint(),
            FixtureName::SymmetricCancellation => fixtures::symmetric_cancellation(),
            FixtureName::TwoTorsionGeneric => fixtures::two_torsion_generic(),
            FixtureName::TwoTorsionMinusSquares => fixtures::two_torsion_minus_squares(),
            FixtureName::CubicTwisted => fixtures::irreducible_cubic(true),
            FixtureName::CubicUntwisted => fixtures::irreducible_cubic(false),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModuleAction {
    Summary,
    /// Favoredness of a twist with the given --profile of class labels.
    Favored,
    Cofavored,
    Potential,
    /// Cofavored submodules of N^{⊕a} against the tensor prediction.
    Powers,
    /// Cofavored submodules of N ⊕ N' against the graph prediction.
    DirectSum,
    /// Canonical JSON fixture.
    Export,
}

#[derive(Args, Debug, Serialize)]
pub struct ModuleArgs {
    #[arg(long, value_enum, conflicts_with = "fixture_file")]
    pub fixture: Option<FixtureName>,
    /// JSON fixture {ell, d, omega, classes, …}.
    #[arg(long)]
    pub fixture_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModuleAction::Summary)]
    pub action: ModuleAction,
    /// Class labels of the primes dividing the twist conductor.
    #[arg(long, value_delimiter = ',')]
    pub profile: Vec<String>,
    #[arg(long, default_value_t = 2)]
    pub power: usize,
    /// Second summand for direct-sum (default: the module itself).
    #[arg(long, value_enum)]
    pub with: Option<FixtureName>,
}

pub fn load(args: &ModuleArgs) -> Result<GaloisModuleSpec, CliError> {
    match (&args.fixture, &args.fixture_file) {
        (Some(name), _) => Ok(name.build()),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let fx: ModuleFixture =
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            GaloisModuleSpec::from_fixture(&fx).map_err(compute)
        }
        (None, None) => Err(CliError::Usage("give --fixture or --fixture-file".into())),
    }
}

/// SHA-256 of the canonical fixture JSON.
pub fn fixture_hash(spec: &GaloisModuleSpec) -> String {
    let bytes = serde_json::to_vec(&spec.to_fixture()).expect("fixtures serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn subspaces(list: &[Subspace]) -> Value {
    json!(list.iter().map(|s| s.basis()).collect::<Vec<_>>())
}

pub fn outcome_json(report: &PotentialFavorReport) -> Value {
    match &report.outcome {
        FavorOutcome::Superlative { w, margin } => json!({
            "kind": "superlative",
            "w": w.iter().map(rational_cell).collect::<Vec<_>>(),
            "margin": margin.as_ref().map(rational_cell),
        }),
        FavorOutcome::ConvexCertificate { lambda } => json!({
            "kind": "convex-certificate",
            "lambda": lambda.iter().map(rational_cell).collect::<Vec<_>>(),
        }),
        FavorOutcome::SuperUnfavored { index } => json!({
            "kind": "super-unfavored",
            "index": index,
            "f": report.f_vectors[*index],
        }),
    }
}

fn potential_json(report: &PotentialFavorReport) -> Value {
    json!({
        "classes": report.classes,
        "weights": report.weights,
        "f_vectors": report.f_vectors,
        "potentially_favored": report.is_potentially_favored(),
        "certificate_verified": report.verify(),
        "outcome": outcome_json(report),
    })
}

pub fn run(args: &ModuleArgs, _ctx: &Context) -> Result<Report, CliError> {
    let spec = load(args)?;
    let hash = fixture_hash(&spec);
    let doc = match args.action {
        ModuleAction::Summary => {
            let subs = spec.submodules().map_err(compute)?;
            let cof = spec.cofavored_submodules().map_err(compute)?;
            let pot = spec.is_potentially_favored().map_err(compute)?;
            json!({
                "fixture_hash": hash,
                "ell": spec.ell(),
                "d": spec.d(),
                "g1_classes": spec.g1().iter().map(|g| g.label.clone()).collect::<Vec<_>>(),
                "g0_classes": spec.g0().iter().map(|g| g.label.clone()).collect::<Vec<_>>(),
                "submodules": subs.len(),
                "cofavored": cof.len(),
                "uncofavored": spec.is_uncofavored().map_err(compute)?,
                "potentially_favored": pot.is_potentially_favored(),
                "certificate_verified": pot.verify(),
            })
        }
        ModuleAction::Favored => {
            if args.profile.is_empty() {
                return Err(CliError::Usage("--action favored needs --profile".into()));
            }
            let r = spec.is_favored(&args.profile).map_err(compute)?;
            json!({
                "fixture_hash": hash,
                "profile": args.profile,
                "favored": r.favored,
                "max_ratio": rational_cell(&r.max_ratio),
                "worst_submodule": r.worst.basis(),
            })
        }
        ModuleAction::Cofavored => {
            let cof = spec.cofavored_submodules().map_err(compute)?;
            json!({ "fixture_hash": hash, "count": cof.len(), "cofavored": subspaces(&cof) })
        }
        ModuleAction::Potential => {
            let mut doc = potential_json(&spec.is_potentially_favored().map_err(compute)?);
            doc["fixture_hash"] = json!(hash);
            doc
        }
        ModuleAction::Powers => {
            let r = verify_cofavored_powers(&spec, args.power).map_err(compute)?;
            json!({
                "fixture_hash": hash,
                "a": r.a,
                "holds": r.holds(),
                "cofavored": r.cofavored.len(),
                "counterexamples": subspaces(&r.counterexamples),
                "tensor_not_cofavored": subspaces(&r.tensor_not_cofavored),
            })
        }
        ModuleAction::DirectSum => {
            let other = args.with.map(FixtureName::build).unwrap_or_else(|| spec.clone());
            let r = verify_direct_sum(&spec, &other).map_err(compute)?;
            json!({
                "fixture_hash": hash,
                "other_hash": fixture_hash(&other),
                "matches": r.matches(),
                "predicted": r.predicted.len(),
                "cofavored": r.cofavored.len(),
                "commuting_maps": r.commuting_maps.len(),
                "missing": subspaces(&r.missing),
                "unexpected": subspaces(&r.unexpected),
            })
        }
        ModuleAction::Export => serde_json::to_value(spec.to_fixture()).map_err(compute)?,
    };
    Ok(Report::document(doc))
}
