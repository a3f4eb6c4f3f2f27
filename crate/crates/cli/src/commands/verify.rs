//! Invariant suite behind `selmer verify`. Every check compares two
//! independent computations or an exact identity; one failure fails the run.

use clap::{Args, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::json;

use selmer_core::arith::{count_squarefree, factorize, is_squarefree, mobius_up_to};
use selmer_core::exact::to_f64;
use selmer_core::frobenius::{
    covariance_error, enumerate_congruence_probability, exact_congruence_probability, verify_g1_model, ClassModel, Constraint,
    ConstraintSet,
};
use selmer_core::grid::PiTable;
use selmer_core::module_algebra::{fixtures, verify_cofavored_powers, verify_direct_sum, FavorOutcome};
use selmer_core::moment_inversion::{forward_moments, recover_distribution};
use selmer_core::rank_dist::enumeration::{alternating_corank_counts, frequencies, uniform_corank_counts};
use selmer_core::rank_dist::{moment_empirical, moment_theoretical, p_finite, p_inf, CaseParams, ParityMode};
use selmer_descent::empirics::{batch, parity_audit, twist_range};
use selmer_descent::hensel::selmer2_oracle;
use selmer_descent::selmer::{selmer2, Budget};
use selmer_descent::TwoTorsionModel;

use super::Context;
use crate::output::{bool_cell, Report};
use crate::{compute, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Exact oracle comparisons (seconds).
    Oracle,
    /// Oracle suite plus Monte Carlo and larger descent checks (minutes).
    Full,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::Oracle)]
    pub suite: Suite,
}

type Check = (&'static str, Result<(bool, String), CliError>);

fn alt() -> CaseParams {
    CaseParams::alternating(ParityMode::NonInvariant).expect("valid")
}

fn rank_enumeration() -> Result<(bool, String), CliError> {
    let mut cases = 0;
    for ell in [2u32, 3] {
        for u in [-1i64, 0, 1] {
            let params = CaseParams::non_self_dual(ell, u).map_err(compute)?;
            for n in 1..=3usize {
                if (n as i64) < u {
                    continue;
                }
                let freq = frequencies(&uniform_corank_counts((n as i64 - u) as usize, n, ell));
                for (j, f) in freq.iter().enumerate() {
                    if p_finite(j, n, &params).map_err(compute)? != *f {
                        return Ok((false, format!("ℓ={ell} u={u} n={n} j={j}")));
                    }
                }
                cases += 1;
            }
        }
    }
    for n in 1..=5usize {
        let freq = frequencies(&alternating_corank_counts(n, 2));
        for (j, f) in freq.iter().enumerate() {
            if p_finite(j, n, &alt()).map_err(compute)? != *f {
                return Ok((false, format!("alternating n={n} j={j}")));
            }
        }
        cases += 1;
    }
    Ok((true, format!("{cases} (case, n) pairs equal exactly")))
}

fn normalization() -> Result<(bool, String), CliError> {
    let mut params = vec![alt()];
    for ell in [2u32, 3] {
        for u in [-1i64, 0, 1] {
            params.push(CaseParams::non_self_dual(ell, u).map_err(compute)?);
        }
    }
    for p in &params {
        for n in p.min_n()..=12 {
            let total = (0..=n).map(|j| p_finite(j, n, p)).collect::<Result<Vec<_>, _>>().map_err(compute)?;
            if total.iter().fold(BigRational::zero(), |a, b| a + b) != BigRational::one() {
                return Ok((false, format!("{p:?} n={n}")));
            }
        }
    }
    Ok((true, "Σ_j P(j|n) = 1 for n ≤ 12".into()))
}

/// Σ_j ℓ^{mj} P(j|∞) against the closed-form moment.
pub fn moment_gap(m: usize, params: &CaseParams) -> f64 {
    let ell = params.ell as f64;
    let sum: f64 = (0..60).map(|j| ell.powi((m * j) as i32) * p_inf(j, params, 1e-40).to_f64()).sum();
    (sum - to_f64(&moment_theoretical(m, params))).abs()
}

fn moment_identity() -> Result<(bool, String), CliError> {
    let mut params = vec![alt()];
    for ell in [2u32, 3] {
        for u in [-1i64, 0, 1] {
            params.push(CaseParams::non_self_dual(ell, u).map_err(compute)?);
        }
    }
    let worst = params.iter().flat_map(|p| (1..=4).map(move |m| moment_gap(m, p))).fold(0.0, f64::max);
    let spot = moment_theoretical(1, &alt()) == BigRational::from_integer(3.into())
        && moment_theoretical(2, &alt()) == BigRational::from_integer(15.into());
    Ok((worst < 1e-9 && spot, format!("max gap {worst:.2e}, alternating M1 = 3 and M2 = 15: {spot}")))
}

fn inversion_round_trip() -> Result<(bool, String), CliError> {
    let mut dists: Vec<(u32, Vec<BigRational>)> = vec![(2, (0..=6).map(|j| p_finite(j, 6, &alt())).collect::<Result<_, _>>().map_err(compute)?)];
    let nsd = CaseParams::non_self_dual(3, 0).map_err(compute)?;
    dists.push((3, (0..=6).map(|j| p_finite(j, 6, &nsd)).collect::<Result<_, _>>().map_err(compute)?));
    let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
    dists.push((2, vec![r(1, 7), r(0, 1), r(2, 7), r(1, 7), r(0, 1), r(1, 7), r(2, 7)]));
    for (ell, probs) in &dists {
        let moments = forward_moments(probs, *ell, probs.len());
        let rec = recover_distribution(&moments, *ell, probs.len() - 1).map_err(compute)?;
        if rec.probabilities != *probs {
            return Ok((false, format!("ℓ={ell}: recovered {:?}", rec.probabilities)));
        }
    }
    Ok((true, format!("{} distributions recovered exactly", dists.len())))
}

fn module_certificates() -> Result<(bool, String), CliError> {
    let specs = [
        fixtures::trivial(2, 2),
        fixtures::swap(),
        fixtures::connecting_example(),
        fixtures::single_constraint(),
        fixtures::symmetric_cancellation(),
        fixtures::two_torsion_generic(),
        fixtures::two_torsion_minus_squares(),
    ];
    let (mut yes, mut no) = (0, 0);
    for (i, s) in specs.iter().enumerate() {
        let rep = s.is_potentially_favored().map_err(compute)?;
        if !rep.verify() {
            return Ok((false, format!("certificate of fixture {i} does not verify")));
        }
        match rep.outcome {
            FavorOutcome::Superlative { .. } => yes += 1,
            _ => no += 1,
        }
    }
    Ok((yes > 0 && no > 0, format!("{} certificates verified ({yes} favored, {no} not)", specs.len())))
}

fn module_structure() -> Result<(bool, String), CliError> {
    let (n1, n2, _) = fixtures::non_commuting_pair();
    let pair = verify_direct_sum(&n1, &n2).map_err(compute)?;
    let cubic = fixtures::irreducible_cubic(true);
    let powers = verify_cofavored_powers(&cubic, 2).map_err(compute)?;
    let sum = verify_direct_sum(&cubic, &cubic).map_err(compute)?;
    let trivial = verify_cofavored_powers(&fixtures::trivial(2, 1), 2).map_err(compute)?;
    let ok = pair.matches() && powers.holds() && sum.matches() && trivial.holds();
    Ok((ok, format!("direct sums match graph prediction: {}, powers tensor-shaped: {}", pair.matches() && sum.matches(), powers.holds() && trivial.holds())))
}

fn congruence_enumeration() -> Result<(bool, String), CliError> {
    let model = ClassModel::uniform(2, 2).map_err(compute)?;
    for n in 0..=20u64 {
        for a in 0..2u64 {
            let exact = exact_congruence_probability(&model, &[a], n).map_err(compute)?;
            if exact != enumerate_congruence_probability(&model, &[a], n as u32) {
                return Ok((false, format!("n={n} a={a}")));
            }
        }
    }
    Ok((true, "|G| = 2, R = 2, n ≤ 20".into()))
}

/// Brute-force π_{r,k}: trial-division factorization of every n ≤ x.
pub fn brute_pi(x: u64, y: u64, max_r: usize) -> Vec<Vec<u64>> {
    let mut counts = vec![vec![0u64; max_r + 1]; max_r + 1];
    for n in 1..=x {
        let f = factorize(n);
        if f.iter().any(|&(_, e)| e > 1) || f.len() > max_r {
            continue;
        }
        let k = f.iter().filter(|&&(p, _)| p <= y).count();
        counts[f.len()][k] += 1;
    }
    counts
}

fn pi_counts(x: u64) -> Result<(bool, String), CliError> {
    let y = 30;
    let table = PiTable::new(x, y, &[]).map_err(compute)?;
    let brute = brute_pi(x, y, 3);
    for r in 1..=3 {
        for k in 0..r {
            if table.count(r, k) != brute[r][k] {
                return Ok((false, format!("r={r} k={k}: {} vs {}", table.count(r, k), brute[r][k])));
            }
        }
    }
    Ok((true, format!("x = {x}, y = {y}, r ≤ 3")))
}

fn squarefree(h: u64) -> Result<(bool, String), CliError> {
    let mu = mobius_up_to(h as usize);
    let by_mobius = (1..=h as usize).filter(|&n| mu[n] != 0).count() as u64;
    let by_filter = (1..=h).filter(|&n| is_squarefree(n)).count() as u64;
    let fast = count_squarefree(h);
    let rel = (fast as f64 / h as f64 - 6.0 / std::f64::consts::PI.powi(2)).abs() * std::f64::consts::PI.powi(2) / 6.0;
    Ok((fast == by_mobius && fast == by_filter && rel < 0.01, format!("H = {h}: {fast} squarefree, relative error {rel:.2e}")))
}

fn descent_anchors() -> Result<(bool, String), CliError> {
    let published = [(1i128, 2u32), (5, 3), (6, 3), (7, 3), (34, 4), (41, 4)];
    for (d, dim) in published {
        let fast = selmer2(d, -d, Budget::default()).map_err(compute)?.dim;
        if fast != dim {
            return Ok((false, format!("d={d}: {fast} ≠ {dim}")));
        }
        if d <= 7 && selmer2_oracle(d, -d).map_err(compute)?.dim != dim {
            return Ok((false, format!("oracle at d={d}")));
        }
    }
    Ok((true, "y² = x³ − d²x at d ∈ {1, 5, 6, 7, 34, 41}".into()))
}

fn descent_oracle() -> Result<(bool, String), CliError> {
    let mut checked = 0;
    for (a0, b0) in [(2i128, 12i128), (-3, 5), (1, 3)] {
        for d in [-6i128, -1, 1, 2, 3, 5, 7] {
            let (a, b) = (a0 * d, b0 * d);
            let Ok(oracle) = selmer2_oracle(a, b) else { continue };
            let mut fast = selmer2(a, b, Budget::default()).map_err(compute)?.elements();
            let mut slow = oracle.elements;
            fast.sort_unstable();
            slow.sort_unstable();
            if fast != slow {
                return Ok((false, format!("({a0},{b0}) d={d}")));
            }
            checked += 1;
        }
    }
    Ok((checked > 0, format!("{checked} twists agree elementwise")))
}

fn parity_law(dmax: u64) -> Result<(bool, String), CliError> {
    let model = TwoTorsionModel { a: 1, b: -1 };
    let records = batch(&model, &twist_range(1, dmax, true)).map_err(compute)?;
    let rep = parity_audit(&records);
    Ok((rep.passes(), format!("{} twists, {} buckets, {} violations", records.len(), rep.buckets.len(), rep.violations.len())))
}

fn monte_carlo_moment(seed: u64) -> Result<(bool, String), CliError> {
    let est = moment_empirical(1, &alt(), Some(20), 1_000_000, seed);
    let z = (est.mean - 3.0).abs() / est.stderr;
    Ok((z < 5.0, format!("mean {:.5} ± {:.5} ({z:.2} σ)", est.mean, est.stderr)))
}

fn frobenius_model(seed: u64) -> Result<(bool, String), CliError> {
    let err = covariance_error(3, 10_000, 100_000, seed);
    let tol = 5.0 / 100_000f64.sqrt();
    let model = ClassModel::uniform(3, 2).map_err(compute)?;
    let cs = ConstraintSet::new(vec![Constraint { f: vec![1, -1, 0], b: 0.0 }], 0.1, vec![]);
    let g1 = verify_g1_model(&model, &cs, &[100, 1_000, 10_000, 100_000], 200_000, seed, 0.2).map_err(compute)?;
    let exp = g1.fitted_exponent.unwrap_or(f64::NEG_INFINITY);
    Ok((err <= tol && exp <= -0.3, format!("covariance error {err:.2e} (tol {tol:.2e}), decay exponent {exp:.3}")))
}

pub fn checks(suite: Suite, seed: u64) -> Vec<Check> {
    let mut out: Vec<Check> = vec![
        ("rank-dist-enumeration", rank_enumeration()),
        ("rank-dist-normalization", normalization()),
        ("moment-identity", moment_identity()),
        ("inversion-round-trip", inversion_round_trip()),
        ("module-certificates", module_certificates()),
        ("module-structure", module_structure()),
        ("congruence-enumeration", congruence_enumeration()),
        ("pi-rk-brute-force", pi_counts(100_000)),
        ("squarefree-count", squarefree(1_000_000)),
        ("descent-anchors", descent_anchors()),
        ("descent-oracle", descent_oracle()),
        ("parity-law", parity_law(2_000)),
    ];
    if suite == Suite::Full {
        out.push(("monte-carlo-moment", monte_carlo_moment(seed)));
        out.push(("frobenius-model", frobenius_model(seed)));
        out.push(("pi-rk-brute-force-large", pi_counts(1_000_000)));
        out.push(("parity-law-large", parity_law(10_000)));
    }
    out
}

pub fn run(args: &VerifyArgs, ctx: &Context) -> Result<Report, CliError> {
    let mut rows = Vec::new();
    let mut failed = false;
    for (name, res) in checks(args.suite, ctx.seed) {
        let (ok, detail) = res.unwrap_or_else(|e| (false, e.to_string()));
        failed |= !ok;
        rows.push(vec![name.to_string(), bool_cell(ok), detail]);
    }
    let summary = json!({ "passed": !failed, "checks": rows.iter().map(|r| json!({"check": r[0], "passed": r[1] == "true", "detail": r[2]})).collect::<Vec<_>>() });
    let mut report = Report::table(vec!["check", "passed", "detail"], rows).with_json(summary);
    report.failed = failed;
    Ok(report)
}
