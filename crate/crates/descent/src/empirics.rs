//! Twist-family runs: per-twist records, the parity audit over local buckets,
//! comparison with the parity-restricted alternating law, the Tamagawa-ratio
//! lower-bound audit and the Klagsbrun favored test.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use selmer_core::arith::{factorize, kronecker};
use selmer_core::ff_linalg::Subspace;
use selmer_core::module_algebra::{fixtures, GaloisModuleSpec};
use selmer_core::rank_dist::{p_inf, CaseParams, ParityMode};
use serde::Serialize;

use crate::curve::{require_squarefree, KlagsbrunModel, TwoTorsionModel};
use crate::local::{class_at, Place};
use crate::selmer::{selmer2, Budget};
use crate::DescentError;

/// dim_{F_2} Sel₂ of the twist of `model` by squarefree d.
pub fn two_selmer_rank(model: &TwoTorsionModel, d: i64) -> Result<u32, DescentError> {
    require_squarefree(d)?;
    let (a, b) = model.twist(d);
    Ok(selmer2(a, b, Budget::default())?.dim)
}

/// Frobenius classes of primes in the two-torsion module model, with the
/// Tamagawa exponent step of every class for every submodule T.
pub struct TamagawaContext {
    characters: [i128; 4],
    bad: Vec<u64>,
    steps: HashMap<String, Vec<i64>>,
    submodules: Vec<Subspace>,
}

impl TamagawaContext {
    pub fn new(model: &TwoTorsionModel) -> Result<Self, DescentError> {
        let spec: GaloisModuleSpec = fixtures::two_torsion_generic();
        let submodules = spec.submodules().map_err(|e| DescentError::Module(e.to_string()))?;
        let mut steps = HashMap::new();
        for g in spec.g1() {
            let row = submodules
                .iter()
                .map(|t| spec.tamagawa_exponent(t, &[g.label.as_str()]))
                .collect::<Result<Vec<i64>, _>>()
                .map_err(|e| DescentError::Module(e.to_string()))?;
            steps.insert(g.label.clone(), row);
        }
        let (a, b) = (i128::from(model.a), i128::from(model.b));
        // roots c₁ = 0, c₂ = A, c₃ = B: characters of −1, c₁ − c₂, (c₃ − c₁)(c₂ − c₁), (c₃ − c₂)(c₁ − c₂)
        let characters = [-1, -a, a * b, a * (a - b)];
        Ok(TamagawaContext { characters, bad: model.bad_primes(), steps, submodules })
    }

    /// Class label of a good odd prime: bit = 1 where the character is −1.
    pub fn label_of(&self, p: u64) -> String {
        self.characters
            .iter()
            .map(|&c| if kronecker(c as i64, p as i64) == -1 { '1' } else { '0' })
            .collect()
    }

    /// Profile of the good primes dividing d.
    pub fn profile(&self, d: i64) -> Vec<String> {
        factorize(d.unsigned_abs()).into_iter().filter(|(p, _)| !self.bad.contains(p)).map(|(p, _)| self.label_of(p)).collect()
    }

    /// max_T log₂ 𝒯_{N,T} over the profile of d.
    pub fn max_exponent(&self, d: i64) -> i64 {
        let profile = self.profile(d);
        (0..self.submodules.len())
            .map(|t| profile.iter().map(|l| self.steps[l][t]).sum::<i64>())
            .max()
            .unwrap_or(0)
    }

    pub fn submodule_count(&self) -> usize {
        self.submodules.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TwistRecord {
    pub d: i64,
    pub selmer2_dim: u32,
    pub torsion_dim: u32,
    /// selmer2_dim − 2; None when the torsion image is smaller than 2.
    pub r: Option<u32>,
    pub parity_bucket: String,
    pub favored: bool,
    pub max_tamagawa_exponent: i64,
}

/// Sign of d and its square classes at the bad primes of the curve.
pub fn parity_bucket(model: &TwoTorsionModel, d: i64) -> String {
    let mut s = String::from(if d > 0 { "+" } else { "-" });
    for p in model.bad_primes() {
        s.push_str(&format!(";{p}:{}", class_at(i128::from(d), Place::Prime(p))));
    }
    s
}

pub fn twist_record(model: &TwoTorsionModel, ctx: &TamagawaContext, d: i64) -> Result<TwistRecord, DescentError> {
    require_squarefree(d)?;
    let (a, b) = model.twist(d);
    let sel = selmer2(a, b, Budget::default())?;
    let max_t = ctx.max_exponent(d);
    Ok(TwistRecord {
        d,
        selmer2_dim: sel.dim,
        torsion_dim: sel.torsion_dim,
        r: (sel.torsion_dim == 2).then(|| sel.dim - 2),
        parity_bucket: parity_bucket(model, d),
        favored: max_t <= 0,
        max_tamagawa_exponent: max_t,
    })
}

/// Squarefree d with lo ≤ |d| ≤ hi, ordered by |d| with d before −d.
pub fn twist_range(lo: u64, hi: u64, both_signs: bool) -> Vec<i64> {
    let lo = lo.max(1);
    let mut out = Vec::new();
    if hi < lo {
        return out;
    }
    let mut squarefree = vec![true; (hi - lo + 1) as usize];
    let mut k = 2u64;
    while k * k <= hi {
        let sq = k * k;
        let mut m = lo.div_ceil(sq) * sq;
        while m <= hi {
            squarefree[(m - lo) as usize] = false;
            m += sq;
        }
        k += 1;
    }
    for (i, &ok) in squarefree.iter().enumerate() {
        if ok {
            let d = (lo + i as u64) as i64;
            out.push(d);
            if both_signs {
                out.push(-d);
            }
        }
    }
    out
}

/// Records for every d in `ds`, in input order.
pub fn batch(model: &TwoTorsionModel, ds: &[i64]) -> Result<Vec<TwistRecord>, DescentError> {
    model.check_technical_conditions()?;
    let ctx = TamagawaContext::new(model)?;
    ds.par_iter().map(|&d| twist_record(model, &ctx, d)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParityViolation {
    pub bucket: String,
    pub d_first: i64,
    pub d_conflict: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParityReport {
    /// bucket → (parity of selmer2_dim, number of twists)
    pub buckets: BTreeMap<String, (u32, u64)>,
    pub violations: Vec<ParityViolation>,
}

impl ParityReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

/// selmer2_dim mod 2 must be constant on each bucket.
pub fn parity_audit(records: &[TwistRecord]) -> ParityReport {
    let mut first: BTreeMap<String, (u32, u64, i64)> = BTreeMap::new();
    let mut violations = Vec::new();
    for r in records {
        let parity = r.selmer2_dim % 2;
        let entry = first.entry(r.parity_bucket.clone()).or_insert((parity, 0, r.d));
        entry.1 += 1;
        if entry.0 != parity {
            violations.push(ParityViolation { bucket: r.parity_bucket.clone(), d_first: entry.2, d_conflict: r.d });
        }
    }
    ParityReport { buckets: first.into_iter().map(|(k, (p, n, _))| (k, (p, n))).collect(), violations }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistributionReport {
    /// histogram[r] = number of twists with that normalized rank
    pub histogram: Vec<u64>,
    pub total: u64,
    pub excluded_degenerate: u64,
    /// Empirical weights of even and odd r.
    pub parity_weights: [f64; 2],
    /// TV distance to Σ_b w_b·P^Alt(·|∞, parity b).
    pub tv: f64,
    pub tv_by_parity: [Option<f64>; 2],
}

const TV_SUPPORT: usize = 40;

fn p_alt(b: u8) -> Vec<f64> {
    let params = CaseParams::alternating(ParityMode::Invariant(b)).expect("b ∈ {0, 1}");
    (0..TV_SUPPORT).map(|j| p_inf(j, &params, 1e-18).to_f64()).collect()
}

/// Histogram of r over records (optionally one bucket) against the
/// parity-restricted limit law.
pub fn empirical_distribution(records: &[TwistRecord], bucket: Option<&str>) -> DistributionReport {
    let mut histogram = vec![0u64; 0];
    let mut excluded = 0;
    for rec in records.iter().filter(|r| bucket.is_none_or(|b| r.parity_bucket == b)) {
        match rec.r {
            Some(r) => {
                let r = r as usize;
                if histogram.len() <= r {
                    histogram.resize(r + 1, 0);
                }
                histogram[r] += 1;
            }
            None => excluded += 1,
        }
    }
    let total: u64 = histogram.iter().sum();
    if total == 0 {
        return DistributionReport {
            histogram,
            total,
            excluded_degenerate: excluded,
            parity_weights: [0.0; 2],
            tv: 0.0,
            tv_by_parity: [None, None],
        };
    }
    let laws = [p_alt(0), p_alt(1)];
    let mut counts = [0u64; 2];
    for (j, &h) in histogram.iter().enumerate() {
        counts[j % 2] += h;
    }
    let weights = counts.map(|c| c as f64 / total as f64);
    let at = |j: usize| histogram.get(j).copied().unwrap_or(0) as f64;
    let support = TV_SUPPORT.max(histogram.len());
    let law = |b: usize, j: usize| laws[b].get(j).copied().unwrap_or(0.0);
    let tv = 0.5 * (0..support).map(|j| (at(j) / total as f64 - weights[j % 2] * law(j % 2, j)).abs()).sum::<f64>();
    let tv_by_parity = [0usize, 1].map(|b| {
        (counts[b] > 0).then(|| {
            0.5 * (0..support)
                .filter(|j| j % 2 == b)
                .map(|j| (at(j) / counts[b] as f64 - law(b, j)).abs())
                .sum::<f64>()
        })
    });
    DistributionReport { histogram, total, excluded_degenerate: excluded, parity_weights: weights, tv, tv_by_parity }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TamagawaAudit {
    /// Largest c with 2^{selmer2_dim} ≥ c·max_T 𝒯 on every record.
    pub c: f64,
    pub worst_d: i64,
    pub records: usize,
}

pub fn tamagawa_bound_audit(records: &[TwistRecord]) -> Option<TamagawaAudit> {
    records
        .iter()
        .map(|r| (2f64.powi(r.selmer2_dim as i32 - r.max_tamagawa_exponent as i32), r.d))
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .map(|(c, worst_d)| TamagawaAudit { c, worst_d, records: records.len() })
}

/// Mean of 2^{selmer2_dim}.
pub fn mean_selmer_size(records: &[TwistRecord]) -> f64 {
    records.iter().map(|r| 2f64.powi(r.selmer2_dim as i32)).sum::<f64>() / records.len().max(1) as f64
}

/// d is favored when, among odd primes of good reduction dividing d, at most
/// as many split in Q(√b) as split in Q(√(a² − 4b)).
pub fn favored_klagsbrun(model: &KlagsbrunModel, d: i64) -> Result<bool, DescentError> {
    require_squarefree(d)?;
    let bad = model.bad_primes();
    let disc = model.discriminant();
    let (mut split_k0, mut split_k) = (0, 0);
    for (p, _) in factorize(d.unsigned_abs()) {
        if p == 2 || bad.contains(&p) {
            continue;
        }
        split_k0 += u32::from(kronecker(model.b, p as i64) == 1);
        split_k += u32::from(kronecker(disc.rem_euclid(p as i128) as i64, p as i64) == 1);
    }
    Ok(split_k0 <= split_k)
}
