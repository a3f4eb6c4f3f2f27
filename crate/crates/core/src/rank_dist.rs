//! Corank laws for random matrices over F_ℓ: the rectangular (non-self-dual)
//! and alternating cases, their n → ∞ limits, the rank-sequence Markov
//! product and the theoretical moments Σ_j ℓ^{mj} P(j).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{int, one_minus_inv_pow, pow_int, to_decimal, to_f64};
use crate::ff_linalg::{self, check_modulus, gaussian_binomial, sample_kernel_dim_alternating, sample_kernel_dim_uniform};
use crate::montecarlo::{self, Estimate};

/// Default truncation tolerance for limit values (50 decimal digits).
pub const DEFAULT_TOL: f64 = 1e-50;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RankDistError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    NonSelfDual,
    Alternating,
}

/// In the alternating case the limit either fixes the parity of j to `b`
/// or mixes both parities with weight ½.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParityMode {
    Invariant(u8),
    NonInvariant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CaseParams {
    pub case: Case,
    pub ell: u32,
    /// Row deficit of the rectangular model; unused when alternating.
    pub u: i64,
    /// Unused in the non-self-dual case.
    pub parity: ParityMode,
}

impl CaseParams {
    pub fn non_self_dual(ell: u32, u: i64) -> Result<Self, RankDistError> {
        check_modulus(ell).map_err(|e| RankDistError::Params(e.to_string()))?;
        Ok(CaseParams { case: Case::NonSelfDual, ell, u, parity: ParityMode::NonInvariant })
    }

    pub fn alternating(parity: ParityMode) -> Result<Self, RankDistError> {
        if let ParityMode::Invariant(b) = parity {
            if b > 1 {
                return Err(RankDistError::Params(format!("parity b must be 0 or 1, got {b}")));
            }
        }
        Ok(CaseParams { case: Case::Alternating, ell: 2, u: 0, parity })
    }

    /// Smallest n for which the finite model exists.
    pub fn min_n(&self) -> usize {
        match self.case {
            Case::NonSelfDual => self.u.max(0) as usize,
            Case::Alternating => 0,
        }
    }

    /// Exponent b(j) in Σ_j gr_ℓ(j,m) ℓ^{b(j)}.
    fn moment_exponent(&self, j: usize) -> i64 {
        let j = j as i64;
        match self.case {
            Case::Alternating => j * (j + 1) / 2,
            Case::NonSelfDual => j * self.u,
        }
    }
}

/// A rational approximation together with an absolute error bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Approx {
    pub value: BigRational,
    pub err: f64,
}

impl Approx {
    pub fn exact(value: BigRational) -> Self {
        Approx { value, err: 0.0 }
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.value)
    }

    pub fn decimal(&self, digits: usize) -> String {
        to_decimal(&self.value, digits)
    }
}

fn prod_one_minus(ell: u32, ks: impl Iterator<Item = u32>) -> BigRational {
    ks.fold(BigRational::one(), |acc, k| acc * one_minus_inv_pow(ell, k))
}

/// P(j|n) for the kernel dimension of a uniform (n−u)×n matrix over F_ℓ.
pub fn p_nonselfdual(j: usize, n: usize, params: &CaseParams) -> Result<BigRational, RankDistError> {
    if params.case != Case::NonSelfDual {
        return Err(RankDistError::Params("p_nonselfdual needs the non-self-dual case".into()));
    }
    let u = params.u;
    if (n as i64) < u {
        return Err(RankDistError::Domain(format!("no ({}-{u})x{n} matrix exists", n)));
    }
    let ell = params.ell;
    if j > n || (j as i64) < u.max(0) {
        return Ok(BigRational::zero());
    }
    let (jj, nn) = (j as i64, n as i64);
    let mut p = pow_int(ell, -jj * (jj - u));
    for k in 1..=(jj - u) {
        p *= one_minus_inv_pow(ell, (k + nn - jj) as u32) / one_minus_inv_pow(ell, k as u32);
    }
    p /= prod_one_minus(ell, 1..=j as u32);
    p *= prod_one_minus(ell, 1..=n as u32);
    Ok(p)
}

/// P(j|n) for the kernel dimension of a uniform alternating n×n matrix over F_2.
pub fn p_alternating(j: usize, n: usize) -> BigRational {
    if j > n || (n - j) % 2 == 1 {
        return BigRational::zero();
    }
    let jj = j as i64;
    let mut p = pow_int(2, -jj * (jj - 1) / 2);
    for k in 1..=j {
        p *= one_minus_inv_pow(2, (n - j + k) as u32) / one_minus_inv_pow(2, k as u32);
    }
    p * prod_one_minus(2, (1..=(n - j) / 2).map(|k| 2 * k as u32 - 1))
}

pub fn p_finite(j: usize, n: usize, params: &CaseParams) -> Result<BigRational, RankDistError> {
    match params.case {
        Case::NonSelfDual => p_nonselfdual(j, n, params),
        Case::Alternating => Ok(p_alternating(j, n)),
    }
}

/// Σ_{k>K} x^k / (1 − x) for x = ℓ^{-1}: bound on 1 − ∏_{k>K}(1 − ℓ^{−k}).
fn tail_bound(ell: u32, big_k: u32) -> f64 {
    let x = 1.0 / ell as f64;
    x.powi(big_k as i32) * x / (1.0 - x) / (1.0 - x)
}

/// Same bound for the odd-power product ∏_{k>K}(1 − 2^{1−2k}).
fn tail_bound_odd(big_k: u32) -> f64 {
    0.25f64.powi(big_k as i32) * (2.0 / 3.0) / 0.5
}

/// P(j|∞) with all infinite products truncated so that the error is below `tol`.
pub fn p_inf(j: usize, params: &CaseParams, tol: f64) -> Approx {
    let jj = j as i64;
    let (prefactor, odd_product) = match params.case {
        Case::NonSelfDual => {
            let u = params.u;
            if jj < u.max(0) {
                return Approx::exact(BigRational::zero());
            }
            let ell = params.ell;
            let p = pow_int(ell, -jj * (jj - u))
                / prod_one_minus(ell, 1..=(jj - u) as u32)
                / prod_one_minus(ell, 1..=j as u32);
            (p, false)
        }
        Case::Alternating => {
            let weight = match params.parity {
                ParityMode::Invariant(b) if j % 2 != b as usize => return Approx::exact(BigRational::zero()),
                ParityMode::Invariant(_) => int(1),
                ParityMode::NonInvariant => BigRational::new(BigInt::one(), BigInt::from(2)),
            };
            (weight * pow_int(2, -jj * (jj - 1) / 2) / prod_one_minus(2, 1..=j as u32), true)
        }
    };
    // prefactor as an upper bound in f64, padded against rounding
    let pre = to_f64(&prefactor) * (1.0 + 1e-12);
    let mut big_k = 1u32;
    let bound = |k: u32| if odd_product { tail_bound_odd(k) } else { tail_bound(params.ell, k) };
    while pre * bound(big_k) >= tol && big_k < 100_000 {
        big_k += 1;
    }
    let tail = if odd_product {
        prod_one_minus(2, (1..=big_k).map(|k| 2 * k - 1))
    } else {
        prod_one_minus(params.ell, 1..=big_k)
    };
    Approx { value: prefactor * tail, err: pre * bound(big_k) }
}

/// P_th for a nonincreasing rank sequence: P(r₁|∞) ∏ P(r_{k+1}|r_k).
pub fn markov_sequence_prob(seq: &[usize], params: &CaseParams, tol: f64) -> Result<Approx, RankDistError> {
    let Some(&head) = seq.first() else {
        return Err(RankDistError::Domain("empty rank sequence".into()));
    };
    if seq.windows(2).any(|w| w[1] > w[0]) {
        return Err(RankDistError::Domain(format!("rank sequence {seq:?} is not nonincreasing")));
    }
    let start = p_inf(head, params, tol);
    let mut chain = BigRational::one();
    for w in seq.windows(2) {
        if (w[0] as i64) < params.min_n() as i64 {
            return Ok(Approx::exact(BigRational::zero()));
        }
        chain *= p_finite(w[1], w[0], params)?;
    }
    let err = start.err * to_f64(&chain).max(0.0);
    Ok(Approx { value: start.value * chain, err })
}

/// Σ_{j=0}^m gr_ℓ(j,m) ℓ^{b(j)}.
pub fn moment_theoretical(m: usize, params: &CaseParams) -> BigRational {
    (0..=m).fold(BigRational::zero(), |acc, j| {
        let gr = gaussian_binomial(j, m, params.ell).expect("j <= m");
        acc + BigRational::from_integer(BigInt::from(gr)) * pow_int(params.ell, params.moment_exponent(j))
    })
}

/// Size used when a Monte Carlo run asks for the n → ∞ law.
pub const LIMIT_PROXY_N: usize = 64;

/// Sample mean of ℓ^{m·corank} over random matrices of the given case.
/// `n = None` uses n = 64 (bias below ℓ^{-60} for the moments in scope);
/// for the alternating case the proxy size matches the parity `b` when fixed.
pub fn moment_empirical(m: usize, params: &CaseParams, n: Option<usize>, trials: u64, seed: u64) -> Estimate {
    let n = n.unwrap_or(match params.parity {
        ParityMode::Invariant(b) if params.case == Case::Alternating => LIMIT_PROXY_N - b as usize,
        _ => LIMIT_PROXY_N,
    });
    let ell = params.ell;
    let base = (ell as f64).powi(m as i32);
    match params.case {
        Case::Alternating => montecarlo::estimate(trials, seed, |rng| base.powi(sample_kernel_dim_alternating(n, 2, rng) as i32)),
        Case::NonSelfDual => {
            let rows = (n as i64 - params.u).max(0) as usize;
            montecarlo::estimate(trials, seed, |rng| base.powi(sample_kernel_dim_uniform(rows, n, ell, rng) as i32))
        }
    }
}

/// Probability of one corank value.
#[derive(Clone, Debug, PartialEq)]
pub enum Prob {
    Exact(BigRational),
    Approx(Approx),
}

impl Prob {
    pub fn to_f64(&self) -> f64 {
        match self {
            Prob::Exact(r) => to_f64(r),
            Prob::Approx(a) => a.to_f64(),
        }
    }

    pub fn value(&self) -> &BigRational {
        match self {
            Prob::Exact(r) => r,
            Prob::Approx(a) => &a.value,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankDistribution {
    pub params: CaseParams,
    /// `None` for the n → ∞ law.
    pub n: Option<usize>,
    pub entries: Vec<(usize, Prob)>,
}

impl RankDistribution {
    pub fn finite(n: usize, params: &CaseParams) -> Result<Self, RankDistError> {
        let entries = (0..=n)
            .map(|j| p_finite(j, n, params).map(|p| (j, Prob::Exact(p))))
            .collect::<Result<_, _>>()?;
        Ok(RankDistribution { params: *params, n: Some(n), entries })
    }

    pub fn limit(params: &CaseParams, j_max: usize, tol: f64) -> Self {
        let entries = (0..=j_max).map(|j| (j, Prob::Approx(p_inf(j, params, tol)))).collect();
        RankDistribution { params: *params, n: None, entries }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.entries.iter().map(|(_, p)| p.to_f64()).collect()
    }

    pub fn record(&self, digits: usize) -> DistributionRecord {
        let entries = self
            .entries
            .iter()
            .map(|(j, p)| match p {
                Prob::Exact(r) => EntryRecord {
                    j: *j,
                    p_num: Some(r.numer().to_string()),
                    p_den: Some(r.denom().to_string()),
                    p_dec: None,
                    err: "0".into(),
                },
                Prob::Approx(a) => EntryRecord {
                    j: *j,
                    p_num: None,
                    p_den: None,
                    p_dec: Some(a.decimal(digits)),
                    err: format!("{:.3e}", a.err),
                },
            })
            .collect();
        DistributionRecord {
            case: self.params.case,
            ell: self.params.ell,
            u: (self.params.case == Case::NonSelfDual).then_some(self.params.u),
            parity: (self.params.case == Case::Alternating).then_some(self.params.parity),
            n: match self.n {
                Some(n) => SizeRecord::Finite(n),
                None => SizeRecord::Limit("inf".into()),
            },
            entries,
        }
    }
}

/// Serialized form {case, ell, u?, parity?, n, entries}.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DistributionRecord {
    pub case: Case,
    pub ell: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub u: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub parity: Option<ParityMode>,
    pub n: SizeRecord,
    pub entries: Vec<EntryRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum SizeRecord {
    Finite(usize),
    Limit(String),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EntryRecord {
    pub j: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p_num: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p_den: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p_dec: Option<String>,
    pub err: String,
}

/// Exhaustive corank histograms used as a reference by tests and `verify`.
pub mod enumeration {
    use super::*;
    use crate::ff_linalg::FieldMatrix;

    /// Counts of kernel dimension over all ℓ^{rc} matrices of shape r×c.
    pub fn uniform_corank_counts(r: usize, c: usize, ell: u32) -> Vec<u64> {
        let mut counts = vec![0u64; c + 1];
        let total = (ell as u64).pow((r * c) as u32);
        let mut entries = vec![0u32; r * c];
        for _ in 0..total {
            let m = FieldMatrix::new(ell, r, c, entries.clone()).expect("valid");
            counts[m.kernel_dim()] += 1;
            bump(&mut entries, ell);
        }
        counts
    }

    /// Counts of kernel dimension over all alternating n×n matrices over F_ℓ.
    pub fn alternating_corank_counts(n: usize, ell: u32) -> Vec<u64> {
        let slots: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        let mut counts = vec![0u64; n + 1];
        let mut digits = vec![0u32; slots.len()];
        let total = (ell as u64).pow(slots.len() as u32);
        for _ in 0..total {
            let mut m = FieldMatrix::zeros(ell, n, n);
            for (&(i, j), &x) in slots.iter().zip(&digits) {
                m.set(i, j, x);
                m.set(j, i, (ell - x) % ell);
            }
            counts[m.kernel_dim()] += 1;
            bump(&mut digits, ell);
        }
        counts
    }

    fn bump(d: &mut [u32], base: u32) {
        for x in d.iter_mut() {
            *x += 1;
            if *x < base {
                return;
            }
            *x = 0;
        }
    }

    pub fn frequencies(counts: &[u64]) -> Vec<BigRational> {
        let total: u64 = counts.iter().sum();
        counts.iter().map(|&c| BigRational::new(BigInt::from(c), BigInt::from(total))).collect()
    }
}

pub use ff_linalg::SampleRng;
