//! Multinomial model of Frobenius classes and its Gaussian limit.
//!
//! n primes draw classes independently and uniformly from a finite set G; g_n(σ)
//! counts the draws of σ. Constraints ask Σ_i f(X_i) = ⟨g_n, f⟩ ≥ b·n^δ, and an
//! optional congruence asks g_n(σ) ≡ a(σ) mod R for σ ≠ σ₀.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::Serialize;
use thiserror::Error;

use crate::exact::{int, ratio};
use crate::ff_linalg::SampleRng;
use crate::module_algebra::{GaloisModuleSpec, ModuleError, PotentialFavorReport};
use crate::montecarlo::{estimate, map_shards, Estimate};

#[derive(Debug, Error)]
pub enum FrobeniusError {
    #[error("invalid model: {0}")]
    Model(String),
    #[error("invalid constraint: {0}")]
    Constraint(String),
    #[error(transparent)]
    Module(#[from] ModuleError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassModel {
    pub labels: Vec<String>,
    pub sigma0: usize,
    pub modulus: u64,
}

impl ClassModel {
    pub fn new(labels: Vec<String>, sigma0: usize, modulus: u64) -> Result<Self, FrobeniusError> {
        if labels.is_empty() {
            return Err(FrobeniusError::Model("empty class set".into()));
        }
        if sigma0 >= labels.len() {
            return Err(FrobeniusError::Model(format!("σ₀ index {sigma0} out of range")));
        }
        if modulus == 0 {
            return Err(FrobeniusError::Model("modulus must be at least 1".into()));
        }
        Ok(ClassModel { labels, sigma0, modulus })
    }

    /// Classes "0".."k−1", σ₀ = "0".
    pub fn uniform(k: usize, modulus: u64) -> Result<Self, FrobeniusError> {
        Self::new((0..k).map(|i| i.to_string()).collect(), 0, modulus)
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn covariance(&self) -> Vec<Vec<BigRational>> {
        covariance(self.size())
    }
}

/// Σ_{σσ} = 1/|G| − 1/|G|², Σ_{στ} = −1/|G|².
pub fn covariance(k: usize) -> Vec<Vec<BigRational>> {
    let k = k as i64;
    (0..k)
        .map(|i| (0..k).map(|j| if i == j { ratio(k - 1, k * k) } else { ratio(-1, k * k) }).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Constraint {
    pub f: Vec<i64>,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintSet {
    pub constraints: Vec<Constraint>,
    pub delta: f64,
    /// a(σ) for the classes other than σ₀, in label order.
    pub target: Vec<u64>,
}

impl ConstraintSet {
    pub fn new(constraints: Vec<Constraint>, delta: f64, target: Vec<u64>) -> Self {
        ConstraintSet { constraints, delta, target }
    }

    pub fn validate(&self, model: &ClassModel) -> Result<(), FrobeniusError> {
        for c in &self.constraints {
            if c.f.len() != model.size() {
                return Err(FrobeniusError::Constraint(format!("f has {} entries for {} classes", c.f.len(), model.size())));
            }
            if c.f.iter().all(|&x| x == 0) {
                return Err(FrobeniusError::Constraint("f must be nonzero".into()));
            }
            if !(-1.0..=1.0).contains(&c.b) {
                return Err(FrobeniusError::Constraint(format!("threshold {} outside [−1, 1]", c.b)));
            }
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(FrobeniusError::Constraint(format!("δ = {} outside (0, 1/2)", self.delta)));
        }
        if !self.target.is_empty() && self.target.len() != model.size() - 1 {
            return Err(FrobeniusError::Constraint("congruence target needs one entry per class other than σ₀".into()));
        }
        Ok(())
    }

    /// B: the largest |f(σ)|.
    pub fn max_magnitude(&self) -> i64 {
        self.constraints.iter().flat_map(|c| c.f.iter().map(|x| x.abs())).max().unwrap_or(0)
    }

    fn target_at(&self, i: usize) -> u64 {
        self.target.get(i).copied().unwrap_or(0)
    }

    pub fn zero_sum(&self) -> Vec<Vec<i64>> {
        self.constraints.iter().filter(|c| c.f.iter().sum::<i64>() == 0).map(|c| c.f.clone()).collect()
    }
}

/// Class counts of n uniform draws from k classes, by sequential binomials.
pub fn sample_counts<R: Rng + ?Sized>(rng: &mut R, n: u64, k: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(k);
    let mut left = n;
    for i in 0..k {
        if i + 1 == k || left == 0 {
            out.push(left);
            left = 0;
            continue;
        }
        let p = 1.0 / (k - i) as f64;
        let x = Binomial::new(left, p).expect("valid binomial").sample(rng);
        out.push(x);
        left -= x;
    }
    out
}

pub fn event_holds(model: &ClassModel, cs: &ConstraintSet, counts: &[u64], n: u64) -> bool {
    let scale = (n as f64).powf(cs.delta);
    let ok = cs.constraints.iter().all(|c| {
        let s: i64 = c.f.iter().zip(counts).map(|(&f, &g)| f * g as i64).sum();
        s as f64 >= c.b * scale
    });
    ok && (cs.target.is_empty() || congruence_holds(model, cs, counts))
}

fn congruence_holds(model: &ClassModel, cs: &ConstraintSet, counts: &[u64]) -> bool {
    let r = model.modulus;
    let mut j = 0;
    for (i, &g) in counts.iter().enumerate() {
        if i == model.sigma0 {
            continue;
        }
        if g % r != cs.target_at(j) % r {
            return false;
        }
        j += 1;
    }
    true
}

/// Monte Carlo frequency of the joint constraint and congruence event.
pub fn estimate_p(model: &ClassModel, cs: &ConstraintSet, n: u64, trials: u64, seed: u64) -> Result<Estimate, FrobeniusError> {
    cs.validate(model)?;
    let trivial = cs.constraints.is_empty() && (cs.target.is_empty() || model.modulus == 1);
    if trivial {
        return Ok(Estimate { mean: 1.0, stderr: 0.0, trials });
    }
    let k = model.size();
    Ok(estimate(trials, seed, |rng| f64::from(u8::from(event_holds(model, cs, &sample_counts(rng, n, k), n)))))
}

/// V_σ = (Z_σ − mean Z)/√|G| with Z i.i.d. standard normal; Cov V = Σ exactly.
pub fn sample_gaussian<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let z: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
    let mean = z.iter().sum::<f64>() / k as f64;
    let s = (k as f64).sqrt();
    z.into_iter().map(|x| (x - mean) / s).collect()
}

fn pairing(v: &[f64], f: &[i64]) -> f64 {
    v.iter().zip(f).map(|(a, &b)| a * b as f64).sum()
}

/// Pr(⟨V, f_j⟩ ≥ 0 ∀j) (or > 0 when `strict`) for zero-sum f_j.
pub fn estimate_p0(k: usize, zs: &[Vec<i64>], trials: u64, seed: u64, strict: bool) -> Result<Estimate, FrobeniusError> {
    for f in zs {
        if f.len() != k || f.iter().sum::<i64>() != 0 {
            return Err(FrobeniusError::Constraint("P₀ constraints must be zero-sum functions on G".into()));
        }
    }
    if zs.is_empty() {
        return Ok(Estimate { mean: 1.0, stderr: 0.0, trials });
    }
    Ok(estimate(trials, seed, |rng| {
        let v = sample_gaussian(rng, k);
        let ok = zs.iter().all(|f| {
            let s = pairing(&v, f);
            if strict { s > 0.0 } else { s >= 0.0 }
        });
        f64::from(u8::from(ok))
    }))
}

/// Closed-form orthant probability for at most three zero-sum constraints, using
/// corr(⟨V,f⟩, ⟨V,g⟩) = ⟨f,g⟩/(|f||g|) for zero-sum f, g.
pub fn exact_p0(zs: &[Vec<i64>]) -> Option<f64> {
    let rho = |a: &[i64], b: &[i64]| {
        let dot = |x: &[i64], y: &[i64]| x.iter().zip(y).map(|(&p, &q)| (p * q) as f64).sum::<f64>();
        (dot(a, b) / (dot(a, a) * dot(b, b)).sqrt()).clamp(-1.0, 1.0)
    };
    match zs {
        [] => Some(1.0),
        [_] => Some(0.5),
        [a, b] => Some(0.25 + rho(a, b).asin() / (2.0 * PI)),
        [a, b, c] => Some(0.125 + (rho(a, b).asin() + rho(a, c).asin() + rho(b, c).asin()) / (4.0 * PI)),
        _ => None,
    }
}

/// Exact Pr(g_n(σ) ≡ a(σ) mod R ∀σ ≠ σ₀) via the Markov chain on (Z/R)^{|G|−1}.
pub fn exact_congruence_probability(model: &ClassModel, target: &[u64], n: u64) -> Result<BigRational, FrobeniusError> {
    let k = model.size();
    let r = model.modulus;
    if target.len() != k - 1 {
        return Err(FrobeniusError::Constraint("congruence target needs one entry per class other than σ₀".into()));
    }
    let states = r.checked_pow((k - 1) as u32).filter(|&s| s <= 1 << 20);
    let Some(states) = states else {
        return Err(FrobeniusError::Model("congruence state space too large".into()));
    };
    let states = states as usize;
    // state index: base-R digits of the residues of the non-σ₀ classes
    let others: Vec<usize> = (0..k).filter(|&i| i != model.sigma0).collect();
    let step = |s: usize, class: usize| -> usize {
        let Some(pos) = others.iter().position(|&c| c == class) else { return s };
        let w = (r as usize).pow(pos as u32);
        let digit = (s / w) % r as usize;
        let next = (digit + 1) % r as usize;
        s - digit * w + next * w
    };
    let mut dist = vec![BigRational::zero(); states];
    dist[0] = int(1);
    let p = ratio(1, k as i64);
    for _ in 0..n {
        let mut next = vec![BigRational::zero(); states];
        for (s, mass) in dist.iter().enumerate() {
            if mass.is_zero() {
                continue;
            }
            let share = mass * &p;
            for c in 0..k {
                next[step(s, c)] += &share;
            }
        }
        dist = next;
    }
    let goal = target.iter().enumerate().fold(0usize, |acc, (pos, &a)| acc + (a % r) as usize * (r as usize).pow(pos as u32));
    Ok(dist[goal].clone())
}

#[derive(Clone, Debug, Serialize)]
pub struct G1Row {
    pub n: u64,
    pub p_hat: f64,
    pub stderr: f64,
    pub p0: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct G1Report {
    pub rows: Vec<G1Row>,
    /// R^{1−|G|}·P₀.
    pub limit: f64,
    pub p0_exact: bool,
    /// Least-squares slope of log Δ against log n; `None` when Δ vanishes identically.
    pub fitted_exponent: Option<f64>,
    pub bound: f64,
    pub passes: bool,
}

/// Slope of the least-squares line through (ln x, ln y), skipping y ≤ 0.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.1 > 0.0).map(|&(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Δ(n) = |P̂(n) − R^{1−|G|}P₀| along a ladder of n and its fitted decay exponent,
/// which should not exceed −(1/2 − δ) + slack.
pub fn verify_g1_model(
    model: &ClassModel,
    cs: &ConstraintSet,
    ladder: &[u64],
    trials: u64,
    seed: u64,
    slack: f64,
) -> Result<G1Report, FrobeniusError> {
    cs.validate(model)?;
    if cs.constraints.iter().any(|c| c.f.iter().sum::<i64>() != 0) {
        return Err(FrobeniusError::Constraint("the comparison needs zero-sum constraints".into()));
    }
    let zs = cs.zero_sum();
    let (p0, p0_exact) = match exact_p0(&zs) {
        Some(p) => (p, true),
        None => (estimate_p0(model.size(), &zs, trials, seed ^ 0x5eed_0000, false)?.mean, false),
    };
    let congruence_factor = if cs.target.is_empty() { 1.0 } else { (model.modulus as f64).powi(1 - model.size() as i32) };
    let limit = congruence_factor * p0;
    let mut rows = Vec::new();
    for (i, &n) in ladder.iter().enumerate() {
        let e = estimate_p(model, cs, n, trials, seed.wrapping_add(i as u64))?;
        rows.push(G1Row { n, p_hat: e.mean, stderr: e.stderr, p0, delta: (e.mean - limit).abs() });
    }
    let fitted_exponent = log_log_slope(&rows.iter().map(|r| (r.n as f64, r.delta)).collect::<Vec<_>>());
    let bound = -(0.5 - cs.delta) + slack;
    let passes = match fitted_exponent {
        Some(e) => e <= bound,
        None => rows.iter().all(|r| r.delta == 0.0),
    };
    Ok(G1Report { rows, limit, p0_exact, fitted_exponent, bound, passes })
}

/// Entrywise max |Ĉov − Σ| for n^{−1/2}(g_n − n/|G|) over `trials` samples.
pub fn covariance_error(k: usize, n: u64, trials: u64, seed: u64) -> f64 {
    let parts = map_shards(trials, seed, |rng, count| {
        let mut sum = vec![0.0; k];
        let mut prod = vec![0.0; k * k];
        let mean = n as f64 / k as f64;
        let scale = (n as f64).sqrt();
        for _ in 0..count {
            let g = sample_counts(rng, n, k);
            let x: Vec<f64> = g.iter().map(|&c| (c as f64 - mean) / scale).collect();
            for i in 0..k {
                sum[i] += x[i];
                for j in 0..k {
                    prod[i * k + j] += x[i] * x[j];
                }
            }
        }
        (sum, prod)
    });
    let mut sum = vec![0.0; k];
    let mut prod = vec![0.0; k * k];
    for (s, p) in parts {
        sum.iter_mut().zip(&s).for_each(|(a, b)| *a += b);
        prod.iter_mut().zip(&p).for_each(|(a, b)| *a += b);
    }
    let t = trials as f64;
    let sigma = covariance(k);
    let mut worst: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let c = (prod[i * k + j] - sum[i] * sum[j] / t) / (t - 1.0);
            worst = worst.max((c - crate::exact::to_f64(&sigma[i][j])).abs());
        }
    }
    worst
}

#[derive(Clone, Debug)]
pub struct FavoredProbability {
    pub report: PotentialFavorReport,
    /// Gaussian estimate of Pr(⟨V, f_i⟩ > 0 ∀i) in the limit model.
    pub p0: Estimate,
    pub p0_exact: Option<f64>,
    /// Multinomial estimate of Pr(Σ_j f_i(X_j) > 0 ∀i) at the requested n.
    pub p_n: Option<Estimate>,
    /// Positive estimate iff potentially favored (zero within 3σ otherwise).
    pub consistent: bool,
}

/// Expands class weights to one cell per group element.
fn expand(f: &[i64], weights: &[u64]) -> Vec<i64> {
    f.iter().zip(weights).flat_map(|(&x, &w)| std::iter::repeat_n(x, w as usize)).collect()
}

/// P₀ for the difference vectors of a module, classified against is_potentially_favored.
/// In the limit, constraints with Σf < 0 fail almost surely, those with Σf > 0 hold
/// almost surely, and zero-sum ones leave a Gaussian orthant event.
pub fn favored_probability(
    spec: &GaloisModuleSpec,
    n: Option<u64>,
    trials: u64,
    seed: u64,
) -> Result<FavoredProbability, FrobeniusError> {
    let report = spec.is_potentially_favored()?;
    let cells: Vec<Vec<i64>> = report.f_vectors.iter().map(|f| expand(f, &report.weights)).collect();
    let k = report.weights.iter().sum::<u64>() as usize;
    let (p0, p0_exact) = if cells.iter().any(|f| f.iter().sum::<i64>() < 0) {
        (Estimate { mean: 0.0, stderr: 0.0, trials }, Some(0.0))
    } else {
        let zs: Vec<Vec<i64>> = cells.iter().filter(|f| f.iter().sum::<i64>() == 0).cloned().collect();
        (estimate_p0(k, &zs, trials, seed, true)?, exact_p0(&zs))
    };
    let p_n = match n {
        Some(n) if !cells.is_empty() => {
            let est = estimate(trials, seed ^ 0xfeed, |rng: &mut SampleRng| {
                let g = sample_counts(rng, n, k);
                let ok = cells.iter().all(|f| f.iter().zip(&g).map(|(&a, &c)| a * c as i64).sum::<i64>() > 0);
                f64::from(u8::from(ok))
            });
            Some(est)
        }
        Some(_) => Some(Estimate { mean: 1.0, stderr: 0.0, trials }),
        None => None,
    };
    let floor = 3.0 * p0.stderr.max(1.0 / trials.max(1) as f64);
    let consistent = if report.is_potentially_favored() { p0.mean > floor } else { p0.mean <= floor };
    Ok(FavoredProbability { report, p0, p0_exact, p_n, consistent })
}

/// Brute-force congruence probability over all |G|^n class sequences (small n only).
pub fn enumerate_congruence_probability(model: &ClassModel, target: &[u64], n: u32) -> BigRational {
    let k = model.size() as u64;
    let total = k.pow(n);
    let mut hits: HashMap<bool, u64> = HashMap::new();
    let cs = ConstraintSet::new(vec![], 0.25, target.to_vec());
    for code in 0..total {
        let mut counts = vec![0u64; model.size()];
        let mut c = code;
        for _ in 0..n {
            counts[(c % k) as usize] += 1;
            c /= k;
        }
        *hits.entry(congruence_holds(model, &cs, &counts)).or_default() += 1;
    }
    ratio(*hits.get(&true).unwrap_or(&0) as i64, total as i64)
}
