//! Grid parameters, interval partition of primes, the eight good-ideal
//! criteria, prime-factor counting π_{r,k} and admissible-twist counts over Q.
//!
//! Heights are carried as ln H so that literal parameters stay representable.

use crate::arith::{count_squarefree, kronecker, SpfSieve};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("height too small for literal parameters: log log log H = {0} must exceed 1")]
    HeightTooSmall(f64),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("unknown class label `{0}`")]
    UnknownClass(String),
    #[error("malformed profile: {0}")]
    Profile(String),
    #[error("range violation: {0}")]
    Range(String),
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),
}

/// exp iterated k times.
fn exp_iter(x: f64, k: u32) -> f64 {
    (0..k).fold(x, |acc, _| acc.exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParameterMode {
    Literal,
    Override,
}

/// (α, a₀, i_med) at height H. α is stored through ln α, which is tiny in
/// literal mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridParameters {
    pub ln_h: f64,
    pub alpha: f64,
    pub ln_alpha: f64,
    pub a0: f64,
    pub i_med: u64,
    pub mode: ParameterMode,
}

impl GridParameters {
    /// Literal formulas; requires log^{(3)} H > 1.
    pub fn literal(ln_h: f64) -> Result<Self, GridError> {
        let l3 = ln_h.ln().ln();
        if !(l3 > 1.0) {
            return Err(GridError::HeightTooSmall(l3));
        }
        let inv_ln_alpha = exp_iter(l3 / 4.0, 3);
        let ln_alpha = inv_ln_alpha.recip();
        let a0 = exp_iter(l3 / 3.0, 3);
        let i_med = (exp_iter(l3 / 2.0, 2) * inv_ln_alpha).ceil() as u64;
        Ok(GridParameters { ln_h, alpha: ln_alpha.exp(), ln_alpha, a0, i_med, mode: ParameterMode::Literal })
    }

    pub fn with_overrides(ln_h: f64, alpha: f64, a0: f64, i_med: u64) -> Result<Self, GridError> {
        if !(alpha > 1.0 && a0 > 1.0 && i_med >= 1 && ln_h > 0.0) {
            return Err(GridError::InvalidParameters(format!(
                "need α > 1, a₀ > 1, i_med ≥ 1, H > 1 (got α={alpha}, a₀={a0}, i_med={i_med})"
            )));
        }
        Ok(GridParameters { ln_h, alpha, ln_alpha: alpha.ln(), a0, i_med, mode: ParameterMode::Override })
    }

    /// a₀·α^i in log space.
    pub fn ln_interval_start(&self, i: u64) -> f64 {
        self.a0.ln() + i as f64 * self.ln_alpha
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntervalClass {
    Small,
    Medium(u64),
    Large(u64),
}

impl IntervalClass {
    pub fn index(&self) -> Option<u64> {
        match *self {
            IntervalClass::Small => None,
            IntervalClass::Medium(i) | IntervalClass::Large(i) => Some(i),
        }
    }
}

/// Small when norm ≤ a₀, else the i with a₀α^i ≤ norm < a₀α^{i+1}.
pub fn interval_index(norm: u64, params: &GridParameters) -> IntervalClass {
    let n = norm as f64;
    if n <= params.a0 {
        return IntervalClass::Small;
    }
    let start = |i: i64| params.a0 * params.alpha.powi(i as i32);
    let mut i = ((n / params.a0).ln() / params.ln_alpha).floor().max(0.0) as i64;
    // correct floating drift of the log ratio against the direct products
    while i > 0 && start(i) > n {
        i -= 1;
    }
    while start(i + 1) <= n {
        i += 1;
    }
    let i = i as u64;
    if i < params.i_med {
        IntervalClass::Medium(i)
    } else {
        IntervalClass::Large(i)
    }
}

/// Conjugacy classes of G₁ with their sizes; `identity` is the class {1}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassUniverse {
    pub labels: Vec<String>,
    pub sizes: Vec<u64>,
    pub identity: usize,
}

impl ClassUniverse {
    pub fn new(labels: Vec<String>, sizes: Vec<u64>, identity: usize) -> Result<Self, GridError> {
        if labels.is_empty() || labels.len() != sizes.len() || identity >= labels.len() || sizes.contains(&0) {
            return Err(GridError::InvalidParameters("malformed class universe".into()));
        }
        Ok(ClassUniverse { labels, sizes, identity })
    }

    /// Abelian universe of singleton classes.
    pub fn abelian<S: Into<String>>(labels: Vec<S>, identity: usize) -> Result<Self, GridError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let sizes = vec![1; labels.len()];
        Self::new(labels, sizes, identity)
    }

    pub fn resolve(&self, label: &str) -> Result<usize, GridError> {
        self.labels.iter().position(|l| l == label).ok_or_else(|| GridError::UnknownClass(label.to_string()))
    }

    pub fn order(&self) -> u64 {
        self.sizes.iter().sum()
    }
}

/// A squarefree ideal as (norm, class index) pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealProfile {
    pub factors: Vec<(u64, usize)>,
}

impl IdealProfile {
    /// Parses "norm:class,norm:class"; the empty string is the unit ideal.
    pub fn parse(text: &str, universe: &ClassUniverse) -> Result<Self, GridError> {
        let mut factors = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (norm, label) =
                item.split_once(':').ok_or_else(|| GridError::Profile(format!("`{item}` lacks `norm:class`")))?;
            let norm: u64 =
                norm.trim().parse().map_err(|_| GridError::Profile(format!("bad norm in `{item}`")))?;
            if norm < 2 {
                return Err(GridError::Profile(format!("norm {norm} < 2")));
            }
            factors.push((norm, universe.resolve(label.trim())?));
        }
        let mut norms: Vec<u64> = factors.iter().map(|f| f.0).collect();
        norms.sort_unstable();
        if norms.windows(2).any(|w| w[0] == w[1]) {
            return Err(GridError::Profile("repeated prime norm".into()));
        }
        Ok(IdealProfile { factors })
    }

    pub fn render(&self, universe: &ClassUniverse) -> String {
        self.factors.iter().map(|&(n, c)| format!("{n}:{}", universe.labels[c])).collect::<Vec<_>>().join(",")
    }

    pub fn omega(&self) -> usize {
        self.factors.len()
    }
}

/// Thresholds of the eight criteria. Log-scale fields are natural logs of norms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub max_omega: f64,
    pub max_small: f64,
    pub max_medium: f64,
    pub min_size: f64,
    pub balance_exponent: f64,
    pub min_log_norm: f64,
    pub low_log_norm: f64,
    pub min_low_count: f64,
    pub high_log_norm: f64,
    pub min_high_count: f64,
    pub f_bound: u32,
    pub overbalance_exponent: f64,
}

impl Thresholds {
    /// Literal thresholds as functions of ln H (needs ln H > e so that
    /// log^{(3)} H > 0).
    pub fn literal(ln_h: f64) -> Self {
        let l2 = ln_h.ln();
        let l3 = l2.ln();
        Thresholds {
            max_omega: l2 * l2,
            max_small: l2.powf(1.0 / 3.0 + 0.01),
            max_medium: l2.powf(0.5 + 0.01),
            min_size: l2 / l3,
            balance_exponent: 0.75,
            min_log_norm: ln_h / 2.0,
            low_log_norm: exp_iter(2.0 * l3 / 3.0, 2),
            min_low_count: l2.powf(2.0 / 3.0 - 0.01),
            high_log_norm: exp_iter(3.0 * l3 / 4.0, 2),
            min_high_count: l2.powf(1.0 - 0.01),
            f_bound: l3.max(0.0).sqrt().exp().floor() as u32,
            overbalance_exponent: 0.25,
        }
    }

    /// Every criterion made easier by `factor` ≥ 1: upper bounds scale up,
    /// lower bounds scale down.
    pub fn loosened(&self, factor: f64) -> Self {
        Thresholds {
            max_omega: self.max_omega * factor,
            max_small: self.max_small * factor,
            max_medium: self.max_medium * factor,
            min_size: self.min_size / factor,
            balance_exponent: self.balance_exponent,
            min_log_norm: self.min_log_norm / factor,
            low_log_norm: self.low_log_norm * factor,
            min_low_count: self.min_low_count / factor,
            high_log_norm: self.high_log_norm / factor,
            min_high_count: self.min_high_count / factor,
            f_bound: ((self.f_bound as f64) / factor).floor() as u32,
            overbalance_exponent: self.overbalance_exponent / factor,
        }
    }
}

/// Divisibility hook for the exceptional-zero criterion. With no exceptional
/// modulus, or ℓ ≠ 2, the criterion holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiegelHook {
    pub ell: u64,
    pub d_sie: Option<u64>,
    pub a_v0: u64,
}

impl Default for SiegelHook {
    fn default() -> Self {
        SiegelHook { ell: 2, d_sie: None, a_v0: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub universe: ClassUniverse,
    pub thresholds: Thresholds,
    pub siegel: SiegelHook,
    /// Cap on (2B+1)^{#classes} test functions for the overbalance criterion.
    pub function_cap: u64,
}

impl GridConfig {
    pub fn new(universe: ClassUniverse, thresholds: Thresholds) -> Self {
        GridConfig { universe, thresholds, siegel: SiegelHook::default(), function_cap: 5_000_000 }
    }
}

pub const CRITERION_NAMES: [&str; 8] = [
    "Not too many primes",
    "Inside a grid",
    "Not too many small primes",
    "Enough primes",
    "Classes balanced",
    "No Siegel zeros",
    "Prepared for higher Selmer work",
    "Classes not overbalanced",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub index: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Good,
    Bad(u8),
}

impl Verdict {
    /// 0 for Good, j for Bad(j).
    pub fn slot(&self) -> usize {
        match *self {
            Verdict::Good => 0,
            Verdict::Bad(j) => j as usize,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub criteria: Vec<CriterionReport>,
}

struct Layout {
    small: Vec<(u64, usize)>,
    medium: Vec<(u64, usize)>,
    large: Vec<(u64, usize)>,
}

fn layout(profile: &IdealProfile, params: &GridParameters) -> Layout {
    let mut l = Layout { small: Vec::new(), medium: Vec::new(), large: Vec::new() };
    for &(norm, class) in &profile.factors {
        match interval_index(norm, params) {
            IntervalClass::Small => l.small.push((norm, class)),
            IntervalClass::Medium(i) => l.medium.push((i, class)),
            IntervalClass::Large(i) => l.large.push((i, class)),
        }
    }
    l
}

fn evaluate(
    j: usize,
    profile: &IdealProfile,
    lay: &Layout,
    params: &GridParameters,
    config: &GridConfig,
) -> Result<(bool, String), GridError> {
    let t = &config.thresholds;
    let s = profile.omega() as f64;
    Ok(match j {
        1 => (s <= t.max_omega, format!("omega={s} max={:.4}", t.max_omega)),
        2 => {
            let mut idx: Vec<u64> = lay.medium.iter().chain(&lay.large).map(|f| f.0).collect();
            idx.sort_unstable();
            let distinct = idx.windows(2).all(|w| w[0] < w[1]);
            // supremum of grid norms: small primes times upper interval ends
            let ln_top: f64 = lay.small.iter().map(|f| (f.0 as f64).ln()).sum::<f64>()
                + idx.iter().map(|&i| params.ln_interval_start(i + 1)).sum::<f64>();
            let height_ok = ln_top <= params.ln_h * (1.0 + 1e-12);
            (
                distinct && height_ok,
                format!("distinct_indices={distinct} ln_top={ln_top:.4} ln_H={:.4}", params.ln_h),
            )
        }
        3 => {
            let (a, b) = (lay.small.len() as f64, lay.medium.len() as f64);
            (
                a <= t.max_small && b <= t.max_medium,
                format!("small={a} max={:.4} medium={b} max={:.4}", t.max_small, t.max_medium),
            )
        }
        4 => (s >= t.min_size, format!("size={s} min={:.4}", t.min_size)),
        5 => {
            let order = config.universe.order() as f64;
            let bound = s.powf(t.balance_exponent);
            let mut worst = 0.0f64;
            for (c, &size) in config.universe.sizes.iter().enumerate() {
                let count = lay.large.iter().filter(|f| f.1 == c).count() as f64;
                worst = worst.max((count - size as f64 / order * s).abs());
            }
            (worst <= bound, format!("max_deviation={worst:.4} bound={bound:.4}"))
        }
        6 => {
            let hook = &config.siegel;
            match hook.d_sie {
                Some(d) if hook.ell == 2 && d > 1 => {
                    let residue = lay
                        .small
                        .iter()
                        .fold(u128::from(hook.a_v0) % u128::from(d), |acc, f| acc * u128::from(f.0) % u128::from(d));
                    (residue != 0, format!("d_sie={d} residue={residue}"))
                }
                Some(1) if hook.ell == 2 => (false, "d_sie=1 divides everything".into()),
                _ => (true, "no exceptional modulus".into()),
            }
        }
        7 => {
            let mut idx: Vec<u64> = lay.medium.iter().chain(&lay.large).map(|f| f.0).collect();
            idx.sort_unstable();
            let ln_bottom: f64 = lay.small.iter().map(|f| (f.0 as f64).ln()).sum::<f64>()
                + idx.iter().map(|&i| params.ln_interval_start(i)).sum::<f64>();
            let id = config.universe.identity;
            let low = lay
                .large
                .iter()
                .filter(|f| f.1 == id && params.ln_interval_start(f.0 + 1) <= t.low_log_norm)
                .count() as f64;
            let high = lay
                .large
                .iter()
                .filter(|f| f.1 == id && params.ln_interval_start(f.0) >= t.high_log_norm)
                .count() as f64;
            (
                ln_bottom >= t.min_log_norm && low >= t.min_low_count && high >= t.min_high_count,
                format!(
                    "ln_min_norm={ln_bottom:.4} min={:.4} low={low} min={:.4} high={high} min={:.4}",
                    t.min_log_norm, t.min_low_count, t.min_high_count
                ),
            )
        }
        8 => {
            let k = config.universe.labels.len();
            let mut counts = vec![0i64; k];
            for &(_, c) in &profile.factors {
                counts[c] += 1;
            }
            let b = i64::from(t.f_bound);
            let width = (2 * b + 1) as u64;
            let total = width.checked_pow(k as u32).filter(|&n| n <= config.function_cap).ok_or_else(|| {
                GridError::CapExceeded(format!("(2·{b}+1)^{k} test functions exceed {}", config.function_cap))
            })?;
            let bound = s.powf(t.overbalance_exponent);
            let mut worst: Option<(i64, Vec<i64>)> = None;
            let mut f = vec![-b; k];
            for _ in 0..total {
                if f.iter().any(|&v| v != 0) {
                    let sum: i64 = f.iter().zip(&counts).map(|(a, n)| a * n).sum::<i64>().abs();
                    if worst.as_ref().is_none_or(|w| sum < w.0) {
                        worst = Some((sum, f.clone()));
                    }
                }
                for v in f.iter_mut() {
                    if *v < b {
                        *v += 1;
                        break;
                    }
                    *v = -b;
                }
            }
            match worst {
                None => (true, "no nonzero test function".into()),
                Some((sum, f)) => (sum as f64 >= bound, format!("min_abs_sum={sum} at f={f:?} bound={bound:.4}")),
            }
        }
        _ => unreachable!("criteria are numbered 1..=8"),
    })
}

/// Evaluates criterion j in isolation.
pub fn criterion_holds(
    j: usize,
    profile: &IdealProfile,
    params: &GridParameters,
    config: &GridConfig,
) -> Result<bool, GridError> {
    evaluate(j, profile, &layout(profile, params), params, config).map(|r| r.0)
}

/// All eight criteria with the first failure as the verdict.
pub fn classify_ideal(
    profile: &IdealProfile,
    params: &GridParameters,
    config: &GridConfig,
) -> Result<Classification, GridError> {
    if let Some(&(_, c)) = profile.factors.iter().find(|f| f.1 >= config.universe.labels.len()) {
        return Err(GridError::UnknownClass(format!("index {c}")));
    }
    let lay = layout(profile, params);
    let mut criteria = Vec::with_capacity(8);
    let mut verdict = Verdict::Good;
    for j in 1..=8 {
        let (passed, detail) = evaluate(j, profile, &lay, params, config)?;
        if !passed && verdict == Verdict::Good {
            verdict = Verdict::Bad(j as u8);
        }
        criteria.push(CriterionReport { index: j, name: CRITERION_NAMES[j - 1], passed, detail });
    }
    Ok(Classification { verdict, criteria })
}

/// Frobenius-class surrogate for rational primes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ClassFn {
    /// Label "1" or "-1" by the Kronecker symbol (d|p).
    Kronecker(i64),
    /// Label p mod m.
    Residue(u64),
    Constant,
}

impl ClassFn {
    pub fn universe(&self) -> ClassUniverse {
        match *self {
            ClassFn::Kronecker(_) => ClassUniverse::abelian(vec!["1", "-1"], 0),
            ClassFn::Residue(m) => {
                let units: Vec<String> =
                    (1..m.max(2)).filter(|&a| num_integer::gcd(a, m) == 1).map(|a| a.to_string()).collect();
                ClassUniverse::abelian(units, 0)
            }
            ClassFn::Constant => ClassUniverse::abelian(vec!["1"], 0),
        }
        .expect("built-in universes are well formed")
    }

    /// Primes the class function cannot label (ramified).
    pub fn ramified(&self, p: u64) -> bool {
        match *self {
            ClassFn::Kronecker(d) => kronecker(d, p as i64) == 0,
            ClassFn::Residue(m) => m % p == 0,
            ClassFn::Constant => false,
        }
    }

    /// Class index of an unramified prime in `universe()`.
    pub fn class_of(&self, p: u64) -> usize {
        match *self {
            ClassFn::Kronecker(d) => usize::from(kronecker(d, p as i64) != 1),
            ClassFn::Residue(m) => {
                let r = p % m;
                (1..r).filter(|&a| num_integer::gcd(a, m) == 1).count()
            }
            ClassFn::Constant => 0,
        }
    }
}

/// Squarefree n ≤ X built from admissible primes: not in `excluded` and not
/// ramified for the class function.
pub struct ProfileStream {
    sieve: SpfSieve,
    class_fn: ClassFn,
    excluded: Vec<u64>,
}

impl ProfileStream {
    pub const MAX_X: u64 = 100_000_000;

    pub fn new(x: u64, class_fn: ClassFn, excluded: Vec<u64>) -> Result<Self, GridError> {
        if x > Self::MAX_X {
            return Err(GridError::Range(format!("X = {x} exceeds {}", Self::MAX_X)));
        }
        Ok(ProfileStream { sieve: SpfSieve::new(x.max(1)), class_fn, excluded })
    }

    pub fn x(&self) -> u64 {
        self.sieve.limit()
    }

    pub fn class_fn(&self) -> &ClassFn {
        &self.class_fn
    }

    /// Profile of n, or None when n is not a squarefree product of admissible primes.
    pub fn profile(&self, n: u64) -> Option<IdealProfile> {
        let mut factors = Vec::new();
        for (p, e) in self.sieve.factor(n) {
            if e > 1 || self.excluded.contains(&p) || self.class_fn.ramified(p) {
                return None;
            }
            factors.push((p, self.class_fn.class_of(p)));
        }
        Some(IdealProfile { factors })
    }

    pub fn exhaustive(&self) -> impl Iterator<Item = (u64, IdealProfile)> + '_ {
        (1..=self.x()).filter_map(move |n| self.profile(n).map(|p| (n, p)))
    }

    /// `count` admissible n drawn uniformly by rejection.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<(u64, IdealProfile)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let n = rng.gen_range(1..=self.x());
            if let Some(p) = self.profile(n) {
                out.push((n, p));
            }
        }
        out
    }
}

/// Verdict counts (slot 0 = Good, slot j = Bad(j)) over all admissible n ≤ X,
/// sharded by ranges of n.
pub fn verdict_histogram(
    stream: &ProfileStream,
    params: &GridParameters,
    config: &GridConfig,
) -> Result<[u64; 9], GridError> {
    const SHARD: u64 = 1 << 14;
    let shards: Vec<u64> = (0..stream.x().div_ceil(SHARD)).collect();
    let parts: Result<Vec<[u64; 9]>, GridError> = shards
        .par_iter()
        .map(|&s| {
            let mut h = [0u64; 9];
            for n in s * SHARD + 1..=((s + 1) * SHARD).min(stream.x()) {
                if let Some(p) = stream.profile(n) {
                    h[classify_ideal(&p, params, config)?.verdict.slot()] += 1;
                }
            }
            Ok(h)
        })
        .collect();
    Ok(parts?.into_iter().fold([0u64; 9], |mut acc, h| {
        acc.iter_mut().zip(h).for_each(|(a, b)| *a += b);
        acc
    }))
}

/// π_{r,k}(x, y) for all r, k at once: counts of squarefree n ≤ x made of
/// non-excluded primes with ω(n) = r and exactly k prime factors ≤ y.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PiTable {
    pub x: u64,
    pub y: u64,
    pub excluded: Vec<u64>,
    /// counts[r][k]
    pub counts: Vec<Vec<u64>>,
}

impl PiTable {
    pub const MAX_X: u64 = 100_000_000;

    pub fn new(x: u64, y: u64, excluded: &[u64]) -> Result<Self, GridError> {
        if x > Self::MAX_X {
            return Err(GridError::Range(format!("x = {x} exceeds {}", Self::MAX_X)));
        }
        let n = x as usize;
        let mut omega = vec![0u8; n + 1];
        let mut small = vec![0u8; n + 1];
        let mut dead = vec![false; n + 1];
        let mut composite = vec![false; n + 1];
        for p in 2..=n {
            if composite[p] {
                continue;
            }
            let bad = excluded.contains(&(p as u64));
            let is_small = p as u64 <= y;
            let mut m = p;
            while m <= n {
                if m > p {
                    composite[m] = true;
                }
                omega[m] += 1;
                small[m] += u8::from(is_small);
                dead[m] |= bad;
                m += p;
            }
            if let Some(sq) = p.checked_mul(p) {
                let mut m = sq;
                while m <= n {
                    dead[m] = true;
                    m += sq;
                }
            }
        }
        let mut counts: Vec<Vec<u64>> = Vec::new();
        for m in 1..=n {
            if dead[m] {
                continue;
            }
            let (r, k) = (omega[m] as usize, small[m] as usize);
            if counts.len() <= r {
                counts.resize_with(r + 1, Vec::new);
            }
            if counts[r].len() <= k {
                counts[r].resize(k + 1, 0);
            }
            counts[r][k] += 1;
        }
        Ok(PiTable { x, y, excluded: excluded.to_vec(), counts })
    }

    pub fn count(&self, r: usize, k: usize) -> u64 {
        if k >= r {
            return 0;
        }
        self.counts.get(r).and_then(|row| row.get(k)).copied().unwrap_or(0)
    }

    pub fn max_r(&self) -> usize {
        self.counts.len().saturating_sub(1)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// C·x/ln x · (lnln y + C)^k/k! · (lnln x − lnln y + C)^{r−k−1}/(r−k−1)!; r > k.
pub fn pi_rk_bound(x: f64, y: f64, r: usize, k: usize, c: f64) -> f64 {
    assert!(r > k, "bound needs r > k");
    let (llx, lly) = (x.ln().ln(), y.ln().ln());
    c * x / x.ln() * (lly + c).powi(k as i32) / factorial(k) * (llx - lly + c).powi((r - k - 1) as i32)
        / factorial(r - k - 1)
}

/// Smallest C (to 1e−9 relative) with count ≤ bound over every (r, k, count).
pub fn fit_pi_constant(x: f64, y: f64, data: &[(usize, usize, u64)]) -> f64 {
    let (llx, lly) = (x.ln().ln(), y.ln().ln());
    // both bases nonnegative from here on, so the bound is increasing in C
    let floor = 0f64.max(-lly).max(lly - llx);
    let mut fit = floor;
    for &(r, k, count) in data {
        if r <= k || count == 0 {
            continue;
        }
        let ok = |c: f64| pi_rk_bound(x, y, r, k, c) >= count as f64;
        let mut hi = floor.max(1.0);
        while !ok(hi) {
            hi *= 2.0;
        }
        let mut lo = floor;
        while hi - lo > 1e-9 * hi {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        fit = fit.max(hi);
    }
    fit
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PiCount {
    pub x: u64,
    pub y: u64,
    pub r: usize,
    pub k: usize,
    pub count: u64,
    pub bound: f64,
    pub constant: f64,
    pub within_bound: bool,
}

/// π_{r,k}(x, y) with the bound evaluated at C. Requires y^{k+1} ≤ x.
pub fn count_pi_rk(x: u64, y: u64, r: usize, k: usize, c: f64, excluded: &[u64]) -> Result<PiCount, GridError> {
    if y < 2 || (y as f64).powi(k as i32 + 1) > x as f64 {
        return Err(GridError::Range(format!("need 2 ≤ y and y^(k+1) ≤ x (x={x}, y={y}, k={k})")));
    }
    let table = PiTable::new(x, y, excluded)?;
    let count = table.count(r, k);
    let bound = if r > k { pi_rk_bound(x as f64, y as f64, r, k, c) } else { 0.0 };
    Ok(PiCount { x, y, r, k, count, bound, constant: c, within_bound: count as f64 <= bound })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibleCount {
    pub h: u64,
    pub count: u64,
    pub kappa: u64,
    pub density: f64,
    pub relative_error: f64,
}

/// κ = #𝔽(−1)^× / [Q(μ_ℓ):Q] for 𝔽 = F_ℓ over Q; both sides are ℓ − 1.
pub fn kappa_q(ell: u64) -> u64 {
    let units = ell - 1;
    let cyclotomic_degree = ell - 1;
    units / cyclotomic_degree
}

/// Quadratic characters over Q by positive squarefree conductor, 1 included.
pub fn count_admissible_twists_q(h: u64) -> Result<AdmissibleCount, GridError> {
    if h > 100_000_000 {
        return Err(GridError::Range(format!("H = {h} exceeds 10^8")));
    }
    let count = count_squarefree(h);
    let density = count as f64 / h.max(1) as f64;
    let limit = 6.0 / std::f64::consts::PI.powi(2);
    Ok(AdmissibleCount { h, count, kappa: kappa_q(2), density, relative_error: (density - limit).abs() / limit })
}

pub mod fixtures {
    use super::*;

    /// Override parameters, two classes and thresholds under which
    /// `good_profile` passes every criterion.
    pub fn good_setup() -> (GridParameters, GridConfig) {
        let params = GridParameters::with_overrides(200.0, 2.0, 100.0, 5).unwrap();
        let universe = ClassUniverse::abelian(vec!["1", "-1"], 0).unwrap();
        let thresholds = Thresholds {
            max_omega: 20.0,
            max_small: 2.0,
            max_medium: 3.0,
            min_size: 10.0,
            balance_exponent: 0.75,
            min_log_norm: 100.0,
            low_log_norm: 100f64.ln() + 13.0 * 2f64.ln(),
            min_low_count: 2.0,
            high_log_norm: 100f64.ln() + 14.0 * 2f64.ln(),
            min_high_count: 2.0,
            f_bound: 1,
            overbalance_exponent: 0.25,
        };
        (params, GridConfig::new(universe, thresholds))
    }

    /// Sixteen factors: two small, three medium, eleven large; class counts 7/9.
    pub fn good_profile() -> IdealProfile {
        // one norm per interval [100·2^i, 100·2^{i+1})
        let small = [(3u64, 0usize), (5, 1)];
        let medium = [(101u64, 1usize), (211, 1), (409, 0)];
        let large = [
            (3203u64, 0usize),
            (6421, 1),
            (12809, 0),
            (25603, 1),
            (51203, 0),
            (102407, 1),
            (204803, 1),
            (409609, 1),
            (819229, 1),
            (1638431, 0),
            (3276803, 0),
        ];
        IdealProfile { factors: small.iter().chain(&medium).chain(&large).copied().collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::arith::{is_squarefree, primes_up_to};
    use proptest::prelude::*;

    #[test]
    fn literal_parameters_at_triple_exponential_height() {
        let ln_h = 1.5f64.exp().exp();
        let p = GridParameters::literal(ln_h).unwrap();
        assert!((p.a0 - exp_iter(0.5, 3)).abs() < 1e-9);
        assert!((p.ln_alpha - exp_iter(0.375, 3).recip()).abs() < 1e-15);
        assert!((p.a0 - 181.331_303_6).abs() < 1e-6, "{}", p.a0);
        assert!((p.ln_alpha - 0.013776).abs() < 1e-5, "{}", p.ln_alpha);
        assert_eq!(p.i_med, 603);
        assert!(GridParameters::literal(10.0).is_err());
        // α → 1⁺ monotonically along a ladder of heights
        let mut prev = f64::INFINITY;
        for l3 in [1.1, 1.3, 1.5, 1.7, 1.9] {
            let a = GridParameters::literal(exp_iter(l3, 2)).unwrap().ln_alpha;
            assert!(a > 0.0 && a < prev);
            prev = a;
        }
    }

    #[test]
    fn overrides_and_interval_boundaries() {
        let p = GridParameters::with_overrides(50.0, 2.0, 100.0, 5).unwrap();
        assert_eq!((p.alpha, p.a0, p.i_med, p.mode), (2.0, 100.0, 5, ParameterMode::Override));
        assert_eq!(interval_index(100, &p), IntervalClass::Small);
        assert_eq!(interval_index(101, &p), IntervalClass::Medium(0));
        assert_eq!(interval_index(799, &p), IntervalClass::Medium(2));
        assert_eq!(interval_index(800, &p), IntervalClass::Medium(3));
        assert_eq!(interval_index(801, &p), IntervalClass::Medium(3));
        assert_eq!(interval_index(3200, &p), IntervalClass::Large(5));
        assert!(GridParameters::with_overrides(50.0, 1.0, 100.0, 5).is_err());
    }

    #[test]
    fn interval_index_is_half_open_at_literal_scale() {
        let p = GridParameters::literal(1.5f64.exp().exp()).unwrap();
        for norm in [182u64, 200, 1000, 10_000, 123_457] {
            let i = interval_index(norm, &p).index().unwrap();
            assert!(p.ln_interval_start(i).exp() <= norm as f64 * (1.0 + 1e-12));
            assert!(p.ln_interval_start(i + 1).exp() > norm as f64 * (1.0 - 1e-12));
        }
    }

    #[test]
    fn good_fixture_passes_everything() {
        let (params, config) = good_setup();
        let profile = good_profile();
        let indices: Vec<u64> = profile.factors.iter().filter_map(|f| interval_index(f.0, &params).index()).collect();
        assert_eq!(indices, [0, 1, 2].into_iter().chain(5..16).collect::<Vec<u64>>());
        let c = classify_ideal(&profile, &params, &config).unwrap();
        assert_eq!(c.verdict, Verdict::Good, "{:#?}", c.criteria);
        assert_eq!(c.criteria.len(), 8);
    }

    #[test]
    fn first_failures() {
        let (params, config) = good_setup();
        let mut tight = config.clone();
        tight.thresholds.max_omega = 15.0;
        assert_eq!(classify_ideal(&good_profile(), &params, &tight).unwrap().verdict, Verdict::Bad(1));

        // two medium primes in interval 1
        let mut same = good_profile();
        same.factors[2] = (223, 1);
        let c = classify_ideal(&same, &params, &config).unwrap();
        assert_eq!(c.verdict, Verdict::Bad(2));

        // empty ideal lacks enough primes
        let c = classify_ideal(&IdealProfile::default(), &params, &config).unwrap();
        assert_eq!(c.verdict, Verdict::Bad(4));

        // exceptional modulus dividing a_V0 · small primes
        let mut siegel = config.clone();
        siegel.siegel = SiegelHook { ell: 2, d_sie: Some(15), a_v0: 2 };
        assert_eq!(classify_ideal(&good_profile(), &params, &siegel).unwrap().verdict, Verdict::Bad(6));
        siegel.siegel.ell = 3;
        assert_eq!(classify_ideal(&good_profile(), &params, &siegel).unwrap().verdict, Verdict::Good);

        // perfectly balanced classes are overbalanced for f = (1, −1)
        let mut balanced = good_profile();
        balanced.factors[1].1 = 0;
        let c = classify_ideal(&balanced, &params, &config).unwrap();
        assert!(!c.criteria[7].passed);
    }

    #[test]
    fn profile_round_trip_and_errors() {
        let u = ClassUniverse::abelian(vec!["1", "-1"], 0).unwrap();
        let p = IdealProfile::parse("3:-1, 5:1", &u).unwrap();
        assert_eq!(p.factors, vec![(3, 1), (5, 0)]);
        assert_eq!(IdealProfile::parse(&p.render(&u), &u).unwrap(), p);
        assert_eq!(IdealProfile::parse("", &u).unwrap(), IdealProfile::default());
        assert_eq!(IdealProfile::parse("3:i", &u), Err(GridError::UnknownClass("i".into())));
        assert!(IdealProfile::parse("3:1,3:-1", &u).is_err());
    }

    #[test]
    fn exhaustive_streams_match_mobius_oracle() {
        // odd squarefree n ≤ X counted as Σ_{d odd} μ(d)⌊(X/d² + 1)/2⌋
        let oracle = |x: u64| -> u64 {
            let mu = crate::arith::mobius_up_to(x.isqrt() as usize);
            (1..=x.isqrt())
                .step_by(2)
                .map(|d| i64::from(mu[d as usize]) * (x / (d * d)).div_ceil(2) as i64)
                .sum::<i64>() as u64
        };
        for x in [1u64, 2, 30, 1000] {
            let s = ProfileStream::new(x, ClassFn::Constant, vec![2]).unwrap();
            assert_eq!(s.exhaustive().count() as u64, oracle(x), "X={x}");
        }
        let s = ProfileStream::new(1, ClassFn::Constant, vec![2]).unwrap();
        assert_eq!(s.exhaustive().collect::<Vec<_>>(), vec![(1, IdealProfile::default())]);
        let s = ProfileStream::new(30, ClassFn::Constant, vec![]).unwrap();
        assert_eq!(s.exhaustive().count(), (1..=30).filter(|&n| is_squarefree(n)).count());
    }

    #[test]
    fn kronecker_minus_four_labels() {
        let s = ProfileStream::new(10_000, ClassFn::Kronecker(-4), vec![2]).unwrap();
        let mut counts = [0u64; 2];
        for p in primes_up_to(10_000).into_iter().skip(1) {
            let f = s.profile(p).unwrap();
            assert_eq!(f.factors[0].1, usize::from(p % 4 == 3));
            counts[f.factors[0].1] += 1;
        }
        let frac = counts[0] as f64 / (counts[0] + counts[1]) as f64;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
    }

    #[test]
    fn residue_classes_index_units() {
        let f = ClassFn::Residue(8);
        assert_eq!(f.universe().labels, vec!["1", "3", "5", "7"]);
        assert_eq!([3u64, 5, 7, 17].map(|p| f.class_of(p)), [1, 2, 3, 0]);
        assert!(f.ramified(2));
    }

    fn brute_pi(x: u64, y: u64, r: usize, k: usize, excluded: &[u64]) -> u64 {
        let primes: Vec<u64> = primes_up_to(x).into_iter().filter(|p| !excluded.contains(p)).collect();
        let small = |p: u64| usize::from(p <= y);
        match r {
            1 => primes.iter().filter(|&&p| small(p) == k).count() as u64,
            2 => {
                let mut c = 0;
                for (i, &p) in primes.iter().enumerate() {
                    for &q in &primes[i + 1..] {
                        if p * q > x {
                            break;
                        }
                        c += u64::from(small(p) + small(q) == k);
                    }
                }
                c
            }
            3 => {
                let mut c = 0;
                for (i, &p) in primes.iter().enumerate() {
                    if p * p * p > x {
                        break;
                    }
                    for (j, &q) in primes[i + 1..].iter().enumerate() {
                        if p * q * q > x {
                            break;
                        }
                        for &s in &primes[i + j + 2..] {
                            if p * q * s > x {
                                break;
                            }
                            c += u64::from(small(p) + small(q) + small(s) == k);
                        }
                    }
                }
                c
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn pi_table_matches_brute_force() {
        let x = 100_000;
        for excluded in [vec![], vec![2]] {
            let t = PiTable::new(x, 100, &excluded).unwrap();
            for r in 1..=3 {
                for k in 0..r {
                    assert_eq!(t.count(r, k), brute_pi(x, 100, r, k, &excluded), "r={r} k={k}");
                }
            }
            assert_eq!(t.count(2, 2), 0);
        }
        let pi_x = primes_up_to(x).len() as u64;
        let t = PiTable::new(x, 2, &[]).unwrap();
        // 2 ≤ y so π_{1,0}(x, 2) counts the odd primes
        assert_eq!(t.count(1, 0), pi_x - 1);
    }

    #[test]
    fn pi_bound_fits() {
        let t = PiTable::new(100_000, 10, &[2]).unwrap();
        let data: Vec<_> = (1..=4).flat_map(|r| (0..r).map(move |k| (r, k))).map(|(r, k)| (r, k, t.count(r, k))).collect();
        let c = fit_pi_constant(1e5, 10.0, &data);
        for &(r, k, n) in &data {
            assert!(n as f64 <= pi_rk_bound(1e5, 10.0, r, k, c) * (1.0 + 1e-9));
        }
        let tight = data.iter().any(|&(r, k, n)| n as f64 > pi_rk_bound(1e5, 10.0, r, k, c * 0.999));
        assert!(tight);
        assert!(count_pi_rk(100, 10, 2, 1, 1.0, &[]).unwrap().count > 0);
        assert!(count_pi_rk(100, 10, 3, 2, 1.0, &[]).is_err());
    }

    #[test]
    fn admissible_counts() {
        assert_eq!(count_admissible_twists_q(10).unwrap().count, 7);
        assert_eq!(kappa_q(2), 1);
        assert_eq!(kappa_q(5), 1);
        let a = count_admissible_twists_q(1_000_000).unwrap();
        assert!(a.relative_error < 0.01);
    }

    #[test]
    fn loosening_never_adds_bad_ideals() {
        let params = GridParameters::with_overrides(20f64.ln() * 5.0, 3.0, 20.0, 3).unwrap();
        let s = ProfileStream::new(30_000, ClassFn::Kronecker(-4), vec![2]).unwrap();
        let base = Thresholds::literal(params.ln_h);
        let mut prev_good = 0;
        for factor in [1.0, 1.5, 3.0, 10.0] {
            let config = GridConfig::new(s.class_fn().universe(), base.loosened(factor));
            let h = verdict_histogram(&s, &params, &config).unwrap();
            assert!(h[0] >= prev_good);
            prev_good = h[0];
        }
    }

    proptest! {
        #[test]
        fn verdict_order(n in 1u64..200_000, seed in 0u64..1000) {
            let (params, config) = good_setup();
            let s = ProfileStream::new(200_000, ClassFn::Kronecker(-4), vec![2]).unwrap();
            for (_, p) in s.sample(4, seed ^ n) {
                let c = classify_ideal(&p, &params, &config).unwrap();
                if let Verdict::Bad(j) = c.verdict {
                    for i in 1..j as usize {
                        prop_assert!(criterion_holds(i, &p, &params, &config).unwrap());
                    }
                    prop_assert!(!criterion_holds(j as usize, &p, &params, &config).unwrap());
                }
            }
        }
    }
}
