//! From moments to coranks: interpolation at the geometric nodes ℓ^k,
//! explicit tail-coefficient bounds for a function small at those nodes,
//! and exact recovery of a finitely supported law from its moments.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{int, mat_mul, mat_vec, pow_int, solve_square, to_f64, transpose};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InversionError {
    #[error("invalid input: {0}")]
    Input(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeMode {
    /// Nodes ℓ^k for k < m.
    Unsigned,
    /// Nodes ±ℓ^k for k < m.
    Signed,
}

/// Values of f at the nodes ℓ^k (and −ℓ^k in signed mode), k = 0..m−1.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentVector {
    pub ell: u32,
    pub values: Vec<BigRational>,
    pub negative_values: Option<Vec<BigRational>>,
}

impl MomentVector {
    pub fn unsigned(ell: u32, values: Vec<BigRational>) -> Self {
        MomentVector { ell, values, negative_values: None }
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    fn nodes_and_values(&self) -> Vec<(BigRational, BigRational)> {
        let mut out: Vec<(BigRational, BigRational)> =
            self.values.iter().enumerate().map(|(k, v)| (pow_int(self.ell, k as i64), v.clone())).collect();
        if let Some(neg) = &self.negative_values {
            out.extend(neg.iter().enumerate().map(|(k, v)| (-pow_int(self.ell, k as i64), v.clone())));
        }
        out
    }
}

/// Dense polynomial with exact coefficients, constant term first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    pub coeffs: Vec<BigRational>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Polynomial { coeffs: vec![c] }.trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        self
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, z: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * z + c)
    }

    /// Multiply by (1 − z/node).
    fn times_linear(&self, node: &BigRational) -> Polynomial {
        let inv = node.recip();
        let mut out = vec![BigRational::zero(); self.coeffs.len() + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
            out[i + 1] -= c * &inv;
        }
        Polynomial { coeffs: out }.trimmed()
    }

    fn add_scaled(&mut self, other: &Polynomial, s: &BigRational) {
        if self.coeffs.len() < other.coeffs.len() {
            self.coeffs.resize(other.coeffs.len(), BigRational::zero());
        }
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * s;
        }
    }
}

/// p(z) = ∏ (1 − z/z_i) over the given nodes.
pub fn node_polynomial(nodes: &[BigRational]) -> Polynomial {
    nodes.iter().fold(Polynomial::constant(int(1)), |p, z| p.times_linear(z))
}

/// Unique g of degree < #nodes agreeing with f at the nodes, assembled as
/// Σ_j f(z_j)/p_j(z_j) · p_j(z) with p_j(z) = p(z)/(1 − z/z_j).
pub fn interpolate_geometric(values: &MomentVector) -> Polynomial {
    let pairs = values.nodes_and_values();
    let nodes: Vec<BigRational> = pairs.iter().map(|(z, _)| z.clone()).collect();
    let mut g = Polynomial::zero();
    for (j, (zj, fj)) in pairs.iter().enumerate() {
        if fj.is_zero() {
            continue;
        }
        let others: Vec<BigRational> =
            nodes.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, z)| z.clone()).collect();
        let pj = node_polynomial(&others);
        let scale = fj / pj.eval(zj);
        g.add_scaled(&pj, &scale);
    }
    g.trimmed()
}

/// Explicit constants of the bound |a_i| ≤ ℓ^{(−i+C)m}(B ℓ^{−κ} + ε) for the
/// coefficients of f = Σ a_i z^i with Σ|a_i|ℓ^{mi} ≤ B and |f| ≤ ε at the nodes.
///
/// Proof chain on the circle |z| = ℓ^m (unsigned / signed nodes):
/// - |p_j(z_j)| > 1/4 at every node;
/// - |p_j(z)| ≤ ℓ^{(m+1)(m+2)/2} / ℓ^{m²+2m};
/// - |g(z)| ≤ 4mε ℓ^{(m+1)(m+2)/2} / 8mε ℓ^{m²+2m};
/// - |p(z)| ≥ ℓ^{m(m−1)/2} / ℓ^{m²};
/// - f − g = q·p, so the coefficients of q satisfy
///   b_i ≤ ℓ^{−im}(4mε ℓ^{2m+1} + B ℓ^{−m(m−1)/2}) / ℓ^{−im}(8mε ℓ^{2m} + B ℓ^{−m²});
/// - a_i = g_i + Σ_t p_t b_{i−t}, giving |a_i| ≤ ℓ^{−im}(sup|g| + W·Q) with
///   W = Σ_t |p_t| ℓ^{tm} and Q the bracket above.
///
/// C is the least value making ℓ^{Cm}(Bℓ^{−κ}+ε) dominate that chain in both
/// modes simultaneously (κ = m²/2 unsigned, m² signed), so the signed bound
/// never exceeds the unsigned one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientBound {
    pub ell: u32,
    pub m: u32,
    pub eps: f64,
    pub b: f64,
    pub mode: NodeMode,
    pub node_lower: f64,
    pub pj_sup: f64,
    pub g_sup: f64,
    pub p_inf: f64,
    pub q_const: f64,
    pub p_weight: f64,
    /// ℓ^{Cm}, shared by both modes.
    pub ell_pow_cm: f64,
    pub c: f64,
    pub kappa: f64,
}

struct Chain {
    pj_sup: f64,
    g_sup_per_eps: f64,
    p_inf: f64,
    q_eps: f64,
    q_b: f64,
    p_weight: f64,
}

fn chain(ell: u32, m: u32, mode: NodeMode) -> Chain {
    let l = ell as f64;
    let mf = m as f64;
    let mut nodes: Vec<BigRational> = (0..m).map(|i| pow_int(ell, i as i64)).collect();
    if mode == NodeMode::Signed {
        nodes.extend((0..m).map(|i| -pow_int(ell, i as i64)));
    }
    let p = node_polynomial(&nodes);
    let p_weight = p
        .coeffs
        .iter()
        .enumerate()
        .fold(BigRational::zero(), |acc, (t, c)| acc + c.abs() * pow_int(ell, (t as u32 * m) as i64));
    let p_weight = to_f64(&p_weight);
    match mode {
        NodeMode::Unsigned => {
            let pj_sup = l.powf((mf + 1.0) * (mf + 2.0) / 2.0);
            Chain {
                pj_sup,
                g_sup_per_eps: 4.0 * mf * pj_sup,
                p_inf: l.powf(mf * (mf - 1.0) / 2.0),
                q_eps: 4.0 * mf * l.powf(2.0 * mf + 1.0),
                q_b: l.powf(-mf * (mf - 1.0) / 2.0),
                p_weight,
            }
        }
        NodeMode::Signed => {
            let pj_sup = l.powf(mf * mf + 2.0 * mf);
            Chain {
                pj_sup,
                g_sup_per_eps: 8.0 * mf * pj_sup,
                p_inf: l.powf(mf * mf),
                q_eps: 8.0 * mf * l.powf(2.0 * mf),
                q_b: l.powf(-mf * mf),
                p_weight,
            }
        }
    }
}

fn kappa(m: u32, mode: NodeMode) -> f64 {
    let mf = m as f64;
    match mode {
        NodeMode::Unsigned => mf * mf / 2.0,
        NodeMode::Signed => mf * mf,
    }
}

/// ℓ^{Cm} = max over both modes of the ε- and B-coefficients of the chain,
/// the latter rescaled by ℓ^κ.
pub fn ell_pow_cm(ell: u32, m: u32) -> f64 {
    let l = ell as f64;
    [NodeMode::Unsigned, NodeMode::Signed]
        .iter()
        .flat_map(|&mode| {
            let ch = chain(ell, m, mode);
            let eps_coeff = ch.g_sup_per_eps + ch.p_weight * ch.q_eps;
            let b_coeff = ch.p_weight * ch.q_b * l.powf(kappa(m, mode));
            [eps_coeff, b_coeff]
        })
        .fold(0.0, f64::max)
}

fn check_ell(ell: u32) -> Result<(), InversionError> {
    if crate::ff_linalg::is_prime(u64::from(ell)) {
        Ok(())
    } else {
        Err(InversionError::Input(format!("ℓ = {ell} is not prime")))
    }
}

pub fn tail_coefficient_bounds(b: f64, m: u32, eps: f64, ell: u32, mode: NodeMode) -> Result<CoefficientBound, InversionError> {
    check_ell(ell)?;
    if m == 0 || !(b >= 0.0) || !(eps >= 0.0) {
        return Err(InversionError::Input(format!("need m >= 1, B >= 0, eps >= 0 (got m={m}, B={b}, eps={eps})")));
    }
    let ch = chain(ell, m, mode);
    let lcm = ell_pow_cm(ell, m);
    Ok(CoefficientBound {
        ell,
        m,
        eps,
        b,
        mode,
        node_lower: 0.25,
        pj_sup: ch.pj_sup,
        g_sup: ch.g_sup_per_eps * eps,
        p_inf: ch.p_inf,
        q_const: ch.q_eps * eps + ch.q_b * b,
        p_weight: ch.p_weight,
        ell_pow_cm: lcm,
        c: lcm.ln() / (m as f64 * (ell as f64).ln()),
        kappa: kappa(m, mode),
    })
}

impl CoefficientBound {
    /// ℓ^{(−i+C)m}(B ℓ^{−κ} + ε).
    pub fn bound(&self, i: u32) -> f64 {
        let l = self.ell as f64;
        l.powf(-(i as f64) * self.m as f64) * self.ell_pow_cm * (self.b * l.powf(-self.kappa) + self.eps)
    }

    /// The un-normalized chain value ℓ^{−im}(sup|g| + W·Q), always ≤ `bound(i)`.
    pub fn chain_bound(&self, i: u32) -> f64 {
        (self.ell as f64).powf(-(i as f64) * self.m as f64) * (self.g_sup + self.p_weight * self.q_const)
    }

    pub fn bounds(&self, count: u32) -> Vec<f64> {
        (0..count).map(|i| self.bound(i)).collect()
    }
}

/// Outcome of inverting Σ_j ℓ^{mj} P(j) = M_m.
#[derive(Clone, Debug, PartialEq)]
pub struct Recovery {
    pub ell: u32,
    pub probabilities: Vec<BigRational>,
    /// max_m |Σ_j ℓ^{mj}P(j) − M_m|.
    pub residual: BigRational,
    /// More unknowns than moments: the minimum-norm solution was returned.
    pub underdetermined: bool,
    /// Some P(j) < −10⁻⁹.
    pub negative_mass: bool,
}

pub const MAX_J: usize = 12;

/// Moments M_0..M_K of a law on j = 0..len−1.
pub fn forward_moments(probs: &[BigRational], ell: u32, k: usize) -> Vec<BigRational> {
    (0..=k)
        .map(|m| {
            probs
                .iter()
                .enumerate()
                .fold(BigRational::zero(), |acc, (j, p)| acc + p * pow_int(ell, (m * j) as i64))
        })
        .collect()
}

/// Exact least-squares (K ≥ j_max) or least-norm (K < j_max) solution of the
/// Vandermonde system at nodes ℓ^j.
pub fn recover_distribution(moments: &[BigRational], ell: u32, j_max: usize) -> Result<Recovery, InversionError> {
    check_ell(ell)?;
    if moments.is_empty() {
        return Err(InversionError::Input("no moments supplied".into()));
    }
    if j_max > MAX_J {
        return Err(InversionError::Input(format!("j_max {j_max} exceeds the cap {MAX_J}")));
    }
    let a: Vec<Vec<BigRational>> = (0..moments.len())
        .map(|m| (0..=j_max).map(|j| pow_int(ell, (m * j) as i64)).collect())
        .collect();
    let at = transpose(&a);
    let underdetermined = moments.len() < j_max + 1;
    let probabilities = if moments.len() == j_max + 1 {
        solve_square(a.clone(), moments.to_vec())
    } else if underdetermined {
        let aat = mat_mul(&a, &at);
        solve_square(aat, moments.to_vec()).map(|y| mat_vec(&at, &y))
    } else {
        let ata = mat_mul(&at, &a);
        solve_square(ata, mat_vec(&at, moments))
    }
    .expect("Vandermonde systems at distinct nodes are nonsingular");
    let fitted = mat_vec(&a, &probabilities);
    let residual = fitted.iter().zip(moments).map(|(x, y)| (x - y).abs()).fold(BigRational::zero(), |acc, d| if d > acc { d } else { acc });
    let tol = BigRational::new(BigInt::from(-1), BigInt::from(1_000_000_000));
    let negative_mass = probabilities.iter().any(|p| *p < tol);
    Ok(Recovery { ell, probabilities, residual, underdetermined, negative_mass })
}

/// Floating-point moments are converted to their exact binary values first.
pub fn recover_from_f64(moments: &[f64], ell: u32, j_max: usize) -> Result<Recovery, InversionError> {
    let exact = moments
        .iter()
        .map(|&x| BigRational::from_f64(x).ok_or_else(|| InversionError::Input(format!("non-finite moment {x}"))))
        .collect::<Result<Vec<_>, _>>()?;
    recover_distribution(&exact, ell, j_max)
}

impl Recovery {
    pub fn total_mass(&self) -> BigRational {
        self.probabilities.iter().fold(BigRational::zero(), |a, p| a + p)
    }

    pub fn is_point_mass_at_zero(&self) -> bool {
        self.probabilities.first().is_some_and(|p| p.is_one()) && self.probabilities.iter().skip(1).all(|p| p.is_zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    fn mv(values: &[i64]) -> MomentVector {
        MomentVector::unsigned(2, values.iter().map(|&v| int(v)).collect())
    }

    #[test]
    fn interpolation_examples() {
        assert_eq!(interpolate_geometric(&mv(&[0, 0, 0])), Polynomial::zero());
        assert_eq!(interpolate_geometric(&mv(&[1, 2])).coeffs, vec![int(0), int(1)]);
        assert_eq!(interpolate_geometric(&mv(&[1, 4])).coeffs, vec![int(-2), int(3)]);
    }

    #[test]
    fn signed_interpolation_hits_all_nodes() {
        let f = |z: &BigRational| z * z * z - z + int(2);
        let ell = 3;
        let pos = (0..3).map(|k| f(&pow_int(ell, k))).collect();
        let neg = (0..3).map(|k| f(&-pow_int(ell, k))).collect();
        let g = interpolate_geometric(&MomentVector { ell, values: pos, negative_values: Some(neg) });
        assert_eq!(g.coeffs, vec![int(2), int(-1), int(0), int(1)]);
    }

    #[test]
    fn bounds_are_zero_without_data() {
        let cb = tail_coefficient_bounds(0.0, 3, 0.0, 2, NodeMode::Unsigned).unwrap();
        assert!(cb.bounds(5).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn bounds_decay_by_ell_to_the_m() {
        let cb = tail_coefficient_bounds(1.0, 3, 0.01, 2, NodeMode::Unsigned).unwrap();
        for i in 0..6 {
            let r = cb.bound(i) / cb.bound(i + 1);
            assert!((r - 8.0).abs() < 1e-9);
        }
    }

    #[test]
    fn chain_is_dominated() {
        for ell in [2u32, 3] {
            for m in 1..=5 {
                for mode in [NodeMode::Unsigned, NodeMode::Signed] {
                    let cb = tail_coefficient_bounds(2.5, m, 0.125, ell, mode).unwrap();
                    assert!(cb.chain_bound(0) <= cb.bound(0) * (1.0 + 1e-12));
                }
            }
        }
    }

    /// Regression value: ℓ=2, m=3, ε=0, B=1, unsigned.
    #[test]
    fn pinned_bound_value() {
        let cb = tail_coefficient_bounds(1.0, 3, 0.0, 2, NodeMode::Unsigned).unwrap();
        let expected = cb.ell_pow_cm * 2f64.powf(-4.5);
        assert_eq!(cb.bound(0), expected);
        assert!((cb.bound(0) - PINNED_L2_M3).abs() < 1e-9 * PINNED_L2_M3, "{}", cb.bound(0));
    }

    // ℓ^{Cm} = 9_272_832 (signed ε-coefficient 24·2^15 + 5525·24·2^6), times 2^{-4.5}.
    const PINNED_L2_M3: f64 = 409_805.149_250_226;

    #[test]
    fn recovery_examples() {
        let r = recover_distribution(&[int(1), int(1), int(1)], 2, 2).unwrap();
        assert!(r.is_point_mass_at_zero());
        let probs = vec![int(0), ratio(7, 10), int(0), ratio(3, 10)];
        let m = forward_moments(&probs, 2, 3);
        let r = recover_distribution(&m, 2, 3).unwrap();
        assert_eq!(r.probabilities, probs);
        assert!(r.residual.is_zero());
    }

    #[test]
    fn overdetermined_consistent_system_is_exact() {
        let probs = vec![ratio(1, 2), ratio(1, 4), ratio(1, 4)];
        let m = forward_moments(&probs, 3, 5);
        let r = recover_distribution(&m, 3, 2).unwrap();
        assert_eq!(r.probabilities, probs);
        assert!(!r.underdetermined);
    }

    #[test]
    fn too_few_moments_are_flagged() {
        let r = recover_distribution(&[int(1), int(3), int(15), int(135)], 2, 6).unwrap();
        assert!(r.underdetermined);
        assert!(r.residual.is_zero());
    }
}
