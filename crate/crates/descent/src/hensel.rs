//! Independent Sel₂ oracle: every (b₁, b₂) ∈ Q(S,2)² is tested for local
//! solvability of the torsor
//!   b₁z₁² − b₂z₂² = A t²,  b₁z₁² − b₁b₂z₃² = B t²
//! in P³, at ∞ by sign analysis and at p ∈ S by a lifting search with the
//! multivariate Hensel criterion: a point with F ≡ 0 mod p^{2e+1}, where e is
//! the least valuation of a 2×2 Jacobian minor, lifts to a Z_p-point.

use serde::Serialize;

use crate::curve::bad_primes_of;
use crate::local::valuation;
use crate::selmer::SquareClassBasis;
use crate::DescentError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Solvability {
    Solvable,
    Insoluble,
    /// Lifting reached the depth cap without a decision.
    Undecided,
}

struct Torsor {
    b1: i128,
    b2: i128,
    a: i128,
    b: i128,
}

impl Torsor {
    fn eval(&self, v: &[i128; 4]) -> (i128, i128) {
        let [z1, z2, z3, t] = *v;
        let s1 = self.b1 * z1 * z1;
        (s1 - self.b2 * z2 * z2 - self.a * t * t, s1 - self.b1 * self.b2 * z3 * z3 - self.b * t * t)
    }

    fn minors(&self, v: &[i128; 4]) -> [i128; 6] {
        let [z1, z2, z3, t] = *v;
        let g1 = [2 * self.b1 * z1, -2 * self.b2 * z2, 0, -2 * self.a * t];
        let g2 = [2 * self.b1 * z1, 0, -2 * self.b1 * self.b2 * z3, -2 * self.b * t];
        let mut out = [0; 6];
        let mut k = 0;
        for i in 0..4 {
            for j in i + 1..4 {
                out[k] = g1[i] * g2[j] - g1[j] * g2[i];
                k += 1;
            }
        }
        out
    }

    fn hensel_lifts(&self, v: &[i128; 4], p: u64) -> bool {
        let (f1, f2) = self.eval(v);
        let Some(e) = self.minors(v).iter().filter_map(|&m| valuation(m, p)).min() else { return false };
        let need = 2 * e + 1;
        [f1, f2].iter().all(|&f| valuation(f, p).is_none_or(|vf| vf >= need))
    }
}

/// Real points exist iff some interval with x(x−A)(x−B) > 0 has
/// (sign x, sign(x − A)) = (sign b₁, sign b₂).
pub fn solvable_at_infinity(b1: i128, b2: i128, a: i128, b: i128) -> bool {
    let mut r = [0i128, a, b];
    r.sort_unstable();
    // doubled sample points in (r₁, r₂) and (r₃, ∞)
    [r[0] + r[1], 2 * r[2] + 2].iter().any(|&x2| (x2 > 0) == (b1 > 0) && (x2 - 2 * a > 0) == (b2 > 0))
}

pub fn solvable_at_prime(b1: i128, b2: i128, a: i128, b: i128, p: u64, max_depth: u32) -> Solvability {
    let torsor = Torsor { b1, b2, a, b };
    let pi = p as i128;
    let modulus = |k: u32| pi.pow(k);
    let mut stack: Vec<([i128; 4], u32, usize)> = Vec::new();
    // primitive points mod p normalized so the first unit coordinate is 1
    for i0 in 0..4 {
        let free = 3 - i0;
        for code in 0..pi.pow(free as u32) {
            let mut v = [0i128; 4];
            v[i0] = 1;
            let mut c = code;
            for slot in v.iter_mut().skip(i0 + 1) {
                *slot = c % pi;
                c /= pi;
            }
            let (f1, f2) = torsor.eval(&v);
            if f1 % pi == 0 && f2 % pi == 0 {
                stack.push((v, 1, i0));
            }
        }
    }
    let mut capped = false;
    while let Some((v, k, i0)) = stack.pop() {
        if torsor.hensel_lifts(&v, p) {
            return Solvability::Solvable;
        }
        if k >= max_depth {
            capped = true;
            continue;
        }
        let step = modulus(k);
        let next = modulus(k + 1);
        let others: Vec<usize> = (0..4).filter(|&j| j != i0).collect();
        for code in 0..pi.pow(3) {
            let mut w = v;
            let mut c = code;
            for &j in &others {
                w[j] += (c % pi) * step;
                c /= pi;
            }
            let (f1, f2) = torsor.eval(&w);
            if f1 % next == 0 && f2 % next == 0 {
                stack.push((w, k + 1, i0));
            }
        }
    }
    if capped {
        Solvability::Undecided
    } else {
        Solvability::Insoluble
    }
}

/// Initial lifting depth: 2·v_p(2AB(A−B)b₁b₂) + 6.
pub fn default_depth(b1: i128, b2: i128, a: i128, b: i128, p: u64) -> u32 {
    let v = [2, a, b, a - b, b1, b2].iter().map(|&x| valuation(x, p).unwrap_or(0)).sum::<u32>();
    2 * v + 6
}

/// Decision with one doubling of the depth cap; a second Undecided is an error.
pub fn solvable_at_prime_escalating(b1: i128, b2: i128, a: i128, b: i128, p: u64) -> Result<bool, DescentError> {
    let depth = default_depth(b1, b2, a, b, p);
    for cap in [depth, 2 * depth] {
        match solvable_at_prime(b1, b2, a, b, p, cap) {
            Solvability::Solvable => return Ok(true),
            Solvability::Insoluble => return Ok(false),
            Solvability::Undecided => {}
        }
    }
    Err(DescentError::Precision { p, depth: 2 * depth })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleResult {
    pub dim: u32,
    pub elements: Vec<(i128, i128)>,
}

/// Largest prime the oracle accepts in S (the search is p³ per lifting step).
pub const ORACLE_MAX_PRIME: u64 = 31;

/// Sel₂ by testing every pair in Q(S,2)².
pub fn selmer2_oracle(a: i128, b: i128) -> Result<OracleResult, DescentError> {
    let basis = SquareClassBasis { primes: bad_primes_of(a, b) };
    if let Some(&p) = basis.primes.iter().find(|&&p| p > ORACLE_MAX_PRIME) {
        return Err(DescentError::Input(format!("oracle limited to primes ≤ {ORACLE_MAX_PRIME}, got {p}")));
    }
    let n = basis.len();
    let mut elements = Vec::new();
    for m1 in 0u128..1 << n {
        for m2 in 0u128..1 << n {
            let (b1, b2) = (basis.value(m1), basis.value(m2));
            if !solvable_at_infinity(b1, b2, a, b) {
                continue;
            }
            let mut ok = true;
            for &p in &basis.primes {
                if !solvable_at_prime_escalating(b1, b2, a, b, p)? {
                    ok = false;
                    break;
                }
            }
            if ok {
                elements.push((b1, b2));
            }
        }
    }
    let count = elements.len();
    if !count.is_power_of_two() {
        return Err(DescentError::Internal(format!("{count} locally solvable pairs is not a power of two")));
    }
    Ok(OracleResult { dim: count.trailing_zeros(), elements })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_torsor_is_everywhere_solvable() {
        for p in [2u64, 3, 5, 7] {
            assert_eq!(solvable_at_prime(1, 1, 1, -1, p, 12), Solvability::Solvable);
        }
        assert!(solvable_at_infinity(1, 1, 1, -1));
    }

    #[test]
    fn congruent_number_oracle() {
        assert_eq!(selmer2_oracle(1, -1).unwrap().dim, 2);
        assert_eq!(selmer2_oracle(5, -5).unwrap().dim, 3);
    }
}
