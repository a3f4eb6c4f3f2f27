//! Places of Q and square classes Q_v^×/Q_v^{×2} as F_2-vectors.
//!
//! Encoding: at ∞ one bit (sign). At odd p two bits (v_p mod 2, unit is a
//! non-residue). At 2 three bits (v_2 mod 2, u ≡ 3 mod 4, u ≡ ±3 mod 8), i.e.
//! u = (−1)^{b1}·5^{b2} modulo squares.

use selmer_core::arith::kronecker;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Place {
    Real,
    Prime(u64),
}

impl Place {
    pub fn width(&self) -> u32 {
        match *self {
            Place::Real => 1,
            Place::Prime(2) => 3,
            Place::Prime(_) => 2,
        }
    }
}

impl std::fmt::Display for Place {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Place::Real => write!(f, "inf"),
            Place::Prime(p) => write!(f, "{p}"),
        }
    }
}

/// (v_p(n), n / p^{v_p(n)}) for n ≠ 0.
pub fn split_valuation(mut n: i128, p: u64) -> (u32, i128) {
    debug_assert!(n != 0);
    let p = p as i128;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    (v, n)
}

/// v_p(n), with None for n = 0.
pub fn valuation(n: i128, p: u64) -> Option<u32> {
    (n != 0).then(|| split_valuation(n, p).0)
}

/// Square class of a nonzero integer at `place`.
pub fn class_at(n: i128, place: Place) -> u8 {
    assert!(n != 0, "zero has no square class");
    match place {
        Place::Real => u8::from(n < 0),
        Place::Prime(2) => {
            let (v, u) = split_valuation(n, 2);
            let u8_ = u.rem_euclid(8);
            (v % 2) as u8 | u8::from(u8_ % 4 == 3) << 1 | u8::from(u8_ == 3 || u8_ == 5) << 2
        }
        Place::Prime(p) => {
            let (v, u) = split_valuation(n, p);
            let r = u.rem_euclid(p as i128) as i64;
            (v % 2) as u8 | u8::from(kronecker(r, p as i64) == -1) << 1
        }
    }
}

/// Square class of the rational n/m (m ≠ 0).
pub fn class_of_ratio(n: i128, m: i128, place: Place) -> u8 {
    class_at(n, place) ^ class_at(m, place)
}

/// Does the nonzero integer n lie in Q_v^{×2}?
pub fn is_local_square(n: i128, place: Place) -> bool {
    class_at(n, place) == 0
}
