pub mod descend;
pub mod dist;
pub mod frobenius;
pub mod grid;
pub mod invert;
pub mod module;
pub mod verify;

use num_bigint::BigInt;
use num_rational::BigRational;
use selmer_core::exact::to_decimal;

pub struct Context {
    pub seed: u64,
    pub digits: usize,
}

/// "num/den" for non-integers, "num" otherwise.
pub fn rational_cell(r: &BigRational) -> String {
    if r.denom() == &BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn decimal_cell(r: &BigRational, digits: usize) -> String {
    to_decimal(r, digits)
}
