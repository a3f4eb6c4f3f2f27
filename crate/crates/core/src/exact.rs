//! Small helpers around big rationals shared by the exact computations.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// ℓ^e for any integer exponent.
pub fn pow_int(base: u32, e: i64) -> BigRational {
    let p = BigInt::from(base).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

/// 1 − ℓ^{−k} for k ≥ 1.
pub fn one_minus_inv_pow(base: u32, k: u32) -> BigRational {
    let p = BigInt::from(base).pow(k);
    BigRational::new(&p - 1, p)
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator or denominator too large for a direct conversion
        let n = r.numer().bits() as i64;
        let d = r.denom().bits() as i64;
        let shift = n.max(d) - 1000;
        let num = r.numer() >> shift.max(0) as usize;
        let den = r.denom() >> shift.max(0) as usize;
        num.to_f64().unwrap_or(0.0) / den.to_f64().unwrap_or(f64::INFINITY)
    })
}

/// Decimal expansion rounded half away from zero to `digits` fractional digits.
pub fn to_decimal(r: &BigRational, digits: usize) -> String {
    let scale = BigInt::from(10).pow(digits as u32);
    let scaled = r.abs() * BigRational::from_integer(scale.clone());
    let (q, rem) = scaled.numer().div_rem(scaled.denom());
    let q = if rem * 2 >= *scaled.denom() { q + 1 } else { q };
    let (int_part, frac) = q.div_rem(&scale);
    let sign = if r.is_negative() && !q_is_zero(&int_part, &frac) { "-" } else { "" };
    if digits == 0 {
        return format!("{sign}{int_part}");
    }
    format!("{sign}{int_part}.{:0>width$}", frac.to_string(), width = digits)
}

fn q_is_zero(a: &BigInt, b: &BigInt) -> bool {
    a.is_zero() && b.is_zero()
}

/// Parse a decimal or fraction literal ("0.25", "-3/8", "7") exactly.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (mantissa, exp) = match body.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i64>().ok()?),
        None => (body, 0),
    };
    let (ip, fp) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if ip.is_empty() && fp.is_empty() {
        return None;
    }
    let digits = format!("{ip}{fp}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let n = BigInt::parse_bytes(digits.as_bytes(), 10)?;
    let mut r = BigRational::from_integer(n) * pow_int(10, exp - fp.len() as i64);
    if neg {
        r = -r;
    }
    Some(r)
}

pub fn sign_of(r: &BigRational) -> Sign {
    r.numer().sign()
}

/// Total-variation distance between two finitely supported vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    0.5 * (0..n)
        .map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

pub fn total_variation_exact(p: &[BigRational], q: &[BigRational]) -> BigRational {
    let n = p.len().max(q.len());
    let zero = BigRational::zero();
    let s = (0..n).fold(BigRational::zero(), |acc, i| {
        acc + (p.get(i).unwrap_or(&zero) - q.get(i).unwrap_or(&zero)).abs()
    });
    s / int(2)
}

/// Solves a square system exactly by Gauss–Jordan elimination; `None` if singular.
pub fn solve_square(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = b.len();
    assert!(a.len() == n && a.iter().all(|r| r.len() == n), "square system");
    for col in 0..n {
        let p = (col..n).find(|&i| !a[i][col].is_zero())?;
        a.swap(col, p);
        b.swap(col, p);
        let inv = a[col][col].recip();
        for x in a[col].iter_mut() {
            *x *= &inv;
        }
        b[col] *= &inv;
        for i in 0..n {
            if i == col || a[i][col].is_zero() {
                continue;
            }
            let f = a[i][col].clone();
            for j in col..n {
                let t = &f * &a[col][j];
                a[i][j] -= t;
            }
            let t = &f * &b[col];
            b[i] -= t;
        }
    }
    Some(b)
}

pub fn mat_vec(a: &[Vec<BigRational>], x: &[BigRational]) -> Vec<BigRational> {
    a.iter().map(|row| row.iter().zip(x).fold(BigRational::zero(), |acc, (p, q)| acc + p * q)).collect()
}

pub fn transpose(a: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let cols = a.first().map_or(0, |r| r.len());
    (0..cols).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn mat_mul(a: &[Vec<BigRational>], b: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let bt = transpose(b);
    a.iter().map(|row| bt.iter().map(|col| row.iter().zip(col).fold(BigRational::zero(), |acc, (p, q)| acc + p * q)).collect()).collect()
}
