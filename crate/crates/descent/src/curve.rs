//! Curve input: full rational two-torsion y² = x(x−e₂)(x−e₃) and the
//! Klagsbrun form y² = x(x² + ax + b).

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::Zero;
use selmer_core::arith::{factorize, squarefree_decomposition};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::DescentError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveSpec {
    Full2Torsion { e2: Rational64, e3: Rational64 },
    Klagsbrun { a: Rational64, b: Rational64 },
}

/// Integral model y² = x(x − A)(x − B) of a full-two-torsion curve, with no
/// k > 1 such that k² divides both A and B.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoTorsionModel {
    pub a: i64,
    pub b: i64,
}

/// Integral Klagsbrun model y² = x(x² + ax + b).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KlagsbrunModel {
    pub a: i64,
    pub b: i64,
}

fn parse_rational(s: &str) -> Result<Rational64, DescentError> {
    let s = s.trim();
    let bad = || DescentError::Input(format!("bad rational `{s}`"));
    match s.split_once('/') {
        Some((n, d)) => {
            let (n, d): (i64, i64) = (n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?);
            if d == 0 {
                return Err(bad());
            }
            Ok(Rational64::new(n, d))
        }
        None => Ok(Rational64::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

fn is_rational_square(n: i128) -> bool {
    n >= 0 && {
        let r = (n as f64).sqrt().round() as i128;
        (r - 2..=r + 2).any(|s| s >= 0 && s * s == n)
    }
}

impl CurveSpec {
    /// `form` is `full2torsion` (coefficients "e2,e3") or `klagsbrun` ("a,b").
    pub fn parse(form: &str, coefficients: &str) -> Result<Self, DescentError> {
        let parts: Vec<&str> = coefficients.split(',').collect();
        if parts.len() != 2 {
            return Err(DescentError::Input(format!("expected two coefficients, got `{coefficients}`")));
        }
        let (x, y) = (parse_rational(parts[0])?, parse_rational(parts[1])?);
        let spec = match form {
            "full2torsion" | "f2" => CurveSpec::Full2Torsion { e2: x, e3: y },
            "klagsbrun" | "k" => CurveSpec::Klagsbrun { a: x, b: y },
            other => return Err(DescentError::Input(format!("unknown curve form `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), DescentError> {
        match self {
            CurveSpec::Full2Torsion { e2, e3 } => {
                if e2.is_zero() || e3.is_zero() || e2 == e3 {
                    return Err(DescentError::Singular("e₂, e₃ must be distinct and nonzero".into()));
                }
            }
            CurveSpec::Klagsbrun { .. } => {
                let m = self.klagsbrun_model()?;
                if m.b == 0 {
                    return Err(DescentError::Singular("b = 0".into()));
                }
                let disc = i128::from(m.a) * i128::from(m.a) - 4 * i128::from(m.b);
                if disc == 0 {
                    return Err(DescentError::Singular("a² − 4b = 0".into()));
                }
                if is_rational_square(disc) {
                    return Err(DescentError::Input("a² − 4b is a square: two-torsion is rational".into()));
                }
            }
        }
        Ok(())
    }

    pub fn two_torsion_model(&self) -> Result<TwoTorsionModel, DescentError> {
        let CurveSpec::Full2Torsion { e2, e3 } = *self else {
            return Err(DescentError::Input("not a full-two-torsion curve".into()));
        };
        // x ↦ x/m² clears denominators
        let m = e2.denom().lcm(e3.denom());
        let scale = |e: Rational64| e.numer().checked_mul(m / e.denom()).and_then(|v| v.checked_mul(m));
        let (mut a, mut b) = match (scale(e2), scale(e3)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(DescentError::Input("coefficients overflow".into())),
        };
        let g = a.gcd(&b) as u64;
        for (p, e) in factorize(g) {
            let k = (p as i64).pow(e / 2);
            a /= k * k;
            b /= k * k;
        }
        Ok(TwoTorsionModel { a, b })
    }

    pub fn klagsbrun_model(&self) -> Result<KlagsbrunModel, DescentError> {
        let CurveSpec::Klagsbrun { a, b } = *self else {
            return Err(DescentError::Input("not a Klagsbrun-form curve".into()));
        };
        // x ↦ x/m²: a ↦ a·m², b ↦ b·m⁴
        let m = a.denom().lcm(b.denom());
        let a2 = a * Rational64::from_integer(m * m);
        let b2 = b * Rational64::from_integer(m * m * m * m);
        Ok(KlagsbrunModel { a: a2.to_integer(), b: b2.to_integer() })
    }
}

impl FromStr for CurveSpec {
    type Err = DescentError;

    /// "form:c1,c2", e.g. "full2torsion:1,-1".
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (form, coeffs) =
            s.split_once(':').ok_or_else(|| DescentError::Input(format!("expected form:c1,c2, got `{s}`")))?;
        CurveSpec::parse(form.trim(), coeffs)
    }
}

impl TwoTorsionModel {
    /// Model of the twist by d: y² = x(x − dA)(x − dB).
    pub fn twist(&self, d: i64) -> (i128, i128) {
        (i128::from(d) * i128::from(self.a), i128::from(d) * i128::from(self.b))
    }

    /// 2 and the primes dividing A·B·(A − B), ascending.
    pub fn bad_primes(&self) -> Vec<u64> {
        bad_primes_of(i128::from(self.a), i128::from(self.b))
    }

    /// Rejects curves with a rational cyclic 4-isogeny: none of AB, A(A − B),
    /// B(B − A) may be a rational square.
    pub fn check_technical_conditions(&self) -> Result<(), DescentError> {
        let (a, b) = (i128::from(self.a), i128::from(self.b));
        for (name, v) in [("A·B", a * b), ("A·(A−B)", a * (a - b)), ("B·(B−A)", b * (b - a))] {
            if is_rational_square(v) {
                return Err(DescentError::TechnicalCondition(format!(
                    "{name} = {v} is a rational square, so the curve has a rational cyclic 4-isogeny"
                )));
            }
        }
        Ok(())
    }
}

/// 2 and the primes dividing a·b·(a − b).
pub fn bad_primes_of(a: i128, b: i128) -> Vec<u64> {
    let mut ps = vec![2u64];
    for n in [a, b, a - b] {
        for (p, _) in factorize(n.unsigned_abs() as u64) {
            ps.push(p);
        }
    }
    ps.sort_unstable();
    ps.dedup();
    ps
}

impl KlagsbrunModel {
    pub fn discriminant(&self) -> i128 {
        i128::from(self.a) * i128::from(self.a) - 4 * i128::from(self.b)
    }

    pub fn bad_primes(&self) -> Vec<u64> {
        let mut ps = vec![2u64];
        for n in [i128::from(self.b), self.discriminant()] {
            for (p, _) in factorize(n.unsigned_abs() as u64) {
                ps.push(p);
            }
        }
        ps.sort_unstable();
        ps.dedup();
        ps
    }
}

/// Squarefree representative of d (sign kept).
pub fn squarefree_twist(d: i64) -> Result<i64, DescentError> {
    if d == 0 {
        return Err(DescentError::Input("d = 0".into()));
    }
    Ok(squarefree_decomposition(d).0)
}

pub fn require_squarefree(d: i64) -> Result<(), DescentError> {
    if d == 0 || squarefree_decomposition(d).1 != 1 {
        return Err(DescentError::NotSquarefree(d));
    }
    Ok(())
}

pub(crate) fn abs_u64(n: i128) -> u64 {
    n.unsigned_abs() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_models() {
        let c: CurveSpec = "full2torsion:1,-1".parse().unwrap();
        assert_eq!(c.two_torsion_model().unwrap(), TwoTorsionModel { a: 1, b: -1 });
        let c = CurveSpec::parse("f2", "1/2, 3").unwrap();
        // x(x − 1/2)(x − 3) ≅ x(x − 2)(x − 12)
        assert_eq!(c.two_torsion_model().unwrap(), TwoTorsionModel { a: 2, b: 12 });
        let c = CurveSpec::parse("f2", "4,8").unwrap();
        assert_eq!(c.two_torsion_model().unwrap(), TwoTorsionModel { a: 1, b: 2 });
        assert!(CurveSpec::parse("f2", "1,1").is_err());
        assert!(CurveSpec::parse("k", "2,1").is_err());
        assert!(CurveSpec::parse("k", "1,1").is_ok());
        assert_eq!(CurveSpec::parse("k", "1/2,1").unwrap().klagsbrun_model().unwrap(), KlagsbrunModel { a: 2, b: 16 });
    }

    #[test]
    fn technical_conditions() {
        let m = TwoTorsionModel { a: 1, b: -1 };
        assert!(m.check_technical_conditions().is_ok());
        assert_eq!(m.bad_primes(), vec![2]);
        // A·B = 4 is a square
        let m = TwoTorsionModel { a: 1, b: 4 };
        assert!(matches!(m.check_technical_conditions(), Err(DescentError::TechnicalCondition(_))));
    }
}
