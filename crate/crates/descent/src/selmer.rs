//! Sel₂ of y² = x(x − A)(x − B) as the kernel of the restriction map from
//! Q(S,2)² to ⊕_v (Q_v^×/Q_v^{×2})² / im(E(Q_v)/2E(Q_v)).
//!
//! Local images are spanned by Kummer images (x, x − A) of exact rational
//! points; the search stops once the span reaches |E(Q_v)/2E(Q_v)|, which is
//! 2 at ∞, 4 at odd p and 8 at 2 for full two-torsion. Every spanning vector
//! comes from a genuine point, so reaching that size certifies the image.

use serde::Serialize;

use crate::curve::{abs_u64, bad_primes_of};
use crate::f2;
use crate::local::{class_at, valuation, Place};
use crate::DescentError;

/// Search effort for local points; doubled on escalation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget(pub u32);

impl Default for Budget {
    fn default() -> Self {
        Budget(2)
    }
}

/// Image of E(Q_v)/2E(Q_v) as a set of packed pairs c₁ | c₂ << width.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocalImage {
    pub place: Place,
    pub elements: Vec<u16>,
}

impl LocalImage {
    pub fn dim(&self) -> u32 {
        self.elements.len().trailing_zeros()
    }
}

pub fn expected_local_dim(place: Place) -> u32 {
    match place {
        Place::Real => 1,
        Place::Prime(2) => 3,
        Place::Prime(_) => 2,
    }
}

struct Span {
    members: [bool; 64],
    elements: Vec<u16>,
}

impl Span {
    fn new() -> Self {
        let mut members = [false; 64];
        members[0] = true;
        Span { members, elements: vec![0] }
    }

    fn insert(&mut self, v: u16) {
        if self.members[v as usize] {
            return;
        }
        let new: Vec<u16> = self.elements.iter().map(|e| e ^ v).collect();
        for e in new {
            self.members[e as usize] = true;
            self.elements.push(e);
        }
    }
}

/// Kummer image of the point with x = n/q, where q is a positive square at
/// `place` (or any positive number at ∞); None when x is not an x-coordinate.
fn kummer(n: i128, q: i128, a: i128, b: i128, place: Place) -> Option<u16> {
    let f0 = n;
    let f1 = n.checked_sub(a.checked_mul(q)?)?;
    let f2 = n.checked_sub(b.checked_mul(q)?)?;
    if f0 == 0 || f1 == 0 || f2 == 0 {
        return None;
    }
    let (c0, c1, c2) = (class_at(f0, place), class_at(f1, place), class_at(f2, place));
    (c0 ^ c1 ^ c2 == 0).then(|| u16::from(c0) | u16::from(c1) << place.width())
}

/// Images of O, (0,0), (A,0), (B,0).
fn torsion_images(a: i128, b: i128, place: Place) -> [u16; 3] {
    let w = place.width();
    let pair = |x: i128, y: i128| u16::from(class_at(x, place)) | u16::from(class_at(y, place)) << w;
    [pair(a * b, -a), pair(a, a * (a - b)), pair(b, b - a)]
}

pub fn local_image(a: i128, b: i128, place: Place, budget: Budget) -> Result<LocalImage, DescentError> {
    let target = 1usize << expected_local_dim(place);
    let mut span = Span::new();
    for t in torsion_images(a, b, place) {
        span.insert(t);
    }
    match place {
        Place::Real => {
            let mut roots = [0i128, a, b];
            roots.sort_unstable();
            // doubled midpoint of (r₁, r₂) and a point beyond r₃
            for (n, q) in [(roots[0] + roots[1], 2), (roots[2] + 1, 1)] {
                if let Some(v) = kummer(n, q, a, b, place) {
                    span.insert(v);
                }
            }
        }
        Place::Prime(p) => {
            let vmax = [a, b, a - b].iter().filter_map(|&x| valuation(x, p)).max().unwrap_or(0) as i64;
            'levels: for level in 1..=budget.0 as i64 {
                if span.elements.len() == target {
                    break;
                }
                let units: Vec<i128> =
                    (1..=4 * level * level).filter(|u| u % p as i64 != 0).map(i128::from).collect();
                for base in [0, a, b] {
                    for e in -2 * level..=vmax + 2 * level + 3 {
                        // x = base + s·u·p^e written over q = p^{2j}
                        let j = if e < 0 { (-e + 1) / 2 } else { 0 };
                        let Some(q) = (p as i128).checked_pow(2 * j as u32) else { continue };
                        let Some(step) = (p as i128).checked_pow((e + 2 * j) as u32) else { continue };
                        for &u in &units {
                            for s in [1i128, -1] {
                                let n = base.checked_mul(q).zip(s.checked_mul(u * step));
                                let Some(n) = n.and_then(|(bq, t)| bq.checked_add(t)) else { continue };
                                if let Some(v) = kummer(n, q, a, b, place) {
                                    span.insert(v);
                                    if span.elements.len() == target {
                                        break 'levels;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    if span.elements.len() != target {
        return Err(DescentError::LocalImage { place, found: span.elements.len(), expected: target });
    }
    let mut elements = span.elements;
    elements.sort_unstable();
    Ok(LocalImage { place, elements })
}

/// Local image with one escalation of the search budget.
pub fn local_image_escalating(a: i128, b: i128, place: Place, budget: Budget) -> Result<LocalImage, DescentError> {
    local_image(a, b, place, budget).or_else(|_| local_image(a, b, place, Budget(budget.0 * 2)))
}

/// Q(S,2) basis −1, p₁, …, p_k; an element is a bit mask over it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SquareClassBasis {
    pub primes: Vec<u64>,
}

impl SquareClassBasis {
    pub fn len(&self) -> u32 {
        self.primes.len() as u32 + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn generator(&self, i: u32) -> i128 {
        if i == 0 {
            -1
        } else {
            self.primes[i as usize - 1] as i128
        }
    }

    /// Squarefree integer with the given exponent mask.
    pub fn value(&self, mask: u128) -> i128 {
        (0..self.len()).filter(|&i| mask >> i & 1 == 1).map(|i| self.generator(i)).product()
    }

    /// Exponent mask of an S-integer's square class.
    pub fn mask_of(&self, n: i128) -> u128 {
        let mut m = u128::from(n < 0);
        for (i, &p) in self.primes.iter().enumerate() {
            if valuation(n, p).unwrap_or(0) % 2 == 1 {
                m |= 1 << (i + 1);
            }
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SelmerComputation {
    pub a: i128,
    pub b: i128,
    pub dim: u32,
    /// Dimension of the image of E(Q)[2].
    pub torsion_dim: u32,
    pub basis: SquareClassBasis,
    /// Kernel basis as masks over the pair basis (b₁ bits low, b₂ bits high).
    pub kernel: Vec<u128>,
    pub local_images: Vec<LocalImage>,
}

impl SelmerComputation {
    /// Elements (b₁, b₂) of Sel₂ as squarefree integers.
    pub fn elements(&self) -> Vec<(i128, i128)> {
        let n = self.basis.len();
        let lo = (1u128 << n) - 1;
        f2::span(&self.kernel).into_iter().map(|m| (self.basis.value(m & lo), self.basis.value(m >> n))).collect()
    }
}

/// Sel₂ of y² = x(x − a)(x − b) for integers a ≠ b, both nonzero.
pub fn selmer2(a: i128, b: i128, budget: Budget) -> Result<SelmerComputation, DescentError> {
    if a == 0 || b == 0 || a == b {
        return Err(DescentError::Singular(format!("x(x − {a})(x − {b}) has a repeated root")));
    }
    if [a, b, a - b].iter().any(|x| abs_u64(*x) > 1 << 62) {
        return Err(DescentError::Input("model coefficients too large".into()));
    }
    let basis = SquareClassBasis { primes: bad_primes_of(a, b) };
    let n = basis.len();
    if 2 * n > 128 {
        return Err(DescentError::Input("too many bad primes".into()));
    }
    let mut rows: Vec<u128> = Vec::new();
    let mut local_images = Vec::new();
    let places = std::iter::once(Place::Real).chain(basis.primes.iter().map(|&p| Place::Prime(p)));
    for place in places {
        let image = local_image_escalating(a, b, place, budget)?;
        let w = place.width();
        let classes: Vec<u16> = (0..n).map(|i| u16::from(class_at(basis.generator(i), place))).collect();
        for alpha in 1u16..1 << (2 * w) {
            if image.elements.iter().any(|&e| (alpha & e).count_ones() % 2 == 1) {
                continue;
            }
            let mut row = 0u128;
            for (i, &c) in classes.iter().enumerate() {
                row |= u128::from((alpha & c).count_ones() as u8 & 1) << i;
                row |= u128::from((alpha & (c << w)).count_ones() as u8 & 1) << (i as u32 + n);
            }
            rows.push(row);
        }
        local_images.push(image);
    }
    let kernel = f2::kernel(&rows, 2 * n);
    let torsion: Vec<u128> = [(a * b, -a), (a, a * (a - b)), (b, b - a)]
        .iter()
        .map(|&(x, y)| basis.mask_of(x) | basis.mask_of(y) << n)
        .collect();
    let torsion_dim = f2::rank(&torsion, 2 * n);
    Ok(SelmerComputation { a, b, dim: kernel.len() as u32, torsion_dim, basis, kernel, local_images })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_images_have_full_size() {
        for (a, b) in [(1i128, -1i128), (5, -5), (6, -6), (2, 12), (7, 3)] {
            for place in [Place::Real, Place::Prime(2), Place::Prime(3), Place::Prime(5), Place::Prime(7)] {
                let img = local_image(a, b, place, Budget::default()).unwrap();
                assert_eq!(img.dim(), expected_local_dim(place));
            }
        }
    }

    #[test]
    fn good_odd_primes_give_unramified_images() {
        // p ∤ 2AB(A−B): the image is the unit classes (v-bits zero)
        let img = local_image(1, -1, Place::Prime(5), Budget::default()).unwrap();
        for e in img.elements {
            assert_eq!(e & 0b0101, 0);
        }
    }

    #[test]
    fn congruent_number_anchors() {
        for (d, dim) in [(1i128, 2u32), (5, 3), (6, 3), (7, 3), (41, 4), (34, 4)] {
            let s = selmer2(d, -d, Budget::default()).unwrap();
            assert_eq!(s.dim, dim, "d = {d}");
            assert_eq!(s.torsion_dim, 2);
        }
    }
}
