//! Dense linear algebra over prime fields F_ℓ, random-matrix samplers,
//! subspace enumeration and Gaussian binomial counts.

use num_bigint::BigUint;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Generator used by every sampler. Streams split one seed across workers.
pub type SampleRng = ChaCha8Rng;

/// Default bound on ℓ^n for exhaustive subspace enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("modulus {0} is not a prime below 2^31")]
    NotPrime(u64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("enumeration cap exceeded: {ell}^{n} > {cap}")]
    CapExceeded { ell: u32, n: usize, cap: u64 },
}

pub fn rng_from_seed(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SampleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut k = 3u64;
    while k * k <= n {
        if n.is_multiple_of(k) {
            return false;
        }
        k += 2;
    }
    true
}

pub(crate) fn check_modulus(ell: u32) -> Result<(), LinalgError> {
    if (ell as u64) < (1u64 << 31) && is_prime(ell as u64) {
        Ok(())
    } else {
        Err(LinalgError::NotPrime(ell as u64))
    }
}

#[inline]
fn mul_mod(a: u32, b: u32, ell: u32) -> u32 {
    ((a as u64 * b as u64) % ell as u64) as u32
}

#[inline]
fn add_mod(a: u32, b: u32, ell: u32) -> u32 {
    ((a as u64 + b as u64) % ell as u64) as u32
}

#[inline]
fn sub_mod(a: u32, b: u32, ell: u32) -> u32 {
    ((a as u64 + ell as u64 - b as u64) % ell as u64) as u32
}

pub fn inv_mod(a: u32, ell: u32) -> u32 {
    debug_assert!(!a.is_multiple_of(ell));
    let mut base = a as u64 % ell as u64;
    let mut e = ell as u64 - 2;
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % ell as u64;
        }
        base = base * base % ell as u64;
        e >>= 1;
    }
    acc as u32
}

/// Reduce a signed integer into [0, ℓ).
pub fn reduce(x: i64, ell: u32) -> u32 {
    x.rem_euclid(ell as i64) as u32
}

/// Dense row-major matrix over F_ℓ. Entries always lie in [0, ℓ).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldMatrix {
    ell: u32,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl FieldMatrix {
    /// Entries are reduced mod ℓ; ℓ must be prime.
    pub fn new(ell: u32, rows: usize, cols: usize, entries: Vec<u32>) -> Result<Self, LinalgError> {
        check_modulus(ell)?;
        if entries.len() != rows * cols {
            return Err(LinalgError::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        let data = entries.into_iter().map(|x| x % ell).collect();
        Ok(FieldMatrix { ell, rows, cols, data })
    }

    pub fn from_rows(ell: u32, rows: &[Vec<i64>]) -> Result<Self, LinalgError> {
        check_modulus(ell)?;
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::Dimension("ragged rows".into()));
        }
        let data = rows.iter().flatten().map(|&x| reduce(x, ell)).collect();
        Ok(FieldMatrix { ell, rows: r, cols: c, data })
    }

    pub fn zeros(ell: u32, rows: usize, cols: usize) -> Self {
        FieldMatrix { ell, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(ell: u32, n: usize) -> Self {
        let mut m = Self::zeros(ell, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % ell;
        }
        m
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u32) {
        self.data[i * self.cols + j] = v % self.ell;
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<u32>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn entries(&self) -> &[u32] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.ell, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn mul(&self, other: &FieldMatrix) -> Result<FieldMatrix, LinalgError> {
        if self.ell != other.ell || self.cols != other.rows {
            return Err(LinalgError::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let ell = self.ell as u64;
        let mut out = Self::zeros(self.ell, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k) as u64;
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    out.data[idx] = ((out.data[idx] as u64 + a * other.get(k, j) as u64) % ell) as u32;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &FieldMatrix) -> Result<FieldMatrix, LinalgError> {
        self.zip(other, add_mod)
    }

    pub fn sub(&self, other: &FieldMatrix) -> Result<FieldMatrix, LinalgError> {
        self.zip(other, sub_mod)
    }

    fn zip(&self, other: &FieldMatrix, f: fn(u32, u32, u32) -> u32) -> Result<FieldMatrix, LinalgError> {
        if self.ell != other.ell || self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::Dimension("shape mismatch".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b, self.ell)).collect();
        Ok(FieldMatrix { ell: self.ell, rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, c: u32) -> FieldMatrix {
        let data = self.data.iter().map(|&a| mul_mod(a, c % self.ell, self.ell)).collect();
        FieldMatrix { ell: self.ell, rows: self.rows, cols: self.cols, data }
    }

    /// M·v for a column vector v.
    pub fn apply(&self, v: &[u32]) -> Vec<u32> {
        assert_eq!(v.len(), self.cols, "vector length");
        let ell = self.ell as u64;
        (0..self.rows)
            .map(|i| {
                let s = self.row(i).iter().zip(v).fold(0u64, |acc, (&a, &b)| (acc + a as u64 * b as u64) % ell);
                s as u32
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    /// Reduced row-echelon form and pivot columns.
    pub fn rref(&self) -> (FieldMatrix, Vec<usize>) {
        let mut m = self.clone();
        let ell = self.ell;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| m.get(i, c) != 0) else { continue };
            if p != r {
                for j in 0..m.cols {
                    m.data.swap(p * m.cols + j, r * m.cols + j);
                }
            }
            let inv = inv_mod(m.get(r, c), ell);
            for j in 0..m.cols {
                let idx = r * m.cols + j;
                m.data[idx] = mul_mod(m.data[idx], inv, ell);
            }
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let f = m.get(i, c);
                if f == 0 {
                    continue;
                }
                for j in 0..m.cols {
                    let v = mul_mod(f, m.get(r, j), ell);
                    let idx = i * m.cols + j;
                    m.data[idx] = sub_mod(m.data[idx], v, ell);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        if self.ell == 2 && self.cols <= 64 {
            return f2_rank(&mut self.to_bitrows());
        }
        self.rref().1.len()
    }

    pub fn kernel_dim(&self) -> usize {
        self.cols - self.rank()
    }

    /// Basis of {v : M v = 0}, one vector per free column.
    pub fn kernel_basis(&self) -> Vec<Vec<u32>> {
        let (r, pivots) = self.rref();
        let ell = self.ell;
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|c| !pivots.contains(c)) {
            let mut v = vec![0u32; self.cols];
            v[free] = 1 % ell;
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = sub_mod(0, r.get(row, free), ell);
            }
            basis.push(v);
        }
        basis
    }

    /// Some x with M x = b (free variables set to zero), or `None` if inconsistent.
    pub fn solve(&self, b: &[u32]) -> Option<Vec<u32>> {
        let mut aug = Self::zeros(self.ell, self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, self.cols, b[i] % self.ell);
        }
        let (r, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![0u32; self.cols];
        for (row, &pc) in pivots.iter().enumerate() {
            x[pc] = r.get(row, self.cols);
        }
        Some(x)
    }

    pub fn is_invertible(&self) -> bool {
        self.rows == self.cols && self.rank() == self.rows
    }

    pub fn inverse(&self) -> Option<FieldMatrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut aug = Self::zeros(self.ell, n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.data[i * 2 * n + j] = self.get(i, j);
            }
            aug.data[i * 2 * n + n + i] = 1 % self.ell;
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let mut inv = Self::zeros(self.ell, n, n);
        for i in 0..n {
            for j in 0..n {
                inv.data[i * n + j] = r.get(i, n + j);
            }
        }
        Some(inv)
    }

    fn to_bitrows(&self) -> Vec<u64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().enumerate().fold(0u64, |acc, (j, &x)| acc | ((x as u64 & 1) << j)))
            .collect()
    }
}

/// Rank of a matrix over F_2 whose rows are packed into u64 words.
pub fn f2_rank(rows: &mut [u64]) -> usize {
    let mut rank = 0;
    for bit in 0..64 {
        let mask = 1u64 << bit;
        let Some(p) = (rank..rows.len()).find(|&i| rows[i] & mask != 0) else { continue };
        rows.swap(rank, p);
        let pivot = rows[rank];
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && *row & mask != 0 {
                *row ^= pivot;
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Subspace of F_ℓ^n stored by its reduced row-echelon basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subspace {
    ell: u32,
    ambient: usize,
    basis: Vec<Vec<u32>>,
}

impl Subspace {
    pub fn zero(ell: u32, ambient: usize) -> Self {
        Subspace { ell, ambient, basis: Vec::new() }
    }

    pub fn full(ell: u32, ambient: usize) -> Self {
        Self::span(ell, ambient, &FieldMatrix::identity(ell, ambient).row_vecs())
    }

    /// Span of the given vectors (reduced mod ℓ).
    pub fn span(ell: u32, ambient: usize, vectors: &[Vec<u32>]) -> Self {
        if vectors.is_empty() {
            return Self::zero(ell, ambient);
        }
        let data: Vec<u32> = vectors.iter().flat_map(|v| v.iter().map(|&x| x % ell)).collect();
        let m = FieldMatrix { ell, rows: vectors.len(), cols: ambient, data };
        let (r, pivots) = m.rref();
        let basis = (0..pivots.len()).map(|i| r.row(i).to_vec()).collect();
        Subspace { ell, ambient, basis }
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<u32>] {
        &self.basis
    }

    pub fn contains(&self, v: &[u32]) -> bool {
        let mut rows = self.basis.clone();
        rows.push(v.iter().map(|&x| x % self.ell).collect());
        Subspace::span(self.ell, self.ambient, &rows).dim() == self.dim()
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.basis.iter().all(|v| other.contains(v))
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        let mut rows = self.basis.clone();
        rows.extend(other.basis.iter().cloned());
        Subspace::span(self.ell, self.ambient, &rows)
    }

    /// Rows spanning the annihilator: a matrix whose kernel is exactly this subspace.
    pub fn annihilator(&self) -> FieldMatrix {
        if self.basis.is_empty() {
            return FieldMatrix::identity(self.ell, self.ambient);
        }
        let data = self.basis.iter().flatten().copied().collect();
        let b = FieldMatrix { ell: self.ell, rows: self.basis.len(), cols: self.ambient, data };
        let ker = b.kernel_basis();
        let data: Vec<u32> = ker.iter().flatten().copied().collect();
        FieldMatrix { ell: self.ell, rows: ker.len(), cols: self.ambient, data }
    }

    /// Image of the subspace under a square matrix acting on column vectors.
    pub fn image(&self, m: &FieldMatrix) -> Subspace {
        let rows: Vec<Vec<u32>> = self.basis.iter().map(|v| m.apply(v)).collect();
        Subspace::span(self.ell, m.rows(), &rows)
    }

    pub fn is_stable_under(&self, m: &FieldMatrix) -> bool {
        self.basis.iter().all(|v| self.contains(&m.apply(v)))
    }
}

/// Number of j-dimensional subspaces of F_ℓ^n.
pub fn gaussian_binomial(j: usize, n: usize, ell: u32) -> Result<BigUint, LinalgError> {
    if j > n {
        return Err(LinalgError::Domain(format!("gaussian binomial needs j <= n, got j={j}, n={n}")));
    }
    let l = BigUint::from(ell);
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for k in 1..=j {
        num *= l.pow((n - k + 1) as u32) - 1u32;
        den *= l.pow(k as u32) - 1u32;
    }
    Ok(num / den)
}

pub fn enumerate_subspaces(n: usize, ell: u32) -> Result<Vec<Subspace>, LinalgError> {
    enumerate_subspaces_capped(n, ell, DEFAULT_ENUMERATION_CAP)
}

/// Every subspace of F_ℓ^n once, ordered by dimension, then pivot set
/// (lexicographic), then free entries (lexicographic).
pub fn enumerate_subspaces_capped(n: usize, ell: u32, cap: u64) -> Result<Vec<Subspace>, LinalgError> {
    check_modulus(ell)?;
    let size = (ell as u64).checked_pow(n as u32);
    if size.is_none_or(|s| s > cap) {
        return Err(LinalgError::CapExceeded { ell, n, cap });
    }
    let mut out = Vec::new();
    for k in 0..=n {
        for pivots in combinations(n, k) {
            // free slots: (row i, column c) with c > pivot_i and c not a pivot
            let slots: Vec<(usize, usize)> = (0..k)
                .flat_map(|i| {
                    let p = &pivots;
                    ((p[i] + 1)..n).filter(move |c| !p.contains(c)).map(move |c| (i, c))
                })
                .collect();
            let mut digits = vec![0u32; slots.len()];
            loop {
                let mut basis = vec![vec![0u32; n]; k];
                for (i, &p) in pivots.iter().enumerate() {
                    basis[i][p] = 1;
                }
                for (s, &(i, c)) in slots.iter().enumerate() {
                    basis[i][c] = digits[s];
                }
                out.push(Subspace { ell, ambient: n, basis });
                if !increment(&mut digits, ell) {
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// Odometer increment with the last digit fastest; false on wraparound.
fn increment(digits: &mut [u32], base: u32) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

pub fn sample_uniform<R: Rng + ?Sized>(r: usize, c: usize, ell: u32, rng: &mut R) -> FieldMatrix {
    let data = (0..r * c).map(|_| rng.gen_range(0..ell)).collect();
    FieldMatrix { ell, rows: r, cols: c, data }
}

/// Zero diagonal, strictly upper entries uniform, lower entries their negatives.
/// Over F_2 this is a symmetric matrix with zero diagonal.
pub fn sample_alternating<R: Rng + ?Sized>(n: usize, ell: u32, rng: &mut R) -> FieldMatrix {
    let mut m = FieldMatrix::zeros(ell, n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let x = rng.gen_range(0..ell);
            m.data[i * n + j] = x;
            m.data[j * n + i] = sub_mod(0, x, ell);
        }
    }
    m
}

/// Kernel dimension of a fresh uniform r×c matrix; packed fast path over F_2.
pub fn sample_kernel_dim_uniform<R: Rng + ?Sized>(r: usize, c: usize, ell: u32, rng: &mut R) -> usize {
    if ell == 2 && c <= 64 {
        let mask = if c == 64 { u64::MAX } else { (1u64 << c) - 1 };
        let mut rows: Vec<u64> = (0..r).map(|_| rng.gen::<u64>() & mask).collect();
        return c - f2_rank(&mut rows);
    }
    sample_uniform(r, c, ell, rng).kernel_dim()
}

/// Kernel dimension of a fresh alternating n×n matrix; packed fast path over F_2.
pub fn sample_kernel_dim_alternating<R: Rng + ?Sized>(n: usize, ell: u32, rng: &mut R) -> usize {
    if ell == 2 && n <= 64 {
        let mut rows = vec![0u64; n];
        for i in 0..n {
            let above = n - i - 1;
            if above == 0 {
                continue;
            }
            let bits = rng.gen::<u64>() & if above == 64 { u64::MAX } else { (1u64 << above) - 1 };
            rows[i] |= bits << (i + 1);
            for k in 0..above {
                if bits >> k & 1 == 1 {
                    rows[i + 1 + k] |= 1u64 << i;
                }
            }
        }
        return n - f2_rank(&mut rows);
    }
    sample_alternating(n, ell, rng).kernel_dim()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_examples() {
        assert_eq!(FieldMatrix::identity(2, 3).rank(), 3);
        assert_eq!(FieldMatrix::zeros(3, 2, 2).rank(), 0);
        assert_eq!(FieldMatrix::from_rows(2, &[vec![1, 1], vec![1, 1]]).unwrap().rank(), 1);
    }

    #[test]
    fn rejects_composite_modulus() {
        assert_eq!(FieldMatrix::new(4, 1, 1, vec![1]), Err(LinalgError::NotPrime(4)));
    }

    #[test]
    fn empty_uniform_matrix_has_full_kernel() {
        let m = sample_uniform(0, 5, 3, &mut rng_from_seed(1));
        assert_eq!(m.kernel_dim(), 5);
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_uniform(4, 4, 5, &mut rng_from_seed(7));
        let b = sample_uniform(4, 4, 5, &mut rng_from_seed(7));
        assert_eq!(a, b);
    }

    #[test]
    fn alternating_shape() {
        let m = sample_alternating(5, 3, &mut rng_from_seed(3));
        for i in 0..5 {
            assert_eq!(m.get(i, i), 0);
            for j in 0..5 {
                assert_eq!((m.get(i, j) + m.get(j, i)) % 3, 0);
            }
        }
        assert!(sample_alternating(1, 2, &mut rng_from_seed(0)).is_zero());
    }

    #[test]
    fn gaussian_binomial_examples() {
        assert_eq!(gaussian_binomial(0, 5, 3).unwrap(), BigUint::one());
        assert_eq!(gaussian_binomial(1, 2, 2).unwrap(), BigUint::from(3u32));
        assert_eq!(gaussian_binomial(2, 4, 2).unwrap(), BigUint::from(35u32));
        assert!(gaussian_binomial(3, 2, 2).is_err());
    }

    #[test]
    fn subspace_counts() {
        assert_eq!(enumerate_subspaces(1, 2).unwrap().len(), 2);
        assert_eq!(enumerate_subspaces(2, 2).unwrap().len(), 5);
        assert_eq!(enumerate_subspaces(2, 3).unwrap().len(), 6);
        assert!(matches!(enumerate_subspaces_capped(21, 2, 1 << 20), Err(LinalgError::CapExceeded { .. })));
    }

    #[test]
    fn inverse_roundtrip() {
        let m = FieldMatrix::from_rows(5, &[vec![1, 2], vec![3, 4]]).unwrap();
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv).unwrap(), FieldMatrix::identity(5, 2));
        assert!(FieldMatrix::from_rows(2, &[vec![1, 1], vec![1, 1]]).unwrap().inverse().is_none());
    }

    #[test]
    fn packed_paths_agree_with_dense() {
        let mut rng = rng_from_seed(11);
        for _ in 0..200 {
            let m = sample_uniform(5, 7, 2, &mut rng);
            let mut bits = m.to_bitrows();
            assert_eq!(f2_rank(&mut bits), m.rref().1.len());
        }
    }
}
