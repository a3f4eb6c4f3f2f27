//! Two-phase dense simplex over exact rationals with Bland's rule.
//!
//! Solves max c·x subject to A_le x ≤ b_le, A_eq x = b_eq, x ≥ 0.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<BigRational>, value: BigRational },
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub objective: Vec<BigRational>,
    pub le: Vec<(Vec<BigRational>, BigRational)>,
    pub eq: Vec<(Vec<BigRational>, BigRational)>,
}

struct Tableau {
    rows: Vec<Vec<BigRational>>,
    rhs: Vec<BigRational>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.rows[r][c].recip();
        for x in self.rows[r].iter_mut() {
            *x *= &inv;
        }
        self.rhs[r] *= &inv;
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for j in 0..self.rows[i].len() {
                if self.rows[r][j].is_zero() {
                    continue;
                }
                let t = &f * &self.rows[r][j];
                self.rows[i][j] -= t;
            }
            let t = &f * &self.rhs[r];
            self.rhs[i] -= t;
        }
        self.basis[r] = c;
    }

    /// Maximizes cost·x over the columns in `allowed`; false if unbounded.
    fn optimize(&mut self, cost: &[BigRational], allowed: &[bool]) -> bool {
        loop {
            let entering = (0..cost.len()).find(|&j| {
                if !allowed[j] || self.basis.contains(&j) {
                    return false;
                }
                let reduced = self
                    .basis
                    .iter()
                    .enumerate()
                    .fold(cost[j].clone(), |acc, (i, &b)| acc - &cost[b] * &self.rows[i][j]);
                reduced.is_positive()
            });
            let Some(c) = entering else { return true };
            let mut best: Option<(usize, BigRational)> = None;
            for i in 0..self.rows.len() {
                if !self.rows[i][c].is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / &self.rows[i][c];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            let Some((r, _)) = best else { return false };
            self.pivot(r, c);
        }
    }

    fn value(&self, cost: &[BigRational]) -> BigRational {
        self.basis.iter().zip(&self.rhs).fold(BigRational::zero(), |acc, (&b, v)| acc + &cost[b] * v)
    }
}

impl LinearProgram {
    pub fn solve(&self) -> LpOutcome {
        let n = self.objective.len();
        let m_le = self.le.len();
        let m = m_le + self.eq.len();
        // columns: x (n), slack/surplus (m_le), artificial (m)
        let total = n + m_le + m;
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut needs_artificial = Vec::with_capacity(m);
        for (i, (a, b)) in self.le.iter().enumerate() {
            let mut row = vec![BigRational::zero(); total];
            let flip = b.is_negative();
            for (j, v) in a.iter().enumerate() {
                row[j] = if flip { -v.clone() } else { v.clone() };
            }
            row[n + i] = if flip { -BigRational::one() } else { BigRational::one() };
            rhs.push(if flip { -b.clone() } else { b.clone() });
            needs_artificial.push(flip);
            rows.push(row);
        }
        for (a, b) in &self.eq {
            let mut row = vec![BigRational::zero(); total];
            let flip = b.is_negative();
            for (j, v) in a.iter().enumerate() {
                row[j] = if flip { -v.clone() } else { v.clone() };
            }
            rhs.push(if flip { -b.clone() } else { b.clone() });
            needs_artificial.push(true);
            rows.push(row);
        }
        for i in 0..m {
            if needs_artificial[i] {
                rows[i][n + m_le + i] = BigRational::one();
                basis.push(n + m_le + i);
            } else {
                basis.push(n + i);
            }
        }
        let mut t = Tableau { rows, rhs, basis };

        let mut phase1 = vec![BigRational::zero(); total];
        for i in 0..m {
            if needs_artificial[i] {
                phase1[n + m_le + i] = -BigRational::one();
            }
        }
        let all = vec![true; total];
        t.optimize(&phase1, &all);
        if !t.value(&phase1).is_zero() {
            return LpOutcome::Infeasible;
        }
        // drive remaining artificial variables out of the basis
        let mut r = 0;
        while r < t.rows.len() {
            if t.basis[r] >= n + m_le {
                if let Some(c) = (0..n + m_le).find(|&j| !t.rows[r][j].is_zero()) {
                    t.pivot(r, c);
                } else {
                    t.rows.remove(r);
                    t.rhs.remove(r);
                    t.basis.remove(r);
                    continue;
                }
            }
            r += 1;
        }
        let mut cost = vec![BigRational::zero(); total];
        for (j, c) in self.objective.iter().enumerate() {
            cost[j] = c.clone();
        }
        let allowed: Vec<bool> = (0..total).map(|j| j < n + m_le).collect();
        if !t.optimize(&cost, &allowed) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![BigRational::zero(); n];
        for (i, &b) in t.basis.iter().enumerate() {
            if b < n {
                x[b] = t.rhs[i].clone();
            }
        }
        let value = self.objective.iter().zip(&x).fold(BigRational::zero(), |acc, (c, v)| acc + c * v);
        LpOutcome::Optimal { x, value }
    }
}
