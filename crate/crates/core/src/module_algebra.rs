//! Finite models of twistable modules through their ω²-torsion.
//!
//! A module is given by M2 ≅ F_ℓ^{2d} (standing for N[ω²]), a square-zero map ω
//! with ker ω = im ω = N[ω], and labeled group elements acting on M2 and
//! commuting with ω. Submodules T of N[ω] are stored in N-coordinates: the
//! coordinates of a vector of N[ω] with respect to the reduced row-echelon basis
//! of ker ω, which are simply its entries at the pivot columns.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{int, pow_int};
use crate::ff_linalg::{enumerate_subspaces_capped, reduce, FieldMatrix, LinalgError, Subspace};
use crate::simplex::{LinearProgram, LpOutcome};

/// Largest ℓ^{dim N[ω]} for which submodules are enumerated (covers F_2^6 and F_3^4).
pub const SUBMODULE_CAP: u64 = 81;
/// Largest number of candidate maps N₁[ω] → N₂[ω] scanned when predicting graph submodules.
pub const HOM_CAP: u64 = 1 << 16;

#[derive(Debug, Error)]
pub enum ModuleError {
    #[error("invalid module: {0}")]
    Invalid(String),
    #[error("unknown class label `{0}`")]
    UnknownClass(String),
    #[error("subspace is not closed under the group action")]
    NotClosed,
    #[error("map is not equivariant for class `{0}`")]
    NotEquivariant(String),
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassFixture {
    pub label: String,
    pub matrix: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<u64>,
}

/// JSON fixture format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuleFixture {
    pub ell: u32,
    pub d: usize,
    pub omega: Vec<Vec<i64>>,
    pub classes: Vec<ClassFixture>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0_classes: Option<Vec<ClassFixture>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mult_table: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duals: Option<Box<ModuleFixture>>,
    /// Candidate isomorphism N[ω] → N^∨[ω] in N-coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_duality: Option<Vec<Vec<i64>>>,
}

#[derive(Clone, Debug)]
pub struct GroupElement {
    pub label: String,
    pub action: FieldMatrix,
    pub weight: u64,
    on_n: FieldMatrix,
}

impl GroupElement {
    /// The action restricted to N[ω], in N-coordinates.
    pub fn on_n(&self) -> &FieldMatrix {
        &self.on_n
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Subquotient<'a> {
    N,
    NModT(&'a Subspace),
    /// (N/T)[ω], realized as ω^{-1}(T)/T.
    QuotientTorsion(&'a Subspace),
}

#[derive(Clone, Debug)]
pub struct GaloisModuleSpec {
    ell: u32,
    d: usize,
    omega: FieldMatrix,
    n_omega: Subspace,
    pivots: Vec<usize>,
    g1: Vec<GroupElement>,
    g0: Vec<GroupElement>,
    dual: Option<Box<GaloisModuleSpec>>,
    self_duality: Option<FieldMatrix>,
}

/// δ_σ : N[ω]^σ → N[ω]_σ in explicit bases.
#[derive(Clone, Debug)]
pub struct ConnectingMap {
    /// Basis of N[ω]^σ in N-coordinates.
    pub source: Vec<Vec<u32>>,
    /// Rows cut out (σ−1)N[ω]; P·v gives coinvariant coordinates.
    pub projection: FieldMatrix,
    /// Column i is δ_σ(source[i]) in coinvariant coordinates.
    pub matrix: FieldMatrix,
}

#[derive(Clone, Debug)]
pub struct FavoredReport {
    pub favored: bool,
    pub worst: Subspace,
    pub max_ratio: BigRational,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FavorOutcome {
    /// ⟨w, c·f_T⟩ ≥ margin > 0 for every nonzero f_T (c = class weights).
    Superlative { w: Vec<BigRational>, margin: Option<BigRational> },
    /// λ ≥ 0, Σλ = 1, Σ λ_T c·f_T = 0.
    ConvexCertificate { lambda: Vec<BigRational> },
    /// Σ_σ c_σ f_T(σ) < 0 for f_vectors[index].
    SuperUnfavored { index: usize },
}

#[derive(Clone, Debug)]
pub struct PotentialFavorReport {
    pub classes: Vec<String>,
    pub weights: Vec<u64>,
    /// Distinct nonzero f_T(σ) = d_N(σ) − d_{N/T}(σ) over G_0.
    pub f_vectors: Vec<Vec<i64>>,
    pub witnesses: Vec<Subspace>,
    pub outcome: FavorOutcome,
}

impl PotentialFavorReport {
    pub fn is_potentially_favored(&self) -> bool {
        matches!(self.outcome, FavorOutcome::Superlative { .. })
    }

    /// Exact re-check of the returned witness.
    pub fn verify(&self) -> bool {
        let g = weighted(&self.f_vectors, &self.weights);
        verify_outcome(&g, &self.outcome)
    }
}

fn weighted(f: &[Vec<i64>], weights: &[u64]) -> Vec<Vec<i64>> {
    f.iter().map(|v| v.iter().zip(weights).map(|(&x, &c)| x * c as i64).collect()).collect()
}

/// Checks a superlative / certificate against weighted vectors g.
pub fn verify_outcome(g: &[Vec<i64>], outcome: &FavorOutcome) -> bool {
    match outcome {
        FavorOutcome::Superlative { w, .. } => g.iter().all(|v| dot(w, v).is_positive()),
        FavorOutcome::ConvexCertificate { lambda } => {
            if lambda.len() != g.len() || lambda.iter().any(|l| l.is_negative()) {
                return false;
            }
            let total = lambda.iter().fold(BigRational::zero(), |a, l| a + l);
            let k = g.first().map_or(0, |v| v.len());
            total == int(1)
                && (0..k).all(|s| lambda.iter().zip(g).fold(BigRational::zero(), |a, (l, v)| a + l * int(v[s])).is_zero())
        }
        FavorOutcome::SuperUnfavored { index } => g.get(*index).is_some_and(|v| v.iter().sum::<i64>() < 0),
    }
}

fn dot(w: &[BigRational], v: &[i64]) -> BigRational {
    w.iter().zip(v).fold(BigRational::zero(), |a, (x, &y)| a + x * int(y))
}

/// Decides strict feasibility of ⟨w, g⟩ > 0 for all g by maximizing t subject to
/// ⟨w, g⟩ ≥ t and −1 ≤ w ≤ 1; otherwise returns a convex combination of the g
/// equal to zero. An empty list yields the vacuous superlative w = 0.
pub fn superlative_lp(g: &[Vec<i64>]) -> FavorOutcome {
    let k = g.first().map_or(0, |v| v.len());
    if g.is_empty() {
        return FavorOutcome::Superlative { w: vec![BigRational::zero(); k], margin: None };
    }
    // variables: w⁺ (k), w⁻ (k), t
    let n = 2 * k + 1;
    let mut lp = LinearProgram { objective: vec![BigRational::zero(); n], ..Default::default() };
    lp.objective[2 * k] = int(1);
    for v in g {
        let mut row = vec![BigRational::zero(); n];
        for s in 0..k {
            row[s] = int(-v[s]);
            row[k + s] = int(v[s]);
        }
        row[2 * k] = int(1);
        lp.le.push((row, BigRational::zero()));
    }
    for j in 0..2 * k {
        let mut row = vec![BigRational::zero(); n];
        row[j] = int(1);
        lp.le.push((row, int(1)));
    }
    let LpOutcome::Optimal { x, value } = lp.solve() else {
        unreachable!("bounded and feasible at the origin")
    };
    if value.is_positive() {
        let w = (0..k).map(|s| &x[s] - &x[k + s]).collect();
        return FavorOutcome::Superlative { w, margin: Some(value) };
    }
    let m = g.len();
    let mut cert = LinearProgram { objective: vec![BigRational::zero(); m], ..Default::default() };
    for s in 0..k {
        cert.eq.push((g.iter().map(|v| int(v[s])).collect(), BigRational::zero()));
    }
    cert.eq.push((vec![int(1); m], int(1)));
    let LpOutcome::Optimal { x, .. } = cert.solve() else {
        unreachable!("zero optimum implies 0 lies in the convex hull")
    };
    FavorOutcome::ConvexCertificate { lambda: x }
}

fn from_columns(ell: u32, rows: usize, cols: &[Vec<u32>]) -> FieldMatrix {
    let mut m = FieldMatrix::zeros(ell, rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        for (i, &x) in c.iter().enumerate() {
            m.set(i, j, x);
        }
    }
    m
}

fn to_i64_rows(m: &FieldMatrix) -> Vec<Vec<i64>> {
    m.row_vecs().into_iter().map(|r| r.into_iter().map(i64::from).collect()).collect()
}

fn block_diag(a: &FieldMatrix, b: &FieldMatrix) -> FieldMatrix {
    let mut m = FieldMatrix::zeros(a.ell(), a.rows() + b.rows(), a.cols() + b.cols());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            m.set(i, j, a.get(i, j));
        }
    }
    for i in 0..b.rows() {
        for j in 0..b.cols() {
            m.set(a.rows() + i, a.cols() + j, b.get(i, j));
        }
    }
    m
}

fn sub_identity(m: &FieldMatrix) -> FieldMatrix {
    m.sub(&FieldMatrix::identity(m.ell(), m.rows())).expect("square matrix")
}

fn sub_vec(a: &[u32], b: &[u32], ell: u32) -> Vec<u32> {
    a.iter().zip(b).map(|(&x, &y)| (x + ell - y) % ell).collect()
}

impl GaloisModuleSpec {
    pub fn new(
        ell: u32,
        omega: FieldMatrix,
        g1: Vec<(String, FieldMatrix, u64)>,
        g0: Option<Vec<(String, FieldMatrix, u64)>>,
    ) -> Result<Self, ModuleError> {
        let m2 = omega.rows();
        if omega.cols() != m2 || !m2.is_multiple_of(2) || omega.ell() != ell {
            return Err(ModuleError::Invalid(format!("ω must be a square map on F_{ell}^{{2d}}, got {m2}x{}", omega.cols())));
        }
        let d = m2 / 2;
        if !omega.mul(&omega)?.is_zero() {
            return Err(ModuleError::Invalid("ω² ≠ 0".into()));
        }
        if omega.rank() != d {
            return Err(ModuleError::Invalid(format!("rank ω = {} but d = {d}", omega.rank())));
        }
        let n_omega = Subspace::span(ell, m2, &omega.kernel_basis());
        let pivots = n_omega.basis().iter().map(|v| v.iter().position(|&x| x != 0).expect("nonzero basis row")).collect();
        let mut spec = GaloisModuleSpec {
            ell,
            d,
            omega,
            n_omega,
            pivots,
            g1: Vec::new(),
            g0: Vec::new(),
            dual: None,
            self_duality: None,
        };
        if g1.is_empty() {
            return Err(ModuleError::Invalid("no group elements supplied".into()));
        }
        let build = |spec: &Self, list: Vec<(String, FieldMatrix, u64)>| -> Result<Vec<GroupElement>, ModuleError> {
            let mut seen = std::collections::HashSet::new();
            list.into_iter()
                .map(|(label, action, weight)| {
                    if !seen.insert(label.clone()) {
                        return Err(ModuleError::Invalid(format!("duplicate class label `{label}`")));
                    }
                    spec.element(label, action, weight)
                })
                .collect()
        };
        let g1 = build(&spec, g1)?;
        let g0 = match g0 {
            Some(list) => build(&spec, list)?,
            None => g1.clone(),
        };
        spec.g1 = g1;
        spec.g0 = g0;
        Ok(spec)
    }

    /// The module whose G_1 = G_0 is the full group generated by `gens` (labels are
    /// generator words such as "ab"; the identity is "1").
    pub fn generated_by(ell: u32, omega: FieldMatrix, gens: &[(&str, FieldMatrix)], max_order: usize) -> Result<Self, ModuleError> {
        let n = omega.rows();
        let mut elems: Vec<(String, FieldMatrix)> = vec![("1".into(), FieldMatrix::identity(ell, n))];
        let mut frontier = 0;
        while frontier < elems.len() {
            let (word, m) = elems[frontier].clone();
            for (g, gm) in gens {
                let next = m.mul(gm)?;
                if elems.iter().all(|(_, x)| *x != next) {
                    if elems.len() == max_order {
                        return Err(ModuleError::CapExceeded(format!("group order exceeds {max_order}")));
                    }
                    let label = if word == "1" { g.to_string() } else { format!("{word}{g}") };
                    elems.push((label, next));
                }
            }
            frontier += 1;
        }
        Self::new(ell, omega, elems.into_iter().map(|(l, m)| (l, m, 1)).collect(), None)
    }

    fn element(&self, label: String, action: FieldMatrix, weight: u64) -> Result<GroupElement, ModuleError> {
        let m2 = 2 * self.d;
        if action.rows() != m2 || action.cols() != m2 || action.ell() != self.ell {
            return Err(ModuleError::Invalid(format!("action of `{label}` has the wrong shape")));
        }
        if !action.is_invertible() {
            return Err(ModuleError::Invalid(format!("action of `{label}` is not invertible")));
        }
        if action.mul(&self.omega)? != self.omega.mul(&action)? {
            return Err(ModuleError::Invalid(format!("action of `{label}` does not commute with ω")));
        }
        if weight == 0 {
            return Err(ModuleError::Invalid(format!("class `{label}` has weight 0")));
        }
        let cols: Vec<Vec<u32>> = (0..self.d)
            .map(|j| {
                let mut e = vec![0u32; self.d];
                e[j] = 1;
                self.coords(&action.apply(&self.embed(&e)))
            })
            .collect();
        let on_n = from_columns(self.ell, self.d, &cols);
        Ok(GroupElement { label, action, weight, on_n })
    }

    pub fn from_fixture(fx: &ModuleFixture) -> Result<Self, ModuleError> {
        let omega = FieldMatrix::from_rows(fx.ell, &fx.omega)?;
        if omega.rows() != 2 * fx.d {
            return Err(ModuleError::Invalid(format!("ω has {} rows, expected 2d = {}", omega.rows(), 2 * fx.d)));
        }
        let convert = |list: &[ClassFixture]| -> Result<Vec<(String, FieldMatrix, u64)>, ModuleError> {
            list.iter()
                .map(|c| Ok((c.label.clone(), FieldMatrix::from_rows(fx.ell, &c.matrix)?, c.weight.unwrap_or(1))))
                .collect()
        };
        let g0 = fx.g0_classes.as_deref().map(convert).transpose()?;
        let mut spec = Self::new(fx.ell, omega, convert(&fx.classes)?, g0)?;
        if let Some(table) = &fx.mult_table {
            spec.check_mult_table(table)?;
        }
        if let Some(dual) = &fx.duals {
            spec.dual = Some(Box::new(Self::from_fixture(dual)?));
        }
        if let Some(phi) = &fx.self_duality {
            let phi = FieldMatrix::from_rows(fx.ell, phi)?;
            if phi.rows() != spec.d || phi.cols() != spec.d {
                return Err(ModuleError::Invalid("self-duality candidate must be d×d".into()));
            }
            spec.self_duality = Some(phi);
        }
        Ok(spec)
    }

    pub fn to_fixture(&self) -> ModuleFixture {
        let classes = |list: &[GroupElement]| {
            list.iter()
                .map(|g| ClassFixture {
                    label: g.label.clone(),
                    matrix: to_i64_rows(&g.action),
                    weight: (g.weight != 1).then_some(g.weight),
                })
                .collect::<Vec<_>>()
        };
        let g1 = classes(&self.g1);
        let g0 = classes(&self.g0);
        ModuleFixture {
            ell: self.ell,
            d: self.d,
            omega: to_i64_rows(&self.omega),
            g0_classes: (g0 != g1).then_some(g0),
            classes: g1,
            mult_table: None,
            duals: self.dual.as_ref().map(|d| Box::new(d.to_fixture())),
            self_duality: self.self_duality.as_ref().map(to_i64_rows),
        }
    }

    /// Entry [i][j] is the label of g_i·g_j; every product must match a supplied element.
    fn check_mult_table(&self, table: &[Vec<String>]) -> Result<(), ModuleError> {
        let n = self.g1.len();
        if table.len() != n || table.iter().any(|r| r.len() != n) {
            return Err(ModuleError::Invalid(format!("multiplication table must be {n}x{n}")));
        }
        for (i, row) in table.iter().enumerate() {
            for (j, label) in row.iter().enumerate() {
                let prod = self.g1[i].action.mul(&self.g1[j].action)?;
                if prod != self.class(label)?.action {
                    return Err(ModuleError::Invalid(format!(
                        "{}·{} does not act as {label}",
                        self.g1[i].label, self.g1[j].label
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    /// dim N[ω].
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn omega(&self) -> &FieldMatrix {
        &self.omega
    }

    pub fn g1(&self) -> &[GroupElement] {
        &self.g1
    }

    pub fn g0(&self) -> &[GroupElement] {
        &self.g0
    }

    pub fn dual(&self) -> Option<&GaloisModuleSpec> {
        self.dual.as_deref()
    }

    /// Looks a label up in G_1, then in G_0.
    pub fn class(&self, label: &str) -> Result<&GroupElement, ModuleError> {
        self.g1
            .iter()
            .chain(&self.g0)
            .find(|g| g.label == label)
            .ok_or_else(|| ModuleError::UnknownClass(label.to_string()))
    }

    /// N-coordinates → vector of M2.
    pub fn embed(&self, coords: &[u32]) -> Vec<u32> {
        let mut v = vec![0u32; 2 * self.d];
        for (c, b) in coords.iter().zip(self.n_omega.basis()) {
            for (x, &y) in v.iter_mut().zip(b) {
                *x = (*x + c * y) % self.ell;
            }
        }
        v
    }

    /// Vector of N[ω] ⊂ M2 → N-coordinates.
    pub fn coords(&self, v: &[u32]) -> Vec<u32> {
        debug_assert!(self.n_omega.contains(v), "vector outside N[ω]");
        self.pivots.iter().map(|&p| v[p]).collect()
    }

    pub fn n_omega(&self) -> &Subspace {
        &self.n_omega
    }

    fn embed_subspace(&self, t: &Subspace) -> Subspace {
        let rows: Vec<Vec<u32>> = t.basis().iter().map(|v| self.embed(v)).collect();
        Subspace::span(self.ell, 2 * self.d, &rows)
    }

    fn check_submodule(&self, t: &Subspace) -> Result<(), ModuleError> {
        if t.ambient() != self.d || t.ell() != self.ell {
            return Err(ModuleError::Invalid(format!("submodule must live in F_{}^{}", self.ell, self.d)));
        }
        if self.g1.iter().chain(&self.g0).all(|g| t.is_stable_under(&g.on_n)) {
            Ok(())
        } else {
            Err(ModuleError::NotClosed)
        }
    }

    /// ω^{-1}(T) = {x ∈ M2 : ωx ∈ T}.
    pub fn omega_preimage(&self, t: &Subspace) -> Subspace {
        let q = self.embed_subspace(t).annihilator();
        let k = q.mul(&self.omega).expect("shapes agree");
        Subspace::span(self.ell, 2 * self.d, &k.kernel_basis())
    }

    /// dim{u ∈ U : (σ−1)u ∈ W} − dim W for σ-stable W ⊆ U ⊆ M2.
    fn fixed_dim_subquotient(&self, sigma: &FieldMatrix, u: &Subspace, w: &Subspace) -> usize {
        if u.dim() == 0 {
            return 0;
        }
        let b = from_columns(self.ell, 2 * self.d, u.basis());
        let m = w.annihilator().mul(&sub_identity(sigma)).and_then(|x| x.mul(&b)).expect("shapes agree");
        m.kernel_dim() - w.dim()
    }

    fn fixed_dim_of(&self, g: &GroupElement, sq: Subquotient) -> usize {
        let zero = Subspace::zero(self.ell, 2 * self.d);
        match sq {
            Subquotient::N => self.fixed_dim_subquotient(&g.action, &self.n_omega, &zero),
            Subquotient::NModT(t) => self.fixed_dim_subquotient(&g.action, &self.n_omega, &self.embed_subspace(t)),
            Subquotient::QuotientTorsion(t) => {
                self.fixed_dim_subquotient(&g.action, &self.omega_preimage(t), &self.embed_subspace(t))
            }
        }
    }

    pub fn fixed_dim(&self, label: &str, sq: Subquotient) -> Result<usize, ModuleError> {
        let g = self.class(label)?;
        if let Subquotient::NModT(t) | Subquotient::QuotientTorsion(t) = sq {
            self.check_submodule(t)?;
        }
        Ok(self.fixed_dim_of(g, sq))
    }

    /// Lifts n ∈ N[ω] (N-coordinates) to x ∈ M2 with ωx = n and returns (σ−1)x in N-coordinates.
    fn raw_delta(&self, g: &GroupElement, n: &[u32]) -> Vec<u32> {
        let x = self.omega.solve(&self.embed(n)).expect("ω maps onto N[ω]");
        let y = sub_vec(&g.action.apply(&x), &x, self.ell);
        self.coords(&y)
    }

    /// Rows whose kernel is (σ−1)N[ω].
    fn coinvariant_projection(&self, g: &GroupElement) -> FieldMatrix {
        let img = Subspace::full(self.ell, self.d).image(&sub_identity(&g.on_n));
        img.annihilator()
    }

    pub fn connecting_map(&self, label: &str) -> Result<ConnectingMap, ModuleError> {
        Ok(self.connecting_map_of(self.class(label)?))
    }

    fn connecting_map_of(&self, g: &GroupElement) -> ConnectingMap {
        let source = sub_identity(&g.on_n).kernel_basis();
        let projection = self.coinvariant_projection(g);
        let cols: Vec<Vec<u32>> = source.iter().map(|n| projection.apply(&self.raw_delta(g, n))).collect();
        // changing the lift by k ∈ N[ω] moves (σ−1)x by (σ−1)k, which the projection kills
        debug_assert!(self.n_omega.basis().iter().all(|k| {
            let y = sub_vec(&g.action.apply(k), k, self.ell);
            projection.apply(&self.coords(&y)).iter().all(|&c| c == 0)
        }));
        let matrix = if cols.is_empty() {
            FieldMatrix::zeros(self.ell, projection.rows(), 0)
        } else {
            from_columns(self.ell, projection.rows(), &cols)
        };
        ConnectingMap { source, projection, matrix }
    }

    /// φ∘δ_σ = δ_σ∘φ for every σ in G_1, for an equivariant endomorphism φ of N[ω].
    pub fn commutes_with_connecting(&self, phi: &FieldMatrix) -> Result<bool, ModuleError> {
        hom_commutes_with_connecting(self, self, phi)
    }

    /// Tests the supplied self-duality candidate against the dual module, if both exist.
    pub fn check_self_duality(&self) -> Result<Option<bool>, ModuleError> {
        match (&self.dual, &self.self_duality) {
            (Some(dual), Some(phi)) => {
                if !phi.is_invertible() {
                    return Ok(Some(false));
                }
                Ok(Some(hom_commutes_with_connecting(self, dual, phi)?))
            }
            _ => Ok(None),
        }
    }

    /// Every action-closed subspace of N[ω] (N-coordinates).
    pub fn submodules(&self) -> Result<Vec<Subspace>, ModuleError> {
        self.submodules_capped(SUBMODULE_CAP)
    }

    pub fn submodules_capped(&self, cap: u64) -> Result<Vec<Subspace>, ModuleError> {
        let all = enumerate_subspaces_capped(self.d, self.ell, cap).map_err(|e| match e {
            LinalgError::CapExceeded { .. } => ModuleError::CapExceeded(format!("ℓ^{} > {cap}", self.d)),
            other => other.into(),
        })?;
        let mats: Vec<&FieldMatrix> = self.g1.iter().chain(&self.g0).map(|g| &g.on_n).collect();
        Ok(all.into_iter().filter(|t| mats.iter().all(|m| t.is_stable_under(m))).collect())
    }

    /// Exponent e with 𝒯 = ℓ^e for a list of class labels.
    pub fn tamagawa_exponent<S: AsRef<str>>(&self, t: &Subspace, profile: &[S]) -> Result<i64, ModuleError> {
        self.check_submodule(t)?;
        let mut cache: HashMap<&str, i64> = HashMap::new();
        let mut e = 0i64;
        for label in profile {
            let label = label.as_ref();
            let step = match cache.get(label) {
                Some(&s) => s,
                None => {
                    let g = self.class(label)?;
                    let s = self.fixed_dim_of(g, Subquotient::QuotientTorsion(t)) as i64
                        - self.fixed_dim_of(g, Subquotient::N) as i64;
                    cache.insert(label, s);
                    s
                }
            };
            e += step;
        }
        Ok(e)
    }

    /// ∏_p ℓ^{d_{N/T}(c_p) − d_N(c_p)}.
    pub fn tamagawa_ratio<S: AsRef<str>>(&self, t: &Subspace, profile: &[S]) -> Result<BigRational, ModuleError> {
        Ok(pow_int(self.ell, self.tamagawa_exponent(t, profile)?))
    }

    pub fn is_favored<S: AsRef<str>>(&self, profile: &[S]) -> Result<FavoredReport, ModuleError> {
        let mut best: Option<(i64, Subspace)> = None;
        for t in self.submodules()? {
            let e = self.tamagawa_exponent(&t, profile)?;
            if best.as_ref().is_none_or(|(b, _)| e > *b) {
                best = Some((e, t));
            }
        }
        let (e, worst) = best.expect("0 is always a submodule");
        Ok(FavoredReport { favored: e <= 0, worst, max_ratio: pow_int(self.ell, e) })
    }

    pub fn is_cofavored(&self, t: &Subspace) -> Result<bool, ModuleError> {
        self.check_submodule(t)?;
        Ok(self.g1.iter().all(|g| {
            self.fixed_dim_of(g, Subquotient::QuotientTorsion(t)) == self.fixed_dim_of(g, Subquotient::N)
        }))
    }

    pub fn cofavored_submodules(&self) -> Result<Vec<Subspace>, ModuleError> {
        let mut out = Vec::new();
        for t in self.submodules()? {
            if self.is_cofavored(&t)? {
                out.push(t);
            }
        }
        Ok(out)
    }

    /// Only 0 and N[ω] are cofavored.
    pub fn is_uncofavored(&self) -> Result<bool, ModuleError> {
        Ok(self.cofavored_submodules()?.iter().all(|t| t.dim() == 0 || t.dim() == self.d))
    }

    /// f_T over G_0 for every submodule, deduplicated, pointwise-zero vectors dropped.
    pub fn difference_vectors(&self) -> Result<(Vec<Vec<i64>>, Vec<Subspace>), ModuleError> {
        let base: Vec<i64> = self.g0.iter().map(|g| self.fixed_dim_of(g, Subquotient::N) as i64).collect();
        let mut f_vectors: Vec<Vec<i64>> = Vec::new();
        let mut witnesses = Vec::new();
        for t in self.submodules()? {
            let f: Vec<i64> = self
                .g0
                .iter()
                .zip(&base)
                .map(|(g, &b)| b - self.fixed_dim_of(g, Subquotient::QuotientTorsion(&t)) as i64)
                .collect();
            if f.iter().all(|&x| x == 0) || f_vectors.contains(&f) {
                continue;
            }
            f_vectors.push(f);
            witnesses.push(t);
        }
        Ok((f_vectors, witnesses))
    }

    pub fn is_potentially_favored(&self) -> Result<PotentialFavorReport, ModuleError> {
        let (f_vectors, witnesses) = self.difference_vectors()?;
        let weights: Vec<u64> = self.g0.iter().map(|g| g.weight).collect();
        let g = weighted(&f_vectors, &weights);
        let outcome = match g.iter().position(|v| v.iter().sum::<i64>() < 0) {
            Some(index) => FavorOutcome::SuperUnfavored { index },
            None => superlative_lp(&g),
        };
        Ok(PotentialFavorReport {
            classes: self.g0.iter().map(|g| g.label.clone()).collect(),
            weights,
            f_vectors,
            witnesses,
            outcome,
        })
    }

    /// N₁ ⊕ N₂; both must carry the same class labels.
    pub fn direct_sum(a: &Self, b: &Self) -> Result<Self, ModuleError> {
        if a.ell != b.ell {
            return Err(ModuleError::Invalid("direct sum of modules over different fields".into()));
        }
        let pair = |la: &[GroupElement], lb: &[GroupElement]| -> Result<Vec<(String, FieldMatrix, u64)>, ModuleError> {
            la.iter()
                .map(|g| {
                    let h = lb
                        .iter()
                        .find(|h| h.label == g.label)
                        .ok_or_else(|| ModuleError::UnknownClass(g.label.clone()))?;
                    Ok((g.label.clone(), block_diag(&g.action, &h.action), g.weight))
                })
                .collect()
        };
        Self::new(a.ell, block_diag(&a.omega, &b.omega), pair(&a.g1, &b.g1)?, Some(pair(&a.g0, &b.g0)?))
    }

    /// N^{⊕a}.
    pub fn power(&self, a: usize) -> Result<Self, ModuleError> {
        if a == 0 {
            return Err(ModuleError::Invalid("power must be positive".into()));
        }
        let mut acc = self.clone();
        acc.dual = None;
        acc.self_duality = None;
        for _ in 1..a {
            acc = Self::direct_sum(&acc, self)?;
        }
        Ok(acc)
    }
}

/// For β: N₁[ω] → N₂[ω] equivariant, checks β∘δ_σ = δ_σ∘β on N₁[ω]^σ for every σ in G_1 of N₁.
pub fn hom_commutes_with_connecting(
    src: &GaloisModuleSpec,
    dst: &GaloisModuleSpec,
    beta: &FieldMatrix,
) -> Result<bool, ModuleError> {
    if beta.rows() != dst.d || beta.cols() != src.d || beta.ell() != src.ell || src.ell != dst.ell {
        return Err(ModuleError::Invalid("map has the wrong shape".into()));
    }
    for g in &src.g1 {
        let h = dst.class(&g.label)?;
        if beta.mul(&g.on_n)? != h.on_n.mul(beta)? {
            return Err(ModuleError::NotEquivariant(g.label.clone()));
        }
    }
    Ok(src.g1.iter().all(|g| hom_commutes_at(src, dst, beta, g)))
}

fn hom_commutes_at(src: &GaloisModuleSpec, dst: &GaloisModuleSpec, beta: &FieldMatrix, g: &GroupElement) -> bool {
    let h = dst.class(&g.label).expect("checked by caller");
    let proj = dst.coinvariant_projection(h);
    sub_identity(&g.on_n).kernel_basis().iter().all(|n| {
        let lhs = dst.raw_delta(h, &beta.apply(n));
        let rhs = beta.apply(&src.raw_delta(g, n));
        proj.apply(&sub_vec(&lhs, &rhs, src.ell)).iter().all(|&c| c == 0)
    })
}

fn equivariant(src: &GaloisModuleSpec, dst: &GaloisModuleSpec, beta: &FieldMatrix) -> bool {
    src.g1.iter().chain(&src.g0).all(|g| match dst.class(&g.label) {
        Ok(h) => beta.mul(&g.on_n).ok() == h.on_n.mul(beta).ok(),
        Err(_) => false,
    })
}

#[derive(Clone, Debug)]
pub struct CofavoredPowersReport {
    pub a: usize,
    pub cofavored: Vec<Subspace>,
    /// Cofavored submodules not of the form A ⊗ N[ω].
    pub counterexamples: Vec<Subspace>,
    /// Subspaces A ⊆ F_ℓ^a (as submodules A ⊗ N[ω]) that fail to be cofavored.
    pub tensor_not_cofavored: Vec<Subspace>,
}

impl CofavoredPowersReport {
    pub fn holds(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// A ⊗ N[ω] inside N^{⊕a}, in the N-coordinates of `power`.
pub fn tensor_submodule(base: &GaloisModuleSpec, power: &GaloisModuleSpec, a_sub: &Subspace) -> Subspace {
    let m2 = 2 * base.d;
    let mut rows = Vec::new();
    for alpha in a_sub.basis() {
        for n in base.n_omega.basis() {
            let mut v = vec![0u32; m2 * alpha.len()];
            for (i, &c) in alpha.iter().enumerate() {
                for (k, &x) in n.iter().enumerate() {
                    v[i * m2 + k] = (c * x) % base.ell;
                }
            }
            rows.push(power.coords(&v));
        }
    }
    Subspace::span(base.ell, power.d, &rows)
}

pub fn verify_cofavored_powers(spec: &GaloisModuleSpec, a: usize) -> Result<CofavoredPowersReport, ModuleError> {
    let total = (spec.ell as u64).checked_pow((spec.d * a) as u32);
    if total.is_none_or(|s| s > SUBMODULE_CAP) {
        return Err(ModuleError::CapExceeded(format!("ℓ^{} > {SUBMODULE_CAP}", spec.d * a)));
    }
    let power = spec.power(a)?;
    let cofavored = power.cofavored_submodules()?;
    let tensors: Vec<(Subspace, Subspace)> = enumerate_subspaces_capped(a, spec.ell, SUBMODULE_CAP)?
        .into_iter()
        .map(|s| {
            let t = tensor_submodule(spec, &power, &s);
            (s, t)
        })
        .collect();
    let counterexamples = cofavored.iter().filter(|t| !tensors.iter().any(|(_, x)| x == *t)).cloned().collect();
    let tensor_not_cofavored = tensors.iter().filter(|(_, t)| !cofavored.contains(t)).map(|(s, _)| s.clone()).collect();
    Ok(CofavoredPowersReport { a, cofavored, counterexamples, tensor_not_cofavored })
}

#[derive(Clone, Debug)]
pub struct DirectSumReport {
    /// {0, 0⊕N₂[ω], (N₁⊕N₂)[ω]} ∪ graphs of maps commuting with the connecting maps.
    pub predicted: Vec<Subspace>,
    pub cofavored: Vec<Subspace>,
    pub commuting_maps: Vec<FieldMatrix>,
    pub missing: Vec<Subspace>,
    pub unexpected: Vec<Subspace>,
}

impl DirectSumReport {
    pub fn matches(&self) -> bool {
        self.missing.is_empty() && self.unexpected.is_empty()
    }
}

/// Graph {(x, βx)} in the N-coordinates of `sum` = N₁ ⊕ N₂.
pub fn graph_submodule(n1: &GaloisModuleSpec, n2: &GaloisModuleSpec, sum: &GaloisModuleSpec, beta: &FieldMatrix) -> Subspace {
    let rows: Vec<Vec<u32>> = (0..n1.d)
        .map(|j| {
            let mut e = vec![0u32; n1.d];
            e[j] = 1;
            let mut v = n1.embed(&e);
            v.extend(n2.embed(&beta.apply(&e)));
            sum.coords(&v)
        })
        .collect();
    Subspace::span(n1.ell, sum.d, &rows)
}

/// Exhaustively compares the cofavored submodules of N₁ ⊕ N₂ with the predicted list.
pub fn verify_direct_sum(n1: &GaloisModuleSpec, n2: &GaloisModuleSpec) -> Result<DirectSumReport, ModuleError> {
    let sum = GaloisModuleSpec::direct_sum(n1, n2)?;
    let cofavored = sum.cofavored_submodules()?;
    let entries = n1.d * n2.d;
    let count = (n1.ell as u64).checked_pow(entries as u32).filter(|&c| c <= HOM_CAP);
    let Some(count) = count else {
        return Err(ModuleError::CapExceeded(format!("ℓ^{entries} candidate maps > {HOM_CAP}")));
    };
    let ell = n1.ell;
    let mut predicted = vec![
        Subspace::zero(ell, sum.d),
        graph_submodule_second(n1, n2, &sum),
        Subspace::full(ell, sum.d),
    ];
    let mut commuting_maps = Vec::new();
    for code in 0..count {
        let mut c = code;
        let mut beta = FieldMatrix::zeros(ell, n2.d, n1.d);
        for i in 0..n2.d {
            for j in 0..n1.d {
                beta.set(i, j, (c % ell as u64) as u32);
                c /= ell as u64;
            }
        }
        if !equivariant(n1, n2, &beta) || !n1.g1.iter().all(|g| hom_commutes_at(n1, n2, &beta, g)) {
            continue;
        }
        let t = graph_submodule(n1, n2, &sum, &beta);
        if !predicted.contains(&t) {
            predicted.push(t);
        }
        commuting_maps.push(beta);
    }
    let missing = predicted.iter().filter(|t| !cofavored.contains(t)).cloned().collect();
    let unexpected = cofavored.iter().filter(|t| !predicted.contains(t)).cloned().collect();
    Ok(DirectSumReport { predicted, cofavored, commuting_maps, missing, unexpected })
}

/// 0 ⊕ N₂[ω].
fn graph_submodule_second(n1: &GaloisModuleSpec, n2: &GaloisModuleSpec, sum: &GaloisModuleSpec) -> Subspace {
    let rows: Vec<Vec<u32>> = n2
        .n_omega
        .basis()
        .iter()
        .map(|n| {
            let mut v = vec![0u32; 2 * n1.d];
            v.extend(n.iter().copied());
            sum.coords(&v)
        })
        .collect();
    Subspace::span(n1.ell, sum.d, &rows)
}

/// Hand-built modules used by tests, the CLI and the acceptance suite.
pub mod fixtures {
    use super::*;

    /// ω on the basis (e_1..e_d, f_1..f_d) with ω f_i = e_i, ω e_i = 0.
    pub fn standard_omega(ell: u32, d: usize) -> FieldMatrix {
        let mut m = FieldMatrix::zeros(ell, 2 * d, 2 * d);
        for i in 0..d {
            m.set(i, d + i, 1);
        }
        m
    }

    /// The matrix [[A, B], [0, A]]: A acts on N[ω] = ⟨e⟩ and B e_j = δ-part of f_j.
    /// These are exactly the maps commuting with `standard_omega`.
    pub fn block_action(a: &FieldMatrix, b: &FieldMatrix) -> FieldMatrix {
        let d = a.rows();
        let mut m = FieldMatrix::zeros(a.ell(), 2 * d, 2 * d);
        for i in 0..d {
            for j in 0..d {
                m.set(i, j, a.get(i, j));
                m.set(d + i, d + j, a.get(i, j));
                m.set(i, d + j, b.get(i, j));
            }
        }
        m
    }

    fn rows(ell: u32, r: &[&[i64]]) -> FieldMatrix {
        let v: Vec<Vec<i64>> = r.iter().map(|x| x.to_vec()).collect();
        FieldMatrix::from_rows(ell, &v).expect("well-formed literal")
    }

    fn build(ell: u32, d: usize, classes: Vec<(&str, FieldMatrix)>) -> GaloisModuleSpec {
        let g1 = classes.into_iter().map(|(l, m)| (l.to_string(), m, 1)).collect();
        GaloisModuleSpec::new(ell, standard_omega(ell, d), g1, None).expect("valid fixture")
    }

    pub fn trivial(ell: u32, d: usize) -> GaloisModuleSpec {
        build(ell, d, vec![("1", FieldMatrix::identity(ell, 2 * d))])
    }

    /// ℓ = 2, d = 2, G = {1, s} with s swapping the two coordinates of M2's halves.
    pub fn swap() -> GaloisModuleSpec {
        let s = rows(2, &[&[0, 1], &[1, 0]]);
        let z = FieldMatrix::zeros(2, 2, 2);
        build(2, 2, vec![("1", FieldMatrix::identity(2, 4)), ("s", block_action(&s, &z))])
    }

    /// ℓ = 2, d = 2, one element fixing e_1, e_2, f_2 and sending f_1 to f_1 + e_2.
    pub fn connecting_example() -> GaloisModuleSpec {
        let b = rows(2, &[&[0, 0], &[1, 0]]);
        build(2, 2, vec![("s", block_action(&FieldMatrix::identity(2, 2), &b))])
    }

    /// d = 1, G = {1, s} with s f = f + δ e.
    pub fn one_dim(ell: u32, delta: u32) -> GaloisModuleSpec {
        let b = FieldMatrix::new(ell, 1, 1, vec![delta % ell]).expect("1x1");
        build(ell, 1, vec![("1", FieldMatrix::identity(ell, 2)), ("s", block_action(&FieldMatrix::identity(ell, 1), &b))])
    }

    /// Quadratic-character values of one class on the square classes of
    /// −1, c₁−c₂, (c₃−c₁)(c₂−c₁) and (c₃−c₂)(c₁−c₂).
    #[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
    pub struct TwoTorsionClass {
        pub label: String,
        pub chars: [u8; 4],
        pub weight: u64,
    }

    /// Full-two-torsion elliptic-curve model: ℓ = 2, d = 2, Galois acting trivially on
    /// N[ω] = A[2] with δ(e₁) = χ_{c₁−c₂} e₁ + χ_{(c₃−c₁)(c₂−c₁)} e₂ and
    /// δ(e₂) = χ_{(c₃−c₂)(c₁−c₂)} e₁ + χ_{c₂−c₁} e₂, where χ_{c₂−c₁} = χ_{−1} + χ_{c₁−c₂}.
    pub fn two_torsion(classes: &[TwoTorsionClass]) -> Result<GaloisModuleSpec, ModuleError> {
        let id = FieldMatrix::identity(2, 2);
        let g1 = classes
            .iter()
            .map(|c| {
                let [neg, c12, q1, q2] = c.chars.map(|x| i64::from(x & 1));
                let b = rows(2, &[&[c12, q2], &[q1, neg + c12]]);
                (c.label.clone(), block_action(&id, &b), c.weight)
            })
            .collect();
        GaloisModuleSpec::new(2, standard_omega(2, 2), g1, None)
    }

    /// The order-3 automorphism e₁ → e₂ → e₁ + e₂ → e₁ of A[2], in N-coordinates.
    pub fn order_three() -> FieldMatrix {
        rows(2, &[&[0, 1], &[1, 1]])
    }

    /// Every two-torsion class pattern (16 classes); some class has χ_{q₁} ≠ χ_{−1}.
    pub fn two_torsion_generic() -> GaloisModuleSpec {
        let classes: Vec<TwoTorsionClass> = (0..16u8)
            .map(|m| TwoTorsionClass {
                label: format!("{:04b}", m),
                chars: [m >> 3 & 1, m >> 2 & 1, m >> 1 & 1, m & 1],
                weight: 1,
            })
            .collect();
        two_torsion(&classes).expect("valid")
    }

    /// Classes with χ_{q₁} = χ_{q₂} = χ_{−1}: all three products are minus squares.
    pub fn two_torsion_minus_squares() -> GaloisModuleSpec {
        let classes: Vec<TwoTorsionClass> = (0..4u8)
            .map(|m| {
                let (neg, c12) = (m >> 1 & 1, m & 1);
                TwoTorsionClass { label: format!("{neg}{c12}"), chars: [neg, c12, neg, neg], weight: 1 }
            })
            .collect();
        two_torsion(&classes).expect("valid")
    }

    /// d = 2, G_0 = {t, s}: the diagonal line is the only proper nonzero submodule,
    /// with f = (1, −1).
    pub fn single_constraint() -> GaloisModuleSpec {
        constraint_pair(false)
    }

    fn constraint_pair(mirrored: bool) -> GaloisModuleSpec {
        let s = rows(2, &[&[0, 1], &[1, 0]]);
        let z = FieldMatrix::zeros(2, 2, 2);
        let b = rows(2, &[&[1, 0], &[0, 0]]);
        let twisted = block_action(&FieldMatrix::identity(2, 2), &b);
        let swapped = block_action(&s, &z);
        let (t, s) = if mirrored { (swapped, twisted) } else { (twisted, swapped) };
        build(2, 2, vec![("t", t), ("s", s)])
    }

    /// d = 4: `single_constraint` plus its copy with the roles of t and s exchanged.
    /// The difference vectors include (1, −1) and (−1, 1), so ½f₁ + ½f₂ = 0.
    pub fn symmetric_cancellation() -> GaloisModuleSpec {
        GaloisModuleSpec::direct_sum(&constraint_pair(false), &constraint_pair(true)).expect("same labels")
    }

    /// Basis of the one-dimensional module e, f: δ = 1 (nontrivial) and δ = 0 share labels {1, s}.
    /// β: N₁[ω] → N₂[ω] sending e₁ to e₂ does not commute with the connecting maps.
    pub fn non_commuting_pair() -> (GaloisModuleSpec, GaloisModuleSpec, FieldMatrix) {
        (one_dim(2, 1), one_dim(2, 0), FieldMatrix::identity(2, 1))
    }

    /// d = 3 over F_2 with N[ω] irreducible: the group generated by a ↦ companion
    /// matrix of x³ + x + 1 (zero connecting part) and, when `twisted`, b acting
    /// trivially on N[ω] with δ_b(e₁) = e₁. With b present the only equivariant
    /// automorphism commuting with the connecting maps is the identity; without it
    /// all of F_8^× commutes.
    pub fn irreducible_cubic(twisted: bool) -> GaloisModuleSpec {
        let a = rows(2, &[&[0, 0, 1], &[1, 0, 1], &[0, 1, 0]]);
        let z = FieldMatrix::zeros(2, 3, 3);
        let mut gens = vec![("a", block_action(&a, &z))];
        if twisted {
            let e = rows(2, &[&[1, 0, 0], &[0, 0, 0], &[0, 0, 0]]);
            gens.push(("b", block_action(&FieldMatrix::identity(2, 3), &e)));
        }
        GaloisModuleSpec::generated_by(2, standard_omega(2, 3), &gens, 4096).expect("finite group")
    }

    pub fn reduce_all(ell: u32, v: &[i64]) -> Vec<u32> {
        v.iter().map(|&x| reduce(x, ell)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn line(ell: u32, d: usize, v: &[u32]) -> Subspace {
        Subspace::span(ell, d, &[v.to_vec()])
    }

    #[test]
    fn identity_and_swap_fixed_dims() {
        let m = swap();
        assert_eq!(m.fixed_dim("1", Subquotient::N).unwrap(), 2);
        assert_eq!(m.fixed_dim("s", Subquotient::N).unwrap(), 1);
        let diag = line(2, 2, &[1, 1]);
        assert_eq!(m.fixed_dim("s", Subquotient::NModT(&diag)).unwrap(), 1);
        assert_eq!(m.fixed_dim("s", Subquotient::QuotientTorsion(&diag)).unwrap(), 2);
        let bad = line(2, 2, &[1, 0]);
        assert!(matches!(m.fixed_dim("s", Subquotient::N), Ok(1)));
        assert!(matches!(m.fixed_dim("s", Subquotient::QuotientTorsion(&bad)), Err(ModuleError::NotClosed)));
        assert!(matches!(m.fixed_dim("x", Subquotient::N), Err(ModuleError::UnknownClass(_))));
    }

    #[test]
    fn full_quotient_matches_n() {
        for m in [swap(), connecting_example(), two_torsion_generic(), single_constraint()] {
            let full = Subspace::full(m.ell(), m.d());
            for g in m.g1() {
                assert_eq!(
                    m.fixed_dim(&g.label, Subquotient::QuotientTorsion(&full)).unwrap(),
                    m.fixed_dim(&g.label, Subquotient::N).unwrap()
                );
            }
        }
    }

    #[test]
    fn connecting_map_regression() {
        let m = connecting_example();
        let c = m.connecting_map("s").unwrap();
        assert_eq!(c.source.len(), 2);
        assert_eq!(c.matrix.row_vecs(), vec![vec![0, 0], vec![1, 0]]);
        let t = trivial(3, 2);
        assert!(t.connecting_map("1").unwrap().matrix.is_zero());
        let s = swap();
        let c = s.connecting_map("1").unwrap();
        assert!(c.matrix.is_zero());
        assert_eq!(c.projection.rows(), 2);
    }

    #[test]
    fn scalars_commute_and_order_three_depends_on_squares() {
        let m = two_torsion_generic();
        assert!(m.commutes_with_connecting(&FieldMatrix::identity(2, 2)).unwrap());
        assert!(!m.commutes_with_connecting(&order_three()).unwrap());
        assert!(two_torsion_minus_squares().commutes_with_connecting(&order_three()).unwrap());
        let t = trivial(5, 2);
        for c in 1..5 {
            assert!(t.commutes_with_connecting(&FieldMatrix::identity(5, 2).scale(c)).unwrap());
        }
        let s = swap();
        let skew = FieldMatrix::from_rows(2, &[vec![1, 1], vec![0, 1]]).unwrap();
        assert!(matches!(s.commutes_with_connecting(&skew), Err(ModuleError::NotEquivariant(_))));
    }

    #[test]
    fn tamagawa_ratios() {
        let m = swap();
        let diag = line(2, 2, &[1, 1]);
        let zero = Subspace::zero(2, 2);
        assert_eq!(m.tamagawa_ratio(&zero, &["s", "1", "s"]).unwrap(), int(1));
        assert_eq!(m.tamagawa_ratio::<&str>(&diag, &[]).unwrap(), int(1));
        assert_eq!(m.tamagawa_ratio(&diag, &["s", "s"]).unwrap(), int(4));
        assert!(matches!(m.tamagawa_ratio(&diag, &["q"]), Err(ModuleError::UnknownClass(_))));
        let r = m.is_favored(&["s"]).unwrap();
        assert!(!r.favored);
        assert_eq!(r.worst, diag);
        assert_eq!(r.max_ratio, int(2));
        assert!(m.is_favored::<&str>(&[]).unwrap().favored);
        assert!(one_dim(3, 1).is_favored(&["s", "s", "1"]).unwrap().favored);
    }

    #[test]
    fn cofavored_checks() {
        let m = swap();
        assert!(m.is_cofavored(&Subspace::zero(2, 2)).unwrap());
        assert!(m.is_cofavored(&Subspace::full(2, 2)).unwrap());
        assert!(!m.is_cofavored(&line(2, 2, &[1, 1])).unwrap());
        assert!(m.is_uncofavored().unwrap());
    }

    #[test]
    fn potential_favor_outcomes() {
        let r = one_dim(2, 1).is_potentially_favored().unwrap();
        assert!(r.is_potentially_favored() && r.verify());

        let r = single_constraint().is_potentially_favored().unwrap();
        assert_eq!(r.f_vectors, vec![vec![1, -1]]);
        assert!(r.is_potentially_favored() && r.verify());

        let r = symmetric_cancellation().is_potentially_favored().unwrap();
        assert_eq!(r.f_vectors, vec![vec![1, -1], vec![1, 1], vec![-1, 1]]);
        let half = crate::exact::ratio(1, 2);
        let expected = vec![half.clone(), BigRational::zero(), half];
        assert_eq!(r.outcome, FavorOutcome::ConvexCertificate { lambda: expected });
        assert!(!r.is_potentially_favored() && r.verify());

        let r = swap().is_potentially_favored().unwrap();
        assert_eq!(r.outcome, FavorOutcome::SuperUnfavored { index: 0 });
        assert!(r.verify());
    }

    #[test]
    fn superlative_lp_edge_cases() {
        assert!(matches!(superlative_lp(&[]), FavorOutcome::Superlative { .. }));
        let out = superlative_lp(&[vec![2, 1], vec![1, 3]]);
        assert!(verify_outcome(&[vec![2, 1], vec![1, 3]], &out));
        let out = superlative_lp(&[vec![1, 0], vec![-1, 0], vec![0, 1]]);
        assert!(matches!(out, FavorOutcome::ConvexCertificate { .. }));
        assert!(verify_outcome(&[vec![1, 0], vec![-1, 0], vec![0, 1]], &out));
    }

    #[test]
    fn powers_of_trivial_module() {
        let m = trivial(2, 1);
        let r = verify_cofavored_powers(&m, 2).unwrap();
        assert_eq!(r.cofavored.len(), 2 + 3);
        assert!(r.holds() && r.tensor_not_cofavored.is_empty());
        let r = verify_cofavored_powers(&trivial(3, 1), 2).unwrap();
        assert_eq!(r.cofavored.len(), 3 + 3);
        let r = verify_cofavored_powers(&swap(), 1).unwrap();
        assert_eq!(r.cofavored.len(), 2);
    }

    #[test]
    fn direct_sum_graphs() {
        let (n1, n2, beta) = non_commuting_pair();
        assert!(!hom_commutes_with_connecting(&n1, &n2, &beta).unwrap());
        let sum = GaloisModuleSpec::direct_sum(&n1, &n2).unwrap();
        let graph = graph_submodule(&n1, &n2, &sum, &beta);
        assert!(!sum.is_cofavored(&graph).unwrap());
        let r = verify_direct_sum(&n1, &n2).unwrap();
        assert!(r.matches(), "{r:?}");
        assert!(!r.cofavored.contains(&graph));
    }

    #[test]
    fn cubic_powers_follow_tensor_form() {
        let m = irreducible_cubic(true);
        assert_eq!(m.g1().len(), 896);
        assert!(m.is_uncofavored().unwrap());
        let r = verify_cofavored_powers(&m, 2).unwrap();
        assert_eq!(r.cofavored.len(), 5);
        assert!(r.holds() && r.tensor_not_cofavored.is_empty());
        assert!(verify_direct_sum(&m, &m).unwrap().matches());

        // without b, F_8^× commutes and its graphs are extra cofavored submodules
        let m = irreducible_cubic(false);
        assert_eq!(m.g1().len(), 7);
        let r = verify_cofavored_powers(&m, 2).unwrap();
        assert_eq!(r.cofavored.len(), 3 + 8);
        assert_eq!(r.counterexamples.len(), 6);
        let d = verify_direct_sum(&m, &m).unwrap();
        assert!(d.matches());
        assert_eq!(d.commuting_maps.len(), 8);
    }

    #[test]
    fn fixture_round_trip_and_validation() {
        let m = two_torsion_generic();
        let fx = m.to_fixture();
        let json = serde_json::to_string(&fx).unwrap();
        let back: ModuleFixture = serde_json::from_str(&json).unwrap();
        let m2 = GaloisModuleSpec::from_fixture(&back).unwrap();
        assert_eq!(m2.to_fixture(), fx);

        let mut bad = fx.clone();
        bad.classes[1].matrix[2][0] = 1;
        assert!(matches!(GaloisModuleSpec::from_fixture(&bad), Err(ModuleError::Invalid(_))));

        let mut fx = swap().to_fixture();
        fx.mult_table = Some(vec![vec!["1".into(), "s".into()], vec!["s".into(), "1".into()]]);
        assert!(GaloisModuleSpec::from_fixture(&fx).is_ok());
        fx.mult_table = Some(vec![vec!["1".into(), "s".into()], vec!["s".into(), "s".into()]]);
        assert!(GaloisModuleSpec::from_fixture(&fx).is_err());
    }

    #[test]
    fn self_duality_candidate() {
        let mut fx = swap().to_fixture();
        fx.duals = Some(Box::new(swap().to_fixture()));
        fx.self_duality = Some(vec![vec![1, 0], vec![0, 1]]);
        let m = GaloisModuleSpec::from_fixture(&fx).unwrap();
        assert_eq!(m.check_self_duality().unwrap(), Some(true));
        assert_eq!(swap().check_self_duality().unwrap(), None);
    }
}
