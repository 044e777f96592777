//! Composite Hilbert space `qutrit ⊗ a ⊗ b`, factor matrices, and operators
//! stored either densely or as sums of Kronecker-product terms.
//!
//! The flat basis index of `|q, n_a, n_b⟩` is `(q·dim_a + n_a)·dim_b + n_b`,
//! so the resonator-b Fock number varies fastest.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Elementwise tolerance behind the hermiticity flag.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Qutrit level. Index map is fixed: g→0, e→1, f→2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    G,
    E,
    F,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::G, Level::E, Level::F];

    pub fn index(self) -> usize {
        match self {
            Level::G => 0,
            Level::E => 1,
            Level::F => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Level> {
        Level::ALL.get(i).copied()
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g" | "G" => Ok(Level::G),
            "e" | "E" => Ok(Level::E),
            "f" | "F" => Ok(Level::F),
            other => Err(Error::UnknownLevel(other.to_string())),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Level::G => "g",
            Level::E => "e",
            Level::F => "f",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpace {
    dim_a: usize,
    dim_b: usize,
}

impl HilbertSpace {
    pub const DIM_QUTRIT: usize = 3;

    pub fn new(dim_a: usize, dim_b: usize) -> Result<Self> {
        if dim_a < 2 {
            return Err(Error::DimensionTooSmall(dim_a));
        }
        if dim_b < 2 {
            return Err(Error::DimensionTooSmall(dim_b));
        }
        Ok(Self { dim_a, dim_b })
    }

    pub fn dim_qutrit(&self) -> usize {
        Self::DIM_QUTRIT
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn total(&self) -> usize {
        Self::DIM_QUTRIT * self.dim_a * self.dim_b
    }

    /// Flat index of `|level, n_a, n_b⟩`. Panics if a Fock number is out of range.
    pub fn index(&self, level: Level, n_a: usize, n_b: usize) -> usize {
        assert!(n_a < self.dim_a && n_b < self.dim_b, "Fock label out of range");
        (level.index() * self.dim_a + n_a) * self.dim_b + n_b
    }

    pub fn labels(&self, index: usize) -> (Level, usize, usize) {
        assert!(index < self.total(), "flat index out of range");
        let n_b = index % self.dim_b;
        let rest = index / self.dim_b;
        let n_a = rest % self.dim_a;
        let q = rest / self.dim_a;
        (Level::from_index(q).expect("qutrit index"), n_a, n_b)
    }

    pub(crate) fn ensure_same(&self, other: &HilbertSpace) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpaceMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }
}

impl fmt::Display for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "qutrit(3) ⊗ a({}) ⊗ b({})", self.dim_a, self.dim_b)
    }
}

// ---------------------------------------------------------------------------
// Factor matrices

/// Kronecker product, `(A⊗B)[i·rB + k, j·cB + l] = A[i,j]·B[k,l]`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Truncated annihilation operator with `⟨n−1|a|n⟩ = √n`.
pub fn annihilation(dim: usize) -> Result<CMatrix> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    let mut m = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(m)
}

pub fn creation(dim: usize) -> Result<CMatrix> {
    Ok(annihilation(dim)?.adjoint())
}

pub fn number(dim: usize) -> Result<CMatrix> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    Ok(CMatrix::from_diagonal(&CVector::from_iterator(
        dim,
        (0..dim).map(|n| C64::new(n as f64, 0.0)),
    )))
}

/// `|row⟩⟨col|` on the qutrit.
pub fn qutrit_op(row: Level, col: Level) -> CMatrix {
    let mut m = CMatrix::zeros(3, 3);
    m[(row.index(), col.index())] = ONE;
    m
}

pub fn qutrit_op_from_labels(row: &str, col: &str) -> Result<CMatrix> {
    Ok(qutrit_op(row.parse()?, col.parse()?))
}

/// Largest elementwise `|M − M†|`.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    sym.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `exp(−i·H·t)` for Hermitian `H`, through its eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let w = &eig.eigenvectors;
    let mut scaled = w.clone();
    for (j, &e) in eig.eigenvalues.iter().enumerate() {
        let phase = C64::from_polar(1.0, -e * t);
        scaled.column_mut(j).iter_mut().for_each(|v| *v *= phase);
    }
    scaled * w.adjoint()
}

// ---------------------------------------------------------------------------
// Monomial (one nonzero per row) maps

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapEntry {
    pub row: usize,
    pub col: usize,
    pub weight: C64,
}

/// Operator with at most one nonzero per row, kept as `(row, col, weight)`
/// triples sorted by row. Every ladder, transition and projector operator on
/// the composite space has this shape, and so do their Kronecker products.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialMap {
    dim: usize,
    entries: Vec<MapEntry>,
}

fn factor_rows(m: &CMatrix) -> Option<Vec<Option<(usize, C64)>>> {
    let mut rows = Vec::with_capacity(m.nrows());
    for i in 0..m.nrows() {
        let mut hit = None;
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            if v != ZERO {
                if hit.is_some() {
                    return None;
                }
                hit = Some((j, v));
            }
        }
        rows.push(hit);
    }
    Some(rows)
}

impl MonomialMap {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[MapEntry] {
        &self.entries
    }

    /// `out[row] += scale · weight · x[col]`.
    pub fn apply_add(&self, x: &[C64], out: &mut [C64], scale: C64) {
        for e in &self.entries {
            out[e.row] += scale * e.weight * x[e.col];
        }
    }

    /// Diagonal of `M†M`.
    pub fn gram_diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim];
        for e in &self.entries {
            d[e.col] += e.weight.norm_sqr();
        }
        d
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries.iter().all(|e| e.row == e.col)
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for e in &self.entries {
            m[(e.row, e.col)] += e.weight;
        }
        m
    }
}

// ---------------------------------------------------------------------------
// Kronecker terms

/// `coeff · Q ⊗ A ⊗ B` with Q 3×3, A `dim_a`², B `dim_b`².
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: C64,
    pub qutrit: CMatrix,
    pub a: CMatrix,
    pub b: CMatrix,
}

impl Term {
    pub fn new(coeff: C64, qutrit: CMatrix, a: CMatrix, b: CMatrix) -> Self {
        Self {
            coeff,
            qutrit,
            a,
            b,
        }
    }

    fn check(&self, space: &HilbertSpace) -> Result<()> {
        let dims = [
            (&self.qutrit, 3),
            (&self.a, space.dim_a()),
            (&self.b, space.dim_b()),
        ];
        for (m, d) in dims {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::Shape {
                    expected: format!("{d}x{d} factor"),
                    got: format!("{}x{}", m.nrows(), m.ncols()),
                });
            }
        }
        Ok(())
    }

    pub fn scaled(&self, s: C64) -> Term {
        Term {
            coeff: self.coeff * s,
            ..self.clone()
        }
    }

    pub fn adjoint(&self) -> Term {
        Term::new(
            self.coeff.conj(),
            self.qutrit.adjoint(),
            self.a.adjoint(),
            self.b.adjoint(),
        )
    }

    pub fn transpose(&self) -> Term {
        Term::new(
            self.coeff,
            self.qutrit.transpose(),
            self.a.transpose(),
            self.b.transpose(),
        )
    }

    pub fn to_dense(&self) -> CMatrix {
        kron(&kron(&self.qutrit, &self.a), &self.b) * self.coeff
    }

    /// Factor-by-factor application: `out += scale·coeff·(Q⊗A⊗B)·x`.
    pub fn apply_add(&self, space: &HilbertSpace, x: &[C64], out: &mut [C64], scale: C64) {
        let (da, db) = (space.dim_a(), space.dim_b());
        let n = space.total();
        debug_assert_eq!(x.len(), n);

        // B on the fastest axis.
        let mut t1 = vec![ZERO; n];
        for blk in 0..3 * da {
            let base = blk * db;
            for k in 0..db {
                let mut acc = ZERO;
                for l in 0..db {
                    let v = self.b[(k, l)];
                    if v != ZERO {
                        acc += v * x[base + l];
                    }
                }
                t1[base + k] = acc;
            }
        }
        // A on the middle axis.
        let mut t2 = vec![ZERO; n];
        for q in 0..3 {
            for nb in 0..db {
                for i in 0..da {
                    let mut acc = ZERO;
                    for j in 0..da {
                        let v = self.a[(i, j)];
                        if v != ZERO {
                            acc += v * t1[(q * da + j) * db + nb];
                        }
                    }
                    t2[(q * da + i) * db + nb] = acc;
                }
            }
        }
        // Q on the slowest axis.
        let stride = da * db;
        let s = scale * self.coeff;
        for r in 0..stride {
            for q in 0..3 {
                let mut acc = ZERO;
                for p in 0..3 {
                    let v = self.qutrit[(q, p)];
                    if v != ZERO {
                        acc += v * t2[p * stride + r];
                    }
                }
                out[q * stride + r] += s * acc;
            }
        }
    }

    /// The composite one-nonzero-per-row map, when every factor has that shape.
    pub fn monomial(&self, space: &HilbertSpace) -> Option<MonomialMap> {
        let q = factor_rows(&self.qutrit)?;
        let a = factor_rows(&self.a)?;
        let b = factor_rows(&self.b)?;
        let mut entries = Vec::new();
        for (qi, qr) in q.iter().enumerate() {
            let Some((qj, qw)) = qr else { continue };
            for (ai, ar) in a.iter().enumerate() {
                let Some((aj, aw)) = ar else { continue };
                for (bi, br) in b.iter().enumerate() {
                    let Some((bj, bw)) = br else { continue };
                    let weight = self.coeff * qw * aw * bw;
                    if weight == ZERO {
                        continue;
                    }
                    entries.push(MapEntry {
                        row: (qi * space.dim_a() + ai) * space.dim_b() + bi,
                        col: (qj * space.dim_a() + aj) * space.dim_b() + bj,
                        weight,
                    });
                }
            }
        }
        Some(MonomialMap {
            dim: space.total(),
            entries,
        })
    }
}

// ---------------------------------------------------------------------------
// Operators

#[derive(Clone, Debug, PartialEq)]
pub enum Representation {
    Dense(CMatrix),
    Structured(Vec<Term>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QOperator {
    space: HilbertSpace,
    repr: Representation,
    hermitian: bool,
}

impl QOperator {
    pub fn dense(space: HilbertSpace, m: CMatrix) -> Result<Self> {
        let n = space.total();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Shape {
                expected: format!("{n}x{n}"),
                got: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        Ok(Self {
            space,
            repr: Representation::Dense(m),
            hermitian: false,
        })
    }

    pub fn structured(space: HilbertSpace, terms: Vec<Term>) -> Result<Self> {
        for t in &terms {
            t.check(&space)?;
        }
        Ok(Self {
            space,
            repr: Representation::Structured(terms),
            hermitian: false,
        })
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let t = Term::new(
            ONE,
            identity(3),
            identity(space.dim_a()),
            identity(space.dim_b()),
        );
        Self {
            space,
            repr: Representation::Structured(vec![t]),
            hermitian: true,
        }
    }

    /// Single-term operator `coeff · Q ⊗ A ⊗ B`.
    pub fn product(space: HilbertSpace, coeff: C64, q: CMatrix, a: CMatrix, b: CMatrix) -> Result<Self> {
        Self::structured(space, vec![Term::new(coeff, q, a, b)])
    }

    /// Sets the hermiticity flag after checking `O = O†` elementwise.
    pub fn into_hermitian(mut self) -> Result<Self> {
        let dev = hermiticity_deviation(&self.to_dense());
        if dev > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "operator flagged Hermitian deviates by {dev:e}"
            )));
        }
        self.hermitian = true;
        Ok(self)
    }

    pub fn is_hermitian_flagged(&self) -> bool {
        self.hermitian
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn terms(&self) -> Option<&[Term]> {
        match &self.repr {
            Representation::Structured(t) => Some(t),
            Representation::Dense(_) => None,
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        match &self.repr {
            Representation::Dense(m) => m.clone(),
            Representation::Structured(terms) => {
                let n = self.space.total();
                terms
                    .iter()
                    .fold(CMatrix::zeros(n, n), |acc, t| acc + t.to_dense())
            }
        }
    }

    pub fn to_dense_operator(&self) -> QOperator {
        QOperator {
            space: self.space,
            repr: Representation::Dense(self.to_dense()),
            hermitian: self.hermitian,
        }
    }

    pub fn adjoint(&self) -> QOperator {
        let repr = match &self.repr {
            Representation::Dense(m) => Representation::Dense(m.adjoint()),
            Representation::Structured(t) => {
                Representation::Structured(t.iter().map(Term::adjoint).collect())
            }
        };
        QOperator {
            space: self.space,
            repr,
            hermitian: self.hermitian,
        }
    }

    /// Sum of two operators on the same space; structured + structured stays structured.
    pub fn plus(&self, other: &QOperator) -> Result<QOperator> {
        self.space.ensure_same(&other.space)?;
        let repr = match (&self.repr, &other.repr) {
            (Representation::Structured(a), Representation::Structured(b)) => {
                Representation::Structured(a.iter().chain(b.iter()).cloned().collect())
            }
            _ => Representation::Dense(self.to_dense() + other.to_dense()),
        };
        Ok(QOperator {
            space: self.space,
            repr,
            hermitian: false,
        })
    }

    /// Product `self · other` as a dense operator.
    pub fn times(&self, other: &QOperator) -> Result<QOperator> {
        self.space.ensure_same(&other.space)?;
        QOperator::dense(self.space, self.to_dense() * other.to_dense())
    }

    /// `out += scale · O · x` on a raw amplitude slice.
    pub fn apply_add(&self, x: &[C64], out: &mut [C64], scale: C64) {
        match &self.repr {
            Representation::Dense(m) => {
                let n = m.nrows();
                for j in 0..n {
                    let xj = scale * x[j];
                    if xj == ZERO {
                        continue;
                    }
                    for i in 0..n {
                        out[i] += m[(i, j)] * xj;
                    }
                }
            }
            Representation::Structured(terms) => {
                for t in terms {
                    t.apply_add(&self.space, x, out, scale);
                }
            }
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        let n = self.space.total();
        if len != n {
            return Err(Error::Shape {
                expected: format!("length {n}"),
                got: format!("length {len}"),
            });
        }
        Ok(())
    }

    pub fn apply_vector(&self, x: &CVector) -> Result<CVector> {
        self.check_len(x.len())?;
        let mut out = CVector::zeros(x.len());
        self.apply_add(x.as_slice(), out.as_mut_slice(), ONE);
        Ok(out)
    }

    /// `O · ρ`.
    pub fn mul_left(&self, rho: &CMatrix) -> Result<CMatrix> {
        self.check_len(rho.nrows())?;
        self.check_len(rho.ncols())?;
        let n = rho.nrows();
        let mut out = CMatrix::zeros(n, n);
        for j in 0..n {
            let col: Vec<C64> = rho.column(j).iter().copied().collect();
            let mut dst = vec![ZERO; n];
            self.apply_add(&col, &mut dst, ONE);
            out.column_mut(j).copy_from_slice(&dst);
        }
        Ok(out)
    }

    /// `ρ · O`, computed as `(O^T ρ^T)^T` without forming `O`.
    pub fn mul_right(&self, rho: &CMatrix) -> Result<CMatrix> {
        let transposed = match &self.repr {
            Representation::Dense(m) => QOperator::dense(self.space, m.transpose())?,
            Representation::Structured(t) => {
                QOperator::structured(self.space, t.iter().map(Term::transpose).collect())?
            }
        };
        Ok(transposed.mul_left(&rho.transpose())?.transpose())
    }

    /// Applies the operator. Pure states map to `O|ψ⟩`, density matrices to
    /// `O ρ O†`. The result is not renormalised.
    pub fn apply(&self, state: &QState) -> Result<QState> {
        self.space.ensure_same(&state.space)?;
        let kind = match &state.kind {
            StateKind::Pure(v) => StateKind::Pure(self.apply_vector(v)?),
            StateKind::Density(rho) => {
                let left = self.mul_left(rho)?;
                StateKind::Density(self.adjoint().mul_right(&left)?)
            }
        };
        Ok(QState {
            space: state.space,
            kind,
        })
    }

    /// `⟨ψ|O|ψ⟩` or `Tr(O ρ)`.
    pub fn expectation(&self, state: &QState) -> Result<C64> {
        self.space.ensure_same(&state.space)?;
        match &state.kind {
            StateKind::Pure(v) => Ok(v.dotc(&self.apply_vector(v)?)),
            StateKind::Density(rho) => Ok(self.mul_left(rho)?.trace()),
        }
    }

    /// Compiles every structured term into a [`MonomialMap`]; `None` if some
    /// factor has more than one nonzero per row, or the operator is dense.
    pub fn monomial_terms(&self) -> Option<Vec<MonomialMap>> {
        match &self.repr {
            Representation::Dense(_) => None,
            Representation::Structured(t) => t.iter().map(|t| t.monomial(&self.space)).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// States

/// Normalisation tolerance for pure states and trace tolerance for density matrices.
pub const STATE_NORM_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted when constructing a density matrix.
pub const STATE_POSITIVITY_TOL: f64 = -1e-8;

#[derive(Clone, Debug, PartialEq)]
pub enum StateKind {
    Pure(CVector),
    Density(CMatrix),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QState {
    space: HilbertSpace,
    kind: StateKind,
}

impl QState {
    pub fn pure(space: HilbertSpace, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.total() {
            return Err(Error::Shape {
                expected: format!("length {}", space.total()),
                got: format!("length {}", amplitudes.len()),
            });
        }
        let norm2 = amplitudes.norm_squared();
        if (norm2 - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::InvalidState(format!("‖ψ‖² = {norm2}")));
        }
        Ok(Self {
            space,
            kind: StateKind::Pure(amplitudes),
        })
    }

    /// Rescales to unit norm; rejects the null vector.
    pub fn pure_normalized(space: HilbertSpace, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm < 1e-300 || !norm.is_finite() {
            return Err(Error::InvalidState("null vector cannot be normalised".into()));
        }
        Self::pure(space, amplitudes.unscale(norm))
    }

    pub fn density(space: HilbertSpace, rho: CMatrix) -> Result<Self> {
        let n = space.total();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::Shape {
                expected: format!("{n}x{n}"),
                got: format!("{}x{}", rho.nrows(), rho.ncols()),
            });
        }
        let tr = rho.trace();
        if (tr - ONE).norm() > STATE_NORM_TOL {
            return Err(Error::InvalidState(format!("Tr ρ = {tr}")));
        }
        let dev = hermiticity_deviation(&rho);
        if dev > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("ρ not Hermitian (deviation {dev:e})")));
        }
        let min_eig = min_eigenvalue(&rho);
        if min_eig < STATE_POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("ρ has eigenvalue {min_eig:e}")));
        }
        Ok(Self {
            space,
            kind: StateKind::Density(rho),
        })
    }

    /// Wraps a density matrix without checks. Used for integrator output,
    /// whose physicality is tracked separately by the run diagnostics.
    pub(crate) fn density_unchecked(space: HilbertSpace, rho: CMatrix) -> Self {
        Self {
            space,
            kind: StateKind::Density(rho),
        }
    }

    pub(crate) fn pure_unchecked(space: HilbertSpace, psi: CVector) -> Self {
        Self {
            space,
            kind: StateKind::Pure(psi),
        }
    }

    pub fn basis(space: HilbertSpace, level: Level, n_a: usize, n_b: usize) -> Self {
        let mut v = CVector::zeros(space.total());
        v[space.index(level, n_a, n_b)] = ONE;
        Self {
            space,
            kind: StateKind::Pure(v),
        }
    }

    /// Normalised `qutrit ⊗ a ⊗ b` product of single-factor amplitude vectors.
    pub fn product(space: HilbertSpace, qutrit: &CVector, a: &CVector, b: &CVector) -> Result<Self> {
        if qutrit.len() != 3 || a.len() != space.dim_a() || b.len() != space.dim_b() {
            return Err(Error::Shape {
                expected: format!("factor lengths 3, {}, {}", space.dim_a(), space.dim_b()),
                got: format!("{}, {}, {}", qutrit.len(), a.len(), b.len()),
            });
        }
        let v = qutrit.kronecker(a).kronecker(b);
        Self::pure_normalized(space, v)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn kind(&self) -> &StateKind {
        &self.kind
    }

    pub fn as_pure(&self) -> Option<&CVector> {
        match &self.kind {
            StateKind::Pure(v) => Some(v),
            StateKind::Density(_) => None,
        }
    }

    pub fn as_density(&self) -> Option<&CMatrix> {
        match &self.kind {
            StateKind::Density(m) => Some(m),
            StateKind::Pure(_) => None,
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.kind, StateKind::Pure(_))
    }

    /// Density matrix `|ψ⟩⟨ψ|` (or a clone when already mixed).
    pub fn to_density_matrix(&self) -> CMatrix {
        match &self.kind {
            StateKind::Pure(v) => v * v.adjoint(),
            StateKind::Density(m) => m.clone(),
        }
    }

    pub fn to_density(&self) -> QState {
        QState {
            space: self.space,
            kind: StateKind::Density(self.to_density_matrix()),
        }
    }

    /// `‖ψ‖²` or `Tr ρ`.
    pub fn weight(&self) -> f64 {
        match &self.kind {
            StateKind::Pure(v) => v.norm_squared(),
            StateKind::Density(m) => m.trace().re,
        }
    }
}
