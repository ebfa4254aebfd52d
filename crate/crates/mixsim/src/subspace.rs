//! Complex subspace primitives: vectors, column matrices, orthogonal
//! projectors, sequential projection, and the two alignment metrics
//! `phi` (vector vs. subspace) and `theta` (subspace vs. subspace).
//!
//! All projectors are built from an orthonormal basis obtained by modified
//! Gram-Schmidt with one reorthogonalization pass, never from an explicit
//! Gram-matrix inverse. A column counts as dependent when its residual after
//! projection drops below [`RANK_TOL`] times its original norm.

use num_complex::Complex64;
use thiserror::Error;

/// Complex scalar used throughout the crate.
pub type Cx = Complex64;

/// Relative residual below which a column is declared dependent.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SubspaceError {
    /// Columns are numerically rank-deficient; the caller must drop the
    /// dependent columns before building a strict projector.
    #[error("degenerate basis: column {column} is dependent on the columns before it")]
    DegenerateBasis { column: usize },
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

// ---------------------------------------------------------------------------
// Vectors and column matrices
// ---------------------------------------------------------------------------

/// Dense complex column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CVector {
    entries: Vec<Cx>,
}

impl CVector {
    pub fn new(entries: Vec<Cx>) -> Self {
        CVector { entries }
    }

    /// All-zero vector of dimension `n`.
    pub fn zeros(n: usize) -> Self {
        CVector {
            entries: vec![Cx::new(0.0, 0.0); n],
        }
    }

    /// Standard basis vector `e_i` of dimension `n`.
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.entries[i] = Cx::new(1.0, 0.0);
        v
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[Cx] {
        &self.entries
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Inner product `self^H other` (conjugate-linear in `self`).
    pub fn inner(&self, other: &CVector) -> Cx {
        debug_assert_eq!(self.dim(), other.dim());
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(Cx::new(0.0, 0.0), |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, s: Cx) -> CVector {
        CVector {
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    /// Unit vector in the same direction; `None` for (near-)zero input.
    pub fn normalized(&self) -> Option<CVector> {
        let n = self.norm();
        if n <= 0.0 || !n.is_finite() {
            return None;
        }
        Some(self.scaled(Cx::new(1.0 / n, 0.0)))
    }

    /// In-place `self -= c * other`.
    pub fn sub_scaled(&mut self, c: Cx, other: &CVector) {
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a -= c * b;
        }
    }

    /// In-place `self += c * other`.
    pub fn add_scaled(&mut self, c: Cx, other: &CVector) {
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += c * b;
        }
    }
}

/// Complex matrix stored as a list of columns of common dimension.
/// May be empty (zero columns), which several operations treat specially.
#[derive(Debug, Clone)]
pub struct CMatrix {
    dim: usize,
    cols: Vec<CVector>,
}

impl CMatrix {
    pub fn empty(dim: usize) -> Self {
        CMatrix { dim, cols: Vec::new() }
    }

    pub fn from_cols(dim: usize, cols: Vec<CVector>) -> Result<Self, SubspaceError> {
        for c in &cols {
            if c.dim() != dim {
                return Err(SubspaceError::DimensionMismatch {
                    expected: dim,
                    got: c.dim(),
                });
            }
        }
        Ok(CMatrix { dim, cols })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    pub fn col(&self, i: usize) -> &CVector {
        &self.cols[i]
    }

    pub fn cols(&self) -> &[CVector] {
        &self.cols
    }

    pub fn push_col(&mut self, c: CVector) {
        assert_eq!(c.dim(), self.dim);
        self.cols.push(c);
    }

    /// Horizontal concatenation `[A, B, ...]`.
    pub fn hstack(parts: &[&CMatrix]) -> CMatrix {
        let dim = parts.first().map(|m| m.dim).unwrap_or(0);
        let mut cols = Vec::new();
        for p in parts {
            assert_eq!(p.dim, dim);
            cols.extend(p.cols.iter().cloned());
        }
        CMatrix { dim, cols }
    }
}

// ---------------------------------------------------------------------------
// Orthonormal bases
// ---------------------------------------------------------------------------

/// Orthonormal basis for the span of a set of columns.
///
/// Built by modified Gram-Schmidt with one reorthogonalization pass; the
/// strict constructor rejects dependent columns while the spanning
/// constructor silently drops them (the span is unchanged either way).
#[derive(Debug, Clone)]
pub struct OrthoBasis {
    dim: usize,
    q: Vec<CVector>,
}

enum Dependent {
    Reject,
    Drop,
}

impl OrthoBasis {
    /// Basis requiring every input column to be independent.
    pub fn new_strict(m: &CMatrix) -> Result<Self, SubspaceError> {
        Self::build(m.dim(), m.cols(), Dependent::Reject)
    }

    /// Basis for the span; dependent columns are dropped.
    pub fn new_spanning(m: &CMatrix) -> Self {
        Self::build(m.dim(), m.cols(), Dependent::Drop).expect("drop mode cannot fail")
    }

    /// Spanning basis directly from a column slice.
    pub fn spanning_cols(dim: usize, cols: &[CVector]) -> Self {
        Self::build(dim, cols, Dependent::Drop).expect("drop mode cannot fail")
    }

    fn build(dim: usize, cols: &[CVector], on_dep: Dependent) -> Result<Self, SubspaceError> {
        let mut basis = OrthoBasis { dim, q: Vec::with_capacity(cols.len()) };
        for (idx, c) in cols.iter().enumerate() {
            match basis.try_extend(c) {
                Some(()) => {}
                None => match on_dep {
                    Dependent::Reject => {
                        return Err(SubspaceError::DegenerateBasis { column: idx })
                    }
                    Dependent::Drop => {}
                },
            }
        }
        Ok(basis)
    }

    /// Orthogonalize `c` against the current basis and append it.
    /// Returns `None` when `c` is dependent (residual below tolerance).
    fn try_extend(&mut self, c: &CVector) -> Option<()> {
        debug_assert_eq!(c.dim(), self.dim);
        let orig = c.norm();
        let mut v = c.clone();
        // Two MGS passes keep Q^H Q = I well below the projector tolerances.
        for _ in 0..2 {
            for q in &self.q {
                let coef = q.inner(&v);
                v.sub_scaled(coef, q);
            }
        }
        let res = v.norm();
        if res < RANK_TOL * orig || res == 0.0 {
            return None;
        }
        self.q.push(v.scaled(Cx::new(1.0 / res, 0.0)));
        Some(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.q.len()
    }

    pub fn vectors(&self) -> &[CVector] {
        &self.q
    }

    /// `Pi x`: projection of `x` onto the spanned subspace.
    pub fn project(&self, x: &CVector) -> CVector {
        let mut out = CVector::zeros(self.dim);
        for q in &self.q {
            let coef = q.inner(x);
            for (o, qe) in out.entries.iter_mut().zip(&q.entries) {
                *o += coef * qe;
            }
        }
        out
    }

    /// `Pi^perp x = x - Q Q^H x`.
    pub fn project_complement(&self, x: &CVector) -> CVector {
        let mut v = x.clone();
        for q in &self.q {
            let coef = q.inner(&v);
            v.sub_scaled(coef, q);
        }
        v
    }

    /// `||Pi x||^2`, computed as `sum_i |q_i^H x|^2`.
    pub fn projection_norm_sq(&self, x: &CVector) -> f64 {
        self.q.iter().map(|q| q.inner(x).norm_sqr()).sum()
    }

    /// `phi` against this span: `||Pi b||^2 / ||b||^2`, clamped to [0, 1].
    /// Zero-norm `b` yields 0.
    pub fn phi(&self, b: &CVector) -> f64 {
        let n2 = b.norm_sq();
        if n2 <= 0.0 {
            return 0.0;
        }
        (self.projection_norm_sq(b) / n2).clamp(0.0, 1.0)
    }
}

// ---------------------------------------------------------------------------
// Projectors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectorKind {
    OntoSubspace,
    OntoComplement,
}

/// Explicit N x N orthogonal projection matrix. Idempotent and Hermitian by
/// construction (`Q Q^H` or `I - Q Q^H` for orthonormal `Q`).
#[derive(Debug, Clone)]
pub struct Projector {
    dim: usize,
    kind: ProjectorKind,
    /// Row-major N x N entries.
    mat: Vec<Cx>,
}

impl Projector {
    fn from_basis(basis: &OrthoBasis, kind: ProjectorKind) -> Self {
        let n = basis.dim();
        let mut mat = vec![Cx::new(0.0, 0.0); n * n];
        if kind == ProjectorKind::OntoComplement {
            for i in 0..n {
                mat[i * n + i] = Cx::new(1.0, 0.0);
            }
        }
        let sign = match kind {
            ProjectorKind::OntoSubspace => 1.0,
            ProjectorKind::OntoComplement => -1.0,
        };
        for q in basis.vectors() {
            let qs = q.as_slice();
            for i in 0..n {
                let qi = qs[i] * sign;
                for j in 0..n {
                    mat[i * n + j] += qi * qs[j].conj();
                }
            }
        }
        Projector { dim: n, kind, mat }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_basis(&OrthoBasis { dim: n, q: Vec::new() }, ProjectorKind::OntoComplement)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> ProjectorKind {
        self.kind
    }

    /// Entry (i, j) of the projection matrix.
    pub fn entry(&self, i: usize, j: usize) -> Cx {
        self.mat[i * self.dim + j]
    }

    pub fn apply(&self, x: &CVector) -> CVector {
        debug_assert_eq!(x.dim(), self.dim);
        let xs = x.as_slice();
        let entries = (0..self.dim)
            .map(|i| {
                let row = &self.mat[i * self.dim..(i + 1) * self.dim];
                row.iter()
                    .zip(xs)
                    .fold(Cx::new(0.0, 0.0), |acc, (m, x)| acc + m * x)
            })
            .collect();
        CVector::new(entries)
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Projector onto the orthogonal complement of the column span of `a`.
/// An empty `a` yields the identity. Dependent columns are rejected.
pub fn projector_orth(a: &CMatrix) -> Result<Projector, SubspaceError> {
    let basis = OrthoBasis::new_strict(a)?;
    Ok(Projector::from_basis(&basis, ProjectorKind::OntoComplement))
}

/// Projector onto the column span of `a`. An empty `a` yields the zero map.
pub fn projector_onto(a: &CMatrix) -> Result<Projector, SubspaceError> {
    let basis = OrthoBasis::new_strict(a)?;
    Ok(Projector::from_basis(&basis, ProjectorKind::OntoSubspace))
}

/// Project `x` onto the orthogonal complement of `[A_1, ..., A_n]` by the
/// stage-wise cascade: at stage `s`, both the running vector and every later
/// stage matrix are projected off the span accumulated so far.
///
/// A stage whose columns are entirely absorbed by earlier stages is skipped.
/// A stage that is rank-deficient among its own surviving columns is an
/// error.
pub fn sequential_project(x: &CVector, stages: &[CMatrix]) -> Result<CVector, SubspaceError> {
    let dim = x.dim();
    let total_cols: usize = stages.iter().map(|m| m.n_cols()).sum();
    if total_cols > dim {
        return Err(SubspaceError::InvalidInput(
            "stage concatenation must be a tall matrix",
        ));
    }
    let mut out = x.clone();
    // The accumulated basis spans all stages processed so far.
    let mut acc = OrthoBasis { dim, q: Vec::new() };
    for stage in stages {
        let mut stage_basis = OrthoBasis { dim, q: Vec::new() };
        for (idx, c) in stage.cols().iter().enumerate() {
            let orig = c.norm();
            let mut v = acc.project_complement(c);
            v = acc.project_complement(&v);
            if v.norm() < RANK_TOL * orig {
                // Absorbed by earlier stages; drop it.
                continue;
            }
            let before = stage_basis.rank();
            let mut w = stage_basis.project_complement(&v);
            w = stage_basis.project_complement(&w);
            if w.norm() < RANK_TOL * orig {
                return Err(SubspaceError::DegenerateBasis { column: idx });
            }
            stage_basis.q.push(w.scaled(Cx::new(1.0 / w.norm(), 0.0)));
            debug_assert_eq!(stage_basis.rank(), before + 1);
        }
        if stage_basis.rank() == 0 {
            continue;
        }
        out = stage_basis.project_complement(&out);
        // Stage vectors are already orthogonal to `acc`, so appending keeps
        // the accumulated set orthonormal.
        acc.q.extend(stage_basis.q);
    }
    Ok(out)
}

/// Alignment of vector `b` with the column span of `a`:
/// `||A (A^H A)^{-1} A^H b||^2 / ||b||^2`, in [0, 1].
///
/// For a single-column `a` this is the squared cosine of the angle between
/// the two vectors.
pub fn phi(a: &CMatrix, b: &CVector) -> Result<f64, SubspaceError> {
    if a.is_empty() {
        return Err(SubspaceError::InvalidInput("phi requires a non-empty matrix"));
    }
    if b.norm_sq() <= 0.0 {
        return Err(SubspaceError::InvalidInput("phi requires a nonzero vector"));
    }
    let basis = OrthoBasis::new_strict(a)?;
    Ok(basis.phi(b))
}

/// Alignment of two column spans: the largest `phi` of any column of one
/// matrix against the span of the other. Zero when either matrix is empty;
/// 1 when some column of one lies inside the span of the other.
pub fn theta(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let qa = OrthoBasis::new_spanning(a);
    let qb = OrthoBasis::new_spanning(b);
    theta_from_bases(&qa, a.cols(), &qb, b.cols())
}

/// `theta` with pre-built spanning bases (hot path for the grouping search).
pub(crate) fn theta_from_bases(
    qa: &OrthoBasis,
    a_cols: &[CVector],
    qb: &OrthoBasis,
    b_cols: &[CVector],
) -> f64 {
    let mut best = 0.0f64;
    for b in b_cols {
        best = best.max(qa.phi(b));
    }
    for a in a_cols {
        best = best.max(qb.phi(a));
    }
    best
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
