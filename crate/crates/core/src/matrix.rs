//! Dense complex linear algebra.
//!
//! [`ComplexMatrix`] is a square matrix of `Complex64` entries and is the
//! carrier for operators, unitaries and density matrices throughout the
//! crate. [`Subspace`] holds an orthonormal basis of a linear subspace of
//! `C^n`; operator subspaces of `M_d` live in `C^{d^2}` under column-stacking
//! vectorisation, so that `vec(A X B) = (B^T ⊗ A) vec(X)`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default relative singular-value threshold for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Hermiticity tolerance, relative to the Frobenius norm.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense square complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix{}", self.0)
    }
}

impl ComplexMatrix {
    /// Wraps an nalgebra matrix, checking squareness and finiteness.
    pub fn new(inner: DMatrix<C64>) -> Result<Self> {
        if inner.nrows() != inner.ncols() {
            return Err(Error::InvalidMatrix(format!(
                "matrix must be square, got {}x{}",
                inner.nrows(),
                inner.ncols()
            )));
        }
        if inner.nrows() == 0 {
            return Err(Error::InvalidMatrix("dimension must be at least 1".into()));
        }
        if inner.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidMatrix("entries must be finite".into()));
        }
        Ok(Self(inner))
    }

    /// Internal constructor for results of operations on valid matrices.
    pub(crate) fn from_inner(inner: DMatrix<C64>) -> Self {
        debug_assert_eq!(inner.nrows(), inner.ncols());
        Self(inner)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    /// Builds a matrix from rows of complex entries.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::InvalidMatrix(format!(
                "row of length {} in a {n}-row matrix",
                bad.len()
            )));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Builds a matrix from rows of real entries.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| c(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, |i, j| if i == j { entries[i] } else { C64::default() })
    }

    /// The rank-one projector `|v><v|`.
    pub fn outer(v: &[C64]) -> Self {
        let n = v.len();
        Self::from_fn(n, |i, j| v[i] * v[j].conj())
    }

    /// Matrix unit `E_ij` in dimension `dim`.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim);
        m.0[(i, j)] = c(1.0, 0.0);
        m
    }

    /// All `dim^2` matrix units, in column-stacked order.
    pub fn units(dim: usize) -> Vec<Self> {
        (0..dim * dim)
            .map(|k| Self::unit(dim, k % dim, k / dim))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn determinant(&self) -> C64 {
        self.0.clone().determinant()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> f64 {
        self.0
            .clone()
            .singular_values()
            .iter()
            .fold(0.0_f64, |m, &s| m.max(s))
    }

    /// Sum of singular values.
    pub fn trace_norm(&self) -> f64 {
        self.0.clone().singular_values().iter().sum()
    }

    /// Hilbert–Schmidt inner product `tr(A^† B)`.
    pub fn hs_inner(&self, other: &Self) -> C64 {
        self.0.dotc(&other.0)
    }

    /// `‖M − M^†‖_F / max(‖M‖_F, tiny)`.
    pub fn hermitian_deviation(&self) -> f64 {
        let dev = (&self.0 - self.0.adjoint()).norm();
        let scale = self.0.norm();
        if scale == 0.0 {
            0.0
        } else {
            dev / scale
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// `(M + M^†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()).map(|z| z * 0.5))
    }

    /// `‖U^† U − I‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.0.adjoint() * &self.0 - DMatrix::<C64>::identity(self.dim(), self.dim())).norm()
    }

    /// `U A U^†`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        Self(&u.0 * &self.0 * u.0.adjoint())
    }

    /// `U^† A U`.
    pub fn conjugate_by_adjoint(&self, u: &Self) -> Self {
        Self(u.0.adjoint() * &self.0 * &u.0)
    }

    /// Column-stacking vectorisation.
    pub fn vectorize(&self) -> DVector<C64> {
        DVector::from_column_slice(self.0.as_slice())
    }

    /// Inverse of [`ComplexMatrix::vectorize`].
    pub fn unvectorize(v: &[C64]) -> Result<Self> {
        let n = (v.len() as f64).sqrt().round() as usize;
        if n * n != v.len() {
            return Err(Error::InvalidMatrix(format!(
                "vector of length {} is not a vectorised square matrix",
                v.len()
            )));
        }
        Self::new(DMatrix::from_column_slice(n, n, v))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(blocks: &[Self]) -> Self {
        let n: usize = blocks.iter().map(Self::dim).sum();
        let mut out = DMatrix::zeros(n, n);
        let mut off = 0;
        for b in blocks {
            let k = b.dim();
            out.view_mut((off, off), (k, k)).copy_from(&b.0);
            off += k;
        }
        Self(out)
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<C64>>::deserialize(d)?;
        ComplexMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl<'a> $tr<&'a ComplexMatrix> for &'a ComplexMatrix {
            type Output = ComplexMatrix;
            fn $m(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix(&self.0 $op &rhs.0)
            }
        }
        impl $tr<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $m(self, rhs: ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix(self.0 $op rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

/// Spectrum and eigenvectors of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Real eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let lambda: Vec<C64> = self.values.iter().map(|&x| c(x, 0.0)).collect();
        ComplexMatrix::diagonal(&lambda).conjugate_by(&self.vectors)
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let deviation = m.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let eig = m.hermitian_part().0.symmetric_eigen();
    let mut order: Vec<usize> = (0..m.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(m.dim(), m.dim(), |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEigen {
        values,
        vectors: ComplexMatrix(vectors),
    })
}

/// Kronecker product; the index of the first factor varies slowest.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(a.0.kronecker(&b.0))
}

/// Superoperator of `X ↦ A X B` under column stacking: `B^T ⊗ A`.
pub fn sandwich_superop(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    kron(&b.transpose(), a)
}

/// Orthonormal basis of a linear subspace of `C^n`.
#[derive(Clone, Debug)]
pub struct Subspace {
    ambient_dim: usize,
    basis: DMatrix<C64>,
    tol: f64,
}

impl Subspace {
    pub fn zero(ambient_dim: usize, tol: f64) -> Self {
        Self {
            ambient_dim,
            basis: DMatrix::zeros(ambient_dim, 0),
            tol,
        }
    }

    pub fn full(ambient_dim: usize, tol: f64) -> Self {
        Self {
            ambient_dim,
            basis: DMatrix::identity(ambient_dim, ambient_dim),
            tol,
        }
    }

    /// Orthonormal basis of the span of `vectors`.
    pub fn from_spanning(ambient_dim: usize, vectors: &[DVector<C64>], tol: f64) -> Self {
        if vectors.is_empty() {
            return Self::zero(ambient_dim, tol);
        }
        let m = DMatrix::from_columns(vectors);
        let basis = range_basis(&m, |s, smax| s > tol * smax);
        Self {
            ambient_dim,
            basis,
            tol,
        }
    }

    /// Span of vectorised matrices.
    pub fn from_matrices(mats: &[ComplexMatrix], tol: f64) -> Self {
        let n = mats.first().map_or(0, |m| m.dim() * m.dim());
        let vecs: Vec<_> = mats.iter().map(ComplexMatrix::vectorize).collect();
        Self::from_spanning(n, &vecs, tol)
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Basis vectors as the columns of an `ambient_dim × dim` matrix.
    pub fn basis(&self) -> &DMatrix<C64> {
        &self.basis
    }

    pub fn vectors(&self) -> Vec<DVector<C64>> {
        self.basis.column_iter().map(|c| c.into_owned()).collect()
    }

    /// Basis vectors reshaped into `d × d` matrices (operator subspaces).
    pub fn matrices(&self) -> Vec<ComplexMatrix> {
        self.basis
            .column_iter()
            .map(|col| {
                ComplexMatrix::unvectorize(col.as_slice())
                    .expect("operator subspace has square ambient dimension")
            })
            .collect()
    }

    /// `max_ij |<b_i, b_j> − δ_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.basis.adjoint() * &self.basis;
        let k = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).norm());
            }
        }
        worst
    }

    pub fn projector(&self) -> DMatrix<C64> {
        &self.basis * self.basis.adjoint()
    }

    /// `‖v − P v‖` for the orthogonal projector `P` onto this subspace.
    pub fn residual(&self, v: &DVector<C64>) -> f64 {
        let coeffs = self.basis.adjoint() * v;
        (v - &self.basis * coeffs).norm()
    }

    /// Intersection computed pairwise: `x ∈ A ∩ B` iff `x = A a = B b`, so
    /// the coefficient pairs are the null space of `[A | −B]`.
    pub fn intersection(subspaces: &[Subspace]) -> Result<Subspace> {
        let first = subspaces
            .first()
            .ok_or_else(|| Error::InvalidArgument("no subspaces to intersect".into()))?;
        let n = first.ambient_dim;
        check_ambient(subspaces, n)?;
        let mut acc = first.clone();
        for s in &subspaces[1..] {
            if acc.dim() == 0 {
                break;
            }
            if s.dim() == 0 {
                return Ok(Subspace::zero(n, first.tol));
            }
            let (k, l) = (acc.dim(), s.dim());
            let mut m = DMatrix::<C64>::zeros(n, k + l);
            m.view_mut((0, 0), (n, k)).copy_from(&acc.basis);
            m.view_mut((0, k), (n, l)).copy_from(&(-&s.basis));
            let coeffs = null_space_of_blocks(std::slice::from_ref(&m), k + l, first.tol, 1.0);
            let vecs: Vec<DVector<C64>> = coeffs
                .basis
                .column_iter()
                .map(|z| &acc.basis * z.rows(0, k))
                .collect();
            acc = Subspace::from_spanning(n, &vecs, first.tol);
        }
        Ok(acc)
    }

    /// Intersection as the joint null space of the maps `I − P_j`.
    pub fn intersection_by_stacking(subspaces: &[Subspace], tol: f64) -> Result<Subspace> {
        let first = subspaces
            .first()
            .ok_or_else(|| Error::InvalidArgument("no subspaces to intersect".into()))?;
        let n = first.ambient_dim;
        check_ambient(subspaces, n)?;
        let id = DMatrix::<C64>::identity(n, n);
        let blocks: Vec<_> = subspaces.iter().map(|s| &id - s.projector()).collect();
        Ok(null_space_of_blocks(&blocks, n, tol, 1.0))
    }
}

fn check_ambient(subspaces: &[Subspace], n: usize) -> Result<()> {
    match subspaces.iter().find(|s| s.ambient_dim != n) {
        Some(s) => Err(Error::DimensionMismatch {
            expected: n,
            actual: s.ambient_dim,
        }),
        None => Ok(()),
    }
}

/// Left singular vectors of `m` whose singular values pass `keep(s, s_max)`.
fn range_basis(m: &DMatrix<C64>, keep: impl Fn(f64, f64) -> bool) -> DMatrix<C64> {
    let rows = m.nrows();
    if m.ncols() == 0 || rows == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().fold(0.0_f64, |a, &s| a.max(s));
    if smax == 0.0 {
        return DMatrix::zeros(rows, 0);
    }
    let cols: Vec<DVector<C64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| keep(s, smax))
        .map(|(k, _)| u.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(rows, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Null space of a square matrix: singular values `≤ tol · σ_max` count as
/// zero.
pub fn null_space(m: &ComplexMatrix, tol: f64) -> Result<Subspace> {
    null_space_with_scale(m, tol, 0.0)
}

/// Null space with threshold `tol · max(σ_max, scale)`. A known scale keeps
/// matrices that are zero up to rounding from being read as full rank.
pub fn null_space_with_scale(m: &ComplexMatrix, tol: f64, scale: f64) -> Result<Subspace> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    Ok(null_space_of_blocks(std::slice::from_ref(&m.0), m.dim(), tol, scale))
}

/// Joint null space of several `(rows × n)` blocks, i.e. the null space of
/// their vertical stack. Blocks are folded into a running triangular factor
/// with QR so the stack is never materialised; the singular values of the
/// factor equal those of the stack.
pub(crate) fn null_space_of_blocks(
    blocks: &[DMatrix<C64>],
    n: usize,
    tol: f64,
    scale: f64,
) -> Subspace {
    let mut r: Option<DMatrix<C64>> = None;
    for b in blocks {
        debug_assert_eq!(b.ncols(), n);
        let stacked = match r.take() {
            None => b.clone(),
            Some(prev) => {
                let mut s = DMatrix::zeros(prev.nrows() + b.nrows(), n);
                s.view_mut((0, 0), (prev.nrows(), n)).copy_from(&prev);
                s.view_mut((prev.nrows(), 0), (b.nrows(), n)).copy_from(b);
                s
            }
        };
        r = Some(if stacked.nrows() > n {
            stacked.qr().r()
        } else {
            stacked
        });
    }
    let Some(r) = r else {
        return Subspace::full(n, tol);
    };
    // pad to square so that the full right singular basis is available
    let square = if r.nrows() < n {
        let mut s = DMatrix::zeros(n, n);
        s.view_mut((0, 0), (r.nrows(), n)).copy_from(&r);
        s
    } else {
        r
    };
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.iter().fold(scale, |a, &s| a.max(s));
    let cols: Vec<DVector<C64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol * smax)
        .map(|(k, _)| v_t.row(k).adjoint())
        .collect();
    if cols.is_empty() {
        return Subspace::zero(n, tol);
    }
    Subspace {
        ambient_dim: n,
        basis: DMatrix::from_columns(&cols),
        tol,
    }
}

/// Commutant `{M : MA = AM for all A in S}` inside `M_d`, as a subspace of
/// `C^{d^2}`.
pub fn commutant(set: &[ComplexMatrix], d: usize) -> Result<Subspace> {
    commutant_with_tol(set, d, DEFAULT_RANK_TOL)
}

pub fn commutant_with_tol(set: &[ComplexMatrix], d: usize, tol: f64) -> Result<Subspace> {
    if let Some(a) = set.iter().find(|a| a.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: a.dim(),
        });
    }
    let id = ComplexMatrix::identity(d);
    let scale = set.iter().map(ComplexMatrix::frobenius_norm).fold(0.0, f64::max);
    // vec(AM − MA) = (I ⊗ A − A^T ⊗ I) vec(M)
    let blocks: Vec<_> = set
        .iter()
        .map(|a| (kron(&id, a) - kron(&a.transpose(), &id)).into_inner())
        .collect();
    Ok(null_space_of_blocks(&blocks, d * d, tol, scale))
}

/// Double commutant `S''`.
pub fn double_commutant(set: &[ComplexMatrix], d: usize) -> Result<Subspace> {
    let first = commutant(set, d)?;
    commutant(&first.matrices(), d)
}

/// Singular values of the cross-Gram matrix `A^† B` of two orthonormal
/// bases, i.e. the cosines of the principal angles, descending.
pub fn principal_cosines(a: &Subspace, b: &Subspace) -> Vec<f64> {
    if a.dim() == 0 || b.dim() == 0 {
        return Vec::new();
    }
    let g = a.basis.adjoint() * &b.basis;
    let mut s: Vec<f64> = g.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Largest principal angle between two subspaces of equal dimension, from
/// `sin θ_max = ‖(I − P_A) B‖_2`, which stays accurate for tiny angles.
/// Subspaces of different dimension are at angle `π/2`.
pub fn largest_principal_angle(a: &Subspace, b: &Subspace) -> f64 {
    if a.dim() != b.dim() || a.ambient_dim != b.ambient_dim {
        return std::f64::consts::FRAC_PI_2;
    }
    if a.dim() == 0 {
        return 0.0;
    }
    let resid = &b.basis - &a.basis * (a.basis.adjoint() * &b.basis);
    let s = resid
        .singular_values()
        .iter()
        .fold(0.0_f64, |m, &x| m.max(x));
    s.min(1.0).asin()
}
