//! Dense complex Hermitian linear algebra.
//!
//! Matrices are small (at most a few thousand rows) and stored densely in
//! row-major order. Hermitian eigendecomposition uses cyclic complex Jacobi
//! rotations, which gives residuals at the level of machine precision for the
//! dimensions used here. All other spectral functions (square roots, trace
//! norms, inverse square roots) are built on top of it.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

pub use num_complex::Complex64 as C64;

use crate::fmath;
use crate::{Error, Result};

/// Default upper bound on `d^p`.
pub const DEFAULT_MAX_DIM: usize = 4096;

/// Eigenvalues below this are rounded to zero in PSD functions.
pub const PSD_CLAMP: f64 = -1e-10;
/// Eigenvalues below this make a PSD function fail.
pub const PSD_ERROR: f64 = -1e-6;

const HERMITIAN_TOL: f64 = 1e-12;

/// Resource limits shared by every routine that builds tensor powers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_dim: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

impl Limits {
    pub fn new(max_dim: usize) -> Self {
        Limits { max_dim }
    }

    pub fn check(&self, dim: usize) -> Result<()> {
        if dim > self.max_dim {
            Err(Error::ResourceLimit {
                dim,
                limit: self.max_dim,
            })
        } else {
            Ok(())
        }
    }

    /// `base^p`, failing once it exceeds the limit.
    pub fn power_dim(&self, base: usize, p: usize) -> Result<usize> {
        let mut dim: usize = 1;
        for _ in 0..p {
            dim = dim.checked_mul(base).ok_or(Error::ResourceLimit {
                dim: usize::MAX,
                limit: self.max_dim,
            })?;
            self.check(dim)?;
        }
        Ok(dim)
    }
}

// ---------------------------------------------------------------------------
// ComplexMatrix

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major data. Entries must be finite.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                rows * cols,
                rows,
                cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    /// Convenience constructor from nested rows of complex entries.
    pub fn from_rows(rows: &[&[C64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        Self::from_vec(
            r,
            c,
            rows.iter().flat_map(|row| row.iter().copied()).collect(),
        )
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        Self::from_vec(
            rows,
            cols,
            values.iter().map(|&v| C64::new(v, 0.0)).collect(),
        )
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = C64::new(v, 0.0);
        }
        m
    }

    /// Outer product `u v†`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols + j])
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols))
            .map(|i| self.data[i * self.cols + i])
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        fmath::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `max |A - A†|` entrywise.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// `(A + A†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square(), "hermitian part of a non-square matrix");
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `AB - BA`.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// `AB + BA`.
    pub fn anticommutator(&self, other: &Self) -> Self {
        &(self * other) + &(other * self)
    }

    /// `Tr(A B)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    /// `⟨u| A |v⟩`.
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> C64 {
        let av = self.mul_vec(v);
        u.iter().zip(&av).map(|(a, b)| a.conj() * b).sum()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

// ---------------------------------------------------------------------------
// HermitianOperator

/// A square matrix equal to its adjoint.
///
/// Construction accepts matrices whose anti-Hermitian part is within
/// `1e-12 · max(1, ‖A‖_max)` and stores the exact Hermitian part. Anything
/// further off is rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator(ComplexMatrix);

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidInput(format!(
                "Hermitian operator must be square, got {}x{}",
                matrix.rows, matrix.cols
            )));
        }
        if !matrix.is_finite() {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let deviation = matrix.hermitian_deviation();
        let tolerance = HERMITIAN_TOL * matrix.max_abs().max(1.0);
        if deviation > tolerance {
            return Err(Error::NotHermitian {
                deviation,
                tolerance,
            });
        }
        Ok(HermitianOperator(matrix.hermitian_part()))
    }

    /// Hermitian part of a matrix that is Hermitian up to roundoff by construction.
    pub(crate) fn from_hermitian_part(matrix: &ComplexMatrix) -> Self {
        HermitianOperator(matrix.hermitian_part())
    }

    pub fn identity(n: usize) -> Self {
        HermitianOperator(ComplexMatrix::identity(n))
    }

    pub fn diag(values: &[f64]) -> Self {
        HermitianOperator(ComplexMatrix::diag_real(values))
    }

    /// Rank-one projector-like operator `w |v⟩⟨v|`.
    pub fn rank_one(v: &[C64], weight: f64) -> Self {
        HermitianOperator::from_hermitian_part(&ComplexMatrix::outer(v, v).scale_real(weight))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn add(&self, other: &Self) -> Self {
        HermitianOperator(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        HermitianOperator(&self.0 - &other.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianOperator(self.0.scale_real(s))
    }

    /// `Tr(AB)` for two Hermitian operators; real by construction.
    pub fn trace_product_real(&self, other: &Self) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self.0.data.iter().zip(&other.0.data) {
            // Tr(AB) = Σ_ij A_ij B_ji = Σ_ij A_ij conj(B_ij)
            acc += a.re * b.re + a.im * b.im;
        }
        acc
    }

    /// `U A U†`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Self {
        HermitianOperator::from_hermitian_part(&(&(u * &self.0) * &u.adjoint()))
    }

    /// `B A B` for Hermitian `B`.
    pub fn sandwich_by(&self, b: &HermitianOperator) -> Self {
        HermitianOperator::from_hermitian_part(&(&(&b.0 * &self.0) * &b.0))
    }
}

impl core::ops::Deref for HermitianOperator {
    type Target = ComplexMatrix;
    fn deref(&self) -> &ComplexMatrix {
        &self.0
    }
}

// ---------------------------------------------------------------------------
// Eigendecomposition

/// `A = V diag(values) V†` with eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigh {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.vectors.column(i)
    }

    /// `V f(Λ) V†`.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> HermitianOperator {
        let n = self.dim();
        let fv: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = C64::new(0.0, 0.0);
                for (k, &f) in fv.iter().enumerate() {
                    if f != 0.0 {
                        acc += self.vectors[(i, k)] * self.vectors[(j, k)].conj() * f;
                    }
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc.conj();
            }
        }
        for i in 0..n {
            out[(i, i)] = C64::new(out[(i, i)].re, 0.0);
        }
        HermitianOperator(out)
    }

    pub fn reconstruct(&self) -> HermitianOperator {
        self.map(|l| l)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Hermitian eigendecomposition, eigenvalues ascending.
pub fn eig_hermitian(a: &HermitianOperator) -> Eigh {
    jacobi_eigh(&a.0)
}

/// Validates a raw matrix and decomposes it.
pub fn eig_hermitian_checked(a: &ComplexMatrix) -> Result<Eigh> {
    Ok(eig_hermitian(&HermitianOperator::new(a.clone())?))
}

fn jacobi_eigh(a: &ComplexMatrix) -> Eigh {
    let n = a.rows;
    let mut m = a.clone();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    if n == 0 || scale == 0.0 {
        return Eigh {
            values: vec![0.0; n],
            vectors: v,
        };
    }
    for i in 0..n {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
    }

    for sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if fmath::sqrt(off) <= f64::EPSILON * 1e-2 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                // Once the off-diagonal entry is below the resolution of
                // both diagonal entries it can be dropped.
                if sweep > 3
                    && fmath::abs(app) + 1e3 * mag == fmath::abs(app)
                    && fmath::abs(aqq) + 1e3 * mag == fmath::abs(aqq)
                {
                    m[(p, q)] = C64::new(0.0, 0.0);
                    m[(q, p)] = C64::new(0.0, 0.0);
                    continue;
                }
                let phase = apq / mag;
                let theta = (aqq - app) / (2.0 * mag);
                let t = if fmath::abs(theta) > 1e150 {
                    0.5 / theta
                } else {
                    let t = 1.0 / (fmath::abs(theta) + fmath::sqrt(theta * theta + 1.0));
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / fmath::sqrt(t * t + 1.0);
                let s = t * c;
                let pc = phase.conj();

                for r in 0..n {
                    let xp = m[(r, p)];
                    let xq = m[(r, q)];
                    m[(r, p)] = xp * c - pc * xq * s;
                    m[(r, q)] = xp * s + pc * xq * c;
                }
                for k in 0..n {
                    let yp = m[(p, k)];
                    let yq = m[(q, k)];
                    m[(p, k)] = yp * c - phase * yq * s;
                    m[(q, k)] = yp * s + phase * yq * c;
                }
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);

                for r in 0..n {
                    let vp = v[(r, p)];
                    let vq = v[(r, q)];
                    v[(r, p)] = vp * c - pc * vq * s;
                    v[(r, q)] = vp * s + pc * vq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Eigh { values, vectors }
}

fn check_psd(e: &Eigh) -> Result<()> {
    let min = e.min();
    if min < PSD_ERROR {
        Err(Error::NotPsd(min))
    } else {
        Ok(())
    }
}

/// Principal square root of a PSD operator. Small negative eigenvalues are
/// clamped to zero.
pub fn psd_sqrt(a: &HermitianOperator) -> Result<HermitianOperator> {
    let e = eig_hermitian(a);
    check_psd(&e)?;
    Ok(e.map(|l| fmath::sqrt(l.max(0.0))))
}

/// Sum of singular values, via the eigenvalues of `A†A` (or `AA†`,
/// whichever is smaller).
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let gram = if a.rows >= a.cols {
        &a.adjoint() * a
    } else {
        a * &a.adjoint()
    };
    let e = eig_hermitian(&HermitianOperator::from_hermitian_part(&gram));
    Ok(e.values.iter().map(|&s| fmath::sqrt(s.max(0.0))).sum())
}

/// Trace norm of a Hermitian operator: `Σ |λ_i|`.
pub fn hermitian_trace_norm(a: &HermitianOperator) -> f64 {
    eig_hermitian(a).values.iter().map(|l| fmath::abs(*l)).sum()
}

/// Trace norm of an anti-Hermitian matrix `K` through the Hermitian `iK`.
pub fn anti_hermitian_trace_norm(k: &ComplexMatrix) -> f64 {
    let ik = k.scale(C64::new(0.0, 1.0));
    hermitian_trace_norm(&HermitianOperator::from_hermitian_part(&ik))
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            if aij.re == 0.0 && aij.im == 0.0 {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// `A^{⊗p}`, refusing outputs larger than the configured limit.
pub fn kron_power(a: &ComplexMatrix, p: usize, limits: &Limits) -> Result<ComplexMatrix> {
    if p == 0 {
        return Err(Error::InvalidInput("tensor power requires p >= 1".into()));
    }
    limits.power_dim(a.rows.max(a.cols), p)?;
    let mut out = a.clone();
    for _ in 1..p {
        out = kron(&out, a);
    }
    Ok(out)
}

/// `Σ_i I^{⊗(i-1)} ⊗ A ⊗ I^{⊗(p-i)}` for square `A`.
pub fn local_sum(a: &ComplexMatrix, p: usize, limits: &Limits) -> Result<ComplexMatrix> {
    if p == 0 {
        return Err(Error::InvalidInput("tensor power requires p >= 1".into()));
    }
    let d = a.rows;
    let total = limits.power_dim(d, p)?;
    let mut out = ComplexMatrix::zeros(total, total);
    for site in 0..p {
        let left = ComplexMatrix::identity(d.pow(site as u32));
        let right = ComplexMatrix::identity(d.pow((p - site - 1) as u32));
        let term = kron(&kron(&left, a), &right);
        out = &out + &term;
    }
    Ok(out)
}

/// Tensor product of vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

/// Orthonormalizes the columns of `a` in place order (modified Gram-Schmidt,
/// applied twice). Returns `None` if the columns are numerically dependent.
pub fn orthonormalize_columns(a: &ComplexMatrix) -> Option<ComplexMatrix> {
    let (rows, cols) = (a.rows, a.cols);
    let mut q = a.clone();
    for j in 0..cols {
        for _pass in 0..2 {
            for k in 0..j {
                let mut dot = C64::new(0.0, 0.0);
                for r in 0..rows {
                    dot += q[(r, k)].conj() * q[(r, j)];
                }
                for r in 0..rows {
                    let qk = q[(r, k)];
                    q[(r, j)] -= qk * dot;
                }
            }
        }
        let norm = fmath::sqrt((0..rows).map(|r| q[(r, j)].norm_sqr()).sum());
        if !(norm > 1e-13) {
            return None;
        }
        for r in 0..rows {
            q[(r, j)] /= norm;
        }
    }
    Some(q)
}

// ---------------------------------------------------------------------------
// RealMatrix

/// Dense real matrix, row-major. Used for n×n Fisher-type matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RealMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        RealMatrix { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                rows * cols,
                rows,
                cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(RealMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        Self::from_vec(
            r,
            c,
            rows.iter().flat_map(|row| row.iter().copied()).collect(),
        )
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].to_vec())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: f64) -> Self {
        RealMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        fmath::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| fmath::abs(*v)).fold(0.0, f64::max)
    }

    pub fn symmetry_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                dev = dev.max(fmath::abs(self[(i, j)] - self[(j, i)]));
            }
        }
        dev
    }

    pub fn symmetrized(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| {
            0.5 * (self[(i, j)] + self[(j, i)])
        })
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `vᵀ A v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        self.mul_vec(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.rows, self.cols, |i, j| C64::new(self[(i, j)], 0.0))
    }

    /// Eigendecomposition of the symmetric part, eigenvalues ascending.
    pub fn sym_eigen(&self) -> (Vec<f64>, RealMatrix) {
        let e = jacobi_eigh(&self.symmetrized().to_complex());
        // Real symmetric input keeps every Jacobi rotation real.
        let n = self.rows;
        let vecs = RealMatrix::from_fn(n, n, |i, j| e.vectors[(i, j)].re);
        (e.values, vecs)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.sym_eigen().0.first().copied().unwrap_or(0.0)
    }

    /// `V f(Λ) Vᵀ` on the symmetric part.
    pub fn sym_map(&self, mut f: impl FnMut(f64) -> f64) -> RealMatrix {
        let (vals, vecs) = self.sym_eigen();
        let n = self.rows;
        let fv: Vec<f64> = vals.iter().map(|&l| f(l)).collect();
        RealMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| vecs[(i, k)] * fv[k] * vecs[(j, k)]).sum()
        })
    }

    /// Condition number of a symmetric positive definite matrix
    /// (`+∞` when not positive definite).
    pub fn condition_number(&self) -> f64 {
        let (vals, _) = self.sym_eigen();
        let min = vals.first().copied().unwrap_or(0.0);
        let max = vals.last().copied().unwrap_or(0.0);
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    fn check_spd(&self, max_condition: f64) -> Result<()> {
        let cond = self.condition_number();
        if !(cond <= max_condition) {
            return Err(Error::SingularMetric(cond));
        }
        Ok(())
    }

    /// Inverse of a symmetric positive definite matrix.
    pub fn inverse_spd(&self, max_condition: f64) -> Result<RealMatrix> {
        self.check_spd(max_condition)?;
        Ok(self.sym_map(|l| 1.0 / l))
    }

    /// `A^{-1/2}` of a symmetric positive definite matrix.
    pub fn inverse_sqrt_spd(&self, max_condition: f64) -> Result<RealMatrix> {
        self.check_spd(max_condition)?;
        Ok(self.sym_map(|l| 1.0 / fmath::sqrt(l)))
    }

    /// Moore-Penrose inverse of a symmetric matrix; eigenvalues below
    /// `rel_cutoff · λ_max` are dropped.
    pub fn pseudo_inverse_sym(&self, rel_cutoff: f64) -> RealMatrix {
        let (vals, _) = self.sym_eigen();
        let lmax = vals.iter().fold(0.0_f64, |a, v| a.max(fmath::abs(*v)));
        self.sym_map(|l| {
            if fmath::abs(l) > rel_cutoff * lmax {
                1.0 / l
            } else {
                0.0
            }
        })
    }

    /// Square root of a PSD matrix.
    pub fn sqrt_psd(&self) -> Result<RealMatrix> {
        let min = self.min_eigenvalue();
        if min < PSD_ERROR * self.max_abs().max(1.0) {
            return Err(Error::NotPsd(min));
        }
        Ok(self.sym_map(|l| fmath::sqrt(l.max(0.0))))
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.rows;
        assert_eq!(n, self.cols);
        assert_eq!(n, b.len());
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        for col in 0..n {
            let pivot = (col..n).max_by(|&i, &j| {
                fmath::abs(a[i * n + col]).total_cmp(&fmath::abs(a[j * n + col]))
            })?;
            if a[pivot * n + col] == 0.0 {
                return None;
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                }
                x.swap(col, pivot);
            }
            let diag = a[col * n + col];
            for row in col + 1..n {
                let factor = a[row * n + col] / diag;
                if factor != 0.0 {
                    for k in col..n {
                        a[row * n + k] -= factor * a[col * n + k];
                    }
                    x[row] -= factor * x[col];
                }
            }
        }
        for col in (0..n).rev() {
            let mut acc = x[col];
            for k in col + 1..n {
                acc -= a[col * n + k] * x[k];
            }
            x[col] = acc / a[col * n + col];
        }
        if x.iter().all(|v| v.is_finite()) {
            Some(x)
        } else {
            None
        }
    }
}

impl Index<(usize, usize)> for RealMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RealMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl<'a> Mul<&'a RealMatrix> for &'a RealMatrix {
    type Output = RealMatrix;
    fn mul(self, rhs: &'a RealMatrix) -> RealMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        RealMatrix::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols).map(|k| self[(i, k)] * rhs[(k, j)]).sum()
        })
    }
}

impl<'a> Add<&'a RealMatrix> for &'a RealMatrix {
    type Output = RealMatrix;
    fn add(self, rhs: &'a RealMatrix) -> RealMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        RealMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<'a> Sub<&'a RealMatrix> for &'a RealMatrix {
    type Output = RealMatrix;
    fn sub(self, rhs: &'a RealMatrix) -> RealMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        RealMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Pauli matrices `(σx, σy, σz)`.
pub fn pauli() -> [ComplexMatrix; 3] {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        ComplexMatrix::from_vec(2, 2, vec![z, one, one, z]).unwrap(),
        ComplexMatrix::from_vec(2, 2, vec![z, -i, i, z]).unwrap(),
        ComplexMatrix::from_vec(2, 2, vec![one, z, z, -one]).unwrap(),
    ]
}

/// `(I + r·σ)/2` for a Bloch vector `r`.
pub fn bloch_operator(r: [f64; 3]) -> ComplexMatrix {
    let s = pauli();
    let mut m = ComplexMatrix::identity(2).scale_real(0.5);
    for k in 0..3 {
        m = &m + &s[k].scale_real(0.5 * r[k]);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_matrix, rng_from_seed};

    fn random_hermitian(n: usize, seed: u64) -> HermitianOperator {
        let g = gaussian_matrix(&mut rng_from_seed(seed), n, n);
        HermitianOperator::from_hermitian_part(&g)
    }

    fn random_unitary(n: usize, seed: u64) -> ComplexMatrix {
        orthonormalize_columns(&gaussian_matrix(&mut rng_from_seed(seed), n, n)).unwrap()
    }

    fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        (a - b).max_abs()
    }

    #[test]
    fn diagonal_eigendecomposition() {
        let e = eig_hermitian(&HermitianOperator::diag(&[1.0, 2.0]));
        assert_eq!(e.values, vec![1.0, 2.0]);
        assert!(max_diff(&e.vectors, &ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn pauli_x_spectrum() {
        let e = eig_hermitian(&HermitianOperator::new(pauli()[0].clone()).unwrap());
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_six_by_six_reconstructs() {
        let a = random_hermitian(6, 42);
        let e = eig_hermitian(&a);
        let scale = a.frobenius_norm().max(1.0);
        assert!((e.reconstruct().matrix() - a.matrix()).frobenius_norm() < 1e-10 * scale);
        let gram = &e.vectors.adjoint() * &e.vectors;
        assert!(max_diff(&gram, &ComplexMatrix::identity(6)) < 1e-10);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn degenerate_spectrum_is_handled() {
        let u = random_unitary(4, 9);
        let a = HermitianOperator::diag(&[1.0, 1.0, 3.0, 3.0]).conjugate_by(&u);
        let e = eig_hermitian(&a);
        assert!((e.reconstruct().matrix() - a.matrix()).frobenius_norm() < 1e-12);
    }

    #[test]
    fn non_hermitian_and_non_square_inputs_rejected() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            HermitianOperator::new(m),
            Err(Error::NotHermitian { .. })
        ));
        let r = ComplexMatrix::zeros(2, 3);
        assert!(matches!(
            HermitianOperator::new(r),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn sqrt_examples() {
        let i = psd_sqrt(&HermitianOperator::identity(3)).unwrap();
        assert!(max_diff(i.matrix(), &ComplexMatrix::identity(3)) < 1e-15);
        let d = psd_sqrt(&HermitianOperator::diag(&[4.0, 9.0])).unwrap();
        assert!(max_diff(d.matrix(), &ComplexMatrix::diag_real(&[2.0, 3.0])) < 1e-14);
    }

    #[test]
    fn sqrt_of_random_psd_squares_back() {
        let g = gaussian_matrix(&mut rng_from_seed(7), 4, 4);
        let a = HermitianOperator::from_hermitian_part(&(&g * &g.adjoint()));
        let b = psd_sqrt(&a).unwrap();
        let bb = b.matrix() * b.matrix();
        assert!((&bb - a.matrix()).frobenius_norm() < 1e-9 * a.frobenius_norm().max(1.0));
        assert!(eig_hermitian(&b).min() >= -1e-12);
    }

    #[test]
    fn sqrt_rejects_negative_and_clamps_roundoff() {
        assert!(matches!(
            psd_sqrt(&HermitianOperator::diag(&[1.0, -1e-3])),
            Err(Error::NotPsd(_))
        ));
        let s = psd_sqrt(&HermitianOperator::diag(&[1.0, -1e-12])).unwrap();
        assert_eq!(s[(1, 1)].re, 0.0);
    }

    #[test]
    fn trace_norm_examples() {
        let d = ComplexMatrix::diag_real(&[1.0, -2.0]);
        assert!((trace_norm(&d).unwrap() - 3.0).abs() < 1e-12);
        let u = random_unitary(5, 1);
        assert!((trace_norm(&u).unwrap() - 5.0).abs() < 1e-10);
        let uvec: Vec<C64> = vec![C64::new(2.0, 0.0), C64::new(0.0, 0.0)];
        let vvec: Vec<C64> = vec![C64::new(0.0, 0.0), C64::new(0.0, 3.0), C64::new(0.0, 0.0)];
        let r1 = ComplexMatrix::outer(&uvec, &vvec);
        assert!((trace_norm(&r1).unwrap() - 6.0).abs() < 1e-10);
    }

    #[test]
    fn anti_hermitian_trace_norm_agrees_with_general_path() {
        let a = random_hermitian(5, 4);
        let b = random_hermitian(5, 5);
        let k = a.commutator(b.matrix());
        let fast = anti_hermitian_trace_norm(&k);
        let slow = trace_norm(&k).unwrap();
        assert!((fast - slow).abs() < 1e-9 * slow.max(1.0));
    }

    #[test]
    fn kron_examples() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
        let a = gaussian_matrix(&mut rng_from_seed(3), 2, 2);
        assert_eq!(kron_power(&a, 1, &Limits::default()).unwrap(), a);
    }

    #[test]
    fn kron_mixed_product() {
        let mut rng = rng_from_seed(3);
        let a = gaussian_matrix(&mut rng, 2, 2);
        let b = gaussian_matrix(&mut rng, 2, 2);
        let c = gaussian_matrix(&mut rng, 2, 2);
        let d = gaussian_matrix(&mut rng, 2, 2);
        let lhs = &kron(&a, &b) * &kron(&c, &d);
        let rhs = kron(&(&a * &c), &(&b * &d));
        assert!(max_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn kron_power_respects_limit() {
        let a = ComplexMatrix::identity(2);
        let err = kron_power(&a, 13, &Limits::default()).unwrap_err();
        assert_eq!(
            err,
            Error::ResourceLimit {
                dim: 8192,
                limit: 4096
            }
        );
        assert!(kron_power(&a, 12, &Limits::default()).is_ok());
    }

    #[test]
    fn local_sum_matches_explicit_sum() {
        let a = random_hermitian(2, 8);
        let i2 = ComplexMatrix::identity(2);
        let explicit = &(&kron(&kron(a.matrix(), &i2), &i2) + &kron(&kron(&i2, a.matrix()), &i2))
            + &kron(&kron(&i2, &i2), a.matrix());
        let fast = local_sum(a.matrix(), 3, &Limits::default()).unwrap();
        assert!(max_diff(&explicit, &fast) < 1e-14);
    }

    #[test]
    fn real_matrix_spectral_functions() {
        let m = RealMatrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let inv = m.inverse_spd(1e12).unwrap();
        let prod = &m * &inv;
        assert!((&prod - &RealMatrix::identity(2)).max_abs() < 1e-14);
        let ih = m.inverse_sqrt_spd(1e12).unwrap();
        let back = &(&ih * &m) * &ih;
        assert!((&back - &RealMatrix::identity(2)).max_abs() < 1e-14);
        let x = m.solve(&[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-14);
        let sing = RealMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(
            sing.inverse_spd(1e12),
            Err(Error::SingularMetric(_))
        ));
    }
}
