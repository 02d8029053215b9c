//! Dense kernels: a column-major matrix type, GEMM, Cholesky, triangular
//! solves, column-pivoted Householder QR with relative diagonal truncation,
//! and the interpolative decomposition built on top of it.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::DenseError;

/// Block size used by the blocked Cholesky and triangular solves.
const NB: usize = 64;

/// Dense real matrix in column-major order.
#[derive(Clone, PartialEq, Default)]
pub struct Mat {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.nrows, self.ncols)?;
        for i in 0..self.nrows {
            let row: Vec<String> = (0..self.ncols).map(|j| format!("{:.6e}", self[(i, j)])).collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &self.data[i + j * self.nrows]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &mut self.data[i + j * self.nrows]
    }
}

impl Mat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Mat { nrows, ncols, data: vec![0.0; nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                data.push(f(i, j));
            }
        }
        Mat { nrows, ncols, data }
    }

    /// Builds a matrix from row-major nested slices.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        Mat::from_fn(nrows, ncols, |i, j| rows[i][j])
    }

    pub fn from_col_major(nrows: usize, ncols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), nrows * ncols);
        Mat { nrows, ncols, data }
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.ncols, self.nrows);
        for j in 0..self.ncols {
            for i in 0..self.nrows {
                t.data[j + i * self.ncols] = self.data[i + j * self.nrows];
            }
        }
        t
    }

    /// Gathers `self[rows, cols]`.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Mat {
        Mat::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    pub fn select_cols(&self, cols: &[usize]) -> Mat {
        let mut data = Vec::with_capacity(self.nrows * cols.len());
        for &j in cols {
            data.extend_from_slice(self.col(j));
        }
        Mat { nrows: self.nrows, ncols: cols.len(), data }
    }

    pub fn submatrix(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Mat {
        Mat::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_submatrix(&mut self, r0: usize, c0: usize, src: &Mat) {
        for j in 0..src.ncols {
            let dst = &mut self.data[(c0 + j) * self.nrows + r0..(c0 + j) * self.nrows + r0 + src.nrows];
            dst.copy_from_slice(src.col(j));
        }
    }

    /// Horizontal concatenation; all parts must share the row count.
    pub fn hcat(nrows: usize, parts: &[&Mat]) -> Mat {
        let ncols = parts.iter().map(|m| m.ncols).sum();
        let mut data = Vec::with_capacity(nrows * ncols);
        for m in parts {
            assert_eq!(m.nrows, nrows);
            data.extend_from_slice(&m.data);
        }
        Mat { nrows, ncols, data }
    }

    /// Vertical concatenation; all parts must share the column count.
    pub fn vcat(ncols: usize, parts: &[&Mat]) -> Mat {
        let nrows = parts.iter().map(|m| m.nrows).sum();
        let mut out = Mat::zeros(nrows, ncols);
        let mut r0 = 0;
        for m in parts {
            assert_eq!(m.ncols, ncols);
            out.set_submatrix(r0, 0, m);
            r0 += m.nrows;
        }
        out
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Mat) {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn norm_max(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Spectral norm, from the largest eigenvalue of `AᵀA` or `AAᵀ`.
    pub fn norm2(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let g = if self.nrows <= self.ncols { matmul_nt(self, self) } else { matmul_tn(self, self) };
        sym_eigenvalues(&g).last().copied().unwrap_or(0.0).max(0.0).sqrt()
    }

    /// Number of entries in the lower triangle including the diagonal.
    pub fn lower_count(&self) -> usize {
        let k = self.nrows.min(self.ncols);
        k * (k + 1) / 2 + (self.nrows - k) * self.ncols
    }

    /// `y = self * x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        gemv_acc(self, x, 1.0, &mut y);
        y
    }

    /// `y = selfᵀ * x`
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        (0..self.ncols).map(|j| dot(self.col(j), x)).collect()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `y += alpha * A x`
pub fn gemv_acc(a: &Mat, x: &[f64], alpha: f64, y: &mut [f64]) {
    debug_assert_eq!(x.len(), a.ncols);
    debug_assert_eq!(y.len(), a.nrows);
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            axpy(alpha * xj, a.col(j), y);
        }
    }
}

/// `y += alpha * Aᵀ x`
pub fn gemv_t_acc(a: &Mat, x: &[f64], alpha: f64, y: &mut [f64]) {
    debug_assert_eq!(x.len(), a.nrows);
    debug_assert_eq!(y.len(), a.ncols);
    for (j, yj) in y.iter_mut().enumerate() {
        *yj += alpha * dot(a.col(j), x);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    N,
    T,
}

/// Raw strided view used to feed `matrixmultiply`.
#[derive(Clone, Copy)]
struct View {
    ptr: *const f64,
    rows: usize,
    cols: usize,
    rs: isize,
    cs: isize,
}

impl View {
    fn of(m: &Mat, r0: usize, c0: usize, nr: usize, nc: usize, op: Op) -> View {
        assert!(r0 + nr <= m.nrows && c0 + nc <= m.ncols);
        let offset = r0 + c0 * m.nrows;
        // SAFETY: offset is inside the allocation whenever the view is non-empty.
        let ptr = if nr == 0 || nc == 0 { m.data.as_ptr() } else { unsafe { m.data.as_ptr().add(offset) } };
        let (rs, cs) = (1isize, m.nrows as isize);
        match op {
            Op::N => View { ptr, rows: nr, cols: nc, rs, cs },
            Op::T => View { ptr, rows: nc, cols: nr, rs: cs, cs: rs },
        }
    }
}

/// `C[r0.., c0..] = alpha * a * b + beta * C[r0.., c0..]` on raw views.
///
/// # Safety
/// The destination region must not overlap either operand.
unsafe fn gemm_view(alpha: f64, a: View, b: View, beta: f64, c: *mut f64, ldc: usize, m: usize, n: usize) {
    assert_eq!(a.rows, m);
    assert_eq!(b.cols, n);
    assert_eq!(a.cols, b.rows);
    if m == 0 || n == 0 {
        return;
    }
    let k = a.cols;
    if k == 0 {
        for j in 0..n {
            for i in 0..m {
                let p = c.add(i + j * ldc);
                *p = if beta == 0.0 { 0.0 } else { beta * *p };
            }
        }
        return;
    }
    matrixmultiply::dgemm(m, k, n, alpha, a.ptr, a.rs, a.cs, b.ptr, b.rs, b.cs, beta, c, 1, ldc as isize);
}

/// `c = alpha * op(a) * op(b) + beta * c`
pub fn gemm(alpha: f64, a: &Mat, opa: Op, b: &Mat, opb: Op, beta: f64, c: &mut Mat) {
    let va = View::of(a, 0, 0, a.nrows, a.ncols, opa);
    let vb = View::of(b, 0, 0, b.nrows, b.ncols, opb);
    assert_eq!((va.rows, vb.cols), (c.nrows, c.ncols), "gemm output shape");
    let (m, n, ldc) = (c.nrows, c.ncols, c.nrows);
    // SAFETY: `c` is borrowed mutably so it cannot alias `a` or `b`.
    unsafe { gemm_view(alpha, va, vb, beta, c.data.as_mut_ptr(), ldc, m, n) }
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let mut c = Mat::zeros(a.nrows, b.ncols);
    gemm(1.0, a, Op::N, b, Op::N, 0.0, &mut c);
    c
}

/// `aᵀ b`
pub fn matmul_tn(a: &Mat, b: &Mat) -> Mat {
    let mut c = Mat::zeros(a.ncols, b.ncols);
    gemm(1.0, a, Op::T, b, Op::N, 0.0, &mut c);
    c
}

/// `a bᵀ`
pub fn matmul_nt(a: &Mat, b: &Mat) -> Mat {
    let mut c = Mat::zeros(a.nrows, b.nrows);
    gemm(1.0, a, Op::N, b, Op::T, 0.0, &mut c);
    c
}

/// Lower-triangular Cholesky factor with `L Lᵀ = A`.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    pub l: Mat,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.l.nrows
    }

    /// Entries stored in the factor (lower triangle).
    pub fn nnz(&self) -> usize {
        self.l.lower_count()
    }
}

/// Cholesky factorization of a symmetric matrix. Only the lower triangle is read.
pub fn cholesky(a: &Mat) -> Result<CholeskyFactor, DenseError> {
    let mut l = a.clone();
    cholesky_in_place(&mut l)?;
    Ok(CholeskyFactor { l })
}

/// Overwrites the lower triangle of `a` with its Cholesky factor and zeroes
/// the strict upper triangle.
pub fn cholesky_in_place(a: &mut Mat) -> Result<(), DenseError> {
    assert_eq!(a.nrows, a.ncols, "cholesky needs a square matrix");
    let n = a.nrows;
    let mut k0 = 0;
    while k0 < n {
        let b = NB.min(n - k0);
        chol_unblocked(a, k0, b)?;
        let rest = n - k0 - b;
        if rest > 0 {
            // A21 <- A21 * L11^{-T}
            trsm_right_lt_region(a, k0, b, k0 + b, rest);
            // A22 -= A21 A21ᵀ
            let a21 = View::of(a, k0 + b, k0, rest, b, Op::N);
            let a21t = View::of(a, k0 + b, k0, rest, b, Op::T);
            let ld = a.nrows;
            // SAFETY: A22 (rows/cols k0+b..) is disjoint from A21 (cols k0..k0+b).
            unsafe {
                let c = a.data.as_mut_ptr().add((k0 + b) + (k0 + b) * ld);
                gemm_view(-1.0, a21, a21t, 1.0, c, ld, rest, rest);
            }
        }
        k0 += b;
    }
    for j in 1..n {
        for i in 0..j {
            a[(i, j)] = 0.0;
        }
    }
    Ok(())
}

fn chol_unblocked(a: &mut Mat, k0: usize, b: usize) -> Result<(), DenseError> {
    let ld = a.nrows;
    for j in k0..k0 + b {
        let d = a.data[j + j * ld];
        if !(d > 0.0) || !d.is_finite() {
            return Err(DenseError::NotPositiveDefinite { pivot: j, value: d });
        }
        let d = d.sqrt();
        a.data[j + j * ld] = d;
        for i in j + 1..k0 + b {
            a.data[i + j * ld] /= d;
        }
        for k in j + 1..k0 + b {
            let lkj = a.data[k + j * ld];
            if lkj == 0.0 {
                continue;
            }
            for i in k..k0 + b {
                a.data[i + k * ld] -= a.data[i + j * ld] * lkj;
            }
        }
    }
    Ok(())
}

/// In-place `A[r0..r0+nr, k0..k0+b] <- A[r0.., k0..] * L^{-T}` where L is the
/// `b x b` lower block at `(k0, k0)` of the same matrix.
fn trsm_right_lt_region(a: &mut Mat, k0: usize, b: usize, r0: usize, nr: usize) {
    let ld = a.nrows;
    for j in 0..b {
        let cj = k0 + j;
        for i in 0..j {
            let ci = k0 + i;
            let lji = a.data[cj + ci * ld];
            if lji != 0.0 {
                for r in r0..r0 + nr {
                    a.data[r + cj * ld] -= a.data[r + ci * ld] * lji;
                }
            }
        }
        let d = a.data[cj + cj * ld];
        for r in r0..r0 + nr {
            a.data[r + cj * ld] /= d;
        }
    }
}

/// `B <- L^{-1} B` for lower-triangular `L`.
pub fn solve_lower(l: &Mat, b: &mut Mat) {
    let n = l.nrows;
    assert_eq!(b.nrows, n);
    let mut k0 = 0;
    while k0 < n {
        let kb = NB.min(n - k0);
        for c in 0..b.ncols {
            let col = b.col_mut(c);
            for i in k0..k0 + kb {
                let xi = col[i] / l[(i, i)];
                col[i] = xi;
                if xi != 0.0 {
                    let lc = &l.col(i)[i + 1..k0 + kb];
                    for (y, lv) in col[i + 1..k0 + kb].iter_mut().zip(lc) {
                        *y -= xi * lv;
                    }
                }
            }
        }
        let rest = n - k0 - kb;
        if rest > 0 && b.ncols > 0 {
            let l21 = View::of(l, k0 + kb, k0, rest, kb, Op::N);
            let x1 = View::of(b, k0, 0, kb, b.ncols, Op::N);
            let ld = b.nrows;
            let nc = b.ncols;
            // SAFETY: rows k0+kb.. of B are disjoint from rows k0..k0+kb.
            unsafe {
                let c = b.data.as_mut_ptr().add(k0 + kb);
                gemm_view(-1.0, l21, x1, 1.0, c, ld, rest, nc);
            }
        }
        k0 += kb;
    }
}

/// `B <- L^{-T} B` for lower-triangular `L`.
pub fn solve_lower_t(l: &Mat, b: &mut Mat) {
    let n = l.nrows;
    assert_eq!(b.nrows, n);
    for c in 0..b.ncols {
        let col = b.col_mut(c);
        for i in (0..n).rev() {
            let s = dot(&l.col(i)[i + 1..], &col[i + 1..]);
            col[i] = (col[i] - s) / l[(i, i)];
        }
    }
}

/// `B <- B L^{-T}` for lower-triangular `L`.
pub fn solve_right_lower_t(l: &Mat, b: &mut Mat) {
    let n = l.nrows;
    assert_eq!(b.ncols, n);
    let nr = b.nrows;
    let mut k0 = 0;
    while k0 < n {
        let kb = NB.min(n - k0);
        if k0 > 0 && nr > 0 {
            // B[:, k0..k0+kb] -= X[:, 0..k0] * L[k0..k0+kb, 0..k0]ᵀ
            let x0 = View::of(b, 0, 0, nr, k0, Op::N);
            let lt = View::of(l, k0, 0, kb, k0, Op::T);
            // SAFETY: target columns k0.. are disjoint from source columns ..k0.
            unsafe {
                let c = b.data.as_mut_ptr().add(k0 * nr);
                gemm_view(-1.0, x0, lt, 1.0, c, nr, nr, kb);
            }
        }
        for j in k0..k0 + kb {
            for i in k0..j {
                let lji = l[(j, i)];
                if lji != 0.0 {
                    let (src, dst) = split_cols(&mut b.data, nr, i, j);
                    axpy(-lji, src, dst);
                }
            }
            let d = l[(j, j)];
            b.col_mut(j).iter_mut().for_each(|x| *x /= d);
        }
        k0 += kb;
    }
}

fn split_cols(data: &mut [f64], nr: usize, src: usize, dst: usize) -> (&[f64], &mut [f64]) {
    debug_assert!(src < dst);
    let (lo, hi) = data.split_at_mut(dst * nr);
    (&lo[src * nr..(src + 1) * nr], &mut hi[..nr])
}

/// `x <- L^{-1} x`
pub fn solve_lower_vec(l: &Mat, x: &mut [f64]) {
    let n = l.nrows;
    for i in 0..n {
        let xi = x[i] / l[(i, i)];
        x[i] = xi;
        if xi != 0.0 {
            axpy(-xi, &l.col(i)[i + 1..], &mut x[i + 1..]);
        }
    }
}

/// `x <- L^{-T} x`
pub fn solve_lower_t_vec(l: &Mat, x: &mut [f64]) {
    let n = l.nrows;
    for i in (0..n).rev() {
        let s = dot(&l.col(i)[i + 1..], &x[i + 1..]);
        x[i] = (x[i] - s) / l[(i, i)];
    }
}

/// `B <- U^{-1} B` for the leading `k x k` upper triangle of `u`.
fn solve_upper_leading(u: &Mat, k: usize, b: &mut Mat) {
    for c in 0..b.ncols {
        let col = b.col_mut(c);
        for i in (0..k).rev() {
            let xi = col[i] / u[(i, i)];
            col[i] = xi;
            if xi != 0.0 {
                axpy(-xi, &u.col(i)[..i], &mut col[..i]);
            }
        }
    }
}

/// Column-pivoted Householder QR: `B P = Q R`.
#[derive(Clone, Debug)]
pub struct RrqrResult {
    /// Explicit square orthogonal factor (`rows x rows`).
    pub q: Mat,
    /// Upper-trapezoidal factor in pivoted column order (`rows x cols`).
    pub r: Mat,
    /// `perm[j]` is the original column placed at position `j`.
    pub perm: Vec<usize>,
    /// Retained rank under the truncation rule.
    pub rank: usize,
}

impl RrqrResult {
    /// `|R_ii|` for `i < min(rows, cols)`.
    pub fn diag(&self) -> Vec<f64> {
        (0..self.r.nrows.min(self.r.ncols)).map(|i| self.r[(i, i)].abs()).collect()
    }

    /// `Q R Pᵀ`, i.e. the original matrix.
    pub fn reconstruct(&self) -> Mat {
        let qr = matmul(&self.q, &self.r);
        let mut out = Mat::zeros(qr.nrows, qr.ncols);
        for (j, &pj) in self.perm.iter().enumerate() {
            out.col_mut(pj).copy_from_slice(qr.col(j));
        }
        out
    }

    /// Rank-`rank` approximation `Q[:, :r] R[:r, :] Pᵀ`.
    pub fn truncated(&self) -> Mat {
        let (m, n, r) = (self.q.nrows, self.r.ncols, self.rank);
        let q1 = self.q.submatrix(0, 0, m, r);
        let r1 = self.r.submatrix(0, 0, r, n);
        let qr = matmul(&q1, &r1);
        let mut out = Mat::zeros(m, n);
        for (j, &pj) in self.perm.iter().enumerate() {
            out.col_mut(pj).copy_from_slice(qr.col(j));
        }
        out
    }
}

/// Compact output of the pivoted QR before `Q` is materialized.
pub(crate) struct PivotedQr {
    /// Reflectors below the diagonal, R on and above it.
    pub(crate) qr: Mat,
    pub(crate) tau: Vec<f64>,
    pub(crate) perm: Vec<usize>,
    /// Number of reflectors applied.
    pub(crate) steps: usize,
    /// `|R_ii|` for the processed steps.
    pub(crate) diag: Vec<f64>,
}

/// Relative diagonal truncation: the longest prefix with `|R_ii| / |R_11| >= eps`.
/// A zero leading diagonal gives rank 0.
pub fn truncation_rank(diag: &[f64], eps: f64) -> usize {
    let Some(&r11) = diag.first() else { return 0 };
    if r11 == 0.0 {
        return 0;
    }
    diag.iter().take_while(|&&d| d / r11 >= eps).count()
}

/// Householder QR with column pivoting (LAPACK geqp3-style norm downdating).
/// With `stop_eps = Some(eps)` the factorization halts as soon as the next
/// pivot fails the truncation rule; the rows of R above the stopping point
/// are final.
pub(crate) fn pivoted_qr(b: &Mat, stop_eps: Option<f64>) -> PivotedQr {
    let (m, n) = (b.nrows, b.ncols);
    let kmax = m.min(n);
    let mut a = b.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut vn1: Vec<f64> = (0..n).map(|j| dot(a.col(j), a.col(j)).sqrt()).collect();
    let mut vn2 = vn1.clone();
    let tol3z = f64::EPSILON.sqrt();
    let mut tau = Vec::with_capacity(kmax);
    let mut diag = Vec::with_capacity(kmax);
    let mut r11 = 0.0;
    let mut w = vec![0.0; n];

    for i in 0..kmax {
        let mut pvt = i;
        for j in i + 1..n {
            if vn1[j] > vn1[pvt] {
                pvt = j;
            }
        }
        if pvt != i {
            let (lo, hi) = a.data.split_at_mut(pvt * m);
            lo[i * m..(i + 1) * m].swap_with_slice(&mut hi[..m]);
            perm.swap(i, pvt);
            vn1.swap(i, pvt);
            vn2.swap(i, pvt);
        }

        // Reflector annihilating A[i+1.., i].
        let col = &mut a.data[i * m..(i + 1) * m];
        let alpha = col[i];
        let xnorm = dot(&col[i + 1..], &col[i + 1..]).sqrt();
        let (beta, t) = if xnorm == 0.0 {
            (alpha, 0.0)
        } else {
            let beta = -alpha.signum() * alpha.hypot(xnorm);
            let scale = 1.0 / (alpha - beta);
            col[i + 1..].iter_mut().for_each(|x| *x *= scale);
            (beta, (beta - alpha) / beta)
        };
        col[i] = beta;
        let rii = beta.abs();

        if i == 0 {
            r11 = rii;
        }
        if let Some(eps) = stop_eps {
            if r11 == 0.0 || rii / r11 < eps {
                break;
            }
        }
        diag.push(rii);
        tau.push(t);

        if t != 0.0 && i + 1 < n {
            // w_j = vᵀ A[i.., j], A[i.., j] -= t v w_j
            let (head, tail) = a.data.split_at_mut((i + 1) * m);
            let v = &head[i * m + i..(i + 1) * m];
            for (jj, wj) in w[i + 1..n].iter_mut().enumerate() {
                let cj = &tail[jj * m + i..(jj + 1) * m];
                *wj = cj[0] + dot(&v[1..], &cj[1..]);
            }
            for (jj, &wj) in w[i + 1..n].iter().enumerate() {
                if wj != 0.0 {
                    let cj = &mut tail[jj * m + i..(jj + 1) * m];
                    cj[0] -= t * wj;
                    axpy(-t * wj, &v[1..], &mut cj[1..]);
                }
            }
        }

        for j in i + 1..n {
            if vn1[j] != 0.0 {
                let aij = a.data[i + j * m].abs();
                let temp = (1.0 - (aij / vn1[j]).powi(2)).max(0.0);
                let temp2 = temp * (vn1[j] / vn2[j]).powi(2);
                if temp2 <= tol3z {
                    let c = &a.data[j * m + i + 1..(j + 1) * m];
                    vn1[j] = dot(c, c).sqrt();
                    vn2[j] = vn1[j];
                } else {
                    vn1[j] *= temp.sqrt();
                }
            }
        }
    }
    let steps = tau.len();
    PivotedQr { qr: a, tau, perm, steps, diag }
}

impl PivotedQr {
    /// Explicit `m x m` orthogonal factor `H_0 H_1 ... H_{steps-1}`.
    pub(crate) fn form_q(&self) -> Mat {
        let m = self.qr.nrows;
        let mut q = Mat::identity(m);
        for i in (0..self.steps).rev() {
            let t = self.tau[i];
            if t == 0.0 {
                continue;
            }
            let v = &self.qr.col(i)[i..];
            // Columns < i of Q are still unit vectors in rows >= i.
            for c in i..m {
                let qc = &mut q.data[c * m + i..(c + 1) * m];
                let w = qc[0] + dot(&v[1..], &qc[1..]);
                if w != 0.0 {
                    qc[0] -= t * w;
                    axpy(-t * w, &v[1..], &mut qc[1..]);
                }
            }
        }
        q
    }

    /// `R[0..rows, :]` with the strictly-lower part zeroed; valid for `rows <= steps`
    /// or for the full triangle when the factorization ran to completion.
    pub(crate) fn r_rows(&self, rows: usize) -> Mat {
        let n = self.qr.ncols;
        Mat::from_fn(rows, n, |i, j| if i <= j { self.qr[(i, j)] } else { 0.0 })
    }
}

/// Full column-pivoted QR of `b` with rank chosen by the relative diagonal rule.
/// `eps = 0` keeps `min(rows, cols)` columns (unless `b` is zero).
pub fn rrqr_truncate(b: &Mat, eps: f64) -> RrqrResult {
    assert!(eps >= 0.0, "tolerance must be non-negative");
    let f = pivoted_qr(b, None);
    let rank = truncation_rank(&f.diag, eps);
    let q = f.form_q();
    let r = f.r_rows(b.nrows);
    RrqrResult { q, r, perm: f.perm, rank }
}

/// Interpolative decomposition `B[:, f] ≈ B[:, c] T_cf`.
#[derive(Clone, Debug)]
pub struct InterpolativeDecomposition {
    /// Skeleton columns, in pivot order.
    pub c: Vec<usize>,
    /// Redundant columns, in pivot order.
    pub f: Vec<usize>,
    /// `|c| x |f|` interpolation matrix.
    pub t_cf: Mat,
    /// Frobenius norm of the discarded `R_22` block; equals `‖B_f − B_c T_cf‖_F`.
    pub err: f64,
}

/// ID through pivoted QR, `T_cf = R_11^{-1} R_12`. The kept block is shrunk
/// until `R_11` is safely invertible.
pub fn interpolative_decomposition(b: &Mat, eps: f64) -> InterpolativeDecomposition {
    assert!(eps >= 0.0, "tolerance must be non-negative");
    let f = pivoted_qr(b, None);
    let rank = truncation_rank(&f.diag, eps);
    let (c, fine, t_cf) = skeleton_split(&f, rank);
    let (m, n) = (b.nrows, b.ncols);
    let kept = c.len();
    let mut err2 = 0.0;
    for j in kept..n {
        for i in kept..m.min(j + 1) {
            err2 += f.qr[(i, j)].powi(2);
        }
    }
    InterpolativeDecomposition { c, f: fine, t_cf, err: err2.sqrt() }
}

/// Splits columns into skeleton and redundant sets from a pivoted QR, dropping
/// trailing skeleton columns whose diagonal is numerically zero.
pub(crate) fn skeleton_split(f: &PivotedQr, rank: usize) -> (Vec<usize>, Vec<usize>, Mat) {
    let (m, n) = (f.qr.nrows, f.qr.ncols);
    let mut rank = rank.min(f.steps);
    if let Some(&r11) = f.diag.first() {
        let floor = r11 * f64::EPSILON * (m.max(n) as f64);
        rank = f.diag[..rank].iter().take_while(|&&d| d > floor).count();
    }
    let mut t_cf = Mat::from_fn(rank, n - rank, |i, j| f.qr[(i, rank + j)]);
    solve_upper_leading(&f.qr, rank, &mut t_cf);
    (f.perm[..rank].to_vec(), f.perm[rank..].to_vec(), t_cf)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn sym_eigenvalues(a: &Mat) -> Vec<f64> {
    let n = a.nrows;
    assert_eq!(n, a.ncols);
    let mut m = a.clone();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for j in 0..n {
            for i in 0..j {
                off += m[(i, j)].powi(2);
            }
        }
        let scale: f64 = (0..n).map(|i| m[(i, i)].powi(2)).sum::<f64>() + off;
        if off <= 1e-30 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(m: usize, n: usize, seed: u64) -> Mat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn spd(n: usize, seed: u64) -> Mat {
        let b = random(n, n, seed);
        let mut a = matmul_tn(&b, &b);
        for i in 0..n {
            a[(i, i)] += 1.0;
        }
        a
    }

    fn maxdiff(a: &Mat, b: &Mat) -> f64 {
        let mut d = a.clone();
        d.axpy(-1.0, b);
        d.norm_max()
    }

    fn naive_mul(a: &Mat, b: &Mat) -> Mat {
        Mat::from_fn(a.nrows(), b.ncols(), |i, j| (0..a.ncols()).map(|k| a[(i, k)] * b[(k, j)]).sum())
    }

    #[test]
    fn gemm_matches_naive_product_with_transposes() {
        let a = random(7, 5, 1);
        let b = random(5, 3, 2);
        let c = matmul(&a, &b);
        assert!(maxdiff(&c, &naive_mul(&a, &b)) < 1e-14);
        let at = a.transpose();
        assert!(maxdiff(&matmul_tn(&at, &b), &c) < 1e-14);
        let bt = b.transpose();
        assert!(maxdiff(&matmul_nt(&a, &bt), &c) < 1e-14);
    }

    #[test]
    fn cholesky_hand_examples() {
        let l = cholesky(&Mat::from_rows(&[&[4.0]])).unwrap().l;
        assert_eq!(l[(0, 0)], 2.0);

        let l = cholesky(&Mat::from_rows(&[&[4.0, 2.0], &[2.0, 3.0]])).unwrap().l;
        assert!((l[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((l[(1, 0)] - 1.0).abs() < 1e-15);
        assert!((l[(1, 1)] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(l[(0, 1)], 0.0);

        let err = cholesky(&Mat::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]])).unwrap_err();
        assert!(matches!(err, DenseError::NotPositiveDefinite { pivot: 1, .. }));
    }

    #[test]
    fn blocked_cholesky_reproduces_input() {
        for &n in &[1, 63, 64, 65, 150] {
            let a = spd(n, n as u64);
            let l = cholesky(&a).unwrap().l;
            let llt = matmul_nt(&l, &l);
            assert!(maxdiff(&llt, &a) <= 1e-12 * a.norm_max(), "n = {n}");
        }
    }

    #[test]
    fn triangular_solves_invert_their_factor() {
        let a = spd(130, 3);
        let l = cholesky(&a).unwrap().l;
        let b = random(130, 4, 4);

        let mut x = b.clone();
        solve_lower(&l, &mut x);
        assert!(maxdiff(&matmul(&l, &x), &b) < 1e-10);

        let mut x = b.clone();
        solve_lower_t(&l, &mut x);
        assert!(maxdiff(&matmul_tn(&l, &x), &b) < 1e-10);

        let bt = b.transpose();
        let mut x = bt.clone();
        solve_right_lower_t(&l, &mut x);
        assert!(maxdiff(&matmul_nt(&x, &l), &bt) < 1e-10);

        let mut v = b.col(0).to_vec();
        solve_lower_vec(&l, &mut v);
        let mut w = v.clone();
        solve_lower_t_vec(&l, &mut w);
        let mut xm = Mat::from_col_major(130, 1, b.col(0).to_vec());
        solve_lower(&l, &mut xm);
        solve_lower_t(&l, &mut xm);
        assert!(w.iter().zip(xm.col(0)).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn truncation_rule_on_explicit_diagonals() {
        assert_eq!(truncation_rank(&[1.0, 0.5, 0.009], 0.01), 2);
        assert_eq!(truncation_rank(&[1.0, 0.5, 0.009], 0.0), 3);
        assert_eq!(truncation_rank(&[0.0, 0.0], 0.0), 0);
        assert_eq!(truncation_rank(&[], 0.5), 0);
        assert_eq!(truncation_rank(&[2.0, 1.0], 0.5), 2);
    }

    #[test]
    fn rrqr_reconstructs_and_is_orthogonal() {
        for &(m, n) in &[(6, 9), (9, 6), (5, 5), (1, 4), (4, 1)] {
            let b = random(m, n, (m * 10 + n) as u64);
            let f = rrqr_truncate(&b, 0.0);
            assert_eq!(f.rank, m.min(n));
            let qtq = matmul_tn(&f.q, &f.q);
            assert!(maxdiff(&qtq, &Mat::identity(m)) <= 1e-13);
            assert!(maxdiff(&f.reconstruct(), &b) <= 1e-12 * b.norm_max());
            let d = f.diag();
            assert!(d.windows(2).all(|w| w[0] >= w[1] * (1.0 - 1e-12)));
        }
    }

    #[test]
    fn rrqr_zero_and_rank_one() {
        let z = Mat::zeros(4, 3);
        assert_eq!(rrqr_truncate(&z, 0.0).rank, 0);
        assert_eq!(rrqr_truncate(&z, 1e-8).rank, 0);

        let u = random(6, 1, 11);
        let v = random(1, 5, 12);
        let b = matmul(&u, &v);
        let f = rrqr_truncate(&b, 1e-8);
        assert_eq!(f.rank, 1);
        assert!(maxdiff(&f.truncated(), &b) <= 1e-12 * b.norm_fro());
    }

    #[test]
    fn early_stop_matches_full_factorization() {
        let b = random(8, 12, 21);
        let full = pivoted_qr(&b, None);
        let eps = full.diag[3] / full.diag[0] * 1.0001;
        let early = pivoted_qr(&b, Some(eps));
        assert_eq!(early.steps, truncation_rank(&full.diag, eps));
        assert_eq!(&early.perm[..early.steps], &full.perm[..early.steps]);
        let qa = early.form_q();
        assert!(maxdiff(&matmul_tn(&qa, &qa), &Mat::identity(8)) < 1e-13);
        // Leading rows of R agree once columns are returned to original order.
        let ra = early.r_rows(early.steps);
        let rf = full.r_rows(early.steps);
        let mut diff = 0.0f64;
        for i in 0..early.steps {
            for k in 0..12 {
                let ke = early.perm.iter().position(|&p| p == full.perm[k]).unwrap();
                diff = diff.max((ra[(i, ke)] - rf[(i, k)]).abs());
            }
        }
        assert!(diff < 1e-12, "{diff} {:?} {:?}", early.perm, full.perm);
    }

    #[test]
    fn interpolative_decomposition_examples() {
        let u = random(5, 1, 31);
        let b = Mat::hcat(5, &[&u, &u]);
        let id = interpolative_decomposition(&b, 1e-8);
        assert_eq!(id.c.len(), 1);
        assert_eq!(id.f.len(), 1);
        assert!((id.t_cf[(0, 0)] - 1.0).abs() < 1e-12);

        let id = interpolative_decomposition(&Mat::identity(2), 1e-8);
        assert_eq!(id.c.len(), 2);
        assert!(id.f.is_empty());
        assert_eq!(id.t_cf.ncols(), 0);

        let id = interpolative_decomposition(&Mat::zeros(3, 4), 1e-8);
        assert!(id.c.is_empty());
        assert_eq!(id.f.len(), 4);
    }

    #[test]
    fn interpolative_decomposition_error_matches_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let base = random(10, 3, 42);
        let mix = random(3, 7, 43);
        let mut b = matmul(&base, &mix);
        for x in b.as_mut_slice() {
            *x += 1e-6 * rng.gen_range(-1.0..1.0);
        }
        let id = interpolative_decomposition(&b, 1e-4);
        assert_eq!(id.c.len(), 3);
        let bc = b.select_cols(&id.c);
        let bf = b.select_cols(&id.f);
        let mut resid = matmul(&bc, &id.t_cf);
        resid.axpy(-1.0, &bf);
        assert!((resid.norm_fro() - id.err).abs() < 1e-10);
    }

    #[test]
    fn jacobi_eigenvalues_of_known_matrix() {
        let a = Mat::from_rows(&[&[2.0, 1.0, 0.0], &[1.0, 2.0, 1.0], &[0.0, 1.0, 2.0]]);
        let ev = sym_eigenvalues(&a);
        let s = 2f64.sqrt();
        let want = [2.0 - s, 2.0, 2.0 + s];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((Mat::from_rows(&[&[3.0, 0.0], &[0.0, -4.0]]).norm2() - 4.0).abs() < 1e-12);
    }
}
