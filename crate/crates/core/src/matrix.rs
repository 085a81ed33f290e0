//! Dense complex linear-algebra substrate.
//!
//! Row-major dense storage with a deterministic inner-product-order GEMM,
//! Kronecker products, a scaling-and-squaring Padé matrix exponential and an
//! SVD-based kernel projector. Decompositions (SVD, Hermitian eigen, LU
//! solves) are delegated to `nalgebra`.
//!
//! Determinism note: `CMat::mul` accumulates every output row over the inner
//! index in ascending order, independent of threading, so repeated runs and
//! algebraically identical products (e.g. an embedded block of a larger
//! product with zero padding) produce bit-identical results.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::Tolerances;
use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

/// Dense complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CVec {
    data: Vec<C64>,
}

fn check_finite<'a>(entries: impl Iterator<Item = &'a C64>) -> Result<()> {
    for (k, z) in entries.enumerate() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::Structure(format!(
                "non-finite entry {z} at flat index {k}"
            )));
        }
    }
    Ok(())
}

impl CMat {
    /// Build from row-major data, rejecting non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "data length {} != {rows}x{cols}",
                data.len()
            )));
        }
        check_finite(data.iter())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Real-valued convenience constructor.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in entries.iter().enumerate() {
            m.data[i * n + i] = z;
        }
        m
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

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.data[i * self.cols + j] = z;
    }

    /// Copy `block` into `self` with upper-left corner at (`i0`, `j0`).
    pub fn set_block(&mut self, i0: usize, j0: usize, block: &CMat) {
        assert!(i0 + block.rows <= self.rows && j0 + block.cols <= self.cols);
        for i in 0..block.rows {
            let dst = (i0 + i) * self.cols + j0;
            self.data[dst..dst + block.cols].copy_from_slice(block.row(i));
        }
    }

    pub fn block(&self, i0: usize, j0: usize, rows: usize, cols: usize) -> CMat {
        assert!(i0 + rows <= self.rows && j0 + cols <= self.cols);
        CMat::from_fn(rows, cols, |i, j| self[(i0 + i, j0 + j)])
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, z: C64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * z).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Matrix product with deterministic ascending-k accumulation per row.
    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(
            self.cols, other.rows,
            "inner dimensions {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let (m, k_dim, n) = (self.rows, self.cols, other.cols);
        let mut out = vec![ZERO; m * n];
        let work = m * k_dim * n;
        let row_task = |i: usize, out_row: &mut [C64]| {
            for k in 0..k_dim {
                let a = self.data[i * k_dim + k];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for (o, b) in out_row.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        };
        if work > 1 << 22 {
            out.par_chunks_mut(n)
                .enumerate()
                .for_each(|(i, out_row)| row_task(i, out_row));
        } else {
            for (i, out_row) in out.chunks_mut(n).enumerate() {
                row_task(i, out_row);
            }
        }
        CMat {
            rows: m,
            cols: n,
            data: out,
        }
    }

    pub fn matvec(&self, v: &CVec) -> CVec {
        assert_eq!(self.cols, v.dim(), "matvec dimension mismatch");
        let mut out = vec![ZERO; self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for (a, x) in self.row(i).iter().zip(&v.data) {
                acc += a * x;
            }
            *o = acc;
        }
        CVec { data: out }
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, z) in sums.iter_mut().zip(self.row(i)) {
                *s += z.norm();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        self.sub(&self.adjoint()).fro_norm() <= tol
    }

    /// (A + A†)/2.
    pub fn hermitize(&self) -> CMat {
        self.add(&self.adjoint()).scale(C64::new(0.5, 0.0))
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }
}

/// Outer product a b^T (no conjugation).
pub fn outer(a: &CVec, b: &CVec) -> CMat {
    CMat::from_fn(a.dim(), b.dim(), |i, j| a[i] * b[j])
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl CVec {
    pub fn from_vec(data: Vec<C64>) -> Result<Self> {
        check_finite(data.iter())?;
        Ok(Self { data })
    }

    pub fn from_real(data: &[f64]) -> Self {
        Self {
            data: data.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            data: vec![ZERO; n],
        }
    }

    pub fn unit(n: usize, j: usize) -> Self {
        let mut v = Self::zeros(n);
        v.data[j] = ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn set(&mut self, i: usize, z: C64) {
        self.data[i] = z;
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨self|other⟩ with conjugation on the left argument.
    pub fn dot(&self, other: &CVec) -> C64 {
        assert_eq!(self.dim(), other.dim());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn add(&self, other: &CVec) -> CVec {
        assert_eq!(self.dim(), other.dim());
        CVec {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &CVec) -> CVec {
        assert_eq!(self.dim(), other.dim());
        CVec {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, z: C64) -> CVec {
        CVec {
            data: self.data.iter().map(|a| a * z).collect(),
        }
    }

    pub fn normalized(&self) -> CVec {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize the zero vector");
        self.scale(C64::new(1.0 / n, 0.0))
    }
}

impl std::ops::Index<usize> for CVec {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.data[i]
    }
}

/// Kronecker product with the default dimension cap.
pub fn kron(a: &CMat, b: &CMat) -> Result<CMat> {
    kron_capped(a, b, Tolerances::DEFAULT.dim_cap)
}

/// Kronecker product; errors when an output dimension exceeds `cap`.
pub fn kron_capped(a: &CMat, b: &CMat, cap: usize) -> Result<CMat> {
    let rows = a.rows() * b.rows();
    let cols = a.cols() * b.cols();
    let dim = rows.max(cols);
    if dim > cap {
        return Err(Error::Capacity { dim, cap });
    }
    let mut out = CMat::zeros(rows, cols);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for p in 0..b.rows() {
                let dst = (i * b.rows() + p) * cols + j * b.cols();
                for q in 0..b.cols() {
                    out.data[dst + q] = aij * b[(p, q)];
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of vectors, a ⊗ b.
pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    let mut data = Vec::with_capacity(a.dim() * b.dim());
    for i in 0..a.dim() {
        for j in 0..b.dim() {
            data.push(a[i] * b[j]);
        }
    }
    CVec { data }
}

// ---------------------------------------------------------------------------
// Matrix exponential: scaling and squaring with diagonal Padé approximants,
// degree chosen by 1-norm thresholds (Higham 2005).
// ---------------------------------------------------------------------------

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539_398_330_063_23e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn pade_low(a: &CMat, b: &[f64]) -> (CMat, CMat) {
    // U = A * sum b_{2k+1} A^{2k},  V = sum b_{2k} A^{2k}
    let n = a.rows();
    let a2 = a.mul(a);
    let mut pow = CMat::identity(n); // A^{2k}
    let mut usum = CMat::zeros(n, n);
    let mut vsum = CMat::zeros(n, n);
    let half = b.len() / 2;
    for k in 0..half {
        usum = usum.add(&pow.scale(C64::new(b[2 * k + 1], 0.0)));
        vsum = vsum.add(&pow.scale(C64::new(b[2 * k], 0.0)));
        if k + 1 < half {
            pow = pow.mul(&a2);
        }
    }
    (a.mul(&usum), vsum)
}

fn pade13(a: &CMat) -> (CMat, CMat) {
    let n = a.rows();
    let b = &B13;
    let a2 = a.mul(a);
    let a4 = a2.mul(&a2);
    let a6 = a2.mul(&a4);
    let c = |x: f64| C64::new(x, 0.0);
    let w1 = a6
        .scale(c(b[13]))
        .add(&a4.scale(c(b[11])))
        .add(&a2.scale(c(b[9])));
    let w2 = a6
        .scale(c(b[7]))
        .add(&a4.scale(c(b[5])))
        .add(&a2.scale(c(b[3])))
        .add(&CMat::identity(n).scale(c(b[1])));
    let u = a.mul(&a6.mul(&w1).add(&w2));
    let z1 = a6
        .scale(c(b[12]))
        .add(&a4.scale(c(b[10])))
        .add(&a2.scale(c(b[8])));
    let v = a6
        .mul(&z1)
        .add(&a6.scale(c(b[6])))
        .add(&a4.scale(c(b[4])))
        .add(&a2.scale(c(b[2])))
        .add(&CMat::identity(n).scale(c(b[0])));
    (u, v)
}

/// Dense matrix exponential e^A.
pub fn matexp(a: &CMat) -> Result<CMat> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "matexp requires a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let norm = a.norm1();
    let (u, v, squarings) = if norm <= THETA_3 {
        let (u, v) = pade_low(a, &B3);
        (u, v, 0)
    } else if norm <= THETA_5 {
        let (u, v) = pade_low(a, &B5);
        (u, v, 0)
    } else if norm <= THETA_7 {
        let (u, v) = pade_low(a, &B7);
        (u, v, 0)
    } else if norm <= THETA_9 {
        let (u, v) = pade_low(a, &B9);
        (u, v, 0)
    } else {
        let s = if norm > THETA_13 {
            (norm / THETA_13).log2().ceil() as u32
        } else {
            0
        };
        let scaled = a.scale(C64::new(1.0 / f64::powi(2.0, s as i32), 0.0));
        let (u, v) = pade13(&scaled);
        (u, v, s)
    };
    let numer = v.add(&u);
    let denom = v.sub(&u);
    let mut r = solve(&denom, &numer)?;
    for _ in 0..squarings {
        r = r.mul(&r);
    }
    Ok(r)
}

// ---------------------------------------------------------------------------
// nalgebra-backed decompositions
// ---------------------------------------------------------------------------

pub(crate) fn to_dmatrix(a: &CMat) -> DMatrix<C64> {
    DMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)])
}

pub(crate) fn from_dmatrix(a: &DMatrix<C64>) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Solve A X = B for dense square A via LU with partial pivoting.
pub fn solve(a: &CMat, b: &CMat) -> Result<CMat> {
    assert!(a.is_square() && a.rows() == b.rows());
    let lu = to_dmatrix(a).lu();
    match lu.solve(&to_dmatrix(b)) {
        Some(x) => Ok(from_dmatrix(&x)),
        None => Err(Error::Numerical("singular system in LU solve".into())),
    }
}

pub fn solve_vec(a: &CMat, b: &CVec) -> Result<CVec> {
    assert!(a.is_square() && a.rows() == b.dim());
    let lu = to_dmatrix(a).lu();
    let rhs = DVector::from_fn(b.dim(), |i, _| b[i]);
    match lu.solve(&rhs) {
        Some(x) => Ok(CVec {
            data: x.iter().copied().collect(),
        }),
        None => Err(Error::Numerical("singular system in LU solve".into())),
    }
}

/// Thin SVD sorted by descending singular value: (U, σ, V†).
pub fn svd(a: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    let svd = to_dmatrix(a)
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap()
    });
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_s = CMat::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]);
    let vt_s = CMat::from_fn(order.len(), vt.ncols(), |i, j| vt[(order[i], j)]);
    Ok((u_s, sigma, vt_s))
}

/// Singular values only, descending.
pub fn singular_values(a: &CMat) -> Result<Vec<f64>> {
    let svd = to_dmatrix(a)
        .try_svd(false, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(s)
}

/// Spectral norm σ_max.
pub fn spectral_norm(a: &CMat) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
/// Returns (λ, U) with A = U diag(λ) U†.
pub fn hermitian_eigen(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    if !a.is_square() {
        return Err(Error::Shape("hermitian_eigen requires square input".into()));
    }
    let eig = to_dmatrix(&a.hermitize())
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let lam: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let u = CMat::from_fn(a.rows(), a.cols(), |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((lam, u))
}

/// Orthogonal projector onto ker(C): Π = I − Σ_j v_j v_j† over the right
/// singular vectors with σ_j above `rank_tol`. Requires full row rank.
pub fn null_projector(c: &CMat, rank_tol: f64) -> Result<CMat> {
    let n = c.cols();
    if c.rows() == 0 {
        return Ok(CMat::identity(n));
    }
    if c.rows() > c.cols() {
        return Err(Error::Shape(format!(
            "constraint operator has more rows than columns: {}x{}",
            c.rows(),
            c.cols()
        )));
    }
    let (_, sigma, vt) = svd(c)?;
    let smin = sigma.last().copied().unwrap_or(0.0);
    if smin <= rank_tol {
        return Err(Error::RankDeficient {
            sigma: smin,
            tol: rank_tol,
        });
    }
    Ok(CMat::identity(n).sub(&vt.adjoint().mul(&vt)))
}
