//! Dense complex matrices and the Hermitian spectral toolkit used by every
//! other module: eigendecomposition, PSD square roots, von Neumann entropy,
//! trace distance and the Fannes continuity bound.
//!
//! The Hermitian eigensolver reduces the matrix to real symmetric tridiagonal
//! form with complex Householder reflections, then runs implicit QL with
//! Wilkinson-style shifts. Eigenvectors are accumulated only when requested.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Hermiticity tolerance per unit dimension.
pub const TAU_HERM_PER_DIM: f64 = 1e-10;
/// Trace tolerance for density matrices.
pub const TAU_TRACE: f64 = 1e-8;
/// Eigenvalues above `-TAU_PSD` are treated as zero.
pub const TAU_PSD: f64 = 1e-10;

const QL_MAX_ITER: usize = 64;

#[cfg(test)]
pub(crate) fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Square complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix(Array2<C64>);

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CMatrix({}x{}) {:?}", self.dim(), self.dim(), self.0)
    }
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix(Array2::zeros((n, n)))
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.0[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        CMatrix(Array2::from_shape_fn((n, n), |(i, j)| f(i, j)))
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m.0[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    pub fn from_array(a: Array2<C64>) -> Result<Self> {
        let (r, c) = a.dim();
        if r != c {
            return Err(Error::DimensionMismatch(r, c));
        }
        Ok(CMatrix(a))
    }

    /// Row-major `n * n` entries.
    pub fn from_row_major(n: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch(n * n, data.len()));
        }
        Ok(CMatrix(Array2::from_shape_vec((n, n), data).expect("shape checked")))
    }

    /// Rank-one projector `|v><v|`.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn view(&self) -> ArrayView2<'_, C64> {
        self.0.view()
    }

    pub fn as_array(&self) -> &Array2<C64> {
        &self.0
    }

    pub fn into_array(self) -> Array2<C64> {
        self.0
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<C64> {
        self.0.iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        CMatrix(self.0.t().mapv(|z| z.conj()))
    }

    pub fn matmul(&self, rhs: &CMatrix) -> CMatrix {
        CMatrix(self.0.dot(&rhs.0))
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.0[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix(self.0.mapv(|z| z * s))
    }

    pub fn trace(&self) -> C64 {
        self.0.diag().sum()
    }

    /// Normalized trace `tr(X) / N`.
    pub fn tau(&self) -> C64 {
        self.trace() / self.dim() as f64
    }

    /// Frobenius norm.
    pub fn hs_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `sqrt(tau(X* X))`.
    pub fn normalized_hs_norm(&self) -> f64 {
        (self.0.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.dim() as f64).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |X_ij - conj(X_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `(X + X*) / 2`.
    pub fn hermitian_part(&self) -> CMatrix {
        let n = self.dim();
        CMatrix::from_fn(n, |i, j| (self.0[(i, j)] + self.0[(j, i)].conj()) * 0.5)
    }
}

/// `tau(a* b)` without forming the product.
pub fn tau_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    assert_eq!(a.dim(), b.dim());
    let s: C64 = a.0.iter().zip(b.0.iter()).map(|(x, y)| x.conj() * y).sum();
    s / a.dim() as f64
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.0[idx]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

/// Eigenvalues in ascending order with matching unitary eigenvector columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl Spectrum {
    /// `V diag(g(λ)) V*`.
    pub fn map(&self, g: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let gl: Vec<f64> = self.eigenvalues.iter().map(|&l| g(l)).collect();
        let vs = CMatrix::from_fn(n, |i, j| v[(i, j)] * gl[j]);
        vs.matmul(&v.adjoint())
    }
}

fn check_hermitian(m: &CMatrix) -> Result<()> {
    let tol = TAU_HERM_PER_DIM * m.dim() as f64;
    let deviation = m.hermiticity_defect();
    if deviation > tol {
        return Err(Error::NotHermitian { deviation, tolerance: tol });
    }
    Ok(())
}

/// Householder reduction of a Hermitian matrix (row-major, full storage) to
/// real symmetric tridiagonal form. Returns `(diag, offdiag, basis)` where
/// `offdiag[i]` couples `i` and `i + 1` and `basis` (if requested) holds
/// `Q D` with `A = (Q D) T (Q D)*`.
fn tridiagonalize(n: usize, a: &mut [C64], want_basis: bool) -> (Vec<f64>, Vec<f64>, Option<Vec<C64>>) {
    let mut q = if want_basis {
        let mut q = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            q[i * n + i] = C64::new(1.0, 0.0);
        }
        Some(q)
    } else {
        None
    };
    let mut sub = vec![C64::new(0.0, 0.0); n.saturating_sub(1)];
    let mut v = vec![C64::new(0.0, 0.0); n];
    let mut p = vec![C64::new(0.0, 0.0); n];

    for k in 0..n.saturating_sub(1) {
        let len = n - k - 1;
        let x0 = a[(k + 1) * n + k];
        if len == 1 {
            sub[k] = x0;
            continue;
        }
        let xnorm = (0..len).map(|i| a[(k + 1 + i) * n + k].norm_sqr()).sum::<f64>().sqrt();
        let tail = xnorm * xnorm - x0.norm_sqr();
        if tail <= f64::MIN_POSITIVE || xnorm == 0.0 {
            sub[k] = x0;
            continue;
        }
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        let alpha = -phase * xnorm;
        let v = &mut v[..len];
        for i in 0..len {
            v[i] = a[(k + 1 + i) * n + k];
        }
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= vnorm;
        }

        // p = B v on the trailing block, beta = v* p (real)
        let off = k + 1;
        let p = &mut p[..len];
        for i in 0..len {
            let row = &a[(off + i) * n + off..(off + i) * n + n];
            p[i] = row.iter().zip(v.iter()).map(|(b, vj)| b * vj).sum();
        }
        let beta: f64 = v.iter().zip(p.iter()).map(|(vi, pi)| (vi.conj() * pi).re).sum();
        for i in 0..len {
            p[i] -= v[i] * beta;
        }
        // B <- B - 2 v w* - 2 w v*
        for i in 0..len {
            let vi2 = v[i] * 2.0;
            let wi2 = p[i] * 2.0;
            let row = &mut a[(off + i) * n + off..(off + i) * n + n];
            for j in 0..len {
                row[j] -= vi2 * p[j].conj() + wi2 * v[j].conj();
            }
        }
        for i in 0..len {
            a[(off + i) * n + k] = C64::new(0.0, 0.0);
            a[k * n + off + i] = C64::new(0.0, 0.0);
        }
        a[off * n + k] = alpha;
        a[k * n + off] = alpha.conj();
        sub[k] = alpha;

        if let Some(q) = q.as_mut() {
            for r in 0..n {
                let row = &mut q[r * n + off..r * n + n];
                let s: C64 = row.iter().zip(v.iter()).map(|(x, vj)| x * vj).sum();
                let s2 = s * 2.0;
                for j in 0..len {
                    row[j] -= s2 * v[j].conj();
                }
            }
        }
    }

    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    // Phase-rotate to a real non-negative subdiagonal.
    let mut delta = vec![C64::new(1.0, 0.0); n];
    let mut off = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let e = sub[k];
        let r = e.norm();
        off[k] = r;
        delta[k + 1] = if r > 0.0 { delta[k] * (e / r) } else { delta[k] };
    }
    if let Some(q) = q.as_mut() {
        for r in 0..n {
            for j in 0..n {
                q[r * n + j] *= delta[j];
            }
        }
    }
    (diag, off, q)
}

/// Implicit QL on a symmetric tridiagonal matrix. `e[i]` couples `i, i+1`.
/// Rotations are applied to the columns of `z` (row-major `n x n`) if given.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [C64]>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m] == 0.0 {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(Error::NoConvergence(QL_MAX_ITER));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m as isize - 1;
            let mut underflow = false;
            while i >= l as isize {
                let iu = i as usize;
                let f = s * e[iu];
                let b = c * e[iu];
                r = f.hypot(g);
                e[iu + 1] = r;
                if r == 0.0 {
                    d[iu + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[iu + 1] - p;
                r = (d[iu] - g) * s + 2.0 * c * b;
                p = s * r;
                d[iu + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..n {
                        let f = z[k * n + iu + 1];
                        z[k * n + iu + 1] = z[k * n + iu] * s + f * c;
                        z[k * n + iu] = z[k * n + iu] * c - f * s;
                    }
                }
                i -= 1;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Full eigendecomposition of a Hermitian matrix.
pub fn eig_hermitian(m: &CMatrix) -> Result<Spectrum> {
    check_hermitian(m)?;
    let n = m.dim();
    let mut a = m.hermitian_part().to_row_major();
    let (mut d, mut e, q) = tridiagonalize(n, &mut a, true);
    let mut q = q.expect("basis requested");
    tridiagonal_ql(&mut d, &mut e, Some(&mut q))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let eigenvalues = order.iter().map(|&i| d[i]).collect();
    let eigenvectors = CMatrix::from_fn(n, |r, c| q[r * n + order[c]]);
    Ok(Spectrum { eigenvalues, eigenvectors })
}

/// Eigenvalues only (ascending); cheaper than [`eig_hermitian`].
pub fn eigvals_hermitian(m: &CMatrix) -> Result<Vec<f64>> {
    check_hermitian(m)?;
    let n = m.dim();
    let mut a = m.hermitian_part().to_row_major();
    let (mut d, mut e, _) = tridiagonalize(n, &mut a, false);
    tridiagonal_ql(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Principal square root of a Hermitian PSD matrix. Eigenvalues in
/// `[-TAU_PSD, 0)` are clamped to zero.
pub fn sqrt_psd(m: &CMatrix) -> Result<CMatrix> {
    let spec = eig_hermitian(m)?;
    let min = spec.eigenvalues.first().copied().unwrap_or(0.0);
    if min < -TAU_PSD {
        return Err(Error::NotPsd(min));
    }
    Ok(spec.map(|l| l.max(0.0).sqrt()))
}

/// `η(x) = -x log x` with `η(0) = 0`.
pub fn eta(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogBase {
    E,
    Two,
}

impl LogBase {
    fn scale(self) -> f64 {
        match self {
            LogBase::E => 1.0,
            LogBase::Two => std::f64::consts::LN_2.recip(),
        }
    }
}

/// Hermitian, unit-trace matrix. Positivity is checked when the spectrum is
/// taken.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        check_hermitian(&mat)?;
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > TAU_TRACE || tr.im.abs() > TAU_TRACE {
            return Err(Error::InvalidState(tr.re));
        }
        if !mat.is_finite() {
            return Err(Error::InvalidState(f64::NAN));
        }
        Ok(DensityMatrix { mat })
    }

    pub fn from_diag(p: &[f64]) -> Result<Self> {
        Self::new(CMatrix::from_diag(p))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    /// Eigenvalues clamped to `[0, 1]` and renormalized.
    pub fn probabilities(&self) -> Result<Vec<f64>> {
        clamp_spectrum(eigvals_hermitian(&self.mat)?)
    }
}

/// Validates a density-matrix spectrum and clamps it onto the simplex.
pub fn clamp_spectrum(mut eig: Vec<f64>) -> Result<Vec<f64>> {
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -TAU_PSD {
        return Err(Error::NotPsd(min));
    }
    let sum: f64 = eig.iter().sum();
    if (sum - 1.0).abs() > TAU_TRACE {
        return Err(Error::InvalidState(sum));
    }
    for x in eig.iter_mut() {
        *x = x.clamp(0.0, 1.0);
    }
    let s: f64 = eig.iter().sum();
    for x in eig.iter_mut() {
        *x /= s;
    }
    Ok(eig)
}

/// Shannon entropy (natural log) of a probability vector.
pub fn shannon(p: impl IntoIterator<Item = f64>) -> f64 {
    p.into_iter().map(eta).sum()
}

pub fn von_neumann_entropy(rho: &DensityMatrix, base: LogBase) -> Result<f64> {
    Ok(shannon(rho.probabilities()?) * base.scale())
}

/// Trace norm of the difference of two states.
pub fn trace_norm_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let diff = a.matrix() - b.matrix();
    Ok(eigvals_hermitian(&diff)?.iter().map(|l| l.abs()).sum())
}

/// `Δ log d + η(Δ)`.
pub fn fannes_bound(delta: f64, dim: usize) -> f64 {
    delta * (dim as f64).ln() + eta(delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, rng: &mut impl Rng, scale: f64) -> CMatrix {
        CMatrix::from_fn(n, |_, _| c64(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)))
    }

    fn random_hermitian(n: usize, rng: &mut impl Rng, scale: f64) -> CMatrix {
        let b = random_matrix(n, rng, scale);
        &b + &b.adjoint()
    }

    fn random_state(n: usize, rng: &mut impl Rng) -> DensityMatrix {
        let b = random_matrix(n, rng, 1.0);
        let g = b.matmul(&b.adjoint());
        let t = g.trace().re;
        DensityMatrix::new(g.scale(c64(1.0 / t, 0.0))).unwrap()
    }

    fn reconstruct(s: &Spectrum) -> CMatrix {
        s.map(|l| l)
    }

    #[test]
    fn involution_spectrum() {
        let m = CMatrix::from_fn(2, |i, j| if i != j { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
        let s = eig_hermitian(&m).unwrap();
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_spectrum() {
        let s = eig_hermitian(&CMatrix::identity(4)).unwrap();
        assert!(s.eigenvalues.iter().all(|l| (l - 1.0).abs() < 1e-15));
    }

    #[test]
    fn random_hermitian_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &n in &[1usize, 2, 3, 8, 17, 40] {
            let h = random_hermitian(n, &mut rng, 1.0);
            let s = eig_hermitian(&h).unwrap();
            let r = &reconstruct(&s) - &h;
            assert!(r.hs_norm() <= 1e-10 * n as f64, "n={n} residual {}", r.hs_norm());
            let u = s.eigenvectors.matmul(&s.eigenvectors.adjoint());
            assert!((&u - &CMatrix::identity(n)).hs_norm() < 1e-12 * n as f64);
            assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eigvals_agree_with_full_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = random_hermitian(12, &mut rng, 3.0);
        let a = eigvals_hermitian(&h).unwrap();
        let b = eig_hermitian(&h).unwrap().eigenvalues;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn large_norm_inputs_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut h = random_hermitian(10, &mut rng, 1.0);
        let s = 1e3 / h.hs_norm();
        h = h.scale(c64(s, 0.0));
        let spec = eig_hermitian(&h).unwrap();
        assert!((&reconstruct(&spec) - &h).hs_norm() <= 1e-10 * 10.0);
    }

    #[test]
    fn degenerate_and_diagonal_inputs() {
        let d = CMatrix::from_diag(&[3.0, -1.0, 3.0, 0.0]);
        let s = eig_hermitian(&d).unwrap();
        assert_eq!(s.eigenvalues, vec![-1.0, 0.0, 3.0, 3.0]);
        let z = eig_hermitian(&CMatrix::zeros(3)).unwrap();
        assert!(z.eigenvalues.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_fn(2, |i, j| if i < j { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn sqrt_examples() {
        let i = sqrt_psd(&CMatrix::identity(3)).unwrap();
        assert!((&i - &CMatrix::identity(3)).hs_norm() < 1e-14);
        let r = sqrt_psd(&CMatrix::from_diag(&[4.0, 9.0])).unwrap();
        assert!((&r - &CMatrix::from_diag(&[2.0, 3.0])).hs_norm() < 1e-14);
        let v = [c64(0.6, 0.0), c64(0.0, 0.8)];
        let p = CMatrix::outer(&v);
        let rp = sqrt_psd(&p).unwrap();
        assert!((&rp - &p).hs_norm() < 1e-12);
        assert!(matches!(sqrt_psd(&CMatrix::from_diag(&[1.0, -0.5])), Err(Error::NotPsd(_))));
    }

    #[test]
    fn sqrt_of_random_psd_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for &n in &[4usize, 16, 32] {
            let b = random_matrix(n, &mut rng, 1.0);
            let m = b.matmul(&b.adjoint());
            let r = sqrt_psd(&m).unwrap();
            assert!(r.hermiticity_defect() < 1e-12);
            assert!(eigvals_hermitian(&r).unwrap()[0] > -1e-12);
            assert!((&r.matmul(&r) - &m).hs_norm() <= 1e-9 * n as f64);
        }
    }

    #[test]
    fn entropy_examples() {
        let pure = DensityMatrix::from_diag(&[1.0, 0.0]).unwrap();
        assert_eq!(von_neumann_entropy(&pure, LogBase::E).unwrap(), 0.0);
        let half = DensityMatrix::from_diag(&[0.5, 0.5]).unwrap();
        assert!((von_neumann_entropy(&half, LogBase::E).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((von_neumann_entropy(&half, LogBase::Two).unwrap() - 1.0).abs() < 1e-15);
        let quarter = DensityMatrix::from_diag(&[0.25; 4]).unwrap();
        assert!((von_neumann_entropy(&quarter, LogBase::E).unwrap() - 4f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn invalid_states_rejected() {
        assert!(matches!(DensityMatrix::from_diag(&[0.7, 0.7]), Err(Error::InvalidState(_))));
        let neg = DensityMatrix::from_diag(&[1.5, -0.5]).unwrap();
        assert!(matches!(neg.probabilities(), Err(Error::NotPsd(_))));
    }

    #[test]
    fn entropy_is_unitarily_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let rho = random_state(6, &mut rng);
            let u = eig_hermitian(&random_hermitian(6, &mut rng, 1.0)).unwrap().eigenvectors;
            let rotated = DensityMatrix::new(u.matmul(rho.matrix()).matmul(&u.adjoint()).hermitian_part()).unwrap();
            let a = von_neumann_entropy(&rho, LogBase::E).unwrap();
            let b = von_neumann_entropy(&rotated, LogBase::E).unwrap();
            assert!((a - b).abs() < 1e-10);
            assert!(a >= 0.0 && a <= 6f64.ln() + 1e-12);
        }
    }

    #[test]
    fn trace_distance_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho = random_state(3, &mut rng);
        assert!(trace_norm_distance(&rho, &rho).unwrap() < 1e-14);
        let a = DensityMatrix::from_diag(&[1.0, 0.0]).unwrap();
        let b = DensityMatrix::from_diag(&[0.0, 1.0]).unwrap();
        assert!((trace_norm_distance(&a, &b).unwrap() - 2.0).abs() < 1e-15);
        let c = DensityMatrix::from_diag(&[0.5, 0.5]).unwrap();
        assert!((trace_norm_distance(&a, &c).unwrap() - 1.0).abs() < 1e-15);
        let d = DensityMatrix::from_diag(&[1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(trace_norm_distance(&a, &d), Err(Error::DimensionMismatch(2, 3))));
    }

    #[test]
    fn fannes_examples() {
        assert_eq!(fannes_bound(0.0, 7), 0.0);
        let e = std::f64::consts::E;
        let expected = 2f64.ln() / e + 1.0 / e;
        assert!((fannes_bound(1.0 / e, 2) - expected).abs() < 1e-15);
    }

    #[test]
    fn fannes_property_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 100 {
            let a = random_state(4, &mut rng);
            // a convex perturbation keeps the pair close
            let b0 = random_state(4, &mut rng);
            let t: f64 = rng.gen_range(0.0..0.4);
            let mixed = &a.matrix().scale(c64(1.0 - t, 0.0)) + &b0.matrix().scale(c64(t, 0.0));
            let b = DensityMatrix::new(mixed).unwrap();
            let delta = trace_norm_distance(&a, &b).unwrap();
            if delta > 1.0 / std::f64::consts::E {
                continue;
            }
            let gap = (von_neumann_entropy(&a, LogBase::E).unwrap() - von_neumann_entropy(&b, LogBase::E).unwrap()).abs();
            assert!(gap <= fannes_bound(delta, 4) + 1e-12);
            checked += 1;
        }
    }
}
