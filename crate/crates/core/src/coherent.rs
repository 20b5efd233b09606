//! Binomial coherent states `|C_N(x)> = W_N([N x]) |C_N>` and their kernels.

use ndarray::Array2;
use rayon::prelude::*;
use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float, Integer};
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::{eta, CMatrix, C64};
use crate::torus::TorusPoint;
use crate::weyl::{theta, WeylContext, WeylIndex};

/// Normalization slack tolerated before the fundamental vector is rejected.
pub const TAU_NORM: f64 = 1e-12;

const MIN_PRECISION: u32 = 128;
const MAX_PRECISION: u32 = 1 << 15;

/// `C_N(j) = 2^{-(N-1)/2} sqrt(binom(N-1, j))`, evaluated through log-ratios
/// from the central term.
pub fn binomial_amplitudes(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let top = n - 1;
    let mode = top / 2;
    // ln binom(top, mode) - top ln 2
    let mut log_centre = -(top as f64) * std::f64::consts::LN_2;
    for i in 1..=mode {
        log_centre += ((top - mode + i) as f64 / i as f64).ln();
    }
    let mut logs = vec![0.0; n];
    logs[mode] = log_centre;
    for j in mode..top {
        logs[j + 1] = logs[j] + ((top - j) as f64 / (j + 1) as f64).ln();
    }
    for j in (1..=mode).rev() {
        logs[j - 1] = logs[j] + (j as f64 / (top - j + 1) as f64).ln();
    }
    let amps: Vec<f64> = logs.iter().map(|l| (0.5 * l).exp()).collect();
    let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > TAU_NORM {
        return Err(Error::InvariantViolation(format!("binomial amplitudes have norm {norm}")));
    }
    Ok(amps.into_iter().map(|a| a / norm).collect())
}

/// Fundamental vector together with the Weyl context generating the family.
#[derive(Clone, Debug)]
pub struct CoherentFamily {
    ctx: WeylContext,
    c0: Vec<f64>,
    binomial: bool,
}

impl CoherentFamily {
    pub fn new(ctx: WeylContext) -> Result<Self> {
        let c0 = binomial_amplitudes(ctx.dim())?;
        Ok(CoherentFamily { ctx, c0, binomial: true })
    }

    /// Family generated by an arbitrary real fundamental vector, taken as is.
    /// Used to probe the axioms with non-binomial (or corrupted) vectors.
    pub fn with_fundamental(ctx: WeylContext, c0: Vec<f64>) -> Result<Self> {
        if c0.len() != ctx.dim() {
            return Err(Error::DimensionMismatch(c0.len(), ctx.dim()));
        }
        Ok(CoherentFamily { ctx, c0, binomial: false })
    }

    pub fn ctx(&self) -> &WeylContext {
        &self.ctx
    }

    pub fn dim(&self) -> usize {
        self.c0.len()
    }

    pub fn fundamental(&self) -> &[f64] {
        &self.c0
    }

    pub fn is_binomial(&self) -> bool {
        self.binomial
    }

    /// `[N x]` with both coordinates in `0..N`.
    pub fn cell_of(&self, x: TorusPoint) -> WeylIndex {
        let n = self.dim();
        let floor = |t: f64| ((t * n as f64).floor() as i128).clamp(0, n as i128 - 1);
        WeylIndex::new(floor(x.x1), floor(x.x2))
    }

    /// `W_N(p)|C_N>` for a cell label.
    pub fn state_at(&self, p: WeylIndex) -> Vec<C64> {
        let c: Vec<C64> = self.c0.iter().map(|&a| C64::new(a, 0.0)).collect();
        self.ctx.weyl(p).apply(&c)
    }

    /// Projector `|C_N(x)><C_N(x)|`.
    pub fn projector(&self, x: TorusPoint) -> CMatrix {
        CMatrix::outer(&coherent_state(self, x))
    }
}

pub fn coherent_state(fam: &CoherentFamily, x: TorusPoint) -> Vec<C64> {
    fam.state_at(fam.cell_of(x))
}

/// `|‖C_N‖ - 1|`.
pub fn normalization_residual(fam: &CoherentFamily) -> f64 {
    (fam.c0.iter().map(|a| a * a).sum::<f64>().sqrt() - 1.0).abs()
}

/// `‖(1/N) Σ_p W(p)|C_N><C_N|W(p)* - 1‖_HS`, summed densely as `Ψ Ψ* / N`
/// with the `N²` states as the columns of `Ψ`.
pub fn overcompleteness_residual(fam: &CoherentFamily) -> f64 {
    let n = fam.dim();
    let mut psi = Array2::<C64>::zeros((n, n * n));
    for p1 in 0..n {
        for p2 in 0..n {
            let state = fam.state_at(WeylIndex::new(p1 as i128, p2 as i128));
            psi.column_mut(p1 * n + p2).iter_mut().zip(state).for_each(|(dst, v)| *dst = v);
        }
    }
    let psi_h = psi.t().mapv(|z| z.conj());
    let sum = psi.dot(&psi_h) / C64::new(n as f64, 0.0);
    let id = Array2::<C64>::eye(n);
    (&sum - &id).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `<C_N, W_N(n) C_N>` in double precision.
pub fn overlap_fast(fam: &CoherentFamily, n: WeylIndex) -> C64 {
    let c: Vec<C64> = fam.c0.iter().map(|&a| C64::new(a, 0.0)).collect();
    let wc = fam.ctx.weyl(n).apply(&c);
    fam.c0.iter().zip(&wc).map(|(&a, &b)| a * b).sum()
}

/// High-precision value of `Σ_j C(j+n1) C(j) ω^{-j n2}` with its absolute
/// term sum.
fn overlap_sum_mp(fam: &CoherentFamily, n1: usize, n2: usize, prec: u32) -> (Complex, Float) {
    let n = fam.dim();
    let top = (n - 1) as u32;
    let sqrt_binom: Vec<Float> = (0..n)
        .map(|j| Float::with_val(prec, Integer::from(Integer::binomial_u(top, j as u32))).sqrt())
        .collect();
    let scale = Float::with_val(prec, 2u32).pow(-(top as i32));
    let two_pi = Float::with_val(prec, Constant::Pi) * 2u32;
    let angle = -two_pi / n as u32;
    let (s, c) = angle.sin_cos(Float::new(prec));
    let step = Complex::with_val(prec, (c, s));
    let mut roots = Vec::with_capacity(n);
    let mut r = Complex::with_val(prec, (1, 0));
    for _ in 0..n {
        roots.push(r.clone());
        r *= &step;
    }
    let mut acc = Complex::with_val(prec, (0, 0));
    let mut abs_sum = Float::with_val(prec, 0);
    for j in 0..n {
        let mag = Float::with_val(prec, &sqrt_binom[(j + n1) % n] * &sqrt_binom[j]);
        abs_sum += &mag;
        let term = Complex::with_val(prec, &roots[(j * n2) % n] * &mag);
        acc += &term;
    }
    acc *= &scale;
    abs_sum *= &scale;
    (acc, abs_sum)
}

/// Result of an adaptive-precision overlap evaluation.
#[derive(Clone, Copy, Debug)]
pub struct Overlap {
    pub value: C64,
    /// `ln |<C_N, W_N(n) C_N>|`; `-inf` for an exact zero.
    pub log_modulus: f64,
    pub precision: u32,
}

/// `<C_N, W_N(n) C_N>` with binomial amplitudes in exact integer form and the
/// sum raised in precision until cancellation error is below `1e-16` relative.
pub fn overlap_precise(fam: &CoherentFamily, n: WeylIndex) -> Overlap {
    let dim = fam.dim();
    let n1 = n.n1.rem_euclid(dim as i128) as usize;
    let n2 = n.n2.rem_euclid(dim as i128) as usize;
    let phase = fam.ctx.base_phase(&n);
    let mut prec = MIN_PRECISION;
    loop {
        let (s, abs_sum) = overlap_sum_mp(fam, n1, n2, prec);
        let modulus = Float::with_val(prec, s.abs_ref());
        let err = Float::with_val(prec, &abs_sum * (4 * dim) as u32) >> prec;
        let resolved = !modulus.is_zero() && Float::with_val(prec, &err / &modulus).to_f64() < 1e-16;
        if resolved || prec >= MAX_PRECISION {
            let log_modulus = if modulus.is_zero() { f64::NEG_INFINITY } else { modulus.clone().ln().to_f64() };
            let unit = if modulus.is_zero() {
                C64::new(0.0, 0.0)
            } else {
                C64::new(
                    Float::with_val(prec, s.real() / &modulus).to_f64(),
                    Float::with_val(prec, s.imag() / &modulus).to_f64(),
                )
            };
            let value = phase * unit * log_modulus.exp();
            return Overlap { value, log_modulus, precision: prec };
        }
        prec *= 2;
    }
}

/// `<C_N, W_N(n) C_N>`; amplitudes of the binomial family are evaluated in
/// adaptive precision, other fundamental vectors in double precision.
pub fn overlap(fam: &CoherentFamily, n: WeylIndex) -> C64 {
    if fam.binomial {
        overlap_precise(fam, n).value
    } else {
        overlap_fast(fam, n)
    }
}

/// `|<C_N, W_N(n) C_N>|^2` for all `n ∈ {0..N-1}^2`, indexed `[n1][n2]`.
pub fn overlap_grid(fam: &CoherentFamily) -> Array2<f64> {
    let n = fam.dim();
    let ctx = fam.ctx();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|n1| {
            (0..n)
                .map(|n2| {
                    let s: C64 = (0..n)
                        .map(|j| ctx.root(-((j * n2) as i128)) * fam.c0[(j + n1) % n] * fam.c0[j])
                        .sum();
                    s.norm_sqr()
                })
                .collect()
        })
        .collect();
    Array2::from_shape_fn((n, n), |(a, b)| rows[a][b])
}

/// Right-hand side of the entropic overlap bound
/// `E(n) ≤ N (2^{-(N-1)(1-η1)} + 2^{-(N-1)(1-η2)})`, for `n1 ∈ 1..N`.
pub fn entropic_overlap_bound(n: usize, n1: usize) -> Option<f64> {
    if n < 2 || n1 == 0 || n1 >= n {
        return None;
    }
    let m = (n - 1) as f64;
    let t1 = 0.5 - n1 as f64 / (2.0 * m);
    let t2 = 0.5 + (n - n1) as f64 / (2.0 * m);
    if !(0.0..=1.0).contains(&t1) || !(0.0..=1.0).contains(&t2) {
        return None;
    }
    let e1 = eta_bits(t1);
    let e2 = eta_bits(t2);
    Some(n as f64 * (2f64.powf(-m * (1.0 - e1)) + 2f64.powf(-m * (1.0 - e2))))
}

/// Binary entropy `-t log2 t - (1-t) log2 (1-t)`.
pub fn eta_bits(t: f64) -> f64 {
    (eta(t) + eta(1.0 - t)) / std::f64::consts::LN_2
}

/// Closed form `N cos^2(π n2/N)^{N-1}` of `N |<C_N, W_N(0, n2) C_N>|^2`,
/// returned as its natural logarithm. Evaluated in 256-bit arithmetic since
/// the exponent `N - 1` amplifies rounding in `ln |cos|`.
pub fn clock_overlap_log(n: usize, n2: i128) -> f64 {
    const PREC: u32 = 256;
    let r = n2.rem_euclid(n as i128);
    if 2 * r == n as i128 {
        return f64::NEG_INFINITY;
    }
    let angle = Float::with_val(PREC, Constant::Pi) * Float::with_val(PREC, r) / Float::with_val(PREC, n as u64);
    let log_cos = angle.cos().abs().ln();
    let total = Float::with_val(PREC, n as u64).ln() + log_cos * Float::with_val(PREC, 2 * (n as u64 - 1));
    total.to_f64()
}

/// `|N |<C_N, W_N(0, n2) C_N>|^2 / (N cos^2(π n2/N)^{N-1}) - 1|`, with both
/// sides kept in multiprecision so that large exponents do not cost digits.
/// `None` where the closed form vanishes.
pub fn clock_closed_form_error(fam: &CoherentFamily, n2: i128) -> Option<f64> {
    let n = fam.dim();
    let r = n2.rem_euclid(n as i128) as usize;
    if 2 * r == n {
        return None;
    }
    let mut prec = MIN_PRECISION;
    loop {
        let (s, abs_sum) = overlap_sum_mp(fam, 0, r, prec);
        let modulus = Float::with_val(prec, s.abs_ref());
        let err = Float::with_val(prec, &abs_sum * (4 * n) as u32) >> prec;
        let resolved = !modulus.is_zero() && Float::with_val(prec, &err / &modulus).to_f64() < 1e-20;
        if resolved || prec >= MAX_PRECISION {
            let angle = Float::with_val(prec, Constant::Pi) * r as u64 / n as u64;
            let closed = angle.cos().square().pow((n - 1) as u32);
            let ratio = Float::with_val(prec, modulus.square() / &closed) - 1u32;
            return Some(ratio.abs().to_f64());
        }
        prec *= 2;
    }
}

/// One row of a localization table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalizationRow {
    pub distance: f64,
    /// `N |K_0(x, y)|^2`
    pub kernel: f64,
    /// Analytic bound on `N |K_0|^2`: the entropic bound squared for `n1 ≠ 0`,
    /// the exact closed form for `n1 = 0`.
    pub bound: Option<f64>,
}

pub fn localization_table(fam: &CoherentFamily, pairs: &[(TorusPoint, TorusPoint)]) -> Vec<LocalizationRow> {
    let n = fam.dim();
    pairs
        .iter()
        .map(|&(x, y)| {
            let d = fam.cell_of(y) - fam.cell_of(x);
            let e = overlap_precise(fam, d);
            let kernel = n as f64 * (2.0 * e.log_modulus).exp();
            let n1 = d.n1.rem_euclid(n as i128) as usize;
            let bound = if n1 == 0 {
                Some(clock_overlap_log(n, d.n2).exp())
            } else {
                entropic_overlap_bound(n, n1).map(|b| n as f64 * b * b)
            };
            LocalizationRow { distance: x.distance(&y), kernel, bound }
        })
        .collect()
}

/// Lower (Husimi) symbol `p -> <W(p) C_N, X W(p) C_N>` on the `N × N` cell grid.
pub fn lower_symbol(fam: &CoherentFamily, x: &CMatrix) -> Array2<C64> {
    let n = fam.dim();
    // diag[m][a] = X[a, a - m]
    let diag: Vec<Vec<C64>> = (0..n).map(|m| (0..n).map(|a| x[(a, (a + n - m) % n)]).collect()).collect();
    // ext[i] = c(i mod N)
    let ext: Vec<f64> = (0..3 * n).map(|i| fam.c0[i % n]).collect();
    let fft = FftPlanner::new().plan_fft_inverse(n);
    let rows: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|p1| {
            let lead = &ext[n - p1..2 * n - p1];
            // g[m] = Σ_a c(a-p1) c(a-m-p1) X[a, a-m]
            let mut g: Vec<C64> = (0..n)
                .map(|m| {
                    let lag = &ext[2 * n - m - p1..3 * n - m - p1];
                    let (mut re, mut im) = (0.0, 0.0);
                    for ((d, &u), &v) in diag[m].iter().zip(lead).zip(lag) {
                        let w = u * v;
                        re += d.re * w;
                        im += d.im * w;
                    }
                    C64::new(re, im)
                })
                .collect();
            // Σ_m g[m] exp(2πi m p2 / N)
            fft.process(&mut g);
            g
        })
        .collect();
    Array2::from_shape_fn((n, n), |(a, b)| rows[a][b])
}

/// Phase-space centre of `|C_N>` on the torus: mean position over `N` and,
/// for a real vector, zero mean momentum.
pub fn fundamental_centre(fam: &CoherentFamily) -> (f64, f64) {
    let n = fam.dim() as f64;
    let mean: f64 = fam.c0.iter().enumerate().map(|(j, a)| j as f64 * a * a).sum();
    (mean / n, 0.0)
}

/// `|K_k(x, y)|^2 = <C_N(y), Θ^k(P_x) C_N(y)>`.
pub fn dynamical_kernel(fam: &CoherentFamily, x: TorusPoint, y: TorusPoint, k: i64) -> Result<f64> {
    let evolved = theta(&fam.ctx, &fam.projector(x), k)?;
    let psi = coherent_state(fam, y);
    let v = evolved.apply(&psi);
    Ok(psi.iter().zip(&v).map(|(a, b)| a.conj() * b).sum::<C64>().re)
}

/// `|K_k(x, y)|^2` for `y` ranging over the cell grid, indexed `[p1][p2]`.
pub fn dynamical_kernel_grid(fam: &CoherentFamily, x: TorusPoint, k: i64) -> Result<Array2<f64>> {
    let evolved = theta(&fam.ctx, &fam.projector(x), k)?;
    Ok(lower_symbol(fam, &evolved).mapv(|z| z.re))
}
