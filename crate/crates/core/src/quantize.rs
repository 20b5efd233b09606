//! Anti-Wick quantization, coherent-state dequantization, Weyl quantization
//! of trigonometric polynomials and Egorov-type residuals.
//!
//! Coherent states are constant on the `1/N` grid cells, so the anti-Wick
//! integral reduces to the finite sum
//! `(1/N) Σ_p f̄_p W(p)|C_N><C_N|W(p)*` over cell averages `f̄_p`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::coherent::{fundamental_centre, lower_symbol, CoherentFamily};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::torus::{cat_apply, CatMap, IntMat, PartitionSpec, TorusPoint};
use crate::weyl::{theta, WeylContext, WeylIndex};

/// Default `s` of the `s × s` midpoint subsampling used for generic functions.
pub const DEFAULT_SUBSAMPLE: usize = 4;

/// Finite Fourier series `Σ f̂(m) exp(2πi m·x)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrigPolynomial {
    pub coeffs: BTreeMap<(i64, i64), C64>,
}

impl TrigPolynomial {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_term(mut self, m: (i64, i64), c: C64) -> Self {
        *self.coeffs.entry(m).or_insert(C64::new(0.0, 0.0)) += c;
        self
    }

    pub fn constant(c: f64) -> Self {
        Self::new().with_term((0, 0), C64::new(c, 0.0))
    }

    /// `exp(2πi m·x)`.
    pub fn exponential(m: (i64, i64)) -> Self {
        Self::new().with_term(m, C64::new(1.0, 0.0))
    }

    /// `cos(2π m·x)`.
    pub fn cosine(m: (i64, i64)) -> Self {
        Self::new().with_term(m, C64::new(0.5, 0.0)).with_term((-m.0, -m.1), C64::new(0.5, 0.0))
    }

    pub fn eval(&self, x: TorusPoint) -> C64 {
        self.coeffs
            .iter()
            .map(|(&(m1, m2), &c)| c * C64::from_polar(1.0, 2.0 * PI * (m1 as f64 * x.x1 + m2 as f64 * x.x2)))
            .sum()
    }

    /// `Σ |f̂(m)|^2`.
    pub fn l2_norm_sqr(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum()
    }

    /// Coefficients of `x ↦ f(M x)` for an integer matrix `M`: `m ↦ M^t m`.
    pub fn compose_linear(&self, m: &IntMat) -> TrigPolynomial {
        let mut out = TrigPolynomial::new();
        for (&(a, b), &c) in &self.coeffs {
            let (a, b) = (a as i128, b as i128);
            let m1 = m[0][0] * a + m[1][0] * b;
            let m2 = m[0][1] * a + m[1][1] * b;
            out = out.with_term((m1 as i64, m2 as i64), c);
        }
        out
    }

    /// Coefficients of `x ↦ f(x + t)`.
    pub fn translate(&self, t: (f64, f64)) -> TrigPolynomial {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(&(m1, m2), &c)| ((m1, m2), c * C64::from_polar(1.0, 2.0 * PI * (m1 as f64 * t.0 + m2 as f64 * t.1))))
            .collect();
        TrigPolynomial { coeffs }
    }
}

type Evaluator = Arc<dyn Fn(TorusPoint) -> C64 + Send + Sync>;

/// Bounded function on the torus.
#[derive(Clone)]
pub enum TorusFunction {
    Constant(C64),
    /// Indicator of `[lo1, hi1) × [lo2, hi2)` inside the unit square.
    Rect { x1: [f64; 2], x2: [f64; 2] },
    /// Indicator of the set `{x : atom(A^steps x) = atom}`; `steps = 0` is
    /// the grid atom itself, `steps = ℓ` its preimage `T^{-ℓ} C`.
    Atom { partition: PartitionSpec, atom: usize, map: Option<CatMap>, steps: i64 },
    Trig(TrigPolynomial),
    Generic(Evaluator),
}

impl fmt::Debug for TorusFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TorusFunction::Constant(c) => write!(f, "Constant({c})"),
            TorusFunction::Rect { x1, x2 } => write!(f, "Rect({x1:?} x {x2:?})"),
            TorusFunction::Atom { partition, atom, steps, .. } => {
                write!(f, "Atom(q_side={}, atom={atom}, steps={steps})", partition.q_side())
            }
            TorusFunction::Trig(t) => write!(f, "Trig({:?})", t.coeffs),
            TorusFunction::Generic(_) => write!(f, "Generic"),
        }
    }
}

impl TorusFunction {
    pub fn one() -> Self {
        TorusFunction::Constant(C64::new(1.0, 0.0))
    }

    pub fn left_half() -> Self {
        TorusFunction::Rect { x1: [0.0, 0.5], x2: [0.0, 1.0] }
    }

    pub fn right_half() -> Self {
        TorusFunction::Rect { x1: [0.5, 1.0], x2: [0.0, 1.0] }
    }

    /// `cos(2π x1)`.
    pub fn cos_x1() -> Self {
        TorusFunction::Trig(TrigPolynomial::cosine((1, 0)))
    }

    pub fn atom(partition: PartitionSpec, atom: usize) -> Self {
        TorusFunction::Atom { partition, atom, map: None, steps: 0 }
    }

    /// Indicator of `T^{-steps} C_atom`.
    pub fn evolved_atom(partition: PartitionSpec, atom: usize, map: CatMap, steps: i64) -> Self {
        TorusFunction::Atom { partition, atom, map: Some(map), steps }
    }

    pub fn generic(f: impl Fn(TorusPoint) -> C64 + Send + Sync + 'static) -> Self {
        TorusFunction::Generic(Arc::new(f))
    }

    pub fn is_trig(&self) -> bool {
        matches!(self, TorusFunction::Trig(_) | TorusFunction::Constant(_))
    }

    pub fn eval(&self, x: TorusPoint) -> C64 {
        match self {
            TorusFunction::Constant(c) => *c,
            TorusFunction::Rect { x1, x2 } => {
                let inside = x1[0] <= x.x1 && x.x1 < x1[1] && x2[0] <= x.x2 && x.x2 < x2[1];
                C64::new(if inside { 1.0 } else { 0.0 }, 0.0)
            }
            TorusFunction::Atom { partition, atom, map, steps } => {
                let y = match map {
                    Some(m) if *steps != 0 => cat_apply(m, x, *steps),
                    _ => x,
                };
                C64::new(if partition.atom_of(y) == *atom { 1.0 } else { 0.0 }, 0.0)
            }
            TorusFunction::Trig(t) => t.eval(x),
            TorusFunction::Generic(g) => g(x),
        }
    }

    /// `f ∘ A^j`.
    pub fn compose(&self, map: &CatMap, j: i64) -> TorusFunction {
        if j == 0 {
            return self.clone();
        }
        match self {
            TorusFunction::Constant(c) => TorusFunction::Constant(*c),
            TorusFunction::Trig(t) => TorusFunction::Trig(t.compose_linear(&map.power(j))),
            TorusFunction::Atom { partition, atom, map: inner, steps } if inner.is_none() || inner == &Some(*map) => {
                TorusFunction::Atom { partition: *partition, atom: *atom, map: Some(*map), steps: steps + j }
            }
            other => {
                let f = other.clone();
                let m = *map;
                TorusFunction::generic(move |x| f.eval(cat_apply(&m, x, j)))
            }
        }
    }

    /// Trigonometric coefficients, if `f` is a trigonometric polynomial.
    pub fn trig(&self) -> Option<TrigPolynomial> {
        match self {
            TorusFunction::Trig(t) => Some(t.clone()),
            TorusFunction::Constant(c) => Some(TrigPolynomial::new().with_term((0, 0), *c)),
            _ => None,
        }
    }
}

/// `f̄_p = N^2 ∫_{cell p} f dμ` on the `N × N` grid, indexed `[p1][p2]`.
#[derive(Clone, Debug)]
pub struct CellAverages {
    pub n: usize,
    pub values: Array2<C64>,
}

impl CellAverages {
    pub fn get(&self, p1: usize, p2: usize) -> C64 {
        self.values[(p1, p2)]
    }

    pub fn mean(&self) -> C64 {
        self.values.sum() / (self.n * self.n) as f64
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `(1/N^2) Σ_p conj(f̄_p) ḡ_p`.
    pub fn inner(&self, other: &CellAverages) -> C64 {
        self.values.iter().zip(other.values.iter()).map(|(a, b)| a.conj() * b).sum::<C64>() / (self.n * self.n) as f64
    }
}

fn interval_overlap(lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    (hi.min(b) - lo.max(a)).max(0.0)
}

/// `N ∫_{p/N}^{(p+1)/N} exp(2πi m x) dx`.
fn cell_fourier(m: i64, p: usize, n: usize) -> C64 {
    if m == 0 {
        return C64::new(1.0, 0.0);
    }
    let theta = 2.0 * PI * m as f64 / n as f64;
    let start = C64::from_polar(1.0, theta * p as f64);
    // (e^{iθ} - 1) / (iθ), evaluated stably for small θ
    let half = 0.5 * theta;
    let sinc = if half.abs() < 1e-8 { 1.0 } else { half.sin() / half };
    start * C64::from_polar(sinc, half)
}

/// Cell averages with `s × s` midpoint subsampling where no closed form is
/// used.
pub fn cell_averages(f: &TorusFunction, n: usize, s: usize) -> CellAverages {
    let nf = n as f64;
    let values = match f {
        TorusFunction::Constant(c) => Array2::from_elem((n, n), *c),
        TorusFunction::Rect { x1, x2 } => {
            let w1: Vec<f64> = (0..n).map(|p| nf * interval_overlap(p as f64 / nf, (p + 1) as f64 / nf, x1[0], x1[1])).collect();
            let w2: Vec<f64> = (0..n).map(|p| nf * interval_overlap(p as f64 / nf, (p + 1) as f64 / nf, x2[0], x2[1])).collect();
            Array2::from_shape_fn((n, n), |(a, b)| C64::new(w1[a] * w2[b], 0.0))
        }
        TorusFunction::Atom { partition, atom, map, steps } if map.is_none() || *steps == 0 => {
            let (r1, r2) = partition.atom_rect(*atom);
            return cell_averages(&TorusFunction::Rect { x1: r1, x2: r2 }, n, s);
        }
        TorusFunction::Atom { partition, atom, map: Some(map), steps } => evolved_atom_averages(partition, *atom, map, *steps, n, s),
        TorusFunction::Trig(t) => {
            let mut out = Array2::zeros((n, n));
            for (&(m1, m2), &c) in &t.coeffs {
                let f1: Vec<C64> = (0..n).map(|p| cell_fourier(m1, p, n)).collect();
                let f2: Vec<C64> = (0..n).map(|p| cell_fourier(m2, p, n)).collect();
                for ((a, b), v) in out.indexed_iter_mut() {
                    *v += c * f1[a] * f2[b];
                }
            }
            out
        }
        other => {
            let s = s.max(1);
            let rows: Vec<Vec<C64>> = (0..n)
                .into_par_iter()
                .map(|p1| {
                    (0..n)
                        .map(|p2| {
                            let mut acc = C64::new(0.0, 0.0);
                            for a in 0..s {
                                for b in 0..s {
                                    let x = TorusPoint::new(
                                        (p1 as f64 + (a as f64 + 0.5) / s as f64) / nf,
                                        (p2 as f64 + (b as f64 + 0.5) / s as f64) / nf,
                                    );
                                    acc += other.eval(x);
                                }
                            }
                            acc / (s * s) as f64
                        })
                        .collect()
                })
                .collect();
            Array2::from_shape_fn((n, n), |(a, b)| rows[a][b])
        }
    };
    CellAverages { n, values }
}

/// Midpoint lattice of step `1/(N s)` carried as integers modulo `2 N s`.
fn evolved_atom_averages(partition: &PartitionSpec, atom: usize, map: &CatMap, steps: i64, n: usize, s: usize) -> Array2<C64> {
    let s = s.max(1);
    let modulus = 2 * (n * s) as i128;
    let m = map.power_mod(steps, modulus);
    let rows: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|p1| {
            (0..n)
                .map(|p2| {
                    let mut hits = 0usize;
                    for a in 0..s {
                        let x1 = (2 * (p1 * s + a) + 1) as i128;
                        for b in 0..s {
                            let x2 = (2 * (p2 * s + b) + 1) as i128;
                            let y1 = (m[0][0] * x1 + m[0][1] * x2).rem_euclid(modulus);
                            let y2 = (m[1][0] * x1 + m[1][1] * x2).rem_euclid(modulus);
                            if partition.atom_of_lattice(y1, y2, modulus) == atom {
                                hits += 1;
                            }
                        }
                    }
                    C64::new(hits as f64 / (s * s) as f64, 0.0)
                })
                .collect()
        })
        .collect();
    Array2::from_shape_fn((n, n), |(a, b)| rows[a][b])
}

/// `(1/N) Σ_p f̄_p W(p)|C_N><C_N|W(p)*` from precomputed cell averages.
pub fn anti_wick_averages(fam: &CoherentFamily, avg: &CellAverages) -> Result<CMatrix> {
    let n = fam.dim();
    if avg.n != n {
        return Err(Error::DimensionMismatch(avg.n, n));
    }
    // F(p1, m) = Σ_{p2} f̄[p1, p2] exp(-2πi m p2 / N)
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut spectra = avg.values.clone();
    for mut row in spectra.rows_mut() {
        let mut buf = row.to_vec();
        fft.process(&mut buf);
        row.assign(&ndarray::Array1::from(buf));
    }
    // column-major copy so the p1 sum runs over contiguous memory
    let by_freq = spectra.t().as_standard_layout().to_owned();
    let c = fam.fundamental();
    // rev[i] = c((n - 1 - i) mod n) repeated, so c(a - p1) = rev[n - 1 - a + p1]
    let rev: Vec<f64> = (0..2 * n).map(|i| c[(2 * n - 1 - i) % n]).collect();
    let inv_n = 1.0 / n as f64;
    let rows: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            let ca = &rev[n - 1 - a..2 * n - 1 - a];
            (0..n)
                .map(|b| {
                    let m = (a + n - b) % n;
                    let cb = &rev[n - 1 - b..2 * n - 1 - b];
                    let freq = by_freq.row(m);
                    let mut re = 0.0;
                    let mut im = 0.0;
                    for ((f, &x), &y) in freq.iter().zip(ca).zip(cb) {
                        let w = x * y;
                        re += f.re * w;
                        im += f.im * w;
                    }
                    C64::new(re * inv_n, im * inv_n)
                })
                .collect()
        })
        .collect();
    CMatrix::from_row_major(n, rows.into_iter().flatten().collect())
}

/// Anti-Wick quantization `γ_{N∞}(f)`.
pub fn anti_wick(fam: &CoherentFamily, f: &TorusFunction) -> Result<CMatrix> {
    anti_wick_averages(fam, &cell_averages(f, fam.dim(), DEFAULT_SUBSAMPLE))
}

pub fn anti_wick_subsampled(fam: &CoherentFamily, f: &TorusFunction, s: usize) -> Result<CMatrix> {
    anti_wick_averages(fam, &cell_averages(f, fam.dim(), s))
}

/// Dequantization `γ_{∞N}(X)(x) = <C_N(x), X C_N(x)>` on the cell grid.
pub fn dequantize(fam: &CoherentFamily, x: &CMatrix) -> Result<CellAverages> {
    if x.dim() != fam.dim() {
        return Err(Error::DimensionMismatch(x.dim(), fam.dim()));
    }
    Ok(CellAverages { n: fam.dim(), values: lower_symbol(fam, x) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridNorm {
    Sup,
    L2,
}

/// Distance between `f` at cell centres and `γ_{∞N}(γ_{N∞}(f))`.
pub fn roundtrip_error(fam: &CoherentFamily, f: &TorusFunction, norm: GridNorm) -> Result<f64> {
    let n = fam.dim();
    let back = dequantize(fam, &anti_wick(fam, f)?)?;
    let nf = n as f64;
    let diffs = back.values.indexed_iter().map(|((a, b), v)| {
        let centre = TorusPoint::new((a as f64 + 0.5) / nf, (b as f64 + 0.5) / nf);
        (f.eval(centre) - v).norm()
    });
    Ok(match norm {
        GridNorm::Sup => diffs.fold(0.0, f64::max),
        GridNorm::L2 => (diffs.map(|d| d * d).sum::<f64>() / (n * n) as f64).sqrt(),
    })
}

/// `|τ_N(γ(f)* γ(g)) − <f, g>_grid|`.
pub fn state_overlap_residual(fam: &CoherentFamily, f: &TorusFunction, g: &TorusFunction) -> Result<f64> {
    let n = fam.dim();
    let fa = cell_averages(f, n, DEFAULT_SUBSAMPLE);
    let ga = cell_averages(g, n, DEFAULT_SUBSAMPLE);
    let qf = anti_wick_averages(fam, &fa)?;
    let qg = anti_wick_averages(fam, &ga)?;
    let quantum = qf.adjoint().matmul(&qg).tau();
    Ok((quantum - fa.inner(&ga)).norm())
}

/// Weyl quantization `Σ f̂(m) W_N(m)` of a trigonometric polynomial.
pub fn weyl_quantize(ctx: &WeylContext, f: &TorusFunction) -> Result<CMatrix> {
    let t = f.trig().ok_or(Error::NotTrigPolynomial)?;
    let n = ctx.dim();
    let mut out = CMatrix::zeros(n);
    for (&(m1, m2), &c) in &t.coeffs {
        let w = ctx.weyl(WeylIndex::new(m1 as i128, m2 as i128));
        for (j, &ph) in w.phases.iter().enumerate() {
            out[((j + w.shift) % n, j)] += c * ph;
        }
    }
    Ok(out)
}

/// `‖Θ_N^k(γ(f)) − γ(f ∘ A^{-k})‖₂` in the normalized Hilbert-Schmidt norm.
pub fn egorov_residual(fam: &CoherentFamily, f: &TorusFunction, k: i64) -> Result<f64> {
    let map = *fam.ctx().dynamics()?;
    let quantum = theta(fam.ctx(), &anti_wick(fam, f)?, k)?;
    let classical = anti_wick(fam, &f.compose(&map, -k))?;
    Ok((&quantum - &classical).normalized_hs_norm())
}

/// Egorov residual against the classical motion seen by the coherent
/// states: with `c` the centre of the fundamental vector, `Θ_N` transports
/// `f` along `x ↦ A^{-k}(x + c) − c`. Trigonometric polynomials only.
pub fn egorov_residual_centred(fam: &CoherentFamily, f: &TorusFunction, k: i64) -> Result<f64> {
    let map = *fam.ctx().dynamics()?;
    let t = f.trig().ok_or(Error::NotTrigPolynomial)?;
    let c = fundamental_centre(fam);
    let inv = map.power(-k);
    // g(z) = f(A^{-k} z + A^{-k} c - c)
    let shift = (inv[0][0] as f64 * c.0 + inv[0][1] as f64 * c.1 - c.0, inv[1][0] as f64 * c.0 + inv[1][1] as f64 * c.1 - c.1);
    let moved = t.translate(shift).compose_linear(&inv);
    let quantum = theta(fam.ctx(), &anti_wick(fam, f)?, k)?;
    let classical = anti_wick(fam, &TorusFunction::Trig(moved))?;
    Ok((&quantum - &classical).normalized_hs_norm())
}
