//! Finite Weyl algebra on `C^N`.
//!
//! `W_N(n)` is built for every integer label directly from its action on the
//! computational basis,
//!
//! ```text
//! W_N(n)|j> = exp(iπ/N (-n1 n2 + 2 n1 u + 2 n2 v)) exp(-2iπ j n2 / N) |j + n1>,
//! ```
//!
//! so labels outside `{0..N-1}^2` carry their folding phases automatically.
//! All phases are evaluated from an exact integer angle in units of
//! `π / (N D)`, `D` being the common denominator of `u` and `v`.
//!
//! The quantized cat map `Θ_N(W_N(p)) = W_N(A p)` is applied to a matrix
//! through its Weyl coefficients; the coefficient transforms use FFTs.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use ndarray::Array2;
use num_rational::Ratio;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::torus::{CatMap, IntMat};

pub type Rational = Ratio<i64>;

/// Integer label of a Weyl operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeylIndex {
    pub n1: i128,
    pub n2: i128,
}

impl WeylIndex {
    pub const ZERO: WeylIndex = WeylIndex { n1: 0, n2: 0 };

    pub fn new(n1: i128, n2: i128) -> Self {
        WeylIndex { n1, n2 }
    }

    /// Symplectic form `n1 m2 - n2 m1`.
    pub fn sigma(&self, m: &WeylIndex) -> i128 {
        self.n1 * m.n2 - self.n2 * m.n1
    }

    pub fn transform(&self, m: &IntMat) -> WeylIndex {
        WeylIndex { n1: m[0][0] * self.n1 + m[0][1] * self.n2, n2: m[1][0] * self.n1 + m[1][1] * self.n2 }
    }

    pub fn rem(&self, n: i128) -> WeylIndex {
        WeylIndex { n1: self.n1.rem_euclid(n), n2: self.n2.rem_euclid(n) }
    }
}

impl Add for WeylIndex {
    type Output = WeylIndex;
    fn add(self, o: WeylIndex) -> WeylIndex {
        WeylIndex::new(self.n1 + o.n1, self.n2 + o.n2)
    }
}

impl Sub for WeylIndex {
    type Output = WeylIndex;
    fn sub(self, o: WeylIndex) -> WeylIndex {
        WeylIndex::new(self.n1 - o.n1, self.n2 - o.n2)
    }
}

impl Neg for WeylIndex {
    type Output = WeylIndex;
    fn neg(self) -> WeylIndex {
        WeylIndex::new(-self.n1, -self.n2)
    }
}

fn frac(r: Rational) -> Rational {
    r - r.floor()
}

fn half_mod_one(x: i128) -> Rational {
    // (x / 2) mod 1
    Rational::new(x.rem_euclid(2) as i64, 2)
}

/// Right-hand side `(N/2)(ac, bd) mod 1` of the folding congruence.
fn folding_rhs(map: &CatMap, n: usize) -> (Rational, Rational) {
    let n = n as i128;
    (half_mod_one(n * (map.a * map.c) as i128), half_mod_one(n * (map.b * map.d) as i128))
}

/// Whether `(A^t - 1)(u, v) ≡ (N/2)(ac, bd) (mod 1)`.
pub fn satisfies_folding(map: &CatMap, n: usize, u: Rational, v: Rational) -> bool {
    let (r1, r2) = folding_rhs(map, n);
    let (a, b, c, d) = (map.a, map.b, map.c, map.d);
    let l1 = u * (a - 1) + v * c;
    let l2 = u * b + v * (d - 1);
    (l1 - r1).is_integer() && (l2 - r2).is_integer()
}

/// Canonical solution of the folding congruence: the exact rational solution
/// of `(A^t - 1) w = r` reduced into `[0, 1)^2`.
pub fn solve_uv(map: &CatMap, n: usize) -> (Rational, Rational) {
    let (r1, r2) = folding_rhs(map, n);
    let (a, b, c, d) = (map.a, map.b, map.c, map.d);
    let det = 2 - (a + d);
    // inverse of ((a-1, c), (b, d-1))
    let u = (r1 * (d - 1) - r2 * c) / det;
    let v = (r2 * (a - 1) - r1 * b) / det;
    (frac(u), frac(v))
}

/// Every solution of the folding congruence modulo 1, canonical first.
pub fn uv_solutions(map: &CatMap, n: usize) -> Vec<(Rational, Rational)> {
    let (u0, v0) = solve_uv(map, n);
    let (a, b, c, d) = (map.a, map.b, map.c, map.d);
    let det = 2 - (a + d);
    let span = det.abs();
    let mut out = vec![(u0, v0)];
    let mut rest = Vec::new();
    for m1 in 0..span {
        for m2 in 0..span {
            let u = frac(u0 + Rational::from(m1 * (d - 1) - m2 * c) / det);
            let v = frac(v0 + Rational::from(m2 * (a - 1) - m1 * b) / det);
            if (u, v) != (u0, v0) && !rest.contains(&(u, v)) {
                rest.push((u, v));
            }
        }
    }
    rest.sort();
    out.extend(rest);
    out
}

/// Operator `W|j> = phases[j] |j + shift>`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeylOperator {
    pub shift: usize,
    pub phases: Vec<C64>,
}

impl WeylOperator {
    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    pub fn to_matrix(&self) -> CMatrix {
        let n = self.dim();
        let mut m = CMatrix::zeros(n);
        for (j, &ph) in self.phases.iter().enumerate() {
            m[((j + self.shift) % n, j)] = ph;
        }
        m
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            out[(j + self.shift) % n] = self.phases[j] * v[j];
        }
        out
    }

    pub fn adjoint(&self) -> WeylOperator {
        let n = self.dim();
        let mut phases = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            phases[(j + self.shift) % n] = self.phases[j].conj();
        }
        WeylOperator { shift: (n - self.shift) % n, phases }
    }

    /// `self * rhs`.
    pub fn compose(&self, rhs: &WeylOperator) -> WeylOperator {
        let n = self.dim();
        let phases = (0..n).map(|j| self.phases[(j + rhs.shift) % n] * rhs.phases[j]).collect();
        WeylOperator { shift: (self.shift + rhs.shift) % n, phases }
    }

    pub fn trace(&self) -> C64 {
        if self.shift == 0 {
            self.phases.iter().sum()
        } else {
            C64::new(0.0, 0.0)
        }
    }
}

/// Dimension, representation parameters and (optionally) the dynamics.
#[derive(Clone)]
pub struct WeylContext {
    n: usize,
    u: Rational,
    v: Rational,
    map: Option<CatMap>,
    denom: i128,
    u_num: i128,
    v_num: i128,
    /// `exp(iπ m / (N D))` for `m` in `0..2ND`
    phase_table: Arc<Vec<C64>>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for WeylContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeylContext")
            .field("n", &self.n)
            .field("u", &self.u)
            .field("v", &self.v)
            .field("map", &self.map)
            .finish()
    }
}

/// Weyl coefficients `c_p = τ_N(X W_N(-p))`, indexed `[p1][p2]`.
#[derive(Clone, Debug)]
pub struct WeylCoefficients {
    pub n: usize,
    pub coeffs: Array2<C64>,
}

impl WeylCoefficients {
    pub fn get(&self, p1: usize, p2: usize) -> C64 {
        self.coeffs[(p1, p2)]
    }
}

impl WeylContext {
    /// Context without dynamics and `u = v = 0`.
    pub fn new(n: usize) -> Result<Self> {
        Self::build(n, Rational::from(0), Rational::from(0), None)
    }

    /// Context for a cat map with the canonical folding parameters.
    pub fn with_map(n: usize, map: CatMap) -> Result<Self> {
        let (u, v) = solve_uv(&map, n);
        Self::build(n, u, v, Some(map))
    }

    /// Context for a cat map using solution `choice` of [`uv_solutions`].
    pub fn with_map_choice(n: usize, map: CatMap, choice: usize) -> Result<Self> {
        let sols = uv_solutions(&map, n);
        let (u, v) = *sols.get(choice).ok_or_else(|| {
            Error::InvalidArgument(format!("uv choice {choice} out of range ({} solutions)", sols.len()))
        })?;
        Self::build(n, u, v, Some(map))
    }

    /// Explicit parameters; with a map they must satisfy the folding
    /// congruence.
    pub fn with_params(n: usize, u: Rational, v: Rational, map: Option<CatMap>) -> Result<Self> {
        if let Some(m) = &map {
            if !satisfies_folding(m, n, u, v) {
                return Err(Error::IncompatibleParameters { u: u.to_string(), v: v.to_string() });
            }
        }
        Self::build(n, u, v, map)
    }

    fn build(n: usize, u: Rational, v: Rational, map: Option<CatMap>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let zero = Rational::from(0);
        let one = Rational::from(1);
        if u < zero || u >= one || v < zero || v >= one {
            return Err(Error::InvalidArgument("u and v must lie in [0, 1)".into()));
        }
        let du = *u.denom() as i128;
        let dv = *v.denom() as i128;
        let denom = du / gcd(du, dv) * dv;
        let u_num = *u.numer() as i128 * (denom / du);
        let v_num = *v.numer() as i128 * (denom / dv);
        let period = 2 * n as i128 * denom;
        let table = (0..period)
            .map(|m| {
                let ang = std::f64::consts::PI * m as f64 / (n as f64 * denom as f64);
                C64::from_polar(1.0, ang)
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(WeylContext {
            n,
            u,
            v,
            map,
            denom,
            u_num,
            v_num,
            phase_table: Arc::new(table),
            fft_fwd: planner.plan_fft_forward(n),
            fft_inv: planner.plan_fft_inverse(n),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn u(&self) -> Rational {
        self.u
    }

    pub fn v(&self) -> Rational {
        self.v
    }

    pub fn map(&self) -> Option<&CatMap> {
        self.map.as_ref()
    }

    pub fn dynamics(&self) -> Result<&CatMap> {
        self.map.as_ref().ok_or(Error::MissingDynamics)
    }

    fn period(&self) -> i128 {
        2 * self.n as i128 * self.denom
    }

    /// Exact angle of the `j`-th column entry of `W(n)` in units of `π/(ND)`.
    #[inline]
    fn angle(&self, idx: &WeylIndex, j: i128) -> i128 {
        let p = self.period();
        let n1 = idx.n1.rem_euclid(p);
        let n2 = idx.n2.rem_euclid(p);
        let m = self.denom * ((-n1 * n2 - 2 * j * n2).rem_euclid(p)) + 2 * n1 * self.u_num + 2 * n2 * self.v_num;
        m.rem_euclid(p)
    }

    #[inline]
    fn phase_at(&self, m: i128) -> C64 {
        self.phase_table[m.rem_euclid(self.period()) as usize]
    }

    /// `exp(iπ/N (-n1 n2 + 2 n1 u + 2 n2 v))`.
    pub fn base_phase(&self, idx: &WeylIndex) -> C64 {
        self.phase_at(self.angle(idx, 0))
    }

    /// `exp(2iπ m / N)`.
    pub fn root(&self, m: i128) -> C64 {
        self.phase_at(2 * self.denom * m)
    }

    pub fn weyl(&self, idx: WeylIndex) -> WeylOperator {
        let n = self.n as i128;
        let a0 = self.angle(&idx, 0);
        let step = -2 * self.denom * idx.n2.rem_euclid(self.period());
        let phases = (0..n).map(|j| self.phase_at(a0 + step * j)).collect();
        WeylOperator { shift: idx.n1.rem_euclid(n) as usize, phases }
    }

    /// `U_N` of the clock-and-shift pair: `U|j> = e^{2iπu/N}|j+1>`.
    pub fn shift_operator(&self) -> WeylOperator {
        let ph = self.phase_at(2 * self.u_num);
        WeylOperator { shift: 1 % self.n, phases: vec![ph; self.n] }
    }

    /// `V_N|j> = e^{2iπ(v - j)/N}|j>`.
    pub fn clock_operator(&self) -> WeylOperator {
        let phases = (0..self.n as i128).map(|j| self.phase_at(2 * self.v_num - 2 * self.denom * j)).collect();
        WeylOperator { shift: 0, phases }
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Dense matrix of `W_N(n)`.
pub fn weyl_operator(ctx: &WeylContext, n: WeylIndex) -> CMatrix {
    ctx.weyl(n).to_matrix()
}

/// Normalized trace `τ_N(W_N(n))`: the base phase if `n ≡ 0 (mod N)`, else 0.
pub fn weyl_trace(ctx: &WeylContext, n: WeylIndex) -> C64 {
    let nn = ctx.dim() as i128;
    if n.n1.rem_euclid(nn) == 0 && n.n2.rem_euclid(nn) == 0 {
        ctx.base_phase(&n)
    } else {
        C64::new(0.0, 0.0)
    }
}

/// Weyl coefficients `c_p = τ_N(X W_N(-p))` for `p ∈ {0..N-1}^2`.
pub fn expand(ctx: &WeylContext, x: &CMatrix) -> WeylCoefficients {
    let n = ctx.dim();
    assert_eq!(x.dim(), n, "matrix dimension must match the context");
    let mut coeffs = Array2::zeros((n, n));
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for p1 in 0..n {
        for (j, b) in buf.iter_mut().enumerate() {
            *b = x[(j, (j + n - p1) % n)];
        }
        // Σ_j g[j] exp(+2iπ j p2 / N)
        ctx.fft_inv.process(&mut buf);
        for p2 in 0..n {
            let ph = ctx.base_phase(&WeylIndex::new(-(p1 as i128), -(p2 as i128)));
            coeffs[(p1, p2)] = buf[p2] * ph / n as f64;
        }
    }
    WeylCoefficients { n, coeffs }
}

/// `Σ_p c_p W_N(p)`.
pub fn reconstruct(ctx: &WeylContext, c: &WeylCoefficients) -> CMatrix {
    let n = ctx.dim();
    assert_eq!(c.n, n);
    let mut x = CMatrix::zeros(n);
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for p1 in 0..n {
        for (p2, b) in buf.iter_mut().enumerate() {
            *b = c.coeffs[(p1, p2)] * ctx.base_phase(&WeylIndex::new(p1 as i128, p2 as i128));
        }
        // Σ_p2 h[p2] exp(-2iπ j p2 / N)
        ctx.fft_fwd.process(&mut buf);
        for (j, &b) in buf.iter().enumerate() {
            x[((j + p1) % n, j)] = b;
        }
    }
    x
}

/// Transports Weyl coefficients along `W(p) -> W(M p)` for an integer matrix
/// `M` given modulo `2ND`.
fn transport(ctx: &WeylContext, c: &WeylCoefficients, m: &IntMat) -> WeylCoefficients {
    let n = ctx.dim();
    let nn = n as i128;
    let period = ctx.period();
    let mut out = Array2::zeros((n, n));
    for p1 in 0..n {
        for p2 in 0..n {
            let cp = c.coeffs[(p1, p2)];
            if cp == C64::new(0.0, 0.0) {
                continue;
            }
            let image = WeylIndex::new(p1 as i128, p2 as i128).transform(m).rem(period);
            let folded = image.rem(nn);
            let theta = ctx.base_phase(&image) * ctx.base_phase(&folded).conj();
            out[(folded.n1 as usize, folded.n2 as usize)] += cp * theta;
        }
    }
    WeylCoefficients { n, coeffs: out }
}

/// `Θ_N^k(X)`; negative `k` applies the inverse automorphism.
pub fn theta(ctx: &WeylContext, x: &CMatrix, k: i64) -> Result<CMatrix> {
    let map = ctx.dynamics()?;
    if k == 0 {
        return Ok(x.clone());
    }
    let m = map.power_mod(k, ctx.period());
    Ok(reconstruct(ctx, &transport(ctx, &expand(ctx, x), &m)))
}

/// `Θ_N^k` applied to Weyl coefficients.
pub fn theta_coefficients(ctx: &WeylContext, c: &WeylCoefficients, k: i64) -> Result<WeylCoefficients> {
    let map = ctx.dynamics()?;
    Ok(transport(ctx, c, &map.power_mod(k, ctx.period())))
}

/// Exact label `A^k n` (entries grow like `λ^k`).
pub fn evolve_index(map: &CatMap, n: WeylIndex, k: i64) -> WeylIndex {
    n.transform(&map.power(k))
}

/// `(1/N) Σ_p W(-p) W(n) W(p)`, which equals `tr(W(n)) 1`.
pub fn weyl_average_check(ctx: &WeylContext, n: WeylIndex) -> CMatrix {
    let dim = ctx.dim();
    let w = ctx.weyl(n);
    let mut acc = CMatrix::zeros(dim);
    for p1 in 0..dim as i128 {
        for p2 in 0..dim as i128 {
            let p = WeylIndex::new(p1, p2);
            let term = ctx.weyl(-p).compose(&w).compose(&ctx.weyl(p));
            for (j, &ph) in term.phases.iter().enumerate() {
                acc[((j + term.shift) % dim, j)] += ph;
            }
        }
    }
    acc.scale(C64::new(1.0 / dim as f64, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).hs_norm() <= tol
    }

    fn random_matrix(n: usize, rng: &mut impl Rng) -> CMatrix {
        CMatrix::from_fn(n, |_, _| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    /// Dense `τ_N(X W(-p))` as an independent route to the coefficients.
    fn dense_coefficient(ctx: &WeylContext, x: &CMatrix, p: WeylIndex) -> C64 {
        x.matmul(&weyl_operator(ctx, -p)).tau()
    }

    #[test]
    fn arnold_even_n_has_zero_parameters() {
        let a = CatMap::arnold();
        for n in [2usize, 4, 16] {
            assert_eq!(solve_uv(&a, n), (Rational::from(0), Rational::from(0)));
        }
    }

    #[test]
    fn solutions_satisfy_the_congruence() {
        let maps = [CatMap::arnold(), CatMap::new(2, 1, 1, 1).unwrap(), CatMap::new(2, 3, 1, 2).unwrap(), CatMap::new(3, 2, 4, 3).unwrap()];
        for map in maps {
            for n in 1..12 {
                let sols = uv_solutions(&map, n);
                assert_eq!(sols[0], solve_uv(&map, n));
                assert_eq!(sols.len() as i64, (2 - map.trace()).abs());
                for (u, v) in sols {
                    assert!(satisfies_folding(&map, n, u, v), "map {map:?} n {n}");
                }
            }
        }
        // Arnold, N = 3: right-hand side (1/2, 0)
        let (u, v) = solve_uv(&CatMap::arnold(), 3);
        assert!(satisfies_folding(&CatMap::arnold(), 3, u, v));
        assert_ne!((u, v), (Rational::from(0), Rational::from(0)));
    }

    #[test]
    fn incompatible_parameters_rejected() {
        let r = WeylContext::with_params(3, Rational::from(0), Rational::from(0), Some(CatMap::arnold()));
        assert!(matches!(r, Err(Error::IncompatibleParameters { .. })));
    }

    #[test]
    fn zero_label_is_identity() {
        let ctx = WeylContext::with_map(5, CatMap::arnold()).unwrap();
        assert!(close(&weyl_operator(&ctx, WeylIndex::ZERO), &CMatrix::identity(5), 1e-15));
    }

    #[test]
    fn composition_example() {
        let ctx = WeylContext::new(4).unwrap();
        let lhs = weyl_operator(&ctx, WeylIndex::new(1, 0)).matmul(&weyl_operator(&ctx, WeylIndex::new(0, 1)));
        let rhs = weyl_operator(&ctx, WeylIndex::new(1, 1)).scale(C64::from_polar(1.0, std::f64::consts::PI / 4.0));
        assert!(close(&lhs, &rhs, 1e-14));
    }

    #[test]
    fn folding_phase_example() {
        let ctx = WeylContext::with_map(3, CatMap::arnold()).unwrap();
        let u = *ctx.u().numer() as f64 / *ctx.u().denom() as f64;
        let w = weyl_operator(&ctx, WeylIndex::new(3, 0));
        let expected = CMatrix::identity(3).scale(C64::from_polar(1.0, 2.0 * std::f64::consts::PI * u));
        assert!(close(&w, &expected, 1e-14));
    }

    #[test]
    fn clock_and_shift_relations() {
        for n in [2usize, 3, 5, 8] {
            let ctx = WeylContext::with_map(n, CatMap::arnold()).unwrap();
            let u = ctx.shift_operator().to_matrix();
            let v = ctx.clock_operator().to_matrix();
            let uv = u.matmul(&v);
            let vu = v.matmul(&u).scale(ctx.root(1));
            assert!(close(&uv, &vu, 1e-13));
            assert!(close(&weyl_operator(&ctx, WeylIndex::new(1, 0)), &u, 1e-14));
            assert!(close(&weyl_operator(&ctx, WeylIndex::new(0, 1)), &v, 1e-14));
            let mut un = CMatrix::identity(n);
            for _ in 0..n {
                un = un.matmul(&u);
            }
            let uf = *ctx.u().numer() as f64 / *ctx.u().denom() as f64;
            assert!(close(&un, &CMatrix::identity(n).scale(C64::from_polar(1.0, 2.0 * std::f64::consts::PI * uf)), 1e-12));
        }
    }

    #[test]
    fn unitarity_and_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 7usize;
        let ctx = WeylContext::with_map(n, CatMap::arnold()).unwrap();
        for _ in 0..50 {
            let idx = WeylIndex::new(rng.gen_range(-21..=21), rng.gen_range(-21..=21));
            let w = weyl_operator(&ctx, idx);
            assert!(close(&w.matmul(&w.adjoint()), &CMatrix::identity(n), 1e-12));
            assert!(close(&weyl_operator(&ctx, -idx), &w.adjoint(), 1e-13));
        }
    }

    #[test]
    fn commutator_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 6usize;
        let ctx = WeylContext::with_map(n, CatMap::arnold()).unwrap();
        for _ in 0..20 {
            let a = WeylIndex::new(rng.gen_range(-12..12), rng.gen_range(-12..12));
            let b = WeylIndex::new(rng.gen_range(-12..12), rng.gen_range(-12..12));
            let wa = weyl_operator(&ctx, a);
            let wb = weyl_operator(&ctx, b);
            let comm = &wa.matmul(&wb) - &wb.matmul(&wa);
            let s = (std::f64::consts::PI * a.sigma(&b) as f64 / n as f64).sin();
            let rhs = weyl_operator(&ctx, a + b).scale(c64(0.0, 2.0 * s));
            assert!(close(&comm, &rhs, 1e-11));
        }
    }

    #[test]
    fn trace_examples() {
        let ctx = WeylContext::with_map(5, CatMap::arnold()).unwrap();
        assert_eq!(weyl_trace(&ctx, WeylIndex::ZERO), c64(1.0, 0.0));
        assert_eq!(weyl_trace(&ctx, WeylIndex::new(1, 0)), c64(0.0, 0.0));
        let t = weyl_trace(&ctx, WeylIndex::new(5, 5));
        assert!((t.norm() - 1.0).abs() < 1e-14);
        let dense = weyl_operator(&ctx, WeylIndex::new(5, 5)).tau();
        assert!((t - dense).norm() < 1e-12);
    }

    #[test]
    fn expansion_examples() {
        let n = 6usize;
        let ctx = WeylContext::with_map(n, CatMap::arnold()).unwrap();
        let c = expand(&ctx, &CMatrix::identity(n));
        for p1 in 0..n {
            for p2 in 0..n {
                let expected = if p1 == 0 && p2 == 0 { 1.0 } else { 0.0 };
                assert!((c.get(p1, p2) - c64(expected, 0.0)).norm() < 1e-14);
            }
        }
        let q = WeylIndex::new(2, 5);
        let c = expand(&ctx, &weyl_operator(&ctx, q));
        for p1 in 0..n {
            for p2 in 0..n {
                let z = c.get(p1, p2).norm();
                if (p1, p2) == (2, 5) {
                    assert!((z - 1.0).abs() < 1e-13);
                } else {
                    assert!(z < 1e-13);
                }
            }
        }
    }

    #[test]
    fn expansion_matches_dense_traces_and_roundtrips() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for n in [3usize, 8, 16] {
            let ctx = WeylContext::with_map(n, CatMap::arnold()).unwrap();
            let x = random_matrix(n, &mut rng);
            let c = expand(&ctx, &x);
            for p1 in 0..n {
                for p2 in 0..n {
                    let d = dense_coefficient(&ctx, &x, WeylIndex::new(p1 as i128, p2 as i128));
                    assert!((c.get(p1, p2) - d).norm() < 1e-12);
                }
            }
            assert!(close(&reconstruct(&ctx, &c), &x, 1e-10 * n as f64));
        }
    }

    #[test]
    fn theta_examples() {
        let n = 8usize;
        let ctx = WeylContext::with_map(n, CatMap::arnold()).unwrap();
        let x = weyl_operator(&ctx, WeylIndex::new(1, 0));
        let y = theta(&ctx, &x, 1).unwrap();
        assert!(close(&y, &weyl_operator(&ctx, WeylIndex::new(1, 1)), 1e-12));
        assert!(close(&theta(&ctx, &x, 0).unwrap(), &x, 0.0));
        let bare = WeylContext::new(n).unwrap();
        assert!(matches!(theta(&bare, &x, 1), Err(Error::MissingDynamics)));
    }

    #[test]
    fn theta_maps_labels_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for (map, n) in [(CatMap::arnold(), 7usize), (CatMap::new(2, 3, 1, 2).unwrap(), 5), (CatMap::arnold(), 9)] {
            let ctx = WeylContext::with_map(n, map).unwrap();
            for _ in 0..10 {
                let idx = WeylIndex::new(rng.gen_range(-30..30), rng.gen_range(-30..30));
                for k in [1i64, 2, 3] {
                    let got = theta(&ctx, &weyl_operator(&ctx, idx), k).unwrap();
                    let want = weyl_operator(&ctx, evolve_index(&map, idx, k));
                    assert!(close(&got, &want, 1e-11), "n={n} idx={idx:?} k={k}");
                    assert!((weyl_trace(&ctx, evolve_index(&map, idx, k)) - weyl_trace(&ctx, idx)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn theta_is_a_star_automorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for (map, n) in [(CatMap::arnold(), 5usize), (CatMap::arnold(), 8), (CatMap::new(2, 1, 3, 2).unwrap(), 6)] {
            for choice in 0..uv_solutions(&map, n).len() {
                let ctx = WeylContext::with_map_choice(n, map, choice).unwrap();
                let x = random_matrix(n, &mut rng);
                let y = random_matrix(n, &mut rng);
                let tx = theta(&ctx, &x, 1).unwrap();
                let ty = theta(&ctx, &y, 1).unwrap();
                assert!(close(&theta(&ctx, &x.matmul(&y), 1).unwrap(), &tx.matmul(&ty), 1e-10));
                assert!(close(&theta(&ctx, &x.adjoint(), 1).unwrap(), &tx.adjoint(), 1e-11));
                assert!((tx.tau() - x.tau()).norm() < 1e-12);
                let back = theta(&ctx, &tx, -1).unwrap();
                assert!(close(&back, &x, 1e-11));
            }
        }
    }

    #[test]
    fn average_identity() {
        let ctx = WeylContext::with_map(4, CatMap::arnold()).unwrap();
        let zero = weyl_average_check(&ctx, WeylIndex::ZERO);
        assert!(close(&zero, &CMatrix::identity(4).scale(c64(4.0, 0.0)), 1e-12));
        let off = weyl_average_check(&ctx, WeylIndex::new(1, 0));
        assert!(off.hs_norm() < 1e-12);
        let ctx3 = WeylContext::with_map(3, CatMap::arnold()).unwrap();
        let folded = weyl_average_check(&ctx3, WeylIndex::new(3, 0));
        let tr = weyl_operator(&ctx3, WeylIndex::new(3, 0)).trace();
        assert!(close(&folded, &CMatrix::identity(3).scale(tr), 1e-12));
        assert!((tr.norm() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn monomial_algebra_matches_dense() {
        let ctx = WeylContext::with_map(5, CatMap::arnold()).unwrap();
        let a = ctx.weyl(WeylIndex::new(2, -3));
        let b = ctx.weyl(WeylIndex::new(-7, 4));
        assert!(close(&a.compose(&b).to_matrix(), &a.to_matrix().matmul(&b.to_matrix()), 1e-13));
        assert!(close(&a.adjoint().to_matrix(), &a.to_matrix().adjoint(), 1e-15));
    }
}
