//! Classical cat-map dynamics on the 2-torus and symbolic refinements of
//! grid partitions.
//!
//! Refined measures are estimated by counting a centered sampling lattice.
//! Lattice points `((2i+1)/(2M), (2j+1)/(2M))` are carried as integers modulo
//! `2M`; integer matrices map `(1/2M) Z^2` into itself, so the symbol
//! sequences are computed exactly and the counts are reproducible.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::eta;

/// Default sampling lattice resolution.
pub const DEFAULT_LATTICE: usize = 4096;


/// Hyperbolic element of SL(2, Z) acting on the torus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatMap {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
    lambda: f64,
    log_lambda: f64,
}

/// Integer 2x2 matrix, rows `[[m00, m01], [m10, m11]]`.
pub type IntMat = [[i128; 2]; 2];

pub fn int_mat_mul(x: &IntMat, y: &IntMat) -> IntMat {
    [
        [x[0][0] * y[0][0] + x[0][1] * y[1][0], x[0][0] * y[0][1] + x[0][1] * y[1][1]],
        [x[1][0] * y[0][0] + x[1][1] * y[1][0], x[1][0] * y[0][1] + x[1][1] * y[1][1]],
    ]
}

/// `log λ` for a unimodular map with the given trace.
pub fn lyapunov_from_trace(trace: i64) -> Result<f64> {
    if trace.abs() <= 2 {
        return Err(Error::NotHyperbolic(trace));
    }
    let t = trace.abs() as f64;
    Ok(((t + (t * t - 4.0).sqrt()) / 2.0).ln())
}

impl CatMap {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        let det = a * d - c * b;
        if det != 1 {
            return Err(Error::NotUnimodular { a, b, c, d, det });
        }
        let log_lambda = lyapunov_from_trace(a + d)?;
        Ok(CatMap { a, b, c, d, lambda: log_lambda.exp(), log_lambda })
    }

    /// Arnold's cat map `((1, 1), (1, 2))`.
    pub fn arnold() -> Self {
        Self::new(1, 1, 1, 2).expect("Arnold map is hyperbolic")
    }

    pub fn trace(&self) -> i64 {
        self.a + self.d
    }

    /// Expanding eigenvalue modulus.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn log_lambda(&self) -> f64 {
        self.log_lambda
    }

    pub fn matrix(&self) -> IntMat {
        [[self.a as i128, self.b as i128], [self.c as i128, self.d as i128]]
    }

    pub fn inverse(&self) -> IntMat {
        [[self.d as i128, -self.b as i128], [-self.c as i128, self.a as i128]]
    }

    /// `A^k` in exact integer arithmetic; negative `k` uses the inverse.
    pub fn power(&self, k: i64) -> IntMat {
        let base = if k >= 0 { self.matrix() } else { self.inverse() };
        let mut acc: IntMat = [[1, 0], [0, 1]];
        for _ in 0..k.unsigned_abs() {
            acc = int_mat_mul(&base, &acc);
        }
        acc
    }

    /// `A^k` with every entry reduced modulo `m` into `[0, m)`.
    pub fn power_mod(&self, k: i64, m: i128) -> IntMat {
        let base = if k >= 0 { self.matrix() } else { self.inverse() };
        let base = base.map(|r| r.map(|x| x.rem_euclid(m)));
        let mut acc: IntMat = [[1 % m, 0], [0, 1 % m]];
        for _ in 0..k.unsigned_abs() {
            acc = int_mat_mul(&base, &acc).map(|r| r.map(|x| x.rem_euclid(m)));
        }
        acc
    }
}

/// Lyapunov exponent `log λ` of the map.
pub fn lyapunov(map: &CatMap) -> f64 {
    map.log_lambda()
}

/// Point of the torus with coordinates reduced into `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusPoint {
    pub x1: f64,
    pub x2: f64,
}

fn reduce_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl TorusPoint {
    pub fn new(x1: f64, x2: f64) -> Self {
        TorusPoint { x1: reduce_unit(x1), x2: reduce_unit(x2) }
    }

    /// Max-coordinate torus distance.
    pub fn distance(&self, other: &TorusPoint) -> f64 {
        let d = |a: f64, b: f64| {
            let t = (a - b).abs();
            t.min(1.0 - t)
        };
        d(self.x1, other.x1).max(d(self.x2, other.x2))
    }
}

/// `A^k p mod 1`.
pub fn cat_apply(map: &CatMap, p: TorusPoint, k: i64) -> TorusPoint {
    let m = map.power(k);
    let row = |r: [i128; 2]| {
        let frac = |coef: i128, x: f64| reduce_unit(coef as f64 * x);
        frac(r[0], p.x1) + frac(r[1], p.x2)
    };
    TorusPoint::new(row(m[0]), row(m[1]))
}

/// Partition of the torus into `q_side^2` half-open grid squares.
/// Atom `(i1, i2)` covers `[i1/q, (i1+1)/q) x [i2/q, (i2+1)/q)` and has
/// index `i1 * q_side + i2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartitionSpec {
    q_side: usize,
}

impl PartitionSpec {
    pub fn new(q_side: usize) -> Result<Self> {
        if q_side == 0 {
            return Err(Error::InvalidArgument("q_side must be positive".into()));
        }
        Ok(PartitionSpec { q_side })
    }

    pub fn q_side(&self) -> usize {
        self.q_side
    }

    /// Number of atoms `q = q_side^2`.
    pub fn atoms(&self) -> usize {
        self.q_side * self.q_side
    }

    pub fn atom_measure(&self) -> f64 {
        1.0 / self.atoms() as f64
    }

    pub fn atom_of(&self, p: TorusPoint) -> usize {
        let q = self.q_side as f64;
        let i1 = ((p.x1 * q) as usize).min(self.q_side - 1);
        let i2 = ((p.x2 * q) as usize).min(self.q_side - 1);
        i1 * self.q_side + i2
    }

    /// Atom of the lattice point with integer coordinates `(x1, x2)` in units
    /// of `1/modulus`.
    #[inline]
    pub fn atom_of_lattice(&self, x1: i128, x2: i128, modulus: i128) -> usize {
        let q = self.q_side as i128;
        ((q * x1 / modulus) * q + q * x2 / modulus) as usize
    }

    /// Atom rectangle `([lo1, hi1), [lo2, hi2))`.
    pub fn atom_rect(&self, atom: usize) -> ([f64; 2], [f64; 2]) {
        let q = self.q_side as f64;
        let i1 = (atom / self.q_side) as f64;
        let i2 = (atom % self.q_side) as f64;
        ([i1 / q, (i1 + 1.0) / q], [i2 / q, (i2 + 1.0) / q])
    }
}

/// Direction of time along which symbols are read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeDirection {
    /// symbol `j` is the atom of `A^j s`
    Forward,
    /// symbol `j` is the atom of `A^{-j} s`
    Backward,
}

/// Lattice estimate of the measures of the atoms of the `k`-step refinement.
///
/// Multi-indices `(i_0, ..., i_{k-1})` are encoded base `q` with `i_0` the
/// most significant digit.
#[derive(Clone, Debug)]
pub struct RefinedMeasure {
    pub k: usize,
    pub q: usize,
    pub lattice: usize,
    counts: BTreeMap<u64, u64>,
    total: u64,
    /// Documented per-atom absolute error bound `C_per k λ^k / M`.
    pub err: f64,
}

impl RefinedMeasure {
    pub fn weight(&self, code: u64) -> f64 {
        self.counts.get(&code).copied().unwrap_or(0) as f64 / self.total as f64
    }

    pub fn weight_of(&self, index: &[usize]) -> f64 {
        self.weight(encode(index, self.q))
    }

    /// Non-zero weights keyed by code, ascending.
    pub fn weights(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        let t = self.total as f64;
        self.counts.iter().map(move |(&c, &n)| (c, n as f64 / t))
    }

    pub fn occupied(&self) -> usize {
        self.counts.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.counts.values().sum::<u64>() as f64 / self.total as f64
    }

    /// Marginal on the first `k' < k` symbols.
    pub fn truncate(&self, k: usize) -> RefinedMeasure {
        assert!(k >= 1 && k <= self.k);
        let div = (self.q as u64).pow((self.k - k) as u32);
        let mut counts = BTreeMap::new();
        for (&c, &n) in &self.counts {
            *counts.entry(c / div).or_insert(0) += n;
        }
        RefinedMeasure { k, q: self.q, lattice: self.lattice, counts, total: self.total, err: self.err }
    }
}

pub fn encode(index: &[usize], q: usize) -> u64 {
    index.iter().fold(0u64, |acc, &i| acc * q as u64 + i as u64)
}

pub fn decode(mut code: u64, q: usize, k: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    for slot in out.iter_mut().rev() {
        *slot = (code % q as u64) as usize;
        code /= q as u64;
    }
    out
}

/// Per-atom perimeter constant: perimeter of one grid square.
fn perimeter_constant(p: &PartitionSpec) -> f64 {
    4.0 / p.q_side() as f64
}

pub fn refined_measures(map: &CatMap, p: &PartitionSpec, k: usize, lattice: usize) -> Result<RefinedMeasure> {
    refined_measures_dir(map, p, k, lattice, TimeDirection::Forward)
}

pub fn refined_measures_dir(
    map: &CatMap,
    p: &PartitionSpec,
    k: usize,
    lattice: usize,
    dir: TimeDirection,
) -> Result<RefinedMeasure> {
    if k == 0 {
        return Err(Error::InvalidArgument("refinement needs k >= 1".into()));
    }
    // refined atoms are strips of width ~ 1 / (q_side λ^(k-1))
    let thinnest = p.q_side() as f64 * map.lambda().powi(k as i32 - 1);
    if (lattice as f64) < thinnest.floor() {
        return Err(Error::ResolutionTooCoarse {
            m: lattice,
            reason: format!("lattice spacing exceeds the refined strip width 1/{thinnest:.1}"),
        });
    }
    let q = p.atoms();
    if (q as f64).powi(k as i32) >= u64::MAX as f64 {
        return Err(Error::BudgetExceeded(format!("{q}^{k} symbols do not fit a u64 code")));
    }
    let modulus = 2 * lattice as i128;
    let step = match dir {
        TimeDirection::Forward => map.matrix(),
        TimeDirection::Backward => map.inverse(),
    }
    .map(|r| r.map(|x| x.rem_euclid(modulus)));
    let qk = (q as u64).saturating_pow(k as u32);
    let dense = qk <= 1 << 22;

    let sweep_row = |i: usize, acc: &mut Counts| {
        let x1 = 2 * i as i128 + 1;
        for j in 0..lattice {
            let (mut y1, mut y2) = (x1, 2 * j as i128 + 1);
            let mut code = 0u64;
            for step_no in 0..k {
                code = code * q as u64 + p.atom_of_lattice(y1, y2, modulus) as u64;
                if step_no + 1 < k {
                    let n1 = (step[0][0] * y1 + step[0][1] * y2) % modulus;
                    let n2 = (step[1][0] * y1 + step[1][1] * y2) % modulus;
                    y1 = n1;
                    y2 = n2;
                }
            }
            acc.add(code);
        }
    };

    let fresh = || if dense { Counts::Dense(vec![0; qk as usize]) } else { Counts::Sparse(BTreeMap::new()) };
    let merged = (0..lattice)
        .into_par_iter()
        .fold(fresh, |mut acc, i| {
            sweep_row(i, &mut acc);
            acc
        })
        .reduce(fresh, Counts::merge);
    let counts = merged.into_map();

    let total = (lattice * lattice) as u64;
    let err = perimeter_constant(p) * k as f64 * map.lambda().powi(k as i32) / lattice as f64;
    Ok(RefinedMeasure { k, q, lattice, counts, total, err })
}

enum Counts {
    Dense(Vec<u64>),
    Sparse(BTreeMap<u64, u64>),
}

impl Counts {
    #[inline]
    fn add(&mut self, code: u64) {
        match self {
            Counts::Dense(v) => v[code as usize] += 1,
            Counts::Sparse(m) => *m.entry(code).or_insert(0) += 1,
        }
    }

    fn merge(self, other: Counts) -> Counts {
        match (self, other) {
            (Counts::Dense(mut a), Counts::Dense(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Counts::Dense(a)
            }
            (Counts::Sparse(mut a), Counts::Sparse(b)) => {
                for (c, n) in b {
                    *a.entry(c).or_insert(0) += n;
                }
                Counts::Sparse(a)
            }
            _ => unreachable!("accumulators share a representation"),
        }
    }

    fn into_map(self) -> BTreeMap<u64, u64> {
        match self {
            Counts::Dense(v) => v
                .into_iter()
                .enumerate()
                .filter(|(_, n)| *n > 0)
                .map(|(c, n)| (c as u64, n))
                .collect(),
            Counts::Sparse(m) => m,
        }
    }
}

/// Shannon entropy `S_μ(C^(k))` of a refinement.
pub fn shannon_entropy(m: &RefinedMeasure) -> f64 {
    m.weights().map(|(_, w)| eta(w)).sum()
}

/// `S_μ(C^(k))` for `k = 1..=k_max` from a single lattice sweep.
pub fn entropy_curve(map: &CatMap, p: &PartitionSpec, k_max: usize, lattice: usize) -> Result<Vec<f64>> {
    let full = refined_measures(map, p, k_max, lattice)?;
    Ok((1..=k_max).map(|k| shannon_entropy(&full.truncate(k))).collect())
}

/// Entropy production `S_μ(C^(k_max)) - S_μ(C^(k_max - 1))`, an estimate of
/// `log λ`.
pub fn ks_entropy_estimate(map: &CatMap, p: &PartitionSpec, k_max: usize, lattice: usize) -> Result<f64> {
    if k_max < 2 {
        return Err(Error::InvalidArgument("k_max must be at least 2".into()));
    }
    let curve = entropy_curve(map, p, k_max, lattice)?;
    Ok(curve[k_max - 1] - curve[k_max - 2])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_rejects_bad_matrices() {
        assert!(matches!(CatMap::new(1, 1, 1, 1), Err(Error::NotUnimodular { .. })));
        assert!(matches!(CatMap::new(1, 1, 0, 1), Err(Error::NotHyperbolic(2))));
        assert!(matches!(CatMap::new(1, 0, 0, 1), Err(Error::NotHyperbolic(2))));
        assert!(CatMap::new(2, 1, 1, 1).is_ok());
    }

    #[test]
    fn lyapunov_values() {
        let golden = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((lyapunov(&CatMap::arnold()) - golden).abs() < 1e-15);
        assert!((lyapunov(&CatMap::new(2, 1, 1, 1).unwrap()) - golden).abs() < 1e-15);
        assert!((lyapunov(&CatMap::arnold()) - 0.962424).abs() < 1e-6);
        assert!(matches!(lyapunov_from_trace(2), Err(Error::NotHyperbolic(2))));
        let m = CatMap::arnold();
        assert!((m.lambda() * (1.0 / m.lambda()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cat_apply_examples() {
        let a = CatMap::arnold();
        let p = cat_apply(&a, TorusPoint::new(0.5, 0.5), 1);
        assert_eq!(p, TorusPoint::new(0.0, 0.5));
        let q = TorusPoint::new(0.3, 0.7);
        assert_eq!(cat_apply(&a, q, 0), q);
        let r = cat_apply(&a, cat_apply(&a, TorusPoint::new(0.2, 0.1), 1), -1);
        assert!(r.distance(&TorusPoint::new(0.2, 0.1)) < 1e-12);
    }

    #[test]
    fn inverse_is_exact() {
        let a = CatMap::new(2, 1, 1, 1).unwrap();
        assert_eq!(int_mat_mul(&a.matrix(), &a.inverse()), [[1, 0], [0, 1]]);
        assert_eq!(int_mat_mul(&a.power(3), &a.power(-3)), [[1, 0], [0, 1]]);
    }

    #[test]
    fn one_step_quarters_are_exact() {
        let p = PartitionSpec::new(2).unwrap();
        for &m in &[2usize, 4, 64] {
            let r = refined_measures(&CatMap::arnold(), &p, 1, m).unwrap();
            for a in 0..4 {
                assert_eq!(r.weight_of(&[a]), 0.25);
            }
            assert!((shannon_entropy(&r) - 4f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let p = PartitionSpec::new(2).unwrap();
        let r = refined_measures(&CatMap::arnold(), &p, 2, 4096).unwrap();
        assert_eq!(r.total_weight(), 1.0);
    }

    #[test]
    fn trivial_partition_has_zero_entropy() {
        let p = PartitionSpec::new(1).unwrap();
        for k in 1..5 {
            let r = refined_measures(&CatMap::arnold(), &p, k, 64).unwrap();
            assert_eq!(shannon_entropy(&r), 0.0);
        }
        assert_eq!(ks_entropy_estimate(&CatMap::arnold(), &p, 3, 64).unwrap(), 0.0);
    }

    #[test]
    fn lattice_weights_match_finer_lattice() {
        // independent route: floating point orbit of a twice finer lattice
        let a = CatMap::arnold();
        let p = PartitionSpec::new(2).unwrap();
        let coarse = refined_measures(&a, &p, 2, 1024).unwrap();
        let fine_m = 2048usize;
        let mut counts = [0u64; 16];
        for i in 0..fine_m {
            for j in 0..fine_m {
                let s = TorusPoint::new((i as f64 + 0.5) / fine_m as f64, (j as f64 + 0.5) / fine_m as f64);
                let s1 = cat_apply(&a, s, 1);
                counts[p.atom_of(s) * 4 + p.atom_of(s1)] += 1;
            }
        }
        for code in 0..16u64 {
            let w = counts[code as usize] as f64 / (fine_m * fine_m) as f64;
            assert!((coarse.weight(code) - w).abs() <= coarse.err);
            assert!((coarse.weight(code) - w).abs() < 2e-3, "code {code}");
        }
    }

    #[test]
    fn directions_give_equal_entropies() {
        let a = CatMap::arnold();
        let p = PartitionSpec::new(2).unwrap();
        for k in 1..=5 {
            let f = refined_measures_dir(&a, &p, k, 512, TimeDirection::Forward).unwrap();
            let b = refined_measures_dir(&a, &p, k, 512, TimeDirection::Backward).unwrap();
            assert!((shannon_entropy(&f) - shannon_entropy(&b)).abs() < 1e-2, "k={k}");
        }
    }

    #[test]
    fn entropy_curve_is_monotone_with_shrinking_increments() {
        let a = CatMap::arnold();
        let p = PartitionSpec::new(2).unwrap();
        let curve = entropy_curve(&a, &p, 6, 1024).unwrap();
        for w in curve.windows(2) {
            assert!(w[1] >= w[0]);
        }
        let inc: Vec<f64> = curve.windows(2).map(|w| w[1] - w[0]).collect();
        for w in inc.windows(2) {
            assert!(w[1] <= w[0] + 1e-2);
        }
    }

    #[test]
    fn truncation_matches_direct_sweep() {
        let a = CatMap::arnold();
        let p = PartitionSpec::new(2).unwrap();
        let full = refined_measures(&a, &p, 4, 256).unwrap();
        let direct = refined_measures(&a, &p, 3, 256).unwrap();
        let t = full.truncate(3);
        for (c, w) in direct.weights() {
            assert_eq!(t.weight(c), w);
        }
    }

    #[test]
    fn too_coarse_lattice_is_rejected() {
        let a = CatMap::arnold();
        let p = PartitionSpec::new(2).unwrap();
        assert!(matches!(refined_measures(&a, &p, 8, 64), Err(Error::ResolutionTooCoarse { .. })));
        assert!(matches!(refined_measures(&a, &PartitionSpec::new(8).unwrap(), 1, 4), Err(Error::ResolutionTooCoarse { .. })));
    }

    #[test]
    fn encode_roundtrip() {
        let idx = [3usize, 0, 2, 1];
        assert_eq!(decode(encode(&idx, 4), 4, 4), idx);
    }

    #[test]
    fn lattice_counts_are_preserved_by_the_map() {
        // A permutes the lattice (1/M)Z^2, so per-atom counts of images equal
        // those of the preimage lattice.
        let a = CatMap::new(2, 1, 3, 2).unwrap();
        let p = PartitionSpec::new(3).unwrap();
        let m = 96i128;
        let mat = a.matrix();
        let mut before = [0u32; 9];
        let mut after = [0u32; 9];
        for i in 0..m {
            for j in 0..m {
                before[p.atom_of_lattice(i, j, m)] += 1;
                let y1 = (mat[0][0] * i + mat[0][1] * j).rem_euclid(m);
                let y2 = (mat[1][0] * i + mat[1][1] * j).rem_euclid(m);
                after[p.atom_of_lattice(y1, y2, m)] += 1;
            }
        }
        assert_eq!(before, after);
    }

    #[test]
    fn composition_of_powers() {
        let a = CatMap::arnold();
        let p = TorusPoint::new(0.123, 0.987);
        for (j, k) in [(1i64, 2i64), (3, -1), (-2, -2), (4, 0)] {
            let lhs = cat_apply(&a, cat_apply(&a, p, k), j);
            let rhs = cat_apply(&a, p, j + k);
            assert!(lhs.distance(&rhs) < 1e-12, "j={j} k={k}");
        }
    }
}
