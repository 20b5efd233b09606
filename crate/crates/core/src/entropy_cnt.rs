//! CNT entropy bracket.
//!
//! The upper bound is the classical `S_μ(C^(k))`. The lower bound subtracts
//! the entropies of the probability rows
//! `p^{ℓ,i}_s = τ_N(γ(χ_{T^{-ℓ}C_i}) γ(χ_{T^{-ℓ}C_s})) / τ_N(γ(χ_{T^{-ℓ}C_i}))`
//! weighted by the marginals `μ^ℓ_i`.

use rayon::prelude::*;

use crate::coherent::CoherentFamily;
use crate::error::{Error, Result};
use crate::linalg::{shannon, CMatrix};
use crate::quantize::{anti_wick_averages, cell_averages, TorusFunction};
use crate::torus::{decode, refined_measures, shannon_entropy, PartitionSpec, RefinedMeasure};
use crate::weyl::theta;

/// Negative row entries above this size are rejected outright.
pub const TAU_ROW_NEGATIVE: f64 = 1e-10;
/// Total mass moved by clamping a row onto the simplex.
pub const TAU_SIMPLEX: f64 = 1e-8;
/// Slack in the monotone narrowing of bracket widths.
pub const TAU_NARROWING: f64 = 0.02;

pub fn cnt_upper(measures: &RefinedMeasure) -> f64 {
    shannon_entropy(measures)
}

/// Marginal `μ^ℓ_i`: total weight of multi-indices with symbol `i` at time `ℓ`.
pub fn marginal(measures: &RefinedMeasure, ell: usize) -> Vec<f64> {
    let mut out = vec![0.0; measures.q];
    for (code, w) in measures.weights() {
        out[decode(code, measures.q, measures.k)[ell]] += w;
    }
    out
}

/// Clamps `row` onto the probability simplex.
pub fn clamp_row(row: &mut [f64]) -> Result<()> {
    let mut moved = 0.0;
    for x in row.iter_mut() {
        if *x < 0.0 {
            if *x < -TAU_ROW_NEGATIVE {
                return Err(Error::SimplexViolation(-*x));
            }
            moved -= *x;
            *x = 0.0;
        }
    }
    let sum: f64 = row.iter().sum();
    moved += (sum - 1.0).abs();
    if moved > TAU_SIMPLEX || sum <= 0.0 {
        return Err(Error::SimplexViolation(moved));
    }
    for x in row.iter_mut() {
        *x /= sum;
    }
    Ok(())
}

/// `τ_N(X Y)` for Hermitian `Y`.
fn tau_product_hermitian(x: &CMatrix, y: &CMatrix) -> f64 {
    let n = x.dim();
    x.as_array().iter().zip(y.as_array().iter()).map(|(a, b)| (a * b.conj()).re).sum::<f64>() / n as f64
}

/// `γ(χ_{T^{-ℓ}C_s})` for every atom `s`.
pub fn evolved_atom_ops(fam: &CoherentFamily, p: &PartitionSpec, ell: usize, subsample: usize) -> Result<Vec<CMatrix>> {
    let map = *fam.ctx().dynamics()?;
    (0..p.atoms())
        .map(|s| {
            let f = TorusFunction::evolved_atom(*p, s, map, ell as i64);
            Ok(anti_wick_averages(fam, &cell_averages(&f, fam.dim(), subsample))?.hermitian_part())
        })
        .collect()
}

/// Normalized rows `p^{ℓ,i}` of the trace pairing of `ops`.
pub fn probability_rows(ops: &[CMatrix]) -> Result<Vec<Vec<f64>>> {
    ops.par_iter()
        .map(|oi| {
            let mass = oi.tau().re;
            if mass <= 0.0 {
                return Err(Error::SimplexViolation(mass.abs()));
            }
            let mut row: Vec<f64> = ops.iter().map(|os| tau_product_hermitian(oi, os) / mass).collect();
            clamp_row(&mut row)?;
            Ok(row)
        })
        .collect()
}

/// Explicit decomposition of the trace used by the lower bound.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub k: usize,
    pub q: usize,
    /// `μ_i` keyed by forward refinement code
    pub weights: Vec<(u64, f64)>,
    /// `marginals[ℓ][i] = μ^ℓ_i`
    pub marginals: Vec<Vec<f64>>,
    /// `rows[ℓ][i] = p^{ℓ,i}`
    pub rows: Vec<Vec<Vec<f64>>>,
}

impl Decomposition {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().map(|(_, w)| w).sum()
    }

    /// `Σ_ℓ Σ_i μ^ℓ_i S(p^{ℓ,i})`
    pub fn correction(&self) -> f64 {
        self.marginals
            .iter()
            .zip(&self.rows)
            .map(|(mu, rows)| mu.iter().zip(rows).map(|(m, r)| m * shannon(r.iter().copied())).sum::<f64>())
            .sum()
    }
}

pub fn decomposition(fam: &CoherentFamily, p: &PartitionSpec, measures: &RefinedMeasure, subsample: usize) -> Result<Decomposition> {
    let n = fam.dim();
    if n % p.q_side() != 0 {
        return Err(Error::IndivisibleGrid { q_side: p.q_side(), n });
    }
    if measures.q != p.atoms() {
        return Err(Error::DimensionMismatch(measures.q, p.atoms()));
    }
    let k = measures.k;
    let weights: Vec<(u64, f64)> = measures.weights().collect();
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::InvariantViolation(format!("refined weights sum to {total}")));
    }
    let marginals: Vec<Vec<f64>> = (0..k).map(|ell| marginal(measures, ell)).collect();
    let rows = (0..k)
        .map(|ell| probability_rows(&evolved_atom_ops(fam, p, ell, subsample)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(Decomposition { k, q: p.atoms(), weights, marginals, rows })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CNTBracket {
    pub k: usize,
    pub lower: f64,
    pub upper: f64,
    pub correction: f64,
}

impl CNTBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

pub fn cnt_lower(fam: &CoherentFamily, p: &PartitionSpec, measures: &RefinedMeasure, subsample: usize) -> Result<CNTBracket> {
    let dec = decomposition(fam, p, measures, subsample)?;
    let upper = cnt_upper(measures);
    let correction = dec.correction();
    Ok(CNTBracket { k: measures.k, lower: upper - correction, upper, correction })
}

pub fn cnt_bracket(fam: &CoherentFamily, p: &PartitionSpec, k: usize, lattice: usize, subsample: usize) -> Result<CNTBracket> {
    let map = *fam.ctx().dynamics()?;
    cnt_lower(fam, p, &refined_measures(&map, p, k, lattice)?, subsample)
}

/// Largest `|p̃^{ℓ,i} − p^{ℓ,i}|₁` between rows from classically evolved
/// indicators and rows from `Θ^{-ℓ}` applied to the quantized atoms.
pub fn evolution_row_gap(fam: &CoherentFamily, p: &PartitionSpec, ell: usize, subsample: usize) -> Result<f64> {
    let classical = probability_rows(&evolved_atom_ops(fam, p, ell, subsample)?)?;
    let quantum_ops = evolved_atom_ops(fam, p, 0, 1)?
        .iter()
        .map(|y| Ok(theta(fam.ctx(), y, -(ell as i64))?.hermitian_part()))
        .collect::<Result<Vec<_>>>()?;
    let quantum = probability_rows(&quantum_ops)?;
    Ok(classical
        .iter()
        .zip(&quantum)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BracketRow {
    pub n: usize,
    pub k: usize,
    pub lower_rate: f64,
    pub upper_rate: f64,
    pub correction_rate: f64,
}

#[derive(Clone, Debug, Default)]
pub struct BracketTable {
    pub rows: Vec<BracketRow>,
}

impl BracketTable {
    /// Pairs of consecutive `N` at fixed `k` whose width grows by more than
    /// [`TAU_NARROWING`].
    pub fn narrowing_violations(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for a in &self.rows {
            let next = self.rows.iter().filter(|b| b.k == a.k && b.n > a.n).min_by_key(|b| b.n);
            if let Some(b) = next {
                if b.correction_rate > a.correction_rate + TAU_NARROWING {
                    out.push((a.k, a.n, b.n));
                }
            }
        }
        out
    }
}

/// Brackets for `k = 1..=k_max` over `n_list`, sorted by `(k, N)`.
pub fn cnt_bracket_curve(
    family: impl Fn(usize) -> Result<CoherentFamily> + Sync,
    p: &PartitionSpec,
    k_max: usize,
    n_list: &[usize],
    lattice: usize,
    subsample: usize,
) -> Result<BracketTable> {
    let mut rows = Vec::new();
    for &n in n_list {
        let fam = family(n)?;
        let map = *fam.ctx().dynamics()?;
        let full = refined_measures(&map, p, k_max, lattice)?;
        let dec = decomposition(&fam, p, &full, subsample)?;
        for k in 1..=k_max {
            let measures = full.truncate(k);
            let upper = cnt_upper(&measures);
            let partial = Decomposition {
                k,
                q: dec.q,
                weights: Vec::new(),
                marginals: (0..k).map(|ell| marginal(&measures, ell)).collect(),
                rows: dec.rows[..k].to_vec(),
            };
            let correction = partial.correction();
            let kf = k as f64;
            rows.push(BracketRow {
                n,
                k,
                lower_rate: (upper - correction) / kf,
                upper_rate: upper / kf,
                correction_rate: correction / kf,
            });
        }
    }
    rows.sort_by_key(|r| (r.k, r.n));
    Ok(BracketTable { rows })
}
