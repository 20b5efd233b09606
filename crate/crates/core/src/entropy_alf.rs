//! ALF entropy of the quantized cat map.
//!
//! A partition of unity `Y = {y_0, …, y_{ℓ-1}}` is refined in time to the
//! chains `A_i = Θ^{k-1}(y_{i_k}) ⋯ Θ(y_{i_2}) y_{i_1}` and the entropy is
//! taken of the Gram state `ρ[Y^(k)]_{i,j} = τ_N(A_j* A_i)`.
//!
//! Chain codes are base `ℓ` with the latest symbol `i_k` most significant.

use ndarray::{Array2, Axis};

use crate::coherent::CoherentFamily;
use crate::error::{Error, Result};
use crate::linalg::{
    eigvals_hermitian, fannes_bound, shannon, sqrt_psd, trace_norm_distance, CMatrix, DensityMatrix, C64, TAU_TRACE,
};
use crate::quantize::{anti_wick_averages, cell_averages, TorusFunction};
use crate::torus::{decode, encode, refined_measures, shannon_entropy, PartitionSpec, RefinedMeasure};
use crate::weyl::{theta, WeylContext};

/// Per-dimension slack of the unity relation `Σ y_i* y_i = 1`.
pub const TAU_UNITY_PER_DIM: f64 = 1e-9;

/// Size limits on the refinement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_chains: usize,
    pub max_entries: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_chains: 4096, max_entries: 1 << 31 }
    }
}

impl Budget {
    pub fn check(&self, ell: usize, k: usize, n: usize) -> Result<()> {
        let chains = (ell as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
        if chains > self.max_chains as u128 {
            return Err(Error::BudgetExceeded(format!("{ell}^{k} = {chains} chains exceed {}", self.max_chains)));
        }
        let entries = chains * (n * n) as u128;
        if entries > self.max_entries as u128 {
            return Err(Error::BudgetExceeded(format!("{entries} matrix entries exceed {}", self.max_entries)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct PartitionOfUnity {
    ops: Vec<CMatrix>,
    /// The last operator is the corrector `sqrt(1 - Σ y_i^2)`.
    has_corrector: bool,
    unity_defect: f64,
    bistochastic_defect: f64,
}

impl PartitionOfUnity {
    /// Checks `Σ y_i* y_i = 1` to `1e-9 N`.
    pub fn new(ops: Vec<CMatrix>, has_corrector: bool) -> Result<Self> {
        let n = ops.first().map(|y| y.dim()).ok_or_else(|| Error::InvalidArgument("empty partition of unity".into()))?;
        let mut left = CMatrix::zeros(n);
        let mut right = CMatrix::zeros(n);
        for y in &ops {
            if y.dim() != n {
                return Err(Error::DimensionMismatch(y.dim(), n));
            }
            left = &left + &y.adjoint().matmul(y);
            right = &right + &y.matmul(&y.adjoint());
        }
        let id = CMatrix::identity(n);
        let unity_defect = (&left - &id).hs_norm();
        if unity_defect > TAU_UNITY_PER_DIM * n as f64 {
            return Err(Error::UnityDefect(unity_defect));
        }
        let bistochastic_defect = (&right - &id).hs_norm();
        Ok(PartitionOfUnity { ops, has_corrector, unity_defect, bistochastic_defect })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ops[0].dim()
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn has_corrector(&self) -> bool {
        self.has_corrector
    }

    /// Index of the corrector, if any.
    pub fn corrector(&self) -> Option<usize> {
        self.has_corrector.then(|| self.ops.len() - 1)
    }

    pub fn unity_defect(&self) -> f64 {
        self.unity_defect
    }

    pub fn bistochastic_defect(&self) -> f64 {
        self.bistochastic_defect
    }

    pub fn is_bistochastic(&self) -> bool {
        self.bistochastic_defect <= TAU_UNITY_PER_DIM * self.dim() as f64
    }
}

/// `y_i = γ_{N∞}(χ_{C_i})` for the grid atoms plus the corrector
/// `y_q = sqrt(1 - Σ y_i^2)`.
pub fn pou_from_partition(fam: &CoherentFamily, p: &PartitionSpec) -> Result<PartitionOfUnity> {
    let n = fam.dim();
    if n % p.q_side() != 0 {
        return Err(Error::IndivisibleGrid { q_side: p.q_side(), n });
    }
    let mut ops = Vec::with_capacity(p.atoms() + 1);
    let mut squares = CMatrix::zeros(n);
    for atom in 0..p.atoms() {
        let y = anti_wick_averages(fam, &cell_averages(&TorusFunction::atom(*p, atom), n, 1))?.hermitian_part();
        squares = &squares + &y.matmul(&y);
        ops.push(y);
    }
    let rest = (&CMatrix::identity(n) - &squares).hermitian_part();
    ops.push(sqrt_psd(&rest)?);
    PartitionOfUnity::new(ops, true)
}

/// Ordered time refinement `Y^(k)`.
#[derive(Clone, Debug)]
pub struct Chains {
    pub k: usize,
    pub ell: usize,
    /// `ops[code]`, code base `ℓ` with `i_k` most significant
    pub ops: Vec<CMatrix>,
}

/// Evolved copies `Θ^t(y_i)` for `t < k`.
fn evolved_ops(ctx: &WeylContext, y: &PartitionOfUnity, k: usize) -> Result<Vec<Vec<CMatrix>>> {
    (0..k)
        .map(|t| y.ops().iter().map(|op| theta(ctx, op, t as i64)).collect::<Result<Vec<_>>>())
        .collect()
}

/// Extends chains of length `t` by the factor `Θ^t(y_m)` on the left.
fn extend(chains: &[CMatrix], evolved: &[CMatrix]) -> Vec<CMatrix> {
    evolved.iter().flat_map(|e| chains.iter().map(move |c| e.matmul(c))).collect()
}

pub fn refine(ctx: &WeylContext, y: &PartitionOfUnity, k: usize) -> Result<Chains> {
    refine_with(ctx, y, k, &Budget::default())
}

pub fn refine_with(ctx: &WeylContext, y: &PartitionOfUnity, k: usize, budget: &Budget) -> Result<Chains> {
    if k == 0 {
        return Err(Error::InvalidArgument("refinement needs k >= 1".into()));
    }
    budget.check(y.len(), k, y.dim())?;
    let evolved = evolved_ops(ctx, y, k)?;
    let mut ops = y.ops().to_vec();
    for layer in evolved.iter().skip(1) {
        ops = extend(&ops, layer);
    }
    Ok(Chains { k, ell: y.len(), ops })
}

/// Rows `vec(A_i)`.
fn stack(chains: &[CMatrix]) -> Array2<C64> {
    let n = chains[0].dim();
    let mut b = Array2::zeros((chains.len(), n * n));
    for (mut row, c) in b.axis_iter_mut(Axis(0)).zip(chains) {
        for (dst, src) in row.iter_mut().zip(c.as_array().iter()) {
            *dst = *src;
        }
    }
    b
}

/// `G_{ij} = τ_N(A_j* A_i)`.
fn gram(chains: &[CMatrix]) -> Array2<C64> {
    let n = chains[0].dim();
    let b = stack(chains);
    let bh = b.t().mapv(|z| z.conj());
    b.dot(&bh) / C64::new(n as f64, 0.0)
}

/// `B* B / N`, whose non-zero spectrum equals that of the Gram matrix.
fn dual_gram(chains: &[CMatrix]) -> Array2<C64> {
    let n = chains[0].dim();
    let b = stack(chains);
    let bh = b.t().mapv(|z| z.conj());
    bh.dot(&b) / C64::new(n as f64, 0.0)
}

fn check_trace(tr: C64) -> Result<()> {
    if (tr.re - 1.0).abs() > TAU_TRACE || tr.im.abs() > TAU_TRACE {
        return Err(Error::UnityDefect((tr - C64::new(1.0, 0.0)).norm()));
    }
    Ok(())
}

/// `ρ[Y^(k)]`.
#[derive(Clone, Debug)]
pub struct RefinedDensity {
    pub k: usize,
    pub ell: usize,
    pub rho: DensityMatrix,
}

impl RefinedDensity {
    /// Partial trace over the latest symbol `i_k`.
    pub fn trace_latest(&self) -> Result<DensityMatrix> {
        let m = self.ell.pow(self.k as u32 - 1);
        let r = self.rho.matrix();
        DensityMatrix::new(CMatrix::from_fn(m, |i, j| (0..self.ell).map(|s| r[(s * m + i, s * m + j)]).sum()))
    }

    /// Partial trace over the earliest symbol `i_1`.
    pub fn trace_earliest(&self) -> Result<DensityMatrix> {
        let m = self.ell.pow(self.k as u32 - 1);
        let l = self.ell;
        let r = self.rho.matrix();
        DensityMatrix::new(CMatrix::from_fn(m, |i, j| (0..l).map(|s| r[(i * l + s, j * l + s)]).sum()))
    }
}

pub fn refined_density_from_chains(chains: &Chains) -> Result<RefinedDensity> {
    let g = gram(&chains.ops);
    let tr: C64 = g.diag().sum();
    check_trace(tr)?;
    let rho = DensityMatrix::new(CMatrix::from_array(g / tr)?)?;
    Ok(RefinedDensity { k: chains.k, ell: chains.ell, rho })
}

pub fn refined_density(ctx: &WeylContext, y: &PartitionOfUnity, k: usize) -> Result<RefinedDensity> {
    refined_density_from_chains(&refine(ctx, y, k)?)
}

/// `S(ρ[Y^(k)])` from whichever of the Gram matrix and its dual is smaller.
pub fn chain_entropy(chains: &[CMatrix]) -> Result<f64> {
    let n = chains[0].dim();
    let g = if chains.len() <= n * n { gram(chains) } else { dual_gram(chains) };
    let tr: C64 = g.diag().sum();
    check_trace(tr)?;
    let g = CMatrix::from_array(g / tr)?;
    let ev = eigvals_hermitian(&g.hermitian_part())?;
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -crate::linalg::TAU_PSD {
        return Err(Error::NotPsd(min));
    }
    Ok(shannon(ev.into_iter().map(|l| l.max(0.0))))
}

/// Largest refined density kept by [`alf_levels`].
pub const MAX_KEPT_DENSITY: usize = 1024;

/// One level of an entropy sweep.
#[derive(Clone, Debug)]
pub struct AlfLevel {
    pub k: usize,
    pub entropy: f64,
    /// `ρ[Y^(k)]` when its dimension is at most `min(N², MAX_KEPT_DENSITY)`
    pub density: Option<RefinedDensity>,
}

/// `H[Y^(k)]` for `k = 1..=k_max` with chains extended one level at a time.
pub fn alf_levels(ctx: &WeylContext, y: &PartitionOfUnity, k_max: usize, budget: &Budget) -> Result<Vec<AlfLevel>> {
    if k_max == 0 {
        return Ok(Vec::new());
    }
    budget.check(y.len(), k_max, y.dim())?;
    let n = y.dim();
    let evolved = evolved_ops(ctx, y, k_max)?;
    let mut chains = y.ops().to_vec();
    let mut out = Vec::with_capacity(k_max);
    for t in 0..k_max {
        if t > 0 {
            chains = extend(&chains, &evolved[t]);
        }
        let k = t + 1;
        let level = if chains.len() <= (n * n).min(MAX_KEPT_DENSITY) {
            let density = refined_density_from_chains(&Chains { k, ell: y.len(), ops: chains.clone() })?;
            AlfLevel { k, entropy: shannon(density.rho.probabilities()?), density: Some(density) }
        } else {
            AlfLevel { k, entropy: chain_entropy(&chains)?, density: None }
        };
        out.push(level);
    }
    Ok(out)
}

/// `H[Y^(k)]` for `k = 1..=k_max`; each value is checked against `2 log N`.
pub fn alf_curve(ctx: &WeylContext, y: &PartitionOfUnity, k_max: usize) -> Result<Vec<f64>> {
    alf_curve_with(ctx, y, k_max, &Budget::default())
}

pub fn alf_curve_with(ctx: &WeylContext, y: &PartitionOfUnity, k_max: usize, budget: &Budget) -> Result<Vec<f64>> {
    let bound = 2.0 * (y.dim() as f64).ln();
    alf_levels(ctx, y, k_max, budget)?
        .into_iter()
        .map(|level| {
            if level.entropy > bound + 1e-9 {
                return Err(Error::InvariantViolation(format!("H[Y^({})] = {} exceeds 2 log N = {bound}", level.k, level.entropy)));
            }
            Ok(level.entropy)
        })
        .collect()
}

/// Comparison of `H[Y^(k)]` with the classical `S_μ(C^(k))`.
#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    pub k: usize,
    pub quantum: f64,
    pub classical: f64,
    /// `|H[Y^(k)] − S_μ(C^(k))| / k`
    pub gap: f64,
    /// Weight of chain indices containing the corrector.
    pub leakage_weight: f64,
    /// Entropy of `ρ` restricted to corrector-free indices and renormalized.
    pub restricted: f64,
    /// `|S(ρ) − S(ρ_r)| / k`
    pub leakage_term: f64,
    /// `|S(ρ_r) − S_μ(C^(k))| / k`
    pub restricted_gap: f64,
    /// Trace distance between `ρ_r` and `σ[C^(k)]`.
    pub delta: f64,
    /// `fannes_bound(Δ, q^k)`
    pub fannes: f64,
}

impl GapReport {
    /// `gap ≤ fannes / k + leakage_term` whenever `Δ ≤ 1/e`.
    pub fn bound_consistent(&self) -> Option<bool> {
        (self.delta <= (-1.0f64).exp()).then(|| self.gap <= self.fannes / self.k as f64 + self.leakage_term + 1e-12)
    }
}

pub fn gap_report(fam: &CoherentFamily, p: &PartitionSpec, k: usize, lattice: usize) -> Result<GapReport> {
    let ctx = fam.ctx();
    let map = *ctx.dynamics()?;
    let y = pou_from_partition(fam, p)?;
    let dens = refined_density(ctx, &y, k)?;
    let measures = refined_measures(&map, p, k, lattice)?;
    gap_from_density(&dens, &measures)
}

/// Report for a density whose first `q` symbols are the grid atoms and whose
/// remaining symbols are correctors.
pub fn gap_from_density(dens: &RefinedDensity, measures: &RefinedMeasure) -> Result<GapReport> {
    let (k, ell, q) = (dens.k, dens.ell, measures.q);
    if measures.k != k || q >= ell {
        return Err(Error::InvalidArgument(format!("measures (k={}, q={q}) do not match density (k={k}, ell={ell})", measures.k)));
    }
    let quantum = shannon(dens.rho.probabilities()?);
    let classical = shannon_entropy(measures);
    let keep: Vec<usize> = (0..dens.rho.dim()).filter(|&c| decode(c as u64, ell, k).iter().all(|&s| s < q)).collect();
    let r = dens.rho.matrix();
    let kept_weight: f64 = keep.iter().map(|&i| r[(i, i)].re).sum();
    let restricted_mat = CMatrix::from_fn(keep.len(), |a, b| r[(keep[a], keep[b])] / kept_weight);
    let restricted_rho = DensityMatrix::new(restricted_mat.hermitian_part())?;
    let restricted = shannon(restricted_rho.probabilities()?);
    let sigma_diag: Vec<f64> = keep.iter().map(|&c| measures.weight(encode(&decode(c as u64, ell, k), q))).collect();
    let sigma = DensityMatrix::from_diag(&sigma_diag)?;
    let delta = trace_norm_distance(&restricted_rho, &sigma)?;
    let kf = k as f64;
    Ok(GapReport {
        k,
        quantum,
        classical,
        gap: (quantum - classical).abs() / kf,
        leakage_weight: 1.0 - kept_weight,
        restricted,
        leakage_term: (quantum - restricted).abs() / kf,
        restricted_gap: (restricted - classical).abs() / kf,
        delta,
        fannes: fannes_bound(delta, q.pow(k as u32)),
    })
}
