use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::criteria::{breaking_step, decreasing_with_one_inversion, nondecreasing, AC8_INVERSION};
use super::table::ResultTable;
use super::CliError;
use crate::coherent::{
    binomial_amplitudes, clock_closed_form_error, entropic_overlap_bound, normalization_residual, overcompleteness_residual, overlap_grid,
    overlap_precise, CoherentFamily, TAU_NORM,
};
use crate::entropy_alf::{alf_levels, pou_from_partition, gap_from_density, AlfLevel};
use crate::entropy_cnt::{cnt_bracket_curve, evolution_row_gap, TAU_NARROWING};
use crate::linalg::{CMatrix, C64};
use crate::quantize::{egorov_residual, egorov_residual_centred, roundtrip_error, state_overlap_residual, GridNorm, TorusFunction};
use crate::torus::{entropy_curve, refined_measures, CatMap, TorusPoint};
use crate::weyl::{evolve_index, expand, reconstruct, theta, weyl_operator, weyl_trace, WeylContext, WeylIndex};

/// Tables produced by a command and the tolerance breaches it found.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub tables: Vec<ResultTable>,
    pub breaches: Vec<String>,
}

pub fn context(config: &ExperimentConfig, n: usize) -> Result<WeylContext, CliError> {
    Ok(WeylContext::with_map_choice(n, config.cat_map()?, config.map.uv_choice)?)
}

/// The binomial family, or the corrupted one when fault injection is on.
pub fn family(config: &ExperimentConfig, n: usize) -> Result<CoherentFamily, CliError> {
    Ok(build_family(config.cat_map()?, config.map.uv_choice, config.axioms.corrupt_fundamental, n)?)
}

fn build_family(map: CatMap, uv_choice: usize, corrupt: Option<f64>, n: usize) -> crate::Result<CoherentFamily> {
    let ctx = WeylContext::with_map_choice(n, map, uv_choice)?;
    match corrupt {
        None => CoherentFamily::new(ctx),
        Some(scale) => {
            let mut c0 = binomial_amplitudes(n)?;
            c0[n / 2] *= scale;
            CoherentFamily::with_fundamental(ctx, c0)
        }
    }
}

fn per_dim<T: Send>(config: &ExperimentConfig, f: impl Fn(usize) -> Result<T, CliError> + Sync) -> Result<Vec<(usize, T)>, CliError> {
    config.dims().into_par_iter().map(|n| Ok((n, f(n)?))).collect()
}

fn random_label(rng: &mut ChaCha8Rng, n: usize) -> WeylIndex {
    let r = 3 * n as i128;
    WeylIndex::new(rng.gen_range(-r..=r), rng.gen_range(-r..=r))
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Algebraic identities of the Weyl system over random instances, as
/// `(name, worst HS residual)`.
pub fn algebra_residuals(ctx: &WeylContext, instances: usize, seed: u64) -> Result<Vec<(&'static str, f64)>, CliError> {
    let n = ctx.dim();
    let map = *ctx.dynamics()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let (mut comp, mut trace, mut cov, mut round) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..instances {
        let a = random_label(&mut rng, n);
        let b = random_label(&mut rng, n);
        let lhs = weyl_operator(ctx, a).matmul(&weyl_operator(ctx, b));
        let phase = C64::from_polar(1.0, std::f64::consts::PI * a.sigma(&b) as f64 / n as f64);
        comp = comp.max((&lhs - &weyl_operator(ctx, a + b).scale(phase)).hs_norm());

        trace = trace.max((weyl_trace(ctx, a) - weyl_operator(ctx, a).tau()).norm());

        let k = rng.gen_range(1..=3i64);
        let evolved = theta(ctx, &weyl_operator(ctx, b), k)?;
        cov = cov.max((&evolved - &weyl_operator(ctx, evolve_index(&map, b, k))).hs_norm());

        let x = random_matrix(&mut rng, n);
        round = round.max((&reconstruct(ctx, &expand(ctx, &x)) - &x).hs_norm());
    }
    Ok(vec![("weyl_composition", comp), ("weyl_trace", trace), ("theta_covariance", cov), ("expansion_roundtrip", round)])
}

/// Clock labels `n2` at which the closed form is compared, skipping the
/// exact zero at `N/2`.
pub fn clock_sample(n: usize) -> Vec<i128> {
    let n = n as i128;
    let mut v: Vec<i128> = if n <= 64 { (1..n).collect() } else { (1..n).step_by((n / 48).max(1) as usize).chain([2, n / 2 - 1, n / 2 + 1, n - 1]).collect() };
    v.retain(|&m| 2 * m != n);
    v.sort_unstable();
    v.dedup();
    v
}

/// Largest relative error of `N |<C, W(0, n2) C>|^2` against its closed form.
pub fn closed_form_error(fam: &CoherentFamily) -> f64 {
    let n = fam.dim();
    clock_sample(n).into_iter().filter_map(|m| clock_closed_form_error(fam, m)).fold(0.0, f64::max)
}

/// Largest `N|K0|^2 / bound` over shift labels `n1 ≠ 0` with a finite bound.
pub fn entropic_bound_ratio(fam: &CoherentFamily, rng: &mut ChaCha8Rng, samples: usize) -> Option<f64> {
    let n = fam.dim();
    let mut worst: Option<f64> = None;
    for _ in 0..samples {
        let n1 = rng.gen_range(1..n);
        let n2 = rng.gen_range(0..n) as i128;
        let Some(b) = entropic_overlap_bound(n, n1) else { continue };
        let e = overlap_precise(fam, WeylIndex::new(n1 as i128, n2));
        let ratio = (2.0 * e.log_modulus - 2.0 * b.ln()).exp();
        worst = Some(worst.map_or(ratio, |w: f64| w.max(ratio)));
    }
    worst
}

/// Largest `N |K_0(x, y)|^2` over cell pairs at torus distance at least `d`.
pub fn separated_kernel(fam: &CoherentFamily, d: f64) -> f64 {
    let n = fam.dim();
    let grid = overlap_grid(fam);
    let origin = TorusPoint::new(0.0, 0.0);
    grid.indexed_iter()
        .filter(|((a, b), _)| TorusPoint::new(*a as f64 / n as f64, *b as f64 / n as f64).distance(&origin) >= d)
        .map(|(_, &v)| n as f64 * v)
        .fold(0.0, f64::max)
}

pub fn verify_axioms(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut table = ResultTable::new("axioms", &["n", "axiom", "value", "tolerance", "pass"]);
    let mut breaches = Vec::new();
    let results = per_dim(config, |n| {
        let fam = family(config, n)?;
        let nf = n as f64;
        let mut rows: Vec<(&'static str, f64, Option<f64>)> = vec![
            ("normalization", normalization_residual(&fam), Some(TAU_NORM)),
            ("overcompleteness", overcompleteness_residual(&fam), Some(1e-10 * nf)),
        ];
        for (name, r) in algebra_residuals(fam.ctx(), config.axioms.instances, config.seed)? {
            rows.push((name, r, Some(1e-10 * nf)));
        }
        rows.push(("closed_form_overlap", closed_form_error(&fam), Some(1e-12)));
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(n as u64));
        if let Some(r) = entropic_bound_ratio(&fam, &mut rng, 32) {
            rows.push(("entropic_bound_ratio", r, Some(1.0 + 1e-9)));
        }
        rows.push(("separated_kernel", separated_kernel(&fam, 0.25), None));
        Ok(rows)
    })?;
    for (n, rows) in results {
        for (name, value, tol) in rows {
            let pass = tol.map(|t| value <= t);
            if pass == Some(false) {
                breaches.push(format!("N={n}: {name} = {value:e} exceeds {:e}", tol.unwrap_or(f64::NAN)));
            }
            table.push(vec![n.into(), name.into(), value.into(), tol.into(), pass.into()]);
        }
    }
    Ok(Outcome { tables: vec![table], breaches })
}

pub fn semiclassics(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let map = config.cat_map()?;
    let log_lambda = map.log_lambda();
    let threshold = config.semiclassics.threshold;
    let k_max = config.semiclassics.k_max;
    let functions = [("cos_x1", TorusFunction::cos_x1()), ("left_half", TorusFunction::left_half())];

    struct PerDim {
        quant: Vec<[f64; 3]>,
        literal: Vec<f64>,
        centred: Vec<f64>,
    }
    let results = per_dim(config, |n| {
        let fam = family(config, n)?;
        let quant = functions
            .iter()
            .map(|(_, f)| {
                Ok([
                    roundtrip_error(&fam, f, GridNorm::L2)?,
                    roundtrip_error(&fam, f, GridNorm::Sup)?,
                    state_overlap_residual(&fam, f, f)?,
                ])
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let f = TorusFunction::cos_x1();
        let literal = (0..=k_max as i64).map(|k| egorov_residual(&fam, &f, k)).collect::<crate::Result<Vec<_>>>()?;
        let centred = (0..=k_max as i64).map(|k| egorov_residual_centred(&fam, &f, k)).collect::<crate::Result<Vec<_>>>()?;
        Ok(PerDim { quant, literal, centred })
    })?;

    let mut quant = ResultTable::new("quantization", &["n", "function", "roundtrip_l2", "roundtrip_sup", "overlap_residual"]);
    let mut egorov = ResultTable::new("egorov", &["n", "k", "residual", "residual_centred"]);
    let mut breaking = ResultTable::new("breaking", &["n", "k_star", "k_star_centred", "predicted", "threshold", "log_lambda"]);
    let mut breaches = Vec::new();
    let mut k_stars = Vec::new();
    for (n, r) in &results {
        for ((name, _), q) in functions.iter().zip(&r.quant) {
            quant.push(vec![(*n).into(), (*name).into(), q[0].into(), q[1].into(), q[2].into()]);
        }
        for k in 0..=k_max {
            egorov.push(vec![(*n).into(), k.into(), r.literal[k].into(), r.centred[k].into()]);
        }
        if r.literal[0] > 1e-11 {
            breaches.push(format!("N={n}: k=0 Egorov residual {:e} > 1e-11", r.literal[0]));
        }
        let ks = breaking_step(&r.literal, threshold);
        let kc = breaking_step(&r.centred, threshold);
        let predicted = (*n as f64).ln() / (2.0 * log_lambda);
        breaking.push(vec![(*n).into(), ks.into(), kc.into(), predicted.into(), threshold.into(), log_lambda.into()]);
        k_stars.push(ks);
    }
    match k_stars.iter().copied().collect::<Option<Vec<usize>>>() {
        Some(ks) if !nondecreasing(&ks) => breaches.push(format!("breaking step not nondecreasing in N: {ks:?}")),
        None => breaches.push(format!("Egorov residual stayed below {threshold} up to k={k_max} for some N")),
        _ => {}
    }
    for (i, (name, _)) in functions.iter().enumerate() {
        for (j, metric) in ["roundtrip_l2", "overlap_residual"].iter().enumerate() {
            let series: Vec<f64> = results.iter().map(|(_, r)| r.quant[i][[0, 2][j]]).collect();
            if !decreasing_with_one_inversion(&series, AC8_INVERSION) {
                breaches.push(format!("{metric} of {name} not decreasing in N: {series:?}"));
            }
        }
    }
    Ok(Outcome { tables: vec![quant, egorov, breaking], breaches })
}

fn in_window(k: usize, n: usize, alpha: f64) -> bool {
    k as f64 <= alpha * (n as f64).ln()
}

pub fn alf(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    config.validate_entropy(true)?;
    let map = config.cat_map()?;
    let p = config.partition()?;
    let alpha = config.alpha()?;
    let budget = config.alf.budget();
    let levels_at = |n: usize, k_max: usize| -> Result<Vec<AlfLevel>, CliError> {
        let fam = family(config, n)?;
        let y = pou_from_partition(&fam, &p)?;
        Ok(alf_levels(fam.ctx(), &y, k_max, &budget)?)
    };
    let measures = refined_measures(&map, &p, config.k_max, config.lattice)?;
    let results = per_dim(config, |n| levels_at(n, config.k_max))?;

    let mut table = ResultTable::new(
        "alf",
        &[
            "n", "k", "h", "h_rate", "classical", "classical_rate", "gap", "bound", "bounded", "in_window", "leakage_weight", "leakage_term",
            "restricted_gap", "delta", "fannes",
        ],
    );
    let mut breaches = Vec::new();
    let mut gaps: Vec<(usize, usize, f64)> = Vec::new();
    for (n, levels) in &results {
        let bound = 2.0 * (*n as f64).ln();
        for level in levels {
            let k = level.k;
            let m = measures.truncate(k);
            let classical = crate::torus::shannon_entropy(&m);
            let kf = k as f64;
            let gap = (level.entropy - classical).abs() / kf;
            let bounded = level.entropy <= bound + 1e-9;
            if !bounded {
                breaches.push(format!("N={n}, k={k}: H = {} exceeds 2 log N", level.entropy));
            }
            let report = level.density.as_ref().map(|d| gap_from_density(d, &m)).transpose()?;
            table.push(vec![
                (*n).into(),
                k.into(),
                level.entropy.into(),
                (level.entropy / kf).into(),
                classical.into(),
                (classical / kf).into(),
                gap.into(),
                bound.into(),
                bounded.into(),
                in_window(k, *n, alpha).into(),
                report.as_ref().map(|r| r.leakage_weight).into(),
                report.as_ref().map(|r| r.leakage_term).into(),
                report.as_ref().map(|r| r.restricted_gap).into(),
                report.as_ref().map(|r| r.delta).into(),
                report.as_ref().map(|r| r.fannes).into(),
            ]);
            gaps.push((*n, k, gap));
        }
    }
    breaches.extend(narrowing_breaches("ALF gap", &gaps));

    let mut classical = ResultTable::new("alf_classical", &["k", "entropy", "increment", "log_lambda"]);
    let curve = entropy_curve(&map, &p, config.alf.classical_k, config.lattice)?;
    for (i, &s) in curve.iter().enumerate() {
        let inc = (i > 0).then(|| s - curve[i - 1]);
        classical.push(vec![(i + 1).into(), s.into(), inc.into(), map.log_lambda().into()]);
    }

    let sat_n = config.alf.saturation_n;
    let mut saturation = ResultTable::new("alf_saturation", &["n", "k", "h", "h_rate", "bound", "bounded"]);
    let bound = 2.0 * (sat_n as f64).ln();
    for level in levels_at(sat_n, config.alf.saturation_k)? {
        let bounded = level.entropy <= bound + 1e-9;
        if !bounded {
            breaches.push(format!("saturation N={sat_n}, k={}: H = {} exceeds 2 log N", level.k, level.entropy));
        }
        saturation.push(vec![sat_n.into(), level.k.into(), level.entropy.into(), (level.entropy / level.k as f64).into(), bound.into(), bounded.into()]);
    }
    Ok(Outcome { tables: vec![table, classical, saturation], breaches })
}

/// Consecutive `N` at fixed `k` where `value` grows by more than the noise
/// tolerance.
fn narrowing_breaches(label: &str, values: &[(usize, usize, f64)]) -> Vec<String> {
    let mut out = Vec::new();
    let mut sorted = values.to_vec();
    sorted.sort_by_key(|&(n, k, _)| (k, n));
    for w in sorted.windows(2) {
        let ((n0, k0, v0), (n1, k1, v1)) = (w[0], w[1]);
        if k0 == k1 && v1 > v0 + TAU_NARROWING {
            out.push(format!("{label} at k={k0} grows from {v0:.4} (N={n0}) to {v1:.4} (N={n1})"));
        }
    }
    out
}

pub fn cnt(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    config.validate_entropy(false)?;
    let p = config.partition()?;
    let alpha = config.alpha()?;
    let dims = config.dims();
    let map = config.cat_map()?;
    let build = |n| build_family(map, config.map.uv_choice, config.axioms.corrupt_fundamental, n);
    let bracket = cnt_bracket_curve(build, &p, config.k_max, &dims, config.lattice, config.subsample)?;

    let mut table = ResultTable::new("cnt", &["n", "k", "lower_rate", "upper_rate", "correction_rate", "width_rate", "in_window"]);
    let mut breaches = Vec::new();
    for r in &bracket.rows {
        if r.lower_rate > r.upper_rate + 1e-9 {
            breaches.push(format!("N={}, k={}: lower bound above upper bound", r.n, r.k));
        }
        table.push(vec![
            r.n.into(),
            r.k.into(),
            r.lower_rate.into(),
            r.upper_rate.into(),
            r.correction_rate.into(),
            (r.upper_rate - r.lower_rate).into(),
            in_window(r.k, r.n, alpha).into(),
        ]);
    }
    for (k, n0, n1) in bracket.narrowing_violations() {
        breaches.push(format!("CNT bracket at k={k} widens from N={n0} to N={n1}"));
    }

    let mut evolution = ResultTable::new("cnt_evolution", &["n", "ell", "row_gap"]);
    let gaps = per_dim(config, |n| {
        let fam = family(config, n)?;
        (1..config.k_max).map(|ell| Ok((ell, evolution_row_gap(&fam, &p, ell, config.subsample)?))).collect::<Result<Vec<_>, CliError>>()
    })?;
    for (n, rows) in gaps {
        for (ell, g) in rows {
            evolution.push(vec![n.into(), ell.into(), g.into()]);
        }
    }
    Ok(Outcome { tables: vec![table, evolution], breaches })
}
