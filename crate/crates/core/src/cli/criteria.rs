//! Pass/fail rules of the acceptance criteria, shared by `catlab report` and
//! the acceptance test binary.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    NotRun,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::NotRun => "NOT RUN",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub id: &'static str,
    pub status: Status,
    pub detail: String,
}

impl Verdict {
    pub fn new(id: &'static str, pass: bool, detail: String) -> Self {
        Verdict { id, status: if pass { Status::Pass } else { Status::Fail }, detail }
    }

    pub fn not_run(id: &'static str, detail: impl Into<String>) -> Self {
        Verdict { id, status: Status::NotRun, detail: detail.into() }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.id, self.status, self.detail)
    }
}

pub const AC1_REL_TOL: f64 = 0.10;
pub const AC2_TOL_PER_DIM: f64 = 1e-10;
pub const AC3_GAP_MAX: f64 = 0.15;
pub const AC4_WIDTH_MAX: f64 = 0.1;
pub const AC5_THRESHOLD: f64 = 0.1;
pub const AC6_REL_TOL: f64 = 1e-12;
pub const AC6_SEPARATED_MAX: f64 = 1e-3;
pub const AC7_RATIO: f64 = 0.8;
pub const AC8_INVERSION: f64 = 0.05;

pub const AC3_DIMS: [usize; 4] = [32, 64, 128, 256];
pub const AC5_DIMS: [usize; 5] = [32, 64, 128, 256, 512];
pub const AC8_DIMS: [usize; 5] = [8, 16, 32, 64, 128];

pub fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

pub fn nondecreasing(v: &[usize]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0])
}

/// Decreasing except for at most one rise no larger than `rel` of the
/// preceding value.
pub fn decreasing_with_one_inversion(v: &[f64], rel: f64) -> bool {
    let rises: Vec<(f64, f64)> = v.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1])).collect();
    match rises.as_slice() {
        [] => true,
        [(a, b)] => b - a <= rel * a.abs(),
        _ => false,
    }
}

/// First index whose residual exceeds `threshold`.
pub fn breaking_step(residuals: &[f64], threshold: f64) -> Option<usize> {
    residuals.iter().position(|&r| r > threshold)
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn within_factor(value: f64, target: f64, factor: f64) -> bool {
    value >= target / factor && value <= target * factor
}

/// Values of `series` at each of `dims`, or the first missing dimension.
pub fn pick<T: Copy>(series: &[(usize, T)], dims: &[usize]) -> Result<Vec<T>, usize> {
    dims.iter().map(|d| series.iter().find(|(n, _)| n == d).map(|(_, v)| *v).ok_or(*d)).collect()
}

pub fn ac1(increment: f64, log_lambda: f64) -> Verdict {
    let rel = (increment - log_lambda).abs() / log_lambda;
    Verdict::new("AC-1", rel <= AC1_REL_TOL, format!("S(8)-S(7) = {increment:.4} vs log λ = {log_lambda:.4} (rel {rel:.3}, tol {AC1_REL_TOL})"))
}

/// `worst` holds `(identity, N, residual)` maximizing `residual / N`.
pub fn ac2(worst: &[(String, usize, f64)], instances: usize) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, n, r) in worst {
        let ok = *r <= AC2_TOL_PER_DIM * *n as f64;
        pass &= ok;
        parts.push(format!("{name} {r:.1e}@N={n}"));
    }
    Verdict::new("AC-2", pass && !worst.is_empty(), format!("{instances} instances per N; worst {}", parts.join(", ")))
}

pub fn ac3(gaps: &[(usize, f64)]) -> Verdict {
    match pick(gaps, &AC3_DIMS) {
        Err(n) => Verdict::not_run("AC-3", format!("no k=3 gap at N={n}")),
        Ok(g) => {
            let last = g[g.len() - 1];
            let pass = strictly_decreasing(&g) && last <= AC3_GAP_MAX;
            Verdict::new("AC-3", pass, format!("gap(k=3) over N={AC3_DIMS:?}: {} (strictly decreasing, last <= {AC3_GAP_MAX})", fmt_list(&g)))
        }
    }
}

pub fn ac4(widths: &[(usize, f64)]) -> Verdict {
    match pick(widths, &AC3_DIMS) {
        Err(n) => Verdict::not_run("AC-4", format!("no k=2 bracket at N={n}")),
        Ok(w) => {
            let last = w[w.len() - 1];
            let pass = strictly_decreasing(&w) && last <= AC4_WIDTH_MAX;
            Verdict::new("AC-4", pass, format!("width/k (k=2) over N={AC3_DIMS:?}: {} (decreasing, last <= {AC4_WIDTH_MAX})", fmt_list(&w)))
        }
    }
}

/// `breaking[N] = Some(k*)` or `None` if the residual never crossed.
pub fn ac5(breaking: &[(usize, Option<usize>)], log_lambda: f64, label: &str) -> Verdict {
    let ks = match pick(breaking, &AC5_DIMS) {
        Err(n) => return Verdict::not_run("AC-5", format!("no breaking step at N={n}")),
        Ok(ks) => ks,
    };
    let Some(ks) = ks.into_iter().collect::<Option<Vec<usize>>>() else {
        return Verdict::new("AC-5", false, format!("{label}: residual never exceeded {AC5_THRESHOLD} for some N"));
    };
    let target = 1.0 / (2.0 * log_lambda);
    let xs: Vec<f64> = AC5_DIMS.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let slope = fit_slope(&xs, &ys).unwrap_or(0.0);
    let pass = nondecreasing(&ks) && within_factor(slope, target, 2.0);
    Verdict::new("AC-5", pass, format!("{label}: k* over N={AC5_DIMS:?} = {ks:?}, slope {slope:.3} vs 1/(2 log λ) = {target:.3} (factor 2)"))
}

pub fn ac6(max_rel_err: f64, max_n: usize, separated_kernel_64: Option<f64>) -> Verdict {
    let Some(sep) = separated_kernel_64 else {
        return Verdict::not_run("AC-6", "no separated-pair kernel at N=64");
    };
    let pass = max_rel_err <= AC6_REL_TOL && sep <= AC6_SEPARATED_MAX;
    Verdict::new(
        "AC-6",
        pass,
        format!("closed-form rel err {max_rel_err:.1e} (N <= {max_n}, tol {AC6_REL_TOL:e}); max N|K0|^2 at d >= 1/4, N=64: {sep:.3e} (tol {AC6_SEPARATED_MAX:e})"),
    )
}

/// `curve[k-1] = H[Y^(k)]` at `N = 32`.
pub fn ac7(all_bounded: bool, curve: &[f64]) -> Verdict {
    if curve.len() < 5 {
        return Verdict::not_run("AC-7", "saturation curve shorter than k=5");
    }
    let r2 = curve[1] / 2.0;
    let r5 = curve[4] / 5.0;
    let pass = all_bounded && r5 < AC7_RATIO * r2;
    Verdict::new("AC-7", pass, format!("all H <= 2 log N: {all_bounded}; H/k at k=5 {r5:.4} vs k=2 {r2:.4} (ratio {:.3}, need < {AC7_RATIO})", r5 / r2))
}

/// `series = [(label, values over AC8_DIMS)]`.
pub fn ac8(series: &[(String, Vec<f64>)]) -> Verdict {
    if series.is_empty() || series.iter().any(|(_, v)| v.len() != AC8_DIMS.len()) {
        return Verdict::not_run("AC-8", format!("residuals missing for some N in {AC8_DIMS:?}"));
    }
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, v) in series {
        let ok = decreasing_with_one_inversion(v, AC8_INVERSION);
        pass &= ok;
        parts.push(format!("{name} {} [{}]", fmt_list(v), if ok { "ok" } else { "not monotone" }));
    }
    Verdict::new("AC-8", pass, parts.join("; "))
}

pub fn fmt_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}
