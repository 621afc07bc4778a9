//! E[X | X + N(0, σ²) = y] for a reward law X.
//!
//! The general engine works with g(x) = ln f(x) − (y − x)²/(2σ²), locates
//! its maximum, and integrates exp(g − g*) over the region where it is not
//! negligible, so nothing underflows however far y sits from the support.

use crate::dist::{RewardDistribution, RewardLaw, Truncated};
use crate::error::{invalid, Error, Result};
use crate::normal;
use crate::quad::{integrate_vec, Tolerance};
use serde::{Deserialize, Serialize};

/// ln-weight below the peak at which the integrand is dropped (e^-60 ≈ 1e-26).
const DROP: f64 = 60.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosteriorQuery {
    pub distribution: RewardDistribution,
    pub sigma: f64,
    pub y: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    1e-8
}

impl PosteriorQuery {
    pub fn new(distribution: RewardDistribution, sigma: f64, y: f64) -> Self {
        Self { distribution, sigma, y, tolerance: default_tolerance() }
    }
}

pub fn posterior_mean(q: &PosteriorQuery) -> Result<f64> {
    posterior_mean_law(&q.distribution, q.sigma, q.y, q.tolerance)
}

fn in_support(law: &dyn RewardLaw, y: f64) -> bool {
    let (lo, hi) = law.support();
    if law.continuous_mass() > 0.0 {
        return y >= lo && y <= hi;
    }
    law.atoms().iter().any(|a| (a.0 - y).abs() <= 1e-12 * a.0.abs().max(1.0))
}

/// The support point closest to y (atoms for purely atomic laws).
pub fn nearest_support_point(law: &dyn RewardLaw, y: f64) -> f64 {
    let (lo, hi) = law.support();
    if law.continuous_mass() > 0.0 {
        return y.clamp(lo, hi);
    }
    law.atoms()
        .into_iter()
        .map(|a| a.0)
        .min_by(|a, b| (a - y).abs().total_cmp(&(b - y).abs()))
        .unwrap_or(lo)
}

/// Posterior mean under any [`RewardLaw`]; relative tolerance `tol`.
pub fn posterior_mean_law(law: &dyn RewardLaw, sigma: f64, y: f64, tol: f64) -> Result<f64> {
    if !y.is_finite() {
        return invalid(format!("observation must be finite, got {y}"));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return invalid(format!("sigma must be finite and ≥ 0, got {sigma}"));
    }
    if !(tol > 0.0) {
        return invalid("tolerance must be > 0");
    }
    if sigma == 0.0 {
        if in_support(law, y) {
            return Ok(y);
        }
        return invalid(format!("exact observation y={y} lies outside the support"));
    }
    let (lo, hi) = law.support();
    if lo == hi {
        return Ok(lo);
    }
    let inv2s2 = 0.5 / (sigma * sigma);
    let g = |x: f64| law.ln_pdf(x) - (y - x) * (y - x) * inv2s2;
    let atoms: Vec<(f64, f64)> = law
        .atoms()
        .into_iter()
        .filter(|a| a.1 > 0.0)
        .map(|(a, w)| (a, w.ln() - (y - a) * (y - a) * inv2s2))
        .collect();
    let continuous = law.continuous_mass() > 1e-300;

    let mut peak = atoms.iter().map(|a| a.1).fold(f64::NEG_INFINITY, f64::max);
    let mut window = None;
    if continuous {
        let scan = scan_points(law, sigma, y);
        let vals: Vec<f64> = scan.iter().map(|&x| g(x)).collect();
        let (imax, _) = vals
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_nan())
            .max_by(|a, b| a.1.total_cmp(b.1))
            .ok_or_else(|| Error::Degenerate("no finite likelihood on the scan".into()))?;
        let a = scan[imax.saturating_sub(1)];
        let b = scan[(imax + 1).min(scan.len() - 1)];
        let mode = golden_max(&g, a, b, scan[imax]);
        let gstar = g(mode).max(vals[imax]);
        if gstar.is_finite() {
            let keep: Vec<f64> = scan.iter().zip(&vals).filter(|(_, v)| **v >= gstar - DROP).map(|(x, _)| *x).collect();
            let l0 = keep.first().copied().unwrap_or(mode).min(mode);
            let r0 = keep.last().copied().unwrap_or(mode).max(mode);
            let step = sigma.min((r0 - l0).max(sigma * 1e-3));
            let left = walk(&g, l0, -step, lo, gstar - DROP);
            let right = walk(&g, r0, step, hi, gstar - DROP);
            let mut pts: Vec<f64> = scan.into_iter().filter(|&x| x > left && x < right).collect();
            pts.extend([left, right, mode]);
            pts.extend(law.breakpoints().into_iter().filter(|&x| x > left && x < right));
            window = Some((pts, gstar));
            peak = peak.max(gstar);
        }
    }
    if !peak.is_finite() {
        return Err(Error::Degenerate(format!("likelihood underflows everywhere for y={y}, sigma={sigma}")));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for &(a, lw) in &atoms {
        let w = (lw - peak).exp();
        num += a * w;
        den += w;
    }
    if let Some((pts, gstar)) = window {
        if gstar >= peak - 2.0 * DROP {
            let qt = Tolerance { abs: 1e-300, rel: (tol * 1e-2).max(1e-13), max_intervals: 4000 };
            let est = integrate_vec::<2, _>(
                |x| {
                    let w = (g(x) - peak).exp();
                    if w.is_finite() {
                        [x * w, w]
                    } else {
                        [0.0, 0.0]
                    }
                },
                &pts,
                qt,
            )?;
            num += est.value[0];
            den += est.value[1];
        }
    }
    if !(den > 0.0) || !num.is_finite() {
        return Err(Error::Degenerate(format!("posterior normaliser vanished for y={y}, sigma={sigma}")));
    }
    Ok((num / den).clamp(lo, hi))
}

/// Same as [`posterior_mean_law`] but total: degenerate queries return the
/// nearest support point, flagged by the boolean.
pub fn posterior_mean_or_nearest(law: &dyn RewardLaw, sigma: f64, y: f64, tol: f64) -> Result<(f64, bool)> {
    match posterior_mean_law(law, sigma, y, tol) {
        Ok(v) => Ok((v, false)),
        Err(Error::Degenerate(_)) => Ok((nearest_support_point(law, y), true)),
        Err(e) => Err(e),
    }
}

fn scan_points(law: &dyn RewardLaw, sigma: f64, y: f64) -> Vec<f64> {
    let (lo, hi) = law.support();
    let mut pts = Vec::with_capacity(96);
    for k in -24..=24 {
        pts.push(y + 0.5 * k as f64 * sigma);
    }
    for p in [1e-12, 1e-9, 1e-6, 1e-4, 1e-3, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5] {
        pts.push(law.quantile(p));
        pts.push(law.upper_quantile(p));
    }
    pts.extend(law.breakpoints());
    pts.push(lo);
    if hi.is_finite() {
        pts.push(hi);
    }
    let mut pts: Vec<f64> = pts.into_iter().filter(|x| x.is_finite()).map(|x| x.clamp(lo, hi)).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn golden_max(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, best: f64) -> f64 {
    const R: f64 = 0.618_033_988_749_894_9;
    if !(b > a) {
        return best;
    }
    let mut c = b - R * (b - a);
    let mut d = a + R * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..100 {
        if (b - a) <= 1e-12 * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - R * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + R * (b - a);
            gd = g(d);
        }
    }
    let m = 0.5 * (a + b);
    if g(m) >= g(best) {
        m
    } else {
        best
    }
}

/// Steps from `x` by geometrically growing `step` until g drops below
/// `floor` or the support edge `edge` is reached.
fn walk(g: &impl Fn(f64) -> f64, mut x: f64, mut step: f64, edge: f64, floor: f64) -> f64 {
    for _ in 0..200 {
        if (step < 0.0 && x <= edge) || (step > 0.0 && x >= edge) {
            return edge;
        }
        let next = if step < 0.0 { (x + step).max(edge) } else { (x + step).min(edge) };
        x = next;
        if g(x) < floor {
            return x;
        }
        step *= 2.0;
    }
    x
}

/// Closed form for the unit half-normal prior:
/// μ + s·φ(z)/Φ(z) with μ = y/(σ²+1), s = σ/√(σ²+1), z = μ/s.
pub fn posterior_mean_halfnormal(sigma: f64, y: f64) -> f64 {
    let v = sigma * sigma + 1.0;
    let mu = y / v;
    let s = sigma / v.sqrt();
    let z = mu / s;
    if z >= 0.0 {
        mu + s * normal::pdf(z) / normal::cdf(z)
    } else {
        // μ + s·(t + excess) = s·excess because μ = −s·t
        s * normal::inverse_mills_excess(-z)
    }
}

/// Half-normal prior with scale `scale`, by rescaling the unit case.
pub fn posterior_mean_halfnormal_scaled(scale: f64, sigma: f64, y: f64) -> f64 {
    scale * posterior_mean_halfnormal(sigma / scale, y / scale)
}

/// Exponential(rate) prior: the posterior is N(y − λσ², σ²) truncated to
/// [0, ∞).
pub fn posterior_mean_exponential(rate: f64, sigma: f64, y: f64) -> f64 {
    let m = y - rate * sigma * sigma;
    let z = m / sigma;
    if z >= 0.0 {
        m + sigma * normal::pdf(z) / normal::cdf(z)
    } else {
        sigma * normal::inverse_mills_excess(-z)
    }
}

/// U_σ(y) = √(2/π) + max(0, y/(σ² + 1)).
pub fn posterior_upper_bound_halfnormal(sigma: f64, y: f64) -> f64 {
    (2.0 / std::f64::consts::PI).sqrt() + (y / (sigma * sigma + 1.0)).max(0.0)
}

/// E[Z | Z + N(0, σ²) = y] for Z = D conditioned on D ≤ V.
pub fn truncated_posterior_mean(law: &dyn RewardLaw, cap: f64, sigma: f64, y: f64) -> Result<f64> {
    if !(cap > 0.0) {
        return invalid(format!("truncation point must be > 0, got {cap}"));
    }
    let t = Truncated::new(law, cap)?;
    posterior_mean_law(&t, sigma, y, 1e-10)
}

/// Fastest exact evaluation available: closed forms for the exponential and
/// half-normal priors, quadrature otherwise. The flag marks a fallback to
/// the nearest support point.
pub fn posterior_mean_fast(d: &RewardDistribution, sigma: f64, y: f64) -> Result<(f64, bool)> {
    if sigma == 0.0 {
        return Ok((y, false));
    }
    match *d {
        RewardDistribution::HalfNormal { scale } => Ok((posterior_mean_halfnormal_scaled(scale, sigma, y), false)),
        RewardDistribution::Exponential { rate } => Ok((posterior_mean_exponential(rate, sigma, y), false)),
        RewardDistribution::PointMass { value } => Ok((value, false)),
        _ => posterior_mean_or_nearest(d, sigma, y, 1e-10),
    }
}
