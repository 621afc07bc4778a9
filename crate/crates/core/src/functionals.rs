//! Order-statistic means, α/β thresholds, and the hazard-rate check.

use crate::dist::{MaxLaw, RewardLaw};
use crate::error::{invalid, Error, Result};
use crate::quad::{integrate, Tolerance};
use serde::Serialize;

const QUAD: Tolerance = Tolerance { abs: 1e-15, rel: 1e-11, max_intervals: 4000 };

fn knots(law: &dyn RewardLaw, a: f64, b: f64) -> Vec<f64> {
    let mut pts = vec![a, b];
    pts.extend(law.breakpoints().into_iter().filter(|&x| x > a && x < b));
    pts.extend(law.atoms().into_iter().map(|t| t.0).filter(|&x| x > a && x < b));
    pts
}

/// ∫_a^b (1 − F(t)) dt by quadrature, split at the law's kinks and atoms.
pub fn sf_integral(law: &dyn RewardLaw, a: f64, b: f64) -> Result<f64> {
    if !(b > a) {
        return Ok(0.0);
    }
    if !b.is_finite() {
        return Err(Error::Quadrature("infinite upper limit".into()));
    }
    let mut pts = knots(law, a, b);
    // a few interior quantiles so a sharp transition is bracketed
    for p in [0.05, 0.5, 0.95] {
        let x = law.quantile(p);
        if x > a && x < b {
            pts.push(x);
        }
    }
    integrate(|t| law.sf(t), &pts, QUAD).map(|r| r.0)
}

/// E[max of m i.i.d. draws] for real m ≥ 1.
pub fn max_mean_real(law: &dyn RewardLaw, m: f64) -> Result<f64> {
    if !(m >= 1.0) {
        return invalid(format!("order statistic count must be ≥ 1, got {m}"));
    }
    if let Some(v) = law.max_mean_closed_form(m) {
        return Ok(v);
    }
    if m == 1.0 {
        return Ok(law.mean());
    }
    let (lo, hi) = law.support();
    let q = if hi.is_finite() { hi } else { law.upper_quantile(1e-12 / m) };
    if !q.is_finite() {
        return Err(Error::Quadrature(format!("truncation point for m={m} is not finite (heavy tail?)")));
    }
    let sf_max = |t: f64| {
        let s = law.sf(t);
        let lnf = if s < 0.5 { (-s).ln_1p() } else { law.cdf(t).ln() };
        -(m * lnf).exp_m1()
    };
    let mut pts = knots(law, lo, q);
    for p in [1e-16, 1e-8, 1e-4, 1e-2, 0.1, 0.5, 0.9, 0.99, 0.999] {
        // quantiles of the max law
        let x = law.upper_quantile(-(f64::ln(p) / m).exp_m1());
        if x > lo && x < q {
            pts.push(x);
        }
    }
    let (body, _) = integrate(sf_max, &pts, QUAD)?;
    // 1 − F^m ≤ m(1 − F) beyond q
    let tail = if hi.is_finite() { 0.0 } else { m * law.tail_integral(q) };
    if !tail.is_finite() {
        return Err(Error::Quadrature(format!("tail beyond {q} does not converge")));
    }
    Ok(lo + body + tail)
}

/// E[D_{m:m}] = ∫₀^∞ (1 − F(x)^m) dx.
pub fn order_stat_max_mean(law: &dyn RewardLaw, m: u64) -> Result<f64> {
    if m == 0 {
        return invalid("order statistic count must be ≥ 1");
    }
    max_mean_real(law, m as f64)
}

/// α_m: the (1 − 1/m)-quantile.
pub fn alpha_quantile(law: &dyn RewardLaw, m: f64) -> Result<f64> {
    if !(m > 1.0) {
        return invalid(format!("alpha_m needs m > 1, got {m}"));
    }
    Ok(law.upper_quantile(1.0 / m))
}

/// T(x) = E[D·1{D > x}] = x(1 − F(x)) + ∫ₓ^∞ (1 − F).
pub fn tail_contribution(law: &dyn RewardLaw, x: f64) -> f64 {
    x * law.sf(x) + law.tail_integral(x)
}

/// β_m = inf{x : T(x) ≤ E[D]/m}, by bisection (T is non-increasing).
pub fn beta_threshold(law: &dyn RewardLaw, m: f64) -> Result<f64> {
    if !(m >= 1.0) {
        return invalid(format!("beta_m needs m ≥ 1, got {m}"));
    }
    let mean = law.mean();
    if !(mean.is_finite() && mean > 0.0) {
        return invalid("beta_m needs a finite positive mean");
    }
    if m == 1.0 {
        return Ok(0.0);
    }
    let target = mean / m;
    let mut hi = law.upper_quantile(1e-9);
    let (_, smax) = law.support();
    if !(hi > 0.0) {
        hi = smax.min(mean);
    }
    let mut doublings = 0;
    loop {
        let t = tail_contribution(law, hi);
        if !t.is_finite() {
            return Err(Error::Quadrature(format!("tail contribution at {hi} not finite")));
        }
        if t <= target {
            break;
        }
        if hi >= smax {
            return Err(Error::Quadrature("tail contribution never drops below E/m".into()));
        }
        hi = (2.0 * hi).min(smax);
        doublings += 1;
        if doublings > 200 {
            return Err(Error::Quadrature("could not bracket beta_m".into()));
        }
    }
    let mut lo = 0.0;
    let tol = 1e-12 * mean.max(hi);
    for _ in 0..300 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if tail_contribution(law, mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Clone, Debug, Serialize)]
pub struct HazardProfile {
    /// (grid point, h(x)) for every accepted point
    pub points: Vec<(f64, f64)>,
    /// grid points where the hazard is undefined, with the reason
    pub rejected: Vec<(f64, String)>,
    pub mhr: bool,
}

/// h(x) = f(x)/(1 − F(x)) on `grid`, and whether it is non-decreasing.
pub fn hazard_profile(law: &dyn RewardLaw, grid: &[f64]) -> Result<HazardProfile> {
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return invalid("hazard grid must be sorted");
    }
    let mut points = Vec::with_capacity(grid.len());
    let mut rejected = Vec::new();
    for &x in grid {
        let s = law.sf(x);
        if s <= 0.0 {
            rejected.push((x, format!("F({x}) = 1: hazard undefined")));
            continue;
        }
        let h = if s < 1e-250 { (law.ln_pdf(x) - s.ln()).exp() } else { law.pdf(x) / s };
        if !h.is_finite() {
            rejected.push((x, format!("hazard not finite at {x}")));
            continue;
        }
        points.push((x, h));
    }
    let mhr = points.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-9 * w[0].1.abs().max(1.0));
    Ok(HazardProfile { points, rejected, mhr })
}

/// Heuristic MHR check on 512 points between the 1e−4 and 1 − 1e−4
/// quantiles. Atoms other than a single point mass are never MHR.
pub fn mhr_verdict(law: &dyn RewardLaw) -> bool {
    let atoms = law.atoms();
    if !atoms.is_empty() {
        return atoms.len() == 1 && (atoms[0].1 - 1.0).abs() < 1e-15;
    }
    let a = law.quantile(1e-4);
    let b = law.upper_quantile(1e-4);
    let grid: Vec<f64> = (0..512).map(|i| a + (b - a) * i as f64 / 511.0).collect();
    hazard_profile(law, &grid).map(|h| h.mhr).unwrap_or(false)
}

/// α of the max law D_{m:m}, i.e. the (1 − 1/k)-quantile of F^m.
pub fn max_law_alpha(law: &dyn RewardLaw, m: f64, k: f64) -> Result<f64> {
    alpha_quantile(&MaxLaw::new(law, m)?, k)
}

/// β of the max law D_{m:m}.
pub fn max_law_beta(law: &dyn RewardLaw, m: f64, k: f64) -> Result<f64> {
    beta_threshold(&MaxLaw::new(law, m)?, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::RewardDistribution as D;

    #[test]
    fn exponential_closed_form() {
        let d = D::exponential(1.0).unwrap();
        let h4 = 1.0 + 0.5 + 1.0 / 3.0 + 0.25;
        assert!((order_stat_max_mean(&d, 4).unwrap() - h4).abs() < 1e-14);
        assert!((order_stat_max_mean(&d, 1).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_point_closed_form() {
        let d = D::two_point(10.0, 0.1).unwrap();
        let v = order_stat_max_mean(&d, 10).unwrap();
        assert!((v - 6.513_215_599).abs() < 1e-9);
    }

    #[test]
    fn quadrature_agrees_with_closed_forms() {
        // route exponential through the generic integral by wrapping it
        struct Plain(D);
        impl RewardLaw for Plain {
            fn cdf(&self, x: f64) -> f64 { self.0.cdf(x) }
            fn sf(&self, x: f64) -> f64 { self.0.sf(x) }
            fn pdf(&self, x: f64) -> f64 { self.0.pdf(x) }
            fn quantile(&self, p: f64) -> f64 { self.0.quantile(p) }
            fn upper_quantile(&self, q: f64) -> f64 { self.0.upper_quantile(q) }
            fn support(&self) -> (f64, f64) { self.0.support() }
            fn mean(&self) -> f64 { self.0.mean() }
            fn tail_integral(&self, x: f64) -> f64 { self.0.tail_integral(x) }
            fn breakpoints(&self) -> Vec<f64> { self.0.breakpoints() }
            fn atoms(&self) -> Vec<(f64, f64)> { self.0.atoms() }
        }
        for d in [D::exponential(1.0).unwrap(), D::uniform(0.5, 2.0).unwrap(), D::two_point(4.0, 0.3).unwrap()] {
            for m in [1u64, 2, 7, 100, 10_000] {
                let exact = d.max_mean_closed_form(m as f64).unwrap();
                let q = order_stat_max_mean(&Plain(d.clone()), m).unwrap();
                assert!((q - exact).abs() <= 1e-8 * exact, "{d:?} m={m}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn alpha_examples() {
        let e = D::exponential(1.0).unwrap();
        assert!((alpha_quantile(&e, std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(alpha_quantile(&D::point_mass(3.0).unwrap(), 100.0).unwrap(), 3.0);
        assert!((alpha_quantile(&D::uniform(0.0, 1.0).unwrap(), 4.0).unwrap() - 0.75).abs() < 1e-15);
        assert!(alpha_quantile(&e, 1.0).is_err());
    }

    #[test]
    fn beta_examples() {
        let e = D::exponential(1.0).unwrap();
        assert_eq!(beta_threshold(&e, 1.0).unwrap(), 0.0);
        let pm = D::point_mass(5.0).unwrap();
        assert!((beta_threshold(&pm, 2.0).unwrap() - 5.0).abs() < 1e-8);
        // root of (x + 1)e^{−x} = 1/10, by Newton in the oracle below
        let mut x: f64 = 3.0;
        for _ in 0..50 {
            let g = (x + 1.0) * (-x).exp() - 0.1;
            let dg = -x * (-x).exp();
            x -= g / dg;
        }
        assert!((beta_threshold(&e, 10.0).unwrap() - x).abs() < 1e-8);
    }

    #[test]
    fn hazard_examples() {
        let e = D::exponential(2.0).unwrap();
        let grid: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
        let h = hazard_profile(&e, &grid).unwrap();
        assert!(h.mhr);
        assert!(h.points.iter().all(|p| (p.1 - 2.0).abs() < 1e-12));
        let hn = D::half_normal(1.0).unwrap();
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
        assert!(hazard_profile(&hn, &grid).unwrap().mhr);
        let u = D::uniform(0.0, 1.0).unwrap();
        let h = hazard_profile(&u, &[0.5, 1.0]).unwrap();
        assert_eq!(h.rejected.len(), 1);
    }

    #[test]
    fn mhr_verdicts() {
        assert!(mhr_verdict(&D::exponential(1.0).unwrap()));
        assert!(mhr_verdict(&D::half_normal(3.0).unwrap()));
        assert!(mhr_verdict(&D::uniform(0.0, 2.0).unwrap()));
        assert!(mhr_verdict(&D::point_mass(1.0).unwrap()));
        assert!(!mhr_verdict(&D::two_point(5.0, 0.2).unwrap()));
        // Pareto(x_m = 1, a = 2) shifted to start at 0, tabulated
        let xs: Vec<f64> = (0..200).map(|i| i as f64 * 0.25).collect();
        let cdf: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| if i == xs.len() - 1 { 1.0 } else { 1.0 - (1.0 + x).powi(-2) })
            .collect();
        assert!(!mhr_verdict(&D::tabulated(xs, cdf).unwrap()));
    }
}
