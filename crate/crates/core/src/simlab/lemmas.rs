//! Numerical checks of the technical lemmas. Every check is phrased as
//! `lhs ≤ rhs`; `margin = rhs − lhs` and a check passes when
//! `margin ≥ −slack` (3 standard errors for sampled checks, a stated
//! tolerance otherwise).

use super::substream;
use crate::dist::{MaxLaw, RewardDistribution, RewardLaw, Truncated};
use crate::error::Result;
use crate::functionals::{alpha_quantile, max_law_alpha, max_law_beta, mhr_verdict, order_stat_max_mean};
use crate::normal;
use crate::posterior::{posterior_mean_halfnormal, posterior_mean_law, posterior_mean_or_nearest, posterior_upper_bound_halfnormal, truncated_posterior_mean};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaId {
    Gordon,
    CompareOrderStats,
    MhrMaxConcentration,
    OrderStatVsQuantile,
    CaiDaskalakisAlpha,
    OrderStatOrderStat,
    OrderStatMean,
    HalfNormOrderStats,
    PosteriorMonotonicity,
    PosteriorClosedForm,
    #[serde(rename = "posterior-U-bound")]
    PosteriorUBound,
    BoundedPosterior,
    TailProduct,
    BarlowQuantile,
    EventProbabilities,
}

impl LemmaId {
    pub const ALL: [LemmaId; 15] = [
        Self::Gordon,
        Self::CompareOrderStats,
        Self::MhrMaxConcentration,
        Self::OrderStatVsQuantile,
        Self::CaiDaskalakisAlpha,
        Self::OrderStatOrderStat,
        Self::OrderStatMean,
        Self::HalfNormOrderStats,
        Self::PosteriorMonotonicity,
        Self::PosteriorClosedForm,
        Self::PosteriorUBound,
        Self::BoundedPosterior,
        Self::TailProduct,
        Self::BarlowQuantile,
        Self::EventProbabilities,
    ];

    /// Checks that only apply to MHR distributions.
    pub fn needs_mhr(self) -> bool {
        matches!(
            self,
            Self::MhrMaxConcentration
                | Self::OrderStatVsQuantile
                | Self::CaiDaskalakisAlpha
                | Self::OrderStatOrderStat
                | Self::OrderStatMean
                | Self::TailProduct
                | Self::BarlowQuantile
        )
    }

    /// Checks tied to the unit half-normal or the normal law rather than the
    /// suite's distributions; they run once.
    pub fn distribution_free(self) -> bool {
        matches!(self, Self::Gordon | Self::HalfNormOrderStats | Self::PosteriorClosedForm | Self::PosteriorUBound)
    }

    fn lane(self) -> u64 {
        100 + Self::ALL.iter().position(|&l| l == self).expect("listed") as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Method {
    Exact,
    Quadrature,
    MonteCarlo { trials: u64, stderr: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaCheckResult {
    pub lemma: LemmaId,
    pub distribution: String,
    pub point: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub slack: f64,
    pub pass: bool,
    pub method: Method,
}

fn check(lemma: LemmaId, dist: &str, point: String, lhs: f64, rhs: f64, slack: f64, method: Method) -> LemmaCheckResult {
    let margin = rhs - lhs;
    LemmaCheckResult { lemma, distribution: dist.into(), point, lhs, rhs, margin, slack, pass: margin >= -slack, method }
}

fn mc(lemma: LemmaId, dist: &str, point: String, lhs: f64, rhs: f64, stderr: f64, trials: u64) -> LemmaCheckResult {
    check(lemma, dist, point, lhs, rhs, 3.0 * stderr, Method::MonteCarlo { trials, stderr })
}

fn default_distributions() -> Vec<RewardDistribution> {
    vec![RewardDistribution::Exponential { rate: 1.0 }, RewardDistribution::HalfNormal { scale: 1.0 }]
}
fn default_n_grid() -> Vec<u64> {
    vec![4, 8, 16, 32, 64, 128, 256]
}
fn default_mc() -> u64 {
    100_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyParams {
    #[serde(default = "all_lemmas")]
    pub suite: Vec<LemmaId>,
    #[serde(default = "default_distributions")]
    pub distributions: Vec<RewardDistribution>,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<u64>,
    #[serde(default = "default_mc")]
    pub mc_samples: u64,
    #[serde(default)]
    pub seed: u64,
}

fn all_lemmas() -> Vec<LemmaId> {
    LemmaId::ALL.to_vec()
}

impl Default for VerifyParams {
    fn default() -> Self {
        Self { suite: all_lemmas(), distributions: default_distributions(), n_grid: default_n_grid(), mc_samples: default_mc(), seed: 0 }
    }
}

fn label(d: &RewardDistribution) -> String {
    serde_json::to_string(d).unwrap_or_else(|_| d.label().into())
}

/// Draw of D_{n:n} by inversion: the max exceeds x with probability
/// 1 − F(x)^n, so its upper-tail level is −expm1(ln U / n).
fn sample_max(law: &dyn RewardLaw, n: u64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random();
    law.upper_quantile(-(u.ln() / n as f64).exp_m1())
}

fn mean_se(sum: f64, sum2: f64, k: u64) -> (f64, f64) {
    let m = sum / k as f64;
    let var = ((sum2 - k as f64 * m * m) / (k as f64 - 1.0)).max(0.0);
    (m, (var / k as f64).sqrt())
}

pub fn verify_lemmas(params: &VerifyParams) -> Result<Vec<LemmaCheckResult>> {
    let mut out = Vec::new();
    let hn = RewardDistribution::HalfNormal { scale: 1.0 };
    for &lemma in &params.suite {
        if lemma.distribution_free() {
            run_free(lemma, &hn, params, &mut out)?;
            continue;
        }
        for d in &params.distributions {
            if lemma.needs_mhr() && !mhr_verdict(d) {
                continue;
            }
            run_for(lemma, d, params, &mut out)?;
        }
        if lemma == LemmaId::EventProbabilities {
            linear_events(&mut out);
        }
    }
    Ok(out)
}

fn run_free(lemma: LemmaId, hn: &RewardDistribution, p: &VerifyParams, out: &mut Vec<LemmaCheckResult>) -> Result<()> {
    let hl = label(hn);
    match lemma {
        LemmaId::Gordon => {
            // compared in tail form so the margins stay resolvable for large t
            let ts: Vec<f64> = (1..=10_000).map(|j| j as f64 * 1e-3).collect();
            let worst = |f: &dyn Fn(f64) -> (f64, f64)| {
                ts.iter().map(|&t| (t, f(t))).min_by(|a, b| ((a.1 .1 - a.1 .0) / a.1 .1).total_cmp(&((b.1 .1 - b.1 .0) / b.1 .1))).expect("grid")
            };
            let (t, (l, r)) = worst(&|t| (normal::sf(t), normal::pdf(t) / t));
            out.push(check(lemma, "standard normal", format!("lower side, worst t = {t} on (0, 10]"), l, r, 1e-15 * r, Method::Exact));
            let (t, (l, r)) = worst(&|t| (t * normal::pdf(t) / (t * t + 1.0), normal::sf(t)));
            out.push(check(lemma, "standard normal", format!("upper side, worst t = {t} on (0, 10]"), l, r, 1e-15 * r, Method::Exact));
        }
        LemmaId::HalfNormOrderStats => {
            let mean = crate::functionals::sf_integral(hn, 0.0, 40.0)?;
            let exact = (2.0 / std::f64::consts::PI).sqrt();
            out.push(check(lemma, &hl, "|∫ sf − √(2/π)|".into(), (mean - exact).abs(), 0.0, 1e-10, Method::Quadrature));
            out.push(check(lemma, &hl, "MHR verdict (1 = MHR)".into(), 0.0, if mhr_verdict(hn) { 0.0 } else { -1.0 }, 0.0, Method::Exact));
            for &n in p.n_grid.iter().filter(|&&n| n >= 8) {
                let e = order_stat_max_mean(hn, n)?;
                let s = (n as f64).ln().sqrt();
                out.push(check(lemma, &hl, format!("n = {n}, lower"), 0.8 * s, e, 1e-9 * e, Method::Quadrature));
                out.push(check(lemma, &hl, format!("n = {n}, upper"), e, 3.0 * 2f64.sqrt() * s, 1e-9 * e, Method::Quadrature));
            }
        }
        LemmaId::PosteriorClosedForm | LemmaId::PosteriorUBound => {
            for sigma in [0.1, 0.5, 1.0, 2.0, 10.0] {
                let mut worst = (f64::NEG_INFINITY, 0.0, 0.0, 0.0);
                for j in 0..=200 {
                    let y = -10.0 + 0.1 * j as f64;
                    let cf = posterior_mean_halfnormal(sigma, y);
                    let (l, r) = if lemma == LemmaId::PosteriorClosedForm {
                        ((cf - posterior_mean_law(hn, sigma, y, 1e-10)?).abs(), 1e-6)
                    } else {
                        (cf, posterior_upper_bound_halfnormal(sigma, y))
                    };
                    if l - r > worst.0 {
                        worst = (l - r, y, l, r);
                    }
                }
                let (method, slack) = if lemma == LemmaId::PosteriorClosedForm { (Method::Quadrature, 0.0) } else { (Method::Exact, 1e-12) };
                out.push(check(lemma, &hl, format!("σ = {sigma}, worst y = {:.1} on [−10, 10]", worst.1), worst.2, worst.3, slack, method));
            }
        }
        _ => unreachable!("not distribution-free"),
    }
    Ok(())
}

fn run_for(lemma: LemmaId, d: &RewardDistribution, p: &VerifyParams, out: &mut Vec<LemmaCheckResult>) -> Result<()> {
    let dl = label(d);
    let mu = d.mean();
    let grid4 = || p.n_grid.iter().copied().filter(|&n| n >= 4);
    let k = p.mc_samples.max(2);
    match lemma {
        LemmaId::CompareOrderStats => {
            let top = p.n_grid.iter().copied().max().unwrap_or(256) * 4;
            // a ↦ E[D_{a:a}]/a non-increasing on consecutive a implies every pair
            let mut prev = order_stat_max_mean(d, 1)?;
            let mut worst = (f64::INFINITY, 0, 0.0, 0.0);
            for a in 2..=top {
                let cur = order_stat_max_mean(d, a)? / a as f64;
                let m = (prev - cur) / prev;
                if m < worst.0 {
                    worst = (m, a, cur, prev);
                }
                prev = cur;
            }
            out.push(check(lemma, &dl, format!("consecutive a ≤ {top}, worst at b = {}", worst.1), worst.2, worst.3, 1e-9 * worst.3, Method::Quadrature));
        }
        LemmaId::MhrMaxConcentration => {
            for n in grid4() {
                let e = order_stat_max_mean(d, n)?;
                let mut rng = substream(p.seed, lemma.lane(), n);
                let hits = (0..k).filter(|_| sample_max(d, n, &mut rng) < 2.0 * e).count() as u64;
                let ph = hits as f64 / k as f64;
                let se = (ph * (1.0 - ph) / k as f64).sqrt();
                out.push(mc(lemma, &dl, format!("n = {n}"), 1.0 - (n as f64).powf(-0.6), ph, se, k));
            }
        }
        LemmaId::OrderStatVsQuantile => {
            for n in grid4() {
                let e = order_stat_max_mean(d, n)?;
                let a = alpha_quantile(d, n as f64)?;
                out.push(check(lemma, &dl, format!("n = {n}, lower"), e / 3.0, a, 1e-9 * a, Method::Quadrature));
                out.push(check(lemma, &dl, format!("n = {n}, upper"), a, 1.25 * e, 1e-9 * e, Method::Quadrature));
            }
        }
        LemmaId::CaiDaskalakisAlpha => {
            for m in [2.0f64, 4.0, 16.0, 64.0, 256.0] {
                for dd in [1.5f64, 2.0, 3.0, 4.0] {
                    let lhs = alpha_quantile(d, m.powf(dd))?;
                    let rhs = dd * alpha_quantile(d, m)?;
                    out.push(check(lemma, &dl, format!("m = {m}, d = {dd}"), lhs, rhs, 1e-12 * rhs, Method::Exact));
                }
            }
        }
        LemmaId::OrderStatOrderStat => {
            for n in grid4() {
                let e = order_stat_max_mean(d, n)?;
                for a in [1.5f64, 2.0, 3.0] {
                    let m = (n as f64).powf(a).round() as u64;
                    let lhs = order_stat_max_mean(d, m)?;
                    out.push(check(lemma, &dl, format!("n = {n}, a = {a} (n^a → {m})"), lhs, 4.0 * a * e, 1e-9 * lhs, Method::Quadrature));
                }
            }
        }
        LemmaId::OrderStatMean => {
            let mut ns = vec![1u64, 2, 100];
            ns.extend(p.n_grid.iter().copied());
            ns.sort_unstable();
            ns.dedup();
            for n in ns {
                let e = order_stat_max_mean(d, n)?;
                out.push(check(lemma, &dl, format!("n = {n}"), e, ((n as f64).ln() + 1.0) * mu, 1e-12 * e, Method::Quadrature));
            }
        }
        LemmaId::PosteriorMonotonicity => {
            let (lo, hi) = (d.quantile(1e-3), d.upper_quantile(1e-3));
            for sigma in [0.1, 1.0, 10.0] {
                let (a, b) = (lo - 5.0 * sigma, hi + 5.0 * sigma);
                let mut prev: Option<(f64, f64)> = None;
                let mut worst = (f64::NEG_INFINITY, 0.0);
                for j in 0..=200 {
                    let y = a + (b - a) * j as f64 / 200.0;
                    let (v, _) = posterior_mean_or_nearest(d, sigma, y, 1e-10)?;
                    if let Some((_, pv)) = prev {
                        if pv - v > worst.0 {
                            worst = (pv - v, y);
                        }
                    }
                    prev = Some((y, v));
                }
                out.push(check(
                    lemma,
                    &dl,
                    format!("σ = {sigma}, 201 y on [{a:.3}, {b:.3}], largest drop at y = {:.3}", worst.1),
                    worst.0,
                    0.0,
                    1e-7 * mu.max(1.0),
                    Method::Quadrature,
                ));
            }
        }
        LemmaId::BoundedPosterior => {
            for q in [0.5, 0.9, 0.99] {
                let v = d.quantile(q);
                if !(v > 0.0) {
                    continue;
                }
                let ez = Truncated::new(d, v)?.mean();
                for mult in [2.5, 4.0, 10.0] {
                    let sigma = mult * v;
                    let (a, b) = (-3.0 * sigma, sigma * sigma / (2.0 * v));
                    let mut worst = (f64::NEG_INFINITY, 0.0);
                    for j in 0..=24 {
                        let y = a + (b - a) * j as f64 / 24.0;
                        let pm = truncated_posterior_mean(d, v, sigma, y)?;
                        if pm > worst.0 {
                            worst = (pm, y);
                        }
                    }
                    out.push(check(
                        lemma,
                        &dl,
                        format!("V = q({q}) = {v:.4}, σ = {mult}V, worst y = {:.3}", worst.1),
                        worst.0,
                        2.0 * ez,
                        1e-8 * ez,
                        Method::Quadrature,
                    ));
                }
            }
        }
        LemmaId::TailProduct => {
            let mut ns = vec![1u64];
            ns.extend(p.n_grid.iter().copied());
            ns.dedup();
            for n in ns {
                for m in [2.0f64, 10.0, 100.0] {
                    let a = max_law_alpha(d, n as f64, m)?;
                    let mut rng = substream(p.seed, lemma.lane(), n * 1000 + m as u64);
                    let (mut s, mut s2) = (0.0, 0.0);
                    for _ in 0..k {
                        let x = sample_max(d, n, &mut rng);
                        let v = if x > a { x } else { 0.0 };
                        s += v;
                        s2 += v * v;
                    }
                    let (est, se) = mean_se(s, s2, k);
                    let rhs = 15.0 * (m.ln() + (n as f64).ln() + 1.0) / (2.0 * m) * mu;
                    out.push(mc(lemma, &dl, format!("n = {n}, m = {m}"), est, rhs, se, k));
                }
            }
        }
        LemmaId::BarlowQuantile => {
            let ps = [0.01, 0.1, 81.0 / 256.0, (-1f64).exp(), 0.5, 1.0 - (-1f64).exp()];
            let m16 = MaxLaw::new(d, 16.0)?;
            let laws: [(&dyn RewardLaw, &str, Method); 2] = [(d, "D", Method::Exact), (&m16, "D_{16:16}", Method::Quadrature)];
            for (law, name, method) in laws {
                let mean = law.mean();
                for p_ in ps {
                    let z = law.quantile(p_);
                    let l = -(-p_).ln_1p();
                    out.push(check(lemma, &dl, format!("{name}, p = {p_:.6}, lower"), l * mean, z, 1e-12 * z.max(mean), method));
                    out.push(check(lemma, &dl, format!("{name}, p = {p_:.6}, upper"), z, l / p_ * mean, 1e-12 * z.max(mean), method));
                }
            }
        }
        LemmaId::EventProbabilities => {
            for n in [46u64, 100, 1000] {
                let nf = n as f64;
                let beta = max_law_beta(d, nf, nf * nf)?;
                let c_b = (6.0 * nf.ln()).round();
                let sigma_b = 6.0 * beta * nf.ln().sqrt();
                // some large box has ε > β with probability ≥ 1 − n⁻³
                let none = (c_b * normal::ln_cdf(beta / sigma_b)).exp();
                out.push(check(lemma, &dl, format!("large-noise-eps-bound-s, n = {n}"), none, nf.powi(-3), 0.0, Method::Exact));
                // a given large box has ε ≤ 12β ln n with probability ≥ 1 − n⁻²
                let miss = normal::sf(12.0 * beta * nf.ln() / sigma_b);
                out.push(check(lemma, &dl, format!("large-box-reward, n = {n}"), miss, nf.powi(-2), 0.0, Method::Exact));
            }
        }
        _ => unreachable!("distribution-free lemma"),
    }
    Ok(())
}

/// The events of the linear construction involve only Gaussian noise, so
/// they are evaluated once with the construction's own constants.
fn linear_events(out: &mut Vec<LemmaCheckResult>) {
    let lemma = LemmaId::EventProbabilities;
    for ln_n in [3e6f64, 5e6, 1e7] {
        let theta = (ln_n / 2.0).sqrt();
        let fail = normal::gaussian_max_exceed_ln_count(ln_n / 5626.0, 1.0, theta / 37.0);
        out.push(check(lemma, "any", format!("eps-small-bound, ln n = {ln_n:e}"), fail, 1.0 / ln_n, 0.0, Method::Exact));
    }
    for n in [1e3f64, 1e4, 1e6] {
        let theta = (n.ln() / 2.0).sqrt();
        let c_s = n.powf(1.0 / 5626.0).round();
        let fail = normal::gaussian_max_tail_ln_count((n - c_s - 1.0).ln(), 1.0, theta + 1.0);
        out.push(check(lemma, "any", format!("eps-large-bound, n = {n:e}"), fail, 1.0 / n.ln(), 0.0, Method::Exact));
    }
}
