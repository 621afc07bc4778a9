//! Selection rules over (σ, y), plus the per-realization benchmarks.
//!
//! Indices are 0-based internally (`select`); [`Policy::choose`] returns the
//! 1-based box number. Ties go to the lowest index everywhere.

use crate::dist::{NoiseProfile, RewardDistribution};
use crate::error::{invalid, Error, Result};
use crate::posterior::posterior_mean_fast;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicU64, Ordering};

/// One drawn world: hidden rewards, noise, and observations y = x + ε.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Realization {
    pub x: Vec<f64>,
    pub eps: Vec<f64>,
    pub y: Vec<f64>,
}

impl Realization {
    pub fn new(x: Vec<f64>, eps: Vec<f64>) -> Result<Self> {
        if x.len() != eps.len() {
            return invalid("x and eps must have equal length");
        }
        let y = x.iter().zip(&eps).map(|(a, b)| a + b).collect();
        Ok(Self { x, eps, y })
    }
}

/// What a policy sees: the profile, the observations, and for every run of
/// equal σ the lowest-index box with the largest y in that run.
pub struct Observation<'a> {
    pub profile: &'a NoiseProfile,
    pub y: &'a [f64],
    leaders: Vec<usize>,
}

impl<'a> Observation<'a> {
    pub fn new(profile: &'a NoiseProfile, y: &'a [f64]) -> Result<Self> {
        if y.len() != profile.n() {
            return invalid(format!("expected {} observations, got {}", profile.n(), y.len()));
        }
        let leaders = profile.groups().iter().map(|&(a, b)| a + argmax(&y[a..b])).collect();
        Ok(Self { profile, y, leaders })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn leaders(&self) -> &[usize] {
        &self.leaders
    }
}

/// Lowest index of the maximum; NaN never wins.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] || (v[best].is_nan() && !v[i].is_nan()) {
            best = i;
        }
    }
    best
}

pub trait Policy: Send + Sync {
    fn name(&self) -> String;
    /// 0-based choice.
    fn select(&self, obs: &Observation<'_>, rng: &mut dyn RngCore) -> Result<usize>;

    /// 1-based box number in [1, n].
    fn choose(&self, profile: &NoiseProfile, y: &[f64], rng: &mut dyn RngCore) -> Result<usize> {
        let obs = Observation::new(profile, y)?;
        self.select(&obs, rng).map(|i| i + 1)
    }

    /// Posterior evaluations that fell back to the nearest support point.
    fn fallbacks(&self) -> u64 {
        0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    MeanY,
    MaxY,
    MeanSigma,
    MaxSigma,
}

/// How γ(σ, y) is computed for a linear policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum GammaSpec {
    Constant { c: f64 },
    /// γ = (y_quantile-quantile of y) / (sigma_quantile-quantile of σ); a
    /// zero σ quantile falls back to the mean σ, and all-zero σ gives γ = 0.
    QuantileRatio { y_quantile: f64, sigma_quantile: f64 },
    /// Piecewise-linear in one summary statistic, constant beyond the knots.
    Tabulated { statistic: Statistic, knots: Vec<f64>, values: Vec<f64> },
}

/// Linear-interpolation sample quantile (the "type 7" rule).
fn sample_quantile(v: &[f64], p: f64) -> f64 {
    let mut s: Vec<f64> = v.to_vec();
    s.sort_by(f64::total_cmp);
    let h = (s.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

impl GammaSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Constant { c } if !c.is_finite() => invalid("gamma constant must be finite"),
            Self::QuantileRatio { y_quantile, sigma_quantile }
                if !(0.0..=1.0).contains(y_quantile) || !(0.0..=1.0).contains(sigma_quantile) =>
            {
                invalid("gamma quantile levels must lie in [0, 1]")
            }
            Self::Tabulated { knots, values, .. } => {
                if knots.is_empty() || knots.len() != values.len() {
                    return invalid("gamma table needs equal-length, non-empty knots/values");
                }
                if knots.windows(2).any(|w| w[1] <= w[0]) || knots.iter().chain(values).any(|v| !v.is_finite()) {
                    return invalid("gamma table knots must be finite and strictly increasing");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, sigma: &[f64], y: &[f64]) -> f64 {
        match self {
            Self::Constant { c } => *c,
            Self::QuantileRatio { y_quantile, sigma_quantile } => {
                let mean_s = sigma.iter().sum::<f64>() / sigma.len() as f64;
                if mean_s == 0.0 {
                    return 0.0;
                }
                let mut qs = sample_quantile(sigma, *sigma_quantile);
                if qs == 0.0 {
                    qs = mean_s;
                }
                sample_quantile(y, *y_quantile) / qs
            }
            Self::Tabulated { statistic, knots, values } => {
                let n = y.len() as f64;
                let s = match statistic {
                    Statistic::MeanY => y.iter().sum::<f64>() / n,
                    Statistic::MaxY => y.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    Statistic::MeanSigma => sigma.iter().sum::<f64>() / n,
                    Statistic::MaxSigma => sigma.iter().copied().fold(0.0, f64::max),
                };
                let k = knots.partition_point(|&t| t <= s);
                if k == 0 {
                    values[0]
                } else if k == knots.len() {
                    values[k - 1]
                } else {
                    let w = (s - knots[k - 1]) / (knots[k] - knots[k - 1]);
                    values[k - 1] + w * (values[k] - values[k - 1])
                }
            }
        }
    }
}

/// Serializable policy description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    // empty braces so unknown fields are rejected
    Naive {},
    LinearFixed {
        c: f64,
    },
    LinearGamma {
        gamma: GammaSpec,
    },
    /// `alpha` forces the otherwise uniform draw (test hook).
    IgnoreLarge {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
    IgnoreLargeExp {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
    Opt {},
    Random {},
    /// Naive over the first k boxes; the witness policy used as an Opt proxy.
    PrefixNaive {
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
}

impl PolicySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::LinearFixed { c } if !c.is_finite() => invalid("linear_fixed c must be finite"),
            Self::LinearGamma { gamma } => gamma.validate(),
            Self::IgnoreLarge { alpha: Some(a) } | Self::IgnoreLargeExp { alpha: Some(a) } if !(0.0..=1.0).contains(a) => {
                invalid(format!("forced alpha must lie in [0, 1], got {a}"))
            }
            Self::PrefixNaive { k: 0, .. } => invalid("prefix_naive needs k ≥ 1"),
            _ => Ok(()),
        }
    }

    pub fn build(&self, dist: &RewardDistribution) -> Result<Box<dyn Policy>> {
        self.validate()?;
        Ok(match self {
            Self::Naive {} => Box::new(Naive),
            Self::LinearFixed { c } => Box::new(LinearFixed { c: *c }),
            Self::LinearGamma { gamma } => Box::new(LinearGamma { gamma: gamma.clone() }),
            Self::IgnoreLarge { alpha } => Box::new(IgnoreLarge { alpha: *alpha, exponential: false }),
            Self::IgnoreLargeExp { alpha } => Box::new(IgnoreLarge { alpha: *alpha, exponential: true }),
            Self::Opt {} => Box::new(Opt::new(dist.clone())),
            Self::Random {} => Box::new(UniformRandom),
            Self::PrefixNaive { k, label } => Box::new(PrefixNaive { k: *k, label: label.clone() }),
        })
    }
}

pub struct Naive;

impl Policy for Naive {
    fn name(&self) -> String {
        "naive".into()
    }
    fn select(&self, obs: &Observation<'_>, _: &mut dyn RngCore) -> Result<usize> {
        Ok(argmax(obs.y))
    }
}

fn linear_argmax(sigma: &[f64], y: &[f64], c: f64) -> usize {
    let mut best = 0;
    let mut score = y[0] - c * sigma[0];
    for i in 1..y.len() {
        let s = y[i] - c * sigma[i];
        if s > score {
            best = i;
            score = s;
        }
    }
    best
}

pub struct LinearFixed {
    pub c: f64,
}

impl Policy for LinearFixed {
    fn name(&self) -> String {
        format!("linear_fixed(c={})", self.c)
    }
    fn select(&self, obs: &Observation<'_>, _: &mut dyn RngCore) -> Result<usize> {
        Ok(linear_argmax(obs.profile.sigma(), obs.y, self.c))
    }
}

pub struct LinearGamma {
    pub gamma: GammaSpec,
}

impl Policy for LinearGamma {
    fn name(&self) -> String {
        match &self.gamma {
            GammaSpec::Constant { c } => format!("linear_gamma(constant {c})"),
            GammaSpec::QuantileRatio { y_quantile, sigma_quantile } => {
                format!("linear_gamma(q{y_quantile}(y)/q{sigma_quantile}(sigma))")
            }
            GammaSpec::Tabulated { statistic, .. } => format!("linear_gamma(table over {statistic:?})"),
        }
    }
    fn select(&self, obs: &Observation<'_>, _: &mut dyn RngCore) -> Result<usize> {
        let g = self.gamma.evaluate(obs.profile.sigma(), obs.y);
        if !g.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma evaluated to {g}")));
        }
        Ok(linear_argmax(obs.profile.sigma(), obs.y, g))
    }
}

/// IgnoreLarge (prefix ⌊αn⌋) and IgnoreLargeExp (prefix ⌊n^α⌋), α ~ U[0, 1].
/// Only the order of σ matters, never its values.
pub struct IgnoreLarge {
    pub alpha: Option<f64>,
    pub exponential: bool,
}

impl IgnoreLarge {
    pub fn prefix(&self, n: usize, alpha: f64) -> usize {
        let k = if self.exponential {
            // guard against powf landing just under an exact integer
            ((n as f64).powf(alpha) * (1.0 + 1e-12)).floor()
        } else {
            (alpha * n as f64).floor()
        };
        (k as usize).clamp(1, n)
    }
}

impl Policy for IgnoreLarge {
    fn name(&self) -> String {
        let base = if self.exponential { "ignore_large_exp" } else { "ignore_large" };
        match self.alpha {
            Some(a) => format!("{base}(alpha={a})"),
            None => base.into(),
        }
    }
    fn select(&self, obs: &Observation<'_>, rng: &mut dyn RngCore) -> Result<usize> {
        let alpha = match self.alpha {
            Some(a) => a,
            None => rng.random::<f64>(),
        };
        let k = self.prefix(obs.n(), alpha);
        Ok(argmax(&obs.y[..k]))
    }
}

pub struct PrefixNaive {
    pub k: usize,
    pub label: Option<String>,
}

impl Policy for PrefixNaive {
    fn name(&self) -> String {
        self.label.clone().unwrap_or_else(|| format!("prefix_naive(k={})", self.k))
    }
    fn select(&self, obs: &Observation<'_>, _: &mut dyn RngCore) -> Result<usize> {
        Ok(argmax(&obs.y[..self.k.min(obs.n())]))
    }
}

pub struct UniformRandom;

impl Policy for UniformRandom {
    fn name(&self) -> String {
        "random".into()
    }
    fn select(&self, obs: &Observation<'_>, rng: &mut dyn RngCore) -> Result<usize> {
        Ok(rng.random_range(0..obs.n()))
    }
}

/// The clairvoyant rule: argmax of E[X_i | Y_i = y_i].
///
/// Within a run of equal σ the posterior mean is monotone in y, so only the
/// run leader needs a posterior evaluation.
pub struct Opt {
    dist: RewardDistribution,
    fallbacks: AtomicU64,
}

impl Opt {
    pub fn new(dist: RewardDistribution) -> Self {
        Self { dist, fallbacks: AtomicU64::new(0) }
    }
}

impl Policy for Opt {
    fn name(&self) -> String {
        "opt".into()
    }
    fn fallbacks(&self) -> u64 {
        self.fallbacks.load(Ordering::Relaxed)
    }
    fn select(&self, obs: &Observation<'_>, _: &mut dyn RngCore) -> Result<usize> {
        let sigma = obs.profile.sigma();
        let mut best = obs.leaders[0];
        let mut best_v = f64::NEG_INFINITY;
        for &i in &obs.leaders {
            let (v, fell_back) = posterior_mean_fast(&self.dist, sigma[i], obs.y[i])?;
            if fell_back {
                self.fallbacks.fetch_add(1, Ordering::Relaxed);
            }
            if v > best_v {
                best = i;
                best_v = v;
            }
        }
        Ok(best)
    }
}

/// (prophet reward max x, expected reward of a uniformly random box).
pub fn benchmark_rewards(r: &Realization) -> (f64, f64) {
    let max = r.x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = r.x.iter().sum::<f64>() / r.x.len() as f64;
    (max, mean)
}

/// Best realized reward over LinearFixed_c for c in the grid, and the
/// smallest c attaining it. Uses run leaders, so cost is O(n + runs·grid).
pub fn best_linear_hindsight_obs(obs: &Observation<'_>, x: &[f64], c_grid: &[f64]) -> Result<(f64, f64)> {
    if c_grid.is_empty() {
        return invalid("c grid must be non-empty");
    }
    let sigma = obs.profile.sigma();
    let mut best = (f64::NEG_INFINITY, c_grid[0]);
    for &c in c_grid {
        let mut pick = obs.leaders[0];
        let mut score = f64::NEG_INFINITY;
        for &i in &obs.leaders {
            let s = obs.y[i] - c * sigma[i];
            if s > score {
                pick = i;
                score = s;
            }
        }
        if x[pick] > best.0 {
            best = (x[pick], c);
        }
    }
    Ok(best)
}

pub fn best_linear_hindsight(profile: &NoiseProfile, r: &Realization, c_grid: &[f64]) -> Result<(f64, f64)> {
    let obs = Observation::new(profile, &r.y)?;
    best_linear_hindsight_obs(&obs, &r.x, c_grid)
}

/// 0 followed by `points − 1` log-spaced values up to `top`, starting at
/// 1e−3·top.
pub fn log_c_grid(top: f64, points: usize) -> Vec<f64> {
    let mut g = vec![0.0];
    if points < 2 {
        return g;
    }
    let lo = (1e-3 * top).ln();
    let hi = top.ln();
    let k = points - 1;
    for j in 0..k {
        let t = if k == 1 { 1.0 } else { j as f64 / (k - 1) as f64 };
        g.push((lo + t * (hi - lo)).exp());
    }
    g
}

/// The default hindsight grid: 64 points covering [0, 2√(ln n)].
pub fn default_c_grid(n: usize) -> Vec<f64> {
    log_c_grid(2.0 * (n.max(2) as f64).ln().sqrt(), 64)
}
