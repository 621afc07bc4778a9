//! Reward laws on [0, ∞) and the noise profile.

use crate::error::{invalid, Error, Result};
use crate::normal;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use libm::{erf, erfc};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Everything the functionals and the posterior engine need from a law.
///
/// Laws may mix a density with atoms; `pdf` is the density of the
/// absolutely continuous part only.
pub trait RewardLaw: Send + Sync {
    fn cdf(&self, x: f64) -> f64;
    fn sf(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }
    fn pdf(&self, x: f64) -> f64;
    fn ln_pdf(&self, x: f64) -> f64 {
        self.pdf(x).ln()
    }
    /// (location, mass) of every atom.
    fn atoms(&self) -> Vec<(f64, f64)> {
        Vec::new()
    }
    /// inf{x : F(x) ≥ p}.
    fn quantile(&self, p: f64) -> f64;
    /// inf{x : 1 − F(x) ≤ q}; override where 1 − q would lose digits.
    fn upper_quantile(&self, q: f64) -> f64 {
        self.quantile(1.0 - q)
    }
    /// Closed hull of the support; `hi` may be infinite.
    fn support(&self) -> (f64, f64);
    fn mean(&self) -> f64;
    /// ∫ₓ^∞ (1 − F(t)) dt.
    fn tail_integral(&self, x: f64) -> f64;
    /// Interior points where the density jumps or kinks.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
    /// E[max of m draws] when a closed form exists.
    fn max_mean_closed_form(&self, _m: f64) -> Option<f64> {
        None
    }
    fn continuous_mass(&self) -> f64 {
        1.0 - self.atoms().iter().map(|a| a.1).sum::<f64>()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawDistribution {
    Exponential { rate: f64 },
    #[serde(alias = "halfnormal")]
    HalfNormal { scale: f64 },
    TwoPoint { value: f64, prob: f64 },
    Uniform { low: f64, high: f64 },
    PointMass { value: f64 },
    Tabulated { x: Vec<f64>, cdf: Vec<f64> },
}

/// The reward law D. Parameters are validated on construction and on
/// deserialisation, so a value of this type is always well formed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub enum RewardDistribution {
    Exponential { rate: f64 },
    HalfNormal { scale: f64 },
    TwoPoint { value: f64, prob: f64 },
    Uniform { low: f64, high: f64 },
    PointMass { value: f64 },
    /// Piecewise-linear CDF through (x_i, F_i); F_0 > 0 puts an atom at x_0.
    Tabulated { x: Vec<f64>, cdf: Vec<f64> },
}

impl TryFrom<RawDistribution> for RewardDistribution {
    type Error = Error;
    fn try_from(r: RawDistribution) -> Result<Self> {
        let d = match r {
            RawDistribution::Exponential { rate } => Self::Exponential { rate },
            RawDistribution::HalfNormal { scale } => Self::HalfNormal { scale },
            RawDistribution::TwoPoint { value, prob } => Self::TwoPoint { value, prob },
            RawDistribution::Uniform { low, high } => Self::Uniform { low, high },
            RawDistribution::PointMass { value } => Self::PointMass { value },
            RawDistribution::Tabulated { x, cdf } => Self::Tabulated { x, cdf },
        };
        d.validate()?;
        Ok(d)
    }
}

impl From<RewardDistribution> for RawDistribution {
    fn from(d: RewardDistribution) -> Self {
        match d {
            RewardDistribution::Exponential { rate } => Self::Exponential { rate },
            RewardDistribution::HalfNormal { scale } => Self::HalfNormal { scale },
            RewardDistribution::TwoPoint { value, prob } => Self::TwoPoint { value, prob },
            RewardDistribution::Uniform { low, high } => Self::Uniform { low, high },
            RewardDistribution::PointMass { value } => Self::PointMass { value },
            RewardDistribution::Tabulated { x, cdf } => Self::Tabulated { x, cdf },
        }
    }
}

fn harmonic(m: f64) -> f64 {
    if m.fract() == 0.0 && m <= 1e5 {
        // small terms first
        (1..=m as u64).rev().map(|k| 1.0 / k as f64).sum()
    } else {
        statrs::function::gamma::digamma(m + 1.0) + 0.577_215_664_901_532_9
    }
}

impl RewardDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        let d = Self::Exponential { rate };
        d.validate().map(|_| d)
    }
    pub fn half_normal(scale: f64) -> Result<Self> {
        let d = Self::HalfNormal { scale };
        d.validate().map(|_| d)
    }
    pub fn two_point(value: f64, prob: f64) -> Result<Self> {
        let d = Self::TwoPoint { value, prob };
        d.validate().map(|_| d)
    }
    pub fn uniform(low: f64, high: f64) -> Result<Self> {
        let d = Self::Uniform { low, high };
        d.validate().map(|_| d)
    }
    pub fn point_mass(value: f64) -> Result<Self> {
        let d = Self::PointMass { value };
        d.validate().map(|_| d)
    }
    pub fn tabulated(x: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        let d = Self::Tabulated { x, cdf };
        d.validate().map(|_| d)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            Self::Exponential { rate } if !pos(rate) => invalid(format!("exponential rate must be > 0, got {rate}")),
            Self::HalfNormal { scale } if !pos(scale) => invalid(format!("half-normal scale must be > 0, got {scale}")),
            Self::TwoPoint { value, prob } if !pos(value) || !(prob > 0.0 && prob <= 1.0) => {
                invalid(format!("two-point needs value > 0 and prob in (0,1], got value={value} prob={prob}"))
            }
            Self::Uniform { low, high } if !(low >= 0.0 && high > low && high.is_finite()) => {
                invalid(format!("uniform needs 0 ≤ low < high, got [{low}, {high}]"))
            }
            Self::PointMass { value } if !(value >= 0.0 && value.is_finite()) => {
                invalid(format!("point mass needs value ≥ 0, got {value}"))
            }
            Self::Tabulated { ref x, ref cdf } => {
                if x.len() < 2 || x.len() != cdf.len() {
                    return invalid("tabulated law needs ≥ 2 points and equal-length x/cdf");
                }
                if !(x[0] >= 0.0) || x.iter().any(|v| !v.is_finite()) || x.windows(2).any(|w| w[1] <= w[0]) {
                    return invalid("tabulated x must be finite, ≥ 0 and strictly increasing");
                }
                if cdf.iter().any(|p| !(0.0..=1.0).contains(p)) || cdf.windows(2).any(|w| w[1] < w[0]) {
                    return invalid("tabulated cdf must be non-decreasing in [0, 1]");
                }
                if cdf[cdf.len() - 1] != 1.0 {
                    return invalid("tabulated cdf must end at 1");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Accepts a JSON object or one of the shorthands `exponential`,
    /// `halfnormal` / `half_normal` (unit parameters).
    pub fn parse_cli(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.starts_with('{') {
            return serde_json::from_str(t).map_err(|e| Error::Config(format!("distribution: {e}")));
        }
        match t {
            "exponential" => Self::exponential(1.0),
            "halfnormal" | "half_normal" | "half-normal" => Self::half_normal(1.0),
            _ => Err(Error::Config(format!("unknown distribution shorthand '{t}'"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Exponential { .. } => "exponential",
            Self::HalfNormal { .. } => "half_normal",
            Self::TwoPoint { .. } => "two_point",
            Self::Uniform { .. } => "uniform",
            Self::PointMass { .. } => "point_mass",
            Self::Tabulated { .. } => "tabulated",
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            Self::HalfNormal { scale } => {
                let z: f64 = StandardNormal.sample(rng);
                scale * z.abs()
            }
            Self::TwoPoint { value, prob } => {
                if rng.random::<f64>() < prob {
                    value
                } else {
                    0.0
                }
            }
            Self::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            Self::PointMass { value } => value,
            Self::Tabulated { .. } => {
                // (0, 1] so the atom at x_0 is hit with the right probability
                let u = 1.0 - rng.random::<f64>();
                self.quantile(u)
            }
        }
    }

    fn tab_segment(x: &[f64], t: f64) -> usize {
        // largest i with x[i] ≤ t, clamped to a valid segment start
        match x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i.min(x.len() - 2),
            Err(i) => i.saturating_sub(1).min(x.len() - 2),
        }
    }
}

impl RewardLaw for RewardDistribution {
    fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match *self {
            Self::Exponential { rate } => -(-rate * t).exp_m1(),
            Self::HalfNormal { scale } => erf(t / scale * FRAC_1_SQRT_2),
            Self::TwoPoint { value, prob } => {
                if t >= value {
                    1.0
                } else {
                    1.0 - prob
                }
            }
            Self::Uniform { low, high } => ((t - low) / (high - low)).clamp(0.0, 1.0),
            Self::PointMass { value } => {
                if t >= value {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Tabulated { ref x, ref cdf } => {
                if t < x[0] {
                    0.0
                } else if t >= x[x.len() - 1] {
                    1.0
                } else {
                    let i = Self::tab_segment(x, t);
                    let w = (t - x[i]) / (x[i + 1] - x[i]);
                    cdf[i] + w * (cdf[i + 1] - cdf[i])
                }
            }
        }
    }

    fn sf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 1.0;
        }
        match *self {
            Self::Exponential { rate } => (-rate * t).exp(),
            Self::HalfNormal { scale } => erfc(t / scale * FRAC_1_SQRT_2),
            Self::TwoPoint { value, prob } => {
                if t >= value {
                    0.0
                } else {
                    prob
                }
            }
            _ => 1.0 - self.cdf(t),
        }
    }

    fn pdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match *self {
            Self::Exponential { rate } => rate * (-rate * t).exp(),
            Self::HalfNormal { scale } => 2.0 * normal::pdf(t / scale) / scale,
            Self::TwoPoint { .. } | Self::PointMass { .. } => 0.0,
            Self::Uniform { low, high } => {
                if t >= low && t <= high {
                    1.0 / (high - low)
                } else {
                    0.0
                }
            }
            Self::Tabulated { ref x, ref cdf } => {
                if t < x[0] || t >= x[x.len() - 1] {
                    0.0
                } else {
                    let i = Self::tab_segment(x, t);
                    (cdf[i + 1] - cdf[i]) / (x[i + 1] - x[i])
                }
            }
        }
    }

    fn ln_pdf(&self, t: f64) -> f64 {
        match *self {
            Self::Exponential { rate } if t >= 0.0 => rate.ln() - rate * t,
            Self::HalfNormal { scale } if t >= 0.0 => {
                std::f64::consts::LN_2 + normal::ln_pdf(t / scale) - scale.ln()
            }
            _ => self.pdf(t).ln(),
        }
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        match *self {
            Self::TwoPoint { value, prob } => {
                if prob < 1.0 {
                    vec![(0.0, 1.0 - prob), (value, prob)]
                } else {
                    vec![(value, 1.0)]
                }
            }
            Self::PointMass { value } => vec![(value, 1.0)],
            Self::Tabulated { ref x, ref cdf } if cdf[0] > 0.0 => vec![(x[0], cdf[0])],
            _ => Vec::new(),
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match *self {
            Self::Exponential { rate } => -(-p).ln_1p() / rate,
            Self::HalfNormal { scale } => {
                if p < 0.5 {
                    scale * normal::quantile(0.5 + 0.5 * p)
                } else {
                    scale * normal::upper_quantile(0.5 * (1.0 - p))
                }
            }
            Self::TwoPoint { value, prob } => {
                if p <= 1.0 - prob {
                    0.0
                } else {
                    value
                }
            }
            Self::Uniform { low, high } => low + (high - low) * p,
            Self::PointMass { value } => value,
            Self::Tabulated { ref x, ref cdf } => {
                if p <= cdf[0] {
                    return x[0];
                }
                // first i with cdf[i] ≥ p
                let i = cdf.partition_point(|&c| c < p).min(cdf.len() - 1);
                let (c0, c1) = (cdf[i - 1], cdf[i]);
                x[i - 1] + (p - c0) / (c1 - c0) * (x[i] - x[i - 1])
            }
        }
    }

    fn upper_quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        match *self {
            Self::Exponential { rate } => -q.ln() / rate,
            Self::HalfNormal { scale } => scale * normal::upper_quantile(0.5 * q).max(0.0),
            Self::TwoPoint { value, prob } => {
                if q >= prob {
                    0.0
                } else {
                    value
                }
            }
            Self::Uniform { low, high } => high - (high - low) * q,
            _ => self.quantile(1.0 - q),
        }
    }

    fn support(&self) -> (f64, f64) {
        match *self {
            Self::Exponential { .. } | Self::HalfNormal { .. } => (0.0, f64::INFINITY),
            Self::TwoPoint { value, prob } => (if prob < 1.0 { 0.0 } else { value }, value),
            Self::Uniform { low, high } => (low, high),
            Self::PointMass { value } => (value, value),
            Self::Tabulated { ref x, .. } => (x[0], x[x.len() - 1]),
        }
    }

    fn mean(&self) -> f64 {
        match *self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::HalfNormal { scale } => scale * (2.0 / PI).sqrt(),
            Self::TwoPoint { value, prob } => value * prob,
            Self::Uniform { low, high } => 0.5 * (low + high),
            Self::PointMass { value } => value,
            Self::Tabulated { ref x, .. } => x[0] + self.tail_integral(x[0]),
        }
    }

    fn tail_integral(&self, t: f64) -> f64 {
        if t < 0.0 {
            return -t + self.mean();
        }
        match *self {
            Self::Exponential { rate } => (-rate * t).exp() / rate,
            Self::HalfNormal { scale } => {
                let z = t / scale;
                let g = if z < 8.0 {
                    normal::pdf(z) - z * normal::sf(z)
                } else {
                    normal::pdf(z) * (1.0 - z * normal::mills_ratio(z))
                };
                2.0 * scale * g.max(0.0)
            }
            Self::TwoPoint { value, prob } => prob * (value - t).max(0.0),
            Self::Uniform { low, high } => {
                if t <= low {
                    (low - t) + 0.5 * (high - low)
                } else if t >= high {
                    0.0
                } else {
                    0.5 * (high - t) * (high - t) / (high - low)
                }
            }
            Self::PointMass { value } => (value - t).max(0.0),
            Self::Tabulated { ref x, ref cdf } => {
                let last = x.len() - 1;
                if t >= x[last] {
                    return 0.0;
                }
                let mut acc = if t < x[0] { x[0] - t } else { 0.0 };
                for i in 0..last {
                    let (a, b) = (x[i].max(t), x[i + 1]);
                    if b <= a {
                        continue;
                    }
                    let sa = 1.0 - self.cdf(a);
                    let sb = 1.0 - cdf[i + 1];
                    acc += 0.5 * (sa + sb) * (b - a);
                }
                acc
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Self::Uniform { low, high } => vec![low, high],
            Self::Tabulated { ref x, .. } => x.clone(),
            Self::TwoPoint { value, .. } => vec![value],
            Self::PointMass { value } => vec![value],
            _ => Vec::new(),
        }
    }

    fn max_mean_closed_form(&self, m: f64) -> Option<f64> {
        match *self {
            Self::Exponential { rate } => Some(harmonic(m) / rate),
            Self::PointMass { value } => Some(value),
            Self::TwoPoint { value, prob } => Some(-value * (m * (-prob).ln_1p()).exp_m1()),
            Self::Uniform { low, high } => Some(low + (high - low) * m / (m + 1.0)),
            _ => None,
        }
    }
}

/// Law of the maximum of `m` i.i.d. draws, CDF F^m.
pub struct MaxLaw<'a> {
    base: &'a dyn RewardLaw,
    m: f64,
    mean: f64,
}

impl<'a> MaxLaw<'a> {
    pub fn new(base: &'a dyn RewardLaw, m: f64) -> Result<Self> {
        if !(m >= 1.0 && m.is_finite()) {
            return invalid(format!("max-law count must be ≥ 1, got {m}"));
        }
        let mean = crate::functionals::max_mean_real(base, m)?;
        Ok(Self { base, m, mean })
    }

    pub fn count(&self) -> f64 {
        self.m
    }

    fn ln_base_cdf(&self, x: f64) -> f64 {
        let s = self.base.sf(x);
        if s < 0.5 {
            (-s).ln_1p()
        } else {
            self.base.cdf(x).ln()
        }
    }
}

impl RewardLaw for MaxLaw<'_> {
    fn cdf(&self, x: f64) -> f64 {
        (self.m * self.ln_base_cdf(x)).exp()
    }
    fn sf(&self, x: f64) -> f64 {
        -(self.m * self.ln_base_cdf(x)).exp_m1()
    }
    fn pdf(&self, x: f64) -> f64 {
        let f = self.base.pdf(x);
        if f == 0.0 {
            return 0.0;
        }
        self.ln_pdf(x).exp()
    }
    fn ln_pdf(&self, x: f64) -> f64 {
        self.m.ln() + (self.m - 1.0) * self.ln_base_cdf(x) + self.base.ln_pdf(x)
    }
    fn atoms(&self) -> Vec<(f64, f64)> {
        self.base
            .atoms()
            .into_iter()
            .map(|(a, w)| {
                let hi = self.base.cdf(a);
                let lo = (hi - w).max(0.0);
                (a, hi.powf(self.m) - lo.powf(self.m))
            })
            .collect()
    }
    fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return self.base.quantile(0.0);
        }
        self.base.upper_quantile(-(p.ln() / self.m).exp_m1())
    }
    fn upper_quantile(&self, q: f64) -> f64 {
        if q >= 1.0 {
            return self.base.quantile(0.0);
        }
        self.base.upper_quantile(-((-q).ln_1p() / self.m).exp_m1())
    }
    fn support(&self) -> (f64, f64) {
        self.base.support()
    }
    fn mean(&self) -> f64 {
        self.mean
    }
    fn tail_integral(&self, x: f64) -> f64 {
        let (lo, hi) = self.base.support();
        if x < lo {
            return (lo - x) + self.tail_integral(lo);
        }
        let q = if hi.is_finite() { hi } else { self.base.upper_quantile(1e-16 / self.m) };
        // beyond q, 1 − F^m ≈ m(1 − F) to within a factor 1 + 1e−16
        let beyond = if hi.is_finite() { 0.0 } else { self.m * self.base.tail_integral(q.max(x)) };
        if x >= q {
            return beyond;
        }
        crate::functionals::sf_integral(self, x, q).unwrap_or(f64::NAN) + beyond
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.base.breakpoints()
    }
    fn max_mean_closed_form(&self, k: f64) -> Option<f64> {
        self.base.max_mean_closed_form(k * self.m)
    }
}

/// D conditioned on D ≤ V.
pub struct Truncated<'a> {
    base: &'a dyn RewardLaw,
    cap: f64,
    mass: f64,
    mean: f64,
}

impl<'a> Truncated<'a> {
    pub fn new(base: &'a dyn RewardLaw, cap: f64) -> Result<Self> {
        let mass = base.cdf(cap);
        if !(mass > 0.0) {
            return invalid(format!("Pr[D ≤ {cap}] = 0; truncation undefined"));
        }
        let mut t = Self { base, cap, mass, mean: 0.0 };
        t.mean = crate::functionals::sf_integral(&t, 0.0, cap)?;
        Ok(t)
    }
    pub fn cap(&self) -> f64 {
        self.cap
    }
}

impl RewardLaw for Truncated<'_> {
    fn cdf(&self, x: f64) -> f64 {
        if x >= self.cap {
            1.0
        } else {
            (self.base.cdf(x) / self.mass).min(1.0)
        }
    }
    fn sf(&self, x: f64) -> f64 {
        if x >= self.cap {
            0.0
        } else {
            ((self.mass - self.base.cdf(x)) / self.mass).max(0.0)
        }
    }
    fn pdf(&self, x: f64) -> f64 {
        if x > self.cap {
            0.0
        } else {
            self.base.pdf(x) / self.mass
        }
    }
    fn ln_pdf(&self, x: f64) -> f64 {
        if x > self.cap {
            f64::NEG_INFINITY
        } else {
            self.base.ln_pdf(x) - self.mass.ln()
        }
    }
    fn atoms(&self) -> Vec<(f64, f64)> {
        self.base
            .atoms()
            .into_iter()
            .filter(|a| a.0 <= self.cap)
            .map(|(a, w)| (a, w / self.mass))
            .collect()
    }
    fn quantile(&self, p: f64) -> f64 {
        self.base.quantile(p * self.mass).min(self.cap)
    }
    fn support(&self) -> (f64, f64) {
        let (lo, hi) = self.base.support();
        (lo, hi.min(self.cap))
    }
    fn mean(&self) -> f64 {
        self.mean
    }
    fn tail_integral(&self, x: f64) -> f64 {
        if x >= self.cap {
            return 0.0;
        }
        crate::functionals::sf_integral(self, x.max(0.0), self.cap).unwrap_or(f64::NAN) + (-x).max(0.0)
    }
    fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.base.breakpoints().into_iter().filter(|&x| x < self.cap).collect();
        b.push(self.cap);
        b
    }
}

/// Sorted per-box noise scales σ_1 ≤ … ≤ σ_n.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseProfile {
    sigma: Vec<f64>,
    /// permutation[i] = position of sorted box i in the caller's input order
    permutation: Vec<usize>,
    #[serde(skip)]
    groups: Vec<(usize, usize)>,
}

impl NoiseProfile {
    pub fn new(sigma: Vec<f64>) -> Result<Self> {
        if sigma.is_empty() {
            return invalid("noise profile needs at least one box");
        }
        if let Some((i, s)) = sigma.iter().enumerate().find(|(_, s)| !(s.is_finite() && **s >= 0.0)) {
            return invalid(format!("sigma[{i}] = {s} must be finite and ≥ 0"));
        }
        let mut permutation: Vec<usize> = (0..sigma.len()).collect();
        permutation.sort_by(|&a, &b| sigma[a].total_cmp(&sigma[b]));
        let sorted: Vec<f64> = permutation.iter().map(|&i| sigma[i]).collect();
        let mut groups = Vec::new();
        let mut start = 0;
        for i in 1..=sorted.len() {
            if i == sorted.len() || sorted[i] != sorted[start] {
                groups.push((start, i));
                start = i;
            }
        }
        Ok(Self { sigma: sorted, permutation, groups })
    }

    /// `count` boxes per tier, in the given σ order.
    pub fn tiers(tiers: &[(usize, f64)]) -> Result<Self> {
        let v = tiers.iter().flat_map(|&(k, s)| std::iter::repeat_n(s, k)).collect();
        Self::new(v)
    }

    pub fn n(&self) -> usize {
        self.sigma.len()
    }
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }
    /// Maximal runs [start, end) of equal σ.
    pub fn groups(&self) -> &[(usize, usize)] {
        &self.groups
    }
    /// σ at 1-based position k, clamped to [1, n].
    pub fn pivot(&self, k: usize) -> f64 {
        self.sigma[k.clamp(1, self.n()) - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serde_round_trip_and_alias() {
        let d: RewardDistribution = serde_json::from_str(r#"{"kind":"halfnormal","scale":2.0}"#).unwrap();
        assert_eq!(d, RewardDistribution::HalfNormal { scale: 2.0 });
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"kind":"half_normal","scale":2.0}"#);
        assert!(serde_json::from_str::<RewardDistribution>(r#"{"kind":"exponential","rate":1,"rat":2}"#).is_err());
        assert!(serde_json::from_str::<RewardDistribution>(r#"{"kind":"exponential","rate":-1}"#).is_err());
    }

    #[test]
    fn quantile_is_generalised_inverse() {
        let laws = [
            RewardDistribution::exponential(2.0).unwrap(),
            RewardDistribution::half_normal(1.5).unwrap(),
            RewardDistribution::two_point(3.0, 0.2).unwrap(),
            RewardDistribution::uniform(1.0, 2.0).unwrap(),
            RewardDistribution::tabulated(vec![0.0, 1.0, 3.0], vec![0.25, 0.5, 1.0]).unwrap(),
        ];
        for d in &laws {
            for &p in &[1e-6, 0.1, 0.25, 0.5, 0.8, 0.999] {
                let x = d.quantile(p);
                assert!(d.cdf(x) >= p - 1e-12, "{d:?} p={p}");
            }
        }
    }

    #[test]
    fn half_normal_tail_integral_matches_mean() {
        let d = RewardDistribution::half_normal(1.0).unwrap();
        assert!((d.tail_integral(0.0) - d.mean()).abs() < 1e-15);
        // continuity across the Mills-ratio switch
        let a = d.tail_integral(7.999_999);
        let b = d.tail_integral(8.000_001);
        assert!((a - b).abs() / a < 1e-4);
    }

    #[test]
    fn profile_sorts_and_groups() {
        let p = NoiseProfile::new(vec![2.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(p.sigma(), &[0.0, 0.0, 1.0, 2.0]);
        assert_eq!(p.permutation(), &[1, 3, 2, 0]);
        assert_eq!(p.groups(), &[(0, 2), (2, 3), (3, 4)]);
        assert!(NoiseProfile::new(vec![f64::NAN]).is_err());
        assert!(NoiseProfile::new(vec![-1.0]).is_err());
    }

    #[test]
    fn max_law_of_two_point_has_expected_atoms() {
        let d = RewardDistribution::two_point(10.0, 0.1).unwrap();
        let m = MaxLaw::new(&d, 10.0).unwrap();
        let atoms = m.atoms();
        assert!((atoms[0].1 - 0.9f64.powi(10)).abs() < 1e-15);
        assert!((m.mean() - 10.0 * (1.0 - 0.9f64.powi(10))).abs() < 1e-12);
    }
}
