//! Seeded, paired Monte Carlo evaluation of policies.
//!
//! Trial t draws its world from ChaCha8 stream t under a key derived from
//! (seed, 0); policy j gets stream t under key (seed, 1 + j). Trials run in
//! blocks of [`BLOCK`] and block summaries are merged in block order, so
//! results are bit-identical for any thread count.

mod lemmas;
mod separation;

pub use lemmas::{verify_lemmas, LemmaCheckResult, LemmaId, Method, VerifyParams};
pub use separation::{run_separation, Comparison, SeparationName, SeparationParams, SeparationReport, SeparationRow, Trend};

use crate::config::{Benchmark, ExperimentSpec};
use crate::dist::{NoiseProfile, RewardDistribution, RewardLaw};
use crate::error::{Error, Result};
use crate::functionals::order_stat_max_mean;
use crate::policies::{best_linear_hindsight_obs, default_c_grid, Observation, Policy};
use crate::regimes::AdversarialConstruction;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

pub const BLOCK: u64 = 1024;
/// Blocks handed to the pool at once; bounds trace memory.
const BATCH: u64 = 64;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for (seed, lane, stream).
pub fn substream(seed: u64, lane: u64, stream: u64) -> ChaCha8Rng {
    let mut s = seed ^ lane.wrapping_mul(0xd6e8_feb8_6659_fd93);
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Running means and co-moments Σ(a − ā)(b − b̄) of k paired series.
#[derive(Clone, Debug)]
struct Moments {
    count: u64,
    mean: Vec<f64>,
    comom: Vec<f64>,
}

impl Moments {
    fn from_rows(rows: &[f64], k: usize) -> Self {
        let m = rows.len() / k;
        let mut mean = vec![0.0; k];
        for r in rows.chunks(k) {
            for (a, v) in mean.iter_mut().zip(r) {
                *a += v;
            }
        }
        mean.iter_mut().for_each(|a| *a /= m as f64);
        let mut comom = vec![0.0; k * k];
        for r in rows.chunks(k) {
            for i in 0..k {
                let di = r[i] - mean[i];
                for j in i..k {
                    comom[i * k + j] += di * (r[j] - mean[j]);
                }
            }
        }
        for i in 0..k {
            for j in 0..i {
                comom[i * k + j] = comom[j * k + i];
            }
        }
        Self { count: m as u64, mean, comom }
    }

    fn merge(&mut self, o: &Moments) {
        if o.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = o.clone();
            return;
        }
        let k = self.mean.len();
        let (na, nb) = (self.count as f64, o.count as f64);
        let n = na + nb;
        let delta: Vec<f64> = (0..k).map(|i| o.mean[i] - self.mean[i]).collect();
        for i in 0..k {
            for j in 0..k {
                self.comom[i * k + j] += o.comom[i * k + j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for i in 0..k {
            self.mean[i] += delta[i] * nb / n;
        }
        self.count += o.count;
    }

    /// Per-sample covariance matrix (n − 1 denominator).
    fn covariance(&self) -> Vec<Vec<f64>> {
        let k = self.mean.len();
        let d = (self.count.max(2) - 1) as f64;
        (0..k).map(|i| (0..k).map(|j| self.comom[i * k + j] / d).collect()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Ratio {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RewardEstimate {
    pub policy: String,
    pub benchmark: bool,
    pub mean: f64,
    /// sample standard deviation / √trials
    pub stderr: f64,
    pub trials: u64,
    pub ratio_to_prophet: Ratio,
    pub ratio_to_mean_d: f64,
    pub ratio_to_expected_max: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    pub version: &'static str,
    pub seed: u64,
    /// The spec as run, with defaults materialized.
    pub config: ExperimentSpec,
    pub n: usize,
    /// E[D]
    pub mean_d: f64,
    /// E[D_{n:n}] by closed form or quadrature
    pub expected_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub construction: Option<AdversarialConstruction>,
    pub estimates: Vec<RewardEstimate>,
    /// Per-trial covariance between the series in `estimates` order.
    pub covariance: Vec<Vec<f64>>,
    pub posterior_fallbacks: u64,
}

impl EstimateReport {
    fn index(&self, name: &str) -> Option<usize> {
        self.estimates.iter().position(|e| e.policy == name)
    }

    pub fn get(&self, name: &str) -> Option<&RewardEstimate> {
        self.index(name).map(|i| &self.estimates[i])
    }

    /// Delta-method ratio of two paired series.
    pub fn ratio(&self, num: &str, den: &str) -> Option<Ratio> {
        let (i, j) = (self.index(num)?, self.index(den)?);
        let t = self.estimates[i].trials as f64;
        let c = &self.covariance;
        Some(delta_ratio(self.estimates[i].mean, self.estimates[j].mean, c[i][i], c[i][j], c[j][j], t))
    }
}

fn delta_ratio(a: f64, b: f64, vaa: f64, vab: f64, vbb: f64, t: f64) -> Ratio {
    let r = a / b;
    let var = (vaa - 2.0 * r * vab + r * r * vbb) / (b * b * t);
    Ratio { value: r, stderr: var.max(0.0).sqrt() }
}

struct Ctx<'a> {
    dist: &'a RewardDistribution,
    profile: &'a NoiseProfile,
    policies: Vec<Box<dyn Policy>>,
    grid: Option<Vec<f64>>,
    seed: u64,
    trials: u64,
    trace: bool,
}

struct TraceRow {
    trial: u64,
    series: usize,
    choice: usize,
    reward: f64,
}

struct BlockOut {
    moments: Moments,
    trace: Vec<TraceRow>,
}

impl Ctx<'_> {
    fn series(&self) -> usize {
        self.policies.len() + 2 + usize::from(self.grid.is_some())
    }

    fn run_block(&self, b: u64) -> Result<BlockOut> {
        let n = self.profile.n();
        let sigma = self.profile.sigma();
        let k = self.series();
        let start = b * BLOCK;
        let end = (start + BLOCK).min(self.trials);
        let mut rows = Vec::with_capacity((end - start) as usize * k);
        let mut trace = Vec::new();
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        for t in start..end {
            let mut world = substream(self.seed, 0, t);
            for v in x.iter_mut() {
                *v = self.dist.sample(&mut world);
            }
            for i in 0..n {
                y[i] = if sigma[i] > 0.0 {
                    let e: f64 = StandardNormal.sample(&mut world);
                    x[i] + sigma[i] * e
                } else {
                    x[i]
                };
            }
            let obs = Observation::new(self.profile, &y)?;
            for (j, p) in self.policies.iter().enumerate() {
                let lane = 1 + j as u64;
                let mut rng = substream(self.seed, lane, t);
                let c = p.select(&obs, &mut rng).map_err(|e| Error::Policy {
                    trial: t,
                    stream: lane,
                    message: format!("{}: {e}", p.name()),
                })?;
                rows.push(x[c]);
                if self.trace {
                    trace.push(TraceRow { trial: t, series: j, choice: c + 1, reward: x[c] });
                }
            }
            let (prophet, random) = benchmark_rewards_slice(&x);
            rows.push(prophet);
            rows.push(random);
            if let Some(g) = &self.grid {
                rows.push(best_linear_hindsight_obs(&obs, &x, g)?.0);
            }
        }
        Ok(BlockOut { moments: Moments::from_rows(&rows, k), trace })
    }
}

fn benchmark_rewards_slice(x: &[f64]) -> (f64, f64) {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (max, x.iter().sum::<f64>() / x.len() as f64)
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t.max(1));
    }
    b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

pub fn estimate_reward(spec: &ExperimentSpec, threads: Option<usize>) -> Result<EstimateReport> {
    estimate_reward_traced(spec, threads, None)
}

/// As [`estimate_reward`], streaming (trial, policy, choice, reward) rows to
/// `trace` as CSV. `choice` is 1-based.
pub fn estimate_reward_traced(
    spec: &ExperimentSpec,
    threads: Option<usize>,
    trace: Option<&mut dyn Write>,
) -> Result<EstimateReport> {
    spec.validate()?;
    let resolved = spec.noise.resolve(&spec.distribution)?;
    let profile = &resolved.profile;
    let n = profile.n();
    let mut config = spec.clone();
    let grid = if spec.benchmarks.contains(&Benchmark::BestLinearHindsight) {
        let g = spec.c_grid.clone().unwrap_or_else(|| default_c_grid(n));
        config.c_grid = Some(g.clone());
        Some(g)
    } else {
        None
    };
    let specs = spec.effective_policies();
    let policies = specs.iter().map(|p| p.build(&spec.distribution)).collect::<Result<Vec<_>>>()?;
    let mut names: Vec<String> = policies.iter().map(|p| p.name()).collect();
    names.push("prophet".into());
    names.push("random".into());
    if grid.is_some() {
        names.push("best_linear_hindsight".into());
    }
    let ctx = Ctx {
        dist: &spec.distribution,
        profile,
        policies,
        grid,
        seed: spec.seed,
        trials: spec.trials,
        trace: trace.is_some(),
    };

    let mut writer = trace.map(csv::Writer::from_writer);
    if let Some(w) = writer.as_mut() {
        w.write_record(["trial", "policy", "choice", "reward"]).map_err(csv_err)?;
    }
    let k = ctx.series();
    let mut total = Moments { count: 0, mean: vec![0.0; k], comom: vec![0.0; k * k] };
    let blocks = spec.trials.div_ceil(BLOCK);
    let pool = pool(threads)?;
    let mut b0 = 0;
    while b0 < blocks {
        let b1 = (b0 + BATCH).min(blocks);
        let outs: Vec<Result<BlockOut>> = pool.install(|| (b0..b1).into_par_iter().map(|b| ctx.run_block(b)).collect());
        for out in outs {
            let out = out?;
            total.merge(&out.moments);
            if let Some(w) = writer.as_mut() {
                for r in &out.trace {
                    w.write_record(&[r.trial.to_string(), names[r.series].clone(), r.choice.to_string(), r.reward.to_string()])
                        .map_err(csv_err)?;
                }
            }
        }
        b0 = b1;
    }
    if let Some(mut w) = writer {
        w.flush()?;
    }

    let mean_d = spec.distribution.mean();
    let expected_max = order_stat_max_mean(&spec.distribution, n as u64)?;
    let covariance = total.covariance();
    let t = total.count as f64;
    let prophet = ctx.policies.len();
    let estimates = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let mean = total.mean[i];
            RewardEstimate {
                policy: name.clone(),
                benchmark: i >= ctx.policies.len(),
                mean,
                stderr: (covariance[i][i] / t).sqrt(),
                trials: total.count,
                ratio_to_prophet: delta_ratio(
                    mean,
                    total.mean[prophet],
                    covariance[i][i],
                    covariance[i][prophet],
                    covariance[prophet][prophet],
                    t,
                ),
                ratio_to_mean_d: mean / mean_d,
                ratio_to_expected_max: mean / expected_max,
            }
        })
        .collect();
    Ok(EstimateReport {
        version: crate::VERSION,
        seed: spec.seed,
        config,
        n,
        mean_d,
        expected_max,
        construction: resolved.construction,
        estimates,
        covariance,
        posterior_fallbacks: ctx.policies.iter().map(|p| p.fallbacks()).sum(),
    })
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_merge_matches_single_pass() {
        let rows: Vec<f64> = (0..300).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        let whole = Moments::from_rows(&rows, 3);
        let mut m = Moments::from_rows(&rows[..90], 3);
        m.merge(&Moments::from_rows(&rows[90..], 3));
        for (a, b) in whole.comom.iter().zip(&m.comom) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in whole.mean.iter().zip(&m.mean) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn substreams_differ() {
        use rand::Rng;
        let a: u64 = substream(1, 0, 0).random();
        let b: u64 = substream(1, 0, 1).random();
        let c: u64 = substream(1, 1, 0).random();
        let d: u64 = substream(2, 0, 0).random();
        assert!(a != b && a != c && a != d && b != c);
        assert_eq!(a, substream(1, 0, 0).random::<u64>());
    }
}
