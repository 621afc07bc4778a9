//! Serializable experiment descriptions. Unknown keys are rejected
//! everywhere so a misspelt override cannot be silently ignored.

use crate::dist::{NoiseProfile, RewardDistribution};
use crate::error::{invalid, Result};
use crate::policies::PolicySpec;
use crate::regimes::{construct_linear_adversary, construct_naive_adversary, AdversarialConstruction, LinearOverrides, NaiveOverrides};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tier {
    pub count: usize,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Explicit { sigma: Vec<f64> },
    Uniform { n: usize, sigma: f64 },
    Tiers { tiers: Vec<Tier> },
    /// `exact` boxes at σ = 0, the remaining n − exact at `sigma`.
    ExactPrefix { n: usize, exact: usize, sigma: f64 },
    NaiveAdversary {
        n: usize,
        #[serde(default)]
        overrides: NaiveOverrides,
    },
    LinearAdversary {
        n: usize,
        #[serde(default)]
        overrides: LinearOverrides,
    },
}

pub struct ResolvedNoise {
    pub profile: NoiseProfile,
    pub construction: Option<AdversarialConstruction>,
}

impl NoiseSpec {
    pub fn resolve(&self, dist: &RewardDistribution) -> Result<ResolvedNoise> {
        let plain = |profile| Ok(ResolvedNoise { profile, construction: None });
        match self {
            Self::Explicit { sigma } => plain(NoiseProfile::new(sigma.clone())?),
            Self::Uniform { n, sigma } => plain(NoiseProfile::tiers(&[(*n, *sigma)])?),
            Self::Tiers { tiers } => {
                let t: Vec<_> = tiers.iter().map(|t| (t.count, t.sigma)).collect();
                plain(NoiseProfile::tiers(&t)?)
            }
            Self::ExactPrefix { n, exact, sigma } => {
                if exact > n {
                    return invalid(format!("exact = {exact} exceeds n = {n}"));
                }
                plain(NoiseProfile::tiers(&[(*exact, 0.0), (n - exact, *sigma)])?)
            }
            Self::NaiveAdversary { n, overrides } => {
                let c = construct_naive_adversary(dist, *n, overrides)?;
                Ok(ResolvedNoise { profile: c.profile.clone(), construction: Some(c) })
            }
            Self::LinearAdversary { n, overrides } => {
                let c = construct_linear_adversary(dist, *n, overrides)?;
                Ok(ResolvedNoise { profile: c.profile.clone(), construction: Some(c) })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    Prophet,
    Random,
    Opt,
    BestLinearHindsight,
}

fn default_benchmarks() -> Vec<Benchmark> {
    vec![Benchmark::Prophet, Benchmark::Random]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub distribution: RewardDistribution,
    pub noise: NoiseSpec,
    pub policies: Vec<PolicySpec>,
    pub trials: u64,
    pub seed: u64,
    /// Prophet and random are always estimated; `opt` adds the clairvoyant
    /// policy if absent, `best_linear_hindsight` adds the hindsight series.
    #[serde(default = "default_benchmarks")]
    pub benchmarks: Vec<Benchmark>,
    /// Hindsight grid; defaults to 64 log-spaced points over [0, 2√ln n].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_grid: Option<Vec<f64>>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return invalid("trials must be ≥ 1");
        }
        for p in &self.policies {
            p.validate()?;
        }
        if let Some(g) = &self.c_grid {
            if g.is_empty() || g.iter().any(|c| !c.is_finite()) {
                return invalid("c_grid must be non-empty and finite");
            }
        }
        Ok(())
    }

    /// Policies actually run: the listed ones plus `opt` when requested as
    /// a benchmark.
    pub fn effective_policies(&self) -> Vec<PolicySpec> {
        let mut p = self.policies.clone();
        if self.benchmarks.contains(&Benchmark::Opt) && !p.contains(&PolicySpec::Opt {}) {
            p.push(PolicySpec::Opt {});
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_reject() {
        let s = r#"{"distribution":{"kind":"exponential","rate":1},
            "noise":{"type":"linear_adversary","n":100,"overrides":{"c_s_exponent":0.3,"alpha_exponent":0.5}},
            "policies":[{"policy":"naive"}],"trials":10,"seed":1}"#;
        let e: ExperimentSpec = serde_json::from_str(s).unwrap();
        assert_eq!(e.benchmarks, default_benchmarks());
        let bad = s.replace("alpha_exponent", "alpha_exponnet");
        assert!(serde_json::from_str::<ExperimentSpec>(&bad).is_err());
        let bad = s.replace("\"seed\":1", "\"seed\":1,\"sede\":2");
        assert!(serde_json::from_str::<ExperimentSpec>(&bad).is_err());
        let r = e.noise.resolve(&e.distribution).unwrap();
        assert_eq!(r.profile.n(), 100);
    }
}
