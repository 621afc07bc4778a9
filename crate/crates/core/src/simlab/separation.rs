//! The six desk-scale separation experiments.

use super::{estimate_reward, EstimateReport};
use crate::config::{Benchmark, ExperimentSpec, NoiseSpec};
use crate::dist::RewardDistribution;
use crate::error::{invalid, Error, Result};
use crate::functionals::order_stat_max_mean;
use crate::policies::PolicySpec;
use crate::regimes::{classify, construct_linear_adversary, ConstructionParams, large_noise_threshold, medium_noise_threshold, LinearOverrides, NaiveOverrides, RegimeReport};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeparationName {
    NaiveVsOpt,
    LinearVsOpt,
    MediumNoiseOptVsProphet,
    LargeNoiseOptVsRandom,
    IgnoreLargeApprox,
    IgnoreLargeExpApprox,
}

impl SeparationName {
    pub const ALL: [SeparationName; 6] = [
        Self::NaiveVsOpt,
        Self::LinearVsOpt,
        Self::MediumNoiseOptVsProphet,
        Self::LargeNoiseOptVsRandom,
        Self::IgnoreLargeApprox,
        Self::IgnoreLargeExpApprox,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::NaiveVsOpt => "naive-vs-opt",
            Self::LinearVsOpt => "linear-vs-opt",
            Self::MediumNoiseOptVsProphet => "medium-noise-opt-vs-prophet",
            Self::LargeNoiseOptVsRandom => "large-noise-opt-vs-random",
            Self::IgnoreLargeApprox => "ignore-large-approx",
            Self::IgnoreLargeExpApprox => "ignore-large-exp-approx",
        }
    }
}

impl fmt::Display for SeparationName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SeparationName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown separation {s:?}")))
    }
}

/// Every field is optional; [`SeparationParams::resolve`] fills defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationParams {
    /// For naive-vs-opt, absent means TwoPoint(n, 1/n) at each n.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<RewardDistribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cn: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub naive_overrides: Option<NaiveOverrides>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear_overrides: Option<LinearOverrides>,
}

impl SeparationParams {
    pub fn resolve(&self, name: SeparationName) -> Self {
        use SeparationName::*;
        let mut p = self.clone();
        let hn = || RewardDistribution::HalfNormal { scale: 1.0 };
        let exp = || RewardDistribution::Exponential { rate: 1.0 };
        let (n, trials): (Vec<usize>, u64) = match name {
            NaiveVsOpt => (vec![200, 1000, 5000], 100_000),
            LinearVsOpt => (vec![100, 1000, 10_000], 100_000),
            MediumNoiseOptVsProphet | LargeNoiseOptVsRandom => (vec![10_000], 10_000),
            IgnoreLargeApprox => (vec![1000], 100_000),
            IgnoreLargeExpApprox => (vec![4096], 20_000),
        };
        p.n.get_or_insert(n);
        p.trials.get_or_insert(trials);
        p.seed.get_or_insert(0);
        match name {
            NaiveVsOpt => {
                p.naive_overrides.get_or_insert_with(NaiveOverrides::default);
            }
            LinearVsOpt => {
                p.distribution.get_or_insert_with(exp);
                p.linear_overrides.get_or_insert_with(LinearOverrides::scaled);
            }
            MediumNoiseOptVsProphet => {
                p.distribution.get_or_insert_with(hn);
                p.c.get_or_insert_with(|| vec![0.1, 0.3, 0.6]);
            }
            LargeNoiseOptVsRandom => {
                p.distribution.get_or_insert_with(hn);
                p.cn.get_or_insert(4);
            }
            IgnoreLargeApprox => {
                p.distribution.get_or_insert_with(exp);
                p.c.get_or_insert_with(|| vec![0.5]);
            }
            IgnoreLargeExpApprox => {
                p.distribution.get_or_insert_with(hn);
                p.c.get_or_insert_with(|| vec![0.5]);
            }
        }
        p
    }
}

/// `value relation bound`, judged with `slack_stderrs` standard errors of
/// leeway in the value's favour.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub quantity: String,
    pub value: f64,
    pub stderr: f64,
    pub relation: &'static str,
    pub bound: f64,
    pub slack_stderrs: f64,
    pub holds: bool,
}

impl Comparison {
    fn le(quantity: impl Into<String>, value: f64, stderr: f64, bound: f64, slack: f64) -> Self {
        Self { quantity: quantity.into(), value, stderr, relation: "<=", bound, slack_stderrs: slack, holds: value - slack * stderr <= bound }
    }
    fn ge(quantity: impl Into<String>, value: f64, stderr: f64, bound: f64, slack: f64) -> Self {
        Self { quantity: quantity.into(), value, stderr, relation: ">=", bound, slack_stderrs: slack, holds: value + slack * stderr >= bound }
    }
}

/// A quantity required to be strictly increasing along `points`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trend {
    pub quantity: String,
    pub over: &'static str,
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub holds: bool,
}

impl Trend {
    fn increasing(quantity: impl Into<String>, over: &'static str, points: Vec<f64>, values: Vec<f64>) -> Self {
        let holds = values.windows(2).all(|w| w[1] > w[0]);
        Self { quantity: quantity.into(), over, points, values, holds }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationRow {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime: Option<RegimeReport>,
    pub comparisons: Vec<Comparison>,
    pub metrics: BTreeMap<String, f64>,
    pub experiment: EstimateReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationReport {
    pub name: SeparationName,
    pub version: &'static str,
    pub params: SeparationParams,
    pub rows: Vec<SeparationRow>,
    pub trends: Vec<Trend>,
}

impl SeparationReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().flat_map(|r| &r.comparisons).all(|c| c.holds) && self.trends.iter().all(|t| t.holds)
    }

    pub fn row(&self, n: usize, c: Option<f64>) -> Option<&SeparationRow> {
        self.rows.iter().find(|r| r.n == n && r.c == c)
    }
}

const PROXY: &str = "opt-proxy";

fn proxy(k: usize) -> PolicySpec {
    PolicySpec::PrefixNaive { k, label: Some(PROXY.into()) }
}

struct Runner {
    trials: u64,
    seed: u64,
    threads: Option<usize>,
}

impl Runner {
    fn run(&self, distribution: &RewardDistribution, noise: NoiseSpec, policies: Vec<PolicySpec>, benchmarks: Vec<Benchmark>) -> Result<EstimateReport> {
        let spec = ExperimentSpec {
            distribution: distribution.clone(),
            noise,
            policies,
            trials: self.trials,
            seed: self.seed,
            benchmarks,
            c_grid: None,
        };
        estimate_reward(&spec, self.threads)
    }
}

fn std_benchmarks() -> Vec<Benchmark> {
    vec![Benchmark::Prophet, Benchmark::Random]
}

fn row(n: usize, c: Option<f64>, label: impl Into<String>, experiment: EstimateReport) -> SeparationRow {
    SeparationRow { n, c, label: label.into(), regime: None, comparisons: Vec::new(), metrics: BTreeMap::new(), experiment }
}

fn est(r: &EstimateReport, name: &str) -> Result<(f64, f64)> {
    r.get(name).map(|e| (e.mean, e.stderr)).ok_or_else(|| Error::Config(format!("missing series {name}")))
}

fn ratio(r: &EstimateReport, a: &str, b: &str) -> Result<(f64, f64)> {
    r.ratio(a, b).map(|q| (q.value, q.stderr)).ok_or_else(|| Error::Config(format!("missing series {a} or {b}")))
}

pub fn run_separation(name: SeparationName, params: &SeparationParams, threads: Option<usize>) -> Result<SeparationReport> {
    use SeparationName::*;
    let p = params.resolve(name);
    let ns = p.n.clone().unwrap_or_default();
    if ns.is_empty() {
        return invalid("n list must be non-empty");
    }
    let runner = Runner { trials: p.trials.unwrap_or(1), seed: p.seed.unwrap_or(0), threads };
    let mut rows = Vec::new();
    let mut trends = Vec::new();
    match name {
        NaiveVsOpt => {
            let ov = p.naive_overrides.clone().unwrap_or_default();
            let mut pts = Vec::new();
            let mut vals = Vec::new();
            for &n in &ns {
                let d = match &p.distribution {
                    Some(d) => d.clone(),
                    None => RewardDistribution::two_point(n as f64, 1.0 / n as f64)?,
                };
                let c_b = ov.c_b.unwrap_or_else(|| (6.0 * (n as f64).ln()).round() as usize);
                let k = n.saturating_sub(c_b).max(1);
                let e = runner.run(
                    &d,
                    NoiseSpec::NaiveAdversary { n, overrides: ov.clone() },
                    vec![PolicySpec::Naive {}, proxy(k)],
                    std_benchmarks(),
                )?;
                let (nm, ns_) = est(&e, "naive")?;
                let (pm, ps) = est(&e, PROXY)?;
                let (r, rs) = ratio(&e, PROXY, "naive")?;
                let mut w = row(n, None, "naive adversary", e.clone());
                w.comparisons.push(Comparison::le("R_naive vs 4·E[D]", nm, ns_, 4.0 * e.mean_d, 3.0));
                w.comparisons.push(Comparison::ge("R_opt-proxy vs E[D_{n:n}]/2", pm, ps, 0.5 * e.expected_max, 3.0));
                w.comparisons.push(Comparison::ge("R_opt-proxy / R_naive vs n/20", r, rs, n as f64 / 20.0, 0.0));
                w.regime = Some(classify(&d, (n as f64 - 6.0 * (n as f64).ln()).max(1.0) / n as f64, &e.construction.as_ref().expect("construction").profile)?);
                pts.push(n as f64);
                vals.push(r);
                rows.push(w);
            }
            trends.push(Trend::increasing("R_opt-proxy / R_naive", "n", pts, vals));
        }
        LinearVsOpt => {
            let d = p.distribution.clone().expect("resolved");
            let ov = p.linear_overrides.clone().unwrap_or_default();
            let mut pts = Vec::new();
            let mut vals = Vec::new();
            for &n in &ns {
                // the proxy looks at the exact box and the small-noise tier
                let c_s = match construct_linear_adversary(&d, n, &ov)?.params {
                    ConstructionParams::LinearAdversary { c_s, .. } => c_s,
                    _ => unreachable!(),
                };
                let e = runner.run(
                    &d,
                    NoiseSpec::LinearAdversary { n, overrides: ov.clone() },
                    vec![proxy(1 + c_s), PolicySpec::Opt {}],
                    vec![Benchmark::Prophet, Benchmark::Random, Benchmark::BestLinearHindsight],
                )?;
                let (r, rs) = ratio(&e, PROXY, "best_linear_hindsight")?;
                let (ro, _) = ratio(&e, "opt", "best_linear_hindsight")?;
                let mut w = row(n, None, "linear adversary", e);
                w.metrics.insert("opt_over_hindsight".into(), ro);
                w.metrics.insert("proxy_over_hindsight".into(), r);
                if n == *ns.iter().max().expect("non-empty") {
                    w.comparisons.push(Comparison::ge("R_opt-proxy / R_best_linear_hindsight vs 2", r, rs, 2.0, 0.0));
                }
                pts.push(n as f64);
                vals.push(r);
                rows.push(w);
            }
            trends.push(Trend::increasing("R_opt-proxy / R_best_linear_hindsight", "n", pts, vals));
        }
        MediumNoiseOptVsProphet => {
            let d = p.distribution.clone().expect("resolved");
            let cs = p.c.clone().unwrap_or_default();
            for &n in &ns {
                let e = runner.run(&d, NoiseSpec::Uniform { n, sigma: 0.0 }, vec![PolicySpec::Opt {}], std_benchmarks())?;
                let base = e.get("opt").expect("opt").ratio_to_expected_max;
                let mut w = row(n, None, "zero noise", e);
                w.metrics.insert("opt_over_expected_max".into(), base);
                rows.push(w);
                let mut pts = Vec::new();
                let mut vals = Vec::new();
                for &c in &cs {
                    let thr = medium_noise_threshold(&d, n, c)?;
                    let k = ((n as f64).powf(c).round() as usize).clamp(1, n);
                    let e = runner.run(
                        &d,
                        NoiseSpec::ExactPrefix { n, exact: k - 1, sigma: 1000.0 * thr },
                        vec![PolicySpec::Opt {}],
                        std_benchmarks(),
                    )?;
                    let (m, s) = est(&e, "opt")?;
                    let (r, rs) = (m / e.expected_max, s / e.expected_max);
                    let mut w = row(n, Some(c), "medium noise", e.clone());
                    w.regime = Some(classify(&d, c, &NoiseSpec::ExactPrefix { n, exact: k - 1, sigma: 1000.0 * thr }.resolve(&d)?.profile)?);
                    w.metrics.insert("opt_over_expected_max".into(), r);
                    w.metrics.insert("measured_constant".into(), r / c.sqrt());
                    if Some(&c) == cs.iter().min_by(|a, b| a.total_cmp(b)) {
                        w.comparisons.push(Comparison::le("R_opt / E[D_{n:n}] vs half the zero-noise ratio", r, rs, base / 2.0, 0.0));
                    }
                    pts.push(c);
                    vals.push(r);
                    rows.push(w);
                }
                trends.push(Trend::increasing(format!("R_opt / E[D_{{n:n}}] at n = {n}"), "c", pts, vals));
            }
        }
        LargeNoiseOptVsRandom => {
            let d = p.distribution.clone().expect("resolved");
            let cn = p.cn.unwrap_or(4);
            for &n in &ns {
                if cn > n {
                    return invalid(format!("cn = {cn} exceeds n = {n}"));
                }
                let thr = large_noise_threshold(&d, n, cn)?;
                let noise = NoiseSpec::ExactPrefix { n, exact: cn - 1, sigma: thr * (1.0 + 1e-6) };
                let profile = noise.resolve(&d)?.profile;
                let e = runner.run(&d, noise, vec![PolicySpec::Opt {}], std_benchmarks())?;
                let (m, s) = est(&e, "opt")?;
                let bound = 86.0 * (cn as f64).ln().sqrt() * e.mean_d;
                let (rr, _) = ratio(&e, "opt", "random")?;
                let mut w = row(n, Some(cn as f64 / n as f64), "large noise", e);
                w.regime = Some(classify(&d, cn as f64 / n as f64, &profile)?);
                w.metrics.insert("opt_over_random".into(), rr);
                w.comparisons.push(Comparison::le("R_opt vs 86·√ln(cn)·E[D]", m, s, bound, 3.0));
                rows.push(w);
            }
        }
        IgnoreLargeApprox | IgnoreLargeExpApprox => {
            let d = p.distribution.clone().expect("resolved");
            let exp = name == IgnoreLargeExpApprox;
            for &n in &ns {
                let big = 1e3 * order_stat_max_mean(&d, n as u64)?;
                for &c in p.c.as_deref().unwrap_or(&[]) {
                    if !(c > 0.0 && c <= 1.0) {
                        return invalid(format!("c must lie in (0, 1], got {c}"));
                    }
                    let k = if exp { (n as f64).powf(c) } else { c * n as f64 };
                    let k = (k.round() as usize).clamp(1, n);
                    let policy = if exp { PolicySpec::IgnoreLargeExp { alpha: None } } else { PolicySpec::IgnoreLarge { alpha: None } };
                    let e = runner.run(&d, NoiseSpec::ExactPrefix { n, exact: k, sigma: big }, vec![policy], std_benchmarks())?;
                    let pe = e.estimates[0].clone();
                    let (r, rs) = (pe.mean / e.expected_max, pe.stderr / e.expected_max);
                    let (bound, label) = if exp { (c * c / 576.0, "c²/576") } else { (c * c / 20.0, "c²/20") };
                    let mut w = row(n, Some(c), if exp { "n^c exact boxes" } else { "cn exact boxes" }, e);
                    w.metrics.insert("ratio_to_expected_max".into(), r);
                    w.comparisons.push(Comparison::ge(format!("R_{} / E[D_{{n:n}}] vs {label}", pe.policy), r, rs, bound, 3.0));
                    rows.push(w);
                }
            }
        }
    }
    Ok(SeparationReport { name, version: crate::VERSION, params: p, rows, trends })
}
