//! `boxsel`: command-line front end for the simulation lab.

mod render;

use boxsel_core::config::ExperimentSpec;
use boxsel_core::functionals::max_mean_real;
use boxsel_core::posterior::{posterior_mean_or_nearest, PosteriorQuery};
use boxsel_core::regimes::{classify, construct_linear_adversary, construct_naive_adversary, LinearOverrides, NaiveOverrides};
use boxsel_core::simlab::{estimate_reward_traced, run_separation, verify_lemmas, EstimateReport, SeparationName, SeparationParams, SeparationReport, VerifyParams, LemmaCheckResult, Method};
use boxsel_core::{Error, RewardDistribution, RewardLaw, VERSION};
use clap::{Parser, Subcommand, ValueEnum};
use render::{preamble, Cell, Table};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "boxsel", version, about = "Selecting the best box from noisy observations: policies, benchmarks, lemma checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Overrides the config's seed; echoed in the output.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the trial count (Monte Carlo samples for `verify`).
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Output directory (created if absent); stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Kind {
    NaiveAdversary,
    LinearAdversary,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Estimate policy rewards for an experiment config.
    Simulate {
        config: PathBuf,
        /// Stream per-trial (trial, policy, choice, reward) rows to this CSV file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run one of the separation experiments.
    Separation {
        name: String,
        config: Option<PathBuf>,
    },
    /// Run the lemma-verification suite.
    Verify { config: Option<PathBuf> },
    /// Build an adversarial noise profile and classify it.
    Construct { kind: Kind, config: PathBuf },
    /// Posterior mean E[X | X + N(0, σ²) = y].
    Posterior {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        sigma: f64,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
    },
    /// Expected maximum of m draws, E[D_{m:m}].
    OrderStats {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        m: f64,
    },
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ConstructConfig {
    distribution: RewardDistribution,
    n: usize,
    /// Classification level; defaults to (n − 6 ln n)/n for the naive
    /// construction and the small-noise exponent for the linear one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    overrides: Option<Value>,
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn cfg_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

/// Reads a config file; a previous output (with a top-level "config" key
/// next to "command") replays its embedded config.
fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Res<T> {
    let text = fs::read_to_string(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
    let v = match v {
        Value::Object(mut m) if m.contains_key("command") && m.contains_key("config") => m.remove("config").expect("checked"),
        v => v,
    };
    serde_json::from_value(v).map_err(|e| cfg_err(format!("{}: {e}", path.display())))
}

fn load_or_default<T: for<'de> Deserialize<'de> + Default>(path: &Option<PathBuf>) -> Res<T> {
    path.as_deref().map_or_else(|| Ok(T::default()), load)
}

struct Output {
    command: &'static str,
    seed: Option<u64>,
    config: Value,
    result: Value,
    tables: Vec<Table>,
    /// Bare value printed in text mode instead of tables.
    scalar: Option<f64>,
}

impl Output {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut doc = json!({ "command": self.command, "version": VERSION, "config": self.config, "result": self.result });
                if let Some(s) = self.seed {
                    doc["seed"] = json!(s);
                }
                serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
            }
            Format::Text if self.scalar.is_some() => format!("{}\n", render::sig6(self.scalar.expect("checked"))),
            Format::Text | Format::Csv => {
                let mut s = preamble(self.command, VERSION, self.seed, &self.config);
                for t in &self.tables {
                    s.push_str(&if format == Format::Text { t.text() } else { t.csv() });
                    if format == Format::Text {
                        s.push('\n');
                    }
                }
                s
            }
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn estimate_table(title: String, r: &EstimateReport) -> Table {
    let mut t = Table::new(title, vec!["policy", "mean", "stderr", "/prophet", "±", "/E[D]", "/E[D_n:n]"]);
    for e in &r.estimates {
        t.push(vec![
            e.policy.clone().into(),
            e.mean.into(),
            e.stderr.into(),
            e.ratio_to_prophet.value.into(),
            e.ratio_to_prophet.stderr.into(),
            e.ratio_to_mean_d.into(),
            e.ratio_to_expected_max.into(),
        ]);
    }
    t
}

fn simulate(cli: &Cli, config: &Path, trace: &Option<PathBuf>) -> Res<Output> {
    let mut spec: ExperimentSpec = load(config)?;
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    if let Some(t) = cli.trials {
        spec.trials = t;
    }
    let report = match trace {
        Some(p) => {
            let mut f = std::io::BufWriter::new(fs::File::create(p).map_err(|e| cfg_err(format!("{}: {e}", p.display())))?);
            let r = estimate_reward_traced(&spec, cli.threads, Some(&mut f))?;
            f.flush().map_err(cfg_err)?;
            r
        }
        None => estimate_reward_traced(&spec, cli.threads, None)?,
    };
    let title = format!(
        "n = {}, trials = {}, E[D] = {}, E[D_n:n] = {}, posterior fallbacks = {}",
        report.n,
        spec.trials,
        render::sig6(report.mean_d),
        render::sig6(report.expected_max),
        report.posterior_fallbacks
    );
    Ok(Output {
        command: "simulate",
        seed: Some(report.seed),
        config: to_value(&report.config),
        tables: vec![estimate_table(title, &report)],
        result: to_value(&report),
        scalar: None,
    })
}

fn separation_tables(r: &SeparationReport) -> Vec<Table> {
    let mut out = Vec::new();
    let mut cmp = Table::new(format!("{} comparisons", r.name), vec!["n", "c", "quantity", "value", "stderr", "rel", "bound", "slack(se)", "holds"]);
    for row in &r.rows {
        for c in &row.comparisons {
            cmp.push(vec![
                row.n.into(),
                row.c.into(),
                c.quantity.clone().into(),
                c.value.into(),
                c.stderr.into(),
                c.relation.into(),
                c.bound.into(),
                c.slack_stderrs.into(),
                c.holds.into(),
            ]);
        }
    }
    for row in &r.rows {
        let c = row.c.map(|c| format!(", c = {}", render::sig6(c))).unwrap_or_default();
        let mut t = estimate_table(format!("n = {}{c}: {}", row.n, row.label), &row.experiment);
        for (k, v) in &row.metrics {
            t.push(vec![k.clone().into(), (*v).into(), "".into(), "".into(), "".into(), "".into(), "".into()]);
        }
        out.push(t);
    }
    out.push(cmp);
    let mut tr = Table::new(format!("{} trends", r.name), vec!["quantity", "over", "points", "values", "increasing"]);
    for t in &r.trends {
        let join = |v: &[f64]| v.iter().map(|x| render::sig6(*x)).collect::<Vec<_>>().join(" ");
        tr.push(vec![t.quantity.clone().into(), t.over.into(), join(&t.points).into(), join(&t.values).into(), t.holds.into()]);
    }
    if !r.trends.is_empty() {
        out.push(tr);
    }
    out
}

fn separation(cli: &Cli, name: &str, config: &Option<PathBuf>) -> Res<Output> {
    let name: SeparationName = name.parse()?;
    let mut params: SeparationParams = load_or_default(config)?;
    if cli.seed.is_some() {
        params.seed = cli.seed;
    }
    if cli.trials.is_some() {
        params.trials = cli.trials;
    }
    let report = run_separation(name, &params, cli.threads)?;
    Ok(Output {
        command: "separation",
        seed: report.params.seed,
        config: json!({ "name": name, "params": report.params }),
        tables: separation_tables(&report),
        result: to_value(&report),
        scalar: None,
    })
}

fn method_label(m: &Method) -> String {
    match m {
        Method::Exact => "exact".into(),
        Method::Quadrature => "quadrature".into(),
        Method::MonteCarlo { trials, .. } => format!("monte-carlo({trials})"),
    }
}

fn verify(cli: &Cli, config: &Option<PathBuf>) -> Res<(Output, bool)> {
    let mut params: VerifyParams = load_or_default(config)?;
    if let Some(s) = cli.seed {
        params.seed = s;
    }
    if let Some(t) = cli.trials {
        params.mc_samples = t;
    }
    let results: Vec<LemmaCheckResult> = verify_lemmas(&params)?;
    let failed = results.iter().filter(|r| !r.pass).count();
    let mut t = Table::new(
        format!("{} checks, {} failed", results.len(), failed),
        vec!["lemma", "distribution", "point", "lhs", "rhs", "margin", "slack", "pass", "method"],
    );
    for r in &results {
        t.push(vec![
            to_value(&r.lemma).as_str().unwrap_or("").to_string().into(),
            r.distribution.clone().into(),
            r.point.clone().into(),
            r.lhs.into(),
            r.rhs.into(),
            r.margin.into(),
            r.slack.into(),
            r.pass.into(),
            method_label(&r.method).into(),
        ]);
    }
    let out = Output {
        command: "verify",
        seed: Some(params.seed),
        config: to_value(&params),
        tables: vec![t],
        result: json!({ "checks": results, "failed": failed }),
        scalar: None,
    };
    Ok((out, failed == 0))
}

fn construct(kind: Kind, config: &Path) -> Res<Output> {
    let cfg: ConstructConfig = load(config)?;
    let d = &cfg.distribution;
    let n = cfg.n;
    let ov = cfg.overrides.clone().unwrap_or(json!({}));
    let (con, default_c) = match kind {
        Kind::NaiveAdversary => {
            let o: NaiveOverrides = serde_json::from_value(ov).map_err(|e| cfg_err(format!("overrides: {e}")))?;
            (construct_naive_adversary(d, n, &o)?, (n as f64 - 6.0 * (n as f64).ln()) / n as f64)
        }
        Kind::LinearAdversary => {
            let o: LinearOverrides = serde_json::from_value(ov).map_err(|e| cfg_err(format!("overrides: {e}")))?;
            let c = o.c_s_exponent.unwrap_or(boxsel_core::regimes::THEORY_C_S_EXPONENT);
            (construct_linear_adversary(d, n, &o)?, c)
        }
    };
    let c = cfg.c.unwrap_or(default_c);
    let regime = classify(d, c, &con.profile)?;
    let mut resolved = to_value(&cfg);
    resolved["c"] = json!(c);
    resolved["kind"] = to_value(&kind);

    let mut params = Table::new("construction".to_string(), vec!["parameter", "value"]);
    if let Value::Object(m) = to_value(&con.params) {
        for (k, v) in m {
            let cell: Cell = match v.as_f64() {
                Some(x) if v.is_f64() => x.into(),
                _ => v.to_string().trim_matches('"').to_string().into(),
            };
            params.push(vec![k.into(), cell]);
        }
    }
    let mut tiers = Table::new("profile".to_string(), vec!["count", "sigma"]);
    for &(k, s) in &con.tiers {
        tiers.push(vec![k.into(), s.into()]);
    }
    let mut reg = Table::new(format!("regimes at c = {}", render::sig6(c)), vec!["regime", "member", "pivot", "sigma at pivot", "threshold"]);
    let flag = |b: Option<bool>| b.map_or("n/a".to_string(), |b| b.to_string());
    reg.push(vec!["small".into(), regime.small_noise.to_string().into(), regime.pivot_cn.into(), regime.sigma_cn.into(), regime.small_noise_threshold.into()]);
    reg.push(vec!["small (MHR)".into(), flag(regime.small_noise_mhr).into(), regime.pivot_nc.into(), regime.sigma_nc.into(), regime.small_noise_mhr_threshold.into()]);
    reg.push(vec!["medium".into(), regime.medium_noise.to_string().into(), regime.pivot_nc.into(), regime.sigma_nc.into(), regime.medium_noise_threshold.into()]);
    reg.push(vec!["large".into(), flag(regime.large_noise).into(), regime.pivot_cn.into(), regime.sigma_cn.into(), regime.large_noise_threshold.into()]);
    Ok(Output {
        command: "construct",
        seed: None,
        config: resolved,
        result: json!({ "construction": con, "regime": regime }),
        tables: vec![params, tiers, reg],
        scalar: None,
    })
}

fn posterior(dist: &str, sigma: f64, y: f64, tolerance: f64) -> Res<Output> {
    let d = RewardDistribution::parse_cli(dist)?;
    let q = PosteriorQuery { distribution: d.clone(), sigma, y, tolerance };
    let (value, fallback) = posterior_mean_or_nearest(&d, sigma, y, tolerance)?;
    let mut t = Table::new(None, vec!["posterior_mean", "nearest_support_fallback"]);
    t.push(vec![value.into(), fallback.into()]);
    Ok(Output {
        command: "posterior",
        seed: None,
        config: to_value(&q),
        result: json!({ "posterior_mean": value, "nearest_support_fallback": fallback }),
        tables: vec![t],
        scalar: Some(value),
    })
}

fn order_stats(dist: &str, m: f64) -> Res<Output> {
    let d = RewardDistribution::parse_cli(dist)?;
    if !(m >= 1.0) {
        return Err(cfg_err(format!("m must be ≥ 1, got {m}")));
    }
    let v = max_mean_real(&d, m)?;
    let mut t = Table::new(None, vec!["m", "expected_max"]);
    t.push(vec![m.into(), v.into()]);
    Ok(Output {
        command: "order-stats",
        seed: None,
        config: json!({ "distribution": d, "m": m, "mean": d.mean() }),
        result: json!({ "expected_max": v }),
        tables: vec![t],
        scalar: Some(v),
    })
}

fn emit(cli: &Cli, out: &Output) -> Res<()> {
    let text = out.render(cli.format);
    match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| cfg_err(format!("{}: {e}", dir.display())))?;
            let ext = match cli.format {
                Format::Json => "json",
                Format::Csv => "csv",
                Format::Text => "txt",
            };
            let path = dir.join(format!("{}.{ext}", out.command));
            fs::write(&path, text).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: &Cli) -> Res<bool> {
    let (out, ok) = match &cli.cmd {
        Cmd::Simulate { config, trace } => (simulate(cli, config, trace)?, true),
        Cmd::Separation { name, config } => (separation(cli, name, config)?, true),
        Cmd::Verify { config } => verify(cli, config)?,
        Cmd::Construct { kind, config } => (construct(*kind, config)?, true),
        Cmd::Posterior { dist, sigma, y, tolerance } => (posterior(dist, *sigma, *y, *tolerance)?, true),
        Cmd::OrderStats { dist, m } => (order_stats(dist, *m)?, true),
    };
    emit(cli, &out)?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(2)
        }
    }
}
