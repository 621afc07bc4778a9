use approx::assert_relative_eq;
use boxsel_core::config::{Benchmark, ExperimentSpec, NoiseSpec};
use boxsel_core::dist::{NoiseProfile, RewardDistribution as D};
use boxsel_core::functionals::*;
use boxsel_core::policies::PolicySpec;
use boxsel_core::posterior::*;
use boxsel_core::regimes::*;
use boxsel_core::simlab::estimate_reward;

// plain midpoint rule, deliberately independent of the library's quadrature
fn midpoint(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 { hi = mid } else { lo = mid }
    }
    0.5 * (lo + hi)
}

#[test]
fn exponential_max_is_harmonic() {
    let d = D::exponential(1.0).unwrap();
    for m in [1u64, 2, 10, 100, 1000] {
        let h: f64 = (1..=m).map(|k| 1.0 / k as f64).sum();
        assert_relative_eq!(order_stat_max_mean(&d, m).unwrap(), h, max_relative = 1e-9);
    }
    let d = D::exponential(2.5).unwrap();
    assert_relative_eq!(order_stat_max_mean(&d, 3).unwrap(), (1.0 + 0.5 + 1.0 / 3.0) / 2.5, max_relative = 1e-9);
}

#[test]
fn uniform_and_halfnormal_max() {
    let u = D::uniform(0.0, 1.0).unwrap();
    for m in [1u64, 4, 50] {
        assert_relative_eq!(order_stat_max_mean(&u, m).unwrap(), m as f64 / (m as f64 + 1.0), max_relative = 1e-9);
    }
    let hn = D::half_normal(1.0).unwrap();
    for m in [2u64, 7, 30] {
        // statrs erf: an implementation independent of the library's libm path
        let f = |x: f64| statrs::function::erf::erf(x / 2f64.sqrt());
        let oracle = midpoint(|x| 1.0 - f(x).powi(m as i32), 0.0, 12.0, 200_000);
        assert_relative_eq!(order_stat_max_mean(&hn, m).unwrap(), oracle, max_relative = 1e-8);
    }
}

#[test]
fn alpha_and_beta_for_exponential() {
    let d = D::exponential(1.0).unwrap();
    for m in [2.0, 10.0, 1e4, 1e8] {
        assert_relative_eq!(alpha_quantile(&d, m).unwrap(), f64::ln(m), max_relative = 1e-10);
        // E[X; X > b] = (b + 1)e^{−b} = 1/m
        let b = bisect(|b| (b + 1.0) * (-b).exp() - 1.0 / m, 0.0, 60.0);
        assert_relative_eq!(beta_threshold(&d, m).unwrap(), b, max_relative = 1e-7);
    }
}

#[test]
fn posterior_means_match_brute_force() {
    let cases = [(D::exponential(1.0).unwrap(), 1.0), (D::half_normal(1.0).unwrap(), 0.0), (D::uniform(0.0, 2.0).unwrap(), 2.0)];
    for (d, _) in &cases {
        for (sigma, y) in [(0.5, 0.3), (1.0, 2.0), (3.0, -1.0), (0.2, 4.0)] {
            let top = 40.0;
            let pdf = |x: f64| match d {
                D::Exponential { rate } => rate * (-rate * x).exp(),
                D::HalfNormal { scale } => (2.0 / std::f64::consts::PI).sqrt() / scale * (-0.5 * (x / scale).powi(2)).exp(),
                D::Uniform { low, high } => if x >= *low && x <= *high { 1.0 / (high - low) } else { 0.0 },
                _ => unreachable!(),
            };
            let w = |x: f64| pdf(x) * (-0.5 * ((y - x) / sigma).powi(2)).exp();
            let num = midpoint(|x| x * w(x), 0.0, top, 400_000);
            let den = midpoint(w, 0.0, top, 400_000);
            let got = posterior_mean_law(d, sigma, y, 1e-12).unwrap();
            assert_relative_eq!(got, num / den, max_relative = 1e-6);
        }
    }
    assert_relative_eq!(posterior_mean_halfnormal(1.0, 0.0), 0.5641895835477563, max_relative = 1e-12);
}

#[test]
fn zero_noise_is_small_noise() {
    let d = D::exponential(1.0).unwrap();
    let r = classify(&d, 0.5, &NoiseProfile::new(vec![0.0; 100]).unwrap()).unwrap();
    assert!(r.small_noise && !r.medium_noise && r.mhr);
    assert_eq!(r.small_noise_mhr, Some(true));
    assert_eq!(r.large_noise, Some(false));
    assert_eq!((r.pivot_cn, r.pivot_nc), (50, 10));
}

#[test]
fn huge_noise_is_large_noise() {
    let d = D::half_normal(1.0).unwrap();
    let mut s = vec![0.0; 3];
    s.extend(vec![1e6; 997]);
    let r = classify(&d, 0.004, &NoiseProfile::new(s).unwrap()).unwrap();
    assert_eq!(r.pivot_cn, 4);
    assert_eq!(r.large_noise, Some(true));
    assert!(!r.small_noise);
    // threshold: E[D_4]·√ln n / ln 4
    let e4 = order_stat_max_mean(&d, 4).unwrap();
    assert_relative_eq!(r.large_noise_threshold.unwrap(), e4 * (1000f64.ln()).sqrt() / 4f64.ln(), max_relative = 1e-12);
}

#[test]
fn tiny_pivot_is_unclassifiable() {
    let d = D::exponential(1.0).unwrap();
    let r = classify(&d, 0.001, &NoiseProfile::new(vec![1.0; 1000]).unwrap()).unwrap();
    assert_eq!(r.large_noise, None);
    assert!(!r.notes.is_empty());
}

#[test]
fn naive_adversary_layout() {
    let d = D::exponential(1.0).unwrap();
    let c = construct_naive_adversary(&d, 1000, &NaiveOverrides::default()).unwrap();
    // 6 ln 1000 = 41.45
    assert_eq!(c.tiers[0], (959, 0.0));
    assert_eq!(c.tiers[1].0, 41);
    let b = beta_threshold(&d, 1e6).unwrap();
    let want = 6.0 * max_law_beta(&d, 1000.0, 1e6).unwrap() * 1000f64.ln().sqrt();
    assert_relative_eq!(c.tiers[1].1, want, max_relative = 1e-12);
    assert!(b > 0.0);
}

fn spec(d: D, noise: NoiseSpec, policies: Vec<PolicySpec>, trials: u64) -> ExperimentSpec {
    ExperimentSpec { distribution: d, noise, policies, trials, seed: 9, benchmarks: vec![Benchmark::Prophet, Benchmark::Random], c_grid: None }
}

#[test]
fn noiseless_naive_recovers_the_maximum() {
    let s = spec(D::exponential(1.0).unwrap(), NoiseSpec::Uniform { n: 50, sigma: 0.0 }, vec![PolicySpec::Naive {}], 20_000);
    let r = estimate_reward(&s, None).unwrap();
    let h: f64 = (1..=50).map(|k| 1.0 / k as f64).sum();
    let naive = r.get("naive").unwrap();
    assert!((naive.mean - h).abs() < 4.0 * naive.stderr);
    assert_eq!(naive.mean, r.get("prophet").unwrap().mean);
    let rnd = r.get("random").unwrap();
    assert!((rnd.mean - 1.0).abs() < 4.0 * rnd.stderr);
}

#[test]
fn random_policy_matches_mean() {
    let s = spec(D::half_normal(2.0).unwrap(), NoiseSpec::Uniform { n: 20, sigma: 3.0 }, vec![PolicySpec::Random {}], 40_000);
    let r = estimate_reward(&s, None).unwrap();
    let e = r.get("random").unwrap();
    assert!((e.mean - 2.0 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 4.0 * e.stderr);
}

#[test]
fn naive_is_fooled_on_two_point() {
    let n = 500;
    let d = D::two_point(n as f64, 1.0 / n as f64).unwrap();
    let s = spec(d, NoiseSpec::NaiveAdversary { n, overrides: NaiveOverrides::default() }, vec![PolicySpec::Naive {}], 20_000);
    let r = estimate_reward(&s, None).unwrap();
    let e = r.get("naive").unwrap();
    assert!(e.mean <= 4.0 + 3.0 * e.stderr, "{} ± {}", e.mean, e.stderr);
    assert!(r.get("prophet").unwrap().mean > 100.0);
}

#[test]
fn duplicate_policies_are_paired() {
    let s = spec(
        D::exponential(1.0).unwrap(),
        NoiseSpec::Tiers { tiers: vec![boxsel_core::config::Tier { count: 10, sigma: 0.5 }, boxsel_core::config::Tier { count: 30, sigma: 4.0 }] },
        vec![PolicySpec::LinearFixed { c: 1.0 }, PolicySpec::LinearFixed { c: 1.0 }],
        5000,
    );
    let r = estimate_reward(&s, None).unwrap();
    let (a, b) = (&r.estimates[0], &r.estimates[1]);
    assert_eq!(a.mean, b.mean);
    assert_eq!(r.covariance[0][0], r.covariance[0][1]);
    assert_eq!(r.covariance[0][0], r.covariance[1][1]);
}
