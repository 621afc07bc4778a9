//! Noise-regime classification and the two adversarial σ constructions.

use crate::dist::{NoiseProfile, RewardLaw};
use crate::error::{invalid, Error, Result};
use crate::functionals::{max_law_alpha, max_law_beta, mhr_verdict, order_stat_max_mean};
use serde::{Deserialize, Serialize};

/// Membership of a profile in each regime at a given c, with the pivot
/// values and thresholds that decided it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeReport {
    pub n: usize,
    pub c: f64,
    /// 1-based pivot positions round(cn), round(n^c), clamped to [1, n].
    pub pivot_cn: usize,
    pub pivot_nc: usize,
    pub sigma_cn: f64,
    pub sigma_nc: f64,
    pub mhr: bool,
    pub small_noise: bool,
    pub small_noise_threshold: f64,
    /// Absent unless D is MHR.
    pub small_noise_mhr: Option<bool>,
    pub small_noise_mhr_threshold: f64,
    pub medium_noise: bool,
    pub medium_noise_threshold: f64,
    /// Absent (unclassifiable) when round(cn) < 3.
    pub large_noise: Option<bool>,
    pub large_noise_threshold: Option<f64>,
    pub notes: Vec<String>,
}

fn round_count(v: f64, n: usize) -> usize {
    (v.round().max(1.0) as usize).min(n)
}

pub fn large_noise_threshold(law: &dyn RewardLaw, n: usize, cn: usize) -> Result<f64> {
    if cn < 3 {
        return Err(Error::Unclassifiable(format!("round(cn) = {cn} < 3")));
    }
    Ok(order_stat_max_mean(law, cn as u64)? * (n as f64).ln().sqrt() / (cn as f64).ln())
}

pub fn medium_noise_threshold(law: &dyn RewardLaw, n: usize, c: f64) -> Result<f64> {
    let k = round_count((n as f64).powf(c), n);
    Ok(order_stat_max_mean(law, k as u64)? / (18.0 * c * (2.0 * (n as f64).ln()).sqrt()))
}

pub fn classify(law: &dyn RewardLaw, c: f64, profile: &NoiseProfile) -> Result<RegimeReport> {
    if !(c > 0.0 && c <= 1.0) {
        return invalid(format!("c must lie in (0, 1], got {c}"));
    }
    let n = profile.n();
    if n < 2 {
        return invalid("classification needs n ≥ 2");
    }
    let nf = n as f64;
    let ln_n = nf.ln();
    let pivot_cn = round_count(c * nf, n);
    let pivot_nc = round_count(nf.powf(c), n);
    let sigma_cn = profile.pivot(pivot_cn);
    let sigma_nc = profile.pivot(pivot_nc);
    let e_cn = order_stat_max_mean(law, pivot_cn as u64)?;
    let e_nc = order_stat_max_mean(law, pivot_nc as u64)?;
    let mhr = mhr_verdict(law);
    let mut notes = Vec::new();

    let small_noise_threshold = e_cn / (5.0 * (2.0 * ln_n).sqrt());
    let small_noise_mhr_threshold = e_nc / (18.0 * (2.0 * c * ln_n).sqrt());
    let medium_noise_threshold = e_nc / (18.0 * c * (2.0 * ln_n).sqrt());
    let small_noise_mhr = if mhr {
        Some(sigma_nc <= small_noise_mhr_threshold)
    } else {
        notes.push("small_noise_mhr not reported: distribution is not MHR".into());
        None
    };
    let (large_noise, large_noise_threshold) = if pivot_cn < 3 {
        notes.push(format!("large_noise unclassifiable: round(cn) = {pivot_cn} < 3"));
        (None, None)
    } else {
        let t = e_cn * ln_n.sqrt() / (pivot_cn as f64).ln();
        (Some(sigma_cn > t), Some(t))
    };
    Ok(RegimeReport {
        n,
        c,
        pivot_cn,
        pivot_nc,
        sigma_cn,
        sigma_nc,
        mhr,
        small_noise: sigma_cn <= small_noise_threshold,
        small_noise_threshold,
        small_noise_mhr,
        small_noise_mhr_threshold,
        medium_noise: sigma_nc > medium_noise_threshold,
        medium_noise_threshold,
        large_noise,
        large_noise_threshold,
        notes,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NaiveOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_b: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_b: Option<f64>,
}

/// Any field left empty takes the construction's own value. `c_s_exponent`
/// and `alpha_exponent` replace 1/5626 and 1/10000; `c_s` and the σ values
/// replace the derived quantities outright.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_s: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_s_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_exponent: Option<f64>,
}

pub const THEORY_C_S_EXPONENT: f64 = 1.0 / 5626.0;
pub const THEORY_ALPHA_EXPONENT: f64 = 1.0 / 10000.0;
pub const SCALED_C_S_EXPONENT: f64 = 0.3;
pub const SCALED_ALPHA_EXPONENT: f64 = 0.5;

impl LinearOverrides {
    /// Desk-scale constants: c_s = round(n^0.3), α subscript n^0.5.
    pub fn scaled() -> Self {
        Self { c_s_exponent: Some(SCALED_C_S_EXPONENT), alpha_exponent: Some(SCALED_ALPHA_EXPONENT), ..Self::default() }
    }
    fn is_theory(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConstructionParams {
    NaiveAdversary {
        c_b: usize,
        beta: Option<f64>,
        sigma_b: f64,
        overrides: NaiveOverrides,
    },
    LinearAdversary {
        c_s: usize,
        c_s_exponent: f64,
        alpha_exponent: f64,
        sigma_s: f64,
        sigma_b: f64,
        alpha: Option<f64>,
        theta_star: f64,
        /// σ_b > θ*·σ_s
        sigmas_separated: bool,
        constants: &'static str,
        overrides: LinearOverrides,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdversarialConstruction {
    pub n: usize,
    pub params: ConstructionParams,
    /// (count, σ) runs in ascending σ.
    pub tiers: Vec<(usize, f64)>,
    #[serde(skip)]
    pub profile: NoiseProfile,
}

fn check_sigma(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        invalid(format!("{name} override must be finite and ≥ 0, got {v}"))
    }
}

/// n − c_b exact boxes and c_b boxes at σ_b = 6·β_{n²}(D_{n:n})·√ln n,
/// c_b = round(6 ln n).
pub fn construct_naive_adversary(
    law: &dyn RewardLaw,
    n: usize,
    overrides: &NaiveOverrides,
) -> Result<AdversarialConstruction> {
    if n < 2 {
        return invalid("naive adversary needs n ≥ 2");
    }
    let nf = n as f64;
    let c_b = overrides.c_b.unwrap_or_else(|| (6.0 * nf.ln()).round() as usize);
    if c_b >= n {
        return Err(Error::Construction(format!("c_b = {c_b} ≥ n = {n}: construction undefined")));
    }
    if c_b == 0 {
        return invalid("c_b must be ≥ 1");
    }
    let (beta, sigma_b) = match overrides.sigma_b {
        Some(s) => {
            check_sigma("sigma_b", s)?;
            (None, s)
        }
        None => {
            let beta = max_law_beta(law, nf, nf * nf)?;
            (Some(beta), 6.0 * beta * nf.ln().sqrt())
        }
    };
    let tiers = vec![(n - c_b, 0.0), (c_b, sigma_b)];
    Ok(AdversarialConstruction {
        n,
        profile: NoiseProfile::tiers(&tiers)?,
        tiers,
        params: ConstructionParams::NaiveAdversary { c_b, beta, sigma_b, overrides: overrides.clone() },
    })
}

/// One exact box, c_s boxes at σ_s = 37/(9√2)·E[D_{c_s:c_s}]/√ln n and the
/// rest at σ_b = 6·α_{n^a}(D_{n−c_s:n−c_s})·√ln n.
pub fn construct_linear_adversary(
    law: &dyn RewardLaw,
    n: usize,
    overrides: &LinearOverrides,
) -> Result<AdversarialConstruction> {
    if n < 3 {
        return invalid("linear adversary needs n ≥ 3");
    }
    if !mhr_verdict(law) {
        return invalid("linear adversary requires an MHR distribution");
    }
    let nf = n as f64;
    let ln_n = nf.ln();
    let c_s_exponent = overrides.c_s_exponent.unwrap_or(THEORY_C_S_EXPONENT);
    let alpha_exponent = overrides.alpha_exponent.unwrap_or(THEORY_ALPHA_EXPONENT);
    if !(c_s_exponent > 0.0 && c_s_exponent < 1.0) || !(alpha_exponent > 0.0 && alpha_exponent <= 1.0) {
        return invalid("exponent overrides must lie in (0, 1)");
    }
    let c_s = overrides.c_s.unwrap_or_else(|| (nf.powf(c_s_exponent).round() as usize).max(1));
    if c_s == 0 {
        return invalid("c_s must be ≥ 1");
    }
    if c_s + 2 > n {
        return Err(Error::Construction(format!("c_s + 2 = {} > n = {n}: construction undefined", c_s + 2)));
    }
    let sigma_s = match overrides.sigma_s {
        Some(s) => {
            check_sigma("sigma_s", s)?;
            s
        }
        None => 37.0 / (9.0 * 2f64.sqrt()) * order_stat_max_mean(law, c_s as u64)? / ln_n.sqrt(),
    };
    let (alpha, sigma_b) = match overrides.sigma_b {
        Some(s) => {
            check_sigma("sigma_b", s)?;
            (None, s)
        }
        None => {
            let a = max_law_alpha(law, (n - c_s) as f64, nf.powf(alpha_exponent))?;
            (Some(a), 6.0 * a * ln_n.sqrt())
        }
    };
    let theta_star = (ln_n / 2.0).sqrt();
    let tiers = vec![(1, 0.0), (c_s, sigma_s), (n - c_s - 1, sigma_b)];
    Ok(AdversarialConstruction {
        n,
        profile: NoiseProfile::tiers(&tiers)?,
        tiers,
        params: ConstructionParams::LinearAdversary {
            c_s,
            c_s_exponent,
            alpha_exponent,
            sigma_s,
            sigma_b,
            alpha,
            theta_star,
            sigmas_separated: sigma_b > theta_star * sigma_s,
            constants: if overrides.is_theory() {
                "theory"
            } else if *overrides == LinearOverrides::scaled() {
                "scaled"
            } else {
                "custom"
            },
            overrides: overrides.clone(),
        },
    })
}
