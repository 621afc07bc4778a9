//! Standard-normal helpers. Everything goes through `erfc` so the far tails
//! keep relative accuracy instead of cancelling against 1.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

#[inline]
pub fn pdf(t: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * t * t).exp()
}

#[inline]
pub fn ln_pdf(t: f64) -> f64 {
    -0.5 * t * t - LN_SQRT_2PI
}

/// Φ(t).
#[inline]
pub fn cdf(t: f64) -> f64 {
    0.5 * erfc(-t * FRAC_1_SQRT_2)
}

/// 1 − Φ(t), accurate in the upper tail.
#[inline]
pub fn sf(t: f64) -> f64 {
    0.5 * erfc(t * FRAC_1_SQRT_2)
}

/// Mills ratio (1 − Φ(t))/φ(t). Continued fraction once erfc would underflow
/// or lose digits.
pub fn mills_ratio(t: f64) -> f64 {
    if t < 8.0 {
        return sf(t) / pdf(t);
    }
    // Lentz evaluation of 1/(t+ 1/(t+ 2/(t+ 3/(t+ ...))))
    let tiny = 1e-300;
    let mut f = t;
    let mut c = t;
    let mut d = 0.0;
    for k in 1..200 {
        let a = k as f64;
        d = t + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = t + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// 1/M(t) − t with M the Mills ratio; equals φ(t)/(1 − Φ(t)) − t without
/// the cancellation that direct evaluation suffers for large t.
pub fn inverse_mills_excess(t: f64) -> f64 {
    if t < 8.0 {
        return pdf(t) / sf(t) - t;
    }
    // 1/M(t) = t + 1/(t + 2/(t + 3/(t + …)))
    let mut r = t;
    for k in (2..=120).rev() {
        r = t + k as f64 / r;
    }
    1.0 / r
}

/// ln(1 − Φ(t)).
pub fn ln_sf(t: f64) -> f64 {
    if t < 8.0 {
        sf(t).ln()
    } else {
        ln_pdf(t) + mills_ratio(t).ln()
    }
}

/// ln Φ(t).
pub fn ln_cdf(t: f64) -> f64 {
    ln_sf(-t)
}

/// Φ⁻¹(p) for p in (0, 1).
pub fn quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        return upper_quantile(1.0 - p);
    }
    let mut x = -SQRT_2 * erfc_inv(2.0 * p);
    // the inverse is only good to ~1e−11; polish against erfc
    for _ in 0..2 {
        let r = (cdf(x) - p) / pdf(x);
        if r.is_finite() {
            x -= r / (1.0 + 0.5 * x * r);
        }
    }
    x
}

/// t with 1 − Φ(t) = q; keeps precision for tiny q.
pub fn upper_quantile(q: f64) -> f64 {
    if q <= 0.0 {
        return f64::INFINITY;
    }
    if q >= 1.0 {
        return f64::NEG_INFINITY;
    }
    let mut x = SQRT_2 * erfc_inv(2.0 * q);
    for _ in 0..2 {
        // Halley step on sf(x) = q
        let r = (sf(x) - q) / -pdf(x);
        if r.is_finite() {
            x -= r / (1.0 + 0.5 * x * r);
        }
    }
    x
}

/// Lower and upper Gordon bounds on Φ(t) for t > 0.
pub fn gordon_bounds(t: f64) -> (f64, f64) {
    let phi = pdf(t);
    (1.0 - phi / t, 1.0 - t * phi / (t * t + 1.0))
}

/// Pr[max of m iid N(0, σ²) ≤ t] = Φ(t/σ)^m.
pub fn gaussian_max_tail(m: u64, sigma: f64, t: f64) -> f64 {
    gaussian_max_tail_ln_count((m as f64).ln(), sigma, t)
}

/// Same as [`gaussian_max_tail`] with the count given as ln m, for counts
/// that do not fit in any integer type.
pub fn gaussian_max_tail_ln_count(ln_m: f64, sigma: f64, t: f64) -> f64 {
    let m = ln_m.exp();
    let z = t / sigma;
    if z > 0.0 {
        let lq = ln_sf(z);
        if lq < -30.0 {
            return (-(ln_m + lq).exp()).exp();
        }
        // m·ln(1 − q) with q tiny: use ln_1p for accuracy
        let q = sf(z);
        (m * (-q).ln_1p()).exp()
    } else {
        (m * ln_cdf(z)).exp()
    }
}

/// 1 − Φ(t/σ)^m computed without cancellation.
pub fn gaussian_max_exceed_ln_count(ln_m: f64, sigma: f64, t: f64) -> f64 {
    let m = ln_m.exp();
    let z = t / sigma;
    if z > 0.0 {
        let lq = ln_sf(z);
        // q < e⁻³⁰: ln(1 − q) = −q in double precision, and m may overflow
        if lq < -30.0 {
            return -(-(ln_m + lq).exp()).exp_m1();
        }
        // ln(1−q) ≈ −q when q underflows as a plain number
        let l1 = if lq < -700.0 { -lq.exp() } else { (-lq.exp()).ln_1p() };
        -(m * l1).exp_m1()
    } else {
        -(m * ln_cdf(z)).exp_m1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        // scipy.stats.norm.cdf
        assert!((cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((cdf(-2.5) - 0.006_209_665_325_776_132).abs() < 1e-16);
        assert!((sf(10.0) - 7.619_853_024_160_527e-24).abs() < 1e-36);
        assert_eq!(cdf(0.0), 0.5);
    }

    #[test]
    fn mills_ratio_continuity_at_switch() {
        let a = sf(7.999_999) / pdf(7.999_999);
        let b = mills_ratio(8.000_001);
        assert!((a - b).abs() / a < 1e-6);
        // asymptotic 1/t − 1/t³ + 3/t⁵
        let t = 40.0_f64;
        let asym = 1.0 / t - 1.0 / t.powi(3) + 3.0 / t.powi(5) - 15.0 / t.powi(7);
        assert!((mills_ratio(t) - asym).abs() / asym < 1e-10);
    }

    #[test]
    fn quantile_round_trip() {
        for &p in &[1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999] {
            let x = quantile(p);
            assert!((cdf(x) - p).abs() / p < 1e-10, "p={p}");
        }
        let t = upper_quantile(1e-20);
        assert!((sf(t) / 1e-20 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gordon_examples() {
        let (lo, hi) = gordon_bounds(1.0);
        let phi1 = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((lo - (1.0 - phi1)).abs() < 1e-15);
        assert!((hi - (1.0 - phi1 / 2.0)).abs() < 1e-15);
        let (lo, hi) = gordon_bounds(8.0);
        assert!((1.0 - lo) < 1e-14 && (1.0 - hi) < 1e-14);
        let (lo, hi) = gordon_bounds(0.5);
        assert!(lo < cdf(0.5) && cdf(0.5) < hi);
    }

    #[test]
    fn max_tail_examples() {
        assert!((gaussian_max_tail(1, 1.0, 0.0) - 0.5).abs() < 1e-15);
        assert!((gaussian_max_tail(1, 1.0, 1.0) - 0.841_345).abs() < 1e-6);
        assert!((gaussian_max_tail(5, 2.0, 0.0) - 0.03125).abs() < 1e-15);
        let p = gaussian_max_tail(1000, 1.0, 3.0);
        assert!((p + gaussian_max_exceed_ln_count(1000f64.ln(), 1.0, 3.0) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn max_tail_astronomical_counts() {
        // c = e^{888.7} draws at t = 42.7: m·q ≈ e^{−29.3}
        let ln_m = 5e6 / 5626.0;
        let t = (2.5e6f64).sqrt() / 37.0;
        let v = gaussian_max_exceed_ln_count(ln_m, 1.0, t);
        let approx = (ln_m + ln_sf(t)).exp();
        assert!(v.is_finite() && (v / approx - 1.0).abs() < 1e-9);
        let w = gaussian_max_tail_ln_count(ln_m, 1.0, t);
        assert!((w + v - 1.0).abs() < 1e-15);
    }
}
