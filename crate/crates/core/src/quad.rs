//! Adaptive Gauss–Kronrod (G7/K15) quadrature with a global error heap.
//!
//! Integrands are vector valued so a numerator and its normaliser share one
//! set of abscissae; the interval to bisect next is the one with the largest
//! error in any component.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the odd Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-14, rel: 1e-10, max_intervals: 2000 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Estimate<const K: usize> {
    pub value: [f64; K],
    pub error: [f64; K],
    pub intervals: usize,
}

struct Panel<const K: usize> {
    a: f64,
    b: f64,
    value: [f64; K],
    error: [f64; K],
    // largest error relative to the running per-component target
    key: f64,
}

impl<const K: usize> PartialEq for Panel<K> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl<const K: usize> Eq for Panel<K> {}
impl<const K: usize> PartialOrd for Panel<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const K: usize> Ord for Panel<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key)
    }
}

fn kronrod<const K: usize, F: FnMut(f64) -> [f64; K]>(f: &mut F, a: f64, b: f64) -> ([f64; K], [f64; K]) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = [0.0; K];
    let mut rg = [0.0; K];
    for k in 0..K {
        rk[k] = WGK[7] * fc[k];
        rg[k] = WG[3] * fc[k];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for k in 0..K {
            let s = f1[k] + f2[k];
            rk[k] += WGK[j] * s;
            if j % 2 == 1 {
                rg[k] += WG[j / 2] * s;
            }
        }
    }
    let mut val = [0.0; K];
    let mut err = [0.0; K];
    for k in 0..K {
        val[k] = rk[k] * h;
        err[k] = ((rk[k] - rg[k]) * h).abs();
    }
    (val, err)
}

fn priority<const K: usize>(err: &[f64; K], scale: &[f64; K]) -> f64 {
    (0..K).map(|k| err[k] / scale[k]).fold(0.0, f64::max)
}

/// Integrates `f` over `[points[0], points[last]]`, with the interior points
/// treated as panel boundaries (kinks, atoms of a density, a mode).
pub fn integrate_vec<const K: usize, F>(mut f: F, points: &[f64], tol: Tolerance) -> Result<Estimate<K>>
where
    F: FnMut(f64) -> [f64; K],
{
    let mut pts: Vec<f64> = points.iter().copied().filter(|x| x.is_finite()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    if pts.len() < 2 {
        return Ok(Estimate { value: [0.0; K], error: [0.0; K], intervals: 0 });
    }
    let mut panels = Vec::with_capacity(pts.len() - 1);
    for w in pts.windows(2) {
        let (v, e) = kronrod(&mut f, w[0], w[1]);
        panels.push(Panel { a: w[0], b: w[1], value: v, error: e, key: 0.0 });
    }
    let mut val = [0.0; K];
    let mut err = [0.0; K];
    for p in &panels {
        for k in 0..K {
            val[k] += p.value[k];
            err[k] += p.error[k];
        }
    }
    let target = |val: &[f64; K]| {
        let mut s = [0.0; K];
        for k in 0..K {
            s[k] = tol.abs.max(tol.rel * val[k].abs()).max(f64::MIN_POSITIVE);
        }
        s
    };
    let mut scale = target(&val);
    let mut heap: BinaryHeap<Panel<K>> = panels
        .into_iter()
        .map(|mut p| {
            p.key = priority(&p.error, &scale);
            p
        })
        .collect();
    let mut count = heap.len();
    loop {
        if (0..K).all(|k| err[k] <= scale[k]) {
            break;
        }
        if count >= tol.max_intervals {
            // accept only if the shortfall is round-off sized
            if (0..K).all(|k| err[k] <= 1e3 * scale[k].max(1e-15 * val[k].abs())) {
                break;
            }
            return Err(Error::Quadrature(format!(
                "no convergence after {count} panels (error {:?} vs target {:?})",
                err, scale
            )));
        }
        let p = heap.pop().expect("heap never empties");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // panel at machine resolution: keep its estimate as final
            heap.push(Panel { key: 0.0, ..p });
            if heap.iter().all(|q| q.key == 0.0) {
                break;
            }
            continue;
        }
        let (v1, e1) = kronrod(&mut f, p.a, m);
        let (v2, e2) = kronrod(&mut f, m, p.b);
        for k in 0..K {
            val[k] += v1[k] + v2[k] - p.value[k];
            err[k] += e1[k] + e2[k] - p.error[k];
        }
        scale = target(&val);
        heap.push(Panel { a: p.a, b: m, value: v1, error: e1, key: priority(&e1, &scale) });
        heap.push(Panel { a: m, b: p.b, value: v2, error: e2, key: priority(&e2, &scale) });
        count += 1;
    }
    // re-sum from panels so drift from incremental updates is removed
    let mut value = [0.0; K];
    let mut error = [0.0; K];
    let mut ps: Vec<_> = heap.into_vec();
    ps.sort_by(|x, y| x.a.total_cmp(&y.a));
    for p in &ps {
        for k in 0..K {
            value[k] += p.value[k];
            error[k] += p.error[k];
        }
    }
    Ok(Estimate { value, error, intervals: count })
}

/// Scalar convenience wrapper over [`integrate_vec`].
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, points: &[f64], tol: Tolerance) -> Result<(f64, f64)> {
    let e = integrate_vec::<1, _>(|x| [f(x)], points, tol)?;
    Ok((e.value[0], e.error[0]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        // K15 integrates degree ≤ 22 exactly
        let (v, _) = integrate(|x| x.powi(10), &[0.0, 1.0], Tolerance::default()).unwrap();
        assert!((v - 1.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_mass() {
        let (v, _) = integrate(crate::normal::pdf, &[-12.0, 0.0, 12.0], Tolerance::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-13);
    }

    #[test]
    fn sqrt_singularity_refines() {
        let tol = Tolerance { abs: 1e-12, rel: 1e-10, max_intervals: 5000 };
        let (v, _) = integrate(|x| x.sqrt(), &[0.0, 1.0], tol).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn vector_components_share_nodes() {
        let e = integrate_vec::<2, _>(|x| [(-x).exp(), x * (-x).exp()], &[0.0, 40.0], Tolerance::default()).unwrap();
        assert!((e.value[0] - 1.0).abs() < 1e-12);
        assert!((e.value[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kink_at_breakpoint() {
        let (v, _) = integrate(|x: f64| x.abs(), &[-1.0, 0.0, 2.0], Tolerance::default()).unwrap();
        assert!((v - 2.5).abs() < 1e-14);
    }
}
