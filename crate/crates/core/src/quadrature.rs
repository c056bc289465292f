//! Globally adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! Intervals are bisected in order of decreasing error estimate until the
//! summed estimate meets `max(abs_tol, rel_tol * |I|)`. The integrand may be
//! vector valued; the error of a panel is the largest componentwise
//! `|K15 - G7|`, which is deliberately conservative.
//!
//! Semi-infinite ranges are mapped onto (0, 1]: either `x = a + (1 - u)/u`
//! or, when the algebraic decay rate of the integrand is known, the power map
//! `x = a u^{-p}` which removes the endpoint singularity the first map leaves
//! behind for slowly decaying tails.

use crate::error::{LabError, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
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
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Change of variables applied to one segment of the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Map {
    Identity,
    /// u in (0, 1] maps to x = a + (1 - u)/u.
    Tail {
        a: f64,
    },
    /// u in (0, 1] maps to x = a u^{-p}; requires a > 0.
    PowerTail {
        a: f64,
        p: f64,
    },
}

impl Map {
    #[inline]
    fn apply(self, u: f64) -> (f64, f64) {
        match self {
            Map::Identity => (u, 1.0),
            Map::Tail { a } => {
                let inv = 1.0 / u;
                (a + (1.0 - u) * inv, inv * inv)
            }
            Map::PowerTail { a, p } => {
                let x = a * u.powf(-p);
                (x, p * x / u)
            }
        }
    }
}

/// One piece of the integration domain, expressed in mapped coordinates.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub map: Map,
}

impl Segment {
    pub fn finite(a: f64, b: f64) -> Self {
        Self {
            lo: a,
            hi: b,
            map: Map::Identity,
        }
    }

    pub fn tail(a: f64) -> Self {
        Self {
            lo: 0.0,
            hi: 1.0,
            map: Map::Tail { a },
        }
    }

    /// Tail [a, ∞) for an integrand decaying like x^{-decay}, decay > 1.
    pub fn power_tail(a: f64, decay: f64) -> Self {
        debug_assert!(a > 0.0);
        // Makes the mapped integrand behave like u^1 near u = 0.
        let p = if decay > 1.0 {
            (2.0 / (decay - 1.0)).clamp(0.5, 8.0)
        } else {
            8.0
        };
        Self {
            lo: 0.0,
            hi: 1.0,
            map: Map::PowerTail { a, p },
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadEstimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct VecEstimate {
    pub value: Vec<f64>,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-10,
            max_intervals: 4000,
        }
    }
}

struct Panel {
    lo: f64,
    hi: f64,
    map: Map,
    value: Vec<f64>,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

impl Quadrature {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(
        &self,
        mut f: F,
        a: f64,
        b: f64,
    ) -> Result<QuadEstimate> {
        self.integrate_segments(&mut f, &[Segment::finite(a, b)])
    }

    /// ∫ over [points[0], points[last]] with the interior points as forced breaks.
    pub fn integrate_points<F: FnMut(f64) -> f64>(
        &self,
        mut f: F,
        points: &[f64],
    ) -> Result<QuadEstimate> {
        let segs: Vec<Segment> = points
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| Segment::finite(w[0], w[1]))
            .collect();
        self.integrate_segments(&mut f, &segs)
    }

    /// ∫_a^∞ f.
    pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(
        &self,
        mut f: F,
        a: f64,
    ) -> Result<QuadEstimate> {
        self.integrate_segments(&mut f, &[Segment::tail(a)])
    }

    pub fn integrate_segments<F: FnMut(f64) -> f64>(
        &self,
        f: &mut F,
        segments: &[Segment],
    ) -> Result<QuadEstimate> {
        let est = self.integrate_vec_segments(
            1,
            |x, out: &mut [f64]| {
                out[0] = f(x);
            },
            segments,
        )?;
        Ok(QuadEstimate {
            value: est.value[0],
            error: est.error,
            evaluations: est.evaluations,
        })
    }

    pub fn integrate_vec<F: FnMut(f64, &mut [f64])>(
        &self,
        dim: usize,
        f: F,
        a: f64,
        b: f64,
    ) -> Result<VecEstimate> {
        self.integrate_vec_segments(dim, f, &[Segment::finite(a, b)])
    }

    /// Vector-valued integral over a union of (possibly mapped) segments.
    pub fn integrate_vec_segments<F: FnMut(f64, &mut [f64])>(
        &self,
        dim: usize,
        mut f: F,
        segments: &[Segment],
    ) -> Result<VecEstimate> {
        let mut scratch = vec![0.0; dim];
        let mut evaluations = 0usize;
        let mut heap = BinaryHeap::new();
        for seg in segments {
            if seg.hi > seg.lo {
                let p = kronrod_panel(&mut f, seg.lo, seg.hi, seg.map, dim, &mut scratch);
                evaluations += 15;
                heap.push(p);
            }
        }
        let (lo_all, hi_all) = segments
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |acc, s| {
                (acc.0.min(s.lo), acc.1.max(s.hi))
            });
        if heap.is_empty() {
            return Ok(VecEstimate {
                value: vec![0.0; dim],
                error: 0.0,
                evaluations,
            });
        }

        let mut frozen_error = 0.0;
        let mut frozen_value = vec![0.0; dim];
        loop {
            let mut total = frozen_value.clone();
            let mut err = frozen_error;
            for p in heap.iter() {
                for (t, v) in total.iter_mut().zip(&p.value) {
                    *t += v;
                }
                err += p.error;
            }
            let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !err.is_finite() || total.iter().any(|v| !v.is_finite()) {
                return Err(LabError::Quadrature {
                    a: lo_all,
                    b: hi_all,
                    error: err,
                    evaluations,
                });
            }
            if err <= self.abs_tol.max(self.rel_tol * scale) {
                return Ok(VecEstimate {
                    value: total,
                    error: err,
                    evaluations,
                });
            }
            if heap.len() >= self.max_intervals {
                return Err(LabError::Quadrature {
                    a: lo_all,
                    b: hi_all,
                    error: err,
                    evaluations,
                });
            }
            let Some(worst) = heap.pop() else {
                return Err(LabError::Quadrature {
                    a: lo_all,
                    b: hi_all,
                    error: err,
                    evaluations,
                });
            };
            let mid = 0.5 * (worst.lo + worst.hi);
            if mid <= worst.lo || mid >= worst.hi {
                // Interval at machine resolution: keep its contribution as final.
                frozen_error += worst.error;
                for (t, v) in frozen_value.iter_mut().zip(&worst.value) {
                    *t += v;
                }
                continue;
            }
            let left = kronrod_panel(&mut f, worst.lo, mid, worst.map, dim, &mut scratch);
            let right = kronrod_panel(&mut f, mid, worst.hi, worst.map, dim, &mut scratch);
            evaluations += 30;
            heap.push(left);
            heap.push(right);
        }
    }
}

fn kronrod_panel<F: FnMut(f64, &mut [f64])>(
    f: &mut F,
    lo: f64,
    hi: f64,
    map: Map,
    dim: usize,
    scratch: &mut [f64],
) -> Panel {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];

    let mut eval = |u: f64, scratch: &mut [f64]| {
        let (x, jac) = map.apply(u);
        f(x, scratch);
        for s in scratch.iter_mut() {
            let v = *s * jac;
            // A vanishing integrand at an overflowing abscissa contributes nothing.
            *s = if v.is_finite() || *s != 0.0 { v } else { 0.0 };
        }
    };

    eval(center, scratch);
    for d in 0..dim {
        kron[d] += WGK[7] * scratch[d];
        gauss[d] += WG[3] * scratch[d];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        for &u in &[center - dx, center + dx] {
            eval(u, scratch);
            for d in 0..dim {
                kron[d] += WGK[j] * scratch[d];
                if j % 2 == 1 {
                    gauss[d] += WG[j / 2] * scratch[d];
                }
            }
        }
    }
    let mut error = 0.0f64;
    for d in 0..dim {
        kron[d] *= half;
        gauss[d] *= half;
        error = error.max((kron[d] - gauss[d]).abs());
    }
    Panel {
        lo,
        hi,
        map,
        value: kron,
        error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let q = Quadrature::default();
        let r = q.integrate(|x| 3.0 * x * x, 0.0, 2.0).unwrap();
        assert!((r.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_finite() {
        let q = Quadrature::default();
        let r = q.integrate(|x| (10.0 * x).sin(), 0.0, PI).unwrap();
        assert!(r.value.abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn semi_infinite_exponential() {
        let q = Quadrature::default();
        let r = q.integrate_to_infinity(|x| (-x).exp(), 0.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn slow_algebraic_tail_with_power_map() {
        // ∫_1^∞ x^{-1.5} dx = 2
        let q = Quadrature::default();
        let mut f = |x: f64| x.powf(-1.5);
        let r = q
            .integrate_segments(&mut f, &[Segment::power_tail(1.0, 1.5)])
            .unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let q = Quadrature::default();
        let r = q.integrate(|x| x.powf(-0.5), 0.0, 1.0).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn kink_at_breakpoint() {
        let q = Quadrature::default();
        let r = q
            .integrate_points(|x: f64| (x - 0.3).abs(), &[0.0, 0.3, 1.0])
            .unwrap();
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-13);
    }

    #[test]
    fn vector_valued() {
        let q = Quadrature::default();
        let r = q
            .integrate_vec(
                2,
                |x, out| {
                    out[0] = x.cos();
                    out[1] = x.sin();
                },
                0.0,
                PI / 2.0,
            )
            .unwrap();
        assert!((r.value[0] - 1.0).abs() < 1e-12);
        assert!((r.value[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        let q = Quadrature {
            max_intervals: 10,
            ..Quadrature::default()
        };
        let err = q.integrate(|x| (1.0 / x).sin(), 1e-6, 1.0).unwrap_err();
        assert!(matches!(err, LabError::Quadrature { .. }));
    }
}
