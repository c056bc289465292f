//! Exact operator norms of functions of a normal generator.
//!
//! For a normal operator the norm of `g(A)` is `sup_k |g(λ_k)|`, so every
//! evaluation here is a finite maximum over the truncated spectrum. The
//! comparison is done on `log |g(λ_k)|` to avoid underflow at large times.
//! When the maximizing mode lies in the upper half of the truncation the
//! result is flagged as possibly contaminated by truncation.

use crate::curve::{AbscissaKind, CurveMeta, CurveSample, NormCurve};
use crate::error::{LabError, Result};
use crate::spectrum::{Family, Spectrum, SpectrumSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;

/// Scalar kernel whose supremum over the spectrum is an operator norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum KernelKind {
    /// ‖e^{At}‖: |e^{tλ}|
    Semigroup,
    /// ‖e^{A⁻¹t}‖: e^{t Re λ/|λ|²}
    InvSemigroup,
    /// ‖e^{A⁻¹t}(−A)^{−α}‖: e^{t Re λ/|λ|²} |λ|^{−α}
    InvSemigroupFrac(f64),
    /// ‖e^{At}(−A)^{−α}‖: e^{t Re λ} |λ|^{−α}
    SemigroupFrac(f64),
    /// ‖e^{At}(I − A)^{−1}‖: e^{t Re λ}/|1 − λ|
    SemigroupResolventShift,
}

impl KernelKind {
    fn validate(self) -> Result<Self> {
        match self {
            KernelKind::InvSemigroupFrac(a) | KernelKind::SemigroupFrac(a)
                if !(a >= 0.0 && a.is_finite()) =>
            {
                Err(LabError::InvalidInput(format!(
                    "kernel exponent must be nonnegative, got {a}"
                )))
            }
            k => Ok(k),
        }
    }

    /// log of the scalar kernel at mode k (0-based) and time t.
    #[inline]
    fn log_value(self, spectrum: &Spectrum, k: usize, t: f64) -> f64 {
        let lam = spectrum.eigenvalues()[k];
        match self {
            KernelKind::Semigroup => t * lam.re,
            KernelKind::InvSemigroup => t * spectrum.inv_re()[k],
            KernelKind::InvSemigroupFrac(a) => t * spectrum.inv_re()[k] - a * spectrum.log_abs()[k],
            KernelKind::SemigroupFrac(a) => t * lam.re - a * spectrum.log_abs()[k],
            KernelKind::SemigroupResolventShift => t * lam.re - (1.0 - lam).norm().ln(),
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelKind::Semigroup => write!(f, "semigroup"),
            KernelKind::InvSemigroup => write!(f, "inv"),
            KernelKind::InvSemigroupFrac(a) => write!(f, "inv_frac:{a}"),
            KernelKind::SemigroupFrac(a) => write!(f, "frac:{a}"),
            KernelKind::SemigroupResolventShift => write!(f, "resolvent_shift"),
        }
    }
}

impl FromStr for KernelKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let alpha = || -> Result<f64> {
            let a = arg.ok_or_else(|| {
                LabError::Parse(format!(
                    "kernel \"{name}\" needs an exponent, e.g. {name}:1"
                ))
            })?;
            a.trim()
                .parse::<f64>()
                .map_err(|_| LabError::Parse(format!("bad kernel exponent \"{a}\"")))
        };
        let kind = match name {
            "semigroup" => KernelKind::Semigroup,
            "inv" => KernelKind::InvSemigroup,
            "inv_frac" => KernelKind::InvSemigroupFrac(alpha()?),
            "frac" => KernelKind::SemigroupFrac(alpha()?),
            "resolvent_shift" => KernelKind::SemigroupResolventShift,
            _ => {
                return Err(LabError::Parse(format!(
                    "unknown kernel \"{s}\" (semigroup, inv, inv_frac:α, frac:α, resolvent_shift)"
                )))
            }
        };
        kind.validate()
    }
}

impl TryFrom<String> for KernelKind {
    type Error = LabError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<KernelKind> for String {
    fn from(k: KernelKind) -> String {
        k.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelNorm {
    pub value: f64,
    /// Maximizing mode, counted from 1.
    pub argmax_k: usize,
    /// False when `argmax_k > K/2`.
    pub tail_safe: bool,
}

/// sup over the truncated spectrum of the scalar kernel at time t.
pub fn kernel_norm(spectrum: &Spectrum, kind: KernelKind, t: f64) -> Result<KernelNorm> {
    let kind = kind.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(LabError::InvalidInput(format!(
            "time must be nonnegative, got {t}"
        )));
    }
    Ok(kernel_norm_unchecked(spectrum, kind, t))
}

fn kernel_norm_unchecked(spectrum: &Spectrum, kind: KernelKind, t: f64) -> KernelNorm {
    let modes = spectrum.modes();
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for k in 0..modes {
        let v = kind.log_value(spectrum, k, t);
        if v > best {
            best = v;
            arg = k;
        }
    }
    let argmax_k = arg + 1;
    KernelNorm {
        value: best.exp(),
        argmax_k,
        tail_safe: 2 * argmax_k <= modes,
    }
}

/// Samples `kernel_norm` on a strictly increasing grid.
///
/// Grid points are evaluated independently (in parallel), so the result does
/// not depend on scheduling.
pub fn norm_curve(spectrum: &Spectrum, kind: KernelKind, grid: &[f64]) -> Result<NormCurve> {
    let kind = kind.validate()?;
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(LabError::InvalidInput(
            "grid must be strictly increasing".into(),
        ));
    }
    if let Some(t) = grid.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(LabError::InvalidInput(format!(
            "time must be nonnegative, got {t}"
        )));
    }
    let norms: Vec<KernelNorm> = grid
        .par_iter()
        .map(|&t| kernel_norm_unchecked(spectrum, kind, t))
        .collect();
    let tail_safe = norms.iter().all(|n| n.tail_safe);
    let samples = grid
        .iter()
        .zip(&norms)
        .map(|(&t, n)| CurveSample {
            abscissa: t,
            value: n.value,
            argmax_k: n.argmax_k,
        })
        .collect();
    NormCurve::new(
        AbscissaKind::Continuous,
        samples,
        CurveMeta {
            spectrum: spectrum.spec().describe(),
            spectrum_hash: spectrum.spec().hash(),
            kernel: kind.to_string(),
            modes: spectrum.modes(),
            tail_safe,
            notes: Default::default(),
        },
    )
}

/// (α/(2eγt))^{α/2}: the supremum of w ↦ w^{−α/2} e^{−γt/w} over w ≥ γ² + 1.
///
/// Valid once the continuous maximizer 2γt/α has entered the admissible
/// range, i.e. for t ≥ α(γ² + 1)/(2γ).
pub fn continuous_envelope(gamma: f64, alpha: f64, t: f64) -> Result<f64> {
    if !(gamma > 0.0 && alpha > 0.0) {
        return Err(LabError::InvalidInput(
            "gamma and alpha must be positive".into(),
        ));
    }
    let threshold = alpha * (gamma * gamma + 1.0) / (2.0 * gamma);
    if !(t >= threshold) {
        return Err(LabError::Precondition(format!(
            "continuous envelope needs t >= α(γ²+1)/(2γ) = {threshold}, got {t}"
        )));
    }
    Ok((alpha / (2.0 * E * gamma * t)).powf(alpha / 2.0))
}

/// A time at which the decay estimate is attained (or bounded below) exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub t: f64,
    /// Exact norm for ExpComb, a lower bound for PolyComb.
    pub bound: f64,
    pub exact: bool,
}

/// Witness time for mode k and the norm value (or lower bound) there.
///
/// * ExpComb(γ): t = α(γ² + k²)/(2γ), norm = (α/(2eγt))^{α/2} exactly.
/// * PolyComb(β = 1): t = αk³/3, norm ≥ 2^{−α/2}(α/(3et))^{α/3}.
pub fn optimality_witness(spec: &SpectrumSpec, alpha: f64, k: usize) -> Result<Witness> {
    if !(alpha > 0.0) {
        return Err(LabError::InvalidInput(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if k == 0 || k > spec.modes {
        return Err(LabError::InvalidInput(format!(
            "mode {k} outside 1..={}",
            spec.modes
        )));
    }
    let kf = k as f64;
    match spec.family {
        Family::ExpComb { gamma } => {
            let t = alpha * (gamma * gamma + kf * kf) / (2.0 * gamma);
            Ok(Witness {
                t,
                bound: (alpha / (2.0 * E * gamma * t)).powf(alpha / 2.0),
                exact: true,
            })
        }
        Family::PolyComb { beta: 1.0 } => {
            let t = alpha * kf.powi(3) / 3.0;
            Ok(Witness {
                t,
                bound: poly_witness_floor(alpha) * t.powf(-alpha / 3.0),
                exact: false,
            })
        }
        Family::PolyComb { beta } => Err(LabError::InvalidInput(format!(
            "no optimality witness is known for poly_comb with beta = {beta} (only beta = 1)"
        ))),
        Family::Custom(_) => Err(LabError::InvalidInput(
            "optimality witnesses need exp_comb or poly_comb".into(),
        )),
    }
}

/// (α/(2eγ))^{α/2}: liminf of t^{α/2}‖e^{A⁻¹t}(−A)^{−α}‖ on ExpComb(γ).
pub fn exp_witness_floor(gamma: f64, alpha: f64) -> f64 {
    (alpha / (2.0 * E * gamma)).powf(alpha / 2.0)
}

/// 2^{−α/2}(α/(3e))^{α/3}: liminf lower bound of t^{α/3}‖e^{A⁻¹t}(−A)^{−α}‖ on PolyComb(1).
pub fn poly_witness_floor(alpha: f64) -> f64 {
    2f64.powf(-alpha / 2.0) * (alpha / (3.0 * E)).powf(alpha / 3.0)
}

/// Smallest truncation count that keeps the analytic maximizer of
/// `InvSemigroupFrac(α)` at or below K/2 for every t ≤ `t_max`.
pub fn suggested_modes(family: &Family, alpha: f64, t_max: f64) -> Option<usize> {
    let k_star = match *family {
        Family::ExpComb { gamma } => (2.0 * gamma * t_max / alpha - gamma * gamma)
            .max(1.0)
            .sqrt()
            .ceil(),
        Family::PolyComb { beta } => ((2.0 + beta) * t_max / alpha)
            .powf(1.0 / (2.0 + beta))
            .ceil(),
        Family::Custom(_) => return None,
    };
    Some((2.0 * k_star.max(1.0)) as usize + 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn exp(gamma: f64, k: usize) -> Spectrum {
        SpectrumSpec::exp_comb(gamma, k).unwrap().build().unwrap()
    }

    fn poly(k: usize) -> Spectrum {
        SpectrumSpec::poly_comb(1.0, k).unwrap().build().unwrap()
    }

    /// Direct evaluation of the kernel in linear arithmetic, for cross-checks.
    fn brute_force(spectrum: &Spectrum, alpha: f64, t: f64) -> (f64, usize) {
        let mut best = (0.0, 0);
        for (i, z) in spectrum.eigenvalues().iter().enumerate() {
            let v = (t * z.re / z.norm_sqr()).exp() / z.norm().powf(alpha);
            if v > best.0 {
                best = (v, i + 1);
            }
        }
        best
    }

    #[test]
    fn exact_witness_at_t_one() {
        let n = kernel_norm(&exp(1.0, 64), KernelKind::InvSemigroupFrac(1.0), 1.0).unwrap();
        assert!((n.value - 1.0 / (2.0 * E).sqrt()).abs() < 1e-15);
        assert!((n.value - 0.428_881_9).abs() < 1e-7);
        assert_eq!(n.argmax_k, 1);
        assert!(n.tail_safe);
    }

    #[test]
    fn t_zero_reduces_to_inverse_modulus() {
        let n = kernel_norm(&exp(1.0, 64), KernelKind::InvSemigroupFrac(2.0), 0.0).unwrap();
        assert!((n.value - 0.5).abs() < 1e-15);
        assert_eq!(n.argmax_k, 1);
        let p = kernel_norm(&poly(64), KernelKind::InvSemigroupFrac(1.0), 0.0).unwrap();
        assert!((p.value - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(p.argmax_k, 1);
    }

    #[test]
    fn matches_brute_force() {
        for (s, alpha) in [
            (exp(1.0, 300), 1.0),
            (exp(2.5, 300), 0.5),
            (poly(300), 1.0),
            (poly(300), 2.0),
        ] {
            for &t in &[0.0, 0.3, 1.0, 17.0, 250.0, 4000.0] {
                let n = kernel_norm(&s, KernelKind::InvSemigroupFrac(alpha), t).unwrap();
                let (v, k) = brute_force(&s, alpha, t);
                assert!(
                    (n.value - v).abs() <= 1e-14 * v,
                    "t={t}: {} vs {v}",
                    n.value
                );
                assert_eq!(n.argmax_k, k);
            }
        }
    }

    #[test]
    fn flags_truncation_contamination() {
        // At t = 1e4 the ExpComb maximizer sits near k = 141, beyond K/2 = 50.
        let n = kernel_norm(&exp(1.0, 100), KernelKind::InvSemigroupFrac(1.0), 1e4).unwrap();
        assert!(!n.tail_safe);
        let c = norm_curve(
            &exp(1.0, 100),
            KernelKind::InvSemigroupFrac(1.0),
            &[1.0, 1e4],
        )
        .unwrap();
        assert!(!c.meta.tail_safe);
    }

    #[test]
    fn semigroup_curve_is_exponential() {
        let c = norm_curve(&exp(1.0, 16), KernelKind::Semigroup, &[0.0, 1.0, 2.0]).unwrap();
        let v: Vec<f64> = c.values().collect();
        assert_eq!(v[0], 1.0);
        assert!((v[1] - (-1f64).exp()).abs() < 1e-16);
        assert!((v[2] - (-2f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn single_point_curve_equals_kernel_norm() {
        let s = exp(1.0, 64);
        let c = norm_curve(&s, KernelKind::InvSemigroupFrac(1.0), &[3.7]).unwrap();
        let n = kernel_norm(&s, KernelKind::InvSemigroupFrac(1.0), 3.7).unwrap();
        assert_eq!(c.samples[0].value, n.value);
        assert_eq!(c.samples[0].argmax_k, n.argmax_k);
    }

    #[test]
    fn dyadic_curve_monotone_past_first_witness() {
        let s = exp(1.0, 4096);
        let grid: Vec<f64> = (0..=20).map(|j| 2f64.powi(j)).collect();
        let c = norm_curve(&s, KernelKind::InvSemigroupFrac(1.0), &grid).unwrap();
        let v: Vec<f64> = c.values().collect();
        // Brute-force scan: nonincreasing from the first witness t = 1 on.
        assert!(v.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn resolvent_shift_at_zero() {
        let s = SpectrumSpec::custom(vec![num_complex::Complex64::new(-1.0, 0.0)])
            .unwrap()
            .build()
            .unwrap();
        let n = kernel_norm(&s, KernelKind::SemigroupResolventShift, 0.0).unwrap();
        assert!((n.value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn envelope_examples() {
        assert!((continuous_envelope(1.0, 1.0, 1.0).unwrap() - 0.428_881_9).abs() < 1e-7);
        assert!((continuous_envelope(1.0, 2.0, 10.0).unwrap() - 1.0 / (10.0 * E)).abs() < 1e-15);
        assert!((continuous_envelope(2.0, 1.0, 100.0).unwrap() - 0.030_326_5).abs() < 1e-7);
        assert!(continuous_envelope(1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn witnesses() {
        let e = SpectrumSpec::exp_comb(1.0, 64).unwrap();
        let w = optimality_witness(&e, 1.0, 1).unwrap();
        assert_eq!(w.t, 1.0);
        assert!((w.bound - 0.428_881_9).abs() < 1e-7);
        let w = optimality_witness(&e, 2.0, 2).unwrap();
        assert_eq!(w.t, 5.0);
        assert!((w.bound - 2.0 / (10.0 * E)).abs() < 1e-15);

        let p = SpectrumSpec::poly_comb(1.0, 64).unwrap();
        let w = optimality_witness(&p, 1.0, 3).unwrap();
        assert_eq!(w.t, 9.0);
        let expected = 2f64.powf(-0.5) * (1.0 / (27.0 * E)).powf(1.0 / 3.0);
        assert!((w.bound - expected).abs() < 1e-15);
        assert!((w.bound - 0.168_86).abs() < 1e-4);
        let n = kernel_norm(&poly(64), KernelKind::InvSemigroupFrac(1.0), w.t).unwrap();
        assert!(n.value >= w.bound);

        assert!(optimality_witness(&SpectrumSpec::poly_comb(2.0, 8).unwrap(), 1.0, 1).is_err());
        assert!(optimality_witness(&e, 1.0, 65).is_err());
    }

    #[test]
    fn exact_at_exp_witness_for_several_k() {
        let spec = SpectrumSpec::exp_comb(1.0, 64).unwrap();
        let s = spec.build().unwrap();
        for k in [2, 5, 10] {
            let w = optimality_witness(&spec, 1.0, k).unwrap();
            let n = kernel_norm(&s, KernelKind::InvSemigroupFrac(1.0), w.t).unwrap();
            assert!((n.value - w.bound).abs() < 1e-12 * w.bound);
            assert_eq!(n.argmax_k, k);
        }
    }

    #[test]
    fn kernel_parse_round_trip() {
        for s in [
            "semigroup",
            "inv",
            "inv_frac:1",
            "frac:0.5",
            "resolvent_shift",
        ] {
            let k: KernelKind = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert!("inv_frac".parse::<KernelKind>().is_err());
        assert!("inv_frac:-1".parse::<KernelKind>().is_err());
        assert!("bogus".parse::<KernelKind>().is_err());
    }

    #[test]
    fn suggested_modes_keep_maximizer_in_lower_half() {
        let fam = Family::ExpComb { gamma: 1.0 };
        let k = suggested_modes(&fam, 1.0, 1e6).unwrap();
        let s = exp(1.0, k);
        let n = kernel_norm(&s, KernelKind::InvSemigroupFrac(1.0), 1e6).unwrap();
        assert!(n.tail_safe);
        let fam = Family::PolyComb { beta: 1.0 };
        let k = suggested_modes(&fam, 1.0, 1e8).unwrap();
        let n = kernel_norm(&poly(k), KernelKind::InvSemigroupFrac(1.0), 1e8).unwrap();
        assert!(n.tail_safe);
    }

    proptest! {
        #[test]
        fn nondecreasing_in_truncation(gamma in 0.1f64..3.0, alpha in 0.1f64..3.0, t in 0.0f64..1e4, k in 1usize..200) {
            let small = kernel_norm(&exp(gamma, k), KernelKind::InvSemigroupFrac(alpha), t).unwrap();
            let large = kernel_norm(&exp(gamma, 2 * k), KernelKind::InvSemigroupFrac(alpha), t).unwrap();
            prop_assert!(large.value >= small.value);
        }

        #[test]
        fn envelope_dominates(gamma in 0.2f64..3.0, alpha in 0.2f64..3.0, scale in 1.0f64..500.0) {
            let t = scale * alpha * (gamma * gamma + 1.0) / (2.0 * gamma);
            let env = continuous_envelope(gamma, alpha, t).unwrap();
            let s = exp(gamma, suggested_modes(&Family::ExpComb { gamma }, alpha, t).unwrap());
            let n = kernel_norm(&s, KernelKind::InvSemigroupFrac(alpha), t).unwrap();
            prop_assert!(n.value <= env * (1.0 + 1e-12));
        }
    }
}
