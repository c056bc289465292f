//! Crank–Nicolson (Cayley) iteration x_{n+1} = A_d(τ_n) x_n with
//! A_d(τ) = (I + τA/2)(I − τA/2)⁻¹.
//!
//! On spectral models every mode evolves by the scalar a_d(τ, λ), so the
//! operator norm of Π_j A_d(τ_j)(−A)^{−α} is a maximum over modes of running
//! log-modulus sums.

use crate::curve::{AbscissaKind, CurveMeta, CurveSample, NormCurve};
use crate::error::{LabError, Result};
use crate::matrix::{CVector, CayleyStepper, DenseOperator};
use crate::rng::XorShift64Star;
use crate::spectrum::Spectrum;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

/// Modes per parallel work unit; fixed so reductions do not depend on the
/// thread count.
const MODE_CHUNK: usize = 256;

/// Rule producing the stepsizes τ_0, τ_1, ...
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StepsizeSchedule {
    Constant(f64),
    /// τ_n = list[n mod len].
    Periodic(Vec<f64>),
    /// τ_n drawn uniformly from [lo, hi] by xorshift64* seeded with `seed`.
    UniformRandom {
        lo: f64,
        hi: f64,
        seed: u64,
    },
}

impl StepsizeSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = |t: f64| t > 0.0 && t.is_finite();
        let valid = match self {
            StepsizeSchedule::Constant(t) => ok(*t),
            StepsizeSchedule::Periodic(v) => !v.is_empty() && v.iter().all(|&t| ok(t)),
            StepsizeSchedule::UniformRandom { lo, hi, .. } => ok(*lo) && ok(*hi) && lo <= hi,
        };
        if valid {
            Ok(())
        } else {
            Err(LabError::InvalidInput(format!(
                "schedule {self} needs 0 < tau_min <= tau_max < inf"
            )))
        }
    }

    pub fn tau_min(&self) -> f64 {
        match self {
            StepsizeSchedule::Constant(t) => *t,
            StepsizeSchedule::Periodic(v) => v.iter().copied().fold(f64::INFINITY, f64::min),
            StepsizeSchedule::UniformRandom { lo, .. } => *lo,
        }
    }

    pub fn tau_max(&self) -> f64 {
        match self {
            StepsizeSchedule::Constant(t) => *t,
            StepsizeSchedule::Periodic(v) => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            StepsizeSchedule::UniformRandom { hi, .. } => *hi,
        }
    }

    /// The first `n` stepsizes.
    pub fn taus(&self, n: usize) -> Vec<f64> {
        match self {
            StepsizeSchedule::Constant(t) => vec![*t; n],
            StepsizeSchedule::Periodic(v) => (0..n).map(|i| v[i % v.len()]).collect(),
            StepsizeSchedule::UniformRandom { lo, hi, seed } => {
                let mut rng = XorShift64Star::new(*seed);
                (0..n).map(|_| rng.uniform(*lo, *hi)).collect()
            }
        }
    }

    /// Distribution of the stepsizes, recorded in output metadata.
    pub fn distribution(&self) -> &'static str {
        match self {
            StepsizeSchedule::Constant(_) => "constant",
            StepsizeSchedule::Periodic(_) => "periodic",
            StepsizeSchedule::UniformRandom { .. } => {
                "uniform on [tau_min, tau_max], xorshift64* seeded by splitmix64"
            }
        }
    }
}

impl fmt::Display for StepsizeSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepsizeSchedule::Constant(t) => write!(f, "constant:{t}"),
            StepsizeSchedule::Periodic(v) => {
                let items: Vec<String> = v.iter().map(|t| t.to_string()).collect();
                write!(f, "periodic:{}", items.join(","))
            }
            StepsizeSchedule::UniformRandom { lo, hi, seed } => {
                write!(f, "random:{lo},{hi},seed={seed}")
            }
        }
    }
}

impl FromStr for StepsizeSchedule {
    type Err = LabError;

    /// `constant:τ`, `periodic:τ1,τ2,...` or `random:lo,hi,seed=n`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| {
            LabError::Parse(format!(
                "bad schedule \"{s}\": {why} (constant:2, periodic:1,3 or random:0.5,4,seed=42)"
            ))
        };
        let num = |a: &str| a.trim().parse::<f64>().map_err(|_| bad("not a number"));
        let (kind, rest) = s.split_once(':').ok_or_else(|| bad("missing ':'"))?;
        let sched = match kind {
            "constant" => StepsizeSchedule::Constant(num(rest)?),
            "periodic" => {
                StepsizeSchedule::Periodic(rest.split(',').map(num).collect::<Result<_>>()?)
            }
            "random" => {
                let parts: Vec<&str> = rest.split(',').collect();
                let [lo, hi, seed] = parts.as_slice() else {
                    return Err(bad("random needs lo,hi,seed=n"));
                };
                let seed = seed
                    .trim()
                    .strip_prefix("seed=")
                    .unwrap_or(seed.trim())
                    .parse::<u64>()
                    .map_err(|_| bad("seed must be a 64-bit unsigned integer"))?;
                StepsizeSchedule::UniformRandom {
                    lo: num(lo)?,
                    hi: num(hi)?,
                    seed,
                }
            }
            _ => return Err(bad("unknown kind")),
        };
        sched.validate()?;
        Ok(sched)
    }
}

impl TryFrom<String> for StepsizeSchedule {
    type Error = LabError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StepsizeSchedule> for String {
    fn from(s: StepsizeSchedule) -> String {
        s.to_string()
    }
}

/// (1 + τλ/2)/(1 − τλ/2).
pub fn cayley_scalar(tau: f64, lambda: Complex64) -> Complex64 {
    let z = lambda * (0.5 * tau);
    (1.0 + z) / (1.0 - z)
}

/// log |a_d(τ, λ)|, accurate when |a_d| is close to 1; −∞ when a_d = 0.
#[inline]
pub fn log_abs_cayley(tau: f64, lambda: Complex64) -> f64 {
    let z = lambda * (0.5 * tau);
    // |1 + z|²/|1 − z|² = 1 + 4 Re z/|1 − z|²
    0.5 * (4.0 * z.re / (1.0 - z).norm_sqr()).ln_1p()
}

/// Norm trajectory of the Cayley iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryResult {
    pub schedule: String,
    pub alpha: f64,
    pub curve: NormCurve,
}

impl TrajectoryResult {
    pub fn values(&self) -> Vec<f64> {
        self.curve.values().collect()
    }
}

fn check_samples(samples: &[u64], steps: u64) -> Result<()> {
    if samples.is_empty() {
        return Err(LabError::InvalidInput("no sample indices".into()));
    }
    if samples.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::InvalidInput(
            "sample indices must be strictly increasing".into(),
        ));
    }
    let last = *samples.last().unwrap();
    if last > steps {
        return Err(LabError::InvalidInput(format!(
            "sample index {last} exceeds the step count {steps}"
        )));
    }
    Ok(())
}

/// Running (log value, argmax) per (α, sample), for one chunk of modes.
type ChunkMax = Vec<Vec<(f64, usize)>>;

fn merge(into: &mut ChunkMax, other: &ChunkMax) {
    for (a, b) in into.iter_mut().zip(other) {
        for (x, y) in a.iter_mut().zip(b) {
            if y.0 > x.0 {
                *x = *y;
            }
        }
    }
}

/// ‖Π_{j<n} A_d(τ_j)(−A)^{−α}‖ at every sample n, for several α at once.
///
/// Constant schedules use n·log|a_d| directly. Other schedules advance
/// per-mode accumulators step by step; modes are split into fixed-size chunks
/// processed in parallel and reduced in chunk order.
pub fn cn_norm_curves(
    spectrum: &Spectrum,
    schedule: &StepsizeSchedule,
    alphas: &[f64],
    steps: u64,
    samples: &[u64],
) -> Result<Vec<TrajectoryResult>> {
    schedule.validate()?;
    check_samples(samples, steps)?;
    if let Some(a) = alphas.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
        return Err(LabError::InvalidInput(format!(
            "alpha must be nonnegative, got {a}"
        )));
    }
    let lambdas = spectrum.eigenvalues();
    let log_abs = spectrum.log_abs();
    let modes = lambdas.len();
    let empty = || -> ChunkMax { vec![vec![(f64::NEG_INFINITY, 0); samples.len()]; alphas.len()] };

    let chunks: Vec<ChunkMax> = match schedule {
        StepsizeSchedule::Constant(tau) => (0..modes)
            .into_par_iter()
            .chunks(MODE_CHUNK)
            .map(|ks| {
                let mut best = empty();
                for k in ks {
                    let la = log_abs_cayley(*tau, lambdas[k]);
                    for (ai, &alpha) in alphas.iter().enumerate() {
                        for (si, &n) in samples.iter().enumerate() {
                            let prod = if n == 0 { 0.0 } else { n as f64 * la };
                            let v = prod - alpha * log_abs[k];
                            if v > best[ai][si].0 {
                                best[ai][si] = (v, k);
                            }
                        }
                    }
                }
                best
            })
            .collect(),
        _ => {
            let taus = schedule.taus(steps as usize);
            (0..modes)
                .into_par_iter()
                .chunks(MODE_CHUNK)
                .map(|ks| {
                    let mut best = empty();
                    let mut acc = vec![0.0f64; ks.len()];
                    let record = |acc: &[f64], si: usize, best: &mut ChunkMax| {
                        for (ai, &alpha) in alphas.iter().enumerate() {
                            for (i, &k) in ks.iter().enumerate() {
                                let v = acc[i] - alpha * log_abs[k];
                                if v > best[ai][si].0 {
                                    best[ai][si] = (v, k);
                                }
                            }
                        }
                    };
                    let mut si = 0;
                    let mut n = 0u64;
                    while si < samples.len() {
                        if samples[si] == n {
                            record(&acc, si, &mut best);
                            si += 1;
                            continue;
                        }
                        let tau = taus[n as usize];
                        for (a, &k) in acc.iter_mut().zip(&ks) {
                            *a += log_abs_cayley(tau, lambdas[k]);
                        }
                        n += 1;
                    }
                    best
                })
                .collect()
        }
    };

    let mut best = empty();
    for c in &chunks {
        merge(&mut best, c);
    }

    let mut out = Vec::with_capacity(alphas.len());
    for (ai, &alpha) in alphas.iter().enumerate() {
        let mut tail_safe = true;
        let samples_out: Vec<CurveSample> = samples
            .iter()
            .zip(&best[ai])
            .map(|(&n, &(v, k))| {
                tail_safe &= 2 * (k + 1) <= modes;
                CurveSample {
                    abscissa: n as f64,
                    value: v.exp(),
                    argmax_k: k + 1,
                }
            })
            .collect();
        let mut notes = std::collections::BTreeMap::new();
        notes.insert("schedule".into(), schedule.to_string());
        notes.insert("tau_distribution".into(), schedule.distribution().into());
        notes.insert("alpha".into(), alpha.to_string());
        let curve = NormCurve::new(
            AbscissaKind::Discrete,
            samples_out,
            CurveMeta {
                spectrum: spectrum.spec().describe(),
                spectrum_hash: spectrum.spec().hash(),
                kernel: format!("cn_frac:{alpha}"),
                modes,
                tail_safe,
                notes,
            },
        )?;
        out.push(TrajectoryResult {
            schedule: schedule.to_string(),
            alpha,
            curve,
        });
    }
    Ok(out)
}

/// Single-α form of [`cn_norm_curves`].
pub fn cn_norm_curve(
    spectrum: &Spectrum,
    schedule: &StepsizeSchedule,
    alpha: f64,
    steps: u64,
    samples: &[u64],
) -> Result<TrajectoryResult> {
    Ok(cn_norm_curves(spectrum, schedule, &[alpha], steps, samples)?.remove(0))
}

/// Iterates x_{n+1} = A_d(τ_n)x_n with one linear solve per step and records
/// ‖x_n‖ at the sample indices.
pub fn cn_trajectory_matrix(
    a: &DenseOperator,
    schedule: &StepsizeSchedule,
    x0: &CVector,
    steps: u64,
    samples: &[u64],
) -> Result<TrajectoryResult> {
    schedule.validate()?;
    check_samples(samples, steps)?;
    if x0.len() != a.dim() {
        return Err(LabError::InvalidInput(format!(
            "initial vector has length {}, operator has dimension {}",
            x0.len(),
            a.dim()
        )));
    }
    let taus = schedule.taus(steps as usize);
    let reuse = !matches!(schedule, StepsizeSchedule::UniformRandom { .. });
    let mut cache: HashMap<u64, CayleyStepper> = HashMap::new();
    let mut x = x0.clone();
    let mut out = Vec::with_capacity(samples.len());
    let mut si = 0;
    let mut n = 0u64;
    while si < samples.len() {
        if samples[si] == n {
            out.push(CurveSample {
                abscissa: n as f64,
                value: x.norm(),
                argmax_k: 0,
            });
            si += 1;
            continue;
        }
        let tau = taus[n as usize];
        x = if reuse {
            let stepper = match cache.entry(tau.to_bits()) {
                std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(CayleyStepper::new(a, tau)?)
                }
            };
            stepper.step(&x)?
        } else {
            CayleyStepper::new(a, tau)?.step(&x)?
        };
        n += 1;
    }
    let mut notes = std::collections::BTreeMap::new();
    notes.insert("schedule".into(), schedule.to_string());
    notes.insert("tau_distribution".into(), schedule.distribution().into());
    let curve = NormCurve::new(
        AbscissaKind::Discrete,
        out,
        CurveMeta {
            spectrum: format!("dense {}x{}", a.dim(), a.dim()),
            kernel: "cn_state".into(),
            modes: a.dim(),
            tail_safe: true,
            notes,
            ..CurveMeta::default()
        },
    )?;
    Ok(TrajectoryResult {
        schedule: schedule.to_string(),
        alpha: 0.0,
        curve,
    })
}

/// Constant-stepsize (τ = 2) maximizer on ExpComb(γ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantMaximizer {
    /// w_n = 2√(γ²n² + γ² − γn) + 2γn − 1
    pub w: f64,
    /// √(f_n(w_n)) with f_n(w) = ((w + 1 − 2γ)/(w + 1 + 2γ))^n / w.
    pub bound: f64,
    /// ((w_n + 1 − 2γ)/(w_n + 1 + 2γ))^n, tending to e^{−1}.
    pub branch_factor: f64,
    /// n/w_n, tending to 1/(4γ).
    pub n_over_w: f64,
}

/// log f_n(w) = n log((w + 1 − 2γ)/(w + 1 + 2γ)) − log w.
pub fn log_f_n(gamma: f64, n: u64, w: f64) -> f64 {
    n as f64 * (-4.0 * gamma / (w + 1.0 + 2.0 * gamma)).ln_1p() - w.ln()
}

pub fn cn_constant_maximizer(gamma: f64, n: u64) -> Result<ConstantMaximizer> {
    if !(gamma > 0.0 && gamma.is_finite()) || n == 0 {
        return Err(LabError::InvalidInput(format!(
            "need gamma > 0 and n >= 1, got gamma={gamma}, n={n}"
        )));
    }
    let nf = n as f64;
    let g2 = gamma * gamma;
    let w = 2.0 * (g2 * nf * nf + g2 - gamma * nf).sqrt() + 2.0 * gamma * nf - 1.0;
    if !(w >= g2 + 1.0) {
        return Err(LabError::Precondition(format!(
            "w_n = {w} lies below gamma^2 + 1 = {}",
            g2 + 1.0
        )));
    }
    let branch_log = nf * (-4.0 * gamma / (w + 1.0 + 2.0 * gamma)).ln_1p();
    Ok(ConstantMaximizer {
        w,
        bound: (0.5 * log_f_n(gamma, n, w)).exp(),
        branch_factor: branch_log.exp(),
        n_over_w: nf / w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{random_stable_normal, CMatrix};
    use crate::spectrum::SpectrumSpec;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn exp_comb(k: usize) -> Spectrum {
        SpectrumSpec::exp_comb(1.0, k).unwrap().build().unwrap()
    }

    #[test]
    fn scalar_cases() {
        assert!((cayley_scalar(2.0, c(0.0, 1.0)) - c(0.0, 1.0)).norm() < 1e-15);
        assert_eq!(cayley_scalar(2.0, c(-1.0, 0.0)), c(0.0, 0.0));
        let z = cayley_scalar(2.0, c(-1.0, 1.0));
        assert!((z - c(-0.2, 0.4)).norm() < 1e-15);
        assert!((z.norm() - 0.447_213_6).abs() < 1e-7);
        assert_eq!(log_abs_cayley(2.0, c(-1.0, 0.0)), f64::NEG_INFINITY);
    }

    #[test]
    fn schedule_parsing_and_bounds() {
        let s: StepsizeSchedule = "random:0.5,4,seed=42".parse().unwrap();
        assert_eq!(s.tau_min(), 0.5);
        assert_eq!(s.tau_max(), 4.0);
        assert_eq!(s.to_string(), "random:0.5,4,seed=42");
        let t = s.taus(10_000);
        assert!(t.iter().all(|&x| (0.5..=4.0).contains(&x)));
        assert_eq!(t, s.taus(10_000));
        let p: StepsizeSchedule = "periodic:1,3".parse().unwrap();
        assert_eq!(p.taus(5), vec![1.0, 3.0, 1.0, 3.0, 1.0]);
        assert!("constant:0".parse::<StepsizeSchedule>().is_err());
        assert!("random:4,0.5,seed=1".parse::<StepsizeSchedule>().is_err());
        assert!("random:1,2".parse::<StepsizeSchedule>().is_err());
    }

    #[test]
    fn different_seeds_differ() {
        let a = StepsizeSchedule::UniformRandom {
            lo: 0.5,
            hi: 4.0,
            seed: 1,
        }
        .taus(4);
        let b = StepsizeSchedule::UniformRandom {
            lo: 0.5,
            hi: 4.0,
            seed: 2,
        }
        .taus(4);
        assert_ne!(a, b);
    }

    #[test]
    fn empty_product_at_zero() {
        let s = exp_comb(64);
        let r = cn_norm_curve(&s, &"periodic:1,3".parse().unwrap(), 1.0, 4, &[0, 4]).unwrap();
        assert!((r.curve.samples[0].value - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn first_step_constant_two() {
        let s = exp_comb(64);
        let r = cn_norm_curve(&s, &StepsizeSchedule::Constant(2.0), 1.0, 1, &[1]).unwrap();
        let v = r.curve.samples[0].value;
        assert!((v - 0.316_227_8).abs() < 1e-7);
        // Brute force over modes.
        let brute = (1..=64)
            .map(|k| {
                let k = k as f64;
                k / ((4.0 + k * k).sqrt() * (1.0 + k * k).sqrt())
            })
            .fold(0.0, f64::max);
        assert!((v - brute).abs() < 1e-15);
        assert!([1, 2].contains(&r.curve.samples[0].argmax_k));
    }

    #[test]
    fn constant_and_stepwise_paths_agree() {
        let s = exp_comb(500);
        let samples = [0, 1, 2, 5, 17, 64, 200];
        let a = cn_norm_curve(&s, &StepsizeSchedule::Constant(0.7), 0.75, 200, &samples).unwrap();
        let b = cn_norm_curve(
            &s,
            &StepsizeSchedule::Periodic(vec![0.7]),
            0.75,
            200,
            &samples,
        )
        .unwrap();
        for (x, y) in a.curve.samples.iter().zip(&b.curve.samples) {
            assert!((x.value - y.value).abs() <= 1e-12 * y.value);
            assert_eq!(x.argmax_k, y.argmax_k);
        }
    }

    #[test]
    fn bounded_by_constant_maximizer() {
        let s = exp_comb(8192);
        let samples: Vec<u64> = (0..20).map(|j| 1u64 << j).collect();
        let r =
            cn_norm_curve(&s, &StepsizeSchedule::Constant(2.0), 1.0, 1 << 19, &samples).unwrap();
        for smp in &r.curve.samples {
            let m = cn_constant_maximizer(1.0, smp.abscissa as u64).unwrap();
            assert!(smp.value <= m.bound * (1.0 + 1e-12), "n={}", smp.abscissa);
        }
    }

    #[test]
    fn maximizer_formulas() {
        let m = cn_constant_maximizer(1.0, 1).unwrap();
        assert!((m.w - 3.0).abs() < 1e-15);
        assert!((m.bound - 1.0 / 3.0).abs() < 1e-15);
        let m = cn_constant_maximizer(1.0, 1_000_000).unwrap();
        assert!((m.branch_factor - (-1f64).exp()).abs() < 1e-3);
        assert!((m.n_over_w - 0.25).abs() < 1e-3);
    }

    #[test]
    fn maximizer_maximizes() {
        for n in [1u64, 3, 10, 1000] {
            let m = cn_constant_maximizer(1.0, n).unwrap();
            let at = log_f_n(1.0, n, m.w);
            for dw in [-1e-3, 1e-3] {
                assert!(log_f_n(1.0, n, m.w * (1.0 + dw)) <= at);
            }
        }
    }

    #[test]
    fn parallel_chunks_are_deterministic() {
        let s = exp_comb(3000);
        let sched: StepsizeSchedule = "random:0.5,4,seed=7".parse().unwrap();
        let a = cn_norm_curves(&s, &sched, &[0.5, 1.0], 300, &[1, 10, 100, 300]).unwrap();
        let b = cn_norm_curves(&s, &sched, &[0.5, 1.0], 300, &[1, 10, 100, 300]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn matrix_trajectory_scalar_zero() {
        let a = DenseOperator::diagonal(&[c(-1.0, 0.0)]).unwrap();
        let r = cn_trajectory_matrix(
            &a,
            &StepsizeSchedule::Constant(2.0),
            &CVector::from_element(1, c(1.0, 0.0)),
            1,
            &[0, 1],
        )
        .unwrap();
        assert_eq!(r.curve.samples[1].value, 0.0);
    }

    #[test]
    fn matrix_trajectory_matches_mode_arithmetic() {
        let lam = [c(-1.0, 1.0), c(-0.5, 3.0), c(-2.0, -1.0)];
        let a = DenseOperator::diagonal(&lam).unwrap();
        let x0 = CVector::from_column_slice(&[c(1.0, 0.0), c(0.5, -0.5), c(0.0, 2.0)]);
        let sched: StepsizeSchedule = "random:0.5,4,seed=3".parse().unwrap();
        let samples = [0, 1, 7, 50];
        let r = cn_trajectory_matrix(&a, &sched, &x0, 50, &samples).unwrap();
        let taus = sched.taus(50);
        for (smp, &n) in r.curve.samples.iter().zip(&samples) {
            let mut norm2 = 0.0;
            for (k, &l) in lam.iter().enumerate() {
                let prod: Complex64 = taus[..n as usize]
                    .iter()
                    .map(|&t| cayley_scalar(t, l))
                    .product();
                norm2 += (prod * x0[k]).norm_sqr();
            }
            assert!((smp.value - norm2.sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn matrix_trajectory_contracts_by_step_norm() {
        let a = random_stable_normal(4, 8).unwrap();
        let a = DenseOperator::new(
            a.matrix()
                + CMatrix::from_fn(
                    4,
                    4,
                    |i, j| if j == i + 1 { c(0.7, 0.0) } else { c(0.0, 0.0) },
                ),
        )
        .unwrap();
        let sched = StepsizeSchedule::Periodic(vec![1.0, 3.0]);
        let x0 = CVector::from_column_slice(&[c(1.0, 0.0), c(-1.0, 0.5), c(0.2, 0.0), c(0.0, 1.0)]);
        let samples: Vec<u64> = (0..=40).collect();
        let r = cn_trajectory_matrix(&a, &sched, &x0, 40, &samples).unwrap();
        let norms = [1.0, 3.0]
            .map(|t| crate::matrix::spectral_norm(&crate::matrix::cayley(&a, t).unwrap()));
        for n in 0..40 {
            let step_norm = norms[n % 2];
            let v = &r.curve.samples;
            assert!(v[n + 1].value <= step_norm * v[n].value * (1.0 + 1e-12));
        }
    }

    proptest! {
        #[test]
        fn contractive_per_mode(tau in 1e-3f64..1e3, re in -1e3f64..-1e-6, im in -1e3f64..1e3) {
            prop_assert!(cayley_scalar(tau, c(re, im)).norm() < 1.0);
            let la = log_abs_cayley(tau, c(re, im));
            prop_assert!(la < 0.0);
            prop_assert!((la - cayley_scalar(tau, c(re, im)).norm().ln()).abs() <= 1e-12 * la.abs().max(1.0));
        }

        #[test]
        fn alpha_zero_nonincreasing(seed in 0u64..1000) {
            let s = exp_comb(128);
            let sched = StepsizeSchedule::UniformRandom { lo: 0.5, hi: 4.0, seed };
            let r = cn_norm_curve(&s, &sched, 0.0, 64, &(0..=64).collect::<Vec<_>>()).unwrap();
            let v = r.values();
            prop_assert!(v.windows(2).all(|w| w[1] <= w[0]));
        }

        #[test]
        fn order_of_steps_irrelevant(rot in 0usize..4) {
            let s = exp_comb(64);
            let base = vec![0.5, 1.0, 2.0, 3.5];
            let mut perm = base.clone();
            perm.rotate_left(rot);
            perm.swap(0, 3);
            let a = cn_norm_curve(&s, &StepsizeSchedule::Periodic(base), 1.0, 8, &[4, 8]).unwrap();
            let b = cn_norm_curve(&s, &StepsizeSchedule::Periodic(perm), 1.0, 8, &[4, 8]).unwrap();
            for (x, y) in a.curve.samples.iter().zip(&b.curve.samples) {
                prop_assert!((x.value - y.value).abs() <= 1e-12 * x.value);
            }
        }
    }
}
