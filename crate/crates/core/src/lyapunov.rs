//! Lyapunov quadratic forms on spectral models and the inequality probes
//! built from them.
//!
//! Per mode, the defining integrals have closed forms:
//!
//! * ⟨x, P(ξ)x⟩ = ∫₀^∞ e^{−2ξt}‖e^{At}x‖² dt = Σ |x_k|²/(2(ξ − Re λ_k))
//! * ⟨x, Q(ξ)x⟩ = ∫₀^∞ e^{−2ξt}‖e^{A⁻¹t}x‖² dt = Σ |x_k|²/(2(ξ − Re(1/λ_k)))
//!
//! Quadrature versions exist only to cross-check these.
//!
//! Probes that sweep ξ → 0 report their verdict against the abscissa 1/ξ, so
//! the trend compares the two smallest-ξ dyadic windows.

use crate::crank_nicolson::{cayley_scalar, StepsizeSchedule};
use crate::error::{LabError, Result};
use crate::quadrature::{Quadrature, Segment};
use crate::rng::XorShift64Star;
use crate::spectrum::{Family, Spectrum};
use crate::verdict::InequalityVerdict;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Upper end of the ξ range in [`step1_xi_log_check`].
pub const STEP1_DELTA0: f64 = 0.5;

/// Coefficients x_k of a vector in the eigenbasis, k = 1..K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeVector {
    pub coeffs: Vec<Complex64>,
}

impl ModeVector {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    /// x_k = f(k) for k = 1..=modes.
    pub fn from_fn(modes: usize, f: impl FnMut(usize) -> Complex64) -> Self {
        Self {
            coeffs: (1..=modes).map(f).collect(),
        }
    }

    /// x_k = k^{−p}.
    pub fn power(modes: usize, p: f64) -> Self {
        Self::from_fn(modes, |k| Complex64::new((k as f64).powf(-p), 0.0))
    }

    /// Independent complex Gaussian coefficients.
    pub fn random(modes: usize, seed: u64) -> Self {
        let mut rng = XorShift64Star::new(seed);
        Self::from_fn(modes, |_| Complex64::new(rng.normal(), rng.normal()))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// ‖(−A)^α x‖² = Σ |λ_k|^{2α}|x_k|².
    pub fn frac_norm_sqr(&self, spectrum: &Spectrum, alpha: f64) -> f64 {
        self.coeffs
            .iter()
            .zip(spectrum.log_abs())
            .map(|(z, la)| (2.0 * alpha * la).exp() * z.norm_sqr())
            .sum()
    }

    fn check(&self, spectrum: &Spectrum) -> Result<()> {
        if self.len() != spectrum.modes() {
            return Err(LabError::InvalidInput(format!(
                "mode vector has {} coefficients, spectrum has {} modes",
                self.len(),
                spectrum.modes()
            )));
        }
        if self
            .coeffs
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(LabError::InvalidInput(
                "mode vector has non-finite coefficients".into(),
            ));
        }
        Ok(())
    }
}

/// Σ_k w_k |x_k|² for a vector, or sup_k w_k for the operator.
fn weighted(
    spectrum: &Spectrum,
    x: Option<&ModeVector>,
    w: impl Fn(usize) -> f64 + Sync,
) -> Result<f64> {
    match x {
        Some(x) => {
            x.check(spectrum)?;
            Ok(x.coeffs
                .iter()
                .enumerate()
                .map(|(k, z)| w(k) * z.norm_sqr())
                .sum())
        }
        None => Ok((0..spectrum.modes())
            .map(&w)
            .fold(f64::NEG_INFINITY, f64::max)),
    }
}

fn is_poly(spectrum: &Spectrum) -> bool {
    matches!(spectrum.spec().family, Family::PolyComb { .. })
}

fn check_xi(spectrum: &Spectrum, xi: f64, allow_zero: bool) -> Result<()> {
    if !xi.is_finite() || xi < 0.0 || (xi == 0.0 && !allow_zero) {
        return Err(LabError::InvalidInput(format!(
            "xi must be positive, got {xi}"
        )));
    }
    if xi == 0.0 && is_poly(spectrum) {
        return Err(LabError::Precondition(
            "xi = 0 on a polynomially stable spectrum: Re λ_k → 0 leaves the tail uncontrolled"
                .into(),
        ));
    }
    Ok(())
}

/// ⟨x, P(ξ)x⟩, or ‖P(ξ)‖ when `x` is `None`.
///
/// ξ = 0 is accepted except on PolyComb, where the truncation tail is not
/// controlled.
pub fn p_form(spectrum: &Spectrum, xi: f64, x: Option<&ModeVector>) -> Result<f64> {
    check_xi(spectrum, xi, true)?;
    let lam = spectrum.eigenvalues();
    weighted(spectrum, x, |k| 0.5 / (xi - lam[k].re))
}

/// ⟨x, Q(ξ)x⟩, or ‖Q(ξ)‖ when `x` is `None`.
pub fn q_form(spectrum: &Spectrum, xi: f64, x: Option<&ModeVector>) -> Result<f64> {
    check_xi(spectrum, xi, false)?;
    let inv = spectrum.inv_re();
    weighted(spectrum, x, |k| 0.5 / (xi - inv[k]))
}

/// ξ_r = (1 − r²)/(2(r² + 1)) and the weights of R(r).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RFactor {
    pub r: f64,
    pub xi_r: f64,
    /// 2/τ_min, multiplying P(ξ_r/τ_max).
    pub p_weight: f64,
    /// 2τ_max, multiplying Q(τ_min ξ_r).
    pub q_weight: f64,
    pub tau_min: f64,
    pub tau_max: f64,
}

impl RFactor {
    pub fn new(r: f64, tau_min: f64, tau_max: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(LabError::InvalidInput(format!(
                "r must lie in (0, 1), got {r}"
            )));
        }
        if !(tau_min > 0.0 && tau_min <= tau_max && tau_max.is_finite()) {
            return Err(LabError::InvalidInput(format!(
                "need 0 < tau_min <= tau_max < inf, got {tau_min}, {tau_max}"
            )));
        }
        let r2 = r * r;
        Ok(Self {
            r,
            xi_r: (1.0 - r2) / (2.0 * (r2 + 1.0)),
            p_weight: 2.0 / tau_min,
            q_weight: 2.0 * tau_max,
            tau_min,
            tau_max,
        })
    }
}

/// ⟨x, R(r)x⟩ = (2/τ_min)⟨x, P(ξ_r/τ_max)x⟩ + 2τ_max⟨x, Q(τ_min ξ_r)x⟩.
pub fn r_form(
    spectrum: &Spectrum,
    tau_min: f64,
    tau_max: f64,
    r: f64,
    x: Option<&ModeVector>,
) -> Result<f64> {
    let f = RFactor::new(r, tau_min, tau_max)?;
    Ok(f.p_weight * p_form(spectrum, f.xi_r / f.tau_max, x)?
        + f.q_weight * q_form(spectrum, f.tau_min * f.xi_r, x)?)
}

/// ∫₀^∞ Σ_k |x_k|² e^{2t(c_k − ξ)} dt by adaptive quadrature, c_k = `rates[k]`.
fn energy_quadrature(rates: &[f64], xi: f64, x: &ModeVector) -> Result<f64> {
    let w: Vec<f64> = x.coeffs.iter().map(|z| z.norm_sqr()).collect();
    let slowest = rates.iter().map(|c| xi - c).fold(f64::INFINITY, f64::min);
    if !(slowest > 0.0) {
        return Err(LabError::Precondition("integrand does not decay".into()));
    }
    // Break where the slowest mode has decayed by e.
    let t1 = 1.0 / slowest;
    let est = Quadrature::with_tolerances(1e-15, 1e-12).integrate_segments(
        &mut |t: f64| {
            rates
                .iter()
                .zip(&w)
                .map(|(c, w)| w * (2.0 * t * (c - xi)).exp())
                .sum()
        },
        &[Segment::finite(0.0, t1), Segment::tail(t1)],
    )?;
    Ok(est.value)
}

/// ⟨x, P(ξ)x⟩ from its defining integral.
pub fn p_form_quadrature(spectrum: &Spectrum, xi: f64, x: &ModeVector) -> Result<f64> {
    x.check(spectrum)?;
    let rates: Vec<f64> = spectrum.eigenvalues().iter().map(|z| z.re).collect();
    energy_quadrature(&rates, xi, x)
}

/// ⟨x, Q(ξ)x⟩ from its defining integral.
pub fn q_form_quadrature(spectrum: &Spectrum, xi: f64, x: &ModeVector) -> Result<f64> {
    x.check(spectrum)?;
    energy_quadrature(spectrum.inv_re(), xi, x)
}

fn abs_inner_products(
    spectrum: &Spectrum,
    schedule: &StepsizeSchedule,
    x0: &ModeVector,
    y: &ModeVector,
    steps: usize,
) -> Vec<f64> {
    let taus = schedule.taus(steps);
    let lam = spectrum.eigenvalues();
    let modes = lam.len();
    let chunk = (modes / 16).max(256);
    let idx: Vec<usize> = (0..modes).collect();
    let partials: Vec<Vec<Complex64>> = idx
        .par_chunks(chunk)
        .map(|ks| {
            let mut state: Vec<Complex64> = ks.iter().map(|&k| x0.coeffs[k]).collect();
            let weight: Vec<Complex64> = ks.iter().map(|&k| y.coeffs[k].conj()).collect();
            let mut out = Vec::with_capacity(steps + 1);
            out.push(state.iter().zip(&weight).map(|(s, w)| s * w).sum());
            for &tau in &taus[..steps] {
                for (s, &k) in state.iter_mut().zip(ks) {
                    *s *= cayley_scalar(tau, lam[k]);
                }
                out.push(state.iter().zip(&weight).map(|(s, w)| s * w).sum());
            }
            out
        })
        .collect();
    (0..=steps)
        .map(|n| partials.iter().map(|p| p[n]).sum::<Complex64>().norm())
        .collect()
}

/// Measured constant in |(n+1)rⁿ⟨y, x_n⟩| ≤ M‖y‖√(⟨x_0, R(r)x_0⟩)/√(1−r).
///
/// x_n is the Cayley iterate under `schedule`; the constant is the max over
/// r ∈ `r_grid` and n ≤ `steps` of the left side over the right side with
/// M = 1. rⁿ is handled in the log domain. The verdict abscissa is 1/(1−r).
pub fn pz_inequality_probe(
    spectrum: &Spectrum,
    schedule: &StepsizeSchedule,
    x0: &ModeVector,
    y: &ModeVector,
    r_grid: &[f64],
    steps: usize,
) -> Result<InequalityVerdict> {
    schedule.validate()?;
    x0.check(spectrum)?;
    y.check(spectrum)?;
    if r_grid.is_empty() {
        return Err(LabError::InvalidInput("empty r grid".into()));
    }
    let y_norm = y.norm();
    if !(y_norm > 0.0) {
        return Err(LabError::InvalidInput("y must be nonzero".into()));
    }
    let inner = abs_inner_products(spectrum, schedule, x0, y, steps);
    let (tmin, tmax) = (schedule.tau_min(), schedule.tau_max());
    let mut ratios = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let rf = r_form(spectrum, tmin, tmax, r, Some(x0))?;
        let lr = r.ln();
        let lhs_log = inner
            .iter()
            .enumerate()
            .map(|(n, s)| ((n + 1) as f64).ln() + n as f64 * lr + s.ln())
            .fold(f64::NEG_INFINITY, f64::max);
        let ratio = (lhs_log + 0.5 * (1.0 - r).ln() - y_norm.ln() - 0.5 * rf.ln()).exp();
        ratios.push((1.0 / (1.0 - r), ratio));
    }
    ratios.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(InequalityVerdict::from_ratios(
        "pz_inequality",
        format!("r in {} points, n <= {steps}, {schedule}", r_grid.len()),
        &ratios,
    ))
}

/// Which decay of Q(ξ) is being tested as ξ → 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum QBoundVariant {
    /// ξ^{1−α}⟨x, Qx⟩ ≤ K‖(−A)^α x‖² for α < 1, and
    /// ⟨x, Qx⟩ ≤ K log(1/ξ)‖Ax‖² for α = 1.
    Exponential,
    /// ξ^{1−2α/(2+β)}⟨x, Qx⟩ ≤ K‖(−A)^α x‖².
    Polynomial { beta: f64 },
}

/// Sweeps the Q(ξ) bound over `xi_grid`; with `x = None` the sup over unit
/// vectors (i.e. over modes) is taken.
pub fn q_bound_check(
    spectrum: &Spectrum,
    alpha: f64,
    variant: QBoundVariant,
    xi_grid: &[f64],
    x: Option<&ModeVector>,
) -> Result<InequalityVerdict> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(LabError::InvalidInput(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    check_grid(xi_grid, 1.0)?;
    let log_variant = matches!(variant, QBoundVariant::Exponential) && alpha == 1.0;
    if log_variant {
        check_grid(xi_grid, 0.5)?;
    }
    let power = match variant {
        QBoundVariant::Exponential => 1.0 - alpha,
        QBoundVariant::Polynomial { beta } => 1.0 - 2.0 * alpha / (2.0 + beta),
    };
    let inv = spectrum.inv_re();
    let la = spectrum.log_abs();
    let mut ratios = Vec::with_capacity(xi_grid.len());
    for &xi in xi_grid {
        let scale = if log_variant {
            1.0 / (1.0 / xi).ln()
        } else {
            xi.powf(power)
        };
        let r = match x {
            Some(x) => scale * q_form(spectrum, xi, Some(x))? / x.frac_norm_sqr(spectrum, alpha),
            None => {
                scale
                    * weighted(spectrum, None, |k| {
                        0.5 / (xi - inv[k]) * (-2.0 * alpha * la[k]).exp()
                    })?
            }
        };
        ratios.push((1.0 / xi, r));
    }
    ratios.sort_by(|a, b| a.0.total_cmp(&b.0));
    let name = match variant {
        QBoundVariant::Exponential if log_variant => "q_bound_log".to_string(),
        QBoundVariant::Exponential => format!("q_bound:{alpha}"),
        QBoundVariant::Polynomial { beta } => format!("q_bound_poly:{alpha},{beta}"),
    };
    Ok(InequalityVerdict::from_ratios(
        name,
        grid_label(xi_grid),
        &ratios,
    ))
}

/// Sup over `xi_grid` of 2ξ∫₀^∞‖e^{(γA−ξ)^{−1}t}(γA−ξ)^{−1}x‖²dt / ‖x‖², with
/// the integral in closed form Σ|x_k|²/(2(ξ − γ Re λ_k)).
pub fn shifted_inverse_integral_check(
    spectrum: &Spectrum,
    gamma: f64,
    xi_grid: &[f64],
    x: Option<&ModeVector>,
) -> Result<InequalityVerdict> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(LabError::InvalidInput(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    check_grid(xi_grid, f64::INFINITY)?;
    let lam = spectrum.eigenvalues();
    let x_norm = match x {
        Some(x) => x.norm_sqr(),
        None => 1.0,
    };
    let mut ratios = Vec::with_capacity(xi_grid.len());
    for &xi in xi_grid {
        let lhs = weighted(spectrum, x, |k| 0.5 / (xi - gamma * lam[k].re))?;
        ratios.push((1.0 / xi, 2.0 * xi * lhs / x_norm));
    }
    ratios.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(InequalityVerdict::from_ratios(
        format!("shifted_inverse:{gamma}"),
        grid_label(xi_grid),
        &ratios,
    ))
}

/// ∫₀^∞ ‖e^{(γA−ξ)^{−1}t}(γA−ξ)^{−1}x‖² dt by quadrature.
pub fn shifted_inverse_quadrature(
    spectrum: &Spectrum,
    gamma: f64,
    xi: f64,
    x: &ModeVector,
) -> Result<f64> {
    x.check(spectrum)?;
    let mus: Vec<Complex64> = spectrum
        .eigenvalues()
        .iter()
        .map(|l| l * gamma - xi)
        .collect();
    // |e^{t/μ}|²/|μ|² = e^{2t Re(1/μ)}/|μ|²
    let rates: Vec<f64> = mus.iter().map(|m| (1.0 / m).re).collect();
    let w: Vec<f64> = mus
        .iter()
        .zip(&x.coeffs)
        .map(|(m, z)| z.norm_sqr() / m.norm_sqr())
        .collect();
    let slowest = rates.iter().map(|c| -c).fold(f64::INFINITY, f64::min);
    let t1 = 1.0 / slowest;
    let est = Quadrature::with_tolerances(1e-15, 1e-12).integrate_segments(
        &mut |t: f64| {
            rates
                .iter()
                .zip(&w)
                .map(|(c, w)| w * (2.0 * t * c).exp())
                .sum()
        },
        &[Segment::finite(0.0, t1), Segment::tail(t1)],
    )?;
    Ok(est.value)
}

/// Sweeps ξ|log ξ|^{2β}⟨x, P(ξ)x⟩/‖Ax‖² over `xi_grid` ⊂ (0, 1/2) on PolyComb(β).
pub fn step1_xi_log_check(
    spectrum: &Spectrum,
    xi_grid: &[f64],
    x: Option<&ModeVector>,
) -> Result<InequalityVerdict> {
    let Family::PolyComb { beta } = spectrum.spec().family else {
        return Err(LabError::InvalidInput(
            "step1_xi_log_check needs a poly_comb spectrum".into(),
        ));
    };
    check_grid(xi_grid, STEP1_DELTA0)?;
    let lam = spectrum.eigenvalues();
    let la = spectrum.log_abs();
    let mut ratios = Vec::with_capacity(xi_grid.len());
    for &xi in xi_grid {
        let scale = xi * xi.ln().abs().powf(2.0 * beta);
        let r = match x {
            Some(x) => scale * p_form(spectrum, xi, Some(x))? / x.frac_norm_sqr(spectrum, 1.0),
            None => {
                scale
                    * weighted(spectrum, None, |k| {
                        0.5 / (xi - lam[k].re) * (-2.0 * la[k]).exp()
                    })?
            }
        };
        ratios.push((1.0 / xi, r));
    }
    ratios.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(InequalityVerdict::from_ratios(
        format!("step1_xi_log:{beta}"),
        grid_label(xi_grid),
        &ratios,
    ))
}

/// Checks e^{τ}∫_τ^∞ e^{−t}/t dt ≤ log(1 + 1/τ) by quadrature over `tau_grid`.
///
/// The left side is evaluated as ∫₀^∞ e^{−u}/(u + τ) du; the verdict constant
/// is the largest ratio of left to right side.
pub fn gautschi_check(tau_grid: &[f64]) -> Result<InequalityVerdict> {
    check_grid(tau_grid, f64::INFINITY)?;
    let q = Quadrature::with_tolerances(1e-16, 1e-12);
    let mut ratios = Vec::with_capacity(tau_grid.len());
    for &tau in tau_grid {
        let mut segs = vec![Segment::finite(0.0, tau)];
        let mut b = tau;
        while b < 1.0 {
            segs.push(Segment::finite(b, (10.0 * b).min(1.0)));
            b = (10.0 * b).min(1.0);
        }
        segs.push(Segment::tail(b));
        let lhs = q
            .integrate_segments(&mut |u: f64| (-u).exp() / (u + tau), &segs)?
            .value;
        ratios.push((tau, lhs / (1.0 / tau).ln_1p()));
    }
    ratios.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(InequalityVerdict::from_ratios(
        "gautschi",
        grid_label(tau_grid),
        &ratios,
    ))
}

fn check_grid(grid: &[f64], upper: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(LabError::InvalidInput("empty grid".into()));
    }
    if let Some(x) = grid.iter().find(|&&x| !(x > 0.0 && x < upper)) {
        return Err(LabError::InvalidInput(format!(
            "grid point {x} outside (0, {upper})"
        )));
    }
    Ok(())
}

fn grid_label(grid: &[f64]) -> String {
    let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    format!("{} points in [{lo:e}, {hi:e}]", grid.len())
}

/// 2^{−1}, 2^{−2}, ..., 2^{−j_max}.
pub fn dyadic_xi_grid(j_min: i32, j_max: i32) -> Vec<f64> {
    (j_min..=j_max).map(|j| 2f64.powi(-j)).collect()
}
