//! The B₀ seminorm ‖f‖_{B₀} = ∫₀^∞ sup_η |f'(ξ+iη)| dξ and the auxiliary
//! integrals F_α(t) that bound it.
//!
//! Write w = z + 1 = s + iη with s = ξ + 1 and u = |w|² = s² + η². Every
//! family here depends on η only through u, so the inner supremum is a
//! one-dimensional search over u ∈ [s², ∞), done in the variable
//! v = log(u/s²).

use crate::decay::DecayModel;
use crate::error::{LabError, Result};
use crate::optimize::{golden_section_max, Maximum};
use crate::quadrature::{Quadrature, Segment};
use crate::special::gamma;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;

/// Holomorphic functions on the right half-plane whose B₀ norms drive the
/// decay estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FunctionFamily {
    /// z ↦ e^{−t/(z+1)}
    Hshift { t: f64 },
    /// z ↦ (z+1)^{−α}
    Rpow { alpha: f64 },
    /// z ↦ e^{−t/(z+1)}/(z+1)^α
    Fta { t: f64, alpha: f64 },
}

impl FunctionFamily {
    pub fn validate(self) -> Result<Self> {
        let ok = match self {
            FunctionFamily::Hshift { t } => t >= 0.0 && t.is_finite(),
            FunctionFamily::Rpow { alpha } => alpha > 0.0 && alpha.is_finite(),
            FunctionFamily::Fta { t, alpha } => {
                t >= 0.0 && t.is_finite() && alpha > 0.0 && alpha.is_finite()
            }
        };
        if ok {
            Ok(self)
        } else {
            Err(LabError::InvalidInput(format!(
                "{self}: need t >= 0 and alpha > 0, both finite"
            )))
        }
    }

    /// f(z) on Re z > −1.
    pub fn eval(self, z: Complex64) -> Complex64 {
        let w = z + 1.0;
        match self {
            FunctionFamily::Hshift { t } => (-t / w).exp(),
            FunctionFamily::Rpow { alpha } => w.powf(-alpha),
            FunctionFamily::Fta { t, alpha } => (-t / w).exp() * w.powf(-alpha),
        }
    }

    /// f'(z) on Re z > −1.
    pub fn derivative(self, z: Complex64) -> Complex64 {
        let w = z + 1.0;
        match self {
            FunctionFamily::Hshift { t } => t * (-t / w).exp() / (w * w),
            FunctionFamily::Rpow { alpha } => -alpha * w.powf(-alpha - 1.0),
            FunctionFamily::Fta { t, alpha } => {
                let h = (-t / w).exp();
                t * h * w.powf(-alpha - 2.0) - alpha * h * w.powf(-alpha - 1.0)
            }
        }
    }

    /// lim f(z) as |z| → ∞ in the right half-plane.
    pub fn at_infinity(self) -> Complex64 {
        match self {
            FunctionFamily::Hshift { .. } => Complex64::new(1.0, 0.0),
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// sup of |f| over the closed right half-plane, attained on the imaginary axis.
    pub fn sup_norm(self) -> f64 {
        match self {
            FunctionFamily::Hshift { .. } | FunctionFamily::Rpow { .. } => 1.0,
            FunctionFamily::Fta { t, alpha } => sup_g_unchecked(t, 1.0, alpha),
        }
    }

    /// log |f'(w − 1)| with w = s + iη and u = s² + η².
    fn log_abs_derivative(self, s: f64, u: f64) -> f64 {
        match self {
            FunctionFamily::Hshift { t } => t.ln() - t * s / u - u.ln(),
            FunctionFamily::Rpow { alpha } => alpha.ln() - 0.5 * (alpha + 1.0) * u.ln(),
            FunctionFamily::Fta { t, alpha } => {
                // |t − αw|² = (t − αs)² + α²η²
                let d = t - alpha * s;
                let m2 = d * d + alpha * alpha * (u - s * s).max(0.0);
                -t * s / u + 0.5 * m2.ln() - 0.5 * (alpha + 2.0) * u.ln()
            }
        }
    }

    /// Candidate kink location of the outer integrand, in s.
    fn branch_point(self) -> Option<f64> {
        match self {
            FunctionFamily::Hshift { t } => Some(t),
            FunctionFamily::Rpow { .. } => None,
            FunctionFamily::Fta { t, alpha } => Some(2.0 * t / alpha),
        }
    }

    /// Algebraic decay exponent of sup_η |f'| as s → ∞.
    pub(crate) fn tail_decay(self) -> f64 {
        match self {
            FunctionFamily::Hshift { .. } => 2.0,
            FunctionFamily::Rpow { alpha } | FunctionFamily::Fta { alpha, .. } => alpha + 1.0,
        }
    }
}

impl fmt::Display for FunctionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionFamily::Hshift { t } => write!(f, "hshift:{t}"),
            FunctionFamily::Rpow { alpha } => write!(f, "rpow:{alpha}"),
            FunctionFamily::Fta { t, alpha } => write!(f, "fta:{t},{alpha}"),
        }
    }
}

impl FromStr for FunctionFamily {
    type Err = LabError;

    /// `hshift:t`, `rpow:α` or `fta:t,α`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            LabError::Parse(format!(
                "bad function \"{s}\" (hshift:t, rpow:alpha or fta:t,alpha)"
            ))
        };
        let (name, args) = s.split_once(':').ok_or_else(bad)?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let fam = match (name, nums.as_slice()) {
            ("hshift", [t]) => FunctionFamily::Hshift { t: *t },
            ("rpow", [a]) => FunctionFamily::Rpow { alpha: *a },
            ("fta", [t, a]) => FunctionFamily::Fta { t: *t, alpha: *a },
            _ => return Err(bad()),
        };
        fam.validate()
    }
}

impl TryFrom<String> for FunctionFamily {
    type Error = LabError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FunctionFamily> for String {
    fn from(f: FunctionFamily) -> String {
        f.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BNormResult {
    pub b0: f64,
    pub sup_norm: f64,
    pub at_infinity: Complex64,
    /// t·F_{α+2}(t) + α·F_{α+1}(t) for Fta, t·F₂(t) for Hshift.
    pub envelope: Option<f64>,
    pub error: f64,
    pub evaluations: usize,
}

fn sup_g_unchecked(t: f64, s: f64, alpha: f64) -> f64 {
    if t <= 0.5 * alpha * s {
        (-t / s).exp() * s.powf(-alpha)
    } else {
        (alpha / (2.0 * E)).powf(0.5 * alpha) * (t * s).powf(-0.5 * alpha)
    }
}

/// sup over r ≥ 0 of e^{−ts/(s²+r)}/(s²+r)^{α/2}.
///
/// Equals e^{−t/s}/s^α when t ≤ αs/2 and (α/(2e))^{α/2}/(ts)^{α/2} otherwise.
pub fn sup_g(t: f64, s: f64, alpha: f64) -> Result<f64> {
    if !(t > 0.0 && s > 1.0 && alpha > 1.0)
        || !(t.is_finite() && s.is_finite() && alpha.is_finite())
    {
        return Err(LabError::InvalidInput(format!(
            "sup_g needs t > 0, s > 1, alpha > 1; got t={t}, s={s}, alpha={alpha}"
        )));
    }
    Ok(sup_g_unchecked(t, s, alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FAlpha {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// F_α(t) = ∫₁^∞ sup_g(t, s, α) ds, split at the branch point s = 2t/α.
pub fn f_alpha(t: f64, alpha: f64) -> Result<FAlpha> {
    if !(t > 0.0 && alpha > 1.0 && t.is_finite() && alpha.is_finite()) {
        return Err(LabError::InvalidInput(format!(
            "F_alpha needs t > 0 and alpha > 1; got t={t}, alpha={alpha}"
        )));
    }
    let split = 2.0 * t / alpha;
    let mut segments = Vec::new();
    let tail_start = if split > 1.0 {
        segments.push(Segment::finite(1.0, split));
        split
    } else {
        1.0
    };
    segments.push(Segment::power_tail(tail_start, alpha));
    let est = Quadrature::with_tolerances(1e-14, 1e-10)
        .integrate_segments(&mut |s: f64| sup_g_unchecked(t, s, alpha), &segments)?;
    Ok(FAlpha {
        value: est.value,
        error: est.error,
        evaluations: est.evaluations,
    })
}

/// Γ(α − 1), the constant bounding t^{α−1}∫_{2t/α}^∞ sup_g ds as t → ∞.
///
/// Diagnostic only; valid for α > 1.
pub fn f_alpha_tail_constant(alpha: f64) -> f64 {
    gamma(alpha - 1.0)
}

/// Rate g(t) with F_α(t) = O(g(t)): t^{1−α} for 1 < α < 2, log t/t for
/// α = 2 and t^{−α/2} for α > 2.
pub fn f_alpha_rate(alpha: f64) -> DecayModel {
    if alpha < 2.0 {
        DecayModel::PowerLaw(alpha - 1.0)
    } else if alpha == 2.0 {
        DecayModel::PowerLog { p: 1.0, q: 1.0 }
    } else {
        DecayModel::PowerLaw(alpha / 2.0)
    }
}

const SCAN_POINTS: usize = 121;

/// sup over η of |f'(ξ + iη)|, returned as (η*, value).
///
/// A coarse scan in log u guards against multiple local maxima; the best scan
/// point is refined by golden-section search. A maximum on the upper edge of
/// the scan range is reported as a failure.
pub fn sup_abs_derivative(f: FunctionFamily, xi: f64) -> Result<(f64, f64)> {
    let f = f.validate()?;
    if !(xi >= 0.0 && xi.is_finite()) {
        return Err(LabError::InvalidInput(format!(
            "xi must be nonnegative, got {xi}"
        )));
    }
    let s = xi + 1.0;
    let s2 = s * s;
    if let FunctionFamily::Hshift { t } = f {
        if t == 0.0 {
            return Ok((0.0, 0.0));
        }
    }
    let (t, alpha) = match f {
        FunctionFamily::Hshift { t } => (t, 1.0),
        FunctionFamily::Rpow { alpha } => (0.0, alpha),
        FunctionFamily::Fta { t, alpha } => (t, alpha),
    };
    let a = alpha.max(1e-3);
    // Every stationary point lies well below this.
    let u_max = 1e4 * (s2 + t * s / a + (t / a).powi(2) + 1.0);
    let v_max = (u_max / s2).ln();
    let log_at = |v: f64| f.log_abs_derivative(s, s2 * v.exp());
    let vs: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| v_max * i as f64 / (SCAN_POINTS - 1) as f64)
        .collect();
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, &v) in vs.iter().enumerate() {
        let val = log_at(v);
        if val > best {
            best = val;
            best_i = i;
        }
    }
    if !best.is_finite() {
        return Err(LabError::InnerMaximization {
            xi,
            reason: format!("|f'| is not finite on the scan (best log value {best})"),
        });
    }
    if best_i == SCAN_POINTS - 1 {
        return Err(LabError::InnerMaximization {
            xi,
            reason: format!("maximum not bracketed: still increasing at |w|² = {u_max:e}"),
        });
    }
    let lo = vs[best_i.saturating_sub(1)];
    let hi = vs[best_i + 1];
    let Maximum { x: v, value } = golden_section_max(log_at, lo, hi, 1e-12);
    let (v, value) = if value >= best {
        (v, value)
    } else {
        (vs[best_i], best)
    };
    let eta = (s2 * v.exp_m1()).max(0.0).sqrt();
    Ok((eta, value.exp()))
}

/// ‖f‖_{B₀} by outer adaptive quadrature over ξ of the inner supremum.
pub fn b0_norm(f: FunctionFamily) -> Result<BNormResult> {
    let f = f.validate()?;
    let envelope = match f {
        FunctionFamily::Fta { t, alpha } if t > 0.0 => {
            Some(t * f_alpha(t, alpha + 2.0)?.value + alpha * f_alpha(t, alpha + 1.0)?.value)
        }
        FunctionFamily::Hshift { t } if t > 0.0 => Some(t * f_alpha(t, 2.0)?.value),
        _ => None,
    };
    if let FunctionFamily::Hshift { t } = f {
        if t == 0.0 {
            return Ok(BNormResult {
                b0: 0.0,
                sup_norm: 1.0,
                at_infinity: f.at_infinity(),
                envelope,
                error: 0.0,
                evaluations: 0,
            });
        }
    }

    // Breakpoints in s = ξ + 1: the image of ξ = 1 and the branch point.
    let mut points = vec![1.0, 2.0];
    if let Some(b) = f.branch_point() {
        if b > 1.0 && b.is_finite() {
            points.push(b);
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    let last = *points.last().unwrap();
    let mut segments: Vec<Segment> = points
        .windows(2)
        .map(|w| Segment::finite(w[0], w[1]))
        .collect();
    segments.push(Segment::power_tail(last, f.tail_decay()));

    let failure: RefCell<Option<LabError>> = RefCell::new(None);
    let mut integrand = |s: f64| match sup_abs_derivative(f, s - 1.0) {
        Ok((_, v)) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let est =
        Quadrature::with_tolerances(1e-14, 1e-10).integrate_segments(&mut integrand, &segments);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let est = est?;
    Ok(BNormResult {
        b0: est.value,
        sup_norm: f.sup_norm(),
        at_infinity: f.at_infinity(),
        envelope,
        error: est.error,
        evaluations: est.evaluations,
    })
}
