//! Decay-rate fits and order-of-decay verdicts on sampled curves.
//!
//! Exponents come from ordinary least squares in log-log coordinates. Log
//! factors are never fitted; they enter only through the ratio checks of
//! [`check_order`].

use crate::curve::NormCurve;
use crate::error::{LabError, Result};
use crate::verdict::InequalityVerdict;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Minimum number of samples a fit window must contain.
pub const MIN_FIT_SAMPLES: usize = 8;

/// Slack allowed below the floor in [`liminf_check`].
pub const LIMINF_TOL: f64 = 1e-9;

/// Reference rate g(t) for an O(g(t)) claim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DecayModel {
    /// t^{−p}
    PowerLaw(f64),
    /// √(log t / t)
    PowerLogHalf,
    /// (log t)^{−β}
    LogPower(f64),
    /// t^{−p}(log t)^q
    PowerLog { p: f64, q: f64 },
}

impl DecayModel {
    /// g(t); log variants need t > 1.
    pub fn value(self, t: f64) -> f64 {
        match self {
            DecayModel::PowerLaw(p) => t.powf(-p),
            DecayModel::PowerLogHalf => (t.ln() / t).sqrt(),
            DecayModel::LogPower(b) => t.ln().powf(-b),
            DecayModel::PowerLog { p, q } => t.powf(-p) * t.ln().powf(q),
        }
    }

    /// Smallest abscissa (exclusive) on which the model is positive.
    pub fn domain_start(self) -> f64 {
        match self {
            DecayModel::PowerLaw(_) => 0.0,
            DecayModel::PowerLog { q: 0.0, .. } => 0.0,
            _ => 1.0,
        }
    }
}

impl fmt::Display for DecayModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecayModel::PowerLaw(p) => write!(f, "power:{p}"),
            DecayModel::PowerLogHalf => write!(f, "powerlog"),
            DecayModel::LogPower(b) => write!(f, "logpow:{b}"),
            DecayModel::PowerLog { p, q } => write!(f, "powerlog:{p},{q}"),
        }
    }
}

impl FromStr for DecayModel {
    type Err = LabError;

    /// `power:p`, `powerlog`, `powerlog:p,q` or `logpow:β`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            LabError::Parse(format!(
                "bad decay model \"{s}\" (power:p, powerlog, powerlog:p,q, logpow:beta)"
            ))
        };
        let num = |a: &str| a.trim().parse::<f64>().map_err(|_| bad());
        let model = match s.split_once(':') {
            None if s == "powerlog" => DecayModel::PowerLogHalf,
            None => return Err(bad()),
            Some(("power", p)) => DecayModel::PowerLaw(num(p)?),
            Some(("logpow", b)) => DecayModel::LogPower(num(b)?),
            Some(("powerlog", pq)) => {
                let (p, q) = pq.split_once(',').ok_or_else(bad)?;
                DecayModel::PowerLog {
                    p: num(p)?,
                    q: num(q)?,
                }
            }
            Some(_) => return Err(bad()),
        };
        Ok(model)
    }
}

impl TryFrom<String> for DecayModel {
    type Error = LabError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DecayModel> for String {
    fn from(m: DecayModel) -> String {
        m.to_string()
    }
}

/// Closed abscissa range [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub lo: f64,
    pub hi: f64,
}

impl FitWindow {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(LabError::InvalidInput(format!("bad window [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// The window without its lowest decade, when at least a decade remains.
    pub fn burned_in(self) -> Self {
        if self.hi >= 100.0 * self.lo {
            Self {
                lo: 10.0 * self.lo,
                hi: self.hi,
            }
        } else {
            self
        }
    }

    fn contains(self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

impl FromStr for FitWindow {
    type Err = LabError;

    /// `lo:hi`
    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| LabError::Parse(format!("bad window \"{s}\" (expected lo:hi)")))?;
        let num = |a: &str| {
            a.trim()
                .parse::<f64>()
                .map_err(|_| LabError::Parse(format!("bad window bound \"{a}\"")))
        };
        FitWindow::new(num(lo)?, num(hi)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// p̂ in value ≈ C t^{−p̂}.
    pub exponent: f64,
    /// log C.
    pub intercept: f64,
    pub r_squared: f64,
    /// Largest absolute residual in log(value).
    pub residual_max: f64,
    /// Window actually fitted, after burn-in.
    pub window: FitWindow,
    pub samples: usize,
}

fn window_samples(curve: &NormCurve, window: FitWindow) -> Vec<(f64, f64)> {
    curve
        .samples
        .iter()
        .filter(|s| window.contains(s.abscissa))
        .map(|s| (s.abscissa, s.value))
        .collect()
}

/// Log-log least-squares fit over `window` with the lowest decade dropped.
pub fn fit_power(curve: &NormCurve, window: FitWindow) -> Result<DecayFit> {
    fit_power_exact(curve, window.burned_in())
}

/// Log-log least-squares fit over exactly `window`.
pub fn fit_power_exact(curve: &NormCurve, window: FitWindow) -> Result<DecayFit> {
    let pts = window_samples(curve, window);
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(LabError::Fit(format!(
            "window [{}, {}] holds {} samples, need at least {MIN_FIT_SAMPLES}",
            window.lo,
            window.hi,
            pts.len()
        )));
    }
    if let Some((x, v)) = pts.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
        return Err(LabError::Fit(format!("value {v} at {x} is not positive")));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(LabError::Fit(
            "degenerate window: all abscissas coincide".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - (intercept + slope * x))
        .collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(DecayFit {
        exponent: -slope,
        intercept,
        r_squared,
        residual_max: residuals.iter().fold(0.0, |m, r| m.max(r.abs())),
        window,
        samples: pts.len(),
    })
}

/// sup of value/model over `window`, with the last-two-dyadic-windows trend.
pub fn check_order(
    curve: &NormCurve,
    model: DecayModel,
    window: FitWindow,
) -> Result<InequalityVerdict> {
    if window.lo <= model.domain_start() {
        return Err(LabError::InvalidInput(format!(
            "model {model} needs abscissas above {}, window starts at {}",
            model.domain_start(),
            window.lo
        )));
    }
    let pts = window_samples(curve, window);
    if pts.len() < 2 {
        return Err(LabError::Fit(format!(
            "window [{}, {}] holds {} samples, need at least 2",
            window.lo,
            window.hi,
            pts.len()
        )));
    }
    let ratios: Vec<(f64, f64)> = pts.iter().map(|&(x, v)| (x, v / model.value(x))).collect();
    Ok(InequalityVerdict::from_ratios(
        format!("order:{model}"),
        format!("[{}, {}]", window.lo, window.hi),
        &ratios,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiminfVerdict {
    /// min of t^q·value over the top half of the range (in log scale).
    pub minimum: f64,
    pub at: f64,
    pub floor: f64,
    pub pass: bool,
    pub samples: usize,
}

/// Checks min over the upper half (log scale) of the sampled range of
/// t^q·value against `floor − 1e-9`.
pub fn liminf_check(curve: &NormCurve, q: f64, floor: f64) -> Result<LiminfVerdict> {
    let (lo, hi) = match (curve.samples.first(), curve.samples.last()) {
        (Some(a), Some(b)) if a.abscissa > 0.0 && b.abscissa > a.abscissa => {
            (a.abscissa, b.abscissa)
        }
        _ => {
            return Err(LabError::Fit(
                "liminf check needs at least two positive abscissas".into(),
            ))
        }
    };
    let mid = (lo * hi).sqrt();
    let top: Vec<(f64, f64)> = curve
        .samples
        .iter()
        .filter(|s| s.abscissa >= mid)
        .map(|s| (s.abscissa, s.abscissa.powf(q) * s.value))
        .collect();
    if top.len() < 2 {
        return Err(LabError::Fit(format!(
            "upper half [{mid}, {hi}] holds {} samples, need at least 2",
            top.len()
        )));
    }
    let (at, minimum) = top.iter().fold((f64::NAN, f64::INFINITY), |acc, &(x, w)| {
        if w < acc.1 {
            (x, w)
        } else {
            acc
        }
    });
    Ok(LiminfVerdict {
        minimum,
        at,
        floor,
        pass: minimum >= floor - LIMINF_TOL,
        samples: top.len(),
    })
}
