//! Measured constants for O-type inequalities.

use serde::{Deserialize, Serialize};

/// Outcome of sweeping `LHS/RHS` of an inequality over a grid.
///
/// No pass/fail is encoded here: the constants in the inequalities are only
/// known to exist, so callers decide which thresholds apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityVerdict {
    pub probe: String,
    pub grid: String,
    /// sup of LHS/RHS over the grid.
    pub constant: f64,
    /// Abscissa at which the sup is attained.
    pub argmax: f64,
    /// Every ratio on the grid was a finite number.
    pub finite: bool,
    /// sup over the last dyadic window divided by sup over the one before.
    pub trend: f64,
    pub samples: usize,
    /// The (abscissa, ratio) pairs the verdict was built from.
    #[serde(skip)]
    pub ratios: Vec<(f64, f64)>,
}

impl InequalityVerdict {
    /// Builds a verdict from (abscissa, ratio) pairs sorted by abscissa.
    ///
    /// The trend compares the suprema over (x/2, x] and (x/4, x/2], where x is
    /// the largest abscissa; it is NaN when either window is empty.
    pub fn from_ratios(
        probe: impl Into<String>,
        grid: impl Into<String>,
        ratios: &[(f64, f64)],
    ) -> Self {
        let finite = !ratios.is_empty() && ratios.iter().all(|(_, r)| r.is_finite());
        let (argmax, constant) =
            ratios
                .iter()
                .fold((f64::NAN, f64::NEG_INFINITY), |acc, &(x, r)| {
                    if r > acc.1 || r.is_nan() && !acc.1.is_nan() {
                        (x, r)
                    } else {
                        acc
                    }
                });
        Self {
            probe: probe.into(),
            grid: grid.into(),
            constant,
            argmax,
            finite,
            trend: dyadic_trend(ratios),
            samples: ratios.len(),
            ratios: ratios.to_vec(),
        }
    }
}

/// sup over (x/2, x] divided by sup over (x/4, x/2] for the largest abscissa x.
pub fn dyadic_trend(ratios: &[(f64, f64)]) -> f64 {
    let Some(&(x_max, _)) = ratios.iter().max_by(|a, b| a.0.total_cmp(&b.0)) else {
        return f64::NAN;
    };
    let sup_in = |lo: f64, hi: f64| {
        ratios
            .iter()
            .filter(|(x, _)| *x > lo && *x <= hi)
            .map(|&(_, r)| r)
            .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))))
    };
    match (sup_in(x_max / 2.0, x_max), sup_in(x_max / 4.0, x_max / 2.0)) {
        (Some(last), Some(prev)) => last / prev,
        _ => f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_trend() {
        let r: Vec<(f64, f64)> = (0..8)
            .map(|j| (2f64.powi(j), 1.0 + 1.0 / 2f64.powi(j)))
            .collect();
        let v = InequalityVerdict::from_ratios("p", "dyadic:1:128", &r);
        assert_eq!(v.constant, 2.0);
        assert_eq!(v.argmax, 1.0);
        assert!(v.finite);
        assert!((v.trend - (1.0 + 1.0 / 128.0) / (1.0 + 1.0 / 64.0)).abs() < 1e-15);
    }

    #[test]
    fn non_finite_detected() {
        let v = InequalityVerdict::from_ratios("p", "g", &[(1.0, 1.0), (2.0, f64::INFINITY)]);
        assert!(!v.finite);
        assert_eq!(v.constant, f64::INFINITY);
        let v = InequalityVerdict::from_ratios("p", "g", &[(1.0, 1.0), (2.0, f64::NAN)]);
        assert!(!v.finite);
    }

    #[test]
    fn trend_needs_two_windows() {
        assert!(dyadic_trend(&[(1.0, 1.0)]).is_nan());
        assert!(dyadic_trend(&[]).is_nan());
    }
}
