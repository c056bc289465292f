//! Eigenvalue families modelling normal generators on ℓ².
//!
//! A [`SpectrumSpec`] is the serializable description; [`Spectrum`] is the
//! validated, eagerly materialized form that the curve evaluators sweep.
//! Per-mode quantities that every kernel needs (`Re(1/λ)`, `log|λ|`) are
//! computed once at construction.

use crate::error::{LabError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Upper bound on the truncation count.
pub const MAX_MODES: usize = 10_000_000;

/// Relative slack in the polynomial margin comparison. `1/(1/k)` is not
/// always exactly `k` in floating point, so the boundary case `C = 1` on
/// `PolyComb` needs a few ulps of room.
pub const MARGIN_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// λ_k = −γ + ik
    ExpComb {
        gamma: f64,
    },
    /// λ_k = −k^{−β} + ik
    PolyComb {
        beta: f64,
    },
    Custom(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpectrumSpec", into = "RawSpectrumSpec")]
pub struct SpectrumSpec {
    pub family: Family,
    pub modes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectrumSpec {
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eigenvalues: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    modes: Option<usize>,
}

impl TryFrom<RawSpectrumSpec> for SpectrumSpec {
    type Error = String;

    fn try_from(raw: RawSpectrumSpec) -> std::result::Result<Self, String> {
        let spec = match raw.family.as_str() {
            "exp_comb" => {
                let gamma = raw.gamma.ok_or("exp_comb requires \"gamma\"")?;
                let modes = raw.modes.ok_or("exp_comb requires \"modes\"")?;
                SpectrumSpec::exp_comb(gamma, modes)
            }
            "poly_comb" => {
                let beta = raw.beta.ok_or("poly_comb requires \"beta\"")?;
                let modes = raw.modes.ok_or("poly_comb requires \"modes\"")?;
                SpectrumSpec::poly_comb(beta, modes)
            }
            "custom" => {
                let eig = raw.eigenvalues.ok_or("custom requires \"eigenvalues\"")?;
                if let Some(m) = raw.modes {
                    if m != eig.len() {
                        return Err(format!(
                            "\"modes\" = {m} but {} eigenvalues given",
                            eig.len()
                        ));
                    }
                }
                SpectrumSpec::custom(
                    eig.iter()
                        .map(|[re, im]| Complex64::new(*re, *im))
                        .collect(),
                )
            }
            other => return Err(format!("unknown family \"{other}\"")),
        };
        let spec = spec.map_err(|e| e.to_string())?;
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

impl From<SpectrumSpec> for RawSpectrumSpec {
    fn from(spec: SpectrumSpec) -> Self {
        let modes = Some(spec.modes);
        match spec.family {
            Family::ExpComb { gamma } => RawSpectrumSpec {
                family: "exp_comb".into(),
                gamma: Some(gamma),
                beta: None,
                eigenvalues: None,
                modes,
            },
            Family::PolyComb { beta } => RawSpectrumSpec {
                family: "poly_comb".into(),
                gamma: None,
                beta: Some(beta),
                eigenvalues: None,
                modes,
            },
            Family::Custom(v) => RawSpectrumSpec {
                family: "custom".into(),
                gamma: None,
                beta: None,
                eigenvalues: Some(v.iter().map(|z| [z.re, z.im]).collect()),
                modes,
            },
        }
    }
}

impl SpectrumSpec {
    pub fn exp_comb(gamma: f64, modes: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(LabError::InvalidSpectrum(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        Self::check_modes(modes)?;
        Ok(Self {
            family: Family::ExpComb { gamma },
            modes,
        })
    }

    pub fn poly_comb(beta: f64, modes: usize) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(LabError::InvalidSpectrum(format!(
                "beta must be positive, got {beta}"
            )));
        }
        Self::check_modes(modes)?;
        Ok(Self {
            family: Family::PolyComb { beta },
            modes,
        })
    }

    pub fn custom(eigenvalues: Vec<Complex64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(LabError::InvalidSpectrum("custom spectrum is empty".into()));
        }
        let modes = eigenvalues.len();
        Self::check_modes(modes)?;
        let spec = Self {
            family: Family::Custom(eigenvalues),
            modes,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn check_modes(modes: usize) -> Result<()> {
        if modes == 0 || modes > MAX_MODES {
            return Err(LabError::InvalidSpectrum(format!(
                "mode count must be in 1..={MAX_MODES}, got {modes}"
            )));
        }
        Ok(())
    }

    /// Same family with a different truncation count (Custom spectra are fixed).
    pub fn with_modes(&self, modes: usize) -> Result<Self> {
        match &self.family {
            Family::ExpComb { gamma } => Self::exp_comb(*gamma, modes),
            Family::PolyComb { beta } => Self::poly_comb(*beta, modes),
            Family::Custom(_) => Err(LabError::InvalidInput(
                "cannot change the mode count of a custom spectrum".into(),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        Self::check_modes(self.modes)?;
        if let Family::Custom(v) = &self.family {
            if v.len() != self.modes {
                return Err(LabError::InvalidSpectrum(
                    "mode count does not match eigenvalue list".into(),
                ));
            }
            for (i, z) in v.iter().enumerate() {
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(LabError::InvalidSpectrum(format!(
                        "eigenvalue {} is not finite",
                        i + 1
                    )));
                }
                if z.re >= 0.0 {
                    return Err(LabError::InvalidSpectrum(format!(
                        "eigenvalue {} = {z} is not in the open left half-plane",
                        i + 1
                    )));
                }
            }
            let mut sorted: Vec<(f64, f64)> = v.iter().map(|z| (z.re, z.im)).collect();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(LabError::InvalidSpectrum(
                    "custom spectrum has duplicate eigenvalues".into(),
                ));
            }
        }
        Ok(())
    }

    /// The k-th eigenvalue, k = 1..=modes.
    pub fn eigenvalue(&self, k: usize) -> Complex64 {
        match &self.family {
            Family::ExpComb { gamma } => Complex64::new(-gamma, k as f64),
            Family::PolyComb { beta } => Complex64::new(-(k as f64).powf(-beta), k as f64),
            Family::Custom(v) => v[k - 1],
        }
    }

    /// Builds the validated, materialized spectrum.
    pub fn build(&self) -> Result<Spectrum> {
        Spectrum::new(self.clone())
    }

    /// Stable short identifier of the spec (first 16 hex digits of SHA-256 of its JSON).
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("spectrum spec serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn describe(&self) -> String {
        match &self.family {
            Family::ExpComb { gamma } => format!("exp_comb(gamma={gamma}, K={})", self.modes),
            Family::PolyComb { beta } => format!("poly_comb(beta={beta}, K={})", self.modes),
            Family::Custom(_) => format!("custom(K={})", self.modes),
        }
    }
}

/// A validated spectrum with eigenvalues stored eagerly.
#[derive(Debug, Clone)]
pub struct Spectrum {
    spec: SpectrumSpec,
    eigenvalues: Vec<Complex64>,
    /// Re(1/λ_k) = Re λ_k / |λ_k|²
    inv_re: Vec<f64>,
    log_abs: Vec<f64>,
}

impl Spectrum {
    pub fn new(spec: SpectrumSpec) -> Result<Self> {
        spec.validate()?;
        let eigenvalues: Vec<Complex64> = (1..=spec.modes).map(|k| spec.eigenvalue(k)).collect();
        for (i, z) in eigenvalues.iter().enumerate() {
            if !(z.re < 0.0) || *z == Complex64::new(0.0, 0.0) {
                return Err(LabError::InvalidSpectrum(format!(
                    "eigenvalue {} = {z} is not in the open left half-plane",
                    i + 1
                )));
            }
        }
        if let Family::PolyComb { beta } = spec.family {
            let check = margin_check(&eigenvalues, beta, 1.0, 1.0);
            if !check.pass {
                return Err(LabError::InvalidSpectrum(format!(
                    "poly_comb(beta={beta}) fails the polynomial margin at {} modes",
                    check.failures.len()
                )));
            }
        }
        let inv_re = eigenvalues.iter().map(|z| z.re / z.norm_sqr()).collect();
        let log_abs = eigenvalues.iter().map(|z| z.norm().ln()).collect();
        Ok(Self {
            spec,
            eigenvalues,
            inv_re,
            log_abs,
        })
    }

    pub fn spec(&self) -> &SpectrumSpec {
        &self.spec
    }

    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn inv_re(&self) -> &[f64] {
        &self.inv_re
    }

    pub fn log_abs(&self) -> &[f64] {
        &self.log_abs
    }

    /// Largest real part; negative for every valid spectrum.
    pub fn abscissa(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Outcome of the polynomial spectral-margin test |Im λ| ≥ C/|Re λ|^{1/β}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralMarginCheck {
    pub beta: f64,
    pub c: f64,
    pub delta: f64,
    /// (k, λ_k) for every violating mode, k counted from 1.
    pub failures: Vec<(usize, [f64; 2])>,
    pub pass: bool,
}

fn margin_check(eigenvalues: &[Complex64], beta: f64, c: f64, delta: f64) -> SpectralMarginCheck {
    let failures: Vec<(usize, [f64; 2])> = eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, z)| {
            let re = z.re.abs();
            // Only modes near the imaginary axis are constrained.
            if z.re < -delta {
                return false;
            }
            // |Im λ| · |Re λ|^{1/β} < C, compared with a few ulps of slack.
            z.im.abs() * re.powf(1.0 / beta) < c * (1.0 - MARGIN_RTOL)
        })
        .map(|(i, z)| (i + 1, [z.re, z.im]))
        .collect();
    SpectralMarginCheck {
        beta,
        c,
        delta,
        pass: failures.is_empty(),
        failures,
    }
}

/// Checks |Im λ| ≥ C/|Re λ|^{1/β} for every eigenvalue with Re λ ≥ −δ.
pub fn check_poly_condition(
    spec: &SpectrumSpec,
    beta: f64,
    c: f64,
    delta: f64,
) -> Result<SpectralMarginCheck> {
    for (name, v) in [("beta", beta), ("C", c), ("delta", delta)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(LabError::InvalidInput(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    let spectrum = spec.build()?;
    Ok(margin_check(spectrum.eigenvalues(), beta, c, delta))
}

/// The eigenvalue list of a validated spec.
pub fn eigenvalues(spec: &SpectrumSpec) -> Result<Vec<Complex64>> {
    Ok(spec.build()?.eigenvalues)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exp_comb_third_eigenvalue() {
        let ev = eigenvalues(&SpectrumSpec::exp_comb(1.0, 5).unwrap()).unwrap();
        assert_eq!(ev[2], Complex64::new(-1.0, 3.0));
        assert_eq!(ev.len(), 5);
    }

    #[test]
    fn poly_comb_second_eigenvalue() {
        let ev = eigenvalues(&SpectrumSpec::poly_comb(1.0, 4).unwrap()).unwrap();
        assert_eq!(ev[1], Complex64::new(-0.5, 2.0));
    }

    #[test]
    fn custom_passthrough() {
        let ev =
            eigenvalues(&SpectrumSpec::custom(vec![Complex64::new(-2.0, 0.0)]).unwrap()).unwrap();
        assert_eq!(ev, vec![Complex64::new(-2.0, 0.0)]);
    }

    #[test]
    fn rejects_bad_spectra() {
        assert!(SpectrumSpec::custom(vec![Complex64::new(0.0, 1.0)]).is_err());
        assert!(SpectrumSpec::custom(vec![Complex64::new(1.0, 0.0)]).is_err());
        assert!(SpectrumSpec::custom(vec![]).is_err());
        let z = Complex64::new(-1.0, 2.0);
        assert!(SpectrumSpec::custom(vec![z, z]).is_err());
        assert!(SpectrumSpec::exp_comb(0.0, 4).is_err());
        assert!(SpectrumSpec::exp_comb(1.0, 0).is_err());
        assert!(SpectrumSpec::poly_comb(-1.0, 4).is_err());
    }

    #[test]
    fn poly_margin_passes_at_c_one() {
        let spec = SpectrumSpec::poly_comb(1.0, 100).unwrap();
        let check = check_poly_condition(&spec, 1.0, 1.0, 1.0).unwrap();
        assert!(check.pass);
        assert!(check.failures.is_empty());
    }

    #[test]
    fn exp_comb_passes_vacuously() {
        let spec = SpectrumSpec::exp_comb(1.0, 100).unwrap();
        let check = check_poly_condition(&spec, 1.0, 1.0, 0.5).unwrap();
        assert!(check.pass);
    }

    #[test]
    fn poly_margin_fails_everywhere_at_c_two() {
        let spec = SpectrumSpec::poly_comb(1.0, 100).unwrap();
        let check = check_poly_condition(&spec, 1.0, 2.0, 1.0).unwrap();
        assert!(!check.pass);
        assert_eq!(check.failures.len(), 100);
        assert_eq!(check.failures[0].0, 1);
    }

    #[test]
    fn json_round_trip_and_shape() {
        let spec = SpectrumSpec::exp_comb(1.5, 64).unwrap();
        let json = serde_json::to_value(&spec).unwrap();
        assert_eq!(json["family"], "exp_comb");
        assert_eq!(json["gamma"], 1.5);
        assert_eq!(json["modes"], 64);
        let back: SpectrumSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, spec);

        let custom: SpectrumSpec =
            serde_json::from_str(r#"{"family":"custom","eigenvalues":[[-1,0],[-1,2]],"modes":2}"#)
                .unwrap();
        assert_eq!(custom.modes, 2);
        assert!(serde_json::from_str::<SpectrumSpec>(
            r#"{"family":"custom","eigenvalues":[[1,0]]}"#
        )
        .is_err());
        assert!(
            serde_json::from_str::<SpectrumSpec>(r#"{"family":"exp_comb","gamma":1}"#).is_err()
        );
        assert!(serde_json::from_str::<SpectrumSpec>(
            r#"{"family":"exp_comb","gamma":1,"modes":3,"x":1}"#
        )
        .is_err());
    }

    #[test]
    fn hash_is_stable_and_discriminating() {
        let a = SpectrumSpec::exp_comb(1.0, 64).unwrap();
        let b = SpectrumSpec::exp_comb(1.0, 65).unwrap();
        assert_eq!(a.hash(), a.clone().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }

    proptest! {
        #[test]
        fn combs_strictly_increase_in_imaginary_part(gamma in 0.01f64..10.0, beta in 0.1f64..4.0, k in 1usize..500) {
            for spec in [SpectrumSpec::exp_comb(gamma, k).unwrap(), SpectrumSpec::poly_comb(beta, k).unwrap()] {
                let ev = eigenvalues(&spec).unwrap();
                prop_assert_eq!(ev.len(), k);
                prop_assert!(ev.windows(2).all(|w| w[1].im.abs() > w[0].im.abs()));
                prop_assert!(ev.iter().all(|z| z.re < 0.0));
            }
        }

        #[test]
        fn poly_margin_passes_iff_c_at_most_one(beta in 0.2f64..3.0, c in 0.05f64..2.0, k in 1usize..300) {
            prop_assume!((c - 1.0).abs() > 1e-9);
            let spec = SpectrumSpec::poly_comb(beta, k).unwrap();
            let check = check_poly_condition(&spec, beta, c, 1.0).unwrap();
            prop_assert_eq!(check.pass, c <= 1.0);
        }
    }
}
