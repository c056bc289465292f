//! Sampled norm curves and their CSV/JSON serialization.
//!
//! A curve is written as `abscissa,value,argmax_k` CSV (or `n,value,argmax_k`
//! for step-indexed curves) with the metadata in a JSON sidecar next to it.

use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbscissaKind {
    /// Continuous time t.
    Continuous,
    /// Step index n.
    Discrete,
}

impl AbscissaKind {
    pub fn column_name(self) -> &'static str {
        match self {
            AbscissaKind::Continuous => "abscissa",
            AbscissaKind::Discrete => "n",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub abscissa: f64,
    pub value: f64,
    /// Maximizing mode, counted from 1; 0 when not applicable.
    pub argmax_k: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CurveMeta {
    pub spectrum: String,
    pub spectrum_hash: String,
    pub kernel: String,
    pub modes: usize,
    pub tail_safe: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormCurve {
    pub kind: AbscissaKind,
    pub samples: Vec<CurveSample>,
    pub meta: CurveMeta,
}

impl NormCurve {
    pub fn new(kind: AbscissaKind, samples: Vec<CurveSample>, meta: CurveMeta) -> Result<Self> {
        if samples.windows(2).any(|w| !(w[1].abscissa > w[0].abscissa)) {
            return Err(LabError::InvalidInput(
                "curve abscissas must be strictly increasing".into(),
            ));
        }
        if let Some(s) = samples.iter().find(|s| !(s.value >= 0.0)) {
            return Err(LabError::InvalidInput(format!(
                "curve value {} at {} is negative or NaN",
                s.value, s.abscissa
            )));
        }
        Ok(Self {
            kind,
            samples,
            meta,
        })
    }

    /// A bare curve from (abscissa, value) pairs, e.g. synthetic data.
    pub fn from_pairs(
        kind: AbscissaKind,
        pairs: impl IntoIterator<Item = (f64, f64)>,
    ) -> Result<Self> {
        let samples = pairs
            .into_iter()
            .map(|(abscissa, value)| CurveSample {
                abscissa,
                value,
                argmax_k: 0,
            })
            .collect();
        Self::new(
            kind,
            samples,
            CurveMeta {
                tail_safe: true,
                ..CurveMeta::default()
            },
        )
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn abscissas(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.abscissa)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.value)
    }

    pub fn max_value(&self) -> f64 {
        self.values().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([self.kind.column_name(), "value", "argmax_k"])?;
        for s in &self.samples {
            let x = match self.kind {
                AbscissaKind::Discrete => format!("{}", s.abscissa as u64),
                AbscissaKind::Continuous => format!("{:e}", s.abscissa),
            };
            wtr.write_record([x, format!("{:.17e}", s.value), s.argmax_k.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        let kind = match headers.get(0) {
            Some("n") => AbscissaKind::Discrete,
            Some("abscissa") | Some("t") | Some("xi") | Some("r") => AbscissaKind::Continuous,
            other => {
                return Err(LabError::Parse(format!(
                    "unexpected first CSV column {other:?}; expected `abscissa` or `n`"
                )))
            }
        };
        let mut samples = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |i: usize| -> Result<&str> {
                rec.get(i)
                    .ok_or_else(|| LabError::Parse(format!("row {} has too few columns", line + 2)))
            };
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| LabError::Parse(format!("row {}: bad number \"{s}\"", line + 2)))
            };
            let abscissa = parse(field(0)?)?;
            let value = parse(field(1)?)?;
            let argmax_k = match rec.get(2) {
                Some(s) if !s.trim().is_empty() => s.trim().parse().map_err(|_| {
                    LabError::Parse(format!("row {}: bad argmax \"{s}\"", line + 2))
                })?,
                _ => 0,
            };
            samples.push(CurveSample {
                abscissa,
                value,
                argmax_k,
            });
        }
        Self::new(
            kind,
            samples,
            CurveMeta {
                tail_safe: true,
                ..CurveMeta::default()
            },
        )
    }

    /// Writes `<stem>.csv` and the `<stem>.json` sidecar; returns both paths.
    pub fn save(&self, stem: &Path) -> Result<(PathBuf, PathBuf)> {
        let csv_path = stem.with_extension("csv");
        let json_path = stem.with_extension("json");
        if let Some(parent) = csv_path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        self.write_csv(std::fs::File::create(&csv_path)?)?;
        let sidecar = serde_json::json!({
            "abscissa_kind": self.kind,
            "samples": self.samples.len(),
            "meta": self.meta,
        });
        std::fs::write(&json_path, serde_json::to_string_pretty(&sidecar)? + "\n")?;
        Ok((csv_path, json_path))
    }

    pub fn load(csv_path: &Path) -> Result<Self> {
        let mut curve = Self::read_csv(std::fs::File::open(csv_path)?)?;
        let sidecar = csv_path.with_extension("json");
        if sidecar.exists() {
            let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&sidecar)?)?;
            if let Some(meta) = v.get("meta") {
                curve.meta = serde_json::from_value(meta.clone())?;
            }
        }
        Ok(curve)
    }
}
