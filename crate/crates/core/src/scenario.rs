//! Scenario configs: parsing, schema validation and execution.
//!
//! A config is checked in three passes: JSON syntax, the JSON schema in
//! `schema/scenario.schema.json`, then typed deserialization. Any failure is
//! reported as [`LabError::Schema`] with a JSON pointer to the offending key.

use crate::bcalculus::{b0_norm, FunctionFamily};
use crate::crank_nicolson::{cn_norm_curve, StepsizeSchedule};
use crate::curve::{AbscissaKind, CurveMeta, CurveSample, NormCurve};
use crate::decay::{check_order, fit_power, liminf_check, DecayModel, FitWindow};
use crate::error::{LabError, Result};
use crate::grid::Grid;
use crate::lyapunov::{
    gautschi_check, pz_inequality_probe, q_bound_check, shifted_inverse_integral_check,
    step1_xi_log_check, ModeVector, QBoundVariant,
};
use crate::spectral_calculus::{norm_curve, KernelKind};
use crate::spectrum::{Spectrum, SpectrumSpec};
use crate::suite::{run_criterion, Check};
use crate::verdict::InequalityVerdict;
use serde::{Deserialize, Deserializer, Serialize};
use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub const SCHEMA_VERSION: u32 = 1;

/// The JSON schema every config is validated against.
pub const SCHEMA: &str = include_str!("../schema/scenario.schema.json");

fn parse_str<'de, D, T>(d: D) -> std::result::Result<T, D::Error>
where
    D: Deserializer<'de>,
    T: FromStr,
    T::Err: Display,
{
    let s = String::deserialize(d)?;
    s.parse().map_err(serde::de::Error::custom)
}

fn parse_opt_str<'de, D, T>(d: D) -> std::result::Result<Option<T>, D::Error>
where
    D: Deserializer<'de>,
    T: FromStr,
    T::Err: Display,
{
    Option::<String>::deserialize(d)?
        .map(|s| s.parse().map_err(serde::de::Error::custom))
        .transpose()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    /// Free-text tag naming the statement the scenario exercises.
    pub statement: String,
    #[serde(default)]
    pub description: Option<String>,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Step {
    Norms(NormsStep),
    Cayley(CayleyStep),
    Bnorm(BnormStep),
    Probe(ProbeStep),
    Suite(SuiteStep),
}

#[derive(Debug, Clone, Deserialize)]
pub struct NormsStep {
    pub id: String,
    pub spectrum: SpectrumSpec,
    pub kernel: KernelKind,
    pub grid: Grid,
    #[serde(default)]
    pub analysis: Analysis,
    #[serde(default)]
    pub expect: Expect,
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CayleyStep {
    pub id: String,
    pub spectrum: SpectrumSpec,
    pub schedule: StepsizeSchedule,
    pub alpha: f64,
    pub steps: u64,
    pub samples: Grid,
    #[serde(default)]
    pub analysis: Analysis,
    #[serde(default)]
    pub expect: Expect,
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BnormFamily {
    Fta,
    Hshift,
}

#[derive(Debug, Clone, Deserialize)]
pub struct BnormStep {
    pub id: String,
    pub family: BnormFamily,
    #[serde(default)]
    pub alpha: Option<f64>,
    pub grid: Grid,
    #[serde(default)]
    pub analysis: Analysis,
    #[serde(default)]
    pub expect: Expect,
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ProbeStep {
    pub id: String,
    #[serde(default)]
    pub spectrum: Option<SpectrumSpec>,
    pub probe: Probe,
    #[serde(default)]
    pub expect: Expect,
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SuiteStep {
    pub id: String,
    pub criteria: Vec<u32>,
    #[serde(default)]
    pub expect: Expect,
}

/// Vector in the eigenbasis: `power:p` (x_k = k^{−p}) or `random:seed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VectorSpec {
    Power(f64),
    Random(u64),
}

impl VectorSpec {
    pub fn build(self, modes: usize) -> ModeVector {
        match self {
            VectorSpec::Power(p) => ModeVector::power(modes, p),
            VectorSpec::Random(seed) => ModeVector::random(modes, seed),
        }
    }
}

impl FromStr for VectorSpec {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            LabError::Parse(format!(
                "bad vector \"{s}\" (expected power:p or random:seed)"
            ))
        };
        match s.split_once(':') {
            Some(("power", p)) => p.trim().parse().map(VectorSpec::Power).map_err(|_| bad()),
            Some(("random", n)) => n.trim().parse().map(VectorSpec::Random).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

impl<'de> Deserialize<'de> for VectorSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        parse_str(d)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Probe {
    QBound {
        alpha: f64,
        #[serde(default)]
        beta: Option<f64>,
        xi_grid: Grid,
        #[serde(default)]
        vector: Option<VectorSpec>,
    },
    ShiftedInverse {
        gamma: f64,
        xi_grid: Grid,
        #[serde(default)]
        vector: Option<VectorSpec>,
    },
    Step1 {
        xi_grid: Grid,
        #[serde(default)]
        vector: Option<VectorSpec>,
    },
    Pz {
        schedule: StepsizeSchedule,
        steps: usize,
        r_grid: Grid,
        x0: VectorSpec,
        y: VectorSpec,
    },
    Gautschi {
        tau_grid: Grid,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct Analysis {
    #[serde(default, deserialize_with = "parse_opt_str")]
    pub fit: Option<FitWindow>,
    #[serde(default)]
    pub order: Option<OrderAnalysis>,
    #[serde(default)]
    pub liminf: Option<LiminfAnalysis>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct OrderAnalysis {
    pub model: DecayModel,
    #[serde(deserialize_with = "parse_str")]
    pub window: FitWindow,
}

#[derive(Debug, Clone, Deserialize)]
pub struct LiminfAnalysis {
    pub q: f64,
    pub floor: f64,
}

/// Expected-verdict block; every present key becomes a check.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct Expect {
    #[serde(default)]
    pub exponent: Option<[f64; 2]>,
    #[serde(default)]
    pub constant: Option<[f64; 2]>,
    #[serde(default)]
    pub trend_max: Option<f64>,
    #[serde(default)]
    pub finite: Option<bool>,
    #[serde(default)]
    pub max_value: Option<[f64; 2]>,
    #[serde(default)]
    pub liminf: Option<bool>,
    #[serde(default)]
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepReport {
    pub id: String,
    pub op: &'static str,
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<InequalityVerdict>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub schema_version: u32,
    pub name: String,
    pub statement: String,
    pub steps: Vec<StepReport>,
    pub pass: bool,
}

fn schema_error(path: impl Into<String>, message: impl Into<String>) -> LabError {
    LabError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// Validates `text` against the schema and deserializes it.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| {
        schema_error(
            "",
            format!(
                "invalid JSON at line {}, column {}: {e}",
                e.line(),
                e.column()
            ),
        )
    })?;
    let schema: serde_json::Value =
        serde_json::from_str(SCHEMA).expect("bundled schema is valid JSON");
    let validator = jsonschema::validator_for(&schema).expect("bundled schema compiles");
    if let Some(err) = validator.iter_errors(&value).next() {
        let path = err.instance_path().to_string();
        return Err(schema_error(
            if path.is_empty() { "/".into() } else { path },
            err.to_string(),
        ));
    }
    let scenario: Scenario = serde_path_to_error::deserialize(&value).map_err(|e| {
        let pointer = e
            .path()
            .iter()
            .map(|seg| match seg {
                serde_path_to_error::Segment::Seq { index } => index.to_string(),
                serde_path_to_error::Segment::Map { key } => {
                    key.replace('~', "~0").replace('/', "~1")
                }
                _ => "?".into(),
            })
            .fold(String::new(), |acc, s| acc + "/" + &s);
        schema_error(pointer, e.into_inner().to_string())
    })?;
    if scenario.schema_version != SCHEMA_VERSION {
        return Err(schema_error(
            "/schema_version",
            format!(
                "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
                scenario.schema_version
            ),
        ));
    }
    let mut ids = std::collections::BTreeSet::new();
    for (i, step) in scenario.steps.iter().enumerate() {
        if !ids.insert(step.id()) {
            return Err(schema_error(
                format!("/steps/{i}/id"),
                format!("duplicate step id \"{}\"", step.id()),
            ));
        }
    }
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    parse_scenario(&std::fs::read_to_string(path)?)
}

impl Step {
    pub fn id(&self) -> &str {
        match self {
            Step::Norms(s) => &s.id,
            Step::Cayley(s) => &s.id,
            Step::Bnorm(s) => &s.id,
            Step::Probe(s) => &s.id,
            Step::Suite(s) => &s.id,
        }
    }

    fn op(&self) -> &'static str {
        match self {
            Step::Norms(_) => "norms",
            Step::Cayley(_) => "cayley",
            Step::Bnorm(_) => "bnorm",
            Step::Probe(_) => "probe",
            Step::Suite(_) => "suite",
        }
    }
}

/// Runs every step in order. Artifacts go under `out/<output>` when `out` is
/// given and the step names an output; nothing is written otherwise.
///
/// Returns `Err` only for numerical or I/O failures; failed expectations are
/// recorded in the report.
pub fn run_scenario(scenario: &Scenario, out: Option<&Path>) -> Result<ScenarioReport> {
    let mut steps = Vec::with_capacity(scenario.steps.len());
    for step in &scenario.steps {
        steps.push(run_step(step, out)?);
    }
    let pass = steps.iter().all(|s| s.pass);
    let report = ScenarioReport {
        schema_version: SCHEMA_VERSION,
        name: scenario.name.clone(),
        statement: scenario.statement.clone(),
        steps,
        pass,
    };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(
            dir.join(format!("{}.report.json", scenario.name)),
            serde_json::to_string_pretty(&report)? + "\n",
        )?;
    }
    Ok(report)
}

struct Outcome {
    metrics: BTreeMap<String, f64>,
    verdict: Option<InequalityVerdict>,
    liminf_pass: Option<bool>,
    curve: Option<NormCurve>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            metrics: BTreeMap::new(),
            verdict: None,
            liminf_pass: None,
            curve: None,
        }
    }
}

fn run_step(step: &Step, out: Option<&Path>) -> Result<StepReport> {
    let (outcome, expect, output) = match step {
        Step::Norms(s) => {
            let spectrum = s.spectrum.build()?;
            let curve = norm_curve(&spectrum, s.kernel, &s.grid.points()?)?;
            (analyze(curve, &s.analysis)?, &s.expect, s.output.as_deref())
        }
        Step::Cayley(s) => {
            let spectrum = s.spectrum.build()?;
            let samples = s.samples.integer_points()?;
            let r = cn_norm_curve(&spectrum, &s.schedule, s.alpha, s.steps, &samples)?;
            (
                analyze(r.curve, &s.analysis)?,
                &s.expect,
                s.output.as_deref(),
            )
        }
        Step::Bnorm(s) => {
            let curve = bnorm_curve(s.family, s.alpha, &s.grid.points()?)?;
            (analyze(curve, &s.analysis)?, &s.expect, s.output.as_deref())
        }
        Step::Probe(s) => {
            let spectrum = s.spectrum.as_ref().map(|sp| sp.build()).transpose()?;
            let v = run_probe(&s.probe, spectrum.as_ref())?;
            let mut o = Outcome::new();
            o.metrics.insert("constant".into(), v.constant);
            o.metrics.insert("trend".into(), v.trend);
            o.verdict = Some(v);
            (o, &s.expect, s.output.as_deref())
        }
        Step::Suite(s) => {
            let mut o = Outcome::new();
            let mut all = true;
            for &id in &s.criteria {
                let r = run_criterion(id)?;
                o.metrics
                    .insert(format!("criterion_{id:02}"), if r.pass { 1.0 } else { 0.0 });
                all &= r.pass;
            }
            o.metrics
                .insert("all_pass".into(), if all { 1.0 } else { 0.0 });
            (o, &s.expect, None)
        }
    };
    let checks = expectation_checks(&outcome, expect);
    let mut artifacts = Vec::new();
    if let (Some(dir), Some(name)) = (out, output) {
        let stem: PathBuf = dir.join(name);
        // Paths in the report are relative to `out` so reports do not depend on it.
        let rel = |p: &Path| p.strip_prefix(dir).unwrap_or(p).display().to_string();
        if let Some(curve) = &outcome.curve {
            let (csv, json) = curve.save(&stem)?;
            artifacts.push(rel(&csv));
            artifacts.push(rel(&json));
        }
        if let Some(v) = &outcome.verdict {
            let csv = if outcome.curve.is_some() {
                stem.with_extension("ratios.csv")
            } else {
                stem.with_extension("csv")
            };
            write_ratio_csv(&csv, v)?;
            let json = stem.with_extension("verdict.json");
            std::fs::write(&json, serde_json::to_string_pretty(v)? + "\n")?;
            artifacts.push(rel(&csv));
            artifacts.push(rel(&json));
        }
    }
    Ok(StepReport {
        id: step.id().to_string(),
        op: step.op(),
        pass: checks.iter().all(|c| c.pass),
        metrics: outcome.metrics,
        verdict: outcome.verdict,
        checks,
        artifacts,
    })
}

fn write_ratio_csv(path: &Path, v: &InequalityVerdict) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["abscissa", "ratio"])?;
    for (x, r) in &v.ratios {
        w.write_record([format!("{x:e}"), format!("{r:e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// b0 norm of `fta:t,α` or `hshift:t` over a t grid, as a curve.
pub fn bnorm_curve(family: BnormFamily, alpha: Option<f64>, grid: &[f64]) -> Result<NormCurve> {
    let samples = grid
        .iter()
        .map(|&t| {
            let f = match family {
                BnormFamily::Fta => FunctionFamily::Fta {
                    t,
                    alpha: alpha.ok_or_else(|| LabError::InvalidInput("fta needs alpha".into()))?,
                },
                BnormFamily::Hshift => FunctionFamily::Hshift { t },
            };
            b0_norm(f).map(|r| CurveSample {
                abscissa: t,
                value: r.b0,
                argmax_k: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let kernel = match family {
        BnormFamily::Fta => format!("b0:fta:{}", alpha.unwrap_or(f64::NAN)),
        BnormFamily::Hshift => "b0:hshift".into(),
    };
    NormCurve::new(
        AbscissaKind::Continuous,
        samples,
        CurveMeta {
            kernel,
            tail_safe: true,
            ..CurveMeta::default()
        },
    )
}

fn analyze(curve: NormCurve, a: &Analysis) -> Result<Outcome> {
    let mut o = Outcome::new();
    o.metrics.insert("max_value".into(), curve.max_value());
    if let Some(w) = a.fit {
        let fit = fit_power(&curve, w)?;
        o.metrics.insert("exponent".into(), fit.exponent);
        o.metrics.insert("r_squared".into(), fit.r_squared);
    }
    if let Some(ord) = &a.order {
        let v = check_order(&curve, ord.model, ord.window)?;
        o.metrics.insert("constant".into(), v.constant);
        o.metrics.insert("trend".into(), v.trend);
        o.verdict = Some(v);
    }
    if let Some(l) = &a.liminf {
        let v = liminf_check(&curve, l.q, l.floor)?;
        o.metrics.insert("liminf_minimum".into(), v.minimum);
        o.liminf_pass = Some(v.pass);
    }
    o.curve = Some(curve);
    Ok(o)
}

fn run_probe(probe: &Probe, spectrum: Option<&Spectrum>) -> Result<InequalityVerdict> {
    let need =
        || spectrum.ok_or_else(|| LabError::InvalidInput("this probe needs a spectrum".into()));
    let vec = |v: &Option<VectorSpec>, s: &Spectrum| v.map(|v| v.build(s.modes()));
    match probe {
        Probe::QBound {
            alpha,
            beta,
            xi_grid,
            vector,
        } => {
            let s = need()?;
            let variant = match beta {
                Some(beta) => QBoundVariant::Polynomial { beta: *beta },
                None => QBoundVariant::Exponential,
            };
            q_bound_check(
                s,
                *alpha,
                variant,
                &xi_grid.points()?,
                vec(vector, s).as_ref(),
            )
        }
        Probe::ShiftedInverse {
            gamma,
            xi_grid,
            vector,
        } => {
            let s = need()?;
            shifted_inverse_integral_check(s, *gamma, &xi_grid.points()?, vec(vector, s).as_ref())
        }
        Probe::Step1 { xi_grid, vector } => {
            let s = need()?;
            step1_xi_log_check(s, &xi_grid.points()?, vec(vector, s).as_ref())
        }
        Probe::Pz {
            schedule,
            steps,
            r_grid,
            x0,
            y,
        } => {
            let s = need()?;
            pz_inequality_probe(
                s,
                schedule,
                &x0.build(s.modes()),
                &y.build(s.modes()),
                &r_grid.points()?,
                *steps,
            )
        }
        Probe::Gautschi { tau_grid } => gautschi_check(&tau_grid.points()?),
    }
}

fn expectation_checks(o: &Outcome, e: &Expect) -> Vec<Check> {
    let mut checks = Vec::new();
    let metric = |k: &str| o.metrics.get(k).copied().unwrap_or(f64::NAN);
    if let Some([lo, hi]) = e.exponent {
        checks.push(Check::within("exponent", metric("exponent"), lo, hi));
    }
    if let Some([lo, hi]) = e.constant {
        checks.push(Check::within("constant", metric("constant"), lo, hi));
    }
    if let Some(t) = e.trend_max {
        checks.push(Check::at_most("trend", metric("trend"), t));
    }
    if let Some(want) = e.finite {
        let finite = o
            .verdict
            .as_ref()
            .map_or(metric("max_value").is_finite(), |v| v.finite);
        checks.push(Check::holds(format!("finite == {want}"), finite == want));
    }
    if let Some([lo, hi]) = e.max_value {
        checks.push(Check::within("max_value", metric("max_value"), lo, hi));
    }
    if let Some(want) = e.liminf {
        checks.push(Check::holds(
            format!("liminf pass == {want}"),
            o.liminf_pass == Some(want),
        ));
    }
    if let Some(want) = e.pass {
        checks.push(Check::holds(
            format!("all criteria pass == {want}"),
            (metric("all_pass") == 1.0) == want,
        ));
    }
    checks
}

/// Parses `list` entries like `1,2,3` as well as grid strings.
pub fn parse_sample_grid(s: &str) -> Result<Grid> {
    if s.contains(':') {
        s.parse()
    } else {
        Ok(Grid::List(
            s.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| LabError::Parse(format!("bad sample \"{x}\"")))
                })
                .collect::<Result<_>>()?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "name": "tiny",
        "statement": "exact witness",
        "steps": [{
            "op": "norms", "id": "w",
            "spectrum": {"family": "exp_comb", "gamma": 1, "modes": 64},
            "kernel": "inv_frac:1",
            "grid": "list:1",
            "expect": {"max_value": [0.4288819424803, 0.4288819424804]}
        }]
    }"#;

    #[test]
    fn minimal_scenario_runs() {
        let sc = parse_scenario(MINIMAL).unwrap();
        let r = run_scenario(&sc, None).unwrap();
        assert!(r.pass, "{r:?}");
    }

    fn pointer_of(text: &str) -> String {
        match parse_scenario(text) {
            Err(LabError::Schema { path, .. }) => path,
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn schema_errors_point_at_keys() {
        assert_eq!(
            pointer_of(&MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": \"1\"")),
            "/schema_version"
        );
        assert_eq!(
            pointer_of(&MINIMAL.replace("\"gamma\": 1", "\"gamma\": -1")),
            "/steps/0/spectrum/gamma"
        );
        assert_eq!(
            pointer_of(&MINIMAL.replace("\"kernel\"", "\"kernal\"")),
            "/steps/0"
        );
        assert_eq!(
            pointer_of(&MINIMAL.replace("inv_frac:1", "bogus")),
            "/steps/0/kernel"
        );
        assert_eq!(
            pointer_of(&MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": 7")),
            "/schema_version"
        );
        assert_eq!(pointer_of("{"), "");
    }

    #[test]
    fn vector_spec_parsing() {
        assert_eq!(
            "power:2".parse::<VectorSpec>().unwrap(),
            VectorSpec::Power(2.0)
        );
        assert_eq!(
            "random:9".parse::<VectorSpec>().unwrap(),
            VectorSpec::Random(9)
        );
        assert!("power".parse::<VectorSpec>().is_err());
    }

    #[test]
    fn reruns_are_byte_identical() {
        let sc = parse_scenario(&MINIMAL.replace(
            "\"grid\": \"list:1\"",
            "\"grid\": \"dyadic:1:1e3\", \"output\": \"w\"",
        ))
        .unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_scenario(&sc, Some(a.path())).unwrap();
        run_scenario(&sc, Some(b.path())).unwrap();
        for f in ["w.csv", "w.json"] {
            assert_eq!(
                std::fs::read(a.path().join(f)).unwrap(),
                std::fs::read(b.path().join(f)).unwrap()
            );
        }
    }
}
