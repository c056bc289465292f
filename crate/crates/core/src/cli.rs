//! Command-line front end. `main.rs` only forwards to [`run`].
//!
//! Exit codes: 0 success, 1 a verdict failed, 2 bad configuration or
//! arguments, 3 numerical failure. Errors are reported on stderr as one JSON
//! object.

use crate::bcalculus::{b0_norm, FunctionFamily};
use crate::crank_nicolson::{cn_norm_curve, StepsizeSchedule};
use crate::curve::NormCurve;
use crate::decay::{check_order, fit_power, DecayModel, FitWindow};
use crate::error::{LabError, Result};
use crate::grid::{dyadic_steps, Grid};
use crate::lyapunov::{
    gautschi_check, p_form, pz_inequality_probe, q_bound_check, q_form, r_form,
    shifted_inverse_integral_check, step1_xi_log_check, QBoundVariant,
};
use crate::matrix::{
    bcalc_apply, cayley, eigendecomposition, expm, frac_power, lyapunov_solve, matrix_to_rows,
    semigroup_bound, CMatrix, DenseOperator,
};
use crate::scenario::{
    bnorm_curve, load_scenario, parse_sample_grid, run_scenario, BnormFamily, VectorSpec,
};
use crate::spectral_calculus::{norm_curve, KernelKind};
use crate::spectrum::{Spectrum, SpectrumSpec};
use crate::suite::{run_criterion, CRITERIA};
use crate::verdict::InequalityVerdict;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "semigroup-lab",
    version,
    about = "Decay-rate experiments for inverse-generator semigroups and Crank-Nicolson"
)]
pub struct Cli {
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true, env = "SEMIGROUP_LAB_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Operator-norm curve of a spectral kernel.
    Norms {
        /// Spectrum JSON file.
        #[arg(long)]
        spec: PathBuf,
        /// semigroup | inv | inv_frac:α | frac:α | resolvent_shift
        #[arg(long)]
        kernel: KernelKind,
        /// dyadic:lo:hi | geometric:lo:hi:m | linear:lo:hi:n | list:a,b,...
        #[arg(long)]
        grid: Grid,
        /// Directory for norms.csv and its JSON sidecar; stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Crank-Nicolson norm curve ‖Π A_d(τ_j)(−A)^{−α}‖.
    Cayley {
        /// Spectrum JSON file
        #[arg(long)]
        spec: PathBuf,
        /// constant:τ | periodic:τ1,τ2,... | random:lo,hi,seed=n
        #[arg(long)]
        schedule: StepsizeSchedule,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Number of Cayley steps
        #[arg(long)]
        steps: u64,
        /// `dyadic` (powers of two up to --steps), a grid, or a list n1,n2,...
        #[arg(long, default_value = "dyadic")]
        samples: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// B0 seminorm sweep: CSV t,b0,envelope,ratio.
    Bnorm {
        #[arg(long, value_enum, default_value_t = BnormArg::Fta)]
        family: BnormArg,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Grid of t values.
        #[arg(long)]
        grid: Grid,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lyapunov forms and inequality probes.
    Lyapunov {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, value_enum)]
        probe: ProbeArg,
        /// ξ grid (r grid for r_form and pz, τ grid for gautschi).
        #[arg(long)]
        grid: Grid,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Polynomial parameter for q_bound; exponential variant when absent.
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Schedule for r_form (τ range) and pz.
        #[arg(long, default_value = "constant:2")]
        schedule: StepsizeSchedule,
        #[arg(long, default_value_t = 1 << 15)]
        steps: usize,
        /// power:p | random:seed; operator norm when absent.
        #[arg(long)]
        x: Option<VectorSpec>,
        /// Test vector for pz.
        #[arg(long, default_value = "power:1")]
        y: VectorSpec,
        /// Print the verdict JSON instead of the CSV.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dense-matrix operations on a generator A read from a JSON file.
    Matrix {
        /// Row-major [[[re, im], ...], ...].
        file: PathBuf,
        #[arg(value_enum)]
        operation: MatrixOp,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, default_value_t = 0.0)]
        xi: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// hshift:t | rpow:α | fta:t,α, applied to B = −A − I.
        #[arg(long, default_value = "fta:1,1")]
        function: FunctionFamily,
    },
    /// Fits or checks a decay model on a curve CSV.
    Fit {
        input: PathBuf,
        /// power | power:p | powerlog | powerlog:p,q | logpow:β
        #[arg(long, default_value = "power")]
        model: String,
        /// lo:hi
        #[arg(long)]
        window: FitWindow,
    },
    /// Runs the acceptance suite.
    Verify {
        #[arg(long, default_value = "paper")]
        suite: String,
        /// Comma-separated criterion numbers; all when absent.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u32>,
        /// Directory for verify.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs a scenario config.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BnormArg {
    Fta,
    Hshift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ProbeArg {
    PForm,
    QForm,
    RForm,
    QBound,
    ShiftedInverse,
    Step1,
    Pz,
    Gautschi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum MatrixOp {
    Eig,
    Expm,
    Cayley,
    Lyapunov,
    FracPower,
    Bcalc,
    SemigroupBound,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        // Fails only if a pool already exists, e.g. when called twice in-process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(LabError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            let code = if e.is_config_error() {
                EXIT_CONFIG
            } else {
                EXIT_NUMERICAL
            };
            let mut report = json!({
                "error": e.kind(),
                "exit_code": code,
                "message": e.to_string(),
            });
            if let LabError::Schema { path, .. } = &e {
                report["pointer"] = json!(path);
            }
            eprintln!("{report}");
            code
        }
    }
}

fn load_spectrum(path: &Path) -> Result<Spectrum> {
    let text = std::fs::read_to_string(path)?;
    let spec: SpectrumSpec = serde_json::from_str(&text)
        .map_err(|e| LabError::InvalidSpectrum(format!("{}: {e}", path.display())))?;
    spec.build()
}

fn emit_curve(
    curve: &NormCurve,
    out: Option<&Path>,
    stem: &str,
    stdout: &mut dyn Write,
) -> Result<()> {
    match out {
        Some(dir) => {
            curve.save(&dir.join(stem))?;
            Ok(())
        }
        None => curve.write_csv(stdout),
    }
}

fn write_csv(
    header: &[&str],
    rows: &[Vec<String>],
    out: Option<&Path>,
    stem: &str,
    stdout: &mut dyn Write,
) -> Result<()> {
    let buf = {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| LabError::Io(e.into_error()))?
    };
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(format!("{stem}.csv")), buf)?;
        }
        None => stdout.write_all(&buf)?,
    }
    Ok(())
}

fn num(x: f64) -> String {
    format!("{x:.17e}")
}

fn dispatch(cmd: Command, stdout: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Norms {
            spec,
            kernel,
            grid,
            out,
        } => {
            let s = load_spectrum(&spec)?;
            let curve = norm_curve(&s, kernel, &grid.points()?)?;
            emit_curve(&curve, out.as_deref(), "norms", stdout)?;
            Ok(0)
        }
        Command::Cayley {
            spec,
            schedule,
            alpha,
            steps,
            samples,
            out,
        } => {
            let s = load_spectrum(&spec)?;
            let pts = if samples == "dyadic" {
                dyadic_steps(steps)
            } else {
                parse_sample_grid(&samples)?.integer_points()?
            };
            let r = cn_norm_curve(&s, &schedule, alpha, steps, &pts)?;
            emit_curve(&r.curve, out.as_deref(), "cayley", stdout)?;
            Ok(0)
        }
        Command::Bnorm {
            family,
            alpha,
            grid,
            out,
        } => {
            let pts = grid.points()?;
            let fam = match family {
                BnormArg::Fta => BnormFamily::Fta,
                BnormArg::Hshift => BnormFamily::Hshift,
            };
            let curve = bnorm_curve(fam, Some(alpha), &pts)?;
            let mut rows = Vec::with_capacity(pts.len());
            for smp in &curve.samples {
                let t = smp.abscissa;
                let f = match family {
                    BnormArg::Fta => FunctionFamily::Fta { t, alpha },
                    BnormArg::Hshift => FunctionFamily::Hshift { t },
                };
                let env = b0_norm(f)?.envelope.unwrap_or(f64::NAN);
                rows.push(vec![
                    format!("{t:e}"),
                    num(smp.value),
                    num(env),
                    num(smp.value / env),
                ]);
            }
            write_csv(
                &["t", "b0", "envelope", "ratio"],
                &rows,
                out.as_deref(),
                "bnorm",
                stdout,
            )?;
            Ok(0)
        }
        Command::Lyapunov {
            spec,
            probe,
            grid,
            alpha,
            beta,
            gamma,
            schedule,
            steps,
            x,
            y,
            json,
            out,
        } => lyapunov_command(
            LyapunovArgs {
                spec,
                probe,
                grid,
                alpha,
                beta,
                gamma,
                schedule,
                steps,
                x,
                y,
                json,
            },
            out.as_deref(),
            stdout,
        ),
        Command::Matrix {
            file,
            operation,
            t,
            tau,
            xi,
            alpha,
            function,
        } => {
            let text = std::fs::read_to_string(&file)?;
            let a: DenseOperator = serde_json::from_str(&text)?;
            let value = match operation {
                MatrixOp::Eig => {
                    let e = eigendecomposition(a.matrix())?;
                    json!({
                        "eigenvalues": e.values.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                        "condition": e.condition,
                        "abscissa": a.abscissa(),
                        "normal": a.is_normal(),
                    })
                }
                MatrixOp::Expm => json!({ "t": t, "matrix": matrix_to_rows(&expm(&a, t)?) }),
                MatrixOp::Cayley => {
                    json!({ "tau": tau, "matrix": matrix_to_rows(&cayley(&a, tau)?) })
                }
                MatrixOp::Lyapunov => {
                    let sol = lyapunov_solve(&a, xi)?;
                    json!({ "xi": xi, "residual": sol.residual, "method": sol.method, "matrix": matrix_to_rows(&sol.p) })
                }
                MatrixOp::FracPower => {
                    json!({ "alpha": alpha, "matrix": matrix_to_rows(&frac_power(&a, alpha)?) })
                }
                MatrixOp::Bcalc => {
                    let n = a.dim();
                    let b = -a.matrix() - CMatrix::identity(n, n);
                    let r = bcalc_apply(function, &b)?;
                    json!({
                        "function": function.to_string(),
                        "k": r.k,
                        "error": r.error,
                        "matrix": matrix_to_rows(&r.value),
                    })
                }
                MatrixOp::SemigroupBound => {
                    json!({ "t_max": t, "bound": semigroup_bound(&(-a.matrix()), t)? })
                }
            };
            writeln!(stdout, "{}", serde_json::to_string_pretty(&value)?)?;
            Ok(0)
        }
        Command::Fit {
            input,
            model,
            window,
        } => {
            let curve = NormCurve::load(&input)?;
            let value = if model == "power" {
                let fit = fit_power(&curve, window)?;
                json!({ "model": "power", "fit": fit })
            } else {
                let m: DecayModel = model.parse()?;
                let v = check_order(&curve, m, window)?;
                json!({ "model": m.to_string(), "verdict": v })
            };
            writeln!(stdout, "{}", serde_json::to_string_pretty(&value)?)?;
            Ok(0)
        }
        Command::Verify {
            suite,
            criteria,
            out,
        } => {
            if suite != "paper" {
                return Err(LabError::InvalidInput(format!(
                    "unknown suite \"{suite}\" (only \"paper\")"
                )));
            }
            let ids: Vec<u32> = if criteria.is_empty() {
                CRITERIA.iter().map(|c| c.0).collect()
            } else {
                criteria
            };
            let mut reports = Vec::new();
            for id in ids {
                let r = run_criterion(id)?;
                writeln!(stdout, "{}", r.summary_line())?;
                reports.push(r);
            }
            let pass = reports.iter().all(|r| r.pass);
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(
                    dir.join("verify.json"),
                    serde_json::to_string_pretty(
                        &json!({ "suite": suite, "pass": pass, "criteria": reports }),
                    )? + "\n",
                )?;
            }
            Ok(if pass { 0 } else { EXIT_VERDICT })
        }
        Command::Run { config, out } => {
            let sc = load_scenario(&config)?;
            let report = run_scenario(&sc, out.as_deref())?;
            writeln!(stdout, "{}", serde_json::to_string_pretty(&report)?)?;
            Ok(if report.pass { 0 } else { EXIT_VERDICT })
        }
    }
}

struct LyapunovArgs {
    spec: Option<PathBuf>,
    probe: ProbeArg,
    grid: Grid,
    alpha: f64,
    beta: Option<f64>,
    gamma: f64,
    schedule: StepsizeSchedule,
    steps: usize,
    x: Option<VectorSpec>,
    y: VectorSpec,
    json: bool,
}

fn lyapunov_command(a: LyapunovArgs, out: Option<&Path>, stdout: &mut dyn Write) -> Result<i32> {
    let pts = a.grid.points()?;
    if a.probe == ProbeArg::Gautschi {
        let v = gautschi_check(&pts)?;
        emit_verdict(&v, "tau", |x| x, a.json, out, stdout)?;
        return Ok(0);
    }
    let path = a
        .spec
        .ok_or_else(|| LabError::InvalidInput("--spec is required for this probe".into()))?;
    let s = load_spectrum(&path)?;
    let x = a.x.map(|v| v.build(s.modes()));
    let forms =
        |f: &dyn Fn(f64) -> Result<f64>, col: &str, stdout: &mut dyn Write| -> Result<i32> {
            let rows = pts
                .iter()
                .map(|&p| f(p).map(|v| vec![format!("{p:e}"), num(v)]))
                .collect::<Result<Vec<_>>>()?;
            write_csv(&[col, "value"], &rows, out, "lyapunov", stdout)?;
            Ok(0)
        };
    let inv = |x: f64| 1.0 / x;
    let v = match a.probe {
        ProbeArg::PForm => return forms(&|xi| p_form(&s, xi, x.as_ref()), "xi", stdout),
        ProbeArg::QForm => return forms(&|xi| q_form(&s, xi, x.as_ref()), "xi", stdout),
        ProbeArg::RForm => {
            let (lo, hi) = (a.schedule.tau_min(), a.schedule.tau_max());
            return forms(&|r| r_form(&s, lo, hi, r, x.as_ref()), "r", stdout);
        }
        ProbeArg::QBound => {
            let variant = match a.beta {
                Some(beta) => QBoundVariant::Polynomial { beta },
                None => QBoundVariant::Exponential,
            };
            q_bound_check(&s, a.alpha, variant, &pts, x.as_ref())?
        }
        ProbeArg::ShiftedInverse => shifted_inverse_integral_check(&s, a.gamma, &pts, x.as_ref())?,
        ProbeArg::Step1 => step1_xi_log_check(&s, &pts, x.as_ref())?,
        ProbeArg::Pz => {
            let x0 = x.unwrap_or_else(|| VectorSpec::Power(2.0).build(s.modes()));
            let v =
                pz_inequality_probe(&s, &a.schedule, &x0, &a.y.build(s.modes()), &pts, a.steps)?;
            emit_verdict(&v, "r", |x| 1.0 - 1.0 / x, a.json, out, stdout)?;
            return Ok(0);
        }
        ProbeArg::Gautschi => unreachable!("handled above"),
    };
    emit_verdict(&v, "xi", inv, a.json, out, stdout)?;
    Ok(0)
}

/// Writes the per-point ratios as CSV and the verdict as JSON. `param` maps
/// the verdict abscissa back to the probe parameter.
fn emit_verdict(
    v: &InequalityVerdict,
    col: &str,
    param: impl Fn(f64) -> f64,
    json_only: bool,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<()> {
    let mut rows: Vec<(f64, f64)> = v.ratios.iter().map(|&(x, r)| (param(x), r)).collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let value_col = if col == "r" { "constant" } else { "value" };
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|(p, r)| vec![format!("{p:e}"), num(*r)])
        .collect();
    let verdict =
        json!({ "probe": v.probe, "constant": v.constant, "finite": v.finite, "trend": v.trend });
    match out {
        Some(dir) => {
            write_csv(&[col, value_col], &rows, Some(dir), "lyapunov", stdout)?;
            std::fs::write(
                dir.join("lyapunov.verdict.json"),
                serde_json::to_string_pretty(&verdict)? + "\n",
            )?;
        }
        None if json_only => writeln!(stdout, "{}", serde_json::to_string_pretty(&verdict)?)?,
        None => write_csv(&[col, value_col], &rows, None, "lyapunov", stdout)?,
    }
    Ok(())
}
