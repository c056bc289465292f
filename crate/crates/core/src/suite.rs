//! The acceptance suite: ten criteria, each a list of named checks with a
//! runtime budget.

use crate::bcalculus::{b0_norm, f_alpha, f_alpha_rate, FunctionFamily};
use crate::crank_nicolson::{cn_constant_maximizer, cn_norm_curves, StepsizeSchedule};
use crate::curve::{AbscissaKind, NormCurve};
use crate::decay::{check_order, fit_power, liminf_check, DecayModel, FitWindow};
use crate::error::{LabError, Result};
use crate::grid::Grid;
use crate::lyapunov::{
    dyadic_xi_grid, p_form, p_form_quadrature, pz_inequality_probe, q_form, q_form_quadrature,
    shifted_inverse_integral_check, step1_xi_log_check, ModeVector,
};
use crate::matrix::{
    bcalc_apply, contractive_test_matrix, expm_matrix, lyapunov_solve, random_stable_normal, solve,
    spectral_norm, CMatrix, DenseOperator,
};
use crate::quadrature::{Quadrature, Segment};
use crate::spectral_calculus::{
    kernel_norm, norm_curve, optimality_witness, poly_witness_floor, KernelKind,
};
use crate::spectrum::{Spectrum, SpectrumSpec};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::E;
use std::time::Instant;

/// Seed shared by every randomized criterion.
pub const SUITE_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable condition, e.g. "in [0.45, 0.55]".
    pub condition: String,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, condition: String, pass: bool) -> Self {
        Self {
            name: name.into(),
            value,
            condition,
            pass,
        }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self::new(
            name,
            value,
            format!("in [{lo}, {hi}]"),
            value >= lo && value <= hi,
        )
    }

    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(name, value, format!("<= {limit}"), value <= limit)
    }

    pub fn close(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Self::new(
            name,
            value,
            format!("within {tol:e} of {target}"),
            (value - target).abs() <= tol,
        )
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, "holds".into(), ok)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub title: String,
    pub checks: Vec<Check>,
    /// Set when the computation itself failed.
    pub error: Option<String>,
    pub runtime_s: f64,
    pub budget_s: f64,
    pub pass: bool,
}

impl CriterionReport {
    /// One line: `PASS 3 polynomial-case rate (0.84 s / 10 s)`.
    pub fn summary_line(&self) -> String {
        let mut line = format!(
            "{} {} {} ({:.2} s / {} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.runtime_s,
            self.budget_s
        );
        if let Some(e) = &self.error {
            line.push_str(&format!(" error: {e}"));
        }
        for c in self.checks.iter().filter(|c| !c.pass) {
            line.push_str(&format!("; {} = {} not {}", c.name, c.value, c.condition));
        }
        line
    }
}

pub const CRITERIA: [(u32, &str, f64); 10] = [
    (1, "exact witnesses on ExpComb", 1.0),
    (2, "exponential-case decay rate", 10.0),
    (3, "polynomial-case decay rate", 10.0),
    (4, "B0 seminorm quantities", 120.0),
    (5, "matrix B-calculus", 120.0),
    (6, "Lyapunov oracles", 60.0),
    (7, "Crank-Nicolson constant stepsize", 30.0),
    (8, "Crank-Nicolson variable stepsizes", 180.0),
    (
        9,
        "bounded inverse-generator semigroup, polynomial case",
        30.0,
    ),
    (10, "Cayley iterate inner-product probe", 60.0),
];

/// Runs one criterion; numerical errors become a failing report.
pub fn run_criterion(id: u32) -> Result<CriterionReport> {
    let &(_, title, budget) = CRITERIA.iter().find(|c| c.0 == id).ok_or_else(|| {
        LabError::InvalidInput(format!("no acceptance criterion {id} (valid: 1..=10)"))
    })?;
    let start = Instant::now();
    let outcome = match id {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(),
        7 => criterion_7(),
        8 => criterion_8(),
        9 => criterion_9(),
        _ => criterion_10(),
    };
    let runtime_s = start.elapsed().as_secs_f64();
    let (checks, error) = match outcome {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let pass = error.is_none()
        && !checks.is_empty()
        && checks.iter().all(|c| c.pass)
        && runtime_s < budget;
    Ok(CriterionReport {
        id,
        title: title.into(),
        checks,
        error,
        runtime_s,
        budget_s: budget,
        pass,
    })
}

pub fn run_all() -> Vec<CriterionReport> {
    CRITERIA
        .iter()
        .map(|c| run_criterion(c.0).expect("criterion ids come from the table"))
        .collect()
}

fn exp_comb(gamma: f64, modes: usize) -> Result<Spectrum> {
    SpectrumSpec::exp_comb(gamma, modes)?.build()
}

fn poly_comb(beta: f64, modes: usize) -> Result<Spectrum> {
    SpectrumSpec::poly_comb(beta, modes)?.build()
}

fn criterion_1() -> Result<Vec<Check>> {
    let spec = SpectrumSpec::exp_comb(1.0, 64)?;
    let s = spec.build()?;
    let kind = KernelKind::InvSemigroupFrac(1.0);
    let mut checks = vec![Check::close(
        "norm at t = 1",
        kernel_norm(&s, kind, 1.0)?.value,
        1.0 / (2.0 * E).sqrt(),
        1e-12,
    )];
    for k in [2, 5, 10] {
        let w = optimality_witness(&spec, 1.0, k)?;
        checks.push(Check::close(
            format!("norm at witness k = {k} (t = {})", w.t),
            kernel_norm(&s, kind, w.t)?.value,
            w.bound,
            1e-12,
        ));
    }
    Ok(checks)
}

fn criterion_2() -> Result<Vec<Check>> {
    let s = exp_comb(1.0, 100_000)?;
    let grid = Grid::geometric(1e2, 1e6, 4).points()?;
    let window = FitWindow::new(1e2, 1e6)?;
    let mut checks = Vec::new();
    for (alpha, lo, hi) in [(1.0, 0.45, 0.55), (2.0, 0.95, 1.05)] {
        let curve = norm_curve(&s, KernelKind::InvSemigroupFrac(alpha), &grid)?;
        checks.push(Check::within(
            format!("fitted exponent, alpha = {alpha}"),
            fit_power(&curve, window)?.exponent,
            lo,
            hi,
        ));
    }
    Ok(checks)
}

fn criterion_3() -> Result<Vec<Check>> {
    let s = poly_comb(1.0, 10_000)?;
    let grid = Grid::geometric(1e2, 1e8, 4).points()?;
    let curve = norm_curve(&s, KernelKind::InvSemigroupFrac(1.0), &grid)?;
    let fit = fit_power(&curve, FitWindow::new(1e2, 1e8)?)?;
    // Witness times t = k³/3 for the liminf.
    let spec = s.spec();
    let wt: Vec<f64> = (1..=spec.modes)
        .map(|k| optimality_witness(spec, 1.0, k).map(|w| w.t))
        .take_while(|t| t.as_ref().map_or(true, |t| *t <= 1e8))
        .filter(|t| t.as_ref().map_or(true, |t| *t >= 1e2))
        .collect::<Result<_>>()?;
    let at_witness = norm_curve(&s, KernelKind::InvSemigroupFrac(1.0), &wt)?;
    let floor = poly_witness_floor(1.0);
    let lim = liminf_check(&at_witness, 1.0 / 3.0, floor)?;
    Ok(vec![
        Check::within("fitted exponent", fit.exponent, 0.30, 0.37),
        Check::new(
            "liminf of t^(1/3) * norm at witnesses",
            lim.minimum,
            format!(">= {floor}"),
            lim.pass,
        ),
    ])
}

/// F₂(t) for t ≥ 1 in closed form: split at s = t.
fn f2_oracle(t: f64) -> f64 {
    // ∫_1^t ds/(e t s) + ∫_t^∞ e^{−t/s}/s² ds
    t.ln() / (E * t) + (1.0 - (-1.0f64).exp()) / t
}

fn criterion_4() -> Result<Vec<Check>> {
    let mut checks = vec![
        Check::close(
            "F_2(e) by quadrature",
            f_alpha(E, 2.0)?.value,
            1.0 / E,
            1e-6,
        ),
        Check::close("F_2(e) closed form", f2_oracle(E), 1.0 / E, 1e-15),
    ];

    let t_grid = Grid::geometric(10.0, 1e4, 4).points()?;
    for alpha in [3.0, 2.0, 1.5] {
        let pairs: Vec<(f64, f64)> = t_grid
            .iter()
            .map(|&t| f_alpha(t, alpha).map(|f| (t, f.value)))
            .collect::<Result<_>>()?;
        let curve = NormCurve::from_pairs(AbscissaKind::Continuous, pairs)?;
        let model = f_alpha_rate(alpha);
        let v = check_order(&curve, model, FitWindow::new(10.0, 1e4)?)?;
        checks.push(Check::holds(
            format!("F_{alpha} / {model} finite"),
            v.finite,
        ));
        checks.push(Check::at_most(
            format!("F_{alpha} / {model} trend"),
            v.trend,
            1.05,
        ));
    }

    checks.push(Check::close(
        "b0(rpow:1)",
        b0_norm(FunctionFamily::Rpow { alpha: 1.0 })?.b0,
        1.0,
        1e-8,
    ));

    for t in [0.5, 1.0, 3.0, 10.0, 30.0] {
        for alpha in [1.0, 2.0] {
            let r = b0_norm(FunctionFamily::Fta { t, alpha })?;
            let env = r
                .envelope
                .ok_or_else(|| LabError::Precondition("fta without envelope".into()))?;
            checks.push(Check::at_most(
                format!("b0(fta:{t},{alpha}) - envelope"),
                r.b0 - env,
                1e-6,
            ));
        }
    }

    let t_grid = Grid::geometric(10.0, 1e4, 2).points()?;
    for alpha in [1.0, 2.0] {
        let pairs: Vec<(f64, f64)> = t_grid
            .iter()
            .map(|&t| b0_norm(FunctionFamily::Fta { t, alpha }).map(|r| (t, r.b0)))
            .collect::<Result<_>>()?;
        let curve = NormCurve::from_pairs(AbscissaKind::Continuous, pairs)?;
        let v = check_order(
            &curve,
            DecayModel::PowerLaw(alpha / 2.0),
            FitWindow::new(10.0, 1e4)?,
        )?;
        checks.push(Check::holds(
            format!("t^{}*b0 finite", alpha / 2.0),
            v.finite,
        ));
        checks.push(Check::at_most(
            format!("t^{}*b0 trend", alpha / 2.0),
            v.trend,
            1.05,
        ));
    }
    Ok(checks)
}

fn criterion_5() -> Result<Vec<Check>> {
    let c = |re: f64| Complex64::new(re, 0.0);
    let f = FunctionFamily::Fta { t: 1.0, alpha: 1.0 };
    let b0 = b0_norm(f)?.b0;
    let mut checks = Vec::new();
    for (label, a) in [
        ("diag(-1,-2)", DenseOperator::diagonal(&[c(-1.0), c(-2.0)])?),
        ("4x4 non-normal", contractive_test_matrix()),
    ] {
        let n = a.dim();
        let b = -a.matrix() - CMatrix::identity(n, n);
        let got = bcalc_apply(f, &b)?;
        let a_inv = a.inverse()?;
        let neg_inv = solve(&(-a.matrix()), &CMatrix::identity(n, n))?;
        let exact = expm_matrix(&a_inv)? * neg_inv;
        let diff = (&got.value - &exact)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        checks.push(Check::at_most(
            format!("{label}: max entry error"),
            diff,
            1e-6,
        ));
        let bound = f.at_infinity().norm() + 2.0 * got.k * got.k * b0;
        checks.push(Check::at_most(
            format!("{label}: ||f(B)|| - (|f(inf)| + 2K^2 b0), K = {:.6}", got.k),
            spectral_norm(&got.value) - bound,
            0.0,
        ));
    }
    Ok(checks)
}

fn criterion_6() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let a = random_stable_normal(8, SUITE_SEED)?;
    let xi = 0.25;
    let sol = lyapunov_solve(&a, xi)?;
    checks.push(Check::at_most("8x8 Lyapunov residual", sol.residual, 1e-10));
    let m = a.matrix() - CMatrix::identity(8, 8) * Complex64::new(xi, 0.0);
    let est = Quadrature::with_tolerances(1e-14, 1e-11).integrate_vec_segments(
        128,
        |t, out: &mut [f64]| {
            let e = expm_matrix(&(&m * Complex64::new(t, 0.0))).expect("bounded argument");
            let g = e.adjoint() * e;
            for (i, z) in g.iter().enumerate() {
                out[2 * i] = z.re;
                out[2 * i + 1] = z.im;
            }
        },
        &[Segment::tail(0.0)],
    )?;
    let q = CMatrix::from_fn(8, 8, |i, j| {
        Complex64::new(est.value[2 * (i + 8 * j)], est.value[2 * (i + 8 * j) + 1])
    });
    checks.push(Check::at_most(
        "8x8 Lyapunov vs quadrature (relative)",
        (&sol.p - &q).norm() / q.norm(),
        1e-8,
    ));

    let s = exp_comb(1.0, 16)?;
    let mut worst_p: f64 = 0.0;
    let mut worst_q: f64 = 0.0;
    for seed in 0..8 {
        let x = ModeVector::random(16, SUITE_SEED + seed);
        for xi in [0.01, 0.1, 1.0, 10.0] {
            let p = p_form(&s, xi, Some(&x))?;
            worst_p = worst_p.max((p - p_form_quadrature(&s, xi, &x)?).abs() / p);
            let q = q_form(&s, xi, Some(&x))?;
            worst_q = worst_q.max((q - q_form_quadrature(&s, xi, &x)?).abs() / q);
        }
    }
    checks.push(Check::at_most(
        "p_form vs quadrature (relative)",
        worst_p,
        1e-8,
    ));
    checks.push(Check::at_most(
        "q_form vs quadrature (relative)",
        worst_q,
        1e-8,
    ));

    let grid = dyadic_xi_grid(-10, 30);
    for (label, s) in [
        ("ExpComb", exp_comb(1.0, 4096)?),
        ("PolyComb", poly_comb(1.0, 4096)?),
    ] {
        let v = shifted_inverse_integral_check(&s, 1.0, &grid, None)?;
        checks.push(Check::holds(
            format!("{label}: shifted inverse finite"),
            v.finite,
        ));
        checks.push(Check::at_most(
            format!("{label}: shifted inverse constant"),
            v.constant,
            1.0 + 1e-12,
        ));
    }
    Ok(checks)
}

fn criterion_7() -> Result<Vec<Check>> {
    let s = exp_comb(1.0, 16_384)?;
    let samples = Grid::geometric(1e2, 1e6, 4).integer_points()?;
    let r = cn_norm_curves(
        &s,
        &StepsizeSchedule::Constant(2.0),
        &[1.0],
        1_000_000,
        &samples,
    )?
    .pop()
    .expect("one alpha requested");
    let fit = fit_power(&r.curve, FitWindow::new(1e2, 1e6)?)?;
    let mut excess = f64::NEG_INFINITY;
    for smp in &r.curve.samples {
        let m = cn_constant_maximizer(1.0, smp.abscissa as u64)?;
        excess = excess.max(smp.value / m.bound - 1.0);
    }
    let m = cn_constant_maximizer(1.0, 1_000_000)?;
    Ok(vec![
        Check::within("fitted exponent", fit.exponent, 0.45, 0.55),
        Check::at_most("max relative excess over sqrt(f_n(w_n))", excess, 1e-12),
        Check::close(
            "branch factor at n = 1e6",
            m.branch_factor,
            (-1.0f64).exp(),
            1e-3,
        ),
        Check::close("n / w_n at n = 1e6", m.n_over_w, 0.25, 1e-3),
    ])
}

fn criterion_8() -> Result<Vec<Check>> {
    let sched = StepsizeSchedule::UniformRandom {
        lo: 0.5,
        hi: 4.0,
        seed: SUITE_SEED,
    };
    let steps = 100_000u64;
    let samples = Grid::geometric(1.0, steps as f64, 4).integer_points()?;
    let window = FitWindow::new(1e2, 1e5)?;
    let e = exp_comb(1.0, 4096)?;
    let p = poly_comb(1.0, 4096)?;
    let mut er = cn_norm_curves(&e, &sched, &[1.0, 0.75], steps, &samples)?;
    let e_34 = er.pop().expect("two alphas");
    let e_1 = er.pop().expect("two alphas");
    let p_1 = cn_norm_curves(&p, &sched, &[1.0], steps, &samples)?
        .pop()
        .expect("one alpha");
    let v = check_order(&e_1.curve, DecayModel::PowerLogHalf, window)?;
    Ok(vec![
        Check::holds("ExpComb alpha = 1 vs sqrt(log n / n): finite", v.finite),
        Check::at_most("ExpComb alpha = 1 vs sqrt(log n / n): trend", v.trend, 1.05),
        Check::within(
            "PolyComb alpha = 1 fitted exponent",
            fit_power(&p_1.curve, window)?.exponent,
            0.28,
            0.38,
        ),
        Check::within(
            "ExpComb alpha = 3/4 fitted exponent",
            fit_power(&e_34.curve, window)?.exponent,
            0.20,
            0.30,
        ),
    ])
}

fn criterion_9() -> Result<Vec<Check>> {
    let grid = Grid::dyadic(1.0, 1e8).points()?;
    let kind = KernelKind::InvSemigroupFrac(1.0);
    let m2048 = norm_curve(&poly_comb(1.0, 2048)?, kind, &grid)?.max_value();
    let s4096 = poly_comb(1.0, 4096)?;
    let m4096 = norm_curve(&s4096, kind, &grid)?.max_value();
    let xi = dyadic_xi_grid(2, 40);
    let v = step1_xi_log_check(&s4096, &xi, Some(&ModeVector::power(4096, 2.0)))?;
    Ok(vec![
        Check::holds(
            "curve maximum finite",
            m4096.is_finite() && m2048.is_finite(),
        ),
        Check::at_most(
            "relative change 2048 -> 4096",
            (m4096 - m2048).abs() / m4096,
            0.01,
        ),
        Check::holds("xi|log xi|^2 P(xi) probe finite", v.finite),
        Check::at_most("xi|log xi|^2 P(xi) probe trend", v.trend, 1.05),
    ])
}

/// Constant of the Cayley inner-product probe on ExpComb(1, K).
pub fn pz_constant(modes: usize, steps: usize) -> Result<f64> {
    let s = exp_comb(1.0, modes)?;
    let sched = StepsizeSchedule::UniformRandom {
        lo: 0.5,
        hi: 4.0,
        seed: SUITE_SEED,
    };
    let x0 = ModeVector::from_fn(modes, |k| Complex64::new(1.0 / (k * k) as f64, 0.0));
    let y = ModeVector::from_fn(modes, |k| Complex64::new(1.0 / k as f64, 0.0));
    let r_grid: Vec<f64> = (1..=14).map(|j| 1.0 - 2f64.powi(-j)).collect();
    let v = pz_inequality_probe(&s, &sched, &x0, &y, &r_grid, steps)?;
    if !v.finite {
        return Err(LabError::Precondition(format!(
            "probe ratio not finite: {v:?}"
        )));
    }
    Ok(v.constant)
}

fn criterion_10() -> Result<Vec<Check>> {
    let consts: Vec<f64> = [512, 1024, 2048]
        .iter()
        .map(|&k| pz_constant(k, 1 << 15))
        .collect::<Result<_>>()?;
    let lo = consts.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = consts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(vec![
        Check::holds("constants finite", consts.iter().all(|c| c.is_finite())),
        Check::at_most(
            "relative drift over K = 512, 1024, 2048",
            (hi - lo) / lo,
            0.05,
        ),
    ])
}
