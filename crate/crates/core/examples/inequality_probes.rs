//! Measured constants for inequalities whose constants are only known to
//! exist: each probe reports the sup of LHS/RHS over a grid and the ratio of
//! the last two dyadic windows.
//!
//! Run with `cargo run --release --example inequality_probes`.

use num_complex::Complex64;
use semigroup_lab::crank_nicolson::StepsizeSchedule;
use semigroup_lab::lyapunov::{
    dyadic_xi_grid, gautschi_check, pz_inequality_probe, q_bound_check, step1_xi_log_check,
    ModeVector, QBoundVariant,
};
use semigroup_lab::spectrum::SpectrumSpec;
use semigroup_lab::verdict::InequalityVerdict;

fn show(v: &InequalityVerdict) {
    println!(
        "  {:<22} constant {:.6}  at {:.3e}  trend {:.4}  finite {}",
        v.probe, v.constant, v.argmax, v.trend, v.finite
    );
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let exp = SpectrumSpec::exp_comb(1.0, 4096)?.build()?;
    let poly = SpectrumSpec::poly_comb(1.0, 4096)?.build()?;
    let xi = dyadic_xi_grid(2, 30);

    println!("Q(xi) bounds:");
    show(&q_bound_check(
        &exp,
        0.5,
        QBoundVariant::Exponential,
        &xi,
        None,
    )?);
    show(&q_bound_check(
        &exp,
        1.0,
        QBoundVariant::Exponential,
        &xi,
        Some(&ModeVector::power(4096, 2.0)),
    )?);
    show(&q_bound_check(
        &poly,
        1.0,
        QBoundVariant::Polynomial { beta: 1.0 },
        &xi,
        None,
    )?);

    println!("P(xi) with logarithmic weight on PolyComb:");
    show(&step1_xi_log_check(&poly, &xi, None)?);

    println!("exponential-integral inequality:");
    show(&gautschi_check(
        &(-6..=6).map(|j| 10f64.powi(j)).collect::<Vec<_>>(),
    )?);

    println!("Cayley iterate inner products, random stepsizes in [0.5, 4]:");
    let sched: StepsizeSchedule = "random:0.5,4,seed=42".parse()?;
    let r_grid: Vec<f64> = (1..=14).map(|j| 1.0 - 2f64.powi(-j)).collect();
    for modes in [512, 1024, 2048] {
        let s = SpectrumSpec::exp_comb(1.0, modes)?.build()?;
        let x0 = ModeVector::from_fn(modes, |k| Complex64::new(1.0 / (k * k) as f64, 0.0));
        let y = ModeVector::from_fn(modes, |k| Complex64::new(1.0 / k as f64, 0.0));
        print!("  K = {modes:4}:");
        show(&pz_inequality_probe(&s, &sched, &x0, &y, &r_grid, 1 << 15)?);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("inequality_probes example");
}
