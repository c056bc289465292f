//! Crank-Nicolson (Cayley transform) iterates with constant, periodic and
//! random stepsizes, and the exact maximizer for constant τ = 2.
//!
//! Run with `cargo run --release --example crank_nicolson`.

use semigroup_lab::crank_nicolson::{
    cn_constant_maximizer, cn_norm_curves, cn_trajectory_matrix, StepsizeSchedule,
};
use semigroup_lab::decay::{fit_power, FitWindow};
use semigroup_lab::grid::Grid;
use semigroup_lab::matrix::{contractive_test_matrix, CVector};
use semigroup_lab::spectrum::SpectrumSpec;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spectrum = SpectrumSpec::exp_comb(1.0, 4096)?.build()?;
    let samples = Grid::geometric(1.0, 1e5, 4).integer_points()?;
    let window = FitWindow::new(1e2, 1e5)?;

    for sched in ["constant:2", "periodic:1,3", "random:0.5,4,seed=42"] {
        let sched: StepsizeSchedule = sched.parse()?;
        for r in cn_norm_curves(&spectrum, &sched, &[0.5, 1.0], 100_000, &samples)? {
            let fit = fit_power(&r.curve, window)?;
            println!(
                "{sched:<22} alpha = {}: exponent {:.4}",
                r.alpha, fit.exponent
            );
        }
    }

    println!("\nconstant tau = 2 maximizer on ExpComb(1):");
    for n in [100u64, 10_000, 1_000_000] {
        let m = cn_constant_maximizer(1.0, n)?;
        println!(
            "  n = {n:>8}: w_n = {:.3}, bound = {:.6e}, branch factor = {:.6}, n/w_n = {:.6}",
            m.w, m.bound, m.branch_factor, m.n_over_w
        );
    }

    let a = contractive_test_matrix();
    let x0 = CVector::from_element(a.dim(), num_complex::Complex64::new(1.0, 0.0));
    let traj = cn_trajectory_matrix(&a, &"periodic:0.5,2".parse()?, &x0, 64, &[1, 4, 16, 64])?;
    println!("\n4x4 non-normal matrix, periodic steps, ||x_n||:");
    for s in &traj.curve.samples {
        println!("  n = {:>3}: {:.6e}", s.abscissa, s.value);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("crank_nicolson example");
}
