//! Lyapunov solutions for dense generators and the closed-form quadratic
//! forms P(ξ), Q(ξ), R(r) on diagonal models.
//!
//! Run with `cargo run --release --example lyapunov_forms`.

use semigroup_lab::lyapunov::{
    dyadic_xi_grid, p_form, p_form_quadrature, q_form, q_form_quadrature, r_form,
    shifted_inverse_integral_check, ModeVector, RFactor,
};
use semigroup_lab::matrix::{lyapunov_solve, random_stable, random_stable_normal};
use semigroup_lab::spectrum::SpectrumSpec;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for (label, a) in [
        ("normal 8x8", random_stable_normal(8, 42)?),
        ("non-normal 24x24", random_stable(24, 7)?),
        ("normal 60x60", random_stable_normal(60, 3)?),
    ] {
        let sol = lyapunov_solve(&a, 0.1)?;
        println!(
            "{label}: method {:?}, residual {:.2e}",
            sol.method, sol.residual
        );
    }

    let s = SpectrumSpec::exp_comb(1.0, 16)?.build()?;
    let x = ModeVector::random(16, 42);
    println!("\n16-mode ExpComb, random x:");
    for xi in [0.01, 0.1, 1.0] {
        println!(
            "  xi = {xi:5}: <x,P x> = {:.12} (quadrature {:.12}), <x,Q x> = {:.12} (quadrature {:.12})",
            p_form(&s, xi, Some(&x))?,
            p_form_quadrature(&s, xi, &x)?,
            q_form(&s, xi, Some(&x))?,
            q_form_quadrature(&s, xi, &x)?
        );
    }

    println!("\nR(r) for tau in [0.5, 4]:");
    for r in [0.5, 0.9, 0.99, 0.999] {
        let f = RFactor::new(r, 0.5, 4.0)?;
        println!(
            "  r = {r:6}: xi_r = {:.6}, <x,R x> = {:.6}",
            f.xi_r,
            r_form(&s, 0.5, 4.0, r, Some(&x))?
        );
    }

    for spec in [
        SpectrumSpec::exp_comb(1.0, 4096)?,
        SpectrumSpec::poly_comb(1.0, 4096)?,
    ] {
        let v =
            shifted_inverse_integral_check(&spec.build()?, 1.0, &dyadic_xi_grid(-10, 30), None)?;
        println!(
            "{}: shifted-inverse constant {:.15}",
            spec.describe(),
            v.constant
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("lyapunov_forms example");
}
