//! The numerical building blocks: adaptive quadrature on semi-infinite
//! intervals, golden-section maximization, the Gamma function and the
//! Padé matrix exponential.
//!
//! Run with `cargo run --example numerics_toolkit`.

use num_complex::Complex64;
use semigroup_lab::matrix::{expm_matrix, CMatrix};
use semigroup_lab::optimize::golden_section_max;
use semigroup_lab::quadrature::{Quadrature, Segment};
use semigroup_lab::special::gamma;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let q = Quadrature::with_tolerances(1e-14, 1e-12);

    let e1 = q.integrate_to_infinity(|t: f64| (-t).exp() / t, 1.0)?;
    println!("E1(1) = {:.15} ({} evaluations)", e1.value, e1.evaluations);

    let tail =
        q.integrate_segments(&mut |s: f64| s.powf(-2.5), &[Segment::power_tail(1.0, 2.5)])?;
    println!("int_1^inf s^-2.5 ds = {:.15} (exact 2/3)", tail.value);

    let m = golden_section_max(|x: f64| x * (-x).exp(), 0.0, 10.0, 1e-10);
    println!("argmax of x e^-x: {:.9} (exact 1)", m.x);

    for x in [0.5, 1.5, 5.0] {
        println!("Gamma({x}) = {:.15}", gamma(x));
    }

    let rot = CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    );
    let e = expm_matrix(&(rot * Complex64::new(std::f64::consts::FRAC_PI_2, 0.0)))?;
    println!(
        "exp of a quarter-turn generator: [[{:.3}, {:.3}], [{:.3}, {:.3}]]",
        e[(0, 0)].re,
        e[(0, 1)].re,
        e[(1, 0)].re,
        e[(1, 1)].re
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("numerics_toolkit example");
}
