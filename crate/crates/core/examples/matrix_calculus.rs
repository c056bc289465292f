//! Dense generators: eigenstructure, matrix exponential, and the double-integral
//! functional calculus f(B) checked against e^{A⁻¹t}(−A)^{−α}.
//!
//! Run with `cargo run --release --example matrix_calculus`.

use num_complex::Complex64;
use semigroup_lab::bcalculus::{b0_norm, FunctionFamily};
use semigroup_lab::matrix::{
    bcalc_apply, contractive_test_matrix, eigendecomposition, expm, expm_matrix, frac_power,
    spectral_norm, CMatrix,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let a = contractive_test_matrix();
    let n = a.dim();
    let eig = eigendecomposition(a.matrix())?;
    println!(
        "A is {n}x{n}, normal: {}, eigenvector condition {:.3}",
        a.is_normal(),
        eig.condition
    );
    for t in [0.5, 1.0, 2.0, 4.0] {
        println!(
            "  ||e^(At)|| = {:.6}  vs e^(-t) = {:.6}",
            spectral_norm(&expm(&a, t)?),
            (-t).exp()
        );
    }

    let t = 2.0;
    let alpha = 1.5;
    let f = FunctionFamily::Fta { t, alpha };
    let b = -a.matrix() - CMatrix::identity(n, n);
    let got = bcalc_apply(f, &b)?;
    let exact = expm_matrix(&(a.inverse()? * Complex64::new(t, 0.0)))? * frac_power(&a, -alpha)?;
    let err = (&got.value - &exact)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    println!(
        "\nf = {f}: max entry error {err:.2e}, quadrature error estimate {:.2e}",
        got.error
    );

    let b0 = b0_norm(f)?.b0;
    let bound = f.at_infinity().norm() + 2.0 * got.k * got.k * b0;
    println!(
        "||f(B)|| = {:.6} <= |f(inf)| + 2K^2 ||f||_B0 = {:.6} with measured K = {:.6}",
        spectral_norm(&got.value),
        bound,
        got.k
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("matrix_calculus example");
}
