//! Operator norms of e^{A⁻¹t}(−A)^{−α} on a diagonal model, and the times at
//! which the analytic decay estimate is attained exactly.
//!
//! Run with `cargo run --example spectral_norms`.

use semigroup_lab::grid::Grid;
use semigroup_lab::spectral_calculus::{kernel_norm, norm_curve, optimality_witness, KernelKind};
use semigroup_lab::spectrum::SpectrumSpec;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SpectrumSpec::exp_comb(1.0, 256)?;
    let spectrum = spec.build()?;
    let kernel = KernelKind::InvSemigroupFrac(1.0);

    println!("witness times on {}", spec.describe());
    for k in [1, 2, 5, 10] {
        let w = optimality_witness(&spec, 1.0, k)?;
        let n = kernel_norm(&spectrum, kernel, w.t)?;
        println!(
            "  k = {k:2}  t = {:6.1}  norm = {:.15}  formula = {:.15}  maximizing mode {}",
            w.t, n.value, w.bound, n.argmax_k
        );
        assert!((n.value - w.bound).abs() < 1e-12);
    }

    let curve = norm_curve(&spectrum, kernel, &Grid::dyadic(1.0, 1e4).points()?)?;
    println!("\ndyadic curve (t, norm, t^(1/2) * norm):");
    for s in &curve.samples {
        println!(
            "  {:>8}  {:.6e}  {:.6}",
            s.abscissa,
            s.value,
            s.abscissa.sqrt() * s.value
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("spectral_norms example");
}
