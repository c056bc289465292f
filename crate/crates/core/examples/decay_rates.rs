//! Fitting decay exponents: 1/t^{α/2} for exponentially stable spectra and
//! 1/t^{α/(2+β)} for polynomially stable ones, plus a lower-bound check along
//! the witness times.
//!
//! Run with `cargo run --release --example decay_rates`.

use semigroup_lab::decay::{check_order, fit_power, liminf_check, DecayModel, FitWindow};
use semigroup_lab::grid::Grid;
use semigroup_lab::spectral_calculus::{
    norm_curve, optimality_witness, poly_witness_floor, suggested_modes, KernelKind,
};
use semigroup_lab::spectrum::SpectrumSpec;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let window = FitWindow::new(1e2, 1e6)?;
    let grid = Grid::geometric(window.lo, window.hi, 4).points()?;

    let exp_spec = SpectrumSpec::exp_comb(1.0, 10_000)?;
    let exp = exp_spec.build()?;
    println!(
        "{}: suggested K for t <= 1e6 is {:?}",
        exp_spec.describe(),
        suggested_modes(&exp_spec.family, 1.0, 1e6)
    );
    for alpha in [0.5, 1.0, 2.0] {
        let curve = norm_curve(&exp, KernelKind::InvSemigroupFrac(alpha), &grid)?;
        let fit = fit_power(&curve, window)?;
        let order = check_order(&curve, DecayModel::PowerLaw(alpha / 2.0), window)?;
        println!(
            "  alpha = {alpha}: exponent {:.4} (expected {}), sup t^(a/2) norm = {:.4}, trend {:.4}",
            fit.exponent,
            alpha / 2.0,
            order.constant,
            order.trend
        );
    }

    let poly_spec = SpectrumSpec::poly_comb(1.0, 10_000)?;
    let poly = poly_spec.build()?;
    let wide = FitWindow::new(1e2, 1e8)?;
    let curve = norm_curve(
        &poly,
        KernelKind::InvSemigroupFrac(1.0),
        &Grid::geometric(1e2, 1e8, 4).points()?,
    )?;
    let fit = fit_power(&curve, wide)?;
    println!(
        "{}: exponent {:.4} (expected 1/3)",
        poly_spec.describe(),
        fit.exponent
    );

    let witness_times: Vec<f64> = (5..=460)
        .map(|k| optimality_witness(&poly_spec, 1.0, k).map(|w| w.t))
        .collect::<Result<_, _>>()?;
    let at_witness = norm_curve(&poly, KernelKind::InvSemigroupFrac(1.0), &witness_times)?;
    let lim = liminf_check(&at_witness, 1.0 / 3.0, poly_witness_floor(1.0))?;
    println!(
        "  min of t^(1/3) * norm at witnesses: {:.5} (floor {:.5}) -> {}",
        lim.minimum,
        lim.floor,
        if lim.pass { "above" } else { "below" }
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("decay_rates example");
}
