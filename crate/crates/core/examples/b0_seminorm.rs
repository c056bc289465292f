//! The B0 seminorm ∫₀^∞ sup_η |f'(ξ + iη)| dξ for the function families that
//! drive the decay estimates, against their closed-form envelopes.
//!
//! Run with `cargo run --release --example b0_seminorm`.

use semigroup_lab::bcalculus::{b0_norm, f_alpha, f_alpha_rate, FunctionFamily};
use std::f64::consts::E;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let rpow = b0_norm(FunctionFamily::Rpow { alpha: 1.0 })?;
    println!(
        "b0(rpow:1) = {:.10} ({} evaluations)",
        rpow.b0, rpow.evaluations
    );

    let h = b0_norm(FunctionFamily::Hshift { t: 5.0 })?;
    println!(
        "b0(hshift:5) = {:.10}, closed form log(5)/e + 1 - 1/e = {:.10}",
        h.b0,
        5f64.ln() / E + 1.0 - 1.0 / E
    );

    println!("\nF_alpha(t) and its rate:");
    for alpha in [1.5, 2.0, 3.0] {
        let rate = f_alpha_rate(alpha);
        for t in [10.0, 100.0, 1000.0] {
            let f = f_alpha(t, alpha)?;
            println!(
                "  alpha = {alpha}  t = {t:6}  F = {:.6e}  F / ({rate}) = {:.5}",
                f.value,
                f.value / rate.value(t)
            );
        }
    }

    println!("\nb0(fta:t,alpha) against t*F_(alpha+2)(t) + alpha*F_(alpha+1)(t):");
    for alpha in [1.0, 2.0] {
        for t in [1.0, 10.0, 100.0, 1000.0] {
            let r = b0_norm(FunctionFamily::Fta { t, alpha })?;
            let env = r.envelope.unwrap_or(f64::NAN);
            println!(
                "  alpha = {alpha}  t = {t:6}  b0 = {:.6e}  envelope = {:.6e}  t^(a/2) b0 = {:.4}",
                r.b0,
                env,
                t.powf(alpha / 2.0) * r.b0
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("b0_seminorm example");
}
