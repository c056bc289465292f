//! Running a scenario config: schema validation, execution and the
//! expected-verdict checks, with artifacts written to a temporary directory.
//!
//! Run with `cargo run --release --example scenario_runner [config.json]`.

use semigroup_lab::scenario::{load_scenario, parse_scenario, run_scenario};
use std::path::PathBuf;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .filter(|a| a.ends_with(".json"))
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/exp_comb_rate.json")
        });
    let scenario = load_scenario(&path)?;
    println!(
        "{} ({} steps): {}",
        scenario.name,
        scenario.steps.len(),
        scenario.statement
    );

    let out = std::env::temp_dir().join(format!("semigroup-lab-example-{}", std::process::id()));
    let report = run_scenario(&scenario, Some(&out))?;
    for step in &report.steps {
        println!("  step {:<16} {:<6} pass = {}", step.id, step.op, step.pass);
        for c in &step.checks {
            println!("    {:<12} {:.6} {}", c.name, c.value, c.condition);
        }
        for a in &step.artifacts {
            println!("    wrote {a}");
        }
    }
    std::fs::remove_dir_all(&out)?;

    let broken = std::fs::read_to_string(&path)?.replacen(
        "\"schema_version\": 1",
        "\"schema_version\": 2",
        1,
    );
    match parse_scenario(&broken) {
        Err(e) => println!("\nwith schema_version 2: {e}"),
        Ok(_) => println!("\nunexpectedly accepted schema_version 2"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("scenario_runner example");
}
