//! Seeded xorshift64* streams: identical seeds give identical stepsize
//! sequences, test vectors and random matrices on every run.
//!
//! Run with `cargo run --example seeded_schedules`.

use semigroup_lab::crank_nicolson::StepsizeSchedule;
use semigroup_lab::matrix::random_stable_normal;
use semigroup_lab::rng::XorShift64Star;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = XorShift64Star::new(42);
    let raw: Vec<u64> = (0..4).map(|_| rng.next_u64()).collect();
    println!("first outputs for seed 42: {raw:016x?}");

    let sched: StepsizeSchedule = "random:0.5,4,seed=42".parse()?;
    let taus = sched.taus(8);
    println!("{sched}: {taus:.4?}");
    assert_eq!(taus, sched.taus(8));

    let mean = sched.taus(100_000).iter().sum::<f64>() / 1e5;
    println!("mean of 1e5 stepsizes: {mean:.4} (uniform mean 2.25)");

    let a = random_stable_normal(4, 42)?;
    let b = random_stable_normal(4, 42)?;
    assert_eq!(a.matrix(), b.matrix());
    println!("random stable normal 4x4, seed 42, eigenvalues:");
    for z in a.eigenvalues() {
        println!("  {:.6} {:+.6}i", z.re, z.im);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("seeded_schedules example");
}
