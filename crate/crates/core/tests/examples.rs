//! Every example must run to completion.

macro_rules! example {
    ($module:ident, $file:literal) => {
        #[allow(dead_code)]
        #[path = $file]
        mod $module;

        #[test]
        fn $module() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example!(spectral_norms, "../examples/spectral_norms.rs");
example!(decay_rates, "../examples/decay_rates.rs");
example!(b0_seminorm, "../examples/b0_seminorm.rs");
example!(matrix_calculus, "../examples/matrix_calculus.rs");
example!(lyapunov_forms, "../examples/lyapunov_forms.rs");
example!(crank_nicolson, "../examples/crank_nicolson.rs");
example!(inequality_probes, "../examples/inequality_probes.rs");
example!(scenario_runner, "../examples/scenario_runner.rs");
example!(seeded_schedules, "../examples/seeded_schedules.rs");
example!(numerics_toolkit, "../examples/numerics_toolkit.rs");
