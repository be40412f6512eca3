macro_rules! example_test {
    ($module:ident, $file:literal, $test:ident) => {
        #[allow(dead_code)]
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $test() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example_test!(operator_assembly, "operator_assembly.rs", operator_assembly_runs);
example_test!(step_propagator, "step_propagator.rs", step_propagator_runs);
example_test!(cost_and_gradient, "cost_and_gradient.rs", cost_and_gradient_runs);
example_test!(optimize_pulse, "optimize_pulse.rs", optimize_pulse_runs);
example_test!(qsl_sweep, "qsl_sweep.rs", qsl_sweep_runs);
example_test!(verify_robustness, "verify_robustness.rs", verify_robustness_runs);
example_test!(physical_rescaling, "physical_rescaling.rs", physical_rescaling_runs);
