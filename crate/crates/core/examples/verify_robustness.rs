// Optimizes a first-order frequency-robust X pulse and compares it with the
// plain square π-pulse on the exact uncertain model: error surfaces, the
// 1e-6 region, error-scaling slopes and fitted Taylor coefficients.

use robust_qsl::algebra::{assemble_generator, RobustnessOrder};
use robust_qsl::verifier::{fit_error_coefficients, level_set_region, scaling_slope};
use robust_qsl::{error_surface, multi_start, Axis, ControlPulse, GateTarget, OptimizerConfig, UncertaintyGrid};

pub fn run_example() -> robust_qsl::Result<()> {
    let omega = std::f64::consts::PI;
    let target = GateTarget::x();
    let square = ControlPulse::constant(0.0, 100, 1.0, omega)?;

    let gen = assemble_generator(RobustnessOrder::new(1, 0), omega)?;
    let cfg = OptimizerConfig { cost_tolerance: 1e-14, restarts: 4, ..Default::default() };
    let robust = multi_start(&gen, &target, 2.4, 240, &cfg)?.best;
    println!("robust pulse cost {:.1e}", robust.final_cost.total);

    let grid = UncertaintyGrid::uniform(0.5, 51);
    for (name, pulse) in [("square", &square), ("(1,0)", &robust.pulse)] {
        let surface = error_surface(pulse, &target, &grid)?;
        let region = level_set_region(&surface, 1e-6)?;
        let slope = scaling_slope(pulse, &target, Axis::Frequency, (1e-3, 1e-2))
            .or_else(|_| scaling_slope(pulse, &target, Axis::Frequency, (1e-2, 1e-1)))?;
        let coeffs = fit_error_coefficients(pulse, Axis::Frequency, 2)?;
        println!(
            "{name:>7}: |eps1| <= {:.2}, {} nodes at 1e-6, slope {slope:.2}, |U_10| = {:.1e}, |U_20| = {:.1e}",
            region.eps1_half_width, region.cell_count, coeffs[1], coeffs[2]
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("verify robustness example");
}
