// Compares the structured segment propagator against a general matrix
// exponential, then propagates a short pulse through the augmented system.

use num_complex::Complex64;
use robust_qsl::algebra::{assemble_generator, RobustnessOrder};
use robust_qsl::propagator::{build_step_kernel, propagate_blocks, reference_expm, step};
use robust_qsl::ControlPulse;

pub fn run_example() -> robust_qsl::Result<()> {
    let gen = assemble_generator(RobustnessOrder::new(2, 1), std::f64::consts::PI)?;
    let dt = 0.05;
    let kernel = build_step_kernel(&gen, dt)?;
    println!("C/S series converged after {} terms", kernel.series_terms);

    let phi = 1.1;
    let fast = step(&kernel, phi);
    let dense = reference_expm(&gen.generator_at(phi).scale(Complex64::new(0.0, -dt)))?;
    let err = fast.distance(&dense).expect("same shape");
    println!("step vs expm at phi = {phi}: {err:.2e}");
    assert!(err < 1e-12);

    let pulse = ControlPulse::with_total_duration(vec![0.0, 0.4, 1.2, 0.4, 0.0], 1.0, gen.omega)?;
    let blocks = propagate_blocks(&gen, &pulse)?;
    for ((k1, k2), b) in gen.order.blocks().zip(&blocks) {
        println!("|U_{k1}{k2}(T)|_F = {:.4}", b.frobenius_norm());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("step propagator example");
}
