// Evaluates the robust cost of a square π-pulse and checks the exact phase
// gradient against central differences.

use robust_qsl::algebra::{assemble_generator, RobustnessOrder};
use robust_qsl::{Objective, GateTarget};

pub fn run_example() -> robust_qsl::Result<()> {
    let gen = assemble_generator(RobustnessOrder::new(1, 1), std::f64::consts::PI)?;
    let target = GateTarget::x();
    let segments = 40;
    let objective = Objective::new(&gen, 1.0 / segments as f64, &target)?;

    // The square pulse is a perfect X gate but not robust at all.
    let square = vec![0.0; segments];
    let report = objective.cost_of_phases(&square);
    println!("gate error {:.2e}, total cost {:.4}", report.gate_error, report.total);
    for ((k1, k2), v) in &report.block_norms {
        println!("  tr U_{k1}{k2}^dag U_{k1}{k2} = {v:.4}");
    }

    let phases: Vec<f64> = (0..segments).map(|j| (0.37 * j as f64).sin()).collect();
    let mut grad = vec![0.0; segments];
    objective.value_and_gradient(&phases, &mut grad);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for j in 0..segments {
        let mut p = phases.clone();
        p[j] += h;
        let up = objective.value(&p);
        p[j] -= 2.0 * h;
        let down = objective.value(&p);
        worst = worst.max(((up - down) / (2.0 * h) - grad[j]).abs());
    }
    let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    println!("max |adjoint - finite difference| = {worst:.2e} (largest component {scale:.2e})");
    assert!(worst <= 1e-5 * scale);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("cost and gradient example");
}
