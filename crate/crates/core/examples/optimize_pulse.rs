// Optimizes a Hadamard pulse at a fixed duration from several random starts,
// once with the quasi-Newton rule and once with plain backtracking descent.

use robust_qsl::algebra::{assemble_generator, RobustnessOrder};
use robust_qsl::{multi_start, GateTarget, OptimizerConfig, StepRule};

pub fn run_example() -> robust_qsl::Result<()> {
    let gen = assemble_generator(RobustnessOrder::ZERO, std::f64::consts::PI)?;
    let target = GateTarget::h();
    let duration = 1.3;
    for rule in [StepRule::QuasiNewton, StepRule::Backtracking] {
        let cfg = OptimizerConfig { step_rule: rule, restarts: 4, max_iterations: 500, ..Default::default() };
        let ms = multi_start(&gen, &target, duration, 130, &cfg)?;
        let converged = ms.runs.iter().filter(|r| r.converged).count();
        println!(
            "{rule}: best cost {:.2e} (seed {}), {converged}/{} restarts converged",
            ms.best.final_cost.total,
            ms.best.seed,
            ms.runs.len()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("optimize pulse example");
}
