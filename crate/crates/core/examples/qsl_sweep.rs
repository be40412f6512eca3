// Finds the X-gate speed limit without robustness, then the first-order
// frequency-robust one, warm-starting the second sweep from the first pulse.

use robust_qsl::sweep::{sweep, sweep_from};
use robust_qsl::{GateTarget, RobustnessOrder, SweepConfig};

pub fn run_example() -> robust_qsl::Result<()> {
    let gate = GateTarget::x();
    let mut cfg = SweepConfig::default();
    cfg.optimizer.restarts = 4;

    let base = sweep(&gate, RobustnessOrder::ZERO, &cfg)?;
    println!("T_00 = {:.3} after {} grid points", base.qsl, base.sweep_trace.len());

    // A full escalation would start at T_00; starting close to the answer
    // keeps this example short.
    let cfg10 = SweepConfig { t_start: 2.2, ..cfg };
    let robust = sweep_from(&gate, RobustnessOrder::new(1, 0), &cfg10, Some(&base.pulse))?;
    println!("T_10 = {:.3} (cost {:.1e})", robust.qsl, robust.final_cost);
    for (t, c) in robust.sweep_trace.iter().rev().take(3).rev() {
        println!("  T = {t:.3}: best cost {c:.2e}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("QSL sweep example");
}
