// Builds the augmented generator for a robustness order and checks the
// identity that makes segment exponentials cheap: every `A(φ)` squares to
// `¼ M ⊗ I₂` with `M = K1² + Ω²K2²`, whatever the phase.

use robust_qsl::algebra::{assemble_generator, kron, ComplexMatrix, RobustnessOrder};

pub fn run_example() -> robust_qsl::Result<()> {
    let order: RobustnessOrder = "1,1".parse()?;
    let gen = assemble_generator(order, std::f64::consts::PI)?;
    println!("order {order}: {} blocks, N = {}", order.block_count(), gen.dim());

    let m = gen.squared_block();
    let expected = kron(&m, &ComplexMatrix::identity(2)).scale_real(0.25);
    for phi in [0.0, 0.7, 2.5] {
        let a = gen.generator_at(phi);
        let err = (&a * &a).distance(&expected).expect("same shape");
        println!("phi = {phi:.1}: |A^2 - M/4 (x) I| = {err:.1e}");
        assert!(err < 1e-12);
    }

    // Block (k1, k2) sits at stacking index k1 (n2 + 1) + k2.
    for (k1, k2) in order.blocks() {
        println!("block ({k1},{k2}) -> index {}", order.block_index(k1, k2));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("operator assembly example");
}
