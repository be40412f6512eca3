use num_complex::Complex64;

use crate::algebra::ComplexMatrix;
use crate::error::{Error, Result};

/// Scaled norm below which the Taylor core is applied.
const SCALED_NORM: f64 = 0.25;
const MAX_TERMS: usize = 40;

/// General-purpose matrix exponential: scaling and squaring around a
/// truncated Taylor core.
///
/// The input is scaled by `2^-s` until its 1-norm is at most 1/4, the series
/// is summed until the next term is negligible against the partial sum, and
/// the result is squared `s` times. Used as the reference the structured step
/// propagator is checked against.
pub fn reference_expm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("matrix exponential"));
    }
    let n = a.rows();
    let norm = a.norm_one();
    let squarings = if norm > SCALED_NORM {
        (norm / SCALED_NORM).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.scale_real(0.5f64.powi(squarings as i32));

    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=MAX_TERMS {
        term = (&term * &scaled).scale(Complex64::new(1.0 / k as f64, 0.0));
        sum += &term;
        if term.norm_one() <= 1e-18 * sum.norm_one() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::pauli_set;
    use std::f64::consts::PI;

    #[test]
    fn zero_gives_identity() {
        let e = reference_expm(&ComplexMatrix::zeros(3, 3)).unwrap();
        assert_eq!(e, ComplexMatrix::identity(3));
    }

    #[test]
    fn half_pauli_rotation() {
        // exp(-iπσx) with σx = X/2 is -iX.
        let p = pauli_set();
        let e = reference_expm(&p.sx.scale(Complex64::new(0.0, -PI))).unwrap();
        let expected = ComplexMatrix::from_row_major(
            2,
            2,
            vec![0.0.into(), Complex64::new(0.0, -1.0), Complex64::new(0.0, -1.0), 0.0.into()],
        )
        .unwrap();
        assert!(e.approx_eq(&expected, 1e-13));
    }

    #[test]
    fn diagonal_case() {
        let a = Complex64::new(1.3, -0.4);
        let b = Complex64::new(-2.1, 3.0);
        let e = reference_expm(&ComplexMatrix::diag(&[a, b])).unwrap();
        let expected = ComplexMatrix::diag(&[a.exp(), b.exp()]);
        assert!(e.distance(&expected).unwrap() <= 1e-13 * expected.frobenius_norm());
    }

    #[test]
    fn nilpotent_is_finite_series() {
        // exp of a 3x3 shift matrix is I + L + L²/2.
        let l = crate::algebra::shift_matrix(2).scale_real(5.0);
        let e = reference_expm(&l).unwrap();
        let l2 = &l * &l;
        let expected = &(&ComplexMatrix::identity(3) + &l) + &l2.scale_real(0.5);
        assert!(e.approx_eq(&expected, 1e-12));
    }

    #[test]
    fn rejects_non_square() {
        assert!(matches!(
            reference_expm(&ComplexMatrix::zeros(2, 3)),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
    }
}
