//! Structured operators of the augmented (Taylor-expanded) qubit model.
//!
//! The augmented state stacks the expansion blocks `U_{k1,k2}` for
//! `0 <= k1 <= n1`, `0 <= k2 <= n2` in lexicographic order with `k2`
//! fastest, each block being a 2x2 matrix. This is exactly the tensor
//! factor order `L_{n1} ⊗ (·)_{n2} ⊗ σ` used when the generators are
//! assembled, so the block of `(k1, k2)` starts at row `2 * (k1 * (n2 + 1) + k2)`.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries", rows * cols),
                actual: format!("{} entries", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_row_major(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn diag(entries: &[Complex64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self[(r, c)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Frobenius distance to `other`; `None` if the shapes differ.
    pub fn distance(&self, other: &Self) -> Option<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt(),
        )
    }

    /// Same shape and entry-wise within `tol` in absolute value.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(a, b)| (a - b).norm() <= tol)
    }

    pub fn submatrix(&self, row: usize, col: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |r, c| self[(row + r, col + c)])
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: format!("{} rows on the right operand", self.cols),
                actual: format!("{} rows", rhs.rows),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn powi(&self, exp: u32) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::NotSquare { rows: self.rows, cols: self.cols });
        }
        let mut out = Self::identity(self.rows);
        for _ in 0..exp {
            out = out.matmul(self)?;
        }
        Ok(out)
    }

    /// Real parts as a row-major vector.
    pub(crate) fn real_parts(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.re).collect()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    /// Panics on incompatible shapes; use [`ComplexMatrix::matmul`] for a checked product.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("incompatible matrix shapes")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "incompatible matrix shapes");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "incompatible matrix shapes");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "incompatible matrix shapes");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Half-scaled Pauli matrices, `σ = P / 2`.
///
/// Note the sign of `sy`: `½·[[0, i], [−i, 0]]`.
#[derive(Debug, Clone)]
pub struct PauliSet {
    pub sx: ComplexMatrix,
    pub sy: ComplexMatrix,
    pub sz: ComplexMatrix,
}

pub fn pauli_set() -> PauliSet {
    let h = Complex64::new(0.5, 0.0);
    let z = Complex64::new(0.0, 0.0);
    let m = |a, b, c, d| ComplexMatrix::from_row_major(2, 2, vec![a, b, c, d]).unwrap();
    PauliSet {
        sx: m(z, h, h, z),
        sy: m(z, I * 0.5, -I * 0.5, z),
        sz: m(h, z, z, -h),
    }
}

/// The `(n+1)x(n+1)` lower shift matrix: ones on the first subdiagonal.
pub fn shift_matrix(n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n + 1, n + 1, |r, c| {
        if r == c + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.rows * b.rows, a.cols * b.cols, |r, c| {
        a[(r / b.rows, c / b.cols)] * b[(r % b.rows, c % b.cols)]
    })
}

/// Truncation orders `(n1, n2)` of the frequency and amplitude expansions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RobustnessOrder {
    pub n1: usize,
    pub n2: usize,
}

impl RobustnessOrder {
    pub const ZERO: Self = Self { n1: 0, n2: 0 };

    pub const fn new(n1: usize, n2: usize) -> Self {
        Self { n1, n2 }
    }

    /// Number of 2x2 expansion blocks, `(n1+1)(n2+1)`.
    pub const fn block_count(self) -> usize {
        (self.n1 + 1) * (self.n2 + 1)
    }

    /// Augmented dimension `N = 2(n1+1)(n2+1)`.
    pub const fn dim(self) -> usize {
        2 * self.block_count()
    }

    /// Stacked position of block `(k1, k2)`.
    pub const fn block_index(self, k1: usize, k2: usize) -> usize {
        k1 * (self.n2 + 1) + k2
    }

    pub const fn block_label(self, index: usize) -> (usize, usize) {
        (index / (self.n2 + 1), index % (self.n2 + 1))
    }

    /// All `(k1, k2)` in stacking order.
    pub fn blocks(self) -> impl Iterator<Item = (usize, usize)> {
        (0..=self.n1).flat_map(move |k1| (0..=self.n2).map(move |k2| (k1, k2)))
    }

    /// True when every block of `self` is also tracked by `other`.
    pub fn is_contained_in(self, other: Self) -> bool {
        self.n1 <= other.n1 && self.n2 <= other.n2
    }
}

impl fmt::Display for RobustnessOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.n1, self.n2)
    }
}

impl FromStr for RobustnessOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("robustness order must look like `n1,n2`, got `{s}`"));
        let (a, b) = s.split_once(',').ok_or_else(bad)?;
        let n1 = a.trim().parse().map_err(|_| bad())?;
        let n2 = b.trim().parse().map_err(|_| bad())?;
        Ok(Self { n1, n2 })
    }
}

/// Operators of the augmented model `-i[H0 + Ω cosφ H1 + Ω sinφ H2]`.
#[derive(Debug, Clone)]
pub struct AugmentedGenerator {
    pub order: RobustnessOrder,
    pub omega: f64,
    pub h0: ComplexMatrix,
    pub h1: ComplexMatrix,
    pub h2: ComplexMatrix,
    /// `L_{n1} ⊗ I_{n2+1}`, so that `h0 = k1 ⊗ σz`.
    pub k1: ComplexMatrix,
    /// `I_{n1+1} ⊗ (I_{n2+1} + L_{n2})`.
    pub k2: ComplexMatrix,
}

impl AugmentedGenerator {
    pub fn dim(&self) -> usize {
        self.order.dim()
    }

    /// `A(φ) = h0 + Ω cosφ h1 + Ω sinφ h2`.
    pub fn generator_at(&self, phi: f64) -> ComplexMatrix {
        let (s, c) = phi.sin_cos();
        let mut a = self.h0.clone();
        a += &self.h1.scale_real(self.omega * c);
        a += &self.h2.scale_real(self.omega * s);
        a
    }

    /// `k1² + Ω² k2²`; `A(φ)²` equals a quarter of this tensored with `I₂`.
    pub fn squared_block(&self) -> ComplexMatrix {
        let k1sq = &self.k1 * &self.k1;
        let k2sq = &self.k2 * &self.k2;
        &k1sq + &k2sq.scale_real(self.omega * self.omega)
    }
}

pub fn assemble_generator(order: RobustnessOrder, omega: f64) -> Result<AugmentedGenerator> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidOmega(omega));
    }
    let paulis = pauli_set();
    let id1 = ComplexMatrix::identity(order.n1 + 1);
    let id2 = ComplexMatrix::identity(order.n2 + 1);
    let k1 = kron(&shift_matrix(order.n1), &id2);
    let k2 = kron(&id1, &(&id2 + &shift_matrix(order.n2)));
    Ok(AugmentedGenerator {
        order,
        omega,
        h0: kron(&k1, &paulis.sz),
        h1: kron(&k2, &paulis.sx),
        h2: kron(&k2, &paulis.sy),
        k1,
        k2,
    })
}
