//! Independent checks of pulses against the exact uncertain qubit model.
//!
//! Everything here simulates the 2x2 model directly, with
//! `H(ε₁, ε₂) = ε₁σz + (1+ε₂)Ω(cosφ σx + sinφ σy)` constant on each segment, and
//! never touches the augmented system. That makes it a referee for the
//! optimizer: error surfaces, fitted Taylor coefficients, error-scaling slopes
//! and sublevel regions are all computed from exact segment exponentials.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{assemble_generator, ComplexMatrix, RobustnessOrder};
use crate::error::{Error, Result};
use crate::objective::{gate_error, GateTarget};
use crate::propagator::{propagate_blocks, ControlPulse};

/// Half-width of the window the coefficient fit samples.
pub const FIT_WINDOW: f64 = 1e-2;
/// Highest order [`fit_error_coefficients`] accepts.
pub const MAX_FIT_ORDER: usize = 8;
const MAX_FIT_CONDITION: f64 = 1e8;
/// Errors below this are treated as numerical noise by [`scaling_slope`].
pub const NOISE_FLOOR: f64 = 1e-14;
const SLOPE_POINTS: usize = 9;

/// Direction in `(ε₁, ε₂)` space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    /// `(ε, 0)`.
    Frequency,
    /// `(0, ε)`.
    Amplitude,
    /// `(ε, ε)`.
    Diagonal,
}

impl Axis {
    pub fn point(self, eps: f64) -> (f64, f64) {
        match self {
            Axis::Frequency => (eps, 0.0),
            Axis::Amplitude => (0.0, eps),
            Axis::Diagonal => (eps, eps),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Frequency => "frequency",
            Axis::Amplitude => "amplitude",
            Axis::Diagonal => "diagonal",
        })
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "frequency" | "freq" | "eps1" => Ok(Axis::Frequency),
            "amplitude" | "amp" | "eps2" => Ok(Axis::Amplitude),
            "diagonal" | "diag" | "both" => Ok(Axis::Diagonal),
            other => Err(Error::InvalidConfig(format!("unknown axis '{other}'"))),
        }
    }
}

/// Sampling nodes for `ε₁` (rows) and `ε₂` (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintyGrid {
    pub eps1_values: Vec<f64>,
    pub eps2_values: Vec<f64>,
}

impl Default for UncertaintyGrid {
    fn default() -> Self {
        Self::uniform(0.5, 101)
    }
}

impl UncertaintyGrid {
    /// `points` evenly spaced values on `[-half_width, half_width]` per axis.
    pub fn uniform(half_width: f64, points: usize) -> Self {
        let values = linspace(half_width, points);
        Self { eps1_values: values.clone(), eps2_values: values }
    }

    pub fn new(eps1_values: Vec<f64>, eps2_values: Vec<f64>) -> Result<Self> {
        let grid = Self { eps1_values, eps2_values };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps1", &self.eps1_values), ("eps2", &self.eps2_values)] {
            if v.is_empty() {
                return Err(Error::InvalidConfig(format!("{name} grid is empty")));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("uncertainty grid"));
            }
            if v.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidConfig(format!("{name} grid must be strictly increasing")));
            }
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.eps1_values.len(), self.eps2_values.len())
    }
}

fn linspace(half_width: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![0.0];
    }
    let step = 2.0 * half_width / (points - 1) as f64;
    (0..points)
        .map(|i| {
            // Mirror the lower half so the grid is exactly symmetric and hits 0.
            let j = i.min(points - 1 - i);
            let v = -half_width + j as f64 * step;
            let v = if 2 * j + 1 == points { 0.0 } else { v };
            if i > j {
                -v
            } else {
                v
            }
        })
        .collect()
}

/// Gate error on a grid; `errors[i][j]` belongs to `(eps1_values[i], eps2_values[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSurface {
    pub grid: UncertaintyGrid,
    pub errors: Vec<Vec<f64>>,
}

impl ErrorSurface {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.errors[i][j]
    }

    /// Iterates `(ε₁, ε₂, F)` row by row.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.grid.eps1_values.iter().zip(&self.errors).flat_map(move |(&e1, row)| {
            self.grid.eps2_values.iter().zip(row).map(move |(&e2, &f)| (e1, e2, f))
        })
    }

    pub fn max_error(&self) -> f64 {
        self.nodes().map(|(_, _, f)| f).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Exact propagator `U(T; ε₁, ε₂)` of the uncertain qubit under `pulse`.
pub fn simulate_exact(pulse: &ControlPulse, eps1: f64, eps2: f64) -> ComplexMatrix {
    let a = (1.0 + eps2) * pulse.omega;
    let dt = pulse.segment_duration;
    let omega_eff = (eps1 * eps1 + a * a).sqrt();
    let x = 0.5 * omega_eff * dt;
    let cos = x.cos();
    let sinc = if x.abs() < 1e-4 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    // exp(−iGΔt) = cos(x) I − iΔt sinc(x) G, G = ½[[ε₁, a e^{iφ}], [a e^{−iφ}, −ε₁]].
    let k = Complex64::new(0.0, -0.5 * dt * sinc);
    let d0 = Complex64::new(cos, 0.0) + k * eps1;
    let d1 = Complex64::new(cos, 0.0) - k * eps1;

    let mut u = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    for &phi in &pulse.phases {
        let e = Complex64::from_polar(a, phi);
        let v01 = k * e;
        let v10 = k * e.conj();
        u = [
            d0 * u[0] + v01 * u[2],
            d0 * u[1] + v01 * u[3],
            v10 * u[0] + d1 * u[2],
            v10 * u[1] + d1 * u[3],
        ];
    }
    ComplexMatrix::from_row_major(2, 2, u.to_vec()).expect("2x2")
}

fn error_at(pulse: &ControlPulse, target: &GateTarget, eps1: f64, eps2: f64) -> f64 {
    gate_error(&simulate_exact(pulse, eps1, eps2), target).expect("2x2 propagator")
}

/// `F(ε₁, ε₂)` at every node of `grid`.
pub fn error_surface(pulse: &ControlPulse, target: &GateTarget, grid: &UncertaintyGrid) -> Result<ErrorSurface> {
    grid.validate()?;
    let errors = grid
        .eps1_values
        .par_iter()
        .map(|&e1| grid.eps2_values.iter().map(|&e2| error_at(pulse, target, e1, e2)).collect())
        .collect();
    Ok(ErrorSurface { grid: grid.clone(), errors })
}

/// `F` along `axis` at each of `eps`.
pub fn error_along(pulse: &ControlPulse, target: &GateTarget, axis: Axis, eps: &[f64]) -> Vec<f64> {
    eps.par_iter()
        .map(|&e| {
            let (e1, e2) = axis.point(e);
            error_at(pulse, target, e1, e2)
        })
        .collect()
}

/// Frobenius norms of the Taylor coefficients of `U(T; ε)` along `axis`,
/// orders `0..=max_order`, fitted from exact simulations.
///
/// Each matrix entry is least-squares fitted by a polynomial of degree
/// `max_order + 4` at Chebyshev nodes in `[-FIT_WINDOW, FIT_WINDOW]`. Along the
/// diagonal the order-`m` coefficient is `Σ_{k1+k2=m} U_{k1,k2}`.
pub fn fit_error_coefficients(pulse: &ControlPulse, axis: Axis, max_order: usize) -> Result<Vec<f64>> {
    Ok(fit_coefficient_matrices(pulse, axis, max_order)?.iter().map(ComplexMatrix::frobenius_norm).collect())
}

/// The fitted coefficient matrices behind [`fit_error_coefficients`].
pub fn fit_coefficient_matrices(pulse: &ControlPulse, axis: Axis, max_order: usize) -> Result<Vec<ComplexMatrix>> {
    if max_order > MAX_FIT_ORDER {
        return Err(Error::IllConditionedFit(format!(
            "order {max_order} exceeds the supported maximum {MAX_FIT_ORDER}"
        )));
    }
    let degree = max_order + 4;
    let nodes = 2 * degree + 1;
    let xs: Vec<f64> = (0..nodes)
        .map(|i| (std::f64::consts::PI * (i as f64 + 0.5) / nodes as f64).cos())
        .collect();

    // Vandermonde in the scaled variable x = ε / FIT_WINDOW.
    let vander = DMatrix::from_fn(nodes, degree + 1, |r, c| xs[r].powi(c as i32));
    let svd = vander.svd(true, true);
    let sv = &svd.singular_values;
    let condition = sv.max() / sv.min();
    if !(condition <= MAX_FIT_CONDITION) {
        return Err(Error::IllConditionedFit(format!("condition number {condition:.3e}")));
    }

    let samples: Vec<ComplexMatrix> = xs
        .par_iter()
        .map(|&x| {
            let (e1, e2) = axis.point(x * FIT_WINDOW);
            simulate_exact(pulse, e1, e2)
        })
        .collect();
    let rhs = DMatrix::from_fn(nodes, 8, |r, c| {
        let z = samples[r].as_slice()[c / 2];
        if c % 2 == 0 {
            z.re
        } else {
            z.im
        }
    });
    let coeffs = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::IllConditionedFit(e.to_string()))?;

    Ok((0..=max_order)
        .map(|k| {
            let scale = FIT_WINDOW.powi(-(k as i32));
            let entries = (0..4)
                .map(|e| Complex64::new(coeffs[(k, 2 * e)], coeffs[(k, 2 * e + 1)]) * scale)
                .collect();
            ComplexMatrix::from_row_major(2, 2, entries).expect("2x2")
        })
        .collect())
}

/// The same coefficients read off the augmented system: `U_{k,0}`, `U_{0,k}`, or
/// `Σ_{k1+k2=k} U_{k1,k2}` for the diagonal.
pub fn augmented_coefficient_matrices(pulse: &ControlPulse, axis: Axis, max_order: usize) -> Result<Vec<ComplexMatrix>> {
    let order = match axis {
        Axis::Frequency => RobustnessOrder::new(max_order, 0),
        Axis::Amplitude => RobustnessOrder::new(0, max_order),
        Axis::Diagonal => RobustnessOrder::new(max_order, max_order),
    };
    let gen = assemble_generator(order, pulse.omega)?;
    let blocks = propagate_blocks(&gen, pulse)?;
    let mut out = vec![ComplexMatrix::zeros(2, 2); max_order + 1];
    for (idx, (k1, k2)) in order.blocks().enumerate() {
        if k1 + k2 <= max_order {
            out[k1 + k2] += &blocks[idx];
        }
    }
    Ok(out)
}

pub fn augmented_coefficient_norms(pulse: &ControlPulse, axis: Axis, max_order: usize) -> Result<Vec<f64>> {
    Ok(augmented_coefficient_matrices(pulse, axis, max_order)?.iter().map(ComplexMatrix::frobenius_norm).collect())
}

/// Least-squares slope of `log F` against `log ε` at nine log-spaced points
/// in `eps_range` along `axis`.
///
/// An `(n, ·)`-robust pulse probed along the frequency axis gives `2(n+1)`.
pub fn scaling_slope(pulse: &ControlPulse, target: &GateTarget, axis: Axis, eps_range: (f64, f64)) -> Result<f64> {
    let (lo, hi) = eps_range;
    if !(lo > 0.0 && lo < hi && hi <= 0.1) {
        return Err(Error::InvalidConfig(format!("slope range ({lo}, {hi}) must lie in (0, 0.1]")));
    }
    let eps: Vec<f64> = (0..SLOPE_POINTS)
        .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (SLOPE_POINTS - 1) as f64).exp())
        .collect();
    let errors = error_along(pulse, target, axis, &eps);
    if errors.iter().any(|&f| !(f >= NOISE_FLOOR)) {
        return Err(Error::NoiseFloor);
    }
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|f| f.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Sublevel set summary `{F ≤ level}` of an [`ErrorSurface`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub level: f64,
    /// Largest `w` with `F(ε₁, 0) ≤ level` at every grid node with `|ε₁| ≤ w`.
    pub eps1_half_width: f64,
    /// Same along `ε₂` at `ε₁ = 0`.
    pub eps2_half_width: f64,
    /// Number of grid nodes with `F ≤ level`.
    pub cell_count: usize,
    pub total_cells: usize,
}

/// Extracts the symmetric per-axis tolerances and the 2-D sublevel node count.
///
/// The axis widths are read at the grid's zero node; a grid without one (or a
/// failing origin) reports zero width.
pub fn level_set_region(surface: &ErrorSurface, level: f64) -> Result<RegionSummary> {
    if !(level > 0.0) {
        return Err(Error::InvalidConfig("level must be positive".into()));
    }
    let g = &surface.grid;
    let zero1 = g.eps1_values.iter().position(|&e| e == 0.0);
    let zero2 = g.eps2_values.iter().position(|&e| e == 0.0);
    let (eps1_half_width, eps2_half_width) = match (zero1, zero2) {
        (Some(i0), Some(j0)) => {
            let row: Vec<f64> = surface.errors[i0].clone();
            let col: Vec<f64> = surface.errors.iter().map(|r| r[j0]).collect();
            (
                symmetric_width(&g.eps1_values, &col, i0, level),
                symmetric_width(&g.eps2_values, &row, j0, level),
            )
        }
        _ => (0.0, 0.0),
    };
    let cell_count = surface.nodes().filter(|&(_, _, f)| f <= level).count();
    let (n1, n2) = g.shape();
    Ok(RegionSummary { level, eps1_half_width, eps2_half_width, cell_count, total_cells: n1 * n2 })
}

fn symmetric_width(values: &[f64], errors: &[f64], zero: usize, level: f64) -> f64 {
    if errors[zero] > level {
        return 0.0;
    }
    let mut up = 0.0;
    for i in zero + 1..values.len() {
        if errors[i] > level {
            break;
        }
        up = values[i];
    }
    let mut down = 0.0;
    for i in (0..zero).rev() {
        if errors[i] > level {
            break;
        }
        down = -values[i];
    }
    up.min(down)
}
