//! Robust quantum speed limits and time-optimal pulses for single-qubit gates.
//!
//! A qubit driven at a bounded amplitude `Ω̄` by a phase-modulated field,
//!
//! ```text
//! H(t) = ε₁ σz + (1 + ε₂) Ω̄ [cos φ(t) σx + sin φ(t) σy],
//! ```
//!
//! is subject to an unknown frequency offset `ε₁` and relative amplitude error
//! `ε₂`. Expanding the propagator in both gives blocks `U_{k1,k2}(T)`. A pulse
//! is `(n1, n2)`-robust when it reaches the target gate and cancels every block
//! with `k1 ≤ n1`, `k2 ≤ n2` other than `(0, 0)`. The shortest such duration is
//! the robust quantum speed limit (QSL).
//!
//! The crate is organized as a pipeline:
//!
//! - [`algebra`] assembles the augmented generator whose exponential carries all blocks;
//! - [`propagator`] propagates piecewise-constant pulses through it;
//! - [`objective`] scores a pulse and returns the exact phase gradient;
//! - [`optimizer`] runs quasi-Newton or gradient descent from one or many starts;
//! - [`sweep`] grows the duration until the cost threshold is met;
//! - [`verifier`] checks pulses against the exact uncertain 2x2 model;
//! - [`units`] maps between dimensionless and physical quantities;
//! - [`formats`] and [`cli`] handle files and the `rqsl` command.
//!
//! ```
//! use robust_qsl::{sweep, GateTarget, RobustnessOrder, SweepConfig};
//!
//! let mut cfg = SweepConfig::default();
//! cfg.optimizer.restarts = 2;
//! let record = sweep::sweep(&GateTarget::x(), RobustnessOrder::ZERO, &cfg).unwrap();
//! assert!((record.qsl - 1.0).abs() < 0.01);
//! ```
//!
//! Pauli matrices carry a factor ½ throughout (`σz = ½ diag(1, −1)`), so with
//! the default `Ω̄ = π` a square π-pulse lasts exactly one time unit.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod cli;
pub mod error;
pub mod formats;
pub mod objective;
pub mod optimizer;
pub mod propagator;
pub mod sweep;
pub mod units;
pub mod verifier;

pub use algebra::{assemble_generator, AugmentedGenerator, ComplexMatrix, RobustnessOrder};
pub use error::{Error, Result};
pub use objective::{cost, cost_gradient, gate_error, CostReport, GateTarget, Objective};
pub use optimizer::{multi_start, optimize, OptimizationResult, OptimizerConfig, StepRule};
pub use propagator::{propagate, propagate_blocks, ControlPulse};
pub use sweep::{escalate, QslRecord, SweepConfig};
pub use units::PhysicalScale;
pub use verifier::{error_surface, Axis, ErrorSurface, UncertaintyGrid};
