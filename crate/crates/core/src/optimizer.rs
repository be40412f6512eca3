//! Phase-only GRAPE-style minimization of the robust cost at fixed duration.
//!
//! The amplitude is pinned to `Ω` by the parametrization, so every iterate is
//! feasible. The default update is limited-memory BFGS with Armijo
//! backtracking; plain gradient descent (fixed or backtracking step) is kept
//! for comparison.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::AugmentedGenerator;
use crate::error::{Error, Result};
use crate::objective::{BlockWeights, CostReport, GateTarget, Objective};
use crate::propagator::ControlPulse;

const ARMIJO_C1: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    Fixed,
    Backtracking,
    QuasiNewton,
}

impl fmt::Display for StepRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepRule::Fixed => "fixed",
            StepRule::Backtracking => "backtracking",
            StepRule::QuasiNewton => "quasi-newton",
        })
    }
}

impl FromStr for StepRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(StepRule::Fixed),
            "backtracking" => Ok(StepRule::Backtracking),
            "quasi-newton" => Ok(StepRule::QuasiNewton),
            _ => Err(Error::InvalidConfig(format!(
                "step rule must be fixed, backtracking or quasi-newton, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Convergence threshold on the total cost.
    pub cost_tolerance: f64,
    pub step_rule: StepRule,
    /// Step length for `fixed`, first trial step for the line searches.
    pub initial_step: f64,
    pub seed: u64,
    pub restarts: usize,
    /// Number of curvature pairs kept by the quasi-Newton update.
    pub memory: usize,
    /// Stop when the cost improved by less than `stall_tolerance` (relative)
    /// over the last `stall_window` iterations; 0 disables the check.
    pub stall_window: usize,
    pub stall_tolerance: f64,
    /// Keep the best-so-far cost of every iteration.
    pub record_trace: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            gradient_tolerance: 1e-9,
            cost_tolerance: 1e-10,
            step_rule: StepRule::QuasiNewton,
            initial_step: 0.1,
            seed: 0,
            restarts: 8,
            memory: 20,
            stall_window: 100,
            stall_tolerance: 1e-4,
            record_trace: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cost_tolerance > 0.0) {
            return Err(Error::InvalidConfig("cost_tolerance must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::InvalidConfig("initial_step must be positive".into()));
        }
        if !(self.gradient_tolerance >= 0.0) {
            return Err(Error::InvalidConfig("gradient_tolerance must be non-negative".into()));
        }
        if self.step_rule == StepRule::QuasiNewton && self.memory == 0 {
            return Err(Error::InvalidConfig("quasi-newton needs memory >= 1".into()));
        }
        Ok(())
    }
}

/// Why an optimization run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    CostThreshold,
    GradientTolerance,
    MaxIterations,
    Stalled,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub pulse: ControlPulse,
    pub final_cost: CostReport,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
    pub termination: Termination,
    /// Best-so-far cost after each iteration (empty unless requested).
    pub trace: Vec<f64>,
}

/// Uniform phases on `[−π, π)` from a seeded stream.
pub fn random_phases(segments: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..segments).map(|_| rng.gen_range(-PI..PI)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_finite(value: f64, grad: &[f64]) -> Result<()> {
    if value.is_finite() && grad.iter().all(|g| g.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("cost or gradient evaluation"))
    }
}

/// L-BFGS two-loop recursion: returns `−H·g`.
fn lbfgs_direction(grad: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Minimizes `objective` starting from `phases`.
///
/// `pulse_template` supplies `Δt` and `Ω` for the returned pulse.
pub fn minimize(
    objective: &Objective,
    phases: Vec<f64>,
    pulse_template: &ControlPulse,
    seed: u64,
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult> {
    cfg.validate()?;
    let n = phases.len();
    let mut x = phases;
    let mut g = vec![0.0; n];
    let mut f = objective.value_and_gradient(&x, &mut g);
    check_finite(f, &g)?;

    let mut trace = Vec::new();
    let mut recent: VecDeque<f64> = VecDeque::new();
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut last_alpha = cfg.initial_step;
    let mut iterations = 0;
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];

    let termination = loop {
        if f <= cfg.cost_tolerance {
            break Termination::CostThreshold;
        }
        if norm(&g) <= cfg.gradient_tolerance {
            break Termination::GradientTolerance;
        }
        if iterations >= cfg.max_iterations {
            break Termination::MaxIterations;
        }
        if cfg.stall_window > 0 {
            if recent.len() > cfg.stall_window {
                let old = recent.pop_front().unwrap();
                if old - f <= cfg.stall_tolerance * old {
                    break Termination::Stalled;
                }
            }
            recent.push_back(f);
        }
        iterations += 1;

        let (direction, mut alpha) = match cfg.step_rule {
            StepRule::Fixed | StepRule::Backtracking => {
                let d: Vec<f64> = g.iter().map(|v| -v).collect();
                let a = if cfg.step_rule == StepRule::Fixed { cfg.initial_step } else { (last_alpha * 2.0).min(1e3) };
                (d, a)
            }
            StepRule::QuasiNewton => {
                let mut d = lbfgs_direction(&g, &history);
                if history.is_empty() || dot(&d, &g) >= 0.0 {
                    history.clear();
                    d = g.iter().map(|v| -v).collect();
                    let a = (cfg.initial_step / norm(&d)).min(1.0);
                    (d, a)
                } else {
                    (d, 1.0)
                }
            }
        };

        let slope = dot(&g, &direction);
        let f_new = loop {
            x_new.iter_mut().zip(&x).zip(&direction).for_each(|((xn, xi), di)| *xn = xi + alpha * di);
            let value = objective.value_and_gradient(&x_new, &mut g_new);
            check_finite(value, &g_new)?;
            if cfg.step_rule == StepRule::Fixed || value <= f + ARMIJO_C1 * alpha * slope {
                break Some(value);
            }
            alpha *= 0.5;
            if alpha < MIN_STEP {
                break None;
            }
        };

        let Some(f_new) = f_new else {
            if cfg.step_rule == StepRule::QuasiNewton && !history.is_empty() {
                history.clear();
                if cfg.record_trace {
                    trace.push(f);
                }
                continue;
            }
            break Termination::LineSearchFailed;
        };
        last_alpha = alpha;

        if cfg.step_rule == StepRule::QuasiNewton {
            let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
                if history.len() == cfg.memory {
                    history.pop_front();
                }
                history.push_back((s, y, 1.0 / sy));
            }
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        f = f_new;
        if cfg.record_trace {
            let best = trace.last().map_or(f, |&b: &f64| b.min(f));
            trace.push(best);
        }
    };

    let final_cost = objective.cost_of_phases(&x);
    let pulse = ControlPulse::new(x, pulse_template.segment_duration, pulse_template.omega)?;
    Ok(OptimizationResult {
        converged: final_cost.total <= cfg.cost_tolerance,
        pulse,
        final_cost,
        iterations,
        seed,
        termination,
        trace,
    })
}

/// Runs the configured update from `initial`.
pub fn optimize(
    gen: &AugmentedGenerator,
    initial: &ControlPulse,
    target: &GateTarget,
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult> {
    optimize_weighted(gen, initial, target, &BlockWeights::default(), cfg)
}

pub fn optimize_weighted(
    gen: &AugmentedGenerator,
    initial: &ControlPulse,
    target: &GateTarget,
    weights: &BlockWeights,
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult> {
    if (gen.omega - initial.omega).abs() > 1e-12 * gen.omega.max(1.0) {
        return Err(Error::OmegaMismatch { generator: gen.omega, pulse: initial.omega });
    }
    let objective = Objective::with_weights(gen, initial.segment_duration, target, weights)?;
    minimize(&objective, initial.phases.clone(), initial, cfg.seed, cfg)
}

/// Outcome of one restart inside [`multi_start`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestartSummary {
    pub seed: u64,
    pub final_cost: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Set when the restart was aborted by a numerical fault.
    pub fault: Option<String>,
}

#[derive(Debug, Clone)]
pub struct MultiStart {
    pub best: OptimizationResult,
    pub runs: Vec<RestartSummary>,
}

/// Deterministic min-by-cost with the seed as tiebreaker.
pub(crate) fn better(a: &OptimizationResult, b: &OptimizationResult) -> bool {
    (a.final_cost.total, a.seed) < (b.final_cost.total, b.seed)
}

/// Optimizes from `cfg.restarts` random phase vectors seeded
/// `cfg.seed, cfg.seed + 1, …` and keeps the lowest cost.
pub fn multi_start(
    gen: &AugmentedGenerator,
    target: &GateTarget,
    duration: f64,
    segments: usize,
    cfg: &OptimizerConfig,
) -> Result<MultiStart> {
    cfg.validate()?;
    let template = ControlPulse::constant(0.0, segments, duration, gen.omega)?;
    let objective = Objective::new(gen, template.segment_duration, target)?;
    let seeds: Vec<u64> = (0..cfg.restarts as u64).map(|r| cfg.seed.wrapping_add(r)).collect();
    let results: Vec<(u64, Result<OptimizationResult>)> = seeds
        .par_iter()
        .map(|&seed| (seed, minimize(&objective, random_phases(segments, seed), &template, seed, cfg)))
        .collect();

    let mut best: Option<OptimizationResult> = None;
    let mut runs = Vec::with_capacity(results.len());
    let mut first_fault = None;
    for (seed, res) in results {
        match res {
            Ok(r) => {
                runs.push(RestartSummary {
                    seed,
                    final_cost: Some(r.final_cost.total),
                    converged: r.converged,
                    iterations: r.iterations,
                    fault: None,
                });
                if best.as_ref().is_none_or(|b| better(&r, b)) {
                    best = Some(r);
                }
            }
            Err(e) => {
                runs.push(RestartSummary {
                    seed,
                    final_cost: None,
                    converged: false,
                    iterations: 0,
                    fault: Some(e.to_string()),
                });
                first_fault.get_or_insert(e);
            }
        }
    }
    match best {
        Some(best) => Ok(MultiStart { best, runs }),
        None => Err(first_fault.expect("at least one restart ran")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{assemble_generator, RobustnessOrder};
    use crate::objective::cost;

    fn bare() -> AugmentedGenerator {
        assemble_generator(RobustnessOrder::ZERO, PI).unwrap()
    }

    #[test]
    fn converges_for_x_at_unit_duration() {
        let gen = bare();
        let cfg = OptimizerConfig::default();
        for seed in 0..3 {
            let init = ControlPulse::with_total_duration(random_phases(100, seed), 1.0, PI).unwrap();
            let r = optimize(&gen, &init, &GateTarget::x(), &cfg).unwrap();
            assert!(r.converged, "seed {seed}: {:?}", r.final_cost);
            assert!(r.final_cost.total <= 1e-10);
            assert_eq!(r.termination, Termination::CostThreshold);
        }
    }

    /// Brute-force check over constant-phase pulses: the best constant pulse at
    /// T = 1 reaches zero error, so the optimum exists.
    #[test]
    fn constant_phase_grid_reaches_zero_at_unit_duration() {
        let gen = bare();
        let best = (0..720)
            .map(|i| {
                let phi = -PI + i as f64 * PI / 360.0;
                let p = ControlPulse::constant(phi, 1, 1.0, PI).unwrap();
                cost(&gen, &p, &GateTarget::x()).unwrap().total
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best <= 1e-15);
    }

    #[test]
    fn infeasible_below_speed_limit() {
        let gen = bare();
        let cfg = OptimizerConfig::default();
        // Random pulses never get close at T = 0.8: a rotation angle of at most 0.8π.
        let floor = (0..200)
            .map(|s| {
                let p = ControlPulse::with_total_duration(random_phases(80, 1000 + s), 0.8, PI).unwrap();
                cost(&gen, &p, &GateTarget::x()).unwrap().total
            })
            .fold(f64::INFINITY, f64::min);
        assert!(floor > 1e-2);
        let init = ControlPulse::with_total_duration(random_phases(80, 4), 0.8, PI).unwrap();
        let r = optimize(&gen, &init, &GateTarget::x(), &cfg).unwrap();
        assert!(!r.converged);
        // 1 − cos²(0.4π) is the exact floor for a resonant 0.8π rotation.
        let exact_floor = 1.0 - (0.4 * PI).sin().powi(2);
        assert!(r.final_cost.total >= exact_floor - 1e-9, "{}", r.final_cost.total);
    }

    #[test]
    fn deterministic_trace() {
        let gen = bare();
        let cfg = OptimizerConfig { record_trace: true, ..Default::default() };
        let init = ControlPulse::with_total_duration(random_phases(60, 9), 1.4, PI).unwrap();
        let a = optimize(&gen, &init, &GateTarget::h(), &cfg).unwrap();
        let b = optimize(&gen, &init, &GateTarget::h(), &cfg).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.pulse, b.pulse);
        assert!(!a.trace.is_empty());
    }

    #[test]
    fn trace_is_monotone_for_every_rule() {
        let gen = assemble_generator(RobustnessOrder::new(1, 0), PI).unwrap();
        for rule in [StepRule::Fixed, StepRule::Backtracking, StepRule::QuasiNewton] {
            let cfg = OptimizerConfig {
                step_rule: rule,
                max_iterations: 150,
                initial_step: 0.05,
                record_trace: true,
                ..Default::default()
            };
            let init = ControlPulse::with_total_duration(random_phases(40, 1), 2.5, PI).unwrap();
            let r = optimize(&gen, &init, &GateTarget::x(), &cfg).unwrap();
            assert!(r.trace.windows(2).all(|w| w[1] <= w[0]), "{rule}");
            for (ux, uy) in r.pulse.controls() {
                assert!((ux.hypot(uy) - PI).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn backtracking_accepts_only_decreasing_steps() {
        let gen = assemble_generator(RobustnessOrder::new(0, 1), PI).unwrap();
        let cfg = OptimizerConfig {
            step_rule: StepRule::Backtracking,
            max_iterations: 100,
            ..Default::default()
        };
        let obj = Objective::new(&gen, 0.05, &GateTarget::z()).unwrap();
        let init = ControlPulse::with_total_duration(random_phases(40, 2), 2.0, PI).unwrap();
        let mut last = obj.value(&init.phases);
        // Re-run with increasing iteration caps; the accepted sequence never rises.
        for cap in [1, 5, 20, 100] {
            let r = optimize(&gen, &init, &GateTarget::z(), &OptimizerConfig { max_iterations: cap, ..cfg.clone() })
                .unwrap();
            assert!(r.final_cost.total <= last + 1e-15);
            last = r.final_cost.total;
        }
    }

    #[test]
    fn multi_start_contracts() {
        let gen = bare();
        let cfg = OptimizerConfig { restarts: 1, seed: 42, ..Default::default() };
        let single = multi_start(&gen, &GateTarget::z(), 1.2, 120, &cfg).unwrap();
        let init = ControlPulse::with_total_duration(random_phases(120, 42), 1.2, PI).unwrap();
        let direct = optimize(&gen, &init, &GateTarget::z(), &cfg).unwrap();
        assert_eq!(single.best.pulse, direct.pulse);

        let cfg = OptimizerConfig { restarts: 4, seed: 7, max_iterations: 30, ..Default::default() };
        let many = multi_start(&gen, &GateTarget::z(), 1.2, 120, &cfg).unwrap();
        assert_eq!(many.runs.len(), 4);
        for run in &many.runs {
            assert!(many.best.final_cost.total <= run.final_cost.unwrap());
        }
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig { restarts: 0, ..Default::default() }.validate().is_err());
        assert!(OptimizerConfig { cost_tolerance: 0.0, ..Default::default() }.validate().is_err());
        assert!("quasi-newton".parse::<StepRule>().is_ok());
        assert!("newton".parse::<StepRule>().is_err());
    }

    #[test]
    fn non_finite_phases_are_reported() {
        let gen = bare();
        let init = ControlPulse::new(vec![f64::NAN; 4], 0.25, PI).unwrap();
        let err = optimize(&gen, &init, &GateTarget::x(), &OptimizerConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }
}
