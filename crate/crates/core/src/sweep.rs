//! Robust QSL discovery by sweeping the pulse duration upward.
//!
//! At every grid point `T = t_start + k·ΔT` the previous optimum is stretched
//! onto the new grid and re-optimized, alongside freshly drawn random pulses.
//! The first `T` whose best cost reaches the threshold is the QSL.
//! [`escalate`] chains sweeps over increasing robustness orders, starting each
//! one at the previous order's QSL with its pulse as the warm start.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::{assemble_generator, RobustnessOrder};
use crate::error::{Error, Result};
use crate::objective::{BlockWeights, GateTarget, Objective};
use crate::optimizer::{better, minimize, random_phases, OptimizationResult, OptimizerConfig};
use crate::propagator::ControlPulse;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub t_start: f64,
    pub t_step: f64,
    pub t_max: f64,
    /// Cost threshold `ε` that defines reaching the gate.
    pub threshold: f64,
    /// Target segment duration `δ`; a pulse of length `T` has `ceil(T/δ)` segments.
    pub segment_target: f64,
    /// Dimensionless amplitude bound `Ω̄`.
    pub omega: f64,
    /// Fresh random restarts are injected every this many grid points
    /// (1 = at every point).
    pub fresh_every: usize,
    pub weights: Vec<WeightEntry>,
    pub optimizer: OptimizerConfig,
}

/// Per-block weight override `(k1, k2) -> w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightEntry {
    pub k1: usize,
    pub k2: usize,
    pub weight: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            t_start: 0.3,
            t_step: 0.005,
            t_max: 12.0,
            threshold: 1e-10,
            segment_target: 0.01,
            omega: PI,
            fresh_every: 1,
            weights: Vec::new(),
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.t_start > 0.0) {
            return bad("t_start must be positive");
        }
        if !(self.t_step > 0.0) {
            return bad("t_step must be positive");
        }
        if !(self.t_start < self.t_max) {
            return bad("t_start must be below t_max");
        }
        if !(self.threshold > 0.0) {
            return bad("threshold must be positive");
        }
        if !(self.segment_target > 0.0) {
            return bad("segment_target must be positive");
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return bad("omega must be positive");
        }
        if self.fresh_every == 0 {
            return bad("fresh_every must be at least 1");
        }
        self.optimizer.validate()
    }

    pub fn block_weights(&self) -> BlockWeights {
        BlockWeights(self.weights.iter().map(|w| ((w.k1, w.k2), w.weight)).collect())
    }

    /// Grid point `k`, rounded to suppress accumulation noise.
    pub fn grid_point(&self, k: usize) -> f64 {
        round_grid(self.t_start + k as f64 * self.t_step)
    }

    pub fn segments_for(&self, duration: f64) -> usize {
        segment_count(duration, self.segment_target)
    }
}

fn round_grid(t: f64) -> f64 {
    (t * 1e9).round() / 1e9
}

fn segment_count(duration: f64, delta: f64) -> usize {
    ((duration / delta) - 1e-9).ceil().max(1.0) as usize
}

/// One discovered robust QSL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QslRecord {
    pub gate: String,
    pub order: RobustnessOrder,
    pub qsl: f64,
    pub pulse: ControlPulse,
    pub final_cost: f64,
    /// `(T, best cost)` for every visited grid point.
    pub sweep_trace: Vec<(f64, f64)>,
    /// Seeds used for fresh restarts, in the order they ran.
    pub seeds: Vec<u64>,
}

/// Stretches `pulse` to `new_duration` and resamples it onto a uniform grid
/// with segments no longer than `delta_target`.
///
/// The phase profile is unwrapped, then linearly interpolated between segment
/// midpoints in rescaled time `t · T_old / T_new`.
pub fn warm_start_resample(pulse: &ControlPulse, new_duration: f64, delta_target: f64) -> Result<ControlPulse> {
    let old_duration = pulse.total_duration();
    if new_duration < old_duration * (1.0 - 1e-12) {
        return Err(Error::ShrinkingDuration { from: old_duration, to: new_duration });
    }
    if !(delta_target > 0.0) {
        return Err(Error::InvalidDuration(delta_target));
    }
    if pulse.phases.is_empty() {
        return Err(Error::InvalidConfig("cannot resample an empty pulse".into()));
    }
    let mut unwrapped = pulse.phases.clone();
    for j in 1..unwrapped.len() {
        let mut d = unwrapped[j] - unwrapped[j - 1];
        d -= (2.0 * PI) * ((d + PI) / (2.0 * PI)).floor();
        unwrapped[j] = unwrapped[j - 1] + d;
    }

    let segments = segment_count(new_duration, delta_target);
    let new_dt = new_duration / segments as f64;
    let old_dt = pulse.segment_duration;
    let last = unwrapped.len() - 1;
    let scale = old_duration / new_duration;
    let phases = (0..segments)
        .map(|i| {
            let tau = (i as f64 + 0.5) * new_dt * scale;
            let pos = tau / old_dt - 0.5;
            if pos <= 0.0 {
                unwrapped[0]
            } else if pos >= last as f64 {
                unwrapped[last]
            } else {
                let j = pos.floor() as usize;
                let frac = pos - j as f64;
                if frac == 0.0 {
                    unwrapped[j]
                } else {
                    unwrapped[j] * (1.0 - frac) + unwrapped[j + 1] * frac
                }
            }
        })
        .collect();
    ControlPulse::new(phases, new_dt, pulse.omega)
}

/// Sweeps from `cfg.t_start` with a random first guess.
pub fn sweep(gate: &GateTarget, order: RobustnessOrder, cfg: &SweepConfig) -> Result<QslRecord> {
    sweep_from(gate, order, cfg, None)
}

/// Sweeps from `cfg.t_start`, seeding the first grid point with `warm` when given.
pub fn sweep_from(
    gate: &GateTarget,
    order: RobustnessOrder,
    cfg: &SweepConfig,
    warm: Option<&ControlPulse>,
) -> Result<QslRecord> {
    cfg.validate()?;
    let gen = assemble_generator(order, cfg.omega)?;
    let weights = cfg.block_weights();
    let opt = OptimizerConfig { cost_tolerance: cfg.threshold, ..cfg.optimizer.clone() };
    let restarts = opt.restarts as u64;

    let mut previous: Option<ControlPulse> = warm.cloned();
    let mut trace = Vec::new();
    let mut seeds = Vec::new();
    let mut best_seen = f64::INFINITY;

    for k in 0.. {
        let t = cfg.grid_point(k);
        if t > cfg.t_max + 1e-9 {
            break;
        }
        let segments = cfg.segments_for(t);
        let template = ControlPulse::constant(0.0, segments, t, cfg.omega)?;
        let objective = Objective::with_weights(&gen, template.segment_duration, gate, &weights)?;
        let base_seed = opt.seed.wrapping_add(k as u64 * restarts);

        let warm_phases = match &previous {
            Some(p) if p.total_duration() <= t * (1.0 + 1e-12) => Some(warm_start_resample(p, t, cfg.segment_target)?.phases),
            _ => None,
        };
        let fresh = if k % cfg.fresh_every == 0 { restarts } else { 1 };
        // The warm start takes the place of the first fresh draw.
        let first_fresh = u64::from(warm_phases.is_some());

        let mut best: Option<OptimizationResult> = None;
        let runs = warm_phases.into_iter().map(|p| (p, None)).chain(
            (first_fresh..fresh.max(first_fresh)).map(|r| base_seed.wrapping_add(r)).map(|s| (Vec::new(), Some(s))),
        );
        for (phases, fresh_seed) in runs {
            let (phases, seed) = match fresh_seed {
                Some(s) => {
                    seeds.push(s);
                    (random_phases(segments, s), s)
                }
                None => (phases, base_seed),
            };
            let r = minimize(&objective, phases, &template, seed, &opt)?;
            let done = r.converged;
            if best.as_ref().is_none_or(|b| better(&r, b)) {
                best = Some(r);
            }
            // Any converged candidate settles this grid point.
            if done {
                break;
            }
        }
        let best = best.expect("at least one candidate");
        let cost = best.final_cost.total;
        best_seen = best_seen.min(cost);
        trace.push((t, cost));
        if cost <= cfg.threshold {
            return Ok(QslRecord {
                gate: gate.name.clone(),
                order,
                qsl: t,
                final_cost: cost,
                pulse: best.pulse,
                sweep_trace: trace,
                seeds,
            });
        }
        previous = Some(best.pulse);
    }
    Err(Error::TmaxExhausted { t_max: cfg.t_max, best_cost: best_seen })
}

/// Which robustness orders an escalation visits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EscalationSchedule {
    /// Each chain starts after `(0, 0)` and is swept in order.
    pub chains: Vec<Vec<RobustnessOrder>>,
}

impl EscalationSchedule {
    /// Frequency chain `(k, 0)`, amplitude chain `(0, k)` and diagonal chain
    /// `(k, k)`, each bounded by `max_order`.
    pub fn table(max_order: RobustnessOrder) -> Self {
        let freq: Vec<_> = (1..=max_order.n1).map(|k| RobustnessOrder::new(k, 0)).collect();
        let amp: Vec<_> = (1..=max_order.n2).map(|k| RobustnessOrder::new(0, k)).collect();
        let diag: Vec<_> = (1..=max_order.n1.min(max_order.n2)).map(|k| RobustnessOrder::new(k, k)).collect();
        Self { chains: [freq, amp, diag].into_iter().filter(|c| !c.is_empty()).collect() }
    }

    /// Exactly the cells of the benchmark table: `(1..=4, 0)`, `(0, 1..=3)`, `(1,1)`, `(2,2)`.
    pub fn benchmark() -> Self {
        let mut s = Self::table(RobustnessOrder::new(4, 3));
        s.chains[2].truncate(2);
        s
    }

    pub fn single_chain(orders: Vec<RobustnessOrder>) -> Self {
        Self { chains: vec![orders] }
    }
}

/// Sweeps `(0, 0)` from `cfg.t_start`, then every chain of `schedule`.
pub fn escalate(gate: &GateTarget, schedule: &EscalationSchedule, cfg: &SweepConfig) -> Result<Vec<QslRecord>> {
    escalate_with(gate, schedule, cfg, |_| {})
}

/// Like [`escalate`], calling `on_record` as each QSL is found.
pub fn escalate_with(
    gate: &GateTarget,
    schedule: &EscalationSchedule,
    cfg: &SweepConfig,
    mut on_record: impl FnMut(&QslRecord),
) -> Result<Vec<QslRecord>> {
    let base = sweep(gate, RobustnessOrder::ZERO, cfg)?;
    on_record(&base);
    let mut records = vec![base.clone()];
    for chain in &schedule.chains {
        let mut prev = base.clone();
        for &order in chain {
            let next_cfg = SweepConfig { t_start: prev.qsl, ..cfg.clone() };
            let rec = sweep_from(gate, order, &next_cfg, Some(&prev.pulse))?;
            on_record(&rec);
            records.push(rec.clone());
            prev = rec;
        }
    }
    Ok(records)
}

/// Orders of the benchmark table, in column order.
pub const BENCHMARK_ORDERS: [RobustnessOrder; 10] = [
    RobustnessOrder::new(0, 0),
    RobustnessOrder::new(1, 0),
    RobustnessOrder::new(2, 0),
    RobustnessOrder::new(3, 0),
    RobustnessOrder::new(4, 0),
    RobustnessOrder::new(0, 1),
    RobustnessOrder::new(0, 2),
    RobustnessOrder::new(0, 3),
    RobustnessOrder::new(1, 1),
    RobustnessOrder::new(2, 2),
];

/// Published robust QSLs (`Ω̄ = π`) for X, Z, S and H, one row per gate in
/// [`BENCHMARK_ORDERS`] column order.
const REFERENCE_ROWS: [(&str, [f64; 10]); 4] = [
    ("X", [1.00, 2.33, 4.28, 5.04, 6.72, 2.58, 4.21, 5.85, 4.44, 8.22]),
    ("Z", [1.74, 3.48, 4.43, 5.99, 7.19, 3.46, 5.17, 6.91, 5.34, 8.78]),
    ("S", [1.32, 2.97, 4.12, 5.53, 6.71, 3.04, 4.74, 6.48, 4.83, 8.11]),
    ("H", [1.25, 2.69, 4.34, 5.47, 7.00, 2.73, 4.18, 5.81, 4.89, 8.83]),
];

/// Reference QSL for a standard gate, if tabulated.
pub fn reference_qsl(gate: &str, order: RobustnessOrder) -> Option<f64> {
    let col = BENCHMARK_ORDERS.iter().position(|&o| o == order)?;
    REFERENCE_ROWS.iter().find(|(g, _)| g.eq_ignore_ascii_case(gate)).map(|(_, row)| row[col])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_cfg() -> SweepConfig {
        SweepConfig {
            optimizer: OptimizerConfig { restarts: 2, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn resample_same_grid_is_identity() {
        let p = ControlPulse::with_total_duration(vec![0.1, -0.4, 1.3, 2.0, -2.9], 0.05, PI).unwrap();
        let q = warm_start_resample(&p, 0.05, 0.01).unwrap();
        assert_eq!(q.segments(), 5);
        for (a, b) in p.phases.iter().zip(&q.phases) {
            let d = (a - b).rem_euclid(2.0 * PI);
            assert!(d.min(2.0 * PI - d) <= 1e-15);
        }
    }

    #[test]
    fn resample_constant_stays_constant() {
        let p = ControlPulse::constant(0.7, 33, 1.0, PI).unwrap();
        let q = warm_start_resample(&p, 1.37, 0.01).unwrap();
        assert_eq!(q.segments(), 137);
        assert!(q.phases.iter().all(|&x| (x - 0.7).abs() <= 1e-15));
        assert!((q.total_duration() - 1.37).abs() <= 1e-12);
    }

    #[test]
    fn resample_sawtooth_deviation_is_bounded() {
        let phases: Vec<f64> = (0..200).map(|j| 0.1 * (j % 10) as f64).collect();
        let p = ControlPulse::with_total_duration(phases.clone(), 2.0, PI).unwrap();
        let new_t = 2.0 * 1.005;
        let q = warm_start_resample(&p, new_t, 0.01).unwrap();
        let old_dt = p.segment_duration;
        let slope = 0.9 / old_dt;
        for (i, &v) in q.phases.iter().enumerate() {
            let tau = (i as f64 + 0.5) * q.segment_duration * (2.0 / new_t);
            let j = ((tau / old_dt) as usize).min(199);
            let mid = (j as f64 + 0.5) * old_dt;
            assert!((v - phases[j]).abs() <= slope * (tau - mid).abs() + 1e-12, "i={i}");
        }
    }

    #[test]
    fn resample_rejects_shrinking() {
        let p = ControlPulse::constant(0.0, 10, 1.0, PI).unwrap();
        assert!(matches!(warm_start_resample(&p, 0.9, 0.01), Err(Error::ShrinkingDuration { .. })));
    }

    #[test]
    fn resample_unwraps_phase_jumps() {
        let p = ControlPulse::with_total_duration(vec![3.1, -3.1], 0.02, PI).unwrap();
        let q = warm_start_resample(&p, 0.04, 0.01).unwrap();
        // Interpolation goes through ±π, never through 0.
        assert!(q.phases.iter().all(|x| x.abs() > 3.0));
    }

    #[test]
    fn grid_helpers() {
        let cfg = SweepConfig::default();
        assert_eq!(cfg.grid_point(0), 0.3);
        assert_eq!(cfg.grid_point(140), 1.0);
        assert_eq!(cfg.segments_for(1.0), 100);
        assert_eq!(cfg.segments_for(1.005), 101);
        assert!(SweepConfig { t_step: 0.0, ..Default::default() }.validate().is_err());
        assert!(SweepConfig { t_start: 20.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn x_gate_zeroth_order() {
        let rec = sweep(&GateTarget::x(), RobustnessOrder::ZERO, &quick_cfg()).unwrap();
        assert!((rec.qsl - 1.0).abs() <= 0.005 + 1e-9, "{}", rec.qsl);
        assert!(rec.final_cost <= 1e-10);
        let (t_prev, c_prev) = rec.sweep_trace[rec.sweep_trace.len() - 2];
        assert!((rec.qsl - t_prev - 0.005).abs() < 1e-9);
        assert!(c_prev > 1e-10);
    }

    #[test]
    fn t_max_exhaustion_is_an_error() {
        let cfg = SweepConfig { t_max: 0.5, ..quick_cfg() };
        assert!(matches!(
            sweep(&GateTarget::x(), RobustnessOrder::ZERO, &cfg),
            Err(Error::TmaxExhausted { .. })
        ));
    }

    #[test]
    fn reference_lookup() {
        assert_eq!(reference_qsl("Z", RobustnessOrder::new(2, 2)), Some(8.78));
        assert_eq!(reference_qsl("h", RobustnessOrder::new(0, 1)), Some(2.73));
        assert_eq!(reference_qsl("X", RobustnessOrder::new(2, 1)), None);
        assert_eq!(reference_qsl("Y", RobustnessOrder::ZERO), None);
        // Every benchmark schedule cell has a reference.
        for chain in EscalationSchedule::benchmark().chains {
            for o in chain {
                assert!(reference_qsl("S", o).is_some());
            }
        }
    }

    #[test]
    fn schedules() {
        let s = EscalationSchedule::table(RobustnessOrder::new(1, 0));
        assert_eq!(s.chains, vec![vec![RobustnessOrder::new(1, 0)]]);
        let b = EscalationSchedule::benchmark();
        assert_eq!(b.chains.len(), 3);
        assert_eq!(b.chains[0].len(), 4);
        assert_eq!(b.chains[1].len(), 3);
        assert_eq!(b.chains[2], vec![RobustnessOrder::new(1, 1), RobustnessOrder::new(2, 2)]);
    }
}
