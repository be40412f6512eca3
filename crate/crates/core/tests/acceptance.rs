//! Acceptance gate, run without the libtest harness so every criterion
//! prints its `[PASS]`/`[FAIL]` line. Arguments not starting with `-` filter
//! criteria by name. Pulses shared between criteria are computed once.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use robust_qsl::algebra::{assemble_generator, ComplexMatrix, RobustnessOrder};
use robust_qsl::objective::{gate_error, GateTarget, Objective};
use robust_qsl::optimizer::{optimize, random_phases, OptimizerConfig};
use robust_qsl::propagator::{build_step_kernel, propagate, reference_expm, step, ControlPulse};
use robust_qsl::sweep::{reference_qsl, sweep, sweep_from, QslRecord, SweepConfig};
use robust_qsl::units::{hz_to_rad_per_s, rad_per_s_to_hz, rescale_detuning, PhysicalScale};
use robust_qsl::verifier::{
    augmented_coefficient_norms, error_along, error_surface, fit_error_coefficients, level_set_region, scaling_slope,
    Axis, UncertaintyGrid,
};

// Tolerances and reference numbers fixed by the acceptance criteria.
const THRESHOLD: f64 = 1e-10;
const T_STEP: f64 = 0.005;
const C1_TOL: f64 = 0.02;
const C2_TOL: f64 = 0.05;
const C3_REL: f64 = 0.05;
const C4_LEVEL: f64 = 1e-6;
const C4_EPS1: f64 = 0.9 * 0.26;
const C4_EPS2: f64 = 0.9 * 0.10;
const C5_LEVEL: f64 = 1e-6;
const C6_EXPM_TOL: f64 = 1e-12;
const C6_GRAD_TOL: f64 = 1e-5;
const C6_UNITARITY_TOL: f64 = 1e-10;
const C6_FIT_TOL: f64 = 1e-5;
const C7_DRIFT_HZ: f64 = 2.6e6;

fn report(id: &str, title: &str, pass: bool, detail: &str) {
    let line = format!("[{}] {id} {title}: {detail}", if pass { "PASS" } else { "FAIL" });
    println!("{line}");
    assert!(pass, "{line}");
}

fn base_cfg() -> SweepConfig {
    SweepConfig::default()
}

fn z() -> GateTarget {
    GateTarget::z()
}

fn order(n1: usize, n2: usize) -> RobustnessOrder {
    RobustnessOrder::new(n1, n2)
}

/// Sweeps `order` from `t_start`, warm-started from `warm`, and logs the run.
fn run_sweep(gate: &GateTarget, o: RobustnessOrder, t_start: f64, warm: Option<&QslRecord>) -> QslRecord {
    let cfg = SweepConfig { t_start, ..base_cfg() };
    let clock = Instant::now();
    let rec = sweep_from(gate, o, &cfg, warm.map(|w| &w.pulse))
        .unwrap_or_else(|e| panic!("{gate} {o} sweep from {t_start}: {e}"));
    println!(
        "  sweep {gate} ({o}) from {t_start:.3}: T = {:.3} in {:.1} s ({} grid points)",
        rec.qsl,
        clock.elapsed().as_secs_f64(),
        rec.sweep_trace.len()
    );
    rec
}

/// The first grid point failed, so the QSL was bracketed from below.
fn bracketed(rec: &QslRecord) -> bool {
    rec.sweep_trace.len() >= 2 && rec.sweep_trace[0].1 > THRESHOLD
}

macro_rules! shared {
    ($name:ident, $body:expr) => {
        fn $name() -> &'static QslRecord {
            static CELL: OnceLock<QslRecord> = OnceLock::new();
            CELL.get_or_init(|| $body)
        }
    };
}

// Zeroth order starts at the default T = 0.3. Robust orders start a fixed
// margin below the reference value rather than at the previous QSL, to keep
// the suite within minutes on one core; `bracketed` confirms each start is
// below the computed QSL.
shared!(x00, run_sweep(&GateTarget::x(), order(0, 0), 0.3, None));
shared!(z00, run_sweep(&z(), order(0, 0), 0.3, None));
shared!(x10, run_sweep(&GateTarget::x(), order(1, 0), 2.33 - 0.15, Some(x00())));
shared!(x01, run_sweep(&GateTarget::x(), order(0, 1), 2.58 - 0.15, Some(x00())));
shared!(z10, run_sweep(&z(), order(1, 0), 3.48 - 0.15, Some(z00())));
shared!(z01, run_sweep(&z(), order(0, 1), 3.46 - 0.15, Some(z00())));
shared!(z20, run_sweep(&z(), order(2, 0), (1.0 - C3_REL) * 4.43, Some(z10())));
shared!(z02, run_sweep(&z(), order(0, 2), (1.0 - C3_REL) * 5.17, Some(z01())));
shared!(z11, run_sweep(&z(), order(1, 1), (1.0 - C3_REL) * 5.34, Some(z00())));
shared!(z30, run_sweep(&z(), order(3, 0), 5.85, Some(z20())));
shared!(z03, run_sweep(&z(), order(0, 3), 6.70, Some(z02())));
shared!(z22, run_sweep(&z(), order(2, 2), 8.0, Some(z11())));

fn polished(rec: &QslRecord) -> ControlPulse {
    let gen = assemble_generator(rec.order, rec.pulse.omega).unwrap();
    let cfg = OptimizerConfig {
        cost_tolerance: 1e-16,
        gradient_tolerance: 0.0,
        max_iterations: 3000,
        stall_window: 300,
        stall_tolerance: 1e-3,
        ..Default::default()
    };
    let r = optimize(&gen, &rec.pulse, &GateTarget::parse(&rec.gate).unwrap(), &cfg).unwrap();
    if r.final_cost.total < rec.final_cost {
        r.pulse
    } else {
        rec.pulse.clone()
    }
}

fn criterion_1_zeroth_order_qsls() {
    let gates = [GateTarget::x(), z(), GateTarget::s(), GateTarget::h()];
    let mut pass = true;
    let mut parts = Vec::new();
    for g in &gates {
        let clock = Instant::now();
        let rec = match g.name.as_str() {
            "X" => x00().clone(),
            "Z" => z00().clone(),
            _ => run_sweep(g, order(0, 0), 0.3, None),
        };
        let reference = reference_qsl(&g.name, RobustnessOrder::ZERO).unwrap();
        let ok = (rec.qsl - reference).abs() <= C1_TOL && bracketed(&rec);
        pass &= ok;
        parts.push(format!("{}={:.3} (ref {reference:.2}, {:.0} s)", g, rec.qsl, clock.elapsed().as_secs_f64()));
    }

    // Independent oracle for Z: dense multi-start on a 0.001 grid around √3.
    let fine = SweepConfig {
        t_start: 1.715,
        t_step: 0.001,
        t_max: 1.80,
        optimizer: OptimizerConfig { restarts: 16, seed: 1000, ..Default::default() },
        ..base_cfg()
    };
    let oracle = sweep(&z(), RobustnessOrder::ZERO, &fine).unwrap();
    let sqrt3 = 3f64.sqrt();
    let ok = (oracle.qsl - sqrt3).abs() <= C1_TOL && (z00().qsl - oracle.qsl).abs() <= C1_TOL && bracketed(&oracle);
    pass &= ok;
    parts.push(format!("Z fine-grid oracle {:.3} vs sqrt3 {sqrt3:.3}", oracle.qsl));
    report("C1", "zeroth-order QSLs within ±0.02", pass, &parts.join(", "));
}

fn criterion_2_first_order_qsls() {
    let cells = [("X", order(1, 0), x10()), ("X", order(0, 1), x01()), ("Z", order(1, 0), z10()), ("Z", order(0, 1), z01())];
    let mut pass = true;
    let mut parts = Vec::new();
    for (g, o, rec) in cells {
        let reference = reference_qsl(g, o).unwrap();
        pass &= (rec.qsl - reference).abs() <= C2_TOL && bracketed(rec);
        parts.push(format!("{g}({o})={:.3} (ref {reference:.2})", rec.qsl));
    }
    report("C2", "first-order QSLs within ±0.05", pass, &parts.join(", "));
}

fn criterion_3_second_order_and_mixed_qsls() {
    let mut pass = true;
    let mut parts = Vec::new();
    for (o, rec) in [(order(2, 0), z20()), (order(0, 2), z02()), (order(1, 1), z11())] {
        let reference = reference_qsl("Z", o).unwrap();
        let rel = (rec.qsl - reference) / reference;
        pass &= rel.abs() <= C3_REL && bracketed(rec);
        parts.push(format!("Z({o})={:.3} (ref {reference:.2}, {:+.1}%)", rec.qsl, 100.0 * rel));
    }
    // Reported, not gated.
    for (o, rec) in [(order(3, 0), z30()), (order(0, 3), z03()), (order(2, 2), z22())] {
        let reference = reference_qsl("Z", o).unwrap();
        let note = if bracketed(rec) { "" } else { ", at sweep start" };
        parts.push(format!("[info] Z({o})={:.3} (ref {reference:.2}{note})", rec.qsl));
    }
    report("C3", "second-order and mixed QSLs within ±5%", pass, &parts.join(", "));
}

/// Largest error on a 0.001-spaced direct grid over `[-width, width]`.
fn max_error_on_axis(pulse: &ControlPulse, axis: Axis, width: f64) -> f64 {
    let n = (width / 0.001).round() as i64;
    let eps: Vec<f64> = (-n..=n).map(|k| (k as f64 * 0.001).clamp(-width, width)).collect();
    error_along(pulse, &z(), axis, &eps).into_iter().fold(0.0, f64::max)
}

fn criterion_4_third_order_robust_regions() {
    let grid = UncertaintyGrid::default();
    let f30 = max_error_on_axis(&z30().pulse, Axis::Frequency, C4_EPS1);
    let f03 = max_error_on_axis(&z03().pulse, Axis::Amplitude, C4_EPS2);
    let r30 = level_set_region(&error_surface(&z30().pulse, &z(), &grid).unwrap(), C4_LEVEL).unwrap();
    let r03 = level_set_region(&error_surface(&z03().pulse, &z(), &grid).unwrap(), C4_LEVEL).unwrap();
    let pass = f30 <= C4_LEVEL && f03 <= C4_LEVEL;
    report(
        "C4",
        "third-order Z pulses keep F <= 1e-6",
        pass,
        &format!(
            "(3,0): max F over |eps1|<={C4_EPS1:.3} is {f30:.2e}, grid half-width {:.2}; \
             (0,3): max F over |eps2|<={C4_EPS2:.3} is {f03:.2e}, grid half-width {:.2}",
            r30.eps1_half_width, r03.eps2_half_width
        ),
    );
}

fn criterion_5_mixed_robustness_dominates() {
    let grid = UncertaintyGrid::default();
    let count = |rec: &QslRecord| level_set_region(&error_surface(&rec.pulse, &z(), &grid).unwrap(), C5_LEVEL).unwrap().cell_count;
    let (c22, c20, c02) = (count(z22()), count(z20()), count(z02()));
    report(
        "C5",
        "(2,2) sublevel region exceeds (2,0) and (0,2)",
        c22 > c20 && c22 > c02,
        &format!("cells at 1e-6 on 101x101: (2,2)={c22}, (2,0)={c20}, (0,2)={c02}"),
    );
}

fn random_order(rng: &mut ChaCha8Rng, max: usize) -> RobustnessOrder {
    order(rng.gen_range(0..=max), rng.gen_range(0..=max))
}

fn check_expm(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..60 {
        let o = random_order(rng, 3);
        let gen = assemble_generator(o, PI).unwrap();
        let dt = rng.gen_range(1e-4..0.1);
        let phi = rng.gen_range(-PI..PI);
        let kernel = build_step_kernel(&gen, dt).unwrap();
        let fast = step(&kernel, phi);
        let dense = reference_expm(&gen.generator_at(phi).scale(Complex64::new(0.0, -dt))).unwrap();
        worst = worst.max(fast.distance(&dense).unwrap());
    }
    worst
}

fn check_gradients(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for draw in 0..100 {
        let o = random_order(rng, 2);
        let gen = assemble_generator(o, PI).unwrap();
        let n = rng.gen_range(4..30);
        let t = rng.gen_range(0.3..4.0);
        let target = [GateTarget::x(), z(), GateTarget::s(), GateTarget::h()][draw % 4].clone();
        let obj = Objective::new(&gen, t / n as f64, &target).unwrap();
        let phases = random_phases(n, rng.gen());
        let mut grad = vec![0.0; n];
        obj.value_and_gradient(&phases, &mut grad);
        let h = 1e-6;
        let fd: Vec<f64> = (0..n)
            .map(|j| {
                let mut p = phases.clone();
                p[j] += h;
                let up = obj.value(&p);
                p[j] -= 2.0 * h;
                (up - obj.value(&p)) / (2.0 * h)
            })
            .collect();
        let diff = grad.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        worst = worst.max(diff / norm);
    }
    worst
}

fn check_unitarity(rng: &mut ChaCha8Rng) -> f64 {
    let gen = assemble_generator(RobustnessOrder::ZERO, PI).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.gen_range(1..2000);
        let p = ControlPulse::with_total_duration(random_phases(n, rng.gen()), rng.gen_range(0.1..20.0), PI).unwrap();
        let u = propagate(&gen, &p).unwrap();
        worst = worst.max((&u.adjoint() * &u).distance(&ComplexMatrix::identity(2)).unwrap());
    }
    worst
}

fn check_fit_oracle(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let n = rng.gen_range(10..80);
        let p = ControlPulse::with_total_duration(random_phases(n, rng.gen()), rng.gen_range(0.5..3.0), PI).unwrap();
        let axis = [Axis::Frequency, Axis::Amplitude, Axis::Diagonal][i % 3];
        let fit = fit_error_coefficients(&p, axis, 2).unwrap();
        let aug = augmented_coefficient_norms(&p, axis, 2).unwrap();
        for (f, a) in fit.iter().zip(&aug) {
            worst = worst.max((f - a).abs() / a);
        }
    }
    worst
}

fn criterion_6_property_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let expm = check_expm(&mut rng);
    let grad = check_gradients(&mut rng);
    let unit = check_unitarity(&mut rng);
    let fit = check_fit_oracle(&mut rng);

    let x = GateTarget::x();
    let s0 = scaling_slope(&x00().pulse, &x, Axis::Frequency, (1e-3, 1e-2)).unwrap();
    let s1 = scaling_slope(&polished(x10()), &x, Axis::Frequency, (3e-3, 3e-2)).unwrap();
    let s2 = scaling_slope(&polished(z20()), &z(), Axis::Frequency, (3e-2, 1e-1)).unwrap();

    // Doubling Ω̄ with the time grid halved halves the QSL.
    let mut prop_ok = true;
    let mut prop = Vec::new();
    for g in [GateTarget::x(), GateTarget::h()] {
        let base = if g.name == "X" { x00().clone() } else { sweep(&g, RobustnessOrder::ZERO, &base_cfg()).unwrap() };
        let doubled = SweepConfig { omega: 2.0 * PI, t_start: 0.15, t_step: T_STEP / 2.0, segment_target: 0.005, ..base_cfg() };
        let fast = sweep(&g, RobustnessOrder::ZERO, &doubled).unwrap();
        prop_ok &= (fast.qsl - base.qsl / 2.0).abs() <= T_STEP / 2.0 + 1e-9;
        prop.push(format!("{g} {:.4}->{:.4}", base.qsl, fast.qsl));
    }

    let pass = expm <= C6_EXPM_TOL
        && grad <= C6_GRAD_TOL
        && unit <= C6_UNITARITY_TOL
        && fit <= C6_FIT_TOL
        && (s0 - 2.0).abs() <= 0.3
        && (s1 - 4.0).abs() <= 0.3
        && (s2 - 6.0).abs() <= 0.5
        && prop_ok;
    report(
        "C6",
        "property suite",
        pass,
        &format!(
            "expm {expm:.1e}, gradient {grad:.1e}, unitarity {unit:.1e}, fit oracle {fit:.1e}, \
             slopes {s0:.2}/{s1:.2}/{s2:.2}, proportionality {}",
            prop.join(" ")
        ),
    );
}

fn criterion_7_physical_drift_tolerance() {
    // Frequency tolerance of the (3,0) Z pulse on a 0.001 grid, then mapped
    // to a 2π·10 MHz drive bound.
    let pulse = &z30().pulse;
    let mut width = 0.0;
    for k in 1..=500 {
        let e = k as f64 * 0.001;
        let f = error_along(pulse, &z(), Axis::Frequency, &[-e, e]);
        if f.iter().any(|&v| v > C4_LEVEL) {
            break;
        }
        width = e;
    }
    let scale = PhysicalScale::pi_normalized(hz_to_rad_per_s(10e6)).unwrap();
    let drift_rad_s = rescale_detuning(width, &scale);
    let drift_hz = rad_per_s_to_hz(drift_rad_s);
    let pass = (0.9 * C7_DRIFT_HZ..=1.1 * C7_DRIFT_HZ).contains(&drift_hz);
    report(
        "C7",
        "physical drift tolerance vs 2.6 MHz",
        pass,
        &format!(
            "eps1 half-width {width:.3} -> {drift_rad_s:.3e} rad/s = {:.3} MHz (expected 2.6 MHz ± 10%)",
            drift_hz / 1e6
        ),
    );
}

fn gate_error_sanity_for_shared_pulses() {
    // Every stored pulse reproduces its recorded cost to 1e-12.
    let mut worst: f64 = 0.0;
    for rec in [x00(), z00()] {
        let gen = assemble_generator(rec.order, rec.pulse.omega).unwrap();
        let u = propagate(&gen, &rec.pulse).unwrap();
        let f = gate_error(&u.submatrix(0, 0, 2, 2), &GateTarget::parse(&rec.gate).unwrap()).unwrap();
        worst = worst.max((f - rec.final_cost).abs());
    }
    report("S", "stored pulses reproduce their recorded cost", worst <= 1e-12, &format!("worst deviation {worst:.1e}"));
}

fn main() {
    let criteria: [(&str, fn()); 8] = [
        ("criterion_1_zeroth_order_qsls", criterion_1_zeroth_order_qsls),
        ("criterion_2_first_order_qsls", criterion_2_first_order_qsls),
        ("criterion_3_second_order_and_mixed_qsls", criterion_3_second_order_and_mixed_qsls),
        ("criterion_4_third_order_robust_regions", criterion_4_third_order_robust_regions),
        ("criterion_5_mixed_robustness_dominates", criterion_5_mixed_robustness_dominates),
        ("criterion_6_property_suite", criterion_6_property_suite),
        ("criterion_7_physical_drift_tolerance", criterion_7_physical_drift_tolerance),
        ("gate_error_sanity_for_shared_pulses", gate_error_sanity_for_shared_pulses),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut ran = 0;
    let mut failed = Vec::new();
    for (name, check) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        if std::panic::catch_unwind(check).is_err() {
            failed.push(name);
        }
    }
    println!("acceptance: {} of {ran} passed", ran - failed.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
