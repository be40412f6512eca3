//! Command-line front end behind the `rqsl` binary.
//!
//! Settings are resolved as built-in defaults, then the TOML file given with
//! `--config`, then command-line flags. Output goes to `--output-dir`, else
//! `$RQSL_OUTPUT_DIR`, else `./rqsl-out`. Every result file set comes with a
//! `*.provenance.json` (configuration hash, seeds, version) and a
//! `*.meta.json` holding wall-clock times, which are kept out of the results so
//! reruns are byte-identical.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{assemble_generator, RobustnessOrder};
use crate::error::{Error, Result};
use crate::formats::{
    load_pulse, read_json, read_physical_csv, save_pulse, save_qsl_record, unix_now, write_json,
    write_physical_csv, write_surface_csv, write_trace_csv, Provenance, PulseHeader, RunMetadata, SurfaceDocument,
};
use crate::objective::{gate_error, GateTarget};
use crate::optimizer::{multi_start, optimize, OptimizerConfig};
use crate::propagator::ControlPulse;
use crate::sweep::{escalate_with, reference_qsl, sweep, sweep_from, EscalationSchedule, QslRecord, SweepConfig, BENCHMARK_ORDERS};
use crate::units::{parse_angular_frequency, rad_per_s_to_hz, rescale_detuning, rescale_pulse, to_dimensionless, PhysicalScale};
use crate::verifier::{error_surface, level_set_region, scaling_slope, simulate_exact, Axis, RegionSummary, UncertaintyGrid};

pub const OUTPUT_DIR_ENV: &str = "RQSL_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "rqsl-out";

#[derive(Debug, Parser)]
#[command(name = "rqsl", version, about = "Robust quantum speed limits for single-qubit gates")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find the robust QSL of a gate by sweeping the duration.
    Search(SearchArgs),
    /// Optimize a pulse at a fixed duration.
    Optimize(OptimizeArgs),
    /// Evaluate a pulse against the exact uncertain model.
    Verify(VerifyArgs),
    /// Convert a pulse between dimensionless and physical units.
    Rescale(RescaleArgs),
    /// Run the benchmark table for X, Z, S, H.
    Table1(Table1Args),
    /// Export parts of a saved QSL record.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Dimensionless amplitude bound.
    #[arg(long)]
    pub omega_bar: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub segment_target: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// X, Z, S, H or four comma-separated complex entries (row-major).
    #[arg(long)]
    pub gate: Option<String>,
    /// Robustness order `n1,n2`.
    #[arg(long)]
    pub order: Option<String>,
    /// Escalate through every chain up to this order instead of a single sweep.
    #[arg(long, conflicts_with = "order")]
    pub escalate: Option<String>,
    #[arg(long)]
    pub t_start: Option<f64>,
    #[arg(long)]
    pub t_step: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub gate: Option<String>,
    #[arg(long)]
    pub order: Option<String>,
    /// Total dimensionless duration.
    #[arg(long, required_unless_present = "init")]
    pub duration: Option<f64>,
    /// Start from this pulse file instead of random restarts.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long)]
    pub step_rule: Option<String>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Pulse CSV.
    #[arg(long)]
    pub pulse: PathBuf,
    /// Target gate; defaults to the gate in the pulse header.
    #[arg(long)]
    pub gate: Option<String>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub grid_half_width: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub level: f64,
    #[arg(long)]
    pub slope_axis: Option<String>,
    /// `lo,hi` within (0, 0.1].
    #[arg(long, default_value = "0.001,0.01")]
    pub slope_range: String,
}

#[derive(Debug, Clone, Args)]
pub struct RescaleArgs {
    /// Dimensionless pulse CSV, or a physical CSV with `--inverse`.
    #[arg(long)]
    pub pulse: PathBuf,
    /// Physical drive bound with unit, e.g. `2pi*10MHz` or `6.28e7rad/s`.
    #[arg(long)]
    pub omega: Option<String>,
    /// Also report the physical size of this dimensionless detuning.
    #[arg(long)]
    pub drift: Option<f64>,
    /// Convert a physical CSV back to a dimensionless pulse.
    #[arg(long)]
    pub inverse: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Table1Args {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated gates.
    #[arg(long, default_value = "X,Z,S,H")]
    pub gates: String,
    /// Only escalate up to this order (default: the full benchmark table).
    #[arg(long)]
    pub max_order: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    /// QSL record JSON written by `search`.
    #[arg(long)]
    pub record: PathBuf,
    /// `pulse`, `trace`, `physical` or `json`.
    #[arg(long)]
    pub format: String,
    /// Required for `physical`.
    #[arg(long)]
    pub omega: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Settings file layout. Top-level `[optimizer]` replaces `sweep.optimizer`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub gate: Option<String>,
    pub order: Option<String>,
    pub escalate: Option<String>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub sweep: SweepConfig,
    pub optimizer: Option<OptimizerConfig>,
    pub grid: GridConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { half_width: 0.5, points: 101 }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Parse { path: path.into(), message: e.to_string() })?;
        toml::from_str(&text).map_err(|e| Error::Parse { path: path.into(), message: e.to_string() })
    }

    fn resolve(common: &CommonArgs) -> Result<Self> {
        let mut cfg = match &common.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(opt) = cfg.optimizer.take() {
            cfg.sweep.optimizer = opt;
        }
        if let Some(seed) = common.seed.or(cfg.seed) {
            cfg.sweep.optimizer.seed = seed;
            cfg.seed = Some(seed);
        }
        if let Some(r) = common.restarts {
            cfg.sweep.optimizer.restarts = r;
        }
        if let Some(w) = common.omega_bar {
            cfg.sweep.omega = w;
        }
        if let Some(t) = common.threshold {
            cfg.sweep.threshold = t;
        }
        if let Some(d) = common.segment_target {
            cfg.sweep.segment_target = d;
        }
        if common.output_dir.is_some() {
            cfg.output_dir = common.output_dir.clone();
        }
        cfg.sweep.validate()?;
        Ok(cfg)
    }

    /// The settings that affect results; the output location does not.
    fn hashed(&self) -> Self {
        Self { output_dir: None, ..self.clone() }
    }

    fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    fn gate(&self, flag: &Option<String>) -> Result<GateTarget> {
        let spec = flag.as_deref().or(self.gate.as_deref()).unwrap_or("X");
        GateTarget::parse(spec)
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        // Fails only if a pool already exists, e.g. on a second call in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match cli.command {
        Command::Search(a) => cmd_search(&a),
        Command::Optimize(a) => cmd_optimize(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Rescale(a) => cmd_rescale(&a),
        Command::Table1(a) => cmd_table1(&a),
        Command::Export(a) => cmd_export(&a),
    }
}

fn file_stem(gate: &str, order: RobustnessOrder) -> String {
    let safe: String = gate.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    format!("qsl_{safe}_{}-{}", order.n1, order.n2)
}

fn names(paths: &[PathBuf]) -> Vec<String> {
    paths.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect()
}

fn write_provenance<C: Serialize>(
    dir: &Path,
    stem: &str,
    command: &str,
    config: &C,
    seeds: Vec<u64>,
    outputs: &[PathBuf],
    started: f64,
) -> Result<()> {
    let provenance = Provenance::new(command, config, seeds, names(outputs))?;
    write_json(&dir.join(format!("{stem}.provenance.json")), &provenance)?;
    let finished = unix_now();
    let meta = RunMetadata {
        started_unix_s: started,
        finished_unix_s: finished,
        elapsed_s: finished - started,
        extra: Default::default(),
    };
    write_json(&dir.join(format!("{stem}.meta.json")), &meta)
}

fn cmd_search(a: &SearchArgs) -> Result<()> {
    let started = unix_now();
    let mut cfg = RunConfig::resolve(&a.common)?;
    if let Some(t) = a.t_start {
        cfg.sweep.t_start = t;
    }
    if let Some(t) = a.t_step {
        cfg.sweep.t_step = t;
    }
    if let Some(t) = a.t_max {
        cfg.sweep.t_max = t;
    }
    cfg.sweep.validate()?;
    if a.gate.is_some() {
        cfg.gate = a.gate.clone();
    }
    let gate = cfg.gate(&a.gate)?;
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)?;

    let escalate = a.escalate.clone().or(if a.order.is_some() { None } else { cfg.escalate.clone() });
    let records = if let Some(max) = escalate {
        let max: RobustnessOrder = max.parse()?;
        cfg.escalate = Some(max.to_string());
        cfg.order = None;
        escalate_with(&gate, &EscalationSchedule::table(max), &cfg.sweep, report_qsl)?
    } else {
        let order: RobustnessOrder = a.order.as_deref().or(cfg.order.as_deref()).unwrap_or("0,0").parse()?;
        cfg.order = Some(order.to_string());
        let r = sweep(&gate, order, &cfg.sweep)?;
        report_qsl(&r);
        vec![r]
    };
    for r in &records {
        let stem = file_stem(&r.gate, r.order);
        let outputs = save_qsl_record(&dir, &stem, r)?;
        write_provenance(&dir, &stem, "search", &cfg.hashed(), r.seeds.clone(), &outputs, started)?;
    }
    Ok(())
}

fn report_qsl(r: &QslRecord) {
    println!("QSL {} ({}) = {:.3}  cost {:.3e}", r.gate, r.order, r.qsl, r.final_cost);
}

fn cmd_optimize(a: &OptimizeArgs) -> Result<()> {
    let started = unix_now();
    let mut cfg = RunConfig::resolve(&a.common)?;
    if let Some(rule) = &a.step_rule {
        cfg.sweep.optimizer.step_rule = rule.parse()?;
    }
    if let Some(n) = a.max_iterations {
        cfg.sweep.optimizer.max_iterations = n;
    }
    cfg.sweep.optimizer.cost_tolerance = cfg.sweep.threshold;
    let gate = cfg.gate(&a.gate)?;
    let order: RobustnessOrder = a.order.as_deref().or(cfg.order.as_deref()).unwrap_or("0,0").parse()?;
    cfg.order = Some(order.to_string());
    let gen = assemble_generator(order, cfg.sweep.omega)?;

    let (result, seeds) = match &a.init {
        Some(path) => {
            let (pulse, _) = load_pulse(path)?;
            let pulse = match a.duration {
                Some(t) => ControlPulse::with_total_duration(pulse.phases, t, pulse.omega)?,
                None => pulse,
            };
            (optimize(&gen, &pulse, &gate, &cfg.sweep.optimizer)?, vec![cfg.sweep.optimizer.seed])
        }
        None => {
            let t = a.duration.expect("clap enforces --duration without --init");
            let ms = multi_start(&gen, &gate, t, cfg.sweep.segments_for(t), &cfg.sweep.optimizer)?;
            let seeds = ms.runs.iter().map(|r| r.seed).collect();
            (ms.best, seeds)
        }
    };
    println!(
        "{} ({}) T = {:.4}: cost {:.3e} after {} iterations ({:?})",
        gate,
        order,
        result.pulse.total_duration(),
        result.final_cost.total,
        result.iterations,
        result.termination
    );
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)?;
    let stem = format!("opt_{}", file_stem(&gate.name, order).trim_start_matches("qsl_"));
    let pulse_path = dir.join(format!("{stem}_pulse.csv"));
    save_pulse(&pulse_path, &result.pulse, &PulseHeader { order: Some(order), gate: Some(gate.name.clone()) })?;
    let json = dir.join(format!("{stem}.json"));
    write_json(&json, &result.final_cost)?;
    write_provenance(&dir, &stem, "optimize", &cfg.hashed(), seeds, &[pulse_path, json], started)
}

#[derive(Debug, Serialize)]
struct VerifySummary {
    gate: String,
    pulse_duration: f64,
    origin_error: f64,
    region: RegionSummary,
    slope_axis: Option<Axis>,
    slope: Option<f64>,
    slope_error: Option<String>,
}

fn cmd_verify(a: &VerifyArgs) -> Result<()> {
    let started = unix_now();
    let mut cfg = RunConfig::resolve(&a.common)?;
    let (pulse, header) = load_pulse(&a.pulse)?;
    let gate_spec = a.gate.clone().or(header.gate.clone()).or(cfg.gate.clone()).ok_or_else(|| {
        Error::InvalidConfig("no --gate given and the pulse file has no gate header".into())
    })?;
    let gate = GateTarget::parse(&gate_spec)?;
    if let Some(n) = a.grid_points {
        cfg.grid.points = n;
    }
    if let Some(w) = a.grid_half_width {
        cfg.grid.half_width = w;
    }
    let grid = UncertaintyGrid::uniform(cfg.grid.half_width, cfg.grid.points);
    let surface = error_surface(&pulse, &gate, &grid)?;
    let region = level_set_region(&surface, a.level)?;
    let origin_error = gate_error(&simulate_exact(&pulse, 0.0, 0.0), &gate)?;

    let axis = a.slope_axis.as_deref().map(str::parse::<Axis>).transpose()?;
    let (slope, slope_error) = match axis {
        Some(axis) => {
            let (lo, hi) = a
                .slope_range
                .split_once(',')
                .and_then(|(l, h)| Some((l.trim().parse().ok()?, h.trim().parse().ok()?)))
                .ok_or_else(|| Error::InvalidConfig(format!("bad --slope-range '{}'", a.slope_range)))?;
            match scaling_slope(&pulse, &gate, axis, (lo, hi)) {
                Ok(s) => (Some(s), None),
                Err(e @ Error::NoiseFloor) => (None, Some(e.to_string())),
                Err(e) => return Err(e),
            }
        }
        None => (None, None),
    };

    println!("origin error {origin_error:.3e}");
    println!(
        "level {:.1e}: |eps1| <= {:.3}, |eps2| <= {:.3}, {} of {} nodes",
        region.level, region.eps1_half_width, region.eps2_half_width, region.cell_count, region.total_cells
    );
    if let (Some(axis), Some(s)) = (axis, slope) {
        println!("{axis} slope {s:.3}");
    }

    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)?;
    let stem = format!(
        "verify_{}",
        a.pulse.file_stem().map_or("pulse".into(), |s| s.to_string_lossy().into_owned())
    );
    let csv_path = dir.join(format!("{stem}_surface.csv"));
    write_surface_csv(fs::File::create(&csv_path)?, &surface)?;
    let json_path = dir.join(format!("{stem}_surface.json"));
    write_json(&json_path, &SurfaceDocument::new(gate.name.clone(), surface))?;
    let summary_path = dir.join(format!("{stem}_summary.json"));
    write_json(
        &summary_path,
        &VerifySummary {
            gate: gate.name.clone(),
            pulse_duration: pulse.total_duration(),
            origin_error,
            region,
            slope_axis: axis,
            slope,
            slope_error,
        },
    )?;
    write_provenance(&dir, &stem, "verify", &(&cfg.grid, a.level, &a.slope_range), vec![], &[csv_path, json_path, summary_path], started)
}

fn cmd_rescale(a: &RescaleArgs) -> Result<()> {
    if a.inverse {
        let file = fs::File::open(&a.pulse).map_err(|e| Error::Parse { path: a.pulse.clone(), message: e.to_string() })?;
        let phys = read_physical_csv(file, &a.pulse)?;
        let pulse = to_dimensionless(&phys)?;
        let out = a.out.clone().unwrap_or_else(|| a.pulse.with_extension("dimensionless.csv"));
        save_pulse(&out, &pulse, &PulseHeader::default())?;
        println!("{} segments, T = {:.6} (omega_bar = {:.6})", pulse.segments(), pulse.total_duration(), pulse.omega);
        return Ok(());
    }
    let tag = a
        .omega
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("--omega with an explicit unit is required, e.g. 2pi*10MHz".into()))?;
    let omega = parse_angular_frequency(tag)?;
    let (pulse, _) = load_pulse(&a.pulse)?;
    let scale = PhysicalScale::for_bound(omega, pulse.omega)?;
    let phys = rescale_pulse(&pulse, &scale)?;
    let out = a.out.clone().unwrap_or_else(|| a.pulse.with_extension("physical.csv"));
    write_physical_csv(fs::File::create(&out)?, &phys)?;
    println!(
        "duration {:.6e} s, amplitude {:.6e} rad/s ({:.6e} Hz)",
        phys.total_duration_s(),
        omega,
        rad_per_s_to_hz(omega)
    );
    if let Some(d) = a.drift {
        let w = rescale_detuning(d, &scale);
        println!("detuning {d} -> {w:.6e} rad/s ({:.6e} Hz)", rad_per_s_to_hz(w));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct TableRow {
    gate: String,
    order: String,
    reference: Option<f64>,
    computed: Option<f64>,
    deviation: Option<f64>,
    status: String,
}

fn cmd_table1(a: &Table1Args) -> Result<()> {
    let started = unix_now();
    let cfg = RunConfig::resolve(&a.common)?;
    let gates: Vec<GateTarget> = a.gates.split(',').map(|g| GateTarget::parse(g.trim())).collect::<Result<_>>()?;
    let schedule = match &a.max_order {
        Some(m) => EscalationSchedule::table(m.parse()?),
        None => EscalationSchedule::benchmark(),
    };
    let orders: Vec<RobustnessOrder> = BENCHMARK_ORDERS
        .iter()
        .copied()
        .filter(|o| *o == RobustnessOrder::ZERO || schedule.chains.iter().flatten().any(|c| c == o))
        .collect();

    let results: Vec<(String, Vec<QslRecord>, Option<String>)> = gates
        .par_iter()
        .map(|g| {
            let (recs, err) = escalate_partial(g, &schedule, &cfg.sweep);
            (g.name.clone(), recs, err)
        })
        .collect();

    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)?;
    let mut rows = Vec::new();
    let mut seeds = Vec::new();
    for (gate, recs, err) in &results {
        for o in &orders {
            let rec = recs.iter().find(|r| r.order == *o);
            let reference = reference_qsl(gate, *o);
            let computed = rec.map(|r| r.qsl);
            rows.push(TableRow {
                gate: gate.clone(),
                order: o.to_string(),
                reference,
                computed,
                deviation: computed.zip(reference).map(|(c, r)| c - r),
                status: match (rec, err) {
                    (Some(_), _) => "ok".into(),
                    (None, Some(e)) => format!("failed: {e}"),
                    (None, None) => "not run".into(),
                },
            });
        }
        for r in recs {
            seeds.extend(&r.seeds);
            save_qsl_record(&dir, &file_stem(&r.gate, r.order), r)?;
        }
    }
    let path = dir.join("table1.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    for r in &rows {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
        println!("{:>4} {:>4}  ref {:>6}  got {:>6}  {}", r.gate, r.order, fmt(r.reference), fmt(r.computed), r.status);
    }
    write_provenance(&dir, "table1", "table1", &(&cfg.hashed(), &a.gates, &a.max_order), seeds, &[path], started)
}

/// Escalates, keeping every record found before a failure.
fn escalate_partial(gate: &GateTarget, schedule: &EscalationSchedule, cfg: &SweepConfig) -> (Vec<QslRecord>, Option<String>) {
    let base = match sweep(gate, RobustnessOrder::ZERO, cfg) {
        Ok(r) => r,
        Err(e) => return (Vec::new(), Some(format!("0,0: {e}"))),
    };
    let mut found = vec![base.clone()];
    let mut err = None;
    for chain in &schedule.chains {
        let mut prev = base.clone();
        for &order in chain {
            let c = SweepConfig { t_start: prev.qsl, ..cfg.clone() };
            match sweep_from(gate, order, &c, Some(&prev.pulse)) {
                Ok(r) => {
                    found.push(r.clone());
                    prev = r;
                }
                Err(e) => {
                    err.get_or_insert(format!("{order}: {e}"));
                    break;
                }
            }
        }
    }
    (found, err)
}

fn cmd_export(a: &ExportArgs) -> Result<()> {
    let record: QslRecord = read_json(&a.record)?;
    match a.format.as_str() {
        "pulse" => save_pulse(
            &a.out,
            &record.pulse,
            &PulseHeader { order: Some(record.order), gate: Some(record.gate.clone()) },
        )?,
        "trace" => write_trace_csv(fs::File::create(&a.out)?, &record.sweep_trace)?,
        "json" => write_json(&a.out, &record)?,
        "physical" => {
            let tag = a
                .omega
                .as_deref()
                .ok_or_else(|| Error::InvalidConfig("--omega with an explicit unit is required for physical export".into()))?;
            let scale = PhysicalScale::for_bound(parse_angular_frequency(tag)?, record.pulse.omega)?;
            write_physical_csv(fs::File::create(&a.out)?, &rescale_pulse(&record.pulse, &scale)?)?;
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown export format '{other}' (pulse, trace, physical, json)"
            )))
        }
    }
    println!("exported {} ({}) T = {:.3} to {}", record.gate, record.order, record.qsl, a.out.display());
    Ok(())
}
