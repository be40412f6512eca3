//! On-disk formats for pulses, QSL records, traces, surfaces and provenance.
//!
//! Pulse CSV:
//!
//! ```text
//! # omega_bar=3.141592653589793
//! # dt=0.01
//! # order=1,0
//! # gate=X
//! segment_index,phi_rad
//! 0,1.5707963267948966
//! ```
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces the pulse bit for bit.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::RobustnessOrder;
use crate::error::{Error, Result};
use crate::propagator::ControlPulse;
use crate::sweep::QslRecord;
use crate::units::{PhysicalPulse, PhysicalScale, PhysicalSegment};
use crate::verifier::ErrorSurface;

/// Header block of a pulse file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PulseHeader {
    pub order: Option<RobustnessOrder>,
    pub gate: Option<String>,
}

pub fn write_pulse_csv<W: Write>(mut w: W, pulse: &ControlPulse, header: &PulseHeader) -> Result<()> {
    writeln!(w, "# omega_bar={}", pulse.omega)?;
    writeln!(w, "# dt={}", pulse.segment_duration)?;
    if let Some(order) = header.order {
        writeln!(w, "# order={order}")?;
    }
    if let Some(gate) = &header.gate {
        writeln!(w, "# gate={gate}")?;
    }
    writeln!(w, "segment_index,phi_rad")?;
    for (j, phi) in pulse.phases.iter().enumerate() {
        writeln!(w, "{j},{phi}")?;
    }
    Ok(())
}

pub fn read_pulse_csv<R: Read>(r: R, source: &Path) -> Result<(ControlPulse, PulseHeader)> {
    let err = |line: usize, msg: String| Error::Parse { path: source.to_path_buf(), message: format!("line {line}: {msg}") };
    let mut omega = None;
    let mut dt = None;
    let mut header = PulseHeader::default();
    let mut phases = Vec::new();
    let mut seen_columns = false;

    for (i, line) in BufReader::new(r).lines().enumerate() {
        let n = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let Some((key, value)) = meta.split_once('=') else { continue };
            let value = value.trim();
            match key.trim() {
                "omega_bar" => omega = Some(value.parse::<f64>().map_err(|e| err(n, format!("omega_bar: {e}")))?),
                "dt" => dt = Some(value.parse::<f64>().map_err(|e| err(n, format!("dt: {e}")))?),
                "order" => header.order = Some(value.parse().map_err(|e: Error| err(n, e.to_string()))?),
                "gate" => header.gate = Some(value.to_string()),
                _ => {}
            }
            continue;
        }
        if !seen_columns {
            if line.replace(' ', "") != "segment_index,phi_rad" {
                return Err(err(n, format!("expected header 'segment_index,phi_rad', found '{line}'")));
            }
            seen_columns = true;
            continue;
        }
        let (idx, phi) = line.split_once(',').ok_or_else(|| err(n, "expected two columns".into()))?;
        let idx: usize = idx.trim().parse().map_err(|e| err(n, format!("segment_index: {e}")))?;
        if idx != phases.len() {
            return Err(err(n, format!("segment_index {idx} out of sequence (expected {})", phases.len())));
        }
        let phi: f64 = phi.trim().parse().map_err(|e| err(n, format!("phi_rad: {e}")))?;
        if !phi.is_finite() {
            return Err(err(n, "phi_rad is not finite".into()));
        }
        phases.push(phi);
    }
    let omega = omega.ok_or_else(|| err(0, "missing '# omega_bar=' header".into()))?;
    let dt = dt.ok_or_else(|| err(0, "missing '# dt=' header".into()))?;
    let pulse = ControlPulse::new(phases, dt, omega).map_err(|e| err(0, e.to_string()))?;
    Ok((pulse, header))
}

pub fn save_pulse(path: &Path, pulse: &ControlPulse, header: &PulseHeader) -> Result<()> {
    let mut buf = Vec::new();
    write_pulse_csv(&mut buf, pulse, header)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_pulse(path: &Path) -> Result<(ControlPulse, PulseHeader)> {
    let file = fs::File::open(path).map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })?;
    read_pulse_csv(file, path)
}

pub fn write_trace_csv<W: Write>(w: W, trace: &[(f64, f64)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["T", "cost"])?;
    for (t, c) in trace {
        out.write_record([t.to_string(), c.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_surface_csv<W: Write>(w: W, surface: &ErrorSurface) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["eps1", "eps2", "error"])?;
    for (e1, e2, f) in surface.nodes() {
        out.write_record([e1.to_string(), e2.to_string(), f.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_physical_csv<W: Write>(mut w: W, pulse: &PhysicalPulse) -> Result<()> {
    writeln!(w, "# omega0_rad_s={}", pulse.scale.omega0)?;
    writeln!(w, "# omega_rad_s={}", pulse.scale.omega_phys)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t_start_s", "duration_s", "ux_rad_s", "uy_rad_s"])?;
    for s in &pulse.segments {
        out.write_record([
            s.t_start_s.to_string(),
            s.duration_s.to_string(),
            s.ux_rad_s.to_string(),
            s.uy_rad_s.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_physical_csv<R: Read>(r: R, source: &Path) -> Result<PhysicalPulse> {
    let err = |msg: String| Error::Parse { path: source.to_path_buf(), message: msg };
    let mut text = String::new();
    BufReader::new(r).read_to_string(&mut text)?;
    let mut omega0 = None;
    let mut omega = None;
    for line in text.lines().filter_map(|l| l.trim().strip_prefix('#')) {
        if let Some((k, v)) = line.split_once('=') {
            let v: Option<f64> = v.trim().parse().ok();
            match k.trim() {
                "omega0_rad_s" => omega0 = v,
                "omega_rad_s" => omega = v,
                _ => {}
            }
        }
    }
    let scale = PhysicalScale::new(
        omega0.ok_or_else(|| err("missing '# omega0_rad_s=' header".into()))?,
        omega.ok_or_else(|| err("missing '# omega_rad_s=' header".into()))?,
    )
    .map_err(|e| err(e.to_string()))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let segments = reader
        .deserialize::<PhysicalSegment>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| err(e.to_string()))?;
    Ok(PhysicalPulse { scale, segments })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })
}

/// Surface JSON with grid metadata alongside the values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceDocument {
    pub gate: String,
    pub eps1_min: f64,
    pub eps1_max: f64,
    pub eps2_min: f64,
    pub eps2_max: f64,
    pub shape: (usize, usize),
    pub surface: ErrorSurface,
}

impl SurfaceDocument {
    pub fn new(gate: impl Into<String>, surface: ErrorSurface) -> Self {
        let g = &surface.grid;
        let bounds = |v: &[f64]| (v[0], v[v.len() - 1]);
        let (eps1_min, eps1_max) = bounds(&g.eps1_values);
        let (eps2_min, eps2_max) = bounds(&g.eps2_values);
        Self { gate: gate.into(), eps1_min, eps1_max, eps2_min, eps2_max, shape: g.shape(), surface }
    }
}

/// What produced an output file. Deterministic given the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of the canonical JSON of the effective configuration.
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
}

impl Provenance {
    pub fn new<C: Serialize>(command: &str, config: &C, seeds: Vec<u64>, outputs: Vec<String>) -> Result<Self> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_sha256: config_hash(config)?,
            seeds,
            outputs,
        })
    }
}

pub fn config_hash<C: Serialize>(config: &C) -> Result<String> {
    // Round-trip through Value so map keys are sorted.
    let canonical = serde_json::to_vec(&serde_json::to_value(config)?)?;
    Ok(Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect())
}

/// Run-specific facts that are not reproducible, kept out of result files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata {
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub elapsed_s: f64,
    pub extra: BTreeMap<String, String>,
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// Standard set of files for a QSL record: `<stem>.json`, `<stem>_trace.csv`, `<stem>_pulse.csv`.
pub fn save_qsl_record(dir: &Path, stem: &str, record: &QslRecord) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let json = dir.join(format!("{stem}.json"));
    write_json(&json, record)?;
    let trace = dir.join(format!("{stem}_trace.csv"));
    write_trace_csv(fs::File::create(&trace)?, &record.sweep_trace)?;
    let pulse = dir.join(format!("{stem}_pulse.csv"));
    save_pulse(&pulse, &record.pulse, &PulseHeader { order: Some(record.order), gate: Some(record.gate.clone()) })?;
    Ok(vec![json, trace, pulse])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::CostReport;
    use crate::optimizer::random_phases;
    use crate::units::{hz_to_rad_per_s, rescale_pulse};
    use crate::verifier::UncertaintyGrid;
    use std::f64::consts::PI;

    fn sample_pulse() -> ControlPulse {
        ControlPulse::with_total_duration(random_phases(17, 4), 1.234, PI).unwrap()
    }

    #[test]
    fn pulse_csv_round_trip_is_exact() {
        let p = sample_pulse();
        let h = PulseHeader { order: Some(RobustnessOrder::new(2, 1)), gate: Some("H".into()) };
        let mut buf = Vec::new();
        write_pulse_csv(&mut buf, &p, &h).unwrap();
        let (q, h2) = read_pulse_csv(buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(p, q);
        assert_eq!(h, h2);
    }

    #[test]
    fn pulse_csv_errors_carry_line_numbers() {
        let text = "# omega_bar=3.14\n# dt=0.1\nsegment_index,phi_rad\n0,0.5\n1,abc\n";
        let e = read_pulse_csv(text.as_bytes(), Path::new("p.csv")).unwrap_err().to_string();
        assert!(e.contains("p.csv") && e.contains("line 5"), "{e}");
        let text = "# dt=0.1\nsegment_index,phi_rad\n0,0.5\n";
        assert!(read_pulse_csv(text.as_bytes(), Path::new("p.csv")).is_err());
        let text = "# omega_bar=3.14\n# dt=0.1\nsegment_index,phi_rad\n1,0.5\n";
        assert!(read_pulse_csv(text.as_bytes(), Path::new("p.csv")).is_err());
        let text = "# omega_bar=3.14\n# dt=0.1\nindex,phase\n0,0.5\n";
        assert!(read_pulse_csv(text.as_bytes(), Path::new("p.csv")).is_err());
    }

    #[test]
    fn trace_and_surface_csv_headers() {
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &[(0.3, 0.5), (0.305, 1e-11)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("T,cost"));
        assert_eq!(text.lines().count(), 3);

        let grid = UncertaintyGrid::uniform(0.5, 3);
        let s = ErrorSurface { errors: vec![vec![0.0; 3]; 3], grid };
        let mut buf = Vec::new();
        write_surface_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("eps1,eps2,error"));
        assert_eq!(text.lines().count(), 10);
    }

    #[test]
    fn physical_csv_round_trip() {
        let scale = crate::units::PhysicalScale::pi_normalized(hz_to_rad_per_s(10e6)).unwrap();
        let phys = rescale_pulse(&sample_pulse(), &scale).unwrap();
        let mut buf = Vec::new();
        write_physical_csv(&mut buf, &phys).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("t_start_s,duration_s,ux_rad_s,uy_rad_s"));
        let back = read_physical_csv(buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(back, phys);
    }

    #[test]
    fn cost_report_json_round_trip() {
        let mut block_norms = BTreeMap::new();
        block_norms.insert((1, 0), 0.25);
        block_norms.insert((0, 2), 1e-12);
        let r = CostReport { total: 0.5, gate_error: 0.25, block_norms };
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"1,0\""));
        let back: CostReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let a = crate::sweep::SweepConfig::default();
        let b = crate::sweep::SweepConfig { t_step: 0.01, ..Default::default() };
        assert_eq!(config_hash(&a).unwrap(), config_hash(&a.clone()).unwrap());
        assert_ne!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
        assert_eq!(config_hash(&a).unwrap().len(), 64);
    }
}
