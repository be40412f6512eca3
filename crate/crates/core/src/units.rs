//! Conversion between dimensionless and physical quantities.
//!
//! Dividing the physical model by a scale `Ω₀` (rad/s) gives the dimensionless
//! model with time `t̄ = Ω₀t`, drive bound `Ω̄ = Ω/Ω₀` and detuning `ε̄₁ = ε₁/Ω₀`;
//! the relative amplitude error `ε₂` is unchanged. All physical inputs are
//! angular frequencies in rad/s. Hz values only enter through
//! [`parse_angular_frequency`], which requires an explicit `2pi*` tag.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagator::ControlPulse;

const OMEGA_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalScale {
    /// Scaling factor `Ω₀` in rad/s.
    pub omega0: f64,
    /// Physical drive bound `Ω` in rad/s.
    pub omega_phys: f64,
}

impl PhysicalScale {
    pub fn new(omega0: f64, omega_phys: f64) -> Result<Self> {
        for v in [omega0, omega_phys] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidOmega(v));
            }
        }
        Ok(Self { omega0, omega_phys })
    }

    /// Chooses `Ω₀` so that the bound `omega_phys` maps to `omega_bar`.
    pub fn for_bound(omega_phys: f64, omega_bar: f64) -> Result<Self> {
        if !(omega_bar.is_finite() && omega_bar > 0.0) {
            return Err(Error::InvalidOmega(omega_bar));
        }
        Self::new(omega_phys / omega_bar, omega_phys)
    }

    /// The default convention `Ω̄ = π`, where a square π-pulse has unit length.
    pub fn pi_normalized(omega_phys: f64) -> Result<Self> {
        Self::for_bound(omega_phys, PI)
    }

    pub fn omega_bar(&self) -> f64 {
        self.omega_phys / self.omega0
    }
}

/// Seconds corresponding to the dimensionless time `t_bar`.
pub fn rescale_time(t_bar: f64, scale: &PhysicalScale) -> f64 {
    t_bar / scale.omega0
}

/// Dimensionless time of `seconds`.
pub fn dimensionless_time(seconds: f64, scale: &PhysicalScale) -> f64 {
    seconds * scale.omega0
}

/// Physical detuning in rad/s for the dimensionless offset `eps1_bar`.
pub fn rescale_detuning(eps1_bar: f64, scale: &PhysicalScale) -> f64 {
    eps1_bar * scale.omega0
}

pub fn rad_per_s_to_hz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

pub fn hz_to_rad_per_s(f: f64) -> f64 {
    2.0 * PI * f
}

/// One physical segment, ready for waveform tooling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSegment {
    pub t_start_s: f64,
    pub duration_s: f64,
    pub ux_rad_s: f64,
    pub uy_rad_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalPulse {
    pub scale: PhysicalScale,
    pub segments: Vec<PhysicalSegment>,
}

impl PhysicalPulse {
    pub fn total_duration_s(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t_start_s + s.duration_s)
    }
}

/// Maps a dimensionless pulse to seconds and rad/s.
pub fn rescale_pulse(pulse: &ControlPulse, scale: &PhysicalScale) -> Result<PhysicalPulse> {
    let bar = scale.omega_bar();
    if (pulse.omega - bar).abs() > OMEGA_TOLERANCE * bar.max(1.0) {
        return Err(Error::OmegaMismatch { generator: bar, pulse: pulse.omega });
    }
    let duration_s = rescale_time(pulse.segment_duration, scale);
    let segments = pulse
        .phases
        .iter()
        .enumerate()
        .map(|(j, &phi)| {
            let (s, c) = phi.sin_cos();
            PhysicalSegment {
                t_start_s: j as f64 * duration_s,
                duration_s,
                ux_rad_s: scale.omega_phys * c,
                uy_rad_s: scale.omega_phys * s,
            }
        })
        .collect();
    Ok(PhysicalPulse { scale: *scale, segments })
}

/// Inverse of [`rescale_pulse`]. Segments must share one duration and sit on
/// the amplitude bound.
pub fn to_dimensionless(pulse: &PhysicalPulse) -> Result<ControlPulse> {
    let scale = &pulse.scale;
    let first = pulse
        .segments
        .first()
        .ok_or_else(|| Error::InvalidConfig("physical pulse has no segments".into()))?;
    for seg in &pulse.segments {
        if (seg.duration_s - first.duration_s).abs() > 1e-9 * first.duration_s {
            return Err(Error::InvalidConfig("segments must have equal durations".into()));
        }
        let amp = seg.ux_rad_s.hypot(seg.uy_rad_s);
        if (amp - scale.omega_phys).abs() > 1e-9 * scale.omega_phys {
            return Err(Error::InvalidConfig(format!(
                "segment amplitude {amp:.6e} rad/s is off the bound {:.6e} rad/s",
                scale.omega_phys
            )));
        }
    }
    let phases = pulse.segments.iter().map(|s| s.uy_rad_s.atan2(s.ux_rad_s)).collect();
    ControlPulse::new(phases, dimensionless_time(first.duration_s, scale), scale.omega_bar())
}

/// Parses an angular frequency with an explicit unit.
///
/// Accepted forms: `<x>rad/s`, `<x>krad/s`, `<x>Mrad/s`, `<x>Grad/s`, and
/// `2pi*<x><unit>` with `<unit>` one of `Hz`, `kHz`, `MHz`, `GHz`. A bare Hz
/// value such as `10MHz` is rejected because it does not say whether `2π` is
/// meant.
pub fn parse_angular_frequency(text: &str) -> Result<f64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = |why: &str| Error::InvalidConfig(format!("frequency '{text}': {why}"));

    let (two_pi, rest) = match s.strip_prefix("2pi*").or_else(|| s.strip_prefix("2*pi*")) {
        Some(r) => (true, r),
        None => (false, s.as_str()),
    };
    let split = rest
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .ok_or_else(|| bad("missing unit; use rad/s or 2pi*<value>Hz"))?;
    let (num, unit) = rest.split_at(split);
    let value: f64 = num.parse().map_err(|_| bad("unreadable number"))?;

    let value = if two_pi {
        let mult = match unit {
            "Hz" => 1.0,
            "kHz" => 1e3,
            "MHz" => 1e6,
            "GHz" => 1e9,
            _ => return Err(bad("after 2pi* the unit must be Hz, kHz, MHz or GHz")),
        };
        hz_to_rad_per_s(value * mult)
    } else {
        let mult = match unit {
            "rad/s" => 1.0,
            "krad/s" => 1e3,
            "Mrad/s" => 1e6,
            "Grad/s" => 1e9,
            "Hz" | "kHz" | "MHz" | "GHz" => {
                return Err(bad("ambiguous Hz value; write 2pi*<value>Hz for an angular frequency"))
            }
            _ => return Err(bad("unknown unit")),
        };
        value * mult
    };
    if !(value.is_finite() && value > 0.0) {
        return Err(bad("must be positive"));
    }
    Ok(value)
}
