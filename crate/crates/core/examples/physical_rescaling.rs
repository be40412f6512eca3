// Maps a dimensionless pulse and tolerance to a physical drive bound and
// writes the waveform table.

use robust_qsl::formats::{read_physical_csv, write_physical_csv};
use robust_qsl::units::{parse_angular_frequency, rad_per_s_to_hz, rescale_detuning, rescale_pulse, to_dimensionless};
use robust_qsl::{ControlPulse, PhysicalScale};

pub fn run_example() -> robust_qsl::Result<()> {
    let omega = parse_angular_frequency("2pi*10MHz")?;
    let scale = PhysicalScale::pi_normalized(omega)?;
    println!("Omega = {omega:.4e} rad/s, Omega_0 = {:.4e} rad/s", scale.omega0);

    let pulse = ControlPulse::constant(0.0, 10, 1.0, scale.omega_bar())?;
    let phys = rescale_pulse(&pulse, &scale)?;
    println!("square pi-pulse lasts {:.1} ns", phys.total_duration_s() * 1e9);

    let drift = rescale_detuning(0.26, &scale);
    println!("eps1 = 0.26 is {drift:.3e} rad/s = {:.3} MHz", rad_per_s_to_hz(drift) / 1e6);

    let path = std::env::temp_dir().join(format!("rqsl_physical_{}.csv", std::process::id()));
    write_physical_csv(std::fs::File::create(&path)?, &phys)?;
    let back = to_dimensionless(&read_physical_csv(std::fs::File::open(&path)?, &path)?)?;
    std::fs::remove_file(&path)?;
    assert_eq!(back.segments(), pulse.segments());
    println!("round trip through {} ok", path.display());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("physical rescaling example");
}
