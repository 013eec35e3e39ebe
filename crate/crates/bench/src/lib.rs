//! Shared fixtures for the benchmarks: the reference dual-polarization ring
//! and typical pipeline configurations built on it.

use ringlink_core::fit::{simulate_trace, MeasuredTrace, Port};
use ringlink_core::link::{EqualizerConfig, OssbConfig, Sideband};
use ringlink_core::ring::{CouplingSpec, PerPol, SpectralRingParams};
use ringlink_core::{Coupling, ModulatorDrive, PolMode, RingModel};

pub const F_TE: f64 = 193.4e12;
pub const FSR: f64 = 49e9;
pub const INTERVAL: f64 = 16.6e9;

/// 49 GHz FSR, 140 MHz linewidth, TM comb 16.6 GHz above TE.
pub fn reference_ring() -> RingModel {
    RingModel::from_spectral(&SpectralRingParams {
        f0_hz: PerPol::new(F_TE, F_TE + INTERVAL),
        fsr_hz: PerPol::splat(FSR),
        coupling: CouplingSpec::Linewidth { fwhm_hz: 140e6, a: 0.9982 },
        tm_coupling: None,
        t_ref_c: 25.0,
        thermal_rate_hz_per_c: PerPol::splat(0.0),
    })
    .expect("reference ring is valid")
}

/// `n` frequencies across one FSR around the TE resonance.
pub fn fsr_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| F_TE - 0.5 * FSR + FSR * i as f64 / (n - 1) as f64)
        .collect()
}

/// Carrier on the TM resonance, lower sideband selected, polarizer at 30 deg.
pub fn ossb_config() -> OssbConfig {
    let ring = reference_ring();
    OssbConfig {
        polarizer: Some(ringlink_core::PolarizerAngle::from_degrees(30.0)),
        sideband: Some(Sideband::Lower),
        ..OssbConfig::new(ring, ring.anchor_resonance(PolMode::Tm), ModulatorDrive::new(INTERVAL, 0.2))
    }
}

/// Carrier 5.9 GHz above the TE resonance, 45 deg input, default RF grid.
pub fn equalizer_config() -> EqualizerConfig {
    EqualizerConfig::new(reference_ring(), F_TE + 5.9e9, std::f64::consts::FRAC_PI_4)
}

/// Noiseless through-port notch sampled at 401 points over +-10 linewidths.
pub fn through_trace() -> MeasuredTrace {
    let c = Coupling::new(0.9965, 0.9982).expect("valid coupling");
    let w = c.fwhm(FSR);
    let freqs: Vec<f64> = (0..401).map(|i| F_TE - 10.0 * w + 20.0 * w * i as f64 / 400.0).collect();
    simulate_trace(c, F_TE, FSR, Port::Through, PolMode::Te, &freqs).expect("valid trace")
}
