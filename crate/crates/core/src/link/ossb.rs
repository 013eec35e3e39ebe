use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::jones::{polarizer_matrix, ring_drop_operator, PolarizerAngle};
use crate::modulation::{cw_carrier, intensity_modulate, ModulatorDrive, OpticalSpectrum, MERGE_TOLERANCE_HZ};
use crate::ring::{PolMode, RingModel};
use crate::units::power_db;

/// First-order sideband selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sideband {
    Upper,
    Lower,
}

impl Sideband {
    fn sign(self) -> f64 {
        match self {
            Sideband::Upper => 1.0,
            Sideband::Lower => -1.0,
        }
    }

    fn opposite(self) -> Sideband {
        match self {
            Sideband::Upper => Sideband::Lower,
            Sideband::Lower => Sideband::Upper,
        }
    }
}

/// Intensity-modulated carrier dropped by the ring, optionally projected by a polarizer.
#[derive(Debug, Clone, PartialEq)]
pub struct OssbConfig {
    pub ring: RingModel,
    pub carrier_freq_hz: f64,
    pub carrier_power_w: f64,
    /// Launch polarization, radians from the TE axis.
    pub launch_angle: f64,
    pub drive: ModulatorDrive,
    /// `None` keeps the orthogonally polarized output.
    pub polarizer: Option<PolarizerAngle>,
    /// Sideband whose power enters the carrier-to-sideband ratio; `None`
    /// picks the one the ring drops more strongly.
    pub sideband: Option<Sideband>,
}

impl OssbConfig {
    pub fn new(ring: RingModel, carrier_freq_hz: f64, drive: ModulatorDrive) -> Self {
        Self {
            ring,
            carrier_freq_hz,
            carrier_power_w: 1e-3,
            launch_angle: FRAC_PI_4,
            drive,
            polarizer: None,
            sideband: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OssbReport {
    pub drop_spectrum: OpticalSpectrum,
    pub projected_spectrum: Option<OpticalSpectrum>,
    pub selected_sideband: Sideband,
    pub carrier_power_w: f64,
    pub sideband_power_w: f64,
    pub rejected_power_w: f64,
    /// Carrier over selected sideband power (dB).
    pub ocsr_db: f64,
    /// Selected over rejected sideband power (dB).
    pub unused_sideband_suppression_db: f64,
    pub warnings: Vec<String>,
}

/// Scalar field of every line along the polarizer's transmission axis.
pub fn project_field(spec: &OpticalSpectrum, theta: PolarizerAngle) -> Vec<(f64, Complex64)> {
    let (s, c) = theta.axis();
    spec.lines()
        .iter()
        .map(|l| (l.freq_hz, l.field.te * s + l.field.tm * c))
        .collect()
}

fn line_power(spec: &OpticalSpectrum, freq_hz: f64) -> f64 {
    spec.line_near(freq_hz, MERGE_TOLERANCE_HZ)
        .map_or(0.0, |l| l.power())
}

fn alignment_warning(ring: &RingModel, f: f64) -> Option<String> {
    let aligned = PolMode::ALL.iter().any(|&pol| {
        let fwhm = ring.coupling(pol).fwhm(ring.fsr(pol));
        (ring.nearest_resonance(pol, f) - f).abs() <= fwhm
    });
    (!aligned).then(|| format!("carrier at {f} Hz is not within one linewidth of any resonance"))
}

pub fn simulate_ossb(cfg: &OssbConfig) -> Result<OssbReport> {
    if !(cfg.carrier_freq_hz > 0.0) {
        return Err(invalid("carrier_freq_hz", format!("{} must be positive", cfg.carrier_freq_hz)));
    }
    let carrier = cw_carrier(cfg.carrier_freq_hz, cfg.carrier_power_w, cfg.launch_angle)?;
    let modulated = intensity_modulate(&carrier, &cfg.drive)?;
    let ring = &cfg.ring;
    let dropped = modulated.map_fields(|f, v| ring_drop_operator(ring, f) * v);
    let projected = cfg.polarizer.map(|theta| {
        let p = polarizer_matrix(theta);
        dropped.map_fields(|_, v| p * v)
    });

    let fc = cfg.carrier_freq_hz;
    let frf = cfg.drive.rf_freq_hz;
    let selected = cfg.sideband.unwrap_or_else(|| {
        if line_power(&dropped, fc + frf) >= line_power(&dropped, fc - frf) {
            Sideband::Upper
        } else {
            Sideband::Lower
        }
    });

    let output = projected.as_ref().unwrap_or(&dropped);
    let carrier_power = line_power(output, fc);
    let sideband_power = line_power(output, fc + selected.sign() * frf);
    let rejected_power = line_power(output, fc + selected.opposite().sign() * frf);
    if sideband_power == 0.0 {
        return Err(Error::UndefinedRatio("ocsr"));
    }
    let suppression = if rejected_power == 0.0 {
        f64::INFINITY
    } else {
        power_db(sideband_power / rejected_power)
    };

    Ok(OssbReport {
        warnings: alignment_warning(ring, fc).into_iter().collect(),
        drop_spectrum: dropped,
        projected_spectrum: projected,
        selected_sideband: selected,
        carrier_power_w: carrier_power,
        sideband_power_w: sideband_power,
        rejected_power_w: rejected_power,
        ocsr_db: power_db(carrier_power / sideband_power),
        unused_sideband_suppression_db: suppression,
    })
}
