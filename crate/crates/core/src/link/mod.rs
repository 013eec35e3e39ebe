//! End-to-end optical/RF link simulations built from the ring, Jones and
//! modulation primitives.

mod equalizer;
mod ossb;

pub use equalizer::{
    default_rf_grid, equalizer_beat, equalizer_er_curve, passband_center_tracking, passband_geometry,
    simulate_equalizer, EqualizerConfig, ErPoint, Passband, RfPoint, RfReference, RfResponse,
    TrackingPoint,
};
pub use ossb::{project_field, simulate_ossb, OssbConfig, OssbReport, Sideband};

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::modulation::{OpticalSpectrum, MERGE_TOLERANCE_HZ};
use crate::ring::{PerPol, PolMode};

/// Complex photocurrent component at `rf_freq_hz`, resolved per polarization:
/// `R * sum_k E*_pol(f_k) E_pol(f_k + f_rf)`. Orthogonal components never beat.
pub fn photodetect_by_polarization(
    spec: &OpticalSpectrum,
    rf_freq_hz: f64,
    responsivity: f64,
) -> Result<PerPol<Complex64>> {
    if !(rf_freq_hz > 0.0) {
        return Err(invalid("rf_freq_hz", format!("{rf_freq_hz} must be positive")));
    }
    let mut beat = PerPol::splat(Complex64::new(0.0, 0.0));
    for lower in spec.lines() {
        if let Some(upper) = spec.line_near(lower.freq_hz + rf_freq_hz, MERGE_TOLERANCE_HZ) {
            beat.te += lower.field.te.conj() * upper.field.te;
            beat.tm += lower.field.tm.conj() * upper.field.tm;
        }
    }
    Ok(beat.map(|_, b| b * responsivity))
}

/// Total complex beat amplitude at `rf_freq_hz` (sum over polarizations).
pub fn photodetect(spec: &OpticalSpectrum, rf_freq_hz: f64, responsivity: f64) -> Result<Complex64> {
    let b = photodetect_by_polarization(spec, rf_freq_hz, responsivity)?;
    Ok(b.te + b.tm)
}

/// Per-polarization optical power of a spectrum.
pub fn power_by_polarization(spec: &OpticalSpectrum) -> PerPol<f64> {
    let mut p = PerPol::splat(0.0);
    for l in spec.lines() {
        p.te += l.field.component(PolMode::Te).norm_sqr();
        p.tm += l.field.component(PolMode::Tm).norm_sqr();
    }
    p
}
