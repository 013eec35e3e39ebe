//! Physical constants and unit conversions.

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Vacuum wavelength (m) to optical frequency (Hz).
pub fn wavelength_to_frequency(lambda_m: f64) -> f64 {
    SPEED_OF_LIGHT / lambda_m
}

/// Optical frequency (Hz) to vacuum wavelength (m).
pub fn frequency_to_wavelength(freq_hz: f64) -> f64 {
    SPEED_OF_LIGHT / freq_hz
}

/// Power ratio to dB.
pub fn power_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Field (amplitude) ratio to dB.
pub fn amplitude_db(ratio: f64) -> f64 {
    20.0 * ratio.log10()
}

/// dB to linear power ratio.
pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn deg_to_rad(deg: f64) -> f64 {
    deg.to_radians()
}

pub fn rad_to_deg(rad: f64) -> f64 {
    rad.to_degrees()
}
