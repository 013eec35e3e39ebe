//! Discrete optical spectra and electro-optic modulation of a CW carrier.
//!
//! Modulated tones follow the Jacobi-Anger expansion
//! `e^{i m cos wt} = sum_n i^n J_n(m) e^{i n wt}`; a line at `f_c + n f_rf`
//! carries the carrier field times the order-`n` coefficient.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::bessel::bessel_j_orders;
use crate::error::{invalid, Error, Result};
use crate::jones::JonesVector;

/// Lines closer than this are merged into one tone.
pub const MERGE_TOLERANCE_HZ: f64 = 1e3;

/// Sideband orders are kept until `|J_n(m)|` falls below this.
pub const TRUNCATION_THRESHOLD: f64 = 1e-6;

pub const DEFAULT_MOD_INDEX: f64 = 0.2;

/// One optical tone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralLine {
    pub freq_hz: f64,
    pub field: JonesVector,
}

impl SpectralLine {
    pub fn power(&self) -> f64 {
        self.field.power()
    }
}

/// Tones sorted by frequency, unique within [`MERGE_TOLERANCE_HZ`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OpticalSpectrum {
    lines: Vec<SpectralLine>,
}

impl OpticalSpectrum {
    /// Sorts the lines and sums the fields of tones closer than the merge
    /// tolerance (the merged tone keeps the first frequency).
    pub fn from_lines(mut lines: Vec<SpectralLine>) -> Result<Self> {
        if let Some(bad) = lines.iter().find(|l| !(l.freq_hz > 0.0) || !l.freq_hz.is_finite()) {
            return Err(invalid("freq_hz", format!("line frequency {} must be positive", bad.freq_hz)));
        }
        lines.sort_by(|a, b| a.freq_hz.total_cmp(&b.freq_hz));
        let mut merged: Vec<SpectralLine> = Vec::with_capacity(lines.len());
        for line in lines {
            match merged.last_mut() {
                Some(last) if line.freq_hz - last.freq_hz <= MERGE_TOLERANCE_HZ => {
                    last.field = last.field + line.field;
                }
                _ => merged.push(line),
            }
        }
        Ok(Self { lines: merged })
    }

    pub fn lines(&self) -> &[SpectralLine] {
        &self.lines
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn total_power(&self) -> f64 {
        self.lines.iter().map(SpectralLine::power).sum()
    }

    /// Line within `tol_hz` of `freq_hz`, if any.
    pub fn line_near(&self, freq_hz: f64, tol_hz: f64) -> Option<&SpectralLine> {
        let idx = self.lines.partition_point(|l| l.freq_hz < freq_hz - tol_hz);
        self.lines
            .get(idx)
            .filter(|l| (l.freq_hz - freq_hz).abs() <= tol_hz)
    }

    /// Apply a frequency-dependent operator to every line's field.
    pub fn map_fields(&self, mut op: impl FnMut(f64, JonesVector) -> JonesVector) -> OpticalSpectrum {
        OpticalSpectrum {
            lines: self
                .lines
                .iter()
                .map(|l| SpectralLine {
                    freq_hz: l.freq_hz,
                    field: op(l.freq_hz, l.field),
                })
                .collect(),
        }
    }

    /// Scale all powers by `alpha` (fields by `sqrt(alpha)`).
    pub fn scale_power(&self, alpha: f64) -> OpticalSpectrum {
        let s = Complex64::new(alpha.sqrt(), 0.0);
        self.map_fields(|_, v| v.scale(s))
    }
}

/// RF drive of a modulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulatorDrive {
    pub rf_freq_hz: f64,
    /// Peak phase deviation `m` (rad).
    pub mod_index: f64,
    /// Intensity-modulator bias phase (rad); quadrature is `pi/2`.
    pub bias: f64,
    /// Highest sideband order kept; `None` picks [`sideband_truncation_order`].
    pub max_order: Option<usize>,
}

impl ModulatorDrive {
    pub fn new(rf_freq_hz: f64, mod_index: f64) -> Self {
        Self {
            rf_freq_hz,
            mod_index,
            bias: FRAC_PI_2,
            max_order: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rf_freq_hz > 0.0) {
            return Err(invalid("rf_freq_hz", format!("{} must be positive", self.rf_freq_hz)));
        }
        if !(self.mod_index >= 0.0) || !self.mod_index.is_finite() {
            return Err(invalid("mod_index", format!("{} must be >= 0", self.mod_index)));
        }
        if self.max_order == Some(0) {
            return Err(invalid("max_order", "must be >= 1"));
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.max_order
            .unwrap_or_else(|| sideband_truncation_order(self.mod_index))
    }
}

/// Smallest order `n >= 1` beyond the argument with `|J_n(m)| < 1e-6`.
pub fn sideband_truncation_order(m: f64) -> usize {
    let mut nmax = 16usize.max(2 * m.ceil() as usize + 16);
    loop {
        let js = bessel_j_orders(nmax, m);
        if let Some(n) = (1..=nmax).find(|&n| n as f64 > m && js[n].abs() < TRUNCATION_THRESHOLD) {
            return n;
        }
        nmax *= 2;
    }
}

/// Single linearly polarized CW line.
pub fn cw_carrier(freq_hz: f64, power_w: f64, pol_angle_from_te: f64) -> Result<OpticalSpectrum> {
    if !(power_w >= 0.0) {
        return Err(invalid("power_w", format!("{power_w} must be >= 0")));
    }
    OpticalSpectrum::from_lines(vec![SpectralLine {
        freq_hz,
        field: JonesVector::linear(power_w, pol_angle_from_te),
    }])
}

fn single_carrier(spec: &OpticalSpectrum) -> Result<SpectralLine> {
    match spec.lines() {
        [line] => Ok(*line),
        lines => Err(Error::MultiLineInput { lines: lines.len() }),
    }
}

fn expand(
    spec: &OpticalSpectrum,
    drive: &ModulatorDrive,
    coefficient: impl Fn(i32, f64) -> Complex64,
) -> Result<OpticalSpectrum> {
    drive.validate()?;
    let carrier = single_carrier(spec)?;
    let order = drive.order();
    let js = bessel_j_orders(order, drive.mod_index);
    let mut lines = Vec::with_capacity(2 * order + 1);
    for n in -(order as i32)..=(order as i32) {
        let k = n.unsigned_abs() as usize;
        let jn = if n < 0 && k % 2 == 1 { -js[k] } else { js[k] };
        let c = coefficient(n, jn);
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        lines.push(SpectralLine {
            freq_hz: carrier.freq_hz + n as f64 * drive.rf_freq_hz,
            field: carrier.field.scale(c),
        });
    }
    OpticalSpectrum::from_lines(lines)
}

/// `i^n` without rounding.
fn i_pow(n: i32) -> Complex64 {
    match n.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Pure phase modulation: order `n` gets `i^n J_n(m)`.
pub fn phase_modulate(spec: &OpticalSpectrum, drive: &ModulatorDrive) -> Result<OpticalSpectrum> {
    expand(spec, drive, |n, jn| i_pow(n) * jn)
}

/// Push-pull Mach-Zehnder: field `cos(bias/2 + m cos wt)`, so order `n`
/// gets `J_n(m) cos(bias/2 + n pi/2)`.
pub fn intensity_modulate(spec: &OpticalSpectrum, drive: &ModulatorDrive) -> Result<OpticalSpectrum> {
    let (s, c) = (0.5 * drive.bias).sin_cos();
    expand(spec, drive, |n, jn| {
        let phase_factor = match n.rem_euclid(4) {
            0 => c,
            1 => -s,
            2 => -c,
            _ => s,
        };
        Complex64::new(jn * phase_factor, 0.0)
    })
}
