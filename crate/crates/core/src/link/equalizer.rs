//! Dual-channel RF equalizer: a phase-modulated carrier launched at angle
//! theta from the TE axis passes the ring's through port; each polarization's
//! notch unbalances one sideband pair and maps a resonance onto an RF
//! passband at `|f_res - f_carrier|`.

use num_complex::Complex64;
use rayon::prelude::*;

use super::photodetect_by_polarization;
use crate::error::{invalid, Error, Result};
use crate::jones::ring_through_operator;
use crate::modulation::{cw_carrier, phase_modulate, ModulatorDrive, DEFAULT_MOD_INDEX};
use crate::ring::{PerPol, PolMode, RingModel};
use crate::roots::golden_max;
use crate::units::amplitude_db;

/// Number of points in the default RF grid.
pub const DEFAULT_GRID_POINTS: usize = 201;

/// Normalization of `s21_db`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RfReference {
    /// Largest beat amplitude on the grid maps to 0 dB.
    GridMax,
    /// Fixed beat amplitude (A) that maps to 0 dB.
    Absolute(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerConfig {
    pub ring: RingModel,
    pub carrier_freq_hz: f64,
    pub carrier_power_w: f64,
    /// Input polarization, radians from the TE axis.
    pub input_angle: f64,
    pub mod_index: f64,
    pub rf_grid_hz: Vec<f64>,
    /// Photodiode responsivity (A/W).
    pub responsivity: f64,
    pub reference: RfReference,
}

impl EqualizerConfig {
    /// Config with the default grid spanning both passbands.
    pub fn new(ring: RingModel, carrier_freq_hz: f64, input_angle: f64) -> Self {
        let grid = default_rf_grid(&ring, carrier_freq_hz);
        Self {
            ring,
            carrier_freq_hz,
            carrier_power_w: 1e-3,
            input_angle,
            mod_index: DEFAULT_MOD_INDEX,
            rf_grid_hz: grid,
            responsivity: 1.0,
            reference: RfReference::GridMax,
        }
    }

    fn validate_grid(&self) -> Result<()> {
        if self.rf_grid_hz.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if !(self.rf_grid_hz[0] > 0.0) {
            return Err(Error::InvalidGrid { index: 0 });
        }
        if let Some(i) = self.rf_grid_hz.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid { index: i + 1 });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfPoint {
    pub rf_freq_hz: f64,
    pub s21_db: f64,
}

/// Sampled RF transmission.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RfResponse {
    pub points: Vec<RfPoint>,
}

impl RfResponse {
    pub fn peak(&self) -> Option<RfPoint> {
        self.points
            .iter()
            .copied()
            .max_by(|a, b| a.s21_db.total_cmp(&b.s21_db))
    }

    /// Width between the -3 dB crossings around the highest point, linearly
    /// interpolated in dB. `None` if either crossing lies off the grid.
    pub fn bandwidth_3db(&self) -> Option<f64> {
        let pts = &self.points;
        let (ipk, pk) = pts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.s21_db.total_cmp(&b.1.s21_db))?;
        let level = pk.s21_db - 10.0 * 2f64.log10();
        let cross = |i: usize, j: usize| {
            let (a, b) = (pts[i], pts[j]);
            a.rf_freq_hz + (level - a.s21_db) / (b.s21_db - a.s21_db) * (b.rf_freq_hz - a.rf_freq_hz)
        };
        let right = (ipk + 1..pts.len())
            .find(|&j| pts[j].s21_db < level)
            .map(|j| cross(j - 1, j))?;
        let left = (0..ipk)
            .rev()
            .find(|&j| pts[j].s21_db < level)
            .map(|j| cross(j + 1, j))?;
        Some(right - left)
    }
}

/// One resonance mapped onto the RF axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Passband {
    pub resonance_hz: f64,
    /// `|f_res - f_carrier|`
    pub center_hz: f64,
    pub fwhm_hz: f64,
}

/// Nearest resonance of each polarization that does not sit on the carrier
/// (at least two linewidths away).
pub fn passband_geometry(ring: &RingModel, carrier_freq_hz: f64) -> PerPol<Passband> {
    PerPol::splat(()).map(|pol, _| {
        let fsr = ring.fsr(pol);
        let fwhm = ring.coupling(pol).fwhm(fsr);
        let res = ring
            .find_resonances(pol, carrier_freq_hz - 1.5 * fsr, carrier_freq_hz + 1.5 * fsr)
            .into_iter()
            .filter(|f| (f - carrier_freq_hz).abs() >= 2.0 * fwhm)
            .min_by(|x, y| (x - carrier_freq_hz).abs().total_cmp(&(y - carrier_freq_hz).abs()))
            .expect("three FSRs hold at least two resonances");
        Passband {
            resonance_hz: res,
            center_hz: (res - carrier_freq_hz).abs(),
            fwhm_hz: fwhm,
        }
    })
}

/// 201 points spanning both passbands with five linewidths of margin.
pub fn default_rf_grid(ring: &RingModel, carrier_freq_hz: f64) -> Vec<f64> {
    let bands = passband_geometry(ring, carrier_freq_hz);
    let margin = 5.0 * bands.te.fwhm_hz.max(bands.tm.fwhm_hz);
    let lo = (bands.te.center_hz.min(bands.tm.center_hz) - margin).max(margin * 0.1);
    let hi = bands.te.center_hz.max(bands.tm.center_hz) + margin;
    let n = DEFAULT_GRID_POINTS;
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Per-polarization complex beat at one RF frequency.
pub fn equalizer_beat(cfg: &EqualizerConfig, rf_freq_hz: f64) -> Result<PerPol<Complex64>> {
    let carrier = cw_carrier(cfg.carrier_freq_hz, cfg.carrier_power_w, cfg.input_angle)?;
    let pm = phase_modulate(&carrier, &ModulatorDrive::new(rf_freq_hz, cfg.mod_index))?;
    let ring = &cfg.ring;
    let out = pm.map_fields(|f, v| ring_through_operator(ring, f) * v);
    photodetect_by_polarization(&out, rf_freq_hz, cfg.responsivity)
}

pub fn simulate_equalizer(cfg: &EqualizerConfig) -> Result<RfResponse> {
    cfg.validate_grid()?;
    let beats = cfg
        .rf_grid_hz
        .par_iter()
        .map(|&f| equalizer_beat(cfg, f).map(|b| (b.te + b.tm).norm()))
        .collect::<Result<Vec<f64>>>()?;
    let reference = match cfg.reference {
        RfReference::GridMax => beats.iter().copied().fold(0.0, f64::max),
        RfReference::Absolute(r) => r,
    };
    if !(reference > 0.0) {
        return Err(Error::UndefinedRatio("s21 reference"));
    }
    Ok(RfResponse {
        points: cfg
            .rf_grid_hz
            .iter()
            .zip(beats)
            .map(|(&rf_freq_hz, b)| RfPoint {
                rf_freq_hz,
                s21_db: amplitude_db(b / reference),
            })
            .collect(),
    })
}

/// Locate the maximum of `|beat|` near `center` (within three linewidths).
fn passband_peak(
    cfg: &EqualizerConfig,
    band: &Passband,
    select: impl Fn(&PerPol<Complex64>) -> Complex64 + Sync,
) -> Result<(f64, f64)> {
    let lo = (band.center_hz - 3.0 * band.fwhm_hz).max(0.5 * band.center_hz);
    let hi = band.center_hz + 3.0 * band.fwhm_hz;
    // evaluate once to surface errors before the search
    equalizer_beat(cfg, band.center_hz)?;
    let amp = |f: f64| equalizer_beat(cfg, f).map(|b| select(&b).norm()).unwrap_or(0.0);
    Ok(golden_max(amp, lo, hi, 1e-6 * band.fwhm_hz))
}

/// Extinction ratio between the TE and TM passbands for one input angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErPoint {
    /// Input angle from the TE axis (rad).
    pub theta: f64,
    /// Ratio of the TE-channel to TM-channel passband peaks, expressed as an
    /// optical-power ratio in dB. Each channel's beat amplitude is
    /// proportional to the optical power launched in that polarization.
    pub er_db: f64,
    /// Same ratio read off the combined (summed) RF trace at the two passband
    /// peaks; includes the skirt of the other channel.
    pub er_combined_db: f64,
}

pub fn equalizer_er_curve(cfg: &EqualizerConfig, thetas: &[f64]) -> Result<Vec<ErPoint>> {
    let bands = passband_geometry(&cfg.ring, cfg.carrier_freq_hz);
    if (bands.te.center_hz - bands.tm.center_hz).abs() < bands.te.fwhm_hz.max(bands.tm.fwhm_hz) {
        return Err(Error::UnresolvablePassbands {
            te_hz: bands.te.center_hz,
            tm_hz: bands.tm.center_hz,
        });
    }
    thetas
        .par_iter()
        .map(|&theta| {
            let c = EqualizerConfig {
                input_angle: theta,
                rf_grid_hz: Vec::new(),
                ..cfg.clone()
            };
            let (_, te) = passband_peak(&c, &bands.te, |b| b.te)?;
            let (_, tm) = passband_peak(&c, &bands.tm, |b| b.tm)?;
            if te == 0.0 || tm == 0.0 {
                return Err(Error::UndefinedRatio("er"));
            }
            let (_, te_total) = passband_peak(&c, &bands.te, |b| b.te + b.tm)?;
            let (_, tm_total) = passband_peak(&c, &bands.tm, |b| b.te + b.tm)?;
            Ok(ErPoint {
                theta,
                er_db: 10.0 * (te / tm).log10(),
                er_combined_db: 10.0 * (te_total / tm_total).log10(),
            })
        })
        .collect()
}

/// Passband centres for one carrier offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingPoint {
    pub offset_hz: f64,
    /// Located peak of the TE-channel passband; `None` when no TE power is launched.
    pub f_center_te_hz: Option<f64>,
    pub f_center_tm_hz: Option<f64>,
    /// `|f_res - f_carrier|` for each polarization.
    pub geometric: PerPol<f64>,
}

/// Move the carrier by each offset and locate both passband peaks.
pub fn passband_center_tracking(cfg: &EqualizerConfig, offsets_hz: &[f64]) -> Result<Vec<TrackingPoint>> {
    if !(cfg.carrier_freq_hz > 0.0) {
        return Err(invalid("carrier_freq_hz", "must be positive"));
    }
    offsets_hz
        .par_iter()
        .map(|&offset| {
            let c = EqualizerConfig {
                carrier_freq_hz: cfg.carrier_freq_hz + offset,
                rf_grid_hz: Vec::new(),
                ..cfg.clone()
            };
            let bands = passband_geometry(&c.ring, c.carrier_freq_hz);
            let (s, co) = c.input_angle.sin_cos();
            let locate = |pol: PolMode, launched: f64| -> Result<Option<f64>> {
                if launched * launched * c.carrier_power_w == 0.0 || launched.abs() < 1e-12 {
                    return Ok(None);
                }
                let band = bands.get(pol);
                let (f, _) = match pol {
                    PolMode::Te => passband_peak(&c, band, |b| b.te)?,
                    PolMode::Tm => passband_peak(&c, band, |b| b.tm)?,
                };
                Ok(Some(f))
            };
            Ok(TrackingPoint {
                offset_hz: offset,
                f_center_te_hz: locate(PolMode::Te, co)?,
                f_center_tm_hz: locate(PolMode::Tm, s)?,
                geometric: bands.map(|_, b| b.center_hz),
            })
        })
        .collect()
}
