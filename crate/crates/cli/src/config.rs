//! Experiment configuration: JSON in, core model types out.
//!
//! Every physical quantity carries its unit in the field name.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use ringlink_core::fit::ScaleMode;
use ringlink_core::link::RfReference;
use ringlink_core::modulation::DEFAULT_MOD_INDEX;
use ringlink_core::ring::DEFAULT_ROUND_TRIP_AMPLITUDE;
use ringlink_core::units::wavelength_to_frequency;
use ringlink_core::{
    CouplingSpec, PerPol, PhysicalRingParams, PolMode, RingModel, SpectralRingParams,
};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Free text carried into the envelope.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub ring: RingConfig,
    /// Operating temperature; defaults to the ring's reference temperature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ossb: Option<OssbSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equalizer: Option<EqualizerSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RingConfig {
    Spectral(SpectralRingConfig),
    Physical(PhysicalRingConfig),
}

fn default_a() -> f64 {
    DEFAULT_ROUND_TRIP_AMPLITUDE
}

fn default_t_ref() -> f64 {
    25.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralRingConfig {
    #[serde(default)]
    pub f0_te_hz: Option<f64>,
    #[serde(default)]
    pub lambda0_te_m: Option<f64>,
    #[serde(default)]
    pub f0_tm_hz: Option<f64>,
    /// `f0_tm - f0_te`
    #[serde(default)]
    pub te_tm_interval_hz: Option<f64>,
    #[serde(default)]
    pub fsr_hz: Option<f64>,
    #[serde(default)]
    pub fsr_te_hz: Option<f64>,
    #[serde(default)]
    pub fsr_tm_hz: Option<f64>,
    #[serde(default)]
    pub fwhm_hz: Option<f64>,
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default)]
    pub tm_fwhm_hz: Option<f64>,
    #[serde(default)]
    pub tm_t: Option<f64>,
    #[serde(default)]
    pub tm_a: Option<f64>,
    #[serde(default = "default_t_ref")]
    pub t_ref_c: f64,
    #[serde(default)]
    pub thermal_rate_te_hz_per_c: f64,
    #[serde(default)]
    pub thermal_rate_tm_hz_per_c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalRingConfig {
    pub radius_m: f64,
    pub n_eff_te: f64,
    pub n_eff_tm: f64,
    #[serde(default)]
    pub dn_dlambda_te_per_m: f64,
    #[serde(default)]
    pub dn_dlambda_tm_per_m: f64,
    pub lambda_ref_m: f64,
    pub t: f64,
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default)]
    pub tm_t: Option<f64>,
    #[serde(default)]
    pub tm_a: Option<f64>,
    #[serde(default = "default_t_ref")]
    pub t_ref_c: f64,
    #[serde(default)]
    pub thermal_rate_te_hz_per_c: f64,
    #[serde(default)]
    pub thermal_rate_tm_hz_per_c: f64,
}

fn exclusive(
    a: Option<f64>,
    a_key: &'static str,
    b: Option<f64>,
    b_key: &'static str,
) -> Result<Option<(bool, f64)>, CliError> {
    match (a, b) {
        (Some(_), Some(_)) => Err(CliError::config(
            format!("ring.spectral.{a_key}"),
            format!("give either `{a_key}` or `{b_key}`, not both"),
        )),
        (Some(v), None) => Ok(Some((true, v))),
        (None, Some(v)) => Ok(Some((false, v))),
        (None, None) => Ok(None),
    }
}

impl SpectralRingConfig {
    fn to_params(&self) -> Result<SpectralRingParams, CliError> {
        let f0_te = match exclusive(self.f0_te_hz, "f0_te_hz", self.lambda0_te_m, "lambda0_te_m")? {
            Some((true, f)) => f,
            Some((false, lambda)) => wavelength_to_frequency(lambda),
            None => {
                return Err(CliError::config(
                    "ring.spectral.f0_te_hz",
                    "one of `f0_te_hz` or `lambda0_te_m` is required",
                ))
            }
        };
        let f0_tm = match exclusive(self.f0_tm_hz, "f0_tm_hz", self.te_tm_interval_hz, "te_tm_interval_hz")? {
            Some((true, f)) => f,
            Some((false, d)) => f0_te + d,
            None => {
                return Err(CliError::config(
                    "ring.spectral.te_tm_interval_hz",
                    "one of `te_tm_interval_hz` or `f0_tm_hz` is required",
                ))
            }
        };
        let fsr = match (self.fsr_hz, self.fsr_te_hz, self.fsr_tm_hz) {
            (Some(f), None, None) => PerPol::splat(f),
            (None, Some(te), Some(tm)) => PerPol::new(te, tm),
            _ => {
                return Err(CliError::config(
                    "ring.spectral.fsr_hz",
                    "give `fsr_hz`, or both `fsr_te_hz` and `fsr_tm_hz`",
                ))
            }
        };
        let coupling = match (self.fwhm_hz, self.t) {
            (Some(fwhm_hz), None) => CouplingSpec::Linewidth { fwhm_hz, a: self.a },
            (None, Some(t)) => CouplingSpec::Explicit { t, a: self.a },
            _ => {
                return Err(CliError::config(
                    "ring.spectral.fwhm_hz",
                    "give exactly one of `fwhm_hz` or `t`",
                ))
            }
        };
        let tm_a = self.tm_a.unwrap_or(self.a);
        let tm_coupling = match (self.tm_fwhm_hz, self.tm_t) {
            (Some(_), Some(_)) => {
                return Err(CliError::config(
                    "ring.spectral.tm_fwhm_hz",
                    "give at most one of `tm_fwhm_hz` or `tm_t`",
                ))
            }
            (Some(fwhm_hz), None) => Some(CouplingSpec::Linewidth { fwhm_hz, a: tm_a }),
            (None, Some(t)) => Some(CouplingSpec::Explicit { t, a: tm_a }),
            (None, None) => self.tm_a.map(|a| match coupling {
                CouplingSpec::Linewidth { fwhm_hz, .. } => CouplingSpec::Linewidth { fwhm_hz, a },
                CouplingSpec::Explicit { t, .. } => CouplingSpec::Explicit { t, a },
            }),
        };
        Ok(SpectralRingParams {
            f0_hz: PerPol::new(f0_te, f0_tm),
            fsr_hz: fsr,
            coupling,
            tm_coupling,
            t_ref_c: self.t_ref_c,
            thermal_rate_hz_per_c: PerPol::new(self.thermal_rate_te_hz_per_c, self.thermal_rate_tm_hz_per_c),
        })
    }
}

impl PhysicalRingConfig {
    fn to_params(&self) -> PhysicalRingParams {
        let tm_coupling = match (self.tm_t, self.tm_a) {
            (None, None) => None,
            (t, a) => Some((t.unwrap_or(self.t), a.unwrap_or(self.a))),
        };
        PhysicalRingParams {
            radius_m: self.radius_m,
            n_eff: PerPol::new(self.n_eff_te, self.n_eff_tm),
            dn_dlambda_per_m: PerPol::new(self.dn_dlambda_te_per_m, self.dn_dlambda_tm_per_m),
            lambda_ref_m: self.lambda_ref_m,
            t: self.t,
            a: self.a,
            tm_coupling,
            t_ref_c: self.t_ref_c,
            thermal_rate_hz_per_c: PerPol::new(self.thermal_rate_te_hz_per_c, self.thermal_rate_tm_hz_per_c),
        }
    }
}

impl RingConfig {
    /// Build the ring at its reference temperature.
    pub fn build(&self) -> Result<RingModel, CliError> {
        Ok(match self {
            RingConfig::Spectral(s) => RingModel::from_spectral(&s.to_params()?)?,
            RingConfig::Physical(p) => RingModel::from_physical(&p.to_params())?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolName {
    Te,
    Tm,
}

impl From<PolName> for PolMode {
    fn from(p: PolName) -> PolMode {
        match p {
            PolName::Te => PolMode::Te,
            PolName::Tm => PolMode::Tm,
        }
    }
}

/// Optical carrier position.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum CarrierConfig {
    Absolute { freq_hz: f64 },
    Wavelength { wavelength_m: f64 },
    /// Offset from the anchor resonance of one polarization.
    Resonance { resonance: PolName, offset_hz: f64 },
}

impl CarrierConfig {
    pub fn resolve(&self, ring: &RingModel) -> f64 {
        match *self {
            CarrierConfig::Absolute { freq_hz } => freq_hz,
            CarrierConfig::Wavelength { wavelength_m } => wavelength_to_frequency(wavelength_m),
            CarrierConfig::Resonance { resonance, offset_hz } => ring.anchor_resonance(resonance.into()) + offset_hz,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Centre of the band; defaults to the TE anchor resonance.
    #[serde(default)]
    pub center_hz: Option<f64>,
    pub span_hz: f64,
    pub points: usize,
}

fn default_power() -> f64 {
    1e-3
}

fn default_launch() -> f64 {
    45.0
}

fn default_mod_index() -> f64 {
    DEFAULT_MOD_INDEX
}

fn default_bias() -> f64 {
    FRAC_PI_2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SidebandName {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OssbSection {
    pub carrier: CarrierConfig,
    #[serde(default = "default_power")]
    pub carrier_power_w: f64,
    /// Launch polarization measured from the TE axis.
    #[serde(default = "default_launch")]
    pub launch_angle_deg: f64,
    pub rf_freq_hz: f64,
    #[serde(default = "default_mod_index")]
    pub mod_index: f64,
    #[serde(default = "default_bias")]
    pub bias_rad: f64,
    #[serde(default)]
    pub max_order: Option<usize>,
    /// Polarizer transmission axis measured from the TM axis; absent means no polarizer.
    #[serde(default)]
    pub polarizer_deg: Option<f64>,
    #[serde(default)]
    pub sideband: Option<SidebandName>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfGridConfig {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceConfig {
    GridMax,
    AbsoluteA(f64),
}

fn default_responsivity() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EqualizerSection {
    pub carrier: CarrierConfig,
    #[serde(default = "default_power")]
    pub carrier_power_w: f64,
    /// Input polarization measured from the TE axis; a theta sweep overrides it.
    #[serde(default = "default_launch")]
    pub input_angle_deg: f64,
    #[serde(default = "default_mod_index")]
    pub mod_index: f64,
    #[serde(default = "default_responsivity")]
    pub responsivity_a_per_w: f64,
    /// Defaults to 201 points spanning both passbands.
    #[serde(default)]
    pub rf_grid: Option<RfGridConfig>,
    #[serde(default)]
    pub reference: Option<ReferenceConfig>,
}

impl EqualizerSection {
    pub fn reference(&self) -> RfReference {
        match self.reference {
            None | Some(ReferenceConfig::GridMax) => RfReference::GridMax,
            Some(ReferenceConfig::AbsoluteA(a)) => RfReference::Absolute(a),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleConfig {
    Free,
    Fixed(f64),
}

impl From<ScaleConfig> for ScaleMode {
    fn from(s: ScaleConfig) -> ScaleMode {
        match s {
            ScaleConfig::Free => ScaleMode::Free,
            ScaleConfig::Fixed(v) => ScaleMode::Fixed(v),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitSection {
    /// One resonance from a trace file.
    Resonance(ResonanceFitConfig),
    /// Linear drift of resonance centres with temperature.
    Thermal(ThermalFitConfig),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceFitConfig {
    /// Two-column text trace, relative to the config file.
    pub trace_path: String,
    /// Metadata sidecar; defaults to `<trace_path>.json`.
    #[serde(default)]
    pub sidecar_path: Option<String>,
    #[serde(default)]
    pub scale: Option<ScaleConfig>,
    #[serde(default = "default_a")]
    pub pinned_a: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalPoint {
    pub temperature_c: f64,
    pub pol: PolName,
    pub f0_hz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalFitConfig {
    pub samples: Vec<ThermalPoint>,
}

/// Regular or explicit 1-D grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum GridConfig {
    Linear { start: f64, stop: f64, points: usize },
    Values { values: Vec<f64> },
}

impl GridConfig {
    pub fn values(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let v = match self {
            GridConfig::Linear { start, stop, points } => match points {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n)
                    .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
                    .collect(),
            },
            GridConfig::Values { values } => values.clone(),
        };
        if v.is_empty() {
            return Err(CliError::config(key.to_string(), "grid has no points"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Polarizer angle from the TM axis (ossb) or input angle from the TE axis (equalizer).
    #[serde(default)]
    pub theta_deg: Option<GridConfig>,
    #[serde(default)]
    pub temperature_c: Option<GridConfig>,
    #[serde(default)]
    pub carrier_offset_hz: Option<GridConfig>,
    #[serde(default)]
    pub ossb: Option<OssbSection>,
    #[serde(default)]
    pub equalizer: Option<EqualizerSection>,
}

impl ExperimentConfig {
    /// Parse and check the section layout. Errors name the offending key.
    pub fn from_json(text: &str) -> Result<(Self, serde_json::Value), CliError> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| CliError::config("<root>", format!("not valid JSON: {e}")))?;
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(value.clone()).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(path, e.into_inner().to_string())
        })?;
        cfg.check()?;
        Ok((cfg, value))
    }

    fn check(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let present: Vec<&str> = [
            ("spectrum", self.spectrum.is_some()),
            ("ossb", self.ossb.is_some()),
            ("equalizer", self.equalizer.is_some()),
            ("fit", self.fit.is_some()),
            ("sweep", self.sweep.is_some()),
        ]
        .into_iter()
        .filter(|(_, p)| *p)
        .map(|(k, _)| k)
        .collect();
        match present.len() {
            1 => Ok(()),
            0 => Err(CliError::config(
                "<root>",
                "one experiment section is required: spectrum, ossb, equalizer, fit or sweep",
            )),
            _ => Err(CliError::config(
                present[1],
                format!("only one experiment section is allowed, found {}", present.join(", ")),
            )),
        }
    }

    /// Ring at the configured operating temperature.
    pub fn ring(&self) -> Result<RingModel, CliError> {
        let ring = self.ring.build()?;
        Ok(match self.temperature_c {
            Some(t) => ring.at_temperature(t),
            None => ring,
        })
    }
}
