//! Measured-trace files.
//!
//! A trace is a text file with two numeric columns per line (axis, power)
//! separated by whitespace or a comma; `#` starts a comment. A JSON sidecar
//! describes it:
//!
//! ```json
//! {"port": "through", "pol": "te", "fsr_hz": 49e9,
//!  "power_unit": "linear", "axis": "frequency_hz"}
//! ```
//!
//! `power_unit` is `linear` (default) or `db`; `axis` is `frequency_hz`
//! (default) or `wavelength_m`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use ringlink_core::fit::{MeasuredTrace, Port, TraceSample};

use crate::config::PolName;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortName {
    Through,
    Drop,
}

impl From<PortName> for Port {
    fn from(p: PortName) -> Port {
        match p {
            PortName::Through => Port::Through,
            PortName::Drop => Port::Drop,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerUnit {
    #[default]
    Linear,
    Db,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    #[default]
    FrequencyHz,
    WavelengthM,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub port: PortName,
    pub pol: PolName,
    pub fsr_hz: f64,
    #[serde(default)]
    pub power_unit: PowerUnit,
    #[serde(default)]
    pub axis: Axis,
}

fn read(path: &Path, key: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::config(key, format!("{}: {e}", path.display())))
}

pub fn parse_columns(text: &str, key: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let cols: Vec<&str> = body
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let bad = || CliError::config(key, format!("line {}: expected two numeric columns", lineno + 1));
        if cols.len() != 2 {
            return Err(bad());
        }
        let x: f64 = cols[0].parse().map_err(|_| bad())?;
        let y: f64 = cols[1].parse().map_err(|_| bad())?;
        out.push((x, y));
    }
    Ok(out)
}

/// Load a trace and its sidecar. Format problems are config errors; trace
/// invariants (length, ordering) are reported by the fitter as domain errors.
pub fn load(trace_path: &Path, sidecar_path: &Path) -> Result<(MeasuredTrace, Sidecar), CliError> {
    let sidecar_text = read(sidecar_path, "fit.resonance.sidecar_path")?;
    let sidecar: Sidecar = serde_json::from_str(&sidecar_text)
        .map_err(|e| CliError::config("fit.resonance.sidecar_path", format!("{}: {e}", sidecar_path.display())))?;
    let cols = parse_columns(&read(trace_path, "fit.resonance.trace_path")?, "fit.resonance.trace_path")?;
    let port = sidecar.port.into();
    let pol = sidecar.pol.into();
    let trace = match (sidecar.axis, sidecar.power_unit) {
        (Axis::FrequencyHz, unit) => {
            let samples = cols
                .into_iter()
                .map(|(f, p)| TraceSample {
                    freq_hz: f,
                    power: match unit {
                        PowerUnit::Linear => p,
                        PowerUnit::Db => ringlink_core::units::db_to_power(p),
                    },
                })
                .collect();
            MeasuredTrace::new(samples, port, pol)?
        }
        (Axis::WavelengthM, PowerUnit::Db) => MeasuredTrace::from_wavelength_db(&cols, port, pol)?,
        (Axis::WavelengthM, PowerUnit::Linear) => {
            let db: Vec<(f64, f64)> = cols
                .into_iter()
                .map(|(l, p)| (l, ringlink_core::units::power_db(p)))
                .collect();
            MeasuredTrace::from_wavelength_db(&db, port, pol)?
        }
    };
    Ok((trace, sidecar))
}

/// Write a trace in the text format with a short header.
pub fn write_trace(path: &Path, trace: &MeasuredTrace) -> std::io::Result<()> {
    let mut s = format!(
        "# port {:?} pol {}\n# freq_hz power_linear\n",
        trace.port, trace.pol
    );
    for p in trace.samples() {
        s.push_str(&format!("{:.16e} {:.16e}\n", p.freq_hz, p.power));
    }
    std::fs::write(path, s)
}
