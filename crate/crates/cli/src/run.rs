//! Experiment runners: one per subcommand, each returning scalars, outputs
//! and warnings for the envelope.

use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use ringlink_core::fit::{
    fit_thermal_rates, fit_trace, simulate_trace, FitOptions, FitResult, ScaleMode, ThermalSample,
};
use ringlink_core::link::{
    equalizer_er_curve, passband_center_tracking, passband_geometry, simulate_equalizer, simulate_ossb,
    EqualizerConfig, OssbConfig, OssbReport, Sideband,
};
use ringlink_core::modulation::OpticalSpectrum;
use ringlink_core::units::{deg_to_rad, frequency_to_wavelength, power_db};
use ringlink_core::{Coupling, ModulatorDrive, PolMode, PolarizerAngle, RingModel};

use crate::config::{
    EqualizerSection, ExperimentConfig, FitSection, OssbSection, SidebandName, SpectrumConfig, SweepSection,
};
use crate::envelope::{num, opt, Table};
use crate::error::CliError;

/// Subcommands, one per experiment pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Experiment {
    Spectrum,
    Ossb,
    Equalizer,
    Fit,
    SweepTheta,
    SweepTemp,
    SweepCarrier,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Ossb => "ossb",
            Experiment::Equalizer => "equalizer",
            Experiment::Fit => "fit",
            Experiment::SweepTheta => "sweep-theta",
            Experiment::SweepTemp => "sweep-temp",
            Experiment::SweepCarrier => "sweep-carrier",
        }
    }
}

#[derive(Debug, Default)]
pub struct RunOutput {
    pub scalars: Map<String, Value>,
    pub outputs: Map<String, Value>,
    pub warnings: Vec<String>,
    /// Projected to CSV with `--csv`.
    pub table: Option<Table>,
}

impl RunOutput {
    fn scalar(&mut self, key: &str, v: f64) {
        self.scalars.insert(key.to_string(), num(v));
    }

    fn scalar_opt(&mut self, key: &str, v: Option<f64>) {
        self.scalars.insert(key.to_string(), opt(v));
    }

    fn set_table(&mut self, table: Table) {
        self.outputs.insert("records".into(), table.records());
        self.table = Some(table);
    }
}

fn missing(key: &str, experiment: Experiment) -> CliError {
    CliError::config(key, format!("`{}` needs a `{key}` section", experiment.name()))
}

pub fn execute(experiment: Experiment, cfg: &ExperimentConfig, base_dir: &Path) -> Result<RunOutput, CliError> {
    let ring = cfg.ring()?;
    match experiment {
        Experiment::Spectrum => {
            let s = cfg.spectrum.as_ref().ok_or_else(|| missing("spectrum", experiment))?;
            spectrum(&ring, s)
        }
        Experiment::Ossb => {
            let s = cfg.ossb.as_ref().ok_or_else(|| missing("ossb", experiment))?;
            ossb(&ring, s, "ossb")
        }
        Experiment::Equalizer => {
            let s = cfg.equalizer.as_ref().ok_or_else(|| missing("equalizer", experiment))?;
            equalizer(&ring, s, "equalizer")
        }
        Experiment::Fit => match cfg.fit.as_ref().ok_or_else(|| missing("fit", experiment))? {
            FitSection::Resonance(r) => fit_resonance(r, base_dir),
            FitSection::Thermal(t) => {
                let samples: Vec<ThermalSample> = t
                    .samples
                    .iter()
                    .map(|p| ThermalSample {
                        temperature_c: p.temperature_c,
                        pol: p.pol.into(),
                        f0_hz: p.f0_hz,
                    })
                    .collect();
                thermal_fit(&samples)
            }
        },
        Experiment::SweepTheta | Experiment::SweepTemp | Experiment::SweepCarrier => {
            let s = cfg.sweep.as_ref().ok_or_else(|| missing("sweep", experiment))?;
            match experiment {
                Experiment::SweepTheta => sweep_theta(&ring, s),
                Experiment::SweepTemp => sweep_temp(&ring, s),
                _ => sweep_carrier(&ring, s),
            }
        }
    }
}

fn spectrum(ring: &RingModel, s: &SpectrumConfig) -> Result<RunOutput, CliError> {
    if s.points < 2 {
        return Err(CliError::config("spectrum.points", "at least 2 points are required"));
    }
    if !(s.span_hz > 0.0) {
        return Err(CliError::config("spectrum.span_hz", "must be positive"));
    }
    let center = s.center_hz.unwrap_or_else(|| ring.anchor_resonance(PolMode::Te));
    let (lo, hi) = (center - 0.5 * s.span_hz, center + 0.5 * s.span_hz);
    let mut table = Table::new(vec!["freq_hz", "drop_te", "drop_tm", "through_te", "through_tm"]);
    for i in 0..s.points {
        let f = lo + s.span_hz * i as f64 / (s.points - 1) as f64;
        table.push(vec![
            f,
            ring.drop_transfer(PolMode::Te, f).norm_sqr(),
            ring.drop_transfer(PolMode::Tm, f).norm_sqr(),
            ring.through_transfer(PolMode::Te, f).norm_sqr(),
            ring.through_transfer(PolMode::Tm, f).norm_sqr(),
        ]);
    }

    let mut out = RunOutput::default();
    for pol in PolMode::ALL {
        let key = pol.to_string().to_lowercase();
        let combs: Vec<Value> = ring.find_resonances(pol, lo, hi).into_iter().map(num).collect();
        out.outputs.insert(format!("resonances_{key}_hz"), Value::Array(combs));
        let f0 = ring.anchor_resonance(pol);
        let m = ring.resonance_metrics(pol, f0)?;
        let c = ring.coupling(pol);
        out.scalar(&format!("f0_{key}_hz"), m.f0_hz);
        out.scalar(&format!("lambda0_{key}_m"), frequency_to_wavelength(m.f0_hz));
        out.scalar(&format!("fsr_{key}_hz"), m.fsr_hz);
        out.scalar(&format!("fwhm_{key}_hz"), m.fwhm_hz);
        out.scalar(&format!("q_{key}"), m.q);
        out.scalar_opt(&format!("bw20db_{key}_hz"), m.bw20db_hz);
        out.scalar(&format!("notch_depth_{key}_db"), m.notch_depth_db);
        out.scalar(&format!("drop_loss_{key}_db"), m.drop_loss_db);
        out.scalar(&format!("t_{key}"), c.t());
        out.scalar(&format!("a_{key}"), c.a());
    }
    let f_te = ring.anchor_resonance(PolMode::Te);
    let fsr = ring.fsr(PolMode::Te);
    let iv = ring.mode_interval(f_te - fsr, f_te + fsr)?;
    out.scalar("interval_hz", iv.delta_hz);
    out.scalar("complementary_hz", iv.complementary_hz);
    out.scalar("interval_plus_fsr_hz", iv.delta_hz + iv.fsr_hz);
    out.set_table(table);
    Ok(out)
}

fn ossb_config(ring: &RingModel, s: &OssbSection, key: &str) -> Result<OssbConfig, CliError> {
    if !(s.rf_freq_hz > 0.0) {
        return Err(CliError::config(format!("{key}.rf_freq_hz"), "must be positive"));
    }
    Ok(OssbConfig {
        ring: *ring,
        carrier_freq_hz: s.carrier.resolve(ring),
        carrier_power_w: s.carrier_power_w,
        launch_angle: deg_to_rad(s.launch_angle_deg),
        drive: ModulatorDrive {
            bias: s.bias_rad,
            max_order: s.max_order,
            ..ModulatorDrive::new(s.rf_freq_hz, s.mod_index)
        },
        polarizer: s.polarizer_deg.map(PolarizerAngle::from_degrees),
        sideband: s.sideband.map(|b| match b {
            SidebandName::Upper => Sideband::Upper,
            SidebandName::Lower => Sideband::Lower,
        }),
    })
}

fn line_table(spec: &OpticalSpectrum, carrier: f64) -> Table {
    let mut t = Table::new(vec![
        "freq_hz",
        "offset_hz",
        "power_w",
        "te_power_w",
        "tm_power_w",
        "te_re",
        "te_im",
        "tm_re",
        "tm_im",
    ]);
    for l in spec.lines() {
        let (te, tm) = (l.field.te, l.field.tm);
        t.push(vec![
            l.freq_hz,
            l.freq_hz - carrier,
            l.power(),
            te.norm_sqr(),
            tm.norm_sqr(),
            te.re,
            te.im,
            tm.re,
            tm.im,
        ]);
    }
    t
}

fn ossb_scalars(out: &mut RunOutput, rep: &OssbReport, cfg: &OssbConfig) {
    out.scalar("carrier_freq_hz", cfg.carrier_freq_hz);
    out.scalar("ocsr_db", rep.ocsr_db);
    out.scalar("unused_sideband_suppression_db", rep.unused_sideband_suppression_db);
    out.scalar("carrier_power_w", rep.carrier_power_w);
    out.scalar("sideband_power_w", rep.sideband_power_w);
    out.scalar("rejected_power_w", rep.rejected_power_w);
    out.scalars.insert(
        "selected_sideband".into(),
        json!(match rep.selected_sideband {
            Sideband::Upper => "upper",
            Sideband::Lower => "lower",
        }),
    );
}

fn ossb(ring: &RingModel, s: &OssbSection, key: &str) -> Result<RunOutput, CliError> {
    let cfg = ossb_config(ring, s, key)?;
    let rep = simulate_ossb(&cfg)?;
    let mut out = RunOutput::default();
    ossb_scalars(&mut out, &rep, &cfg);
    if let Some(deg) = s.polarizer_deg {
        out.scalar("ocsr_theory_db", cot2_db(deg));
    }
    out.outputs
        .insert("drop_lines".into(), line_table(&rep.drop_spectrum, cfg.carrier_freq_hz).records());
    let table = match &rep.projected_spectrum {
        Some(p) => line_table(p, cfg.carrier_freq_hz),
        None => line_table(&rep.drop_spectrum, cfg.carrier_freq_hz),
    };
    out.warnings = rep.warnings;
    out.set_table(table);
    Ok(out)
}

fn equalizer_config(ring: &RingModel, s: &EqualizerSection) -> Result<EqualizerConfig, CliError> {
    let carrier = s.carrier.resolve(ring);
    let mut cfg = EqualizerConfig::new(*ring, carrier, deg_to_rad(s.input_angle_deg));
    cfg.carrier_power_w = s.carrier_power_w;
    cfg.mod_index = s.mod_index;
    cfg.responsivity = s.responsivity_a_per_w;
    cfg.reference = s.reference();
    if let Some(g) = &s.rf_grid {
        cfg.rf_grid_hz = match g.points {
            0 => Vec::new(),
            1 => vec![g.start_hz],
            n => (0..n)
                .map(|i| g.start_hz + (g.stop_hz - g.start_hz) * i as f64 / (n - 1) as f64)
                .collect(),
        };
    }
    Ok(cfg)
}

fn equalizer(ring: &RingModel, s: &EqualizerSection, _key: &str) -> Result<RunOutput, CliError> {
    let cfg = equalizer_config(ring, s)?;
    let resp = simulate_equalizer(&cfg)?;
    let bands = passband_geometry(ring, cfg.carrier_freq_hz);
    let mut out = RunOutput::default();
    out.scalar("carrier_freq_hz", cfg.carrier_freq_hz);
    let peak = resp.peak().expect("grid is non-empty");
    out.scalar("peak_rf_hz", peak.rf_freq_hz);
    out.scalar("peak_s21_db", peak.s21_db);
    out.scalar_opt("bandwidth_3db_hz", resp.bandwidth_3db());
    out.scalar("passband_te_center_hz", bands.te.center_hz);
    out.scalar("passband_tm_center_hz", bands.tm.center_hz);
    out.scalar("fwhm_te_hz", bands.te.fwhm_hz);
    out.scalar("fwhm_tm_hz", bands.tm.fwhm_hz);
    let mut table = Table::new(vec!["rf_hz", "s21_db"]);
    for p in &resp.points {
        table.push(vec![p.rf_freq_hz, p.s21_db]);
    }
    out.set_table(table);
    Ok(out)
}

fn fit_scalars(out: &mut RunOutput, fit: &FitResult) {
    out.scalar("t", fit.t);
    out.scalar("a", fit.a);
    out.scalar("f0_hz", fit.f0_hz);
    out.scalar("amplitude_scale", fit.amplitude_scale);
    out.scalar("rms_residual", fit.rms_residual);
    out.scalar("fwhm_hz", fit.fwhm_hz);
    out.scalar("q", fit.q);
    out.scalar_opt("t_std", fit.t_std);
    out.scalar_opt("a_std", fit.a_std);
    out.scalar_opt("f0_std_hz", fit.f0_std_hz);
    out.scalar_opt("amplitude_scale_std", fit.scale_std);
    out.scalar("iterations", fit.iterations as f64);
}

fn fit_resonance(r: &crate::config::ResonanceFitConfig, base: &Path) -> Result<RunOutput, CliError> {
    let trace_path = base.join(&r.trace_path);
    let sidecar_path = match &r.sidecar_path {
        Some(p) => base.join(p),
        None => {
            let mut p = trace_path.clone().into_os_string();
            p.push(".json");
            p.into()
        }
    };
    let (trace, sidecar) = crate::trace::load(&trace_path, &sidecar_path)?;
    let opts = FitOptions {
        scale: r.scale.map_or(ScaleMode::Free, Into::into),
        pinned_a: r.pinned_a,
        ..FitOptions::new(sidecar.fsr_hz)
    };
    let fit = fit_trace(&trace, &opts)?;
    let mut out = RunOutput::default();
    fit_scalars(&mut out, &fit);
    out.outputs.insert(
        "flags".into(),
        json!({
            "a_held": fit.flags.a_held,
            "at_bounds": fit.flags.at_bounds,
            "lossless": fit.flags.lossless,
        }),
    );
    if fit.flags.a_held {
        out.warnings.push(format!(
            "drop-port trace without calibrated scale constrains only t^2 a; a held at {}",
            opts.pinned_a
        ));
    }
    if fit.flags.lossless {
        out.warnings.push("fitted notch extinction exceeds any measurable floor; ring appears lossless".into());
    }
    if let Some(alt) = &fit.alternate {
        out.outputs.insert(
            "alternate".into(),
            json!({"t": num(alt.t), "a": num(alt.a), "f0_hz": num(alt.f0_hz), "rms_residual": num(alt.rms_residual)}),
        );
        out.warnings
            .push("a second (t, a) solution fits within 1% of the best cost".into());
    }
    let freqs: Vec<f64> = trace.samples().iter().map(|s| s.freq_hz).collect();
    let model = simulate_trace(
        Coupling::new(fit.t, fit.a)?,
        fit.f0_hz,
        sidecar.fsr_hz,
        trace.port,
        trace.pol,
        &freqs,
    )?;
    let mut table = Table::new(vec!["freq_hz", "power", "model_power"]);
    for (s, m) in trace.samples().iter().zip(model.samples()) {
        table.push(vec![s.freq_hz, s.power, m.power * fit.amplitude_scale]);
    }
    out.set_table(table);
    Ok(out)
}

fn thermal_fit(samples: &[ThermalSample]) -> Result<RunOutput, CliError> {
    let fit = fit_thermal_rates(samples)?;
    let mut out = RunOutput::default();
    out.scalar("rate_te_hz_per_c", fit.rate_hz_per_c.te);
    out.scalar("rate_tm_hz_per_c", fit.rate_hz_per_c.tm);
    out.scalar("interval_slope_hz_per_c", fit.interval_slope_hz_per_c);
    let mut table = Table::new(vec!["temperature_c", "pol_te", "f0_hz"]);
    for s in samples {
        table.push(vec![s.temperature_c, f64::from(u8::from(s.pol == PolMode::Te)), s.f0_hz]);
    }
    out.set_table(table);
    Ok(out)
}

fn sweep_grid(s: &SweepSection, key: &'static str) -> Result<Vec<f64>, CliError> {
    let grid = match key {
        "theta_deg" => s.theta_deg.as_ref(),
        "temperature_c" => s.temperature_c.as_ref(),
        _ => s.carrier_offset_hz.as_ref(),
    };
    grid.ok_or_else(|| CliError::config(format!("sweep.{key}"), "grid required for this sweep"))?
        .values(&format!("sweep.{key}"))
}

fn spread(v: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = v.filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    Some(hi - lo)
}

/// `10 log10(cot^2)` of an angle in degrees; `NaN` where it diverges or vanishes.
fn cot2_db(deg: f64) -> f64 {
    let (s, c) = deg_to_rad(deg).sin_cos();
    if s.abs() < 1e-12 || c.abs() < 1e-12 {
        return f64::NAN;
    }
    power_db((c / s).powi(2))
}

fn sweep_theta(ring: &RingModel, s: &SweepSection) -> Result<RunOutput, CliError> {
    let thetas = sweep_grid(s, "theta_deg")?;
    match (&s.ossb, &s.equalizer) {
        (Some(o), None) => {
            let base = ossb_config(ring, o, "sweep.ossb")?;
            let reports = thetas
                .par_iter()
                .map(|&deg| {
                    let cfg = OssbConfig {
                        polarizer: Some(PolarizerAngle::from_degrees(deg)),
                        ..base.clone()
                    };
                    simulate_ossb(&cfg)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let mut table = Table::new(vec![
                "theta_deg",
                "ocsr_db",
                "ocsr_theory_db",
                "deviation_db",
                "unused_sideband_suppression_db",
            ]);
            for (&deg, rep) in thetas.iter().zip(&reports) {
                let theory = cot2_db(deg);
                table.push(vec![
                    deg,
                    rep.ocsr_db,
                    theory,
                    rep.ocsr_db - theory,
                    rep.unused_sideband_suppression_db,
                ]);
            }
            let mut out = RunOutput::default();
            out.scalar("carrier_freq_hz", base.carrier_freq_hz);
            let first = reports.first().map(|r| r.ocsr_db);
            let last = reports.last().map(|r| r.ocsr_db);
            out.scalar_opt("ocsr_swing_db", first.zip(last).map(|(a, b)| a - b));
            out.scalar_opt("ocsr_range_db", spread(reports.iter().map(|r| r.ocsr_db)));
            out.scalar_opt("deviation_spread_db", spread(table.rows.iter().map(|r| r[3])));
            out.warnings = reports.first().map(|r| r.warnings.clone()).unwrap_or_default();
            out.set_table(table);
            Ok(out)
        }
        (None, Some(e)) => {
            let cfg = equalizer_config(ring, e)?;
            let rad: Vec<f64> = thetas.iter().map(|&d| deg_to_rad(d)).collect();
            let curve = equalizer_er_curve(&cfg, &rad)?;
            let mut table = Table::new(vec!["theta_deg", "er_db", "er_combined_db", "er_theory_db", "deviation_db"]);
            for (&deg, p) in thetas.iter().zip(&curve) {
                // input angle from TE: TE carries cos^2, TM sin^2
                let theory = cot2_db(deg);
                table.push(vec![deg, p.er_db, p.er_combined_db, theory, p.er_db - theory]);
            }
            let mut out = RunOutput::default();
            out.scalar("carrier_freq_hz", cfg.carrier_freq_hz);
            out.scalar_opt("er_span_db", spread(curve.iter().map(|p| p.er_db)));
            out.scalar_opt("er_combined_span_db", spread(curve.iter().map(|p| p.er_combined_db)));
            out.scalar_opt(
                "max_abs_deviation_db",
                table
                    .rows
                    .iter()
                    .map(|r| r[4].abs())
                    .filter(|d| d.is_finite())
                    .reduce(f64::max),
            );
            out.set_table(table);
            Ok(out)
        }
        _ => Err(CliError::config(
            "sweep",
            "sweep-theta needs exactly one of `sweep.ossb` or `sweep.equalizer`",
        )),
    }
}

fn sweep_temp(ring: &RingModel, s: &SweepSection) -> Result<RunOutput, CliError> {
    let temps = sweep_grid(s, "temperature_c")?;
    let mut table = Table::new(vec![
        "temperature_c",
        "f_te_hz",
        "f_tm_hz",
        "lambda_te_m",
        "lambda_tm_m",
        "interval_hz",
    ]);
    let mut samples = Vec::new();
    for &temp in &temps {
        let hot = ring.at_temperature(temp);
        let f_te = hot.anchor_resonance(PolMode::Te);
        let f_tm = hot.anchor_resonance(PolMode::Tm);
        table.push(vec![
            temp,
            f_te,
            f_tm,
            frequency_to_wavelength(f_te),
            frequency_to_wavelength(f_tm),
            f_tm - f_te,
        ]);
        samples.push(ThermalSample { temperature_c: temp, pol: PolMode::Te, f0_hz: f_te });
        samples.push(ThermalSample { temperature_c: temp, pol: PolMode::Tm, f0_hz: f_tm });
    }
    let mut out = RunOutput::default();
    match fit_thermal_rates(&samples) {
        Ok(fit) => {
            out.scalar("rate_te_hz_per_c", fit.rate_hz_per_c.te);
            out.scalar("rate_tm_hz_per_c", fit.rate_hz_per_c.tm);
            out.scalar("interval_slope_hz_per_c", fit.interval_slope_hz_per_c);
            let residual = table
                .rows
                .iter()
                .flat_map(|r| {
                    let t = r[0];
                    [
                        (r[1] - (fit.intercept_hz.te - fit.rate_hz_per_c.te * t)).abs(),
                        (r[2] - (fit.intercept_hz.tm - fit.rate_hz_per_c.tm * t)).abs(),
                    ]
                })
                .fold(0.0, f64::max);
            out.scalar("max_linear_residual_hz", residual);
        }
        Err(e) => out
            .warnings
            .push(format!("no thermal regression: {e}")),
    }
    out.set_table(table);
    Ok(out)
}

/// Least-squares slope of `y` on `x`, skipping non-finite pairs.
fn slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| (*a, *b))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn sweep_carrier(ring: &RingModel, s: &SweepSection) -> Result<RunOutput, CliError> {
    let offsets = sweep_grid(s, "carrier_offset_hz")?;
    let e = s
        .equalizer
        .as_ref()
        .ok_or_else(|| CliError::config("sweep.equalizer", "sweep-carrier needs an equalizer section"))?;
    let cfg = equalizer_config(ring, e)?;
    let track = passband_center_tracking(&cfg, &offsets)?;
    let mut table = Table::new(vec![
        "offset_hz",
        "carrier_freq_hz",
        "center_te_hz",
        "center_tm_hz",
        "geometric_te_hz",
        "geometric_tm_hz",
    ]);
    for p in &track {
        table.push(vec![
            p.offset_hz,
            cfg.carrier_freq_hz + p.offset_hz,
            p.f_center_te_hz.unwrap_or(f64::NAN),
            p.f_center_tm_hz.unwrap_or(f64::NAN),
            p.geometric.te,
            p.geometric.tm,
        ]);
    }
    let col = |i: usize| table.rows.iter().map(|r| r[i]).collect::<Vec<f64>>();
    let mut out = RunOutput::default();
    out.scalar("carrier_freq_hz", cfg.carrier_freq_hz);
    out.scalar_opt("slope_te", slope(&offsets, &col(2)));
    out.scalar_opt("slope_tm", slope(&offsets, &col(3)));
    out.scalar_opt("coverage_te_hz", spread(col(2).into_iter()));
    out.scalar_opt("coverage_tm_hz", spread(col(3).into_iter()));
    out.set_table(table);
    Ok(out)
}
