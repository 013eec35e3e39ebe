//! Acceptance suite: one PASS/FAIL line per criterion, driven through the
//! shipped recipes where one exists.
//!
//! Run with `cargo test -p ringlink-cli --test acceptance`.

use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::io::Write;
use std::path::PathBuf;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::FftPlanner;

use ringlink_cli::{run, Experiment, ResultEnvelope};
use ringlink_core::bessel::bessel_j;
use ringlink_core::fit::{fit_trace, simulate_trace, FitOptions, MeasuredTrace, Port, TraceSample};
use ringlink_core::jones::{output_intensity_closed_form, polarizer_matrix};
use ringlink_core::link::{equalizer_beat, passband_geometry, photodetect, EqualizerConfig};
use ringlink_core::modulation::{cw_carrier, intensity_modulate, phase_modulate};
use ringlink_core::ring::{CouplingSpec, PerPol, SpectralRingParams};
use ringlink_core::{Coupling, JonesMatrix, JonesVector, ModulatorDrive, PolMode, PolarizerAngle, RingModel};

/// Criteria whose stated tolerance the model cannot meet; they must still
/// be evaluated and reported, and are the only ones allowed to fail.
const KNOWN_UNATTAINABLE: &[u32] = &[3];

struct Check {
    criterion: u32,
    title: &'static str,
    clauses: Vec<(String, bool)>,
}

impl Check {
    fn new(criterion: u32, title: &'static str) -> Self {
        Self {
            criterion,
            title,
            clauses: Vec::new(),
        }
    }

    fn clause(&mut self, pass: bool, text: String) {
        self.clauses.push((text, pass));
    }

    fn pass(&self) -> bool {
        self.clauses.iter().all(|(_, p)| *p)
    }

    fn report(&self) -> String {
        let mut s = format!(
            "criterion {:>2}: {} {}",
            self.criterion,
            if self.pass() { "PASS" } else { "FAIL" },
            self.title
        );
        for (text, pass) in &self.clauses {
            s.push_str(&format!("\n    [{}] {text}", if *pass { "ok" } else { "x " }));
        }
        s
    }
}

fn recipe(name: &str, experiment: Experiment) -> ResultEnvelope {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("recipes").join(format!("{name}.json"));
    let (env, _) = run(experiment, &path).unwrap_or_else(|e| panic!("recipe {name}: {e}"));
    assert!(env.hash_matches());
    env
}

fn scalar(env: &ResultEnvelope, key: &str) -> f64 {
    env.scalar(key).unwrap_or_else(|| panic!("{} lacks scalar {key}", env.experiment))
}

fn c1_fsr() -> Check {
    let mut c = Check::new(1, "FSR from ring geometry");
    let env = recipe("fig2", Experiment::Spectrum);
    let fsr = scalar(&env, "fsr_te_hz");
    let dev = (fsr / 49e9 - 1.0).abs();
    c.clause(dev <= 0.02, format!("TE FSR {:.4} GHz, {:.2}% from 49 GHz (<= 2%)", fsr / 1e9, 100.0 * dev));
    c
}

fn c2_q() -> Check {
    let mut c = Check::new(2, "Q factor at 140 MHz linewidth");
    let env = recipe("fig2b", Experiment::Spectrum);
    let q = scalar(&env, "q_te");
    c.clause(q >= 1.2e6, format!("Q {q:.4e} >= 1.2e6"));
    let dev = (q / 1.38e6 - 1.0).abs();
    c.clause(dev <= 0.01, format!("Q within 1% of 1.38e6 ({:.3}%)", 100.0 * dev));
    c
}

fn c3_ocsr_law() -> Check {
    let mut c = Check::new(3, "OCSR follows cot^2 of polarizer angle");
    let env = recipe("fig7", Experiment::SweepTheta);
    let theta = env.column("theta_deg");
    let dev = env.column("deviation_db");
    let inner: Vec<f64> = theta
        .iter()
        .zip(&dev)
        .filter(|(t, d)| (2.0..=88.0).contains(*t) && d.is_finite())
        .map(|(_, d)| *d)
        .collect();
    let spread = inner.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - inner.iter().copied().fold(f64::INFINITY, f64::min);
    c.clause(
        spread <= 0.05,
        format!("OCSR - cot^2 spread over 2..88 deg = {spread:.3} dB (<= 0.05 dB)"),
    );
    let swing = scalar(&env, "ocsr_swing_db");
    c.clause(
        (swing - 58.3).abs() <= 0.2,
        format!("swing 2..92 deg = {swing:.2} dB (58.3 +/- 0.2 dB)"),
    );
    c.clause(
        (swing - 59.3).abs() <= 1.5,
        format!("swing within 1.5 dB of measured 59.3 dB ({:+.2} dB)", swing - 59.3),
    );
    c
}

fn c4_suppression() -> Check {
    let mut c = Check::new(4, "unused-sideband suppression");
    let env = recipe("fig5", Experiment::Ossb);
    let s = scalar(&env, "unused_sideband_suppression_db");
    c.clause(s >= 35.0, format!("suppression {s:.2} dB >= 35 dB"));
    c
}

fn c5_bandwidth() -> Check {
    let mut c = Check::new(5, "single passband 3 dB width");
    let env = recipe("fig10", Experiment::Equalizer);
    let bw = scalar(&env, "bandwidth_3db_hz");
    let fwhm = scalar(&env, "fwhm_tm_hz");
    let dev = bw / fwhm - 1.0;
    c.clause(
        dev.abs() <= 0.15,
        format!("RF 3 dB width {:.2} MHz vs fwhm {:.2} MHz ({:+.2}%, within 15%)", bw / 1e6, fwhm / 1e6, 100.0 * dev),
    );
    let lo = 0.85 * fwhm;
    let hi = 1.15 * fwhm;
    c.clause(
        (lo..=hi).contains(&137.1e6),
        format!("band [{:.1}, {:.1}] MHz brackets 137.1 MHz", lo / 1e6, hi / 1e6),
    );
    c
}

fn c6_er() -> Check {
    let mut c = Check::new(6, "equalizer extinction ratio");
    let env = recipe("fig13", Experiment::SweepTheta);
    let span = scalar(&env, "er_span_db");
    c.clause(span > 55.0, format!("ER span 2..88 deg = {span:.2} dB (> 55 dB)"));
    let dev = scalar(&env, "max_abs_deviation_db");
    c.clause(dev <= 0.1, format!("max |ER - cot^2| = {dev:.2e} dB (<= 0.1 dB)"));
    c
}

fn reference_ring() -> RingModel {
    RingModel::from_spectral(&SpectralRingParams {
        f0_hz: PerPol::new(193.4e12, 193.4e12 + 16.6e9),
        fsr_hz: PerPol::splat(49e9),
        coupling: CouplingSpec::Linewidth {
            fwhm_hz: 140e6,
            a: 0.9982,
        },
        tm_coupling: None,
        t_ref_c: 25.0,
        thermal_rate_hz_per_c: PerPol::splat(0.0),
    })
    .unwrap()
}

fn c7_pm_null() -> Check {
    let mut c = Check::new(7, "phase-modulation beat null and notch conversion");
    let m = 0.2;
    let frf = 10.7e9;
    let carrier = cw_carrier(193.4e12, 1.0, 0.0).unwrap();
    let pm = phase_modulate(&carrier, &ModulatorDrive::new(frf, m)).unwrap();
    let beat = photodetect(&pm, frf, 1.0).unwrap().norm();
    // one carrier x first-sideband pair
    let reference = bessel_j(0, m).abs() * bessel_j(1, m).abs();
    c.clause(
        beat < 1e-8 * reference,
        format!("unfiltered beat / pair reference = {:.2e} (< 1e-8)", beat / reference),
    );
    let ring = reference_ring();
    let fc = ring.anchor_resonance(PolMode::Te) + 5.9e9;
    let cfg = EqualizerConfig {
        mod_index: m,
        carrier_power_w: 1.0,
        ..EqualizerConfig::new(ring, fc, PI / 2.0)
    };
    let band = passband_geometry(&ring, fc).tm;
    let b = equalizer_beat(&cfg, band.center_hz).unwrap().tm.norm();
    let off = equalizer_beat(&cfg, band.center_hz + 10.0 * band.fwhm_hz).unwrap().tm.norm();
    c.clause(
        b > 0.1 * reference && b.is_finite(),
        format!("notched beat at passband centre / reference = {:.3}", b / reference),
    );
    c.clause(off < 0.2 * b, format!("10 linewidths off the passband: {:.3} of peak", off / b));
    c
}

fn c8_tracking() -> Check {
    let mut c = Check::new(8, "passband tracks carrier detuning");
    let env = recipe("fig12", Experiment::SweepCarrier);
    let slope = scalar(&env, "slope_tm");
    c.clause((slope + 1.0).abs() <= 1e-3, format!("slope {slope:.6} (-1 +/- 1e-3)"));
    let coverage = scalar(&env, "coverage_tm_hz");
    // the located centres carry the slope tolerance
    c.clause(
        coverage >= 14.6e9 * (1.0 - 1e-3),
        format!("passband centre covers {:.4} GHz (14.6 GHz)", coverage / 1e9),
    );
    c
}

fn c9_thermal() -> Check {
    let mut c = Check::new(9, "thermal drift and frequency plan");
    let env = recipe("fig3", Experiment::SweepTemp);
    let temps = env.column("temperature_c");
    c.clause(
        temps.first() == Some(&23.0) && temps.last() == Some(&30.0),
        format!("sweep {:?} .. {:?} degC", temps.first(), temps.last()),
    );
    let te = scalar(&env, "rate_te_hz_per_c");
    let tm = scalar(&env, "rate_tm_hz_per_c");
    c.clause(
        (te - 1.77e9).abs() <= 1e-6 * 1.77e9 && (tm - 1.67e9).abs() <= 1e-6 * 1.67e9,
        format!("fitted rates {:.6} / {:.6} GHz/degC", te / 1e9, tm / 1e9),
    );
    let resid = scalar(&env, "max_linear_residual_hz");
    c.clause(resid <= 1.0, format!("max deviation from linear {resid:.3} Hz"));
    let slope = scalar(&env, "interval_slope_hz_per_c");
    c.clause(
        (slope - 100e6).abs() <= 1e-6 * 100e6,
        format!("interval slope {:.3} MHz/degC (100)", slope / 1e6),
    );
    c.clause(
        (slope / 90e6 - 1.0).abs() <= 0.2,
        format!("within 20% of 90 MHz/degC ({:+.1}%)", 100.0 * (slope / 90e6 - 1.0)),
    );
    let plan = recipe("fig2b", Experiment::Spectrum);
    let comp = scalar(&plan, "complementary_hz");
    let sum = scalar(&plan, "interval_plus_fsr_hz");
    c.clause(
        comp == 32.4e9 && sum == 65.6e9,
        format!("49.0 - 16.6 = {} GHz, 16.6 + 49.0 = {} GHz", comp / 1e9, sum / 1e9),
    );
    c
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn c10_fit() -> Check {
    let mut c = Check::new(10, "fit round trip");
    let (fsr, f0) = (49e9, 193.4e12);
    let truth = Coupling::new(0.9965, 0.9982).unwrap();
    let w = truth.fwhm(fsr);
    let freqs: Vec<f64> = (0..401).map(|i| f0 + 3.1e6 - 10.0 * w + 20.0 * w * i as f64 / 400.0).collect();
    let clean = simulate_trace(truth, f0, fsr, Port::Through, PolMode::Te, &freqs).unwrap();
    let fit = fit_trace(&clean, &FitOptions::new(fsr)).unwrap();
    let (et, ea) = (rel(fit.t, truth.t()), rel(fit.a, truth.a()));
    c.clause(
        et <= 1e-4 && ea <= 1e-4,
        format!("noiseless: rel error t {et:.1e}, a {ea:.1e} (<= 1e-4)"),
    );

    let peak = clean.samples().iter().map(|s| s.power).fold(0.0, f64::max);
    let noise = Normal::new(0.0, 0.01 * peak).unwrap();
    let mut errs_t = Vec::new();
    let mut errs_a = Vec::new();
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = clean
            .samples()
            .iter()
            .map(|s| TraceSample {
                freq_hz: s.freq_hz,
                power: s.power + noise.sample(&mut rng),
            })
            .collect();
        let noisy = MeasuredTrace::new(samples, Port::Through, PolMode::Te).unwrap();
        let fit = fit_trace(&noisy, &FitOptions::new(fsr)).unwrap();
        errs_t.push(rel(fit.t, truth.t()));
        errs_a.push(rel(fit.a, truth.a()));
    }
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        0.5 * (v[49] + v[50])
    };
    let (mt, ma) = (median(errs_t), median(errs_a));
    c.clause(
        mt < 0.01 && ma < 0.01,
        format!("40 dB SNR, 100 seeds: median rel error t {mt:.1e}, a {ma:.1e} (< 1%)"),
    );
    c
}

/// Coefficients `c_n` of a field sampled over one RF period.
fn fft_harmonics(field: impl Fn(f64) -> Complex64, n: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = (0..n).map(|k| field(TAU * k as f64 / n as f64)).collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c / n as f64).collect()
}

fn c11_equivalence() -> Check {
    let mut c = Check::new(11, "closed forms against independent pipelines");
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let theta = PolarizerAngle::from_radians(rng.random_range(0.0..PI));
        let d_te = Complex64::from_polar(rng.random_range(0.0..1.0), rng.random_range(-PI..PI));
        let d_tm = Complex64::from_polar(rng.random_range(0.0..1.0), rng.random_range(-PI..PI));
        let closed = output_intensity_closed_form(theta, d_te, d_tm, 1.0);
        let matrix = (polarizer_matrix(theta) * JonesMatrix::diagonal(d_te, d_tm) * JonesVector::linear(1.0, FRAC_PI_4))
            .power();
        worst = worst.max((closed - matrix).abs() / matrix.max(f64::MIN_POSITIVE));
    }
    c.clause(worst <= 1e-12, format!("polarizer intensity, 1000 draws: worst rel {worst:.1e} (<= 1e-12)"));

    const N: usize = 1 << 14;
    let (fc, frf) = (193.4e12, 10e9);
    let carrier = cw_carrier(fc, 1.0, 0.0).unwrap();
    let mut worst: f64 = 0.0;
    for m in [0.05, 0.2, 0.35, 0.5] {
        let drive = ModulatorDrive {
            max_order: Some(12),
            ..ModulatorDrive::new(frf, m)
        };
        let cases = [
            (phase_modulate(&carrier, &drive).unwrap(), fft_harmonics(|wt| Complex64::cis(m * wt.cos()), N)),
            (
                intensity_modulate(&carrier, &drive).unwrap(),
                fft_harmonics(|wt| Complex64::new((drive.bias / 2.0 + m * wt.cos()).cos(), 0.0), N),
            ),
        ];
        for (spec, oracle) in cases {
            let cmax = oracle.iter().map(|c| c.norm()).fold(0.0, f64::max);
            for n in -12i32..=12 {
                let want = oracle[n.rem_euclid(N as i32) as usize];
                let got = spec
                    .line_near(fc + n as f64 * frf, 1.0)
                    .map_or(Complex64::new(0.0, 0.0), |l| l.field.te);
                worst = worst.max((got - want).norm() / cmax);
            }
        }
    }
    c.clause(worst <= 1e-9, format!("modulator lines vs FFT oracle, m <= 0.5: worst rel {worst:.1e} (<= 1e-9)"));
    c
}

#[test]
fn acceptance_criteria() {
    let checks = vec![
        c1_fsr(),
        c2_q(),
        c3_ocsr_law(),
        c4_suppression(),
        c5_bandwidth(),
        c6_er(),
        c7_pm_null(),
        c8_tracking(),
        c9_thermal(),
        c10_fit(),
        c11_equivalence(),
    ];
    // written to the handle directly so the report shows without --nocapture
    let mut err = std::io::stderr().lock();
    for c in &checks {
        writeln!(err, "{}", c.report()).unwrap();
    }
    let unexpected: Vec<u32> = checks
        .iter()
        .filter(|c| !c.pass() && !KNOWN_UNATTAINABLE.contains(&c.criterion))
        .map(|c| c.criterion)
        .collect();
    for c in checks.iter().filter(|c| c.pass() && KNOWN_UNATTAINABLE.contains(&c.criterion)) {
        writeln!(err, "note: criterion {} now passes; drop it from KNOWN_UNATTAINABLE", c.criterion).unwrap();
    }
    assert!(unexpected.is_empty(), "criteria failed: {unexpected:?}");
}
