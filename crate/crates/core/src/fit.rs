//! Single-resonance parameter extraction from sampled transmission traces,
//! plus linear regression of resonance drift against temperature.
//!
//! The optimizer works on `u_t = ln(1 - t)`, `u_a = ln(1 - a)`,
//! `x0 = (f0 - f_ref) / fsr` and `ln(scale)`, which keeps every parameter
//! inside its physical range and makes the step invariant to a global
//! rescaling of the trace.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::ring::{Coupling, PerPol, PolMode, DEFAULT_ROUND_TRIP_AMPLITUDE};
use crate::units::{db_to_power, wavelength_to_frequency};

pub const MIN_TRACE_SAMPLES: usize = 20;
pub const MAX_ITERATIONS: usize = 200;
const LAMBDA_START: f64 = 1e-3;
const LAMBDA_UP: f64 = 10.0;
const LAMBDA_DOWN: f64 = 10.0;
const LAMBDA_CEILING: f64 = 1e16;
const COST_REL_TOL: f64 = 1e-12;
/// Two branches whose costs differ by less than this fraction are both reported.
const BRANCH_TIE: f64 = 0.01;
/// `1 - t` and `1 - a` are kept at or above this.
const MIN_DEFICIT: f64 = 1e-12;
/// Through-port notch extinction beyond which the ring is reported as lossless.
pub const LOSSLESS_EXTINCTION_DB: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Port {
    Through,
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub freq_hz: f64,
    /// Linear power transmission.
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredTrace {
    samples: Vec<TraceSample>,
    pub port: Port,
    pub pol: PolMode,
}

impl MeasuredTrace {
    pub fn new(samples: Vec<TraceSample>, port: Port, pol: PolMode) -> Result<Self> {
        if samples.len() < MIN_TRACE_SAMPLES {
            return Err(Error::InvalidTrace(format!(
                "{} samples, at least {MIN_TRACE_SAMPLES} required",
                samples.len()
            )));
        }
        if let Some(i) = samples
            .iter()
            .position(|s| !s.freq_hz.is_finite() || !s.power.is_finite())
        {
            return Err(Error::InvalidTrace(format!("non-finite sample at index {i}")));
        }
        if let Some(i) = samples.windows(2).position(|w| !(w[1].freq_hz > w[0].freq_hz)) {
            return Err(Error::InvalidTrace(format!(
                "frequencies not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(Self { samples, port, pol })
    }

    /// Build from a trace recorded in dB against wavelength, as optical
    /// spectrum analysers export it. Samples are reordered by frequency.
    pub fn from_wavelength_db(points: &[(f64, f64)], port: Port, pol: PolMode) -> Result<Self> {
        let mut samples: Vec<TraceSample> = points
            .iter()
            .map(|&(lambda_m, db)| TraceSample {
                freq_hz: wavelength_to_frequency(lambda_m),
                power: db_to_power(db),
            })
            .collect();
        samples.sort_by(|a, b| a.freq_hz.total_cmp(&b.freq_hz));
        Self::new(samples, port, pol)
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    /// Same trace with every power multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|s| TraceSample {
                    freq_hz: s.freq_hz,
                    power: s.power * alpha,
                })
                .collect(),
            ..self.clone()
        }
    }
}

/// Sample `|H(f)|^2` of a ring with coupling `c` resonant at `f0`.
pub fn simulate_trace(
    c: Coupling,
    f0_hz: f64,
    fsr_hz: f64,
    port: Port,
    pol: PolMode,
    freqs_hz: &[f64],
) -> Result<MeasuredTrace> {
    let samples = freqs_hz
        .iter()
        .map(|&f| TraceSample {
            freq_hz: f,
            power: port_power(port, c.t(), c.a(), TAU * (f - f0_hz) / fsr_hz),
        })
        .collect();
    MeasuredTrace::new(samples, port, pol)
}

fn port_power(port: Port, t: f64, a: f64, phi: f64) -> f64 {
    let r = t * t * a;
    let cos = phi.cos();
    let den = 1.0 + r * r - 2.0 * r * cos;
    match port {
        Port::Drop => {
            let k2 = 1.0 - t * t;
            k2 * k2 * a / den
        }
        Port::Through => t * t * (1.0 + a * a - 2.0 * a * cos) / den,
    }
}

/// How the overall power level of the trace is treated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleMode {
    /// Unknown insertion loss; fitted.
    Free,
    /// Trace is calibrated against this factor.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub fsr_hz: f64,
    pub scale: ScaleMode,
    /// Value of `a` held when the trace cannot separate `t` from `a`.
    pub pinned_a: f64,
}

impl FitOptions {
    pub fn new(fsr_hz: f64) -> Self {
        Self {
            fsr_hz,
            scale: ScaleMode::Free,
            pinned_a: DEFAULT_ROUND_TRIP_AMPLITUDE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialGuess {
    pub t: f64,
    pub a: f64,
    pub f0_hz: f64,
    pub scale: f64,
    pub fwhm_hz: f64,
}

/// Smooth with a centred 5-point moving average (shrinking at the edges).
fn smoothed(p: &[f64]) -> Vec<f64> {
    (0..p.len())
        .map(|i| {
            let lo = i.saturating_sub(2);
            let hi = (i + 3).min(p.len());
            p[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Extremum, half-level width and baseline read directly off the trace;
/// `(t, a)` follow from the width (and for the through port, the depth).
pub fn initial_guess(trace: &MeasuredTrace, opts: &FitOptions) -> Result<InitialGuess> {
    check_options(opts)?;
    let f: Vec<f64> = trace.samples.iter().map(|s| s.freq_hz).collect();
    let p = smoothed(&trace.samples.iter().map(|s| s.power).collect::<Vec<_>>());
    let n = p.len();
    let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
    if !(hi > 0.0) || (hi - lo) <= 1e-6 * hi.abs() {
        return Err(Error::NoExtremum);
    }
    let edge = (n / 10).max(2);
    let baseline = median(p[..edge].iter().chain(&p[n - edge..]).copied().collect());

    let ext = match trace.port {
        Port::Drop => p.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)),
        Port::Through => p.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)),
    }
    .map(|(i, _)| i)
    .expect("trace is non-empty");
    let level = 0.5 * (p[ext] + baseline);
    let beyond = |v: f64| match trace.port {
        Port::Drop => v < level,
        Port::Through => v > level,
    };
    let cross = |i: usize, j: usize| f[i] + (level - p[i]) / (p[j] - p[i]) * (f[j] - f[i]);
    let right = (ext + 1..n).find(|&j| beyond(p[j])).map(|j| cross(j - 1, j));
    let left = (0..ext).rev().find(|&j| beyond(p[j])).map(|j| cross(j + 1, j));
    let (Some(left), Some(right)) = (left, right) else {
        return Err(Error::NoExtremum);
    };
    let fwhm = (right - left).min(0.5 * opts.fsr_hz);
    if !(fwhm > 0.0) {
        return Err(Error::NoExtremum);
    }

    let x = (std::f64::consts::PI * fwhm / (2.0 * opts.fsr_hz)).sin();
    let r = ((x * x + 1.0).sqrt() - x).powi(2);
    let a = match trace.port {
        Port::Drop => opts.pinned_a.max(r.sqrt()),
        Port::Through => {
            // |T(0)| / |T(pi)| = (1 - a)(1 + r) / ((1 + a)(1 - r))
            let rho = (p[ext] / baseline).clamp(1e-12, 1.0).sqrt();
            let q = rho * (1.0 - r) / (1.0 + r);
            ((1.0 - q) / (1.0 + q)).max(r.sqrt()).min(1.0 - MIN_DEFICIT)
        }
    };
    let t = (r / a).sqrt().min(1.0 - MIN_DEFICIT);
    let scale = match opts.scale {
        ScaleMode::Fixed(s) => s,
        ScaleMode::Free => {
            let (reference, phi) = match trace.port {
                Port::Drop => (p[ext], 0.0),
                Port::Through => (baseline, std::f64::consts::PI),
            };
            reference / port_power(trace.port, t, a, phi)
        }
    };
    Ok(InitialGuess {
        t,
        a,
        f0_hz: f[ext],
        scale,
        fwhm_hz: fwhm,
    })
}

fn check_options(opts: &FitOptions) -> Result<()> {
    if !(opts.fsr_hz > 0.0 && opts.fsr_hz.is_finite()) {
        return Err(invalid("fsr_hz", format!("{} must be positive", opts.fsr_hz)));
    }
    if let ScaleMode::Fixed(s) = opts.scale {
        if !(s > 0.0 && s.is_finite()) {
            return Err(invalid("scale", format!("{s} must be positive")));
        }
    }
    if !(opts.pinned_a > 0.0 && opts.pinned_a <= 1.0) {
        return Err(invalid("pinned_a", format!("{} outside (0, 1]", opts.pinned_a)));
    }
    Ok(())
}

/// Diagnostics that qualify a fit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitFlags {
    /// `a` was held at `FitOptions::pinned_a`: a drop trace with free scale
    /// only constrains `t^2 a`.
    pub a_held: bool,
    /// Parameters that finished on a bound.
    pub at_bounds: Vec<&'static str>,
    /// The fitted through-port notch is deeper than `LOSSLESS_EXTINCTION_DB`
    /// (or `a` hit its bound): no real measurement floor could confirm the
    /// loss, so `a` is effectively 1.
    pub lossless: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub t: f64,
    pub a: f64,
    pub f0_hz: f64,
    pub amplitude_scale: f64,
    pub rms_residual: f64,
    /// One-sigma errors from `s^2 (J^T J)^-1`; `None` when the normal
    /// matrix is singular or the parameter was not fitted.
    pub t_std: Option<f64>,
    pub a_std: Option<f64>,
    pub f0_std_hz: Option<f64>,
    pub scale_std: Option<f64>,
    pub fwhm_hz: f64,
    pub q: f64,
    pub iterations: usize,
    /// Cost (sum of squared residuals) after the start and each accepted step.
    pub cost_history: Vec<f64>,
    pub flags: FitFlags,
    /// Competing solution from the mirrored start whose cost is within 1%.
    pub alternate: Option<Box<FitResult>>,
}

#[derive(Clone, Copy)]
enum Slot {
    Ut,
    Ua,
    X0,
    LnScale,
}

struct Problem<'a> {
    x: Vec<f64>,
    y: &'a [f64],
    port: Port,
    f_ref: f64,
    fsr: f64,
    slots: Vec<Slot>,
    held_a: f64,
    held_scale: f64,
    /// Powers are divided by this before fitting.
    norm: f64,
}

#[derive(Clone, Copy)]
struct Params {
    t: f64,
    a: f64,
    x0: f64,
    scale: f64,
}

const U_MIN: f64 = -27.631021115928547; // ln(MIN_DEFICIT)

impl Problem<'_> {
    fn unpack(&self, p: &[f64]) -> Params {
        let mut out = Params {
            t: f64::NAN,
            a: self.held_a,
            x0: 0.0,
            scale: self.held_scale,
        };
        for (slot, &v) in self.slots.iter().zip(p) {
            match slot {
                Slot::Ut => out.t = 1.0 - v.exp(),
                Slot::Ua => out.a = 1.0 - v.exp(),
                Slot::X0 => out.x0 = v,
                Slot::LnScale => out.scale = self.held_scale * v.exp(),
            }
        }
        out
    }

    fn clamp(&self, p: &mut [f64]) {
        for (slot, v) in self.slots.iter().zip(p.iter_mut()) {
            match slot {
                Slot::Ut | Slot::Ua => *v = v.clamp(U_MIN, 0.0),
                Slot::X0 => *v = v.clamp(-0.5, 0.5),
                Slot::LnScale => {}
            }
        }
    }

    fn model(&self, p: &[f64]) -> Vec<f64> {
        let q = self.unpack(p);
        self.x
            .iter()
            .map(|&x| q.scale * port_power(self.port, q.t, q.a, TAU * (x - q.x0)))
            .collect()
    }

    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.y.len(),
            self.model(p).into_iter().zip(self.y).map(|(m, y)| m - y),
        )
    }

    /// Analytic derivatives of the model with respect to the packed parameters.
    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let q = self.unpack(p);
        let (t, a, s) = (q.t, q.a, q.scale);
        let r = t * t * a;
        let mut jac = DMatrix::zeros(self.y.len(), p.len());
        for (i, &x) in self.x.iter().enumerate() {
            let phi = TAU * (x - q.x0);
            let (sin, cos) = phi.sin_cos();
            let den = 1.0 + r * r - 2.0 * r * cos;
            let (d_r, d_c) = (2.0 * (r - cos), -2.0 * r);
            // numerator and its partials in (t, a, cos phi)
            let (num, n_t, n_a, n_c) = match self.port {
                Port::Drop => {
                    let k2 = 1.0 - t * t;
                    (k2 * k2 * a, -4.0 * t * k2 * a, k2 * k2, 0.0)
                }
                Port::Through => {
                    let m = 1.0 + a * a - 2.0 * a * cos;
                    (t * t * m, 2.0 * t * m, 2.0 * t * t * (a - cos), -2.0 * a * t * t)
                }
            };
            let quotient = |dn: f64, dd: f64| s * (dn * den - num * dd) / (den * den);
            let dp_dt = quotient(n_t, d_r * 2.0 * t * a);
            let dp_da = quotient(n_a, d_r * t * t);
            // d cos / d x0 = TAU sin phi
            let dp_dx0 = quotient(n_c, d_c) * TAU * sin;
            for (j, slot) in self.slots.iter().enumerate() {
                jac[(i, j)] = match slot {
                    Slot::Ut => -(1.0 - t) * dp_dt,
                    Slot::Ua => -(1.0 - a) * dp_da,
                    Slot::X0 => dp_dx0,
                    Slot::LnScale => s * num / den,
                };
            }
        }
        jac
    }
}

struct LmOutcome {
    p: Vec<f64>,
    cost: f64,
    iterations: usize,
    history: Vec<f64>,
}

fn levenberg_marquardt(prob: &Problem, mut p: Vec<f64>) -> Result<LmOutcome> {
    let mut r = prob.residuals(&p);
    let mut cost = r.norm_squared();
    let mut history = vec![cost];
    let mut lambda = LAMBDA_START;
    for iter in 1..=MAX_ITERATIONS {
        if cost == 0.0 {
            return Ok(LmOutcome { p, cost, iterations: iter - 1, history });
        }
        let jac = prob.jacobian(&p);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        loop {
            let mut a = jtj.clone();
            for d in 0..a.nrows() {
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-300);
            }
            let step = a.lu().solve(&(-&g));
            let accepted = step.and_then(|step| {
                let mut trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                prob.clamp(&mut trial);
                let tr = prob.residuals(&trial);
                let tc = tr.norm_squared();
                (tc.is_finite() && tc <= cost).then_some((trial, tr, tc))
            });
            match accepted {
                Some((trial, tr, tc)) => {
                    let rel = (cost - tc) / cost;
                    p = trial;
                    r = tr;
                    cost = tc;
                    history.push(cost);
                    lambda = (lambda / LAMBDA_DOWN).max(1e-12);
                    if rel < COST_REL_TOL {
                        return Ok(LmOutcome { p, cost, iterations: iter, history });
                    }
                    break;
                }
                None => {
                    lambda *= LAMBDA_UP;
                    if lambda > LAMBDA_CEILING {
                        // no downhill step left at working precision
                        return Ok(LmOutcome { p, cost, iterations: iter, history });
                    }
                }
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
    })
}

/// Fit one resonance by damped least squares on `sum (scale |H|^2 - power)^2`.
///
/// Two starts are tried: the guess itself and its mirror with the roles of
/// `t^2` and `a` exchanged (same `t^2 a`, so the same width). The lower-cost
/// solution is returned; the other is attached as `alternate` when its cost
/// is within 1%.
pub fn fit_resonance(trace: &MeasuredTrace, guess: &InitialGuess, opts: &FitOptions) -> Result<FitResult> {
    check_options(opts)?;
    if !(guess.t > 0.0 && guess.t < 1.0 && guess.a > 0.0 && guess.a <= 1.0 && guess.scale > 0.0) {
        return Err(invalid("guess", format!("{guess:?} outside model bounds")));
    }
    let a_held = trace.port == Port::Drop && opts.scale == ScaleMode::Free;
    let mut slots = vec![Slot::Ut];
    if !a_held {
        slots.push(Slot::Ua);
    }
    slots.push(Slot::X0);
    let held_scale = match opts.scale {
        ScaleMode::Free => {
            slots.push(Slot::LnScale);
            // fitted as a log-ratio to the guess
            guess.scale
        }
        ScaleMode::Fixed(s) => s,
    };
    let f_ref = guess.f0_hz;
    // work on a unit-height trace so the iteration path is independent of the power level
    let norm = trace.samples.iter().map(|s| s.power.abs()).fold(0.0, f64::max);
    if !(norm > 0.0) {
        return Err(Error::NoExtremum);
    }
    let y: Vec<f64> = trace.samples.iter().map(|s| s.power / norm).collect();
    let prob = Problem {
        x: trace.samples.iter().map(|s| (s.freq_hz - f_ref) / opts.fsr_hz).collect(),
        y: &y,
        port: trace.port,
        f_ref,
        fsr: opts.fsr_hz,
        slots,
        held_a: opts.pinned_a,
        held_scale: held_scale / norm,
        norm,
    };

    let start = |t: f64, a: f64| -> Vec<f64> {
        let mut p: Vec<f64> = prob
            .slots
            .iter()
            .map(|s| match s {
                Slot::Ut => (1.0 - t).max(MIN_DEFICIT).ln(),
                Slot::Ua => (1.0 - a).max(MIN_DEFICIT).ln(),
                Slot::X0 => 0.0,
                Slot::LnScale => 0.0,
            })
            .collect();
        prob.clamp(&mut p);
        p
    };

    let (t0, a0) = if a_held {
        let r = guess.t * guess.t * guess.a;
        ((r / opts.pinned_a).sqrt().min(1.0 - MIN_DEFICIT), opts.pinned_a)
    } else {
        (guess.t, guess.a)
    };
    let primary = levenberg_marquardt(&prob, start(t0, a0))?;
    let mirrored = if a_held {
        None
    } else {
        // exchange t^2 <-> a
        levenberg_marquardt(&prob, start(a0.sqrt(), t0 * t0)).ok()
    };

    let mut best = summarize(&prob, primary, a_held);
    if let Some(m) = mirrored {
        let other = summarize(&prob, m, a_held);
        let (lo, hi) = if other.rms_residual < best.rms_residual {
            (other, best)
        } else {
            (best, other)
        };
        best = lo;
        let c_lo = best.cost_history.last().copied().unwrap_or(0.0);
        let c_hi = hi.cost_history.last().copied().unwrap_or(0.0);
        let distinct = (hi.t - best.t).abs() > 1e-6 * best.t || (hi.a - best.a).abs() > 1e-6 * best.a;
        if distinct && c_hi - c_lo <= BRANCH_TIE * c_lo.max(f64::MIN_POSITIVE) {
            best.alternate = Some(Box::new(hi));
        }
    }
    Ok(best)
}

fn summarize(prob: &Problem, out: LmOutcome, a_held: bool) -> FitResult {
    let q = prob.unpack(&out.p);
    let n = prob.y.len();
    let np = out.p.len();
    let sigma2 = out.cost / (n.saturating_sub(np).max(1)) as f64;
    let jac = prob.jacobian(&out.p);
    let cov = (jac.transpose() * &jac).try_inverse().map(|m| m * sigma2);
    let mut t_std = None;
    let mut a_std = None;
    let mut f0_std = None;
    let mut scale_std = None;
    let mut at_bounds = Vec::new();
    for (j, slot) in prob.slots.iter().enumerate() {
        let sd = cov.as_ref().map(|c| c[(j, j)].max(0.0).sqrt());
        let v = out.p[j];
        match slot {
            Slot::Ut => {
                t_std = sd.map(|s| s * (1.0 - q.t));
                if v <= U_MIN || v >= 0.0 {
                    at_bounds.push("t");
                }
            }
            Slot::Ua => {
                a_std = sd.map(|s| s * (1.0 - q.a));
                if v <= U_MIN || v >= 0.0 {
                    at_bounds.push("a");
                }
            }
            Slot::X0 => {
                f0_std = sd.map(|s| s * prob.fsr);
                if v.abs() >= 0.5 {
                    at_bounds.push("f0");
                }
            }
            Slot::LnScale => scale_std = sd.map(|s| s * q.scale * prob.norm),
        }
    }
    let extinction_db = notch_extinction_db(q.t, q.a);
    let lossless = !a_held && (at_bounds.contains(&"a") || extinction_db > LOSSLESS_EXTINCTION_DB);
    let c = Coupling::new(q.t, q.a).expect("optimizer keeps parameters in bounds");
    let f0 = prob.f_ref + q.x0 * prob.fsr;
    let fwhm = c.fwhm(prob.fsr);
    FitResult {
        t: q.t,
        a: q.a,
        f0_hz: f0,
        amplitude_scale: q.scale * prob.norm,
        rms_residual: (out.cost / n as f64).sqrt() * prob.norm,
        t_std,
        a_std,
        f0_std_hz: f0_std,
        scale_std,
        fwhm_hz: fwhm,
        q: f0 / fwhm,
        iterations: out.iterations,
        cost_history: out.history.iter().map(|c| c * prob.norm * prob.norm).collect(),
        flags: FitFlags {
            a_held,
            at_bounds,
            lossless,
        },
        alternate: None,
    }
}

/// `|T(pi)|^2 / |T(0)|^2` in dB.
pub fn notch_extinction_db(t: f64, a: f64) -> f64 {
    let off = port_power(Port::Through, t, a, std::f64::consts::PI);
    let on = port_power(Port::Through, t, a, 0.0);
    10.0 * (off / on).log10()
}

/// `initial_guess` followed by `fit_resonance`.
pub fn fit_trace(trace: &MeasuredTrace, opts: &FitOptions) -> Result<FitResult> {
    let guess = initial_guess(trace, opts)?;
    fit_resonance(trace, &guess, opts)
}

/// Resonance centre of one polarization at one chip temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalSample {
    pub temperature_c: f64,
    pub pol: PolMode,
    pub f0_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalFit {
    /// Redshift rate per polarization (Hz/degC, positive when resonances move
    /// to lower frequency on heating).
    pub rate_hz_per_c: PerPol<f64>,
    /// Resonance frequency at 0 degC extrapolated from the regression.
    pub intercept_hz: PerPol<f64>,
    /// `rate_te - rate_tm`: how fast the TE-to-TM interval grows with temperature.
    pub interval_slope_hz_per_c: f64,
}

pub fn fit_thermal_rates(samples: &[ThermalSample]) -> Result<ThermalFit> {
    let regress = |pol: PolMode| -> Result<(f64, f64)> {
        let pts: Vec<(f64, f64)> = samples
            .iter()
            .filter(|s| s.pol == pol)
            .map(|s| (s.temperature_c, s.f0_hz))
            .collect();
        let mut temps: Vec<f64> = pts.iter().map(|p| p.0).collect();
        temps.sort_by(f64::total_cmp);
        temps.dedup();
        if temps.len() < 3 {
            return Err(Error::RankDeficient {
                pol,
                reason: "at least three distinct temperatures are required",
            });
        }
        let n = pts.len() as f64;
        let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let fm = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - fm)).sum();
        let slope = sxy / sxx;
        Ok((-slope, fm - slope * tm))
    };
    let (te, te0) = regress(PolMode::Te)?;
    let (tm, tm0) = regress(PolMode::Tm)?;
    Ok(ThermalFit {
        rate_hz_per_c: PerPol::new(te, tm),
        intercept_hz: PerPol::new(te0, tm0),
        interval_slope_hz_per_c: te - tm,
    })
}
