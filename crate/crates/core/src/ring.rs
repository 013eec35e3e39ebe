//! Dual-polarization add-drop micro-ring: per-polarization phase response,
//! drop/through transfer functions, resonance geometry and thermal tuning.
//!
//! Both polarizations share one physical loop but see different effective
//! indices, so each has its own resonance comb. The model stores, per
//! polarization, a linear single-pass phase function of optical frequency,
//! the coupling pair `(t, a)` and a thermal redshift rate.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::roots::{bisect, newton_bracketed};
use crate::units::SPEED_OF_LIGHT;

/// Round-trip amplitude transmission used when only a linewidth is known.
pub const DEFAULT_ROUND_TRIP_AMPLITUDE: f64 = 0.9982;

/// Grid density used to bracket resonances.
const BRACKET_POINTS_PER_FSR: f64 = 32.0;

/// Relative tolerance of resonance refinement.
const RESONANCE_REL_TOL: f64 = 1e-15;

/// Largest wrapped phase (rad) still accepted as "on resonance".
const RESONANCE_PHASE_TOL: f64 = 1e-6;

/// Waveguide polarization mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolMode {
    Te,
    Tm,
}

impl PolMode {
    pub const ALL: [PolMode; 2] = [PolMode::Te, PolMode::Tm];

    pub fn index(self) -> usize {
        match self {
            PolMode::Te => 0,
            PolMode::Tm => 1,
        }
    }

    pub fn other(self) -> PolMode {
        match self {
            PolMode::Te => PolMode::Tm,
            PolMode::Tm => PolMode::Te,
        }
    }
}

impl fmt::Display for PolMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolMode::Te => "TE",
            PolMode::Tm => "TM",
        })
    }
}

/// A value held once per polarization.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerPol<T> {
    pub te: T,
    pub tm: T,
}

impl<T> PerPol<T> {
    pub fn new(te: T, tm: T) -> Self {
        Self { te, tm }
    }

    pub fn get(&self, pol: PolMode) -> &T {
        match pol {
            PolMode::Te => &self.te,
            PolMode::Tm => &self.tm,
        }
    }

    pub fn map<U>(self, mut f: impl FnMut(PolMode, T) -> U) -> PerPol<U> {
        PerPol {
            te: f(PolMode::Te, self.te),
            tm: f(PolMode::Tm, self.tm),
        }
    }
}

impl<T: Copy> PerPol<T> {
    pub fn splat(v: T) -> Self {
        Self { te: v, tm: v }
    }
}

/// Self-coupling amplitude `t` and round-trip amplitude transmission `a` of a
/// symmetric add-drop ring (identical couplers, lossless coupling so that
/// `t^2 + k^2 = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    t: f64,
    a: f64,
}

impl Coupling {
    pub fn new(t: f64, a: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&t) {
            return Err(invalid("t", format!("self-coupling {t} outside [0, 1)")));
        }
        if !(a > 0.0 && a <= 1.0) {
            return Err(invalid("a", format!("round-trip transmission {a} outside (0, 1]")));
        }
        Ok(Self { t, a })
    }

    /// Solve the self-coupling `t` that gives the requested drop-port FWHM for
    /// a fixed round-trip transmission `a`.
    ///
    /// The drop response is an Airy function of the round-trip phase with
    /// round-trip gain `r = t^2 a`, whose half-power half-width satisfies
    /// `sin(pi fwhm / (2 fsr)) = (1 - r) / (2 sqrt(r))`.
    pub fn from_linewidth(fwhm_hz: f64, fsr_hz: f64, a: f64) -> Result<Self> {
        if !(fsr_hz > 0.0) {
            return Err(invalid("fsr", format!("{fsr_hz} Hz must be positive")));
        }
        if !(fwhm_hz > 0.0) {
            return Err(invalid("fwhm", format!("{fwhm_hz} Hz must be positive")));
        }
        if fwhm_hz >= fsr_hz {
            return Err(Error::InfeasibleLinewidth {
                fwhm_hz,
                fsr_hz,
                reason: "fwhm must be narrower than the free spectral range",
            });
        }
        if !(a > 0.0 && a <= 1.0) {
            return Err(invalid("a", format!("round-trip transmission {a} outside (0, 1]")));
        }
        let x = (PI * fwhm_hz / (2.0 * fsr_hz)).sin();
        let s = (x * x + 1.0).sqrt() - x;
        let r = s * s;
        if r >= a {
            return Err(Error::InfeasibleLinewidth {
                fwhm_hz,
                fsr_hz,
                reason: "linewidth is narrower than the round-trip loss allows",
            });
        }
        Self::new((r / a).sqrt(), a)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Cross-coupling amplitude `k = sqrt(1 - t^2)`.
    pub fn k(&self) -> f64 {
        self.k_squared().sqrt()
    }

    pub fn k_squared(&self) -> f64 {
        1.0 - self.t * self.t
    }

    /// Round-trip field gain `t^2 a` seen by the resonant denominator.
    pub fn round_trip_gain(&self) -> f64 {
        self.t * self.t * self.a
    }

    /// `-k^2 sqrt(a) e^{i phi/2} / (1 - t^2 a e^{i phi})`
    pub fn drop_at_phase(&self, phi: f64) -> Complex64 {
        let num = -self.k_squared() * self.a.sqrt() * Complex64::cis(0.5 * half_phase_reduce(phi));
        num / (1.0 - self.round_trip_gain() * Complex64::cis(phi))
    }

    /// `t (1 - a e^{i phi}) / (1 - t^2 a e^{i phi})`
    pub fn through_at_phase(&self, phi: f64) -> Complex64 {
        let e = Complex64::cis(phi);
        self.t * (1.0 - self.a * e) / (1.0 - self.round_trip_gain() * e)
    }

    /// Drop-port FWHM implied by this coupling for a given FSR.
    pub fn fwhm(&self, fsr_hz: f64) -> f64 {
        let r = self.round_trip_gain();
        let x = ((1.0 - r) / (2.0 * r.sqrt())).min(1.0);
        2.0 * fsr_hz * x.asin() / PI
    }
}

/// Reduce a phase into `[-2pi, 2pi)` so that `e^{i phi/2}` keeps the sign it
/// has for the unreduced phase.
fn half_phase_reduce(phi: f64) -> f64 {
    let two_turns = 2.0 * TAU;
    phi - two_turns * (phi / two_turns).round()
}

/// Single-pass phase, linear in optical frequency: `phi(f) = slope * f + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseProfile {
    /// `phi(f) = 2 pi f n(lambda) L / c` with `n(lambda) = n_eff + dn/dlambda (lambda - lambda_ref)`.
    Physical {
        round_trip_length_m: f64,
        n_eff: f64,
        dn_dlambda_per_m: f64,
        lambda_ref_m: f64,
    },
    /// `phi(f) = 2 pi (f - f0) / fsr`, exactly resonant at `f0`.
    Spectral { f0_hz: f64, fsr_hz: f64 },
}

impl PhaseProfile {
    /// Phase at optical frequency `f` (rad).
    pub fn phase(&self, f: f64) -> f64 {
        match *self {
            PhaseProfile::Spectral { f0_hz, fsr_hz } => TAU * ((f - f0_hz) / fsr_hz),
            PhaseProfile::Physical {
                round_trip_length_m,
                n_eff,
                dn_dlambda_per_m,
                lambda_ref_m,
            } => {
                // f * n(c/f) = f (n_eff - dn lambda_ref) + dn c
                let group = n_eff - dn_dlambda_per_m * lambda_ref_m;
                TAU * round_trip_length_m / SPEED_OF_LIGHT * (f * group + dn_dlambda_per_m * SPEED_OF_LIGHT)
            }
        }
    }

    /// `d phi / d f` (rad/Hz); constant for both profiles.
    pub fn slope(&self) -> f64 {
        match *self {
            PhaseProfile::Spectral { fsr_hz, .. } => TAU / fsr_hz,
            PhaseProfile::Physical {
                round_trip_length_m,
                n_eff,
                dn_dlambda_per_m,
                lambda_ref_m,
            } => TAU * round_trip_length_m * (n_eff - dn_dlambda_per_m * lambda_ref_m) / SPEED_OF_LIGHT,
        }
    }

    /// Free spectral range implied by the phase slope.
    pub fn fsr(&self) -> f64 {
        TAU / self.slope()
    }

    /// Frequency near which resonances are naturally reported.
    fn anchor_frequency(&self) -> f64 {
        match *self {
            PhaseProfile::Spectral { f0_hz, .. } => f0_hz,
            PhaseProfile::Physical { lambda_ref_m, .. } => SPEED_OF_LIGHT / lambda_ref_m,
        }
    }
}

/// Physical description of the ring.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalRingParams {
    pub radius_m: f64,
    pub n_eff: PerPol<f64>,
    /// First-order index dispersion (1/m); zero means the phase index also sets the FSR.
    pub dn_dlambda_per_m: PerPol<f64>,
    pub lambda_ref_m: f64,
    pub t: f64,
    pub a: f64,
    /// Optional TM coupling override; TE uses `(t, a)`.
    pub tm_coupling: Option<(f64, f64)>,
    pub t_ref_c: f64,
    /// Resonance redshift rate (Hz/degC).
    pub thermal_rate_hz_per_c: PerPol<f64>,
}

impl Default for PhysicalRingParams {
    fn default() -> Self {
        Self {
            radius_m: 592e-6,
            n_eff: PerPol::new(1.627, 1.624),
            dn_dlambda_per_m: PerPol::splat(0.0),
            lambda_ref_m: 1550e-9,
            t: 0.9964,
            a: DEFAULT_ROUND_TRIP_AMPLITUDE,
            tm_coupling: None,
            t_ref_c: 25.0,
            thermal_rate_hz_per_c: PerPol::splat(0.0),
        }
    }
}

/// How the spectral parameterization fixes `(t, a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingSpec {
    Explicit { t: f64, a: f64 },
    /// Solve `t` from the drop-port FWHM with `a` pinned.
    Linewidth { fwhm_hz: f64, a: f64 },
}

/// Spectral description: anchor resonance and FSR per polarization.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralRingParams {
    pub f0_hz: PerPol<f64>,
    pub fsr_hz: PerPol<f64>,
    pub coupling: CouplingSpec,
    pub tm_coupling: Option<CouplingSpec>,
    pub t_ref_c: f64,
    pub thermal_rate_hz_per_c: PerPol<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ModeModel {
    profile: PhaseProfile,
    coupling: Coupling,
    thermal_rate_hz_per_c: f64,
}

/// Canonical ring model evaluated at an operating temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingModel {
    modes: PerPol<ModeModel>,
    t_ref_c: f64,
    temperature_c: f64,
}

/// Linewidth and depth figures of one resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceMetrics {
    pub f0_hz: f64,
    pub fwhm_hz: f64,
    pub q: f64,
    /// Full width at -20 dB of the drop peak; `None` when the comb never drops 20 dB.
    pub bw20db_hz: Option<f64>,
    /// Through-port transmission on resonance (dB); `-inf` for a lossless ring.
    pub notch_depth_db: f64,
    /// Drop-port transmission on resonance (dB).
    pub drop_loss_db: f64,
    pub fsr_hz: f64,
}

/// Nearest TE/TM resonance pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeInterval {
    pub delta_hz: f64,
    pub f_te_hz: f64,
    pub f_tm_hz: f64,
    pub fsr_hz: f64,
    /// `fsr - delta`, the second single-FSR operating frequency.
    pub complementary_hz: f64,
}

/// RF operating frequencies reachable with a TE/TM interval and an FSR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyPlan {
    pub fsr_hz: f64,
    pub interval_hz: f64,
}

impl FrequencyPlan {
    pub fn complementary_hz(&self) -> f64 {
        self.fsr_hz - self.interval_hz
    }

    /// `interval + n fsr` for `n = 0..orders`.
    pub fn interval_orders(&self, orders: usize) -> Vec<f64> {
        (0..orders).map(|n| self.interval_hz + n as f64 * self.fsr_hz).collect()
    }

    /// `(fsr - interval) + n fsr` for `n = 0..orders`.
    pub fn complementary_orders(&self, orders: usize) -> Vec<f64> {
        (0..orders)
            .map(|n| self.complementary_hz() + n as f64 * self.fsr_hz)
            .collect()
    }
}

impl RingModel {
    pub fn from_physical(p: &PhysicalRingParams) -> Result<Self> {
        if !(p.radius_m > 0.0) {
            return Err(invalid("radius_m", format!("{} must be positive", p.radius_m)));
        }
        if !(p.lambda_ref_m > 0.0) {
            return Err(invalid("lambda_ref_m", format!("{} must be positive", p.lambda_ref_m)));
        }
        let te_coupling = Coupling::new(p.t, p.a)?;
        let tm_coupling = match p.tm_coupling {
            Some((t, a)) => Coupling::new(t, a)?,
            None => te_coupling,
        };
        let length = TAU * p.radius_m;
        let mode = |pol: PolMode, coupling: Coupling| -> Result<ModeModel> {
            let n = *p.n_eff.get(pol);
            let dn = *p.dn_dlambda_per_m.get(pol);
            if !(n >= 1.0) {
                return Err(invalid("n_eff", format!("{pol} index {n} must be >= 1")));
            }
            if !(n - dn * p.lambda_ref_m > 0.0) {
                return Err(invalid(
                    "dn_dlambda_per_m",
                    format!("{pol} group index must stay positive"),
                ));
            }
            Ok(ModeModel {
                profile: PhaseProfile::Physical {
                    round_trip_length_m: length,
                    n_eff: n,
                    dn_dlambda_per_m: dn,
                    lambda_ref_m: p.lambda_ref_m,
                },
                coupling,
                thermal_rate_hz_per_c: *p.thermal_rate_hz_per_c.get(pol),
            })
        };
        Ok(Self {
            modes: PerPol::new(mode(PolMode::Te, te_coupling)?, mode(PolMode::Tm, tm_coupling)?),
            t_ref_c: p.t_ref_c,
            temperature_c: p.t_ref_c,
        })
    }

    pub fn from_spectral(p: &SpectralRingParams) -> Result<Self> {
        let solve = |spec: CouplingSpec, fsr: f64| -> Result<Coupling> {
            match spec {
                CouplingSpec::Explicit { t, a } => Coupling::new(t, a),
                CouplingSpec::Linewidth { fwhm_hz, a } => Coupling::from_linewidth(fwhm_hz, fsr, a),
            }
        };
        let mode = |pol: PolMode| -> Result<ModeModel> {
            let f0 = *p.f0_hz.get(pol);
            let fsr = *p.fsr_hz.get(pol);
            if !(f0 > 0.0) {
                return Err(invalid("f0_hz", format!("{pol} anchor {f0} must be positive")));
            }
            if !(fsr > 0.0) {
                return Err(invalid("fsr_hz", format!("{pol} fsr {fsr} must be positive")));
            }
            let spec = match (pol, p.tm_coupling) {
                (PolMode::Tm, Some(spec)) => spec,
                _ => p.coupling,
            };
            Ok(ModeModel {
                profile: PhaseProfile::Spectral { f0_hz: f0, fsr_hz: fsr },
                coupling: solve(spec, fsr)?,
                thermal_rate_hz_per_c: *p.thermal_rate_hz_per_c.get(pol),
            })
        };
        Ok(Self {
            modes: PerPol::new(mode(PolMode::Te)?, mode(PolMode::Tm)?),
            t_ref_c: p.t_ref_c,
            temperature_c: p.t_ref_c,
        })
    }

    pub fn coupling(&self, pol: PolMode) -> Coupling {
        self.modes.get(pol).coupling
    }

    pub fn profile(&self, pol: PolMode) -> PhaseProfile {
        self.modes.get(pol).profile
    }

    pub fn thermal_rate(&self, pol: PolMode) -> f64 {
        self.modes.get(pol).thermal_rate_hz_per_c
    }

    pub fn temperature_c(&self) -> f64 {
        self.temperature_c
    }

    pub fn reference_temperature_c(&self) -> f64 {
        self.t_ref_c
    }

    /// Redshift of the `pol` comb at the current temperature (Hz, positive = lower frequency).
    pub fn thermal_shift_hz(&self, pol: PolMode) -> f64 {
        self.thermal_rate(pol) * (self.temperature_c - self.t_ref_c)
    }

    /// Same ring at temperature `temperature_c`; each comb moves down in
    /// frequency by `rate * (T - T_ref)`.
    pub fn at_temperature(&self, temperature_c: f64) -> RingModel {
        RingModel {
            temperature_c,
            ..*self
        }
    }

    /// Single-pass phase of `pol` at optical frequency `f`.
    pub fn phase(&self, pol: PolMode, f: f64) -> f64 {
        self.profile(pol).phase(f + self.thermal_shift_hz(pol))
    }

    pub fn phase_slope(&self, pol: PolMode) -> f64 {
        self.profile(pol).slope()
    }

    pub fn fsr(&self, pol: PolMode) -> f64 {
        self.profile(pol).fsr()
    }

    /// Drop-port field transfer `D_pol(f)`.
    pub fn drop_transfer(&self, pol: PolMode, f: f64) -> Complex64 {
        self.coupling(pol).drop_at_phase(self.phase(pol, f))
    }

    /// Through-port field transfer `T_pol(f)`.
    pub fn through_transfer(&self, pol: PolMode, f: f64) -> Complex64 {
        self.coupling(pol).through_at_phase(self.phase(pol, f))
    }

    /// All `pol` resonances in `[lo, hi]`, ascending.
    pub fn find_resonances(&self, pol: PolMode, lo: f64, hi: f64) -> Vec<f64> {
        if !(hi > lo) {
            return Vec::new();
        }
        let turns = |f: f64| self.phase(pol, f) / TAU;
        let slope = self.phase_slope(pol) / TAU;
        let step = self.fsr(pol) / BRACKET_POINTS_PER_FSR;
        let n_steps = ((hi - lo) / step).ceil().max(1.0) as usize;

        let mut out = Vec::new();
        let first = turns(lo);
        if first == first.floor() {
            out.push(lo);
        }
        let mut x_prev = lo;
        let mut level_prev = first.floor();
        for i in 1..=n_steps {
            let x = if i == n_steps { hi } else { lo + i as f64 * step };
            let level = turns(x).floor();
            if level > level_prev {
                let target = level;
                let root = newton_bracketed(
                    |f| turns(f) - target,
                    |_| slope,
                    x_prev,
                    x,
                    RESONANCE_REL_TOL,
                );
                if out.last().map_or(true, |&last: &f64| root > last) && root >= lo && root <= hi {
                    out.push(root);
                }
            }
            x_prev = x;
            level_prev = level;
        }
        out
    }

    /// Resonance of `pol` nearest to `f`.
    pub fn nearest_resonance(&self, pol: PolMode, f: f64) -> f64 {
        let fsr = self.fsr(pol);
        let roots = self.find_resonances(pol, f - fsr, f + fsr);
        roots
            .into_iter()
            .min_by(|x, y| (x - f).abs().total_cmp(&(y - f).abs()))
            .expect("a window of two FSRs always holds a resonance")
    }

    /// Resonance of `pol` closest to the parameterization anchor (the
    /// configured `f0`, or `c / lambda_ref` for the physical form), at the
    /// current temperature.
    pub fn anchor_resonance(&self, pol: PolMode) -> f64 {
        let anchor = self.profile(pol).anchor_frequency() - self.thermal_shift_hz(pol);
        self.nearest_resonance(pol, anchor)
    }

    fn is_resonant(&self, pol: PolMode, f: f64) -> bool {
        let phi = self.phase(pol, f);
        let wrapped = phi - TAU * (phi / TAU).round();
        wrapped.abs() <= RESONANCE_PHASE_TOL
    }

    /// Linewidth, Q and depth of the `pol` resonance at `f0`.
    pub fn resonance_metrics(&self, pol: PolMode, f0: f64) -> Result<ResonanceMetrics> {
        if !(f0 > 0.0) || !self.is_resonant(pol, f0) {
            return Err(Error::NotResonant { freq_hz: f0, pol });
        }
        let fsr = self.fsr(pol);
        let peak = self.drop_transfer(pol, f0).norm_sqr();
        let half_span = 0.5 * fsr;
        let floor = self.drop_transfer(pol, f0 + half_span).norm_sqr();

        let width_at = |level: f64| -> Option<f64> {
            if floor >= level {
                return None;
            }
            let g = |d: f64| self.drop_transfer(pol, f0 + d).norm_sqr() - level;
            let right = bisect(g, 0.0, half_span, 1e-15);
            let g = |d: f64| self.drop_transfer(pol, f0 - d).norm_sqr() - level;
            let left = bisect(g, 0.0, half_span, 1e-15);
            Some(right + left)
        };
        let fwhm = width_at(0.5 * peak).ok_or(Error::InfeasibleLinewidth {
            fwhm_hz: fsr,
            fsr_hz: fsr,
            reason: "drop response never falls to half power",
        })?;
        let through = self.through_transfer(pol, f0).norm_sqr();
        Ok(ResonanceMetrics {
            f0_hz: f0,
            fwhm_hz: fwhm,
            q: f0 / fwhm,
            bw20db_hz: width_at(0.01 * peak),
            notch_depth_db: 10.0 * through.log10(),
            drop_loss_db: 10.0 * peak.log10(),
            fsr_hz: fsr,
        })
    }

    /// Nearest TE/TM resonance pair inside `[lo, hi]`.
    pub fn mode_interval(&self, lo: f64, hi: f64) -> Result<ModeInterval> {
        let te = self.find_resonances(PolMode::Te, lo, hi);
        let tm = self.find_resonances(PolMode::Tm, lo, hi);
        for (pol, comb) in [(PolMode::Te, &te), (PolMode::Tm, &tm)] {
            if comb.is_empty() {
                return Err(Error::MissingComb {
                    lo_hz: lo,
                    hi_hz: hi,
                    pol,
                });
            }
        }
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for &f_te in &te {
            let idx = tm.partition_point(|&f| f < f_te);
            for &f_tm in tm[idx.saturating_sub(1)..(idx + 1).min(tm.len())].iter() {
                let d = (f_tm - f_te).abs();
                if d < best.0 {
                    best = (d, f_te, f_tm);
                }
            }
        }
        let fsr = self.fsr(PolMode::Te);
        Ok(ModeInterval {
            delta_hz: best.0,
            f_te_hz: best.1,
            f_tm_hz: best.2,
            fsr_hz: fsr,
            complementary_hz: fsr - best.0,
        })
    }
}
