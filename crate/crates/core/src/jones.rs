//! Jones calculus in the ring's (TE, TM) eigenbasis.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ring::{PolMode, RingModel};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Two-component complex field `[e_te, e_tm]` in sqrt(W).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JonesVector {
    pub te: Complex64,
    pub tm: Complex64,
}

impl JonesVector {
    pub fn new(te: Complex64, tm: Complex64) -> Self {
        Self { te, tm }
    }

    /// Linear polarization at `angle_from_te` carrying `power` watts.
    pub fn linear(power: f64, angle_from_te: f64) -> Self {
        let amp = power.sqrt();
        Self {
            te: Complex64::new(amp * angle_from_te.cos(), 0.0),
            tm: Complex64::new(amp * angle_from_te.sin(), 0.0),
        }
    }

    pub fn component(&self, pol: PolMode) -> Complex64 {
        match pol {
            PolMode::Te => self.te,
            PolMode::Tm => self.tm,
        }
    }

    pub fn power(&self) -> f64 {
        self.te.norm_sqr() + self.tm.norm_sqr()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            te: self.te * s,
            tm: self.tm * s,
        }
    }
}

impl Add for JonesVector {
    type Output = JonesVector;

    fn add(self, rhs: JonesVector) -> JonesVector {
        JonesVector {
            te: self.te + rhs.te,
            tm: self.tm + rhs.tm,
        }
    }
}

/// 2x2 complex operator, row-major in the (TE, TM) basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix(pub [[Complex64; 2]; 2]);

impl JonesMatrix {
    pub const IDENTITY: JonesMatrix = JonesMatrix([
        [Complex64::new(1.0, 0.0), ZERO],
        [ZERO, Complex64::new(1.0, 0.0)],
    ]);

    pub fn diagonal(te: Complex64, tm: Complex64) -> Self {
        JonesMatrix([[te, ZERO], [ZERO, tm]])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        JonesMatrix([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &JonesMatrix) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        d
    }
}

impl Mul for JonesMatrix {
    type Output = JonesMatrix;

    fn mul(self, rhs: JonesMatrix) -> JonesMatrix {
        let (a, b) = (&self.0, &rhs.0);
        let mut c = [[ZERO; 2]; 2];
        for (i, row) in c.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        JonesMatrix(c)
    }
}

impl Mul<JonesVector> for JonesMatrix {
    type Output = JonesVector;

    fn mul(self, v: JonesVector) -> JonesVector {
        let m = &self.0;
        JonesVector {
            te: m[0][0] * v.te + m[0][1] * v.tm,
            tm: m[1][0] * v.te + m[1][1] * v.tm,
        }
    }
}

/// Polarizer transmission-axis angle, measured from the TM axis and
/// normalized into `[0, pi)`.
///
/// Angles quoted from the TE axis convert as `theta_tm = 90deg - theta_te`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PolarizerAngle(f64);

impl PolarizerAngle {
    pub fn from_radians(theta: f64) -> Self {
        PolarizerAngle(theta.rem_euclid(PI))
    }

    pub fn from_degrees(deg: f64) -> Self {
        Self::from_radians(deg.to_radians())
    }

    /// Polarizer angle for an axis quoted from the TE axis.
    pub fn from_te_axis_degrees(deg: f64) -> Self {
        Self::from_degrees(90.0 - deg)
    }

    pub fn radians(&self) -> f64 {
        self.0
    }

    pub fn degrees(&self) -> f64 {
        self.0.to_degrees()
    }

    /// Unit vector of the transmission axis, `(sin theta, cos theta)` in (TE, TM).
    pub fn axis(&self) -> (f64, f64) {
        self.0.sin_cos()
    }
}

/// `[[sin^2, cos sin], [sin cos, cos^2]]`
pub fn polarizer_matrix(theta: PolarizerAngle) -> JonesMatrix {
    let (s, c) = theta.0.sin_cos();
    let re = |x: f64| Complex64::new(x, 0.0);
    JonesMatrix([[re(s * s), re(c * s)], [re(s * c), re(c * c)]])
}

/// `diag(D_TE(f), D_TM(f))`
pub fn ring_drop_operator(ring: &RingModel, f: f64) -> JonesMatrix {
    JonesMatrix::diagonal(
        ring.drop_transfer(PolMode::Te, f),
        ring.drop_transfer(PolMode::Tm, f),
    )
}

/// `diag(T_TE(f), T_TM(f))`
pub fn ring_through_operator(ring: &RingModel, f: f64) -> JonesMatrix {
    JonesMatrix::diagonal(
        ring.through_transfer(PolMode::Te, f),
        ring.through_transfer(PolMode::Tm, f),
    )
}

/// Intensity behind the polarizer for a 45-degree launch of amplitude `e0`
/// through a diagonal drop operator `diag(d_te, d_tm)`.
pub fn output_intensity_closed_form(
    theta: PolarizerAngle,
    d_te: Complex64,
    d_tm: Complex64,
    e0: f64,
) -> f64 {
    let (s, c) = theta.0.sin_cos();
    let cross = d_te.norm() * d_tm.norm() * (2.0 * theta.0).sin() * (d_te.arg() - d_tm.arg()).cos();
    0.5 * e0 * e0 * (d_te.norm_sqr() * s * s + d_tm.norm_sqr() * c * c + cross)
}

/// Carrier-to-sideband ratio law `cot^2 theta` (linear).
pub fn ocsr_theory(theta: PolarizerAngle) -> Result<f64> {
    let (s, c) = theta.0.sin_cos();
    if s == 0.0 {
        return Err(Error::CotangentDivergence);
    }
    Ok((c / s).powi(2))
}
