//! Polarization-diverse microring model and the microwave-photonic links
//! built on it: single-sideband generation, dual-passband RF equalization,
//! and parameter extraction from measured traces.

// `!(x > 0.0)` is used on purpose: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod error;
pub mod fit;
pub mod jones;
pub mod link;
pub mod modulation;
pub mod ring;
pub mod units;

pub(crate) mod roots;

pub use error::{Error, Result};
pub use jones::{JonesMatrix, JonesVector, PolarizerAngle};
pub use modulation::{ModulatorDrive, OpticalSpectrum, SpectralLine};
pub use ring::{
    Coupling, CouplingSpec, PerPol, PhysicalRingParams, PolMode, RingModel, SpectralRingParams,
};
