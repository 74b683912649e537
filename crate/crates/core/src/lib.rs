//! Photon-number statistics of photon-subtracted two-mode squeezed vacuum.
//!
//! The crate is organised bottom-up:
//!
//! * [`state`] builds the truncated Fock amplitudes of `a_s^{l1} a_i^{l2} |z>`.
//! * [`detector`] holds the lossy, dark-counting photon-number-resolving
//!   detector model and its POVM.
//! * [`pnd`] turns amplitudes into ideal and detected joint distributions;
//!   [`oracle`] evaluates the same quantity through the P-function
//!   derivative formula for small instances.
//! * [`witness`] computes factorial moments, the Agarwal parameter, the
//!   second-order matrix of moments and marginal fits.
//! * [`mc`] simulates the heralded tap-and-detect protocol shot by shot.
//! * [`estimation`] fits `(z, eta, nu)` to count matrices by maximum
//!   likelihood with bootstrap errors.
//! * [`tes`] converts transition-edge-sensor traces into photon numbers.

pub mod config;
pub mod detector;
pub mod error;
pub mod estimation;
pub mod mc;
pub mod oracle;
pub mod pnd;
pub mod state;
pub mod tes;
pub mod witness;

mod math;

pub use config::Config;
pub use detector::{detector_povm, DetectorModel, Povm};
pub use error::{Error, Result};
pub use pnd::{detected_joint_pnd, detected_joint_pnd_auto, ideal_joint_pnd, JointPnd};
pub use state::{
    build_subtracted_state, squeezing_from_pump, FockAmplitudes, PumpParams, SqueezingSpec,
    SubtractionSpec,
};
pub use witness::{Mode, WitnessReport};
