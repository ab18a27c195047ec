//! Models and calibration fits for amplified dispersive-readout chains.
//!
//! The crate covers the full loop of a cryogenic readout experiment:
//!
//! - [`rfchain`]: cascaded gain/noise budgets (Friis), power/quanta units,
//!   and chain-vs-chain comparisons.
//! - [`twline`]: periodically loaded traveling-wave line — impedance, Bloch
//!   dispersion with stopbands, phase matching, and parametric gain profiles.
//! - [`cqed`]: cavity–qubit forward model — notch transmission, the
//!   photon-number/power conversion, ac Stark shift, synthetic Stark maps.
//! - [`calfit`]: the calibration pipeline — resonator fits, dispersive-shift
//!   extraction, Stark power calibration, system gain, and added noise with
//!   bootstrapped uncertainties.
//! - [`shots`]: single-shot readout Monte Carlo and fidelity/SNR analysis.
//!
//! Supporting modules handle configuration ([`config`]), dataset bundles
//! ([`bundle`]), CSV serialization ([`csvio`]), and run reports ([`report`]).

pub mod bundle;
pub mod calfit;
pub mod config;
pub mod constants;
pub mod cqed;
pub mod csvio;
pub mod error;
pub mod report;
pub mod rfchain;
pub mod shots;
pub mod twline;

pub use constants::PhysicalConstants;
pub use error::{Error, FitError, Result};
