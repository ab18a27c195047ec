//! Calibration and fitting: resonator spectroscopy fits, the Stark-shift
//! absolute power calibration, analyzer-based gain and noise extraction,
//! and the per-qubit pipeline that chains them.
//!
//! The flow mirrors the bench procedure:
//!
//! 1. [`fit_resonator`] / [`extract_chi`] — complex transmission traces for
//!    the two qubit states give the resonator parameters and the dispersive
//!    shift `χ`.
//! 2. [`calibrate_stark`] — a two-tone spectroscopy map (qubit line versus
//!    readout generator power) locates the power where the ac Stark shift
//!    equals `2χ`, i.e. one mean cavity photon, which fixes the absolute
//!    attenuation between generator and chip.
//! 3. [`extract_system_gain`] / [`extract_added_noise`] — with the input
//!    line calibrated, a tone of known on-chip power read on the spectrum
//!    analyzer gives the output gain, and the measured floor referred back
//!    to the chip gives the added noise in quanta.
//!
//! [`run_pipeline`] runs all three stages per qubit over a dataset bundle;
//! [`compare_reports`] pairs two runs (e.g. amplifier on/off) and predicts
//! the readout signal-to-noise ratio change from the noise ratio.
//!
//! Every fit bottoms out in the small Levenberg–Marquardt solver in
//! [`lm`], which also supplies the parameter covariances the bootstrap
//! error bars build on.

pub mod lm;
mod noise;
mod pipeline;
mod resonator;
mod stark;

pub use noise::{
    extract_added_noise, extract_system_gain, floor_dbm_for_added_quanta,
    floor_dbm_for_noise_temp, noise_floor_at_detuning, synth_sa_trace, AddedNoise,
    NoiseMeasurement, NoiseOptions, SaTrace, SystemGain,
};
pub use pipeline::{
    compare_reports, run_pipeline, FailureKind, PairedNoise, PipelineConfig, PipelineReport,
    QubitCalibration, QubitFailure, QubitOutcome, Stage,
};
pub use resonator::{
    extract_chi, fit_resonator, synth_s21_trace, ChiEstimate, ResonatorFit, S21Trace,
};
pub use stark::{calibrate_stark, ShiftPoint, StarkCalOptions, StarkCalibration};
