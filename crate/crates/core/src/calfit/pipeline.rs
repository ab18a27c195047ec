//! End-to-end calibration pipeline: raw per-qubit datasets in, system gain
//! and added noise per qubit out. Each qubit runs independently (in
//! parallel), and a failure in one qubit's data is reported alongside the
//! other qubits' results instead of aborting the run.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bundle::{Bundle, QubitDataset};
use crate::calfit::noise::{
    extract_added_noise, extract_system_gain, noise_floor_at_detuning, AddedNoise,
    NoiseMeasurement, NoiseOptions, SystemGain,
};
use crate::calfit::resonator::{extract_chi, ResonatorFit};
use crate::calfit::stark::{calibrate_stark, StarkCalOptions, StarkCalibration};
use crate::cqed::QFactorMode;
use crate::error::{Error, Result};
use crate::rfchain::SystemNoiseResult;

/// Knobs shared by every qubit in a pipeline run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Q-factor convention for the photon-power conversion.
    pub q_mode: QFactorMode,
    /// Bootstrap resamples for the attenuation and noise error bars.
    pub resamples: usize,
    /// Base seed; qubit `i` uses `seed + i` so results are order-independent.
    pub seed: u64,
    /// Analyzer resolution bandwidth [Hz].
    pub resolution_bw_hz: f64,
    /// Offset from the tone at which the floor is read [Hz].
    pub detuning_hz: f64,
    /// Width of the floor-averaging window on each side [Hz].
    pub floor_window_hz: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            q_mode: QFactorMode::CouplingOnly,
            resamples: 1000,
            seed: 0,
            resolution_bw_hz: 30e3,
            detuning_hz: 10e6,
            floor_window_hz: 1e6,
        }
    }
}

/// Full calibration chain for one qubit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QubitCalibration {
    pub label: String,
    pub fit_state0: ResonatorFit,
    pub fit_state1: ResonatorFit,
    pub chi_hz: f64,
    pub chi_sigma_hz: f64,
    pub stark: StarkCalibration,
    pub gain: SystemGain,
    pub noise: NoiseMeasurement,
    pub added: AddedNoise,
}

impl QubitCalibration {
    /// Repackage as the chain-level summary used for comparisons. The
    /// measured sigmas carry over; gain enters with the calibration
    /// uncertainty attached.
    pub fn to_system_noise(&self) -> Result<SystemNoiseResult> {
        let mut sys = SystemNoiseResult::from_added_quanta(
            self.fit_state0.f_res_hz,
            self.gain.g_sys_db,
            self.added.n_added,
        )?;
        sys.g_sys_sigma_db = self.gain.g_sys_sigma_db;
        sys.n_added_sigma = self.added.sigma;
        sys.t_n_sigma_k = self.added.t_n_sigma_k;
        Ok(sys)
    }
}

/// Which stage of the pipeline a qubit failed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Load,
    ResonatorFit,
    StarkCalibration,
    GainExtraction,
    NoiseExtraction,
}

/// Coarse error class, mirrored from [`Error`] for serialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Config,
    Data,
    Fit,
}

impl From<&Error> for FailureKind {
    fn from(e: &Error) -> Self {
        match e {
            Error::Invalid(_) => FailureKind::Config,
            Error::Data(_) => FailureKind::Data,
            Error::Fit(_) => FailureKind::Fit,
        }
    }
}

/// A per-qubit failure with enough context to locate the bad input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QubitFailure {
    pub label: String,
    pub stage: Stage,
    pub kind: FailureKind,
    pub message: String,
}

/// Either a completed calibration or a tagged failure.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitOutcome {
    Calibrated(Box<QubitCalibration>),
    Failed(QubitFailure),
}

impl QubitOutcome {
    pub fn label(&self) -> &str {
        match self {
            QubitOutcome::Calibrated(c) => &c.label,
            QubitOutcome::Failed(f) => &f.label,
        }
    }

    pub fn as_calibrated(&self) -> Option<&QubitCalibration> {
        match self {
            QubitOutcome::Calibrated(c) => Some(c),
            QubitOutcome::Failed(_) => None,
        }
    }
}

/// Results for every qubit in the bundle, in manifest order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineReport {
    pub config: PipelineConfig,
    pub outcomes: Vec<QubitOutcome>,
}

impl PipelineReport {
    pub fn calibrated(&self) -> impl Iterator<Item = &QubitCalibration> {
        self.outcomes.iter().filter_map(|o| o.as_calibrated())
    }

    pub fn failures(&self) -> impl Iterator<Item = &QubitFailure> {
        self.outcomes.iter().filter_map(|o| match o {
            QubitOutcome::Failed(f) => Some(f),
            QubitOutcome::Calibrated(_) => None,
        })
    }
}

/// Run the full chain on one loaded dataset.
fn calibrate_qubit(
    ds: &QubitDataset,
    cfg: &PipelineConfig,
    seed: u64,
) -> std::result::Result<QubitCalibration, (Stage, Error)> {
    let chi =
        extract_chi(&ds.trace_state0, &ds.trace_state1).map_err(|e| (Stage::ResonatorFit, e))?;

    let stark_opts = StarkCalOptions {
        q_mode: cfg.q_mode,
        resamples: cfg.resamples,
        seed,
        chi_sigma_hz: chi.chi_sigma_hz,
    };
    let stark = calibrate_stark(&ds.stark_map, &chi.fit_state0, chi.chi_hz, &stark_opts)
        .map_err(|e| (Stage::StarkCalibration, e))?;

    let gain = extract_system_gain(&ds.sa_trace, &stark, ds.tone_gen_power_dbm)
        .map_err(|e| (Stage::GainExtraction, e))?;
    let (floor_dbm, floor_sigma_db) = noise_floor_at_detuning(
        &ds.sa_trace,
        gain.tone_freq_hz,
        cfg.detuning_hz,
        cfg.floor_window_hz,
    )
    .map_err(|e| (Stage::NoiseExtraction, e))?;
    let mut noise =
        NoiseMeasurement::new(gain.tone_freq_hz, gain.sa_tone_power_dbm, floor_dbm, gain.g_sys_db);
    noise.resolution_bw_hz = cfg.resolution_bw_hz;
    noise.detuning_hz = cfg.detuning_hz;
    noise.g_sys_sigma_db = gain.g_sys_sigma_db;
    noise.floor_sigma_db = floor_sigma_db;
    let added = extract_added_noise(&noise, &NoiseOptions { resamples: cfg.resamples, seed })
        .map_err(|e| (Stage::NoiseExtraction, e))?;

    Ok(QubitCalibration {
        label: ds.label.clone(),
        fit_state0: chi.fit_state0,
        fit_state1: chi.fit_state1,
        chi_hz: chi.chi_hz,
        chi_sigma_hz: chi.chi_sigma_hz,
        stark,
        gain,
        noise,
        added,
    })
}

/// Calibrate every qubit in the bundle. Qubits run in parallel; outcomes
/// come back in manifest order with per-qubit seeds derived from
/// `cfg.seed`, so the report is independent of thread scheduling.
pub fn run_pipeline(bundle: &Bundle, cfg: &PipelineConfig) -> Result<PipelineReport> {
    if cfg.resamples == 0 {
        return Err(Error::invalid("resamples must be at least 1"));
    }
    let outcomes: Vec<QubitOutcome> = bundle
        .manifest
        .qubits
        .par_iter()
        .enumerate()
        .map(|(i, entry)| {
            let seed = cfg.seed.wrapping_add(i as u64);
            let result = bundle
                .load_dataset(entry)
                .map_err(|e| (Stage::Load, e))
                .and_then(|ds| calibrate_qubit(&ds, cfg, seed));
            match result {
                Ok(cal) => QubitOutcome::Calibrated(Box::new(cal)),
                Err((stage, e)) => QubitOutcome::Failed(QubitFailure {
                    label: entry.label.clone(),
                    stage,
                    kind: FailureKind::from(&e),
                    message: e.to_string(),
                }),
            }
        })
        .collect();
    Ok(PipelineReport { config: *cfg, outcomes })
}

/// Noise comparison for one qubit present in two runs (e.g. amplifier on
/// versus off).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairedNoise {
    pub label: String,
    pub n_added_a: f64,
    pub n_added_b: f64,
    /// Noise-temperature ratio b/a, equal to the total-quanta ratio
    /// (N + 1/2) because both sides sit at the same frequency.
    pub t_n_ratio: f64,
    /// Expected amplitude signal-to-noise improvement, the square root of
    /// the noise-temperature ratio.
    pub predicted_snr_ratio: f64,
}

/// Pair up qubits by label across two reports and compare their noise.
/// Qubits missing or failed on either side are skipped.
pub fn compare_reports(a: &PipelineReport, b: &PipelineReport) -> Vec<PairedNoise> {
    let mut out = Vec::new();
    for cal_a in a.calibrated() {
        let Some(cal_b) = b.calibrated().find(|c| c.label == cal_a.label) else {
            continue;
        };
        let t_n_ratio = (cal_b.added.n_added + 0.5) / (cal_a.added.n_added + 0.5);
        out.push(PairedNoise {
            label: cal_a.label.clone(),
            n_added_a: cal_a.added.n_added,
            n_added_b: cal_b.added.n_added,
            t_n_ratio,
            predicted_snr_ratio: t_n_ratio.sqrt(),
        });
    }
    out
}
