//! Calibration dataset bundles: a directory of per-qubit CSV files tied
//! together by a TOML manifest, plus a synthesizer that builds a complete
//! bundle from known ground truth for round-trip testing.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calfit::{synth_s21_trace, synth_sa_trace, S21Trace, SaTrace};
use crate::cqed::{
    cavity_power, synth_stark_map, CavityQubitParams, QFactorMode, QubitState, StarkMap,
    StarkSynthOptions,
};
use crate::csvio;
use crate::error::{Error, Result};
use crate::rfchain::watts_to_dbm;

pub const MANIFEST_NAME: &str = "manifest.toml";

/// One qubit's files and tone settings inside a bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitEntry {
    pub label: String,
    pub s21_state0: String,
    pub s21_state1: String,
    pub stark_map: String,
    pub sa_trace: String,
    /// Generator power of the calibration tone behind the attenuation [dBm].
    pub tone_gen_power_dbm: f64,
}

/// Manifest tying the per-qubit files together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub qubits: Vec<QubitEntry>,
}

impl BundleManifest {
    pub fn validate(&self) -> Result<()> {
        if self.qubits.is_empty() {
            return Err(Error::invalid("bundle manifest lists no qubits"));
        }
        for (i, q) in self.qubits.iter().enumerate() {
            if q.label.is_empty() {
                return Err(Error::invalid(format!("qubit {i} has an empty label")));
            }
        }
        let mut labels: Vec<&str> = self.qubits.iter().map(|q| q.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.qubits.len() {
            return Err(Error::invalid("qubit labels must be unique"));
        }
        Ok(())
    }
}

/// Everything the calibration pipeline needs for one qubit, in memory.
#[derive(Debug, Clone)]
pub struct QubitDataset {
    pub label: String,
    pub trace_state0: S21Trace,
    pub trace_state1: S21Trace,
    pub stark_map: StarkMap,
    pub sa_trace: SaTrace,
    pub tone_gen_power_dbm: f64,
}

/// An opened bundle directory. Per-qubit files load lazily so one corrupt or
/// missing file only fails its own qubit.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub dir: PathBuf,
    pub manifest: BundleManifest,
}

impl Bundle {
    /// Read `manifest.toml` from `dir`.
    pub fn open(dir: &Path) -> Result<Bundle> {
        let path = dir.join(MANIFEST_NAME);
        let raw = fs::read_to_string(&path)
            .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
        let manifest: BundleManifest = toml::from_str(&raw)
            .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
        manifest.validate()?;
        Ok(Bundle { dir: dir.to_path_buf(), manifest })
    }

    /// Load one qubit's four files.
    pub fn load_dataset(&self, entry: &QubitEntry) -> Result<QubitDataset> {
        Ok(QubitDataset {
            label: entry.label.clone(),
            trace_state0: csvio::read_s21_csv(&self.dir.join(&entry.s21_state0))?,
            trace_state1: csvio::read_s21_csv(&self.dir.join(&entry.s21_state1))?,
            stark_map: csvio::read_stark_csv(&self.dir.join(&entry.stark_map))?,
            sa_trace: csvio::read_sa_csv(&self.dir.join(&entry.sa_trace))?,
            tone_gen_power_dbm: entry.tone_gen_power_dbm,
        })
    }
}

/// Ground truth and noise levels for [`synth_bundle`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthBundleOptions {
    /// Generator-plane minus cavity-plane attenuation [dB].
    pub attenuation_db: f64,
    /// True chip-to-analyzer gain [dB].
    pub g_sys_db: f64,
    /// True input-referred noise temperature [K].
    pub t_n_k: f64,
    /// Calibration-tone power at the chip [dBm]; the manifest records the
    /// generator value `tone + attenuation`.
    pub tone_on_chip_dbm: f64,
    /// Complex noise on the transmission traces.
    pub s21_noise: f64,
    /// Additive noise on the Stark-map response.
    pub stark_noise: f64,
    /// Per-bin jitter on the analyzer floor [dB].
    pub sa_jitter_db: f64,
    /// Analyzer resolution bandwidth [Hz].
    pub resolution_bw_hz: f64,
    pub seed: u64,
}

impl Default for SynthBundleOptions {
    fn default() -> Self {
        SynthBundleOptions {
            attenuation_db: -110.0,
            g_sys_db: 95.0,
            t_n_k: 1.72,
            tone_on_chip_dbm: -140.0,
            s21_noise: 0.005,
            stark_noise: 0.02,
            sa_jitter_db: 0.05,
            resolution_bw_hz: 30e3,
            seed: 0,
        }
    }
}

/// Uniformly spaced inclusive grid.
fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Synthesize one qubit's four files from ground truth. Returns the entry
/// for the manifest. Seeds derive from `opts.seed` and the qubit index so
/// qubits are independent but the whole bundle is reproducible.
fn synth_qubit(
    dir: &Path,
    index: usize,
    label: &str,
    p: &CavityQubitParams,
    opts: &SynthBundleOptions,
) -> Result<QubitEntry> {
    let seed = opts.seed.wrapping_add(1 + 1000 * index as u64);
    let fwhm = p.cavity_fwhm_hz();
    // Transmission window covering both dressed dips.
    let center = p.f_res_hz - p.chi_hz;
    let s21_freqs = linspace(center - 8.0 * fwhm, center + 8.0 * fwhm, 601);
    let trace0 = synth_s21_trace(p, QubitState::Ground, &s21_freqs, opts.s21_noise, seed)?;
    let trace1 = synth_s21_trace(p, QubitState::Excited, &s21_freqs, opts.s21_noise, seed + 1)?;

    // Stark map: generator powers spanning ~0.1..8 photons.
    let p_n1 = opts.attenuation_db
        + watts_to_dbm(cavity_power(p, 1.0, QFactorMode::CouplingOnly))?;
    let powers: Vec<f64> = (0..14).map(|i| p_n1 - 10.0 + i as f64 * 1.5).collect();
    let n_max = 10f64.powf((powers[powers.len() - 1] - p_n1) / 10.0);
    let lo = p.f_q_hz - 2.0 * p.chi_hz * (1.3 * n_max) - 4.0 * p.qubit_linewidth_hz;
    let hi = p.f_q_hz + 3.0 * p.qubit_linewidth_hz;
    let stark_freqs = linspace(lo, hi, 501);
    let map = synth_stark_map(
        p,
        opts.attenuation_db,
        &powers,
        &stark_freqs,
        opts.stark_noise,
        &StarkSynthOptions { seed: seed + 2, ..Default::default() },
    )?;

    // Analyzer trace: tone at the cavity with the true gain; flat floor set
    // by the true noise temperature, read 10 MHz off the tone.
    let peak_dbm = opts.tone_on_chip_dbm + opts.g_sys_db;
    let floor_dbm = crate::calfit::floor_dbm_for_noise_temp(
        opts.t_n_k,
        opts.g_sys_db,
        opts.resolution_bw_hz,
    )?;
    let sa_freqs = linspace(p.f_res_hz - 20e6, p.f_res_hz + 20e6, 801);
    let sa = synth_sa_trace(&sa_freqs, p.f_res_hz, peak_dbm, floor_dbm, opts.sa_jitter_db, seed + 3)?;

    let entry = QubitEntry {
        label: label.to_string(),
        s21_state0: format!("{label}_s21_state0.csv"),
        s21_state1: format!("{label}_s21_state1.csv"),
        stark_map: format!("{label}_stark_map.csv"),
        sa_trace: format!("{label}_sa_trace.csv"),
        tone_gen_power_dbm: opts.tone_on_chip_dbm + opts.attenuation_db,
    };
    csvio::write_s21_csv(&dir.join(&entry.s21_state0), &trace0)?;
    csvio::write_s21_csv(&dir.join(&entry.s21_state1), &trace1)?;
    csvio::write_stark_csv(&dir.join(&entry.stark_map), &map)?;
    csvio::write_sa_csv(&dir.join(&entry.sa_trace), &sa)?;
    Ok(entry)
}

/// Build a complete bundle (manifest plus 4 CSVs per qubit) under `dir`.
/// Deterministic: the same inputs produce byte-identical files.
pub fn synth_bundle(
    dir: &Path,
    qubits: &[(String, CavityQubitParams)],
    opts: &SynthBundleOptions,
) -> Result<Bundle> {
    if qubits.is_empty() {
        return Err(Error::invalid("need at least one qubit to synthesize"));
    }
    fs::create_dir_all(dir).map_err(|e| Error::data(format!("{}: {e}", dir.display())))?;
    let mut entries = Vec::with_capacity(qubits.len());
    for (i, (label, p)) in qubits.iter().enumerate() {
        p.validate()?;
        entries.push(synth_qubit(dir, i, label, p, opts)?);
    }
    let manifest = BundleManifest { qubits: entries };
    manifest.validate()?;
    let toml_str = toml::to_string_pretty(&manifest)
        .map_err(|e| Error::invalid(format!("manifest serialization: {e}")))?;
    fs::write(dir.join(MANIFEST_NAME), toml_str)
        .map_err(|e| Error::data(format!("{}: {e}", dir.join(MANIFEST_NAME).display())))?;
    Bundle::open(dir)
}
