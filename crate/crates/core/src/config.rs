//! Run configuration: one TOML file describing the qubit set, the synthetic
//! ground truth, calibration-pipeline knobs, named amplifier chains, the
//! traveling-wave line, and shot-simulation settings. [`RunConfig::demo`]
//! builds a complete eight-qubit example so every command works without a
//! config file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bundle::SynthBundleOptions;
use crate::calfit::PipelineConfig;
use crate::cqed::CavityQubitParams;
use crate::error::{Error, Result};
use crate::rfchain::{ChainComponent, ChainSpec, GainCurve};
use crate::shots::ShotOptions;
use crate::twline::{CellSpec, LossRippleModel, Mixing, PumpSpec, SupercellSpec};

/// One qubit row, in the units usually quoted on a wiring diagram
/// (resonator and qubit frequencies in GHz, dispersive shift in kHz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitConfig {
    pub label: String,
    pub f_res_ghz: f64,
    pub q_c: f64,
    pub chi_khz: f64,
    pub f_q_ghz: f64,
    /// Internal quality factor; omit for a lossless resonator.
    #[serde(default)]
    pub q_int: Option<f64>,
    #[serde(default = "default_linewidth_hz")]
    pub qubit_linewidth_hz: f64,
}

fn default_linewidth_hz() -> f64 {
    300e3
}

impl QubitConfig {
    pub fn to_params(&self) -> CavityQubitParams {
        CavityQubitParams {
            f_res_hz: self.f_res_ghz * 1e9,
            q_c: self.q_c,
            q_int: self.q_int.unwrap_or(f64::INFINITY),
            chi_hz: self.chi_khz * 1e3,
            f_q_hz: self.f_q_ghz * 1e9,
            qubit_linewidth_hz: self.qubit_linewidth_hz,
            asymmetry_rad: 0.0,
        }
    }
}

/// Traveling-wave line settings for the `twline` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwlineConfig {
    pub supercell: SupercellSpec,
    pub pump: PumpSpec,
    #[serde(default)]
    pub loss: LossRippleModel,
    /// Sweep range and resolution for dispersion and gain outputs.
    pub f_start_hz: f64,
    pub f_stop_hz: f64,
    pub points: usize,
}

impl TwlineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_start_hz > 0.0) || self.f_stop_hz <= self.f_start_hz {
            return Err(Error::invalid(format!(
                "sweep must satisfy 0 < start < stop, got {} .. {}",
                self.f_start_hz, self.f_stop_hz
            )));
        }
        if self.points < 2 {
            return Err(Error::invalid("sweep needs at least two points"));
        }
        Ok(())
    }

    pub fn sweep_freqs(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                self.f_start_hz + (self.f_stop_hz - self.f_start_hz) * i as f64 / (n - 1) as f64
            })
            .collect()
    }
}

/// Shot-simulation settings for the `shots` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotsConfig {
    /// Which qubit row to read out.
    pub qubit: String,
    /// Which named chain supplies gain and added noise.
    pub chain: String,
    pub n_shots: usize,
    pub integration_time_s: f64,
    #[serde(default)]
    pub options: ShotOptions,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
}

fn default_bins() -> usize {
    81
}

/// Everything a run needs, with named chains so commands can refer to them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub qubits: Vec<QubitConfig>,
    pub synth: SynthBundleOptions,
    pub pipeline: PipelineConfig,
    pub chains: BTreeMap<String, ChainSpec>,
    pub twline: TwlineConfig,
    pub shots: ShotsConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let raw = fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&raw)
            .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::invalid(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubits.is_empty() {
            return Err(Error::invalid("config lists no qubits"));
        }
        let mut labels: Vec<&str> = self.qubits.iter().map(|q| q.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.qubits.len() {
            return Err(Error::invalid("qubit labels must be unique"));
        }
        for q in &self.qubits {
            q.to_params().validate()?;
        }
        for (name, chain) in &self.chains {
            chain
                .validate()
                .map_err(|e| Error::invalid(format!("chain '{name}': {e}")))?;
        }
        self.twline.validate()?;
        if !self.qubits.iter().any(|q| q.label == self.shots.qubit) {
            return Err(Error::invalid(format!(
                "shots.qubit '{}' not in the qubit table",
                self.shots.qubit
            )));
        }
        if !self.chains.contains_key(&self.shots.chain) {
            return Err(Error::invalid(format!(
                "shots.chain '{}' not in the chain table",
                self.shots.chain
            )));
        }
        Ok(())
    }

    pub fn qubit(&self, label: &str) -> Result<&QubitConfig> {
        self.qubits
            .iter()
            .find(|q| q.label == label)
            .ok_or_else(|| Error::invalid(format!("qubit '{label}' not in the qubit table")))
    }

    pub fn chain(&self, name: &str) -> Result<&ChainSpec> {
        self.chains
            .get(name)
            .ok_or_else(|| Error::invalid(format!("chain '{name}' not in the chain table")))
    }

    pub fn qubit_params(&self) -> Vec<(String, CavityQubitParams)> {
        self.qubits.iter().map(|q| (q.label.clone(), q.to_params())).collect()
    }

    /// Complete eight-qubit demo: a full readout band of resonators, three
    /// output chains (quantum-limited amplifier on, amplifier off, and the
    /// conventional semiconductor-first chain), and a periodically loaded
    /// traveling-wave line.
    pub fn demo() -> RunConfig {
        let rows: [(&str, f64, f64, f64, f64); 8] = [
            ("q1", 7.218, 7136.0, 135.0, 4.730),
            ("q2", 7.048, 4216.0, 140.0, 4.583),
            ("q3", 6.879, 7842.0, 159.0, 4.553),
            ("q4", 6.707, 6603.0, 95.0, 3.399),
            ("q5", 6.522, 7843.0, 153.0, 4.288),
            ("q6", 6.299, 9642.0, 143.0, 4.066),
            ("q7", 5.903, 5814.0, 156.0, 4.015),
            ("q8", 5.745, 11290.0, 265.0, 4.411),
        ];
        let qubits = rows
            .iter()
            .map(|&(label, f_res_ghz, q_c, chi_khz, f_q_ghz)| QubitConfig {
                label: label.to_string(),
                f_res_ghz,
                q_c,
                chi_khz,
                f_q_ghz,
                q_int: None,
                qubit_linewidth_hz: default_linewidth_hz(),
            })
            .collect();

        let band = [4.0e9, 8.5e9];
        let backend = |first: Vec<ChainComponent>| -> ChainSpec {
            let mut components = first;
            components.extend([
                ChainComponent::passive("isolators", GainCurve::flat(-1.0), 0.03),
                ChainComponent::amplifier("cryo semiconductor", GainCurve::flat(40.0), 2.2),
                ChainComponent::attenuator("output cabling", GainCurve::flat(-3.0), 60.0),
                ChainComponent::amplifier("room temperature", GainCurve::flat(40.0), 90.0),
            ]);
            ChainSpec { components, reference_plane: 0, band_hz: band }
        };

        let mut chains = BTreeMap::new();
        // Quantum-limited first stage: ~17 dB with near-vacuum added noise.
        chains.insert(
            "amp_on".to_string(),
            backend(vec![ChainComponent::amplifier(
                "traveling-wave amplifier",
                GainCurve::flat(17.0),
                0.45,
            )]),
        );
        // Same line with the pump off: a cold attenuator whose loss grows
        // with frequency (0.5–1 dB/GHz across the band).
        chains.insert(
            "amp_off".to_string(),
            backend(vec![ChainComponent::attenuator(
                "traveling-wave amplifier (pump off)",
                GainCurve::from_points(vec![(4.0e9, -3.0), (8.5e9, -6.375)])
                    .expect("static demo curve"),
                0.03,
            )]),
        );
        // No first stage at all: the semiconductor amplifier sets the noise.
        chains.insert("hemt_only".to_string(), backend(Vec::new()));

        // Loaded line: long 50 Ω cells with short high-impedance cells every
        // period, giving a stopband near 11 GHz for pumping above the band.
        let twline = TwlineConfig {
            supercell: SupercellSpec {
                n_unloaded: 30,
                n_loaded: 4,
                unloaded: CellSpec { length_m: 2e-6, l_per_m: 35e-6, c_per_m: 14e-9 },
                loaded: CellSpec { length_m: 2e-6, l_per_m: 35e-6, c_per_m: 35e-6 / 6400.0 },
                n_supercells: 1200,
            },
            pump: PumpSpec { f_pump_hz: 8.9e9, strength_per_m: 33.0, mixing: Mixing::ThreeWave },
            loss: LossRippleModel { ripple_amplitude_db: 0.4, ..Default::default() },
            f_start_hz: 4.0e9,
            f_stop_hz: 8.5e9,
            points: 901,
        };

        let shots = ShotsConfig {
            qubit: "q1".to_string(),
            chain: "amp_on".to_string(),
            n_shots: 20_000,
            integration_time_s: 1e-6,
            options: ShotOptions::default(),
            histogram_bins: default_bins(),
        };

        RunConfig {
            qubits,
            synth: SynthBundleOptions::default(),
            pipeline: PipelineConfig::default(),
            chains,
            twline,
            shots,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_config_is_valid() {
        let cfg = RunConfig::demo();
        cfg.validate().unwrap();
        assert_eq!(cfg.qubits.len(), 8);
        assert_eq!(cfg.chains.len(), 3);
        // Rows keep the band ordering: resonators descend in frequency.
        for w in cfg.qubits.windows(2) {
            assert!(w[0].f_res_ghz > w[1].f_res_ghz);
        }
    }

    #[test]
    fn demo_roundtrips_through_toml() {
        let cfg = RunConfig::demo();
        let text = cfg.to_toml_string().unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn load_reports_path_and_parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        let missing = RunConfig::load(&path).unwrap_err();
        assert!(matches!(missing, Error::Invalid(_)));
        assert!(missing.to_string().contains("run.toml"));

        std::fs::write(&path, "qubits = 3").unwrap();
        let bad = RunConfig::load(&path).unwrap_err();
        assert!(matches!(bad, Error::Invalid(_)));
    }

    #[test]
    fn validation_catches_dangling_references() {
        let mut cfg = RunConfig::demo();
        cfg.shots.qubit = "q99".to_string();
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::demo();
        cfg.shots.chain = "missing".to_string();
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::demo();
        cfg.qubits[1].label = cfg.qubits[0].label.clone();
        assert!(cfg.validate().is_err());
    }
}
