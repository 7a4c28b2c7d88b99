//! Scenario configuration file (TOML). Field names carry their units.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::Window;
use crate::error::{Error, Result};
use crate::protocol::{Protocol, ProtocolConfig};
use crate::pulse_gates::{EvolutionMode, Xy8Spec};
use crate::readout::{NoiseMode, ReadoutParams, SCHEMA_VERSION};
use crate::signal_model::{SignalConfig, SignalMode};
use crate::spin_system::{mhz, SpinSystemParams};

fn schema() -> u32 {
    SCHEMA_VERSION
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn one_u32() -> u32 {
    1
}
fn one_f64() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpinSection {
    pub d_mhz: f64,
    pub a_par_mhz: f64,
    pub p_quad_mhz: f64,
    pub gamma_nv_mhz_per_gauss: f64,
    pub gamma_n_khz_per_gauss: f64,
    pub b_z_gauss: f64,
}

impl Default for SpinSection {
    fn default() -> Self {
        Self {
            d_mhz: 2870.0,
            a_par_mhz: -2.166,
            p_quad_mhz: -4.945,
            gamma_nv_mhz_per_gauss: 2.803,
            gamma_n_khz_per_gauss: 0.308,
            b_z_gauss: 2043.763,
        }
    }
}

impl SpinSection {
    pub fn to_params(&self) -> SpinSystemParams {
        SpinSystemParams {
            d: mhz(self.d_mhz),
            a_par: mhz(self.a_par_mhz),
            p_quad: mhz(self.p_quad_mhz),
            gamma_nv: mhz(self.gamma_nv_mhz_per_gauss),
            gamma_n: mhz(self.gamma_n_khz_per_gauss * 1e-3),
            b_z: self.b_z_gauss,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    pub mode: SignalMode,
    pub nu_s_hz: f64,
    /// Envelope (classical) or rms field (statistical).
    pub b_amp_gauss: f64,
    #[serde(default = "one_u32")]
    pub n_sensors: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub kind: Protocol,
    pub m: usize,
    pub n_runs: usize,
    pub t_us: f64,
    pub t_init_us: f64,
    #[serde(default = "one_u32")]
    pub xy8_repeats: u32,
    /// Defaults to the resonant spacing 1/(2 nu_s).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_ns: Option<f64>,
    #[serde(default = "default_t_laser")]
    pub t_laser_ns: f64,
    /// Absent means no free relaxation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1_nuc_s: Option<f64>,
    /// Absent means no laser-induced depolarization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1_nuc_laser_us: Option<f64>,
    #[serde(default = "one_f64")]
    pub init_fidelity: f64,
    #[serde(default)]
    pub t_wait_us: f64,
    #[serde(default = "one_u32")]
    pub lasers_per_acquisition: u32,
}

fn default_t_laser() -> f64 {
    200.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutSection {
    pub eta0: f64,
    pub eta1: f64,
    #[serde(default)]
    pub noise: NoiseMode,
}

impl Default for ReadoutSection {
    fn default() -> Self {
        let p = ReadoutParams::default();
        Self {
            eta0: p.eta0,
            eta1: p.eta1,
            noise: p.noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub pad_factor: usize,
    pub window: Window,
    /// Lorentzian fit half-range in unpadded bins.
    pub fit_half_width_bins: f64,
    pub compare_repetitions: usize,
    pub compare_n_list: Vec<usize>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            pad_factor: 4,
            window: Window::Rectangular,
            fit_half_width_bins: crate::analysis::fits::DEFAULT_FIT_HALF_WIDTH_BINS,
            compare_repetitions: 64,
            compare_n_list: vec![1, 4, 16, 64],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateSection {
    /// Selective Rabi frequency as a fraction of |A|.
    pub selective_rabi_fraction: f64,
}

impl Default for GateSection {
    fn default() -> Self {
        Self {
            selective_rabi_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "schema")]
    pub schema_version: u32,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses all cores.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub mode: EvolutionMode,
    #[serde(default)]
    pub spin: SpinSection,
    pub signal: SignalSection,
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub readout: ReadoutSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub gates: GateSection,
}

fn field(path: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { reason, name } => Error::Config(format!("{path}.{name}: {reason}")),
        other => Error::Config(format!("{path}: {other}")),
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaMismatch {
                found: self.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        self.spin.to_params().validate().map_err(|e| field("spin", e))?;
        self.signal_config().validate().map_err(|e| field("signal", e))?;
        self.protocol_config()?.validate().map_err(|e| field("protocol", e))?;
        self.readout_params().validate().map_err(|e| field("readout", e))?;
        let a = &self.analysis;
        if a.pad_factor == 0 {
            return Err(Error::Config("analysis.pad_factor: must be >= 1".into()));
        }
        if !(a.fit_half_width_bins > 0.0) {
            return Err(Error::Config("analysis.fit_half_width_bins: must be > 0".into()));
        }
        if a.compare_repetitions < 2 {
            return Err(Error::Config("analysis.compare_repetitions: must be >= 2".into()));
        }
        if a.compare_n_list.is_empty() || a.compare_n_list.contains(&0) {
            return Err(Error::Config("analysis.compare_n_list: must be non-empty with entries >= 1".into()));
        }
        if !(self.gates.selective_rabi_fraction > 0.0) {
            return Err(Error::Config("gates.selective_rabi_fraction: must be > 0".into()));
        }
        Ok(())
    }

    pub fn spin_params(&self) -> SpinSystemParams {
        self.spin.to_params()
    }

    pub fn signal_config(&self) -> SignalConfig {
        SignalConfig {
            mode: self.signal.mode,
            nu_s: self.signal.nu_s_hz,
            b_amp: self.signal.b_amp_gauss,
            n_sensors: self.signal.n_sensors,
        }
    }

    pub fn protocol_config(&self) -> Result<ProtocolConfig> {
        let p = &self.protocol;
        let xy8 = match p.tau_ns {
            Some(tau) => Xy8Spec::new(p.xy8_repeats, tau * 1e-9),
            None => Xy8Spec::resonant(p.xy8_repeats, self.signal.nu_s_hz),
        }
        .map_err(|e| field("protocol", e))?;
        Ok(ProtocolConfig {
            protocol: p.kind,
            m: p.m,
            n: p.n_runs,
            t: p.t_us * 1e-6,
            t_init: p.t_init_us * 1e-6,
            xy8,
            t_laser: p.t_laser_ns * 1e-9,
            t1_nuc: p.t1_nuc_s.unwrap_or(f64::INFINITY),
            t1_nuc_laser: p.t1_nuc_laser_us.map_or(f64::INFINITY, |v| v * 1e-6),
            init_fidelity: p.init_fidelity,
            t_wait: p.t_wait_us * 1e-6,
            lasers_per_acquisition: p.lasers_per_acquisition,
        })
    }

    pub fn readout_params(&self) -> ReadoutParams {
        ReadoutParams {
            eta0: self.readout.eta0,
            eta1: self.readout.eta1,
            noise: self.readout.noise,
        }
    }
}
