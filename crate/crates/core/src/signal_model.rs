//! Signal realizations (classical tone or statistical polarization) and the
//! aliasing map for sampling at a fixed period.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_finite, require_positive, Result};
use crate::pulse_gates::accumulated_phase;
use crate::spin_system::TWO_PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalMode {
    /// Fixed envelope, random phase per run.
    Classical,
    /// Envelope and phase drawn per run and per sensor.
    Statistical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalConfig {
    pub mode: SignalMode,
    /// Signal frequency, Hz.
    pub nu_s: f64,
    /// Classical: envelope. Statistical: rms field. Gauss.
    pub b_amp: f64,
    pub n_sensors: u32,
}

impl SignalConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("nu_s", self.nu_s)?;
        require_finite("b_amp", self.b_amp)?;
        if self.b_amp < 0.0 {
            return Err(invalid("b_amp", "must be >= 0"));
        }
        if self.n_sensors == 0 {
            return Err(invalid("n_sensors", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalRealization {
    /// Field envelope, G.
    pub envelope: f64,
    /// Phase at the reference time, rad in [0, 2pi).
    pub xi0: f64,
    pub sensor_index: u32,
}

/// Envelope law for statistical polarization.
pub trait AmplitudeModel: Send + Sync {
    /// Draws an envelope for rms field `b_rms`.
    fn sample(&self, b_rms: f64, rng: &mut dyn RngCore) -> f64;
}

/// Gaussian quadratures with variance `b_rms^2` each, so |B| is Rayleigh.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayleigh;

impl AmplitudeModel for Rayleigh {
    fn sample(&self, b_rms: f64, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.random();
        b_rms * (-2.0 * (1.0 - u).ln()).sqrt()
    }
}

pub fn draw_realization(cfg: &SignalConfig, sensor_index: u32, rng: &mut dyn RngCore) -> SignalRealization {
    draw_realization_with(cfg, &Rayleigh, sensor_index, rng)
}

pub fn draw_realization_with(
    cfg: &SignalConfig,
    model: &dyn AmplitudeModel,
    sensor_index: u32,
    rng: &mut dyn RngCore,
) -> SignalRealization {
    let xi0 = TWO_PI * rng.random::<f64>();
    let envelope = match cfg.mode {
        SignalMode::Classical => cfg.b_amp,
        SignalMode::Statistical => model.sample(cfg.b_amp, rng),
    };
    SignalRealization {
        envelope,
        xi0,
        sensor_index,
    }
}

/// Signal phase `delta_t` after the reference time, reduced to [0, 2pi).
pub fn phase_at(r: &SignalRealization, nu_s: f64, delta_t: f64) -> f64 {
    // reduce cycles before scaling to keep precision over long traces
    let cycles = (nu_s * delta_t).fract();
    (r.xi0 + TWO_PI * cycles).rem_euclid(TWO_PI)
}

/// Alias of `nu_s` when sampled every `t` seconds, in [0, 1/(2t)].
pub fn undersampled_frequency(nu_s: f64, t: f64) -> Result<f64> {
    require_positive("T", t)?;
    require_finite("nu_s", nu_s)?;
    let m = (nu_s * t).round();
    Ok((nu_s - m / t).abs())
}

/// rms of the accumulated phase for a statistical signal of projected rms `b_rms`.
pub fn phase_rms(gamma_nv: f64, b_rms: f64, t_dd: f64) -> f64 {
    2.0 / std::f64::consts::PI * gamma_nv * b_rms * t_dd
}

/// <sin phi0 sin phik> for zero-mean Gaussian phases of rms `phi_rms`
/// whose correlation coefficient is cos(theta).
pub fn gaussian_sine_correlation(phi_rms: f64, theta: f64) -> f64 {
    let s2 = phi_rms * phi_rms;
    (-s2).exp() * (s2 * theta.cos()).sinh()
}

/// Third-order small-phase expansion of the same average.
pub fn third_order_sine_correlation(phi_rms: f64, theta: f64) -> f64 {
    let s2 = phi_rms * phi_rms;
    s2 * theta.cos() * (1.0 - s2 / 4.0 + s2 * s2 / 72.0) + s2.powi(3) / 288.0 * theta.cos() * (2.0 * theta).cos()
}

/// Monte-Carlo mean and standard error of sin(phi0) sin(phik) at each
/// delay, with one realization per sample shared across delays.
pub fn sine_correlation_mc(
    cfg: &SignalConfig,
    gamma_nv: f64,
    t_dd: f64,
    delays: &[f64],
    samples: usize,
    rng: &mut dyn RngCore,
) -> Vec<(f64, f64)> {
    let mut sum = vec![0.0; delays.len()];
    let mut sum2 = vec![0.0; delays.len()];
    for _ in 0..samples {
        let r = draw_realization(cfg, 0, rng);
        let s0 = accumulated_phase(gamma_nv, r.envelope, t_dd, r.xi0).sin();
        for (i, &dt) in delays.iter().enumerate() {
            let v = s0 * accumulated_phase(gamma_nv, r.envelope, t_dd, phase_at(&r, cfg.nu_s, dt)).sin();
            sum[i] += v;
            sum2[i] += v * v;
        }
    }
    let n = samples as f64;
    sum.iter()
        .zip(&sum2)
        .map(|(s, s2)| {
            let mean = s / n;
            (mean, ((s2 / n - mean * mean).max(0.0) / (n - 1.0)).sqrt())
        })
        .collect()
}
