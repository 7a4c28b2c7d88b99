//! Photon-count readout and trace aggregation.

use rand::{Rng, RngCore};
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::protocol::PopulationRecord;
use crate::rng::{stream, Purpose};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// Spin projection then Poisson photon counts.
    #[default]
    TwoStage,
    /// Poisson with the population-weighted mean.
    Averaged,
    /// Exact mean, no noise.
    None,
}

impl std::str::FromStr for NoiseMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-stage" => Ok(Self::TwoStage),
            "averaged" => Ok(Self::Averaged),
            "none" => Ok(Self::None),
            _ => Err(invalid("noise", format!("expected two-stage, averaged or none, got {s}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutParams {
    /// Mean photons per readout in |0>e.
    pub eta0: f64,
    /// Mean photons per readout in |-1>e.
    pub eta1: f64,
    pub noise: NoiseMode,
}

impl Default for ReadoutParams {
    fn default() -> Self {
        Self {
            eta0: 0.03,
            eta1: 0.02,
            noise: NoiseMode::TwoStage,
        }
    }
}

impl ReadoutParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta1.is_finite() && self.eta1 >= 0.0) {
            return Err(invalid("eta1", "must be finite and >= 0"));
        }
        if !(self.eta0.is_finite() && self.eta0 >= self.eta1) {
            return Err(invalid("eta0", "must be finite and >= eta1"));
        }
        Ok(())
    }

    pub fn eta(&self) -> f64 {
        0.5 * (self.eta0 + self.eta1)
    }

    pub fn contrast(&self) -> f64 {
        if self.eta() == 0.0 {
            0.0
        } else {
            (self.eta0 - self.eta1) / self.eta()
        }
    }

    pub fn mean(&self, p0: f64) -> f64 {
        self.eta0 * p0 + self.eta1 * (1.0 - p0)
    }
}

fn poisson(lambda: f64, rng: &mut dyn RngCore) -> f64 {
    if lambda <= 0.0 {
        0.0
    } else {
        Poisson::new(lambda).expect("finite positive rate").sample(rng)
    }
}

/// Counts from one sensor read out once.
pub fn readout(p0: f64, params: &ReadoutParams, rng: &mut dyn RngCore) -> f64 {
    readout_many(p0, 1, params, rng)
}

/// Summed counts from `n` sensors sharing the same `p0`.
pub fn readout_many(p0: f64, n: u64, params: &ReadoutParams, rng: &mut dyn RngCore) -> f64 {
    let p0 = p0.clamp(0.0, 1.0);
    match params.noise {
        NoiseMode::None => n as f64 * params.mean(p0),
        NoiseMode::Averaged => poisson(n as f64 * params.mean(p0), rng),
        NoiseMode::TwoStage => {
            let bright = if n == 1 {
                (rng.random::<f64>() < p0) as u64
            } else {
                Binomial::new(n, p0).expect("p0 in [0,1]").sample(rng)
            };
            poisson(bright as f64 * params.eta0 + (n - bright) as f64 * params.eta1, rng)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub schema_version: u32,
    pub master_seed: u64,
    /// Acquisition period, s.
    pub period: f64,
    /// Configuration snapshot, free-form.
    #[serde(default)]
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeTrace {
    pub k: Vec<usize>,
    /// T_k in seconds.
    pub times: Vec<f64>,
    pub counts: Vec<f64>,
    pub n_runs: usize,
    pub metadata: TraceMetadata,
}

impl TimeTrace {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Uniform sampling interval, or an error naming the first bad index.
    pub fn sample_interval(&self) -> Result<f64> {
        if self.times.len() < 2 {
            return Err(invalid("trace", "need at least two samples"));
        }
        let dt = self.times[1] - self.times[0];
        if !(dt > 0.0) {
            return Err(Error::NonUniformSampling { index: 1 });
        }
        for i in 2..self.times.len() {
            let d = self.times[i] - self.times[i - 1];
            if (d - dt).abs() > 1e-9 * dt.max(self.times[i].abs() * 1e-6) {
                return Err(Error::NonUniformSampling { index: i });
            }
        }
        Ok(dt)
    }
}

/// Reads out each run with its own stream and sums per acquisition.
/// `multiplicity` sensors share each record (simultaneous ensemble readout).
pub fn aggregate_trace(
    per_run: &[Vec<PopulationRecord>],
    multiplicity: u64,
    params: &ReadoutParams,
    period: f64,
    master_seed: u64,
) -> Result<TimeTrace> {
    params.validate()?;
    let first = per_run.first().ok_or_else(|| invalid("runs", "need at least one run"))?;
    let len = first.len();
    if let Some((j, r)) = per_run.iter().enumerate().find(|(_, r)| r.len() != len) {
        return Err(invalid("runs", format!("run {j} has {} records, expected {len}", r.len())));
    }
    let mut counts = vec![0.0; len];
    for (j, run) in per_run.iter().enumerate() {
        let mut rng = stream(master_seed, Purpose::Readout, j as u64);
        for (slot, rec) in counts.iter_mut().zip(run) {
            *slot += readout_many(rec.p0_e, multiplicity, params, &mut rng);
        }
    }
    let k: Vec<usize> = first.iter().map(|r| r.k).collect();
    Ok(TimeTrace {
        times: k.iter().map(|&k| k as f64 * period).collect(),
        k,
        counts,
        n_runs: per_run.len(),
        metadata: TraceMetadata {
            schema_version: SCHEMA_VERSION,
            master_seed,
            period,
            config: serde_json::Value::Null,
        },
    })
}
