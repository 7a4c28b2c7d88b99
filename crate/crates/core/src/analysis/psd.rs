//! One-sided periodogram with optional window and zero padding.

use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::readout::TimeTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

impl std::str::FromStr for Window {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rectangular" => Ok(Self::Rectangular),
            "hann" => Ok(Self::Hann),
            _ => Err(invalid("window", format!("expected rectangular or hann, got {s}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSpectrum {
    /// Hz, from 0 to 1/(2 dt).
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    pub pad_factor: usize,
    pub window: Window,
    pub n_samples: usize,
    /// Sample interval, s.
    pub dt: f64,
}

impl PowerSpectrum {
    /// Grid spacing of the padded spectrum.
    pub fn bin_width(&self) -> f64 {
        1.0 / ((self.n_samples * self.pad_factor) as f64 * self.dt)
    }

    /// Spacing of the unpadded spectrum.
    pub fn raw_bin_width(&self) -> f64 {
        1.0 / (self.n_samples as f64 * self.dt)
    }

    /// Index of the largest bin, skipping DC.
    pub fn peak_index(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for i in 1..self.power.len() {
            if best.is_none_or(|b| self.power[i] > self.power[b]) {
                best = Some(i);
            }
        }
        best.filter(|&i| self.power[i] > 0.0)
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }
}

pub fn psd(trace: &TimeTrace, pad_factor: usize, window: Window) -> Result<PowerSpectrum> {
    let dt = trace.sample_interval()?;
    psd_samples(&trace.counts, dt, pad_factor, window)
}

/// Mean-subtracted periodogram. Bins are scaled so that, with the
/// rectangular window, they sum to the (population) variance of the input.
pub fn psd_samples(values: &[f64], dt: f64, pad_factor: usize, window: Window) -> Result<PowerSpectrum> {
    require_positive("dt", dt)?;
    if pad_factor == 0 {
        return Err(invalid("pad_factor", "must be >= 1"));
    }
    let m = values.len();
    if m < 2 {
        return Err(invalid("trace", "need at least two samples"));
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    let w: Vec<f64> = match window {
        Window::Rectangular => vec![1.0; m],
        Window::Hann => (0..m)
            .map(|i| 0.5 - 0.5 * (crate::spin_system::TWO_PI * i as f64 / (m - 1) as f64).cos())
            .collect(),
    };
    let w_norm = w.iter().map(|v| v * v).sum::<f64>() / m as f64;
    let n_fft = m * pad_factor;
    let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n_fft];
    for i in 0..m {
        buf[i] = Complex64::new((values[i] - mean) * w[i], 0.0);
    }
    FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);
    let half = n_fft / 2;
    let scale = 1.0 / (n_fft as f64 * m as f64 * w_norm);
    let power: Vec<f64> = (0..=half)
        .map(|k| {
            let edge = k == 0 || (n_fft.is_multiple_of(2) && k == half);
            let fold = if edge { 1.0 } else { 2.0 };
            fold * buf[k].norm_sqr() * scale
        })
        .collect();
    let freqs = (0..=half).map(|k| k as f64 / (n_fft as f64 * dt)).collect();
    Ok(PowerSpectrum {
        freqs,
        power,
        pad_factor,
        window,
        n_samples: m,
        dt,
    })
}
