//! Lorentzian, decaying-sinusoid, triple-Gaussian and Bessel-J0 fits.

use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, LmOptions, Model};
use super::psd::{psd_samples, PowerSpectrum, Window};
use crate::error::{invalid, Error, Result};
use crate::readout::TimeTrace;
use crate::spin_system::TWO_PI;

/// First zero of J0.
pub const J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

// ---------------------------------------------------------------- Lorentzian

/// b + a s^2 / ((x - c)^2 + s^2); parameters [c, s, a, b].
pub struct Lorentzian;

impl Model for Lorentzian {
    fn n_params(&self) -> usize {
        4
    }
    fn value(&self, x: f64, p: &[f64]) -> f64 {
        let (d, s2) = (x - p[0], p[1] * p[1]);
        p[3] + p[2] * s2 / (d * d + s2)
    }
    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let (d, s, a) = (x - p[0], p[1], p[2]);
        let q = d * d + s * s;
        out[0] = a * s * s * 2.0 * d / (q * q);
        out[1] = a * 2.0 * s * d * d / (q * q);
        out[2] = s * s / q;
        out[3] = 1.0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianGuess {
    pub center: f64,
    pub sigma: f64,
    pub amplitude: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFit {
    /// Hz.
    pub center: f64,
    /// Half width at half maximum, Hz.
    pub sigma: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// Standard errors of (center, sigma, amplitude, offset).
    pub std_errors: [f64; 4],
    pub residual_std: f64,
    pub chi2_dof: f64,
    /// Frequency range used in the fit, Hz.
    pub range: (f64, f64),
}

impl SpectrumFit {
    pub fn fwhm(&self) -> f64 {
        2.0 * self.sigma
    }

    /// Model value at the center.
    pub fn peak_value(&self) -> f64 {
        self.offset + self.amplitude
    }
}

/// Fit range around the peak when none is given, in unpadded bins.
pub const DEFAULT_FIT_HALF_WIDTH_BINS: f64 = 25.0;

pub fn fit_lorentzian(spec: &PowerSpectrum, guess: Option<LorentzianGuess>, range: Option<(f64, f64)>) -> Result<SpectrumFit> {
    let peak = spec
        .peak_index()
        .ok_or_else(|| Error::Degenerate("spectrum has no peak".into()))?;
    let (lo, hi) = range.unwrap_or_else(|| {
        let c = guess.map(|g| g.center).unwrap_or(spec.freqs[peak]);
        let hw = DEFAULT_FIT_HALF_WIDTH_BINS * spec.raw_bin_width();
        (c - hw, c + hw)
    });
    let idx: Vec<usize> = (1..spec.freqs.len()).filter(|&i| spec.freqs[i] >= lo && spec.freqs[i] <= hi).collect();
    if idx.len() < 6 {
        return Err(invalid("range", format!("only {} bins between {lo} and {hi} Hz", idx.len())));
    }
    let xs: Vec<f64> = idx.iter().map(|&i| spec.freqs[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| spec.power[i]).collect();
    let g = match guess {
        Some(g) => g,
        None => auto_lorentzian_guess(&xs, &ys, spec.bin_width()),
    };
    // fit with the center measured from the guess to keep columns well scaled
    let x0 = g.center;
    let xs_c: Vec<f64> = xs.iter().map(|x| x - x0).collect();
    let fit = levenberg_marquardt(
        &Lorentzian,
        &xs_c,
        &ys,
        &[0.0, g.sigma, g.amplitude, g.offset],
        &LmOptions::default(),
    )?;
    let p = &fit.params;
    if !(p[1].abs() > 0.0) {
        return Err(Error::FitFailed("zero width".into()));
    }
    Ok(SpectrumFit {
        center: p[0] + x0,
        sigma: p[1].abs(),
        amplitude: p[2],
        offset: p[3],
        std_errors: [fit.std_errors[0], fit.std_errors[1], fit.std_errors[2], fit.std_errors[3]],
        residual_std: fit.residual_std,
        chi2_dof: fit.chi2_dof(),
        range: (lo, hi),
    })
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn auto_lorentzian_guess(xs: &[f64], ys: &[f64], bin: f64) -> LorentzianGuess {
    let (ip, &ymax) = ys
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let b = median(ys);
    let half = b + 0.5 * (ymax - b);
    let mut l = ip;
    while l > 0 && ys[l] > half {
        l -= 1;
    }
    let mut r = ip;
    while r + 1 < ys.len() && ys[r] > half {
        r += 1;
    }
    LorentzianGuess {
        center: xs[ip],
        sigma: (0.5 * (xs[r] - xs[l])).max(bin),
        amplitude: ymax - b,
        offset: b,
    }
}

/// Residual std of the spectrum around a fit, over the fit range.
pub fn noise_floor_std(spec: &PowerSpectrum, fit: &SpectrumFit) -> f64 {
    let p = [fit.center, fit.sigma, fit.amplitude, fit.offset];
    let r: Vec<f64> = spec
        .freqs
        .iter()
        .zip(&spec.power)
        .filter(|(f, _)| **f >= fit.range.0 && **f <= fit.range.1 && **f > 0.0)
        .map(|(f, y)| y - Lorentzian.value(*f, &p))
        .collect();
    let n = r.len() as f64;
    let m = r.iter().sum::<f64>() / n;
    (r.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// sigma_noise / f(c) * B_test * sqrt(T_meas); units of B_test per sqrt(Hz).
pub fn sensitivity(fit: &SpectrumFit, noise_floor_std: f64, b_test: f64, t_meas: f64) -> Result<f64> {
    let peak = fit.peak_value();
    if !(peak > 0.0) {
        return Err(invalid("peak", format!("fitted peak value must be positive, got {peak}")));
    }
    if !(noise_floor_std >= 0.0) || !(t_meas >= 0.0) {
        return Err(invalid("noise_floor_std", "noise and measurement time must be >= 0"));
    }
    Ok(noise_floor_std / peak * b_test * t_meas.sqrt())
}

// ---------------------------------------------------------------- decaying sinusoid

/// b + a sin(2 pi f x + phi) exp(-g x); parameters [a, f, phi, b, g], g = 1/tau.
pub struct DecayingSinusoid;

impl Model for DecayingSinusoid {
    fn n_params(&self) -> usize {
        5
    }
    fn value(&self, x: f64, p: &[f64]) -> f64 {
        p[3] + p[0] * (TWO_PI * p[1] * x + p[2]).sin() * (-p[4] * x).exp()
    }
    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let arg = TWO_PI * p[1] * x + p[2];
        let e = (-p[4] * x).exp();
        let (s, c) = arg.sin_cos();
        out[0] = s * e;
        out[1] = p[0] * c * e * TWO_PI * x;
        out[2] = p[0] * c * e;
        out[3] = 1.0;
        out[4] = -x * p[0] * s * e;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGuess {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
    pub offset: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeFit {
    pub amplitude: f64,
    /// Hz.
    pub frequency: f64,
    /// rad in (-pi, pi].
    pub phase: f64,
    pub offset: f64,
    /// s.
    pub tau: f64,
    /// Standard errors of (amplitude, frequency, phase, offset, tau).
    pub std_errors: [f64; 5],
    pub residual_std: f64,
    pub chi2_dof: f64,
}

/// Minimum |a| / se(a) accepted as a real oscillation.
pub const MIN_AMPLITUDE_SIGNIFICANCE: f64 = 5.0;

pub fn fit_decaying_sinusoid(trace: &TimeTrace) -> Result<TimeFit> {
    trace.sample_interval()?;
    fit_decaying_sinusoid_xy(&trace.times, &trace.counts, None)
}

/// Solves y ~ c0 + c1 u + c2 v by normal equations.
fn linear3(u: &[f64], v: &[f64], y: &[f64]) -> Option<[f64; 3]> {
    let mut a = nalgebra::Matrix3::<f64>::zeros();
    let mut rhs = nalgebra::Vector3::<f64>::zeros();
    for i in 0..y.len() {
        let row = nalgebra::Vector3::new(1.0, u[i], v[i]);
        a += row * row.transpose();
        rhs += row * y[i];
    }
    a.lu().solve(&rhs).map(|s| [s[0], s[1], s[2]])
}

fn auto_time_guess(xs: &[f64], ys: &[f64]) -> Result<TimeGuess> {
    let n = xs.len();
    let dt = (xs[n - 1] - xs[0]) / (n - 1) as f64;
    let spec = psd_samples(ys, dt, 8, Window::Rectangular)?;
    let peak = spec
        .peak_index()
        .ok_or_else(|| Error::Degenerate("trace has no oscillation".into()))?;
    let f = spec.freqs[peak];
    let span = xs[n - 1] - xs[0];
    // block-wise amplitude regression for the decay
    let n_blocks = 8.min(n / 8).max(2);
    let mut pts = Vec::new();
    for b in 0..n_blocks {
        let (lo, hi) = (b * n / n_blocks, (b + 1) * n / n_blocks);
        let u: Vec<f64> = xs[lo..hi].iter().map(|x| (TWO_PI * f * x).sin()).collect();
        let v: Vec<f64> = xs[lo..hi].iter().map(|x| (TWO_PI * f * x).cos()).collect();
        if let Some(s) = linear3(&u, &v, &ys[lo..hi]) {
            let amp = s[1].hypot(s[2]);
            if amp > 0.0 {
                let tc = xs[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
                pts.push((tc, amp.ln()));
            }
        }
    }
    let g_min = 0.05 / span;
    let g = super::linear_slope(&pts).map(|s| (-s).max(g_min)).unwrap_or(g_min);
    let u: Vec<f64> = xs.iter().map(|x| (TWO_PI * f * x).sin() * (-g * x).exp()).collect();
    let v: Vec<f64> = xs.iter().map(|x| (TWO_PI * f * x).cos() * (-g * x).exp()).collect();
    let s = linear3(&u, &v, ys).ok_or_else(|| Error::Degenerate("cannot estimate amplitude".into()))?;
    // a sin(w x + phi) = a cos(phi) sin + a sin(phi) cos
    Ok(TimeGuess {
        amplitude: s[1].hypot(s[2]),
        frequency: f,
        phase: s[2].atan2(s[1]),
        offset: s[0],
        tau: 1.0 / g,
    })
}

pub fn fit_decaying_sinusoid_xy(xs: &[f64], ys: &[f64], guess: Option<TimeGuess>) -> Result<TimeFit> {
    if xs.len() != ys.len() || xs.len() < 8 {
        return Err(invalid("trace", "need at least 8 paired samples"));
    }
    let g = match guess {
        Some(g) => g,
        None => auto_time_guess(xs, ys)?,
    };
    if !(g.tau > 0.0) {
        return Err(invalid("tau", "initial decay time must be positive"));
    }
    let fit = levenberg_marquardt(
        &DecayingSinusoid,
        xs,
        ys,
        &[g.amplitude, g.frequency, g.phase, g.offset, 1.0 / g.tau],
        &LmOptions::default(),
    )
    .map_err(|e| match e {
        Error::FitFailed(m) => Error::Degenerate(format!("oscillation fit failed: {m}")),
        other => other,
    })?;
    let p = &fit.params;
    let se = &fit.std_errors;
    if !(p[0].abs() >= MIN_AMPLITUDE_SIGNIFICANCE * se[0]) || p[0] == 0.0 {
        return Err(Error::Degenerate(format!(
            "amplitude {:.3e} is not significant (standard error {:.3e})",
            p[0], se[0]
        )));
    }
    if !(p[4] > 0.0) {
        return Err(Error::FitFailed(format!("decay rate {:.3e} is not positive", p[4])));
    }
    let (mut a, mut f, mut phi) = (p[0], p[1], p[2]);
    if f < 0.0 {
        // sin(-w x + phi) = sin(w x + pi - phi)
        f = -f;
        phi = std::f64::consts::PI - phi;
    }
    if a < 0.0 {
        a = -a;
        phi += std::f64::consts::PI;
    }
    let phi = -(std::f64::consts::PI - phi).rem_euclid(TWO_PI) + std::f64::consts::PI;
    let tau = 1.0 / p[4];
    Ok(TimeFit {
        amplitude: a,
        frequency: f,
        phase: phi,
        offset: p[3],
        tau,
        std_errors: [se[0], se[1], se[2], se[3], se[4] * tau * tau],
        residual_std: fit.residual_std,
        chi2_dof: fit.chi2_dof(),
    })
}

// ---------------------------------------------------------------- triple Gaussian

/// b + sum_i a_i exp(-(x - c_i)^2 / (2 s_i^2)); parameters [a1,c1,s1,a2,c2,s2,a3,c3,s3,b].
pub struct TripleGaussian;

impl Model for TripleGaussian {
    fn n_params(&self) -> usize {
        10
    }
    fn value(&self, x: f64, p: &[f64]) -> f64 {
        p[9] + (0..3)
            .map(|i| p[3 * i] * (-(x - p[3 * i + 1]).powi(2) / (2.0 * p[3 * i + 2].powi(2))).exp())
            .sum::<f64>()
    }
    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        for i in 0..3 {
            let (a, c, s) = (p[3 * i], p[3 * i + 1], p[3 * i + 2]);
            let d = x - c;
            let e = (-d * d / (2.0 * s * s)).exp();
            out[3 * i] = e;
            out[3 * i + 1] = a * e * d / (s * s);
            out[3 * i + 2] = a * e * d * d / (s * s * s);
        }
        out[9] = 1.0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub amplitude: f64,
    pub center: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleGaussianFit {
    /// Sorted by center.
    pub components: [GaussianComponent; 3],
    pub offset: f64,
    /// Normalized areas, same order as `components`.
    pub populations: [f64; 3],
    pub residual_std: f64,
}

/// Fits three dips (or peaks) to a spectrum sampled at `freqs`.
pub fn fit_triple_gaussian(freqs: &[f64], values: &[f64]) -> Result<TripleGaussianFit> {
    if freqs.len() != values.len() || freqs.len() < 20 {
        return Err(invalid("spectrum", "need at least 20 paired samples"));
    }
    // work in centered, scaled units
    let x0 = freqs.iter().sum::<f64>() / freqs.len() as f64;
    let xs_scale = freqs.iter().map(|f| (f - x0).abs()).fold(0.0, f64::max);
    if !(xs_scale > 0.0) {
        return Err(invalid("freqs", "grid has zero span"));
    }
    let xs: Vec<f64> = freqs.iter().map(|f| (f - x0) / xs_scale).collect();
    let base = median(values);
    // dips are deviations below the baseline, smoothed so noise spikes do not seed them
    let depth: Vec<f64> = values.iter().map(|v| base - v).collect();
    let dips = find_dips(&xs, &boxcar(&depth, xs.len() / 100))?;
    let mut p0 = Vec::with_capacity(10);
    for (c, a, s) in dips {
        p0.extend_from_slice(&[-a, c, s]);
    }
    p0.push(base);
    let fit = levenberg_marquardt(&TripleGaussian, &xs, values, &p0, &LmOptions::default())?;
    let p = &fit.params;
    let mut comps: Vec<GaussianComponent> = (0..3)
        .map(|i| GaussianComponent {
            amplitude: p[3 * i],
            center: p[3 * i + 1] * xs_scale + x0,
            sigma: p[3 * i + 2].abs() * xs_scale,
        })
        .collect();
    comps.sort_by(|a, b| a.center.total_cmp(&b.center));
    let areas: Vec<f64> = comps.iter().map(|c| (c.amplitude * c.sigma).abs()).collect();
    let total: f64 = areas.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("all fitted dips have zero area".into()));
    }
    Ok(TripleGaussianFit {
        components: [comps[0], comps[1], comps[2]],
        offset: p[9],
        populations: [areas[0] / total, areas[1] / total, areas[2] / total],
        residual_std: fit.residual_std,
    })
}

/// Moving average over 2 * half + 1 points, truncated at the edges.
fn boxcar(v: &[f64], half: usize) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            let w = &v[i.saturating_sub(half)..(i + half + 1).min(v.len())];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect()
}

/// Three (center, depth, sigma) guesses in scaled units.
fn find_dips(xs: &[f64], depth: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    let n = xs.len();
    let mut d = depth.to_vec();
    let mut out = Vec::new();
    let mut first_depth = 0.0;
    for _ in 0..3 {
        let (ip, &dmax) = d.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
        if out.is_empty() {
            first_depth = dmax;
        }
        if !(dmax > 0.02 * first_depth) || !(dmax > 0.0) {
            return Err(Error::Degenerate(format!("found {} resolvable dips, need 3", out.len())));
        }
        let half = 0.5 * dmax;
        let mut l = ip;
        while l > 0 && depth[l] > half {
            l -= 1;
        }
        let mut r = ip;
        while r + 1 < n && depth[r] > half {
            r += 1;
        }
        let hwhm = 0.5 * (xs[r] - xs[l]).max(xs[1] - xs[0]);
        let sigma = hwhm / (2.0 * 2f64.ln()).sqrt();
        out.push((xs[ip], dmax, sigma));
        // mask this dip before looking for the next one
        for i in 0..n {
            if (xs[i] - xs[ip]).abs() < 2.0 * hwhm {
                d[i] = f64::NEG_INFINITY;
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- Bessel J0

/// a J0(2 pi f x); parameters [a, f].
pub struct BesselJ0;

impl Model for BesselJ0 {
    fn n_params(&self) -> usize {
        2
    }
    fn value(&self, x: f64, p: &[f64]) -> f64 {
        p[0] * libm::j0(TWO_PI * p[1] * x)
    }
    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let u = TWO_PI * p[1] * x;
        out[0] = libm::j0(u);
        // J0' = -J1
        out[1] = -p[0] * libm::j1(u) * TWO_PI * x;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselFit {
    pub amplitude: f64,
    /// Hz.
    pub frequency: f64,
    /// Field inferred from the frequency, G.
    pub field_gauss: f64,
    /// Standard errors of (amplitude, frequency, field_gauss).
    pub std_errors: [f64; 3],
    pub residual_std: f64,
}

impl BesselFit {
    pub fn field_tesla(&self) -> f64 {
        self.field_gauss * 1e-4
    }
}

/// Field whose phase slope (2/pi) gamma B equals 2 pi f.
pub fn field_from_bessel_frequency(f: f64, gamma_nv: f64) -> f64 {
    std::f64::consts::PI.powi(2) * f / gamma_nv
}

/// Fits a J0(2 pi f x) to signal vs accumulation time; `gamma_nv` in rad/s/G.
pub fn fit_bessel_j0(xs: &[f64], ys: &[f64], gamma_nv: f64) -> Result<BesselFit> {
    crate::error::require_positive("gamma_nv", gamma_nv)?;
    if xs.len() != ys.len() || xs.len() < 4 {
        return Err(invalid("data", "need at least 4 paired samples"));
    }
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let (sx, sy): (Vec<f64>, Vec<f64>) = order.iter().map(|&i| (xs[i], ys[i])).unzip();
    let a0 = sy[0];
    if !(a0.abs() > 0.0) {
        return Err(Error::Degenerate("signal vanishes at the shortest time".into()));
    }
    let zero = (1..sx.len())
        .find(|&i| sy[i].signum() != a0.signum())
        .map(|i| {
            let (x1, x2, y1, y2) = (sx[i - 1], sx[i], sy[i - 1], sy[i]);
            x1 + (x2 - x1) * y1 / (y1 - y2)
        })
        .ok_or_else(|| Error::Degenerate("data do not reach the first zero of J0".into()))?;
    let f0 = J0_FIRST_ZERO / (TWO_PI * zero);
    // J0 at the first point is not 1 unless x=0
    let a_guess = a0 / libm::j0(TWO_PI * f0 * sx[0]).max(0.1);
    let fit = levenberg_marquardt(&BesselJ0, &sx, &sy, &[a_guess, f0], &LmOptions::default())?;
    let (a, f) = (fit.params[0], fit.params[1].abs());
    if !(a.abs() >= MIN_AMPLITUDE_SIGNIFICANCE * fit.std_errors[0]) {
        return Err(Error::Degenerate("amplitude not significant".into()));
    }
    let k = field_from_bessel_frequency(1.0, gamma_nv);
    Ok(BesselFit {
        amplitude: a,
        frequency: f,
        field_gauss: k * f,
        std_errors: [fit.std_errors[0], fit.std_errors[1], k * fit.std_errors[1]],
        residual_std: fit.residual_std,
    })
}
