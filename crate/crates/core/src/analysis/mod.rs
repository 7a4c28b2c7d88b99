//! Spectral estimation and curve fitting.

pub mod fits;
pub mod lm;
pub mod psd;

pub use fits::{
    fit_bessel_j0, fit_decaying_sinusoid, fit_decaying_sinusoid_xy, fit_lorentzian, fit_triple_gaussian,
    noise_floor_std, sensitivity, BesselFit, LorentzianGuess, SpectrumFit, TimeFit, TimeGuess, TripleGaussianFit,
};
pub use psd::{psd, psd_samples, PowerSpectrum, Window};

/// Least-squares slope of y on x.
pub fn linear_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

/// Slope of log-log points given as (ln x, ln y).
pub fn loglog_slope(pts: &[(f64, f64)]) -> Option<f64> {
    linear_slope(pts)
}
