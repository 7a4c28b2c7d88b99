//! Closed-form comparison quantities: time advantage, memory lifetime,
//! Fisher information and ensemble scaling.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Result};
use crate::protocol::Protocol;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FtResult {
    pub f_t: f64,
    /// T_tot,CS / T_tot,MCS.
    pub time_ratio: f64,
}

/// SNR advantage of MCS over CS at equal total time.
pub fn f_t(m: usize, t: f64, t_init: f64) -> Result<FtResult> {
    if m == 0 {
        return Err(invalid("M", "must be >= 1"));
    }
    require_positive("T", t)?;
    require_positive("T_init", t_init)?;
    let m = m as f64;
    let r = t / t_init;
    let ratio = m / 2.0 * (1.0 + (1.0 + r) / (1.0 + m * r));
    Ok(FtResult {
        f_t: ratio.sqrt(),
        time_ratio: ratio,
    })
}

pub fn total_time_mcs(m: usize, t: f64, t_init: f64) -> f64 {
    t_init + m as f64 * t
}

pub fn total_time_cs(m: usize, t: f64, t_init: f64) -> f64 {
    let m = m as f64;
    m * t_init + m * (m + 1.0) / 2.0 * t
}

/// 1/T~ = 1/T1 + 1/(M_limit T). `t1_nuc` may be infinite.
pub fn effective_memory_lifetime(t1_nuc: f64, m_limit: f64, t: f64) -> Result<f64> {
    if t1_nuc.is_nan() || t1_nuc <= 0.0 {
        return Err(invalid("T1_nuc", "must be > 0"));
    }
    require_positive("M_limit", m_limit)?;
    require_positive("T", t)?;
    Ok(1.0 / (1.0 / t1_nuc + 1.0 / (m_limit * t)))
}

/// Laser pulses that depolarize the memory to 1/e.
pub fn m_limit(t1_nuc_laser: f64, t_laser: f64) -> Result<f64> {
    require_positive("T1_nuc_laser", t1_nuc_laser)?;
    require_positive("t_laser", t_laser)?;
    Ok(t1_nuc_laser / t_laser)
}

pub const LIFETIME_FIELD_COEFF: f64 = 0.6645;
pub const LIFETIME_FIELD_OFFSET: f64 = 0.050;

/// Empirical memory lifetime vs field in tesla; zero at and below 50 mT.
pub fn lifetime_vs_field(b_tesla: f64) -> Result<f64> {
    if !(b_tesla >= 0.0) || !b_tesla.is_finite() {
        return Err(invalid("B", "must be finite and >= 0"));
    }
    let d = (b_tesla - LIFETIME_FIELD_OFFSET).max(0.0);
    Ok(LIFETIME_FIELD_COEFF * d * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonInputs {
    pub m: usize,
    pub n: usize,
    pub t: f64,
    pub t_init: f64,
    pub eta: f64,
    pub c: f64,
    pub phi_rms: f64,
    pub t1_nuc: f64,
    pub t1_nuc_laser: f64,
    pub t_laser: f64,
    pub b_field_tesla: f64,
    /// Coefficient in I_CS, taken as given.
    pub delta: f64,
    pub t_d: f64,
    pub t_m: f64,
    pub t_total: f64,
    pub delta_t_k: f64,
    pub omega_u: f64,
}

impl Default for ComparisonInputs {
    fn default() -> Self {
        Self {
            m: 1991,
            n: 1,
            t: 15.063e-6,
            t_init: 101.57e-6,
            eta: 0.025,
            c: 0.4,
            phi_rms: 0.5,
            t1_nuc: 0.7,
            t1_nuc_laser: 210e-6,
            t_laser: 200e-9,
            b_field_tesla: 0.2043763,
            delta: 1.0,
            t_d: 1.0,
            t_m: 1.0,
            t_total: 1.0,
            delta_t_k: 15.063e-6,
            omega_u: 2.0 * std::f64::consts::PI * 4182.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContrastRegime {
    Exact,
    SmallContrast,
}

fn readout_factor(c2eta: f64, regime: ContrastRegime) -> f64 {
    match regime {
        ContrastRegime::Exact => c2eta / (4.0 + c2eta),
        ContrastRegime::SmallContrast => c2eta / 4.0,
    }
}

/// I_CS = c^2 eta/(4 + c^2 eta) phi^4 delta^2 T_D^3 T_M.
pub fn fisher_cs(x: &ComparisonInputs, regime: ContrastRegime) -> f64 {
    readout_factor(x.c * x.c * x.eta, regime) * x.phi_rms.powi(4) * x.delta.powi(2) * x.t_d.powi(3) * x.t_m
}

/// I_QDyne = (c^2 eta/(4 + c^2 eta))^2 phi^4 T_D^3 T_total ln(omega_u T_total) / dT_k^2.
pub fn fisher_qdyne(x: &ComparisonInputs, regime: ContrastRegime) -> f64 {
    readout_factor(x.c * x.c * x.eta, regime).powi(2)
        * x.phi_rms.powi(4)
        * x.t_d.powi(3)
        * x.t_total
        * (x.omega_u * x.t_total).ln()
        / x.delta_t_k.powi(2)
}

fn fisher_for(protocol: Protocol, x: &ComparisonInputs, regime: ContrastRegime) -> f64 {
    match protocol {
        Protocol::Mcs | Protocol::Cs => fisher_cs(x, regime),
        Protocol::Qdyne => fisher_qdyne(x, regime),
    }
}

/// I(N)/I(1): eta -> N eta for all protocols, and phi_rms -> phi_rms/sqrt(N) for QDyne.
pub fn ensemble_scaling_with(protocol: Protocol, n: usize, x: &ComparisonInputs, regime: ContrastRegime) -> Result<f64> {
    if n == 0 {
        return Err(invalid("N", "must be >= 1"));
    }
    let one = ComparisonInputs { n: 1, ..*x };
    let mut many = ComparisonInputs { n, eta: x.eta * n as f64, ..*x };
    if protocol == Protocol::Qdyne {
        many.phi_rms = x.phi_rms / (n as f64).sqrt();
    }
    let base = fisher_for(protocol, &one, regime);
    if !(base > 0.0) {
        return Err(invalid("inputs", "single-sensor Fisher information is zero"));
    }
    Ok(fisher_for(protocol, &many, regime) / base)
}

/// Small-contrast ensemble scaling.
pub fn ensemble_scaling(protocol: Protocol, n: usize, x: &ComparisonInputs) -> Result<f64> {
    ensemble_scaling_with(protocol, n, x, ContrastRegime::SmallContrast)
}

/// Cramer-Rao bound on the frequency uncertainty, 1/sqrt(I).
pub fn cramer_rao_precision(fisher: f64) -> Result<f64> {
    if !(fisher > 0.0) || !fisher.is_finite() {
        return Err(invalid("fisher", format!("must be finite and > 0, got {fisher}")));
    }
    Ok(1.0 / fisher.sqrt())
}
