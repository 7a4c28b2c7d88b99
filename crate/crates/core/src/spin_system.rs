//! NV electron / 14N nuclear spin parameters, the two-qubit working basis,
//! energy levels and transition frequencies.
//!
//! Frequencies are angular (rad/s) throughout; fields are in gauss.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_finite, require_positive, Result};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Converts a frequency in MHz to rad/s.
pub fn mhz(f: f64) -> f64 {
    TWO_PI * f * 1e6
}

/// Converts rad/s to MHz.
pub fn to_mhz(w: f64) -> f64 {
    w / TWO_PI / 1e6
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinSystemParams {
    /// Zero-field splitting.
    pub d: f64,
    /// Parallel hyperfine coupling (signed).
    pub a_par: f64,
    /// Nuclear quadrupole splitting (signed).
    pub p_quad: f64,
    /// Electron gyromagnetic ratio, rad/s/G.
    pub gamma_nv: f64,
    /// 14N gyromagnetic ratio, rad/s/G.
    pub gamma_n: f64,
    /// Static field along the NV axis, G.
    pub b_z: f64,
}

impl Default for SpinSystemParams {
    fn default() -> Self {
        Self {
            d: mhz(2870.0),
            a_par: mhz(-2.166),
            p_quad: mhz(-4.945),
            gamma_nv: mhz(2.803),
            gamma_n: mhz(0.308e-3),
            b_z: 2043.763,
        }
    }
}

impl SpinSystemParams {
    pub fn validate(&self) -> Result<()> {
        require_positive("d", self.d)?;
        require_finite("a_par", self.a_par)?;
        require_finite("p_quad", self.p_quad)?;
        require_positive("gamma_nv", self.gamma_nv)?;
        require_positive("gamma_n", self.gamma_n)?;
        require_finite("b_z", self.b_z)?;
        if self.b_z < 0.0 {
            return Err(invalid("b_z", "must be >= 0"));
        }
        Ok(())
    }

    /// Closed-form energy of |m_s, m_I>.
    pub fn energy(&self, m_s: i8, m_i: i8) -> Result<f64> {
        check_spin1("m_s", m_s)?;
        check_spin1("m_I", m_i)?;
        let (ms, mi) = (m_s as f64, m_i as f64);
        Ok(self.d * ms * ms + self.gamma_nv * self.b_z * ms + self.a_par * ms * mi
            + self.p_quad * (mi * mi - 2.0 / 3.0)
            - self.gamma_n * self.b_z * mi)
    }
}

fn check_spin1(name: &'static str, m: i8) -> Result<()> {
    if (-1..=1).contains(&m) {
        Ok(())
    } else {
        Err(invalid(name, format!("must be -1, 0 or +1, got {m}")))
    }
}

/// Two-qubit working basis. The ordering is used by every matrix in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisState {
    /// |0>e |0>n
    E0N0,
    /// |0>e |+1>n
    E0N1,
    /// |-1>e |0>n
    Em1N0,
    /// |-1>e |+1>n
    Em1N1,
}

impl BasisState {
    pub const ALL: [BasisState; 4] = [Self::E0N0, Self::E0N1, Self::Em1N0, Self::Em1N1];

    /// 1-based label as used in the level scheme.
    pub fn label(self) -> usize {
        self.index() + 1
    }

    /// 0-based matrix index.
    pub fn index(self) -> usize {
        match self {
            Self::E0N0 => 0,
            Self::E0N1 => 1,
            Self::Em1N0 => 2,
            Self::Em1N1 => 3,
        }
    }

    pub fn from_label(label: usize) -> Result<Self> {
        match label {
            1..=4 => Ok(Self::ALL[label - 1]),
            _ => Err(invalid("label", format!("basis label must be 1..=4, got {label}"))),
        }
    }

    pub fn m_s(self) -> i8 {
        match self {
            Self::E0N0 | Self::E0N1 => 0,
            _ => -1,
        }
    }

    pub fn m_i(self) -> i8 {
        match self {
            Self::E0N0 | Self::Em1N0 => 0,
            _ => 1,
        }
    }
}

/// All nine energies, indexed by (m_s, m_I) with each in {+1, 0, -1}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyTable {
    entries: [[f64; 3]; 3],
}

impl EnergyTable {
    pub fn get(&self, m_s: i8, m_i: i8) -> Result<f64> {
        check_spin1("m_s", m_s)?;
        check_spin1("m_I", m_i)?;
        Ok(self.entries[(1 - m_s) as usize][(1 - m_i) as usize])
    }

    /// Rows in display order: m_s = +1, 0, -1, each with m_I = +1, 0, -1.
    pub fn rows(&self) -> Vec<(i8, i8, f64)> {
        let mut out = Vec::with_capacity(9);
        for (a, ms) in [1i8, 0, -1].into_iter().enumerate() {
            for (b, mi) in [1i8, 0, -1].into_iter().enumerate() {
                out.push((ms, mi, self.entries[a][b]));
            }
        }
        out
    }
}

pub fn energy_levels(params: &SpinSystemParams) -> EnergyTable {
    let mut entries = [[0.0; 3]; 3];
    for (a, ms) in [1i8, 0, -1].into_iter().enumerate() {
        for (b, mi) in [1i8, 0, -1].into_iter().enumerate() {
            entries[a][b] = params.energy(ms, mi).expect("spin-1 projections in range");
        }
    }
    EnergyTable { entries }
}

/// |gamma_NV B - D + m_I A|, the m_s = 0 <-> -1 line for a given nuclear projection.
pub fn mw_transition_frequency(params: &SpinSystemParams, m_i: i8) -> Result<f64> {
    check_spin1("m_I", m_i)?;
    Ok((params.gamma_nv * params.b_z - params.d + m_i as f64 * params.a_par).abs())
}

/// |P - A - gamma_N B|, the m_I = 0 <-> +1 line in the m_s = -1 manifold.
pub fn rf_transition_frequency(params: &SpinSystemParams) -> f64 {
    (params.p_quad - params.a_par - params.gamma_n * params.b_z).abs()
}
