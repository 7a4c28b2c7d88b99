//! MCS, CS and QDyne sequences as density-matrix evolutions, plus the
//! memory-decay and electron-reinitialization channels.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pulse_gates::{
    accumulated_phase, cenotn_propagator, cnnote_propagator, phase_accumulation, GateSet, Xy8Spec,
};
use crate::quantum::{c, DensityMatrix4, Mat4, Propagator4};
use crate::signal_model::{phase_at, SignalRealization};
use crate::spin_system::SpinSystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Mcs,
    Cs,
    Qdyne,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Mcs, Protocol::Cs, Protocol::Qdyne];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mcs => "mcs",
            Self::Cs => "cs",
            Self::Qdyne => "qdyne",
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mcs" => Ok(Self::Mcs),
            "cs" => Ok(Self::Cs),
            "qdyne" => Ok(Self::Qdyne),
            _ => Err(invalid("protocol", format!("unknown protocol {s}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub protocol: Protocol,
    /// Acquisitions after the initial one.
    pub m: usize,
    /// Independent sequence runs.
    pub n: usize,
    /// Acquisition period, s.
    pub t: f64,
    /// Duration of initialization plus the first acquisition, s.
    pub t_init: f64,
    pub xy8: Xy8Spec,
    /// Length of one laser pulse, s.
    pub t_laser: f64,
    /// Free nuclear relaxation time, s. May be infinite.
    pub t1_nuc: f64,
    /// Nuclear depolarization time under continuous laser, s. May be infinite.
    pub t1_nuc_laser: f64,
    pub init_fidelity: f64,
    /// Extra idle time added to each MCS period, s.
    pub t_wait: f64,
    pub lasers_per_acquisition: u32,
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(invalid("M", "must be >= 1"));
        }
        if self.n == 0 {
            return Err(invalid("N", "must be >= 1"));
        }
        self.xy8.validate()?;
        for (name, v) in [("T", self.t), ("T_init", self.t_init), ("t_laser", self.t_laser), ("t_wait", self.t_wait)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [("T1_nuc", self.t1_nuc), ("T1_nuc_laser", self.t1_nuc_laser)] {
            if v.is_nan() || v <= 0.0 {
                return Err(invalid(name, format!("must be > 0, got {v}")));
            }
        }
        if self.t < self.xy8.t_dd() {
            return Err(invalid("T", format!("period {} s is shorter than t_DD {} s", self.t, self.xy8.t_dd())));
        }
        if !(0.0..=1.0).contains(&self.init_fidelity) {
            return Err(invalid("init_fidelity", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Time between acquisitions including any wait.
    pub fn period(&self) -> f64 {
        self.t + self.t_wait
    }

    /// Memory polarization factor for `dt_free` seconds and `n_lasers` laser pulses.
    pub fn decay_factor(&self, dt_free: f64, n_lasers: u32) -> f64 {
        (-dt_free / self.t1_nuc).exp() * (-(n_lasers as f64) * self.t_laser / self.t1_nuc_laser).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationRecord {
    pub k: usize,
    pub p0_e: f64,
    pub memory_polarization: f64,
}

impl PopulationRecord {
    fn from_state(k: usize, rho: &DensityMatrix4) -> Self {
        Self {
            k,
            p0_e: rho.p0_electron().clamp(0.0, 1.0),
            memory_polarization: rho.memory_polarization().clamp(-1.0, 1.0),
        }
    }
}

/// Electron-only trace of a two-qubit state, 2x2 row-major.
fn electron_block(m: &Mat4) -> [[num_complex::Complex64; 2]; 2] {
    [
        [m[(0, 0)] + m[(1, 1)], m[(0, 2)] + m[(1, 3)]],
        [m[(2, 0)] + m[(3, 1)], m[(2, 2)] + m[(3, 3)]],
    ]
}

/// Optical repump: in each nuclear sector the electron goes to |0> with
/// probability `fidelity`, otherwise to the electron mixed state. Nuclear
/// populations are kept; all coherences are lost.
pub fn electron_reinit(rho: &DensityMatrix4, fidelity: f64) -> DensityMatrix4 {
    let p = rho.populations();
    let lo = (1.0 - fidelity) / 2.0;
    let hi = fidelity + lo;
    let (n0, n1) = (p[0] + p[2], p[1] + p[3]);
    let d = [n0 * hi, n1 * hi, n0 * lo, n1 * lo];
    DensityMatrix4(Mat4::from_diagonal(&nalgebra::Vector4::from(d.map(c))))
}

/// Partial depolarization of the nuclear qubit toward the mixed state.
pub fn memory_decay_channel(rho: &DensityMatrix4, dt_free: f64, n_lasers: u32, cfg: &ProtocolConfig) -> Result<DensityMatrix4> {
    if !(dt_free >= 0.0) {
        return Err(invalid("dt_free", "must be >= 0"));
    }
    Ok(depolarize_nucleus(rho, cfg.decay_factor(dt_free, n_lasers)))
}

pub(crate) fn depolarize_nucleus(rho: &DensityMatrix4, lambda: f64) -> DensityMatrix4 {
    if lambda == 1.0 {
        return *rho;
    }
    let e = electron_block(rho.matrix());
    let mut mixed = Mat4::zeros();
    for a in 0..2 {
        for b in 0..2 {
            for n in 0..2 {
                mixed[(2 * a + n, 2 * b + n)] = e[a][b] * 0.5;
            }
        }
    }
    DensityMatrix4(rho.matrix() * c(lambda) + mixed * c(1.0 - lambda))
}

/// Ramsey-type acquisition: pi/2 X, phase, closing pi/2.
fn acquire(rho: &DensityMatrix4, phi: f64, open: &Propagator4, close: &Propagator4) -> DensityMatrix4 {
    close.apply(&phase_accumulation(phi).apply(&open.apply(rho)))
}

/// Intermediate states of one MCS record, starting from |1><1|.
#[derive(Debug, Clone, Copy)]
pub struct McsSteps {
    /// After the first pi/2, phase injection, pi/2 Y, and storage.
    pub rho_ii: [DensityMatrix4; 4],
    /// After electron reinit, the second acquisition, and retrieval.
    pub rho_iii: [DensityMatrix4; 3],
}

pub fn mcs_step_states(gates: &GateSet, phi0: f64, phik: f64) -> McsSteps {
    let ii1 = gates.pi2_x.apply(&DensityMatrix4::pure(0));
    let ii2 = phase_accumulation(phi0).apply(&ii1);
    let ii3 = gates.pi2_y.apply(&ii2);
    let ii4 = gates.cenotn.apply(&ii3);
    let iii1 = electron_reinit(&ii4, 1.0);
    let iii2 = acquire(&iii1, phik, &gates.pi2_x, &gates.pi2_y);
    let iii3 = gates.cnnote.apply(&iii2);
    McsSteps {
        rho_ii: [ii1, ii2, ii3, ii4],
        rho_iii: [iii1, iii2, iii3],
    }
}

/// Runs protocols for one parameter set and gate set.
#[derive(Debug, Clone)]
pub struct Engine {
    pub cfg: ProtocolConfig,
    pub params: SpinSystemParams,
    pub gates: GateSet,
    /// Signal frequency, Hz.
    pub nu_s: f64,
}

impl Engine {
    pub fn new(cfg: ProtocolConfig, params: SpinSystemParams, gates: GateSet, nu_s: f64) -> Result<Self> {
        cfg.validate()?;
        params.validate()?;
        Ok(Self { cfg, params, gates, nu_s })
    }

    /// Phase of acquisition starting `delta_t` after the reference time.
    pub fn phase(&self, r: &SignalRealization, delta_t: f64) -> f64 {
        let xi = phase_at(r, self.nu_s, delta_t);
        accumulated_phase(self.params.gamma_nv, r.envelope, self.cfg.xy8.t_dd(), xi)
    }

    /// Polarized |0>e|0>n with the configured repump fidelity.
    pub fn initial_state(&self) -> DensityMatrix4 {
        electron_reinit(&DensityMatrix4::pure(0), self.cfg.init_fidelity)
    }

    fn store(&self, r: &SignalRealization) -> DensityMatrix4 {
        let rho = acquire(&self.initial_state(), self.phase(r, 0.0), &self.gates.pi2_x, &self.gates.pi2_y);
        self.gates.cenotn.apply(&rho)
    }

    fn retrieve(&self, rho: &DensityMatrix4, phi: f64) -> DensityMatrix4 {
        let rho = electron_reinit(rho, self.cfg.init_fidelity);
        self.gates.cnnote.apply(&acquire(&rho, phi, &self.gates.pi2_x, &self.gates.pi2_y))
    }

    /// Records k = 1..=M. Each period T first decays the memory (free time
    /// plus the laser pulses of one acquisition), then acquires and reads out.
    pub fn mcs_run(&self, r: &SignalRealization) -> Result<Vec<PopulationRecord>> {
        let period = self.cfg.period();
        let lambda = self.cfg.decay_factor(period, self.cfg.lasers_per_acquisition);
        let mut rho = self.store(r);
        let mut out = Vec::with_capacity(self.cfg.m);
        for k in 1..=self.cfg.m {
            rho = depolarize_nucleus(&rho, lambda);
            let after = self.retrieve(&rho, self.phase(r, k as f64 * period));
            out.push(PopulationRecord::from_state(k, &after));
            rho = after;
        }
        if let Some(last) = out.last() {
            check_record(last)?;
        }
        Ok(out)
    }

    /// One CS record with idle time k * period and only free decay.
    pub fn cs_run(&self, r: &SignalRealization, k: usize) -> Result<PopulationRecord> {
        if k == 0 || k > self.cfg.m {
            return Err(invalid("k", format!("must lie in 1..={}", self.cfg.m)));
        }
        let dt = k as f64 * self.cfg.period();
        let rho = memory_decay_channel(&self.store(r), dt, 0, &self.cfg)?;
        let after = self.retrieve(&rho, self.phase(r, dt));
        let rec = PopulationRecord::from_state(k, &after);
        check_record(&rec)?;
        Ok(rec)
    }

    /// Wall time of CS record k.
    pub fn cs_wall_time(&self, k: usize) -> f64 {
        self.cfg.t_init + k as f64 * self.cfg.period()
    }

    /// Sensor-only acquisitions k = 1..=M; the ensemble phase is the mean over sensors.
    pub fn qdyne_run(&self, sensors: &[SignalRealization]) -> Result<Vec<PopulationRecord>> {
        self.qdyne_run_len(sensors, self.cfg.m)
    }

    pub fn qdyne_run_len(&self, sensors: &[SignalRealization], len: usize) -> Result<Vec<PopulationRecord>> {
        if sensors.is_empty() {
            return Err(invalid("sensors", "need at least one realization"));
        }
        let start = self.initial_state();
        let period = self.cfg.period();
        let inv = 1.0 / sensors.len() as f64;
        (1..=len)
            .map(|k| {
                let dt = k as f64 * period;
                let phi = sensors.iter().map(|r| self.phase(r, dt)).sum::<f64>() * inv;
                // closing -Y pulse so that p0 = (1 + sin phi)/2
                let rho = acquire(&start, phi, &self.gates.pi2_x, &self.gates.pi2_minus_y);
                Ok(PopulationRecord::from_state(k, &rho))
            })
            .collect()
    }
}

fn check_record(r: &PopulationRecord) -> Result<()> {
    if r.p0_e.is_finite() && r.memory_polarization.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidState(format!("non-finite record at k = {}", r.k)))
    }
}

/// Six-level populations (m_s in {0, -1} x m_I in {+1, 0, -1}).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitLedgerRow {
    pub step: u8,
    pub label: &'static str,
    /// [m_s][m_I] with m_s order (0, -1) and m_I order (+1, 0, -1).
    pub populations: [[f64; 3]; 2],
}

impl InitLedgerRow {
    /// Nuclear populations (+1, 0, -1).
    pub fn nuclear(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| self.populations[0][i] + self.populations[1][i])
    }
}

#[derive(Debug, Clone)]
pub struct InitOutcome {
    /// Working-subspace state, renormalized.
    pub state: DensityMatrix4,
    /// Weight left in m_I = -1, which lies outside the working subspace.
    pub outside_weight: f64,
    pub ledger: Vec<InitLedgerRow>,
}

/// Four-step nuclear initialization with the ideal gates.
///
/// Step 1 optically pumps the electron (with `fidelity`); step 2 applies CnNOTe,
/// step 3 CeNOTn, step 4 repumps the electron.
pub fn initialize_system(fidelity: f64, nuclear: [f64; 3]) -> Result<InitOutcome> {
    if !(0.0..=1.0).contains(&fidelity) {
        return Err(invalid("init_fidelity", "must lie in [0, 1]"));
    }
    if nuclear.iter().any(|p| !(*p >= 0.0)) || (nuclear.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(invalid("nuclear_populations", "must be non-negative and sum to 1"));
    }
    let [p_plus, p_zero, p_minus] = nuclear;
    // start with the electron mixed
    let start = DensityMatrix4(Mat4::from_diagonal(&nalgebra::Vector4::from(
        [p_zero / 2.0, p_plus / 2.0, p_zero / 2.0, p_plus / 2.0].map(c),
    )));
    let outside_e = [p_minus / 2.0, p_minus / 2.0];
    let repump_outside = |e: [f64; 2]| {
        let tot = e[0] + e[1];
        [tot * (fidelity + (1.0 - fidelity) / 2.0), tot * (1.0 - fidelity) / 2.0]
    };
    let row = |step, label, rho: &DensityMatrix4, out: [f64; 2]| {
        let p = rho.populations();
        InitLedgerRow {
            step,
            label,
            populations: [[p[1], p[0], out[0]], [p[3], p[2], out[1]]],
        }
    };
    let s1 = electron_reinit(&start, fidelity);
    let o1 = repump_outside(outside_e);
    let s2 = cnnote_propagator().apply(&s1);
    let s3 = cenotn_propagator().apply(&s2);
    let s4 = electron_reinit(&s3, fidelity);
    let o4 = repump_outside(o1);
    let ledger = vec![
        row(1, "optical pumping", &s1, o1),
        row(2, "CnNOTe", &s2, o1),
        row(3, "CeNOTn", &s3, o1),
        row(4, "electron repump", &s4, o4),
    ];
    let w = s4.trace();
    if w <= 0.0 {
        return Err(Error::InvalidState("no population inside the working subspace".into()));
    }
    let state = DensityMatrix4::new(s4.matrix() / c(w))?;
    Ok(InitOutcome {
        state,
        outside_weight: 1.0 - w,
        ledger,
    })
}

/// Synthetic pulsed ODMR: baseline minus three Gaussian dips at the m_I = +1, 0, -1
/// lines with depth contrast * population. `linewidth` is the Gaussian sigma in Hz.
pub fn simulate_odmr(
    params: &SpinSystemParams,
    nuclear: [f64; 3],
    contrast: f64,
    linewidth: f64,
    freq_grid: &[f64],
) -> Result<Vec<f64>> {
    if nuclear.iter().any(|p| !(*p >= 0.0)) || (nuclear.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(invalid("nuclear_populations", "must be non-negative and sum to 1"));
    }
    crate::error::require_positive("linewidth", linewidth)?;
    let centers = odmr_centers(params)?;
    Ok(freq_grid
        .iter()
        .map(|&f| {
            let dip: f64 = (0..3)
                .map(|i| nuclear[i] * (-(f - centers[i]).powi(2) / (2.0 * linewidth * linewidth)).exp())
                .sum();
            1.0 - contrast * dip
        })
        .collect())
}

/// Line centers in Hz for m_I = +1, 0, -1.
pub fn odmr_centers(params: &SpinSystemParams) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (i, mi) in [1i8, 0, -1].into_iter().enumerate() {
        out[i] = crate::spin_system::mw_transition_frequency(params, mi)? / crate::spin_system::TWO_PI;
    }
    Ok(out)
}
