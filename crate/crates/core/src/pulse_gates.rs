//! Rotating-frame Hamiltonians, ideal and finite-duration gate propagators,
//! and the XY8 phase-accumulation block.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_finite, require_positive, Error, Result};
use crate::quantum::{c, evolve_hermitian, Mat4, Propagator4, C64, I};
use crate::signal_model::{phase_at, SignalRealization};
use crate::spin_system::SpinSystemParams;

/// Relative tau mismatch below which an XY8 block counts as resonant.
pub const RESONANCE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseKind {
    StrongMw,
    SelectiveMwCnNotE,
    SelectiveRfCeNotN,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub kind: PulseKind,
    /// Rabi frequency, rad/s.
    pub rabi: f64,
    /// Drive phase, rad.
    pub phase: f64,
    /// Pulse area rabi * t, rad.
    pub area: f64,
    pub detuning_mw: f64,
    pub detuning_rf: f64,
}

impl PulseSpec {
    pub fn new(kind: PulseKind, rabi: f64, phase: f64, area: f64) -> Self {
        Self {
            kind,
            rabi,
            phase,
            area,
            detuning_mw: 0.0,
            detuning_rf: 0.0,
        }
    }

    pub fn duration(&self) -> f64 {
        self.area / self.rabi
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("rabi", self.rabi)?;
        require_finite("phase", self.phase)?;
        require_finite("area", self.area)?;
        require_finite("detuning_mw", self.detuning_mw)?;
        require_finite("detuning_rf", self.detuning_rf)?;
        if self.area < 0.0 {
            return Err(invalid("area", "must be >= 0"));
        }
        Ok(())
    }
}

/// Non-selective electron rotation of area `area` about an axis at angle `phase`.
pub fn strong_mw_propagator(area: f64, phase: f64) -> Propagator4 {
    let co = c((area / 2.0).cos());
    let s = (area / 2.0).sin();
    let up = -I * C64::from_polar(1.0, -phase) * s;
    let down = -I * C64::from_polar(1.0, phase) * s;
    let mut m = Mat4::zeros();
    for k in 0..4 {
        m[(k, k)] = co;
    }
    m[(0, 2)] = up;
    m[(1, 3)] = up;
    m[(2, 0)] = down;
    m[(3, 1)] = down;
    Propagator4::new_unchecked(m)
}

/// Electron flip conditioned on m_I = +1: |2> <-> |4>.
pub fn cnnote_propagator() -> Propagator4 {
    let mut m = Mat4::zeros();
    m[(0, 0)] = c(1.0);
    m[(2, 2)] = c(1.0);
    m[(1, 3)] = -I;
    m[(3, 1)] = -I;
    Propagator4::new_unchecked(m)
}

/// Nuclear flip conditioned on m_s = -1: |3> <-> |4>.
pub fn cenotn_propagator() -> Propagator4 {
    let mut m = Mat4::zeros();
    m[(0, 0)] = c(1.0);
    m[(1, 1)] = c(1.0);
    m[(2, 3)] = -I;
    m[(3, 2)] = -I;
    Propagator4::new_unchecked(m)
}

/// Net effect of a resonant DD block: multiplies the electron coherence by e^{-i phi}.
pub fn phase_accumulation(phi: f64) -> Propagator4 {
    let a = C64::from_polar(1.0, -phi / 2.0);
    let b = C64::from_polar(1.0, phi / 2.0);
    Propagator4::new_unchecked(Mat4::from_diagonal(&nalgebra::Vector4::new(a, a, b, b)))
}

/// Interaction-picture RWA Hamiltonian with only the drive of `spec.kind` on.
///
/// Selective pulses keep the -A on |1>, which is what makes them selective.
/// The strong pulse is the hard-drive limit, so the hyperfine term is left out.
pub fn rwa_hamiltonian(spec: &PulseSpec, params: &SpinSystemParams) -> Mat4 {
    let mut h = Mat4::zeros();
    h[(1, 1)] = c(spec.detuning_rf);
    h[(2, 2)] = c(-spec.detuning_mw);
    h[(3, 3)] = c(spec.detuning_rf - spec.detuning_mw);
    let half = 0.5 * spec.rabi;
    match spec.kind {
        PulseKind::StrongMw => {
            set_mw(&mut h, half, spec.phase);
        }
        PulseKind::SelectiveMwCnNotE => {
            h[(0, 0)] = c(-params.a_par);
            set_mw(&mut h, half, spec.phase);
        }
        PulseKind::SelectiveRfCeNotN => {
            h[(0, 0)] = c(-params.a_par);
            let w = C64::from_polar(half, spec.phase);
            h[(0, 1)] = w;
            h[(1, 0)] = w.conj();
            h[(2, 3)] = w;
            h[(3, 2)] = w.conj();
        }
    }
    h
}

fn set_mw(h: &mut Mat4, half: f64, xi: f64) {
    let w = C64::from_polar(half, -xi);
    h[(0, 2)] = w;
    h[(1, 3)] = w;
    h[(2, 0)] = w.conj();
    h[(3, 1)] = w.conj();
}

/// exp(-i H t) with t = area / rabi.
pub fn finite_duration_propagator(spec: &PulseSpec, params: &SpinSystemParams) -> Result<Propagator4> {
    spec.validate()?;
    let t = spec.duration();
    let h = rwa_hamiltonian(spec, params);
    Propagator4::new(evolve_hermitian(&h, t))
}

/// Largest change in any transition probability |U_ij|^2 between two gates.
pub fn population_leakage(a: &Propagator4, b: &Propagator4) -> f64 {
    let (a, b) = (a.matrix(), b.matrix());
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            worst = worst.max((a[(i, j)].norm_sqr() - b[(i, j)].norm_sqr()).abs());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvolutionMode {
    #[default]
    Ideal,
    Physical,
}

impl std::str::FromStr for EvolutionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(Self::Ideal),
            "physical" => Ok(Self::Physical),
            _ => Err(invalid("mode", format!("expected ideal or physical, got {s}"))),
        }
    }
}

/// The gates a protocol needs, built once per run configuration.
#[derive(Debug, Clone, Copy)]
pub struct GateSet {
    pub mode: EvolutionMode,
    pub pi2_x: Propagator4,
    pub pi2_y: Propagator4,
    pub pi2_minus_y: Propagator4,
    pub cnnote: Propagator4,
    pub cenotn: Propagator4,
}

impl GateSet {
    pub fn ideal() -> Self {
        use std::f64::consts::FRAC_PI_2;
        Self {
            mode: EvolutionMode::Ideal,
            pi2_x: strong_mw_propagator(FRAC_PI_2, 0.0),
            pi2_y: strong_mw_propagator(FRAC_PI_2, FRAC_PI_2),
            pi2_minus_y: strong_mw_propagator(FRAC_PI_2, -FRAC_PI_2),
            cnnote: cnnote_propagator(),
            cenotn: cenotn_propagator(),
        }
    }

    /// Finite-duration gates; selective drives run at `selective_fraction * |A|`.
    pub fn physical(params: &SpinSystemParams, selective_fraction: f64) -> Result<Self> {
        use std::f64::consts::{FRAC_PI_2, PI};
        require_positive("selective_rabi_fraction", selective_fraction)?;
        let g = selective_fraction * params.a_par.abs();
        // strong pulses are instantaneous in the hard-drive limit; any rate works
        let strong = 100.0 * params.a_par.abs().max(1.0);
        let pulse = |kind, rabi, phase, area| finite_duration_propagator(&PulseSpec::new(kind, rabi, phase, area), params);
        Ok(Self {
            mode: EvolutionMode::Physical,
            pi2_x: pulse(PulseKind::StrongMw, strong, 0.0, FRAC_PI_2)?,
            pi2_y: pulse(PulseKind::StrongMw, strong, FRAC_PI_2, FRAC_PI_2)?,
            pi2_minus_y: pulse(PulseKind::StrongMw, strong, -FRAC_PI_2, FRAC_PI_2)?,
            cnnote: pulse(PulseKind::SelectiveMwCnNotE, g, 0.0, PI)?,
            cenotn: pulse(PulseKind::SelectiveRfCeNotN, g, 0.0, PI)?,
        })
    }

    pub fn new(mode: EvolutionMode, params: &SpinSystemParams, selective_fraction: f64) -> Result<Self> {
        match mode {
            EvolutionMode::Ideal => Ok(Self::ideal()),
            EvolutionMode::Physical => Self::physical(params, selective_fraction),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Xy8Spec {
    pub n_repeats: u32,
    /// Centre-to-centre pi-pulse spacing, s.
    pub tau: f64,
}

impl Xy8Spec {
    pub fn new(n_repeats: u32, tau: f64) -> Result<Self> {
        let s = Self { n_repeats, tau };
        s.validate()?;
        Ok(s)
    }

    /// Block tuned to `nu_s`: tau = 1/(2 nu_s).
    pub fn resonant(n_repeats: u32, nu_s: f64) -> Result<Self> {
        require_positive("nu_s", nu_s)?;
        Self::new(n_repeats, 0.5 / nu_s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_repeats == 0 {
            return Err(invalid("xy8_repeats", "must be >= 1"));
        }
        require_positive("tau", self.tau)
    }

    pub fn t_dd(&self) -> f64 {
        8.0 * self.n_repeats as f64 * self.tau
    }

    pub fn resonance_mismatch(&self, nu_s: f64) -> f64 {
        let want = 0.5 / nu_s;
        (self.tau - want).abs() / self.tau
    }

    pub fn is_resonant(&self, nu_s: f64) -> bool {
        self.resonance_mismatch(nu_s) <= RESONANCE_TOL
    }
}

/// phi = (2/pi) gamma B t cos(xi), with gamma in rad/s/G and B in G.
pub fn accumulated_phase(gamma_nv: f64, b: f64, t_dd: f64, xi: f64) -> f64 {
    std::f64::consts::FRAC_2_PI * gamma_nv * b * t_dd * xi.cos()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseResult {
    pub phase: f64,
    /// False when tau misses 1/(2 nu_s) by more than [`RESONANCE_TOL`].
    pub resonant: bool,
}

/// Phase picked up by an XY8 block starting `delta_t` after the reference time.
pub fn xy8_phase(
    spec: &Xy8Spec,
    params: &SpinSystemParams,
    realization: &SignalRealization,
    nu_s: f64,
    delta_t: f64,
) -> PhaseResult {
    let xi = phase_at(realization, nu_s, delta_t);
    PhaseResult {
        phase: accumulated_phase(params.gamma_nv, realization.envelope, spec.t_dd(), xi),
        resonant: spec.is_resonant(nu_s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{max_abs, DensityMatrix4};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn ket(u: &Propagator4, from: usize) -> [C64; 4] {
        u.column(from)
    }

    #[test]
    fn strong_zero_area_is_identity() {
        assert!(max_abs(&(strong_mw_propagator(0.0, 1.3).matrix() - Mat4::identity())) == 0.0);
    }

    #[test]
    fn strong_pi_maps_1_to_minus_i_3() {
        let k = ket(&strong_mw_propagator(PI, 0.0), 0);
        assert!((k[2] - (-I)).norm() < 1e-15);
        assert!(k[0].norm() < 1e-15 && k[1].norm() == 0.0 && k[3].norm() == 0.0);
    }

    #[test]
    fn two_half_y_rotations_invert() {
        let u = strong_mw_propagator(FRAC_PI_2, FRAC_PI_2);
        let out = u.apply(&u.apply(&DensityMatrix4::pure(0)));
        let p = out.populations();
        assert!((p[2] - 1.0).abs() < 1e-14 && p[0].abs() < 1e-14);
    }

    #[test]
    fn cnnote_entries() {
        let u = cnnote_propagator();
        assert_eq!(ket(&u, 1)[3], -I);
        assert_eq!(ket(&u, 3)[1], -I);
        assert_eq!(ket(&u, 0)[0], c(1.0));
        let sq = u * u;
        let m = sq.matrix();
        assert_eq!(m[(1, 1)], c(-1.0));
        assert_eq!(m[(3, 3)], c(-1.0));
        assert_eq!(m[(0, 0)], c(1.0));
    }

    #[test]
    fn cenotn_entries_and_population_swap() {
        let u = cenotn_propagator();
        assert_eq!(ket(&u, 2)[3], -I);
        assert_eq!(ket(&u, 0)[0], c(1.0));
        let rho = DensityMatrix4::from_populations([0.5, 0.0, 0.5, 0.0]).unwrap();
        assert_eq!(u.apply(&rho).populations(), [0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn all_ideal_gates_unitary() {
        let g = GateSet::ideal();
        for u in [g.pi2_x, g.pi2_y, g.pi2_minus_y, g.cnnote, g.cenotn, phase_accumulation(0.7)] {
            assert!(u.unitarity_deviation() < 1e-12);
        }
    }

    #[test]
    fn finite_strong_matches_ideal() {
        let p = SpinSystemParams::default();
        for xi in [0.0, 0.4, FRAC_PI_2, 2.0] {
            let spec = PulseSpec::new(PulseKind::StrongMw, 2.0 * PI * 20e6, xi, PI);
            let u = finite_duration_propagator(&spec, &p).unwrap();
            assert!(max_abs(&(u.matrix() - strong_mw_propagator(PI, xi).matrix())) < 1e-9);
        }
    }

    #[test]
    fn finite_zero_area_is_identity() {
        let p = SpinSystemParams::default();
        let spec = PulseSpec::new(PulseKind::SelectiveRfCeNotN, 1e5, 0.0, 0.0);
        let u = finite_duration_propagator(&spec, &p).unwrap();
        assert!(max_abs(&(u.matrix() - Mat4::identity())) < 1e-15);
    }

    #[test]
    fn finite_requires_positive_rabi() {
        let p = SpinSystemParams::default();
        let spec = PulseSpec::new(PulseKind::StrongMw, 0.0, 0.0, PI);
        assert!(finite_duration_propagator(&spec, &p).is_err());
    }

    #[test]
    fn selective_gates_converge() {
        let p = SpinSystemParams::default();
        let a = p.a_par.abs();
        for (kind, ideal) in [
            (PulseKind::SelectiveRfCeNotN, cenotn_propagator()),
            (PulseKind::SelectiveMwCnNotE, cnnote_propagator()),
        ] {
            let leak: Vec<f64> = [10.0, 30.0, 100.0]
                .iter()
                .map(|d| {
                    let u = finite_duration_propagator(&PulseSpec::new(kind, a / d, 0.0, PI), &p).unwrap();
                    population_leakage(&u, &ideal)
                })
                .collect();
            assert!(leak[0] > leak[1] && leak[1] > leak[2], "{kind:?} {leak:?}");
            assert!(leak[2] <= 1e-3);
        }
    }

    #[test]
    fn xy8_phase_examples() {
        let p = SpinSystemParams::default();
        let spec = Xy8Spec::resonant(1, 1e6).unwrap();
        assert!((spec.t_dd() - 4e-6).abs() < 1e-18);
        let r = SignalRealization { envelope: 0.1428, xi0: 0.0, sensor_index: 0 };
        let out = xy8_phase(&spec, &p, &r, 1e6, 0.0);
        // (2/pi) * 2pi * 2.803e6 * 0.1428 * 4e-6
        let want = 4.0 * 2.803e6 * 0.1428 * 4e-6;
        assert!((out.phase - want).abs() < 1e-12 && (want - 6.404).abs() < 1e-3);
        assert!(out.resonant);
        let r0 = SignalRealization { envelope: 0.0, ..r };
        assert_eq!(xy8_phase(&spec, &p, &r0, 1e6, 0.0).phase, 0.0);
        let rq = SignalRealization { xi0: FRAC_PI_2, ..r };
        assert!(xy8_phase(&spec, &p, &rq, 1e6, 0.0).phase.abs() < 1e-12);
        let off = Xy8Spec::new(1, 0.51e-6).unwrap();
        assert!(!xy8_phase(&off, &p, &r, 1e6, 0.0).resonant);
    }

    proptest! {
        #[test]
        fn strong_drive_is_nuclear_independent(area in 0.0f64..7.0, xi in -4.0f64..4.0, a in 0.0f64..1.0) {
            let u = strong_mw_propagator(area, xi);
            prop_assert!(u.unitarity_deviation() < 1e-12);
            let rho = DensityMatrix4::from_populations([a / 2.0, a / 2.0, (1.0 - a) / 2.0, (1.0 - a) / 2.0]).unwrap();
            let p = u.apply(&rho).populations();
            prop_assert!((p[0] - p[1]).abs() < 1e-14 && (p[2] - p[3]).abs() < 1e-14);
        }

        #[test]
        fn controlled_gates_are_population_involutions(p in proptest::collection::vec(0.0f64..1.0, 4)) {
            let s: f64 = p.iter().sum::<f64>() + 1e-9;
            let pops = [p[0] / s, p[1] / s, p[2] / s, p[3] / s];
            let total: f64 = pops.iter().sum();
            let pops = [pops[0] / total, pops[1] / total, pops[2] / total, 1.0 - (pops[0] + pops[1] + pops[2]) / total];
            prop_assume!(pops[3] >= 0.0);
            let rho = DensityMatrix4::from_populations(pops).unwrap();
            for u in [cnnote_propagator(), cenotn_propagator()] {
                let twice = u.apply(&u.apply(&rho)).populations();
                for k in 0..4 { prop_assert!((twice[k] - pops[k]).abs() < 1e-14); }
            }
        }

        #[test]
        fn finite_duration_always_unitary(kind in 0usize..3, frac in 0.001f64..2.0, xi in -3.2f64..3.2, area in 0.0f64..10.0, dm in -1e6f64..1e6, dr in -1e6f64..1e6) {
            let p = SpinSystemParams::default();
            let kinds = [PulseKind::StrongMw, PulseKind::SelectiveMwCnNotE, PulseKind::SelectiveRfCeNotN];
            let mut spec = PulseSpec::new(kinds[kind], frac * p.a_par.abs(), xi, area);
            spec.detuning_mw = dm;
            spec.detuning_rf = dr;
            let u = finite_duration_propagator(&spec, &p).unwrap();
            prop_assert!(u.unitarity_deviation() < 1e-12);
        }
    }
}
