//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Exits 0 even when a criterion fails so the rest of the workspace suite
//! still runs; set MCS_ACCEPTANCE_STRICT=1 to turn failures into a nonzero exit.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use mcs_core::analysis::fits;
use mcs_core::analysis::{psd_samples, Window};
use mcs_core::metrics;
use mcs_core::protocol::{mcs_step_states, simulate_odmr};
use mcs_core::pulse_gates::{
    accumulated_phase, cenotn_propagator, cnnote_propagator, population_leakage, strong_mw_propagator, GateSet,
};
use mcs_core::quantum::{max_abs, DensityMatrix4, Mat4, C64};
use mcs_core::rng::{stream, Purpose};
use mcs_core::runner::{self, compare_protocols};
use mcs_core::signal_model::{
    draw_realization, phase_rms, sine_correlation_mc, third_order_sine_correlation, undersampled_frequency,
    SignalConfig, SignalMode,
};
use mcs_core::spin_system::{energy_levels, mhz, mw_transition_frequency, rf_transition_frequency, to_mhz, SpinSystemParams, TWO_PI};
use mcs_core::{Protocol, ScenarioConfig};
use rand::Rng;
use rand_distr::{Distribution, Normal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn z(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn config(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ScenarioConfig::load(&path).expect("scenario config")
}

// -------------------------------------------------------------------- AC1

fn ac1() -> Outcome {
    let p = SpinSystemParams::default();
    let table = energy_levels(&p);
    let reference = [
        (1, 1, 8594.2),
        (1, 0, 8602.0),
        (1, -1, 8599.8),
        (0, 1, -2.28),
        (0, 0, 3.30),
        (0, -1, -1.02),
        (-1, 1, -2858.77),
        (-1, 0, -2855.36),
        (-1, -1, -2861.84),
    ];
    let worst = reference
        .iter()
        .map(|&(ms, mi, e)| (to_mhz(table.get(ms, mi).unwrap()) - e).abs())
        .fold(0.0, f64::max);

    // MW line at fixed nuclear projection m: D - gamma_nv B - m A; the nuclear Zeeman term cancels
    let (d, a, gnv, b) = (2870.0, -2.166, 2.803, 2043.763);
    let mut mw_ok = true;
    let mut mw = Vec::new();
    for (m, nominal) in [(1i8, 2856.5), (0, 2858.7), (-1, 2860.8)] {
        let got = to_mhz(mw_transition_frequency(&p, m).unwrap()).abs();
        let closed = (d - gnv * b - m as f64 * a).abs();
        mw_ok &= (got - closed).abs() <= 0.01 && ((got * 10.0).round() / 10.0 - nominal).abs() < 1e-9;
        mw.push(got);
    }
    let rf = to_mhz(rf_transition_frequency(&p)).abs();
    let rf_ok = (rf - 3.41).abs() <= 0.01;
    outcome(
        worst <= 0.05 && mw_ok && rf_ok,
        format!("levels max |dE| = {worst:.4} MHz; MW = {:.3}/{:.3}/{:.3} MHz; RF = {rf:.4} MHz", mw[0], mw[1], mw[2]),
    )
}

// -------------------------------------------------------------------- AC2

fn reference_mw(area: f64, xi: f64) -> Mat4 {
    let (c, s) = ((area / 2.0).cos(), (area / 2.0).sin());
    let lo = z(0.0, -1.0) * C64::from_polar(s, -xi);
    let hi = z(0.0, -1.0) * C64::from_polar(s, xi);
    let mut m = Mat4::zeros();
    for i in 0..4 {
        m[(i, i)] = z(c, 0.0);
    }
    m[(0, 2)] = lo;
    m[(1, 3)] = lo;
    m[(2, 0)] = hi;
    m[(3, 1)] = hi;
    m
}

fn reference_swap(a: usize, b: usize) -> Mat4 {
    let mut m = Mat4::identity();
    m[(a, a)] = z(0.0, 0.0);
    m[(b, b)] = z(0.0, 0.0);
    m[(a, b)] = z(0.0, -1.0);
    m[(b, a)] = z(0.0, -1.0);
    m
}

fn ac2() -> Outcome {
    let mut exact = true;
    for &(area, xi) in &[(PI / 2.0, 0.0), (PI / 2.0, PI / 2.0), (PI, 0.0), (PI, PI / 2.0), (0.7, -1.3), (2.9, 2.2)] {
        exact &= *strong_mw_propagator(area, xi).matrix() == reference_mw(area, xi);
    }
    exact &= *cnnote_propagator().matrix() == reference_swap(1, 3);
    exact &= *cenotn_propagator().matrix() == reference_swap(2, 3);

    let params = SpinSystemParams::default();
    let ideal = GateSet::ideal();
    let phys = GateSet::physical(&params, 0.01).unwrap();
    let l_mw = population_leakage(&phys.cnnote, &ideal.cnnote);
    let l_rf = population_leakage(&phys.cenotn, &ideal.cenotn);
    outcome(
        exact && l_mw <= 1e-3 && l_rf <= 1e-3,
        format!("ideal gates exact: {exact}; leakage CnNOTe = {l_mw:.2e}, CeNOTn = {l_rf:.2e} (rabi = |A|/100)"),
    )
}

// -------------------------------------------------------------------- AC3

fn reference_states(p0: f64, pk: f64) -> Vec<Mat4> {
    let (s0, c0, sk, ck) = (p0.sin(), p0.cos(), pk.sin(), pk.cos());
    let h = 0.5;
    let q = 0.25;
    let mut out = Vec::new();

    let mut m = Mat4::zeros();
    m[(0, 0)] = z(h, 0.0);
    m[(2, 2)] = z(h, 0.0);
    m[(0, 2)] = z(0.0, h);
    m[(2, 0)] = z(0.0, -h);
    out.push(m);

    let mut m = Mat4::zeros();
    m[(0, 0)] = z(h, 0.0);
    m[(2, 2)] = z(h, 0.0);
    m[(0, 2)] = z(0.0, h) * C64::from_polar(1.0, -p0);
    m[(2, 0)] = z(0.0, -h) * C64::from_polar(1.0, p0);
    out.push(m);

    let mut m = Mat4::zeros();
    m[(0, 0)] = z(h * (1.0 - s0), 0.0);
    m[(2, 2)] = z(h * (1.0 + s0), 0.0);
    m[(0, 2)] = z(0.0, h * c0);
    m[(2, 0)] = z(0.0, -h * c0);
    out.push(m);

    let mut m = Mat4::zeros();
    m[(0, 0)] = z(h * (1.0 - s0), 0.0);
    m[(3, 3)] = z(h * (1.0 + s0), 0.0);
    m[(0, 3)] = z(-h * c0, 0.0);
    m[(3, 0)] = z(-h * c0, 0.0);
    out.push(m);

    let mut m = Mat4::zeros();
    m[(0, 0)] = z(h * (1.0 - s0), 0.0);
    m[(1, 1)] = z(h * (1.0 + s0), 0.0);
    out.push(m);

    let mut m = Mat4::zeros();
    m[(0, 0)] = z(q * (1.0 - s0) * (1.0 - sk), 0.0);
    m[(1, 1)] = z(q * (1.0 + s0) * (1.0 - sk), 0.0);
    m[(2, 2)] = z(q * (1.0 - s0) * (1.0 + sk), 0.0);
    m[(3, 3)] = z(q * (1.0 + s0) * (1.0 + sk), 0.0);
    m[(0, 2)] = z(0.0, q * (1.0 - s0) * ck);
    m[(2, 0)] = z(0.0, -q * (1.0 - s0) * ck);
    m[(1, 3)] = z(0.0, q * (1.0 + s0) * ck);
    m[(3, 1)] = z(0.0, -q * (1.0 + s0) * ck);
    out.push(m);

    let mut m = Mat4::zeros();
    m[(0, 0)] = z(q * (1.0 - s0) * (1.0 - sk), 0.0);
    m[(1, 1)] = z(q * (1.0 + s0) * (1.0 + sk), 0.0);
    m[(2, 2)] = z(q * (1.0 - s0) * (1.0 + sk), 0.0);
    m[(3, 3)] = z(q * (1.0 + s0) * (1.0 - sk), 0.0);
    m[(0, 2)] = z(0.0, q * (1.0 - s0) * ck);
    m[(2, 0)] = z(0.0, -q * (1.0 - s0) * ck);
    m[(1, 3)] = z(0.0, -q * (1.0 + s0) * ck);
    m[(3, 1)] = z(0.0, q * (1.0 + s0) * ck);
    out.push(m);
    out
}

fn ac3() -> Outcome {
    let gates = GateSet::ideal();
    let mut rng = stream(3, Purpose::Synthetic, 0);
    let mut worst: f64 = 0.0;
    let mut worst_p: f64 = 0.0;
    for _ in 0..20 {
        let p0 = rng.random_range(-PI..PI);
        let pk = rng.random_range(-PI..PI);
        let steps = mcs_step_states(&gates, p0, pk);
        let got: Vec<&DensityMatrix4> = steps.rho_ii.iter().chain(steps.rho_iii.iter()).collect();
        for (g, want) in got.iter().zip(reference_states(p0, pk)) {
            worst = worst.max(max_abs(&(g.matrix() - want)));
        }
        let p = steps.rho_iii[2].p0_electron();
        worst_p = worst_p.max((p - 0.5 * (1.0 + p0.sin() * pk.sin())).abs());
    }
    outcome(
        worst <= 1e-10 && worst_p <= 1e-10,
        format!("20 phase pairs: max element error {worst:.1e}, max |P0 - (1 + sin sin)/2| {worst_p:.1e}"),
    )
}

// -------------------------------------------------------------------- AC4

fn ac4() -> Outcome {
    let ft = metrics::f_t(1991, 15.063e-6, 101.57e-6).unwrap();
    let tl = metrics::effective_memory_lifetime(0.7, 1050.0, 15.063e-6).unwrap();
    let tb = metrics::lifetime_vs_field(0.2044).unwrap();
    let pass = (31.5..=31.7).contains(&ft.f_t)
        && (998.0..=1000.0).contains(&ft.time_ratio)
        && (tl - 15.47e-3).abs() <= 0.01e-3
        && (tb - 15.8e-3).abs() <= 0.1e-3;
    outcome(
        pass,
        format!(
            "f_T = {:.3}, time ratio = {:.2}, lifetime = {:.3} ms, field model = {:.3} ms",
            ft.f_t,
            ft.time_ratio,
            tl * 1e3,
            tb * 1e3
        ),
    )
}

// -------------------------------------------------------------------- AC5

fn lorentz_fwhm(values: &[f64], dt: f64, pad: usize, window: Window, half_bins: f64) -> f64 {
    let s = psd_samples(values, dt, pad, window).unwrap();
    let i = s.peak_index().unwrap();
    let hw = half_bins * s.raw_bin_width();
    fits::fit_lorentzian(&s, None, Some((s.freqs[i] - hw, s.freqs[i] + hw))).unwrap().fwhm()
}

fn ac5() -> Outcome {
    let cfg = config("frequency_recovery.toml");
    let out = runner::run_scenario(&cfg).unwrap();
    let s = &out.analysis.summary;
    let t = cfg.protocol.t_us * 1e-6;
    let oracle = undersampled_frequency(cfg.signal.nu_s_hz, t).unwrap();
    let m_lim = metrics::m_limit(cfg.protocol.t1_nuc_laser_us.unwrap() * 1e-6, cfg.protocol.t_laser_ns * 1e-9).unwrap();
    let t_mem = metrics::effective_memory_lifetime(cfg.protocol.t1_nuc_s.unwrap(), m_lim, t).unwrap();
    let model: Vec<f64> = (1..=cfg.protocol.m)
        .map(|k| {
            let tk = k as f64 * t;
            (TWO_PI * oracle * tk).cos() * (-tk / t_mem).exp()
        })
        .collect();
    let fwhm_ref = lorentz_fwhm(&model, t, cfg.analysis.pad_factor, cfg.analysis.window, cfg.analysis.fit_half_width_bins);

    let df = s.f_u_hz.map(|f| (f - oracle).abs());
    let f_ok = df.is_some_and(|d| d <= s.padded_bin_hz);
    let tau_ok = s.tau_decay_s.is_some_and(|tau| (tau / t_mem - 1.0).abs() <= 0.15);
    let fwhm_ok = s.fwhm_hz.is_some_and(|w| (w / fwhm_ref - 1.0).abs() <= 0.25);
    outcome(
        f_ok && tau_ok && fwhm_ok,
        format!(
            "N = {}: f_u = {:.2} Hz vs {oracle:.2} Hz (bin {:.2} Hz); tau = {:.5} s vs {t_mem:.5} s; FWHM = {:.2} Hz vs exact-model {fwhm_ref:.2} Hz",
            cfg.protocol.n_runs,
            s.f_u_hz.unwrap_or(f64::NAN),
            s.padded_bin_hz,
            s.tau_decay_s.unwrap_or(f64::NAN),
            s.fwhm_hz.unwrap_or(f64::NAN)
        ),
    )
}

// -------------------------------------------------------------------- AC6

fn ac6() -> Outcome {
    let cfg = config("ensemble_scaling.toml");
    let reps = cfg.analysis.compare_repetitions;
    let table = compare_protocols(&cfg, &[1, 4, 16, 64], reps).unwrap();
    let slope = |p: Protocol| table.slopes[p.name()].unwrap_or(f64::NAN);
    let (m, c, q) = (slope(Protocol::Mcs), slope(Protocol::Cs), slope(Protocol::Qdyne));
    let pass = reps >= 50 && (m - 0.5).abs() <= 0.07 && (c - 0.5).abs() <= 0.07 && q.abs() <= 0.07;
    outcome(pass, format!("{reps} repetitions: slopes MCS {m:.3}, CS {c:.3}, QDyne {q:.3}"))
}

// -------------------------------------------------------------------- AC7

fn ac7() -> Outcome {
    let nu = 1e6;
    let gamma = mhz(2.803);
    let t_dd = 4e-6;
    let n_theta = 16;
    let delays: Vec<f64> = (0..n_theta).map(|j| j as f64 / (n_theta as f64 * nu)).collect();
    let mut per_phi = Vec::new();
    let mut ratio_2w = f64::NAN;
    for (i, phi) in [0.3, 0.7, 1.0].into_iter().enumerate() {
        let cfg = SignalConfig {
            mode: SignalMode::Statistical,
            nu_s: nu,
            b_amp: phi / phase_rms(gamma, 1.0, t_dd),
            n_sensors: 1,
        };
        let mut rng = stream(7, Purpose::Synthetic, i as u64);
        let est = sine_correlation_mc(&cfg, gamma, t_dd, &delays, 400_000, &mut rng);
        let worst = est
            .iter()
            .enumerate()
            .map(|(j, &(mean, se))| {
                let theta = TWO_PI * j as f64 / n_theta as f64;
                (mean - third_order_sine_correlation(phi, theta)).abs() / se
            })
            .fold(0.0, f64::max);
        per_phi.push((phi, worst));
        if phi == 1.0 {
            let harmonic = |n: f64| {
                let (re, im) = est.iter().enumerate().fold((0.0, 0.0), |(re, im), (j, &(m, _))| {
                    let a = n * TWO_PI * j as f64 / n_theta as f64;
                    (re + m * a.cos(), im + m * a.sin())
                });
                re.hypot(im)
            };
            ratio_2w = harmonic(2.0) / harmonic(1.0);
        }
    }
    let expansion_ok = per_phi.iter().all(|&(_, w)| w <= 3.0);
    let devs: Vec<String> = per_phi.iter().map(|(p, w)| format!("{p}: {w:.0}")).collect();
    let harmonic_ok = ratio_2w < 0.005;
    outcome(
        expansion_ok && harmonic_ok,
        format!(
            "third-order expansion: worst deviation in sigma by phi_rms {} [{}]; 2w/w at phi_rms = 1: {:.3}% [{}]",
            devs.join(", "),
            if expansion_ok { "ok" } else { "fail" },
            ratio_2w * 100.0,
            if harmonic_ok { "ok" } else { "fail" }
        ),
    )
}

// -------------------------------------------------------------------- AC8

fn ac8() -> Outcome {
    let params = SpinSystemParams::default();

    // ODMR after initialization, with fluorescence noise
    let pops = [0.606, 0.285, 0.109];
    let grid: Vec<f64> = (0..800).map(|i| 2854.5e6 + i as f64 * 1e4).collect();
    let mut rng = stream(8, Purpose::Synthetic, 0);
    let noise = Normal::new(0.0, 2e-3).unwrap();
    let odmr: Vec<f64> = simulate_odmr(&params, pops, 0.25, 250e3, &grid)
        .unwrap()
        .into_iter()
        .map(|y| y + noise.sample(&mut rng))
        .collect();
    let tg = fits::fit_triple_gaussian(&grid, &odmr).unwrap();
    let pop_err = (0..3).map(|i| (tg.populations[i] - pops[i]).abs()).fold(0.0, f64::max);

    // phase-averaged Ramsey signal vs accumulation time for an unlocked 14.28 uT tone
    let b = 0.1428;
    let sig = SignalConfig { mode: SignalMode::Classical, nu_s: 1e6, b_amp: b, n_sensors: 1 };
    let xs: Vec<f64> = (0..60).map(|i| 0.1e-6 + i as f64 * 0.05e-6).collect();
    let mut rng = stream(8, Purpose::Synthetic, 1);
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let n = 4000;
            (0..n)
                .map(|_| {
                    let r = draw_realization(&sig, 0, &mut rng);
                    accumulated_phase(params.gamma_nv, r.envelope, x, r.xi0).cos()
                })
                .sum::<f64>()
                / n as f64
        })
        .collect();
    let bf = fits::fit_bessel_j0(&xs, &ys, params.gamma_nv).unwrap();
    let b_err = (bf.field_tesla() / 14.28e-6 - 1.0).abs();

    // coverage of the 95% frequency interval
    let (a, f, phase, off, tau) = (1.0, 4182.0, 0.4, 0.0, 15e-3);
    let dt = 15.063e-6;
    let xs: Vec<f64> = (1..=500).map(|k| k as f64 * dt).collect();
    let clean: Vec<f64> = xs
        .iter()
        .map(|&x| a * (TWO_PI * f * x + phase).cos() * (-x / tau).exp() + off)
        .collect();
    let noise = Normal::new(0.0, a / 10.0).unwrap();
    let mut covered = 0;
    let mut fitted = 0;
    for rep in 0..200 {
        let mut rng = stream(8, Purpose::Synthetic, 100 + rep);
        let ys: Vec<f64> = clean.iter().map(|y| y + noise.sample(&mut rng)).collect();
        if let Ok(fit) = fits::fit_decaying_sinusoid_xy(&xs, &ys, None) {
            fitted += 1;
            if (fit.frequency - f).abs() <= 1.96 * fit.std_errors[1] {
                covered += 1;
            }
        }
    }
    let coverage = covered as f64 / 200.0;
    outcome(
        pop_err <= 0.02 && b_err <= 0.01 && coverage >= 0.9,
        format!(
            "populations {:.3}/{:.3}/{:.3} (max err {pop_err:.4}); B = {:.3} uT ({:.2}%); frequency CI coverage {:.1}% ({fitted}/200 fits)",
            tg.populations[0],
            tg.populations[1],
            tg.populations[2],
            bf.field_tesla() * 1e6,
            b_err * 100.0,
            coverage * 100.0
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("AC1", ac1),
        ("AC2", ac2),
        ("AC3", ac3),
        ("AC4", ac4),
        ("AC5", ac5),
        ("AC6", ac6),
        ("AC7", ac7),
        ("AC8", ac8),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let start = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("{name} {verdict} {} [{:.1} s]", o.detail, start.elapsed().as_secs_f64());
        if !o.pass {
            failed.push(name);
        }
    }
    println!("acceptance: {}/8 criteria pass; failing: {:?}", 8 - failed.len(), failed);
    if !failed.is_empty() && std::env::var("MCS_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
