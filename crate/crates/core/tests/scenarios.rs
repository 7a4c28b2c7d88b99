use std::path::PathBuf;

use mcs_core::runner::{run_scenario, simulate_trace};
use mcs_core::signal_model::undersampled_frequency;
use mcs_core::{NoiseMode, ScenarioConfig};

fn frequency_recovery() -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/frequency_recovery.toml");
    ScenarioConfig::load(&path).unwrap()
}

#[test]
fn reduced_run_count_recovers_alias() {
    let mut cfg = frequency_recovery();
    cfg.protocol.n_runs = 1000;
    let s = run_scenario(&cfg).unwrap().analysis.summary;
    let oracle = undersampled_frequency(1e6, 15.063e-6).unwrap();
    assert!((s.f_u_oracle_hz - oracle).abs() < 1e-9);
    let f = s.f_u_hz.expect("peak");
    assert!((f - oracle).abs() <= s.padded_bin_hz, "{f} vs {oracle}");
    assert!(s.resonant);
}

#[test]
fn noiseless_decay_matches_memory_lifetime() {
    let mut cfg = frequency_recovery();
    cfg.protocol.n_runs = 20;
    cfg.readout.noise = NoiseMode::None;
    let s = run_scenario(&cfg).unwrap().analysis.summary;
    let tau = s.tau_decay_s.unwrap();
    let want = s.tau_memory_expected_s.unwrap();
    assert!((tau / want - 1.0).abs() < 1e-3, "{tau} vs {want}");
}

#[test]
fn config_round_trips_and_seed_controls_output() {
    let cfg = frequency_recovery();
    let back = ScenarioConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
    assert_eq!(back, cfg);

    let mut small = cfg.clone();
    small.protocol.m = 64;
    small.protocol.n_runs = 10;
    let a = simulate_trace(&small).unwrap();
    let b = simulate_trace(&small).unwrap();
    assert_eq!(a.counts, b.counts);
    small.master_seed += 1;
    assert_ne!(simulate_trace(&small).unwrap().counts, a.counts);
}
