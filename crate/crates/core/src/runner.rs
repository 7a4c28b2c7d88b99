//! Scenario orchestration: simulate traces in parallel, analyze them and
//! write the output bundle; protocol comparison tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, fits, psd, PowerSpectrum, SpectrumFit, TimeFit};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::metrics;
use crate::protocol::{Engine, Protocol};
use crate::pulse_gates::{EvolutionMode, GateSet};
use crate::readout::{readout_many, NoiseMode, ReadoutParams, TimeTrace, TraceMetadata, SCHEMA_VERSION};
use crate::rng::{derive_seed, stream, Purpose};
use crate::signal_model::{draw_realization, undersampled_frequency};
use crate::spin_system::TWO_PI;

/// Units summed per parallel task; fixed so results do not depend on thread count.
const CHUNK: usize = 32;

pub fn build_engine(cfg: &ScenarioConfig) -> Result<Engine> {
    let params = cfg.spin_params();
    let gates = GateSet::new(cfg.mode, &params, cfg.gates.selective_rabi_fraction)?;
    Engine::new(cfg.protocol_config()?, params, gates, cfg.signal.nu_s_hz)
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Independent simulation units: sensors x runs for MCS/CS, runs for QDyne.
fn unit_count(cfg: &ScenarioConfig) -> usize {
    match cfg.protocol.kind {
        Protocol::Qdyne => cfg.protocol.n_runs,
        _ => cfg.protocol.n_runs * cfg.signal.n_sensors as usize,
    }
}

/// Counts of one unit for acquisitions 1..=len.
fn unit_counts(engine: &Engine, cfg: &ScenarioConfig, ro: &ReadoutParams, seed: u64, u: usize, len: usize) -> Result<Vec<f64>> {
    let sig = cfg.signal_config();
    let n_sensors = cfg.signal.n_sensors;
    let mut read = stream(seed, Purpose::Readout, u as u64);
    match cfg.protocol.kind {
        Protocol::Mcs => {
            let mut rng = stream(seed, Purpose::Signal, u as u64);
            let r = draw_realization(&sig, (u % n_sensors as usize) as u32, &mut rng);
            Ok(engine.mcs_run(&r)?.iter().map(|rec| readout_many(rec.p0_e, 1, ro, &mut read)).collect())
        }
        Protocol::Cs => (1..=len)
            .map(|k| {
                // every CS record is its own sequence with a fresh signal phase
                let mut rng = stream(seed, Purpose::Signal, (u * len + k - 1) as u64);
                let r = draw_realization(&sig, (u % n_sensors as usize) as u32, &mut rng);
                Ok(readout_many(engine.cs_run(&r, k)?.p0_e, 1, ro, &mut read))
            })
            .collect(),
        Protocol::Qdyne => {
            let mut rng = stream(seed, Purpose::Signal, u as u64);
            let sensors: Vec<_> = (0..n_sensors).map(|s| draw_realization(&sig, s, &mut rng)).collect();
            Ok(engine
                .qdyne_run_len(&sensors, len)?
                .iter()
                .map(|rec| readout_many(rec.p0_e, n_sensors as u64, ro, &mut read))
                .collect())
        }
    }
}

fn sum_units(engine: &Engine, cfg: &ScenarioConfig, seed: u64, len: usize, parallel: bool) -> Result<Vec<f64>> {
    let ro = cfg.readout_params();
    let units = unit_count(cfg);
    let chunk = |c: usize| -> Result<Vec<f64>> {
        let mut acc = vec![0.0; len];
        for u in (c * CHUNK)..((c + 1) * CHUNK).min(units) {
            for (a, v) in acc.iter_mut().zip(unit_counts(engine, cfg, &ro, seed, u, len)?) {
                *a += v;
            }
        }
        Ok(acc)
    };
    let n_chunks = units.div_ceil(CHUNK);
    let partial: Vec<Result<Vec<f64>>> = if parallel {
        (0..n_chunks).into_par_iter().map(chunk).collect()
    } else {
        (0..n_chunks).map(chunk).collect()
    };
    let mut total = vec![0.0; len];
    for p in partial {
        for (t, v) in total.iter_mut().zip(p?) {
            *t += v;
        }
    }
    Ok(total)
}

fn make_trace(cfg: &ScenarioConfig, counts: Vec<f64>) -> Result<TimeTrace> {
    let period = cfg.protocol_config()?.period();
    let k: Vec<usize> = (1..=counts.len()).collect();
    Ok(TimeTrace {
        times: k.iter().map(|&k| k as f64 * period).collect(),
        k,
        counts,
        n_runs: cfg.protocol.n_runs,
        metadata: TraceMetadata {
            schema_version: SCHEMA_VERSION,
            master_seed: cfg.master_seed,
            period,
            config: serde_json::to_value(cfg)?,
        },
    })
}

/// Monte-Carlo time trace for the scenario.
pub fn simulate_trace(cfg: &ScenarioConfig) -> Result<TimeTrace> {
    cfg.validate()?;
    let engine = build_engine(cfg)?;
    let counts = with_pool(cfg.workers, || sum_units(&engine, cfg, cfg.master_seed, cfg.protocol.m, true))??;
    make_trace(cfg, counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallTime {
    pub per_run_s: f64,
    pub total_s: f64,
}

pub fn wall_time(cfg: &ScenarioConfig) -> Result<WallTime> {
    let p = cfg.protocol_config()?;
    let m = p.m as f64;
    let per_run = match p.protocol {
        Protocol::Mcs => p.t_init + m * p.period(),
        Protocol::Cs => m * p.t_init + m * (m + 1.0) / 2.0 * p.period(),
        Protocol::Qdyne => m * p.period(),
    };
    Ok(WallTime {
        per_run_s: per_run,
        total_s: per_run * p.n as f64,
    })
}

/// Configured memory lifetime seen by the trace, if any.
pub fn expected_decay_time(cfg: &ScenarioConfig) -> Result<Option<f64>> {
    let p = cfg.protocol_config()?;
    let per_period = match p.protocol {
        Protocol::Mcs => p.decay_factor(p.period(), p.lasers_per_acquisition),
        Protocol::Cs => p.decay_factor(p.period(), 0),
        Protocol::Qdyne => 1.0,
    };
    Ok((per_period < 1.0).then(|| -p.period() / per_period.ln()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub master_seed: u64,
    pub protocol: Protocol,
    pub mode: EvolutionMode,
    pub noise: NoiseMode,
    pub f_u_oracle_hz: f64,
    pub f_u_hz: Option<f64>,
    pub f_u_std_err_hz: Option<f64>,
    pub padded_bin_hz: f64,
    pub fwhm_hz: Option<f64>,
    pub tau_decay_s: Option<f64>,
    pub tau_memory_expected_s: Option<f64>,
    pub oscillation_frequency_hz: Option<f64>,
    pub noise_floor_std: Option<f64>,
    pub sensitivity_t_per_sqrt_hz: Option<f64>,
    pub wall_time: WallTime,
    pub resonant: bool,
    pub fit_errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport<T> {
    pub fit: Option<T>,
    pub error: Option<String>,
}

impl<T> FitReport<T> {
    fn from(r: Result<T>) -> Self {
        match r {
            Ok(fit) => Self { fit: Some(fit), error: None },
            Err(e) => Self { fit: None, error: Some(e.to_string()) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fits {
    pub schema_version: u32,
    pub lorentzian: FitReport<SpectrumFit>,
    pub decaying_sinusoid: FitReport<TimeFit>,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub spectrum: PowerSpectrum,
    pub fits: Fits,
    pub summary: Summary,
}

/// Spectrum, fits and summary for a trace simulated from `cfg`.
pub fn analyze(trace: &TimeTrace, cfg: &ScenarioConfig) -> Result<Analysis> {
    let spectrum = psd(trace, cfg.analysis.pad_factor, cfg.analysis.window)?;
    let period = trace.sample_interval()?;
    let f_u_oracle = undersampled_frequency(cfg.signal.nu_s_hz, period)?;
    let range = spectrum.peak_index().map(|i| {
        let hw = cfg.analysis.fit_half_width_bins * spectrum.raw_bin_width();
        (spectrum.freqs[i] - hw, spectrum.freqs[i] + hw)
    });
    let lorentz = match range {
        Some(r) => fits::fit_lorentzian(&spectrum, None, Some(r)),
        None => Err(Error::Degenerate("spectrum has no peak".into())),
    };
    let time = fits::fit_decaying_sinusoid(trace);
    let mut fit_errors = Vec::new();
    if let Err(e) = &lorentz {
        fit_errors.push(format!("lorentzian: {e}"));
    }
    if let Err(e) = &time {
        fit_errors.push(format!("decaying sinusoid: {e}"));
    }
    let wall = wall_time(cfg)?;
    let (noise_floor, sens) = match &lorentz {
        Ok(f) => {
            let sd = fits::noise_floor_std(&spectrum, f);
            let s = fits::sensitivity(f, sd, cfg.signal.b_amp_gauss * 1e-4, wall.total_s);
            if let Err(e) = &s {
                fit_errors.push(format!("sensitivity: {e}"));
            }
            (Some(sd), s.ok())
        }
        Err(_) => (None, None),
    };
    let engine_cfg = cfg.protocol_config()?;
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        master_seed: cfg.master_seed,
        protocol: cfg.protocol.kind,
        mode: cfg.mode,
        noise: cfg.readout.noise,
        f_u_oracle_hz: f_u_oracle,
        f_u_hz: lorentz.as_ref().ok().map(|f| f.center).or_else(|| spectrum.peak_index().map(|i| spectrum.freqs[i])),
        f_u_std_err_hz: lorentz.as_ref().ok().map(|f| f.std_errors[0]),
        padded_bin_hz: spectrum.bin_width(),
        fwhm_hz: lorentz.as_ref().ok().map(|f| f.fwhm()),
        tau_decay_s: time.as_ref().ok().map(|f| f.tau),
        tau_memory_expected_s: expected_decay_time(cfg)?,
        oscillation_frequency_hz: time.as_ref().ok().map(|f| f.frequency),
        noise_floor_std: noise_floor,
        sensitivity_t_per_sqrt_hz: sens,
        wall_time: wall,
        resonant: engine_cfg.xy8.is_resonant(cfg.signal.nu_s_hz),
        fit_errors,
    };
    Ok(Analysis {
        spectrum,
        fits: Fits {
            schema_version: SCHEMA_VERSION,
            lorentzian: FitReport::from(lorentz),
            decaying_sinusoid: FitReport::from(time),
        },
        summary,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ScenarioConfig,
    pub trace: TimeTrace,
    pub analysis: Analysis,
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let trace = simulate_trace(cfg)?;
    let analysis = analyze(&trace, cfg)?;
    Ok(RunOutput {
        config: cfg.clone(),
        trace,
        analysis,
    })
}

// ---------------------------------------------------------------- files

pub fn write_trace_csv(trace: &TimeTrace, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["k", "T_k_seconds", "counts", "n_runs"])?;
    for i in 0..trace.len() {
        w.write_record([
            trace.k[i].to_string(),
            trace.times[i].to_string(),
            trace.counts[i].to_string(),
            trace.n_runs.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Reads a trace CSV and its metadata sidecar, rejecting other schema versions.
pub fn read_trace(path: &Path) -> Result<TimeTrace> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side)
        .map_err(|e| Error::Config(format!("cannot read metadata {}: {e}", side.display())))?;
    let metadata: TraceMetadata = serde_json::from_str(&text)?;
    if metadata.schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaMismatch {
            found: metadata.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    #[derive(Deserialize)]
    struct Row {
        k: usize,
        #[serde(rename = "T_k_seconds")]
        t: f64,
        counts: f64,
        n_runs: usize,
    }
    let mut rdr = csv::Reader::from_path(path)?;
    let (mut k, mut times, mut counts, mut n_runs) = (Vec::new(), Vec::new(), Vec::new(), 0);
    for row in rdr.deserialize() {
        let row: Row = row?;
        k.push(row.k);
        times.push(row.t);
        counts.push(row.counts);
        n_runs = row.n_runs;
    }
    Ok(TimeTrace { k, times, counts, n_runs, metadata })
}

pub fn write_psd_csv(spec: &PowerSpectrum, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["frequency_hz", "power"])?;
    for (f, p) in spec.freqs.iter().zip(&spec.power) {
        w.write_record([f.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes trace.csv, trace.json, psd.csv, fits.json and summary.json into `dir`.
pub fn write_bundle(trace: &TimeTrace, analysis: &Analysis, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join("trace.csv");
    write_trace_csv(trace, &csv_path)?;
    write_json(&trace.metadata, &sidecar_path(&csv_path))?;
    write_psd_csv(&analysis.spectrum, &dir.join("psd.csv"))?;
    write_json(&analysis.fits, &dir.join("fits.json"))?;
    write_json(&analysis.summary, &dir.join("summary.json"))?;
    Ok(())
}

/// Configuration stored in a trace sidecar.
pub fn config_from_trace(trace: &TimeTrace) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = serde_json::from_value(trace.metadata.config.clone())
        .map_err(|e| Error::Config(format!("trace metadata holds no usable config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

// ---------------------------------------------------------------- comparison

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub protocol: Protocol,
    pub n: usize,
    pub snr_measured: f64,
    pub snr_predicted: f64,
    pub projection_mean: f64,
    pub projection_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub schema_version: u32,
    pub n_list: Vec<usize>,
    pub repetitions: usize,
    pub f_u_oracle_hz: f64,
    pub rows: Vec<ScalingRow>,
    /// Log-log slope of measured SNR vs N; absent with fewer than two N values.
    pub slopes: BTreeMap<String, Option<f64>>,
    /// Peak of the repetition-averaged correlation spectrum at the first N.
    pub f_u_detected_hz: BTreeMap<String, Option<f64>>,
}

/// Trace whose expectation oscillates at f_u: the record itself for MCS/CS,
/// the autocorrelation at lags 1..=M for QDyne.
pub fn correlation_trace(protocol: Protocol, counts: &[f64], m: usize) -> Vec<f64> {
    let n = counts.len();
    let mean = counts.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = counts.iter().map(|c| c - mean).collect();
    match protocol {
        Protocol::Qdyne => (1..=m.min(n - 1))
            .map(|lag| (0..n - lag).map(|i| x[i] * x[i + lag]).sum::<f64>() / (n - lag) as f64)
            .collect(),
        _ => x,
    }
}

/// Matched projection onto cos(2 pi f_u k T), k = 1.. .
pub fn matched_projection(trace: &[f64], f_u: f64, period: f64) -> f64 {
    trace
        .iter()
        .enumerate()
        .map(|(i, v)| v * (TWO_PI * f_u * (i + 1) as f64 * period).cos())
        .sum()
}

fn task_seed(master: u64, p: Protocol, n: usize, rep: usize) -> u64 {
    derive_seed(master, ((p as u64) << 56) ^ ((n as u64) << 28) ^ rep as u64)
}

/// SNR of the matched spectral component vs ensemble size for each protocol.
pub fn compare_protocols(cfg: &ScenarioConfig, n_list: &[usize], reps: usize) -> Result<ScalingTable> {
    cfg.validate()?;
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(Error::Config("N list must be non-empty with entries >= 1".into()));
    }
    if reps < 2 {
        return Err(Error::Config("need at least two repetitions".into()));
    }
    let period = cfg.protocol_config()?.period();
    let f_u = undersampled_frequency(cfg.signal.nu_s_hz, period)?;
    let m = cfg.protocol.m;
    let tasks: Vec<(Protocol, usize, usize)> = Protocol::ALL
        .iter()
        .flat_map(|&p| n_list.iter().flat_map(move |&n| (0..reps).map(move |r| (p, n, r))))
        .collect();
    let run = |&(p, n, r): &(Protocol, usize, usize)| -> Result<Vec<f64>> {
        let mut c = cfg.clone();
        c.protocol.kind = p;
        c.signal.n_sensors = n as u32;
        let engine = build_engine(&c)?;
        let seed = task_seed(cfg.master_seed, p, n, r);
        if p != Protocol::Qdyne {
            return Ok(correlation_trace(p, &sum_units(&engine, &c, seed, m, false)?, m));
        }
        // runs have independent signal phases, so correlate each run before averaging
        let ro = c.readout_params();
        let mut acc = vec![0.0; m];
        for u in 0..unit_count(&c) {
            let corr = correlation_trace(p, &unit_counts(&engine, &c, &ro, seed, u, 2 * m)?, m);
            for (a, v) in acc.iter_mut().zip(corr) {
                *a += v;
            }
        }
        Ok(acc)
    };
    let traces: Vec<Result<Vec<f64>>> = with_pool(cfg.workers, || tasks.par_iter().map(run).collect())?;
    let traces: Vec<Vec<f64>> = traces.into_iter().collect::<Result<_>>()?;

    let inputs = metrics::ComparisonInputs::default();
    let mut rows = Vec::new();
    let mut slopes = BTreeMap::new();
    let mut detected = BTreeMap::new();
    let mut idx = 0;
    for p in Protocol::ALL {
        let mut pts = Vec::new();
        let mut base: Option<(f64, f64)> = None;
        for (ni, &n) in n_list.iter().enumerate() {
            let group = &traces[idx..idx + reps];
            idx += reps;
            let proj: Vec<f64> = group.iter().map(|t| matched_projection(t, f_u, period)).collect();
            let mean = proj.iter().sum::<f64>() / reps as f64;
            let sd = (proj.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
            let snr = if sd > 0.0 { mean.abs() / sd } else { 0.0 };
            let r_n = metrics::ensemble_scaling(p, n, &inputs)?;
            let (snr0, r0) = *base.get_or_insert((snr, r_n));
            rows.push(ScalingRow {
                protocol: p,
                n,
                snr_measured: snr,
                snr_predicted: snr0 * (r_n / r0).sqrt(),
                projection_mean: mean,
                projection_std: sd,
            });
            if snr > 0.0 {
                pts.push(((n as f64).ln(), snr.ln()));
            }
            if ni == 0 {
                let len = group[0].len();
                let avg: Vec<f64> = (0..len).map(|i| group.iter().map(|t| t[i]).sum::<f64>() / reps as f64).collect();
                let f = analysis::psd_samples(&avg, period, cfg.analysis.pad_factor, cfg.analysis.window)
                    .ok()
                    .and_then(|s| s.peak_index().map(|i| s.freqs[i]));
                detected.insert(p.name().to_string(), f);
            }
        }
        let distinct = {
            let mut v = n_list.to_vec();
            v.sort_unstable();
            v.dedup();
            v.len()
        };
        let slope = if distinct >= 2 { analysis::loglog_slope(&pts) } else { None };
        slopes.insert(p.name().to_string(), slope);
    }
    Ok(ScalingTable {
        schema_version: SCHEMA_VERSION,
        n_list: n_list.to_vec(),
        repetitions: reps,
        f_u_oracle_hz: f_u,
        rows,
        slopes,
        f_u_detected_hz: detected,
    })
}

pub fn write_scaling_table(table: &ScalingTable, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_json(table, &dir.join("compare.json"))?;
    let mut w = csv::Writer::from_path(dir.join("compare.csv"))?;
    w.write_record(["protocol", "N", "snr_measured", "snr_predicted"])?;
    for r in &table.rows {
        w.write_record([
            r.protocol.name().to_string(),
            r.n.to_string(),
            r.snr_measured.to_string(),
            r.snr_predicted.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: &str) -> ScenarioConfig {
        ScenarioConfig::from_toml_str(&format!(
            r#"
master_seed = 11
[signal]
mode = "classical"
nu_s_hz = 1e6
b_amp_gauss = 0.035
[protocol]
kind = "{kind}"
m = 256
n_runs = 40
t_us = 15.063
t_init_us = 101.57
[readout]
eta0 = 3.0
eta1 = 2.0
"#
        ))
        .unwrap()
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let mut a = small("mcs");
        a.workers = 1;
        let mut b = a.clone();
        b.workers = 4;
        assert_eq!(simulate_trace(&a).unwrap().counts, simulate_trace(&b).unwrap().counts);
    }

    #[test]
    fn noiseless_trace_is_order_independent() {
        let mut a = small("mcs");
        a.readout.noise = NoiseMode::None;
        a.workers = 1;
        let mut b = a.clone();
        b.workers = 3;
        assert_eq!(simulate_trace(&a).unwrap().counts, simulate_trace(&b).unwrap().counts);
    }

    #[test]
    fn bundle_round_trip_and_schema_check() {
        let cfg = small("mcs");
        let out = run_scenario(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&out.trace, &out.analysis, dir.path()).unwrap();
        let back = read_trace(&dir.path().join("trace.csv")).unwrap();
        assert_eq!(back.counts, out.trace.counts);
        assert_eq!(back.times, out.trace.times);
        assert_eq!(config_from_trace(&back).unwrap(), cfg);
        let side = dir.path().join("trace.json");
        let text = fs::read_to_string(&side).unwrap().replace("\"schema_version\": 1", "\"schema_version\": 2");
        fs::write(&side, text).unwrap();
        assert!(matches!(read_trace(&dir.path().join("trace.csv")), Err(Error::SchemaMismatch { .. })));
    }

    #[test]
    fn every_protocol_sees_the_alias() {
        for kind in ["mcs", "cs", "qdyne"] {
            let mut cfg = small(kind);
            cfg.readout.noise = NoiseMode::None;
            let trace = simulate_trace(&cfg).unwrap();
            let corr = correlation_trace(cfg.protocol.kind, &trace.counts, cfg.protocol.m);
            let s = analysis::psd_samples(&corr, trace.metadata.period, 8, analysis::Window::Rectangular).unwrap();
            let f = s.freqs[s.peak_index().unwrap()];
            let want = undersampled_frequency(1e6, 15.063e-6).unwrap();
            assert!((f - want).abs() <= s.bin_width(), "{kind}: {f} vs {want}");
        }
    }

    #[test]
    fn wall_time_ledgers() {
        let cfg = small("cs");
        let w = wall_time(&cfg).unwrap();
        let want = metrics::total_time_cs(256, 15.063e-6, 101.57e-6);
        assert!((w.per_run_s - want).abs() < 1e-12);
        assert!((w.total_s - 40.0 * want).abs() < 1e-9);
    }

    #[test]
    fn single_n_list_has_no_slope() {
        let mut cfg = small("mcs");
        cfg.protocol.m = 32;
        cfg.protocol.n_runs = 1;
        let t = compare_protocols(&cfg, &[1], 4).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert!(t.slopes.values().all(|s| s.is_none()));
        assert!(t.rows.iter().all(|r| r.snr_predicted.is_finite()));
        assert!(compare_protocols(&cfg, &[], 4).is_err());
    }
}
