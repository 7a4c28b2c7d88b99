use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use mcs_core::analysis::Window;
use mcs_core::metrics::{self, ComparisonInputs};
use mcs_core::pulse_gates::EvolutionMode;
use mcs_core::runner;
use mcs_core::spin_system::{energy_levels, mw_transition_frequency, rf_transition_frequency, to_mhz};
use mcs_core::{NoiseMode, Protocol, Result, ScenarioConfig};

#[derive(Parser)]
#[command(name = "mcs", version, about = "Memory-assisted correlation spectroscopy simulator")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Scenario TOML file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<EvolutionMode>,
    #[arg(long, global = true, value_parser = parse_noise)]
    noise: Option<NoiseMode>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate, analyze and write the output bundle.
    Run,
    /// SNR vs ensemble size for all three protocols.
    Compare {
        /// Comma separated ensemble sizes.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long)]
        repetitions: Option<usize>,
    },
    /// Re-analyze a trace CSV written by `run`.
    Fit {
        trace: PathBuf,
        #[arg(long)]
        pad: Option<usize>,
        #[arg(long, value_parser = parse_window)]
        window: Option<Window>,
    },
    /// Closed-form timing, lifetime, level and scaling tables.
    Tables,
}

fn parse_mode(s: &str) -> std::result::Result<EvolutionMode, String> {
    s.parse().map_err(|e: mcs_core::Error| e.to_string())
}

fn parse_noise(s: &str) -> std::result::Result<NoiseMode, String> {
    s.parse().map_err(|e: mcs_core::Error| e.to_string())
}

fn parse_window(s: &str) -> std::result::Result<Window, String> {
    s.parse().map_err(|e: mcs_core::Error| e.to_string())
}

impl Common {
    fn apply(&self, cfg: &mut ScenarioConfig) -> Result<()> {
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if let Some(n) = self.noise {
            cfg.readout.noise = n;
        }
        cfg.validate()
    }

    fn scenario(&self) -> Result<ScenarioConfig> {
        let path = self
            .config
            .as_deref()
            .ok_or_else(|| mcs_core::Error::Config("--config is required".into()))?;
        let mut cfg = ScenarioConfig::load(path)?;
        self.apply(&mut cfg)?;
        Ok(cfg)
    }
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(common: &Common) -> Result<()> {
    let cfg = common.scenario()?;
    let out = runner::run_scenario(&cfg)?;
    runner::write_bundle(&out.trace, &out.analysis, &cfg.output_dir)?;
    print_json(&out.analysis.summary)
}

fn compare(common: &Common, n_list: Option<Vec<usize>>, reps: Option<usize>) -> Result<()> {
    let cfg = common.scenario()?;
    let n_list = n_list.unwrap_or_else(|| cfg.analysis.compare_n_list.clone());
    let reps = reps.unwrap_or(cfg.analysis.compare_repetitions);
    let table = runner::compare_protocols(&cfg, &n_list, reps)?;
    runner::write_scaling_table(&table, &cfg.output_dir)?;
    print_json(&table)
}

fn fit(common: &Common, trace: &Path, pad: Option<usize>, window: Option<Window>) -> Result<()> {
    let tr = runner::read_trace(trace)?;
    let mut cfg = runner::config_from_trace(&tr)?;
    if common.out.is_none() {
        cfg.output_dir = trace.parent().map(Path::to_path_buf).unwrap_or_default();
    }
    common.apply(&mut cfg)?;
    if let Some(p) = pad {
        cfg.analysis.pad_factor = p;
    }
    if let Some(w) = window {
        cfg.analysis.window = w;
    }
    cfg.validate()?;
    let analysis = runner::analyze(&tr, &cfg)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    runner::write_psd_csv(&analysis.spectrum, &cfg.output_dir.join("psd.csv"))?;
    std::fs::write(cfg.output_dir.join("fits.json"), serde_json::to_string_pretty(&analysis.fits)? + "\n")?;
    std::fs::write(cfg.output_dir.join("summary.json"), serde_json::to_string_pretty(&analysis.summary)? + "\n")?;
    print_json(&analysis.summary)
}

fn tables(common: &Common) -> Result<()> {
    let mut x = ComparisonInputs::default();
    let params = match &common.config {
        Some(_) => {
            let cfg = common.scenario()?;
            let p = cfg.protocol_config()?;
            x.m = p.m;
            x.t = p.period();
            x.t_init = p.t_init;
            if p.t1_nuc.is_finite() {
                x.t1_nuc = p.t1_nuc;
            }
            if p.t1_nuc_laser.is_finite() {
                x.t1_nuc_laser = p.t1_nuc_laser;
            }
            x.t_laser = p.t_laser;
            cfg.spin_params()
        }
        None => Default::default(),
    };
    let ft = metrics::f_t(x.m, x.t, x.t_init)?;
    let m_lim = metrics::m_limit(x.t1_nuc_laser, x.t_laser)?;
    let levels: Vec<_> = energy_levels(&params)
        .rows()
        .into_iter()
        .map(|(m_s, m_i, e)| json!({"m_s": m_s, "m_i": m_i, "energy_mhz": to_mhz(e)}))
        .collect();
    let mut mw = Vec::new();
    for m_i in [-1, 0, 1] {
        mw.push(to_mhz(mw_transition_frequency(&params, m_i)?));
    }
    let mut scaling = Vec::new();
    for p in Protocol::ALL {
        for n in [1usize, 4, 16, 64] {
            scaling.push(json!({"protocol": p.name(), "N": n, "R": metrics::ensemble_scaling(p, n, &x)?}));
        }
    }
    let table = json!({
        "schema_version": mcs_core::readout::SCHEMA_VERSION,
        "timing": {
            "M": x.m, "T_s": x.t, "T_init_s": x.t_init,
            "total_time_mcs_s": metrics::total_time_mcs(x.m, x.t, x.t_init),
            "total_time_cs_s": metrics::total_time_cs(x.m, x.t, x.t_init),
            "time_ratio": ft.time_ratio, "f_T": ft.f_t,
        },
        "memory": {
            "m_limit": m_lim,
            "effective_lifetime_s": metrics::effective_memory_lifetime(x.t1_nuc, m_lim, x.t)?,
            "lifetime_vs_field_s": metrics::lifetime_vs_field(x.b_field_tesla)?,
        },
        "levels": levels,
        "mw_transitions_mhz": mw,
        "rf_transition_mhz": to_mhz(rf_transition_frequency(&params)),
        "ensemble_scaling": scaling,
    });
    if let Some(dir) = &common.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("tables.json"), serde_json::to_string_pretty(&table)? + "\n")?;
    }
    print_json(&table)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run => run(&cli.common),
        Cmd::Compare { n_list, repetitions } => compare(&cli.common, n_list, repetitions),
        Cmd::Fit { trace, pad, window } => fit(&cli.common, &trace, pad, window),
        Cmd::Tables => tables(&cli.common),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
