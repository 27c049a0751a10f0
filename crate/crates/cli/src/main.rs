use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stpaps_cli::experiments::{self, BenchConfig, GridSpec};
use stpaps_cli::runner::{self, parse_methods, ProcessingParams, RunConfig, WeightsFile};
use stpaps_cli::{bundled_scenario_dir, Result};
use stpaps_core::polarization::Polarization;

/// Space-time-polarization anti-jam simulator.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Process a scenario with one or more methods and write CSV/SVG results.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "stpaps,mvdr1,mmse")]
        methods: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Mean post-injection C/N0 per method for a list of JNRs.
    SweepJnr {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "stpaps,mvdr1,mmse")]
        methods: String,
        /// Comma separated JNRs in dB.
        #[arg(long, value_delimiter = ',', default_value = "30,40,50")]
        jnr: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Time the weight computation of each method.
    Bench {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Gain of saved weights over azimuth and zenith angle.
    GainMap {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, default_value_t = 3.0)]
        phi_step: f64,
        #[arg(long, default_value_t = 3.0)]
        theta_step: f64,
        #[arg(long, default_value_t = 45.0)]
        gamma: f64,
        #[arg(long, default_value_t = -90.0, allow_hyphen_values = true)]
        eta: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        freq: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    duration: Option<f64>,
    /// Diagonal loading relative to tr(R)/dim.
    #[arg(long, default_value_t = 0.0)]
    loading: f64,
    #[arg(long)]
    m_taps: Option<usize>,
    #[arg(long)]
    epsilon: Option<usize>,
    #[arg(long)]
    zeta: Option<usize>,
    /// Constraint band edges in Hz, e.g. -2e6,2e6.
    #[arg(long, value_delimiter = ',', num_args = 2, allow_hyphen_values = true)]
    band: Option<Vec<f64>>,
}

impl Common {
    fn config(&self, methods: &str) -> Result<RunConfig> {
        let mut scenario = runner::load_scenario(&self.scenario)?;
        if let Some(s) = self.seed {
            scenario.seed = s;
        }
        if let Some(d) = self.duration {
            scenario.duration_s = d;
        }
        let d = ProcessingParams::default();
        let params = ProcessingParams {
            m_taps: self.m_taps.unwrap_or(d.m_taps),
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            zeta: self.zeta,
            band_hz: self.band.as_ref().map_or(d.band_hz, |b| (b[0], b[1])),
            loading: self.loading,
            ..d
        };
        let cfg = RunConfig { scenario, methods: parse_methods(methods)?, params };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common, methods, out } => {
            let cfg = common.config(&methods)?;
            let result = runner::simulate(&cfg)?;
            for path in runner::write_outputs(&result, &out)? {
                println!("{}", path.display());
            }
            let (from, to) = result.analysis_window();
            for m in &result.methods {
                let s = m.series.summary(from, to)?;
                let mean = s.mean_dbhz.map_or("lost".to_string(), |v| format!("{v:.2} dB-Hz"));
                println!("{:7} mean C/N0 {from}-{to} ms: {mean} ({} of {} epochs lost)", m.method, s.lost, s.epochs);
            }
        }
        Command::SweepJnr { common, methods, jnr, out } => {
            let cfg = common.config(&methods)?;
            let rows = experiments::sweep_jnr(&cfg, &jnr)?;
            std::fs::create_dir_all(&out)?;
            let path = out.join("sweep_jnr.csv");
            experiments::write_sweep_csv(&rows, &path)?;
            println!("{}", path.display());
        }
        Command::Bench { scenario, runs, out } => {
            let path = scenario.unwrap_or_else(|| bundled_scenario_dir().join("table2.json"));
            let sc = runner::load_scenario(&path)?;
            let rows = experiments::bench(&sc, &BenchConfig { runs, ..Default::default() })?;
            std::fs::create_dir_all(&out)?;
            let csv = out.join("bench.csv");
            experiments::write_bench_csv(&rows, &csv)?;
            println!("{}", csv.display());
            if let Some(r) = experiments::stpaps_mvdr1_ratio(&rows, 100) {
                println!("stpaps/mvdr1 time ratio at epsilon 100: {r:.2}");
            }
        }
        Command::GainMap { weights, phi_step, theta_step, gamma, eta, freq, out } => {
            let w = WeightsFile::load(&weights)?;
            let grid = GridSpec {
                phi_step_deg: phi_step,
                theta_step_deg: theta_step,
                polarization: Polarization::new(gamma, eta)?,
                freq_hz: freq,
                ..Default::default()
            };
            let map = experiments::gain_map(&w, &grid)?;
            std::fs::create_dir_all(&out)?;
            let (csv, svg) = (out.join("gain_map.csv"), out.join("gain_map.svg"));
            experiments::write_gain_map(&map, &csv, &svg)?;
            println!("{}\n{}", csv.display(), svg.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("STPAPS_LOG", "warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
