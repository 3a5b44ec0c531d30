use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use rfdress::config::{parse_config, ScenarioConfig, ScenarioName};
use rfdress::scenario::run_scenario;

/// Run a named simulation scenario and write its CSV artifacts.
#[derive(Parser, Debug)]
#[command(name = "rfdress", version)]
struct Cli {
    /// fig1c, fig3, parity, fig4b, fig4c, qutrit, msbaseline or convergence
    scenario: String,
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fock cutoff (overrides `n_max`).
    #[arg(long)]
    nmax: Option<usize>,
    /// Integrator step in seconds (overrides `dt_s`).
    #[arg(long)]
    dt: Option<f64>,
}

fn run(cli: Cli) -> rfdress::Result<Vec<PathBuf>> {
    let name: ScenarioName = cli.scenario.parse()?;
    let mut cfg = match &cli.config {
        Some(p) => parse_config(&std::fs::read_to_string(p)?)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = cfg.scenario {
        if s != name {
            eprintln!("note: config names scenario '{s}', running '{name}'");
        }
    }
    if cli.out.is_some() {
        cfg.output = cli.out;
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.nmax.is_some() {
        cfg.n_max = cli.nmax;
    }
    if let Some(dt) = cli.dt {
        cfg.dt_s = Some(Some(dt));
    }
    run_scenario(&cfg.resolve(name)?)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
