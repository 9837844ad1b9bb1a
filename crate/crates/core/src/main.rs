use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lpofdm::harness::{self, Experiment, RunConfig};
use lpofdm::Error;

/// Link-level simulator for 2D linearly-precoded OFDM with spread-pilot
/// channel estimation.
#[derive(Parser)]
#[command(name = "lpofdm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimator MSE versus Eb/No, simulated and closed form.
    Mse(Flags),
    /// Coded BER versus Eb/No through the full chain.
    Ber(Flags),
    /// Empirical channel autocorrelation against the closed form.
    Probe(Flags),
    /// Useful bit rates across spreading lengths.
    Bitrate(Flags),
    /// Deviation of the data-power matrix from its large-L limit.
    Rmcheck(Flags),
}

#[derive(Args)]
struct Flags {
    /// Key-value config file (or a CSV written by an earlier run).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plot-data file for sweeps.
    #[arg(long)]
    plotdata: Option<PathBuf>,
    /// Eb/No grid in dB: `start:stop:step` or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    ebno: Option<String>,
    #[arg(long)]
    subsets: Option<usize>,
    /// Terminal speed in km/h.
    #[arg(long)]
    speed: Option<f64>,
    /// Spreading length.
    #[arg(long = "L")]
    len: Option<usize>,
    #[arg(long = "Lf")]
    l_f: Option<usize>,
    #[arg(long = "Lt")]
    l_t: Option<usize>,
    /// Pilot power relative to unit data power.
    #[arg(long = "Pp")]
    pilot_power: Option<f64>,
    #[arg(long = "mod", value_parser = ["qpsk", "16qam"])]
    modulation: Option<String>,
    #[arg(long, value_parser = ["perfect-csi", "none"])]
    baseline: Option<String>,
    /// Normalized Doppler f_D * T_OFDM, replacing the speed-derived value.
    #[arg(long = "beta-override")]
    beta_override: Option<f64>,
    /// Any other config key, e.g. `--set target_errors=500`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

impl Flags {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut kv = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                kv.push((k.to_string(), v));
            }
        };
        push("seed", self.seed.map(|v| v.to_string()));
        push("ebno", self.ebno.clone());
        push("subsets", self.subsets.map(|v| v.to_string()));
        push("speed", self.speed.map(|v| v.to_string()));
        push("L", self.len.map(|v| v.to_string()));
        push("Lf", self.l_f.map(|v| v.to_string()));
        push("Lt", self.l_t.map(|v| v.to_string()));
        push("Pp", self.pilot_power.map(|v| v.to_string()));
        push("mod", self.modulation.clone());
        push("baseline", self.baseline.clone());
        push("beta_override", self.beta_override.map(|v| v.to_string()));
        kv
    }
}

fn build_config(experiment: Experiment, flags: &Flags) -> lpofdm::Result<RunConfig> {
    let mut cfg = match &flags.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.experiment = experiment;
    let mut pairs = flags.overrides();
    for item in &flags.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {item:?}")))?;
        pairs.push((k.trim().to_string(), v.to_string()));
    }
    for (k, v) in pairs {
        cfg.set(&k, &v)
            .map_err(|e| Error::Config(format!("command line: {e}")))?;
    }
    Ok(cfg)
}

fn execute(experiment: Experiment, flags: &Flags) -> lpofdm::Result<()> {
    let cfg = build_config(experiment, flags)?;
    if let Some(n) = flags.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    harness::run(&cfg, flags.out.as_deref(), flags.plotdata.as_deref())?;
    if let Some(path) = &flags.out {
        eprintln!("wrote {} (config {})", path.display(), cfg.digest());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, flags) = match &cli.command {
        Command::Mse(f) => (Experiment::Mse, f),
        Command::Ber(f) => (Experiment::Ber, f),
        Command::Probe(f) => (Experiment::Probe, f),
        Command::Bitrate(f) => (Experiment::Bitrate, f),
        Command::Rmcheck(f) => (Experiment::RmCheck, f),
    };
    match execute(experiment, flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
