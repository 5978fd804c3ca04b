//! `v2xsim`: runs the simulator's experiments and writes their CSVs plus a
//! run manifest into an output directory.

mod manifest;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use v2xsim_core::consensus::latency_heatmap;
use v2xsim_core::engine::{run_experiment_convergence, run_experiment_regret, run_experiment_scalability, ScenarioConfig};
use v2xsim_core::{report, Error};

use manifest::Manifest;

#[derive(Debug, Parser)]
#[command(name = "v2xsim", version = env!("V2XSIM_VERSION"), about = "Channel-selection experiments for a permissioned blockchain over V2X")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// TOML scenario file; unset keys keep their defaults.
    #[arg(long, global = true, env = "V2XSIM_CONFIG", value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long, global = true, env = "V2XSIM_OUT", value_name = "DIR", default_value = "results")]
    out: PathBuf,
    /// Master seed, overriding `master_seed`.
    #[arg(long, global = true, env = "V2XSIM_SEED", value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long, global = true, env = "V2XSIM_THREADS", value_name = "N")]
    threads: Option<usize>,
    /// Replication count of the selected experiment.
    #[arg(long, global = true, env = "V2XSIM_REPLICATIONS", value_name = "N")]
    replications: Option<u32>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mean consensus latency over the peer-count by fault-probability grid.
    Heatmap,
    /// Analytic and Monte-Carlo gossip dissemination trajectories.
    Gossip {
        /// Group sizes, comma separated.
        #[arg(long, env = "V2XSIM_N_LIST", value_delimiter = ',', value_name = "N,...")]
        n_list: Option<Vec<u32>>,
        /// Uninformed-fraction threshold in (0, 1); `1/n` when unset.
        #[arg(long, env = "V2XSIM_THRESHOLD")]
        threshold: Option<f64>,
    },
    /// Per-slot channel selections of ε-greedy and Thompson sampling.
    Convergence,
    /// Post-training regret over the training-length and channel-count grids.
    Regret,
    /// Latency and throughput against the number of clients.
    Scalability,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Heatmap => "heatmap",
            Command::Gossip { .. } => "gossip",
            Command::Convergence => "convergence",
            Command::Regret => "regret",
            Command::Scalability => "scalability",
        }
    }
}

/// Exit status 1: the invocation or configuration is unusable.
/// Exit status 2: the run itself failed.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn from_core(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidArgument(_) | Error::Toml(_) => Failure::Usage(e.to_string()),
            Error::NoNetwork | Error::Io(_) | Error::Csv(_) => Failure::Runtime(e.to_string()),
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("v2xsim: error: {}", f.message());
            ExitCode::from(match f {
                Failure::Usage(_) => 1,
                Failure::Runtime(_) => 2,
            })
        }
    }
}

/// Defaults, then the config file, then flags and environment.
fn load_config(cli: &Cli) -> Result<ScenarioConfig, Failure> {
    let mut cfg = match &cli.global.config {
        Some(path) => ScenarioConfig::from_file(path).map_err(|e| match e {
            Error::Toml(_) => Failure::Usage(format!("{}: {e}", path.display())),
            other => Failure::from_core(other),
        })?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.global.seed {
        cfg.master_seed = seed;
    }
    if let Some(n) = cli.global.replications {
        match &cli.command {
            Command::Heatmap => cfg.heatmap.reps = n,
            Command::Gossip { .. } => cfg.gossip.mc_reps = n,
            _ => cfg.replications = n,
        }
    }
    if let Command::Gossip { n_list, threshold } = &cli.command {
        if let Some(list) = n_list {
            cfg.gossip.n_list = list.clone();
        }
        if threshold.is_some() {
            cfg.gossip.threshold = *threshold;
        }
    }
    cfg.validate().map_err(Failure::from_core)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli)?;
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(format!("cannot start thread pool: {e}")))?;
    }
    let out = cli.global.out.as_path();
    std::fs::create_dir_all(out).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", out.display())))?;

    let name = cli.command.name();
    let mut manifest = Manifest::start(name, env!("V2XSIM_VERSION"), &cfg);
    manifest.write(out)?;
    let started = Instant::now();
    let result = execute(&cli.command, &cfg, out);
    let outcome = match &result {
        Ok(files) => {
            manifest.finish(files.clone(), None);
            Ok(files)
        }
        Err(f) => {
            manifest.finish(Vec::new(), Some(f.message().to_string()));
            Err(())
        }
    };
    manifest.write(out)?;
    if let Ok(files) = outcome {
        println!("{name}: wrote {} in {:.1}s", files.join(", "), started.elapsed().as_secs_f64());
    }
    result.map(|_| ())
}

fn create(out: &Path, file: &str) -> Result<BufWriter<File>, Failure> {
    let path = out.join(file);
    File::create(&path).map(BufWriter::new).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

/// Runs one experiment and returns the files it wrote, relative to `out`.
fn execute(command: &Command, cfg: &ScenarioConfig, out: &Path) -> Result<Vec<String>, Failure> {
    let core = Failure::from_core;
    let mut files = Vec::new();
    let mut emit = |file: &str, write: &dyn Fn(BufWriter<File>) -> v2xsim_core::Result<()>| -> Result<(), Failure> {
        write(create(out, file)?).map_err(core)?;
        files.push(file.to_string());
        Ok(())
    };
    match command {
        Command::Heatmap => {
            let h = &cfg.heatmap;
            let map = latency_heatmap(&h.n_grid, &h.pf_grid, h.reps, cfg.master_seed, &cfg.costs).map_err(core)?;
            emit("heatmap.csv", &|w| map.write_csv(w))?;
        }
        Command::Gossip { .. } => {
            let g = &cfg.gossip;
            let rows = report::gossip_rows(&g.n_list, g.threshold, g.mc_reps, cfg.master_seed).map_err(core)?;
            emit("gossip.csv", &|w| report::write_gossip_csv(&rows, w))?;
        }
        Command::Convergence => {
            let log = run_experiment_convergence(cfg).map_err(core)?;
            emit("selections.csv", &|w| report::write_selections_csv(&log, w))?;
            emit("selection_probabilities.csv", &|w| report::write_selection_probabilities_csv(&log, w))?;
            emit("replications.csv", &|w| report::write_replications_csv(&log, w))?;
        }
        Command::Regret => {
            let r = &cfg.regret;
            let log = run_experiment_regret(cfg, &r.t_train_grid, &r.n_ch_grid).map_err(core)?;
            emit("regret.csv", &|w| report::write_regret_csv(&log, w))?;
            emit("replications.csv", &|w| report::write_replications_csv(&log, w))?;
        }
        Command::Scalability => {
            let log = run_experiment_scalability(cfg, &cfg.scalability.n_clients_grid).map_err(core)?;
            emit("scalability.csv", &|w| report::write_scalability_csv(&log, w))?;
            emit("replications.csv", &|w| report::write_replications_csv(&log, w))?;
        }
    }
    Ok(files)
}
