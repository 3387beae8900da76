//! `smcontext`: run the wall-world context-discovery experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;
use smcontext::{artifacts, run_experiment, Error, Experiment, ExperimentConfig, RunOutput};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "smcontext", version, about = "Discover latent sensorimotor contexts in a simulated wall world")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its artifacts.
    Run(RunArgs),
    /// Check a config file without running it.
    Validate(ValidateArgs),
    /// Run one experiment over a range of seeds, one subdirectory per seed.
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct Overrides {
    /// Preset to start from; a config file's own `experiment` is used otherwise.
    #[arg(long)]
    experiment: Option<Experiment>,
    /// JSON config file; fields override the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of contexts.
    #[arg(long)]
    k: Option<usize>,
    /// Number of prototypes.
    #[arg(long)]
    r: Option<usize>,
    /// Partition transition-pair states instead of prototypes.
    #[arg(long, conflicts_with = "no_lifted")]
    lifted: bool,
    #[arg(long)]
    no_lifted: bool,
    /// Decompose the transition matrix directly instead of (T + T^T) / 2.
    #[arg(long)]
    no_symmetrize: bool,
    #[arg(long)]
    n_explore: Option<usize>,
    #[arg(long)]
    n_transition: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Half-open seed range, e.g. `0..20`.
    #[arg(long, value_parser = parse_range)]
    seeds: std::ops::Range<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
}

fn parse_range(s: &str) -> Result<std::ops::Range<u64>, String> {
    let (a, b) = s.split_once("..").ok_or("expected START..END")?;
    let a: u64 = a.trim().parse().map_err(|e| format!("bad start: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("bad end: {e}"))?;
    if a >= b {
        return Err("empty seed range".into());
    }
    Ok(a..b)
}

fn resolve(o: &Overrides) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &o.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text, o.experiment)?
        }
        None => ExperimentConfig::preset(o.experiment.unwrap_or(Experiment::Sim1)),
    };
    if let Some(k) = o.k {
        cfg.k = k;
    }
    if let Some(r) = o.r {
        cfg.r = r;
    }
    if o.lifted {
        cfg.lifted = true;
    }
    if o.no_lifted {
        cfg.lifted = false;
    }
    if o.no_symmetrize {
        cfg.symmetrize = false;
    }
    if let Some(n) = o.n_explore {
        cfg.n_explore = n;
    }
    if let Some(n) = o.n_transition {
        cfg.n_transition = n;
    }
    Ok(cfg)
}

fn fail(err: &Error) -> ExitCode {
    let mut doc = json!({ "error": err.category(), "message": err.to_string() });
    if let Error::InvalidConfig(v) = err {
        doc["violations"] = json!(v);
    }
    eprintln!("{doc}");
    ExitCode::from(if err.is_config_error() { EXIT_CONFIG } else { EXIT_RUNTIME })
}

fn execute(cfg: &ExperimentConfig, dir: &Path) -> Result<RunOutput, Error> {
    cfg.validate()?;
    let out = run_experiment(cfg)?;
    artifacts::write_all(dir, &artifacts::render(&out)?)?;
    Ok(out)
}

fn summary(out: &RunOutput) -> String {
    let s = &out.scores;
    let opt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.6}"));
    format!(
        "experiment {} seed {}\n  purity             {}\n  purity (clean)     {}\n  band spread        {}\n  marginal entropy   {:.6} bits\n  posterior entropy  {:.6} bits\n  entropy reduction  {:.6} bits\n  accuracy marginal  {:.6}\n  accuracy context   {:.6}\n  cut value          {:.6}\n  k-means baseline   {}",
        out.config.experiment,
        out.config.seed,
        opt(s.purity),
        opt(s.purity_clean),
        opt(s.band_spread),
        s.marginal_entropy,
        s.posterior_entropy,
        s.entropy_reduction,
        s.prediction_accuracy_marginal,
        s.prediction_accuracy_contextual,
        s.cut_value,
        opt(out.baseline_kmeans_purity),
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let mut cfg = match resolve(&args.overrides) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            if let Some(dir) = args.out_dir {
                cfg.out_dir = dir;
            }
            match execute(&cfg, &cfg.out_dir) {
                Ok(out) => {
                    println!("{}", summary(&out));
                    println!("artifacts written to {}", cfg.out_dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Validate(args) => match resolve(&args.overrides).and_then(|c| c.validate()) {
            Ok(()) => {
                println!("{}", json!({ "valid": true }));
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Sweep(args) => {
            let base = match resolve(&args.overrides).and_then(|c| c.validate().map(|_| c)) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let root = args.out_dir.unwrap_or_else(|| base.out_dir.clone());
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.jobs.unwrap_or(0)).build() {
                Ok(p) => p,
                Err(e) => return fail(&Error::Io(e.to_string())),
            };
            let seeds: Vec<u64> = args.seeds.collect();
            let results: Vec<Result<RunOutput, Error>> = pool.install(|| {
                seeds
                    .par_iter()
                    .map(|&seed| {
                        let cfg = ExperimentConfig { seed, out_dir: root.join(format!("seed-{seed}")), ..base.clone() };
                        execute(&cfg, &cfg.out_dir)
                    })
                    .collect()
            });
            let mut first_err = None;
            for (seed, r) in seeds.iter().zip(&results) {
                match r {
                    Ok(out) => println!("{}", serde_json::to_string(&out.report()).unwrap_or_default()),
                    Err(e) => {
                        eprintln!("{}", json!({ "seed": seed, "error": e.category(), "message": e.to_string() }));
                        first_err.get_or_insert_with(|| e.clone());
                    }
                }
            }
            match first_err {
                None => ExitCode::SUCCESS,
                Some(e) => ExitCode::from(if e.is_config_error() { EXIT_CONFIG } else { EXIT_RUNTIME }),
            }
        }
    }
}
