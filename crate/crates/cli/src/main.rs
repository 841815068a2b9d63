use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use banditfit::config::ExperimentConfig;
use banditfit::harness::eval_seed;
use banditfit::{logfile, plot, report, run_experiment, shiftio};
use banditfit_core::shift::run_shift_demo;
use banditfit_core::{fit, Env, LoggingPolicy, Method, ParamVector, Policy};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(
    name = "banditfit",
    version,
    about = "Train and evaluate recommendation policies on logged bandit feedback"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config; defaults are used for missing keys or a missing file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a banditlog-v1 file generated under the logging policy.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Number of bandit events; defaults to the first train size.
        #[arg(long)]
        events: Option<usize>,
        /// Overrides `logging_policy`.
        #[arg(long)]
        policy: Option<LoggingPolicy>,
    },
    /// Fit a method to a log file and write the parameters as JSON.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        method: Method,
    },
    /// Simulated A/B test of fitted parameters.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        beta: PathBuf,
    },
    /// Full sweep: results.csv and ctr.svg.
    Experiment {
        #[command(flatten)]
        common: Common,
    },
    /// Covariate-shift demo: shift.csv and shift.svg.
    ShiftDemo {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Serialize, Deserialize)]
struct BetaFile {
    method: String,
    num_items: usize,
    converged: bool,
    iterations: usize,
    final_objective: f64,
    final_grad_norm: f64,
    beta: Vec<f64>,
}

#[derive(Serialize)]
struct Evaluation {
    ab_ctr: f64,
    ab_stderr: f64,
    clicks: u64,
    events: u64,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.sim.seed = seed;
            cfg.shift.seed = seed;
        }
        let out = self.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        Ok((cfg, out))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            common,
            events,
            policy,
        } => {
            let (cfg, out) = common.load()?;
            let n = events.unwrap_or(cfg.train_sizes[0]);
            let policy = policy.unwrap_or(cfg.logging_policy);
            let mut env = Env::new(cfg.sim.to_sim_config(cfg.sim.seed)?)?;
            let data = env.generate_logs(&Policy::Logging(policy), n)?;
            let path = out.join("logs.jsonl");
            logfile::save_log(&data, &path)?;
            println!("{}", path.display());
        }
        Command::Train {
            common,
            log,
            method,
        } => {
            let (cfg, out) = common.load()?;
            let data = logfile::load_log(&log)?;
            let prior = cfg.prior.to_spec(data.num_items)?;
            let res = fit(method, &data, Some(&prior), &cfg.fit.to_options()?)?;
            let path = out.join(format!("beta-{}.json", method.name()));
            write_json(
                &path,
                &BetaFile {
                    method: method.name().to_owned(),
                    num_items: data.num_items,
                    converged: res.converged,
                    iterations: res.iterations,
                    final_objective: res.final_objective,
                    final_grad_norm: res.final_grad_norm,
                    beta: res.beta.into_vec(),
                },
            )?;
            println!("{}", path.display());
        }
        Command::Evaluate { common, beta } => {
            let (cfg, out) = common.load()?;
            let text =
                fs::read_to_string(&beta).with_context(|| format!("reading {}", beta.display()))?;
            let file: BetaFile = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", beta.display()))?;
            if file.num_items != cfg.sim.num_items {
                bail!(
                    "parameters are for {} items, config has {}",
                    file.num_items,
                    cfg.sim.num_items
                );
            }
            let params = ParamVector::from_vec(file.num_items, file.beta)?;
            let env = Env::new(cfg.sim.to_sim_config(cfg.sim.seed)?)?;
            let ab = env
                .fork(eval_seed(cfg.sim.seed))
                .ab_test(&params, cfg.ab_test_size)?;
            let eval = Evaluation {
                ab_ctr: ab.ctr,
                ab_stderr: ab.stderr,
                clicks: ab.clicks as u64,
                events: ab.events as u64,
            };
            write_json(&out.join("evaluation.json"), &eval)?;
            println!("{}", serde_json::to_string(&eval)?);
        }
        Command::Experiment { common } => {
            let (cfg, out) = common.load()?;
            let rows = run_experiment(&cfg)?;
            let csv = out.join("results.csv");
            report::write_results_csv(&rows, &csv)?;
            plot::emit_plot_svg(&rows, &out.join("ctr.svg"))?;
            println!("{}", csv.display());
        }
        Command::ShiftDemo { common } => {
            let (cfg, out) = common.load()?;
            let runs = (0..cfg.shift.n_seeds)
                .map(|i| {
                    let seed = cfg.shift.seed.wrapping_add(i);
                    Ok((seed, run_shift_demo(&cfg.shift.demo_config(seed))?))
                })
                .collect::<Result<Vec<_>>>()?;
            let csv = out.join("shift.csv");
            shiftio::write_shift_csv(&runs, &csv)?;
            shiftio::emit_shift_svg(&runs[0].1, &out.join("shift.svg"))?;
            println!("{}", csv.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
