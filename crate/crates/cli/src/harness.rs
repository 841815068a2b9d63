//! Logging-policy × method × train-size sweeps over seeds.

use std::time::Instant;

use banditfit_core::estimators::ips_value;
use banditfit_core::{fit, Env, LoggingPolicy, Method, ParamVector, Policy};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::Error;

/// One experiment cell. The sweep enumerates cells in `(method, size, seed)`
/// order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub method: Method,
    pub train_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub logging_policy: LoggingPolicy,
    pub train_size: usize,
    pub seed: u64,
    /// `None` when the fit failed.
    pub ab_ctr: Option<f64>,
    pub ab_stderr: Option<f64>,
    pub ips_value_on_holdout: Option<f64>,
    pub train_converged: bool,
    /// Seconds; 0 when wall time recording is off.
    pub wall_time: f64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// User-stream seed of the A/B test for a cell seed.
pub fn eval_seed(seed: u64) -> u64 {
    splitmix64(seed ^ 0xA5A5_A5A5_5A5A_5A5A)
}

/// User-stream seed of the IPS holdout log for a cell seed.
pub fn holdout_seed(seed: u64) -> u64 {
    splitmix64(seed ^ 0x0F0F_0F0F_F0F0_F0F0)
}

pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &method in &cfg.methods {
        for &train_size in &cfg.train_sizes {
            for seed in cfg.seeds() {
                out.push(Cell {
                    method,
                    train_size,
                    seed,
                });
            }
        }
    }
    out
}

/// Runs one cell from scratch: fresh environment, training log, fit, A/B
/// test on the evaluation stream and IPS on the holdout stream.
///
/// Fit failures are recorded in the row; configuration errors are returned.
pub fn run_cell(cfg: &ExperimentConfig, cell: Cell) -> Result<ResultRow, Error> {
    let start = Instant::now();
    let sim = cfg.sim.to_sim_config(cell.seed)?;
    let prior = cfg.prior.to_spec(sim.num_items)?;
    let opts = cfg.fit.to_options()?;
    let logging = Policy::Logging(cfg.logging_policy);

    let mut env = Env::new(sim)?;
    let train = env.generate_logs(&logging, cell.train_size)?;
    let mut row = ResultRow {
        method: cell.method,
        logging_policy: cfg.logging_policy,
        train_size: cell.train_size,
        seed: cell.seed,
        ab_ctr: None,
        ab_stderr: None,
        ips_value_on_holdout: None,
        train_converged: false,
        wall_time: 0.0,
    };
    match fit(cell.method, &train, Some(&prior), &opts) {
        Ok(res) => {
            let ab = env
                .fork(eval_seed(cell.seed))
                .ab_test(&res.beta, cfg.ab_test_size)?;
            row.ab_ctr = Some(ab.ctr);
            row.ab_stderr = Some(ab.stderr);
            row.ips_value_on_holdout = Some(holdout_ips(&env, &logging, cell, &res.beta)?);
            row.train_converged = res.converged;
        }
        Err(e) => eprintln!(
            "warning: {} size {} seed {}: fit failed: {e}",
            cell.method, cell.train_size, cell.seed
        ),
    }
    if cfg.record_wall_time {
        row.wall_time = start.elapsed().as_secs_f64();
    }
    Ok(row)
}

fn holdout_ips(env: &Env, logging: &Policy, cell: Cell, beta: &ParamVector) -> Result<f64, Error> {
    let holdout = env
        .fork(holdout_seed(cell.seed))
        .generate_logs(logging, cell.train_size)?;
    Ok(ips_value(&holdout, beta)?)
}

/// Runs every cell (in parallel) and returns rows in `(method, size, seed)`
/// order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, Error> {
    cfg.validate()?;
    cells(cfg)
        .into_par_iter()
        .map(|c| run_cell(cfg, c))
        .collect()
}
