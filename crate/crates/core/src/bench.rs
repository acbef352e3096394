//! Runtime measurements of threshold solves on benchmark families.

use std::time::Instant;

use crate::dp::backward_induction;
use crate::error::{Error, Result};
use crate::mdp::{generate_datacenter, generate_garnet, DataCenterConfig, GarnetConfig, Horizon, Mdp};
use crate::wealth::WealthSpace;

/// One grid point: the varied parameter, then mean and standard deviation of
/// the runtime in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub x: usize,
    pub mean_secs: f64,
    pub std_secs: f64,
}

/// Times one threshold solve at the midpoint of the wealth range.
fn time_solve(m: &Mdp) -> Result<f64> {
    let space = WealthSpace::additive(m);
    let w = 0.5 * (space.w_min() + space.w_max());
    let start = Instant::now();
    backward_induction(m, &space, w, true)?;
    Ok(start.elapsed().as_secs_f64())
}

fn summarize(x: usize, times: &[f64]) -> BenchRow {
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    BenchRow { x, mean_secs: mean, std_secs: var.sqrt() }
}

fn check_grid(grid: &[usize], reps: usize) -> Result<()> {
    if grid.is_empty() || grid.contains(&0) || reps == 0 {
        return Err(Error::Argument("grid values and repetitions must be positive".into()));
    }
    Ok(())
}

/// Garnets `G(n, n_actions, ⌈log2 n⌉)` for each `n` in `states`; repetition
/// `k` uses seed `seed + k`.
pub fn bench_garnet(states: &[usize], n_actions: usize, horizon: usize, reps: usize, seed: u64) -> Result<Vec<BenchRow>> {
    check_grid(states, reps)?;
    states
        .iter()
        .map(|&n| {
            let times = (0..reps)
                .map(|k| {
                    let mut cfg = GarnetConfig::new(n, n_actions, seed.wrapping_add(k as u64));
                    cfg.horizon = Horizon::Finite(horizon);
                    time_solve(&generate_garnet(&cfg)?)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(summarize(n, &times))
        })
        .collect()
}

/// The data-center model with `n_servers` servers at each horizon in `horizons`.
pub fn bench_datacenter(n_servers: usize, horizons: &[usize], reps: usize) -> Result<Vec<BenchRow>> {
    check_grid(horizons, reps)?;
    let base = generate_datacenter(&DataCenterConfig::new(n_servers))?;
    horizons
        .iter()
        .map(|&t| {
            let m = base.clone().with_horizon(Horizon::Finite(t));
            let times = (0..reps).map(|_| time_solve(&m)).collect::<Result<Vec<_>>>()?;
            Ok(summarize(t, &times))
        })
        .collect()
}

pub fn rows_to_csv(header: &str, rows: &[BenchRow]) -> String {
    let mut out = format!("{header},mean_secs,std_secs\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.x, r.mean_secs, r.std_secs));
    }
    out
}
