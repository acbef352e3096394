use super::{Horizon, Mdp};
use crate::error::{Error, Result};

/// Outcomes whose truncated-Poisson mass falls below this are dropped before
/// renormalizing, which keeps high-rate rows from carrying hundreds of
/// numerically empty successors.
const POISSON_MASS_FLOOR: f64 = 1e-12;

/// Server-provisioning model.
///
/// A state is `(servers on m in 1..=n, pending jobs j in 0..3n)`; an action
/// picks the server count `m'` for the next step. Job arrivals follow a
/// Poisson law truncated to `0..3n`, whose rate is chosen by the regime of
/// the current job count. The reward is the negated cost
/// `alpha * m' + beta * max(0, j - kappa * m')`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCenterConfig {
    pub n_servers: usize,
    /// Arrival rates for the low, mid and high regimes.
    pub rates: [f64; 3],
    /// `j < thresholds[0]` is low, `j < thresholds[1]` is mid, the rest high.
    pub thresholds: [usize; 2],
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub horizon: Horizon,
}

impl DataCenterConfig {
    pub fn new(n_servers: usize) -> Self {
        let n = n_servers;
        Self {
            n_servers: n,
            rates: [n.div_ceil(2) as f64, (3 * n).div_ceil(2) as f64, (5 * n).div_ceil(2) as f64],
            thresholds: [n, 2 * n],
            alpha: 1.0,
            beta: 10.0,
            kappa: 3.0,
            horizon: Horizon::Finite(5),
        }
    }

    pub fn max_jobs(&self) -> usize {
        3 * self.n_servers
    }

    pub fn n_states(&self) -> usize {
        self.n_servers * self.max_jobs()
    }

    /// State index of `(servers_on, jobs)`, with `servers_on` in `1..=n`.
    pub fn state_index(&self, servers_on: usize, jobs: usize) -> usize {
        (servers_on - 1) * self.max_jobs() + jobs
    }

    /// Inverse of [`state_index`](Self::state_index).
    pub fn decode(&self, s: usize) -> (usize, usize) {
        (s / self.max_jobs() + 1, s % self.max_jobs())
    }

    pub fn rate_for(&self, jobs: usize) -> f64 {
        if jobs < self.thresholds[0] {
            self.rates[0]
        } else if jobs < self.thresholds[1] {
            self.rates[1]
        } else {
            self.rates[2]
        }
    }

    pub fn reward(&self, jobs: usize, next_servers: usize) -> f64 {
        let backlog = (jobs as f64 - self.kappa * next_servers as f64).max(0.0);
        -(self.alpha * next_servers as f64 + self.beta * backlog)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_servers == 0 {
            return Err(Error::Argument("need at least one server".into()));
        }
        if self.rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::Argument(format!("arrival rates {:?} must be positive", self.rates)));
        }
        if self.thresholds[0] > self.thresholds[1] || self.thresholds[1] > self.max_jobs() {
            return Err(Error::Argument(format!(
                "regime thresholds {:?} must be ordered within 0..={}",
                self.thresholds,
                self.max_jobs()
            )));
        }
        if !(self.alpha.is_finite() && self.beta.is_finite() && self.kappa.is_finite()) {
            return Err(Error::Argument("cost weights must be finite".into()));
        }
        Ok(())
    }
}

/// Poisson(`rate`) restricted to `0..support` and renormalized.
pub(crate) fn truncated_poisson(rate: f64, support: usize) -> Vec<f64> {
    let ln_rate = rate.ln();
    let mut ln_fact = 0.0;
    let mut logs = Vec::with_capacity(support);
    for k in 0..support {
        if k > 0 {
            ln_fact += (k as f64).ln();
        }
        logs.push(k as f64 * ln_rate - rate - ln_fact);
    }
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logs.iter().map(|l| (l - peak).exp()).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
        if *p < POISSON_MASS_FLOOR {
            *p = 0.0;
        }
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    probs
}

pub fn generate_datacenter(cfg: &DataCenterConfig) -> Result<Mdp> {
    cfg.validate()?;
    let n = cfg.n_servers;
    let jobs = cfg.max_jobs();
    let arrivals: Vec<Vec<f64>> = (0..jobs).map(|j| truncated_poisson(cfg.rate_for(j), jobs)).collect();

    let mut transitions = Vec::new();
    let mut rewards = vec![vec![0.0; n]; cfg.n_states()];
    for m in 1..=n {
        for j in 0..jobs {
            let s = cfg.state_index(m, j);
            for a in 0..n {
                let next_servers = a + 1;
                rewards[s][a] = cfg.reward(j, next_servers);
                for (next_jobs, &p) in arrivals[j].iter().enumerate() {
                    if p > 0.0 {
                        transitions.push((s, a, cfg.state_index(next_servers, next_jobs), p));
                    }
                }
            }
        }
    }
    Mdp::from_state_action(cfg.n_states(), n, transitions, rewards, 0, cfg.horizon)
}
