use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Horizon, Mdp};
use crate::error::{Error, Result};

/// Parameters of a Garnet random MDP `G(n_states, n_actions, branching)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GarnetConfig {
    pub n_states: usize,
    pub n_actions: usize,
    pub branching: usize,
    pub reward_low: f64,
    pub reward_high: f64,
    pub horizon: Horizon,
    /// Skews the reward distribution toward `reward_low`: each reward's
    /// position `u` in the interval is replaced by `u^(1 / (1 - skew))`.
    /// `0` leaves rewards uniform.
    pub skew: f64,
    pub seed: u64,
}

impl GarnetConfig {
    /// `G(n_states, n_actions, ceil(log2 n_states))` with rewards in `[0, 1]`.
    pub fn new(n_states: usize, n_actions: usize, seed: u64) -> Self {
        Self {
            n_states,
            n_actions,
            branching: default_branching(n_states),
            reward_low: 0.0,
            reward_high: 1.0,
            horizon: Horizon::Finite(5),
            skew: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.n_actions == 0 {
            return Err(Error::Argument("Garnet needs at least one state and one action".into()));
        }
        if self.branching == 0 || self.branching > self.n_states {
            return Err(Error::Argument(format!(
                "branching factor {} must lie in 1..={}",
                self.branching, self.n_states
            )));
        }
        if !(self.reward_low <= self.reward_high) || !self.reward_low.is_finite() || !self.reward_high.is_finite() {
            return Err(Error::Argument(format!(
                "reward interval [{}, {}] is empty or unbounded",
                self.reward_low, self.reward_high
            )));
        }
        if !(0.0..1.0).contains(&self.skew) {
            return Err(Error::Argument(format!("skew {} not in [0, 1)", self.skew)));
        }
        Ok(())
    }
}

/// `ceil(log2 n)`, at least 1 and at most `n`.
pub fn default_branching(n_states: usize) -> usize {
    if n_states <= 1 {
        return 1;
    }
    let bits = usize::BITS - (n_states - 1).leading_zeros();
    (bits as usize).clamp(1, n_states)
}

/// Draws a Garnet instance. Each state-action pair gets `branching` distinct
/// successors chosen uniformly; their probabilities are the gaps between
/// `branching - 1` sorted uniform cut points of `[0, 1]`. Rewards are
/// state-action rewards drawn uniformly from the configured interval.
pub fn generate_garnet(cfg: &GarnetConfig) -> Result<Mdp> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut transitions = Vec::with_capacity(cfg.n_states * cfg.n_actions * cfg.branching);
    let mut rewards = vec![vec![0.0; cfg.n_actions]; cfg.n_states];
    let exponent = 1.0 / (1.0 - cfg.skew);
    let span = cfg.reward_high - cfg.reward_low;

    for (s, row) in rewards.iter_mut().enumerate() {
        for (a, reward) in row.iter_mut().enumerate() {
            let successors = index::sample(&mut rng, cfg.n_states, cfg.branching).into_vec();
            let mut cuts: Vec<f64> = (0..cfg.branching - 1).map(|_| rng.gen::<f64>()).collect();
            cuts.sort_by(f64::total_cmp);
            let mut prev = 0.0;
            for (k, &next) in successors.iter().enumerate() {
                let edge = cuts.get(k).copied().unwrap_or(1.0);
                transitions.push((s, a, next, edge - prev));
                prev = edge;
            }
            let u: f64 = rng.gen();
            *reward = cfg.reward_low + span * u.powf(exponent);
        }
    }
    Mdp::from_state_action(cfg.n_states, cfg.n_actions, transitions, rewards, 0, cfg.horizon)
}
