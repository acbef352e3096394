use crate::error::{Error, Result};
use crate::step::ActionMap;

/// A deterministic policy whose decision at each step depends on the current
/// state and the wealth accumulated so far.
///
/// Decision epochs are numbered `t = 1..=T`; epoch `t` acts after `t - 1`
/// rewards have been received. A stationary policy has a single rule table
/// used at every epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthMarkovPolicy {
    rules: Vec<Vec<ActionMap>>,
    stationary: bool,
}

impl WealthMarkovPolicy {
    /// `rules[t - 1][s]` is the action map used at epoch `t` in state `s`.
    pub fn new(rules: Vec<Vec<ActionMap>>) -> Self {
        Self { rules, stationary: false }
    }

    pub fn stationary(rules: Vec<ActionMap>) -> Self {
        Self { rules: vec![rules], stationary: true }
    }

    /// Lifts a wealth-independent Markov policy, `actions[t - 1][s]`.
    pub fn from_markov(actions: &[Vec<usize>]) -> Self {
        Self::new(
            actions
                .iter()
                .map(|row| row.iter().map(|&a| ActionMap::constant(a)).collect())
                .collect(),
        )
    }

    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    /// Number of epochs covered, `None` for stationary policies.
    pub fn horizon(&self) -> Option<usize> {
        (!self.stationary).then_some(self.rules.len())
    }

    pub fn n_states(&self) -> usize {
        self.rules.first().map_or(0, Vec::len)
    }

    pub fn rule(&self, t: usize, s: usize) -> &ActionMap {
        let row = if self.stationary { &self.rules[0] } else { &self.rules[t - 1] };
        &row[s]
    }

    pub fn rules(&self) -> &[Vec<ActionMap>] {
        &self.rules
    }

    pub fn action(&self, t: usize, s: usize, wealth: f64) -> usize {
        self.rule(t, s).eval(wealth)
    }

    /// Checks that the policy fits a problem with the given dimensions.
    pub fn check_shape(&self, n_states: usize, n_actions: usize, horizon: Option<usize>) -> Result<()> {
        if self.rules.iter().any(|row| row.len() != n_states) {
            return Err(Error::Argument(format!("policy does not cover {n_states} states")));
        }
        if let (Some(t), false) = (horizon, self.stationary) {
            if self.rules.len() < t {
                return Err(Error::Argument(format!(
                    "policy covers {} epochs, problem needs {t}",
                    self.rules.len()
                )));
            }
        }
        if horizon.is_none() && !self.stationary {
            return Err(Error::Argument("infinite-horizon problems need a stationary policy".into()));
        }
        if let Some(bad) = self.rules.iter().flatten().map(ActionMap::max_action).find(|&a| a >= n_actions) {
            return Err(Error::Argument(format!("policy uses action {bad}, only {n_actions} exist")));
        }
        Ok(())
    }
}
