//! Finite MDP model and benchmark generators.

mod datacenter;
mod garnet;

use std::collections::HashSet;
use std::fmt;

pub use datacenter::{generate_datacenter, DataCenterConfig};
pub use garnet::{generate_garnet, GarnetConfig};

use crate::error::{Error, Result};

/// Allowed deviation of a transition row's total mass from 1.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

impl Horizon {
    pub fn finite(&self) -> Option<usize> {
        match *self {
            Horizon::Finite(t) => Some(t),
            Horizon::Infinite => None,
        }
    }
}

/// One outcome of a state-action pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub next: usize,
    pub prob: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RewardKind {
    /// `r(s, a)`, one value per state-action pair, row-major in `s`.
    StateAction(Vec<f64>),
    /// `r(s, a, s')`, stored on each edge.
    Transition,
}

/// A problem instance: kernel, rewards, initial state and horizon.
///
/// Construction only rejects entries that cannot be placed (an out-of-range
/// source state or action). Everything else is reported by [`Mdp::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    n_states: usize,
    n_actions: usize,
    rows: Vec<Vec<Edge>>,
    rewards: RewardKind,
    initial_state: usize,
    horizon: Horizon,
}

/// A single invariant violation found by [`Mdp::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub state: Option<usize>,
    pub action: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.state, self.action) {
            (Some(s), Some(a)) => write!(f, "(s={s}, a={a}): {}", self.message),
            (Some(s), None) => write!(f, "(s={s}): {}", self.message),
            _ => write!(f, "{}", self.message),
        }
    }
}

impl Mdp {
    /// Builds an MDP with state-action rewards from `(s, a, s', p)` entries.
    pub fn from_state_action(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<(usize, usize, usize, f64)>,
        rewards: Vec<Vec<f64>>,
        initial_state: usize,
        horizon: Horizon,
    ) -> Result<Self> {
        if rewards.len() != n_states || rewards.iter().any(|row| row.len() != n_actions) {
            return Err(Error::Argument(format!(
                "state-action rewards must be a {n_states}x{n_actions} table"
            )));
        }
        let flat: Vec<f64> = rewards.into_iter().flatten().collect();
        let mut rows = vec![Vec::new(); n_states * n_actions];
        for (s, a, next, prob) in transitions {
            let idx = row_index(n_states, n_actions, s, a)?;
            rows[idx].push(Edge { next, prob, reward: flat[idx] });
        }
        Ok(Self {
            n_states,
            n_actions,
            rows,
            rewards: RewardKind::StateAction(flat),
            initial_state,
            horizon,
        })
    }

    /// Builds an MDP whose rewards depend on the next state, from
    /// `(s, a, s', p, r)` entries.
    pub fn from_transitions(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<(usize, usize, usize, f64, f64)>,
        initial_state: usize,
        horizon: Horizon,
    ) -> Result<Self> {
        let mut rows = vec![Vec::new(); n_states * n_actions];
        for (s, a, next, prob, reward) in transitions {
            let idx = row_index(n_states, n_actions, s, a)?;
            rows[idx].push(Edge { next, prob, reward });
        }
        Ok(Self {
            n_states,
            n_actions,
            rows,
            rewards: RewardKind::Transition,
            initial_state,
            horizon,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn rewards(&self) -> &RewardKind {
        &self.rewards
    }

    /// Same dynamics with a different horizon.
    pub fn with_horizon(mut self, horizon: Horizon) -> Self {
        self.horizon = horizon;
        self
    }

    /// Outcomes of taking `a` in `s`.
    pub fn edges(&self, s: usize, a: usize) -> &[Edge] {
        &self.rows[s * self.n_actions + a]
    }

    /// Iterates `(s, a, edges)` over all rows.
    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, &[Edge])> + '_ {
        self.rows.iter().enumerate().map(move |(i, row)| (i / self.n_actions, i % self.n_actions, row.as_slice()))
    }

    /// Smallest and largest reward that can be received.
    pub fn reward_range(&self) -> (f64, f64) {
        let values: Box<dyn Iterator<Item = f64>> = match &self.rewards {
            RewardKind::StateAction(r) => Box::new(r.iter().copied()),
            RewardKind::Transition => Box::new(self.rows.iter().flatten().map(|e| e.reward)),
        };
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)));
        if lo > hi {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    /// Reports every violated model invariant; an empty list means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let global = |message: String| Violation { state: None, action: None, message };
        if self.n_states == 0 {
            out.push(global("no states".into()));
        }
        if self.n_actions == 0 {
            out.push(global("no actions".into()));
        }
        if self.initial_state >= self.n_states {
            out.push(global(format!("initial state {} out of range", self.initial_state)));
        }
        if self.horizon == Horizon::Finite(0) {
            out.push(global("horizon must be positive".into()));
        }
        if let RewardKind::StateAction(r) = &self.rewards {
            for (i, v) in r.iter().enumerate() {
                if !v.is_finite() {
                    out.push(Violation {
                        state: Some(i / self.n_actions),
                        action: Some(i % self.n_actions),
                        message: format!("reward {v} is not finite"),
                    });
                }
            }
        }
        for (s, a, edges) in self.rows() {
            let at = |message: String| Violation { state: Some(s), action: Some(a), message };
            let mut seen = HashSet::new();
            let mut total = 0.0;
            for e in edges {
                if e.next >= self.n_states {
                    out.push(at(format!("successor {} out of range", e.next)));
                }
                if !seen.insert(e.next) {
                    out.push(at(format!("duplicate successor {}", e.next)));
                }
                if !e.prob.is_finite() || e.prob < 0.0 {
                    out.push(at(format!("invalid probability {} for successor {}", e.prob, e.next)));
                }
                if matches!(self.rewards, RewardKind::Transition) && !e.reward.is_finite() {
                    out.push(at(format!("reward {} is not finite", e.reward)));
                }
                total += e.prob;
            }
            if !((total - 1.0).abs() <= ROW_SUM_TOL) {
                out.push(at(format!("probabilities sum to {total}")));
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(violations))
        }
    }

    pub(crate) fn finite_horizon(&self) -> Result<usize> {
        self.horizon.finite().ok_or_else(|| {
            Error::Unsupported("infinite horizon: use value iteration instead".into())
        })
    }
}

fn row_index(n_states: usize, n_actions: usize, s: usize, a: usize) -> Result<usize> {
    if s >= n_states || a >= n_actions {
        return Err(Error::Argument(format!(
            "transition source (s={s}, a={a}) outside {n_states} states x {n_actions} actions"
        )));
    }
    Ok(s * n_actions + a)
}

/// The two-state example with next-state rewards: in `s1`, `a1` stays with
/// probability 0.1 (reward 1) or falls to `s2` (reward -1); `a2` moves to
/// `s2` with reward 1. `s2` is absorbing with zero reward.
pub fn two_state_example(horizon: Horizon) -> Mdp {
    Mdp::from_transitions(
        2,
        2,
        vec![
            (0, 0, 0, 0.1, 1.0),
            (0, 0, 1, 0.9, -1.0),
            (0, 1, 1, 1.0, 1.0),
            (1, 0, 1, 1.0, 0.0),
            (1, 1, 1, 1.0, 0.0),
        ],
        0,
        horizon,
    )
    .expect("static example")
}
