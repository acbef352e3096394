//! Functional backward induction and functional value iteration.
//!
//! Value slices `V_t(s, ·)` are step functions of the wealth accumulated
//! before epoch `t`. One Bellman sweep computes, for every state,
//!
//! ```text
//! V_t(s, x) = max_a Σ_{s'} P(s, a, s') V_{t+1}(s', x ∘ r(s, a, s'))
//! ```
//!
//! by pulling thresholds back through the reward, so no wealth
//! discretization is involved.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mdp::{Edge, Mdp};
use crate::policy::WealthMarkovPolicy;
use crate::step::{ActionMap, StepFunction};
use crate::wealth::{WealthKind, WealthSpace};

/// Slack added around reachable wealth windows before clipping.
const WINDOW_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DpOptions {
    /// Only compute slices for states reachable at each epoch, and only on
    /// the range of wealth that can be held there. Values at `(s0, w0)` and
    /// the policy on every reachable `(t, s, wealth)` are unaffected.
    pub restrict_to_reachable: bool,
}

impl Default for DpOptions {
    fn default() -> Self {
        Self { restrict_to_reachable: true }
    }
}

/// `V_t(s, ·)` for `t = 1..=T+1`, or a single converged table.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    slices: Vec<Vec<StepFunction>>,
    stationary: bool,
}

impl ValueFunction {
    /// Slice at epoch `t` (1-based). Stationary tables ignore `t`.
    pub fn slice(&self, t: usize, s: usize) -> &StepFunction {
        if self.stationary {
            &self.slices[0][s]
        } else {
            &self.slices[t - 1][s]
        }
    }

    /// `T` for a finite-horizon table.
    pub fn horizon(&self) -> Option<usize> {
        (!self.stationary).then(|| self.slices.len() - 1)
    }

    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    pub fn n_states(&self) -> usize {
        self.slices[0].len()
    }

    pub fn max_pieces(&self) -> usize {
        self.slices.iter().flatten().map(StepFunction::len).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct DpSolution {
    pub policy: WealthMarkovPolicy,
    /// `V_1(s0, w0)`: the optimal probability of ending with wealth `◁`-above
    /// the target.
    pub p: f64,
    pub values: ValueFunction,
}

#[derive(Debug, Clone)]
pub struct ViSolution {
    pub policy: WealthMarkovPolicy,
    pub p: f64,
    pub sweeps: usize,
    /// Sup-norm change of each sweep.
    pub residuals: Vec<f64>,
    pub values: ValueFunction,
}

/// States that share an identical set of rows and therefore identical
/// Bellman updates.
struct StateGroups {
    of_state: Vec<usize>,
    representative: Vec<usize>,
}

impl StateGroups {
    fn new(m: &Mdp) -> Self {
        let mut by_hash: HashMap<u64, Vec<usize>> = HashMap::new();
        let mut of_state = vec![0; m.n_states()];
        let mut representative: Vec<usize> = Vec::new();
        for s in 0..m.n_states() {
            let mut h = DefaultHasher::new();
            for a in 0..m.n_actions() {
                for e in m.edges(s, a) {
                    (e.next, e.prob.to_bits(), e.reward.to_bits()).hash(&mut h);
                }
                usize::MAX.hash(&mut h);
            }
            let bucket = by_hash.entry(h.finish()).or_default();
            let found = bucket.iter().copied().find(|&g| same_rows(m, representative[g], s));
            of_state[s] = match found {
                Some(g) => g,
                None => {
                    representative.push(s);
                    bucket.push(representative.len() - 1);
                    representative.len() - 1
                }
            };
        }
        Self { of_state, representative }
    }
}

fn same_rows(m: &Mdp, s: usize, other: usize) -> bool {
    (0..m.n_actions()).all(|a| m.edges(s, a) == m.edges(other, a))
}

/// Applies one Bellman update to every state with `active[s]`, returning the
/// new slice and its argmax map (`None` for inactive states).
fn bellman_sweep(
    m: &Mdp,
    space: &WealthSpace,
    next: &[StepFunction],
    time_index: usize,
    groups: &StateGroups,
    active: &[bool],
) -> Result<Vec<Option<(StepFunction, ActionMap)>>> {
    let mut needed = vec![false; groups.representative.len()];
    for (s, &on) in active.iter().enumerate() {
        if on {
            needed[groups.of_state[s]] = true;
        }
    }
    let discount = space.discount(time_index);
    let ordinal = matches!(space.kind(), WealthKind::Ordinal(_));

    let per_group: Vec<Option<(StepFunction, ActionMap)>> = groups
        .representative
        .par_iter()
        .enumerate()
        .map(|(g, &s)| {
            if !needed[g] {
                return Ok(None);
            }
            let q: Vec<StepFunction> = (0..m.n_actions())
                .map(|a| action_value(m.edges(s, a), next, discount, ordinal.then_some(space)))
                .collect::<Result<_>>()?;
            Ok(Some(StepFunction::envelope(&q)))
        })
        .collect::<Result<_>>()?;

    Ok((0..m.n_states())
        .map(|s| if active[s] { per_group[groups.of_state[s]].clone() } else { None })
        .collect())
}

/// `x ↦ Σ_{s'} P(s, a, s') next[s'](x ∘ r)` for one row.
fn action_value(
    edges: &[Edge],
    next: &[StepFunction],
    discount: f64,
    ordinal: Option<&WealthSpace>,
) -> Result<StepFunction> {
    match ordinal {
        None => {
            let terms: Vec<(f64, &StepFunction, f64)> =
                edges.iter().map(|e| (e.prob, &next[e.next], discount * e.reward)).collect();
            Ok(StepFunction::combine_shifted(&terms))
        }
        Some(space) => {
            let pulled: Vec<StepFunction> =
                edges.iter().map(|e| next[e.next].pull_back(e.reward, space)).collect::<Result<_>>()?;
            let terms: Vec<(f64, &StepFunction, f64)> =
                edges.iter().zip(&pulled).map(|(e, f)| (e.prob, f, 0.0)).collect();
            Ok(StepFunction::combine_shifted(&terms))
        }
    }
}

/// Range of wealth that can be held in each state at each epoch,
/// `windows[t - 1][s]`, or `None` when `s` is unreachable at `t`.
fn reachable_windows(m: &Mdp, space: &WealthSpace, horizon: usize) -> Vec<Vec<Option<(f64, f64)>>> {
    let n = m.n_states();
    let ordinal = space.is_ordinal();
    let mut windows = vec![vec![None; n]; horizon];
    windows[0][m.initial_state()] = Some((space.w0(), space.w0()));
    for t in 1..horizon {
        let discount = space.discount(t - 1);
        let (done, rest) = windows.split_at_mut(t);
        let (current, upcoming) = (&done[t - 1], &mut rest[0]);
        for (s, window) in current.iter().enumerate() {
            let Some((lo, hi)) = *window else { continue };
            for a in 0..m.n_actions() {
                for e in m.edges(s, a).iter().filter(|e| e.prob > 0.0) {
                    let (nlo, nhi) = if ordinal {
                        (space.w_min(), space.w_max())
                    } else {
                        (lo + discount * e.reward, hi + discount * e.reward)
                    };
                    upcoming[e.next] = Some(match upcoming[e.next] {
                        Some((a, b)) => (f64::min(a, nlo), f64::max(b, nhi)),
                        None => (nlo, nhi),
                    });
                }
            }
        }
    }
    windows
}

pub fn backward_induction(m: &Mdp, space: &WealthSpace, w: f64, strict: bool) -> Result<DpSolution> {
    backward_induction_with(m, space, w, strict, &DpOptions::default())
}

/// Maximizes `P[w ◁ wealth(H_T)]` over all policies, where `◁` is `<` when
/// `strict` and `<=` otherwise.
pub fn backward_induction_with(
    m: &Mdp,
    space: &WealthSpace,
    w: f64,
    strict: bool,
    opts: &DpOptions,
) -> Result<DpSolution> {
    m.ensure_valid()?;
    let horizon = m.finite_horizon()?;
    let n = m.n_states();
    let groups = StateGroups::new(m);
    let windows = opts.restrict_to_reachable.then(|| reachable_windows(m, space, horizon));
    let clip = !space.is_ordinal();

    let mut slices: Vec<Vec<StepFunction>> = vec![Vec::new(); horizon + 1];
    slices[horizon] = vec![StepFunction::target_utility(w, strict); n];
    let mut rules: Vec<Vec<ActionMap>> = vec![Vec::new(); horizon];

    for t in (1..=horizon).rev() {
        let active: Vec<bool> = match &windows {
            Some(win) => win[t - 1].iter().map(Option::is_some).collect(),
            None => vec![true; n],
        };
        let updated = bellman_sweep(m, space, &slices[t], t - 1, &groups, &active)?;
        let mut values = Vec::with_capacity(n);
        let mut actions = Vec::with_capacity(n);
        for (s, entry) in updated.into_iter().enumerate() {
            match entry {
                Some((v, a)) => match windows.as_ref().and_then(|win| win[t - 1][s]).filter(|_| clip) {
                    Some((lo, hi)) => {
                        values.push(v.clip(lo - WINDOW_MARGIN, hi + WINDOW_MARGIN));
                        actions.push(a.clip(lo - WINDOW_MARGIN, hi + WINDOW_MARGIN));
                    }
                    None => {
                        values.push(v);
                        actions.push(a);
                    }
                },
                None => {
                    values.push(StepFunction::constant(0.0));
                    actions.push(ActionMap::constant(0));
                }
            }
        }
        slices[t - 1] = values;
        rules[t - 1] = actions;
    }

    let p = slices[0][m.initial_state()].eval(space.w0());
    Ok(DpSolution {
        policy: WealthMarkovPolicy::new(rules),
        p,
        values: ValueFunction { slices, stationary: false },
    })
}

/// Functional value iteration for undiscounted additive wealth with
/// single-signed rewards. Starts from the target utility and sweeps until
/// the sup-norm change of every slice is at most `eps_conv`.
pub fn value_iteration(
    m: &Mdp,
    space: &WealthSpace,
    w: f64,
    strict: bool,
    eps_conv: f64,
    max_sweeps: usize,
) -> Result<ViSolution> {
    m.ensure_valid()?;
    if !matches!(space.kind(), WealthKind::Additive) {
        return Err(Error::Precondition("value iteration needs undiscounted additive wealth".into()));
    }
    if !(eps_conv > 0.0) {
        return Err(Error::Argument(format!("convergence tolerance {eps_conv} must be positive")));
    }
    let (r_min, r_max) = m.reward_range();
    let w0 = space.w0();
    // Wealth never rises above w0 (nonpositive rewards) or falls below it
    // (nonnegative rewards), so slices only matter on that side.
    let (lo, hi) = match (r_min >= 0.0, r_max <= 0.0) {
        (true, true) => (w0, w0),
        (false, true) => (f64::NEG_INFINITY, w0),
        (true, false) => (w0, f64::INFINITY),
        (false, false) => {
            return Err(Error::Precondition(format!(
                "rewards span [{r_min}, {r_max}]; value iteration needs them all <= 0 or all >= 0"
            )))
        }
    };

    let n = m.n_states();
    let groups = StateGroups::new(m);
    let active = reachable_states(m);
    let mut current = vec![StepFunction::target_utility(w, strict).clip(lo - WINDOW_MARGIN, hi + WINDOW_MARGIN); n];
    let mut residuals = Vec::new();

    for sweep in 1..=max_sweeps {
        let updated = bellman_sweep(m, space, &current, 0, &groups, &active)?;
        let mut values = Vec::with_capacity(n);
        let mut actions = Vec::with_capacity(n);
        let mut residual: f64 = 0.0;
        for (s, entry) in updated.into_iter().enumerate() {
            match entry {
                Some((v, a)) => {
                    let v = v.clip(lo - WINDOW_MARGIN, hi + WINDOW_MARGIN);
                    residual = residual.max(v.sup_distance(&current[s]));
                    values.push(v);
                    actions.push(a.clip(lo - WINDOW_MARGIN, hi + WINDOW_MARGIN));
                }
                None => {
                    values.push(current[s].clone());
                    actions.push(ActionMap::constant(0));
                }
            }
        }
        residuals.push(residual);
        current = values;
        if residual <= eps_conv {
            let p = current[m.initial_state()].eval(w0);
            return Ok(ViSolution {
                policy: WealthMarkovPolicy::stationary(actions),
                p,
                sweeps: sweep,
                residuals,
                values: ValueFunction { slices: vec![current], stationary: true },
            });
        }
    }
    Err(Error::NonConvergence { sweeps: max_sweeps, residual: residuals.last().copied().unwrap_or(f64::NAN) })
}

fn reachable_states(m: &Mdp) -> Vec<bool> {
    let mut seen = vec![false; m.n_states()];
    let mut stack = vec![m.initial_state()];
    seen[m.initial_state()] = true;
    while let Some(s) = stack.pop() {
        for a in 0..m.n_actions() {
            for e in m.edges(s, a) {
                if e.prob > 0.0 && !seen[e.next] {
                    seen[e.next] = true;
                    stack.push(e.next);
                }
            }
        }
    }
    seen
}

/// Greedy policy of a value function: at each epoch and state, the lowest
/// action index attaining the Bellman maximum on each wealth interval.
pub fn extract_policy(vf: &ValueFunction, m: &Mdp, space: &WealthSpace) -> Result<WealthMarkovPolicy> {
    if vf.n_states() != m.n_states() {
        return Err(Error::Argument("value function and MDP disagree on the state count".into()));
    }
    let groups = StateGroups::new(m);
    let all = vec![true; m.n_states()];
    let greedy = |next: &[StepFunction], time_index: usize| -> Result<Vec<ActionMap>> {
        Ok(bellman_sweep(m, space, next, time_index, &groups, &all)?
            .into_iter()
            .map(|entry| entry.map_or_else(|| ActionMap::constant(0), |(_, a)| a))
            .collect())
    };
    if vf.stationary {
        return Ok(WealthMarkovPolicy::stationary(greedy(&vf.slices[0], 0)?));
    }
    let horizon = vf.slices.len() - 1;
    let rules = (1..=horizon).map(|t| greedy(&vf.slices[t], t - 1)).collect::<Result<_>>()?;
    Ok(WealthMarkovPolicy::new(rules))
}
