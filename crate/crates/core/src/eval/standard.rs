use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::policy::WealthMarkovPolicy;
use crate::wealth::WealthSpace;

/// Expectation-optimal deterministic Markov policy and its values.
#[derive(Debug, Clone)]
pub struct StandardSolution {
    /// `actions[t - 1][s]`.
    pub actions: Vec<Vec<usize>>,
    /// `values[t - 1][s]` is `v*_t(s)`, for `t = 1..=T+1`.
    pub values: Vec<Vec<f64>>,
}

impl StandardSolution {
    pub fn policy(&self) -> WealthMarkovPolicy {
        WealthMarkovPolicy::from_markov(&self.actions)
    }

    /// `v*_1(s0)`.
    pub fn value(&self, m: &Mdp) -> f64 {
        self.values[0][m.initial_state()]
    }
}

/// Classic Bellman backward induction maximizing expected wealth. In a
/// discounted space the reward of epoch `t` is weighted by `gamma^(t-1)`.
pub fn standard_backward_induction(m: &Mdp, space: &WealthSpace) -> Result<StandardSolution> {
    m.ensure_valid()?;
    if space.is_ordinal() {
        return Err(Error::Unsupported("expected wealth is undefined on ordinal scales".into()));
    }
    let horizon = m.finite_horizon()?;
    let n = m.n_states();
    let mut values = vec![vec![0.0; n]; horizon + 1];
    let mut actions = vec![vec![0; n]; horizon];
    for t in (1..=horizon).rev() {
        let discount = space.discount(t - 1);
        for s in 0..n {
            let mut best = f64::NEG_INFINITY;
            for a in 0..m.n_actions() {
                let q: f64 = m
                    .edges(s, a)
                    .iter()
                    .map(|e| e.prob * (discount * e.reward + values[t][e.next]))
                    .sum();
                if q > best {
                    best = q;
                    actions[t - 1][s] = a;
                }
            }
            values[t - 1][s] = best;
        }
    }
    Ok(StandardSolution { actions, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::Horizon;

    #[test]
    fn one_step_is_greedy() {
        let m = Mdp::from_state_action(
            1,
            3,
            vec![(0, 0, 0, 1.0), (0, 1, 0, 1.0), (0, 2, 0, 1.0)],
            vec![vec![0.2, 0.9, 0.4]],
            0,
            Horizon::Finite(1),
        )
        .unwrap();
        let sol = standard_backward_induction(&m, &WealthSpace::additive(&m)).unwrap();
        assert_eq!(sol.actions, vec![vec![1]]);
        assert_eq!(sol.value(&m), 0.9);
    }

    #[test]
    fn zero_rewards_zero_values() {
        let m = Mdp::from_state_action(
            2,
            2,
            vec![(0, 0, 1, 1.0), (0, 1, 0, 1.0), (1, 0, 0, 1.0), (1, 1, 1, 1.0)],
            vec![vec![0.0; 2]; 2],
            0,
            Horizon::Finite(4),
        )
        .unwrap();
        let sol = standard_backward_induction(&m, &WealthSpace::additive(&m)).unwrap();
        assert!(sol.values.iter().flatten().all(|&v| v == 0.0));
    }
}
