use crate::error::{Error, Result};
use crate::eval::distribution::{merge_atoms, WealthDistribution};
use crate::mdp::Mdp;
use crate::policy::WealthMarkovPolicy;
use crate::quantile::Criterion;
use crate::step::ActionMap;
use crate::wealth::WealthSpace;
use crate::WEALTH_TOL;

/// Default cap on the number of enumerated policies.
pub const DEFAULT_POLICY_CAP: usize = 1_000_000;

/// One augmented state `(s, wealth)` with its reach probability.
#[derive(Debug, Clone, Copy)]
struct Atom {
    state: usize,
    wealth: f64,
    prob: f64,
}

/// Decision made at one augmented state.
type Choice = (usize, f64, usize);

struct Search<'a> {
    m: &'a Mdp,
    space: &'a WealthSpace,
    horizon: usize,
    tau: f64,
    criterion: Criterion,
    cap: usize,
    visited: usize,
    best: Option<(f64, Vec<Vec<Choice>>)>,
    path: Vec<Vec<Choice>>,
}

/// Optimal quantile by exhaustive enumeration of deterministic
/// wealth-Markovian policies: one action per reachable `(t, s, wealth)`
/// atom. Exponential; meant as a test oracle on tiny instances.
pub fn brute_force_optimal_quantile(
    m: &Mdp,
    space: &WealthSpace,
    tau: f64,
    criterion: Criterion,
) -> Result<(f64, WealthMarkovPolicy)> {
    brute_force_capped(m, space, tau, criterion, DEFAULT_POLICY_CAP)
}

pub fn brute_force_capped(
    m: &Mdp,
    space: &WealthSpace,
    tau: f64,
    criterion: Criterion,
    cap: usize,
) -> Result<(f64, WealthMarkovPolicy)> {
    m.ensure_valid()?;
    criterion.check_tau(tau)?;
    let horizon = m.finite_horizon()?;
    let mut search = Search {
        m,
        space,
        horizon,
        tau,
        criterion,
        cap,
        visited: 0,
        best: None,
        path: Vec::with_capacity(horizon),
    };
    let start = vec![Atom { state: m.initial_state(), wealth: space.w0(), prob: 1.0 }];
    search.descend(1, start)?;
    let (q, choices) = search.best.expect("at least one policy is enumerated");
    Ok((q, to_policy(&choices, m.n_states())))
}

impl Search<'_> {
    fn descend(&mut self, t: usize, layer: Vec<Atom>) -> Result<()> {
        if t > self.horizon {
            self.visited += 1;
            if self.visited > self.cap {
                return Err(Error::Resource(format!("more than {} policies to enumerate", self.cap)));
            }
            let dist = WealthDistribution::from_atoms(layer.iter().map(|a| (a.wealth, a.prob)).collect())?;
            let q = dist.quantile(self.tau, self.criterion)?;
            if self.best.as_ref().is_none_or(|(b, _)| q > *b) {
                self.best = Some((q, self.path.clone()));
            }
            return Ok(());
        }
        let n_actions = self.m.n_actions();
        let mut digits = vec![0usize; layer.len()];
        loop {
            let mut next = Vec::new();
            for (atom, &a) in layer.iter().zip(&digits) {
                for e in self.m.edges(atom.state, a).iter().filter(|e| e.prob > 0.0) {
                    next.push(Atom {
                        state: e.next,
                        wealth: self.space.accumulate(atom.wealth, e.reward, t - 1)?,
                        prob: atom.prob * e.prob,
                    });
                }
            }
            self.path.push(layer.iter().zip(&digits).map(|(atom, &a)| (atom.state, atom.wealth, a)).collect());
            self.descend(t + 1, merge_layer(next, self.m.n_states()))?;
            self.path.pop();

            // odometer over one action per atom
            let mut k = 0;
            while k < digits.len() {
                digits[k] += 1;
                if digits[k] < n_actions {
                    break;
                }
                digits[k] = 0;
                k += 1;
            }
            if k == digits.len() {
                return Ok(());
            }
        }
    }
}

fn merge_layer(atoms: Vec<Atom>, n_states: usize) -> Vec<Atom> {
    let mut per_state: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n_states];
    for a in atoms {
        per_state[a.state].push((a.wealth, a.prob));
    }
    per_state
        .into_iter()
        .enumerate()
        .flat_map(|(state, atoms)| {
            merge_atoms(atoms).into_iter().map(move |(wealth, prob)| Atom { state, wealth, prob })
        })
        .collect()
}

/// Policy that plays each recorded choice on its own wealth atom and action 0
/// everywhere else.
fn to_policy(choices: &[Vec<Choice>], n_states: usize) -> WealthMarkovPolicy {
    let rules = choices
        .iter()
        .map(|epoch| {
            (0..n_states)
                .map(|s| {
                    let mut entries: Vec<(f64, usize)> =
                        epoch.iter().filter(|c| c.0 == s).map(|c| (c.1, c.2)).collect();
                    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
                    let mut raw = Vec::with_capacity(2 * entries.len());
                    for (i, &(w, a)) in entries.iter().enumerate() {
                        raw.push((w, true, a));
                        let next_close = entries.get(i + 1).is_some_and(|n| n.0 - w <= WEALTH_TOL);
                        if !next_close {
                            raw.push((w, false, 0));
                        }
                    }
                    ActionMap::from_entries(0, raw).expect("atoms are separated by more than the tolerance")
                })
                .collect()
        })
        .collect();
    WealthMarkovPolicy::new(rules)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::exact_distribution;
    use crate::mdp::{two_state_example, Horizon};

    #[test]
    fn example_optimum_at_horizon_two() {
        let m = two_state_example(Horizon::Finite(2));
        let space = WealthSpace::discounted(&m, 0.9).unwrap();
        let (q, pi) = brute_force_optimal_quantile(&m, &space, 0.95, Criterion::Lower).unwrap();
        assert!((q - 1.9).abs() < 1e-12);
        let d = exact_distribution(&m, &space, &pi).unwrap();
        assert_eq!(d.quantile(0.95, Criterion::Lower).unwrap(), q);
    }

    #[test]
    fn single_action_is_unique_policy() {
        let m = Mdp::from_state_action(
            2,
            1,
            vec![(0, 0, 0, 0.3), (0, 0, 1, 0.7), (1, 0, 1, 1.0)],
            vec![vec![1.0], vec![2.0]],
            0,
            Horizon::Finite(2),
        )
        .unwrap();
        let space = WealthSpace::additive(&m);
        let (q, _) = brute_force_optimal_quantile(&m, &space, 0.5, Criterion::Lower).unwrap();
        // wealth 2 w.p. 0.3, 3 w.p. 0.7
        assert_eq!(q, 3.0);
    }

    #[test]
    fn cap_is_enforced() {
        let m = two_state_example(Horizon::Finite(2));
        let space = WealthSpace::additive(&m);
        let err = brute_force_capped(&m, &space, 0.5, Criterion::Lower, 2).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }
}
