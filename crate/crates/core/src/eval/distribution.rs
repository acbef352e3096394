use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::policy::WealthMarkovPolicy;
use crate::quantile::Criterion;
use crate::wealth::WealthSpace;
use crate::{PROB_TOL, WEALTH_TOL};

/// Default cap on the number of `(state, wealth)` atoms held at one epoch.
pub const DEFAULT_ATOM_CAP: usize = 10_000_000;

/// Finite distribution over final wealth levels.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthDistribution {
    support: Vec<(f64, f64)>,
}

impl WealthDistribution {
    /// Sorts atoms, drops zero-mass ones and merges levels closer than the
    /// wealth tolerance (keeping the smaller representative).
    pub fn from_atoms(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if let Some(&(w, p)) = atoms.iter().find(|(w, p)| !w.is_finite() || !p.is_finite() || *p < 0.0) {
            return Err(Error::Argument(format!("invalid atom ({w}, {p})")));
        }
        let support = merge_atoms(atoms);
        let total: f64 = support.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!("probabilities sum to {total}")));
        }
        Ok(Self { support })
    }

    /// Empirical distribution of a sample.
    pub fn empirical(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Argument("empty sample".into()));
        }
        let mass = 1.0 / samples.len() as f64;
        Self::from_atoms(samples.iter().map(|&w| (w, mass)).collect())
    }

    pub fn support(&self) -> &[(f64, f64)] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().map(|(w, p)| w * p).sum()
    }

    /// `F(w)`: mass on levels `⪯ w`.
    pub fn cdf(&self, w: f64) -> f64 {
        self.support.iter().take_while(|(x, _)| *x <= w + WEALTH_TOL).map(|a| a.1).sum()
    }

    /// `G(w)`: mass on levels `⪰ w`.
    pub fn decumulative(&self, w: f64) -> f64 {
        self.support.iter().filter(|(x, _)| *x >= w - WEALTH_TOL).map(|a| a.1).sum()
    }

    /// `G_≺(w)`: mass on levels strictly above `w`.
    pub fn strict_decumulative(&self, w: f64) -> f64 {
        self.support.iter().filter(|(x, _)| *x > w + WEALTH_TOL).map(|a| a.1).sum()
    }

    /// Lower (`min {w : F(w) >= tau}`) or upper (`max {w : G(w) >= 1 - tau}`)
    /// quantile over the support.
    pub fn quantile(&self, tau: f64, criterion: Criterion) -> Result<f64> {
        criterion.check_tau(tau)?;
        if self.support.is_empty() {
            return Err(Error::Argument("quantile of an empty distribution".into()));
        }
        match criterion {
            Criterion::Lower => {
                let mut acc = 0.0;
                for &(w, p) in &self.support {
                    acc += p;
                    if acc >= tau - PROB_TOL {
                        return Ok(w);
                    }
                }
                Ok(self.support[self.support.len() - 1].0)
            }
            Criterion::Upper => {
                let mut acc = 0.0;
                for &(w, p) in self.support.iter().rev() {
                    acc += p;
                    if acc >= 1.0 - tau - PROB_TOL {
                        return Ok(w);
                    }
                }
                Ok(self.support[0].0)
            }
        }
    }

    /// Rows `(wealth, p, F, G)` in increasing wealth order.
    pub fn table(&self) -> Vec<(f64, f64, f64, f64)> {
        let total: f64 = self.support.iter().map(|a| a.1).sum();
        let mut below = 0.0;
        self.support
            .iter()
            .map(|&(w, p)| {
                let g = total - below;
                below += p;
                (w, p, below, g)
            })
            .collect()
    }

    /// Kolmogorov–Smirnov distance between two distributions' CDFs.
    pub fn ks_distance(&self, other: &WealthDistribution) -> f64 {
        let mut points: Vec<f64> = self.support.iter().chain(&other.support).map(|a| a.0).collect();
        points.sort_by(f64::total_cmp);
        points.iter().map(|&w| (self.cdf(w) - other.cdf(w)).abs()).fold(0.0, f64::max)
    }
}

pub(crate) fn merge_atoms(mut atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    atoms.retain(|a| a.1 > 0.0);
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (w, p) in atoms {
        match out.last_mut() {
            Some(last) if w - last.0 <= WEALTH_TOL => last.1 += p,
            _ => out.push((w, p)),
        }
    }
    out
}

/// Exact distribution of final wealth under `pi`, by a forward pass over
/// reachable `(state, wealth)` atoms.
pub fn exact_distribution(m: &Mdp, space: &WealthSpace, pi: &WealthMarkovPolicy) -> Result<WealthDistribution> {
    exact_distribution_capped(m, space, pi, DEFAULT_ATOM_CAP)
}

pub fn exact_distribution_capped(
    m: &Mdp,
    space: &WealthSpace,
    pi: &WealthMarkovPolicy,
    atom_cap: usize,
) -> Result<WealthDistribution> {
    m.ensure_valid()?;
    let horizon = m.finite_horizon()?;
    pi.check_shape(m.n_states(), m.n_actions(), Some(horizon))?;

    let n = m.n_states();
    let mut layer: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
    layer[m.initial_state()].push((space.w0(), 1.0));
    for t in 1..=horizon {
        let mut next: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
        for (s, atoms) in layer.iter().enumerate() {
            for &(w, p) in atoms {
                let a = pi.action(t, s, w);
                for e in m.edges(s, a).iter().filter(|e| e.prob > 0.0) {
                    next[e.next].push((space.accumulate(w, e.reward, t - 1)?, p * e.prob));
                }
            }
        }
        let mut count = 0;
        for atoms in &mut next {
            *atoms = merge_atoms(std::mem::take(atoms));
            count += atoms.len();
        }
        if count > atom_cap {
            return Err(Error::Resource(format!(
                "{count} reachable atoms at epoch {t} exceed the cap of {atom_cap}; use Monte Carlo evaluation"
            )));
        }
        layer = next;
    }
    let support = merge_atoms(layer.into_iter().flatten().collect());
    Ok(WealthDistribution { support })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{two_state_example, Horizon};

    fn example_one() -> WealthDistribution {
        WealthDistribution::from_atoms(vec![(0.0, 0.5), (1.0, 0.2), (2.0, 0.3)]).unwrap()
    }

    #[test]
    fn example_one_quantiles() {
        let d = example_one();
        assert_eq!(d.quantile(0.5, Criterion::Lower).unwrap(), 0.0);
        assert_eq!(d.quantile(0.5, Criterion::Upper).unwrap(), 1.0);
        assert_eq!(d.cdf(0.0), 0.5);
        assert!((d.decumulative(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn point_mass_quantiles() {
        let d = WealthDistribution::from_atoms(vec![(3.5, 1.0)]).unwrap();
        for tau in [0.0, 0.1, 0.5, 0.99] {
            assert_eq!(d.quantile(tau, Criterion::Upper).unwrap(), 3.5);
        }
        for tau in [0.1, 0.5, 1.0] {
            assert_eq!(d.quantile(tau, Criterion::Lower).unwrap(), 3.5);
        }
    }

    #[test]
    fn tau_ranges_enforced() {
        let d = example_one();
        assert!(d.quantile(0.0, Criterion::Lower).is_err());
        assert!(d.quantile(1.0, Criterion::Upper).is_err());
        assert!(d.quantile(1.5, Criterion::Lower).is_err());
    }

    #[test]
    fn full_mass_at_extremes() {
        let d = example_one();
        assert!((d.cdf(2.0) - 1.0).abs() < 1e-15);
        assert!((d.decumulative(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn example_policies_at_horizon_two() {
        let m = two_state_example(Horizon::Finite(2));
        let space = WealthSpace::discounted(&m, 0.9).unwrap();
        let first_then_second = WealthMarkovPolicy::from_markov(&[vec![0, 0], vec![1, 0]]);
        let d = exact_distribution(&m, &space, &first_then_second).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.support()[0], (-1.0, 0.9));
        assert!((d.support()[1].0 - 1.9).abs() < 1e-12);
        assert!((d.support()[1].1 - 0.1).abs() < 1e-12);
    }

    #[test]
    fn deterministic_chain_point_mass() {
        let m = Mdp::from_transitions(2, 1, vec![(0, 0, 1, 1.0, 1.0), (1, 0, 1, 1.0, -1.0)], 0, Horizon::Finite(2)).unwrap();
        let space = WealthSpace::additive(&m);
        let d = exact_distribution(&m, &space, &WealthMarkovPolicy::from_markov(&[vec![0, 0], vec![0, 0]])).unwrap();
        assert_eq!(d.support(), &[(0.0, 1.0)]);
    }

    #[test]
    fn atom_cap_is_enforced() {
        let m = two_state_example(Horizon::Finite(2));
        let space = WealthSpace::discounted(&m, 0.9).unwrap();
        let pi = WealthMarkovPolicy::from_markov(&[vec![0, 0], vec![0, 0]]);
        assert!(matches!(exact_distribution_capped(&m, &space, &pi, 1), Err(Error::Resource(_))));
    }

    #[test]
    fn table_columns() {
        let rows = example_one().table();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0], (0.0, 0.5, 0.5, 1.0));
        assert!((rows[2].3 - 0.3).abs() < 1e-15);
    }
}
