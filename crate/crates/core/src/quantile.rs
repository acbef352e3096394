//! Binary search over wealth thresholds for quantile-optimal policies.
//!
//! For a threshold `w`, the lower criterion asks whether some policy ends
//! strictly above `w` with probability greater than `1 - tau`; the upper
//! criterion asks whether some policy ends at or above `w` with probability
//! at least `1 - tau`. Both probabilities are maximized by one dynamic
//! programming solve with an indicator utility, and the answers are monotone
//! in `w`, so the optimal quantile is located by bisection.

use std::fmt;
use std::str::FromStr;

use crate::dp::{backward_induction, value_iteration};
use crate::error::{Error, Result};
use crate::eval::exact_distribution;
use crate::mdp::Mdp;
use crate::policy::WealthMarkovPolicy;
use crate::wealth::{ordinal_mid, WealthSpace};
use crate::PROB_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    /// `min {w : F(w) >= tau}`, defined for `tau` in `(0, 1]`.
    Lower,
    /// `max {w : G(w) >= 1 - tau}`, defined for `tau` in `[0, 1)`.
    Upper,
}

impl Criterion {
    pub fn check_tau(self, tau: f64) -> Result<()> {
        let ok = match self {
            Criterion::Lower => tau > 0.0 && tau <= 1.0,
            Criterion::Upper => (0.0..1.0).contains(&tau),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Argument(format!("tau = {tau} is outside the range of the {self} quantile")))
        }
    }

    /// Whether the threshold solve uses a strict target (`w < x`).
    pub fn strict(self) -> bool {
        matches!(self, Criterion::Lower)
    }

    /// Whether the optimal probability `p` at a threshold moves the bracket up.
    pub fn accepts(self, p: f64, tau: f64) -> bool {
        match self {
            Criterion::Lower => p > 1.0 - tau + PROB_TOL,
            Criterion::Upper => p >= 1.0 - tau - PROB_TOL,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Lower => "lower",
            Criterion::Upper => "upper",
        })
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => Ok(Criterion::Lower),
            "upper" => Ok(Criterion::Upper),
            other => Err(Error::Argument(format!("unknown criterion {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HorizonMode {
    /// Functional backward induction over the MDP's finite horizon.
    Finite,
    /// Functional value iteration; only for single-signed additive rewards.
    Infinite { eps_conv: f64, max_sweeps: usize },
}

impl HorizonMode {
    pub fn infinite() -> Self {
        HorizonMode::Infinite { eps_conv: 1e-6, max_sweeps: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileQuery {
    pub tau: f64,
    pub criterion: Criterion,
    /// Target width of the final bracket. Ignored on ordinal scales, which
    /// are searched exactly.
    pub epsilon: f64,
    pub horizon_mode: HorizonMode,
    /// Initial bracket replacing `[w_min, w_max]`.
    pub bounds: Option<(f64, f64)>,
}

impl QuantileQuery {
    pub fn new(tau: f64, criterion: Criterion, epsilon: f64) -> Result<Self> {
        let q = Self { tau, criterion, epsilon, horizon_mode: HorizonMode::Finite, bounds: None };
        q.validate()?;
        Ok(q)
    }

    pub fn with_bounds(mut self, lo: f64, hi: f64) -> Self {
        self.bounds = Some((lo, hi));
        self
    }

    pub fn with_horizon_mode(mut self, mode: HorizonMode) -> Self {
        self.horizon_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.criterion.check_tau(self.tau)?;
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Argument(format!("epsilon = {} must be positive", self.epsilon)));
        }
        if let Some((lo, hi)) = self.bounds {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Argument(format!("invalid quantile bounds [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub w: f64,
    pub p: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub policy: WealthMarkovPolicy,
    /// Bottom of the final bracket for numeric spaces (within `epsilon` of
    /// the optimum); the exact optimal class index for ordinal spaces.
    pub quantile_estimate: f64,
    /// Final `(w_lo, w_hi)`. On ordinal scales the ends may be the virtual
    /// classes `-1` (lower) or `m` (upper) when they never moved.
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub log: Vec<IterationRecord>,
    /// No threshold was accepted: the optimum sits at the bottom of the range.
    pub at_bottom: bool,
    /// Solve made after the search to obtain the returned policy, if any.
    pub final_solve: Option<IterationRecord>,
}

/// Number of threshold solves the bisection needs at most.
pub fn iteration_bound(space: &WealthSpace, q: &QuantileQuery) -> usize {
    match space.ordinal_scale() {
        Some(scale) => ceil_log2(scale.len() as f64),
        None => {
            let (lo, hi) = q.bounds.unwrap_or((space.w_min(), space.w_max()));
            let d = space.distance(hi, lo);
            if d <= q.epsilon {
                0
            } else {
                ceil_log2(d / q.epsilon)
            }
        }
    }
}

fn ceil_log2(x: f64) -> usize {
    if x <= 1.0 {
        0
    } else {
        x.log2().ceil() as usize
    }
}

/// Finds an `epsilon`-optimal policy for the lower or upper `tau`-quantile
/// (an exactly optimal one on ordinal scales).
pub fn solve_quantile(m: &Mdp, space: &WealthSpace, q: &QuantileQuery) -> Result<SolveReport> {
    q.validate()?;
    m.ensure_valid()?;
    let strict = q.criterion.strict();
    let probe = |w: f64| -> Result<(WealthMarkovPolicy, f64)> {
        match q.horizon_mode {
            HorizonMode::Finite => {
                let sol = backward_induction(m, space, w, strict)?;
                Ok((sol.policy, sol.p))
            }
            HorizonMode::Infinite { eps_conv, max_sweeps } => {
                let sol = value_iteration(m, space, w, strict, eps_conv, max_sweeps)?;
                Ok((sol.policy, sol.p))
            }
        }
    };

    let ordinal = space.ordinal_scale().map(|s| s.len() as i64);
    let (mut lo, mut hi, epsilon) = match ordinal {
        Some(classes) => {
            if q.bounds.is_some() {
                return Err(Error::Argument("ordinal scales do not take quantile bounds".into()));
            }
            // Virtual classes outside the scale make the search exact: the
            // lower optimum lies in (lo, hi], the upper one in [lo, hi).
            match q.criterion {
                Criterion::Lower => (-1.0, (classes - 1) as f64, 1.0),
                Criterion::Upper => (0.0, classes as f64, 1.0),
            }
        }
        None => {
            let (lo, hi) = q.bounds.unwrap_or((space.w_min(), space.w_max()));
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::Precondition(format!(
                    "quantile bracket [{lo}, {hi}] is unbounded; supply finite bounds"
                )));
            }
            (lo, hi, q.epsilon)
        }
    };
    let mids = |a: f64, b: f64| -> Vec<f64> {
        if ordinal.is_some() {
            ordinal_mid(a as i64, b as i64)
        } else {
            vec![(a + b) / 2.0]
        }
    };

    let mut w = mids(lo, hi)[0];
    let mut accepted_policy: Option<WealthMarkovPolicy> = None;
    let mut log = Vec::new();
    while space.distance(hi, lo) > epsilon {
        let (policy, p) = probe(w)?;
        let accepted = q.criterion.accepts(p, q.tau);
        log.push(IterationRecord { w, p, accepted });
        if accepted {
            lo = w;
            accepted_policy = Some(policy);
            w = *mids(lo, hi).last().expect("mid is never empty");
        } else {
            hi = w;
            w = mids(lo, hi)[0];
        }
    }

    let at_bottom = accepted_policy.is_none();
    let mut final_solve = None;
    let (policy, estimate) = match (ordinal, q.criterion) {
        (Some(_), Criterion::Lower) => {
            // The optimum is `hi`; the policy maximizing G_≺ at its
            // predecessor is optimal, while the one at `hi` may not be.
            let target = space.prec(hi)?;
            let (policy, p) = probe(target)?;
            final_solve = Some(IterationRecord { w: target, p, accepted: q.criterion.accepts(p, q.tau) });
            (policy, hi)
        }
        _ => match accepted_policy {
            Some(policy) => (policy, lo),
            None => {
                let (policy, p) = probe(lo)?;
                final_solve = Some(IterationRecord { w: lo, p, accepted: q.criterion.accepts(p, q.tau) });
                (policy, lo)
            }
        },
    };

    Ok(SolveReport {
        policy,
        quantile_estimate: estimate,
        bracket: (lo, hi),
        iterations: log.len(),
        log,
        at_bottom,
        final_solve,
    })
}

/// Checks the sufficient condition for `epsilon`-optimality on the returned
/// policy's exact wealth distribution: `F(w_lo) < tau` (lower) or
/// `G(w_lo) >= 1 - tau` (upper), with a bracket no wider than `epsilon`.
pub fn quantile_certificate(m: &Mdp, space: &WealthSpace, report: &SolveReport, q: &QuantileQuery) -> Result<bool> {
    if matches!(q.horizon_mode, HorizonMode::Infinite { .. }) {
        return Err(Error::Unsupported("certificates need a finite-horizon distribution".into()));
    }
    let epsilon = if space.is_ordinal() { 1.0 } else { q.epsilon };
    let (lo, hi) = report.bracket;
    if space.distance(hi, lo) > epsilon {
        return Ok(false);
    }
    let dist = exact_distribution(m, space, &report.policy)?;
    Ok(match q.criterion {
        // With nothing accepted on a numeric range the optimum is within
        // epsilon of its bottom, which no policy can fall below.
        Criterion::Lower if report.at_bottom && !space.is_ordinal() => {
            dist.quantile(q.tau, Criterion::Lower)? >= lo - crate::WEALTH_TOL
        }
        Criterion::Lower => dist.cdf(lo) < q.tau - PROB_TOL,
        Criterion::Upper => dist.decumulative(lo) >= 1.0 - q.tau - PROB_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{two_state_example, Horizon};
    use crate::wealth::OrdinalScale;

    /// One decision between class distributions (0.5, 0, 0.5) and
    /// (0, 0.6, 0.4) over three ordered classes.
    fn prec_instance() -> (Mdp, WealthSpace) {
        let m = Mdp::from_transitions(
            3,
            2,
            vec![
                (0, 0, 1, 0.5, 0.0),
                (0, 0, 2, 0.5, 2.0),
                (0, 1, 1, 0.6, 1.0),
                (0, 1, 2, 0.4, 2.0),
                (1, 0, 1, 1.0, 0.0),
                (1, 1, 1, 1.0, 0.0),
                (2, 0, 2, 1.0, 0.0),
                (2, 1, 2, 1.0, 0.0),
            ],
            0,
            Horizon::Finite(1),
        )
        .unwrap();
        let classes = vec!["w1".into(), "w2".into(), "w3".into()];
        let table = (0..3).map(|i| (0..3).map(|k| usize::max(i, k)).collect()).collect();
        (m, WealthSpace::ordinal(OrdinalScale::new(classes, table, 0).unwrap()))
    }

    #[test]
    fn prec_correction_returns_optimal_policy() {
        let (m, space) = prec_instance();
        let q = QuantileQuery::new(0.5, Criterion::Lower, 1.0).unwrap();
        let report = solve_quantile(&m, &space, &q).unwrap();
        assert_eq!(report.quantile_estimate, 1.0);
        assert_eq!(report.policy.action(1, 0, 0.0), 1);
        assert!(report.iterations <= iteration_bound(&space, &q));
        let d = exact_distribution(&m, &space, &report.policy).unwrap();
        assert_eq!(d.quantile(0.5, Criterion::Lower).unwrap(), 1.0);
        assert!(quantile_certificate(&m, &space, &report, &q).unwrap());

        // the policy from the threshold at the optimum itself is the trap
        let naive = backward_induction(&m, &space, 1.0, true).unwrap();
        assert_eq!(naive.policy.action(1, 0, 0.0), 0);
    }

    #[test]
    fn ordinal_upper_is_exact() {
        let (m, space) = prec_instance();
        let q = QuantileQuery::new(0.5, Criterion::Upper, 1.0).unwrap();
        let report = solve_quantile(&m, &space, &q).unwrap();
        // (0.5, 0, 0.5) has upper 0.5-quantile w3
        assert_eq!(report.quantile_estimate, 2.0);
        assert!(quantile_certificate(&m, &space, &report, &q).unwrap());
    }

    #[test]
    fn example_quantile_search() {
        let m = two_state_example(Horizon::Finite(2));
        let space = WealthSpace::discounted(&m, 0.9).unwrap();
        let q = QuantileQuery::new(0.95, Criterion::Lower, 1e-4).unwrap();
        let report = solve_quantile(&m, &space, &q).unwrap();
        assert!((report.quantile_estimate - 1.9).abs() <= 1e-4);
        assert!(report.iterations <= iteration_bound(&space, &q));
        assert!(quantile_certificate(&m, &space, &report, &q).unwrap());
    }

    #[test]
    fn tau_and_epsilon_checked() {
        assert!(QuantileQuery::new(0.0, Criterion::Lower, 0.1).is_err());
        assert!(QuantileQuery::new(1.0, Criterion::Upper, 0.1).is_err());
        assert!(QuantileQuery::new(0.5, Criterion::Upper, 0.0).is_err());
        assert!(QuantileQuery::new(1.0, Criterion::Lower, 0.1).is_ok());
        assert!(QuantileQuery::new(0.0, Criterion::Upper, 0.1).is_ok());
    }

    #[test]
    fn unbounded_infinite_horizon_needs_bounds() {
        let m = Mdp::from_transitions(2, 1, vec![(0, 0, 1, 1.0, -1.0), (1, 0, 1, 1.0, 0.0)], 0, Horizon::Infinite).unwrap();
        let space = WealthSpace::additive(&m);
        let q = QuantileQuery::new(0.5, Criterion::Upper, 1e-3).unwrap().with_horizon_mode(HorizonMode::infinite());
        assert!(matches!(solve_quantile(&m, &space, &q), Err(Error::Precondition(_))));
        let report = solve_quantile(&m, &space, &q.with_bounds(-3.0, 0.0)).unwrap();
        assert!((report.quantile_estimate + 1.0).abs() <= 1e-3);
        assert!(report.policy.is_stationary());
    }

    #[test]
    fn bound_formula() {
        let m = Mdp::from_state_action(1, 1, vec![(0, 0, 0, 1.0)], vec![vec![1.0]], 0, Horizon::Finite(5)).unwrap();
        let space = WealthSpace::additive(&m).with_bounds(0.0, 5.0).unwrap();
        let q = QuantileQuery::new(0.1, Criterion::Lower, 1e-3).unwrap();
        assert_eq!(iteration_bound(&space, &q), 13);
    }
}
