//! Quantile-optimal planning in Markov decision processes.
//!
//! A quantile query is answered by binary search over wealth thresholds. Each
//! probe maximizes the probability of ending above the threshold, which is an
//! expected-utility problem with an indicator utility and is solved exactly by
//! backward induction over piecewise-constant functions of wealth.
//!
//! Module map:
//! - [`wealth`]: how rewards accumulate into wealth, and how wealth is ordered.
//! - [`mdp`]: the model, validation, and the Garnet / data-center generators.
//! - [`step`]: piecewise-constant functions of wealth and their algebra.
//! - [`dp`]: functional backward induction and functional value iteration.
//! - [`quantile`]: the binary search and its optimality certificate.
//! - [`eval`]: exact and simulated policy evaluation, the brute-force oracle,
//!   and the expectation-optimal baseline.

pub mod bench;
pub mod dp;
pub mod error;
pub mod eval;
pub mod io;
pub mod mdp;
pub mod policy;
pub mod quantile;
pub mod step;
pub mod wealth;

pub use dp::{backward_induction, extract_policy, value_iteration, DpOptions, DpSolution, ValueFunction};
pub use error::{Error, Result};
pub use eval::{
    brute_force_optimal_quantile, exact_distribution, simulate, standard_backward_induction,
    WealthDistribution,
};
pub use mdp::{DataCenterConfig, GarnetConfig, Horizon, Mdp};
pub use policy::WealthMarkovPolicy;
pub use quantile::{quantile_certificate, solve_quantile, Criterion, QuantileQuery, SolveReport};
pub use step::{ActionMap, StepFunction};
pub use wealth::WealthSpace;

/// Absolute tolerance under which two wealth values are treated as the same level.
pub const WEALTH_TOL: f64 = 1e-9;

/// Slack used when a probability is compared against a quantile level.
pub const PROB_TOL: f64 = 1e-12;
