//! Policy evaluation: exact wealth distributions, Monte Carlo simulation,
//! the exhaustive oracle, and the expectation-optimal baseline.

mod distribution;
mod oracle;
mod simulate;
mod standard;

pub use distribution::{exact_distribution, exact_distribution_capped, WealthDistribution, DEFAULT_ATOM_CAP};
pub use oracle::{brute_force_capped, brute_force_optimal_quantile, DEFAULT_POLICY_CAP};
pub use simulate::simulate;
pub use standard::{standard_backward_induction, StandardSolution};
