//! Exact information-theoretic scoring of variable subsets.
//!
//! A [`BayesNet`] over discrete variables is expanded into a dense
//! [`JointDistribution`]; from it we compute Shannon entropies, the mutual
//! information `I(T;S)` between a decision target `T` and a subset `S`, and
//! the explanatory-density score `HV(S) = I(T;S) / |S|`. Subset search comes
//! in an exhaustive and a greedy flavor, and [`validate`] sweeps the
//! information-theoretic properties over seeded synthetic networks.

pub mod joint;
pub mod net;
pub mod score;
pub mod search;
pub mod synth;
pub mod validate;

pub use joint::{compute_joint, entropy_bits, JointDistribution};
pub use net::{BayesNet, DiscreteVariable, DEFAULT_STATE_BOUND};
pub use score::{hv_score, mutual_information, HvResult};
pub use search::{best_subset_exhaustive, best_subset_greedy, compare_results};
pub use synth::{generate_synthetic_net, NetKind};
pub use validate::{run_property_suite, PropertyRecord, SuiteConfig, ValidationReport};

/// Tolerance for probability and information identities.
pub const PROB_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum HvError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
}
