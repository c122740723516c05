//! Elastic information bottleneck tools for finite distributions.
//!
//! The crate bundles
//!
//! * exact probability kernels ([`prob`]),
//! * the self-consistent elastic IB solver that interpolates between the
//!   deterministic (`α = 0`) and classical (`α = 1`) bottleneck ([`solver`]),
//! * source generalization bounds, the HΔH distance and the target error
//!   decomposition ([`bounds`]),
//! * Gaussian representation-discrepancy formulas and the variational
//!   regularizer ([`gauss`]),
//! * the noisy-prototype toy data generator ([`toy`]).
//!
//! Every randomized routine takes an explicit seed. All entropies are in nats.

pub mod assignment;
pub mod bounds;
pub mod error;
pub mod fmt;
pub mod gauss;
pub mod prob;
pub mod rng;
pub mod solver;
pub mod toy;

pub use error::{Error, Result};
pub use prob::{Decoder, EmpiricalDraw, Encoder, JointDistribution};
pub use solver::{EibConfig, InfoSummary, SolveState, SolveTrace};

/// Version of this library, as recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
