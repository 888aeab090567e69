//! Bayesian analysis of vaccine uptake survey data.
//!
//! The crate has two pipelines that share infrastructure:
//!
//! * **Regression**: parse survey microdata ([`survey`]), dummy-encode it
//!   ([`survey::design`]), define a multilevel logistic posterior with state
//!   random intercepts ([`model`]), sample it with Hamiltonian Monte Carlo
//!   ([`hmc`]), and turn the chains into summaries, odds ratios, and
//!   convergence diagnostics ([`report`]).
//! * **Clustering**: parse county-level vaccination rates ([`survey`]),
//!   reduce each state to a distributional feature vector, and group states
//!   by agglomerative hierarchical clustering with gap-statistic model
//!   selection ([`cluster`]).
//!
//! All randomness is derived from a single seed through named substreams
//! ([`rng::substream`]), so multi-threaded runs are bit-reproducible.

pub mod cluster;
pub mod hmc;
pub mod math;
pub mod model;
pub mod report;
pub mod rng;
pub mod stats;
pub mod survey;
