//! Safe Bayesian optimization: never query a point the algorithm cannot
//! certify as safe.
//!
//! The library provides exact GP regression ([`gp`]), confidence-interval and
//! Lipschitz-envelope machinery ([`bounds`]), safe-set estimation on grids
//! ([`safe_sets`]), the algorithm loops ([`optimizers`]) — SafeOpt with
//! heuristic or RKHS-norm confidence scalings, LoSBO, and the grid-free
//! LoS-GP-UCB — and synthetic RKHS ground truth with exactly computable norms
//! and a Lipschitz-constant oracle ([`synth`]) for adversarial testing of the
//! safety guarantees.
//!
//! Two certification routes coexist deliberately. GP-bound safety inherits the
//! confidence scaling's assumptions (an RKHS norm bound that is hard to know
//! in practice), while the Lipschitz route of LoSBO and LoS-GP-UCB needs only
//! a Lipschitz constant and a noise magnitude bound; with those valid, every
//! query is safe no matter how the GP is configured.

pub mod bounds;
pub mod domain;
pub mod error;
pub mod gp;
pub mod kernel;
pub mod optimizers;
pub mod rng;
pub mod safe_sets;
pub mod seeding;
pub mod synth;

pub use error::{Error, Result};

/// Formats a float with 17 significant digits (`f64` round-trips exactly),
/// normalizing negative zero so equal values always serialize identically.
pub fn format_sig17(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}
