//! Autonomous collision-avoidance workbench.
//!
//! Synthetic spacecraft/debris conjunctions are generated by retrograde
//! reconstruction ([`conjunction`]), wrapped in a partially observable decision
//! environment ([`env`]), and learned by a recurrent Q-network agent ([`drqn`])
//! built on a small hand-written network library ([`neural`]). The [`harness`]
//! module covers configuration, grid search and persistence.
//!
//! Orbital and network math is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the precisions the rest of the crate uses.

// `!(x > 0.0)` style checks are intentional: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conjunction;
pub mod drqn;
pub mod env;
pub mod harness;
pub mod neural;
pub mod orbit;
pub mod scalar;
pub mod seed;

pub use scalar::Scalar;

/// Double-precision orbital types used by the scenario generator and environment.
pub type Elements = orbit::KeplerianElements<f64>;
pub type State = orbit::StateVector<f64>;
pub type Grav = orbit::GravParams<f64>;
pub type Vector3 = orbit::Vec3<f64>;

/// Single-precision network types used for training.
pub type QNetwork = neural::QNetworkParams<f32>;
pub type Agent = drqn::GreedyAgent<f32>;
