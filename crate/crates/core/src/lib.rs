//! Projective differential invariants of convex cone boundaries in ℝ³ and
//! their balanced parametrization.
//!
//! The pipeline runs: sampled periodic lift ([`curve`]) → normalized lift and
//! invariants α, β, frame and dual curve ([`wilczynski`]) → reduced Hill
//! equation, monodromy and its classification ([`monodromy`]) → balanced
//! reparametrization with constant α ([`balancer`]) → cubic-form analysis
//! ([`analysis`]). [`pipeline`] strings the stages together and [`verify`]
//! runs the end-to-end property checks.

pub mod analysis;
pub mod balancer;
pub mod config;
pub mod curve;
pub mod error;
pub mod export;
pub mod jet;
pub mod monodromy;
pub mod ode;
pub mod pipeline;
pub mod spectral;
pub mod verify;
pub mod warning;
pub mod wilczynski;

pub use config::{RunConfig, Tolerances};
pub use error::{Error, Result};
pub use warning::Warning;
