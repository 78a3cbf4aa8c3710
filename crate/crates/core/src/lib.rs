//! Numerical laboratory for a chemotaxis-growth reaction-diffusion system
//! and its sharp-interface limit.
//!
//! The full model couples a bistable reaction-diffusion equation for the
//! cell density `u` with an elliptic equation for the chemoattractant `v`:
//!
//! ```text
//! u_t = lap(u) - div(u grad chi(v)) + f_eps(u) / eps^2
//!   0 = lap(v) + u - gamma v
//! ```
//!
//! on a rectangle with homogeneous Neumann conditions. As `eps -> 0` the
//! solution develops a thin transition layer whose mid-level set moves by
//! mean curvature plus a chemotactic drift and a constant growth bias.
//! The crates here provide:
//!
//! - [`numerics`]: uniform-grid discrete calculus and a fast direct
//!   Helmholtz solver for the Neumann problem,
//! - [`kinetics`]: the bistable nonlinearity, the front profile, and the
//!   perturbed scalar flow used by the comparison arguments,
//! - [`diffuse`]: IMEX time integration of the full system,
//! - [`sharp`]: a narrow-band level-set solver for the limit free-boundary
//!   problem, plus a radial reference oracle,
//! - [`bounds`]: computable sub/super-solution envelopes and their
//!   constants,
//! - [`analysis`]: interface extraction, Hausdorff distance, layer
//!   thickness and convergence-rate fits.

pub mod analysis;
pub mod bounds;
pub mod diffuse;
mod error;
pub mod expr;
pub mod interp;
pub mod kinetics;
pub mod numerics;
pub mod sharp;

pub use error::{Error, Result};
