//! Lyapunov exponents of synchronous couplings of reflected Brownian motion
//! in smooth planar domains.
//!
//! The crate computes
//! `Λ(D) = ∫_{∂D} ν(x) dx + ∫_{∂D}∫_{∂D} |log cos α(x,y)| ω_x(dy) dx`
//! and checks the decay law `log d(X_t, Y_t)/t → -Λ(D)/(2|D|)` by simulating
//! two reflected Brownian motions driven by the same noise.

pub mod catalog;
pub mod coupling;
pub mod error;
pub mod geometry;
pub mod harmonic;
pub mod lyapunov;
pub mod numerics;
pub mod skorokhod;

pub use error::{Error, Result};
