//! Winning-set synthesis for sampled nonlinear systems against deterministic
//! Büchi automaton (DBA) specifications.
//!
//! The engine computes inner approximations of winning sets by an interval
//! branch-and-bound fixed point: one adaptive box paver per automaton state,
//! a constrained interval predecessor, and a nested (inner/outer) Büchi fixed
//! point with strategy extraction. Winning sets come with executable
//! finite-memory controllers, a closed-loop simulator, and two exact
//! finite-state engines used as oracles and comparison baselines.

pub mod automaton;
pub mod controller;
mod error;
pub mod interval;
pub mod oracle;
pub mod paver;
pub mod synthesis;
pub mod system;

pub use error::Error;
