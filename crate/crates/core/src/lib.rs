//! Exploration lab: ensemble-disagreement UCB bonuses, episodic backward
//! induction of uncertainty, and exact LSVI-UCB on linear MDPs.
//!
//! Module map:
//! - [`linalg`]: dense ridge/Cholesky/Sherman–Morrison primitives.
//! - [`envs`]: the stochastic grid maze and a synthetic linear MDP.
//! - [`lsvi`]: LSVI-UCB and the posterior-variance oracle.
//! - [`ensemble`]: K-head bootstrapped MLP with manual backprop and Adam.
//! - [`bebu`]: episodic replay, bonus tables, backward targets, exploration
//!   strategies and the training loop.
//! - [`regress`]: the 1-D bootstrap-uncertainty regression demo.

pub mod bebu;
pub mod ensemble;
pub mod envs;
pub mod error;
pub mod linalg;
pub mod lsvi;
pub mod regress;
pub mod seed;

pub use error::{Error, Result};
