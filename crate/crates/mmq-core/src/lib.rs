//! Optimal and heuristic service-rate control for an MMPP/M/1 queue.
//!
//! A single server drains a queue whose arrivals form a Markov-modulated
//! Poisson process: an exogenous continuous-time Markov chain (the *phase
//! process*, generator `Q`) selects the current arrival rate from
//! `λ_1 ≤ … ≤ λ_L`. The controller picks a service rate `μ ∈ [0, ū]` as a
//! function of the queue length `n` and phase `s`, paying effort cost `c(μ)`
//! and holding cost `h(n)` per unit time. The crate computes:
//!
//! - discounted and long-run-average optimal policies on a truncated lattice
//!   via uniformized value iteration ([`solver`]), with the inner
//!   minimization over `μ` resolved in closed form through the convex
//!   conjugate machinery of [`conjugate`];
//! - exact stationary-distribution evaluation of arbitrary stationary
//!   policies ([`solver::evaluate_policy`]);
//! - structural diagnostics: stochastic monotonicity of the phase generator
//!   and monotonicity of computed policies in `n` and `s` ([`structure`]);
//! - the ARM / PRM / fixed-rate comparison heuristics ([`heuristics`]);
//! - control of a periodic non-homogeneous Poisson arrival process, both
//!   directly on a discretized time grid and through a cyclic-MMPP
//!   approximation whose policy is lifted back to the time grid ([`nhpp`]).
//!
//! The crate is `no_std` (it allocates, but performs no IO); all floating
//! point goes through [`libm`]. Companion binary crates layer file formats
//! and a CLI on top.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod conjugate;
pub mod error;
pub mod heuristics;
pub mod linalg;
mod math;
pub mod model;
pub mod nhpp;
pub mod solver;
pub mod structure;

pub use error::{Error, Result};
