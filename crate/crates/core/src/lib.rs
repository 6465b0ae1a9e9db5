//! Certified lower bounds on the one-shot quantum capacity of
//! continuous-variable channels.
//!
//! The crate simulates the probe states and measurement records of two
//! capacity-detection protocols and evaluates the finite-size bounds that a
//! passed test certifies:
//!
//! - [`protocol1`]: squeezed probes, homodyne detection and a discretized
//!   correlation test. Valid for arbitrarily correlated, adversarial noise.
//! - [`protocol2`]: coherent probes, heterodyne detection and chi-squared
//!   confidence intervals. Valid for i.i.d. phase-insensitive Gaussian noise.
//! - [`qubitproto`]: the qubit-channel analogue based on tomography
//!   confidence polytopes and coherent information.
//!
//! [`gaussmath`] and [`channels`] hold the shared Gaussian-state machinery and
//! channel models; [`cli`] drives configuration files, parameter sweeps and
//! Monte Carlo campaigns.
//!
//! Quadrature variances use the convention that the vacuum has variance 1,
//! so a thermal state with mean photon number `n̄` has variance `2n̄ + 1`.
//! All entropies and capacities are in bits (base-2 logarithms).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod cli;
mod error;
pub mod gaussmath;
pub mod optimize;
pub mod protocol1;
pub mod protocol2;
pub mod qubitproto;
pub mod rng;

pub use error::{Error, Result};
