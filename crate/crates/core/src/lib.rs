//! Hamiltonian Monte Carlo with contractive couplings.
//!
//! The crate provides exact, unadjusted and Metropolis-adjusted HMC on `R^d`
//! with the identity mass matrix, a coupling of two HMC chains that shifts the
//! momentum of the second chain by `γ(x - y)` with maximal probability (and
//! reflects it otherwise), calculators for the resulting contraction rates
//! and mixing-time bounds, and Monte-Carlo verifiers for drift and contraction
//! inequalities.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which all statistical checks use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod kernel;
pub mod rng;
mod scalar;
pub mod targets;
pub mod vector;

pub use error::{HmcError, Result};
pub use rng::RandomStream;
pub use scalar::Scalar;

pub type PhaseState = dynamics::PhaseState<f64>;
pub type FlowSpec = dynamics::FlowSpec<f64>;
pub type KernelConfig = kernel::KernelConfig<f64>;
pub type StepOutcome = kernel::StepOutcome<f64>;
pub type CouplingConfig = coupling::CouplingConfig<f64>;
pub type CoupledState = coupling::CoupledState<f64>;
pub type SmoothnessConstants = targets::SmoothnessConstants<f64>;
pub type LyapunovData = targets::LyapunovData<f64>;
pub type MetricParams = analysis::MetricParams<f64>;
pub type Gaussian = targets::Gaussian<f64>;
pub type TwoGaussianMixture1d = targets::TwoGaussianMixture1d<f64>;
pub type PlanarMixture = targets::PlanarMixture<f64>;
pub type DynTarget = Box<dyn targets::Target<f64>>;
