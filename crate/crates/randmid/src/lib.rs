//! Randomized-midpoint discretizations of overdamped and underdamped
//! Langevin diffusions, with the machinery to use them as numerical
//! integrators: step-size schedules and their running sums, weighted
//! empirical averages, CLT-calibrated confidence intervals, stationary-bias
//! bounds and Wasserstein-2 diagnostics, plus a batch experiment engine.
//!
//! The numeric kernels are generic over the scalar type through [`Real`]
//! (`f32` or `f64`); concrete aliases for the common `f64` instantiations
//! are exported below.
//!
//! ```
//! use randmid::noise::RngStream;
//! use randmid::potential::Potential;
//! use randmid::sampler::{rlmc_step, OverdampedState};
//!
//! let target = Potential::isotropic_quadratic(2, 1.0).unwrap();
//! let mut rng = RngStream::new(42, 0);
//! let mut state = OverdampedState { x: target.x_star(), n: 0 };
//! for _ in 0..100 {
//!     state = rlmc_step(&state, 0.05, &target, &mut rng).unwrap();
//! }
//! assert!(state.x.iter().all(|v: &f64| v.is_finite()));
//! ```

pub mod average;
pub mod bias;
pub mod clt;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod noise;
pub mod normal;
pub mod potential;
pub mod quad;
pub mod real;
pub mod sampler;
pub mod schedule;
pub mod testfn;

pub use error::{Error, Result};
pub use real::Real;

// Concrete f64 aliases for the generic core types.
pub type Potential64 = potential::Potential<f64>;
pub type TestFunction64 = testfn::TestFunction<f64>;
pub type PhaseTestFunction64 = testfn::PhaseTestFunction<f64>;
pub type NoiseGram64 = noise::NoiseGram<f64>;
pub type Schedule64 = schedule::Schedule<f64>;
pub type StepRule64 = schedule::StepRule<f64>;
pub type OverdampedState64 = sampler::OverdampedState<f64>;
pub type UnderdampedState64 = sampler::UnderdampedState<f64>;
pub type RunningAverage64 = average::RunningAverage<f64>;
pub type AsymptoticLaw64 = clt::AsymptoticLaw<f64>;
pub type BiasBoundInput64 = bias::BiasBoundInput<f64>;

// And the f32 instantiations for callers that trade accuracy for footprint.
pub type Potential32 = potential::Potential<f32>;
pub type Schedule32 = schedule::Schedule<f32>;
pub type OverdampedState32 = sampler::OverdampedState<f32>;
