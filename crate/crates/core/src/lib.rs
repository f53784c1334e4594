//! Fourier estimation of spot volatility from discretely observed log-prices.
//!
//! The pipeline has three parts:
//!
//! * [`fourier_series`] turns observed increments into a band of complex
//!   Fourier coefficients, forms Bohr-convolution partial sums and evaluates
//!   Fejér-weighted trigonometric polynomials.
//! * [`estimator`] builds the volatility coefficients, reconstructs the spot
//!   variance path, and recovers squared jumps by rescaling the same
//!   polynomial by `2π/M`.
//! * [`market_sim`] and [`experiments`] generate ground-truth paths and run
//!   the Monte Carlo convergence checks.
//!
//! All time indices live on `[-π, π]`. Tick data on another clock is mapped
//! there affinely by [`io::TickSeries`].
//!
//! Data-parallel loops (per-harmonic coefficient accumulation, Monte Carlo
//! replicates) run on rayon when the `parallel` feature is enabled, and
//! sequentially otherwise. Both paths produce bit-identical results.

// `!(a > b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod exec;
pub mod experiments;
pub mod fourier_series;
pub mod io;
pub mod kernels;
pub mod market_sim;
pub mod partition;
pub mod plot;
pub mod rng;

mod numeric;

pub use error::{Error, Result};
pub use estimator::{EstimatorConfig, SpotEstimate, SpotKind};
pub use exec::Execution;
pub use fourier_series::{CoefficientTable, ObservedIncrements};
pub use kernels::KernelOrder;
pub use market_sim::{JumpEvent, JumpModelCpp, JumpRecord, MarkLaw, SamplePath, VolatilityModel};
pub use partition::PartitionSpec;
pub use rng::StreamKey;
