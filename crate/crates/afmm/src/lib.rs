//! Finite mixture modeling with an asymmetric Dirichlet prior on the weights
//! and a penalized-complexity prior on the block-1 concentration, so that the
//! prior on the number of clusters K+ can be elicited through a soft upper
//! bound U and a tail probability.
//!
//! Modules:
//! - [`rng`], [`special`], [`dist`]: seedable streams, log-gamma/digamma,
//!   log-space samplers.
//! - [`asym`]: the asymmetric Dirichlet distribution.
//! - [`pc`]: KLD distance to the base mixture, the PC prior on alpha1, and
//!   tail-probability calibration of its decay rate.
//! - [`induced`]: Monte Carlo induced priors on K+ for several weight-prior
//!   families.
//! - [`univariate`]: Gibbs sampler for univariate Gaussian mixtures.
//! - [`bspline`] / [`functional`]: B-spline bases, RW2 penalties, and the
//!   functional clustering sampler.
//! - [`metrics`]: partition and posterior quality metrics.
//! - [`datagen`]: synthetic data generators.
//! - [`runio`]: run-directory output (manifest, CSV/JSON files).

pub mod asym;
pub mod bspline;
pub mod datagen;
pub mod dist;
pub mod error;
pub mod functional;
pub mod induced;
pub mod metrics;
pub mod numeric;
pub mod pc;
pub mod rng;
pub mod runio;
pub mod special;
pub mod summary;
pub mod univariate;

pub use error::{Error, Result};
pub use rng::RngStream;
