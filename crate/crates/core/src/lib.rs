//! Thermodynamics-based artificial neural networks (TANNs) for rate-independent
//! elasto-plastic materials.
//!
//! The crate is organised bottom-up:
//!
//! - [`netcore`]: a small dense feed-forward engine with analytic first and
//!   second activation derivatives, exact input Jacobians and training of losses
//!   that involve those Jacobians.
//! - [`hyperplast`]: analytic free-energy / dissipation models (1D spring-slider,
//!   3D von Mises in principal axes), their incremental rate form and the random
//!   data generator built on an adaptive Bogacki–Shampine integrator.
//! - [`tann`]: the thermodynamics-based model. Stress and dissipation are
//!   derivatives of a learned free energy, so energy balance holds by construction.
//! - [`baseline`]: a plain two-network ANN used as the comparison point.
//! - [`experiment`]: config-driven commands behind the `tann` binary.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod baseline;
pub mod error;
pub mod experiment;
pub mod hyperplast;
pub mod netcore;
pub mod tann;
pub mod trajectory;

pub use error::{Error, Result};
