//! Hyperplastic material models and the data generator built on them.
//!
//! A model is fully described by its free energy `F(ε, ζ)` and dissipation
//! `D(ζ̇)`. Stresses, yield function and flow follow from those two functions;
//! [`integrate_step`] advances a state along a strain increment and
//! [`generate_dataset`] turns random increments at random states into training
//! records.

mod integrate;
mod material;
mod paths;
mod rates;
mod sampling;

pub use integrate::{integrate_path, integrate_step, integrate_step_with, IntegratorConfig, StepOutcome};
pub use material::{deviator, Material, Model1D, Model3D, Potentials1D, Potentials3D, CASES};
pub use paths::{loading_path, sign_cos, sign_sin, PathKind, PathSpec};
pub use rates::{incremental_rates, trial_multiplier, MaterialState, Rates};
pub use sampling::{
    generate_dataset, sample_initial_state, Dataset, GenConfig, Sample, Split, StepEnergy,
};
