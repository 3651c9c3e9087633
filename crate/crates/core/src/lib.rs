//! Simulation of a multimode-fiber spatial light modulator controlled by
//! rotatable fiber paddles.
//!
//! Light from a single-mode fiber is launched into a graded-index multimode
//! fiber, scrambled within mode groups by random unitaries, rotated in
//! polarization by each paddle, and finally mapped to output speckles. The
//! paddle angles are tuned to focus power into one speckle, and Monte-Carlo
//! ensembles measure the resulting intensity enhancement.

pub mod ensemble;
pub mod error;
pub mod fiber;
pub mod model;
pub mod optimize;
pub mod randmat;
pub mod rng;

pub use error::{Error, Result};
pub use fiber::{ExcitationProfile, ExcitationSource, FiberSpec, ModeGroupStructure};
pub use model::{FslmModel, InputField, InputWeighting, ModelSpec, PaddleAngles, SpeckleField};
pub use optimize::{OptimizationResult, OptimizerOptions, SinusoidCoeffs};
pub use randmat::{ComplexMatrix, ComplexVector, JonesParams};
pub use rng::SeedPath;
