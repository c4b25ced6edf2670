pub mod audio;
pub mod calibration;
pub mod error;
pub mod experiment;
pub mod model;
pub mod psychophysics;
pub mod results;
pub mod rng;
pub mod signal;
pub mod stimulus;

pub use error::{Error, Result};
