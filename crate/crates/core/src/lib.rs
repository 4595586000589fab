pub mod cli;
pub mod dtw;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod kinematics;
pub mod linmodels;
pub mod model;
pub mod mrmr;
pub mod spoc;
pub mod synth;

pub use error::{Error, Result};
pub use nalgebra;
