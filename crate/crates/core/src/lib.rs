pub mod dataset;
pub mod error;
pub mod groundtruth;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod mps;
pub mod rng;
pub mod training;
pub mod cli;

pub use error::{Error, Result};
pub use mps::{Mps, PauliBasis};
pub use num_complex::Complex64 as C64;
