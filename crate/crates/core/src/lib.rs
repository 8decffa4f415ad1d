//! Goodness-of-fit testing for shifted curves in the Fourier sequence model.

pub mod adaptive;
pub mod error;
pub mod experiments;
pub mod loft;
pub mod normal;
pub mod rng;
pub mod spectral;
pub mod shift_test;
pub mod weights;

pub use error::{Error, Result};
