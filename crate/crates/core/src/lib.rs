//! Laguerre-Pólya entire functions, ergodic random-matrix models and
//! consistent β-arrays.

pub mod charpoly;
pub mod error;
pub mod experiments;
pub mod interlace;
pub mod lpfun;
pub mod models;
pub mod omega;
pub mod stats;

pub use error::{Error, Result};
