//! Numerical schemes for one-dimensional SDEs driven by fractional Brownian
//! motion, with tools to measure their asymptotic errors.

pub mod calculus;
pub mod error;
pub mod experiment;
pub mod fbm;
pub mod io;
pub mod limits;
pub mod reference;
pub mod schemes;
pub mod stats;
pub mod variations;

pub use error::{Error, Result};
