pub mod cli;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod harmonics;
pub mod scenario;
pub mod verification;

pub use error::{Error, Result};
