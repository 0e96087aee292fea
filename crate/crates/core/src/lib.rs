pub mod error;
pub mod precision;
pub mod orthopoly;
pub mod problems;
pub mod quantizer;
pub mod reconstructor;

pub use error::{Error, Result};
