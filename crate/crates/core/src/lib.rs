pub mod error;
pub mod mechanisms;
pub mod privacy;
mod quadrature;
pub mod queries;
pub mod sampling;
pub mod stable;

pub use error::{Error, Result};
