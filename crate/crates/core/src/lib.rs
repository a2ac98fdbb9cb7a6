pub mod atomic;
pub mod balance;
pub mod error;
pub mod grid;
pub mod scalar;

pub use error::{Error, Result};
pub mod flinn;
pub mod norms;
pub mod operators;
