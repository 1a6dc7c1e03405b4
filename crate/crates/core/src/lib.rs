pub mod approx;
pub mod assembly;
pub mod block;
pub mod cert;
pub mod cli;
pub mod error;
pub mod inhom;
pub mod primes;
pub mod rat;
pub mod torus;

pub use error::{Error, Result};
