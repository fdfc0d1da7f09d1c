pub mod banded;
pub mod error;
pub mod harness;
pub mod helmholtz;
pub mod hv;
pub mod inversion;
pub mod io;
pub mod ot;
pub mod parallel;

pub use error::{Error, Result};
pub use num_complex::Complex64;
