pub mod codes;
pub mod collective;
pub mod error;
pub mod fullspace;
pub mod kl;
pub mod linalg;
pub mod magic;
pub mod mps;
pub mod presets;
pub mod recovery;
pub mod su2;

pub use error::{Error, Result};
pub use num_complex::Complex64;
