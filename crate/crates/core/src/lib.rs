//! Finite-dimensional quantum cat maps: Weyl algebra, coherent states,
//! anti-Wick quantization and the ALF / CNT dynamical entropies, checked
//! against the classical Kolmogorov-Sinai entropy of the underlying map.

pub mod error;
pub mod linalg;
pub mod torus;
pub mod weyl;
pub mod coherent;
pub mod quantize;
pub mod entropy_alf;
pub mod entropy_cnt;
pub mod cli;

pub use error::{Error, Result};
