//! Ihara zeta functions of self-similar fractal graphs.
//!
//! The pipeline builds an exhaustion of a fractal graph, counts proper and
//! reduced closed paths through normalised traces of the path operators
//! `A_m`, assembles the zeta function as a power series, and evaluates it by
//! the series, the Euler product, the determinant formula and the finite
//! graph approximation. A brute-force cycle enumerator serves as the oracle.

pub mod error;
pub mod scalar;
pub mod graph_core;
pub mod fractal_builders;
pub mod cycle_oracle;
pub mod spectral_counts;
pub mod zeta_engine;
pub mod funceq;

pub use error::{Error, Result};
