//! Permutationally invariant three-outcome Bell operators for qutrit
//! ensembles, restricted to SU(3) irreps, together with the level-spacing
//! statistics used to tell integrable from chaotic spectra.

pub mod bell_operator;
pub mod classical_bound;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod optimizer;
pub mod spectral_stats;
pub mod su3_irreps;
pub mod su3_measurements;
pub mod table;

pub use error::{Error, Result};
