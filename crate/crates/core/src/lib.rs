//! Spectral theory of the Pascal graph and its relatives, checked on finite
//! models.

pub mod error;
pub mod graph;

pub use error::{Error, Result};
pub use graph::{CoveringMap, Letter, Side, SubstGraph, VertexAddress};
pub mod compact;
pub mod field;
pub mod julia;
pub mod linalg;
pub mod moments;
pub mod poly;
pub mod sierpinski;
pub mod plane;
pub mod spectra;
pub mod suite;
pub mod transfer;

pub use field::{Field, QuadraticScalar, Q};
pub use poly::IntPolynomial;
