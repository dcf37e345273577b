//! Inputs shared by the benchmarks.

use pascal_core::compact::{CZeroVec, TriangularFn};
use pascal_core::graph::{gamma_graph, pascal_ball};
use pascal_core::spectra::adjacency;
use pascal_core::SubstGraph;

pub fn gamma_adjacency(n: usize) -> Vec<Vec<i64>> {
    adjacency(&gamma_graph(n))
}

/// A ball large enough for moments up to order 12 of φ₀.
pub fn moment_ball() -> SubstGraph {
    pascal_ball(5).expect("radius 5 is supported")
}

/// A deterministic integer vector on `len` vertices with entries in −5..=5.
pub fn probe_vector(len: usize) -> Vec<i128> {
    (0..len as i128).map(|i| (i * 37 + 11) % 11 - 5).collect()
}

pub fn level2_function() -> TriangularFn {
    TriangularFn::from_i64(2, &[1, -2, 0, 3, 1, 0, -1, 2, 5]).expect("nine values")
}

pub fn e1_vector() -> CZeroVec {
    CZeroVec::from_i64(1, -1, 0).expect("zero sum")
}
