//! Sparse and dense matrix types, text I/O and the random generator.

mod dense;
mod generate;
pub mod io;
mod sparse;

pub use dense::{DenseMatrix, DenseVector};
pub use generate::{generate_random, generate_row, row_rng, GeneratorParams};
pub use io::{read_edges, read_matrix, write_edges, write_matrix};
pub use sparse::{SparseMatrix, SparseRow};
