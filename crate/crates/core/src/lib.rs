//! Generic multiplicative building blocks on a local MapReduce runtime.
//!
//! Two multiplication models run as engine jobs: partition-summation block
//! multiplication ([`matmul::partition_multiply`]) and broadcast row-wise
//! multiplication ([`matmul::broadcast_multiply`]). The solvers in
//! [`algorithms`] (Gaussian NMF, fixed-bias SVM, PageRank) are compositions
//! of the two. Everything is generic over the scalar type; the aliases below
//! fix it to `f64` or `f32`.

pub mod algorithms;
pub mod bench;
pub mod engine;
mod error;
pub mod matmul;
pub mod matrix;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SparseF64 = matrix::SparseMatrix<f64>;
pub type SparseF32 = matrix::SparseMatrix<f32>;
pub type DenseF64 = matrix::DenseMatrix<f64>;
pub type DenseF32 = matrix::DenseMatrix<f32>;
pub type VectorF64 = matrix::DenseVector<f64>;
pub type VectorF32 = matrix::DenseVector<f32>;
