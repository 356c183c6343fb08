pub mod nmf;
pub mod pagerank;
pub mod svm;
