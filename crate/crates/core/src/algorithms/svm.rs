//! Fixed-bias soft-margin SVM trained by projected gradient ascent on the
//! dual `W(α) = Σα − ½ Σ yᵢyⱼαᵢαⱼKᵢⱼ` subject to `0 ≤ α ≤ C`.
//!
//! The linear kernel `K = TTᵀ` is a partition multiplication; every gradient
//! `g = η(1 − y .* KD)` with `Dᵢ = yᵢαᵢ` is one broadcast multiplication of
//! the kernel rows against `D`.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::engine::BroadcastStore;
use crate::error::{Error, Result};
use crate::matmul::{
    broadcast_multiply, broadcast_multiply_in, partition_multiply, suggest_schema, PartitionSchema,
    ShardKind,
};
use crate::matrix::{DenseVector, SparseMatrix};
use crate::scalar::Scalar;

pub const DEFAULT_ETA: f64 = 0.001;
pub const DEFAULT_C: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SvmProblem<T> {
    /// `l × b` training matrix, one example per row.
    pub t: SparseMatrix<T>,
    /// Labels in `{−1, +1}`.
    pub y: DenseVector<T>,
    /// Box bound.
    pub c: T,
    /// Step size.
    pub eta: T,
}

impl<T: Scalar> SvmProblem<T> {
    pub fn new(t: SparseMatrix<T>, y: DenseVector<T>, c: T, eta: T) -> Result<Self> {
        if y.len() != t.rows() {
            return Err(Error::Dimension(format!(
                "{} labels for {} examples",
                y.len(),
                t.rows()
            )));
        }
        if let Some((i, v)) = y
            .iter()
            .enumerate()
            .find(|&(_, v)| v != T::one() && v != -T::one())
        {
            return Err(Error::InvalidArgument(format!("label {v} at row {i} is not ±1")));
        }
        if c.is_nan() || c < T::zero() {
            return Err(Error::InvalidArgument(format!("C = {c} must be >= 0")));
        }
        if eta.is_nan() || eta <= T::zero() {
            return Err(Error::InvalidArgument(format!("step size {eta} must be > 0")));
        }
        Ok(Self { t, y, c, eta })
    }

    pub fn len(&self) -> usize {
        self.t.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.t.rows() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmState<T> {
    pub alpha: DenseVector<T>,
    /// `l × l` Gram matrix.
    pub kernel: SparseMatrix<T>,
    /// `W(α)` at every iterate, starting with the initial one.
    pub objective_history: Vec<T>,
}

impl<T: Scalar> SvmState<T> {
    pub fn new(alpha: DenseVector<T>, kernel: SparseMatrix<T>) -> Result<Self> {
        if kernel.rows() != kernel.cols() || kernel.rows() != alpha.len() {
            return Err(Error::shape("SvmState::new", kernel.shape(), (alpha.len(), 1)));
        }
        Ok(Self {
            alpha,
            kernel,
            objective_history: Vec::new(),
        })
    }
}

/// Linear kernel `K = TTᵀ`.
pub fn svm_build_kernel<T: Scalar>(
    t: &SparseMatrix<T>,
    schema: PartitionSchema,
    workers: usize,
) -> Result<SparseMatrix<T>> {
    Ok(partition_multiply(t, &t.transpose(), schema, ShardKind::Naive, workers)?.product)
}

/// Kernel schema favouring row/column splits over inner splits.
pub fn kernel_schema<T: Scalar>(t: &SparseMatrix<T>, workers: usize) -> PartitionSchema {
    suggest_schema(t.rows(), t.cols(), t.rows(), t.nnz(), t.nnz(), workers)
}

fn signed_alpha<T: Scalar>(alpha: &DenseVector<T>, y: &DenseVector<T>) -> DenseVector<T> {
    alpha.iter().zip(y.iter()).map(|(a, y)| a * y).collect()
}

fn check_state<T: Scalar>(state: &SvmState<T>, prob: &SvmProblem<T>) -> Result<()> {
    let l = prob.len();
    if state.alpha.len() != l || state.kernel.shape() != (l, l) {
        return Err(Error::shape("svm", state.kernel.shape(), (l, l)));
    }
    Ok(())
}

/// `KD` via broadcast of `D`.
fn kernel_times_d<T: Scalar>(
    store: &mut BroadcastStore,
    kernel: &SparseMatrix<T>,
    d: &DenseVector<T>,
    workers: usize,
) -> Result<Vec<T>> {
    let (kd, _) = broadcast_multiply_in(store, "D", kernel, &d.to_column()?, workers)?;
    Ok((0..kd.rows()).map(|i| kd.get(i, 0)).collect())
}

fn objective_from<T: Scalar>(alpha: &DenseVector<T>, d: &DenseVector<T>, kd: &[T]) -> T {
    let half = T::from_f64_lossy(0.5);
    let quad: T = d.iter().zip(kd).map(|(di, &ki)| di * ki).sum();
    alpha.sum() - half * quad
}

fn gradient_from<T: Scalar>(prob: &SvmProblem<T>, kd: &[T]) -> DenseVector<T> {
    prob.y
        .iter()
        .zip(kd)
        .map(|(yi, &ki)| prob.eta * (T::one() - yi * ki))
        .collect()
}

/// Dual objective `W(α)`.
pub fn svm_objective<T: Scalar>(
    alpha: &DenseVector<T>,
    prob: &SvmProblem<T>,
    kernel: &SparseMatrix<T>,
    workers: usize,
) -> Result<T> {
    let d = signed_alpha(alpha, &prob.y);
    let kd = kernel_times_d(&mut BroadcastStore::new(), kernel, &d, workers)?;
    Ok(objective_from(alpha, &d, &kd))
}

/// `g = η .* (1 − y .* KD)`, i.e. `η ∂W/∂α`.
pub fn svm_gradient<T: Scalar>(
    state: &SvmState<T>,
    prob: &SvmProblem<T>,
    workers: usize,
) -> Result<DenseVector<T>> {
    check_state(state, prob)?;
    let d = signed_alpha(&state.alpha, &prob.y);
    let kd = kernel_times_d(&mut BroadcastStore::new(), &state.kernel, &d, workers)?;
    Ok(gradient_from(prob, &kd))
}

/// Builds the kernel and runs `iters` projected gradient steps from `α = 0`.
pub fn svm_train<T: Scalar>(prob: &SvmProblem<T>, iters: usize, workers: usize) -> Result<SvmState<T>> {
    let kernel = svm_build_kernel(&prob.t, kernel_schema(&prob.t, workers), workers)?;
    svm_train_with_kernel(prob, kernel, iters, workers, |_, _| Ok(()))
}

/// Projected gradient ascent `α ← clip(α + g(α), 0, C)` on a prebuilt
/// kernel. `on_iter` sees every iterate after the box projection.
pub fn svm_train_with_kernel<T: Scalar>(
    prob: &SvmProblem<T>,
    kernel: SparseMatrix<T>,
    iters: usize,
    workers: usize,
    mut on_iter: impl FnMut(usize, &DenseVector<T>) -> Result<()>,
) -> Result<SvmState<T>> {
    let mut state = SvmState::new(DenseVector::zeros(prob.len()), kernel)?;
    check_state(&state, prob)?;
    let mut store = BroadcastStore::new();
    for it in 0..=iters {
        let d = signed_alpha(&state.alpha, &prob.y);
        let kd = kernel_times_d(&mut store, &state.kernel, &d, workers)?;
        store.advance_epoch();
        state
            .objective_history
            .push(objective_from(&state.alpha, &d, &kd));
        if it == iters {
            break;
        }
        let g = gradient_from(prob, &kd);
        state.alpha = state
            .alpha
            .iter()
            .zip(g.iter())
            .map(|(a, g)| (a + g).max(T::zero()).min(prob.c))
            .collect();
        if let Some((i, a)) = state
            .alpha
            .iter()
            .enumerate()
            .find(|&(_, a)| !(a >= T::zero() && a <= prob.c))
        {
            return Err(Error::Invariant(format!("alpha[{i}] = {a} left [0, C]")));
        }
        on_iter(it, &state.alpha)?;
    }
    Ok(state)
}

/// Raw decision values `f(q) = Σⱼ αⱼyⱼ⟨xⱼ, q⟩` (bias fixed at zero),
/// computed as `Q (TᵀD)`.
pub fn svm_predict<T: Scalar>(
    state: &SvmState<T>,
    prob: &SvmProblem<T>,
    queries: &SparseMatrix<T>,
    workers: usize,
) -> Result<DenseVector<T>> {
    svm_decision(&prob.t, &prob.y, &state.alpha, queries, workers)
}

/// [`svm_predict`] from the training rows, labels and multipliers alone.
pub fn svm_decision<T: Scalar>(
    t: &SparseMatrix<T>,
    y: &DenseVector<T>,
    alpha: &DenseVector<T>,
    queries: &SparseMatrix<T>,
    workers: usize,
) -> Result<DenseVector<T>> {
    if queries.cols() != t.cols() {
        return Err(Error::shape("svm_predict", queries.shape(), t.shape()));
    }
    if alpha.len() != t.rows() || y.len() != t.rows() {
        return Err(Error::shape("svm_predict", (alpha.len(), 1), t.shape()));
    }
    let d = signed_alpha(alpha, y);
    let (w, _) = broadcast_multiply(&t.transpose(), &d.to_column()?, workers)?;
    let (scores, _) = broadcast_multiply(queries, &w.to_dense(), workers)?;
    Ok((0..scores.rows()).map(|i| scores.get(i, 0)).collect())
}

/// Fraction of scores whose sign matches the label; zero counts as `+1`.
pub fn accuracy<T: Scalar>(scores: &DenseVector<T>, labels: &DenseVector<T>) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    let hits = scores
        .iter()
        .zip(labels.iter())
        .filter(|&(s, y)| (s >= T::zero()) == (y > T::zero()))
        .count();
    hits as f64 / scores.len() as f64
}

/// A sparse labeled dataset with labels mapped onto `{−1, +1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledData<T> {
    pub x: SparseMatrix<T>,
    pub y: DenseVector<T>,
    /// Original label text for `−1` and `+1`.
    pub labels: [String; 2],
}

/// Parses `<label> <index>:<value> ...` lines (0-based ascending indices).
///
/// Labels `−1`/`+1` are kept; any other pair of distinct labels is mapped
/// with the numerically smaller one to `−1`. `min_cols` widens the matrix,
/// e.g. to match a training set.
pub fn parse_labeled<T: Scalar, R: BufRead>(reader: R, min_cols: usize) -> Result<LabeledData<T>> {
    parse_labeled_impl(reader, min_cols, None)
}

/// Like [`parse_labeled`] but maps labels onto the classes of an existing
/// dataset: `classes[0]` to `−1`, `classes[1]` to `+1`. Other labels are
/// rejected.
pub fn parse_labeled_as<T: Scalar, R: BufRead>(
    reader: R,
    min_cols: usize,
    classes: &[String; 2],
) -> Result<LabeledData<T>> {
    parse_labeled_impl(reader, min_cols, Some(classes))
}

fn label_value(text: &str, line: usize) -> Result<f64> {
    text.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid label `{text}`"),
    })
}

fn parse_labeled_impl<T: Scalar, R: BufRead>(
    reader: R,
    min_cols: usize,
    classes: Option<&[String; 2]>,
) -> Result<LabeledData<T>> {
    let mut raw_labels: Vec<(String, f64)> = Vec::new();
    let mut rows: Vec<Vec<(usize, T)>> = Vec::new();
    let mut cols = min_cols;
    for (n, line) in reader.lines().enumerate() {
        let lineno = n + 1;
        let line = line.map_err(|e| Error::io("<input>", e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut it = t.split_whitespace();
        let label = it.next().expect("nonempty line");
        let value = label_value(label, lineno)?;
        let mut entries = Vec::new();
        let mut prev: Option<usize> = None;
        for pair in it {
            let parsed = pair.split_once(':').and_then(|(i, v)| {
                Some((i.parse::<usize>().ok()?, v.parse::<T>().ok()?))
            });
            let Some((j, v)) = parsed else {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected `index:value`, got `{pair}`"),
                });
            };
            if prev.is_some_and(|p| j <= p) {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("index {j} is not strictly ascending"),
                });
            }
            prev = Some(j);
            cols = cols.max(j + 1);
            entries.push((j, v));
        }
        raw_labels.push((label.to_string(), value));
        rows.push(entries);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "no examples".into(),
        });
    }
    let (negative, positive, labels) = match classes {
        Some(c) => (label_value(&c[0], 0)?, label_value(&c[1], 0)?, c.clone()),
        None => infer_classes(&raw_labels)?,
    };
    let mut y = Vec::with_capacity(raw_labels.len());
    for (text, v) in &raw_labels {
        if *v == positive {
            y.push(T::one());
        } else if *v == negative {
            y.push(-T::one());
        } else {
            return Err(Error::InvalidArgument(format!(
                "label `{text}` is neither `{}` nor `{}`",
                labels[0], labels[1]
            )));
        }
    }
    let x = SparseMatrix::from_rows(rows.len(), cols.max(1), rows)?;
    Ok(LabeledData {
        x,
        y: DenseVector::new(y),
        labels,
    })
}

/// `(negative, positive, texts)` for the labels present.
fn infer_classes(raw: &[(String, f64)]) -> Result<(f64, f64, [String; 2])> {
    let mut distinct: Vec<(f64, String)> = Vec::new();
    for (text, v) in raw {
        if !distinct.iter().any(|(d, _)| d == v) {
            distinct.push((*v, text.clone()));
        }
    }
    distinct.sort_by(|a, b| a.0.total_cmp(&b.0));
    if distinct.iter().all(|(v, _)| *v == 1.0 || *v == -1.0) {
        return Ok((-1.0, 1.0, ["-1".to_string(), "+1".to_string()]));
    }
    match &distinct[..] {
        [(n, nt), (p, pt)] => Ok((*n, *p, [nt.clone(), pt.clone()])),
        [(n, nt)] => Ok((*n, f64::NAN, [nt.clone(), String::new()])),
        _ => Err(Error::InvalidArgument(format!(
            "expected two classes, found {}",
            distinct.len()
        ))),
    }
}

pub fn read_labeled<T: Scalar>(path: impl AsRef<Path>, min_cols: usize) -> Result<LabeledData<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_labeled(BufReader::new(file), min_cols).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}
