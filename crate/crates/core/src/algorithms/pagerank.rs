//! PageRank by damped power iteration `π ← dPπ + (1−d)/N`.
//!
//! Each iteration is one broadcast multiplication: `π` is replicated to every
//! worker and the rows of `P` are multiplied against it. Row sums run in
//! ascending column order, so the result does not depend on the worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::BroadcastStore;
use crate::error::{Error, Result};
use crate::matmul::broadcast_multiply_in;
use crate::matrix::{DenseMatrix, DenseVector, SparseMatrix};
use crate::scalar::Scalar;

pub const DEFAULT_DAMPING: f64 = 0.85;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 100;
/// Allowed drift of `Σπ` from 1 at any iterate.
pub const MASS_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct PagerankProblem<T> {
    /// Column-stochastic `N × N` transition matrix; `P[i][j] = 1/L(j)` for
    /// every link `j → i`.
    pub p: SparseMatrix<T>,
    pub damping: T,
    pub n: usize,
    /// Distinct out-links per node before dangling repair.
    pub outdeg: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PagerankResult<T> {
    pub rank: DenseVector<T>,
    pub iterations: usize,
    /// L1 distance between consecutive iterates.
    pub residuals: Vec<T>,
    pub converged: bool,
}

fn column_tolerance(n: usize) -> f64 {
    (4.0 * n as f64 * f64::EPSILON).max(1e-12)
}

/// Checks that every column of `p` sums to 1.
pub fn check_stochastic<T: Scalar>(p: &SparseMatrix<T>) -> Result<()> {
    let mut sums = vec![0.0f64; p.cols()];
    for (_, j, v) in p.iter() {
        if v < T::zero() {
            return Err(Error::NotStochastic {
                column: j,
                sum: f64::NAN,
            });
        }
        sums[j] += v.to_f64_lossy();
    }
    let tol = column_tolerance(p.rows());
    match sums.iter().position(|s| (s - 1.0).abs() > tol) {
        Some(j) => Err(Error::NotStochastic { column: j, sum: sums[j] }),
        None => Ok(()),
    }
}

/// Builds the transition matrix from `src → dst` edges over nodes `0..n`.
/// Duplicate edges count once; self-loops are kept. Dangling columns become
/// uniform `1/N`.
pub fn pagerank_build<T: Scalar>(
    edges: &[(usize, usize)],
    damping: f64,
    n: usize,
) -> Result<PagerankProblem<T>> {
    if n == 0 {
        return Err(Error::Dimension("graph needs at least one node".into()));
    }
    if !(0.0..=1.0).contains(&damping) {
        return Err(Error::InvalidArgument(format!("damping {damping} outside [0, 1]")));
    }
    if let Some(&(s, d)) = edges.iter().find(|&&(s, d)| s >= n || d >= n) {
        return Err(Error::InvalidArgument(format!(
            "edge {s} -> {d} references a node outside 0..{n}"
        )));
    }
    let mut links: Vec<(usize, usize)> = edges.to_vec();
    links.sort_unstable();
    links.dedup();
    let mut outdeg = vec![0usize; n];
    for &(s, _) in &links {
        outdeg[s] += 1;
    }
    let uniform = T::from_f64_lossy(1.0 / n as f64);
    let mut triplets: Vec<(usize, usize, T)> = links
        .iter()
        .map(|&(s, d)| (d, s, T::from_f64_lossy(1.0 / outdeg[s] as f64)))
        .collect();
    for j in (0..n).filter(|&j| outdeg[j] == 0) {
        triplets.extend((0..n).map(|i| (i, j, uniform)));
    }
    let p = SparseMatrix::from_triplets(n, n, triplets)?;
    check_stochastic(&p)?;
    Ok(PagerankProblem {
        p,
        damping: T::from_f64_lossy(damping),
        n,
        outdeg,
    })
}

/// One damped step `dPπ + (1−d)/N`.
fn step<T: Scalar>(
    store: &mut BroadcastStore,
    prob: &PagerankProblem<T>,
    pi: &DenseVector<T>,
    teleport: T,
    workers: usize,
) -> Result<DenseVector<T>> {
    let column: DenseMatrix<T> = pi.to_column()?;
    let (p_pi, _) = broadcast_multiply_in(store, "pi", &prob.p, &column, workers)?;
    store.advance_epoch();
    Ok((0..prob.n)
        .map(|i| prob.damping * p_pi.get(i, 0) + teleport)
        .collect())
}

fn l1_distance<T: Scalar>(a: &DenseVector<T>, b: &DenseVector<T>) -> T {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum()
}

/// Power iteration from the uniform vector until the L1 step falls below
/// `tol` or `max_iters` steps have run.
pub fn pagerank<T: Scalar>(
    prob: &PagerankProblem<T>,
    tol: f64,
    max_iters: usize,
    workers: usize,
) -> Result<PagerankResult<T>> {
    pagerank_with(prob, tol, max_iters, workers, |_, _| {})
}

/// [`pagerank`] that shows every iterate (1-based) to `on_iter`.
pub fn pagerank_with<T: Scalar>(
    prob: &PagerankProblem<T>,
    tol: f64,
    max_iters: usize,
    workers: usize,
    mut on_iter: impl FnMut(usize, &DenseVector<T>),
) -> Result<PagerankResult<T>> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be > 0")));
    }
    if prob.p.shape() != (prob.n, prob.n) {
        return Err(Error::shape("pagerank", prob.p.shape(), (prob.n, prob.n)));
    }
    check_stochastic(&prob.p)?;
    let n = T::from_usize(prob.n).expect("node count fits the scalar");
    let teleport = (T::one() - prob.damping) / n;
    let mut pi = DenseVector::from_elem(prob.n, T::one() / n);
    let mut store = BroadcastStore::new();
    let mut residuals = Vec::new();
    let mut converged = false;
    while residuals.len() < max_iters {
        let next = step(&mut store, prob, &pi, teleport, workers)?;
        let mass = next.sum().to_f64_lossy();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Invariant(format!(
                "rank mass {mass} after iteration {}",
                residuals.len() + 1
            )));
        }
        let r = l1_distance(&next, &pi);
        residuals.push(r);
        on_iter(residuals.len(), &next);
        pi = next;
        if r.to_f64_lossy() < tol {
            converged = true;
            break;
        }
    }
    Ok(PagerankResult {
        rank: pi,
        iterations: residuals.len(),
        residuals,
        converged,
    })
}

/// `(node, rank)` sorted by descending rank, ties by ascending node id.
pub fn sorted_ranks<T: Scalar>(rank: &DenseVector<T>) -> Vec<(usize, T)> {
    let mut out: Vec<(usize, T)> = rank.iter().enumerate().collect();
    out.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    out
}

/// Preferential-attachment web graph: node `v ≥ 1` links to up to
/// `links_per_node` distinct earlier nodes, each drawn with probability
/// proportional to `1 + indegree`. Node 0 is dangling.
pub fn web_graph(n: usize, links_per_node: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut urn: Vec<usize> = Vec::with_capacity(n * (links_per_node + 1));
    let mut edges = Vec::with_capacity(n * links_per_node);
    for v in 0..n {
        let mut chosen: Vec<usize> = Vec::with_capacity(links_per_node);
        for _ in 0..links_per_node.min(v) {
            // Bounded retries keep the graph simple without stalling on tiny prefixes.
            for _ in 0..16 {
                let t = urn[rng.gen_range(0..urn.len())];
                if !chosen.contains(&t) {
                    chosen.push(t);
                    break;
                }
            }
        }
        for &t in &chosen {
            edges.push((v, t));
            urn.push(t);
        }
        urn.push(v);
    }
    edges
}
