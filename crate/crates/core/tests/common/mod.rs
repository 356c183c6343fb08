//! Dense reference implementations shared by the integration tests. None of
//! them go through the engine.
#![allow(dead_code)]

use mrmul::matrix::SparseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random sparse matrix with values in [-1, 1), drawn independently of the
/// crate's generator.
pub fn random_sparse(rows: usize, cols: usize, delta: f64, rng: &mut ChaCha8Rng) -> SparseMatrix<f64> {
    let mut triplets = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if rng.gen::<f64>() < delta {
                triplets.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
    }
    SparseMatrix::from_triplets(rows, cols, triplets).unwrap()
}

pub fn random_nonneg(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Dense {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(0.01..1.0)).collect())
        .collect()
}

pub fn to_dense(m: &SparseMatrix<f64>) -> Dense {
    let mut d = vec![vec![0.0; m.cols()]; m.rows()];
    for (i, j, v) in m.iter() {
        d[i][j] = v;
    }
    d
}

pub fn from_dense(d: &Dense) -> SparseMatrix<f64> {
    let cols = d.first().map_or(0, Vec::len);
    let triplets = d
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.iter().enumerate().map(move |(j, &v)| (i, j, v)));
    SparseMatrix::from_triplets(d.len(), cols, triplets).unwrap()
}

/// Textbook triple loop.
pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let (n, inner, m) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for t in 0..inner {
                s += a[i][t] * b[t][j];
            }
            c[i][j] = s;
        }
    }
    c
}

pub fn transpose(a: &Dense) -> Dense {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// Largest `|x − y| / max(1, |y|)` over all entries.
pub fn max_rel_err(x: &Dense, y: &Dense) -> f64 {
    assert_eq!(x.len(), y.len());
    x.iter()
        .flatten()
        .zip(y.iter().flatten())
        .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
        .fold(0.0, f64::max)
}

pub fn max_abs_err(x: &Dense, y: &Dense) -> f64 {
    x.iter()
        .flatten()
        .zip(y.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Straight-line multiplicative updates: H then W, `eps` added to each
/// denominator. Returns `(W, H, divergence after each step)`.
pub fn nmf_reference(a: &Dense, w0: &Dense, h0: &Dense, iters: usize, eps: f64) -> (Dense, Dense, Vec<f64>) {
    let (mut w, mut h) = (w0.clone(), h0.clone());
    let mut hist = Vec::new();
    for _ in 0..iters {
        let wt = transpose(&w);
        let x = matmul(&wt, a);
        let y = matmul(&matmul(&wt, &w), &h);
        for i in 0..h.len() {
            for j in 0..h[0].len() {
                h[i][j] = h[i][j] * x[i][j] / (y[i][j] + eps);
            }
        }
        let ht = transpose(&h);
        let u = matmul(a, &ht);
        let v = matmul(&w, &matmul(&h, &ht));
        for i in 0..w.len() {
            for j in 0..w[0].len() {
                w[i][j] = w[i][j] * u[i][j] / (v[i][j] + eps);
            }
        }
        hist.push(frobenius_sq(a, &matmul(&w, &h)));
    }
    (w, h, hist)
}

pub fn frobenius_sq(a: &Dense, b: &Dense) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// `Σα − ½ ΣᵢΣⱼ yᵢyⱼαᵢαⱼKᵢⱼ`.
pub fn svm_objective(alpha: &[f64], y: &[f64], k: &Dense) -> f64 {
    let l = alpha.len();
    let mut quad = 0.0;
    for i in 0..l {
        for j in 0..l {
            quad += y[i] * y[j] * alpha[i] * alpha[j] * k[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Column-stochastic transition matrix with uniform dangling columns.
pub fn transition(edges: &[(usize, usize)], n: usize) -> Dense {
    let mut adj = vec![vec![false; n]; n];
    for &(s, d) in edges {
        adj[s][d] = true;
    }
    let mut p = vec![vec![0.0; n]; n];
    for s in 0..n {
        let out = adj[s].iter().filter(|&&x| x).count();
        for d in 0..n {
            p[d][s] = if out == 0 {
                1.0 / n as f64
            } else if adj[s][d] {
                1.0 / out as f64
            } else {
                0.0
            };
        }
    }
    p
}

/// Damped power iteration from the uniform vector; stops when the L1 step
/// drops below `tol`.
pub fn pagerank_oracle(p: &Dense, d: f64, tol: f64, max_iters: usize) -> (Vec<f64>, usize) {
    let n = p.len();
    let mut pi = vec![1.0 / n as f64; n];
    for it in 1..=max_iters {
        let next: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = 0.0;
                for j in 0..n {
                    s += p[i][j] * pi[j];
                }
                d * s + (1.0 - d) / n as f64
            })
            .collect();
        let r: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if r < tol {
            return (pi, it);
        }
    }
    (pi, max_iters)
}

/// Random directed graph with `n` nodes where each ordered pair is an edge
/// with probability `q`.
pub fn random_graph(n: usize, q: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for s in 0..n {
        for d in 0..n {
            if s != d && rng.gen::<f64>() < q {
                e.push((s, d));
            }
        }
    }
    e
}

pub fn top_k(v: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].partial_cmp(&v[a]).unwrap().then(a.cmp(&b)));
    idx.truncate(k);
    idx
}
