//! Subcommand bodies. Result files are deterministic given inputs and
//! flags; only timing and metrics files vary between runs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mrmul::algorithms::nmf::{nmf_run, NmfOptions, NmfState, NmfTimings};
use mrmul::algorithms::pagerank::{pagerank_build, pagerank_with, sorted_ranks};
use mrmul::algorithms::svm::{
    self, accuracy, kernel_schema, parse_labeled_as, read_labeled, svm_build_kernel, svm_decision,
    svm_train_with_kernel, SvmProblem,
};
use mrmul::bench::{run_grid, summarize, BenchConfig, SCALING_CSV_HEADER, SUMMARY_CSV_HEADER};
use mrmul::matmul::{multiply_csv_rows, partition_multiply, suggest_schema, MULTIPLY_CSV_HEADER};
use mrmul::matrix::{generate_random, read_edges, read_matrix, write_matrix, DenseVector, GeneratorParams};
use mrmul::{SparseF64, VectorF64};

use crate::{BenchArgs, GenerateArgs, MultiplyArgs, NmfArgs, PagerankArgs, SvmPredictArgs, SvmTrainArgs};

/// `<prefix>.<suffix>`.
fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Writes `header` (if any) then `lines`, one per line.
fn write_lines(path: &Path, header: Option<&str>, lines: impl IntoIterator<Item = String>) -> Result<()> {
    let mut w = create(path)?;
    let go = || -> std::io::Result<()> {
        if let Some(h) = header {
            writeln!(w, "{h}")?;
        }
        for l in lines {
            writeln!(w, "{l}")?;
        }
        w.flush()
    };
    go().with_context(|| format!("writing {}", path.display()))
}

fn load(path: &Path) -> Result<SparseF64> {
    read_matrix(path).with_context(|| format!("reading {}", path.display()))
}

pub fn generate(a: &GenerateArgs) -> Result<()> {
    let p = GeneratorParams::new(a.m, a.n, a.delta, a.common.seed);
    let m: SparseF64 = generate_random(&p, a.common.workers())?;
    write_matrix(&m, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    println!("wrote {} ({}x{}, nnz {})", a.out.display(), m.rows(), m.cols(), m.nnz());
    Ok(())
}

pub fn multiply(a: &MultiplyArgs) -> Result<()> {
    let (lhs, rhs) = (load(&a.a)?, load(&a.b)?);
    if lhs.cols() != rhs.rows() {
        bail!(
            "cannot multiply {} ({}x{}) by {} ({}x{}): inner dimensions differ",
            a.a.display(),
            lhs.rows(),
            lhs.cols(),
            a.b.display(),
            rhs.rows(),
            rhs.cols()
        );
    }
    let workers = a.common.workers();
    let schema = a.schema.unwrap_or_else(|| {
        suggest_schema(lhs.rows(), lhs.cols(), rhs.cols(), lhs.nnz(), rhs.nnz(), workers)
    });
    let out = partition_multiply(&lhs, &rhs, schema, a.shard, workers)
        .with_context(|| format!("multiplying {} by {}", a.a.display(), a.b.display()))?;
    write_matrix(&out.product, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let metrics = a.metrics.clone().unwrap_or_else(|| with_suffix(&a.out, "metrics.csv"));
    write_lines(&metrics, Some(MULTIPLY_CSV_HEADER), multiply_csv_rows(&out.metrics, schema, a.shard))?;
    println!(
        "wrote {} ({}x{}, nnz {}) with schema {schema}, shard {}",
        a.out.display(),
        out.product.rows(),
        out.product.cols(),
        out.product.nnz(),
        a.shard
    );
    Ok(())
}

const NMF_TIMINGS_HEADER: &str = "iter,factor,component,ms";

fn timing_rows(iter: usize, t: &NmfTimings) -> Vec<String> {
    let mut rows = Vec::with_capacity(6);
    for (factor, c) in [("H", &t.h), ("W", &t.w)] {
        for (name, d) in [("numerator", c.numerator), ("denominator", c.denominator), ("update", c.update)] {
            rows.push(format!("{iter},{factor},{name},{:.3}", d.as_secs_f64() * 1e3));
        }
    }
    rows
}

pub fn nmf(a: &NmfArgs) -> Result<()> {
    let data = load(&a.a)?;
    let state = NmfState::random(data.rows(), data.cols(), a.k, a.common.seed)
        .with_context(|| format!("initializing rank-{} factors for {}", a.k, a.a.display()))?;
    let opts = NmfOptions {
        parts: a.parts,
        shard: a.shard,
        eps: a.eps,
    };
    let mut timings = Vec::new();
    let mut totals = [0.0f64; 6];
    let result = nmf_run(&data, state, a.iters, &opts, a.common.workers(), |it, t| {
        let rows = timing_rows(it + 1, t);
        for (total, d) in totals.iter_mut().zip([t.h.numerator, t.h.denominator, t.h.update, t.w.numerator, t.w.denominator, t.w.update]) {
            *total += d.as_secs_f64() * 1e3;
        }
        timings.extend(rows);
    })
    .with_context(|| format!("factorizing {}", a.a.display()))?;
    write_matrix(&result.w, with_suffix(&a.out, "W.txt"))?;
    write_matrix(&result.h, with_suffix(&a.out, "H.txt"))?;
    write_lines(
        &with_suffix(&a.out, "divergence.csv"),
        Some("iter,value"),
        result.divergence_history.iter().enumerate().map(|(i, d)| format!("{i},{d}")),
    )?;
    write_lines(&with_suffix(&a.out, "timings.csv"), Some(NMF_TIMINGS_HEADER), timings)?;
    let iters = a.iters.max(1) as f64;
    println!("component            H ms/iter   W ms/iter");
    for (i, name) in ["numerator (X)", "denominator (Y)", "update"].iter().enumerate() {
        println!("{name:<18} {:>11.3} {:>11.3}", totals[i] / iters, totals[i + 3] / iters);
    }
    println!("final divergence {}", result.divergence_history.last().copied().unwrap_or(f64::NAN));
    Ok(())
}

pub fn svm_train(a: &SvmTrainArgs) -> Result<()> {
    let data = read_labeled::<f64>(&a.data, 0).with_context(|| format!("reading {}", a.data.display()))?;
    let prob = SvmProblem::new(data.x.clone(), data.y.clone(), a.c, a.eta)?;
    let workers = a.common.workers();
    let kernel = svm_build_kernel(&prob.t, kernel_schema(&prob.t, workers), workers)?;
    let state = svm_train_with_kernel(&prob, kernel, a.iters, workers, |_, _| Ok(()))?;
    let scores = svm::svm_predict(&state, &prob, &prob.t, workers)?;
    let acc = accuracy(&scores, &prob.y);
    write_lines(
        &with_suffix(&a.out, "alpha.csv"),
        None,
        state.alpha.iter().enumerate().map(|(i, v)| format!("{i},{v}")),
    )?;
    write_lines(
        &with_suffix(&a.out, "objective.csv"),
        Some("iter,value"),
        state.objective_history.iter().enumerate().map(|(i, v)| format!("{i},{v}")),
    )?;
    write_lines(&with_suffix(&a.out, "classes.txt"), None, data.labels.iter().cloned())?;
    println!("classes -1={} +1={}", data.labels[0], data.labels[1]);
    println!("accuracy {acc:.4}");
    Ok(())
}

fn read_alpha(path: &Path, len: usize) -> Result<VectorF64> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut alpha = vec![0.0; len];
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let parsed = line
            .split_once(',')
            .and_then(|(i, v)| Some((i.trim().parse::<usize>().ok()?, v.trim().parse::<f64>().ok()?)));
        match parsed {
            Some((i, v)) if i < len => alpha[i] = v,
            _ => bail!("{}:{}: expected `index,value` with index below {len}", path.display(), n + 1),
        }
    }
    Ok(DenseVector::new(alpha))
}

pub fn svm_predict(a: &SvmPredictArgs) -> Result<()> {
    let train = read_labeled::<f64>(&a.train, 0).with_context(|| format!("reading {}", a.train.display()))?;
    let text = fs::read_to_string(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
    let query = parse_labeled_as::<f64, _>(text.as_bytes(), train.x.cols(), &train.labels)
        .with_context(|| format!("reading {}", a.data.display()))?;
    if query.x.cols() != train.x.cols() {
        bail!(
            "{} has {} features but {} has {}",
            a.data.display(),
            query.x.cols(),
            a.train.display(),
            train.x.cols()
        );
    }
    let alpha = read_alpha(&a.alpha, train.x.rows())?;
    let scores = svm_decision(&train.x, &train.y, &alpha, &query.x, a.common.workers())?;
    write_lines(
        &a.out,
        None,
        scores.iter().enumerate().map(|(i, s)| {
            let label = if s >= 0.0 { &train.labels[1] } else { &train.labels[0] };
            format!("{i},{s},{label}")
        }),
    )?;
    println!("accuracy {:.4}", accuracy(&scores, &query.y));
    Ok(())
}

pub fn pagerank(a: &PagerankArgs) -> Result<()> {
    let edges = read_edges(&a.edges).with_context(|| format!("reading {}", a.edges.display()))?;
    let n = match a.nodes {
        Some(n) => n,
        None => edges.iter().map(|&(s, d)| s.max(d) + 1).max().unwrap_or(0),
    };
    let prob = pagerank_build::<f64>(&edges, a.damping, n).with_context(|| format!("building graph from {}", a.edges.display()))?;
    let result = pagerank_with(&prob, a.tol, a.iters, a.common.workers(), |_, _| {})?;
    write_lines(
        &with_suffix(&a.out, "ranks.csv"),
        None,
        result.rank.iter().enumerate().map(|(i, v)| format!("{i},{v}")),
    )?;
    write_lines(
        &with_suffix(&a.out, "sorted.csv"),
        Some("position,id,value"),
        sorted_ranks(&result.rank)
            .into_iter()
            .enumerate()
            .map(|(p, (i, v))| format!("{},{i},{v}", p + 1)),
    )?;
    write_lines(
        &with_suffix(&a.out, "residuals.csv"),
        Some("iter,value"),
        result.residuals.iter().enumerate().map(|(i, r)| format!("{},{r}", i + 1)),
    )?;
    println!(
        "{} nodes, {} iterations, {}",
        n,
        result.iterations,
        if result.converged { "converged" } else { "stopped at the iteration limit" }
    );
    Ok(())
}

pub fn bench_scaling(a: &BenchArgs) -> Result<()> {
    let cfg = BenchConfig {
        sizes: a.sizes.clone(),
        deltas: a.deltas.clone(),
        schemas: a.schemas.clone(),
        shards: a.shards.clone(),
        workers: a.workers.clone(),
        seed: a.seed,
        out_dir: a.out.clone(),
    };
    cfg.validate()?;
    println!("{SCALING_CSV_HEADER}");
    let rows = run_grid(&cfg, |r| println!("{}", r.csv_row()))?;
    write_lines(&cfg.out_dir.join("scaling.csv"), Some(SCALING_CSV_HEADER), rows.iter().map(|r| r.csv_row()))?;
    let fits = summarize(&rows);
    write_lines(&cfg.out_dir.join("summary.csv"), Some(SUMMARY_CSV_HEADER), fits.iter().map(|f| f.csv_row()))?;
    for f in fits.iter().filter(|f| f.fit == "ops_slope" || f.fit == "nnz_ops_corr") {
        println!("{} {} {} {} workers={}: {:.4}", f.fit, f.fixed, f.schema, f.shard, f.workers, f.value);
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        bail!("{failed} of {} cells failed; see scaling.csv", rows.len());
    }
    Ok(())
}
