//! Row-format matrix files and edge lists.
//!
//! Row format: a header `<rows> <cols> <nnz>` followed by one line per
//! nonempty row, `<row>\t<col>:<value> <col>:<value> ...`, columns ascending
//! and values written as the shortest decimal that round-trips.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::SparseMatrix;
use crate::scalar::Scalar;

pub fn read_matrix<T: Scalar>(path: impl AsRef<Path>) -> Result<SparseMatrix<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn write_matrix<T: Scalar>(m: &SparseMatrix<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    format_matrix(m, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn format_matrix<T: Scalar, W: Write>(m: &SparseMatrix<T>, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{} {} {}", m.rows(), m.cols(), m.nnz())?;
    for (i, row) in m.row_iter().enumerate() {
        if row.is_empty() {
            continue;
        }
        write!(w, "{i}\t")?;
        for (p, (j, v)) in row.iter().enumerate() {
            if p > 0 {
                w.write_all(b" ")?;
            }
            write!(w, "{j}:{v}")?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_num<N: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<N> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} `{tok}`")))
}

pub fn parse_matrix<T: Scalar, R: BufRead>(reader: R) -> Result<SparseMatrix<T>> {
    let mut lines = reader.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((n, l)) => {
                let l = l.map_err(|e| Error::io("<input>", e))?;
                if !l.trim().is_empty() {
                    break (n + 1, l);
                }
            }
            None => return Err(parse_err(1, "missing header")),
        }
    };
    let fields: Vec<&str> = header.1.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(parse_err(header.0, "header must be `<rows> <cols> <nnz>`"));
    }
    let rows: usize = parse_num(fields[0], header.0, "row count")?;
    let cols: usize = parse_num(fields[1], header.0, "column count")?;
    let nnz: usize = parse_num(fields[2], header.0, "nnz")?;
    if rows == 0 || cols == 0 {
        return Err(parse_err(header.0, "dimensions must be positive"));
    }

    let mut body: Vec<Option<Vec<(usize, T)>>> = vec![None; rows];
    let mut listed = 0usize;
    for (n, l) in lines {
        let lineno = n + 1;
        let l = l.map_err(|e| Error::io("<input>", e))?;
        if l.trim().is_empty() {
            continue;
        }
        let (idx, rest) = l
            .split_once('\t')
            .ok_or_else(|| parse_err(lineno, "expected `<row>\\t<col>:<value> ...`"))?;
        let i: usize = parse_num(idx.trim(), lineno, "row index")?;
        if i >= rows {
            return Err(parse_err(lineno, format!("row {i} out of range (rows = {rows})")));
        }
        if body[i].is_some() {
            return Err(parse_err(lineno, format!("duplicate row {i}")));
        }
        let mut entries = Vec::new();
        let mut prev: Option<usize> = None;
        for pair in rest.split_whitespace() {
            let (c, v) = pair
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected `col:value`, got `{pair}`")))?;
            let j: usize = parse_num(c, lineno, "column index")?;
            let v: T = parse_num(v, lineno, "value")?;
            if j >= cols {
                return Err(parse_err(lineno, format!("column {j} out of range (cols = {cols})")));
            }
            if prev.is_some_and(|p| j <= p) {
                return Err(parse_err(
                    lineno,
                    format!("column {j} is not strictly ascending"),
                ));
            }
            prev = Some(j);
            entries.push((j, v));
        }
        listed += entries.len();
        body[i] = Some(entries);
    }
    if listed != nnz {
        return Err(Error::Dimension(format!(
            "header declares {nnz} entries but {listed} were listed"
        )));
    }
    SparseMatrix::from_rows(rows, cols, body.into_iter().map(Option::unwrap_or_default))
}

/// Reads a directed edge list, one `src<TAB>dst` pair per line (0-based ids).
/// Blank lines and lines starting with `#` are skipped.
pub fn read_edges(path: impl AsRef<Path>) -> Result<Vec<(usize, usize)>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edges(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_edges<R: BufRead>(reader: R) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (n, l) in reader.lines().enumerate() {
        let lineno = n + 1;
        let l = l.map_err(|e| Error::io("<input>", e))?;
        let t = l.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut it = t.split_whitespace();
        let (Some(s), Some(d), None) = (it.next(), it.next(), it.next()) else {
            return Err(parse_err(lineno, "expected `src<TAB>dst`"));
        };
        edges.push((
            parse_num(s, lineno, "source id")?,
            parse_num(d, lineno, "destination id")?,
        ));
    }
    Ok(edges)
}

pub fn write_edges(edges: &[(usize, usize)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    edges
        .iter()
        .try_for_each(|(s, d)| writeln!(w, "{s}\t{d}"))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
