//! Matrix Market coordinate format for sparse operators.
//!
//! Symmetric matrices are stored as their lower triangle under the
//! `symmetric` qualifier; everything else is written as `general`. Values
//! use 17 significant digits so a write/read round trip reproduces every
//! `f64` bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Writes a sparse matrix in Matrix Market coordinate format (1-based
/// indices). A matrix whose symmetry check passes is written as
/// `symmetric` with only its lower triangle.
pub fn write_matrix_market(path: &Path, m: &SparseMatrix) -> Result<()> {
    let symmetric = m.n_rows() == m.n_cols() && m.symmetry_holds();
    let mut body = String::new();
    let mut count = 0usize;
    for (i, j, v) in m.iter() {
        if symmetric && j > i {
            continue;
        }
        writeln!(body, "{} {} {:.16e}", i + 1, j + 1, v).expect("string write");
        count += 1;
    }
    let qualifier = if symmetric { "symmetric" } else { "general" };
    let text = format!(
        "%%MatrixMarket matrix coordinate real {qualifier}\n{} {} {count}\n{body}",
        m.n_rows(),
        m.n_cols()
    );
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a Matrix Market coordinate file. Off-diagonal entries of a
/// `symmetric` file are mirrored so the returned operator acts like the
/// full matrix.
pub fn read_matrix_market(path: &Path) -> Result<SparseMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |detail: String| Error::format(path, detail);
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| bad("empty file".into()))?
        .to_ascii_lowercase();
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5
        || fields[0] != "%%matrixmarket"
        || fields[1] != "matrix"
        || fields[2] != "coordinate"
        || fields[3] != "real"
    {
        return Err(bad(format!("unsupported header '{header}'")));
    }
    let symmetric = match fields[4] {
        "symmetric" => true,
        "general" => false,
        other => return Err(bad(format!("unsupported qualifier '{other}'"))),
    };

    let mut rest = lines.filter(|l| !l.trim_start().starts_with('%'));
    let size_line = rest
        .next()
        .ok_or_else(|| bad("missing size line".into()))?;
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad(format!("invalid size line '{size_line}'")))?;
    let [n_rows, n_cols, nnz] = dims[..] else {
        return Err(bad(format!("invalid size line '{size_line}'")));
    };

    let mut triplets = Vec::with_capacity(if symmetric { 2 * nnz } else { nnz });
    let mut seen = 0usize;
    for line in rest {
        if line.trim().is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let (Some(i), Some(j), Some(v), None) =
            (toks.next(), toks.next(), toks.next(), toks.next())
        else {
            return Err(bad(format!("malformed entry '{line}'")));
        };
        let i: usize = i.parse().map_err(|_| bad(format!("bad row index '{i}'")))?;
        let j: usize = j.parse().map_err(|_| bad(format!("bad column index '{j}'")))?;
        let v: f64 = v.parse().map_err(|_| bad(format!("bad value '{v}'")))?;
        if i == 0 || j == 0 || i > n_rows || j > n_cols {
            return Err(bad(format!("entry ({i}, {j}) outside {n_rows}x{n_cols}")));
        }
        if symmetric && j > i {
            return Err(bad(format!(
                "entry ({i}, {j}) above the diagonal in a symmetric file"
            )));
        }
        triplets.push((i - 1, j - 1, v));
        if symmetric && i != j {
            triplets.push((j - 1, i - 1, v));
        }
        seen += 1;
    }
    if seen != nnz {
        return Err(bad(format!("size line promised {nnz} entries, found {seen}")));
    }
    let mut m = SparseMatrix::from_triplets(n_rows, n_cols, triplets)?;
    if symmetric {
        m.set_symmetric(true);
    }
    Ok(m)
}
