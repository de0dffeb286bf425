//! Matrix Market coordinate format for [`SparseSym`].
//!
//! Output always uses the `symmetric` qualifier (lower triangle, 1-based).
//! Input accepts `real` or `integer` fields with `symmetric` or `general`
//! symmetry; general files must describe a symmetric matrix.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::SparseSym;

pub fn write_matrix_market<W: Write>(a: &SparseSym, mut out: W) -> Result<()> {
    let lower: Vec<_> = a
        .triplets()
        .into_iter()
        .filter(|(i, j, _)| i >= j)
        .collect();
    let mut buf = String::new();
    buf.push_str("%%MatrixMarket matrix coordinate real symmetric\n");
    let _ = writeln!(buf, "{} {} {}", a.n(), a.n(), lower.len());
    for (i, j, v) in lower {
        // {:e} round-trips f64 exactly
        let _ = writeln!(buf, "{} {} {:e}", i + 1, j + 1, v);
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

pub fn read_matrix_market<R: Read>(input: R) -> Result<SparseSym> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines();

    let header = lines
        .next()
        .ok_or_else(|| Error::MatrixMarket("empty input".into()))??;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(Error::MatrixMarket(format!("bad header: {header}")));
    }
    if tokens[2] != "coordinate" {
        return Err(Error::MatrixMarket(format!(
            "only coordinate format is supported, got {}",
            tokens[2]
        )));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(Error::MatrixMarket(format!(
            "unsupported field type {}",
            tokens[3]
        )));
    }
    let symmetric = match tokens[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => {
            return Err(Error::MatrixMarket(format!(
                "unsupported symmetry qualifier {other}"
            )))
        }
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(Error::MatrixMarket(format!("bad size line: {line}")));
                }
                let parsed: Vec<usize> = fields
                    .iter()
                    .map(|f| f.parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::MatrixMarket(format!("bad size line: {e}")))?;
                if parsed[0] != parsed[1] {
                    return Err(Error::MatrixMarket(format!(
                        "matrix is {}x{}, expected square",
                        parsed[0], parsed[1]
                    )));
                }
                size = Some((parsed[0], parsed[1], parsed[2]));
                entries.reserve(parsed[2]);
            }
            Some((n, _, _)) => {
                if fields.len() != 3 {
                    return Err(Error::MatrixMarket(format!("bad entry line: {line}")));
                }
                let row: usize = fields[0]
                    .parse()
                    .map_err(|e| Error::MatrixMarket(format!("bad row index: {e}")))?;
                let col: usize = fields[1]
                    .parse()
                    .map_err(|e| Error::MatrixMarket(format!("bad column index: {e}")))?;
                let value: f64 = fields[2]
                    .parse()
                    .map_err(|e| Error::MatrixMarket(format!("bad value: {e}")))?;
                if row == 0 || col == 0 || row > n || col > n {
                    return Err(Error::IndexOutOfRange { row, col, n });
                }
                if symmetric && col > row {
                    return Err(Error::MatrixMarket(format!(
                        "symmetric file has upper-triangle entry ({row}, {col})"
                    )));
                }
                entries.push((row - 1, col - 1, value));
            }
        }
    }
    let (n, _, nnz) = size.ok_or_else(|| Error::MatrixMarket("missing size line".into()))?;
    if entries.len() != nnz {
        return Err(Error::MatrixMarket(format!(
            "expected {nnz} entries, found {}",
            entries.len()
        )));
    }
    SparseSym::from_triplets(n, &entries)
}

pub fn save(a: &SparseSym, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_matrix_market(a, std::io::BufWriter::new(file))
}

pub fn load(path: impl AsRef<Path>) -> Result<SparseSym> {
    read_matrix_market(std::fs::File::open(path)?)
}
