//! Matrix Market reader for real `coordinate` and `array` files with the
//! `general` or `symmetric` qualifier. Symmetric files are expanded to both
//! triangles on load. Errors carry the 1-based line number.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A real matrix in coordinate form as read from disk (0-based indices,
/// symmetric storage already expanded).
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Stored entries after symmetric expansion.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Value at (i, j), summing duplicates (Matrix Market allows them).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries
            .iter()
            .filter(|&&(ei, ej, _)| ei == i && ej == j)
            .map(|&(_, _, v)| v)
            .sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    /// y = A x.
    pub fn mat_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.nrows);
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }

    /// y = A' x.
    pub fn mat_t_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.ncols);
        for &(i, j, v) in &self.entries {
            y[j] += v * x[i];
        }
        y
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

#[derive(PartialEq)]
enum Layout {
    Coordinate,
    Array,
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let file = File::open(path.as_ref())?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    // Header: %%MatrixMarket matrix {coordinate|array} real {general|symmetric}
    let (idx, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file"))
        .and_then(|(i, l)| Ok((i, l?)))?;
    let header_line = idx + 1;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(parse_err(
            header_line,
            "header must be '%%MatrixMarket matrix <format> real <symmetry>'",
        ));
    }
    if tokens[1] != "matrix" {
        return Err(parse_err(header_line, "only 'matrix' objects are supported"));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(header_line, format!("unknown format '{other}'"))),
    };
    if tokens[3] != "real" {
        return Err(parse_err(
            header_line,
            format!("field must be 'real', got '{}'", tokens[3]),
        ));
    }
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(parse_err(
                header_line,
                format!("symmetry must be 'general' or 'symmetric', got '{other}'"),
            ))
        }
    };

    // Skip comments, find the size line.
    let mut size_line = None;
    for (i, line) in lines.by_ref() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        size_line = Some((i + 1, trimmed.to_string()));
        break;
    }
    let (size_no, size) = size_line.ok_or_else(|| parse_err(header_line, "missing size line"))?;
    let dims: Vec<&str> = size.split_whitespace().collect();

    let parse_usize = |s: &str, line: usize| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| parse_err(line, format!("invalid integer '{s}'")))
    };
    let parse_f64 = |s: &str, line: usize| -> Result<f64> {
        let v = s
            .parse::<f64>()
            .map_err(|_| parse_err(line, format!("invalid real value '{s}'")))?;
        if !v.is_finite() {
            return Err(parse_err(line, format!("non-finite value '{s}'")));
        }
        Ok(v)
    };

    match layout {
        Layout::Coordinate => {
            if dims.len() != 3 {
                return Err(parse_err(size_no, "size line must be 'rows cols nnz'"));
            }
            let nrows = parse_usize(dims[0], size_no)?;
            let ncols = parse_usize(dims[1], size_no)?;
            let declared = parse_usize(dims[2], size_no)?;
            if symmetric && nrows != ncols {
                return Err(parse_err(size_no, "symmetric matrices must be square"));
            }
            let mut entries = Vec::with_capacity(if symmetric { 2 * declared } else { declared });
            let mut seen = 0usize;
            for (i, line) in lines {
                let line_no = i + 1;
                let line = line?;
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('%') {
                    continue;
                }
                let parts: Vec<&str> = trimmed.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(parse_err(line_no, "expected 'row col value'"));
                }
                let row = parse_usize(parts[0], line_no)?;
                let col = parse_usize(parts[1], line_no)?;
                let value = parse_f64(parts[2], line_no)?;
                if row < 1 || row > nrows || col < 1 || col > ncols {
                    return Err(parse_err(
                        line_no,
                        format!("index ({row}, {col}) outside {nrows} x {ncols}"),
                    ));
                }
                if symmetric && col > row {
                    return Err(parse_err(
                        line_no,
                        "symmetric files must store the lower triangle",
                    ));
                }
                seen += 1;
                if seen > declared {
                    return Err(parse_err(
                        line_no,
                        format!("more than the declared {declared} entries"),
                    ));
                }
                entries.push((row - 1, col - 1, value));
                if symmetric && row != col {
                    entries.push((col - 1, row - 1, value));
                }
            }
            if seen != declared {
                return Err(parse_err(
                    size_no,
                    format!("header declares {declared} entries but the file has {seen}"),
                ));
            }
            Ok(SparseMatrix {
                nrows,
                ncols,
                entries,
            })
        }
        Layout::Array => {
            if dims.len() != 2 {
                return Err(parse_err(size_no, "size line must be 'rows cols'"));
            }
            let nrows = parse_usize(dims[0], size_no)?;
            let ncols = parse_usize(dims[1], size_no)?;
            if symmetric && nrows != ncols {
                return Err(parse_err(size_no, "symmetric matrices must be square"));
            }
            // Column-major dense values; symmetric array files store the
            // lower triangle of each column.
            let expected = if symmetric {
                nrows * (nrows + 1) / 2
            } else {
                nrows * ncols
            };
            let mut values = Vec::with_capacity(expected);
            for (i, line) in lines {
                let line_no = i + 1;
                let line = line?;
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('%') {
                    continue;
                }
                for tok in trimmed.split_whitespace() {
                    values.push((parse_f64(tok, line_no)?, line_no));
                }
            }
            if values.len() != expected {
                return Err(parse_err(
                    size_no,
                    format!("expected {expected} values, found {}", values.len()),
                ));
            }
            let mut entries = Vec::new();
            let mut it = values.into_iter();
            for j in 0..ncols {
                let start = if symmetric { j } else { 0 };
                for i in start..nrows {
                    let (v, _) = it.next().expect("length checked above");
                    if v != 0.0 {
                        entries.push((i, j, v));
                        if symmetric && i != j {
                            entries.push((j, i, v));
                        }
                    }
                }
            }
            Ok(SparseMatrix {
                nrows,
                ncols,
                entries,
            })
        }
    }
}
