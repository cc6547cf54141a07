//! Matrix Market coordinate format.
//!
//! Reads `real`, `double`, `integer`, `complex` (real part kept) and
//! `pattern` fields with `general`, `symmetric`, `skew-symmetric` or
//! `hermitian` symmetry. Symmetric variants are expanded to full storage.
//! Dense `array` files are rejected.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use magnus_core::{col_index_width, csr_from_triplets, ColIndex, CsrMatrix};

use crate::error::{BenchError, Result};
use crate::matrix::AnyCsr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    Real,
    Complex,
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
    Hermitian,
}

fn parse_err(line: usize, msg: impl Into<String>) -> BenchError {
    BenchError::Parse { line, msg: msg.into() }
}

fn parse_header(line_no: usize, line: &str) -> Result<(Field, Symmetry)> {
    let tokens: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(line_no, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    match tokens[2].as_str() {
        "coordinate" => {}
        "array" => return Err(parse_err(line_no, "dense array format is not supported")),
        other => return Err(parse_err(line_no, format!("unknown format '{other}'"))),
    }
    let field = match tokens[3].as_str() {
        "real" | "double" | "integer" => Field::Real,
        "complex" => Field::Complex,
        "pattern" => Field::Pattern,
        other => return Err(parse_err(line_no, format!("unknown field '{other}'"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        "hermitian" => Symmetry::Hermitian,
        other => return Err(parse_err(line_no, format!("unknown symmetry '{other}'"))),
    };
    Ok((field, symmetry))
}

fn parse_num<T: std::str::FromStr>(line_no: usize, tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line_no, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line_no, format!("cannot parse {what} '{tok}'")))
}

/// Parses a coordinate file into triplets with 0-based indices.
/// `(n_rows, n_cols, entries)` of a parsed file.
pub type Triplets = (usize, usize, Vec<(usize, usize, f64)>);

pub fn parse_triplets<R: BufRead>(reader: R) -> Result<Triplets> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (line_no, header) = match lines.next() {
        Some((n, l)) => (n, l.map_err(|e| parse_err(n, e.to_string()))?),
        None => return Err(parse_err(1, "empty file")),
    };
    let (field, symmetry) = parse_header(line_no, &header)?;

    let mut size = None;
    let mut triplets = Vec::new();
    let mut declared = 0usize;
    let mut read = 0usize;
    let mut last = line_no;
    for (line_no, line) in lines {
        last = line_no;
        let line = line.map_err(|e| parse_err(line_no, e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut tok = trimmed.split_whitespace();
        let Some((n_rows, n_cols)) = size else {
            let r: usize = parse_num(line_no, tok.next(), "row count")?;
            let c: usize = parse_num(line_no, tok.next(), "column count")?;
            declared = parse_num(line_no, tok.next(), "entry count")?;
            if tok.next().is_some() {
                return Err(parse_err(line_no, "size line has more than three fields"));
            }
            if symmetry != Symmetry::General && r != c {
                return Err(parse_err(line_no, "symmetric matrix must be square"));
            }
            size = Some((r, c));
            triplets.reserve(declared.min(1 << 26));
            continue;
        };
        if read == declared {
            return Err(parse_err(line_no, format!("more than the declared {declared} entries")));
        }
        let i: usize = parse_num(line_no, tok.next(), "row index")?;
        let j: usize = parse_num(line_no, tok.next(), "column index")?;
        if i == 0 || j == 0 || i > n_rows || j > n_cols {
            return Err(parse_err(line_no, format!("entry ({i}, {j}) outside a {n_rows}x{n_cols} matrix")));
        }
        let v = match field {
            Field::Pattern => 1.0,
            Field::Real => parse_num(line_no, tok.next(), "value")?,
            Field::Complex => {
                let re: f64 = parse_num(line_no, tok.next(), "real part")?;
                let _im: f64 = parse_num(line_no, tok.next(), "imaginary part")?;
                re
            }
        };
        if tok.next().is_some() {
            return Err(parse_err(line_no, "entry line has trailing fields"));
        }
        let (i, j) = (i - 1, j - 1);
        triplets.push((i, j, v));
        if i != j {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric | Symmetry::Hermitian => triplets.push((j, i, v)),
                Symmetry::SkewSymmetric => triplets.push((j, i, -v)),
            }
        }
        read += 1;
    }
    let Some((n_rows, n_cols)) = size else {
        return Err(parse_err(last, "missing size line"));
    };
    if read != declared {
        return Err(parse_err(last, format!("declared {declared} entries but found {read}")));
    }
    Ok((n_rows, n_cols, triplets))
}

pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<AnyCsr> {
    let (n_rows, n_cols, triplets) = parse_triplets(reader)?;
    Ok(if col_index_width(n_cols as u64) == 4 {
        AnyCsr::U32(csr_from_triplets(&triplets, n_rows, n_cols)?)
    } else {
        AnyCsr::U64(csr_from_triplets(&triplets, n_rows, n_cols)?)
    })
}

/// Reads a file, choosing 4-byte column indices when the column count
/// allows.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<AnyCsr> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| BenchError::io(path, e))?;
    parse_matrix_market(BufReader::new(file))
}

/// Writes `m` as a general real coordinate file. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_matrix_market_to<I: ColIndex, W: Write>(m: &CsrMatrix<I>, mut out: W) -> std::io::Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", m.n_rows(), m.n_cols(), m.nnz())?;
    for (i, j, v) in m.triplets() {
        writeln!(out, "{} {} {}", i + 1, j + 1, v)?;
    }
    out.flush()
}

pub fn write_matrix_market<I: ColIndex>(m: &CsrMatrix<I>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| BenchError::io(path, e))?;
    write_matrix_market_to(m, BufWriter::new(file)).map_err(|e| BenchError::io(path, e))
}
