//! Compact binary CSR cache; layout in `docs/binary-format.md`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use magnus_core::{ColIndex, CsrMatrix};

use crate::error::{BenchError, Result};
use crate::matrix::AnyCsr;

pub const MAGIC: [u8; 8] = *b"MAGNUSCR";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 40;

pub fn write_binary_to<I: ColIndex, W: Write>(m: &CsrMatrix<I>, out: W) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    out.write_all(&MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&[I::BYTES as u8, 8, 8, m.is_canonical() as u8])?;
    for x in [m.n_rows(), m.n_cols(), m.nnz()] {
        out.write_all(&(x as u64).to_le_bytes())?;
    }
    for &p in m.row_ptr() {
        out.write_all(&(p as u64).to_le_bytes())?;
    }
    for &c in m.col() {
        let c = c.to_usize() as u64;
        if I::BYTES == 4 {
            out.write_all(&(c as u32).to_le_bytes())?;
        } else {
            out.write_all(&c.to_le_bytes())?;
        }
    }
    for &v in m.val() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()
}

pub fn write_binary<I: ColIndex>(m: &CsrMatrix<I>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| BenchError::io(path, e))?;
    write_binary_to(m, file).map_err(|e| BenchError::io(path, e))
}

fn bad(msg: impl Into<String>) -> BenchError {
    BenchError::Format(msg.into())
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|e| bad(format!("truncated while reading {what}: {e}")))
}

fn read_u64s(r: &mut impl Read, n: usize, what: &str) -> Result<Vec<u64>> {
    let mut bytes = vec![0u8; n.checked_mul(8).ok_or_else(|| bad("length overflow"))?];
    read_exact(r, &mut bytes, what)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn to_usize(x: u64, what: &str) -> Result<usize> {
    usize::try_from(x).map_err(|_| bad(format!("{what} {x} does not fit this platform")))
}

pub fn read_binary_from<R: Read>(mut r: R) -> Result<AnyCsr> {
    let mut header = [0u8; HEADER_LEN];
    read_exact(&mut r, &mut header, "header")?;
    if header[..8] != MAGIC {
        return Err(bad("wrong magic bytes"));
    }
    let version = u32::from_le_bytes(header[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let (col_w, ptr_w, val_w) = (header[12], header[13], header[14]);
    if !(col_w == 4 || col_w == 8) || ptr_w != 8 || val_w != 8 {
        return Err(bad(format!(
            "unsupported widths: col {col_w}, row pointer {ptr_w}, value {val_w}"
        )));
    }
    let field = |k: usize| u64::from_le_bytes(header[16 + 8 * k..24 + 8 * k].try_into().unwrap());
    let n_rows = to_usize(field(0), "row count")?;
    let n_cols = to_usize(field(1), "column count")?;
    let nnz = to_usize(field(2), "nnz")?;

    let row_ptr = read_u64s(&mut r, n_rows.checked_add(1).ok_or_else(|| bad("row count overflow"))?, "row pointer")?
        .into_iter()
        .map(|p| to_usize(p, "row pointer entry"))
        .collect::<Result<Vec<_>>>()?;
    let cols: Vec<u64> = if col_w == 4 {
        let mut bytes = vec![0u8; nnz.checked_mul(4).ok_or_else(|| bad("length overflow"))?];
        read_exact(&mut r, &mut bytes, "column indices")?;
        bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as u64)
            .collect()
    } else {
        read_u64s(&mut r, nnz, "column indices")?
    };
    let vals: Vec<f64> = read_u64s(&mut r, nnz, "values")?
        .into_iter()
        .map(f64::from_bits)
        .collect();
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(|e| bad(e.to_string()))? != 0 {
        return Err(bad("trailing bytes after the value array"));
    }

    Ok(if col_w == 4 {
        let cols = cols.into_iter().map(|c| c as u32).collect();
        AnyCsr::U32(CsrMatrix::from_raw_parts(n_rows, n_cols, row_ptr, cols, vals)?)
    } else {
        AnyCsr::U64(CsrMatrix::from_raw_parts(n_rows, n_cols, row_ptr, cols, vals)?)
    })
}

pub fn read_binary(path: impl AsRef<Path>) -> Result<AnyCsr> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| BenchError::io(path, e))?;
    read_binary_from(BufReader::new(file))
}
