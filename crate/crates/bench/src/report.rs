//! CSV and JSON output of benchmark records.
//!
//! Column order is the field order of the record type; the expected headers
//! are pinned here and checked by tests so the schema only changes on
//! purpose.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;

pub const MICROBENCH_HEADER: &[&str] = &[
    "benchmark",
    "size",
    "length",
    "n_chunks",
    "workers",
    "rep",
    "seconds",
    "rate",
    "checksum_ok",
];

pub const SPGEMM_HEADER: &[&str] = &[
    "input",
    "algo",
    "threads",
    "rep",
    "setup",
    "symbolic",
    "numeric",
    "canonicalize",
    "total",
    "rows_sort",
    "rows_dense",
    "rows_fine",
    "rows_coarse",
    "coarse_batches",
    "n_inter_prod",
    "nnz_c",
    "ideal_seconds",
    "ideal_ratio",
    "verified",
];

pub const VERIFY_HEADER: &[&str] = &[
    "case",
    "pass",
    "rows_sort",
    "rows_dense",
    "rows_fine",
    "rows_coarse",
    "max_rel_err",
    "detail",
];

pub fn write_csv<T: Serialize, W: Write>(records: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn csv_string<T: Serialize>(records: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// Records as a JSON array, one object per record.
pub fn write_json<T: Serialize, W: Write>(records: &[T], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, records)?;
    writeln!(out).map_err(|e| crate::error::BenchError::io("<json>", e))?;
    Ok(())
}

/// Header line produced for a record type.
pub fn header_of<T: Serialize>(sample: &T) -> Result<Vec<String>> {
    let text = csv_string(std::slice::from_ref(sample))?;
    Ok(text
        .lines()
        .next()
        .unwrap_or_default()
        .split(',')
        .map(str::to_owned)
        .collect())
}
