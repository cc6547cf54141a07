//! Matrix sources for the CLI: a file path or an inline generator spec.
//!
//! Generator specs look like `rmat:scale=10,ef=16`, `er:rows=64,cols=4096,nnz=32`
//! or `banded:n=1000,hw=3`. Optional keys: `seed`, `values=ones|uniform`,
//! and for `er` used as `B`, `lazy=1` to materialize only the rows that `A`
//! references.

use std::collections::BTreeMap;
use std::path::Path;

use magnus_core::generate::{gen_uniform_random_masked, BandedParams, ErParams, RmatParams, ValueMode};
use magnus_core::{col_index_width, gen_banded, gen_rmat, CsrMatrix};

use crate::binfmt::{read_binary, write_binary};
use crate::error::{BenchError, Result};
use crate::matrix::AnyCsr;
use crate::mtx::{read_matrix_market, write_matrix_market};

pub fn parse_values(s: &str) -> Result<ValueMode> {
    match s {
        "ones" => Ok(ValueMode::Ones),
        "uniform" => Ok(ValueMode::Uniform),
        other => Err(BenchError::config(format!("unknown value mode '{other}', expected ones or uniform"))),
    }
}

struct Spec {
    kind: String,
    keys: BTreeMap<String, String>,
}

impl Spec {
    fn parse(text: &str) -> Result<Self> {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut keys = BTreeMap::new();
        for kv in rest.split(',').filter(|s| !s.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| BenchError::config(format!("expected key=value in '{kv}'")))?;
            keys.insert(k.trim().to_owned(), v.trim().to_owned());
        }
        Ok(Self {
            kind: kind.to_owned(),
            keys,
        })
    }

    fn num<T: std::str::FromStr>(&mut self, key: &str, default: Option<T>) -> Result<T> {
        match self.keys.remove(key) {
            Some(v) => v
                .parse()
                .map_err(|_| BenchError::config(format!("{}: cannot parse {key}={v}", self.kind))),
            None => default.ok_or_else(|| BenchError::config(format!("{}: missing {key}=", self.kind))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.keys.keys().next() {
            Some(k) => Err(BenchError::config(format!("{}: unknown key '{k}'", self.kind))),
            None => Ok(()),
        }
    }
}

fn is_generator(text: &str) -> bool {
    ["rmat:", "er:", "banded:"].iter().any(|p| text.starts_with(p))
}

/// Loads `text` as a file or generator spec. `rows_needed` restricts a
/// lazy `er` source to the listed rows.
pub fn load(text: &str, seed: u64, rows_needed: Option<&[bool]>) -> Result<AnyCsr> {
    if !is_generator(text) {
        return read_path(Path::new(text));
    }
    let mut spec = Spec::parse(text)?;
    let seed = spec.num("seed", Some(seed))?;
    let values = parse_values(&spec.num("values", Some("ones".to_owned()))?)?;
    let m = match spec.kind.as_str() {
        "rmat" => {
            let scale = spec.num("scale", None)?;
            let ef = spec.num("ef", Some(16))?;
            let mut p = RmatParams::graph500(scale, ef, seed);
            p.a = spec.num("a", Some(p.a))?;
            p.b = spec.num("b", Some(p.b))?;
            p.c = spec.num("c", Some(p.c))?;
            p.values = values;
            spec.finish()?;
            AnyCsr::U32(gen_rmat(&p)?)
        }
        "er" => {
            let rows = spec.num("rows", None)?;
            let cols = spec.num("cols", None)?;
            let nnz = spec.num("nnz", None)?;
            let lazy: u8 = spec.num("lazy", Some(0))?;
            spec.finish()?;
            let p = ErParams::new(rows, cols, nnz, seed).values(values);
            let keep = |i: usize| lazy == 0 || rows_needed.is_none_or(|r| r.get(i).copied().unwrap_or(false));
            if col_index_width(cols as u64) == 4 {
                AnyCsr::U32(gen_uniform_random_masked(&p, keep)?)
            } else {
                AnyCsr::U64(gen_uniform_random_masked(&p, keep)?)
            }
        }
        "banded" => {
            let n = spec.num("n", None)?;
            let hw = spec.num("hw", None)?;
            spec.finish()?;
            AnyCsr::U32(gen_banded(&BandedParams {
                n,
                half_width: hw,
                seed,
                values,
            })?)
        }
        _ => unreachable!(),
    };
    Ok(m)
}

/// Columns of `a` that hold at least one entry.
pub fn referenced_columns(a: &AnyCsr) -> Vec<bool> {
    fn mark<I: magnus_core::ColIndex>(m: &CsrMatrix<I>) -> Vec<bool> {
        let mut used = vec![false; m.n_cols()];
        for &c in m.col() {
            used[c.to_usize()] = true;
        }
        used
    }
    match a {
        AnyCsr::U32(m) => mark(m),
        AnyCsr::U64(m) => mark(m),
    }
}

fn extension(path: &Path) -> &str {
    path.extension().and_then(|e| e.to_str()).unwrap_or("")
}

pub fn read_path(path: &Path) -> Result<AnyCsr> {
    match extension(path) {
        "mtx" => read_matrix_market(path),
        "csrb" => read_binary(path),
        other => Err(BenchError::config(format!(
            "{}: unknown matrix extension '{other}', expected .mtx or .csrb",
            path.display()
        ))),
    }
}

pub fn write_path(m: &AnyCsr, path: &Path) -> Result<()> {
    match (extension(path), m) {
        ("mtx", AnyCsr::U32(m)) => write_matrix_market(m, path),
        ("mtx", AnyCsr::U64(m)) => write_matrix_market(m, path),
        ("csrb", AnyCsr::U32(m)) => write_binary(m, path),
        ("csrb", AnyCsr::U64(m)) => write_binary(m, path),
        (other, _) => Err(BenchError::config(format!(
            "{}: unknown matrix extension '{other}', expected .mtx or .csrb",
            path.display()
        ))),
    }
}
