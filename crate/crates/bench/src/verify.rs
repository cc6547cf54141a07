//! The `verify` command: an oracle-equivalence corpus run through every
//! algorithm, including toy cache sizes that force each row category.

use magnus_core::generate::{gen_banded, gen_rmat, gen_uniform_random, BandedParams, ErParams, RmatParams, ValueMode};
use magnus_core::magnus::{magnus_setup, magnus_symbolic};
use magnus_core::product::counter;
use magnus_core::{csr_from_triplets, rng, spgemm_gustavson, spgemm_magnus, spgemm_reference};
use magnus_core::{AccumThresholds, Baseline, CsrMatrix, MagnusOptions, SystemParams};
use rand::Rng;
use serde::Serialize;

use crate::error::{BenchError, Result};

#[derive(Clone, Debug)]
pub struct Case {
    pub name: String,
    pub a: CsrMatrix<u32>,
    pub b: CsrMatrix<u32>,
    pub sys: SystemParams,
    pub force_fine_only: bool,
    /// Integer-valued inputs must match exactly; real-valued ones within a
    /// relative error of 1e-5.
    pub integer_values: bool,
}

/// Outcome of one case. CSV column order follows field order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseReport {
    pub case: String,
    pub pass: bool,
    pub rows_sort: u64,
    pub rows_dense: u64,
    pub rows_fine: u64,
    pub rows_coarse: u64,
    pub max_rel_err: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Number of small random cases.
    pub random_cases: usize,
    /// Only run cases whose name contains this string.
    pub filter: Option<String>,
    /// Test hook: corrupt one output value of every case whose name
    /// contains this string.
    pub inject_fault: Option<String>,
    pub parallel: bool,
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub cases: Vec<CaseReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseReport> {
        self.cases.iter().filter(|c| !c.pass)
    }

    /// Category counters summed over all cases.
    pub fn category_totals(&self) -> [u64; 4] {
        self.cases.iter().fold([0; 4], |t, c| {
            [
                t[0] + c.rows_sort,
                t[1] + c.rows_dense,
                t[2] + c.rows_fine,
                t[3] + c.rows_coarse,
            ]
        })
    }
}

pub fn toy_system(l2_bytes: usize, memory_budget_bytes: u64) -> SystemParams {
    SystemParams {
        l2_bytes,
        memory_budget_bytes,
        ..SystemParams::default()
    }
}

/// Random sparse matrix with about `density·rows·cols` entries. Integer
/// values lie in [-4, 4]; real values in (-1, 1).
pub fn random_matrix(rows: usize, cols: usize, density: f64, integer: bool, seed: u64, key: u64) -> CsrMatrix<u32> {
    let mut g = rng::substream(seed, key);
    let mut t = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if g.random::<f64>() < density {
                let v = if integer {
                    g.random_range(-4i32..=4) as f64
                } else {
                    g.random::<f64>() * 2.0 - 1.0
                };
                t.push((i, j, v));
            }
        }
    }
    csr_from_triplets(&t, rows, cols).expect("entries are in range")
}

/// Symmetric adjacency of disjoint complete bipartite blocks `K(p, q)`;
/// squaring it fills each side of every block densely.
pub fn bipartite_blocks(blocks: &[(usize, usize)]) -> CsrMatrix<u32> {
    let n: usize = blocks.iter().map(|(p, q)| p + q).sum();
    let mut t = Vec::new();
    let mut base = 0;
    for &(p, q) in blocks {
        for i in 0..p {
            for j in 0..q {
                t.push((base + i, base + p + j, 1.0));
                t.push((base + p + j, base + i, 1.0));
            }
        }
        base += p + q;
    }
    csr_from_triplets(&t, n, n).expect("entries are in range")
}

const DENSITIES: [f64; 7] = [0.0, 0.005, 0.02, 0.08, 0.25, 0.6, 1.0];

fn er(rows: usize, cols: usize, per_row: usize, seed: u64, values: ValueMode) -> CsrMatrix<u32> {
    gen_uniform_random(&ErParams::new(rows, cols, per_row, seed).values(values)).expect("valid parameters")
}

/// Small random products (dimensions in [1, 128], densities from empty to
/// full, three in four integer-valued) followed by structured cases under
/// toy cache sizes that reach every row category.
pub fn oracle_corpus(seed: u64, random_cases: usize) -> Vec<Case> {
    let mut cases = Vec::new();
    let mut g = rng::substream(seed, u64::MAX);
    for k in 0..random_cases {
        let square = k % 2 == 0;
        let n = g.random_range(1..=128usize);
        let inner = if square { n } else { g.random_range(1..=128usize) };
        let m = if square { n } else { g.random_range(1..=128usize) };
        let da = DENSITIES[g.random_range(0..DENSITIES.len())];
        let db = DENSITIES[g.random_range(0..DENSITIES.len())];
        let integer = k % 4 != 3;
        let a = random_matrix(n, inner, da, integer, seed, 2 * k as u64);
        let b = if square && k % 3 == 0 {
            a.clone()
        } else {
            random_matrix(inner, m, db, integer, seed, 2 * k as u64 + 1)
        };
        cases.push(Case {
            name: format!("random-{k:03}-{n}x{inner}x{m}"),
            a,
            b,
            sys: SystemParams::default(),
            force_fine_only: false,
            integer_values: integer,
        });
    }

    let values = ValueMode::Ones;
    let a_small = er(48, 64, 16, seed ^ 1, values);
    let a_real = er(48, 64, 16, seed ^ 2, ValueMode::Uniform);
    let shapes: Vec<(&str, CsrMatrix<u32>, CsrMatrix<u32>, bool)> = vec![
        ("wide", a_small.clone(), er(64, 1 << 16, 24, seed ^ 3, values), true),
        ("mid", a_small.clone(), er(64, 5000, 24, seed ^ 4, values), true),
        ("narrow", a_small, er(64, 300, 24, seed ^ 5, values), true),
        ("wide-real", a_real, er(64, 1 << 16, 24, seed ^ 6, ValueMode::Uniform), false),
        (
            "banded",
            gen_banded(&BandedParams {
                n: 96,
                half_width: 2,
                seed,
                values,
            })
            .unwrap(),
            gen_banded(&BandedParams {
                n: 96,
                half_width: 40,
                seed: seed ^ 7,
                values,
            })
            .unwrap(),
            true,
        ),
        (
            "rmat",
            gen_rmat(&RmatParams::graph500(8, 8, seed)).unwrap(),
            gen_rmat(&RmatParams::graph500(8, 8, seed)).unwrap(),
            true,
        ),
    ];
    for l2 in [4usize << 10, 64 << 10, 1 << 20] {
        for (budget_name, budget) in [("tight", 16u64 << 10), ("loose", 1 << 30)] {
            for (shape, a, b, integer) in &shapes {
                for force in [false, true] {
                    cases.push(Case {
                        name: format!(
                            "toy-l2-{}k-{budget_name}-{shape}{}",
                            l2 >> 10,
                            if force { "-fine-only" } else { "" }
                        ),
                        a: a.clone(),
                        b: b.clone(),
                        sys: toy_system(l2, budget),
                        force_fine_only: force,
                        integer_values: *integer,
                    });
                }
            }
        }
    }

    for (k, blocks) in [vec![(20, 20)], vec![(8, 30), (25, 25), (3, 50)], vec![(60, 60)]]
        .into_iter()
        .enumerate()
    {
        let a = bipartite_blocks(&blocks);
        for l2 in [4usize << 10, 1 << 20] {
            cases.push(Case {
                name: format!("bipartite-{k}-l2-{}k", l2 >> 10),
                a: a.clone(),
                b: a.clone(),
                sys: toy_system(l2, 1 << 30),
                force_fine_only: false,
                integer_values: true,
            });
        }
    }
    cases
}

fn max_rel_err(got: &CsrMatrix<u32>, want: &CsrMatrix<u32>) -> f64 {
    got.val()
        .iter()
        .zip(want.val())
        .map(|(&g, &w)| {
            if g == w {
                0.0
            } else {
                (g - w).abs() / w.abs().max(f64::MIN_POSITIVE)
            }
        })
        .fold(0.0, f64::max)
}

fn same_structure(x: &CsrMatrix<u32>, y: &CsrMatrix<u32>) -> bool {
    x.n_rows() == y.n_rows() && x.n_cols() == y.n_cols() && x.row_ptr() == y.row_ptr() && x.col() == y.col()
}

pub fn run_case(case: &Case, parallel: bool, inject_fault: bool) -> Result<CaseReport> {
    let want = spgemm_reference(&case.a, &case.b)?;
    let opts = MagnusOptions {
        force_fine_only: case.force_fine_only,
        thresholds: AccumThresholds::default(),
        parallel,
    };
    let magnus = spgemm_magnus(&case.a, &case.b, &case.sys, &opts)?;
    let mut failures = Vec::new();
    let mut c = magnus.c.clone();
    if inject_fault {
        let (r, cc, ptr, col, mut val) = c.into_raw_parts();
        match val.first_mut() {
            Some(v) => *v += 1.0,
            None => failures.push("fault injected into an empty product".to_owned()),
        }
        c = CsrMatrix::from_raw_parts(r, cc, ptr, col, val)?;
    }
    let mut worst: f64 = 0.0;
    let mut check = |name: &str, got: &CsrMatrix<u32>| {
        if !same_structure(got, &want) {
            failures.push(format!("{name}: structure differs"));
            return;
        }
        let err = max_rel_err(got, &want);
        worst = worst.max(err);
        let ok = if case.integer_values { err == 0.0 } else { err <= 1e-5 };
        if !ok {
            failures.push(format!("{name}: max relative error {err:e}"));
        }
    };

    check("magnus", &c);
    for (name, baseline) in [("gustavson-dense", Baseline::Dense), ("esc", Baseline::Esc)] {
        check(name, &spgemm_gustavson(&case.a, &case.b, baseline, parallel)?.c);
    }
    let setup = magnus_setup(&case.a, &case.b, &case.sys, &opts)?;
    let row_ptr = magnus_symbolic(&case.a, &case.b, &setup, &case.sys, &opts)?;
    if row_ptr != want.row_ptr() {
        failures.push("magnus symbolic row pointer differs".to_owned());
    }

    Ok(CaseReport {
        case: case.name.clone(),
        pass: failures.is_empty(),
        rows_sort: magnus.counter(counter::ROWS_SORT),
        rows_dense: magnus.counter(counter::ROWS_DENSE),
        rows_fine: magnus.counter(counter::ROWS_FINE),
        rows_coarse: magnus.counter(counter::ROWS_COARSE),
        max_rel_err: worst,
        detail: failures.join("; "),
    })
}

/// Runs the selected part of the corpus. Selecting no case is a
/// configuration error; failing cases are reported, not returned as
/// errors.
pub fn verify_command(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let corpus: Vec<Case> = oracle_corpus(cfg.seed, cfg.random_cases)
        .into_iter()
        .filter(|c| cfg.filter.as_ref().is_none_or(|f| c.name.contains(f.as_str())))
        .collect();
    if corpus.is_empty() {
        return Err(BenchError::config("no verification case matches the selection"));
    }
    let cases = corpus
        .iter()
        .map(|c| {
            let fault = cfg.inject_fault.as_ref().is_some_and(|f| c.name.contains(f.as_str()));
            run_case(c, cfg.parallel, fault)
        })
        .collect::<Result<_>>()?;
    Ok(VerifyReport { cases })
}
