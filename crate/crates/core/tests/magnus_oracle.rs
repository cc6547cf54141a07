use magnus_core::generate::{gen_banded, gen_rmat, gen_uniform_random, BandedParams, ErParams, RmatParams, ValueMode};
use magnus_core::gustavson::{spgemm_gustavson, spgemm_reference, Baseline};
use magnus_core::magnus::{magnus_setup, spgemm_magnus, MagnusOptions, SystemParams};
use magnus_core::{csr_from_triplets, AccumThresholds, CsrMatrix};
use proptest::prelude::*;

fn toy(l2: usize, budget: u64) -> SystemParams {
    SystemParams {
        l2_bytes: l2,
        memory_budget_bytes: budget,
        ..SystemParams::default()
    }
}

fn serial() -> MagnusOptions {
    MagnusOptions {
        parallel: false,
        ..MagnusOptions::default()
    }
}

fn assert_all_agree(a: &CsrMatrix, b: &CsrMatrix, sys: &SystemParams, opts: &MagnusOptions) {
    let want = spgemm_reference(a, b).unwrap();
    let got = spgemm_magnus(a, b, sys, opts).unwrap();
    assert!(got.c.bit_identical(&want), "magnus differs from reference");
    for baseline in [Baseline::Dense, Baseline::Esc] {
        let g = spgemm_gustavson(a, b, baseline, opts.parallel).unwrap();
        assert!(g.c.bit_identical(&want), "{baseline:?} differs from reference");
    }
}

fn matrix(rows: usize, cols: usize, entries: &[(usize, usize, i16)]) -> CsrMatrix {
    let t: Vec<_> = entries
        .iter()
        .map(|&(r, c, v)| (r % rows, c % cols, v as f64 / 64.0))
        .collect();
    csr_from_triplets(&t, rows, cols).unwrap()
}

#[test]
fn generated_inputs_on_toy_caches() {
    let a = gen_uniform_random(&ErParams::new(48, 64, 16, 7).values(ValueMode::Uniform)).unwrap();
    let wide = gen_uniform_random(&ErParams::new(64, 1 << 16, 24, 8).values(ValueMode::Uniform)).unwrap();
    let mid = gen_uniform_random(&ErParams::new(64, 5000, 24, 9).values(ValueMode::Uniform)).unwrap();
    let band = gen_banded::<u32>(&BandedParams {
        n: 64,
        half_width: 3,
        seed: 3,
        values: ValueMode::Uniform,
    })
    .unwrap();
    for l2 in [1 << 12, 1 << 16, 1 << 20] {
        for budget in [1 << 14, 1 << 30] {
            let sys = toy(l2, budget);
            for b in [&wide, &mid] {
                for force in [false, true] {
                    let opts = MagnusOptions {
                        force_fine_only: force,
                        ..serial()
                    };
                    assert_all_agree(&a, b, &sys, &opts);
                }
            }
            assert_all_agree(&band, &band, &sys, &serial());
        }
    }
}

#[test]
fn numeric_equals_dense_baseline_across_cache_sizes() {
    let a: CsrMatrix = gen_uniform_random(&ErParams::new(40, 64, 12, 21)).unwrap();
    let b: CsrMatrix = gen_uniform_random(&ErParams::new(64, 1 << 18, 40, 22)).unwrap();
    let want = spgemm_gustavson(&a, &b, Baseline::Dense, false).unwrap().c;
    let mut seen = [false; 4];
    for log_l2 in 12..=22 {
        let sys = toy(1 << log_l2, 1 << 16);
        let got = spgemm_magnus(&a, &b, &sys, &serial()).unwrap();
        assert!(got.c.bit_identical(&want), "l2 = 2^{log_l2}");
        let cats = magnus_setup(&a, &b, &sys, &serial()).unwrap().categories;
        for (s, rows) in seen.iter_mut().zip([&cats.sort_rows, &cats.dense_rows, &cats.fine_rows, &cats.coarse_rows]) {
            *s |= !rows.is_empty();
        }
    }
    assert_eq!(seen, [false, true, true, true]);
}

#[test]
fn rmat_square() {
    let g = gen_rmat::<u32>(&RmatParams {
        values: ValueMode::Uniform,
        ..RmatParams::graph500(10, 8, 42)
    })
    .unwrap();
    for sys in [toy(1 << 12, 1 << 14), SystemParams::default()] {
        assert_all_agree(&g, &g, &sys, &serial());
    }
}

#[test]
fn parallel_matches_serial_bitwise() {
    let a: CsrMatrix = gen_uniform_random(&ErParams::new(200, 300, 20, 1).values(ValueMode::Uniform)).unwrap();
    let b = gen_uniform_random(&ErParams::new(300, 1 << 16, 30, 2).values(ValueMode::Uniform)).unwrap();
    let sys = toy(1 << 12, 1 << 16);
    let s = spgemm_magnus(&a, &b, &sys, &serial()).unwrap();
    let p = spgemm_magnus(
        &a,
        &b,
        &sys,
        &MagnusOptions {
            parallel: true,
            ..MagnusOptions::default()
        },
    )
    .unwrap();
    assert!(s.c.bit_identical(&p.c));
    assert_eq!(s.counters, p.counters);
}

#[test]
fn wide_index_path() {
    let a = gen_uniform_random::<u64>(&ErParams::new(20, 20, 5, 1)).unwrap();
    let b = gen_uniform_random::<u64>(&ErParams::new(20, 4000, 50, 2)).unwrap();
    let want = spgemm_reference(&a, &b).unwrap();
    let got = spgemm_magnus(&a, &b, &toy(1 << 12, 1 << 30), &serial()).unwrap();
    assert!(got.c.bit_identical(&want));
}

#[test]
fn empty_and_degenerate_shapes() {
    let sys = SystemParams::default();
    for (m, k, n) in [(0, 0, 0), (0, 3, 4), (3, 0, 4), (3, 4, 0), (1, 1, 1)] {
        let a = CsrMatrix::<u32>::zeros(m, k);
        let b = CsrMatrix::<u32>::zeros(k, n);
        let c = spgemm_magnus(&a, &b, &sys, &serial()).unwrap().c;
        assert_eq!((c.n_rows(), c.n_cols(), c.nnz()), (m, n, 0));
    }
}

#[test]
fn dimension_mismatch_is_rejected() {
    let a = CsrMatrix::<u32>::zeros(2, 3);
    let b = CsrMatrix::<u32>::zeros(4, 2);
    assert!(spgemm_magnus(&a, &b, &SystemParams::default(), &serial()).is_err());
}

#[test]
fn over_budget_row_is_an_error() {
    let a: CsrMatrix = gen_uniform_random(&ErParams::new(4, 64, 16, 7)).unwrap();
    let b = gen_uniform_random(&ErParams::new(64, 1 << 16, 64, 8)).unwrap();
    let err = spgemm_magnus(&a, &b, &toy(1 << 12, 64), &serial()).unwrap_err();
    assert!(matches!(err, magnus_core::Error::OverBudget { .. }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn random_products_match_reference(
        (rows, inner, cols) in (1usize..24, 1usize..24, prop::sample::select(vec![1usize, 7, 64, 700, 5000, 40000, 65536])),
        ea in prop::collection::vec((0usize..1000, 0usize..1000, any::<i16>()), 0..200),
        eb in prop::collection::vec((0usize..1000, 0usize..1 << 16, any::<i16>()), 0..1500),
        l2 in prop::sample::select(vec![1usize << 12, 1 << 16, 1 << 20]),
        budget in prop::sample::select(vec![1u64 << 12, 1 << 30]),
        crossover in prop::sample::select(vec![0usize, 8, 256]),
        force in any::<bool>(),
    ) {
        let a = matrix(rows, inner, &ea);
        let b = matrix(inner, cols, &eb);
        let opts = MagnusOptions {
            force_fine_only: force,
            thresholds: AccumThresholds { sort_dense_crossover: crossover, sort_sweet_spot: 32 },
            parallel: false,
        };
        let want = spgemm_reference(&a, &b).unwrap();
        match spgemm_magnus(&a, &b, &toy(l2, budget), &opts) {
            Ok(got) => prop_assert!(got.c.bit_identical(&want)),
            Err(magnus_core::Error::OverBudget { .. }) => {
                let setup = magnus_setup(&a, &b, &toy(l2, budget), &opts).unwrap();
                prop_assert!(!setup.categories.coarse_rows.is_empty());
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}
