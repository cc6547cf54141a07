use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use magnus_bench::bandwidth::measure_bandwidth;
use magnus_bench::bound::{ideal_bound, IdealBoundInputs};
use magnus_bench::microbench::{microbench_building_blocks, StreamSpec};
use magnus_bench::report::{write_csv, write_json};
use magnus_bench::run::{run_spgemm_command, Algo, RunConfig};
use magnus_bench::source::{load, parse_values, referenced_columns, write_path};
use magnus_bench::sysinfo::detect_system_params;
use magnus_bench::verify::{verify_command, VerifyConfig};
use magnus_bench::{BenchError, Result};
use magnus_core::generate::{BandedParams, ErParams, RmatParams};
use magnus_core::magnus::compute_chunk_plan;
use magnus_core::{gen_banded, gen_rmat, gen_uniform_random, Phase, SystemParams};
use serde::Serialize;

/// Sparse matrix-matrix multiplication benchmarks.
///
/// Every flag can also be set through an environment variable named
/// MAGNUS_<FLAG> (upper case, dashes as underscores), e.g. MAGNUS_THREADS.
#[derive(Parser, Debug)]
#[command(name = "magnus", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Worker threads (default: all available).
    #[arg(long, global = true, env = "MAGNUS_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, env = "MAGNUS_SEED", default_value_t = 1)]
    seed: u64,
    /// L2 size in bytes (default: detected).
    #[arg(long, global = true, env = "MAGNUS_L2_BYTES")]
    l2_bytes: Option<usize>,
    /// Cache line size in bytes (default: detected).
    #[arg(long, global = true, env = "MAGNUS_CACHE_LINE")]
    cache_line: Option<usize>,
    /// Coarse-level batch budget in bytes (default: a quarter of memory).
    #[arg(long, global = true, env = "MAGNUS_MEM_BUDGET")]
    mem_budget: Option<u64>,
    /// Disable the coarse level.
    #[arg(long, global = true, env = "MAGNUS_FORCE_FINE_ONLY")]
    force_fine_only: bool,
    /// Write CSV records to this file instead of standard output.
    #[arg(long, global = true, env = "MAGNUS_CSV")]
    csv: Option<PathBuf>,
    /// Print records as JSON on standard output.
    #[arg(long, global = true, env = "MAGNUS_JSON")]
    json: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a matrix and write it as .mtx or .csrb.
    Gen(GenArgs),
    /// Time one SpGEMM algorithm.
    Spgemm(SpgemmArgs),
    /// Time the building blocks on a synthetic stream.
    Microbench(MicrobenchArgs),
    /// Evaluate the ideal-bound data-volume model.
    Bound(BoundArgs),
    /// Measure streaming bandwidth.
    Bandwidth(BandwidthArgs),
    /// Check every algorithm against the reference on a test corpus.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenKind {
    Rmat,
    Er,
    Banded,
}

#[derive(Args, Debug)]
struct GenArgs {
    kind: GenKind,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value = "ones")]
    values: String,
    /// R-mat: rows = 2^scale.
    #[arg(long)]
    scale: Option<u32>,
    #[arg(long, default_value_t = 16)]
    edge_factor: u64,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    nnz_per_row: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    half_width: Option<usize>,
}

#[derive(Args, Debug)]
struct SpgemmArgs {
    /// Left operand: a .mtx/.csrb path or a generator spec such as
    /// rmat:scale=10,ef=16 or er:rows=4096,cols=4194304,nnz=2.
    #[arg(long)]
    a: String,
    /// Right operand (default: same as A). An er spec with lazy=1 only
    /// materializes rows referenced by A.
    #[arg(long)]
    b: Option<String>,
    #[arg(long, env = "MAGNUS_ALGO", default_value = "magnus")]
    algo: String,
    #[arg(long, env = "MAGNUS_REPS", default_value_t = 10)]
    reps: usize,
    /// Bandwidth in bytes/s for the ideal-bound ratio.
    #[arg(long, conflicts_with = "measure_bandwidth")]
    bandwidth: Option<f64>,
    /// Measure bandwidth first and report the ideal-bound ratio.
    #[arg(long)]
    measure_bandwidth: bool,
    #[arg(long)]
    no_verify: bool,
}

#[derive(Args, Debug)]
struct MicrobenchArgs {
    #[arg(long, default_value_t = 1 << 24)]
    size: usize,
    /// Stream length (exclusive bound on indices); a power of two.
    #[arg(long, default_value_t = 1 << 24)]
    length: usize,
    /// log2 of the smallest chunk count in the sweep.
    #[arg(long, default_value_t = 0)]
    min_log_chunks: u32,
    /// log2 of the largest chunk count in the sweep.
    #[arg(long, default_value_t = 20)]
    max_log_chunks: u32,
    #[arg(long, env = "MAGNUS_REPS", default_value_t = 1)]
    reps: usize,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[arg(long)]
    n_a: u64,
    #[arg(long)]
    nnz_a: u64,
    #[arg(long)]
    n_inter_prod: u64,
    #[arg(long)]
    n_c: u64,
    #[arg(long)]
    nnz_c: u64,
    #[arg(long, default_value_t = 8)]
    s_row_ptr: u64,
    #[arg(long, default_value_t = 4)]
    s_col_idx: u64,
    #[arg(long, default_value_t = 8)]
    s_val: u64,
    /// Bytes per second.
    #[arg(long)]
    bandwidth: f64,
}

#[derive(Args, Debug)]
struct BandwidthArgs {
    #[arg(long, default_value_t = 256 << 20)]
    bytes: usize,
    #[arg(long, env = "MAGNUS_REPS", default_value_t = 10)]
    reps: usize,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Number of small random cases.
    #[arg(long, default_value_t = 200)]
    cases: usize,
    /// Only run cases whose name contains this string.
    #[arg(long)]
    filter: Option<String>,
    /// Corrupt the output of matching cases (tests the harness itself).
    #[arg(long, hide = true, env = "MAGNUS_INJECT_FAULT")]
    inject_fault: Option<String>,
}

impl Global {
    fn threads(&self) -> usize {
        self.threads
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    fn system_params(&self) -> SystemParams {
        let host = detect_system_params();
        let explicit = self.l2_bytes.is_some() && self.cache_line.is_some() && self.mem_budget.is_some();
        if !explicit {
            for w in &host.warnings {
                eprintln!("warning: {w}");
            }
        }
        let mut sys = host.sys;
        if let Some(v) = self.l2_bytes {
            sys.l2_bytes = v;
        }
        if let Some(v) = self.cache_line {
            sys.cache_line_bytes = v;
        }
        if let Some(v) = self.mem_budget {
            sys.memory_budget_bytes = v;
        }
        sys
    }

    fn emit<T: Serialize>(&self, records: &[T]) -> Result<()> {
        if let Some(path) = &self.csv {
            let file = File::create(path).map_err(|e| BenchError::io(path, e))?;
            write_csv(records, BufWriter::new(file))?;
        }
        let stdout = io::stdout().lock();
        if self.json {
            write_json(records, stdout)?;
        } else if self.csv.is_none() {
            write_csv(records, stdout)?;
        }
        Ok(())
    }
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| BenchError::config(format!("--{flag} is required here")))
}

fn gen(g: &Global, args: &GenArgs) -> Result<bool> {
    let values = parse_values(&args.values)?;
    let m: magnus_bench::AnyCsr = match args.kind {
        GenKind::Rmat => {
            let mut p = RmatParams::graph500(need(args.scale, "scale")?, args.edge_factor, g.seed);
            p.values = values;
            gen_rmat::<u32>(&p)?.into()
        }
        GenKind::Er => {
            let p = ErParams::new(
                need(args.rows, "rows")?,
                need(args.cols, "cols")?,
                need(args.nnz_per_row, "nnz-per-row")?,
                g.seed,
            )
            .values(values);
            if magnus_core::col_index_width(p.n_cols as u64) == 4 {
                gen_uniform_random::<u32>(&p)?.into()
            } else {
                gen_uniform_random::<u64>(&p)?.into()
            }
        }
        GenKind::Banded => gen_banded::<u32>(&BandedParams {
            n: need(args.n, "n")?,
            half_width: need(args.half_width, "half-width")?,
            seed: g.seed,
            values,
        })?
        .into(),
    };
    write_path(&m, &args.output)?;
    eprintln!(
        "wrote {}: {} x {}, {} nonzeros",
        args.output.display(),
        m.n_rows(),
        m.n_cols(),
        m.nnz()
    );
    Ok(true)
}

fn spgemm(g: &Global, args: &SpgemmArgs) -> Result<bool> {
    let algo: Algo = args.algo.parse()?;
    let algo = if g.force_fine_only && algo == Algo::Magnus {
        Algo::MagnusFineOnly
    } else {
        algo
    };
    let sys = g.system_params();
    let a = load(&args.a, g.seed, None)?;
    let b = match &args.b {
        Some(src) => load(src, g.seed.wrapping_add(1), Some(&referenced_columns(&a)))?,
        None => a.clone(),
    };
    let plan = compute_chunk_plan(&sys, b.n_cols(), Phase::Numeric);
    if plan.use_coarse && plan.n_chunks_coarse > 1 << 13 {
        eprintln!(
            "warning: {} coarse chunks; coarse reordering will spill out of L2",
            plan.n_chunks_coarse
        );
    }
    let bandwidth = match (args.bandwidth, args.measure_bandwidth) {
        (Some(bw), _) => Some(bw),
        (None, true) => {
            let m = measure_bandwidth(256 << 20, 10)?;
            eprintln!("measured bandwidth: {:.3e} bytes/s", m.bytes_per_sec);
            Some(m.bytes_per_sec)
        }
        (None, false) => None,
    };
    let cfg = RunConfig {
        input: match &args.b {
            Some(b) => format!("{} * {}", args.a, b),
            None => args.a.clone(),
        },
        algo,
        reps: args.reps,
        threads: g.threads(),
        sys,
        bandwidth,
        verify: !args.no_verify,
    };
    let records = run_spgemm_command(&a, &b, &cfg)?;
    g.emit(&records)?;
    let failed = records.iter().any(|r| r.verified == "FAIL");
    if failed {
        eprintln!("verification FAILED");
    }
    Ok(!failed)
}

fn microbench(g: &Global, args: &MicrobenchArgs) -> Result<bool> {
    if args.reps == 0 {
        return Err(BenchError::config("repetitions must be at least 1"));
    }
    let spec = StreamSpec {
        size: args.size,
        length: args.length,
        seed: g.seed,
    };
    let workers = g.threads.unwrap_or(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| BenchError::config(e.to_string()))?;
    let mut records = Vec::new();
    for log in args.min_log_chunks..=args.max_log_chunks {
        for rep in 0..args.reps {
            records.extend(pool.install(|| microbench_building_blocks(&spec, 1 << log, workers, rep))?);
        }
    }
    g.emit(&records)?;
    Ok(records.iter().all(|r| r.checksum_ok))
}

#[derive(Serialize)]
struct BoundRecord {
    read_bytes: u128,
    write_bytes: u128,
    seconds: f64,
}

fn bound(g: &Global, args: &BoundArgs) -> Result<bool> {
    let b = ideal_bound(&IdealBoundInputs {
        n_a: args.n_a,
        nnz_a: args.nnz_a,
        n_inter_prod: args.n_inter_prod,
        n_c: args.n_c,
        nnz_c: args.nnz_c,
        s_row_ptr: args.s_row_ptr,
        s_col_idx: args.s_col_idx,
        s_val: args.s_val,
        bandwidth_bytes_per_sec: args.bandwidth,
    })?;
    g.emit(&[BoundRecord {
        read_bytes: b.read_bytes,
        write_bytes: b.write_bytes,
        seconds: b.seconds,
    }])?;
    Ok(true)
}

fn bandwidth(g: &Global, args: &BandwidthArgs) -> Result<bool> {
    let m = measure_bandwidth(args.bytes, args.reps)?;
    g.emit(&[m])?;
    Ok(true)
}

fn verify(g: &Global, args: &VerifyArgs) -> Result<bool> {
    let threads = g.threads();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| BenchError::config(e.to_string()))?;
    let cfg = VerifyConfig {
        seed: g.seed,
        random_cases: args.cases,
        filter: args.filter.clone(),
        inject_fault: args.inject_fault.clone(),
        parallel: threads > 1,
    };
    let report = pool.install(|| verify_command(&cfg))?;
    g.emit(&report.cases)?;
    let [s, d, f, c] = report.category_totals();
    let failed = report.failures().count();
    eprintln!(
        "{} cases, {failed} failed; rows by category: sort {s}, dense {d}, fine {f}, coarse {c}",
        report.cases.len()
    );
    for case in report.failures() {
        eprintln!("FAIL {}: {}", case.case, case.detail);
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let outcome = match &cli.command {
        Command::Gen(a) => gen(g, a),
        Command::Spgemm(a) => spgemm(g, a),
        Command::Microbench(a) => microbench(g, a),
        Command::Bound(a) => bound(g, a),
        Command::Bandwidth(a) => bandwidth(g, a),
        Command::Verify(a) => verify(g, a),
    };
    let _ = io::stdout().flush();
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
