//! Command-line front end: `generate`, `schedule`, `run`, `verify` and `bench`.
//!
//! Every command returns a serializable report; [`main`] prints it and maps errors to exit
//! codes (0 success, 1 verification failure or runtime error, 2 usage error).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use crate::circuit::{self, generate_supremacy, Circuit, CircuitStats, GenerateOptions, SkipOptions};
use crate::dist::{self, RunOptions, RunStats};
use crate::error::{Error, Result};
use crate::fusion::{random_unitary, DEFAULT_K_MAX};
use crate::kernel::{self, KernelConfig, Real, StateSlice};
use crate::oracle;
use crate::rng::SplitMix64;
use crate::scheduler::{compile, CompileConfig, PlannedOp, SchedulePlan, ScheduleReport, SwapPolicy};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Expected entropy of a Porter-Thomas distributed state of `n` qubits, `ln 2^n - 1 + gamma`.
pub fn porter_thomas_entropy(n: usize) -> f64 {
    n as f64 * std::f64::consts::LN_2 - 1.0 + EULER_GAMMA
}

pub const DEFAULT_MEMORY_CAP: u128 = 16 << 30;

#[derive(Debug, Parser)]
#[command(name = "qcsim", version, about = "Full-amplitude quantum circuit simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random supremacy circuit.
    Generate(GenerateArgs),
    /// Compile a circuit and print the schedule report.
    Schedule(ScheduleArgs),
    /// Simulate a circuit over emulated ranks.
    Run(RunArgs),
    /// Compare the pipeline against the dense reference on random circuits.
    Verify(VerifyArgs),
    /// Measure kernel throughput.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    #[arg(long)]
    pub depth: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Omit the cycle-0 Hadamard layer.
    #[arg(long)]
    pub no_initial_h: bool,
    /// Omit the CZ gates of the last cycle.
    #[arg(long)]
    pub no_final_cz: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompileArgs {
    /// Qubits held by each rank.
    #[arg(long)]
    pub local_qubits: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_K_MAX)]
    pub kmax: usize,
    /// Treat every single-qubit gate on a global qubit as dense.
    #[arg(long)]
    pub worst_case: bool,
    #[arg(long, value_enum, default_value_t = PolicyArg::Search)]
    pub policy: PolicyArg,
    /// Keep the trailing cluster of each stage before its swap.
    #[arg(long)]
    pub no_adjust: bool,
    /// Simulate the cycle-0 Hadamards instead of starting from the uniform state.
    #[arg(long)]
    pub keep_initial_h: bool,
    /// Simulate the CZ gates of the last cycle.
    #[arg(long)]
    pub keep_final_cz: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Search,
    Baseline,
}

impl From<PolicyArg> for SwapPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Search => SwapPolicy::Search,
            PolicyArg::Baseline => SwapPolicy::Baseline,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScheduleArgs {
    pub circuit: PathBuf,
    #[command(flatten)]
    pub compile: CompileArgs,
    /// Execute diagonal gates on global qubits without communication.
    #[arg(long)]
    pub specialize: bool,
    /// Additional k_max values whose cluster counts are reported.
    #[arg(long, value_delimiter = ',', default_value = "3,4,5")]
    pub kmax_sweep: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Double,
    Single,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    pub circuit: PathBuf,
    #[command(flatten)]
    pub compile: CompileArgs,
    /// Number of emulated ranks (a power of two).
    #[arg(long)]
    pub ranks: Option<usize>,
    #[arg(long)]
    pub no_specialize: bool,
    /// Report the output entropy.
    #[arg(long)]
    pub entropy: bool,
    /// File of bitstrings (leftmost character = highest qubit) whose amplitudes are reported.
    #[arg(long)]
    pub amplitudes: Option<PathBuf>,
    /// Kernel threads per rank.
    #[arg(long, env = "QCSIM_THREADS", default_value_t = 1)]
    pub threads: usize,
    #[arg(long, value_enum, default_value_t = Precision::Double)]
    pub precision: Precision,
    #[arg(long)]
    pub block_size: Option<usize>,
    /// Refuse states larger than this many GiB.
    #[arg(long, default_value_t = 16.0)]
    pub memory_cap_gib: f64,
    /// Write each rank's amplitudes to this directory.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 10)]
    pub max_qubits: usize,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Corrupt one fused matrix entry per trial (negative control).
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Locs {
    Low,
    High,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 22)]
    pub qubits: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "low")]
    pub locs: Vec<Locs>,
    #[arg(long)]
    pub block_size: Option<usize>,
    #[arg(long, value_delimiter = ',', env = "QCSIM_THREADS", default_value = "1")]
    pub threads: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long)]
    pub split_fma: bool,
}

impl CompileArgs {
    fn config(&self, local_qubits: usize, specialize: bool) -> CompileConfig {
        CompileConfig {
            local_qubits,
            k_max: self.kmax,
            specialize,
            worst_case_dense: self.worst_case,
            policy: self.policy.into(),
            skip: SkipOptions { initial_h: !self.keep_initial_h, final_cz: !self.keep_final_cz },
            adjust_swap_points: !self.no_adjust,
        }
    }
}

fn write_output(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<(Circuit, CircuitStats)> {
    let options = GenerateOptions { include_initial_h: !args.no_initial_h, include_final_cz: !args.no_final_cz };
    let c = generate_supremacy(args.rows, args.cols, args.depth, args.seed, options)?;
    if let Some(path) = &args.output {
        write_output(path, &(c.to_json() + "\n"))?;
    }
    let stats = circuit::stats(&c);
    Ok((c, stats))
}

pub fn read_circuit(path: &Path) -> Result<Circuit> {
    let text = fs::read_to_string(path)?;
    Circuit::from_json(&text)
}

pub fn cmd_schedule(args: &ScheduleArgs) -> Result<ScheduleReport> {
    let c = read_circuit(&args.circuit)?;
    let l = args.compile.local_qubits.unwrap_or(c.num_qubits());
    let plan = compile(&c, &args.compile.config(l, args.specialize))?;
    ScheduleReport::build(&c, &plan, &args.kmax_sweep)
}

#[derive(Debug, Clone, Serialize)]
pub struct AmplitudeReport {
    pub bitstring: String,
    pub re: f64,
    pub im: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub qubits: usize,
    pub circuit_gates: usize,
    /// Gates actually simulated.
    pub gates: usize,
    pub ranks: usize,
    pub local_qubits: usize,
    pub swaps: usize,
    pub exchanges: usize,
    pub clusters: usize,
    pub specialized: usize,
    pub precision: Precision,
    pub threads: usize,
    pub wall_secs: f64,
    pub compute_pct: f64,
    pub exchange_pct: f64,
    pub bytes_exchanged: u64,
    pub entropy: Option<f64>,
    pub porter_thomas_entropy: f64,
    /// Sum of `|amplitude|^2`.
    pub norm: f64,
    pub amplitudes: Vec<AmplitudeReport>,
    pub dump: Vec<PathBuf>,
}

/// Parses bitstrings written highest qubit first; blank lines and `#` comments are skipped.
pub fn parse_bitstrings(text: &str, n: usize) -> Result<Vec<(String, usize)>> {
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let s = line.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { context: format!("line {}", line_no + 1), message };
        if s.len() != n {
            return Err(parse_err(format!("bitstring of length {} for {n} qubits", s.len())));
        }
        let mut x = 0usize;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => x |= 1 << (n - 1 - i),
                other => return Err(parse_err(format!("unexpected character {other:?}"))),
            }
        }
        out.push((s.to_string(), x));
    }
    Ok(out)
}

fn resolve_layout(n: usize, ranks: Option<usize>, local: Option<usize>) -> Result<usize> {
    let from_ranks = match ranks {
        Some(r) if !r.is_power_of_two() => return Err(Error::invalid(format!("--ranks {r} is not a power of two"))),
        Some(r) => {
            let g = r.trailing_zeros() as usize;
            if g > n {
                return Err(Error::invalid(format!("{r} ranks exceed 2^{n}")));
            }
            Some(n - g)
        }
        None => None,
    };
    match (from_ranks, local) {
        (Some(a), Some(b)) if a != b.min(n) => {
            Err(Error::invalid(format!("--ranks implies {a} local qubits, --local-qubits says {b}")))
        }
        (Some(a), _) => Ok(a),
        (None, Some(b)) => Ok(b.min(n)),
        (None, None) => Ok(n),
    }
}

pub fn cmd_run(args: &RunArgs) -> Result<RunReport> {
    let c = read_circuit(&args.circuit)?;
    let n = c.num_qubits();
    let element = match args.precision {
        Precision::Double => 16u128,
        Precision::Single => 8u128,
    };
    let required = element << n.min(120);
    let cap = (args.memory_cap_gib * (1u64 << 30) as f64) as u128;
    if required > cap {
        return Err(Error::MemoryCap { qubits: n, required, cap });
    }
    if args.threads == 0 {
        return Err(Error::invalid("--threads must be at least 1"));
    }
    let l = resolve_layout(n, args.ranks, args.compile.local_qubits)?;
    let plan = compile(&c, &args.compile.config(l, !args.no_specialize))?;
    let queries = match &args.amplitudes {
        Some(path) => parse_bitstrings(&fs::read_to_string(path)?, n)?,
        None => Vec::new(),
    };
    let opts = RunOptions {
        kernel: KernelConfig {
            block_size: args.block_size,
            threads: args.threads,
            k_max: plan.k_max,
            split_fma: false,
        },
        entropy: args.entropy,
        amplitudes: queries.iter().map(|(_, x)| *x).collect(),
    };
    let (stats, dump) = match args.precision {
        Precision::Double => run_and_dump::<f64>(&plan, &opts, args.dump.as_deref())?,
        Precision::Single => run_and_dump::<f32>(&plan, &opts, args.dump.as_deref())?,
    };
    let rank0 = stats.per_rank[0].clone();
    let pct = |x: f64| if stats.wall_secs > 0.0 { (100.0 * x / stats.wall_secs).min(100.0) } else { 0.0 };
    let compute_pct = pct(rank0.compute_secs);
    let exchange_pct = pct(rank0.exchange_secs).min(100.0 - compute_pct);
    Ok(RunReport {
        qubits: n,
        circuit_gates: c.gates.len(),
        gates: plan.gates.len(),
        ranks: 1 << plan.global_qubits,
        local_qubits: plan.local_qubits,
        swaps: plan.num_swaps(),
        exchanges: stats.all_to_alls(),
        clusters: plan.num_clusters(),
        specialized: plan.num_specialized(),
        precision: args.precision,
        threads: args.threads,
        wall_secs: stats.wall_secs,
        compute_pct,
        exchange_pct,
        bytes_exchanged: stats.per_rank.iter().map(|r| r.bytes_sent).sum(),
        entropy: stats.entropy,
        porter_thomas_entropy: porter_thomas_entropy(n),
        norm: stats.norm_sq,
        amplitudes: queries
            .into_iter()
            .zip(&stats.amplitudes)
            .map(|((bitstring, _), a)| AmplitudeReport { bitstring, re: a.re, im: a.im, probability: a.norm_sqr() })
            .collect(),
        dump,
    })
}

fn run_and_dump<T: Real>(
    plan: &SchedulePlan,
    opts: &RunOptions,
    dump: Option<&Path>,
) -> Result<(RunStats, Vec<PathBuf>)> {
    let (state, stats) = dist::run::<T>(plan, plan.init, opts)?;
    let files = match dump {
        Some(dir) => state.dump(dir)?,
        None => Vec::new(),
    };
    Ok((stats, files))
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialReport {
    pub trial: usize,
    pub rows: usize,
    pub cols: usize,
    pub depth: u32,
    pub seed: u64,
    pub global_qubits: usize,
    pub swaps: usize,
    pub max_abs_diff: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub trials: usize,
    pub passed: bool,
    pub failures: usize,
    pub max_abs_diff: f64,
    pub tolerance: f64,
    pub warnings: Vec<String>,
    pub results: Vec<TrialReport>,
}

pub const VERIFY_TOLERANCE: f64 = 1e-12;

/// One randomized comparison of compile + distributed run against the dense reference.
pub fn verify_trial(
    rows: usize,
    cols: usize,
    depth: u32,
    seed: u64,
    g: usize,
    inject_fault: bool,
) -> Result<(f64, usize)> {
    let c = generate_supremacy(rows, cols, depth, seed, GenerateOptions::default())?;
    let n = c.num_qubits();
    let config = CompileConfig {
        local_qubits: n - g,
        skip: SkipOptions { initial_h: true, final_cz: false },
        ..CompileConfig::default()
    };
    let mut plan = compile(&c, &config)?;
    if inject_fault {
        let cluster = plan.stages.iter_mut().flat_map(|s| s.ops.iter_mut()).find_map(|op| match op {
            PlannedOp::Cluster(cl) => Some(cl),
            PlannedOp::Specialized { .. } => None,
        });
        if let Some(cl) = cluster {
            let e = &mut cl.matrix.entries_mut()[0];
            *e = -*e + Complex64::new(0.25, 0.0);
        }
    }
    let (state, _) = dist::run::<f64>(&plan, plan.init, &RunOptions::default())?;
    let expected = oracle::simulate_dense(&c)?;
    Ok((expected.max_abs_diff(&state.to_logical_vector()), plan.num_swaps()))
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<VerifyReport> {
    if args.max_qubits < 4 || args.max_qubits > oracle::MAX_SIMULATION_QUBITS {
        return Err(Error::invalid(format!("--max-qubits must be in 4..={}", oracle::MAX_SIMULATION_QUBITS)));
    }
    let mut warnings = Vec::new();
    if args.trials == 0 {
        warnings.push("no trials requested; nothing was checked".to_string());
    }
    let grids: Vec<(usize, usize)> = (1..=args.max_qubits)
        .flat_map(|r| (1..=args.max_qubits).map(move |c| (r, c)))
        .filter(|&(r, c)| (4..=args.max_qubits).contains(&(r * c)))
        .collect();
    let mut rng = SplitMix64::new(args.seed);
    let mut results = Vec::with_capacity(args.trials);
    for trial in 0..args.trials {
        let (rows, cols) = grids[rng.pick(grids.len())];
        let depth = 5 + rng.pick(21) as u32;
        let seed = rng.next_u64();
        let g = rng.pick(3);
        let (diff, swaps) = verify_trial(rows, cols, depth, seed, g, args.inject_fault)?;
        results.push(TrialReport {
            trial,
            rows,
            cols,
            depth,
            seed,
            global_qubits: g,
            swaps,
            max_abs_diff: diff,
            passed: diff < VERIFY_TOLERANCE,
        });
    }
    let failures = results.iter().filter(|r| !r.passed).count();
    Ok(VerifyReport {
        trials: args.trials,
        passed: failures == 0,
        failures,
        max_abs_diff: results.iter().map(|r| r.max_abs_diff).fold(0.0, f64::max),
        tolerance: VERIFY_TOLERANCE,
        warnings,
        results,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub k: usize,
    pub qubits: usize,
    pub locs: Locs,
    pub block_size: usize,
    pub threads: usize,
    pub seconds_per_gate: f64,
    pub gates_per_sec: f64,
    pub gflops: f64,
    /// Read plus write traffic of one pass over the state.
    pub bandwidth_gbs: f64,
    /// Throughput relative to low locations at the same `k` and thread count.
    pub vs_low: Option<f64>,
    /// Throughput relative to one thread at the same `k` and locations.
    pub speedup: Option<f64>,
}

pub fn cmd_bench(args: &BenchArgs) -> Result<Vec<BenchRow>> {
    if args.repeats == 0 {
        return Err(Error::invalid("--repeats must be at least 1"));
    }
    let n = args.qubits;
    if 16u128 << n > DEFAULT_MEMORY_CAP {
        return Err(Error::MemoryCap { qubits: n, required: 16u128 << n, cap: DEFAULT_MEMORY_CAP });
    }
    let mut rng = rand::rng();
    let mut state = StateSlice::<f64>::filled(n, Complex64::new((0.5f64).powf(n as f64 / 2.0), 0.0));
    let mut rows = Vec::new();
    for &k in &args.k {
        if k == 0 || k > n || k > crate::fusion::K_MAX_LIMIT {
            return Err(Error::invalid(format!("cannot bench k={k} on {n} qubits")));
        }
        let g = random_unitary((0..k).collect(), &mut rng);
        for &locs in &args.locs {
            let targets: Vec<usize> = match locs {
                Locs::Low => (0..k).collect(),
                Locs::High => (n - k..n).collect(),
            };
            for &threads in &args.threads {
                if threads == 0 {
                    return Err(Error::invalid("thread counts must be at least 1"));
                }
                let cfg = KernelConfig { block_size: args.block_size, threads, k_max: k, split_fma: args.split_fma };
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
                let secs = pool.install(|| -> Result<f64> {
                    kernel::apply_gate(&mut state, &g, &targets, &cfg)?;
                    let start = Instant::now();
                    for _ in 0..args.repeats {
                        kernel::apply_gate(&mut state, &g, &targets, &cfg)?;
                    }
                    Ok(start.elapsed().as_secs_f64() / args.repeats as f64)
                })?;
                rows.push(BenchRow {
                    k,
                    qubits: n,
                    locs,
                    block_size: cfg.block_for(k),
                    threads,
                    seconds_per_gate: secs,
                    gates_per_sec: 1.0 / secs,
                    gflops: kernel::estimate_flops(k, n) as f64 / secs / 1e9,
                    bandwidth_gbs: 2.0 * 16.0 * (1u64 << n) as f64 / secs / 1e9,
                    vs_low: None,
                    speedup: None,
                });
            }
        }
    }
    let reference = rows.clone();
    let rate = |k: usize, locs: Locs, threads: usize| {
        reference.iter().find(|r| r.k == k && r.locs == locs && r.threads == threads).map(|r| r.gates_per_sec)
    };
    for r in &mut rows {
        r.vs_low = rate(r.k, Locs::Low, r.threads).map(|low| r.gates_per_sec / low);
        r.speedup = rate(r.k, r.locs, 1).map(|one| r.gates_per_sec / one);
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(
        "k,qubits,locs,block_size,threads,seconds_per_gate,gates_per_sec,gflops,bandwidth_gbs,vs_low,speedup\n",
    );
    let opt = |x: Option<f64>| x.map(|v| format!("{v:.3}")).unwrap_or_default();
    for r in rows {
        let locs = match r.locs {
            Locs::Low => "low",
            Locs::High => "high",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6e},{:.3},{:.3},{:.3},{},{}",
            r.k,
            r.qubits,
            locs,
            r.block_size,
            r.threads,
            r.seconds_per_gate,
            r.gates_per_sec,
            r.gflops,
            r.bandwidth_gbs,
            opt(r.vs_low),
            opt(r.speedup)
        );
    }
    out
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize") + "\n"
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_output(path, text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::Parse { .. } | Error::MemoryCap { .. } => 2,
        _ => 1,
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::MemoryCap { .. } = e {
                eprintln!("hint: use more ranks with single precision, fewer qubits, or raise --memory-cap-gib");
            }
            exit_code(&e)
        }
    }
}

fn dispatch(command: &Command) -> Result<i32> {
    match command {
        Command::Generate(args) => {
            let (c, stats) = cmd_generate(args)?;
            if args.output.is_some() {
                emit(None, &to_json(&stats))?;
            } else {
                emit(None, &(c.to_json() + "\n"))?;
                eprint!("{}", to_json(&stats));
            }
            Ok(0)
        }
        Command::Schedule(args) => {
            let start = Instant::now();
            let report = cmd_schedule(args)?;
            eprintln!("scheduled in {:.3} s", start.elapsed().as_secs_f64());
            emit(args.out.as_deref(), &to_json(&report))?;
            Ok(0)
        }
        Command::Run(args) => {
            let report = cmd_run(args)?;
            emit(args.out.as_deref(), &to_json(&report))?;
            Ok(0)
        }
        Command::Verify(args) => {
            let report = cmd_verify(args)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            emit(None, &to_json(&report))?;
            eprintln!(
                "{}: {} trials, max |diff| = {:.3e}",
                if report.passed { "PASS" } else { "FAIL" },
                report.trials,
                report.max_abs_diff
            );
            Ok(if report.passed { 0 } else { 1 })
        }
        Command::Bench(args) => {
            let rows = cmd_bench(args)?;
            emit(None, &bench_csv(&rows))?;
            Ok(0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitstrings_are_msb_first() {
        let parsed = parse_bitstrings("# header\n001\n\n100 # comment\n", 3).unwrap();
        assert_eq!(parsed, vec![("001".to_string(), 1), ("100".to_string(), 4)]);
        assert!(matches!(parse_bitstrings("01\n", 3), Err(Error::Parse { .. })));
        assert!(parse_bitstrings("0a1\n", 3).is_err());
    }

    #[test]
    fn layout_resolution() {
        assert_eq!(resolve_layout(10, Some(4), None).unwrap(), 8);
        assert_eq!(resolve_layout(10, None, Some(7)).unwrap(), 7);
        assert_eq!(resolve_layout(10, Some(8), Some(7)).unwrap(), 7);
        assert!(resolve_layout(10, Some(3), None).is_err());
        assert!(resolve_layout(10, Some(2), Some(7)).is_err());
        assert_eq!(resolve_layout(10, None, None).unwrap(), 10);
    }

    #[test]
    fn porter_thomas_value() {
        assert!((porter_thomas_entropy(16) - (16.0 * std::f64::consts::LN_2 - 1.0 + EULER_GAMMA)).abs() < 1e-15);
    }

    #[test]
    fn verify_detects_fault() {
        let (diff, _) = verify_trial(2, 3, 10, 5, 1, false).unwrap();
        assert!(diff < VERIFY_TOLERANCE);
        let (diff, _) = verify_trial(2, 3, 10, 5, 1, true).unwrap();
        assert!(diff > 1e-3);
    }

    #[test]
    fn zero_trials_warn() {
        let r = cmd_verify(&VerifyArgs { max_qubits: 10, trials: 0, seed: 0, inject_fault: false }).unwrap();
        assert!(r.passed && !r.warnings.is_empty());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main(["qcsim", "generate", "--rows", "0", "--cols", "5", "--depth", "3"]), 2);
        assert_eq!(main(["qcsim", "bogus"]), 2);
        assert_eq!(main(["qcsim", "verify", "--trials", "0"]), 0);
    }
}
