//! `kmatch`: generate graphs, run the greedy and the factor pipeline,
//! certify the constants, and sweep seeds.
//!
//! Exit codes: 0 success (and k-factor found), 10 factor-critical witness
//! found, 11 best-effort matching only, 2 usage error, 3 infeasible or
//! malformed input, 4 internal invariant breach, 1 anything else.

mod output;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use kmatch::augment::{find_k_factor, AugmentError, FactorConfig, FactorStatus};
use kmatch::experiment::{run_sweep, ExperimentError, RunSummary, Source, SweepConfig};
use kmatch::generate::{process_until_core, sample_min_degree_graph, sample_simple_min_degree_graph, GenerateError};
use kmatch::io::{read_graph, write_graph, write_matching, GraphFile, ParseError};
use kmatch::numerics::{certify_inequalities, compute_alphas, AlphaGrid, CertifyConfig, NumericsError};
use kmatch::oracle::{brute_force_max_k_matching, verify_k_factor, OracleError};
use kmatch::rng::stream;
use kmatch::tinf::{self, TinfConfig, TinfError, TinfTrace};
use kmatch::{Exec, MultiGraph};
use output::Sink;
use serde::Serialize;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "kmatch", version, about = "k-matchings and k-factors of random graphs with minimum degree k+1")]
struct Cli {
    /// Mirror every CSV as JSON lines (`x.csv` -> `x.jsonl`; JSON only on stdout).
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Sample a random multigraph with minimum degree k+1.
    Gen(GenArgs),
    /// Run the random graph process until a (k+1)-core appears.
    Process(ProcessArgs),
    /// Run the greedy k-matching.
    Tinf(TinfArgs),
    /// Search for a k-factor (or factor-critical witness).
    Factor(FactorArgs),
    /// Compute the alpha constants and check the inequality grids.
    Certify(CertifyArgs),
    /// Exact maximum k-matching of a tiny graph.
    Oracle(OracleArgs),
    /// Run the factor pipeline over many seeds.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct Size {
    #[arg(long)]
    n: usize,
    /// Number of edges.
    #[arg(long, conflicts_with = "c", required_unless_present = "c")]
    m: Option<usize>,
    /// Edge density: m = floor(c n).
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    k: usize,
}

impl Size {
    fn m(&self) -> usize {
        self.m.unwrap_or_else(|| (self.c.expect("clap requires m or c") * self.n as f64).floor() as usize)
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    size: Size,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Redraw until the graph has no loops or repeated pairs.
    #[arg(long)]
    simple: bool,
    /// Redraw budget for --simple.
    #[arg(long, default_value_t = 100_000)]
    attempts: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProcessArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the core graph here.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TinfArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Defaults to the k in the graph header.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the per-step trace CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Record every this many steps.
    #[arg(long)]
    stride: Option<usize>,
    /// Write the matching (`u v` lines) here.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FactorArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reservation probability, or `auto` for n^-0.15.
    #[arg(long, default_value = "auto")]
    p_reserve: String,
    /// Write the greedy stage's trace CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long, default_value_t = 50)]
    rmax: usize,
    /// Grid step of the alpha suprema.
    #[arg(long, default_value_t = 1e-3)]
    grid_step: f64,
    /// Grid step of the g nonnegativity scan.
    #[arg(long, default_value_t = 0.01)]
    g_step: f64,
    /// Also write the alpha table here.
    #[arg(long)]
    alphas: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, conflicts_with = "c", required_unless_present_any = ["c", "process"])]
    m: Option<usize>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    k: usize,
    /// Number of seeds.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    #[arg(long)]
    simple: bool,
    #[arg(long, default_value_t = 100_000)]
    attempts: usize,
    /// Use the (k+1)-core of the random graph process at its hitting time.
    #[arg(long, conflicts_with_all = ["m", "c", "simple"])]
    process: bool,
    #[arg(long, default_value = "auto")]
    p_reserve: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Error carrying its exit code.
#[derive(Debug)]
struct Exit {
    code: u8,
    msg: String,
}

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.msg)
    }
}

impl std::error::Error for Exit {}

fn exit(code: u8, msg: impl Into<String>) -> anyhow::Error {
    Exit { code, msg: msg.into() }.into()
}

fn invariant(seed: u64, e: impl std::fmt::Display) -> anyhow::Error {
    exit(4, format!("invariant breach (reproduce with --seed {seed}): {e}"))
}

fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Exit>() {
            return e.code;
        }
        if cause.is::<GenerateError>() || cause.is::<NumericsError>() || cause.is::<ParseError>() || cause.is::<OracleError>() {
            return 3;
        }
    }
    1
}

fn threads() -> Result<Exec> {
    let Ok(raw) = std::env::var("KMATCH_THREADS") else { return Ok(Exec::default()) };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| exit(2, format!("KMATCH_THREADS must be a positive integer, got `{raw}`")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    Ok(if n == 1 { Exec::Sequential } else { Exec::default() })
}

fn load(path: &Path, k: Option<usize>) -> Result<(MultiGraph, usize)> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let GraphFile { graph, k: header_k } = read_graph(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    Ok((graph, k.unwrap_or(header_k)))
}

fn save_graph(path: Option<&Path>, g: &MultiGraph, k: usize) -> Result<()> {
    match path {
        Some(p) => write_graph(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?), g, k)?,
        None => write_graph(BufWriter::new(std::io::stdout().lock()), g, k)?,
    }
    Ok(())
}

fn p_reserve(raw: &str) -> Result<Option<f64>> {
    if raw == "auto" {
        return Ok(None);
    }
    let p: f64 = raw.parse().map_err(|_| exit(2, format!("--p-reserve must be `auto` or a number, got `{raw}`")))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(exit(3, format!("--p-reserve {p} outside [0, 1]")));
    }
    Ok(Some(p))
}

fn need_k(k: usize, at_least: usize) -> Result<()> {
    if k < at_least {
        return Err(exit(3, format!("k must be at least {at_least}, got {k}")));
    }
    Ok(())
}

fn write_trace(path: &Path, trace: &TinfTrace, k: usize, json: bool) -> Result<()> {
    let mut header: Vec<String> = ["t", "m", "zeta", "index", "s", "mult", "h"].map(String::from).to_vec();
    header.extend((1..=k + 1).map(|i| format!("p{i}")));
    let rows: Vec<Vec<String>> = trace
        .records
        .iter()
        .map(|r| {
            let mut row = vec![
                r.t.to_string(),
                r.m.to_string(),
                r.zeta.to_string(),
                r.index.to_string(),
                r.s.to_string(),
                r.mult.to_string(),
                r.h.to_string(),
            ];
            row.extend(r.p.iter().map(f64::to_string));
            row
        })
        .collect();
    Sink { path: Some(path.to_owned()), json }.write_table(&header, &rows)
}

fn gen(a: &GenArgs) -> Result<()> {
    let (n, m, k) = (a.size.n, a.size.m(), a.size.k);
    let mut rng = stream(a.seed, "graph");
    let g = if a.simple {
        sample_simple_min_degree_graph(n, m, k, a.attempts, &mut rng)?
    } else {
        sample_min_degree_graph(n, m, k, &mut rng)?
    };
    save_graph(a.output.as_deref(), &g, k)
}

#[derive(Serialize)]
struct ProcessRow {
    n: usize,
    k: usize,
    seed: u64,
    sigma: usize,
    core_n: usize,
    core_m: usize,
}

fn process(a: &ProcessArgs, json: bool) -> Result<()> {
    need_k(a.k, 1)?;
    let p = process_until_core(a.n, a.k, &mut stream(a.seed, "graph"))?;
    if let Some(path) = &a.output {
        save_graph(Some(path), &p.core.graph, a.k)?;
    }
    let row = ProcessRow { n: a.n, k: a.k, seed: a.seed, sigma: p.sigma, core_n: p.core.graph.n(), core_m: p.core.graph.m() };
    Sink { path: None, json }.write_records(&[row])
}

#[derive(Serialize)]
struct TinfRow {
    n: usize,
    m: usize,
    k: usize,
    seed: u64,
    size: usize,
    deficit: usize,
    steps: usize,
    tau: usize,
    tau_prime: Option<usize>,
    t_star: usize,
    ledger_holds: bool,
    max_zeta_jump: u64,
    drift_windows: usize,
    drift_nonpositive: usize,
}

fn tinf_cmd(a: &TinfArgs, json: bool) -> Result<()> {
    let (g, k) = load(&a.input, a.k)?;
    need_k(k, 1)?;
    let (n, m) = (g.n(), g.m());
    let cfg = TinfConfig { trace: a.trace.is_some(), stride: a.stride, ..TinfConfig::default() };
    let out = tinf::run(g, k, &mut stream(a.seed, "tinf"), &cfg).map_err(|e| match e {
        TinfError::Invariant { .. } | TinfError::Stuck { .. } => invariant(a.seed, e),
        TinfError::ZeroK => exit(3, e.to_string()),
    })?;
    if let Some(path) = &a.trace {
        write_trace(path, &out.trace, k, json)?;
    }
    if let Some(path) = &a.output {
        write_matching(BufWriter::new(File::create(path)?), &out.matching.pairs())?;
    }
    let drift = tinf::drift_report(&out.trace);
    let row = TinfRow {
        n,
        m,
        k,
        seed: a.seed,
        size: out.matching.size(),
        deficit: (k * n / 2).saturating_sub(out.matching.size()),
        steps: out.stats.steps,
        tau: out.trace.tau,
        tau_prime: out.trace.tau_prime,
        t_star: out.trace.t_star,
        ledger_holds: out.stats.ledger_holds(n, k),
        max_zeta_jump: out.stats.max_zeta_jump,
        drift_windows: drift.len(),
        drift_nonpositive: drift.iter().filter(|w| w.mean <= 0.0).count(),
    };
    Sink { path: None, json }.write_records(&[row])
}

#[derive(Serialize)]
struct FactorRow {
    n: usize,
    m: usize,
    k: usize,
    seed: u64,
    status: &'static str,
    excluded: Option<usize>,
    size: usize,
    deficit: usize,
    tinf_deficit: usize,
    p_reserve: f64,
    reserved: usize,
    v0: usize,
    iterations: usize,
    tree_paths: usize,
    rectangle_paths: usize,
    fallback_steps: usize,
    fallback_paths: usize,
}

/// Returns the exit code for the status.
fn factor(a: &FactorArgs, json: bool) -> Result<u8> {
    let (g, k) = load(&a.input, a.k)?;
    need_k(k, 1)?;
    let mut cfg = FactorConfig::new(k);
    cfg.p_reserve = p_reserve(&a.p_reserve)?;
    cfg.tinf.trace = a.trace.is_some();
    let out = find_k_factor(&g, &cfg, a.seed).map_err(|e| match e {
        AugmentError::Invariant { .. } | AugmentError::Tinf(TinfError::Invariant { .. } | TinfError::Stuck { .. }) => invariant(a.seed, e),
        AugmentError::Probability(_) | AugmentError::Params(_) => exit(3, e.to_string()),
        other => anyhow!(other),
    })?;
    let pairs = out.matching.pairs();
    let (status, code, excluded) = match out.status {
        FactorStatus::Factor => ("factor", 0, None),
        FactorStatus::FactorCritical { excluded } => ("factor_critical", 10, Some(excluded)),
        FactorStatus::BestEffort { .. } => ("best_effort", 11, out.excluded),
    };
    if code != 11 {
        verify_k_factor(&g, &pairs, k, excluded).map_err(|v| invariant(a.seed, format!("reported {status} fails verification: {v}")))?;
    }
    if let Some(path) = &a.trace {
        write_trace(path, &out.trace, k, json)?;
    }
    if let Some(path) = &a.output {
        write_matching(BufWriter::new(File::create(path)?), &pairs)?;
    }
    if let Some(z) = excluded {
        eprintln!("excluded vertex: {z}");
    }
    let row = FactorRow {
        n: g.n(),
        m: g.m(),
        k,
        seed: a.seed,
        status,
        excluded,
        size: pairs.len(),
        deficit: (k * g.n() / 2).saturating_sub(pairs.len()),
        tinf_deficit: out.tinf_deficit,
        p_reserve: out.p_reserve,
        reserved: out.reserved,
        v0: out.v0,
        iterations: out.augment.iterations,
        tree_paths: out.augment.tree_paths,
        rectangle_paths: out.augment.rectangle_paths,
        fallback_steps: out.augment.fallback_steps,
        fallback_paths: out.augment.fallback_paths,
    };
    Sink { path: None, json }.write_records(&[row])?;
    Ok(code)
}

#[derive(Serialize)]
struct AlphaRow {
    r: u32,
    alpha: f64,
    sup_location: f64,
    sup_excess: f64,
    rule: String,
}

fn certify(a: &CertifyArgs, exec: Exec, json: bool) -> Result<()> {
    let positive = |x: f64| x > 0.0 && x.is_finite();
    if a.rmax < 2 || !positive(a.grid_step) || !positive(a.g_step) {
        return Err(exit(3, "need --rmax >= 2 and positive grid steps"));
    }
    let grid = AlphaGrid { step: a.grid_step, ..AlphaGrid::default() };
    let alphas = compute_alphas(a.rmax, grid, exec);
    let cfg = CertifyConfig { r_max: a.rmax, alpha_grid: grid, g_step: a.g_step, exec, ..CertifyConfig::default() };
    let rows = certify_inequalities(&alphas, &cfg);
    if let Some(path) = &a.alphas {
        let table: Vec<AlphaRow> = alphas
            .entries()
            .iter()
            .map(|e| AlphaRow { r: e.r, alpha: e.alpha, sup_location: e.sup_location, sup_excess: e.sup_excess, rule: format!("{:?}", e.rule) })
            .collect();
        Sink { path: Some(path.clone()), json }.write_records(&table)?;
    }
    let failing = rows.iter().filter(|r| r.worst_margin < 0.0).count();
    eprintln!("{} rows, {failing} with negative margin", rows.len());
    Sink { path: a.output.clone(), json }.write_records(&rows)
}

#[derive(Serialize)]
struct OracleOut {
    optimum: usize,
    explored: u64,
    witness: Vec<(usize, usize)>,
}

fn oracle(a: &OracleArgs, json: bool) -> Result<()> {
    let (g, k) = load(&a.input, a.k)?;
    let r = brute_force_max_k_matching(&g, k)?;
    if json {
        let out = OracleOut { optimum: r.optimum, explored: r.explored, witness: r.witness };
        println!("{}", serde_json::to_string(&out)?);
    } else {
        println!("optimum {}", r.optimum);
        for (u, v) in r.witness {
            println!("{u} {v}");
        }
    }
    Ok(())
}

fn sweep(a: &SweepArgs, exec: Exec, json: bool) -> Result<()> {
    need_k(a.k, 1)?;
    let source = if a.process {
        Source::Process { n: a.n }
    } else {
        let m = a.m.unwrap_or_else(|| (a.c.expect("clap requires m or c") * a.n as f64).floor() as usize);
        Source::MinDegree { n: a.n, m, simple: a.simple, attempts: a.attempts }
    };
    let mut factor = FactorConfig::new(a.k);
    factor.p_reserve = p_reserve(&a.p_reserve)?;
    let cfg = SweepConfig { source, seeds: (a.seed_base..a.seed_base + a.seeds).collect(), factor };
    let rows = run_sweep(&cfg, exec).map_err(|e| match e {
        ExperimentError::Pipeline { seed, source: source @ AugmentError::Invariant { .. } } => invariant(seed, source),
        ExperimentError::Generate { source, .. } => anyhow!(source),
        ExperimentError::EmptyCore { .. } => exit(3, e.to_string()),
        other => anyhow!(other),
    })?;
    let summary = RunSummary::of(&rows);
    eprintln!("{}", serde_json::to_string(&summary)?);
    Sink { path: a.output.clone(), json }.write_records(&rows)
}

fn run(cli: &Cli) -> Result<u8> {
    let exec = threads()?;
    match &cli.cmd {
        Cmd::Gen(a) => gen(a).map(|()| 0),
        Cmd::Process(a) => process(a, cli.json).map(|()| 0),
        Cmd::Tinf(a) => tinf_cmd(a, cli.json).map(|()| 0),
        Cmd::Factor(a) => factor(a, cli.json),
        Cmd::Certify(a) => certify(a, exec, cli.json).map(|()| 0),
        Cmd::Oracle(a) => oracle(a, cli.json).map(|()| 0),
        Cmd::Sweep(a) => sweep(a, exec, cli.json).map(|()| 0),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}
