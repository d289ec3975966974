//! `cascades`: command-line front end for tree generation, diffusion
//! simulation, sweeps, fitting and log analysis.
//!
//! Every data file written with `--out FILE` gets a `FILE.meta.json` sidecar
//! holding the version, seed, generator and fully resolved parameters.
//! Without `--out`, data goes to stdout and the metadata to stderr as one
//! JSON line.
//!
//! Exit status: 0 success, 2 usage error, 3 invalid parameter, 4 missing
//! input file, 5 malformed input data, 1 anything else.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use cascades::experiment::{run_sweep, SweepConfig};
use cascades::fit::{fit_powerlaw_tail_with, fit_theta, TailEstimator};
use cascades::ingest::{analyze, parse_events, DAY_SECONDS};
use cascades::metrics::{SizeBinnedStats, TreeMetrics};
use cascades::netgen::{generate_network, NetGenParams};
use cascades::rrt::{map_rrt_ensemble, RrtParams};
use cascades::seed::RNG_ALGORITHM;
use cascades::svfr::{batch_simulate, write_summaries_csv, SvfrParams};
use cascades::{Error, VERSION};

#[derive(Parser, Debug)]
#[command(name = "cascades", version, about = "Cascade-tree models: RRT growth, SVFR diffusion, fitting and analysis")]
struct Cli {
    /// Master seed for every random stream [default: 1; for `sweep`, the
    /// config's seed]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Grow random recursive trees T(n, θ) and print their metrics
    Rrt(RrtArgs),
    /// Sample a power-law configuration-model network as an edge list
    Netgen(NetArgs),
    /// Simulate SVFR cascades, one CSV row per cascade
    Svfr(SvfrArgs),
    /// Run a parameter sweep from a JSON config
    Sweep(SweepArgs),
    /// Fit the size-tail exponent or the RRT exponent θ
    #[command(subcommand)]
    Fit(FitCommand),
    /// Analyze a JSONL cascade event log
    Analyze(AnalyzeArgs),
}

#[derive(Args, Debug)]
struct OutArg {
    /// Output file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RrtArgs {
    /// Tree size
    #[arg(long)]
    n: usize,
    /// Attachment exponent: weight of a node is degree^θ
    #[arg(long)]
    theta: f64,
    /// Number of independent trees
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug, Clone)]
struct NetOpts {
    /// Number of nodes
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Degree exponent φ of Pr[D = k] ∝ k^-φ
    #[arg(long, default_value_t = 2.5)]
    phi: f64,
    /// Minimum degree
    #[arg(long = "d-min", default_value_t = 10)]
    d_min: usize,
    /// Maximum degree (default: structural cutoff floor(n^(1/(φ-1))))
    #[arg(long = "d-max")]
    d_max: Option<usize>,
}

impl NetOpts {
    fn params(&self, seed: u64) -> NetGenParams {
        NetGenParams {
            n: self.n,
            phi: self.phi,
            d_min: self.d_min,
            d_max_override: self.d_max,
            seed,
        }
    }
}

#[derive(Args, Debug)]
struct NetArgs {
    #[command(flatten)]
    net: NetOpts,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct SvfrArgs {
    #[command(flatten)]
    net: NetOpts,
    /// Mean view probability β
    #[arg(long, default_value_t = 0.3)]
    beta: f64,
    /// Degree scaling α of the view probability c·d^-α
    #[arg(long, default_value_t = 0.8)]
    alpha: f64,
    /// Forward probability γ
    #[arg(long, default_value_t = 0.091)]
    gamma: f64,
    /// Independently generated networks
    #[arg(long, default_value_t = 20)]
    networks: usize,
    /// Cascades per network, each from a uniformly random creator
    #[arg(long, default_value_t = 50)]
    runs: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Sweep config JSON; omitted fields take their defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Use 100 networks × 100 runs per point
    #[arg(long)]
    full: bool,
}

#[derive(Subcommand, Debug)]
enum FitCommand {
    /// Tail exponent λ of a size sample (one size per line)
    Sizes(FitSizesArgs),
    /// Best RRT exponent θ for a size-binned statistics CSV
    Theta(FitThetaArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Estimator {
    LogBinned,
    Mle,
}

#[derive(Args, Debug)]
struct FitSizesArgs {
    /// File with one integer size per line
    #[arg(long = "in")]
    input: PathBuf,
    /// Smallest size included in the fit
    #[arg(long, default_value_t = 100)]
    xmin: usize,
    #[arg(long = "bins-per-decade", default_value_t = 10)]
    bins_per_decade: usize,
    #[arg(long, value_enum, default_value_t = Estimator::LogBinned)]
    estimator: Estimator,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct FitThetaArgs {
    /// CSV with columns bin_lo, bin_hi, bin_mid, count, mean_apl, std_apl,
    /// mean_dstd, std_dstd
    #[arg(long = "in")]
    input: PathBuf,
    /// Candidate θ values
    #[arg(long, value_delimiter = ',', default_value = "0.8,1.0,1.2,1.4,1.6")]
    grid: Vec<f64>,
    /// RRTs per (θ, bin)
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// JSONL event log
    #[arg(long = "in")]
    input: PathBuf,
    /// End a cascade at the first silence longer than this many seconds
    #[arg(long = "gap-seconds", num_args = 0..=1, default_missing_value = "86400")]
    gap_seconds: Option<i64>,
    /// Smallest size for the binned statistics, γ and the tail fit
    #[arg(long, default_value_t = 100)]
    xmin: usize,
    #[arg(long = "bins-per-decade", default_value_t = 10)]
    bins_per_decade: usize,
    /// Per-cascade metrics CSV; FILE.binned.csv and FILE.fit.csv go beside it
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Process exit status of a failure.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::InvalidParameter { .. } => 3,
                Error::Io(io) if io.kind() == io::ErrorKind::NotFound => 4,
                Error::Io(_) => 1,
                Error::Parse { .. }
                | Error::Integrity { .. }
                | Error::Json(_)
                | Error::Csv(_)
                | Error::ArrivalOrder { .. }
                | Error::SelfLoop(_)
                | Error::DuplicateEdge(..)
                | Error::EndpointOutOfRange { .. } => 5,
                _ => 1,
            };
        }
        if let Some(e) = cause.downcast_ref::<io::Error>() {
            if e.kind() == io::ErrorKind::NotFound {
                return 4;
            }
        }
        if cause.downcast_ref::<MissingInput>().is_some() {
            return 4;
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return 5;
        }
    }
    1
}

#[derive(Debug)]
struct MissingInput(PathBuf);

impl std::fmt::Display for MissingInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "input file not found: {}", self.0.display())
    }
}

impl std::error::Error for MissingInput {}

fn open_input(path: &Path) -> Result<BufReader<File>> {
    if !path.exists() {
        return Err(MissingInput(path.to_path_buf()).into());
    }
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::InvalidParameter {
                name: "threads",
                reason: "must be >= 1".into(),
            }
            .into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let seed = cli.seed.unwrap_or(1);
    match cli.command {
        Command::Rrt(a) => cmd_rrt(a, seed),
        Command::Netgen(a) => cmd_netgen(a, seed),
        Command::Svfr(a) => cmd_svfr(a, seed),
        Command::Sweep(a) => cmd_sweep(a, cli.seed),
        Command::Fit(FitCommand::Sizes(a)) => cmd_fit_sizes(a),
        Command::Fit(FitCommand::Theta(a)) => cmd_fit_theta(a, seed),
        Command::Analyze(a) => cmd_analyze(a),
    }
}

fn metadata(command: &str, seed: Option<u64>, params: Value) -> Value {
    json!({
        "tool": "cascades",
        "version": VERSION,
        "command": command,
        "seed": seed,
        "rng": RNG_ALGORITHM,
        "parameters": params,
        "created_unix": SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    })
}

fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes data through `body` to `out` (or stdout), then the metadata.
fn emit(
    out: Option<&Path>,
    meta: Value,
    body: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(f);
            body(&mut w)?;
            w.flush()?;
            let mp = meta_path(path);
            let mut m = BufWriter::new(File::create(&mp)?);
            serde_json::to_writer_pretty(&mut m, &meta)?;
            m.write_all(b"\n")?;
            m.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            body(&mut w)?;
            w.flush()?;
            eprintln!("{}", serde_json::to_string(&meta)?);
        }
    }
    Ok(())
}

fn write_csv<T: Serialize>(w: &mut dyn Write, rows: &[T]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RrtRow {
    rep: usize,
    size: usize,
    avg_path_length: Option<f64>,
    degree_variance: f64,
    degree_std: f64,
}

fn cmd_rrt(a: RrtArgs, seed: u64) -> Result<()> {
    let params = RrtParams::new(a.n, a.theta, seed)?;
    if a.reps == 0 {
        return Err(Error::InvalidParameter {
            name: "reps",
            reason: "must be >= 1".into(),
        }
        .into());
    }
    let rows: Vec<RrtRow> = map_rrt_ensemble(&params, a.reps, |t| {
        let dv: f64 = cascades::metrics::degree_variance(&t);
        (
            TreeMetrics::<f64>::of(&t).ok().map(|m| m.avg_path_length),
            t.len(),
            dv,
        )
    })?
    .into_iter()
    .enumerate()
    .map(|(rep, (apl, size, dv))| RrtRow {
        rep,
        size,
        avg_path_length: apl,
        degree_variance: dv,
        degree_std: dv.sqrt(),
    })
    .collect();
    let meta = metadata(
        "rrt",
        Some(seed),
        json!({ "n": a.n, "theta": a.theta, "reps": a.reps }),
    );
    emit(a.out.out.as_deref(), meta, |w| write_csv(w, &rows))
}

fn cmd_netgen(a: NetArgs, seed: u64) -> Result<()> {
    let params = a.net.params(seed);
    let wiring = generate_network(&params)?;
    let net = &wiring.network;
    let meta = metadata(
        "netgen",
        Some(seed),
        json!({
            "n": params.n,
            "phi": params.phi,
            "d_min": params.d_min,
            "d_max": params.d_max(),
            "edges": net.edge_count(),
            "max_degree": net.max_degree(),
            "mean_degree": 2.0 * net.edge_count() as f64 / net.len() as f64,
            "self_loops_erased": wiring.self_loops,
            "multi_edges_erased": wiring.multi_edges,
        }),
    );
    emit(a.out.out.as_deref(), meta, |w| {
        net.write_edge_list(w)?;
        Ok(())
    })
}

fn cmd_svfr(a: SvfrArgs, seed: u64) -> Result<()> {
    let net = a.net.params(seed);
    let svfr = SvfrParams::new(a.beta, a.gamma, a.alpha, seed)?;
    let batch = batch_simulate(&net, &svfr, a.networks, a.runs)?;
    let meta = metadata(
        "svfr",
        Some(seed),
        json!({
            "n": net.n,
            "phi": net.phi,
            "d_min": net.d_min,
            "d_max": net.d_max(),
            "beta": a.beta,
            "alpha": a.alpha,
            "gamma": a.gamma,
            "networks": a.networks,
            "runs": a.runs,
            "network_reports": batch.networks,
        }),
    );
    emit(a.out.out.as_deref(), meta, |w| {
        write_summaries_csv(&batch.cascades, w)?;
        Ok(())
    })
}

fn cmd_sweep(a: SweepArgs, seed: Option<u64>) -> Result<()> {
    let mut config = match &a.config {
        Some(p) => {
            let mut r = open_input(p)?;
            let mut s = String::new();
            io::Read::read_to_string(&mut r, &mut s)?;
            SweepConfig::from_json(&s).with_context(|| format!("reading {}", p.display()))?
        }
        None => SweepConfig::default(),
    };
    if a.full {
        config.full_protocol = true;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    config.output = Some(a.out.clone());
    let out = run_sweep(&config, &a.out)?;
    let meta = metadata(
        "sweep",
        Some(config.seed),
        json!({
            "config": config.resolved(),
            "files": out.files,
            "points": out.records.len(),
        }),
    );
    let mp = a.out.join("meta.json");
    let mut m = BufWriter::new(File::create(&mp)?);
    serde_json::to_writer_pretty(&mut m, &meta)?;
    m.write_all(b"\n")?;
    m.flush()?;
    for r in &out.records {
        let lambda = r.lambda().map_or("insufficient data".into(), |l| format!("{l:.4}"));
        eprintln!(
            "N={} beta={} alpha={}: lambda {} ({} cascades >= {})",
            r.n, r.beta, r.alpha, lambda, r.tail_cascades, r.x_min
        );
    }
    Ok(())
}

fn read_sizes(path: &Path) -> Result<Vec<usize>> {
    let r = open_input(path)?;
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v = t.parse::<usize>().map_err(|e| Error::Parse {
            line: i + 1,
            message: format!("`{t}` is not a size: {e}"),
        })?;
        out.push(v);
    }
    Ok(out)
}

fn cmd_fit_sizes(a: FitSizesArgs) -> Result<()> {
    let sizes = read_sizes(&a.input)?;
    let est = match a.estimator {
        Estimator::LogBinned => TailEstimator::LogBinned,
        Estimator::Mle => TailEstimator::DiscreteMle,
    };
    let fit = fit_powerlaw_tail_with::<f64>(&sizes, a.xmin, a.bins_per_decade, est)?;
    let meta = metadata(
        "fit sizes",
        None,
        json!({
            "input": a.input,
            "x_min": a.xmin,
            "bins_per_decade": a.bins_per_decade,
            "estimator": est,
            "samples": sizes.len(),
        }),
    );
    emit(a.out.out.as_deref(), meta, |w| write_csv(w, &[fit]))
}

#[derive(Serialize)]
struct ThetaRow {
    theta_star: f64,
    loss: f64,
    grid: String,
    losses: String,
}

fn cmd_fit_theta(a: FitThetaArgs, seed: u64) -> Result<()> {
    let observed = SizeBinnedStats::read_csv(open_input(&a.input)?)?;
    let fit = fit_theta(&observed, &a.grid, a.reps, seed)?;
    let join = |v: Vec<String>| v.join(";");
    let row = ThetaRow {
        theta_star: fit.theta_star,
        loss: fit.loss,
        grid: join(fit.grid.iter().map(|g| g.0.to_string()).collect()),
        losses: join(fit.grid.iter().map(|g| g.1.to_string()).collect()),
    };
    let meta = metadata(
        "fit theta",
        Some(seed),
        json!({
            "input": a.input,
            "grid": a.grid,
            "reps": a.reps,
            "bins": observed.bins.len(),
        }),
    );
    emit(a.out.out.as_deref(), meta, |w| write_csv(w, &[row]))
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.with_extension("");
    let mut s = stem.into_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<()> {
    if a.gap_seconds.is_some_and(|g| g < 0) {
        return Err(Error::InvalidParameter {
            name: "gap-seconds",
            reason: "must be >= 0".into(),
        }
        .into());
    }
    let log = parse_events(open_input(&a.input)?)
        .with_context(|| format!("parsing {}", a.input.display()))?;
    let res = analyze(&log, a.gap_seconds, a.xmin, a.bins_per_decade)?;
    let mut params = json!({
        "input": a.input,
        "gap_seconds": a.gap_seconds,
        "default_gap_seconds": DAY_SECONDS,
        "x_min": a.xmin,
        "bins_per_decade": a.bins_per_decade,
        "cascades": res.cascades.len(),
        "duplicates_dropped": res.duplicates_dropped,
        "gamma": res.gamma,
        "fit": res.fit,
    });
    if let Some(out) = &a.out {
        let binned = sibling(out, ".binned.csv");
        if let Some(b) = &res.binned {
            b.write_csv(BufWriter::new(File::create(&binned)?))?;
        }
        let fit_path = sibling(out, ".fit.csv");
        let mut w = BufWriter::new(File::create(&fit_path)?);
        match &res.fit {
            Some(f) => write_csv(&mut w, &[f])?,
            None => writeln!(w, "insufficient_data")?,
        }
        w.flush()?;
        params["binned_csv"] = json!(res.binned.as_ref().map(|_| binned));
        params["fit_csv"] = json!(fit_path);
    } else {
        params["binned"] = json!(res.binned);
    }
    let meta = metadata("analyze", None, params);
    emit(a.out.as_deref(), meta, |w| write_csv(w, &res.cascades))
}
