//! `tickcep` — one binary wiring the whole stack: synthetic data generation,
//! the benchmark harness server, the engine-backed solver client, oracle
//! verification, distribution reports, and per-symbol series export.
//!
//! Every flag is mirrored by a `TICKCEP_*` environment variable; explicit
//! flags win.

use std::fs;
use std::io::{BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use tickcep_core::client::{run_session, SolveOptions};
use tickcep_core::datagen::{self, GenConfig};
use tickcep_core::dataset;
use tickcep_core::engine::{DumpRow, Engine, EngineConfig, Retention};
use tickcep_core::harness::{serve, Dataset, HarnessConfig, HarnessService, Pace, SessionSummary};
use tickcep_core::oracle::{diff, oracle_run, OracleConfig};
use tickcep_core::windowing::window_start_instant;
use tickcep_core::wireproto::TcpApiClient;
use tickcep_core::Symbol;

#[derive(Parser)]
#[command(
    name = "tickcep",
    version,
    about = "Financial tick-data CEP engine and benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic tick dataset (one CSV per day + manifest)
    Generate(GenerateArgs),
    /// Serve a dataset as a benchmark harness over TCP
    Serve(ServeArgs),
    /// Run the engine against a harness and print the session summary
    Solve(SolveArgs),
    /// Check an engine dump against the brute-force oracle
    Verify(VerifyArgs),
    /// Measure a dataset's distribution against its generator targets
    Report(ReportArgs),
    /// Export one symbol's per-window EMA series as plot-ready CSV
    ExportSeries(ExportSeriesArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, env = "TICKCEP_SEED", default_value_t = 42)]
    seed: u64,
    #[arg(long, env = "TICKCEP_SYMBOLS", default_value_t = 5504)]
    symbols: usize,
    #[arg(long, env = "TICKCEP_EVENTS", default_value_t = 1_000_000)]
    events: u64,
    #[arg(long, env = "TICKCEP_DAYS", default_value_t = 7)]
    days: u32,
    /// First simulated day (YYYY-MM-DD)
    #[arg(long, env = "TICKCEP_START_DATE", default_value = "2021-11-08")]
    start_date: NaiveDate,
    #[arg(long, env = "TICKCEP_ZIPF_EXPONENT", default_value_t = 1.2)]
    zipf_exponent: f64,
    /// Fraction of events landing outside trading hours
    #[arg(long, env = "TICKCEP_TRICKLE", default_value_t = 0.005)]
    trickle: f64,
    /// Emit a header row in each CSV
    #[arg(long, env = "TICKCEP_HEADER")]
    header: bool,
    /// Also emit one non-price (quote) row per price row
    #[arg(long, env = "TICKCEP_FULL")]
    full: bool,
    /// Output directory
    #[arg(long, env = "TICKCEP_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    /// Dataset file or directory of per-day CSVs
    #[arg(long, env = "TICKCEP_DATA")]
    data: PathBuf,
    /// Subscription schedule seed
    #[arg(long, env = "TICKCEP_SEED", default_value_t = 42)]
    seed: u64,
    /// Largest batch size a session may request
    #[arg(long, env = "TICKCEP_BATCH_SIZE", default_value_t = 100_000)]
    batch_size: u32,
    #[arg(long, env = "TICKCEP_HOST", default_value = "127.0.0.1")]
    host: String,
    /// Listening port (0 picks a free one)
    #[arg(long, env = "TICKCEP_PORT", default_value_t = tickcep_core::wireproto::DEFAULT_PORT)]
    port: u16,
    /// Directory for per-session summary JSON lines
    #[arg(long, env = "TICKCEP_OUT")]
    out: Option<PathBuf>,
    #[arg(long, env = "TICKCEP_PACE", value_enum, default_value_t = PaceArg::Asap)]
    pace: PaceArg,
    #[arg(long, env = "TICKCEP_MAX_SESSIONS", default_value_t = 64)]
    max_sessions: usize,
    #[arg(long, env = "TICKCEP_SESSION_TIMEOUT_S", default_value_t = 600)]
    session_timeout_s: u64,
    /// Probability that a batch replaces the subscription set
    #[arg(long, env = "TICKCEP_P_CHANGE", default_value_t = 0.1)]
    p_change: f64,
    /// Symbols per subscription set
    #[arg(long, env = "TICKCEP_SUBSCRIPTIONS", default_value_t = 100)]
    subscriptions: usize,
    /// Data files start with a header row
    #[arg(long, env = "TICKCEP_HEADER")]
    header: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PaceArg {
    /// Serve batches as fast as they are pulled
    Asap,
    /// Delay batches by their event-time gaps
    Realtime,
}

#[derive(Args)]
struct SolveArgs {
    /// Harness address
    #[arg(long, env = "TICKCEP_ADDR", default_value = "127.0.0.1:5023")]
    addr: String,
    #[arg(long, env = "TICKCEP_NAME", default_value = "tickcep-engine")]
    name: String,
    #[arg(long, env = "TICKCEP_BATCH_SIZE", default_value_t = 1000)]
    batch_size: u32,
    /// Echoed into the session and mixed into its subscription schedule
    #[arg(long, env = "TICKCEP_DATASET_SEED", default_value_t = 42)]
    dataset_seed: u64,
    /// Engine config file (key = value lines)
    #[arg(long, env = "TICKCEP_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, env = "TICKCEP_WINDOW_MINUTES")]
    window_minutes: Option<u32>,
    #[arg(long, env = "TICKCEP_SUPPRESS_FIRST_WINDOW_ADVICE")]
    suppress_first_window_advice: bool,
    #[arg(long, env = "TICKCEP_RETENTION", value_enum)]
    retention: Option<RetentionArg>,
    #[arg(long, env = "TICKCEP_SHARDS")]
    shards: Option<usize>,
    /// Write the engine's per-window dump (JSON lines) for `verify`
    #[arg(long, env = "TICKCEP_DUMP")]
    dump: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RetentionArg {
    Off,
    Full,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, env = "TICKCEP_DATA")]
    data: PathBuf,
    #[arg(long, env = "TICKCEP_ENGINE_DUMP")]
    engine_dump: PathBuf,
    #[arg(long, env = "TICKCEP_WINDOW_MINUTES", default_value_t = 5)]
    window_minutes: u32,
    #[arg(long, env = "TICKCEP_SUPPRESS_FIRST_WINDOW_ADVICE")]
    suppress_first_window_advice: bool,
    #[arg(long, env = "TICKCEP_HEADER")]
    header: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, env = "TICKCEP_DATA")]
    data: PathBuf,
    /// Print the report as JSON
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ExportSeriesArgs {
    #[arg(long, env = "TICKCEP_DATA")]
    data: PathBuf,
    /// Symbol in canonical form, e.g. RDSA.NL
    #[arg(long, env = "TICKCEP_SYMBOL")]
    symbol: String,
    /// Output CSV file
    #[arg(long, env = "TICKCEP_OUT")]
    out: PathBuf,
    #[arg(long, env = "TICKCEP_WINDOW_MINUTES", default_value_t = 5)]
    window_minutes: u32,
    #[arg(long, env = "TICKCEP_SUPPRESS_FIRST_WINDOW_ADVICE")]
    suppress_first_window_advice: bool,
    #[arg(long, env = "TICKCEP_HEADER")]
    header: bool,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    match Cli::parse().command {
        Command::Generate(args) => generate(args),
        Command::Serve(args) => serve_cmd(args),
        Command::Solve(args) => solve(args),
        Command::Verify(args) => verify(args),
        Command::Report(args) => report(args),
        Command::ExportSeries(args) => export_series(args),
    }
}

fn generate(args: GenerateArgs) -> Result<()> {
    let config = GenConfig {
        seed: args.seed,
        n_symbols: args.symbols,
        days: args.days,
        start_date: args.start_date,
        total_events: args.events,
        zipf_exponent: args.zipf_exponent,
        off_hours_trickle: args.trickle,
        nonprice_ratio: if args.full { 1.0 } else { 0.0 },
        header: args.header,
        ..GenConfig::default()
    };
    let manifest = datagen::write_dataset(&config, &args.out)?;
    println!(
        "wrote {} rows across {} files to {}",
        manifest.total_rows,
        manifest.files.len(),
        args.out.display()
    );
    for file in &manifest.files {
        println!(
            "  {}  {} rows  sha256 {}",
            file.name,
            file.rows,
            &file.sha256[..16]
        );
    }
    Ok(())
}

fn serve_cmd(args: ServeArgs) -> Result<()> {
    let dataset = Dataset::load(&args.data, args.header)
        .with_context(|| format!("loading dataset from {}", args.data.display()))?;
    if dataset.is_empty() {
        bail!("dataset {} contains no price events", args.data.display());
    }
    log::info!(
        "loaded {} events, {} symbols from {}",
        dataset.len(),
        dataset.universe.len(),
        args.data.display()
    );

    let config = HarnessConfig {
        subscription_seed: args.seed,
        p_change: args.p_change,
        subscription_size: args.subscriptions,
        max_batch_size: args.batch_size,
        max_sessions: args.max_sessions,
        session_timeout: Duration::from_secs(args.session_timeout_s),
        pace: match args.pace {
            PaceArg::Asap => Pace::Asap,
            PaceArg::Realtime => Pace::Realtime,
        },
    };

    let mut service = HarnessService::new(Arc::new(dataset), config);
    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        let path = out.join("sessions.jsonl");
        let file = Mutex::new(
            fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .with_context(|| format!("opening {}", path.display()))?,
        );
        service = service.with_report_sink(Box::new(move |report| {
            let mut file = file.lock().expect("summary file lock");
            if let Ok(line) = serde_json::to_string(report) {
                let _ = writeln!(file, "{line}");
            }
        }));
    }

    let listener = TcpListener::bind((args.host.as_str(), args.port))
        .with_context(|| format!("binding {}:{}", args.host, args.port))?;
    println!("listening on {}", listener.local_addr()?);
    std::io::stdout().flush()?;
    serve(listener, Arc::new(service))?;
    Ok(())
}

fn engine_config(
    file: Option<&Path>,
    window_minutes: Option<u32>,
    suppress: bool,
    retention: Option<RetentionArg>,
    shards: Option<usize>,
) -> Result<EngineConfig> {
    let mut config = match file {
        Some(path) => EngineConfig::parse(
            &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        )?,
        None => EngineConfig::default(),
    };
    if let Some(minutes) = window_minutes {
        config.window_minutes = minutes;
    }
    if suppress {
        config.suppress_first_window_advice = true;
    }
    if let Some(retention) = retention {
        config.retention = match retention {
            RetentionArg::Off => Retention::Off,
            RetentionArg::Full => Retention::Full,
        };
    }
    if let Some(shards) = shards {
        config.shards = shards;
    }
    Ok(config)
}

fn solve(args: SolveArgs) -> Result<()> {
    let mut config = engine_config(
        args.config.as_deref(),
        args.window_minutes,
        args.suppress_first_window_advice,
        args.retention,
        args.shards,
    )?;
    if args.dump.is_some() {
        config.retention = Retention::Full;
    }
    let mut engine = Engine::new(config)?;

    let client = TcpApiClient::connect(&args.addr)
        .with_context(|| format!("connection failed: harness at {} unreachable", args.addr))?;
    let summary = run_session(
        &client,
        &mut engine,
        &SolveOptions {
            name: args.name,
            dataset_seed: args.dataset_seed,
            batch_size: args.batch_size,
        },
    )?;
    print_summary(&summary);
    if engine.late_events() > 0 {
        println!("late events dropped: {}", engine.late_events());
    }

    if let Some(path) = &args.dump {
        let rows = engine.dump_rows()?;
        let mut out = BufWriter::new(fs::File::create(path)?);
        for row in &rows {
            serde_json::to_writer(&mut out, row)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        println!("dump: {} rows written to {}", rows.len(), path.display());
    }
    Ok(())
}

fn print_summary(summary: &SessionSummary) {
    let ms = |ns: f64| ns / 1e6;
    println!(
        "session {}: {} batches in {:.3} s ({:.1} batches/s)",
        summary.name,
        summary.batches,
        summary.duration_ns as f64 / 1e9,
        summary.throughput_batches_per_s
    );
    println!(
        "q1 latency: mean {:.3} ms, p90 {:.3} ms",
        ms(summary.q1_latency.mean_ns),
        ms(summary.q1_latency.p90_ns as f64)
    );
    println!(
        "q2 latency: mean {:.3} ms, p90 {:.3} ms",
        ms(summary.q2_latency.mean_ns),
        ms(summary.q2_latency.p90_ns as f64)
    );
    if summary.incomplete {
        println!(
            "incomplete: {} batches without both results",
            summary.late_results
        );
    }
}

fn verify(args: VerifyArgs) -> Result<()> {
    let events = dataset::load_events(&args.data, args.header)?;
    let oracle_out = oracle_run(
        &events,
        OracleConfig {
            window_minutes: args.window_minutes,
            suppress_first_window_advice: args.suppress_first_window_advice,
        },
    );

    let mut rows = Vec::new();
    let text = fs::read_to_string(&args.engine_dump)
        .with_context(|| format!("reading {}", args.engine_dump.display()))?;
    for (lineno, line) in text.lines().enumerate() {
        let row: DumpRow = serde_json::from_str(line)
            .with_context(|| format!("{}:{}", args.engine_dump.display(), lineno + 1))?;
        rows.push(row);
    }

    let discrepancies = diff(&oracle_out, &rows);
    if discrepancies.is_empty() {
        println!(
            "verified: {} dump rows match the oracle over {} events",
            rows.len(),
            events.len()
        );
        return Ok(());
    }
    for d in discrepancies.iter().take(25) {
        println!("discrepancy: {d}");
    }
    if discrepancies.len() > 25 {
        println!("... and {} more", discrepancies.len() - 25);
    }
    std::process::exit(1);
}

fn report(args: ReportArgs) -> Result<()> {
    let manifest_dir = if args.data.is_dir() {
        Some(args.data.clone())
    } else {
        args.data.parent().map(Path::to_path_buf)
    };
    let targets = manifest_dir
        .as_deref()
        .and_then(datagen::read_manifest)
        .map(|m| m.config)
        .unwrap_or_default();

    let report = datagen::validate_distribution(&args.data, &targets)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        let (etr, fr, nl) = report.exchange_shares;
        println!(
            "events: {}   symbols: {}",
            report.total_events, report.distinct_symbols
        );
        println!(
            "exchange shares: ETR {:.1}% / FR {:.1}% / NL {:.1}%   (targets {:.0}/{:.0}/{:.0}, ±2%)",
            etr * 100.0,
            fr * 100.0,
            nl * 100.0,
            targets.exchange_mix.etr * 100.0,
            targets.exchange_mix.fr * 100.0,
            targets.exchange_mix.nl * 100.0
        );
        println!(
            "index share: {:.1}%   (target {:.0}%, ±2%)",
            report.index_share * 100.0,
            targets.index_share * 100.0
        );
        println!(
            "rank-frequency slope: {:.3}   (target {:.1}, ±0.15)",
            report.rank_frequency_slope, -targets.zipf_exponent
        );
        println!("top-1% symbol share: {:.1}%", report.top1pct_share * 100.0);
        println!(
            "diurnal profile correlation: {:.3}",
            report.diurnal_correlation
        );
        println!(
            "checks: {}",
            if report.checks.all_ok() {
                "all ok"
            } else {
                "FAILED"
            }
        );
    }
    if !report.checks.all_ok() {
        std::process::exit(1);
    }
    Ok(())
}

fn export_series(args: ExportSeriesArgs) -> Result<()> {
    let symbol: Symbol = args
        .symbol
        .parse()
        .with_context(|| format!("bad symbol {:?}", args.symbol))?;
    let events = dataset::load_events(&args.data, args.header)?;

    let mut engine = Engine::new(EngineConfig {
        window_minutes: args.window_minutes,
        suppress_first_window_advice: args.suppress_first_window_advice,
        retention: Retention::Full,
        ..EngineConfig::default()
    })?;
    engine.ingest_all(&events);

    if !engine.has_symbol(&symbol) {
        bail!(
            "unknown symbol {symbol}: no events in {}",
            args.data.display()
        );
    }
    let series = engine.snapshot_series(&symbol)?;
    let spec = engine.window_spec();

    let mut out = BufWriter::new(fs::File::create(&args.out)?);
    writeln!(out, "window_start,close,ema38,ema100,advisory")?;
    for row in series {
        let start = window_start_instant(row.window, spec);
        writeln!(
            out,
            "{}T{},{},{},{},{}",
            start.date().format("%Y-%m-%d"),
            tickcep_core::TickTimestamp::format_time(start.time_of_day_ns()),
            row.close,
            row.pair.ema38,
            row.pair.ema100,
            row.advisory.map(|k| k.as_str()).unwrap_or("")
        )?;
    }
    out.flush()?;
    println!(
        "wrote {} window rows for {symbol} to {}",
        series.len(),
        args.out.display()
    );
    Ok(())
}
