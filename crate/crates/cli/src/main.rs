//! `wormtrace`: parse worm-era host and network logs, analyze corpus
//! directories into role verdicts and a propagation graph, simulate
//! labeled outbreaks, and re-render saved reports.
//!
//! Exit codes are a stable contract: 0 success, 1 usage or I/O failure,
//! 2 strict-mode parse failure, 3 anomalies found under
//! `--fail-on-anomaly`.

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use chrono::Duration;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use wormtrace_core::analyze::{analyze_corpus, AnalyzeError, AnalyzeOptions};
use wormtrace_core::corpus::{Corpus, GROUND_TRUTH_FILE};
use wormtrace_core::event::HostId;
use wormtrace_core::logfmt::{
    parse_event_log, parse_firewall_log, parse_ids_alert_log, EventLogKind, YearHint,
};
use wormtrace_core::report::{
    anomaly_count, build_report, from_json, render_summary, scenario_outline, to_json,
    SCHEMA_VERSION,
};
use wormtrace_core::scenario::render_dot;
use wormtrace_core::sim::{simulate, SimHost, SimulationConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_STRICT_PARSE: u8 = 2;
const EXIT_ANOMALY: u8 = 3;

#[derive(Parser)]
#[command(
    name = "wormtrace",
    version,
    about = "Forensic reconstruction of staged worm outbreaks from host and network logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse one log file into JSON events, one per stdout line.
    Parse(ParseArgs),
    /// Analyze a corpus directory into a report and optional DOT graph.
    Analyze(AnalyzeArgs),
    /// Simulate a labeled outbreak into a corpus directory.
    Simulate(SimulateArgs),
    /// Re-render a saved report's summary (and optionally its graph).
    Report(ReportArgs),
}

#[derive(Args)]
struct ParseArgs {
    /// Log file to parse.
    path: PathBuf,
    /// Log format.
    #[arg(long = "type", value_enum)]
    kind: InputKind,
    /// Name of the host the log belongs to (host formats only).
    #[arg(long)]
    host: Option<String>,
    /// Address of that host (host formats only).
    #[arg(long)]
    ip: Option<Ipv4Addr>,
    /// Fail on the first malformed input unit instead of skipping it.
    #[arg(long)]
    strict: bool,
    /// Year completing IDS alert timestamps (ids only; defaults to 1970).
    #[arg(long)]
    year: Option<i32>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum InputKind {
    Firewall,
    Security,
    System,
    Application,
    Ids,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Corpus directory (manifest.json plus the files it declares).
    #[arg(long)]
    corpus: PathBuf,
    /// Where to write the JSON report.
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
    /// Also write the scenario graph as DOT.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Stage window override, seconds.
    #[arg(long, value_name = "SECS")]
    window: Option<u64>,
    /// IDS clock-skew budget override, seconds.
    #[arg(long, value_name = "SECS")]
    skew: Option<u64>,
    /// Year for IDS timestamps, overriding the manifest hint.
    #[arg(long)]
    year: Option<i32>,
    /// Fail on the first malformed log line instead of skipping it.
    #[arg(long)]
    strict: bool,
    /// Exit 3 when the analysis records any anomaly.
    #[arg(long)]
    fail_on_anomaly: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of generated hosts (NODE01, NODE02, ... on 10.0.0.0/24).
    #[arg(
        long,
        conflicts_with = "topology",
        required_unless_present = "topology"
    )]
    hosts: Option<usize>,
    /// JSON topology instead: [{"name": "...", "ip": "...", "vulnerable": true}, ...].
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Host that activates the worm (defaults to the first host).
    #[arg(long)]
    attacker: Option<String>,
    /// RNG seed; equal seeds replay byte-identically.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Probability a worm transfer succeeds once a shell is open.
    #[arg(long, default_value_t = 1.0)]
    prob: f64,
    /// Simulated window length, seconds.
    #[arg(long, value_name = "SECS", default_value_t = 3600)]
    duration: i64,
    /// Benign firewall lines per host (plus occasional benign alerts).
    #[arg(long, default_value_t = 0)]
    noise: u32,
    /// Output corpus directory.
    #[arg(long)]
    out: PathBuf,
    /// Write into a non-empty output directory.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Saved report JSON.
    path: PathBuf,
    /// Re-emit the scenario graph as DOT.
    #[arg(long)]
    dot: Option<PathBuf>,
}

/// A command failure bound to its contractual exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: anyhow::Error) -> Self {
        Failure { code, error }
    }
}

fn usage(msg: impl Display) -> Failure {
    Failure::new(EXIT_USAGE, anyhow!("{msg}"))
}

fn io_fail(err: anyhow::Error) -> Failure {
    Failure::new(EXIT_USAGE, err)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version land here too; keep their zero exit.
            let code = if err.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Parse(args) => cmd_parse(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(io_fail)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(io_fail)
}

fn cmd_parse(args: ParseArgs) -> Result<(), Failure> {
    let text = read_file(&args.path)?;
    let parsed = match args.kind {
        InputKind::Ids => {
            if args.host.is_some() || args.ip.is_some() {
                return Err(usage("--host/--ip apply to host log types, not ids"));
            }
            let year = YearHint::new(args.year.unwrap_or(1970))
                .map_err(|e| usage(format!("bad --year: {e}")))?;
            parse_ids_alert_log(&text, year, args.strict)
        }
        kind => {
            if args.year.is_some() {
                return Err(usage("--year applies only to --type ids"));
            }
            let name = args
                .host
                .ok_or_else(|| usage("host log types require --host NAME"))?;
            let host = HostId::new(name, args.ip.unwrap_or(Ipv4Addr::UNSPECIFIED));
            match kind {
                InputKind::Firewall => parse_firewall_log(&text, &host, args.strict),
                InputKind::Security => {
                    parse_event_log(&text, &host, EventLogKind::Security, args.strict)
                }
                InputKind::System => {
                    parse_event_log(&text, &host, EventLogKind::System, args.strict)
                }
                InputKind::Application => {
                    parse_event_log(&text, &host, EventLogKind::Application, args.strict)
                }
                InputKind::Ids => unreachable!("handled above"),
            }
        }
    };
    let report = parsed
        .map_err(|e| Failure::new(EXIT_STRICT_PARSE, anyhow!("{}: {e}", args.path.display())))?;

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for event in &report.events {
        let line = serde_json::to_string(event).expect("events serialize");
        if let Err(e) = writeln!(out, "{line}") {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                return Ok(());
            }
            return Err(io_fail(anyhow!("writing stdout: {e}")));
        }
    }
    for skip in &report.skipped {
        eprintln!(
            "{}: skipped line {}: {}",
            args.path.display(),
            skip.line,
            skip.reason
        );
    }
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    let corpus = Corpus::load_dir(&args.corpus).map_err(|e| io_fail(e.into()))?;
    let options = AnalyzeOptions {
        strict: args.strict,
        year: args.year,
        stage_window: args.window.map(|s| Duration::seconds(s as i64)),
        ids_skew: args.skew.map(|s| Duration::seconds(s as i64)),
    };
    let analysis = analyze_corpus(&corpus, &options).map_err(|e| match e {
        AnalyzeError::Parse { .. } => Failure::new(EXIT_STRICT_PARSE, e.into()),
        other => io_fail(other.into()),
    })?;

    let report = build_report(&analysis);
    write_file(&args.out, &to_json(&report))?;
    if let Some(dot_path) = &args.dot {
        write_file(dot_path, &render_dot(&analysis.scenario))?;
    }
    print!("{}", render_summary(&report));

    let anomalies = anomaly_count(&report);
    if args.fail_on_anomaly && anomalies > 0 {
        return Err(Failure::new(
            EXIT_ANOMALY,
            anyhow!(
                "{anomalies} anomaly(ies) recorded; see {}",
                args.out.display()
            ),
        ));
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyHost {
    name: String,
    ip: Ipv4Addr,
    #[serde(default = "default_vulnerable")]
    vulnerable: bool,
}

fn default_vulnerable() -> bool {
    true
}

fn sim_hosts(args: &SimulateArgs) -> Result<Vec<SimHost>, Failure> {
    if let Some(path) = &args.topology {
        let text = read_file(path)?;
        let hosts: Vec<TopologyHost> = serde_json::from_str(&text)
            .with_context(|| format!("parsing topology {}", path.display()))
            .map_err(io_fail)?;
        return Ok(hosts
            .into_iter()
            .map(|h| {
                if h.vulnerable {
                    SimHost::new(h.name, h.ip)
                } else {
                    SimHost::patched(h.name, h.ip)
                }
            })
            .collect());
    }
    let n = args.hosts.expect("clap enforces --hosts xor --topology");
    if !(1..=254).contains(&n) {
        return Err(usage("--hosts must be between 1 and 254"));
    }
    Ok((1..=n)
        .map(|i| SimHost::new(format!("NODE{i:02}"), Ipv4Addr::new(10, 0, 0, i as u8)))
        .collect())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let hosts = sim_hosts(&args)?;
    let seed_attacker = match &args.attacker {
        Some(name) => name.clone(),
        None => hosts
            .first()
            .ok_or_else(|| usage("topology declares no hosts"))?
            .name
            .clone(),
    };
    let cfg = SimulationConfig {
        hosts,
        seed_attacker,
        rng_seed: args.seed,
        duration: Duration::seconds(args.duration),
        transfer_success_prob: args.prob,
        noise_per_host: args.noise,
        ..SimulationConfig::default()
    };
    let (corpus, truth) = simulate(&cfg).map_err(usage)?;

    let occupied = args.out.is_dir()
        && fs::read_dir(&args.out)
            .map_err(|e| io_fail(anyhow!("reading {}: {e}", args.out.display())))?
            .next()
            .is_some();
    if occupied && !args.force {
        return Err(usage(format!(
            "{} is not empty; pass --force to write into it",
            args.out.display()
        )));
    }
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .map_err(io_fail)?;
    corpus.write_dir(&args.out).map_err(|e| io_fail(e.into()))?;
    let mut truth_json = serde_json::to_string_pretty(&truth).expect("ground truth serializes");
    truth_json.push('\n');
    write_file(&args.out.join(GROUND_TRUTH_FILE), &truth_json)?;

    println!(
        "wrote {} host(s), {} infection(s) to {}",
        corpus.manifest.hosts.len(),
        truth.infection_times.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), Failure> {
    let text = read_file(&args.path)?;
    let report = from_json(&text)
        .with_context(|| format!("{} is not a report file", args.path.display()))
        .map_err(io_fail)?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(usage(format!(
            "report schema {} is not the supported {}",
            report.schema_version, SCHEMA_VERSION
        )));
    }
    print!("{}", render_summary(&report));
    if let Some(dot_path) = &args.dot {
        write_file(dot_path, &render_dot(&scenario_outline(&report)))?;
    }
    Ok(())
}
