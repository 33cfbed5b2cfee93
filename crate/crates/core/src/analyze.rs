//! End-to-end pipeline: a loaded corpus in, per-host role verdicts and a
//! scenario graph out.
//!
//! The flow is parse → match → classify → correlate. Host logs are parsed
//! first so the IDS year hint can fall back to the earliest firewall
//! timestamp when neither the caller nor the manifest supplies one. In
//! lenient mode unparseable lines are collected per source file and
//! surfaced on the [`Analysis`]; in strict mode the first bad line aborts
//! with the offending file and line number.

use std::collections::BTreeMap;

use chrono::{Datelike, Duration};
use thiserror::Error;

use crate::classify::{audit_host_ip, classify_host, HostRole};
use crate::corpus::{Corpus, CorpusError, LogKind, IDS_LOG_PATH};
use crate::event::{EventStore, NormalizedEvent, StoreError};
use crate::logfmt::{
    parse_event_log, parse_firewall_log, parse_ids_alert_log, EventLogKind, ParseError,
    SkippedLine, YearHint,
};
use crate::pattern::{match_attacker, match_multistep, match_victim, HostEvents, MatchConfig};
use crate::scenario::{build_scenario, ScenarioGraph};

/// Year assumed for IDS alerts when nothing else pins one down.
const FALLBACK_YEAR: i32 = 1970;

/// Caller-side knobs for one analysis run.
#[derive(Debug, Clone, Default)]
pub struct AnalyzeOptions {
    /// Abort on the first unparseable line instead of skipping it.
    pub strict: bool,
    /// Year for IDS alert timestamps; overrides the manifest's hint.
    pub year: Option<i32>,
    /// Overrides the effective stage window (CLI `--window`).
    pub stage_window: Option<Duration>,
    /// Overrides the effective IDS skew tolerance (CLI `--skew`).
    pub ids_skew: Option<Duration>,
}

/// Unparseable lines from one source file, kept for the report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSkips {
    /// Corpus-relative file, e.g. `SAHIB/security.log` or `ids/alert.log`.
    pub source: String,
    pub lines: Vec<SkippedLine>,
}

/// Volume counts over the parsed corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CorpusSummary {
    pub hosts: usize,
    pub firewall_events: usize,
    pub security_events: usize,
    pub system_events: usize,
    /// Application logs are parsed and counted but feed no matching rule.
    pub application_events: usize,
    pub ids_alerts: usize,
    pub skipped_lines: usize,
}

/// Everything one analysis run produced.
#[derive(Debug, Clone)]
pub struct Analysis {
    /// The effective matcher configuration after manifest and caller
    /// overrides.
    pub match_config: MatchConfig,
    /// Year the IDS alerts were stamped with.
    pub ids_year: i32,
    /// One verdict per manifest host, in manifest order.
    pub roles: Vec<HostRole>,
    pub scenario: ScenarioGraph,
    pub summary: CorpusSummary,
    pub skips: Vec<SourceSkips>,
}

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{source_file} line {}: {}", error.line, error.reason)]
    Parse {
        source_file: String,
        error: ParseError,
    },
}

/// Runs the full pipeline over an in-memory corpus.
pub fn analyze_corpus(corpus: &Corpus, options: &AnalyzeOptions) -> Result<Analysis, AnalyzeError> {
    corpus.check_complete()?;

    let mut match_config = corpus
        .manifest
        .match_config
        .apply_to(MatchConfig::default());
    if let Some(window) = options.stage_window {
        match_config.stage_window = window;
    }
    if let Some(skew) = options.ids_skew {
        match_config.ids_skew = skew;
    }

    let mut store = EventStore::new();
    for host in &corpus.manifest.hosts {
        store.register_host(host.id())?;
    }

    let mut summary = CorpusSummary {
        hosts: corpus.manifest.hosts.len(),
        ..CorpusSummary::default()
    };
    let mut skips = Vec::new();
    let mut collect = |source: String, lines: Vec<SkippedLine>, summary: &mut CorpusSummary| {
        if !lines.is_empty() {
            summary.skipped_lines += lines.len();
            skips.push(SourceSkips { source, lines });
        }
    };

    // Host logs first: the IDS year fallback needs the firewall events.
    for host in &corpus.manifest.hosts {
        let id = host.id();
        let logs: &BTreeMap<LogKind, String> = &corpus.host_logs[&host.name];
        for kind in &host.logs {
            let source = format!("{}/{}", host.name, kind.file_name());
            let text = &logs[kind];
            let report = match kind {
                LogKind::Firewall => parse_firewall_log(text, &id, options.strict),
                LogKind::Security => {
                    parse_event_log(text, &id, EventLogKind::Security, options.strict)
                }
                LogKind::System => parse_event_log(text, &id, EventLogKind::System, options.strict),
                LogKind::Application => {
                    parse_event_log(text, &id, EventLogKind::Application, options.strict)
                }
            }
            .map_err(|error| AnalyzeError::Parse {
                source_file: source.clone(),
                error,
            })?;
            collect(source, report.skipped, &mut summary);
            for event in report.events {
                match &event {
                    NormalizedEvent::Firewall(_) => summary.firewall_events += 1,
                    NormalizedEvent::Security(_) => summary.security_events += 1,
                    NormalizedEvent::System(_) => summary.system_events += 1,
                    NormalizedEvent::Ids(_) => {}
                }
                // Application records share the system-event shape but by
                // design feed no rule; they are counted and dropped.
                if *kind == LogKind::Application {
                    summary.system_events -= 1;
                    summary.application_events += 1;
                    continue;
                }
                store.insert(event)?;
            }
        }
    }

    let ids_year = options
        .year
        .or(corpus.manifest.year_hint)
        .or_else(|| {
            store
                .iter()
                .filter_map(|e| match e {
                    NormalizedEvent::Firewall(f) => Some(f.ts.0.year()),
                    _ => None,
                })
                .min()
        })
        .unwrap_or(FALLBACK_YEAR);

    if let Some(text) = corpus.ids_log.as_deref() {
        let hint = YearHint::new(ids_year).map_err(|error| AnalyzeError::Parse {
            source_file: IDS_LOG_PATH.to_string(),
            error,
        })?;
        let report = parse_ids_alert_log(text, hint, options.strict).map_err(|error| {
            AnalyzeError::Parse {
                source_file: IDS_LOG_PATH.to_string(),
                error,
            }
        })?;
        collect(IDS_LOG_PATH.to_string(), report.skipped, &mut summary);
        for event in report.events {
            summary.ids_alerts += 1;
            store.insert(event)?;
        }
    }

    let ids = store.ids_alerts();
    let mut roles = Vec::new();
    for host in &corpus.manifest.hosts {
        let id = host.id();
        let events = store.events_for_host(&host.name)?;
        let view = HostEvents::from_events(events.iter().copied());
        let victims = match_victim(&id, &view, &ids, &match_config);
        let attacker = match_attacker(&id, &view, &ids, &match_config);
        let multistep = match_multistep(&id, &victims, attacker.as_ref(), &match_config);
        let mut role = classify_host(&id, victims, attacker, multistep, &match_config);
        role.anomalies.extend(audit_host_ip(&id, &view.firewall));
        roles.push(role);
    }

    let scenario = build_scenario(&roles, &match_config);
    Ok(Analysis {
        match_config,
        ids_year,
        roles,
        scenario,
        summary,
        skips,
    })
}
