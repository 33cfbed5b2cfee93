//! Serializable analysis report and its human-readable rendering.
//!
//! [`AnalysisReport`] flattens an [`Analysis`] into plain, versioned JSON:
//! evidence is digested down to the fields an investigator acts on
//! (stage times, processes, corroborating alerts) instead of embedding
//! whole log records. The JSON round-trips losslessly, and
//! [`render_summary`] prints the same content as a terminal-friendly
//! digest.

use std::collections::BTreeSet;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::analyze::Analysis;
use crate::classify::{HostRole, Role};
use crate::event::{HostId, Timestamp};
use crate::pattern::{
    AttackerMatch, Completeness, ExploitSequence, MatchConfig, MultiStepMatch, VictimMatch,
};
use crate::scenario::{topological_timeline, Edge, EvidenceSource, ScenarioGraph};

/// Bumped on any breaking change to the JSON layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: ConfigEcho,
    pub summary: SummaryCounts,
    pub hosts: Vec<HostReport>,
    pub edges: Vec<EdgeReport>,
    /// Edges ordered by first activity, the outbreak storyline.
    pub timeline: Vec<TimelineEntry>,
    /// Addresses seen in evidence that match no corpus host.
    pub unattributed_peers: Vec<Ipv4Addr>,
    /// Lines the lenient parser rejected, per source file.
    pub skipped: Vec<SkipReport>,
}

/// The effective matcher configuration a run used.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub stage_window_secs: i64,
    pub ids_skew_secs: i64,
    pub worm_binaries: BTreeSet<String>,
    pub loader_binaries: BTreeSet<String>,
    pub system_accounts: BTreeSet<String>,
    /// Year IDS alert timestamps were resolved against.
    pub ids_year: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryCounts {
    pub hosts: usize,
    pub firewall_events: usize,
    pub security_events: usize,
    pub system_events: usize,
    pub application_events: usize,
    pub ids_alerts: usize,
    pub skipped_lines: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostReport {
    pub name: String,
    pub ip: Ipv4Addr,
    pub role: Role,
    pub origin: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub victim_sequences: Vec<VictimDigest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attacker: Option<AttackerDigest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multistep: Option<MultiStepDigest>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anomalies: Vec<String>,
}

/// One inbound exploit ladder against this host.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VictimDigest {
    pub peer: Ipv4Addr,
    pub completeness: Completeness,
    pub t135: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t4444: Option<Timestamp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t69: Option<Timestamp>,
    /// System-account loader/worm process creations in the window.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub impact_processes: Vec<ProcessDigest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rpc_crash: Option<Timestamp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart_notice: Option<Timestamp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tftp_alert: Option<Timestamp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infection_time: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackerDigest {
    pub first_probe: Timestamp,
    pub sequences: Vec<SequenceDigest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<ProcessDigest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub portsweep_alert: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiStepDigest {
    /// Who completed the infection that precedes the outbound activity.
    pub infected_by: Ipv4Addr,
    pub infection_time: Timestamp,
    pub first_outbound: Timestamp,
}

/// One outbound exploit ladder from this host.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceDigest {
    pub peer: Ipv4Addr,
    pub ports_reached: Vec<u16>,
    pub t135: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t4444: Option<Timestamp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t69: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessDigest {
    pub ts: Timestamp,
    pub image: String,
    pub user: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pid: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub from: Ipv4Addr,
    pub to: Ipv4Addr,
    pub ports_reached: Vec<u16>,
    pub first_seen: Timestamp,
    pub evidence_sources: Vec<EvidenceSource>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anomalies: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub ts: Timestamp,
    pub from: Ipv4Addr,
    pub to: Ipv4Addr,
    pub ports: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    pub source: String,
    pub line: u32,
    pub reason: String,
}

/// Ports in exploit-stage order (135, 4444, 69), the order investigators
/// read the ladder in.
fn staged_ports(ports: &BTreeSet<u16>) -> Vec<u16> {
    let mut out: Vec<u16> = [135u16, 4444, 69]
        .into_iter()
        .filter(|p| ports.contains(p))
        .collect();
    let extras: Vec<u16> = ports.iter().copied().filter(|p| !out.contains(p)).collect();
    out.extend(extras);
    out
}

fn sequence_digest(seq: &ExploitSequence) -> SequenceDigest {
    SequenceDigest {
        peer: seq.peer,
        ports_reached: staged_ports(&seq.ports_reached),
        t135: seq.t135,
        t4444: seq.t4444,
        t69: seq.t69,
    }
}

fn victim_digest(m: &VictimMatch, cfg: &MatchConfig) -> VictimDigest {
    VictimDigest {
        peer: m.sequence.peer,
        completeness: m.completeness,
        t135: m.sequence.t135,
        t4444: m.sequence.t4444,
        t69: m.sequence.t69,
        impact_processes: m
            .impact_592
            .iter()
            .map(|e| ProcessDigest {
                ts: e.ts,
                image: e.image_file_name.clone().unwrap_or_default(),
                user: e.user.clone(),
                pid: e.new_process_id,
            })
            .collect(),
        rpc_crash: m.impact_7031.as_ref().map(|e| e.ts),
        restart_notice: m.impact_1074.as_ref().map(|e| e.ts),
        tftp_alert: m.ids_tftp_get.as_ref().map(|a| a.ts),
        infection_time: m.infection_time(cfg),
    }
}

fn attacker_digest(m: &AttackerMatch) -> AttackerDigest {
    AttackerDigest {
        first_probe: m.first_t135(),
        sequences: m.sequences.iter().map(sequence_digest).collect(),
        activation: m.activation_592.as_ref().map(|e| ProcessDigest {
            ts: e.ts,
            image: e.image_file_name.clone().unwrap_or_default(),
            user: e.user.clone(),
            pid: e.new_process_id,
        }),
        portsweep_alert: m.ids_portsweep.as_ref().map(|a| a.ts),
    }
}

fn multistep_digest(m: &MultiStepMatch, cfg: &MatchConfig) -> MultiStepDigest {
    MultiStepDigest {
        infected_by: m.as_victim.sequence.peer,
        infection_time: m
            .as_victim
            .infection_time(cfg)
            .expect("multistep evidence is a full victim match"),
        first_outbound: m.as_attacker.first_t135(),
    }
}

/// Flattens an analysis into the versioned report shape.
pub fn build_report(analysis: &Analysis) -> AnalysisReport {
    let cfg = &analysis.match_config;
    let hosts = analysis
        .roles
        .iter()
        .map(|role| HostReport {
            name: role.host.name.clone(),
            ip: role.host.ip,
            role: role.role,
            origin: role.origin,
            victim_sequences: role
                .evidence
                .victims
                .iter()
                .map(|m| victim_digest(m, cfg))
                .collect(),
            attacker: role.evidence.attacker.as_ref().map(attacker_digest),
            multistep: role
                .evidence
                .multistep
                .as_ref()
                .map(|m| multistep_digest(m, cfg)),
            anomalies: role.anomalies.clone(),
        })
        .collect();
    let edges = analysis
        .scenario
        .edges
        .iter()
        .map(|e| EdgeReport {
            from: e.from,
            to: e.to,
            ports_reached: staged_ports(&e.ports_reached),
            first_seen: e.first_seen,
            evidence_sources: e.evidence_sources.iter().copied().collect(),
            anomalies: e.anomalies.clone(),
        })
        .collect();
    let timeline = topological_timeline(&analysis.scenario)
        .into_iter()
        .map(|(ts, edge)| TimelineEntry {
            ts,
            from: edge.from,
            to: edge.to,
            ports: edge.ports_label(),
        })
        .collect();
    let skipped = analysis
        .skips
        .iter()
        .flat_map(|s| {
            s.lines.iter().map(|l| SkipReport {
                source: s.source.clone(),
                line: l.line,
                reason: l.reason.clone(),
            })
        })
        .collect();

    AnalysisReport {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: ConfigEcho {
            stage_window_secs: cfg.stage_window.num_seconds(),
            ids_skew_secs: cfg.ids_skew.num_seconds(),
            worm_binaries: cfg.worm_binaries.clone(),
            loader_binaries: cfg.loader_binaries.clone(),
            system_accounts: cfg.system_accounts.clone(),
            ids_year: analysis.ids_year,
        },
        summary: SummaryCounts {
            hosts: analysis.summary.hosts,
            firewall_events: analysis.summary.firewall_events,
            security_events: analysis.summary.security_events,
            system_events: analysis.summary.system_events,
            application_events: analysis.summary.application_events,
            ids_alerts: analysis.summary.ids_alerts,
            skipped_lines: analysis.summary.skipped_lines,
        },
        hosts,
        edges,
        timeline,
        unattributed_peers: analysis.scenario.unattributed_peers.clone(),
        skipped,
    }
}

/// Canonical JSON rendering: pretty-printed with a trailing newline so
/// repeated runs are byte-identical.
pub fn to_json(report: &AnalysisReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}

pub fn from_json(text: &str) -> Result<AnalysisReport, serde_json::Error> {
    serde_json::from_str(text)
}

/// Renders the investigator-facing digest: corpus volume, a host/role
/// table, the attack timeline, and anything that deserves suspicion.
pub fn render_summary(report: &AnalysisReport) -> String {
    let mut out = String::new();
    let s = &report.summary;
    out.push_str(&format!(
        "Corpus: {} host(s); {} firewall, {} security, {} system, {} application event(s); {} IDS alert(s)",
        s.hosts, s.firewall_events, s.security_events, s.system_events, s.application_events,
        s.ids_alerts
    ));
    if s.skipped_lines > 0 {
        out.push_str(&format!("; {} line(s) skipped", s.skipped_lines));
    }
    out.push('\n');
    out.push_str(&format!(
        "Config: stage window {} s, IDS skew {} s, year {}\n",
        report.config.stage_window_secs, report.config.ids_skew_secs, report.config.ids_year
    ));

    if !report.hosts.is_empty() {
        out.push('\n');
        let name_width = report
            .hosts
            .iter()
            .map(|h| h.name.len())
            .chain(["HOST".len()])
            .max()
            .unwrap_or(4);
        let ip_width = report
            .hosts
            .iter()
            .map(|h| h.ip.to_string().len())
            .chain(["IP".len()])
            .max()
            .unwrap_or(2);
        out.push_str(&format!(
            "{:name_width$}  {:ip_width$}  {:<19}  NOTES\n",
            "HOST", "IP", "ROLE"
        ));
        for host in &report.hosts {
            let mut notes = Vec::new();
            if host.origin {
                notes.push("outbreak origin".to_string());
            }
            if let Some(ms) = &host.multistep {
                notes.push(format!(
                    "infected by {} at {}, attacking from {}",
                    ms.infected_by, ms.infection_time, ms.first_outbound
                ));
            } else if let Some(t) = host
                .victim_sequences
                .iter()
                .filter_map(|v| v.infection_time)
                .min()
            {
                notes.push(format!("infected at {t}"));
            }
            if let Some(att) = &host.attacker {
                if host.multistep.is_none() {
                    notes.push(format!("first probe at {}", att.first_probe));
                }
                if att.portsweep_alert.is_some() {
                    notes.push("portsweep reported".to_string());
                }
            }
            if !host.anomalies.is_empty() {
                notes.push(format!("{} anomaly(ies)", host.anomalies.len()));
            }
            let role = if host.origin {
                format!("{} (origin)", host.role)
            } else {
                host.role.to_string()
            };
            out.push_str(&format!(
                "{:name_width$}  {:ip_width$}  {:<19}  {}\n",
                host.name,
                host.ip.to_string(),
                role,
                notes.join("; ")
            ));
        }
    }

    if !report.timeline.is_empty() {
        out.push_str("\nTimeline:\n");
        for entry in &report.timeline {
            out.push_str(&format!(
                "  {}  {} -> {}  [{}]\n",
                entry.ts, entry.from, entry.to, entry.ports
            ));
        }
    }
    if !report.unattributed_peers.is_empty() {
        let peers: Vec<String> = report
            .unattributed_peers
            .iter()
            .map(|ip| ip.to_string())
            .collect();
        out.push_str(&format!("\nUnattributed peers: {}\n", peers.join(", ")));
    }
    let anomaly_count: usize = report
        .hosts
        .iter()
        .map(|h| h.anomalies.len())
        .chain(report.edges.iter().map(|e| e.anomalies.len()))
        .sum();
    if anomaly_count > 0 {
        out.push_str("\nAnomalies:\n");
        for host in &report.hosts {
            for a in &host.anomalies {
                out.push_str(&format!("  {}: {a}\n", host.name));
            }
        }
        for edge in &report.edges {
            for a in &edge.anomalies {
                out.push_str(&format!("  {} -> {}: {a}\n", edge.from, edge.to));
            }
        }
    }
    if !report.skipped.is_empty() {
        out.push_str("\nSkipped lines:\n");
        for skip in &report.skipped {
            out.push_str(&format!(
                "  {} line {}: {}\n",
                skip.source, skip.line, skip.reason
            ));
        }
    }
    out
}

/// Rebuilds the graph skeleton a report preserves: host identities and
/// verdicts, edges, and unattributed peers (evidence stays flattened in
/// the digests). DOT rendering reads exactly these fields, so a saved
/// report re-renders to the same drawing as the original analysis.
pub fn scenario_outline(report: &AnalysisReport) -> ScenarioGraph {
    let mut nodes: Vec<HostRole> = report
        .hosts
        .iter()
        .map(|h| HostRole {
            host: HostId::new(h.name.clone(), h.ip),
            role: h.role,
            origin: h.origin,
            evidence: Default::default(),
            anomalies: h.anomalies.clone(),
        })
        .collect();
    nodes.sort_by(|a, b| (&a.host.name, a.host.ip).cmp(&(&b.host.name, b.host.ip)));
    let mut edges: Vec<Edge> = report
        .edges
        .iter()
        .map(|e| Edge {
            from: e.from,
            to: e.to,
            ports_reached: e.ports_reached.iter().copied().collect(),
            first_seen: e.first_seen,
            evidence_sources: e.evidence_sources.iter().copied().collect(),
            anomalies: e.anomalies.clone(),
        })
        .collect();
    edges.sort_by_key(|e| (e.first_seen, e.from, e.to));
    ScenarioGraph {
        nodes,
        edges,
        unattributed_peers: report.unattributed_peers.clone(),
    }
}

/// Total anomalies across hosts and edges, the `--fail-on-anomaly` gate.
pub fn anomaly_count(report: &AnalysisReport) -> usize {
    report
        .hosts
        .iter()
        .map(|h| h.anomalies.len())
        .chain(report.edges.iter().map(|e| e.anomalies.len()))
        .sum()
}
