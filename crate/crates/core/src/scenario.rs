//! Fusing per-host verdicts into the attack-propagation graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::classify::{HostRole, Role};
use crate::event::Timestamp;
use crate::pattern::MatchConfig;

/// Which side's logs (or the IDS) witnessed an edge.
#[derive(Debug, Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceSource {
    VictimLog,
    AttackerLog,
    Ids,
}

/// One directed attack: `from` exploited (or probed) `to`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: Ipv4Addr,
    pub to: Ipv4Addr,
    pub ports_reached: BTreeSet<u16>,
    /// Earliest 135-stage time across all contributing evidence.
    pub first_seen: Timestamp,
    pub evidence_sources: BTreeSet<EvidenceSource>,
    pub anomalies: Vec<String>,
}

impl Edge {
    /// Ports in exploit-stage order (135, 4444, 69), the label investigators
    /// expect, rather than numeric order.
    pub fn ports_label(&self) -> String {
        let staged: Vec<String> = [135u16, 4444, 69]
            .iter()
            .filter(|p| self.ports_reached.contains(p))
            .map(u16::to_string)
            .collect();
        staged.join(",")
    }
}

/// The reconstructed outbreak: every host verdict, every witnessed attack
/// edge, and the peer addresses that appear in evidence but have no logs
/// in the corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioGraph {
    pub nodes: Vec<HostRole>,
    pub edges: Vec<Edge>,
    pub unattributed_peers: Vec<Ipv4Addr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Contribution {
    from: Ipv4Addr,
    to: Ipv4Addr,
    t135: Timestamp,
    source: EvidenceSource,
}

struct EdgeBuilder {
    from: Ipv4Addr,
    to: Ipv4Addr,
    first_seen: Timestamp,
    per_source_ports: BTreeMap<EvidenceSource, BTreeSet<u16>>,
}

impl EdgeBuilder {
    fn finish(self) -> Edge {
        let mut ports_reached = BTreeSet::new();
        for ports in self.per_source_ports.values() {
            ports_reached.extend(ports.iter().copied());
        }
        let mut anomalies = Vec::new();
        if let (Some(v), Some(a)) = (
            self.per_source_ports.get(&EvidenceSource::VictimLog),
            self.per_source_ports.get(&EvidenceSource::AttackerLog),
        ) {
            if v != a {
                anomalies.push(format!(
                    "victim log reports ports {:?} but attacker log reports {:?}",
                    v.iter().collect::<Vec<_>>(),
                    a.iter().collect::<Vec<_>>()
                ));
            }
        }
        Edge {
            from: self.from,
            to: self.to,
            ports_reached,
            first_seen: self.first_seen,
            evidence_sources: self.per_source_ports.keys().copied().collect(),
            anomalies,
        }
    }
}

/// Builds the propagation graph from every host's verdict.
///
/// Each inbound exploit ladder on host B from peer A and each outbound
/// ladder on host A toward peer B contributes to the edge A→B; the two
/// views of one attack fuse when their 135-stage times fall within
/// `stage_window` of the edge's earliest time (greedy clustering in time
/// order, so repeated attacks on the same pair become separate edges).
/// A transfer alert attached to a victim match marks its edge as IDS
/// corroborated. Addresses seen only in evidence, never as corpus hosts,
/// are listed as unattributed peers.
pub fn build_scenario(roles: &[HostRole], cfg: &MatchConfig) -> ScenarioGraph {
    let mut nodes = roles.to_vec();
    nodes.sort_by(|a, b| (&a.host.name, a.host.ip).cmp(&(&b.host.name, b.host.ip)));

    // (contribution, ports) pairs from every ladder on every host.
    let mut contributions: Vec<(Contribution, BTreeSet<u16>)> = Vec::new();
    for node in &nodes {
        for v in &node.evidence.victims {
            let seq = &v.sequence;
            if seq.peer == node.host.ip {
                continue;
            }
            contributions.push((
                Contribution {
                    from: seq.peer,
                    to: node.host.ip,
                    t135: seq.t135,
                    source: EvidenceSource::VictimLog,
                },
                seq.ports_reached.clone(),
            ));
        }
        if let Some(a) = &node.evidence.attacker {
            for seq in &a.sequences {
                if seq.peer == node.host.ip {
                    continue;
                }
                contributions.push((
                    Contribution {
                        from: node.host.ip,
                        to: seq.peer,
                        t135: seq.t135,
                        source: EvidenceSource::AttackerLog,
                    },
                    seq.ports_reached.clone(),
                ));
            }
        }
    }
    contributions.sort_by_key(|(c, _)| (c.from, c.to, c.t135, c.source));

    // Greedy time-order clustering per (from, to) pair: a contribution
    // joins the open cluster while it stays within stage_window of the
    // cluster's earliest time.
    let mut builders: Vec<EdgeBuilder> = Vec::new();
    let mut open: BTreeMap<(Ipv4Addr, Ipv4Addr), usize> = BTreeMap::new();
    for (c, ports) in contributions {
        let key = (c.from, c.to);
        let idx = match open.get(&key) {
            Some(&idx)
                if c.t135.0.signed_duration_since(builders[idx].first_seen.0)
                    <= cfg.stage_window =>
            {
                idx
            }
            _ => {
                builders.push(EdgeBuilder {
                    from: c.from,
                    to: c.to,
                    first_seen: c.t135,
                    per_source_ports: BTreeMap::new(),
                });
                open.insert(key, builders.len() - 1);
                builders.len() - 1
            }
        };
        builders[idx]
            .per_source_ports
            .entry(c.source)
            .or_default()
            .extend(ports);
    }

    // IDS corroboration attaches to the edge the victim ladder landed in.
    for node in &nodes {
        for v in &node.evidence.victims {
            if v.ids_tftp_get.is_none() {
                continue;
            }
            let (from, to, t135) = (v.sequence.peer, node.host.ip, v.sequence.t135);
            if let Some(b) = builders.iter_mut().find(|b| {
                b.from == from
                    && b.to == to
                    && b.first_seen <= t135
                    && t135.0.signed_duration_since(b.first_seen.0) <= cfg.stage_window
            }) {
                b.per_source_ports.entry(EvidenceSource::Ids).or_default();
            }
        }
    }

    let mut edges: Vec<Edge> = builders.into_iter().map(EdgeBuilder::finish).collect();
    edges.sort_by_key(|e| (e.first_seen, e.from, e.to));

    let host_ips: BTreeSet<Ipv4Addr> = nodes.iter().map(|n| n.host.ip).collect();
    let mut unattributed: BTreeSet<Ipv4Addr> = BTreeSet::new();
    for edge in &edges {
        unattributed.insert(edge.from);
        unattributed.insert(edge.to);
    }
    for node in &nodes {
        for v in &node.evidence.victims {
            if let Some(alert) = &v.ids_tftp_get {
                unattributed.insert(alert.src_ip);
                unattributed.insert(alert.dst_ip);
            }
        }
        if let Some(a) = &node.evidence.attacker {
            if let Some(alert) = &a.ids_portsweep {
                unattributed.insert(alert.src_ip);
                unattributed.insert(alert.dst_ip);
            }
        }
    }
    let unattributed_peers = unattributed
        .into_iter()
        .filter(|ip| !host_ips.contains(ip))
        .collect();

    ScenarioGraph {
        nodes,
        edges,
        unattributed_peers,
    }
}

/// The graph's edges as an investigator-facing chronology: sorted by
/// first-seen time, ties broken by endpoint addresses.
pub fn topological_timeline(graph: &ScenarioGraph) -> Vec<(Timestamp, &Edge)> {
    let mut timeline: Vec<(Timestamp, &Edge)> =
        graph.edges.iter().map(|e| (e.first_seen, e)).collect();
    timeline.sort_by_key(|(ts, e)| (*ts, e.from, e.to));
    timeline
}

/// Rendering knobs for [`render_dot_with`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DotOptions {
    /// When one source has more than this many probe-only ({135}) edges,
    /// they collapse into a single summary node.
    pub scan_fanout_threshold: usize,
}

impl Default for DotOptions {
    fn default() -> Self {
        DotOptions {
            scan_fanout_threshold: 10,
        }
    }
}

fn dot_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn role_fill(role: Role) -> &'static str {
    match role {
        Role::Clean => "white",
        Role::Scanned => "lightyellow",
        Role::PartiallyExploited => "orange",
        Role::Victim => "lightpink",
        Role::Attacker => "tomato",
        Role::MultiStep => "orchid",
    }
}

/// Renders the graph as DOT with the default options.
pub fn render_dot(graph: &ScenarioGraph) -> String {
    render_dot_with(graph, &DotOptions::default())
}

/// Renders the graph as a DOT digraph.
///
/// Host nodes are labeled `name (ip) [role]` and filled by role; the
/// outbreak origin is double-bordered (`peripheries=2`). Edges carry the
/// reached ports in stage order and turn red when they carry anomalies.
/// Probe-only fan-out beyond `scan_fanout_threshold` collapses into one
/// dashed summary node per source. Output is deterministic for a given
/// graph.
pub fn render_dot_with(graph: &ScenarioGraph, opts: &DotOptions) -> String {
    let mut out = String::from("digraph scenario {\n");
    if graph.nodes.is_empty() && graph.edges.is_empty() && graph.unattributed_peers.is_empty() {
        out.push_str("}\n");
        return out;
    }
    out.push_str("    rankdir=LR;\n");

    let ip_names: BTreeMap<Ipv4Addr, &str> = graph
        .nodes
        .iter()
        .map(|n| (n.host.ip, n.host.name.as_str()))
        .collect();
    let node_id = |ip: Ipv4Addr| -> String {
        match ip_names.get(&ip) {
            Some(name) => (*name).to_string(),
            None => ip.to_string(),
        }
    };

    // Decide which probe-only edges to collapse, per source.
    let mut probe_only_by_source: BTreeMap<Ipv4Addr, Vec<&Edge>> = BTreeMap::new();
    for edge in &graph.edges {
        if edge.ports_reached.iter().copied().collect::<Vec<_>>() == vec![135] {
            probe_only_by_source
                .entry(edge.from)
                .or_default()
                .push(edge);
        }
    }
    let collapsed_sources: BTreeSet<Ipv4Addr> = probe_only_by_source
        .iter()
        .filter(|(_, edges)| edges.len() > opts.scan_fanout_threshold)
        .map(|(src, _)| *src)
        .collect();
    let is_collapsed = |edge: &Edge| {
        collapsed_sources.contains(&edge.from)
            && edge.ports_reached.iter().copied().collect::<Vec<_>>() == vec![135]
    };

    for node in &graph.nodes {
        let mut attrs = format!(
            "label={label}, style=filled, fillcolor={fill}",
            label = dot_quote(&format!(
                "{} ({}) [{}]",
                node.host.name, node.host.ip, node.role
            )),
            fill = dot_quote(role_fill(node.role)),
        );
        if node.origin {
            attrs.push_str(", peripheries=2");
        }
        let _ = writeln!(out, "    {} [{}];", dot_quote(&node.host.name), attrs);
    }

    // Unattributed peers appear only when a rendered edge touches them.
    let mut rendered_ips: BTreeSet<Ipv4Addr> = BTreeSet::new();
    for edge in &graph.edges {
        if !is_collapsed(edge) {
            rendered_ips.insert(edge.from);
            rendered_ips.insert(edge.to);
        } else {
            rendered_ips.insert(edge.from);
        }
    }
    for ip in &graph.unattributed_peers {
        if rendered_ips.contains(ip) {
            let _ = writeln!(
                out,
                "    {} [label={}, style=dashed];",
                dot_quote(&ip.to_string()),
                dot_quote(&format!("{ip} [unattributed]")),
            );
        }
    }

    for src in &collapsed_sources {
        let count = probe_only_by_source[src].len();
        let summary_id = format!("scan:{src}");
        let _ = writeln!(
            out,
            "    {} [label={}, shape=box, style=dashed];",
            dot_quote(&summary_id),
            dot_quote(&format!("{count} hosts scanned")),
        );
        let _ = writeln!(
            out,
            "    {} -> {} [label=\"135\", style=dashed];",
            dot_quote(&node_id(*src)),
            dot_quote(&summary_id),
        );
    }

    for edge in &graph.edges {
        if is_collapsed(edge) {
            continue;
        }
        let mut attrs = format!("label={}", dot_quote(&edge.ports_label()));
        if !edge.anomalies.is_empty() {
            attrs.push_str(", color=red");
        }
        let _ = writeln!(
            out,
            "    {} -> {} [{}];",
            dot_quote(&node_id(edge.from)),
            dot_quote(&node_id(edge.to)),
            attrs
        );
    }

    out.push_str("}\n");
    out
}
