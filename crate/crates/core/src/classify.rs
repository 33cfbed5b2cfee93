//! Host role verdicts and firewall locality auditing.

use std::fmt;

use serde::{Deserialize, Serialize};
use std::net::Ipv4Addr;
use thiserror::Error;

use crate::event::{FirewallAction, FirewallEvent, HostId};
use crate::pattern::{AttackerMatch, Completeness, MatchConfig, MultiStepMatch, VictimMatch};

/// Verdict for one host, ordered by precedence: when several kinds of
/// evidence coexist the highest variant wins.
#[derive(Debug, Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Clean,
    Scanned,
    PartiallyExploited,
    Victim,
    Attacker,
    MultiStep,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Clean => "clean",
            Role::Scanned => "scanned",
            Role::PartiallyExploited => "partially-exploited",
            Role::Victim => "victim",
            Role::Attacker => "attacker",
            Role::MultiStep => "multi-step",
        })
    }
}

/// The match objects a verdict was derived from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence {
    pub victims: Vec<VictimMatch>,
    pub attacker: Option<AttackerMatch>,
    pub multistep: Option<MultiStepMatch>,
}

/// One host's role verdict plus the evidence behind it. Anomalies never
/// change the verdict; they are carried for the investigator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostRole {
    pub host: HostId,
    pub role: Role,
    /// Set only on attackers with no prior completed infection: the
    /// outbreak seed.
    pub origin: bool,
    pub evidence: Evidence,
    pub anomalies: Vec<String>,
}

/// Which side of a logged session is the logging host and which is the
/// peer. `local` and `remote` always differ.
#[derive(Debug, Copy, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IpRole {
    pub local: Ipv4Addr,
    pub remote: Ipv4Addr,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IpRoleError {
    #[error("IP role inference does not apply to action {action}")]
    NotApplicable { action: FirewallAction },
    #[error("event is self-directed ({ip} on both sides)")]
    SelfDirected { ip: Ipv4Addr },
}

/// Infers which endpoint of a firewall event is the logging host: an
/// outbound `OPEN` is initiated locally (local = source), an
/// `OPEN-INBOUND` was initiated by the peer (local = destination). Other
/// actions carry no such dependency.
pub fn infer_ip_roles(ev: &FirewallEvent) -> Result<IpRole, IpRoleError> {
    let (local, remote) = match ev.action {
        FirewallAction::Open => (ev.src_ip, ev.dst_ip),
        FirewallAction::OpenInbound => (ev.dst_ip, ev.src_ip),
        ref action => {
            return Err(IpRoleError::NotApplicable {
                action: action.clone(),
            })
        }
    };
    if local == remote {
        return Err(IpRoleError::SelfDirected { ip: local });
    }
    Ok(IpRole { local, remote })
}

/// Checks every session-opening event in a host's firewall log against
/// the host's registered address and describes each disagreement:
/// possible spoofing, a mislabeled corpus, or a multi-homed host.
pub fn audit_host_ip(host: &HostId, events: &[&FirewallEvent]) -> Vec<String> {
    let mut anomalies = Vec::new();
    for ev in events {
        match infer_ip_roles(ev) {
            Ok(roles) if roles.local != host.ip => anomalies.push(format!(
                "{} {} {} -> {}: inferred local address {} does not match host address {}",
                ev.ts, ev.action, ev.src_ip, ev.dst_ip, roles.local, host.ip
            )),
            Ok(_) => {}
            Err(IpRoleError::SelfDirected { ip }) => anomalies.push(format!(
                "{} {} {} -> {}: self-directed session (both endpoints {})",
                ev.ts, ev.action, ev.src_ip, ev.dst_ip, ip
            )),
            Err(IpRoleError::NotApplicable { .. }) => {}
        }
    }
    anomalies
}

/// Collapses one host's matches into a single verdict.
///
/// Precedence: multi-step beats attacker beats (full) victim; ladders
/// that stalled at 4444 mean partial exploitation, at 135 mere scanning;
/// nothing at all is clean. An attacker is the outbreak origin unless a
/// completed infection of its own precedes its first outbound probe —
/// in which case the multi-step verdict takes over anyway.
pub fn classify_host(
    host: &HostId,
    victims: Vec<VictimMatch>,
    attacker: Option<AttackerMatch>,
    multistep: Option<MultiStepMatch>,
    cfg: &MatchConfig,
) -> HostRole {
    let role = if multistep.is_some() {
        Role::MultiStep
    } else if attacker.is_some() {
        Role::Attacker
    } else if victims.iter().any(|v| v.completeness == Completeness::Full) {
        Role::Victim
    } else if victims.iter().any(|v| v.sequence.t4444.is_some()) {
        Role::PartiallyExploited
    } else if !victims.is_empty() {
        Role::Scanned
    } else {
        Role::Clean
    };

    let origin = role == Role::Attacker && {
        let first_outbound = attacker
            .as_ref()
            .expect("attacker present when role is Attacker")
            .first_t135();
        !victims.iter().any(|v| {
            v.completeness == Completeness::Full
                && v.infection_time(cfg).is_some_and(|t| t <= first_outbound)
        })
    };

    HostRole {
        host: host.clone(),
        role,
        origin,
        evidence: Evidence {
            victims,
            attacker,
            multistep,
        },
        anomalies: Vec::new(),
    }
}
