//! Normalized event model shared by every other module.
//!
//! All log sources are reduced to four record shapes: firewall connection
//! events, security (process audit) events, system service events, and
//! network IDS alerts. Host logs are attributed to the host that produced
//! them; IDS alerts describe traffic between two addresses and stay
//! corpus-level. The [`EventStore`] keeps everything in one time-ordered
//! collection so analysis passes can interleave sources.

use std::collections::BTreeMap;
use std::fmt;
use std::net::Ipv4Addr;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identity of a monitored host: its log-source name and its IPv4 address.
///
/// Names compare case-insensitively inside a corpus; addresses must be
/// unique per corpus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HostId {
    pub name: String,
    pub ip: Ipv4Addr,
}

impl HostId {
    pub fn new(name: impl Into<String>, ip: Ipv4Addr) -> Self {
        HostId {
            name: name.into(),
            ip,
        }
    }
}

impl fmt::Display for HostId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.name, self.ip)
    }
}

/// Calendar instant with second resolution; IDS alerts add microseconds.
///
/// Log sources carry no timezone, so this is a naive local time. The type
/// is totally ordered and hashable so stores and matchers can sort on it.
#[derive(Debug, Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub NaiveDateTime);

impl Timestamp {
    pub fn micros(&self) -> u32 {
        self.0.and_utc().timestamp_subsec_micros()
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Fractional seconds are printed only when present (IDS alerts).
        write!(f, "{}", self.0.format("%Y-%m-%d %H:%M:%S%.f"))
    }
}

impl From<NaiveDateTime> for Timestamp {
    fn from(dt: NaiveDateTime) -> Self {
        Timestamp(dt)
    }
}

/// Firewall log action. Unknown actions are preserved verbatim so lenient
/// parsing never drops a line for an unrecognized action alone.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FirewallAction {
    Open,
    OpenInbound,
    Close,
    Drop,
    Other(String),
}

impl FirewallAction {
    pub fn parse(s: &str) -> Self {
        match s {
            "OPEN" => FirewallAction::Open,
            "OPEN-INBOUND" => FirewallAction::OpenInbound,
            "CLOSE" => FirewallAction::Close,
            "DROP" => FirewallAction::Drop,
            other => FirewallAction::Other(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            FirewallAction::Open => "OPEN",
            FirewallAction::OpenInbound => "OPEN-INBOUND",
            FirewallAction::Close => "CLOSE",
            FirewallAction::Drop => "DROP",
            FirewallAction::Other(s) => s,
        }
    }
}

impl fmt::Display for FirewallAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for FirewallAction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for FirewallAction {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(FirewallAction::parse(&s))
    }
}

/// Transport protocol of a firewall log line; unknown values kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Protocol {
    Tcp,
    Udp,
    Other(String),
}

impl Protocol {
    pub fn parse(s: &str) -> Self {
        match s {
            "TCP" => Protocol::Tcp,
            "UDP" => Protocol::Udp,
            other => Protocol::Other(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Protocol::Tcp => "TCP",
            Protocol::Udp => "UDP",
            Protocol::Other(s) => s,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Protocol {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Protocol {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(Protocol::parse(&s))
    }
}

/// One personal-firewall log line: a connection the host opened, accepted,
/// closed, or dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirewallEvent {
    pub host: HostId,
    pub ts: Timestamp,
    pub action: FirewallAction,
    pub protocol: Protocol,
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
}

/// One security (audit) log record. Event ID 592 is process creation; its
/// message carries labeled sub-fields which the parser lifts into the
/// optional fields below.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecurityEvent {
    pub host: HostId,
    pub ts: Timestamp,
    pub event_id: u32,
    /// Account the record was logged under (the "user" column), e.g.
    /// `NT AUTHORITY\SYSTEM`, a named user, or a raw SID.
    pub user: String,
    pub computer: String,
    pub image_file_name: Option<String>,
    pub new_process_id: Option<u32>,
    pub creator_process_id: Option<u32>,
    /// `User Name:` sub-field of the message (machine account or user).
    pub user_name: Option<String>,
    pub domain: Option<String>,
    pub logon_id: Option<String>,
    pub raw_message: String,
}

/// One system log record (service control, shutdown notices, ...).
/// Application-log records are normalized into this same shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemEvent {
    pub host: HostId,
    pub ts: Timestamp,
    pub source: String,
    pub event_id: u32,
    pub computer: String,
    pub raw_message: String,
}

/// Snort-style signature identifier: generator, signature, revision.
#[derive(Debug, Copy, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SigId {
    pub gid: u32,
    pub sid: u32,
    pub rev: u32,
}

impl SigId {
    pub fn new(gid: u32, sid: u32, rev: u32) -> Self {
        SigId { gid, sid, rev }
    }
}

impl fmt::Display for SigId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.gid, self.sid, self.rev)
    }
}

/// Protocol field of an IDS alert. Preprocessor alerts (portscan) carry a
/// raw protocol number instead of a transport name.
#[derive(Debug, Copy, Clone, PartialEq, Eq, Hash)]
pub enum IdsProtocol {
    Tcp,
    Udp,
    Proto(u8),
}

impl fmt::Display for IdsProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdsProtocol::Tcp => f.write_str("TCP"),
            IdsProtocol::Udp => f.write_str("UDP"),
            IdsProtocol::Proto(n) => write!(f, "PROTO:{n}"),
        }
    }
}

impl Serialize for IdsProtocol {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for IdsProtocol {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        match s.as_str() {
            "TCP" => Ok(IdsProtocol::Tcp),
            "UDP" => Ok(IdsProtocol::Udp),
            other => {
                let num = other
                    .strip_prefix("PROTO:")
                    .and_then(|n| n.parse::<u8>().ok())
                    .ok_or_else(|| serde::de::Error::custom("invalid ids protocol"))?;
                Ok(IdsProtocol::Proto(num))
            }
        }
    }
}

/// One network IDS alert. Alerts are observations about traffic between
/// two addresses and are not attributed to any monitored host.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdsAlert {
    pub ts: Timestamp,
    pub sig: SigId,
    pub message: String,
    pub classification: Option<String>,
    pub priority: Option<u32>,
    pub src_ip: Ipv4Addr,
    pub src_port: Option<u16>,
    pub dst_ip: Ipv4Addr,
    pub dst_port: Option<u16>,
    pub protocol: IdsProtocol,
}

/// Any normalized record, tagged by source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormalizedEvent {
    Firewall(FirewallEvent),
    Security(SecurityEvent),
    System(SystemEvent),
    Ids(IdsAlert),
}

impl NormalizedEvent {
    pub fn ts(&self) -> Timestamp {
        match self {
            NormalizedEvent::Firewall(e) => e.ts,
            NormalizedEvent::Security(e) => e.ts,
            NormalizedEvent::System(e) => e.ts,
            NormalizedEvent::Ids(a) => a.ts,
        }
    }

    /// Producing host for host-attributed records; `None` for IDS alerts.
    pub fn host(&self) -> Option<&HostId> {
        match self {
            NormalizedEvent::Firewall(e) => Some(&e.host),
            NormalizedEvent::Security(e) => Some(&e.host),
            NormalizedEvent::System(e) => Some(&e.host),
            NormalizedEvent::Ids(_) => None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StoreError {
    #[error("event references unknown host {name:?}")]
    UnknownHost { name: String },
    #[error("host {name:?} registered with {registered} but event carries {event}")]
    HostIpMismatch {
        name: String,
        registered: Ipv4Addr,
        event: Ipv4Addr,
    },
    #[error("duplicate host name {name:?} (names are case-insensitive)")]
    DuplicateHostName { name: String },
    #[error("duplicate host address {ip} (hosts {first:?} and {second:?})")]
    DuplicateHostIp {
        ip: Ipv4Addr,
        first: String,
        second: String,
    },
}

/// Time-ordered collection of all corpus events plus the host registry.
///
/// Insertion keeps events sorted by timestamp; events with equal
/// timestamps keep their insertion order, so iteration is deterministic
/// for a fixed insertion sequence. Duplicate events are retained.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventStore {
    events: Vec<NormalizedEvent>,
    hosts: BTreeMap<String, HostId>,
}

impl EventStore {
    pub fn new() -> Self {
        Self::default()
    }

    fn host_key(name: &str) -> String {
        name.to_uppercase()
    }

    /// Registers a host. Names are case-insensitive unique; addresses are
    /// unique per corpus.
    pub fn register_host(&mut self, host: HostId) -> Result<(), StoreError> {
        let key = Self::host_key(&host.name);
        if self.hosts.contains_key(&key) {
            return Err(StoreError::DuplicateHostName { name: host.name });
        }
        if let Some(existing) = self.hosts.values().find(|h| h.ip == host.ip) {
            return Err(StoreError::DuplicateHostIp {
                ip: host.ip,
                first: existing.name.clone(),
                second: host.name,
            });
        }
        self.hosts.insert(key, host);
        Ok(())
    }

    pub fn host(&self, name: &str) -> Option<&HostId> {
        self.hosts.get(&Self::host_key(name))
    }

    /// Registered hosts in name order.
    pub fn hosts(&self) -> impl Iterator<Item = &HostId> {
        self.hosts.values()
    }

    /// Inserts one event, preserving time order. Host-attributed events
    /// must reference a registered host with a matching address.
    pub fn insert(&mut self, event: NormalizedEvent) -> Result<(), StoreError> {
        if let Some(host) = event.host() {
            match self.host(&host.name) {
                None => {
                    return Err(StoreError::UnknownHost {
                        name: host.name.clone(),
                    })
                }
                Some(registered) if registered.ip != host.ip => {
                    return Err(StoreError::HostIpMismatch {
                        name: host.name.clone(),
                        registered: registered.ip,
                        event: host.ip,
                    })
                }
                Some(_) => {}
            }
        }
        // partition_point finds the slot after all events with ts <= new
        // ts, which is what keeps equal-timestamp events in input order.
        let ts = event.ts();
        let idx = self.events.partition_point(|e| e.ts() <= ts);
        self.events.insert(idx, event);
        Ok(())
    }

    /// All events (host logs and IDS alerts) in time order.
    pub fn iter(&self) -> impl Iterator<Item = &NormalizedEvent> {
        self.events.iter()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Time-ordered events attributed to one host. IDS alerts are never
    /// host-attributed and are excluded; read them via [`ids_alerts`].
    ///
    /// [`ids_alerts`]: EventStore::ids_alerts
    pub fn events_for_host(&self, name: &str) -> Result<Vec<&NormalizedEvent>, StoreError> {
        let host = self.host(name).ok_or_else(|| StoreError::UnknownHost {
            name: name.to_string(),
        })?;
        Ok(self
            .events
            .iter()
            .filter(|e| e.host().is_some_and(|h| h == host))
            .collect())
    }

    /// Time-ordered IDS alerts of the corpus.
    pub fn ids_alerts(&self) -> Vec<&IdsAlert> {
        self.events
            .iter()
            .filter_map(|e| match e {
                NormalizedEvent::Ids(a) => Some(a),
                _ => None,
            })
            .collect()
    }
}
