//! Forensic reconstruction of Blaster-style worm outbreaks from host and
//! network logs.
//!
//! The crate turns raw Windows firewall logs, exported Security/System
//! event logs, and Snort-style alert files into normalized events
//! ([`event`], [`logfmt`]), matches the worm's staged trace pattern per
//! host ([`pattern`]), assigns each host a role verdict ([`classify`]),
//! and fuses everything into a propagation graph ([`scenario`]). A
//! deterministic outbreak simulator ([`sim`]) generates labeled corpora
//! for end-to-end validation, and [`analyze`] wires the whole pipeline
//! together behind a serializable report ([`report`]).

pub mod analyze;
pub mod classify;
pub mod corpus;
pub mod event;
pub mod logfmt;
pub mod pattern;
pub mod report;
pub mod scenario;
pub mod sim;

pub use analyze::{Analysis, AnalyzeError, AnalyzeOptions};
pub use classify::{HostRole, IpRole, Role};
pub use corpus::{Corpus, CorpusManifest, LogKind};
pub use event::{
    EventStore, FirewallAction, FirewallEvent, HostId, IdsAlert, IdsProtocol, NormalizedEvent,
    Protocol, SecurityEvent, SigId, StoreError, SystemEvent, Timestamp,
};
pub use logfmt::{ParseError, ParseReport, SkippedLine, YearHint};
pub use pattern::{
    AttackerMatch, Completeness, Direction, ExploitSequence, MatchConfig, MultiStepMatch,
    VictimMatch,
};
pub use report::{build_report, render_summary, AnalysisReport};
pub use scenario::{Edge, EvidenceSource, ScenarioGraph};
pub use sim::{simulate, GroundTruth, SimHost, SimulationConfig};
