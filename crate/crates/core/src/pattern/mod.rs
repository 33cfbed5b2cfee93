//! Staged exploit-trace matching against host logs.
//!
//! The worm's propagation leaves a three-stage connection ladder in the
//! firewall log (RPC on 135/TCP, shell on 4444/TCP, transfer on 69/UDP)
//! plus process-creation and service-crash impact on the exploited side.
//! [`extract_sequences`] recovers the ladders; [`match_victim`],
//! [`match_attacker`], and [`match_multistep`] attach the corroborating
//! host and IDS evidence around them.

mod matchers;
mod sequence;

pub use matchers::{match_attacker, match_multistep, match_victim};
pub use sequence::extract_sequences;

use std::collections::BTreeSet;
use std::net::Ipv4Addr;

use chrono::Duration;
use serde::{Deserialize, Serialize};

use crate::event::{
    FirewallEvent, HostId, IdsAlert, NormalizedEvent, SecurityEvent, SystemEvent, Timestamp,
};

pub const RPC_PORT: u16 = 135;
pub const SHELL_PORT: u16 = 4444;
pub const TFTP_PORT: u16 = 69;

/// Knobs of the trace matcher.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchConfig {
    /// Maximum span between a sequence's 135 stage and any later stage or
    /// impact event attached to it.
    pub stage_window: Duration,
    /// Tolerated disagreement between host log clocks and the IDS clock
    /// when attaching alert corroboration.
    pub ids_skew: Duration,
    /// Basenames of the worm payload binaries.
    pub worm_binaries: BTreeSet<String>,
    /// Basenames of transfer-loader binaries launched by the exploit shell.
    pub loader_binaries: BTreeSet<String>,
    /// Accounts under which shell-driven impact processes run.
    pub system_accounts: BTreeSet<String>,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            stage_window: Duration::seconds(60),
            ids_skew: Duration::seconds(30),
            worm_binaries: ["msblast.exe", "blasterA.exe"]
                .into_iter()
                .map(String::from)
                .collect(),
            loader_binaries: ["tftp.exe"].into_iter().map(String::from).collect(),
            system_accounts: ["NT AUTHORITY\\SYSTEM"]
                .into_iter()
                .map(String::from)
                .collect(),
        }
    }
}

impl MatchConfig {
    pub fn is_worm_binary(&self, image: &str) -> bool {
        let base = basename(image);
        self.worm_binaries
            .iter()
            .any(|w| w.eq_ignore_ascii_case(base))
    }

    pub fn is_loader_binary(&self, image: &str) -> bool {
        let base = basename(image);
        self.loader_binaries
            .iter()
            .any(|l| l.eq_ignore_ascii_case(base))
    }

    /// Worm payload or loader: anything that counts as exploit impact.
    pub fn is_impact_binary(&self, image: &str) -> bool {
        self.is_worm_binary(image) || self.is_loader_binary(image)
    }

    pub fn is_system_account(&self, user: &str) -> bool {
        self.system_accounts
            .iter()
            .any(|a| a.eq_ignore_ascii_case(user))
    }
}

/// Final path component of a Windows or POSIX style image path.
pub fn basename(path: &str) -> &str {
    path.rsplit(['\\', '/']).next().unwrap_or(path)
}

/// Whose firewall log the ladder was read from: the exploited side sees
/// inbound 135/4444 and opens the transfer itself; the exploiting side is
/// the mirror image.
#[derive(Debug, Copy, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Inbound,
    Outbound,
}

/// One recovered 135 -> 4444 -> 69 connection ladder against one peer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExploitSequence {
    pub peer: Ipv4Addr,
    pub t135: Timestamp,
    pub t4444: Option<Timestamp>,
    pub t69: Option<Timestamp>,
    pub direction: Direction,
    pub ports_reached: BTreeSet<u16>,
}

/// How far the evidence goes: `Full` means the transfer stage completed
/// and the worm payload demonstrably started; `PortsOnly` covers ladders
/// that stalled earlier (or lack the payload process evidence).
#[derive(Debug, Copy, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Completeness {
    Full,
    PortsOnly,
}

/// Inbound exploit ladder with its attached impact evidence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VictimMatch {
    pub host: HostId,
    pub sequence: ExploitSequence,
    /// Process creations under a system account launching a loader or
    /// worm binary, inside the sequence's stage window.
    pub impact_592: Vec<SecurityEvent>,
    /// RPC service crash, if logged inside the window.
    pub impact_7031: Option<SystemEvent>,
    /// Restart notice, if logged inside the window.
    pub impact_1074: Option<SystemEvent>,
    /// IDS corroboration of the transfer (victim pulls from the peer).
    pub ids_tftp_get: Option<IdsAlert>,
    pub completeness: Completeness,
}

impl VictimMatch {
    /// When the infection completed: the later of the transfer stage and
    /// the worm payload's process creation. `None` unless the match is
    /// `Full` (both pieces present).
    pub fn infection_time(&self, cfg: &MatchConfig) -> Option<Timestamp> {
        let t69 = self.sequence.t69?;
        let worm_592 = self
            .impact_592
            .iter()
            .filter(|e| {
                e.image_file_name
                    .as_deref()
                    .is_some_and(|image| cfg.is_worm_binary(image))
            })
            .map(|e| e.ts)
            .min()?;
        Some(t69.max(worm_592))
    }
}

/// Outbound attack activity: every outbound ladder, plus the non-system
/// process creation that started the worm and the IDS sweep alert.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackerMatch {
    pub host: HostId,
    pub sequences: Vec<ExploitSequence>,
    pub activation_592: Option<SecurityEvent>,
    pub ids_portsweep: Option<IdsAlert>,
}

impl AttackerMatch {
    /// Time of the earliest outbound 135 stage.
    pub fn first_t135(&self) -> Timestamp {
        self.sequences
            .iter()
            .map(|s| s.t135)
            .min()
            .expect("attacker match always carries at least one sequence")
    }
}

/// A host that was fully exploited and then attacked others.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiStepMatch {
    pub host: HostId,
    pub as_victim: VictimMatch,
    pub as_attacker: AttackerMatch,
    /// Worm launch under a SID/non-system user marking the relay start.
    pub relay_592: Option<SecurityEvent>,
}

/// Per-source view of one host's time-ordered events, the input shape of
/// the matchers.
#[derive(Debug, Clone, Default)]
pub struct HostEvents<'a> {
    pub firewall: Vec<&'a FirewallEvent>,
    pub security: Vec<&'a SecurityEvent>,
    pub system: Vec<&'a SystemEvent>,
}

impl<'a> HostEvents<'a> {
    pub fn from_events<I>(events: I) -> Self
    where
        I: IntoIterator<Item = &'a NormalizedEvent>,
    {
        let mut view = HostEvents::default();
        for event in events {
            match event {
                NormalizedEvent::Firewall(e) => view.firewall.push(e),
                NormalizedEvent::Security(e) => view.security.push(e),
                NormalizedEvent::System(e) => view.system.push(e),
                NormalizedEvent::Ids(_) => {}
            }
        }
        view
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basename_handles_windows_and_posix_separators() {
        assert_eq!(basename("C:\\WINDOWS\\system32\\tftp.exe"), "tftp.exe");
        assert_eq!(basename("/tmp/msblast.exe"), "msblast.exe");
        assert_eq!(basename("msblast.exe"), "msblast.exe");
        assert_eq!(
            basename("C:\\Documents and Settings\\Kamal\\Desktop\\blasterA.exe"),
            "blasterA.exe"
        );
    }

    #[test]
    fn binary_matching_is_case_insensitive_on_basenames() {
        let cfg = MatchConfig::default();
        assert!(cfg.is_worm_binary("C:\\WINDOWS\\system32\\MSBLAST.EXE"));
        assert!(cfg.is_worm_binary("%WinDir%\\System32\\msblast.exe"));
        assert!(cfg.is_worm_binary("C:\\x\\blastera.exe"));
        assert!(cfg.is_loader_binary("C:\\WINDOWS\\system32\\Tftp.exe"));
        assert!(!cfg.is_worm_binary("C:\\WINDOWS\\system32\\notepad.exe"));
        assert!(!cfg.is_loader_binary("C:\\tftp.exe.bak"));
    }

    #[test]
    fn system_account_matching_is_case_insensitive() {
        let cfg = MatchConfig::default();
        assert!(cfg.is_system_account("NT AUTHORITY\\SYSTEM"));
        assert!(cfg.is_system_account("nt authority\\system"));
        assert!(!cfg.is_system_account("Kamal"));
        assert!(!cfg.is_system_account("S-1-5-21-725345543-1547161642-839522115-1003"));
    }

    #[test]
    fn default_config_windows() {
        let cfg = MatchConfig::default();
        assert_eq!(cfg.stage_window, Duration::seconds(60));
        assert_eq!(cfg.ids_skew, Duration::seconds(30));
    }
}
