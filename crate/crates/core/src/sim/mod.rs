//! Synthetic worm-outbreak generator.
//!
//! [`simulate`] plays out an infection over a configured set of hosts and
//! produces two things: a [`Corpus`] of per-host firewall/security/system
//! logs plus one IDS alert file, and the [`GroundTruth`] of what actually
//! happened. Clock skew (per host and for the IDS sensor) is applied only
//! when the logs are rendered; the ground truth always carries true event
//! times. Every emitted file round-trips through the strict parsers, and a
//! run is a pure function of its config, so [`replay_check`] can verify
//! byte-level reproducibility.

mod engine;

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::Role;
use crate::corpus::Corpus;
use crate::event::Timestamp;

/// One machine taking part in the simulated outbreak.
#[derive(Debug, Clone)]
pub struct SimHost {
    pub name: String,
    pub ip: Ipv4Addr,
    /// Vulnerable hosts accept the RPC exploit. Patched ones drop the probe
    /// silently, so only the scanner's side of it is ever logged.
    pub vulnerable: bool,
}

impl SimHost {
    pub fn new(name: impl Into<String>, ip: Ipv4Addr) -> Self {
        SimHost {
            name: name.into(),
            ip,
            vulnerable: true,
        }
    }

    pub fn patched(name: impl Into<String>, ip: Ipv4Addr) -> Self {
        SimHost {
            name: name.into(),
            ip,
            vulnerable: false,
        }
    }
}

/// Full description of a simulated run. `Default` gives the reference
/// outbreak shape (one-hour window, certain transfers, two-second scan
/// pacing, IDS sensor running nine seconds slow) with no hosts; callers
/// fill in `hosts` and `seed_attacker` via struct update syntax.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub hosts: Vec<SimHost>,
    /// Name of the host that starts out running the worm.
    pub seed_attacker: String,
    pub rng_seed: u64,
    pub start_time: Timestamp,
    /// Observation window; nothing is emitted past `start_time + duration`.
    pub duration: Duration,
    /// Probability that the TFTP transfer completes once the shell is open.
    pub transfer_success_prob: f64,
    /// Per-target overrides of `transfer_success_prob`, keyed by host name.
    pub transfer_success_overrides: BTreeMap<String, f64>,
    /// Pause between a scanner's probe batches.
    pub scan_interarrival: Duration,
    /// Delay between consecutive exploit stages, drawn uniformly from
    /// `[exploit_latency_min, exploit_latency_max]` in whole seconds.
    pub exploit_latency_min: Duration,
    pub exploit_latency_max: Duration,
    /// How long a scanner hangs on a dead TFTP transfer before moving on.
    /// The target stays locked to that scanner until the timer expires.
    pub tftp_timeout: Duration,
    /// Whether the RPC crash reboots the victim, blacking out its logs.
    pub reboot_after_crash: bool,
    /// Length of the log blackout while a victim reboots.
    pub reboot_gap: Duration,
    /// Constant offset of the IDS sensor clock relative to true time.
    pub ids_clock_offset: Duration,
    /// Constant per-host clock offsets, keyed by host name.
    pub per_host_clock_offsets: BTreeMap<String, Duration>,
    /// Number of targets a scanner probes in one batch.
    pub scan_batch_width: usize,
    /// Benign firewall lines (and some benign IDS alerts) mixed into each
    /// host's logs. Zero keeps the corpus minimal.
    pub noise_per_host: u32,
    /// Account the worm binary is launched under on the seed host.
    pub activation_user: String,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        let start = NaiveDate::from_ymd_opt(2009, 9, 7)
            .expect("valid date")
            .and_hms_opt(14, 40, 0)
            .expect("valid time");
        SimulationConfig {
            hosts: Vec::new(),
            seed_attacker: String::new(),
            rng_seed: 0,
            start_time: Timestamp(start),
            duration: Duration::hours(1),
            transfer_success_prob: 1.0,
            transfer_success_overrides: BTreeMap::new(),
            scan_interarrival: Duration::seconds(2),
            exploit_latency_min: Duration::seconds(2),
            exploit_latency_max: Duration::seconds(3),
            tftp_timeout: Duration::seconds(20),
            reboot_after_crash: true,
            reboot_gap: Duration::seconds(60),
            ids_clock_offset: Duration::seconds(-9),
            per_host_clock_offsets: BTreeMap::new(),
            scan_batch_width: 1,
            noise_per_host: 0,
            activation_user: "Kamal".into(),
        }
    }
}

impl SimulationConfig {
    /// Rejects configs that cannot be played out. Runs before anything is
    /// generated so a bad config never produces partial output.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.hosts.is_empty() {
            return Err(ConfigError::NoHosts);
        }
        let mut names = BTreeSet::new();
        let mut ips = BTreeSet::new();
        for host in &self.hosts {
            if !names.insert(host.name.to_ascii_uppercase()) {
                return Err(ConfigError::DuplicateHostName(host.name.clone()));
            }
            if !ips.insert(host.ip) {
                return Err(ConfigError::DuplicateHostIp(host.ip));
            }
        }
        if !names.contains(&self.seed_attacker.to_ascii_uppercase()) {
            return Err(ConfigError::UnknownSeedAttacker(self.seed_attacker.clone()));
        }
        if self.duration <= Duration::zero() {
            return Err(ConfigError::NonPositiveDuration);
        }
        if self.scan_interarrival <= Duration::zero() {
            return Err(ConfigError::NonPositiveInterarrival);
        }
        if self.tftp_timeout < Duration::zero() {
            return Err(ConfigError::NegativeTftpTimeout);
        }
        if self.reboot_gap < Duration::zero() {
            return Err(ConfigError::NegativeRebootGap);
        }
        if self.exploit_latency_min <= Duration::zero()
            || self.exploit_latency_max < self.exploit_latency_min
        {
            return Err(ConfigError::InvalidLatencyRange);
        }
        if self.scan_batch_width == 0 {
            return Err(ConfigError::ZeroBatchWidth);
        }
        check_probability("default", self.transfer_success_prob)?;
        for (name, prob) in &self.transfer_success_overrides {
            if !names.contains(&name.to_ascii_uppercase()) {
                return Err(ConfigError::UnknownOverrideHost(name.clone()));
            }
            check_probability(name, *prob)?;
        }
        for name in self.per_host_clock_offsets.keys() {
            if !names.contains(&name.to_ascii_uppercase()) {
                return Err(ConfigError::UnknownOffsetHost(name.clone()));
            }
        }
        Ok(())
    }
}

fn check_probability(scope: &str, value: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ConfigError::InvalidProbability {
            scope: scope.to_string(),
            value,
        })
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("simulation needs at least one host")]
    NoHosts,
    #[error("seed attacker {0:?} is not among the configured hosts")]
    UnknownSeedAttacker(String),
    #[error("duplicate host name {0:?}")]
    DuplicateHostName(String),
    #[error("duplicate host ip {0}")]
    DuplicateHostIp(Ipv4Addr),
    #[error("duration must be positive")]
    NonPositiveDuration,
    #[error("scan interarrival must be positive")]
    NonPositiveInterarrival,
    #[error("tftp timeout must not be negative")]
    NegativeTftpTimeout,
    #[error("reboot gap must not be negative")]
    NegativeRebootGap,
    #[error("exploit latency range must be positive and non-empty")]
    InvalidLatencyRange,
    #[error("transfer success probability {value} for {scope} is outside [0, 1]")]
    InvalidProbability { scope: String, value: f64 },
    #[error("transfer override references unknown host {0:?}")]
    UnknownOverrideHost(String),
    #[error("clock offset references unknown host {0:?}")]
    UnknownOffsetHost(String),
    #[error("scan batch width must be at least 1")]
    ZeroBatchWidth,
}

/// What actually happened in a run, in true (unskewed) time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Final role of every configured host, keyed by name.
    pub roles: BTreeMap<String, GtRole>,
    /// One entry per probe a scanner actually sent, ordered by probe time.
    pub edges: Vec<GtEdge>,
    /// When each infected host finished downloading the worm.
    pub infection_times: BTreeMap<String, Timestamp>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtRole {
    pub role: Role,
    pub origin: bool,
}

/// One scanner→target interaction and how far up the exploit ladder it got.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtEdge {
    pub from: Ipv4Addr,
    pub to: Ipv4Addr,
    pub ports_reached: BTreeSet<u16>,
    pub t135: Timestamp,
}

/// Plays out the outbreak described by `cfg`.
pub fn simulate(cfg: &SimulationConfig) -> Result<(Corpus, GroundTruth), ConfigError> {
    cfg.validate()?;
    Ok(engine::run(cfg))
}

/// Runs the same config twice and checks the outputs are identical, down
/// to the bytes of every log file.
pub fn replay_check(cfg: &SimulationConfig) -> Result<bool, ConfigError> {
    let first = simulate(cfg)?;
    let second = simulate(cfg)?;
    Ok(first == second)
}
