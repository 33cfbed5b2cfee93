//! The on-disk corpus convention: a manifest plus per-host log files and
//! one shared IDS alert file.
//!
//! Layout under a corpus directory:
//!
//! ```text
//! manifest.json
//! <HOSTNAME>/pfirewall.log      (per manifest)
//! <HOSTNAME>/security.log
//! <HOSTNAME>/system.log
//! <HOSTNAME>/application.log
//! ids/alert.log                 (when declared)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::HostId;
use crate::pattern::MatchConfig;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const IDS_LOG_PATH: &str = "ids/alert.log";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

/// The host-side log files a corpus can carry.
#[derive(Debug, Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogKind {
    Firewall,
    Security,
    System,
    Application,
}

impl LogKind {
    pub fn file_name(self) -> &'static str {
        match self {
            LogKind::Firewall => "pfirewall.log",
            LogKind::Security => "security.log",
            LogKind::System => "system.log",
            LogKind::Application => "application.log",
        }
    }

    pub const ALL: [LogKind; 4] = [
        LogKind::Firewall,
        LogKind::Security,
        LogKind::System,
        LogKind::Application,
    ];
}

/// One host entry in the manifest: identity plus which log files exist.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestHost {
    pub name: String,
    pub ip: Ipv4Addr,
    pub logs: BTreeSet<LogKind>,
}

impl ManifestHost {
    pub fn id(&self) -> HostId {
        HostId::new(self.name.clone(), self.ip)
    }
}

/// Optional matcher overrides carried in the manifest; unset fields keep
/// their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchConfigOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage_window_secs: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ids_skew_secs: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worm_binaries: Option<BTreeSet<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loader_binaries: Option<BTreeSet<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system_accounts: Option<BTreeSet<String>>,
}

impl MatchConfigOverrides {
    pub fn apply_to(&self, mut cfg: MatchConfig) -> MatchConfig {
        if let Some(secs) = self.stage_window_secs {
            cfg.stage_window = chrono::Duration::seconds(secs as i64);
        }
        if let Some(secs) = self.ids_skew_secs {
            cfg.ids_skew = chrono::Duration::seconds(secs as i64);
        }
        if let Some(set) = &self.worm_binaries {
            cfg.worm_binaries = set.clone();
        }
        if let Some(set) = &self.loader_binaries {
            cfg.loader_binaries = set.clone();
        }
        if let Some(set) = &self.system_accounts {
            cfg.system_accounts = set.clone();
        }
        cfg
    }

    pub fn is_empty(&self) -> bool {
        *self == MatchConfigOverrides::default()
    }
}

/// Corpus index: which hosts exist, which logs each carries, where the
/// IDS log lives, and analysis defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub year_hint: Option<i32>,
    pub hosts: Vec<ManifestHost>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ids_log: Option<String>,
    #[serde(default, skip_serializing_if = "MatchConfigOverrides::is_empty")]
    pub match_config: MatchConfigOverrides,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: invalid manifest: {source}")]
    Manifest {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("duplicate host name {0:?} in manifest")]
    DuplicateHostName(String),
    #[error("duplicate host address {0} in manifest")]
    DuplicateHostIp(Ipv4Addr),
    #[error("host {host:?} declares a {kind:?} log but no text was provided")]
    MissingLogText { host: String, kind: LogKind },
    #[error("manifest declares an IDS log but no text was provided")]
    MissingIdsText,
}

impl CorpusManifest {
    /// Rejects manifests with colliding identities. Name comparison is
    /// case-insensitive, matching event-store host registration.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut names = BTreeSet::new();
        let mut ips = BTreeSet::new();
        for host in &self.hosts {
            if !names.insert(host.name.to_uppercase()) {
                return Err(CorpusError::DuplicateHostName(host.name.clone()));
            }
            if !ips.insert(host.ip) {
                return Err(CorpusError::DuplicateHostIp(host.ip));
            }
        }
        Ok(())
    }
}

/// A corpus held in memory: the manifest plus the raw text of every log
/// file. All writes and reads go through this type so emitted corpora are
/// reproducible byte for byte.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub manifest: CorpusManifest,
    /// Host name → log kind → file text.
    pub host_logs: BTreeMap<String, BTreeMap<LogKind, String>>,
    pub ids_log: Option<String>,
}

impl Corpus {
    /// Verifies the manifest is coherent and every declared log (and the
    /// IDS file, if named) has its text attached.
    pub fn check_complete(&self) -> Result<(), CorpusError> {
        self.manifest.validate()?;
        for host in &self.manifest.hosts {
            for kind in &host.logs {
                let present = self
                    .host_logs
                    .get(&host.name)
                    .is_some_and(|logs| logs.contains_key(kind));
                if !present {
                    return Err(CorpusError::MissingLogText {
                        host: host.name.clone(),
                        kind: *kind,
                    });
                }
            }
        }
        if self.manifest.ids_log.is_some() && self.ids_log.is_none() {
            return Err(CorpusError::MissingIdsText);
        }
        Ok(())
    }

    /// Writes the corpus under `dir`, creating directories as needed.
    /// Identical corpora produce byte-identical trees.
    pub fn write_dir(&self, dir: &Path) -> Result<(), CorpusError> {
        self.check_complete()?;
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CorpusError::Io { path, source }
        };

        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let manifest_path = dir.join(MANIFEST_FILE);
        let mut manifest_json = serde_json::to_string_pretty(&self.manifest)
            .expect("manifest serialization cannot fail");
        manifest_json.push('\n');
        fs::write(&manifest_path, manifest_json).map_err(io_err(&manifest_path))?;

        for host in &self.manifest.hosts {
            let host_dir = dir.join(&host.name);
            fs::create_dir_all(&host_dir).map_err(io_err(&host_dir))?;
            for kind in &host.logs {
                let path = host_dir.join(kind.file_name());
                let text = &self.host_logs[&host.name][kind];
                fs::write(&path, text).map_err(io_err(&path))?;
            }
        }

        if let Some(rel) = &self.manifest.ids_log {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(io_err(parent))?;
            }
            let text = self.ids_log.as_ref().expect("checked by check_complete");
            fs::write(&path, text).map_err(io_err(&path))?;
        }
        Ok(())
    }

    /// Loads a corpus directory: manifest first, then every declared file.
    pub fn load_dir(dir: &Path) -> Result<Corpus, CorpusError> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let manifest_text =
            fs::read_to_string(&manifest_path).map_err(|source| CorpusError::Io {
                path: manifest_path.clone(),
                source,
            })?;
        let manifest: CorpusManifest =
            serde_json::from_str(&manifest_text).map_err(|source| CorpusError::Manifest {
                path: manifest_path,
                source,
            })?;
        manifest.validate()?;

        let mut host_logs: BTreeMap<String, BTreeMap<LogKind, String>> = BTreeMap::new();
        for host in &manifest.hosts {
            let mut logs = BTreeMap::new();
            for kind in &host.logs {
                let path = dir.join(&host.name).join(kind.file_name());
                let text =
                    fs::read_to_string(&path).map_err(|source| CorpusError::Io { path, source })?;
                logs.insert(*kind, text);
            }
            host_logs.insert(host.name.clone(), logs);
        }

        let ids_log = match &manifest.ids_log {
            Some(rel) => {
                let path = dir.join(rel);
                Some(fs::read_to_string(&path).map_err(|source| CorpusError::Io { path, source })?)
            }
            None => None,
        };

        Ok(Corpus {
            manifest,
            host_logs,
            ids_log,
        })
    }
}
