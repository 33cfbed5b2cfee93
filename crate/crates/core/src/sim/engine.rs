//! Discrete-event core of the outbreak generator.
//!
//! The engine drains a time-ordered action queue. Scanners work through a
//! shuffled one-pass target list, skipping hosts that are already claimed
//! by an exploit in flight (or already infected); a failed TFTP transfer
//! releases its claim after the scanner's timeout so another worm instance
//! may retry the same target later. All bookkeeping runs in true time;
//! per-host and IDS clock offsets are applied only when logs are rendered.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::net::Ipv4Addr;

use chrono::{Datelike, Duration, NaiveDateTime};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GroundTruth, GtEdge, GtRole, SimulationConfig};
use crate::classify::Role;
use crate::corpus::{
    Corpus, CorpusManifest, LogKind, ManifestHost, MatchConfigOverrides, IDS_LOG_PATH,
};
use crate::event::{
    FirewallAction, FirewallEvent, HostId, IdsAlert, IdsProtocol, Protocol, SecurityEvent, SigId,
    SystemEvent, Timestamp,
};
use crate::logfmt::{emit_firewall_log, emit_ids_alert_log, emit_security_log, emit_system_log};
use crate::pattern::{RPC_PORT, SHELL_PORT, TFTP_PORT};

/// Seconds the worm download takes once the TFTP stage opens.
const TRANSFER_SECS: i64 = 13;
/// Seconds between the worm starting and the RPC service crash it causes.
const CRASH_DELAY_SECS: i64 = 4;
/// First ephemeral source port each host hands out.
const FIRST_EPHEMERAL_PORT: u16 = 3001;
/// Benign noise traffic draws from a high port range so it never collides
/// with the exploit ladder's ephemeral ports.
const FIRST_NOISE_PORT: u16 = 50000;

const SYSTEM_ACCOUNT: &str = "NT AUTHORITY\\SYSTEM";
/// Local account names the relaunched worm runs under, picked per host.
const RELAY_USERS: [&str; 8] = [
    "Shafrin", "Aida", "Farid", "Nora", "Hafiz", "Lina", "Zaid", "Mira",
];

pub(super) fn run(cfg: &SimulationConfig) -> (Corpus, GroundTruth) {
    let mut engine = Engine::new(cfg);
    engine.drain_queue();
    engine.generate_noise();
    let truth = engine.ground_truth();
    (engine.into_corpus(), truth)
}

#[derive(Debug)]
enum Action {
    /// Launch the worm on `host` and set up its scan pass over the others.
    StartScanning { host: usize, relay: bool },
    /// Probe the next batch of unclaimed targets.
    Scan { host: usize },
    /// Release a claim after a failed transfer timed out.
    Unclaim { host: usize },
}

struct HostState {
    id: HostId,
    vulnerable: bool,
    firewall: Vec<FirewallEvent>,
    security: Vec<SecurityEvent>,
    system: Vec<SystemEvent>,
    /// Remaining scan targets, rotated past entries that are claimed.
    targets: VecDeque<usize>,
    /// An exploit against this host is in flight or already succeeded.
    claimed: bool,
    infected_at: Option<NaiveDateTime>,
    first_probe: Option<NaiveDateTime>,
    /// Exploit stages this host logged on the receiving side.
    inbound_reached: BTreeSet<u16>,
    /// Log blackouts while the host reboots, as `(after, until]` spans.
    silence: Vec<(NaiveDateTime, NaiveDateTime)>,
    next_port: u16,
    next_noise_port: u16,
    next_pid: u32,
}

struct Engine<'a> {
    cfg: &'a SimulationConfig,
    end: NaiveDateTime,
    hosts: Vec<HostState>,
    /// Pending actions keyed by `(time, insertion order)`.
    queue: BTreeMap<(NaiveDateTime, u64), Action>,
    queue_seq: u64,
    alerts: Vec<IdsAlert>,
    edges: Vec<GtEdge>,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a SimulationConfig) -> Self {
        let hosts = cfg
            .hosts
            .iter()
            .map(|h| HostState {
                id: HostId::new(h.name.clone(), h.ip),
                vulnerable: h.vulnerable,
                firewall: Vec::new(),
                security: Vec::new(),
                system: Vec::new(),
                targets: VecDeque::new(),
                claimed: false,
                infected_at: None,
                first_probe: None,
                inbound_reached: BTreeSet::new(),
                silence: Vec::new(),
                next_port: FIRST_EPHEMERAL_PORT,
                next_noise_port: FIRST_NOISE_PORT,
                next_pid: 1016,
            })
            .collect();
        let mut engine = Engine {
            cfg,
            end: cfg.start_time.0 + cfg.duration,
            hosts,
            queue: BTreeMap::new(),
            queue_seq: 0,
            alerts: Vec::new(),
            edges: Vec::new(),
        };
        let seed = engine
            .host_index(&cfg.seed_attacker)
            .expect("validated seed attacker");
        // The seed already runs the worm; exploiting it again is a no-op,
        // so it is claimed from the start.
        engine.hosts[seed].claimed = true;
        engine.schedule(
            cfg.start_time.0,
            Action::StartScanning {
                host: seed,
                relay: false,
            },
        );
        engine
    }

    fn host_index(&self, name: &str) -> Option<usize> {
        self.hosts
            .iter()
            .position(|h| h.id.name.eq_ignore_ascii_case(name))
    }

    fn schedule(&mut self, at: NaiveDateTime, action: Action) {
        if at <= self.end {
            self.queue.insert((at, self.queue_seq), action);
            self.queue_seq += 1;
        }
    }

    fn drain_queue(&mut self) {
        while let Some(((ts, _), action)) = self.queue.pop_first() {
            match action {
                Action::StartScanning { host, relay } => self.start_scanning(host, relay, ts),
                Action::Scan { host } => self.scan(host, ts),
                Action::Unclaim { host } => {
                    if self.hosts[host].infected_at.is_none() {
                        self.hosts[host].claimed = false;
                    }
                }
            }
        }
    }

    /// Derives an independent RNG for one decision point so unrelated
    /// draws (noise, another host's latencies) never shift each other.
    fn decision_rng(&self, tag: &str, parts: &[&str]) -> ChaCha8Rng {
        let mut h = fnv_mix(0xcbf2_9ce4_8422_2325, &self.cfg.rng_seed.to_le_bytes());
        h = fnv_mix(h, tag.as_bytes());
        for part in parts {
            h = fnv_mix(h, part.as_bytes());
        }
        ChaCha8Rng::seed_from_u64(h)
    }

    fn stage_latency(&self, rng: &mut ChaCha8Rng) -> Duration {
        let min = self.cfg.exploit_latency_min.num_seconds();
        let max = self.cfg.exploit_latency_max.num_seconds();
        Duration::seconds(rng.gen_range(min..=max))
    }

    fn success_prob(&self, target: &str) -> f64 {
        self.cfg
            .transfer_success_overrides
            .iter()
            .find(|(name, _)| name.eq_ignore_ascii_case(target))
            .map(|(_, p)| *p)
            .unwrap_or(self.cfg.transfer_success_prob)
    }

    fn alloc_port(&mut self, host: usize) -> u16 {
        let state = &mut self.hosts[host];
        let port = state.next_port;
        state.next_port = state
            .next_port
            .checked_add(1)
            .unwrap_or(FIRST_EPHEMERAL_PORT);
        port
    }

    fn alloc_pid(&mut self, host: usize) -> u32 {
        let state = &mut self.hosts[host];
        let pid = state.next_pid;
        state.next_pid += 8;
        pid
    }

    fn start_scanning(&mut self, host: usize, relay: bool, ts: NaiveDateTime) {
        self.emit_worm_start(host, relay, ts);
        let mut order: Vec<usize> = (0..self.hosts.len()).filter(|&i| i != host).collect();
        let mut rng = self.decision_rng("targets", &[&self.hosts[host].id.name.clone()]);
        order.shuffle(&mut rng);
        self.hosts[host].targets = order.into();
        self.schedule(ts + self.cfg.scan_interarrival, Action::Scan { host });
    }

    fn emit_worm_start(&mut self, host: usize, relay: bool, ts: NaiveDateTime) {
        let name = self.hosts[host].id.name.clone();
        let pid = self.alloc_pid(host);
        if relay {
            // Post-infection relaunch: the worm restarts under a local
            // profile, so the record shows a raw SID instead of SYSTEM.
            let sid = synth_sid(&name);
            let user_name = RELAY_USERS[host % RELAY_USERS.len()];
            let logon_id = format!("(0x0,0x{:X})", 0xD000 + (host as u32) * 0x9B);
            self.emit_592(
                host,
                ts,
                &sid,
                "C:\\WINDOWS\\system32\\msblast.exe",
                pid,
                1748,
                user_name,
                &name,
                &logon_id,
            );
        } else {
            let user = self.cfg.activation_user.clone();
            let image = format!("C:\\Documents and Settings\\{user}\\Desktop\\blasterA.exe");
            self.emit_592(
                host,
                ts,
                &user,
                &image,
                pid,
                1492,
                &user,
                &name,
                "(0x0,0x2273F)",
            );
        }
    }

    fn scan(&mut self, host: usize, ts: NaiveDateTime) {
        // Rotate past claimed targets; they stay queued for a later pass
        // in case their claim is released (a transfer that failed).
        let mut targets = std::mem::take(&mut self.hosts[host].targets);
        let mut batch = Vec::new();
        let mut rotations = targets.len();
        while batch.len() < self.cfg.scan_batch_width && rotations > 0 {
            rotations -= 1;
            let candidate = targets.pop_front().expect("rotation bound");
            if self.hosts[candidate].claimed {
                targets.push_back(candidate);
            } else {
                batch.push(candidate);
            }
        }
        self.hosts[host].targets = targets;

        if batch.is_empty() {
            if !self.hosts[host].targets.is_empty() {
                self.schedule(ts + self.cfg.scan_interarrival, Action::Scan { host });
            }
            return;
        }
        let mut next_in = self.cfg.scan_interarrival;
        for target in batch {
            next_in = next_in.max(self.probe(host, target, ts));
        }
        if !self.hosts[host].targets.is_empty() {
            self.schedule(ts + next_in, Action::Scan { host });
        }
    }

    /// Sends one probe and, on a vulnerable target, walks the exploit as
    /// far as luck and the remaining window allow. Returns how long the
    /// scanner is busy with this target.
    fn probe(&mut self, scanner: usize, target: usize, t0: NaiveDateTime) -> Duration {
        let scanner_ip = self.hosts[scanner].id.ip;
        let target_ip = self.hosts[target].id.ip;
        if self.hosts[scanner].first_probe.is_none() {
            self.hosts[scanner].first_probe = Some(t0);
            self.emit_portsweep(scanner, target_ip, t0);
        }

        let sport = self.alloc_port(scanner);
        self.emit_fw(
            scanner,
            t0,
            FirewallAction::Open,
            Protocol::Tcp,
            scanner_ip,
            target_ip,
            sport,
            RPC_PORT,
        );
        let mut ports: BTreeSet<u16> = [RPC_PORT].into();
        let mut busy_for = self.cfg.scan_interarrival;

        if self.hosts[target].vulnerable {
            self.emit_fw(
                target,
                t0,
                FirewallAction::OpenInbound,
                Protocol::Tcp,
                scanner_ip,
                target_ip,
                sport,
                RPC_PORT,
            );
            self.hosts[target].inbound_reached.insert(RPC_PORT);
            self.hosts[target].claimed = true;

            let scanner_name = self.hosts[scanner].id.name.clone();
            let target_name = self.hosts[target].id.name.clone();
            let mut rng = self.decision_rng("exploit", &[&scanner_name, &target_name]);
            let t1 = t0 + self.stage_latency(&mut rng);
            if t1 <= self.end {
                let shell_sport = self.alloc_port(scanner);
                self.emit_fw(
                    scanner,
                    t1,
                    FirewallAction::Open,
                    Protocol::Tcp,
                    scanner_ip,
                    target_ip,
                    shell_sport,
                    SHELL_PORT,
                );
                self.emit_fw(
                    target,
                    t1,
                    FirewallAction::OpenInbound,
                    Protocol::Tcp,
                    scanner_ip,
                    target_ip,
                    shell_sport,
                    SHELL_PORT,
                );
                self.hosts[target].inbound_reached.insert(SHELL_PORT);
                ports.insert(SHELL_PORT);

                let machine_account = format!("{target_name}$");
                let loader_pid = self.alloc_pid(target);
                self.emit_592(
                    target,
                    t1,
                    SYSTEM_ACCOUNT,
                    "C:\\WINDOWS\\system32\\tftp.exe",
                    loader_pid,
                    1228,
                    &machine_account,
                    "WORKGROUP",
                    "(0x0,0x3E7)",
                );

                let success = rng.gen::<f64>() < self.success_prob(&target_name);
                let t2 = t1 + self.stage_latency(&mut rng);
                let t3 = t2 + Duration::seconds(TRANSFER_SECS);
                if success && t3 <= self.end {
                    let tftp_sport = self.alloc_port(target);
                    self.emit_fw(
                        target,
                        t2,
                        FirewallAction::Open,
                        Protocol::Udp,
                        target_ip,
                        scanner_ip,
                        tftp_sport,
                        TFTP_PORT,
                    );
                    self.emit_fw(
                        scanner,
                        t2,
                        FirewallAction::OpenInbound,
                        Protocol::Udp,
                        target_ip,
                        scanner_ip,
                        tftp_sport,
                        TFTP_PORT,
                    );
                    self.hosts[target].inbound_reached.insert(TFTP_PORT);
                    ports.insert(TFTP_PORT);
                    self.emit_tftp_get(target_ip, tftp_sport, scanner_ip, t2, &mut rng);

                    let worm_pid = self.alloc_pid(target);
                    self.emit_592(
                        target,
                        t3,
                        SYSTEM_ACCOUNT,
                        "C:\\WINDOWS\\system32\\msblast.exe",
                        worm_pid,
                        loader_pid,
                        &machine_account,
                        "WORKGROUP",
                        "(0x0,0x3E7)",
                    );
                    self.hosts[target].infected_at = Some(t3);

                    let t4 = t3 + Duration::seconds(CRASH_DELAY_SECS);
                    if t4 <= self.end {
                        self.emit_crash_and_restart(target, t4);
                        let relay_base = if self.cfg.reboot_after_crash {
                            self.hosts[target]
                                .silence
                                .push((t4, t4 + self.cfg.reboot_gap));
                            t4 + self.cfg.reboot_gap
                        } else {
                            t4
                        };
                        self.schedule(
                            relay_base + self.stage_latency(&mut rng),
                            Action::StartScanning {
                                host: target,
                                relay: true,
                            },
                        );
                    }
                    busy_for = (t2 - t0) + self.cfg.scan_interarrival;
                } else {
                    // Transfer failed (or would outlive the window): the
                    // scanner hangs on the download until its timer runs
                    // out, then the target opens up for other scanners.
                    self.schedule(t1 + self.cfg.tftp_timeout, Action::Unclaim { host: target });
                    busy_for = (t1 - t0) + self.cfg.tftp_timeout;
                }
            }
        }

        self.edges.push(GtEdge {
            from: scanner_ip,
            to: target_ip,
            ports_reached: ports,
            t135: Timestamp(t0),
        });
        busy_for
    }

    #[allow(clippy::too_many_arguments)]
    fn emit_fw(
        &mut self,
        host: usize,
        ts: NaiveDateTime,
        action: FirewallAction,
        protocol: Protocol,
        src_ip: Ipv4Addr,
        dst_ip: Ipv4Addr,
        src_port: u16,
        dst_port: u16,
    ) {
        if ts > self.end {
            return;
        }
        let state = &mut self.hosts[host];
        state.firewall.push(FirewallEvent {
            host: state.id.clone(),
            ts: Timestamp(ts),
            action,
            protocol,
            src_ip,
            dst_ip,
            src_port,
            dst_port,
        });
    }

    #[allow(clippy::too_many_arguments)]
    fn emit_592(
        &mut self,
        host: usize,
        ts: NaiveDateTime,
        user: &str,
        image: &str,
        new_pid: u32,
        creator_pid: u32,
        user_name: &str,
        domain: &str,
        logon_id: &str,
    ) {
        if ts > self.end {
            return;
        }
        let state = &mut self.hosts[host];
        let raw_message = format!(
            "A new process has been created:\n\
             New Process ID: {new_pid}\n\
             Image File Name: {image}\n\
             Creator Process ID: {creator_pid}\n\
             User Name: {user_name}\n\
             Domain: {domain}\n\
             Logon ID: {logon_id}"
        );
        state.security.push(SecurityEvent {
            host: state.id.clone(),
            ts: Timestamp(ts),
            event_id: 592,
            user: user.to_string(),
            computer: state.id.name.clone(),
            image_file_name: Some(image.to_string()),
            new_process_id: Some(new_pid),
            creator_process_id: Some(creator_pid),
            user_name: Some(user_name.to_string()),
            domain: Some(domain.to_string()),
            logon_id: Some(logon_id.to_string()),
            raw_message,
        });
    }

    fn emit_sys(&mut self, host: usize, ts: NaiveDateTime, source: &str, event_id: u32, raw: &str) {
        if ts > self.end {
            return;
        }
        let state = &mut self.hosts[host];
        state.system.push(SystemEvent {
            host: state.id.clone(),
            ts: Timestamp(ts),
            source: source.to_string(),
            event_id,
            computer: state.id.name.clone(),
            raw_message: raw.to_string(),
        });
    }

    fn emit_crash_and_restart(&mut self, host: usize, ts: NaiveDateTime) {
        let computer = self.hosts[host].id.name.clone();
        self.emit_sys(
            host,
            ts,
            "Service Control Manager",
            7031,
            "The Remote Procedure Call (RPC) service terminated unexpectedly.  \
             It has done this 1 time(s).  The following corrective action will \
             be taken in 60000 milliseconds: Reboot the machine.",
        );
        self.emit_sys(
            host,
            ts,
            "USER32",
            1074,
            &format!(
                "The process winlogon.exe has initiated the restart of {computer} \
                 for the following reason: No title for this reason could be found"
            ),
        );
    }

    fn emit_portsweep(&mut self, scanner: usize, first_target: Ipv4Addr, ts: NaiveDateTime) {
        let name = self.hosts[scanner].id.name.clone();
        let mut rng = self.decision_rng("sweep", &[&name]);
        let micros = rng.gen_range(0..1_000_000);
        self.alerts.push(IdsAlert {
            ts: Timestamp(ts + Duration::microseconds(micros)),
            sig: SigId::new(122, 3, 0),
            message: "(portscan) TCP Portsweep".into(),
            classification: Some("Attempted Information Leak".into()),
            priority: Some(2),
            src_ip: self.hosts[scanner].id.ip,
            src_port: None,
            dst_ip: first_target,
            dst_port: None,
            protocol: IdsProtocol::Proto(255),
        });
    }

    fn emit_tftp_get(
        &mut self,
        victim_ip: Ipv4Addr,
        victim_port: u16,
        attacker_ip: Ipv4Addr,
        ts: NaiveDateTime,
        rng: &mut ChaCha8Rng,
    ) {
        let micros = rng.gen_range(0..1_000_000);
        self.alerts.push(IdsAlert {
            ts: Timestamp(ts + Duration::microseconds(micros)),
            sig: SigId::new(1, 1444, 3),
            message: "TFTP Get".into(),
            classification: Some("Potentially Bad Traffic".into()),
            priority: Some(2),
            src_ip: victim_ip,
            src_port: Some(victim_port),
            dst_ip: attacker_ip,
            dst_port: Some(TFTP_PORT),
            protocol: IdsProtocol::Udp,
        });
    }

    /// Mixes benign, well-formed traffic into every host's logs. Noise
    /// draws from dedicated RNG streams so it never perturbs the outbreak.
    fn generate_noise(&mut self) {
        let per_host = self.cfg.noise_per_host;
        if per_host == 0 {
            return;
        }
        let span = (self.end - self.cfg.start_time.0).num_seconds();
        for idx in 0..self.hosts.len() {
            let name = self.hosts[idx].id.name.clone();
            let host_ip = self.hosts[idx].id.ip;
            let mut rng = self.decision_rng("noise", &[&name]);
            for i in 0..per_host {
                let ts = self.cfg.start_time.0 + Duration::seconds(rng.gen_range(0..=span));
                let state = &mut self.hosts[idx];
                let sport = state.next_noise_port;
                state.next_noise_port = state
                    .next_noise_port
                    .checked_add(1)
                    .unwrap_or(FIRST_NOISE_PORT);
                let dst = Ipv4Addr::new(10, 200, (i / 200) as u8, (i % 200) as u8 + 1);
                self.emit_fw(
                    idx,
                    ts,
                    FirewallAction::Open,
                    Protocol::Tcp,
                    host_ip,
                    dst,
                    sport,
                    80,
                );
                if i % 4 == 0 {
                    let alert_ts = ts + Duration::microseconds(rng.gen_range(0..1_000_000));
                    self.alerts.push(IdsAlert {
                        ts: Timestamp(alert_ts),
                        sig: SigId::new(1, 1917, 6),
                        message: "SCAN UPnP service discover attempt".into(),
                        classification: Some("Detection of a Network Scan".into()),
                        priority: Some(3),
                        src_ip: host_ip,
                        src_port: Some(sport),
                        dst_ip: Ipv4Addr::new(239, 255, 255, 250),
                        dst_port: Some(1900),
                        protocol: IdsProtocol::Udp,
                    });
                }
            }
        }
    }

    fn ground_truth(&self) -> GroundTruth {
        let mut roles = BTreeMap::new();
        let mut infection_times = BTreeMap::new();
        for state in &self.hosts {
            let role = if let Some(infected) = state.infected_at {
                match state.first_probe {
                    Some(first) if infected <= first => Role::MultiStep,
                    // Infected only after it had begun scanning on its
                    // own: the infection does not explain the scanning.
                    Some(_) => Role::Attacker,
                    None => Role::Victim,
                }
            } else if state.first_probe.is_some() {
                Role::Attacker
            } else if state.inbound_reached.contains(&SHELL_PORT) {
                Role::PartiallyExploited
            } else if state.inbound_reached.contains(&RPC_PORT) {
                Role::Scanned
            } else {
                Role::Clean
            };
            roles.insert(
                state.id.name.clone(),
                GtRole {
                    role,
                    origin: role == Role::Attacker,
                },
            );
            if let Some(infected) = state.infected_at {
                infection_times.insert(state.id.name.clone(), Timestamp(infected));
            }
        }
        let mut edges = self.edges.clone();
        edges.sort_by_key(|e| (e.t135, e.from, e.to));
        GroundTruth {
            roles,
            edges,
            infection_times,
        }
    }

    /// Renders every host's logs (applying reboot blackouts and clock
    /// offsets) and assembles the corpus.
    fn into_corpus(self) -> Corpus {
        let cfg = self.cfg;
        let mut host_logs = BTreeMap::new();
        let mut manifest_hosts = Vec::new();
        for state in self.hosts {
            let offset = cfg
                .per_host_clock_offsets
                .iter()
                .find(|(name, _)| name.eq_ignore_ascii_case(&state.id.name))
                .map(|(_, d)| *d)
                .unwrap_or_else(Duration::zero);
            let silence = state.silence;
            let keep = |ts: NaiveDateTime| {
                !silence
                    .iter()
                    .any(|(after, until)| ts > *after && ts <= *until)
            };

            let mut firewall: Vec<FirewallEvent> = state
                .firewall
                .into_iter()
                .filter(|e| keep(e.ts.0))
                .map(|mut e| {
                    e.ts = Timestamp(e.ts.0 + offset);
                    e
                })
                .collect();
            firewall.sort_by_key(|e| e.ts);
            let mut security: Vec<SecurityEvent> = state
                .security
                .into_iter()
                .filter(|e| keep(e.ts.0))
                .map(|mut e| {
                    e.ts = Timestamp(e.ts.0 + offset);
                    e
                })
                .collect();
            security.sort_by_key(|e| e.ts);
            let mut system: Vec<SystemEvent> = state
                .system
                .into_iter()
                .filter(|e| keep(e.ts.0))
                .map(|mut e| {
                    e.ts = Timestamp(e.ts.0 + offset);
                    e
                })
                .collect();
            system.sort_by_key(|e| e.ts);

            manifest_hosts.push(ManifestHost {
                name: state.id.name.clone(),
                ip: state.id.ip,
                logs: [LogKind::Firewall, LogKind::Security, LogKind::System].into(),
            });
            host_logs.insert(
                state.id.name,
                BTreeMap::from([
                    (LogKind::Firewall, emit_firewall_log(&firewall)),
                    (LogKind::Security, emit_security_log(&security)),
                    (LogKind::System, emit_system_log(&system)),
                ]),
            );
        }

        let mut alerts = self.alerts;
        alerts.sort_by_key(|a| a.ts);
        for alert in &mut alerts {
            alert.ts = Timestamp(alert.ts.0 + cfg.ids_clock_offset);
        }

        Corpus {
            manifest: CorpusManifest {
                year_hint: Some(cfg.start_time.0.year()),
                hosts: manifest_hosts,
                ids_log: Some(IDS_LOG_PATH.to_string()),
                match_config: MatchConfigOverrides::default(),
            },
            host_logs,
            ids_log: Some(emit_ids_alert_log(&alerts)),
        }
    }
}

fn fnv_mix(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    // Terminator so ("ab", "c") and ("a", "bc") hash differently.
    h ^= 0xff;
    h.wrapping_mul(0x0000_0100_0000_01b3)
}

/// Builds a stable, host-specific SID for the relaunched worm's account.
fn synth_sid(name: &str) -> String {
    let h = fnv_mix(0x9e37_79b9_7f4a_7c15, name.as_bytes());
    let a = 100_000_000 + (h % 800_000_000);
    let b = 1_000_000_000 + (h.rotate_right(23) % 1_000_000_000);
    let c = 100_000_000 + (h.rotate_right(41) % 800_000_000);
    format!("S-1-5-21-{a}-{b}-{c}-1003")
}
