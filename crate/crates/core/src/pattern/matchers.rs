//! Attaching host and IDS evidence to recovered exploit ladders.

use super::{
    extract_sequences, AttackerMatch, Completeness, Direction, ExploitSequence, HostEvents,
    MatchConfig, MultiStepMatch, VictimMatch, TFTP_PORT,
};
use crate::event::{HostId, IdsAlert, SecurityEvent, SystemEvent, Timestamp};

fn within_window_after(start: Timestamp, ts: Timestamp, window: chrono::Duration) -> bool {
    let delta = ts.0.signed_duration_since(start.0);
    delta >= chrono::Duration::zero() && delta <= window
}

fn within_skew(a: Timestamp, b: Timestamp, skew: chrono::Duration) -> bool {
    a.0.signed_duration_since(b.0).abs() <= skew
}

fn is_impact_592(event: &SecurityEvent, cfg: &MatchConfig) -> bool {
    event.event_id == 592
        && cfg.is_system_account(&event.user)
        && event
            .image_file_name
            .as_deref()
            .is_some_and(|image| cfg.is_impact_binary(image))
}

fn is_activation_592(event: &SecurityEvent, cfg: &MatchConfig) -> bool {
    event.event_id == 592
        && !cfg.is_system_account(&event.user)
        && event
            .image_file_name
            .as_deref()
            .is_some_and(|image| cfg.is_worm_binary(image))
}

fn first_system_event<'a>(
    events: &[&'a SystemEvent],
    event_id: u32,
    start: Timestamp,
    window: chrono::Duration,
) -> Option<&'a SystemEvent> {
    events
        .iter()
        .copied()
        .find(|e| e.event_id == event_id && within_window_after(start, e.ts, window))
}

fn tftp_get_alert<'a>(
    ids: &[&'a IdsAlert],
    host: &HostId,
    seq: &ExploitSequence,
    cfg: &MatchConfig,
) -> Option<&'a IdsAlert> {
    let t69 = seq.t69?;
    ids.iter().copied().find(|alert| {
        alert.message.to_ascii_lowercase().contains("tftp get")
            && alert.src_ip == host.ip
            && alert.dst_ip == seq.peer
            && alert.dst_port == Some(TFTP_PORT)
            && within_skew(alert.ts, t69, cfg.ids_skew)
    })
}

fn portsweep_alert<'a>(ids: &[&'a IdsAlert], host: &HostId) -> Option<&'a IdsAlert> {
    ids.iter().copied().find(|alert| {
        alert.message.to_ascii_lowercase().contains("portsweep") && alert.src_ip == host.ip
    })
}

/// Matches the exploited-host trace pattern: one match per inbound exploit
/// ladder, carrying the system-account loader/worm process creations, the
/// RPC crash and restart notices inside the ladder's stage window, and the
/// transfer alert from the IDS (clock skew tolerated up to `ids_skew`).
///
/// A match is `Full` only when the transfer stage completed and a worm
/// binary demonstrably started; everything weaker is `PortsOnly`.
pub fn match_victim(
    host: &HostId,
    events: &HostEvents,
    ids: &[&IdsAlert],
    cfg: &MatchConfig,
) -> Vec<VictimMatch> {
    extract_sequences(events, Direction::Inbound, cfg)
        .into_iter()
        .map(|sequence| {
            let start = sequence.t135;
            let impact_592: Vec<SecurityEvent> = events
                .security
                .iter()
                .copied()
                .filter(|e| {
                    is_impact_592(e, cfg) && within_window_after(start, e.ts, cfg.stage_window)
                })
                .cloned()
                .collect();
            let impact_7031 =
                first_system_event(&events.system, 7031, start, cfg.stage_window).cloned();
            let impact_1074 =
                first_system_event(&events.system, 1074, start, cfg.stage_window).cloned();
            let ids_tftp_get = tftp_get_alert(ids, host, &sequence, cfg).cloned();

            let worm_started = impact_592.iter().any(|e| {
                e.image_file_name
                    .as_deref()
                    .is_some_and(|image| cfg.is_worm_binary(image))
            });
            let completeness = if sequence.t69.is_some() && worm_started {
                Completeness::Full
            } else {
                Completeness::PortsOnly
            };

            VictimMatch {
                host: host.clone(),
                sequence,
                impact_592,
                impact_7031,
                impact_1074,
                ids_tftp_get,
                completeness,
            }
        })
        .collect()
}

/// Matches the attacking-host trace pattern: all outbound exploit ladders
/// plus, when present, the worm's launch under a non-system account at or
/// before the first outbound probe, and the IDS sweep alert sourced from
/// this host. Returns `None` when no outbound ladder exists at all.
pub fn match_attacker(
    host: &HostId,
    events: &HostEvents,
    ids: &[&IdsAlert],
    cfg: &MatchConfig,
) -> Option<AttackerMatch> {
    let sequences = extract_sequences(events, Direction::Outbound, cfg);
    if sequences.is_empty() {
        return None;
    }
    let first_t135 = sequences
        .iter()
        .map(|s| s.t135)
        .min()
        .expect("sequences checked non-empty");

    // The most recent qualifying launch: that is the process instance that
    // was alive when scanning began.
    let activation_592 = events
        .security
        .iter()
        .copied()
        .filter(|e| is_activation_592(e, cfg) && e.ts <= first_t135)
        .max_by_key(|e| e.ts)
        .cloned();
    let ids_portsweep = portsweep_alert(ids, host).cloned();

    Some(AttackerMatch {
        host: host.clone(),
        sequences,
        activation_592,
        ids_portsweep,
    })
}

/// Matches the relay pattern: the host was fully exploited first and then
/// ran the attack pattern itself, with the infection completing no later
/// than its first outbound probe. The earliest qualifying victim match is
/// kept as the infection record.
pub fn match_multistep(
    host: &HostId,
    victims: &[VictimMatch],
    attacker: Option<&AttackerMatch>,
    cfg: &MatchConfig,
) -> Option<MultiStepMatch> {
    let attacker = attacker?;
    let first_outbound = attacker.first_t135();
    let as_victim = victims
        .iter()
        .filter(|v| v.completeness == Completeness::Full)
        .filter_map(|v| v.infection_time(cfg).map(|t| (t, v)))
        .filter(|(t, _)| *t <= first_outbound)
        .min_by_key(|(t, _)| *t)
        .map(|(_, v)| v.clone())?;

    Some(MultiStepMatch {
        host: host.clone(),
        as_victim,
        as_attacker: attacker.clone(),
        relay_592: attacker.activation_592.clone(),
    })
}
