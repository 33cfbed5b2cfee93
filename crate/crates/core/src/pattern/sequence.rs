//! Recovery of staged connection ladders from firewall events.

use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use super::{Direction, ExploitSequence, HostEvents, MatchConfig, RPC_PORT, SHELL_PORT, TFTP_PORT};
use crate::event::{FirewallAction, FirewallEvent, Protocol, Timestamp};

#[derive(Debug, Copy, Clone, PartialEq, Eq)]
enum Stage {
    Rpc,
    Shell,
    Transfer,
}

/// Maps a firewall event onto a ladder stage for the given direction and
/// names the peer. Seen from the exploited side the 135/4444 stages are
/// inbound accepts and the transfer is an outbound TFTP pull; seen from
/// the exploiting side every action is mirrored.
fn classify_stage(event: &FirewallEvent, direction: Direction) -> Option<(Stage, Ipv4Addr)> {
    let (action, protocol, port) = (&event.action, &event.protocol, event.dst_port);
    match direction {
        Direction::Inbound => match (action, protocol, port) {
            (FirewallAction::OpenInbound, Protocol::Tcp, RPC_PORT) => {
                Some((Stage::Rpc, event.src_ip))
            }
            (FirewallAction::OpenInbound, Protocol::Tcp, SHELL_PORT) => {
                Some((Stage::Shell, event.src_ip))
            }
            (FirewallAction::Open, Protocol::Udp, TFTP_PORT) => {
                Some((Stage::Transfer, event.dst_ip))
            }
            _ => None,
        },
        Direction::Outbound => match (action, protocol, port) {
            (FirewallAction::Open, Protocol::Tcp, RPC_PORT) => Some((Stage::Rpc, event.dst_ip)),
            (FirewallAction::Open, Protocol::Tcp, SHELL_PORT) => Some((Stage::Shell, event.dst_ip)),
            (FirewallAction::OpenInbound, Protocol::Udp, TFTP_PORT) => {
                Some((Stage::Transfer, event.src_ip))
            }
            _ => None,
        },
    }
}

fn within_window(start: Timestamp, ts: Timestamp, window: chrono::Duration) -> bool {
    let delta = ts.0.signed_duration_since(start.0);
    delta >= chrono::Duration::zero() && delta <= window
}

/// Assembles exploit ladders from one host's firewall events.
///
/// Single greedy pass with per-peer state: every 135-stage event anchors
/// a fresh sequence for its peer (superseding any open one), and later
/// 4444/69 stages against that peer extend the most recent anchor while
/// they fall inside `stage_window` of its 135 time. Stage order is
/// enforced (a 69 without a 4444 in the same sequence is ignored), so
/// `ports_reached` is always downward closed. The result is ordered by
/// anchor time; ties keep input order.
pub fn extract_sequences(
    events: &HostEvents,
    direction: Direction,
    cfg: &MatchConfig,
) -> Vec<ExploitSequence> {
    let mut open: BTreeMap<Ipv4Addr, usize> = BTreeMap::new();
    let mut out: Vec<ExploitSequence> = Vec::new();

    for event in &events.firewall {
        let Some((stage, peer)) = classify_stage(event, direction) else {
            continue;
        };
        match stage {
            Stage::Rpc => {
                out.push(ExploitSequence {
                    peer,
                    t135: event.ts,
                    t4444: None,
                    t69: None,
                    direction,
                    ports_reached: [RPC_PORT].into_iter().collect(),
                });
                open.insert(peer, out.len() - 1);
            }
            Stage::Shell => {
                if let Some(&idx) = open.get(&peer) {
                    let seq = &mut out[idx];
                    if seq.t4444.is_none() && within_window(seq.t135, event.ts, cfg.stage_window) {
                        seq.t4444 = Some(event.ts);
                        seq.ports_reached.insert(SHELL_PORT);
                    }
                }
            }
            Stage::Transfer => {
                if let Some(&idx) = open.get(&peer) {
                    let seq = &mut out[idx];
                    if seq.t4444.is_some()
                        && seq.t69.is_none()
                        && within_window(seq.t135, event.ts, cfg.stage_window)
                    {
                        seq.t69 = Some(event.ts);
                        seq.ports_reached.insert(TFTP_PORT);
                    }
                }
            }
        }
    }
    out
}
