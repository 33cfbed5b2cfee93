//! Personal-firewall log format (one connection event per line).

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};

use super::{ParseError, ParseReport};
use crate::event::{FirewallAction, FirewallEvent, HostId, NormalizedEvent, Protocol, Timestamp};

/// Header written at the top of emitted firewall logs. Lines starting
/// with `#` and blank lines are structural and never counted as skips.
pub const FIREWALL_HEADER: &str = "#Version: 1.5\n#Software: Microsoft Windows Firewall\n#Time Format: Local\n#Fields: date time action protocol src-ip dst-ip src-port dst-port\n";

/// Parses a firewall log attributed to `host`.
pub fn parse_firewall_log(
    text: &str,
    host: &HostId,
    strict: bool,
) -> Result<ParseReport, ParseError> {
    let mut report = ParseReport::new(strict);
    for (idx, line) in text.lines().enumerate() {
        let lineno = (idx + 1) as u32;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match parse_line(trimmed, host) {
            Ok(event) => report.events.push(NormalizedEvent::Firewall(event)),
            Err(reason) => report.reject(lineno, reason)?,
        }
    }
    Ok(report)
}

fn parse_line(line: &str, host: &HostId) -> Result<FirewallEvent, String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 8 {
        return Err(format!("expected 8 fields, found {}", fields.len()));
    }
    let date = NaiveDate::parse_from_str(fields[0], "%Y-%m-%d")
        .map_err(|e| format!("bad date {:?}: {e}", fields[0]))?;
    let time = NaiveTime::parse_from_str(fields[1], "%H:%M:%S")
        .map_err(|e| format!("bad time {:?}: {e}", fields[1]))?;
    let src_ip = fields[4]
        .parse()
        .map_err(|_| format!("bad src-ip {:?}", fields[4]))?;
    let dst_ip = fields[5]
        .parse()
        .map_err(|_| format!("bad dst-ip {:?}", fields[5]))?;
    let src_port = fields[6]
        .parse()
        .map_err(|_| format!("bad src-port {:?}", fields[6]))?;
    let dst_port = fields[7]
        .parse()
        .map_err(|_| format!("bad dst-port {:?}", fields[7]))?;
    Ok(FirewallEvent {
        host: host.clone(),
        ts: Timestamp(NaiveDateTime::new(date, time)),
        action: FirewallAction::parse(fields[2]),
        protocol: Protocol::parse(fields[3]),
        src_ip,
        dst_ip,
        src_port,
        dst_port,
    })
}

/// Serializes one event back into its native line form.
pub fn emit_firewall_line(event: &FirewallEvent) -> String {
    format!(
        "{} {} {} {} {} {} {}",
        event.ts.0.format("%Y-%m-%d %H:%M:%S"),
        event.action,
        event.protocol,
        event.src_ip,
        event.dst_ip,
        event.src_port,
        event.dst_port
    )
}

/// Serializes a whole log: standard header plus one line per event.
pub fn emit_firewall_log(events: &[FirewallEvent]) -> String {
    let mut out = String::from(FIREWALL_HEADER);
    for event in events {
        out.push_str(&emit_firewall_line(event));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::net::Ipv4Addr;

    fn sahib() -> HostId {
        HostId::new("SAHIB", Ipv4Addr::new(192, 168, 4, 20))
    }

    const VICTIM_TRIPLE: &str = "\
2009-09-07 14:41:09 OPEN-INBOUND TCP 192.168.2.10 192.168.4.20 3993 135
2009-09-07 14:41:12 OPEN-INBOUND TCP 192.168.2.10 192.168.4.20 4002 4444
2009-09-07 14:41:12 OPEN UDP 192.168.4.20 192.168.2.10 3027 69
";

    fn firewall_events(report: &ParseReport) -> Vec<FirewallEvent> {
        report
            .events
            .iter()
            .map(|e| match e {
                NormalizedEvent::Firewall(f) => f.clone(),
                other => panic!("unexpected event {other:?}"),
            })
            .collect()
    }

    #[test]
    fn parses_victim_triple_fields_exactly() {
        let report = parse_firewall_log(VICTIM_TRIPLE, &sahib(), true).unwrap();
        assert!(report.skipped.is_empty());
        let events = firewall_events(&report);
        assert_eq!(events.len(), 3);

        let first = &events[0];
        assert_eq!(first.ts.to_string(), "2009-09-07 14:41:09");
        assert_eq!(first.action, FirewallAction::OpenInbound);
        assert_eq!(first.protocol, Protocol::Tcp);
        assert_eq!(first.src_ip, Ipv4Addr::new(192, 168, 2, 10));
        assert_eq!(first.dst_ip, Ipv4Addr::new(192, 168, 4, 20));
        assert_eq!(first.src_port, 3993);
        assert_eq!(first.dst_port, 135);

        let tftp = &events[2];
        assert_eq!(tftp.action, FirewallAction::Open);
        assert_eq!(tftp.protocol, Protocol::Udp);
        assert_eq!(tftp.src_ip, Ipv4Addr::new(192, 168, 4, 20));
        assert_eq!(tftp.dst_ip, Ipv4Addr::new(192, 168, 2, 10));
        assert_eq!(tftp.src_port, 3027);
        assert_eq!(tftp.dst_port, 69);
    }

    #[test]
    fn parses_attacker_outbound_line() {
        let line = "2009-09-07 14:45:24 OPEN TCP 192.168.4.20 192.168.11.20 4738 135\n";
        let report = parse_firewall_log(line, &sahib(), true).unwrap();
        let events = firewall_events(&report);
        assert_eq!(events[0].action, FirewallAction::Open);
        assert_eq!(events[0].dst_ip, Ipv4Addr::new(192, 168, 11, 20));
        assert_eq!(events[0].dst_port, 135);
    }

    #[test]
    fn header_comments_and_blank_lines_are_not_events_or_skips() {
        let text = format!("{FIREWALL_HEADER}\n{VICTIM_TRIPLE}");
        let report = parse_firewall_log(&text, &sahib(), true).unwrap();
        assert_eq!(report.events.len(), 3);
        assert!(report.skipped.is_empty());
    }

    #[test]
    fn empty_input_yields_empty_report() {
        let report = parse_firewall_log("", &sahib(), true).unwrap();
        assert!(report.events.is_empty());
        assert!(report.skipped.is_empty());
    }

    #[test]
    fn lenient_mode_skips_malformed_line_with_position_and_reason() {
        let text = "2009-09-07 14:41:09 OPEN-INBOUND TCP 192.168.2.10 192.168.4.20 3993 135\nnot a log line\n";
        let report = parse_firewall_log(text, &sahib(), false).unwrap();
        assert_eq!(report.events.len(), 1);
        assert_eq!(report.skipped.len(), 1);
        assert_eq!(report.skipped[0].line, 2);
        assert!(report.skipped[0].reason.contains("fields"));
    }

    #[test]
    fn strict_mode_fails_on_malformed_line() {
        let text = "2009-09-07 14:41:09 OPEN-INBOUND TCP 192.168.2.10 192.168.4.20 3993 135\n2009-09-07 25:99:00 OPEN TCP a b 1 2\n";
        let err = parse_firewall_log(text, &sahib(), true).unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn unknown_action_and_protocol_still_parse() {
        let text = "2009-09-07 14:41:09 INFO-EVENTS-LOST ICMP 192.168.2.10 192.168.4.20 0 0\n";
        let report = parse_firewall_log(text, &sahib(), true).unwrap();
        let events = firewall_events(&report);
        assert_eq!(
            events[0].action,
            FirewallAction::Other("INFO-EVENTS-LOST".to_string())
        );
        assert_eq!(events[0].protocol, Protocol::Other("ICMP".to_string()));
    }

    #[test]
    fn parser_does_not_enforce_locality() {
        // A line whose addresses do not involve the owning host still
        // parses; the classifier's audit pass flags it later.
        let text = "2009-09-07 14:41:09 OPEN TCP 10.0.0.1 10.0.0.2 1000 80\n";
        let report = parse_firewall_log(text, &sahib(), true).unwrap();
        assert_eq!(report.events.len(), 1);
    }

    #[test]
    fn emit_then_parse_round_trips_the_fixture() {
        let report = parse_firewall_log(VICTIM_TRIPLE, &sahib(), true).unwrap();
        let events = firewall_events(&report);
        let emitted = emit_firewall_log(&events);
        let reparsed = parse_firewall_log(&emitted, &sahib(), true).unwrap();
        assert_eq!(firewall_events(&reparsed), events);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_action() -> impl Strategy<Value = FirewallAction> {
            prop_oneof![
                Just(FirewallAction::Open),
                Just(FirewallAction::OpenInbound),
                Just(FirewallAction::Close),
                Just(FirewallAction::Drop),
                "[A-Z][A-Z-]{0,14}".prop_map(|s| FirewallAction::parse(&s)),
            ]
        }

        fn arb_protocol() -> impl Strategy<Value = Protocol> {
            prop_oneof![
                Just(Protocol::Tcp),
                Just(Protocol::Udp),
                "[A-Z]{2,8}".prop_map(|s| Protocol::parse(&s)),
            ]
        }

        prop_compose! {
            fn arb_event()(
                secs in 0i64..=86_399,
                day in 1u32..=28,
                action in arb_action(),
                protocol in arb_protocol(),
                src in any::<u32>(),
                dst in any::<u32>(),
                src_port in any::<u16>(),
                dst_port in any::<u16>(),
            ) -> FirewallEvent {
                let date = NaiveDate::from_ymd_opt(2009, 9, day).unwrap();
                let time = NaiveTime::from_num_seconds_from_midnight_opt(secs as u32, 0).unwrap();
                FirewallEvent {
                    host: sahib(),
                    ts: Timestamp(NaiveDateTime::new(date, time)),
                    action,
                    protocol,
                    src_ip: Ipv4Addr::from(src),
                    dst_ip: Ipv4Addr::from(dst),
                    src_port,
                    dst_port,
                }
            }
        }

        proptest! {
            #[test]
            fn emitted_events_reparse_identically(events in proptest::collection::vec(arb_event(), 0..40)) {
                let emitted = emit_firewall_log(&events);
                let report = parse_firewall_log(&emitted, &sahib(), true).unwrap();
                prop_assert_eq!(firewall_events(&report), events);
            }

            #[test]
            fn line_accounting_holds_for_mixed_input(
                events in proptest::collection::vec(arb_event(), 0..20),
                garbage in proptest::collection::vec("[a-z ]{1,30}", 0..10),
                comments in 0usize..4,
            ) {
                let mut lines: Vec<String> = Vec::new();
                lines.extend(events.iter().map(emit_firewall_line));
                lines.extend(garbage.iter().cloned());
                for _ in 0..comments {
                    lines.push("#Fields: date time".to_string());
                }
                // Deterministic interleave: sort by content hash-ish key.
                lines.sort();
                let text = lines.join("\n");
                let report = parse_firewall_log(&text, &sahib(), false).unwrap();
                let structural = lines
                    .iter()
                    .filter(|l| l.trim().is_empty() || l.trim().starts_with('#'))
                    .count();
                prop_assert_eq!(
                    report.events.len() + report.skipped.len() + structural,
                    lines.len()
                );
            }
        }
    }
}
