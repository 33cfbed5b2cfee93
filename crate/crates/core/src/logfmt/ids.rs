//! Network IDS alert log: blank-line-separated full-format alert blocks.
//!
//! Alert timestamps carry month/day but no year, so parsing takes a
//! [`YearHint`]. Blocks are the accounting unit: a malformed block is
//! skipped (or fails strict parsing) as a whole, reported at its first
//! line.

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};

use super::{ParseError, ParseReport, YearHint};
use crate::event::{IdsAlert, IdsProtocol, NormalizedEvent, SigId, Timestamp};

/// Parses an IDS alert log. `year` completes the year-less timestamps.
pub fn parse_ids_alert_log(
    text: &str,
    year: YearHint,
    strict: bool,
) -> Result<ParseReport, ParseError> {
    let mut report = ParseReport::new(strict);
    for block in blocks(text) {
        match parse_block(&block.lines, year) {
            Ok(alert) => report.events.push(NormalizedEvent::Ids(alert)),
            Err(reason) => report.reject(block.first_line, reason)?,
        }
    }
    Ok(report)
}

struct Block<'a> {
    first_line: u32,
    lines: Vec<&'a str>,
}

/// Maximal runs of non-blank lines.
fn blocks(text: &str) -> Vec<Block<'_>> {
    let mut out: Vec<Block> = Vec::new();
    let mut current: Option<Block> = None;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            if let Some(block) = current.take() {
                out.push(block);
            }
        } else {
            current
                .get_or_insert_with(|| Block {
                    first_line: (idx + 1) as u32,
                    lines: Vec::new(),
                })
                .lines
                .push(line);
        }
    }
    if let Some(block) = current.take() {
        out.push(block);
    }
    out
}

fn parse_block(lines: &[&str], year: YearHint) -> Result<IdsAlert, String> {
    if lines.len() < 3 {
        return Err(format!(
            "alert block needs signature, timestamp, and protocol lines, found {} line(s)",
            lines.len()
        ));
    }
    let (sig, message) = parse_sig_line(lines[0])?;

    let mut next = 1;
    let (classification, priority) = if lines[next].trim_start().starts_with('[') {
        let meta = parse_meta_line(lines[next])?;
        next += 1;
        meta
    } else {
        (None, None)
    };

    if lines.len() < next + 2 {
        return Err("alert block truncated before protocol detail line".to_string());
    }
    let (ts, src, dst) = parse_endpoint_line(lines[next], year)?;
    let protocol = parse_protocol_line(lines[next + 1])?;

    Ok(IdsAlert {
        ts,
        sig,
        message,
        classification,
        priority,
        src_ip: src.0,
        src_port: src.1,
        dst_ip: dst.0,
        dst_port: dst.1,
        protocol,
    })
}

/// `[**] [gid:sid:rev] MESSAGE [**]`
fn parse_sig_line(line: &str) -> Result<(SigId, String), String> {
    let inner = line
        .trim()
        .strip_prefix("[**]")
        .and_then(|rest| rest.strip_suffix("[**]"))
        .ok_or_else(|| format!("not a signature line: {line:?}"))?
        .trim();
    let rest = inner
        .strip_prefix('[')
        .ok_or_else(|| format!("missing signature id in {line:?}"))?;
    let (sig_str, message) = rest
        .split_once(']')
        .ok_or_else(|| format!("unterminated signature id in {line:?}"))?;
    let parts: Vec<&str> = sig_str.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("signature id {sig_str:?} is not gid:sid:rev"));
    }
    let nums: Vec<u32> = parts
        .iter()
        .map(|p| p.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("non-numeric signature id {sig_str:?}"))?;
    Ok((
        SigId {
            gid: nums[0],
            sid: nums[1],
            rev: nums[2],
        },
        message.trim().to_string(),
    ))
}

/// `[Classification: ...] [Priority: N]`, either part optional.
fn parse_meta_line(line: &str) -> Result<(Option<String>, Option<u32>), String> {
    let mut classification = None;
    let mut priority = None;
    let mut rest = line.trim();
    while let Some(start) = rest.find('[') {
        let after = &rest[start + 1..];
        let end = after
            .find(']')
            .ok_or_else(|| format!("unterminated bracket group in {line:?}"))?;
        let group = &after[..end];
        if let Some(value) = group.strip_prefix("Classification:") {
            classification = Some(value.trim().to_string());
        } else if let Some(value) = group.strip_prefix("Priority:") {
            priority = Some(
                value
                    .trim()
                    .parse::<u32>()
                    .map_err(|_| format!("bad priority {value:?}"))?,
            );
        } else {
            return Err(format!("unrecognized bracket group [{group}]"));
        }
        rest = &after[end + 1..];
    }
    Ok((classification, priority))
}

type Endpoint = (std::net::Ipv4Addr, Option<u16>);

/// `MM/DD-HH:MM:SS.ffffff SRC[:PORT] -> DST[:PORT]`
fn parse_endpoint_line(
    line: &str,
    year: YearHint,
) -> Result<(Timestamp, Endpoint, Endpoint), String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 4 || fields[2] != "->" {
        return Err(format!("bad timestamp/addresses line: {line:?}"));
    }
    let ts = parse_ids_timestamp(fields[0], year)?;
    let src = parse_endpoint(fields[1])?;
    let dst = parse_endpoint(fields[3])?;
    Ok((ts, src, dst))
}

fn parse_ids_timestamp(token: &str, year: YearHint) -> Result<Timestamp, String> {
    let (date_part, time_part) = token
        .split_once('-')
        .ok_or_else(|| format!("bad timestamp {token:?}"))?;
    let (month, day) = date_part
        .split_once('/')
        .ok_or_else(|| format!("bad timestamp date {date_part:?}"))?;
    let month: u32 = month.parse().map_err(|_| format!("bad month {month:?}"))?;
    let day: u32 = day.parse().map_err(|_| format!("bad day {day:?}"))?;
    let date = NaiveDate::from_ymd_opt(year.year(), month, day)
        .ok_or_else(|| format!("no such date {month:02}/{day:02} in {}", year.year()))?;
    let time = NaiveTime::parse_from_str(time_part, "%H:%M:%S%.f")
        .map_err(|e| format!("bad time {time_part:?}: {e}"))?;
    Ok(Timestamp(NaiveDateTime::new(date, time)))
}

fn parse_endpoint(token: &str) -> Result<Endpoint, String> {
    match token.split_once(':') {
        Some((ip, port)) => Ok((
            ip.parse().map_err(|_| format!("bad address {ip:?}"))?,
            Some(port.parse().map_err(|_| format!("bad port {port:?}"))?),
        )),
        None => Ok((
            token
                .parse()
                .map_err(|_| format!("bad address {token:?}"))?,
            None,
        )),
    }
}

/// First token of the first detail line names the protocol.
fn parse_protocol_line(line: &str) -> Result<IdsProtocol, String> {
    let token = line
        .split_whitespace()
        .next()
        .ok_or_else(|| format!("empty protocol detail line: {line:?}"))?;
    match token {
        "UDP" => Ok(IdsProtocol::Udp),
        "TCP" => Ok(IdsProtocol::Tcp),
        other => {
            let num = other
                .strip_prefix("PROTO:")
                .and_then(|n| n.parse::<u8>().ok())
                .ok_or_else(|| format!("unrecognized protocol token {other:?}"))?;
            Ok(IdsProtocol::Proto(num))
        }
    }
}

fn endpoint_str(ip: std::net::Ipv4Addr, port: Option<u16>) -> String {
    match port {
        Some(p) => format!("{ip}:{p}"),
        None => ip.to_string(),
    }
}

/// Serializes one alert as a full-format block (no trailing blank line).
/// `seq` feeds the unmodeled packet-ID field of the detail line.
pub fn emit_ids_alert(alert: &IdsAlert, seq: u32) -> String {
    let mut out = String::new();
    out.push_str(&format!("[**] [{}] {} [**]\n", alert.sig, alert.message));
    match (&alert.classification, alert.priority) {
        (Some(class), Some(prio)) => {
            out.push_str(&format!("[Classification: {class}] [Priority: {prio}]\n"))
        }
        (Some(class), None) => out.push_str(&format!("[Classification: {class}]\n")),
        (None, Some(prio)) => out.push_str(&format!("[Priority: {prio}]\n")),
        (None, None) => {}
    }
    out.push_str(&format!(
        "{} {} -> {}\n",
        alert.ts.0.format("%m/%d-%H:%M:%S%.6f"),
        endpoint_str(alert.src_ip, alert.src_port),
        endpoint_str(alert.dst_ip, alert.dst_port),
    ));
    match alert.protocol {
        IdsProtocol::Udp => {
            out.push_str(&format!(
                "UDP TTL:128 TOS:0x0 ID:{seq} IpLen:20 DgmLen:48\n"
            ));
            out.push_str("Len: 20\n");
        }
        IdsProtocol::Tcp => {
            out.push_str(&format!(
                "TCP TTL:128 TOS:0x0 ID:{seq} IpLen:20 DgmLen:60\n"
            ));
        }
        IdsProtocol::Proto(p) => {
            out.push_str(&format!(
                "PROTO:{p} TTL:0 TOS:0x0 ID:{seq} IpLen:20 DgmLen:166\n"
            ));
        }
    }
    out
}

/// Serializes a whole alert log, one blank line between blocks.
pub fn emit_ids_alert_log(alerts: &[IdsAlert]) -> String {
    let mut out = String::new();
    for (i, alert) in alerts.iter().enumerate() {
        out.push_str(&emit_ids_alert(alert, (i + 1) as u32));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::net::Ipv4Addr;

    const TFTP_GET: &str = "\
[**] [1:1444:3] TFTP Get [**]
[Classification: Potentially Bad Traffic] [Priority: 2]
09/07-14:41:03.846382 192.168.4.20:3027 -> 192.168.2.10:69
UDP TTL:128 TOS:0x0 ID:337 IpLen:20 DgmLen:48
Len: 20
";

    const PORTSWEEP: &str = "\
[**] [122:3:0] (portscan) TCP Portsweep [**]
[Priority: 3]
09/07-14:44:18.729996 192.168.2.10 -> 192.168.11.1
PROTO:255 TTL:0 TOS:0x0 ID:3307 IpLen:20 DgmLen:166
";

    fn year() -> YearHint {
        YearHint::new(2009).unwrap()
    }

    fn alerts(report: &ParseReport) -> Vec<IdsAlert> {
        report
            .events
            .iter()
            .map(|e| match e {
                NormalizedEvent::Ids(a) => a.clone(),
                other => panic!("unexpected event {other:?}"),
            })
            .collect()
    }

    #[test]
    fn parses_tftp_get_block_exactly() {
        let report = parse_ids_alert_log(TFTP_GET, year(), true).unwrap();
        assert!(report.skipped.is_empty());
        let got = alerts(&report);
        assert_eq!(got.len(), 1);
        let a = &got[0];
        assert_eq!(
            a.sig,
            SigId {
                gid: 1,
                sid: 1444,
                rev: 3
            }
        );
        assert_eq!(a.message, "TFTP Get");
        assert_eq!(a.classification.as_deref(), Some("Potentially Bad Traffic"));
        assert_eq!(a.priority, Some(2));
        assert_eq!(a.ts.to_string(), "2009-09-07 14:41:03.846382");
        assert_eq!(a.src_ip, Ipv4Addr::new(192, 168, 4, 20));
        assert_eq!(a.src_port, Some(3027));
        assert_eq!(a.dst_ip, Ipv4Addr::new(192, 168, 2, 10));
        assert_eq!(a.dst_port, Some(69));
        assert_eq!(a.protocol, IdsProtocol::Udp);
    }

    #[test]
    fn parses_portsweep_block_without_ports() {
        let report = parse_ids_alert_log(PORTSWEEP, year(), true).unwrap();
        let got = alerts(&report);
        let a = &got[0];
        assert_eq!(
            a.sig,
            SigId {
                gid: 122,
                sid: 3,
                rev: 0
            }
        );
        assert_eq!(a.message, "(portscan) TCP Portsweep");
        assert_eq!(a.classification, None);
        assert_eq!(a.priority, Some(3));
        assert_eq!(a.src_ip, Ipv4Addr::new(192, 168, 2, 10));
        assert_eq!(a.src_port, None);
        assert_eq!(a.dst_ip, Ipv4Addr::new(192, 168, 11, 1));
        assert_eq!(a.dst_port, None);
        assert_eq!(a.protocol, IdsProtocol::Proto(255));
    }

    #[test]
    fn parses_multiple_blocks_and_applies_year_hint() {
        let text = format!("{TFTP_GET}\n{PORTSWEEP}");
        let report = parse_ids_alert_log(&text, YearHint::new(2011).unwrap(), true).unwrap();
        let got = alerts(&report);
        assert_eq!(got.len(), 2);
        assert!(got
            .iter()
            .all(|a| a.ts.0.format("%Y").to_string() == "2011"));
    }

    #[test]
    fn empty_input_yields_empty_report() {
        let report = parse_ids_alert_log("", year(), true).unwrap();
        assert!(report.events.is_empty());
        assert!(report.skipped.is_empty());
    }

    #[test]
    fn malformed_block_is_skipped_as_a_whole_with_first_line() {
        let text = format!("{TFTP_GET}\nthis is not an alert\nat all\nreally\n");
        let report = parse_ids_alert_log(&text, year(), false).unwrap();
        assert_eq!(report.events.len(), 1);
        assert_eq!(report.skipped.len(), 1);
        assert_eq!(report.skipped[0].line, 7);
        assert!(report.skipped[0].reason.contains("signature"));
    }

    #[test]
    fn strict_mode_fails_on_malformed_block() {
        let text = "[**] [1:1444:3] TFTP Get [**]\n09/07-14:41:03.846382 not an address\nUDP\n";
        let err = parse_ids_alert_log(text, year(), true).unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn truncated_block_is_rejected() {
        let text = "[**] [1:1444:3] TFTP Get [**]\n[Priority: 2]\n09/07-14:41:03.846382 192.168.4.20:3027 -> 192.168.2.10:69\n";
        let report = parse_ids_alert_log(text, year(), false).unwrap();
        assert_eq!(report.skipped.len(), 1);
        assert!(report.skipped[0].reason.contains("truncated"));
    }

    #[test]
    fn impossible_date_for_year_hint_is_rejected() {
        let text = "[**] [1:1444:3] TFTP Get [**]\n02/29-14:41:03.846382 192.168.4.20:3027 -> 192.168.2.10:69\nUDP TTL:128\n";
        let report = parse_ids_alert_log(text, YearHint::new(2009).unwrap(), false).unwrap();
        assert_eq!(report.skipped.len(), 1);
        assert!(report.skipped[0].reason.contains("no such date"));
    }

    #[test]
    fn year_hint_range_is_validated() {
        assert!(YearHint::new(1969).is_err());
        assert!(YearHint::new(10_000).is_err());
        assert_eq!(YearHint::new(2009).unwrap().year(), 2009);
    }

    #[test]
    fn emitted_alerts_reparse_identically() {
        let text = format!("{TFTP_GET}\n{PORTSWEEP}");
        let report = parse_ids_alert_log(&text, year(), true).unwrap();
        let parsed = alerts(&report);
        let emitted = emit_ids_alert_log(&parsed);
        let reparsed = parse_ids_alert_log(&emitted, year(), true).unwrap();
        assert_eq!(alerts(&reparsed), parsed);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        prop_compose! {
            fn arb_alert()(
                secs in 0i64..=86_399,
                micros in 0u32..1_000_000,
                day in 1u32..=28,
                month in 1u32..=12,
                gid in 1u32..200,
                sid in 1u32..10_000,
                rev in 0u32..10,
                message in "[A-Za-z][A-Za-z0-9 ()]{0,30}",
                classification in proptest::option::of("[A-Za-z][A-Za-z ]{0,20}"),
                priority in proptest::option::of(1u32..5),
                src in any::<u32>(),
                dst in any::<u32>(),
                ports in proptest::option::of((any::<u16>(), any::<u16>())),
                proto_num in proptest::option::of(any::<u8>()),
            ) -> IdsAlert {
                let time = NaiveTime::from_num_seconds_from_midnight_opt(secs as u32, 0)
                    .unwrap()
                    + chrono::Duration::microseconds(micros as i64);
                let date = NaiveDate::from_ymd_opt(2009, month, day).unwrap();
                // Ports only make sense for transport-level alerts.
                let (protocol, ports) = match proto_num {
                    Some(n) => (IdsProtocol::Proto(n), None),
                    None => (
                        if micros % 2 == 0 { IdsProtocol::Udp } else { IdsProtocol::Tcp },
                        ports,
                    ),
                };
                IdsAlert {
                    ts: Timestamp(NaiveDateTime::new(date, time)),
                    sig: SigId { gid, sid, rev },
                    message: message.trim().to_string(),
                    classification: classification.map(|c| c.trim().to_string()),
                    priority,
                    src_ip: Ipv4Addr::from(src),
                    src_port: ports.map(|p| p.0),
                    dst_ip: Ipv4Addr::from(dst),
                    dst_port: ports.map(|p| p.1),
                    protocol,
                }
            }
        }

        proptest! {
            #[test]
            fn emitted_alert_logs_reparse_identically(
                alerts_in in proptest::collection::vec(arb_alert(), 0..12)
            ) {
                let emitted = emit_ids_alert_log(&alerts_in);
                let report = parse_ids_alert_log(&emitted, year(), true).unwrap();
                prop_assert_eq!(alerts(&report), alerts_in);
            }

            #[test]
            fn block_accounting_holds(
                alerts_in in proptest::collection::vec(arb_alert(), 0..8),
                garbage_blocks in proptest::collection::vec("[a-z][a-z ]{0,20}", 0..4),
            ) {
                let mut text = emit_ids_alert_log(&alerts_in);
                for g in &garbage_blocks {
                    text.push_str(g);
                    text.push_str("\nmore garbage\nand more\n\n");
                }
                let report = parse_ids_alert_log(&text, year(), false).unwrap();
                prop_assert_eq!(report.events.len(), alerts_in.len());
                prop_assert_eq!(report.skipped.len(), garbage_blocks.len());
            }
        }
    }
}
