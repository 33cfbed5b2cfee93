//! Event-log export format shared by security, system, and application
//! logs: tab-separated records `date time source type category event_id
//! user computer message`, RFC4180-style quoting on the message field.
//!
//! Security exports become [`SecurityEvent`]s; system and application
//! exports become [`SystemEvent`]s. Process-creation records (event ID
//! 592) carry labeled sub-fields inside the message which are lifted into
//! the event; the scan is case-sensitive, line-anchored, first occurrence
//! wins.

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use super::{ParseError, ParseReport};
use crate::event::{HostId, NormalizedEvent, SecurityEvent, SystemEvent, Timestamp};

/// Which export a file claims to be. Application logs reuse the
/// [`SystemEvent`] shape; no analysis rule consumes them.
#[derive(Debug, Copy, Clone, PartialEq, Eq)]
pub enum EventLogKind {
    Security,
    System,
    Application,
}

const FIELD_COUNT: usize = 9;

/// Parses an event-log export attributed to `host`.
pub fn parse_event_log(
    text: &str,
    host: &HostId,
    kind: EventLogKind,
    strict: bool,
) -> Result<ParseReport, ParseError> {
    let mut report = ParseReport::new(strict);
    let mut reader = ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    loop {
        // Track the position before pulling the next record so csv-level
        // errors (e.g. unclosed quotes) still report a useful line.
        let line_before = records.reader().position().line() as u32;
        match records.next() {
            None => break,
            Some(Err(err)) => {
                let line = err
                    .position()
                    .map(|p| p.line() as u32)
                    .unwrap_or(line_before);
                report.reject(line, format!("malformed record: {err}"))?;
            }
            Some(Ok(record)) => {
                let line = record
                    .position()
                    .map(|p| p.line() as u32)
                    .unwrap_or(line_before);
                if record.len() == 1 && record[0].trim().is_empty() {
                    continue; // blank line, structural
                }
                match parse_record(&record, host, kind) {
                    Ok(event) => report.events.push(event),
                    Err(reason) => report.reject(line, reason)?,
                }
            }
        }
    }
    Ok(report)
}

fn parse_record(
    record: &StringRecord,
    host: &HostId,
    kind: EventLogKind,
) -> Result<NormalizedEvent, String> {
    if record.len() != FIELD_COUNT {
        return Err(format!(
            "expected {FIELD_COUNT} tab-separated fields, found {}",
            record.len()
        ));
    }
    let date = NaiveDate::parse_from_str(&record[0], "%m/%d/%Y")
        .map_err(|e| format!("bad date {:?}: {e}", &record[0]))?;
    let time = NaiveTime::parse_from_str(&record[1], "%H:%M:%S")
        .map_err(|e| format!("bad time {:?}: {e}", &record[1]))?;
    let ts = Timestamp(NaiveDateTime::new(date, time));
    let event_id: u32 = record[5]
        .parse()
        .map_err(|_| format!("bad event id {:?}", &record[5]))?;
    let message = record[8].to_string();

    match kind {
        EventLogKind::Security => {
            let mut event = SecurityEvent {
                host: host.clone(),
                ts,
                event_id,
                user: record[6].to_string(),
                computer: record[7].to_string(),
                image_file_name: None,
                new_process_id: None,
                creator_process_id: None,
                user_name: None,
                domain: None,
                logon_id: None,
                raw_message: message,
            };
            if event_id == 592 {
                let msg = event.raw_message.clone();
                event.image_file_name = message_field(&msg, "Image File Name:");
                event.new_process_id =
                    message_field(&msg, "New Process ID:").and_then(|v| v.parse().ok());
                event.creator_process_id =
                    message_field(&msg, "Creator Process ID:").and_then(|v| v.parse().ok());
                event.user_name = message_field(&msg, "User Name:");
                event.domain = message_field(&msg, "Domain:");
                event.logon_id = message_field(&msg, "Logon ID:");
                if event.image_file_name.is_none() {
                    return Err(
                        "process-creation record (592) lacks \"Image File Name:\" sub-field"
                            .to_string(),
                    );
                }
            }
            Ok(NormalizedEvent::Security(event))
        }
        EventLogKind::System | EventLogKind::Application => {
            Ok(NormalizedEvent::System(SystemEvent {
                host: host.clone(),
                ts,
                source: record[2].to_string(),
                event_id,
                computer: record[7].to_string(),
                raw_message: message,
            }))
        }
    }
}

/// First line of the message starting with `label`, value trimmed.
fn message_field(message: &str, label: &str) -> Option<String> {
    message
        .lines()
        .find_map(|line| line.strip_prefix(label))
        .map(|rest| rest.trim().to_string())
}

fn write_record(fields: &[&str]) -> String {
    let mut writer = WriterBuilder::new()
        .delimiter(b'\t')
        .from_writer(Vec::new());
    writer.write_record(fields).expect("in-memory write");
    let bytes = writer.into_inner().expect("in-memory flush");
    String::from_utf8(bytes).expect("utf8 record")
}

/// Serializes one security event back into its record form. The type and
/// category columns are not modeled; they are re-derived from the event
/// ID (592 is a Success Audit / Detailed Tracking record).
pub fn emit_security_record(event: &SecurityEvent) -> String {
    let (kind, category) = if event.event_id == 592 {
        ("Success Audit", "Detailed Tracking")
    } else {
        ("Information", "None")
    };
    write_record(&[
        &event.ts.0.format("%m/%d/%Y").to_string(),
        &event.ts.0.format("%H:%M:%S").to_string(),
        "Security",
        kind,
        category,
        &event.event_id.to_string(),
        &event.user,
        &event.computer,
        &event.raw_message,
    ])
}

/// Serializes one system (or application) event back into its record
/// form. The unmodeled type and user columns are re-derived from the
/// event ID (7031 logs as an Error under N/A; restarts log under the
/// system account).
pub fn emit_system_record(event: &SystemEvent) -> String {
    let kind = if event.event_id == 7031 {
        "Error"
    } else {
        "Information"
    };
    let user = match event.event_id {
        1074 => "NT AUTHORITY\\SYSTEM",
        _ => "N/A",
    };
    write_record(&[
        &event.ts.0.format("%m/%d/%Y").to_string(),
        &event.ts.0.format("%H:%M:%S").to_string(),
        &event.source,
        kind,
        "None",
        &event.event_id.to_string(),
        user,
        &event.computer,
        &event.raw_message,
    ])
}

pub fn emit_security_log(events: &[SecurityEvent]) -> String {
    events.iter().map(emit_security_record).collect()
}

pub fn emit_system_log(events: &[SystemEvent]) -> String {
    events.iter().map(emit_system_record).collect()
}
