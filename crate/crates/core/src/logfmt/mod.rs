//! Parsers and serializers for the three native log formats.
//!
//! Each format has a `parse_*` function returning a [`ParseReport`] and an
//! `emit_*` counterpart used by the simulator; re-parsing emitted text
//! yields identical events. Parsing is lenient by default: malformed
//! input is skipped with a line number and reason. Strict mode turns the
//! first malformation into a [`ParseError`] and is meant for fixtures and
//! generated corpora, where any skip indicates a bug.
//!
//! Formats:
//!
//! * firewall log: `#`-prefixed header lines, then one event per line of
//!   whitespace-separated fields
//!   `date time action protocol src-ip dst-ip src-port dst-port`
//!   (date `YYYY-MM-DD`, time `HH:MM:SS`);
//! * event-log export (security/system/application): one record per line,
//!   tab-separated `date time source type category event_id user computer
//!   message` (date `MM/DD/YYYY`); the message is double-quoted when it
//!   contains tabs, quotes, or newlines, with embedded quotes doubled and
//!   embedded newlines permitted;
//! * IDS alert log: blank-line-separated blocks of
//!   `[**] [gid:sid:rev] MESSAGE [**]`, an optional
//!   `[Classification: ...] [Priority: N]` line, a
//!   `MM/DD-HH:MM:SS.ffffff SRC[:PORT] -> DST[:PORT]` line, then protocol
//!   detail lines whose first token names the protocol.

mod eventlog;
mod firewall;
mod ids;

pub use eventlog::{
    emit_security_log, emit_security_record, emit_system_log, emit_system_record, parse_event_log,
    EventLogKind,
};
pub use firewall::{emit_firewall_line, emit_firewall_log, parse_firewall_log, FIREWALL_HEADER};
pub use ids::{emit_ids_alert, emit_ids_alert_log, parse_ids_alert_log};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::NormalizedEvent;

/// Year used to complete IDS timestamps, which carry month/day only.
#[derive(Debug, Copy, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct YearHint(i32);

impl YearHint {
    pub fn new(year: i32) -> Result<Self, ParseError> {
        if (1970..=9999).contains(&year) {
            Ok(YearHint(year))
        } else {
            Err(ParseError {
                line: 0,
                reason: format!("year hint {year} outside 1970..=9999"),
            })
        }
    }

    pub fn year(&self) -> i32 {
        self.0
    }
}

/// Input unit the parser rejected, with a 1-based line number of the
/// offending line (for IDS logs, the first line of the block).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedLine {
    pub line: u32,
    pub reason: String,
}

/// Outcome of parsing one log file.
///
/// Accounting: every input unit (line, record, or alert block) ends up as
/// exactly one event, one skip entry, or a header/blank unit, so
/// `events.len() + skipped.len() + header-or-blank units == total units`.
/// In strict mode `skipped` is empty, otherwise parsing returned an error.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseReport {
    pub events: Vec<NormalizedEvent>,
    pub skipped: Vec<SkippedLine>,
    pub strict: bool,
}

impl ParseReport {
    fn new(strict: bool) -> Self {
        ParseReport {
            events: Vec::new(),
            skipped: Vec::new(),
            strict,
        }
    }

    /// Registers a malformation: an error in strict mode, a skip entry
    /// otherwise.
    fn reject(&mut self, line: u32, reason: String) -> Result<(), ParseError> {
        if self.strict {
            return Err(ParseError { line, reason });
        }
        self.skipped.push(SkippedLine { line, reason });
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct ParseError {
    pub line: u32,
    pub reason: String,
}
