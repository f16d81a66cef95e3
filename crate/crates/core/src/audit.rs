//! Append-only audit log.
//!
//! Records are sequenced from 1 and never mutated. An optional sink gets
//! each record as one tab-separated line at append time:
//!
//! ```text
//! <sequence>\t<timestamp-ISO8601>\t<agent_id>\t<event>\t<predicate-or-"-">\t<detail>
//! ```

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use parking_lot::Mutex;

use crate::store::AgentId;
use crate::term::Term;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AuditEvent {
    Violation,
    Denial,
    Revocation,
    Registration,
    Allowed,
}

impl AuditEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            AuditEvent::Violation => "violation",
            AuditEvent::Denial => "denial",
            AuditEvent::Revocation => "revocation",
            AuditEvent::Registration => "registration",
            AuditEvent::Allowed => "allowed",
        }
    }
}

impl fmt::Display for AuditEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AuditEvent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "violation" => AuditEvent::Violation,
            "denial" => AuditEvent::Denial,
            "revocation" => AuditEvent::Revocation,
            "registration" => AuditEvent::Registration,
            "allowed" => AuditEvent::Allowed,
            other => return Err(format!("unknown audit event `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditRecord {
    pub sequence: u64,
    pub timestamp: DateTime<Utc>,
    pub agent_id: AgentId,
    pub event: AuditEvent,
    pub predicate: Option<Term>,
    pub detail: String,
}

impl AuditRecord {
    /// The export line, without trailing newline. Tabs and newlines in
    /// the detail are flattened to spaces.
    pub fn to_line(&self) -> String {
        let flat = |s: &str| s.replace(['\t', '\n', '\r'], " ");
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.sequence,
            self.timestamp.to_rfc3339_opts(SecondsFormat::Millis, true),
            self.agent_id,
            self.event,
            self.predicate
                .as_ref()
                .map_or_else(|| "-".to_string(), |p| flat(&p.to_string())),
            flat(&self.detail)
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuditFilter {
    pub agent_id: Option<AgentId>,
    pub event: Option<AuditEvent>,
}

impl AuditFilter {
    pub fn matches(&self, r: &AuditRecord) -> bool {
        self.agent_id.as_ref().is_none_or(|a| *a == r.agent_id)
            && self.event.is_none_or(|e| e == r.event)
    }
}

#[derive(Default)]
struct Inner {
    records: Vec<AuditRecord>,
    sink: Option<Box<dyn Write + Send>>,
}

#[derive(Default)]
pub struct AuditLog {
    inner: Mutex<Inner>,
}

impl fmt::Debug for AuditLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner = self.inner.lock();
        f.debug_struct("AuditLog")
            .field("records", &inner.records.len())
            .field("sink", &inner.sink.is_some())
            .finish()
    }
}

impl AuditLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_sink(sink: impl Write + Send + 'static) -> Self {
        Self {
            inner: Mutex::new(Inner {
                records: Vec::new(),
                sink: Some(Box::new(sink)),
            }),
        }
    }

    /// Appends a record with the next sequence number and returns it.
    pub fn log(
        &self,
        timestamp: DateTime<Utc>,
        agent_id: &AgentId,
        event: AuditEvent,
        predicate: Option<Term>,
        detail: impl Into<String>,
    ) -> AuditRecord {
        let mut inner = self.inner.lock();
        let record = AuditRecord {
            sequence: inner.records.len() as u64 + 1,
            timestamp,
            agent_id: agent_id.clone(),
            event,
            predicate,
            detail: detail.into(),
        };
        if let Some(sink) = inner.sink.as_mut() {
            // The in-memory log stays authoritative if the export fails.
            if let Err(e) = writeln!(sink, "{}", record.to_line()).and_then(|_| sink.flush()) {
                tracing::warn!(error = %e, "audit export failed");
            }
        }
        inner.records.push(record.clone());
        record
    }

    pub fn query_log(&self, filter: &AuditFilter) -> Vec<AuditRecord> {
        self.inner
            .lock()
            .records
            .iter()
            .filter(|r| filter.matches(r))
            .cloned()
            .collect()
    }

    pub fn records(&self) -> Vec<AuditRecord> {
        self.inner.lock().records.clone()
    }

    pub fn count(&self, event: AuditEvent) -> usize {
        self.inner
            .lock()
            .records
            .iter()
            .filter(|r| r.event == event)
            .count()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn export(&self, mut out: impl Write) -> io::Result<()> {
        for r in self.inner.lock().records.iter() {
            writeln!(out, "{}", r.to_line())?;
        }
        Ok(())
    }
}
