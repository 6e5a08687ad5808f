use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct LogError {
    pub line: usize,
    pub message: String,
}

/// An active method invocation, written `bundle/object.method#id`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodRef {
    pub bundle: String,
    pub object: String,
    pub method: String,
    pub call_id: u64,
}

impl fmt::Display for MethodRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}.{}#{}", self.bundle, self.object, self.method, self.call_id)
    }
}

impl FromStr for MethodRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("malformed method reference {s:?}");
        let (bundle, rest) = s.split_once('/').ok_or_else(bad)?;
        let (rest, id) = rest.rsplit_once('#').ok_or_else(bad)?;
        let (object, method) = rest.split_once('.').ok_or_else(bad)?;
        Ok(MethodRef {
            bundle: bundle.into(),
            object: object.into(),
            method: method.into(),
            call_id: id.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Call,
    Step,
    Return,
    AddBundle,
    RemoveBundle,
    CreateObject,
    DeleteObject,
    /// A pending call whose callee was removed with its bundle or object.
    Abandon,
}

impl EventKind {
    pub const ALL: [EventKind; 8] = [
        EventKind::Call,
        EventKind::Step,
        EventKind::Return,
        EventKind::AddBundle,
        EventKind::RemoveBundle,
        EventKind::CreateObject,
        EventKind::DeleteObject,
        EventKind::Abandon,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Call => "call",
            EventKind::Step => "step",
            EventKind::Return => "return",
            EventKind::AddBundle => "add_bundle",
            EventKind::RemoveBundle => "remove_bundle",
            EventKind::CreateObject => "create_object",
            EventKind::DeleteObject => "delete_object",
            EventKind::Abandon => "abandon",
        }
    }
}

/// What an event acts on.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subject {
    None,
    Method(MethodRef),
    Transition { from: String, to: String },
    Bundle(String),
    Object { bundle: String, object: String },
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::None => f.write_str("-"),
            Subject::Method(m) => m.fmt(f),
            Subject::Transition { from, to } => write!(f, "{from}->{to}"),
            Subject::Bundle(b) => f.write_str(b),
            Subject::Object { bundle, object } => write!(f, "{bundle}/{object}"),
        }
    }
}

/// One line of an event log: `seq kind actor subject`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TraceEvent {
    pub seq: u64,
    pub kind: EventKind,
    pub actor: Option<MethodRef>,
    pub subject: Subject,
}

impl TraceEvent {
    /// The invoked method of a `call` or `abandon` event.
    pub fn callee(&self) -> Option<&MethodRef> {
        match (&self.kind, &self.subject) {
            (EventKind::Call | EventKind::Abandon, Subject::Method(m)) => Some(m),
            _ => None,
        }
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} ", self.seq, self.kind.as_str())?;
        match &self.actor {
            Some(a) => write!(f, "{a} ")?,
            None => f.write_str("- ")?,
        }
        self.subject.fmt(f)
    }
}

fn parse_subject(kind: EventKind, s: &str) -> Result<Subject, String> {
    Ok(match kind {
        EventKind::Call | EventKind::Abandon => Subject::Method(s.parse()?),
        EventKind::Step => {
            let (from, to) = s.split_once("->").ok_or_else(|| format!("malformed transition {s:?}"))?;
            Subject::Transition {
                from: from.into(),
                to: to.into(),
            }
        }
        EventKind::AddBundle | EventKind::RemoveBundle => Subject::Bundle(s.into()),
        EventKind::CreateObject | EventKind::DeleteObject => {
            let (bundle, object) = s.split_once('/').ok_or_else(|| format!("malformed object {s:?}"))?;
            Subject::Object {
                bundle: bundle.into(),
                object: object.into(),
            }
        }
        EventKind::Return if s == "-" => Subject::None,
        EventKind::Return => return Err(format!("unexpected subject {s:?} for return")),
    })
}

impl FromStr for TraceEvent {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, String> {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [seq, kind, actor, subject] = parts[..] else {
            return Err(format!("expected 4 fields, found {}", parts.len()));
        };
        let kind = EventKind::ALL
            .into_iter()
            .find(|k| k.as_str() == kind)
            .ok_or_else(|| format!("unknown event kind {kind:?}"))?;
        Ok(TraceEvent {
            seq: seq.parse().map_err(|_| format!("bad sequence number {seq:?}"))?,
            kind,
            actor: if actor == "-" { None } else { Some(actor.parse()?) },
            subject: parse_subject(kind, subject)?,
        })
    }
}

/// Renders events one per line, each line newline-terminated.
pub fn write_log(events: &[TraceEvent]) -> String {
    events.iter().map(|e| format!("{e}\n")).collect()
}

/// Parses a log written by [`write_log`]. Blank lines are skipped;
/// sequence numbers must increase strictly.
pub fn parse_log(text: &str) -> Result<Vec<TraceEvent>, LogError> {
    let mut out: Vec<TraceEvent> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message| LogError { line: i + 1, message };
        let ev: TraceEvent = line.parse().map_err(err)?;
        if let Some(prev) = out.last() {
            if ev.seq <= prev.seq {
                return Err(err(format!("sequence number {} does not increase", ev.seq)));
            }
        }
        out.push(ev);
    }
    Ok(out)
}
