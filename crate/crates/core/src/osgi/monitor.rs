use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::log::{EventKind, TraceEvent};
use crate::automaton::{complete, BehavioralType, Label, LabelKind, INCOMING_CALLS};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MonitorVerdict {
    /// `events` is the number of log events the type observed.
    Conformant { events: usize },
    Violation { seq: u64, label: String },
}

impl MonitorVerdict {
    pub fn is_conformant(&self) -> bool {
        matches!(self, MonitorVerdict::Conformant { .. })
    }
}

/// Checks the calls of one object in `log` against `bt`.
///
/// A type with the incoming aspect observes calls made to the object; any
/// other type observes calls the object makes. Calls whose method name is
/// not a call label of `bt` in that direction are ignored. The first
/// observed call that drives every run of `bt` into its error location is
/// reported.
pub fn monitor(log: &[TraceEvent], subject: (&str, &str), bt: &BehavioralType) -> MonitorVerdict {
    let (bundle, object) = subject;
    let incoming = bt.aspect == INCOMING_CALLS;
    let kind = if incoming { LabelKind::CallIn } else { LabelKind::CallOut };
    let completed = complete(bt, &bt.alphabet).expect("alphabet covers itself");
    let error = completed.error_location.clone();
    let mut current: BTreeSet<&str> = BTreeSet::from([completed.initial.as_str()]);
    let mut observed = 0;
    for ev in log.iter().filter(|e| e.kind == EventKind::Call) {
        let Some(callee) = ev.callee() else { continue };
        let party = if incoming {
            Some((callee.bundle.as_str(), callee.object.as_str()))
        } else {
            ev.actor.as_ref().map(|a| (a.bundle.as_str(), a.object.as_str()))
        };
        if party != Some((bundle, object)) {
            continue;
        }
        let label = Label::new(callee.method.clone(), kind);
        if !completed.alphabet.contains(&label) {
            continue;
        }
        observed += 1;
        current = completed
            .edges
            .iter()
            .filter(|e| e.label == label && current.contains(e.source.as_str()))
            .map(|e| e.destination.as_str())
            .collect();
        if current.iter().all(|l| Some(*l) == error.as_deref()) {
            return MonitorVerdict::Violation {
                seq: ev.seq,
                label: callee.method.clone(),
            };
        }
    }
    MonitorVerdict::Conformant { events: observed }
}
