use std::collections::BTreeSet;
use std::fmt;

use super::{BehavioralType, LabelKind, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    DuplicateLocation,
    InitialUndeclared,
    EdgeSourceUndeclared,
    EdgeDestinationUndeclared,
    LabelNotInAlphabet,
    EmptyLabelName,
    BadTauName,
    ErrorLocationUndeclared,
    ErrorLocationHasExits,
    InitialIsErrorLocation,
}

/// One broken invariant. `subject` names the offending element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub severity: Severity,
    pub kind: ViolationKind,
    pub subject: String,
    pub message: String,
}

impl Violation {
    fn error(kind: ViolationKind, subject: &str, message: String) -> Self {
        Violation {
            severity: Severity::Error,
            kind,
            subject: subject.to_string(),
            message,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.severity {
            Severity::Error => write!(f, "error: {}", self.message),
            Severity::Warning => write!(f, "warning: {}", self.message),
        }
    }
}

/// Checks every structural invariant of `bt` and reports each breach.
///
/// An automaton is valid when no entry has [`Severity::Error`]. Starting in
/// the error location is legal but reported as a warning.
pub fn validate(bt: &BehavioralType) -> Vec<Violation> {
    use ViolationKind::*;
    let mut out = Vec::new();

    let mut declared = BTreeSet::new();
    for loc in &bt.locations {
        if !declared.insert(loc.as_str()) {
            out.push(Violation::error(
                DuplicateLocation,
                loc,
                format!("location {loc} declared more than once"),
            ));
        }
    }
    if !declared.contains(bt.initial.as_str()) {
        out.push(Violation::error(
            InitialUndeclared,
            &bt.initial,
            format!("initial location {} not in locations", bt.initial),
        ));
    }
    for label in &bt.alphabet {
        if label.kind == LabelKind::Tau {
            if label.name != TAU {
                out.push(Violation::error(
                    BadTauName,
                    &label.name,
                    format!("silent label must be named {TAU}, found {}", label.name),
                ));
            }
        } else if label.name.is_empty() {
            out.push(Violation::error(
                EmptyLabelName,
                "",
                format!("label of kind {} has an empty name", label.kind),
            ));
        }
    }
    for e in &bt.edges {
        if !declared.contains(e.source.as_str()) {
            out.push(Violation::error(
                EdgeSourceUndeclared,
                &e.source,
                format!("edge source {} not in locations", e.source),
            ));
        }
        if !declared.contains(e.destination.as_str()) {
            out.push(Violation::error(
                EdgeDestinationUndeclared,
                &e.destination,
                format!("edge destination {} not in locations", e.destination),
            ));
        }
        if !bt.alphabet.contains(&e.label) {
            out.push(Violation::error(
                LabelNotInAlphabet,
                &e.label.name,
                format!(
                    "edge label {} ({}) not in alphabet",
                    e.label.name, e.label.kind
                ),
            ));
        }
    }
    if let Some(err) = &bt.error_location {
        if !declared.contains(err.as_str()) {
            out.push(Violation::error(
                ErrorLocationUndeclared,
                err,
                format!("error location {err} not in locations"),
            ));
        }
        for e in bt.edges.iter().filter(|e| &e.source == err && &e.destination != err) {
            out.push(Violation::error(
                ErrorLocationHasExits,
                err,
                format!(
                    "error location {err} has outgoing edge {} to {}",
                    e.label.name, e.destination
                ),
            ));
        }
        if err == &bt.initial {
            out.push(Violation {
                severity: Severity::Warning,
                kind: InitialIsErrorLocation,
                subject: err.clone(),
                message: format!("initial location {err} is the error location"),
            });
        }
    }
    out
}
