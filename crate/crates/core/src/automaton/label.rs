use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

/// Reserved name of the silent label.
pub const TAU: &str = "tau";

/// What a label stands for. Declaration order is the tie-break order used
/// whenever labels with the same name are sorted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    CallOut,
    CallIn,
    CreateObject,
    DeleteObject,
    AddBundle,
    RemoveBundle,
    Internal,
    Tau,
}

impl LabelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelKind::CallOut => "call_out",
            LabelKind::CallIn => "call_in",
            LabelKind::CreateObject => "create_object",
            LabelKind::DeleteObject => "delete_object",
            LabelKind::AddBundle => "add_bundle",
            LabelKind::RemoveBundle => "remove_bundle",
            LabelKind::Internal => "internal",
            LabelKind::Tau => "tau",
        }
    }
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An edge label of a behavioral type.
///
/// Identity is `(name, kind)`. The `target` names the intended receiver of an
/// outgoing call; it is metadata used when pairing senders with receivers and
/// takes no part in equality, ordering or hashing.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Label {
    pub name: String,
    pub kind: LabelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

impl Label {
    pub fn new(name: impl Into<String>, kind: LabelKind) -> Self {
        Label {
            name: name.into(),
            kind,
            target: None,
        }
    }

    pub fn call_out(name: impl Into<String>, target: impl Into<String>) -> Self {
        Label {
            name: name.into(),
            kind: LabelKind::CallOut,
            target: Some(target.into()),
        }
    }

    pub fn call_in(name: impl Into<String>) -> Self {
        Label::new(name, LabelKind::CallIn)
    }

    pub fn internal(name: impl Into<String>) -> Self {
        Label::new(name, LabelKind::Internal)
    }

    pub fn tau() -> Self {
        Label::new(TAU, LabelKind::Tau)
    }

    pub fn is_tau(&self) -> bool {
        self.kind == LabelKind::Tau
    }

    /// Whether the label may synchronize with equally named labels of other
    /// components. Internal and silent steps never do.
    pub fn is_observable(&self) -> bool {
        !matches!(self.kind, LabelKind::Internal | LabelKind::Tau)
    }

    /// The same label seen from the other end of a call.
    pub fn mirrored(&self) -> Label {
        let kind = match self.kind {
            LabelKind::CallOut => LabelKind::CallIn,
            LabelKind::CallIn => LabelKind::CallOut,
            other => other,
        };
        Label {
            name: self.name.clone(),
            kind,
            target: None,
        }
    }
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.kind == other.kind
    }
}

impl Eq for Label {}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.name
            .cmp(&other.name)
            .then_with(|| self.kind.cmp(&other.kind))
    }
}

impl Hash for Label {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.name.hash(state);
        self.kind.hash(state);
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}
