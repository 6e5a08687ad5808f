//! Behavioral types: finite automata over method-call labels, and the
//! comparison pipeline built on them (projection, completion, minimization,
//! normalization, equality and refinement).
//!
//! Automata here have no accepting states of their own. Wherever a language
//! is needed, every location except the designated error location accepts.

mod complete;
mod equality;
mod label;
mod minimize;
mod normalize;
mod project;
mod validate;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

pub use complete::complete;
pub use equality::{equals, refines, Difference, DifferenceReason, EqualityResult};
pub use label::{Label, LabelKind, TAU};
pub use minimize::minimize;
pub use normalize::normalize;
pub(crate) use normalize::normalize_with_renaming;
pub use project::{project, ProjectionMode};
pub use validate::{validate, Severity, Violation, ViolationKind};

/// Aspect of a type describing the calls a component makes.
pub const OUTGOING_CALLS: &str = "calls:outgoing";
/// Aspect of a type describing the calls a component accepts.
pub const INCOMING_CALLS: &str = "calls:incoming";

/// The aspect that pairs with `aspect` during discovery and comparison, if any.
pub fn complementary_aspect(aspect: &str) -> Option<&'static str> {
    match aspect {
        OUTGOING_CALLS => Some(INCOMING_CALLS),
        INCOMING_CALLS => Some(OUTGOING_CALLS),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub source: String,
    pub label: Label,
    pub destination: String,
}

impl Edge {
    pub fn new(source: impl Into<String>, label: Label, destination: impl Into<String>) -> Self {
        Edge {
            source: source.into(),
            label,
            destination: destination.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomatonError {
    #[error("labels {0:?} are not in the alphabet")]
    KeepNotSubset(Vec<String>),
    #[error("alphabet is missing labels {0:?}")]
    AlphabetTooSmall(Vec<String>),
    #[error("considered labels {0:?} occur in neither alphabet")]
    ConsideredNotInAlphabets(Vec<String>),
    #[error("location {location} has several outgoing edges labeled {label}")]
    NotDeterministic { location: String, label: String },
    #[error("location {location} has no outgoing edge labeled {label}")]
    NotComplete { location: String, label: String },
}

/// A behavioral type `(alphabet, locations, initial, edges)` plus an aspect
/// descriptor and an optional error location.
///
/// The alphabet may declare labels that no edge uses; completion relies on
/// them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BehavioralType {
    pub aspect: String,
    pub alphabet: BTreeSet<Label>,
    pub locations: Vec<String>,
    pub initial: String,
    pub edges: BTreeSet<Edge>,
    pub error_location: Option<String>,
}

impl BehavioralType {
    /// A single-location automaton with an empty alphabet.
    pub fn new(aspect: impl Into<String>, initial: impl Into<String>) -> Self {
        let initial = initial.into();
        BehavioralType {
            aspect: aspect.into(),
            alphabet: BTreeSet::new(),
            locations: vec![initial.clone()],
            initial,
            edges: BTreeSet::new(),
            error_location: None,
        }
    }

    pub fn with_location(mut self, location: impl Into<String>) -> Self {
        self.add_location(location);
        self
    }

    /// Adds the edge, declaring its label and endpoints as needed.
    pub fn with_edge(
        mut self,
        source: impl Into<String>,
        label: Label,
        destination: impl Into<String>,
    ) -> Self {
        self.add_edge(source, label, destination);
        self
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.alphabet.insert(label);
        self
    }

    pub fn add_location(&mut self, location: impl Into<String>) {
        let location = location.into();
        if !self.locations.contains(&location) {
            self.locations.push(location);
        }
    }

    pub fn add_edge(
        &mut self,
        source: impl Into<String>,
        label: Label,
        destination: impl Into<String>,
    ) {
        let source = source.into();
        let destination = destination.into();
        self.add_location(source.clone());
        self.add_location(destination.clone());
        if !self.alphabet.contains(&label) {
            self.alphabet.insert(label.clone());
        }
        self.edges.insert(Edge {
            source,
            label,
            destination,
        });
    }

    /// Outgoing edges of `location`, in label then destination order.
    pub fn outgoing<'a>(&'a self, location: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.source == location)
    }

    pub fn outgoing_map(&self) -> BTreeMap<&str, Vec<&Edge>> {
        let mut map: BTreeMap<&str, Vec<&Edge>> = BTreeMap::new();
        for e in &self.edges {
            map.entry(e.source.as_str()).or_default().push(e);
        }
        map
    }

    pub fn has_location(&self, location: &str) -> bool {
        self.locations.iter().any(|l| l == location)
    }

    /// Names of all alphabet labels, regardless of kind.
    pub fn label_names(&self) -> BTreeSet<&str> {
        self.alphabet.iter().map(|l| l.name.as_str()).collect()
    }

    /// Locations reachable from the initial location, in breadth-first order.
    pub fn reachable_locations(&self) -> Vec<String> {
        let out = self.outgoing_map();
        let mut seen = BTreeSet::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        seen.insert(self.initial.as_str());
        queue.push_back(self.initial.as_str());
        while let Some(loc) = queue.pop_front() {
            order.push(loc.to_string());
            for e in out.get(loc).into_iter().flatten() {
                if seen.insert(e.destination.as_str()) {
                    queue.push_back(e.destination.as_str());
                }
            }
        }
        order
    }

    /// Drops locations (and their edges) not reachable from the initial one.
    pub fn restrict_to_reachable(&self) -> BehavioralType {
        let reachable: BTreeSet<String> = self.reachable_locations().into_iter().collect();
        let mut out = self.clone();
        out.locations.retain(|l| reachable.contains(l));
        out.edges.retain(|e| reachable.contains(&e.source));
        if let Some(err) = &out.error_location {
            if !reachable.contains(err) {
                out.error_location = None;
            }
        }
        out
    }

    /// First location with two outgoing edges sharing a label, if any.
    pub fn nondeterminism(&self) -> Option<(String, Label)> {
        let mut prev: Option<&Edge> = None;
        for e in &self.edges {
            if let Some(p) = prev {
                if p.source == e.source && p.label == e.label {
                    return Some((e.source.clone(), e.label.clone()));
                }
            }
            prev = Some(e);
        }
        None
    }

    pub fn is_deterministic(&self) -> bool {
        self.nondeterminism().is_none()
    }

    /// First declared location lacking an edge for some alphabet label.
    pub fn incompleteness(&self) -> Option<(String, Label)> {
        let out = self.outgoing_map();
        for loc in &self.locations {
            let present: BTreeSet<&Label> = out
                .get(loc.as_str())
                .into_iter()
                .flatten()
                .map(|e| &e.label)
                .collect();
            if let Some(missing) = self.alphabet.iter().find(|l| !present.contains(l)) {
                return Some((loc.clone(), missing.clone()));
            }
        }
        None
    }

    pub fn is_complete(&self) -> bool {
        self.incompleteness().is_none()
    }

    pub fn is_error(&self, location: &str) -> bool {
        self.error_location.as_deref() == Some(location)
    }

    /// Flips call directions and the aspect, giving the type as seen by the
    /// peer.
    pub fn mirrored(&self) -> BehavioralType {
        BehavioralType {
            aspect: complementary_aspect(&self.aspect)
                .map(str::to_string)
                .unwrap_or_else(|| self.aspect.clone()),
            alphabet: self.alphabet.iter().map(Label::mirrored).collect(),
            locations: self.locations.clone(),
            initial: self.initial.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge::new(e.source.clone(), e.label.mirrored(), e.destination.clone()))
                .collect(),
            error_location: self.error_location.clone(),
        }
    }

    /// Applies `rename` to every location id; ids missing from the map keep
    /// their name.
    pub(crate) fn rename_locations(&self, rename: &BTreeMap<String, String>) -> BehavioralType {
        let r = |l: &String| rename.get(l).cloned().unwrap_or_else(|| l.clone());
        BehavioralType {
            aspect: self.aspect.clone(),
            alphabet: self.alphabet.clone(),
            locations: self.locations.iter().map(r).collect(),
            initial: r(&self.initial),
            edges: self
                .edges
                .iter()
                .map(|e| Edge::new(r(&e.source), e.label.clone(), r(&e.destination)))
                .collect(),
            error_location: self.error_location.as_ref().map(r),
        }
    }
}

/// Caller and callee fixtures shared by unit tests across the crate.
#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    pub fn caller() -> BehavioralType {
        BehavioralType::new(OUTGOING_CALLS, "l0")
            .with_edge("l0", Label::call_out("newPrtcl", "B"), "l1")
            .with_edge("l0", Label::call_out("oldPrtcl", "B"), "l2")
    }

    pub fn callee() -> BehavioralType {
        BehavioralType::new(INCOMING_CALLS, "l0")
            .with_edge("l0", Label::call_in("newPrtcl"), "l1")
            .with_label(Label::call_in("oldPrtcl"))
    }
}
