//! Interpreter for a method-call semantics of OSGi-style systems.
//!
//! A system definition is a set of bundles, each a set of objects whose
//! methods are automata. Edges carry action lists: calls to other methods
//! and structure-changing operations (adding and removing bundles, creating
//! and deleting objects). A system state records, per object, the active
//! method invocations with their current location, call id and the calls
//! they are waiting on. Calls block: a method with pending calls cannot
//! move until every callee has returned.
//!
//! Bundles added at runtime and classes instantiated by `create_object`
//! come from the definition's repository. Removing a bundle does not run its
//! `stop` method; an edge that wants that behavior calls `stop` explicitly
//! before removing.

mod log;
mod monitor;
mod run;
mod state;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use log::{parse_log, write_log, EventKind, LogError, MethodRef, Subject, TraceEvent};
pub use monitor::{monitor, MonitorVerdict};
pub use run::{explore_exhaustive, run, run_random, run_script, ExhaustiveSummary, RunOutcome, RunResult, Strategy};
pub use state::{apply_step, enabled_steps, init_system, ActiveMethodState, CallEntry, CallStatus, Step, SystemState};

/// Name of the activator method run when the initial bundle starts.
pub const START: &str = "start";
/// Name of the activator method meant for deactivation.
pub const STOP: &str = "stop";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OsgiError {
    #[error("invalid system definition: {0}")]
    InvalidSystemDef(String),
    #[error("inconsistent state: {0}")]
    InconsistentState(String),
    #[error("call target {bundle}/{object}.{method} does not exist")]
    MissingCallee { bundle: String, object: String, method: String },
    #[error("bundle {0} is already installed")]
    DuplicateBundle(String),
    #[error("bundle {0} is not installed")]
    MissingBundle(String),
    #[error("the repository has no bundle {0}")]
    UnknownBundleDefinition(String),
    #[error("object {object} does not exist in bundle {bundle}")]
    MissingObject { bundle: String, object: String },
    #[error("object {object} already exists in bundle {bundle}")]
    DuplicateObject { bundle: String, object: String },
    #[error("the repository has no class {0}")]
    UnknownClass(String),
    #[error("step {0} is not enabled")]
    StepDisabled(String),
    #[error("script step {index} ({step}) is not enabled")]
    ScriptStepDisabled { index: usize, step: String },
}

/// One entry of an edge's action list.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Action {
    Call { bundle: String, object: String, method: String },
    AddBundle { bundle: String },
    RemoveBundle { bundle: String },
    /// Instantiates repository class `class` as object `object` of `bundle`.
    CreateObject { class: String, object: String, bundle: String },
    DeleteObject { object: String, bundle: String },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodEdge {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodDef {
    pub name: String,
    pub locations: Vec<String>,
    pub initial: String,
    #[serde(default)]
    pub edges: Vec<MethodEdge>,
}

impl MethodDef {
    pub fn new(name: impl Into<String>, initial: impl Into<String>) -> Self {
        let initial = initial.into();
        MethodDef {
            name: name.into(),
            locations: vec![initial.clone()],
            initial,
            edges: Vec::new(),
        }
    }

    /// Adds an edge, declaring its locations as needed.
    pub fn with_edge(mut self, from: &str, to: &str, actions: Vec<Action>) -> Self {
        for l in [from, to] {
            if !self.locations.iter().any(|x| x == l) {
                self.locations.push(l.to_string());
            }
        }
        self.edges.push(MethodEdge {
            from: from.to_string(),
            to: to.to_string(),
            actions,
        });
        self
    }

    /// Indices of the edges leaving `location`.
    pub fn edges_from<'a>(&'a self, location: &'a str) -> impl Iterator<Item = (usize, &'a MethodEdge)> + 'a {
        self.edges.iter().enumerate().filter(move |(_, e)| e.from == location)
    }
}

/// An object: its methods, the first being the constructor.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectDef {
    pub id: String,
    pub methods: Vec<MethodDef>,
}

impl ObjectDef {
    pub fn method(&self, name: &str) -> Option<&MethodDef> {
        self.methods.iter().find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleDef {
    pub id: String,
    /// Id of the activator object, which must define `start` and `stop`.
    pub activator: String,
    pub objects: Vec<ObjectDef>,
}

impl BundleDef {
    pub fn object(&self, id: &str) -> Option<&ObjectDef> {
        self.objects.iter().find(|o| o.id == id)
    }
}

/// Definitions available for installation at runtime.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Repository {
    #[serde(default)]
    pub bundles: Vec<BundleDef>,
    #[serde(default)]
    pub classes: Vec<ObjectDef>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDef {
    pub init_bundle: String,
    pub bundles: Vec<BundleDef>,
    #[serde(default)]
    pub repository: Repository,
}

impl SystemDef {
    pub fn bundle(&self, id: &str) -> Option<&BundleDef> {
        self.bundles.iter().find(|b| b.id == id)
    }

    pub(crate) fn bundle_mut(&mut self, id: &str) -> Option<&mut BundleDef> {
        self.bundles.iter_mut().find(|b| b.id == id)
    }

    pub fn object(&self, bundle: &str, object: &str) -> Option<&ObjectDef> {
        self.bundle(bundle)?.object(object)
    }

    pub fn method(&self, bundle: &str, object: &str, method: &str) -> Option<&MethodDef> {
        self.object(bundle, object)?.method(method)
    }

    /// Checks identifiers, uniqueness, activators and method automata of the
    /// installed bundles and of the repository.
    pub fn validate(&self) -> Result<(), OsgiError> {
        let bad = |msg: String| Err(OsgiError::InvalidSystemDef(msg));
        check_ids(self.bundles.iter().map(|b| b.id.as_str()), "bundle")?;
        check_ids(self.repository.bundles.iter().map(|b| b.id.as_str()), "repository bundle")?;
        check_ids(self.repository.classes.iter().map(|c| c.id.as_str()), "class")?;
        if self.bundle(&self.init_bundle).is_none() {
            return bad(format!("initial bundle {} is not installed", self.init_bundle));
        }
        for b in self.bundles.iter().chain(&self.repository.bundles) {
            check_ids(b.objects.iter().map(|o| o.id.as_str()), &format!("object in bundle {}", b.id))?;
            let Some(act) = b.object(&b.activator) else {
                return bad(format!("bundle {} has no activator object {}", b.id, b.activator));
            };
            for m in [START, STOP] {
                if act.method(m).is_none() {
                    return bad(format!("activator {}/{} lacks method {m}", b.id, act.id));
                }
            }
            for o in &b.objects {
                check_object(o, &format!("{}/{}", b.id, o.id))?;
            }
        }
        for c in &self.repository.classes {
            check_object(c, &format!("class {}", c.id))?;
        }
        Ok(())
    }
}

pub(crate) fn valid_identifier(s: &str) -> bool {
    !s.is_empty() && s != "-" && !s.chars().any(|c| c.is_whitespace() || matches!(c, '/' | '.' | '#' | '>'))
}

fn check_ids<'a>(ids: impl Iterator<Item = &'a str>, what: &str) -> Result<(), OsgiError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !valid_identifier(id) {
            return Err(OsgiError::InvalidSystemDef(format!("{what} id {id:?} is not a valid identifier")));
        }
        if !seen.insert(id) {
            return Err(OsgiError::InvalidSystemDef(format!("duplicate {what} id {id}")));
        }
    }
    Ok(())
}

fn check_object(o: &ObjectDef, path: &str) -> Result<(), OsgiError> {
    let bad = |msg: String| Err(OsgiError::InvalidSystemDef(msg));
    if o.methods.is_empty() {
        return bad(format!("{path} has no methods"));
    }
    check_ids(o.methods.iter().map(|m| m.name.as_str()), &format!("method of {path}"))?;
    for m in &o.methods {
        check_ids(m.locations.iter().map(String::as_str), &format!("location of {path}.{}", m.name))?;
        let declared = |l: &str| m.locations.iter().any(|x| x == l);
        if !declared(&m.initial) {
            return bad(format!("{path}.{}: initial location {} is not declared", m.name, m.initial));
        }
        for e in &m.edges {
            for l in [&e.from, &e.to] {
                if !declared(l) {
                    return bad(format!("{path}.{}: edge uses undeclared location {l}", m.name));
                }
            }
            for a in &e.actions {
                let ids: Vec<&str> = match a {
                    Action::Call { bundle, object, method } => vec![bundle, object, method],
                    Action::AddBundle { bundle } | Action::RemoveBundle { bundle } => vec![bundle],
                    Action::CreateObject { class, object, bundle } => vec![class, object, bundle],
                    Action::DeleteObject { object, bundle } => vec![object, bundle],
                };
                if let Some(id) = ids.into_iter().find(|id| !valid_identifier(id)) {
                    return bad(format!("{path}.{}: action names invalid identifier {id:?}", m.name));
                }
            }
        }
    }
    Ok(())
}
