//! In-process service registry. Services register under interface names
//! with a property dictionary; the `BEHAVIOR` property carries behavioral
//! types describing how the service interacts. Clients discover peers whose
//! behavior composes cleanly with theirs and resolve protocol choices
//! against a chosen peer.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::RwLock;

use thiserror::Error;

use crate::automaton::{complementary_aspect, validate, BehavioralType, Label, LabelKind, Severity};
use crate::composition::{analyze, AnalysisVerdict, ComponentSystem, CompositionError};
use crate::synthesis::{synthesize, SynthesisError, SynthesisStatus, DEFAULT_MAX_RULES};

/// Property key holding a service's behavioral models.
pub const BEHAVIOR: &str = "BEHAVIOR";

/// Component names used when composing a pair.
pub const OWN: &str = "own";
pub const PEER: &str = "peer";

pub type ServiceId = u64;

#[derive(Debug, Clone, PartialEq)]
pub enum PropertyValue {
    Str(String),
    Num(f64),
    Behavior(Vec<BehavioralType>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceRecord {
    pub service_id: ServiceId,
    pub interfaces: Vec<String>,
    pub properties: BTreeMap<String, PropertyValue>,
    /// Id of the registering bundle.
    pub owner: String,
}

impl ServiceRecord {
    pub fn behaviors(&self) -> &[BehavioralType] {
        match self.properties.get(BEHAVIOR) {
            Some(PropertyValue::Behavior(models)) => models,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("behavior model {index} is invalid: {reason}")]
    InvalidBehaviorModel { index: usize, reason: String },
    #[error("property {BEHAVIOR} must hold a list of behavioral types")]
    BehaviorNotModels,
    #[error("no service with id {0}")]
    UnknownService(ServiceId),
    #[error("no priority assignment makes the pair compatible")]
    NoCompatibleChoice,
    #[error(transparent)]
    Composition(#[from] CompositionError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
}

/// A candidate found by [`Registry::discover_compatible`].
#[derive(Debug, Clone, PartialEq)]
pub struct Discovery {
    pub record: ServiceRecord,
    /// Index of the matching model within the record's `BEHAVIOR` list.
    pub model: usize,
    pub verdict: AnalysisVerdict,
}

#[derive(Default)]
struct Inner {
    next_id: ServiceId,
    records: BTreeMap<ServiceId, ServiceRecord>,
}

/// Thread-safe registry; every operation is atomic.
#[derive(Default)]
pub struct Registry {
    inner: RwLock<Inner>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(
        &self,
        owner: impl Into<String>,
        interfaces: Vec<String>,
        properties: BTreeMap<String, PropertyValue>,
    ) -> Result<ServiceId, RegistryError> {
        match properties.get(BEHAVIOR) {
            None | Some(PropertyValue::Behavior(_)) => {}
            Some(_) => return Err(RegistryError::BehaviorNotModels),
        }
        let record = ServiceRecord {
            service_id: 0,
            interfaces,
            properties,
            owner: owner.into(),
        };
        for (index, bt) in record.behaviors().iter().enumerate() {
            if let Some(v) = validate(bt).into_iter().find(|v| v.severity == Severity::Error) {
                return Err(RegistryError::InvalidBehaviorModel {
                    index,
                    reason: v.message,
                });
            }
        }
        let mut inner = self.inner.write().expect("registry lock poisoned");
        let id = inner.next_id;
        inner.next_id += 1;
        inner.records.insert(id, ServiceRecord { service_id: id, ..record });
        Ok(id)
    }

    pub fn unregister(&self, id: ServiceId) -> Result<(), RegistryError> {
        let mut inner = self.inner.write().expect("registry lock poisoned");
        inner.records.remove(&id).map(|_| ()).ok_or(RegistryError::UnknownService(id))
    }

    pub fn get(&self, id: ServiceId) -> Option<ServiceRecord> {
        self.inner.read().expect("registry lock poisoned").records.get(&id).cloned()
    }

    /// Records offering `interface` (if given) and holding a model with
    /// aspect `aspect` (if given), by service id.
    pub fn query(&self, interface: Option<&str>, aspect: Option<&str>) -> Vec<ServiceRecord> {
        let inner = self.inner.read().expect("registry lock poisoned");
        inner
            .records
            .values()
            .filter(|r| interface.is_none_or(|i| r.interfaces.iter().any(|x| x == i)))
            .filter(|r| aspect.is_none_or(|a| r.behaviors().iter().any(|b| b.aspect == a)))
            .cloned()
            .collect()
    }

    /// Composes `required` with every registered model of complementary
    /// aspect and ranks the results: clean verdicts first, then by witness
    /// count, then by service id and model index. Models that cannot be
    /// composed with `required` are skipped.
    pub fn discover_compatible(&self, required: &BehavioralType) -> Vec<Discovery> {
        let Some(aspect) = complementary_aspect(&required.aspect) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for record in self.query(None, Some(aspect)) {
            for (model, bt) in record.behaviors().iter().enumerate() {
                if bt.aspect != aspect {
                    continue;
                }
                let Ok(verdict) = pair(required, bt).and_then(|s| analyze(&s)) else {
                    continue;
                };
                out.push(Discovery {
                    record: record.clone(),
                    model,
                    verdict,
                });
            }
        }
        out.sort_by_key(|d| (!d.verdict.is_clean(), d.verdict.witness_count(), d.record.service_id, d.model));
        out
    }
}

/// Points every outgoing call label of `bt` at `target`.
pub fn retarget(bt: &BehavioralType, target: &str) -> BehavioralType {
    let fix = |l: &Label| {
        let mut l = l.clone();
        if l.kind == LabelKind::CallOut {
            l.target = Some(target.to_string());
        }
        l
    };
    let mut out = bt.clone();
    out.alphabet = bt.alphabet.iter().map(fix).collect();
    out.edges = bt.edges.iter().map(|e| crate::automaton::Edge { label: fix(&e.label), ..e.clone() }).collect();
    out
}

/// The two-component system `own` ‖ `peer`, calls retargeted at each other.
pub fn pair(own: &BehavioralType, peer: &BehavioralType) -> Result<ComponentSystem, CompositionError> {
    ComponentSystem::new([(OWN, retarget(own, PEER)), (PEER, retarget(peer, OWN))])
}

/// Decides which branch `own` should take at its initial location when
/// talking to `peer`: synthesizes priorities for the pair and returns the
/// labels of `own`'s initial choice that no rule suppresses, as `own`
/// declares them. Returns an empty list when the pair needs no restriction
/// there.
pub fn adapt_protocol(own: &BehavioralType, peer: &BehavioralType) -> Result<Vec<Label>, RegistryError> {
    let system = pair(own, peer)?;
    let result = synthesize(&system, DEFAULT_MAX_RULES)?;
    if result.status != SynthesisStatus::Solved {
        return Err(RegistryError::NoCompatibleChoice);
    }
    let offered: BTreeSet<Label> = own.outgoing(&own.initial).map(|e| e.label.clone()).collect();
    let suppressed: BTreeSet<&Label> = result
        .rules
        .iter()
        .filter(|r| r.component == OWN && offered.contains(&r.higher))
        .map(|r| &r.lower)
        .collect();
    if offered.len() < 2 || suppressed.is_empty() {
        return Ok(Vec::new());
    }
    Ok(offered.iter().filter(|l| !suppressed.contains(l)).cloned().collect())
}
