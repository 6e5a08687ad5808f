use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::log::{EventKind, MethodRef, Subject, TraceEvent};
use super::{Action, ObjectDef, OsgiError, SystemDef, START};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CallStatus {
    Pending,
    Returned,
}

/// A call the owning method is waiting on.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CallEntry {
    pub bundle: String,
    pub object: String,
    pub method: String,
    pub call_id: u64,
    pub status: CallStatus,
}

/// An active invocation: method, current location, call id and call state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActiveMethodState {
    pub method: String,
    pub location: String,
    pub id: u64,
    pub call_state: Vec<CallEntry>,
}

impl ActiveMethodState {
    pub fn is_blocked(&self) -> bool {
        !self.call_state.is_empty()
    }
}

/// Bundle -> object -> active invocations (ordered by call id), plus the
/// call-id counter and the event log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemState {
    pub bundles: BTreeMap<String, BTreeMap<String, Vec<ActiveMethodState>>>,
    pub next_call_id: u64,
    pub log: Vec<TraceEvent>,
}

impl SystemState {
    pub fn active(&self, bundle: &str, object: &str, id: u64) -> Option<&ActiveMethodState> {
        self.bundles.get(bundle)?.get(object)?.iter().find(|a| a.id == id)
    }

    fn active_mut(&mut self, bundle: &str, object: &str, id: u64) -> Option<&mut ActiveMethodState> {
        self.bundles.get_mut(bundle)?.get_mut(object)?.iter_mut().find(|a| a.id == id)
    }

    /// Every active invocation with its bundle and object.
    pub fn invocations(&self) -> impl Iterator<Item = (&str, &str, &ActiveMethodState)> + '_ {
        self.bundles.iter().flat_map(|(b, objs)| {
            objs.iter()
                .flat_map(move |(o, states)| states.iter().map(move |s| (b.as_str(), o.as_str(), s)))
        })
    }

    pub fn is_idle(&self) -> bool {
        self.invocations().next().is_none()
    }

    pub fn log_text(&self) -> String {
        super::write_log(&self.log)
    }

    fn emit(&mut self, kind: EventKind, actor: Option<MethodRef>, subject: Subject) {
        let seq = self.log.len() as u64;
        self.log.push(TraceEvent {
            seq,
            kind,
            actor,
            subject,
        });
    }

    /// Checks that the state's bundles and objects are exactly those of
    /// `def` and that every invocation names a method at a declared location.
    pub fn check_consistent(&self, def: &SystemDef) -> Result<(), OsgiError> {
        let bad = |m: String| Err(OsgiError::InconsistentState(m));
        if self.bundles.len() != def.bundles.len() {
            return bad("installed bundles differ from the definition".into());
        }
        for b in &def.bundles {
            let Some(objs) = self.bundles.get(&b.id) else {
                return bad(format!("no state for bundle {}", b.id));
            };
            if objs.len() != b.objects.len() || b.objects.iter().any(|o| !objs.contains_key(&o.id)) {
                return bad(format!("objects of bundle {} differ from the definition", b.id));
            }
        }
        for (b, o, s) in self.invocations() {
            let Some(m) = def.method(b, o, &s.method) else {
                return bad(format!("{b}/{o} has no method {}", s.method));
            };
            if !m.locations.contains(&s.location) {
                return bad(format!("{b}/{o}.{} is at undeclared location {}", s.method, s.location));
            }
        }
        Ok(())
    }
}

pub(crate) fn method_ref(bundle: &str, object: &str, s: &ActiveMethodState) -> MethodRef {
    MethodRef {
        bundle: bundle.into(),
        object: object.into(),
        method: s.method.clone(),
        call_id: s.id,
    }
}

/// A step of the semantics: execute one edge of an active method, or
/// return from a method that has finished.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    Execute {
        bundle: String,
        object: String,
        call_id: u64,
        /// Index into the method's edge list.
        edge: usize,
    },
    Return {
        bundle: String,
        object: String,
        call_id: u64,
    },
}

impl Step {
    pub fn bundle(&self) -> &str {
        match self {
            Step::Execute { bundle, .. } | Step::Return { bundle, .. } => bundle,
        }
    }

    pub fn object(&self) -> &str {
        match self {
            Step::Execute { object, .. } | Step::Return { object, .. } => object,
        }
    }

    pub fn call_id(&self) -> u64 {
        match self {
            Step::Execute { call_id, .. } | Step::Return { call_id, .. } => *call_id,
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Execute {
                bundle,
                object,
                call_id,
                edge,
            } => write!(f, "execute {bundle}/{object}#{call_id} edge {edge}"),
            Step::Return { bundle, object, call_id } => write!(f, "return {bundle}/{object}#{call_id}"),
        }
    }
}

/// The initial state: `start` of the initial bundle's activator, call id 0.
pub fn init_system(def: &SystemDef) -> Result<SystemState, OsgiError> {
    def.validate()?;
    let mut state = SystemState {
        bundles: BTreeMap::new(),
        next_call_id: 1,
        log: Vec::new(),
    };
    for b in &def.bundles {
        install(&mut state, &b.id, &b.objects);
    }
    let b = def.bundle(&def.init_bundle).expect("validated");
    let start = def.method(&b.id, &b.activator, START).expect("validated");
    let s = ActiveMethodState {
        method: START.into(),
        location: start.initial.clone(),
        id: 0,
        call_state: Vec::new(),
    };
    let r = method_ref(&b.id, &b.activator, &s);
    state.bundles.get_mut(&b.id).unwrap().get_mut(&b.activator).unwrap().push(s);
    state.emit(EventKind::Call, None, Subject::Method(r));
    Ok(state)
}

fn install(state: &mut SystemState, bundle: &str, objects: &[ObjectDef]) {
    state
        .bundles
        .insert(bundle.into(), objects.iter().map(|o| (o.id.clone(), Vec::new())).collect());
}

fn check_callee(def: &SystemDef, bundle: &str, object: &str, method: &str) -> Result<(), OsgiError> {
    match def.method(bundle, object, method) {
        Some(_) => Ok(()),
        None => Err(OsgiError::MissingCallee {
            bundle: bundle.into(),
            object: object.into(),
            method: method.into(),
        }),
    }
}

/// Applies the definition-level part of one action.
fn apply_to_def(def: &mut SystemDef, action: &Action) -> Result<(), OsgiError> {
    match action {
        Action::Call { bundle, object, method } => check_callee(def, bundle, object, method)?,
        Action::AddBundle { bundle } => {
            if def.bundle(bundle).is_some() {
                return Err(OsgiError::DuplicateBundle(bundle.clone()));
            }
            let b = def
                .repository
                .bundles
                .iter()
                .find(|b| &b.id == bundle)
                .ok_or_else(|| OsgiError::UnknownBundleDefinition(bundle.clone()))?
                .clone();
            def.bundles.push(b);
        }
        Action::RemoveBundle { bundle } => {
            let i = def
                .bundles
                .iter()
                .position(|b| &b.id == bundle)
                .ok_or_else(|| OsgiError::MissingBundle(bundle.clone()))?;
            def.bundles.remove(i);
        }
        Action::CreateObject { class, object, bundle } => {
            let methods = def
                .repository
                .classes
                .iter()
                .find(|c| &c.id == class)
                .ok_or_else(|| OsgiError::UnknownClass(class.clone()))?
                .methods
                .clone();
            let b = def.bundle_mut(bundle).ok_or_else(|| OsgiError::MissingBundle(bundle.clone()))?;
            if b.object(object).is_some() {
                return Err(OsgiError::DuplicateObject {
                    bundle: bundle.clone(),
                    object: object.clone(),
                });
            }
            b.objects.push(ObjectDef {
                id: object.clone(),
                methods,
            });
        }
        Action::DeleteObject { object, bundle } => {
            let b = def.bundle_mut(bundle).ok_or_else(|| OsgiError::MissingBundle(bundle.clone()))?;
            let i = b
                .objects
                .iter()
                .position(|o| &o.id == object)
                .filter(|_| &b.activator != object)
                .ok_or_else(|| OsgiError::MissingObject {
                    bundle: bundle.clone(),
                    object: object.clone(),
                })?;
            b.objects.remove(i);
        }
    }
    Ok(())
}

/// Whether an action list can run against `def`, taking earlier actions'
/// structural effects into account.
fn feasible(def: &SystemDef, actions: &[Action]) -> Result<(), OsgiError> {
    if actions.iter().all(|a| matches!(a, Action::Call { .. })) {
        return actions.iter().try_for_each(|a| match a {
            Action::Call { bundle, object, method } => check_callee(def, bundle, object, method),
            _ => unreachable!(),
        });
    }
    let mut scratch = def.clone();
    actions.iter().try_for_each(|a| apply_to_def(&mut scratch, a))
}

/// Steps enabled in `state`. A method with a nonempty call state is blocked.
/// A free method executes any edge at its location whose actions can run
/// (call targets exist, structural operations apply), and returns when its
/// location has no edges.
pub fn enabled_steps(def: &SystemDef, state: &SystemState) -> Result<Vec<Step>, OsgiError> {
    state.check_consistent(def)?;
    let mut out = Vec::new();
    for (b, o, s) in state.invocations() {
        if s.is_blocked() {
            continue;
        }
        let m = def.method(b, o, &s.method).expect("consistent");
        let mut any = false;
        for (i, e) in m.edges_from(&s.location) {
            any = true;
            if feasible(def, &e.actions).is_ok() {
                out.push(Step::Execute {
                    bundle: b.into(),
                    object: o.into(),
                    call_id: s.id,
                    edge: i,
                });
            }
        }
        if !any {
            out.push(Step::Return {
                bundle: b.into(),
                object: o.into(),
                call_id: s.id,
            });
        }
    }
    Ok(out)
}

/// Applies `step` and returns the resulting definition and state.
pub fn apply_step(def: &SystemDef, state: &SystemState, step: &Step) -> Result<(SystemDef, SystemState), OsgiError> {
    let mut def = def.clone();
    let mut state = state.clone();
    apply_step_mut(&mut def, &mut state, step)?;
    Ok((def, state))
}

/// In-place [`apply_step`]. On error nothing has been modified.
pub(crate) fn apply_step_mut(def: &mut SystemDef, state: &mut SystemState, step: &Step) -> Result<(), OsgiError> {
    let disabled = || OsgiError::StepDisabled(step.to_string());
    let (b, o, id) = (step.bundle(), step.object(), step.call_id());
    let s = state.active(b, o, id).ok_or_else(disabled)?;
    if s.is_blocked() {
        return Err(disabled());
    }
    let m = def.method(b, o, &s.method).ok_or_else(disabled)?;
    let actor = method_ref(b, o, s);
    match step {
        Step::Execute { edge, .. } => {
            let e = m.edges.get(*edge).filter(|e| e.from == s.location).ok_or_else(disabled)?.clone();
            feasible(def, &e.actions)?;
            state.active_mut(b, o, id).unwrap().location = e.to.clone();
            state.emit(
                EventKind::Step,
                Some(actor.clone()),
                Subject::Transition {
                    from: e.from.clone(),
                    to: e.to.clone(),
                },
            );
            for a in &e.actions {
                apply_to_def(def, a).expect("checked by feasible");
                perform(def, state, &actor, a);
            }
        }
        Step::Return { .. } => {
            if m.edges_from(&s.location).next().is_some() {
                return Err(disabled());
            }
            state.bundles.get_mut(b).unwrap().get_mut(o).unwrap().retain(|x| x.id != id);
            for objs in state.bundles.values_mut() {
                for states in objs.values_mut() {
                    for s in states.iter_mut() {
                        for c in &mut s.call_state {
                            if c.call_id == id && c.bundle == b && c.object == o {
                                c.status = CallStatus::Returned;
                            }
                        }
                    }
                }
            }
            state.emit(EventKind::Return, Some(actor), Subject::None);
        }
    }
    clear_finished(state);
    Ok(())
}

/// State-level effect of one action, after the definition has changed.
fn perform(def: &SystemDef, state: &mut SystemState, actor: &MethodRef, action: &Action) {
    match action {
        Action::Call { bundle, object, method } => {
            let id = state.next_call_id;
            state.next_call_id += 1;
            let initial = def.method(bundle, object, method).expect("checked").initial.clone();
            state.bundles.get_mut(bundle).unwrap().get_mut(object).unwrap().push(ActiveMethodState {
                method: method.clone(),
                location: initial,
                id,
                call_state: Vec::new(),
            });
            if let Some(caller) = state.active_mut(&actor.bundle, &actor.object, actor.call_id) {
                caller.call_state.push(CallEntry {
                    bundle: bundle.clone(),
                    object: object.clone(),
                    method: method.clone(),
                    call_id: id,
                    status: CallStatus::Pending,
                });
            }
            let callee = MethodRef {
                bundle: bundle.clone(),
                object: object.clone(),
                method: method.clone(),
                call_id: id,
            };
            state.emit(EventKind::Call, Some(actor.clone()), Subject::Method(callee));
        }
        Action::AddBundle { bundle } => {
            install(state, bundle, &def.bundle(bundle).expect("just added").objects);
            state.emit(EventKind::AddBundle, Some(actor.clone()), Subject::Bundle(bundle.clone()));
        }
        Action::RemoveBundle { bundle } => {
            state.bundles.remove(bundle);
            state.emit(EventKind::RemoveBundle, Some(actor.clone()), Subject::Bundle(bundle.clone()));
            abandon(state, |b, _| b == bundle);
        }
        Action::CreateObject { object, bundle, .. } => {
            state.bundles.get_mut(bundle).unwrap().insert(object.clone(), Vec::new());
            state.emit(
                EventKind::CreateObject,
                Some(actor.clone()),
                Subject::Object {
                    bundle: bundle.clone(),
                    object: object.clone(),
                },
            );
        }
        Action::DeleteObject { object, bundle } => {
            state.bundles.get_mut(bundle).unwrap().remove(object);
            state.emit(
                EventKind::DeleteObject,
                Some(actor.clone()),
                Subject::Object {
                    bundle: bundle.clone(),
                    object: object.clone(),
                },
            );
            abandon(state, |b, o| b == bundle && o == object);
        }
    }
}

/// Marks pending calls into removed units as returned, logging each.
fn abandon(state: &mut SystemState, removed: impl Fn(&str, &str) -> bool) {
    let mut events = Vec::new();
    for (b, objs) in state.bundles.iter_mut() {
        for (o, states) in objs.iter_mut() {
            for s in states.iter_mut() {
                let caller = method_ref(b, o, s);
                for c in &mut s.call_state {
                    if c.status == CallStatus::Pending && removed(&c.bundle, &c.object) {
                        c.status = CallStatus::Returned;
                        let callee = MethodRef {
                            bundle: c.bundle.clone(),
                            object: c.object.clone(),
                            method: c.method.clone(),
                            call_id: c.call_id,
                        };
                        events.push((caller.clone(), callee));
                    }
                }
            }
        }
    }
    for (caller, callee) in events {
        state.emit(EventKind::Abandon, Some(caller), Subject::Method(callee));
    }
}

fn clear_finished(state: &mut SystemState) {
    for objs in state.bundles.values_mut() {
        for states in objs.values_mut() {
            for s in states.iter_mut() {
                if s.call_state.iter().all(|c| c.status == CallStatus::Returned) {
                    s.call_state.clear();
                }
            }
        }
    }
}
