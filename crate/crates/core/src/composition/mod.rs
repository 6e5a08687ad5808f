//! Synchronized composition of behavioral types.
//!
//! Components move on their own for labels nobody else declares. A label
//! name declared by several components is shared: it fires only when every
//! declaring component takes an edge with that name at the same time.
//! Internal and silent labels are never shared.

mod compiled;
mod explore;
mod verdict;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{validate, BehavioralType, Label, Severity};

pub(crate) use compiled::Compiled;
pub use explore::{reachable, StateSpace, DEFAULT_STATE_BOUND};
pub use verdict::{
    analyze, analyze_bounded, check_compatibility, detect_deadlocks, replay, AnalysisVerdict,
    Incompatibility, StateTrace, TraceMove, TraceStep,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompositionError {
    #[error("component {0} declared twice")]
    DuplicateComponent(String),
    #[error("component {name} is invalid: {reason}")]
    InvalidComponent { name: String, reason: String },
    #[error("state has {found} entries, system has {expected} components")]
    StateArityMismatch { expected: usize, found: usize },
    #[error("component {component} has no location {location}")]
    UnknownLocation { component: String, location: String },
    #[error("{sender} calls {label} on {target}, which is not in the system")]
    UnknownTarget {
        sender: String,
        label: String,
        target: String,
    },
    #[error("no component named {0}")]
    UnknownComponent(String),
    #[error("component {component} has no label {label}")]
    UnknownLabel { component: String, label: String },
    #[error("trace step {0} is not enabled")]
    ReplayFailed(usize),
    #[error("priority rule on {component} relates {label} to itself")]
    ReflexiveRule { component: String, label: String },
}

/// Within one component: when an edge labeled `higher` can fire, edges
/// labeled `lower` are suppressed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PriorityRule {
    pub component: String,
    pub lower: Label,
    pub higher: Label,
}

impl PriorityRule {
    pub fn new(component: impl Into<String>, lower: Label, higher: Label) -> Self {
        PriorityRule {
            component: component.into(),
            lower,
            higher,
        }
    }
}

impl fmt::Display for PriorityRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} < {}", self.component, self.lower.name, self.higher.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub name: String,
    pub behavior: BehavioralType,
}

/// Named components composed in declaration order, plus any priority rules
/// restricting their choices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentSystem {
    components: Vec<Component>,
    priorities: Vec<PriorityRule>,
}

impl ComponentSystem {
    pub fn new<N: Into<String>>(
        components: impl IntoIterator<Item = (N, BehavioralType)>,
    ) -> Result<Self, CompositionError> {
        let mut out: Vec<Component> = Vec::new();
        for (name, behavior) in components {
            let name = name.into();
            if out.iter().any(|c| c.name == name) {
                return Err(CompositionError::DuplicateComponent(name));
            }
            if let Some(v) = validate(&behavior).into_iter().find(|v| v.severity == Severity::Error) {
                return Err(CompositionError::InvalidComponent {
                    name,
                    reason: v.message,
                });
            }
            out.push(Component { name, behavior });
        }
        Ok(ComponentSystem {
            components: out,
            priorities: Vec::new(),
        })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn priorities(&self) -> &[PriorityRule] {
        &self.priorities
    }

    pub fn component(&self, name: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.components.iter().map(|c| c.name.clone()).collect()
    }

    /// Label names declared by two or more components.
    pub fn shared_labels(&self) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut shared = BTreeSet::new();
        for c in &self.components {
            let names: BTreeSet<&str> = c
                .behavior
                .alphabet
                .iter()
                .filter(|l| l.is_observable())
                .map(|l| l.name.as_str())
                .collect();
            for n in names {
                if !seen.insert(n) {
                    shared.insert(n.to_string());
                }
            }
        }
        shared
    }

    pub fn initial_state(&self) -> ProductState {
        ProductState(self.components.iter().map(|c| c.behavior.initial.clone()).collect())
    }

    /// Returns a copy of the system restricted by `rules` in addition to any
    /// rules it already carries. The automata themselves are untouched.
    pub fn apply_priorities(&self, rules: &[PriorityRule]) -> Result<ComponentSystem, CompositionError> {
        for rule in rules {
            let c = self
                .component(&rule.component)
                .ok_or_else(|| CompositionError::UnknownComponent(rule.component.clone()))?;
            for l in [&rule.lower, &rule.higher] {
                if !c.behavior.alphabet.contains(l) {
                    return Err(CompositionError::UnknownLabel {
                        component: rule.component.clone(),
                        label: l.name.clone(),
                    });
                }
            }
            if rule.lower == rule.higher {
                return Err(CompositionError::ReflexiveRule {
                    component: rule.component.clone(),
                    label: rule.lower.name.clone(),
                });
            }
        }
        let mut out = self.clone();
        for rule in rules {
            if !out.priorities.contains(rule) {
                out.priorities.push(rule.clone());
            }
        }
        Ok(out)
    }

    /// The same system without priority rules.
    pub fn unrestricted(&self) -> ComponentSystem {
        ComponentSystem {
            components: self.components.clone(),
            priorities: Vec::new(),
        }
    }
}

/// Current location of each component, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProductState(pub Vec<String>);

impl fmt::Display for ProductState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Move {
    pub component: String,
    pub label: Label,
    pub from: String,
    pub to: String,
}

/// One step of the composition: a local move, or all declaring components
/// moving together on a shared label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointTransition {
    pub label: String,
    pub moves: Vec<Move>,
}

impl JointTransition {
    pub fn target(&self, from: &ProductState, system: &ComponentSystem) -> ProductState {
        let mut next = from.clone();
        for m in &self.moves {
            if let Some(i) = system.components.iter().position(|c| c.name == m.component) {
                next.0[i] = m.to.clone();
            }
        }
        next
    }
}

/// Joint transitions enabled at `state`, with priority rules applied.
pub fn enabled(system: &ComponentSystem, state: &ProductState) -> Result<Vec<JointTransition>, CompositionError> {
    let compiled = Compiled::new(system);
    let s = compiled.encode(state)?;
    Ok(compiled
        .enabled(&s)
        .iter()
        .map(|j| compiled.decode_joint(&s, j))
        .collect())
}


#[cfg(test)]
mod tests {
    use super::testing::fig3;
    use super::*;
    use crate::automaton::{Label, INCOMING_CALLS, OUTGOING_CALLS};

    fn labels_of(ts: &[JointTransition]) -> Vec<&str> {
        ts.iter().map(|t| t.label.as_str()).collect()
    }

    #[test]
    fn shared_label_moves_both() {
        let a = BehavioralType::new(OUTGOING_CALLS, "a0").with_edge("a0", Label::call_out("m", "B"), "a1");
        let b = BehavioralType::new(INCOMING_CALLS, "b0").with_edge("b0", Label::call_in("m"), "b1");
        let sys = ComponentSystem::new([("A", a), ("B", b)]).unwrap();
        let t = enabled(&sys, &sys.initial_state()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].moves.len(), 2);
        assert_eq!(
            t[0].target(&sys.initial_state(), &sys),
            ProductState(vec!["a1".into(), "b1".into()])
        );
    }

    #[test]
    fn shared_label_blocked_when_partner_lacks_edge() {
        let a = BehavioralType::new(OUTGOING_CALLS, "a0").with_edge("a0", Label::call_out("m", "B"), "a1");
        let b = BehavioralType::new(INCOMING_CALLS, "b0").with_label(Label::call_in("m"));
        let sys = ComponentSystem::new([("A", a), ("B", b)]).unwrap();
        assert!(enabled(&sys, &sys.initial_state()).unwrap().is_empty());
    }

    #[test]
    fn fig3_initial_offers_only_new_protocol() {
        let sys = fig3();
        assert_eq!(sys.shared_labels(), ["newPrtcl", "oldPrtcl"].iter().map(|s| s.to_string()).collect());
        let t = enabled(&sys, &sys.initial_state()).unwrap();
        assert_eq!(labels_of(&t), vec!["newPrtcl"]);
    }

    #[test]
    fn nondeterministic_choices_multiply() {
        let a = BehavioralType::new("x", "a0")
            .with_edge("a0", Label::internal("go"), "a1")
            .with_edge("a0", Label::internal("go"), "a2");
        let b = BehavioralType::new("x", "b0")
            .with_edge("b0", Label::call_in("s"), "b1")
            .with_edge("b0", Label::call_in("s"), "b2");
        let c = BehavioralType::new("x", "c0")
            .with_edge("c0", Label::call_out("s", "B"), "c1")
            .with_edge("c0", Label::call_out("s", "B"), "c2");
        let sys = ComponentSystem::new([("A", a), ("B", b), ("C", c)]).unwrap();
        let t = enabled(&sys, &sys.initial_state()).unwrap();
        assert_eq!(labels_of(&t), vec!["go", "go", "s", "s", "s", "s"]);
    }

    #[test]
    fn internal_labels_never_synchronize() {
        let a = BehavioralType::new("x", "a0").with_edge("a0", Label::internal("work"), "a1");
        let b = BehavioralType::new("x", "b0").with_label(Label::internal("work"));
        let sys = ComponentSystem::new([("A", a), ("B", b)]).unwrap();
        assert!(sys.shared_labels().is_empty());
        assert_eq!(enabled(&sys, &sys.initial_state()).unwrap().len(), 1);
    }

    #[test]
    fn arity_and_location_errors() {
        let sys = fig3();
        assert_eq!(
            enabled(&sys, &ProductState(vec!["l0".into()])).unwrap_err(),
            CompositionError::StateArityMismatch { expected: 2, found: 1 }
        );
        assert!(matches!(
            enabled(&sys, &ProductState(vec!["l0".into(), "nope".into()])),
            Err(CompositionError::UnknownLocation { .. })
        ));
    }

    #[test]
    fn priorities_keep_new_protocol() {
        let sys = fig3();
        let rule = PriorityRule::new("A", Label::call_out("oldPrtcl", "B"), Label::call_out("newPrtcl", "B"));
        let r = sys.apply_priorities(&[rule]).unwrap();
        let t = enabled(&r, &r.initial_state()).unwrap();
        assert_eq!(labels_of(&t), vec!["newPrtcl"]);
        assert!(sys.apply_priorities(&[]).unwrap().priorities().is_empty());
    }

    #[test]
    fn priority_suppresses_only_when_higher_fires() {
        let a = BehavioralType::new("x", "a0")
            .with_edge("a0", Label::internal("fast"), "a1")
            .with_edge("a0", Label::internal("slow"), "a2")
            .with_edge("a1", Label::internal("slow"), "a0");
        let sys = ComponentSystem::new([("A", a)]).unwrap();
        let r = sys
            .apply_priorities(&[PriorityRule::new("A", Label::internal("slow"), Label::internal("fast"))])
            .unwrap();
        assert_eq!(labels_of(&enabled(&r, &r.initial_state()).unwrap()), vec!["fast"]);
        let at_a1 = ProductState(vec!["a1".into()]);
        assert_eq!(labels_of(&enabled(&r, &at_a1).unwrap()), vec!["slow"]);
    }

    #[test]
    fn rule_errors() {
        let sys = fig3();
        let l = Label::call_out("newPrtcl", "B");
        assert!(matches!(
            sys.apply_priorities(&[PriorityRule::new("Z", l.clone(), l.clone())]),
            Err(CompositionError::UnknownComponent(_))
        ));
        assert!(matches!(
            sys.apply_priorities(&[PriorityRule::new("A", Label::internal("q"), l.clone())]),
            Err(CompositionError::UnknownLabel { .. })
        ));
        assert!(matches!(
            sys.apply_priorities(&[PriorityRule::new("A", l.clone(), l)]),
            Err(CompositionError::ReflexiveRule { .. })
        ));
    }

    #[test]
    fn construction_errors() {
        let bt = BehavioralType::new("x", "l0");
        assert!(matches!(
            ComponentSystem::new([("A", bt.clone()), ("A", bt.clone())]),
            Err(CompositionError::DuplicateComponent(_))
        ));
        let mut bad = bt;
        bad.initial = "nowhere".into();
        assert!(matches!(
            ComponentSystem::new([("A", bad)]),
            Err(CompositionError::InvalidComponent { .. })
        ));
    }
}
