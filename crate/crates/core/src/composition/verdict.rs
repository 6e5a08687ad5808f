use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::compiled::Joint;
use super::explore::{explore, Exploration, DEFAULT_STATE_BOUND};
use super::{Compiled, ComponentSystem, CompositionError, ProductState};
use crate::automaton::{Label, LabelKind};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceMove {
    pub component: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceStep {
    pub label: String,
    pub moves: Vec<TraceMove>,
}

/// A reported state and a shortest run reaching it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateTrace {
    pub state: ProductState,
    pub trace: Vec<TraceStep>,
}

/// `sender` offers a call to `refuser`, which declares the label but cannot
/// take it where it currently is.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Incompatibility {
    pub state: ProductState,
    pub sender: String,
    pub label: Label,
    pub refuser: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisVerdict {
    pub components: Vec<String>,
    /// False when the state bound cut exploration short.
    pub complete: bool,
    pub explored: usize,
    /// Reachable states where no component has any edge left.
    pub terminal: usize,
    pub deadlocks: Vec<ProductState>,
    pub incompatibilities: Vec<Incompatibility>,
    /// One entry per reported state, in discovery order.
    pub traces: Vec<StateTrace>,
}

impl AnalysisVerdict {
    pub fn is_clean(&self) -> bool {
        self.complete && self.deadlocks.is_empty() && self.incompatibilities.is_empty()
    }

    pub fn witness_count(&self) -> usize {
        self.deadlocks.len() + self.incompatibilities.len()
    }

    pub fn trace_for(&self, state: &ProductState) -> Option<&[TraceStep]> {
        self.traces
            .iter()
            .find(|t| &t.state == state)
            .map(|t| t.trace.as_slice())
    }

    /// All states reported for either reason, without repetition.
    pub fn bad_states(&self) -> BTreeSet<ProductState> {
        self.deadlocks
            .iter()
            .cloned()
            .chain(self.incompatibilities.iter().map(|i| i.state.clone()))
            .collect()
    }
}

fn check_targets(system: &ComponentSystem) -> Result<(), CompositionError> {
    for c in system.components() {
        for l in &c.behavior.alphabet {
            if l.kind != LabelKind::CallOut {
                continue;
            }
            if let Some(t) = &l.target {
                if system.component(t).is_none() {
                    return Err(CompositionError::UnknownTarget {
                        sender: c.name.clone(),
                        label: l.name.clone(),
                        target: t.clone(),
                    });
                }
            }
        }
    }
    Ok(())
}

fn incompatibilities_at(compiled: &Compiled<'_>, s: &[u32]) -> Vec<(usize, usize, usize)> {
    let suppressed = if compiled.rules.iter().all(Vec::is_empty) {
        vec![BTreeSet::new(); compiled.comps.len()]
    } else {
        compiled.suppressed(&compiled.enabled_unrestricted(s))
    };
    let mut found = BTreeSet::new();
    for (c, comp) in compiled.comps.iter().enumerate() {
        for &(l, _) in &comp.out[s[c] as usize] {
            let label = &comp.labels[l];
            if label.kind != LabelKind::CallOut || suppressed[c].contains(&l) {
                continue;
            }
            // a call without a named receiver cannot be paired
            let Some(target) = label.target.as_deref() else {
                continue;
            };
            let Some(t) = compiled.system.components().iter().position(|x| x.name == target) else {
                continue;
            };
            let name = comp.label_name[l];
            let receiver = &compiled.comps[t];
            if !receiver.alphabet_names.contains(&name) {
                continue;
            }
            let accepts = receiver.out[s[t] as usize]
                .iter()
                .any(|&(rl, _)| receiver.label_name[rl] == name && receiver.labels[rl].is_observable());
            if !accepts {
                found.insert((c, l, t));
            }
        }
    }
    found.into_iter().collect()
}

fn trace_of(compiled: &Compiled<'_>, ex: &Exploration, index: usize) -> Vec<TraceStep> {
    ex.path_to(index)
        .into_iter()
        .map(|(_, j): (usize, Joint)| TraceStep {
            label: compiled.names[j.name].clone(),
            moves: j
                .moves
                .iter()
                .map(|&(c, _, to)| TraceMove {
                    component: compiled.system.components()[c].name.clone(),
                    to: compiled.comps[c].locations[to as usize].clone(),
                })
                .collect(),
        })
        .collect()
}

/// Runs the requested checks over one exploration of `system`.
pub fn analyze_bounded(
    system: &ComponentSystem,
    bound: usize,
    deadlocks: bool,
    compatibility: bool,
) -> Result<AnalysisVerdict, CompositionError> {
    if compatibility {
        check_targets(system)?;
    }
    let compiled = Compiled::new(system);
    let mut dead = Vec::new();
    let mut incompatible = Vec::new();
    let mut terminal = 0;
    let ex = explore(&compiled, bound, false, |i, s, enabled| {
        let is_terminal = compiled.is_terminal(s);
        if is_terminal {
            terminal += 1;
        } else if deadlocks && enabled.is_empty() {
            dead.push(i);
        }
        if compatibility {
            for w in incompatibilities_at(&compiled, s) {
                incompatible.push((i, w));
            }
        }
    });

    let mut reported: Vec<usize> = dead.iter().copied().chain(incompatible.iter().map(|(i, _)| *i)).collect();
    reported.sort_unstable();
    reported.dedup();

    Ok(AnalysisVerdict {
        components: system.names(),
        complete: ex.complete,
        explored: ex.states.len(),
        terminal,
        deadlocks: dead.iter().map(|&i| compiled.decode(&ex.states[i])).collect(),
        incompatibilities: incompatible
            .iter()
            .map(|&(i, (c, l, t))| Incompatibility {
                state: compiled.decode(&ex.states[i]),
                sender: system.components()[c].name.clone(),
                label: compiled.comps[c].labels[l].clone(),
                refuser: system.components()[t].name.clone(),
            })
            .collect(),
        traces: reported
            .into_iter()
            .map(|i| StateTrace {
                state: compiled.decode(&ex.states[i]),
                trace: trace_of(&compiled, &ex, i),
            })
            .collect(),
    })
}

/// Reachable states where some component could still move but every move
/// is blocked waiting for a partner.
pub fn detect_deadlocks(system: &ComponentSystem) -> AnalysisVerdict {
    analyze_bounded(system, DEFAULT_STATE_BOUND, true, false).expect("deadlock search has no failure modes")
}

/// Reachable states where a component offers a call that its declared
/// receiver cannot accept.
pub fn check_compatibility(system: &ComponentSystem) -> Result<AnalysisVerdict, CompositionError> {
    analyze_bounded(system, DEFAULT_STATE_BOUND, false, true)
}

/// Both checks in one pass.
pub fn analyze(system: &ComponentSystem) -> Result<AnalysisVerdict, CompositionError> {
    analyze_bounded(system, DEFAULT_STATE_BOUND, true, true)
}

/// Replays `trace` from the initial state and returns where it ends.
pub fn replay(system: &ComponentSystem, trace: &[TraceStep]) -> Result<ProductState, CompositionError> {
    let compiled = Compiled::new(system);
    let mut s = compiled.initial();
    for (n, step) in trace.iter().enumerate() {
        let mut wanted: Vec<&TraceMove> = step.moves.iter().collect();
        wanted.sort();
        let next = compiled.enabled(&s).into_iter().find(|j| {
            if compiled.names[j.name] != step.label {
                return false;
            }
            let mut moves: Vec<TraceMove> = j
                .moves
                .iter()
                .map(|&(c, _, to)| TraceMove {
                    component: system.components()[c].name.clone(),
                    to: compiled.comps[c].locations[to as usize].clone(),
                })
                .collect();
            moves.sort();
            moves.iter().eq(wanted.iter().copied())
        });
        match next {
            Some(j) => s = compiled.successor(&s, &j),
            None => return Err(CompositionError::ReplayFailed(n)),
        }
    }
    Ok(compiled.decode(&s))
}

#[cfg(test)]
mod tests {
    use super::super::testing::fig3;
    use super::super::PriorityRule;
    use super::*;
    use crate::automaton::{BehavioralType, Label, INCOMING_CALLS, OUTGOING_CALLS};

    #[test]
    fn cycle_has_no_deadlock_or_terminal() {
        let bt = BehavioralType::new("x", "a")
            .with_edge("a", Label::internal("t"), "b")
            .with_edge("b", Label::internal("t"), "a");
        let v = detect_deadlocks(&ComponentSystem::new([("A", bt)]).unwrap());
        assert!(v.is_clean());
        assert_eq!(v.terminal, 0);
        assert_eq!(v.explored, 2);
    }

    #[test]
    fn mutual_wait_deadlocks_at_start() {
        let a = BehavioralType::new("x", "a0")
            .with_edge("a0", Label::call_out("x", "B"), "a1")
            .with_label(Label::call_in("y"));
        let b = BehavioralType::new("x", "b0")
            .with_edge("b0", Label::call_out("y", "A"), "b1")
            .with_label(Label::call_in("x"));
        let sys = ComponentSystem::new([("A", a), ("B", b)]).unwrap();
        let v = detect_deadlocks(&sys);
        assert_eq!(v.deadlocks, vec![sys.initial_state()]);
        assert_eq!(v.trace_for(&sys.initial_state()), Some(&[][..]));
    }

    #[test]
    fn fig3_has_one_witness_and_no_deadlock() {
        let sys = fig3();
        let v = analyze(&sys).unwrap();
        assert!(v.deadlocks.is_empty());
        assert_eq!(
            v.incompatibilities,
            vec![Incompatibility {
                state: sys.initial_state(),
                sender: "A".into(),
                label: Label::call_out("oldPrtcl", "B"),
                refuser: "B".into(),
            }]
        );
        assert_eq!(v.terminal, 1);
    }

    #[test]
    fn undeclared_label_is_outside_the_contract() {
        let a = BehavioralType::new(OUTGOING_CALLS, "a0").with_edge("a0", Label::call_out("ping", "B"), "a1");
        let b = BehavioralType::new(INCOMING_CALLS, "b0").with_edge("b0", Label::call_in("pong"), "b1");
        let v = check_compatibility(&ComponentSystem::new([("A", a), ("B", b)]).unwrap()).unwrap();
        assert!(v.incompatibilities.is_empty());
    }

    #[test]
    fn priorities_clear_the_fig3_witness() {
        let sys = fig3()
            .apply_priorities(&[PriorityRule::new(
                "A",
                Label::call_out("oldPrtcl", "B"),
                Label::call_out("newPrtcl", "B"),
            )])
            .unwrap();
        assert!(analyze(&sys).unwrap().is_clean());
    }

    #[test]
    fn unknown_target_is_an_error() {
        let a = BehavioralType::new(OUTGOING_CALLS, "a0").with_edge("a0", Label::call_out("m", "Z"), "a1");
        let sys = ComponentSystem::new([("A", a)]).unwrap();
        assert!(matches!(
            check_compatibility(&sys),
            Err(CompositionError::UnknownTarget { .. })
        ));
    }

    #[test]
    fn traces_replay() {
        let a = BehavioralType::new("x", "a0")
            .with_edge("a0", Label::internal("step"), "a1")
            .with_edge("a1", Label::call_out("x", "B"), "a2")
            .with_label(Label::call_in("y"));
        let b = BehavioralType::new("x", "b0")
            .with_edge("b0", Label::call_out("y", "A"), "b1")
            .with_label(Label::call_in("x"));
        let sys = ComponentSystem::new([("A", a), ("B", b)]).unwrap();
        let v = detect_deadlocks(&sys);
        assert_eq!(v.deadlocks.len(), 1);
        let t = &v.traces[0];
        assert_eq!(t.trace.len(), 1);
        assert_eq!(replay(&sys, &t.trace).unwrap(), t.state);
    }
}
