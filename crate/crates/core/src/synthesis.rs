//! Priority synthesis: search for priority rules that steer nondeterministic
//! choices away from deadlocks and refused calls.
//!
//! Candidates come from the shortest runs into each bad state. Wherever a
//! component acting on such a run had a choice between two or more labels,
//! every ordering of those labels is a candidate rule. Rule sets are tried
//! by increasing size, candidates in lexicographic order, and the first set
//! whose restricted system is clean wins. All components are treated as
//! controllable.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::Label;
use crate::composition::{analyze, AnalysisVerdict, ComponentSystem, CompositionError, ProductState, StateTrace, TraceStep};

pub use crate::composition::PriorityRule;

/// Largest rule set tried unless told otherwise.
pub const DEFAULT_MAX_RULES: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Composition(#[from] CompositionError),
    #[error("state space exceeds the exploration bound after {0} states")]
    Incomplete(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisStatus {
    Solved,
    /// Every subset of the candidates was tried.
    Unsolvable,
    /// The size limit stopped the search with subsets left untried.
    BoundExceeded,
}

/// Bad states of the unrestricted system that one rule removes on its own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleEffect {
    pub rule: PriorityRule,
    pub eliminated: Vec<StateTrace>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisResult {
    pub status: SynthesisStatus,
    pub rules: Vec<PriorityRule>,
    pub candidates: Vec<PriorityRule>,
    pub max_rules: usize,
    pub original: AnalysisVerdict,
    pub residual: AnalysisVerdict,
    pub effects: Vec<RuleEffect>,
}

fn states_along(system: &ComponentSystem, trace: &[TraceStep]) -> Vec<ProductState> {
    let names = system.names();
    let mut cur = system.initial_state();
    let mut out = vec![cur.clone()];
    for step in trace {
        for m in &step.moves {
            if let Some(i) = names.iter().position(|n| n == &m.component) {
                cur.0[i] = m.to.clone();
            }
        }
        out.push(cur.clone());
    }
    out
}

fn offered_labels(system: &ComponentSystem, component: usize, location: &str) -> BTreeSet<Label> {
    system.components()[component]
        .behavior
        .outgoing(location)
        .map(|e| e.label.clone())
        .collect()
}

fn candidates(system: &ComponentSystem, verdict: &AnalysisVerdict) -> Vec<PriorityRule> {
    let names = system.names();
    let deadlocked: BTreeSet<&ProductState> = verdict.deadlocks.iter().collect();
    let mut out = BTreeSet::new();
    let mut add = |c: usize, state: &ProductState| {
        let labels = offered_labels(system, c, &state.0[c]);
        if labels.len() < 2 {
            return;
        }
        for (lower, higher) in labels.iter().tuple_combinations() {
            out.insert(PriorityRule::new(names[c].clone(), lower.clone(), higher.clone()));
            out.insert(PriorityRule::new(names[c].clone(), higher.clone(), lower.clone()));
        }
    };
    for st in &verdict.traces {
        let states = states_along(system, &st.trace);
        for (step, state) in st.trace.iter().zip(&states) {
            for m in &step.moves {
                if let Some(c) = names.iter().position(|n| n == &m.component) {
                    add(c, state);
                }
            }
        }
        let last = states.last().expect("trace states include the initial state");
        if deadlocked.contains(last) {
            for c in 0..names.len() {
                add(c, last);
            }
        }
        for inc in verdict.incompatibilities.iter().filter(|i| &i.state == last) {
            if let Some(c) = names.iter().position(|n| n == &inc.sender) {
                add(c, last);
            }
        }
    }
    out.into_iter()
        .filter(|r| !system.priorities().contains(r))
        .collect()
}

fn contradictory(rules: &[&PriorityRule]) -> bool {
    rules.iter().any(|a| {
        rules
            .iter()
            .any(|b| a.component == b.component && a.lower == b.higher && a.higher == b.lower)
    })
}

/// Searches for at most `max_rules` priority rules making `system` free of
/// deadlocks and incompatibilities.
pub fn synthesize(system: &ComponentSystem, max_rules: usize) -> Result<SynthesisResult, SynthesisError> {
    let original = analyze(system)?;
    if !original.complete {
        return Err(SynthesisError::Incomplete(original.explored));
    }
    let candidates = candidates(system, &original);
    let mut result = SynthesisResult {
        status: SynthesisStatus::Solved,
        rules: Vec::new(),
        candidates: candidates.clone(),
        max_rules,
        original: original.clone(),
        residual: original.clone(),
        effects: Vec::new(),
    };
    if original.is_clean() {
        return Ok(result);
    }

    for size in 1..=max_rules.min(candidates.len()) {
        for combo in candidates.iter().combinations(size) {
            if contradictory(&combo) {
                continue;
            }
            let rules: Vec<PriorityRule> = combo.into_iter().cloned().collect();
            let verdict = analyze(&system.apply_priorities(&rules)?)?;
            if verdict.is_clean() {
                result.effects = effects(system, &original, &rules)?;
                result.rules = rules;
                result.residual = verdict;
                return Ok(result);
            }
        }
    }
    result.status = if max_rules >= candidates.len() {
        SynthesisStatus::Unsolvable
    } else {
        SynthesisStatus::BoundExceeded
    };
    Ok(result)
}

fn effects(
    system: &ComponentSystem,
    original: &AnalysisVerdict,
    rules: &[PriorityRule],
) -> Result<Vec<RuleEffect>, SynthesisError> {
    let before = original.bad_states();
    let mut out = Vec::new();
    for rule in rules {
        let after = analyze(&system.apply_priorities(std::slice::from_ref(rule))?)?.bad_states();
        let eliminated = original
            .traces
            .iter()
            .filter(|t| before.contains(&t.state) && !after.contains(&t.state))
            .cloned()
            .collect();
        out.push(RuleEffect {
            rule: rule.clone(),
            eliminated,
        });
    }
    Ok(out)
}

pub(crate) fn format_trace(trace: &[TraceStep]) -> String {
    if trace.is_empty() {
        return "<initial>".to_string();
    }
    trace
        .iter()
        .map(|s| {
            let moves = s
                .moves
                .iter()
                .map(|m| format!("{}->{}", m.component, m.to))
                .join(", ");
            format!("{} {{{}}}", s.label, moves)
        })
        .join("; ")
}

fn describe_state(verdict: &AnalysisVerdict, st: &StateTrace, out: &mut String) {
    if verdict.deadlocks.contains(&st.state) {
        let _ = writeln!(out, "    deadlock at {}", st.state);
    }
    for inc in verdict.incompatibilities.iter().filter(|i| i.state == st.state) {
        let _ = writeln!(
            out,
            "    at {}: {} calls {}, which {} refuses",
            st.state, inc.sender, inc.label.name, inc.refuser
        );
    }
    let _ = writeln!(out, "      via {}", format_trace(&st.trace));
}

/// Human-readable account of a synthesis run.
pub fn explain(result: &SynthesisResult) -> String {
    let mut out = String::new();
    let original = &result.original;
    match result.status {
        SynthesisStatus::Solved if result.rules.is_empty() => {
            let _ = writeln!(
                out,
                "solved: no priorities needed; {} states explored, no deadlocks or incompatibilities",
                original.explored
            );
        }
        SynthesisStatus::Solved => {
            let _ = writeln!(out, "solved with {} priorit{}:", result.rules.len(), if result.rules.len() == 1 { "y" } else { "ies" });
            for effect in &result.effects {
                let _ = writeln!(out, "  {}", effect.rule);
                if effect.eliminated.is_empty() {
                    let _ = writeln!(out, "    (needed together with the other rules)");
                }
                for st in &effect.eliminated {
                    describe_state(original, st, &mut out);
                }
            }
            let _ = writeln!(
                out,
                "restricted system: {} states, 0 deadlocks, 0 incompatibilities",
                result.residual.explored
            );
        }
        SynthesisStatus::Unsolvable => {
            let _ = writeln!(
                out,
                "unsolvable: candidates exhausted; no set of the {} candidate priorities removes every conflict",
                result.candidates.len()
            );
        }
        SynthesisStatus::BoundExceeded => {
            let _ = writeln!(
                out,
                "bound exceeded: no solution with at most {} priorities; {} candidates, larger sets untried",
                result.max_rules,
                result.candidates.len()
            );
        }
    }
    if result.status != SynthesisStatus::Solved {
        let _ = writeln!(
            out,
            "remaining: {} deadlocks, {} incompatibilities",
            original.deadlocks.len(),
            original.incompatibilities.len()
        );
        for st in &original.traces {
            describe_state(original, st, &mut out);
        }
    }
    out
}
