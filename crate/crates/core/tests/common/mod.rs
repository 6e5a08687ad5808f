//! Independent oracles and generators shared by the integration tests.
//! Nothing here calls into the engines it checks.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use behavior_types::automaton::{BehavioralType, Edge, Label, LabelKind, INCOMING_CALLS, OUTGOING_CALLS};
use behavior_types::composition::{ComponentSystem, PriorityRule, TraceStep};
use behavior_types::osgi::{Action, CallStatus, EventKind, Step, Subject, SystemDef, SystemState};
use rand::seq::SliceRandom;
use rand::Rng;

// ---------------------------------------------------------------- automata

/// A random deterministic complete automaton with `1..=max_locations`
/// locations over `1..=max_labels` labels. About a third of them get an
/// absorbing error location.
pub fn random_dfa(rng: &mut impl Rng, max_locations: usize, max_labels: usize) -> BehavioralType {
    let n = rng.gen_range(1..=max_locations);
    let k = rng.gen_range(1..=max_labels);
    let locs: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let labels: Vec<Label> = (0..k).map(|i| Label::call_in(format!("x{i}"))).collect();
    let error = (n > 1 && rng.gen_bool(0.35)).then(|| locs[rng.gen_range(1..n)].clone());
    let initial = locs[0].clone();
    let mut bt = BehavioralType::new(OUTGOING_CALLS, initial);
    for l in &locs {
        bt.add_location(l.clone());
    }
    for l in &labels {
        bt.alphabet.insert(l.clone());
    }
    for src in &locs {
        for label in &labels {
            let dst = if Some(src) == error.as_ref() {
                src.clone()
            } else {
                locs[rng.gen_range(0..n)].clone()
            };
            bt.edges.insert(Edge::new(src.clone(), label.clone(), dst));
        }
    }
    bt.error_location = error;
    bt
}

/// Where `word` leads in a deterministic automaton; `None` if it gets stuck.
pub fn run_word<'a>(bt: &'a BehavioralType, word: &[&Label]) -> Option<&'a str> {
    let mut at = bt.initial.as_str();
    for l in word {
        at = bt.edges.iter().find(|e| e.source == at && &e.label == *l)?.destination.as_str();
    }
    Some(at)
}

/// Accepted unless the word gets stuck or ends in the error location.
pub fn accepts(bt: &BehavioralType, word: &[&Label]) -> bool {
    match run_word(bt, word) {
        Some(l) => bt.error_location.as_deref() != Some(l),
        None => false,
    }
}

/// Compares the classification of every word over `a`'s alphabet of length
/// at most `max_len`. Returns the first disagreeing word and the number of
/// words checked. Both automata are walked along each word as it is built
/// up, so a word costs one step per automaton beyond its prefix.
pub fn first_disagreement(a: &BehavioralType, b: &BehavioralType, max_len: usize) -> (Option<Vec<String>>, usize) {
    struct Walk<'a> {
        alphabet: Vec<&'a Label>,
        a: Table<'a>,
        b: Table<'a>,
        max_len: usize,
        checked: usize,
        word: Vec<&'a Label>,
    }
    type Table<'a> = (&'a BehavioralType, BTreeMap<(&'a str, &'a Label), &'a str>);
    fn table(bt: &BehavioralType) -> Table<'_> {
        (bt, bt.edges.iter().map(|e| ((e.source.as_str(), &e.label), e.destination.as_str())).collect())
    }
    fn class(t: &Table<'_>, at: Option<&str>) -> bool {
        at.is_some_and(|l| t.0.error_location.as_deref() != Some(l))
    }
    fn go(w: &mut Walk<'_>, at_a: Option<&str>, at_b: Option<&str>) -> bool {
        w.checked += 1;
        if class(&w.a, at_a) != class(&w.b, at_b) {
            return true;
        }
        if w.word.len() == w.max_len {
            return false;
        }
        for i in 0..w.alphabet.len() {
            let l = w.alphabet[i];
            let na = at_a.and_then(|x| w.a.1.get(&(x, l)).copied());
            let nb = at_b.and_then(|x| w.b.1.get(&(x, l)).copied());
            w.word.push(l);
            if go(w, na, nb) {
                return true;
            }
            w.word.pop();
        }
        false
    }
    let mut w = Walk {
        alphabet: a.alphabet.iter().collect(),
        a: table(a),
        b: table(b),
        max_len,
        checked: 0,
        word: Vec::new(),
    };
    let found = go(&mut w, Some(a.initial.as_str()), Some(b.initial.as_str()));
    let word = found.then(|| w.word.iter().map(|l| l.name.clone()).collect());
    (word, w.checked)
}

// ------------------------------------------------------------- composition

const NAMES: [&str; 4] = ["a", "b", "c", "d"];

/// A random system of 2 or 3 components with at most 5 locations each.
/// Labels come from a small shared pool so that components synchronize,
/// refuse each other's calls and block. Some systems carry priority rules.
pub fn random_system(rng: &mut impl Rng) -> ComponentSystem {
    let count = rng.gen_range(2..=3);
    let names: Vec<String> = (0..count).map(|i| format!("C{i}")).collect();
    let mut components = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let n = rng.gen_range(1..=5);
        let locs: Vec<String> = (0..n).map(|j| format!("l{j}")).collect();
        let mut bt = BehavioralType::new(if rng.gen_bool(0.5) { OUTGOING_CALLS } else { INCOMING_CALLS }, "l0");
        for l in &locs {
            bt.add_location(l.clone());
        }
        let mut pool: Vec<&str> = NAMES.to_vec();
        pool.shuffle(rng);
        let declared = rng.gen_range(1..=NAMES.len());
        let mut labels = Vec::new();
        for n in &pool[..declared] {
            let label = match rng.gen_range(0..10) {
                0..=4 => {
                    let others: Vec<&String> = names.iter().filter(|x| *x != name).collect();
                    if rng.gen_bool(0.9) {
                        Label::call_out(*n, others[rng.gen_range(0..others.len())].clone())
                    } else {
                        Label::new(*n, LabelKind::CallOut)
                    }
                }
                5..=8 => Label::call_in(*n),
                _ => Label::internal(*n),
            };
            labels.push(label);
        }
        match rng.gen_range(0..10) {
            0 | 1 => labels.push(Label::internal(format!("w{i}"))),
            // an internal step sharing its name with a synchronizing label
            2 => labels.push(Label::internal(pool[0])),
            _ => {}
        }
        labels.sort();
        labels.dedup();
        for l in &labels {
            bt.alphabet.insert(l.clone());
        }
        let edges = rng.gen_range(n..=3 * n);
        for _ in 0..edges {
            let src = locs[rng.gen_range(0..n)].clone();
            let dst = locs[rng.gen_range(0..n)].clone();
            let label = labels[rng.gen_range(0..labels.len())].clone();
            bt.edges.insert(Edge::new(src, label, dst));
        }
        components.push((name.clone(), bt));
    }
    let mut rules = Vec::new();
    if rng.gen_bool(0.3) {
        let (name, bt) = &components[rng.gen_range(0..components.len())];
        let labels: Vec<&Label> = bt.alphabet.iter().collect();
        if labels.len() >= 2 {
            let lo = rng.gen_range(0..labels.len());
            let mut hi = rng.gen_range(0..labels.len() - 1);
            if hi >= lo {
                hi += 1;
            }
            rules.push(PriorityRule::new(name.clone(), labels[lo].clone(), labels[hi].clone()));
        }
    }
    let sys = ComponentSystem::new(components).expect("generated components are valid");
    sys.apply_priorities(&rules).expect("generated rules are valid")
}

pub type State = Vec<String>;

/// One joint step: the label name and `(component, label, destination)`
/// for every participant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaiveStep {
    pub name: String,
    pub moves: Vec<(usize, Label, String)>,
}

/// Everything the naive enumerator knows about a system.
#[derive(Debug, Default)]
pub struct NaiveVerdict {
    pub distance: BTreeMap<State, usize>,
    pub terminal: BTreeSet<State>,
    pub deadlocks: BTreeSet<State>,
    /// `(state, sender, label, refuser)`
    pub incompatibilities: BTreeSet<(State, String, Label, String)>,
}

fn declares(bt: &BehavioralType, name: &str) -> bool {
    bt.alphabet.iter().any(|l| l.name == name && l.is_observable())
}

fn observable_edges<'a>(bt: &'a BehavioralType, at: &'a str, name: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
    bt.edges
        .iter()
        .filter(move |e| e.source == at && e.label.name == name && e.label.is_observable())
}

/// Joint steps at `state` before priorities.
pub fn naive_steps_unrestricted(sys: &ComponentSystem, state: &State) -> Vec<NaiveStep> {
    let comps = sys.components();
    let mut out = Vec::new();
    let mut shared_names = BTreeSet::new();
    for (i, c) in comps.iter().enumerate() {
        for e in c.behavior.edges.iter().filter(|e| e.source == state[i]) {
            let n = &e.label.name;
            let shared = e.label.is_observable() && comps.iter().filter(|d| declares(&d.behavior, n)).count() >= 2;
            if shared {
                shared_names.insert(n.clone());
            } else {
                out.push(NaiveStep {
                    name: n.clone(),
                    moves: vec![(i, e.label.clone(), e.destination.clone())],
                });
            }
        }
    }
    for n in shared_names {
        let mut partial: Vec<Vec<(usize, Label, String)>> = vec![Vec::new()];
        for (i, c) in comps.iter().enumerate() {
            if !declares(&c.behavior, &n) {
                continue;
            }
            let options: Vec<&Edge> = observable_edges(&c.behavior, &state[i], &n).collect();
            let mut next = Vec::new();
            for p in &partial {
                for e in &options {
                    let mut q = p.clone();
                    q.push((i, e.label.clone(), e.destination.clone()));
                    next.push(q);
                }
            }
            partial = next;
        }
        for moves in partial {
            out.push(NaiveStep { name: n.clone(), moves });
        }
    }
    out
}

fn naive_suppressed(sys: &ComponentSystem, base: &[NaiveStep]) -> Vec<BTreeSet<Label>> {
    let comps = sys.components();
    comps
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let fireable: BTreeSet<&Label> = base
                .iter()
                .flat_map(|s| s.moves.iter())
                .filter(|(j, _, _)| *j == i)
                .map(|(_, l, _)| l)
                .collect();
            sys.priorities()
                .iter()
                .filter(|r| r.component == c.name && fireable.contains(&r.higher))
                .map(|r| r.lower.clone())
                .collect()
        })
        .collect()
}

/// Joint steps at `state` after priorities.
pub fn naive_steps(sys: &ComponentSystem, state: &State) -> Vec<NaiveStep> {
    let base = naive_steps_unrestricted(sys, state);
    let sup = naive_suppressed(sys, &base);
    base.into_iter()
        .filter(|s| s.moves.iter().all(|(i, l, _)| !sup[*i].contains(l)))
        .collect()
}

fn apply(state: &State, step: &NaiveStep) -> State {
    let mut next = state.clone();
    for (i, _, to) in &step.moves {
        next[*i] = to.clone();
    }
    next
}

/// Every product state, whether reachable or not.
pub fn all_states(sys: &ComponentSystem) -> Vec<State> {
    let mut out: Vec<State> = vec![Vec::new()];
    for c in sys.components() {
        let mut next = Vec::new();
        for s in &out {
            for l in &c.behavior.locations {
                let mut t = s.clone();
                t.push(l.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Enumerates the whole product, finds the reachable part by rounds of
/// relaxation and classifies every reachable state.
pub fn naive_analyze(sys: &ComponentSystem) -> NaiveVerdict {
    let comps = sys.components();
    let every = all_states(sys);
    let mut v = NaiveVerdict::default();
    v.distance.insert(comps.iter().map(|c| c.behavior.initial.clone()).collect(), 0);
    let mut round = 0;
    loop {
        let mut added = Vec::new();
        for s in &every {
            if v.distance.get(s) != Some(&round) {
                continue;
            }
            for step in naive_steps(sys, s) {
                let t = apply(s, &step);
                if !v.distance.contains_key(&t) {
                    added.push(t);
                }
            }
        }
        if added.is_empty() {
            break;
        }
        round += 1;
        for t in added {
            v.distance.entry(t).or_insert(round);
        }
    }
    for s in v.distance.keys() {
        let terminal = comps
            .iter()
            .enumerate()
            .all(|(i, c)| c.behavior.edges.iter().all(|e| e.source != s[i]));
        let base = naive_steps_unrestricted(sys, s);
        let sup = naive_suppressed(sys, &base);
        let restricted = base.iter().filter(|st| st.moves.iter().all(|(i, l, _)| !sup[*i].contains(l))).count();
        if terminal {
            v.terminal.insert(s.clone());
        } else if restricted == 0 {
            v.deadlocks.insert(s.clone());
        }
        for (i, c) in comps.iter().enumerate() {
            for e in c.behavior.edges.iter().filter(|e| e.source == s[i]) {
                if e.label.kind != LabelKind::CallOut || sup[i].contains(&e.label) {
                    continue;
                }
                let Some(t) = e.label.target.as_deref() else { continue };
                let Some(j) = comps.iter().position(|d| d.name == t) else { continue };
                let receiver = &comps[j].behavior;
                if !declares(receiver, &e.label.name) {
                    continue;
                }
                if observable_edges(receiver, &s[j], &e.label.name).next().is_none() {
                    v.incompatibilities
                        .insert((s.clone(), c.name.clone(), e.label.clone(), comps[j].name.clone()));
                }
            }
        }
    }
    v
}

/// Replays a reported trace with the naive semantics; returns the state it
/// ends in, or a description of the first step that does not fire.
pub fn naive_replay(sys: &ComponentSystem, trace: &[TraceStep]) -> Result<State, String> {
    let comps = sys.components();
    let mut s: State = comps.iter().map(|c| c.behavior.initial.clone()).collect();
    for (n, step) in trace.iter().enumerate() {
        let mut wanted: Vec<(String, String)> = step.moves.iter().map(|m| (m.component.clone(), m.to.clone())).collect();
        wanted.sort();
        let found = naive_steps(sys, &s).into_iter().find(|c| {
            let mut got: Vec<(String, String)> = c.moves.iter().map(|(i, _, to)| (comps[*i].name.clone(), to.clone())).collect();
            got.sort();
            c.name == step.label && got == wanted
        });
        match found {
            Some(c) => s = apply(&s, &c),
            None => return Err(format!("step {n} ({}) does not fire at {s:?}", step.label)),
        }
    }
    Ok(s)
}

// -------------------------------------------------------------------- OSGi

/// Objects a step may touch besides the actor's own invocation, as
/// `(bundle, Some(object))`, or `(bundle, None)` for a whole bundle.
fn partners(before_def: &SystemDef, before: &SystemState, step: &Step) -> BTreeSet<(String, Option<String>)> {
    let mut out = BTreeSet::new();
    let (b, o, id) = (step.bundle(), step.object(), step.call_id());
    let mut removed: Vec<(String, Option<String>)> = Vec::new();
    match step {
        Step::Execute { edge, .. } => {
            let method = &before.active(b, o, id).expect("actor exists").method;
            let e = &before_def.method(b, o, method).expect("method exists").edges[*edge];
            for a in &e.actions {
                match a {
                    Action::Call { bundle, object, .. } => {
                        out.insert((bundle.clone(), Some(object.clone())));
                    }
                    Action::AddBundle { bundle } | Action::RemoveBundle { bundle } => {
                        out.insert((bundle.clone(), None));
                        removed.push((bundle.clone(), None));
                    }
                    Action::CreateObject { object, bundle, .. } | Action::DeleteObject { object, bundle } => {
                        out.insert((bundle.clone(), Some(object.clone())));
                        removed.push((bundle.clone(), Some(object.clone())));
                    }
                }
            }
        }
        Step::Return { .. } => removed.push((b.to_string(), Some(o.to_string()))),
    }
    // callers waiting on the returning method or on a removed unit
    for (cb, co, s) in before.invocations() {
        for c in &s.call_state {
            let hit = removed.iter().any(|(rb, ro)| {
                *rb == c.bundle
                    && match (ro, step) {
                        (Some(ro), Step::Return { .. }) => *ro == c.object && c.call_id == id,
                        (Some(ro), _) => *ro == c.object,
                        (None, _) => true,
                    }
            });
            if hit {
                out.insert((cb.to_string(), Some(co.to_string())));
            }
        }
    }
    out
}

/// Checks one step of the semantics against the blocking, call-id
/// freshness, locality and structural-soundness invariants.
pub fn check_step(
    before_def: &SystemDef,
    before: &SystemState,
    step: &Step,
    after_def: &SystemDef,
    after: &SystemState,
) -> Result<(), String> {
    let (b, o, id) = (step.bundle(), step.object(), step.call_id());
    let actor = before.active(b, o, id).ok_or("actor is not active")?;

    // blocking
    if !actor.call_state.is_empty() {
        return Err(format!("{step} fired while waiting on {:?}", actor.call_state));
    }
    if let Some(a) = after.active(b, o, id) {
        let new_calls = a.call_state.len();
        let made = after.log[before.log.len()..]
            .iter()
            .filter(|e| e.kind == EventKind::Call)
            .count();
        if new_calls != made {
            return Err(format!("{step}: made {made} calls but waits on {new_calls}"));
        }
    }

    // call-id freshness
    let old_ids: BTreeSet<(String, String, u64)> = before
        .invocations()
        .map(|(b, o, s)| (b.to_string(), o.to_string(), s.id))
        .collect();
    let mut seen_ids = BTreeSet::new();
    for (_, _, s) in after.invocations() {
        if !seen_ids.insert(s.id) {
            return Err(format!("call id {} active twice", s.id));
        }
    }
    for (nb, no, s) in after.invocations() {
        if !old_ids.contains(&(nb.to_string(), no.to_string(), s.id)) && s.id < before.next_call_id {
            return Err(format!("{step}: new invocation reuses id {}", s.id));
        }
    }
    if after.next_call_id < before.next_call_id {
        return Err("call-id counter went backwards".into());
    }

    // locality
    let partners = partners(before_def, before, step);
    let is_partner = |bb: &str, oo: &str| {
        partners.contains(&(bb.to_string(), Some(oo.to_string()))) || partners.contains(&(bb.to_string(), None))
    };
    for (bb, objs) in &before.bundles {
        for (oo, states) in objs {
            if is_partner(bb, oo) {
                continue;
            }
            let now = after.bundles.get(bb).and_then(|x| x.get(oo));
            let same = if (bb.as_str(), oo.as_str()) == (b, o) {
                let others = |v: &Vec<behavior_types::osgi::ActiveMethodState>| -> Vec<_> {
                    v.iter().filter(|s| s.id != id).cloned().collect()
                };
                now.map(others) == Some(others(states))
            } else {
                now == Some(states)
            };
            if !same {
                return Err(format!("{step} changed untouched state of {bb}/{oo}"));
            }
        }
    }

    // structural soundness
    after.check_consistent(after_def).map_err(|e| e.to_string())?;
    for (_, _, s) in after.invocations() {
        for c in &s.call_state {
            if c.status == CallStatus::Pending && after.active(&c.bundle, &c.object, c.call_id).is_none() {
                return Err(format!("pending call into vanished {}/{}#{}", c.bundle, c.object, c.call_id));
            }
        }
        if !s.call_state.is_empty() && s.call_state.iter().all(|c| c.status == CallStatus::Returned) {
            return Err("fully returned call state was not cleared".into());
        }
    }
    Ok(())
}

/// Call ids of every `call` event, in log order.
pub fn call_ids(log: &[behavior_types::osgi::TraceEvent]) -> Vec<u64> {
    log.iter()
        .filter(|e| e.kind == EventKind::Call)
        .filter_map(|e| match &e.subject {
            Subject::Method(m) => Some(m.call_id),
            _ => None,
        })
        .collect()
}

/// Runs the deadlock and compatibility checkers on `sys` and compares their
/// verdicts, state counts and traces with the naive enumerator.
pub fn compare_with_oracle(sys: &ComponentSystem) -> Result<(), String> {
    use behavior_types::composition::{check_compatibility, detect_deadlocks};
    let naive = naive_analyze(sys);
    let dead = detect_deadlocks(sys);
    let compat = check_compatibility(sys).map_err(|e| e.to_string())?;
    for v in [&dead, &compat] {
        if !v.complete || v.explored != naive.distance.len() || v.terminal != naive.terminal.len() {
            return Err(format!(
                "explored {} states ({} terminal), oracle reaches {} ({} terminal)",
                v.explored,
                v.terminal,
                naive.distance.len(),
                naive.terminal.len()
            ));
        }
    }
    let got_dead: BTreeSet<State> = dead.deadlocks.iter().map(|s| s.0.clone()).collect();
    if got_dead != naive.deadlocks || got_dead.len() != dead.deadlocks.len() {
        return Err(format!("deadlocks {got_dead:?}, oracle {:?}", naive.deadlocks));
    }
    if !compat.deadlocks.is_empty() || !dead.incompatibilities.is_empty() {
        return Err("a single check reported the other kind of witness".into());
    }
    let got_incompat: BTreeSet<(State, String, Label, String)> = compat
        .incompatibilities
        .iter()
        .map(|i| (i.state.0.clone(), i.sender.clone(), i.label.clone(), i.refuser.clone()))
        .collect();
    if got_incompat != naive.incompatibilities || got_incompat.len() != compat.incompatibilities.len() {
        return Err(format!("incompatibilities {got_incompat:?}, oracle {:?}", naive.incompatibilities));
    }
    for v in [&dead, &compat] {
        for t in &v.traces {
            let end = naive_replay(sys, &t.trace)?;
            if end != t.state.0 {
                return Err(format!("trace for {} ends in {end:?}", t.state));
            }
            if t.trace.len() != naive.distance[&end] {
                return Err(format!("trace for {} is not a shortest one", t.state));
            }
        }
        if v.traces.len() != v.bad_states().len() {
            return Err("not every reported state has exactly one trace".into());
        }
    }
    Ok(())
}
