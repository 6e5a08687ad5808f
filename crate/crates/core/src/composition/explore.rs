use std::collections::hash_map::Entry;
use std::collections::HashMap;

use super::compiled::{Joint, PackedState};
use super::{Compiled, ComponentSystem, JointTransition, ProductState};

/// Exploration stops adding states beyond this many unless told otherwise.
pub const DEFAULT_STATE_BOUND: usize = 1_000_000;

pub(crate) struct Exploration {
    pub states: Vec<PackedState>,
    /// BFS tree: predecessor and the joint transition taken from it.
    pub parent: Vec<Option<(usize, Joint)>>,
    pub transitions: Vec<(usize, Joint, usize)>,
    pub complete: bool,
}

impl Exploration {
    /// Joint transitions leading from the initial state to `index`.
    pub fn path_to(&self, index: usize) -> Vec<(usize, Joint)> {
        let mut path = Vec::new();
        let mut cur = index;
        while let Some((p, j)) = &self.parent[cur] {
            path.push((*p, j.clone()));
            cur = *p;
        }
        path.reverse();
        path
    }
}

/// Breadth-first search over the product. `visit` sees each state once,
/// with its restricted enabled set, in discovery order.
pub(crate) fn explore(
    compiled: &Compiled<'_>,
    bound: usize,
    keep_transitions: bool,
    mut visit: impl FnMut(usize, &[u32], &[Joint]),
) -> Exploration {
    let mut index: HashMap<PackedState, usize> = HashMap::new();
    let init = compiled.initial();
    let mut ex = Exploration {
        states: vec![init.clone()],
        parent: vec![None],
        transitions: Vec::new(),
        complete: true,
    };
    index.insert(init, 0);
    let mut next = 0;
    while next < ex.states.len() {
        let s = ex.states[next].clone();
        let enabled = compiled.enabled(&s);
        visit(next, &s, &enabled);
        for j in enabled {
            let succ = compiled.successor(&s, &j);
            let target = match index.entry(succ) {
                Entry::Occupied(o) => Some(*o.get()),
                Entry::Vacant(v) => {
                    if ex.states.len() >= bound {
                        ex.complete = false;
                        None
                    } else {
                        let i = ex.states.len();
                        ex.states.push(v.key().clone());
                        ex.parent.push(Some((next, j.clone())));
                        v.insert(i);
                        Some(i)
                    }
                }
            };
            if keep_transitions {
                if let Some(t) = target {
                    ex.transitions.push((next, j, t));
                }
            }
        }
        next += 1;
    }
    ex
}

/// Reachable product states and the transitions among them.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub states: Vec<ProductState>,
    /// (source index, transition, target index)
    pub transitions: Vec<(usize, JointTransition, usize)>,
    /// False when the bound cut the search short.
    pub complete: bool,
}

/// Explores `system` breadth-first from its initial state. States are
/// listed in discovery order (components in declared order, labels
/// lexicographic).
pub fn reachable(system: &ComponentSystem, bound: Option<usize>) -> StateSpace {
    let compiled = Compiled::new(system);
    let ex = explore(&compiled, bound.unwrap_or(DEFAULT_STATE_BOUND), true, |_, _, _| {});
    StateSpace {
        states: ex.states.iter().map(|s| compiled.decode(s)).collect(),
        transitions: ex
            .transitions
            .iter()
            .map(|(f, j, t)| (*f, compiled.decode_joint(&ex.states[*f], j), *t))
            .collect(),
        complete: ex.complete,
    }
}
