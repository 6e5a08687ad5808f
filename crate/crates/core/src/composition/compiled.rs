use std::collections::{BTreeMap, BTreeSet, HashMap};

use itertools::Itertools;

use super::{ComponentSystem, CompositionError, JointTransition, Move, ProductState};
use crate::automaton::Label;

/// Packed product state: one location index per component.
pub(crate) type PackedState = Vec<u32>;

/// A joint transition over indices: `(component, label index, destination)`
/// per participant, plus the interned label name.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct Joint {
    pub name: usize,
    pub moves: Vec<(usize, usize, u32)>,
}

pub(crate) struct CompiledComponent {
    pub locations: Vec<String>,
    loc_index: HashMap<String, u32>,
    pub initial: u32,
    pub labels: Vec<Label>,
    /// label index -> interned name
    pub label_name: Vec<usize>,
    /// location -> (label index, destination), sorted by label then destination
    pub out: Vec<Vec<(usize, u32)>>,
    pub alphabet_names: BTreeSet<usize>,
}

/// Index-based form of a [`ComponentSystem`] used by the explorers.
pub(crate) struct Compiled<'a> {
    pub system: &'a ComponentSystem,
    pub names: Vec<String>,
    pub comps: Vec<CompiledComponent>,
    /// name -> participating components when the name is shared
    pub shared: Vec<Option<Vec<usize>>>,
    /// component -> (lower label, higher label)
    pub rules: Vec<Vec<(usize, usize)>>,
}

impl<'a> Compiled<'a> {
    pub fn new(system: &'a ComponentSystem) -> Self {
        let names: Vec<String> = system
            .components
            .iter()
            .flat_map(|c| c.behavior.alphabet.iter().map(|l| l.name.clone()))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let name_index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();

        let mut comps = Vec::new();
        for c in &system.components {
            let bt = &c.behavior;
            let locations = bt.locations.clone();
            let loc_index: HashMap<String, u32> =
                locations.iter().enumerate().map(|(i, l)| (l.clone(), i as u32)).collect();
            let labels: Vec<Label> = bt.alphabet.iter().cloned().collect();
            let label_index: BTreeMap<&Label, usize> = labels.iter().enumerate().map(|(i, l)| (l, i)).collect();
            let label_name = labels.iter().map(|l| name_index[l.name.as_str()]).collect();
            let mut out = vec![Vec::new(); locations.len()];
            for e in &bt.edges {
                out[loc_index[&e.source] as usize].push((label_index[&e.label], loc_index[&e.destination]));
            }
            let alphabet_names = bt
                .alphabet
                .iter()
                .filter(|l| l.is_observable())
                .map(|l| name_index[l.name.as_str()])
                .collect();
            comps.push(CompiledComponent {
                initial: loc_index[&bt.initial],
                locations,
                loc_index,
                labels,
                label_name,
                out,
                alphabet_names,
            });
        }

        let shared = (0..names.len())
            .map(|n| {
                let parts: Vec<usize> = comps
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.alphabet_names.contains(&n))
                    .map(|(i, _)| i)
                    .collect();
                (parts.len() >= 2).then_some(parts)
            })
            .collect();

        let mut rules = vec![Vec::new(); comps.len()];
        for r in &system.priorities {
            if let Some(ci) = system.components.iter().position(|c| c.name == r.component) {
                let labels = &comps[ci].labels;
                let lower = labels.iter().position(|l| *l == r.lower);
                let higher = labels.iter().position(|l| *l == r.higher);
                if let (Some(lo), Some(hi)) = (lower, higher) {
                    rules[ci].push((lo, hi));
                }
            }
        }

        Compiled {
            system,
            names,
            comps,
            shared,
            rules,
        }
    }

    pub fn initial(&self) -> PackedState {
        self.comps.iter().map(|c| c.initial).collect()
    }

    pub fn encode(&self, state: &ProductState) -> Result<PackedState, CompositionError> {
        if state.0.len() != self.comps.len() {
            return Err(CompositionError::StateArityMismatch {
                expected: self.comps.len(),
                found: state.0.len(),
            });
        }
        state
            .0
            .iter()
            .zip(&self.comps)
            .zip(&self.system.components)
            .map(|((loc, c), comp)| {
                c.loc_index.get(loc).copied().ok_or_else(|| CompositionError::UnknownLocation {
                    component: comp.name.clone(),
                    location: loc.clone(),
                })
            })
            .collect()
    }

    pub fn decode(&self, s: &[u32]) -> ProductState {
        ProductState(
            s.iter()
                .zip(&self.comps)
                .map(|(&l, c)| c.locations[l as usize].clone())
                .collect(),
        )
    }

    pub fn decode_joint(&self, s: &[u32], j: &Joint) -> JointTransition {
        JointTransition {
            label: self.names[j.name].clone(),
            moves: j
                .moves
                .iter()
                .map(|&(c, l, to)| Move {
                    component: self.system.components[c].name.clone(),
                    label: self.comps[c].labels[l].clone(),
                    from: self.comps[c].locations[s[c] as usize].clone(),
                    to: self.comps[c].locations[to as usize].clone(),
                })
                .collect(),
        }
    }

    pub fn successor(&self, s: &[u32], j: &Joint) -> PackedState {
        let mut next = s.to_vec();
        for &(c, _, to) in &j.moves {
            next[c] = to;
        }
        next
    }

    /// Whether no component has any outgoing edge at all.
    pub fn is_terminal(&self, s: &[u32]) -> bool {
        s.iter().zip(&self.comps).all(|(&l, c)| c.out[l as usize].is_empty())
    }

    /// Enabled joint transitions before priorities, ordered by label name,
    /// then component order, then edge order.
    pub fn enabled_unrestricted(&self, s: &[u32]) -> Vec<Joint> {
        let mut offered: BTreeSet<usize> = BTreeSet::new();
        for (c, &l) in self.comps.iter().zip(s) {
            for &(label, _) in &c.out[l as usize] {
                offered.insert(c.label_name[label]);
            }
        }
        let mut out = Vec::new();
        for name in offered {
            match &self.shared[name] {
                Some(parts) => {
                    let choices: Vec<Vec<(usize, usize, u32)>> = parts
                        .iter()
                        .map(|&c| self.edges_named(c, s[c], name).filter(|&(c, l, _)| self.observable(c, l)).collect())
                        .collect();
                    if choices.iter().all(|c| !c.is_empty()) {
                        for moves in choices.into_iter().multi_cartesian_product() {
                            out.push(Joint { name, moves });
                        }
                    }
                    // internal edges reusing a shared name stay local
                    for (c, &at) in s.iter().enumerate() {
                        for mv in self.edges_named(c, at, name).filter(|&(c, l, _)| !self.observable(c, l)) {
                            out.push(Joint { name, moves: vec![mv] });
                        }
                    }
                }
                None => {
                    for (c, &at) in s.iter().enumerate() {
                        for mv in self.edges_named(c, at, name) {
                            out.push(Joint { name, moves: vec![mv] });
                        }
                    }
                }
            }
        }
        out
    }

    fn observable(&self, c: usize, label: usize) -> bool {
        self.comps[c].labels[label].is_observable()
    }

    fn edges_named(&self, c: usize, loc: u32, name: usize) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        let comp = &self.comps[c];
        comp.out[loc as usize]
            .iter()
            .filter(move |(l, _)| comp.label_name[*l] == name)
            .map(move |&(l, to)| (c, l, to))
    }

    /// Per component, the labels suppressed at `s` because a higher-priority
    /// label of the same component can fire.
    pub fn suppressed(&self, base: &[Joint]) -> Vec<BTreeSet<usize>> {
        let mut fireable = vec![BTreeSet::new(); self.comps.len()];
        for j in base {
            for &(c, l, _) in &j.moves {
                fireable[c].insert(l);
            }
        }
        self.rules
            .iter()
            .enumerate()
            .map(|(c, rules)| {
                rules
                    .iter()
                    .filter(|(_, hi)| fireable[c].contains(hi))
                    .map(|(lo, _)| *lo)
                    .collect()
            })
            .collect()
    }

    pub fn restrict(&self, base: Vec<Joint>, suppressed: &[BTreeSet<usize>]) -> Vec<Joint> {
        if suppressed.iter().all(BTreeSet::is_empty) {
            return base;
        }
        base.into_iter()
            .filter(|j| j.moves.iter().all(|&(c, l, _)| !suppressed[c].contains(&l)))
            .collect()
    }

    pub fn enabled(&self, s: &[u32]) -> Vec<Joint> {
        let base = self.enabled_unrestricted(s);
        if self.rules.iter().all(Vec::is_empty) {
            return base;
        }
        let sup = self.suppressed(&base);
        self.restrict(base, &sup)
    }
}
