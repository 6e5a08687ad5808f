use std::collections::BTreeSet;

use super::{AutomatonError, BehavioralType, Edge, Label};

/// What happens to edges whose label is dropped by [`project`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMode {
    /// Remove the edge.
    Delete,
    /// Keep the edge but relabel it with the silent label.
    Tau,
}

/// Restricts `bt` to the labels in `keep`, then prunes locations that are no
/// longer reachable.
pub fn project(
    bt: &BehavioralType,
    keep: &BTreeSet<Label>,
    mode: ProjectionMode,
) -> Result<BehavioralType, AutomatonError> {
    let stray: Vec<String> = keep
        .iter()
        .filter(|l| !bt.alphabet.contains(*l))
        .map(|l| l.name.clone())
        .collect();
    if !stray.is_empty() {
        return Err(AutomatonError::KeepNotSubset(stray));
    }

    let dropped = bt.alphabet.iter().any(|l| !keep.contains(l));
    let mut out = bt.clone();
    out.alphabet = bt
        .alphabet
        .iter()
        .filter(|l| keep.contains(*l))
        .cloned()
        .collect();
    out.edges = match mode {
        ProjectionMode::Delete => bt
            .edges
            .iter()
            .filter(|e| keep.contains(&e.label))
            .cloned()
            .collect(),
        ProjectionMode::Tau => bt
            .edges
            .iter()
            .map(|e| {
                if keep.contains(&e.label) {
                    e.clone()
                } else {
                    Edge::new(e.source.clone(), Label::tau(), e.destination.clone())
                }
            })
            .collect(),
    };
    if mode == ProjectionMode::Tau && dropped {
        out.alphabet.insert(Label::tau());
    }
    Ok(out.restrict_to_reachable())
}
