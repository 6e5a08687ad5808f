use std::collections::BTreeMap;

use super::{normalize, AutomatonError, BehavioralType, Edge, Label};

/// Minimizes a deterministic, complete automaton by partition refinement.
///
/// Non-error locations accept, the error location rejects. Unreachable
/// locations are dropped first; the result is renumbered by [`normalize`].
pub fn minimize(bt: &BehavioralType) -> Result<BehavioralType, AutomatonError> {
    if let Some((location, label)) = bt.nondeterminism() {
        return Err(AutomatonError::NotDeterministic {
            location,
            label: label.name,
        });
    }
    if let Some((location, label)) = bt.incompleteness() {
        return Err(AutomatonError::NotComplete {
            location,
            label: label.name,
        });
    }

    let reach = bt.restrict_to_reachable();
    let locs = &reach.locations;
    let labels: Vec<&Label> = reach.alphabet.iter().collect();
    let pos: BTreeMap<&str, usize> = locs.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let label_pos: BTreeMap<&Label, usize> = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();

    let mut delta = vec![vec![0usize; labels.len()]; locs.len()];
    for e in &reach.edges {
        delta[pos[e.source.as_str()]][label_pos[&e.label]] = pos[e.destination.as_str()];
    }

    // Moore refinement: split blocks by the blocks their successors land in
    // until the block count stops growing.
    let mut block: Vec<usize> = locs
        .iter()
        .map(|l| usize::from(reach.is_error(l)))
        .collect();
    let mut count = count_blocks(&block);
    loop {
        let mut signatures: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
        let sigs: Vec<(usize, Vec<usize>)> = (0..locs.len())
            .map(|i| (block[i], delta[i].iter().map(|&d| block[d]).collect()))
            .collect();
        for sig in &sigs {
            let n = signatures.len();
            signatures.entry(sig.clone()).or_insert(n);
        }
        let next: Vec<usize> = sigs.iter().map(|s| signatures[s]).collect();
        let next_count = signatures.len();
        block = next;
        if next_count == count {
            break;
        }
        count = next_count;
    }

    let name = |b: usize| format!("m{b}");
    let mut out = BehavioralType {
        aspect: reach.aspect.clone(),
        alphabet: reach.alphabet.clone(),
        locations: Vec::new(),
        initial: name(block[pos[reach.initial.as_str()]]),
        edges: Default::default(),
        error_location: reach
            .error_location
            .as_ref()
            .map(|e| name(block[pos[e.as_str()]])),
    };
    for (i, _) in locs.iter().enumerate() {
        out.add_location(name(block[i]));
        for (j, label) in labels.iter().enumerate() {
            out.edges.insert(Edge::new(
                name(block[i]),
                (*label).clone(),
                name(block[delta[i][j]]),
            ));
        }
    }
    Ok(normalize(&out))
}

fn count_blocks(block: &[usize]) -> usize {
    let mut seen: Vec<usize> = block.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}
