use std::collections::{BTreeMap, BTreeSet};

use super::{AutomatonError, BehavioralType, Edge, Label};

const ERROR_LOCATION: &str = "__error";

/// Makes `bt` total over `full_alphabet` by routing every missing
/// (location, label) pair to an error sink.
///
/// An existing error location is reused; otherwise a fresh one named
/// `__error` is added even if nothing ends up pointing at it.
pub fn complete(
    bt: &BehavioralType,
    full_alphabet: &BTreeSet<Label>,
) -> Result<BehavioralType, AutomatonError> {
    let missing: Vec<String> = bt
        .alphabet
        .iter()
        .filter(|l| !full_alphabet.contains(*l))
        .map(|l| l.name.clone())
        .collect();
    if !missing.is_empty() {
        return Err(AutomatonError::AlphabetTooSmall(missing));
    }

    let mut out = bt.clone();
    for label in full_alphabet {
        if !out.alphabet.contains(label) {
            out.alphabet.insert(label.clone());
        }
    }
    let error = match &bt.error_location {
        Some(e) => e.clone(),
        None => {
            let mut name = ERROR_LOCATION.to_string();
            let mut n = 1;
            while bt.has_location(&name) {
                name = format!("{ERROR_LOCATION}{n}");
                n += 1;
            }
            name
        }
    };
    out.add_location(error.clone());
    out.error_location = Some(error.clone());

    let mut present: BTreeMap<&str, BTreeSet<&Label>> = BTreeMap::new();
    for e in &bt.edges {
        present.entry(e.source.as_str()).or_default().insert(&e.label);
    }
    let mut added = Vec::new();
    for loc in &out.locations {
        let have = present.get(loc.as_str());
        for label in &out.alphabet {
            if !have.is_some_and(|h| h.contains(label)) {
                added.push(Edge::new(loc.clone(), label.clone(), error.clone()));
            }
        }
    }
    out.edges.extend(added);
    Ok(out)
}
