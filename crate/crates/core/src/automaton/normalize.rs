use std::cmp::Ordering;
use std::collections::{BTreeMap, VecDeque};

use super::{BehavioralType, Edge};

/// Renumbers locations `q0, q1, ...` breadth-first from the initial
/// location and lists them in that order. Edges come out sorted by
/// (source, label name, label kind, destination).
///
/// Locations unreachable from the initial one are numbered afterwards,
/// taking declared order for the roots of each further search. The result
/// depends only on the structure for deterministic automata whose
/// locations are all reachable; otherwise the order of equally labeled
/// edges and of the further roots follows the original names.
pub fn normalize(bt: &BehavioralType) -> BehavioralType {
    normalize_with_renaming(bt).0
}

/// Orders ids by length, then bytes, so that `q9 < q10` and renumbered
/// automata keep their visit order on a second pass.
fn id_order(a: &str, b: &str) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

pub(crate) fn normalize_with_renaming(
    bt: &BehavioralType,
) -> (BehavioralType, BTreeMap<String, String>) {
    let mut out: BTreeMap<&str, Vec<&Edge>> = BTreeMap::new();
    for e in &bt.edges {
        out.entry(e.source.as_str()).or_default().push(e);
    }
    for edges in out.values_mut() {
        edges.sort_by(|x, y| {
            x.label
                .cmp(&y.label)
                .then_with(|| id_order(&x.destination, &y.destination))
        });
    }

    let mut rename: BTreeMap<String, String> = BTreeMap::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut visit = |root: &str, rename: &mut BTreeMap<String, String>| {
        if rename.contains_key(root) {
            return;
        }
        let mut queue = VecDeque::new();
        let n = rename.len();
        rename.insert(root.to_string(), format!("q{n}"));
        index.insert(root.to_string(), n);
        queue.push_back(root.to_string());
        while let Some(loc) = queue.pop_front() {
            for e in out.get(loc.as_str()).into_iter().flatten() {
                if !rename.contains_key(&e.destination) {
                    let n = rename.len();
                    rename.insert(e.destination.clone(), format!("q{n}"));
                    index.insert(e.destination.clone(), n);
                    queue.push_back(e.destination.clone());
                }
            }
        }
    };

    visit(&bt.initial, &mut rename);
    for loc in &bt.locations {
        visit(loc, &mut rename);
    }
    if let Some(err) = &bt.error_location {
        visit(err, &mut rename);
    }
    for e in &bt.edges {
        visit(&e.source, &mut rename);
    }

    let mut normalized = bt.rename_locations(&rename);
    let mut order: Vec<(usize, String)> = bt
        .locations
        .iter()
        .map(|l| (index[l], rename[l].clone()))
        .collect();
    order.sort_by_key(|(i, _)| *i);
    normalized.locations = order.into_iter().map(|(_, l)| l).collect();
    (normalized, rename)
}
