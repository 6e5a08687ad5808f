use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{
    complementary_aspect, complete, minimize, normalize, normalize_with_renaming, project,
    AutomatonError, BehavioralType, Label, ProjectionMode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DifferenceReason {
    /// Only the left operand has an edge with the label here.
    MissingOnRight,
    /// Only the right operand has an edge with the label here.
    MissingOnLeft,
    /// Both have the label here but lead to different locations.
    DestinationMismatch,
    AlphabetMismatch,
    LocationCountMismatch,
    ErrorLocationMismatch,
    /// Structure agrees but the location names do not.
    LocationNames,
}

/// Where two automata first disagree, in left/right location names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Difference {
    pub left: String,
    pub right: String,
    pub label: Option<Label>,
    pub reason: DifferenceReason,
}

impl fmt::Display for Difference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.reason {
            DifferenceReason::MissingOnRight => "only the left side has",
            DifferenceReason::MissingOnLeft => "only the right side has",
            DifferenceReason::DestinationMismatch => "the sides disagree on the target of",
            DifferenceReason::AlphabetMismatch => "the alphabets disagree on",
            DifferenceReason::LocationCountMismatch => "the location counts differ",
            DifferenceReason::ErrorLocationMismatch => "the error locations differ",
            DifferenceReason::LocationNames => "the location names differ",
        };
        write!(f, "at ({}, {}) {}", self.left, self.right, what)?;
        if let Some(l) = &self.label {
            write!(f, " {}", l.name)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EqualityResult {
    pub equal: bool,
    /// Left location -> right location, for the locations that correspond.
    pub mapping: BTreeMap<String, String>,
    pub first_difference: Option<Difference>,
}

/// Brings `b` into the call direction of `a` when the two describe opposite
/// ends of the same protocol.
fn align(a: &BehavioralType, b: &BehavioralType) -> BehavioralType {
    if complementary_aspect(&a.aspect) == Some(b.aspect.as_str()) {
        b.mirrored()
    } else {
        b.clone()
    }
}

/// Compares two types up to location renaming.
///
/// The two are equal when their normal forms agree on alphabet, edges and
/// initial location. With `compare_location_names` the correspondence must
/// also be the identity. A type describing incoming calls is compared with
/// one describing outgoing calls by mirroring the right operand first.
pub fn equals(a: &BehavioralType, b: &BehavioralType, compare_location_names: bool) -> EqualityResult {
    let b = align(a, b);
    let (na, ra) = normalize_with_renaming(a);
    let (nb, rb) = normalize_with_renaming(&b);
    let back_a: BTreeMap<&str, &str> = ra.iter().map(|(k, v)| (v.as_str(), k.as_str())).collect();
    let back_b: BTreeMap<&str, &str> = rb.iter().map(|(k, v)| (v.as_str(), k.as_str())).collect();
    let orig = |back: &BTreeMap<&str, &str>, q: &str| back.get(q).map(|s| s.to_string()).unwrap_or_else(|| q.to_string());
    let diff = |q: &str, label: Option<Label>, reason| Difference {
        left: orig(&back_a, q),
        right: orig(&back_b, q),
        label,
        reason,
    };

    let mut first = structural_difference(&na, &nb).map(|(q, label, reason)| diff(&q, label, reason));

    let mut mapping = BTreeMap::new();
    if first.is_some() {
        // equally labeled branches and unreachable parts make the numbering
        // depend on names
        if let Some(m) = isomorphism(a, &b) {
            first = None;
            mapping = m;
        }
    } else if first.is_none() {
        for loc in &a.locations {
            if let Some(right) = back_b.get(ra[loc].as_str()) {
                mapping.insert(loc.clone(), right.to_string());
            }
        }
    }
    if first.is_none()
        && compare_location_names {
            if let Some((l, r)) = mapping.iter().find(|(l, r)| l != r) {
                first = Some(Difference {
                    left: l.clone(),
                    right: r.clone(),
                    label: None,
                    reason: DifferenceReason::LocationNames,
                });
            }
        }
    EqualityResult {
        equal: first.is_none(),
        mapping,
        first_difference: first,
    }
}

/// A bijection between the locations of `a` and `b` that maps initial to
/// initial, error to error and edges onto edges, found by backtracking.
fn isomorphism(a: &BehavioralType, b: &BehavioralType) -> Option<BTreeMap<String, String>> {
    if a.alphabet != b.alphabet || a.locations.len() != b.locations.len() || a.edges.len() != b.edges.len() {
        return None;
    }
    fn signature<'a>(bt: &'a BehavioralType, l: &str) -> (Vec<(&'a Label, bool)>, bool, bool) {
        let mut out: Vec<(&Label, bool)> = bt.edges.iter().filter(|e| e.source == l).map(|e| (&e.label, true)).collect();
        out.extend(bt.edges.iter().filter(|e| e.destination == l).map(|e| (&e.label, false)));
        out.sort();
        (out, bt.initial == l, bt.error_location.as_deref() == Some(l))
    }
    // breadth-first order keeps neighbours close, so clashes show up early
    let rank = normalize_with_renaming(a).1;
    let mut order: Vec<&str> = a.locations.iter().map(String::as_str).collect();
    order.sort_by_key(|l| rank[*l][1..].parse::<usize>().unwrap_or(usize::MAX));
    let candidates: Vec<Vec<&str>> = order
        .iter()
        .map(|x| {
            let sx = signature(a, x);
            let mut ys: Vec<&str> = b.locations.iter().map(String::as_str).filter(|y| signature(b, y) == sx).collect();
            // the identity is tried first, so it is found whenever it works
            ys.sort_by_key(|y| y != x);
            ys
        })
        .collect();

    fn consistent(a: &BehavioralType, b: &BehavioralType, f: &BTreeMap<&str, &str>, x: &str, y: &str) -> bool {
        let image = |l: &str| if l == x { Some(y) } else { f.get(l).copied() };
        a.edges.iter().filter(|e| e.source == x || e.destination == x).all(|e| {
            match (image(&e.source), image(&e.destination)) {
                (Some(s), Some(d)) => b.edges.iter().any(|g| g.source == s && g.destination == d && g.label == e.label),
                _ => true,
            }
        })
    }

    fn search<'a>(
        a: &BehavioralType,
        b: &BehavioralType,
        order: &[&'a str],
        candidates: &[Vec<&'a str>],
        f: &mut BTreeMap<&'a str, &'a str>,
        used: &mut BTreeSet<&'a str>,
    ) -> bool {
        let i = f.len();
        if i == order.len() {
            return true;
        }
        for &y in &candidates[i] {
            if used.contains(y) || !consistent(a, b, f, order[i], y) {
                continue;
            }
            f.insert(order[i], y);
            used.insert(y);
            if search(a, b, order, candidates, f, used) {
                return true;
            }
            f.remove(order[i]);
            used.remove(y);
        }
        false
    }

    let mut f = BTreeMap::new();
    search(a, b, &order, &candidates, &mut f, &mut BTreeSet::new())
        .then(|| f.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect())
}

/// Walks both normal forms location by location in numbering order and
/// reports the first disagreement, in normalized names.
fn structural_difference(
    a: &BehavioralType,
    b: &BehavioralType,
) -> Option<(String, Option<Label>, DifferenceReason)> {
    let out_a = a.outgoing_map();
    let out_b = b.outgoing_map();
    let count = a.locations.len().max(b.locations.len());
    for i in 0..count {
        let q = format!("q{i}");
        let ea: BTreeMap<&Label, Vec<&str>> = group(out_a.get(q.as_str()));
        let eb: BTreeMap<&Label, Vec<&str>> = group(out_b.get(q.as_str()));
        let labels: BTreeSet<&Label> = ea.keys().chain(eb.keys()).copied().collect();
        for label in labels {
            let reason = match (ea.get(label), eb.get(label)) {
                (Some(_), None) => DifferenceReason::MissingOnRight,
                (None, Some(_)) => DifferenceReason::MissingOnLeft,
                (Some(x), Some(y)) if x != y => DifferenceReason::DestinationMismatch,
                _ => continue,
            };
            return Some((q, Some(label.clone()), reason));
        }
    }
    let initial = "q0".to_string();
    if let Some(label) = a.alphabet.symmetric_difference(&b.alphabet).next() {
        return Some((initial, Some(label.clone()), DifferenceReason::AlphabetMismatch));
    }
    if a.locations != b.locations {
        return Some((initial, None, DifferenceReason::LocationCountMismatch));
    }
    if a.error_location != b.error_location {
        return Some((initial, None, DifferenceReason::ErrorLocationMismatch));
    }
    None
}

fn group<'a>(edges: Option<&Vec<&'a super::Edge>>) -> BTreeMap<&'a Label, Vec<&'a str>> {
    let mut m: BTreeMap<&Label, Vec<&str>> = BTreeMap::new();
    for e in edges.into_iter().flatten() {
        m.entry(&e.label).or_default().push(e.destination.as_str());
    }
    m
}

/// Checks whether `implementation` and `specification` agree on the labels in
/// `considered` (default: the union of both alphabets).
///
/// Each side is projected onto the considered labels, completed over them,
/// minimized and normalized before the two are compared.
pub fn refines(
    implementation: &BehavioralType,
    specification: &BehavioralType,
    considered: Option<&BTreeSet<Label>>,
) -> Result<EqualityResult, AutomatonError> {
    let spec = align(implementation, specification);
    let mirrored = spec.aspect != specification.aspect;
    let union: BTreeSet<Label> = implementation.alphabet.union(&spec.alphabet).cloned().collect();
    let considered = match considered {
        Some(c) => {
            // labels named as the specification declares them follow its mirroring
            let lift = |l: &Label| {
                if mirrored && !union.contains(l) && specification.alphabet.contains(l) {
                    l.mirrored()
                } else {
                    l.clone()
                }
            };
            let lifted: BTreeSet<Label> = c.iter().map(lift).collect();
            let stray: Vec<String> = lifted.iter().filter(|l| !union.contains(*l)).map(|l| l.name.clone()).collect();
            if !stray.is_empty() {
                return Err(AutomatonError::ConsideredNotInAlphabets(stray));
            }
            lifted
        }
        None => union,
    };
    let pipeline = |bt: &BehavioralType| -> Result<BehavioralType, AutomatonError> {
        let keep: BTreeSet<Label> = considered.intersection(&bt.alphabet).cloned().collect();
        let projected = project(bt, &keep, ProjectionMode::Delete)?;
        let completed = complete(&projected, &considered)?;
        Ok(normalize(&minimize(&completed)?))
    };
    Ok(equals(&pipeline(implementation)?, &pipeline(&spec)?, false))
}
