mod common;

use std::collections::BTreeSet;

use behavior_types::automaton::{
    complete, equals, minimize, normalize, project, refines, validate, BehavioralType, Edge, Label, ProjectionMode,
    OUTGOING_CALLS,
};
use behavior_types::model_io::{load, save, ModelDocument, Payload};
use common::first_disagreement;
use proptest::prelude::*;

fn label(i: usize) -> Label {
    match i {
        0 => Label::call_in("x0"),
        1 => Label::call_out("x1", "peer"),
        _ => Label::internal("x2"),
    }
}

fn loc(i: usize) -> String {
    format!("s{i}")
}

/// Any automaton: possibly nondeterministic, incomplete or with
/// unreachable locations.
fn arb_type() -> impl Strategy<Value = BehavioralType> {
    (1usize..=6, 1usize..=3, prop::collection::vec((0usize..6, 0usize..3, 0usize..6), 0..16)).prop_map(
        |(n, k, edges)| {
            let mut bt = BehavioralType::new(OUTGOING_CALLS, loc(0));
            for i in 1..n {
                bt.add_location(loc(i));
            }
            for i in 0..k {
                bt.alphabet.insert(label(i));
            }
            for (s, l, d) in edges {
                bt.edges.insert(Edge::new(loc(s % n), label(l % k), loc(d % n)));
            }
            bt
        },
    )
}

/// A deterministic complete automaton, sometimes with an absorbing error
/// location.
fn arb_dfa() -> impl Strategy<Value = BehavioralType> {
    (1usize..=6, 1usize..=3, prop::collection::vec(0usize..6, 18), any::<bool>(), 1usize..6).prop_map(
        |(n, k, table, with_error, err)| {
            let error = (with_error && n > 1).then(|| err % n).filter(|e| *e != 0);
            let mut bt = BehavioralType::new(OUTGOING_CALLS, loc(0));
            for i in 1..n {
                bt.add_location(loc(i));
            }
            for i in 0..k {
                bt.alphabet.insert(label(i));
            }
            for s in 0..n {
                for l in 0..k {
                    let d = if Some(s) == error { s } else { table[s * 3 + l] % n };
                    bt.edges.insert(Edge::new(loc(s), label(l), loc(d)));
                }
            }
            bt.error_location = error.map(loc);
            bt
        },
    )
}

/// `bt` with every location renamed through `perm`.
fn renamed(bt: &BehavioralType, perm: &[usize]) -> BehavioralType {
    let idx = |l: &str| l[1..].parse::<usize>().unwrap();
    let r = |l: &str| format!("r{}", perm[idx(l) % perm.len()]);
    let mut out = bt.clone();
    out.locations = bt.locations.iter().map(|l| r(l)).collect();
    out.initial = r(&bt.initial);
    out.edges = bt.edges.iter().map(|e| Edge::new(r(&e.source), e.label.clone(), r(&e.destination))).collect();
    out.error_location = bt.error_location.as_deref().map(r);
    out
}

fn kinds(bt: &BehavioralType) -> Vec<String> {
    let mut v: Vec<String> = validate(bt).iter().map(|v| format!("{:?}/{:?}", v.severity, v.kind)).collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn normalize_is_idempotent(bt in arb_type()) {
        let once = normalize(&bt);
        prop_assert_eq!(&normalize(&once), &once);
        let doc = |b: &BehavioralType| save(&ModelDocument::new(Payload::BehavioralType(b.clone())));
        prop_assert_eq!(doc(&normalize(&once)), doc(&once));
    }

    #[test]
    fn normalize_preserves_violations(bt in arb_type()) {
        prop_assert_eq!(kinds(&normalize(&bt)), kinds(&bt));
    }

    #[test]
    fn normalize_forgets_location_names(bt in arb_dfa(), seed in any::<u64>()) {
        let mut perm: Vec<usize> = (0..6).collect();
        let mut s = seed;
        for i in (1..perm.len()).rev() {
            perm.swap(i, (s % (i as u64 + 1)) as usize);
            s /= i as u64 + 1;
        }
        prop_assert_eq!(normalize(&renamed(&bt, &perm)), normalize(&bt));
    }

    #[test]
    fn minimize_preserves_word_classification(bt in arb_dfa()) {
        let m = minimize(&bt).unwrap();
        prop_assert!(m.locations.len() <= bt.locations.len());
        prop_assert!(m.is_deterministic() && m.is_complete());
        let (diff, _) = first_disagreement(&bt, &m, 2 * bt.locations.len());
        prop_assert!(diff.is_none(), "disagree on {:?}", diff);
    }

    #[test]
    fn minimize_is_idempotent(bt in arb_dfa()) {
        let m = minimize(&bt).unwrap();
        prop_assert_eq!(&minimize(&m).unwrap(), &m);
    }

    #[test]
    fn minimized_equivalent_automata_coincide(bt in arb_dfa(), seed in 0usize..720) {
        let mut perm: Vec<usize> = (0..6).collect();
        let mut s = seed;
        for i in (1..perm.len()).rev() {
            perm.swap(i, s % (i + 1));
            s /= i + 1;
        }
        prop_assert_eq!(minimize(&renamed(&bt, &perm)).unwrap(), minimize(&bt).unwrap());
    }

    #[test]
    fn complete_is_idempotent(bt in arb_type()) {
        let full: BTreeSet<Label> = (0..3).map(label).collect();
        let once = complete(&bt, &full).unwrap();
        prop_assert!(once.is_complete());
        let twice = complete(&once, &full).unwrap();
        prop_assert!(equals(&once, &twice, false).equal);
    }

    #[test]
    fn equality_is_an_equivalence(a in arb_type(), b in arb_type(), c in arb_type()) {
        prop_assert!(equals(&a, &a, true).equal);
        let ab = equals(&a, &b, false).equal;
        prop_assert_eq!(ab, equals(&b, &a, false).equal);
        if ab && equals(&b, &c, false).equal {
            prop_assert!(equals(&a, &c, false).equal);
        }
    }

    #[test]
    fn renaming_matters_only_with_names(bt in arb_type()) {
        let perm = [5, 4, 3, 2, 1, 0];
        let r = renamed(&bt, &perm);
        let loose = equals(&bt, &r, false);
        prop_assert!(loose.equal);
        prop_assert_eq!(loose.mapping.len(), bt.locations.len());
        for e in &bt.edges {
            let (s, d) = (&loose.mapping[&e.source], &loose.mapping[&e.destination]);
            prop_assert!(r.edges.iter().any(|f| &f.source == s && &f.destination == d && f.label == e.label));
        }
        prop_assert!(!equals(&bt, &r, true).equal);
    }

    #[test]
    fn full_projection_keeps_the_reachable_part(bt in arb_type()) {
        let p = project(&bt, &bt.alphabet, ProjectionMode::Delete).unwrap();
        prop_assert!(equals(&p, &bt.restrict_to_reachable(), true).equal);
    }

    #[test]
    fn refinement_is_reflexive(bt in arb_type()) {
        prop_assume!(bt.is_deterministic());
        prop_assert!(refines(&bt, &bt, None).unwrap().equal);
    }

    #[test]
    fn model_files_round_trip(bt in arb_type(), note in proptest::option::of("[a-z ]{0,12}")) {
        let mut doc = ModelDocument::new(Payload::BehavioralType(bt));
        doc.note = note;
        let text = save(&doc);
        let back = load(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(save(&back), text);
    }
}

#[test]
fn word_oracle_catches_a_wrong_merge() {
    // s0 -x0-> s1 (error); merging s1 into s0 changes the classification of "x0"
    let mut bt = BehavioralType::new(OUTGOING_CALLS, "s0")
        .with_edge("s0", label(0), "s1")
        .with_edge("s1", label(0), "s1");
    bt.error_location = Some("s1".into());
    let merged = BehavioralType::new(OUTGOING_CALLS, "s0").with_edge("s0", label(0), "s0");
    let (diff, checked) = first_disagreement(&bt, &merged, 2);
    assert_eq!(diff, Some(vec!["x0".to_string()]));
    assert_eq!(checked, 2);
}
