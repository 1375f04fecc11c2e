use std::collections::{BTreeSet, VecDeque};

use proptest::prelude::*;

use stonesep_core::cfg::{Grammar, Symbol};
use stonesep_core::corpus::builtin_corpus;
use stonesep_core::parikh::{brute_force_parikh, member, parikh_image};
use stonesep_core::words::Vector;

/// Parikh vectors of derivable words up to `max_len`, by breadth-first
/// leftmost derivation on sentential forms. Independent of the normal form.
fn derivation_oracle(g: &Grammar, max_len: usize) -> BTreeSet<Vec<u64>> {
    let axes: Vec<char> = g.terminals().iter().copied().collect();
    let slack = 2 * max_len + 4;
    let mut seen = BTreeSet::new();
    let mut out = BTreeSet::new();
    let mut queue = VecDeque::from([vec![Symbol::N(g.start())]]);
    while let Some(form) = queue.pop_front() {
        let terminals = form.iter().filter(|s| matches!(s, Symbol::T(_))).count();
        if terminals > max_len || form.len() > slack {
            continue;
        }
        let Some(pos) = form.iter().position(|s| matches!(s, Symbol::N(_))) else {
            let mut v = vec![0u64; axes.len()];
            for s in &form {
                if let Symbol::T(c) = s {
                    v[axes.iter().position(|a| a == c).unwrap()] += 1;
                }
            }
            out.insert(v);
            continue;
        };
        let Symbol::N(a) = form[pos] else { unreachable!() };
        for p in g.productions().iter().filter(|p| p.lhs == a) {
            let mut next = form[..pos].to_vec();
            next.extend(p.rhs.iter().cloned());
            next.extend(form[pos + 1..].iter().cloned());
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    out
}

#[test]
fn brute_force_matches_derivations_on_the_corpus() {
    for e in builtin_corpus() {
        let dp = brute_force_parikh(&e.grammar, 7).unwrap();
        let deriv = derivation_oracle(&e.grammar, 7);
        assert_eq!(dp, deriv, "{}", e.name);
    }
}

#[test]
fn image_members_reconstruct_and_non_members_are_outside_the_oracle() {
    for e in builtin_corpus() {
        let s = parikh_image(&e.grammar).unwrap();
        let oracle = brute_force_parikh(&e.grammar, 10).unwrap();
        for v in &oracle {
            let target = Vector::from_u64s(v);
            let d = member(&s, &target).unwrap().unwrap_or_else(|| panic!("{}: {v:?} missing", e.name));
            assert!(d.verify(&s, &target));
        }
    }
}

#[test]
fn empty_grammar_has_empty_image() {
    let corpus = builtin_corpus();
    let empty = &corpus.iter().find(|e| e.name == "empty").unwrap().grammar;
    assert!(parikh_image(empty).unwrap().is_empty());
    assert!(brute_force_parikh(empty, 10).unwrap().is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Large vectors: the image of a^i b c^i type grammars is decided by
    /// arithmetic, so membership must match the closed form.
    #[test]
    fn diagonal_grammar_membership_matches_closed_form(i in 0u64..5000, b in 0u64..3, j in 0u64..5000) {
        let corpus = builtin_corpus();
        let g = &corpus.iter().find(|e| e.name == "even_diagonal").unwrap().grammar;
        let s = parikh_image(g).unwrap();
        let v = Vector::from_u64s(&[i, b, j]);
        let expected = i == j && b == 1 && i % 2 == 0;
        prop_assert_eq!(member(&s, &v).unwrap().is_some(), expected);
    }

    #[test]
    fn divisibility_membership_matches_closed_form(i in 0u64..100_000, j in 0u64..100_000) {
        let corpus = builtin_corpus();
        let g = &corpus.iter().find(|e| e.name == "divisibility").unwrap().grammar;
        let s = parikh_image(g).unwrap();
        let v = Vector::from_u64s(&[i, j]);
        prop_assert_eq!(member(&s, &v).unwrap().is_some(), j % 2 == 0);
    }
}
