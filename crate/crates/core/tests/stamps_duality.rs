use proptest::prelude::*;

use stonesep_core::regular::Dfa;
use stonesep_core::stamps::{
    m_closure, morphism_exists, pseudo_ineq_unary, random_family, random_minimal_dfa, recognized_upsets, seeded_rng,
    syntactic_order_two_sided, syntactic_stamp, LanguageFamily,
};
use stonesep_core::words::{Alphabet, Word};

fn ab() -> Alphabet {
    Alphabet::new("ab".chars()).unwrap()
}

/// Intersection and union of two automata over one alphabet.
fn product(x: &Dfa, y: &Dfa, union: bool) -> Dfa {
    let (nx, ny) = (x.num_states(), y.num_states());
    let k = x.alphabet().len();
    let delta = (0..nx * ny)
        .map(|s| (0..k).map(|a| x.step(s / ny, a) * ny + y.step(s % ny, a)).collect())
        .collect();
    let finals = (0..nx * ny)
        .map(|s| {
            let (p, q) = (x.is_final(s / ny), y.is_final(s % ny));
            if union {
                p || q
            } else {
                p && q
            }
        })
        .collect();
    Dfa::from_parts(x.alphabet().clone(), delta, x.initial() * ny + y.initial(), finals).minimize()
}

/// Brute-force reading of the order: `xuy ∈ L ⟹ xvy ∈ L` for short `x, y`.
fn context_order(d: &Dfa, u: &Word, v: &Word, len: usize) -> bool {
    let words = d.alphabet().words_up_to(len);
    words.iter().all(|x| {
        words.iter().all(|y| !d.accepts(&x.concat(u).concat(y)) || d.accepts(&x.concat(v).concat(y)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn both_order_computations_match_brute_force(seed in 0u64..10_000) {
        let mut rng = seeded_rng(seed);
        let d = random_minimal_dfa(&mut rng, &ab(), 4);
        let words = ab().words_up_to(2);
        for u in &words {
            for v in &words {
                let brute = context_order(&d, u, v, 4);
                prop_assert_eq!(pseudo_ineq_unary(&d, u, v).unwrap(), brute);
                prop_assert_eq!(syntactic_order_two_sided(&d, u, v).unwrap(), brute);
            }
        }
    }

    #[test]
    fn closure_is_a_lattice_containing_the_family(seed in 0u64..10_000) {
        let mut rng = seeded_rng(seed);
        let f = random_family(&mut rng, &ab(), 2, 3);
        let c = m_closure(&f).unwrap();
        prop_assert!(f.is_subfamily_of(&c));
        for x in c.members() {
            for y in c.members() {
                prop_assert!(c.contains(&product(x, y, true)));
                prop_assert!(c.contains(&product(x, y, false)));
            }
        }
        prop_assert!(c.contains(&Dfa::empty_language(ab())) && c.contains(&Dfa::universal(ab())));
    }

    #[test]
    fn morphism_routes_agree(seed in 0u64..10_000) {
        let mut rng = seeded_rng(seed);
        let c = random_family(&mut rng, &ab(), 2, 4);
        let d = random_family(&mut rng, &ab(), 2, 4);
        let r = morphism_exists(&c, &d).unwrap();
        prop_assert_eq!(r.exists, r.missing.is_empty());
        // the closure is recognized by the family's own stamp
        prop_assert!(morphism_exists(&c, &m_closure(&c).unwrap()).unwrap().exists);
    }
}

#[test]
fn upsets_of_a_stamp_recognize_right_quotients() {
    let mut rng = seeded_rng(7);
    for _ in 0..20 {
        let d = random_minimal_dfa(&mut rng, &ab(), 5);
        let s = syntactic_stamp(&d);
        let ups = recognized_upsets(&s);
        assert!(ups.contains(&d.minimize()));
        for w in ab().words_up_to(2) {
            assert!(ups.contains(&d.right_quotient(&w).unwrap().minimize()));
        }
        let family = LanguageFamily::new(ab(), [d.clone()]).unwrap();
        assert!(m_closure(&family).unwrap().is_subfamily_of(&ups));
    }
}
