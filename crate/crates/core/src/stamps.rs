//! Ordered stamps of regular languages: the minimal automaton as a pointed
//! unary algebra ordered by residual inclusion, the languages it recognizes,
//! quotient-closed lattices of languages, and morphisms between stamps.

use std::collections::{BTreeSet, HashMap, VecDeque};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::regular::{AutomatonJson, Dfa, OrderedDfa, RegularError};
use crate::words::{Alphabet, Word};

/// Upper limit on enumerated lattice members.
pub const LATTICE_CAP: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StampError {
    #[error("languages are over different alphabets")]
    AlphabetMismatch,
    #[error("family is empty")]
    EmptyFamily,
    #[error("lattice exceeds {0} members")]
    TooLarge(usize),
    #[error("theorem violation: {0}")]
    TheoremViolation(String),
    #[error(transparent)]
    Regular(#[from] RegularError),
}

/// Minimal automaton with its residual order; the point is the initial
/// state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedStamp {
    pub ordered: OrderedDfa,
}

impl OrderedStamp {
    pub fn dfa(&self) -> &Dfa {
        &self.ordered.dfa
    }

    pub fn size(&self) -> usize {
        self.dfa().num_states()
    }

    pub fn leq(&self, p: usize, q: usize) -> bool {
        self.ordered.leq(p, q)
    }

    pub fn is_upset(&self, set: &[bool]) -> bool {
        (0..self.size()).all(|p| !set[p] || (0..self.size()).all(|q| !self.leq(p, q) || set[q]))
    }

    pub fn to_json(&self) -> AutomatonJson {
        let mut j = self.dfa().to_json();
        j.order = Some(self.ordered.pairs().into_iter().map(|(p, q)| (format!("q{p}"), format!("q{q}"))).collect());
        j
    }
}

pub fn syntactic_stamp(l: &Dfa) -> OrderedStamp {
    let min = l.minimize();
    let ordered = min.residual_order().expect("minimized automaton");
    OrderedStamp { ordered }
}

/// Finite set of regular languages over one alphabet, each held as its
/// canonical minimal automaton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageFamily {
    alphabet: Alphabet,
    members: Vec<Dfa>,
}

impl LanguageFamily {
    pub fn new(alphabet: Alphabet, members: impl IntoIterator<Item = Dfa>) -> Result<Self, StampError> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for d in members {
            if d.alphabet() != &alphabet {
                return Err(StampError::AlphabetMismatch);
            }
            let m = d.minimize();
            if seen.insert(m.to_text()) {
                out.push(m);
            }
        }
        Ok(LanguageFamily { alphabet, members: out })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn members(&self) -> &[Dfa] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, l: &Dfa) -> bool {
        let m = l.minimize();
        self.members.iter().any(|d| d == &m)
    }

    pub fn is_subfamily_of(&self, other: &LanguageFamily) -> bool {
        self.members.iter().all(|d| other.contains(d))
    }
}

/// Every upset of the stamp order, as the language it recognizes.
pub fn recognized_upsets(s: &OrderedStamp) -> LanguageFamily {
    let n = s.size();
    assert!(n <= 20, "stamp too large to enumerate upsets");
    let mut langs = Vec::new();
    for mask in 0u32..(1u32 << n) {
        let set: Vec<bool> = (0..n).map(|q| mask & (1 << q) != 0).collect();
        if s.is_upset(&set) {
            langs.push(s.dfa().with_finals(set));
        }
    }
    LanguageFamily::new(s.dfa().alphabet().clone(), langs).expect("common alphabet")
}

/// Reachable product of several automata; state tuples in discovery order.
struct Product {
    states: Vec<Vec<usize>>,
    delta: Vec<Vec<usize>>,
}

fn product(alphabet: &Alphabet, dfas: &[Dfa]) -> Product {
    let start: Vec<usize> = dfas.iter().map(Dfa::initial).collect();
    let mut index: HashMap<Vec<usize>, usize> = HashMap::from([(start.clone(), 0)]);
    let mut states = vec![start];
    let mut delta: Vec<Vec<usize>> = Vec::new();
    let mut head = 0;
    while head < states.len() {
        let cur = states[head].clone();
        let mut row = Vec::new();
        for a in 0..alphabet.len() {
            let next: Vec<usize> = cur.iter().zip(dfas).map(|(&q, d)| d.step(q, a)).collect();
            let id = *index.entry(next.clone()).or_insert_with(|| {
                states.push(next);
                states.len() - 1
            });
            row.push(id);
        }
        delta.push(row);
        head += 1;
    }
    Product { states, delta }
}

fn product_dfa(alphabet: &Alphabet, p: &Product, finals: Vec<bool>) -> Dfa {
    Dfa::from_parts(alphabet.clone(), p.delta.clone(), 0, finals)
}

/// The smallest bounded lattice containing the family and closed under
/// right quotients `L ↦ Lw⁻¹`.
pub fn m_closure(f: &LanguageFamily) -> Result<LanguageFamily, StampError> {
    let alphabet = f.alphabet().clone();
    let dfas: Vec<Dfa> = f.members().to_vec();
    let prod = product(&alphabet, &dfas);
    let n = prod.states.len();
    // generators: final sets of every quotient of every member, on the product
    let mut gens: BTreeSet<Vec<bool>> = BTreeSet::new();
    for (i, d) in dfas.iter().enumerate() {
        let lifted = product_dfa(&alphabet, &prod, prod.states.iter().map(|s| d.is_final(s[i])).collect());
        gens.extend(lifted.quotient_final_sets());
    }
    // the generated lattice is the set of upsets of x ≼ y ⟺ every generator
    // holding x holds y
    let leq = |x: usize, y: usize| gens.iter().all(|g| !g[x] || g[y]);
    let mut classes: Vec<usize> = Vec::new(); // representatives
    let mut class_of = vec![0; n];
    for x in 0..n {
        match classes.iter().position(|&r| leq(x, r) && leq(r, x)) {
            Some(c) => class_of[x] = c,
            None => {
                class_of[x] = classes.len();
                classes.push(x);
            }
        }
    }
    let k = classes.len();
    let above: Vec<Vec<usize>> =
        (0..k).map(|c| (0..k).filter(|&d| leq(classes[c], classes[d])).collect()).collect();
    let mut upsets: BTreeSet<Vec<bool>> = BTreeSet::new();
    // closing upsets by union, starting from principal ones
    let principal: Vec<Vec<bool>> = (0..k).map(|c| (0..k).map(|d| above[c].contains(&d)).collect()).collect();
    let mut queue: VecDeque<Vec<bool>> = VecDeque::from([vec![false; k]]);
    upsets.insert(vec![false; k]);
    while let Some(u) = queue.pop_front() {
        for p in &principal {
            let joined: Vec<bool> = u.iter().zip(p).map(|(a, b)| *a || *b).collect();
            if upsets.insert(joined.clone()) {
                if upsets.len() > LATTICE_CAP {
                    return Err(StampError::TooLarge(LATTICE_CAP));
                }
                queue.push_back(joined);
            }
        }
    }
    let mut members = vec![Dfa::empty_language(alphabet.clone()), Dfa::universal(alphabet.clone())];
    for u in upsets {
        let finals = (0..n).map(|x| u[class_of[x]]).collect();
        members.push(product_dfa(&alphabet, &prod, finals));
    }
    LanguageFamily::new(alphabet, members)
}

/// Stamp of a family: reachable product of the members' minimal automata,
/// ordered by componentwise residual inclusion.
#[derive(Debug, Clone)]
pub struct FamilyStamp {
    pub alphabet: Alphabet,
    pub delta: Vec<Vec<usize>>,
    pub leq: Vec<Vec<bool>>,
}

pub fn family_stamp(f: &LanguageFamily) -> FamilyStamp {
    let orders: Vec<OrderedDfa> =
        f.members().iter().map(|d| d.residual_order().expect("canonical minimal member")).collect();
    let prod = product(f.alphabet(), f.members());
    let n = prod.states.len();
    let leq = (0..n)
        .map(|x| {
            (0..n)
                .map(|y| orders.iter().enumerate().all(|(i, o)| o.leq(prod.states[x][i], prod.states[y][i])))
                .collect()
        })
        .collect();
    FamilyStamp { alphabet: f.alphabet().clone(), delta: prod.delta, leq }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorphismReport {
    pub exists: bool,
    /// Image of each state of the source stamp, when a morphism exists.
    pub mapping: Option<Vec<usize>>,
    /// Members of the target family missing from the closure of the source.
    pub missing: Vec<usize>,
}

/// Whether the stamp of `c` maps onto the stamp of `d`, decided both by
/// closure membership and by building the state map directly.
pub fn morphism_exists(c: &LanguageFamily, d: &LanguageFamily) -> Result<MorphismReport, StampError> {
    if c.alphabet() != d.alphabet() {
        return Err(StampError::AlphabetMismatch);
    }
    let closure = m_closure(c)?;
    let missing: Vec<usize> = (0..d.len()).filter(|&i| !closure.contains(&d.members()[i])).collect();
    let lattice_says = missing.is_empty();

    let sc = family_stamp(c);
    let sd = family_stamp(d);
    let mut map: Vec<Option<usize>> = vec![None; sc.delta.len()];
    map[0] = Some(0);
    let mut queue = VecDeque::from([0usize]);
    let mut well_defined = true;
    'bfs: while let Some(x) = queue.pop_front() {
        let y = map[x].expect("mapped");
        for a in 0..sc.alphabet.len() {
            let (x2, y2) = (sc.delta[x][a], sd.delta[y][a]);
            match map[x2] {
                None => {
                    map[x2] = Some(y2);
                    queue.push_back(x2);
                }
                Some(z) if z != y2 => {
                    well_defined = false;
                    break 'bfs;
                }
                Some(_) => {}
            }
        }
    }
    let direct_says = well_defined && {
        let m: Vec<usize> = map.iter().map(|v| v.expect("reachable")).collect();
        (0..m.len()).all(|x| (0..m.len()).all(|x2| !sc.leq[x][x2] || sd.leq[m[x]][m[x2]]))
    };
    if lattice_says != direct_says {
        return Err(StampError::TheoremViolation(format!(
            "closure membership says {lattice_says}, direct construction says {direct_says}"
        )));
    }
    let mapping = direct_says.then(|| map.into_iter().map(|v| v.expect("reachable")).collect());
    Ok(MorphismReport { exists: lattice_says, mapping, missing })
}

/// `∀x: η(xu) ≤ η(xv)` in the residual order of the minimal automaton.
pub fn pseudo_ineq_unary(l: &Dfa, u: &Word, v: &Word) -> Result<bool, RegularError> {
    let min = l.minimize();
    min.alphabet().check_word(u)?;
    min.alphabet().check_word(v)?;
    let ord = min.residual_order()?;
    Ok((0..min.num_states()).all(|p| {
        let pu = min.run_from(p, u).expect("checked word");
        let pv = min.run_from(p, v).expect("checked word");
        ord.leq(pu, pv)
    }))
}

/// Transition monoid of an automaton: every map `q ↦ q·y`, identity first.
pub fn transition_monoid(d: &Dfa) -> Vec<Vec<usize>> {
    let n = d.num_states();
    let id: Vec<usize> = (0..n).collect();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::from([id.clone()]);
    let mut out = vec![id.clone()];
    let mut queue = VecDeque::from([id]);
    while let Some(f) = queue.pop_front() {
        for a in 0..d.alphabet().len() {
            let g: Vec<usize> = f.iter().map(|&q| d.step(q, a)).collect();
            if seen.insert(g.clone()) {
                out.push(g.clone());
                queue.push_back(g);
            }
        }
    }
    out
}

/// `∀x, y: xuy ∈ L ⟹ xvy ∈ L`, with `x` ranging over states and `y` over
/// the transition monoid.
pub fn syntactic_order_two_sided(l: &Dfa, u: &Word, v: &Word) -> Result<bool, RegularError> {
    let min = l.minimize();
    min.alphabet().check_word(u)?;
    min.alphabet().check_word(v)?;
    let monoid = transition_monoid(&min);
    let accepted_after = |q: usize| -> Vec<bool> { monoid.iter().map(|t| min.is_final(t[q])).collect() };
    Ok((0..min.num_states()).all(|p| {
        let a = accepted_after(min.run_from(p, u).expect("checked word"));
        let b = accepted_after(min.run_from(p, v).expect("checked word"));
        a.iter().zip(&b).all(|(x, y)| !x || *y)
    }))
}

/// Seeded random minimal automaton with at most `max_states` states.
pub fn random_minimal_dfa(rng: &mut ChaCha8Rng, alphabet: &Alphabet, max_states: usize) -> Dfa {
    let n = rng.gen_range(1..=max_states);
    let delta = (0..n).map(|_| (0..alphabet.len()).map(|_| rng.gen_range(0..n)).collect()).collect();
    let finals = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    Dfa::from_parts(alphabet.clone(), delta, 0, finals).minimize()
}

pub fn random_family(rng: &mut ChaCha8Rng, alphabet: &Alphabet, max_members: usize, max_states: usize) -> LanguageFamily {
    let k = rng.gen_range(1..=max_members);
    let members: Vec<Dfa> = (0..k).map(|_| random_minimal_dfa(rng, alphabet, max_states)).collect();
    LanguageFamily::new(alphabet.clone(), members).expect("common alphabet")
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Alphabet {
        Alphabet::new("ab".chars()).unwrap()
    }

    fn contains_a() -> Dfa {
        Dfa::from_parts(ab(), vec![vec![1, 0], vec![1, 1]], 0, vec![false, true])
    }

    fn ab_star() -> Dfa {
        Dfa::from_parts(ab(), vec![vec![1, 2], vec![2, 0], vec![2, 2]], 0, vec![true, false, false])
    }

    fn even_length() -> Dfa {
        Dfa::from_parts(ab(), vec![vec![1, 1], vec![0, 0]], 0, vec![true, false])
    }

    fn w(s: &str) -> Word {
        Word::from(s)
    }

    #[test]
    fn stamp_examples() {
        let s = syntactic_stamp(&contains_a());
        assert_eq!(s.size(), 2);
        let (lo, hi) = if s.dfa().is_final(0) { (1, 0) } else { (0, 1) };
        assert!(s.leq(lo, hi) && !s.leq(hi, lo));
        assert_eq!(syntactic_stamp(&Dfa::empty_language(ab())).size(), 1);
        let s = syntactic_stamp(&ab_star());
        assert_eq!(s.size(), 3);
        let sink = (0..3).find(|&q| (0..2).all(|a| s.dfa().step(q, a) == q) && !s.dfa().is_final(q)).unwrap();
        assert!((0..3).all(|q| s.leq(sink, q)));
        let json = s.to_json();
        assert!(json.order.unwrap().len() >= 3);
    }

    #[test]
    fn upset_counts() {
        let chain = recognized_upsets(&syntactic_stamp(&contains_a()));
        assert_eq!(chain.len(), 3);
        assert!(chain.contains(&contains_a()));
        assert!(chain.contains(&Dfa::universal(ab())));
        assert!(chain.contains(&Dfa::empty_language(ab())));
        assert_eq!(recognized_upsets(&syntactic_stamp(&even_length())).len(), 4);
        assert_eq!(recognized_upsets(&syntactic_stamp(&Dfa::universal(ab()))).len(), 2);
    }

    #[test]
    fn closure_examples() {
        let f = LanguageFamily::new(ab(), [ab_star()]).unwrap();
        let c = m_closure(&f).unwrap();
        let quotient = ab_star().right_quotient(&w("b")).unwrap();
        assert!(c.contains(&quotient));
        assert!(c.contains(&ab_star()));
        // (ab)* ∪ (ab)*a is a lattice combination
        let (a, b) = (ab_star(), quotient.minimize());
        let union = Dfa::from_parts(
            ab(),
            vec![vec![1, 2], vec![2, 0], vec![2, 2]],
            0,
            (0..3).map(|q| a.is_final(q) || b.is_final(q)).collect(),
        );
        assert!(c.contains(&union));
        for single in [Dfa::empty_language(ab()), Dfa::universal(ab())] {
            let c = m_closure(&LanguageFamily::new(ab(), [single]).unwrap()).unwrap();
            assert_eq!(c.len(), 2);
        }
    }

    #[test]
    fn closure_is_a_closure_operator() {
        let mut rng = seeded_rng(7);
        for _ in 0..15 {
            let f = random_family(&mut rng, &ab(), 2, 4);
            let g = random_family(&mut rng, &ab(), 1, 3);
            let cf = m_closure(&f).unwrap();
            assert!(f.is_subfamily_of(&cf));
            assert_eq!(m_closure(&cf).unwrap().len(), cf.len());
            let union = LanguageFamily::new(ab(), f.members().iter().chain(g.members()).cloned()).unwrap();
            assert!(cf.is_subfamily_of(&m_closure(&union).unwrap()));
            for l in cf.members() {
                for q in ["a", "b", "ab"] {
                    assert!(cf.contains(&l.right_quotient(&w(q)).unwrap()));
                }
            }
        }
    }

    #[test]
    fn morphism_examples() {
        let l = ab_star();
        let c = LanguageFamily::new(ab(), [l.clone()]).unwrap();
        let d = LanguageFamily::new(ab(), [l.right_quotient(&w("b")).unwrap()]).unwrap();
        assert!(morphism_exists(&c, &d).unwrap().exists);
        let d = LanguageFamily::new(ab(), [contains_a()]).unwrap();
        let r = morphism_exists(&c, &d).unwrap();
        assert!(!r.exists);
        assert_eq!(r.missing, vec![0]);
        let empty = LanguageFamily::new(ab(), [Dfa::empty_language(ab())]).unwrap();
        assert!(!morphism_exists(&empty, &d).unwrap().exists);
        assert!(morphism_exists(&d, &empty).unwrap().exists);
    }

    #[test]
    fn order_examples() {
        let l = contains_a();
        assert!(pseudo_ineq_unary(&l, &w("b"), &w("a")).unwrap());
        assert!(!pseudo_ineq_unary(&l, &w("a"), &w("b")).unwrap());
        assert!(syntactic_order_two_sided(&l, &w("b"), &w("a")).unwrap());
        assert!(!syntactic_order_two_sided(&l, &w("a"), &w("b")).unwrap());
        for u in ab().words_up_to(3) {
            assert!(pseudo_ineq_unary(&ab_star(), &u, &u).unwrap());
            assert!(syntactic_order_two_sided(&ab_star(), &u, &u).unwrap());
        }
        assert!(pseudo_ineq_unary(&ab_star(), &w("ab"), &Word::empty()).unwrap());
        assert!(syntactic_order_two_sided(&ab_star(), &w("ab"), &Word::empty()).unwrap());
    }

    /// Brute-force two-sided order over contexts up to length 3.
    fn context_order(l: &Dfa, u: &Word, v: &Word) -> bool {
        let ctx = ab().words_up_to(3);
        ctx.iter().all(|x| ctx.iter().all(|y| !l.accepts(&x.concat(u).concat(y)) || l.accepts(&x.concat(v).concat(y))))
    }

    #[test]
    fn orders_agree_with_context_search() {
        let mut rng = seeded_rng(3);
        for _ in 0..30 {
            // at most 3 states, so contexts up to length 3 reach every state
            // and separate every pair of residuals
            let l = random_minimal_dfa(&mut rng, &ab(), 3);
            for u in ab().words_up_to(2) {
                for v in ab().words_up_to(2) {
                    let two = syntactic_order_two_sided(&l, &u, &v).unwrap();
                    assert_eq!(two, pseudo_ineq_unary(&l, &u, &v).unwrap());
                    assert_eq!(two, context_order(&l, &u, &v), "{u} {v}");
                }
            }
        }
    }

    #[test]
    fn language_is_upset_and_order_is_stable() {
        let mut rng = seeded_rng(11);
        let words = ab().words_up_to(3);
        for _ in 0..10 {
            let l = random_minimal_dfa(&mut rng, &ab(), 5);
            for u in &words {
                for v in &words {
                    if !syntactic_order_two_sided(&l, u, v).unwrap() {
                        continue;
                    }
                    if l.accepts(u) {
                        assert!(l.accepts(v));
                    }
                    for x in ["", "a", "ba"] {
                        for y in ["", "b", "ab"] {
                            let (xu, xv) = (w(x).concat(u).concat(&w(y)), w(x).concat(v).concat(&w(y)));
                            assert!(syntactic_order_two_sided(&l, &xu, &xv).unwrap());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn random_generators_are_seeded() {
        let a = random_minimal_dfa(&mut seeded_rng(0), &ab(), 6);
        let b = random_minimal_dfa(&mut seeded_rng(0), &ab(), 6);
        assert_eq!(a, b);
        assert!(a.num_states() <= 6 && a.is_minimal());
    }
}
