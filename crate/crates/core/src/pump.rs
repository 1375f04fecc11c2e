//! Pumping engines over semilinear selector sets.
//!
//! A selector is the set of loop counts `(i, j)` for which `u vⁱ w xʲ y`
//! lies in a context-free language. It is computed by intersecting the
//! grammar with a marked pattern automaton and taking the Parikh image over
//! the two loop marks, so every engine works on explicit linear sets and
//! emits decompositions that can be checked with plain arithmetic.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfg::{transition_index, CfgError, Grammar};
use crate::parikh::{member, parikh_image_on, parikh_image_with, Decomposition, ParikhError, SemilinearSet};
use crate::regular::{block_pattern_nfa, Context, Nfa, RegularError, Segment};
use crate::words::{big_string, big_string_opt, Alphabet, Vector, WordError};

pub const CERTIFICATE_VERSION: u32 = 1;
pub const DEFAULT_N_MAX: u32 = 500;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PumpError {
    #[error("n = {n} is below the bound n0 = {n0}; refusing to pump")]
    BelowBound { n: u32, n0: BigUint },
    #[error("premise fails: {0}")]
    PremiseFails(String),
    #[error("theorem violation: {0}")]
    TheoremViolation(String),
    #[error("{0}")]
    Parikh(#[from] ParikhError),
    #[error("{0}")]
    Cfg(#[from] CfgError),
    #[error("{0}")]
    Regular(#[from] RegularError),
    #[error("{0}")]
    Word(#[from] WordError),
}

pub fn factorial(n: u32) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// Loop-count set of a context together with its provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectorSet {
    pub set: SemilinearSet,
    pub context: Context,
    pub grammar_hash: String,
}

impl SelectorSet {
    pub fn contains(&self, i: &BigUint, j: &BigUint) -> Result<bool, ParikhError> {
        self.set.contains(&Vector::new(vec![i.clone(), j.clone()]))
    }
}

fn pattern_alphabet(g: &Grammar, segments: &[Segment]) -> Result<Alphabet, WordError> {
    let mut letters = g.terminals().clone();
    for s in segments {
        match s {
            Segment::Fixed(w) | Segment::Loop(w) => letters.extend(w.letters()),
            Segment::Star(cs) => letters.extend(cs),
        }
    }
    if letters.is_empty() {
        letters.insert('a');
    }
    Alphabet::sorted_from(letters)
}

/// Set of loop-count vectors `(c₁, …, c_k)` for which the block pattern,
/// with loop `i` repeated `cᵢ` times, spells a word of `L(g)`.
pub fn block_selector(g: &Grammar, segments: &[Segment], labels: Vec<String>) -> Result<SemilinearSet, PumpError> {
    let alphabet = pattern_alphabet(g, segments)?;
    let marked = block_pattern_nfa(alphabet, segments)?;
    assert_eq!(marked.mark_count, labels.len(), "one label per loop");
    let inter = g.intersect_marked(&marked);
    Ok(parikh_image_with(&inter, labels, |c| transition_index(c).and_then(|t| marked.mark_of(t)))?)
}

pub fn selector(g: &Grammar, ctx: &Context) -> Result<SelectorSet, PumpError> {
    if ctx.v.is_empty() || ctx.x.is_empty() {
        return Err(RegularError::DegenerateContext.into());
    }
    let set = block_selector(g, &ctx.segments(), vec!["i".into(), "j".into()])?;
    Ok(SelectorSet { set, context: ctx.clone(), grammar_hash: g.content_hash() })
}

/// `(m + 1)²` for the expression's largest coordinate `m`.
pub fn pumping_bound_diag(s: &SemilinearSet) -> Result<BigUint, ParikhError> {
    let m = s.max_coordinate()?;
    Ok((&m + 1u8) * (&m + 1u8))
}

/// `(d − 1)·m + 1` for a `d`-dimensional expression; `m + 1` in the plane.
pub fn pumping_bound_square(s: &SemilinearSet) -> Result<BigUint, ParikhError> {
    let m = s.max_coordinate()?;
    let lead = s.dim().saturating_sub(1).max(1);
    Ok(m * lead + 1u8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpKind {
    Diagonal,
    Cumulative,
    Square,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "case")]
pub enum PumpCase {
    /// A period `(r, r)`; `k = r`.
    DiagonalPeriod { period: usize },
    /// Periods `(q, r)` with `q > r` and `(q', r')` with `q' < r'`;
    /// `k = q r' − q' r`.
    OppositePeriods { first: usize, second: usize },
    /// A period vanishing on every coordinate but the last.
    ZeroPrefixPeriod { period: usize },
    /// The premise vector is absent, so nothing needs pumping.
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(with = "big_string")]
    pub p: BigUint,
    pub target: Vector,
    pub decomposition: Decomposition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PumpCertificate {
    pub version: u32,
    pub kind: PumpKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grammar_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<Context>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub letters: Option<String>,
    pub n: u32,
    #[serde(with = "big_string_opt")]
    pub m: Option<BigUint>,
    #[serde(with = "big_string_opt")]
    pub n0: Option<BigUint>,
    pub expression: SemilinearSet,
    pub expression_hash: String,
    #[serde(flatten)]
    pub case: PumpCase,
    #[serde(with = "big_string_opt")]
    pub k: Option<BigUint>,
    pub premise: Vector,
    pub witness: Option<Decomposition>,
    pub instances: Vec<Instance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doubling: Option<Instance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub increment: Option<Instance>,
}

fn diag(x: &BigUint) -> Vector {
    Vector::new(vec![x.clone(), x.clone()])
}

fn apply(witness: &Decomposition, delta: &[BigUint], p: &BigUint) -> Decomposition {
    Decomposition {
        component: witness.component,
        coefficients: witness.coefficients.iter().zip(delta).map(|(c, d)| c + d * p).collect(),
    }
}

/// Picks the pumping direction: coefficient increments per unit of `p`, the
/// step `k`, and the case taken.
fn diagonal_step(s: &SemilinearSet, witness: &Decomposition) -> Option<(Vec<BigUint>, BigUint, PumpCase)> {
    let periods = &s.components[witness.component].periods;
    let mut delta = vec![BigUint::zero(); periods.len()];
    let diagonal = periods
        .iter()
        .enumerate()
        .filter(|(_, p)| p[0] == p[1] && !p[0].is_zero())
        .min_by(|(_, a), (_, b)| a[0].cmp(&b[0]));
    if let Some((idx, p)) = diagonal {
        delta[idx] = BigUint::one();
        return Some((delta, p[0].clone(), PumpCase::DiagonalPeriod { period: idx }));
    }
    for (i, a) in periods.iter().enumerate() {
        if a[0] <= a[1] {
            continue;
        }
        for (i2, b) in periods.iter().enumerate() {
            if b[0] >= b[1] {
                continue;
            }
            let (q, r, q2, r2) = (&a[0], &a[1], &b[0], &b[1]);
            delta[i] = r2 - q2;
            delta[i2] = q - r;
            let k = q * r2 - q2 * r;
            return Some((delta, k, PumpCase::OppositePeriods { first: i, second: i2 }));
        }
    }
    None
}

/// From `(n!, n!) ∈ s` with `n ≥ (m+1)²`, a step `k < n₀` with
/// `(n! + pk, n! + pk) ∈ s` for every `p`; instances `p = 1, 2, 3` attached.
pub fn diagonal_pump(s: &SemilinearSet, n: u32) -> Result<PumpCertificate, PumpError> {
    if s.dim() != 2 {
        return Err(ParikhError::DimensionMismatch { expected: 2, got: s.dim() }.into());
    }
    let m = s.max_coordinate()?;
    let n0 = pumping_bound_diag(s)?;
    if BigUint::from(n) < n0 {
        return Err(PumpError::BelowBound { n, n0 });
    }
    let f = factorial(n);
    let premise = diag(&f);
    let witness = member(s, &premise)?.ok_or_else(|| PumpError::PremiseFails(format!("({f}, {f}) is not in the set")))?;
    let (delta, k, case) = diagonal_step(s, &witness).ok_or_else(|| {
        PumpError::TheoremViolation(format!("no diagonal or opposite periods in component {} at n = {n}", witness.component))
    })?;
    if k >= n0 {
        return Err(PumpError::TheoremViolation(format!("step {k} is not below n0 = {n0}")));
    }
    let mut instances = Vec::new();
    for p in 1u8..=3 {
        let p = BigUint::from(p);
        let target = diag(&(&f + &p * &k));
        let decomposition = apply(&witness, &delta, &p);
        if !decomposition.verify(s, &target) {
            return Err(PumpError::TheoremViolation(format!("pumped instance p = {p} does not reconstruct")));
        }
        if member(s, &target)?.is_none() {
            return Err(PumpError::TheoremViolation(format!("solver rejects pumped instance p = {p}")));
        }
        instances.push(Instance { p, target, decomposition });
    }
    Ok(PumpCertificate {
        version: CERTIFICATE_VERSION,
        kind: PumpKind::Diagonal,
        grammar_hash: None,
        context: None,
        letters: None,
        n,
        m: Some(m),
        n0: Some(n0),
        expression_hash: s.expression_hash(),
        expression: s.clone(),
        case,
        k: Some(k),
        premise,
        witness: Some(witness),
        instances,
        doubling: None,
        increment: None,
    })
}

/// Diagonal pumping on the selector of `ctx`, plus the doubling instance
/// `(2·n!, 2·n!)` reached with `p = n!/k`.
pub fn cumulative_pump(g: &Grammar, ctx: &Context, n: u32) -> Result<PumpCertificate, PumpError> {
    let sel = selector(g, ctx)?;
    cumulative_pump_on(&sel, n)
}

pub fn cumulative_pump_on(sel: &SelectorSet, n: u32) -> Result<PumpCertificate, PumpError> {
    if sel.set.is_empty() {
        return Err(PumpError::PremiseFails(format!("selector of {} is empty", sel.context)));
    }
    let mut cert = diagonal_pump(&sel.set, n)?;
    cert.kind = PumpKind::Cumulative;
    cert.grammar_hash = Some(sel.grammar_hash.clone());
    cert.context = Some(sel.context.clone());
    let f = factorial(n);
    let k = cert.k.clone().expect("diagonal step");
    let (p, rest) = f.div_rem(&k);
    if !rest.is_zero() {
        return Err(PumpError::TheoremViolation(format!("step {k} does not divide {n}!")));
    }
    let witness = cert.witness.as_ref().expect("witness");
    let (delta, _, _) = diagonal_step(&sel.set, witness).expect("step exists");
    let decomposition = apply(witness, &delta, &p);
    let target = diag(&(&f * 2u8));
    if !decomposition.verify(&sel.set, &target) {
        return Err(PumpError::TheoremViolation("doubling instance does not reconstruct".into()));
    }
    if member(&sel.set, &target)?.is_none() {
        return Err(PumpError::TheoremViolation("solver rejects the doubling instance".into()));
    }
    cert.doubling = Some(Instance { p, target, decomposition });
    Ok(cert)
}

/// Parikh image of `L(g) ∩ l₁* ⋯ l_d*` over the letters `l₁ … l_d`.
pub fn letter_pattern_image(g: &Grammar, letters: &[char]) -> Result<SemilinearSet, PumpError> {
    let stars: Vec<Segment> = letters.iter().map(|&c| Segment::Star(vec![c])).collect();
    let alphabet = pattern_alphabet(g, &stars)?;
    let nfa = Nfa::letter_stars(alphabet, letters)?;
    let inter = g.intersect_regular(&nfa, false);
    Ok(parikh_image_on(&inter, letters)?)
}

/// Premise `(n!, …, n!, (n!)²)` for `d` coordinates.
pub fn square_premise(d: usize, n: u32) -> Vector {
    let f = factorial(n);
    let mut v = vec![f.clone(); d - 1];
    v.push(&f * &f);
    Vector::new(v)
}

/// From `(n!, …, n!, (n!)²) ∈ S` with `n ≥ (d−1)·m + 1`, a period vanishing
/// on the leading coordinates whose last entry divides `(n−1)!`, and the
/// adjusted decomposition of `(n!, …, n!, (n!)² + (n−1)!)`.
pub fn square_pump_on(s: &SemilinearSet, n: u32) -> Result<PumpCertificate, PumpError> {
    let d = s.dim();
    if d < 2 {
        return Err(ParikhError::DimensionMismatch { expected: 2, got: d }.into());
    }
    let premise = square_premise(d, n);
    let mut cert = PumpCertificate {
        version: CERTIFICATE_VERSION,
        kind: PumpKind::Square,
        grammar_hash: None,
        context: None,
        letters: Some(s.axes.concat()),
        n,
        m: None,
        n0: None,
        expression_hash: s.expression_hash(),
        expression: s.clone(),
        case: PumpCase::Vacuous,
        k: None,
        premise: premise.clone(),
        witness: None,
        instances: Vec::new(),
        doubling: None,
        increment: None,
    };
    if s.is_empty() {
        return Ok(cert);
    }
    let m = s.max_coordinate()?;
    let n0 = pumping_bound_square(s)?;
    if BigUint::from(n) < n0 {
        return Err(PumpError::BelowBound { n, n0 });
    }
    cert.m = Some(m);
    cert.n0 = Some(n0);
    let Some(witness) = member(s, &premise)? else {
        return Ok(cert);
    };
    let periods = &s.components[witness.component].periods;
    let (idx, q) = periods
        .iter()
        .enumerate()
        .find(|(_, p)| p.entries()[..d - 1].iter().all(Zero::is_zero))
        .map(|(i, p)| (i, p[d - 1].clone()))
        .ok_or_else(|| {
            PumpError::TheoremViolation(format!("no period with zero leading coordinates at n = {n}"))
        })?;
    let g = factorial(n - 1);
    let (steps, rest) = g.div_rem(&q);
    if !rest.is_zero() {
        return Err(PumpError::TheoremViolation(format!("period entry {q} does not divide {}!", n - 1)));
    }
    let mut delta = vec![BigUint::zero(); periods.len()];
    delta[idx] = BigUint::one();
    let decomposition = apply(&witness, &delta, &steps);
    let mut target = premise.clone().into_entries();
    target[d - 1] += &g;
    let target = Vector::new(target);
    if !decomposition.verify(s, &target) {
        return Err(PumpError::TheoremViolation("adjusted decomposition does not reconstruct".into()));
    }
    cert.case = PumpCase::ZeroPrefixPeriod { period: idx };
    cert.k = Some(q);
    cert.witness = Some(witness);
    cert.increment = Some(Instance { p: steps, target, decomposition });
    Ok(cert)
}

pub fn square_pump(g: &Grammar, letters: &[char], n: u32) -> Result<PumpCertificate, PumpError> {
    let s = letter_pattern_image(g, letters)?;
    let mut cert = square_pump_on(&s, n)?;
    cert.grammar_hash = Some(g.content_hash());
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("certificate check failed: {0}")]
pub struct VerifyError(pub String);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), VerifyError> {
    if cond {
        Ok(())
    } else {
        Err(VerifyError(msg()))
    }
}

impl PumpCertificate {
    /// Re-checks every claim from the stored expression and decompositions.
    /// Only the vacuous case calls the membership solver; no Parikh image
    /// is recomputed.
    pub fn verify(&self) -> Result<(), VerifyError> {
        let s = &self.expression;
        check(self.version == CERTIFICATE_VERSION, || format!("unknown version {}", self.version))?;
        check(s.expression_hash() == self.expression_hash, || "expression hash mismatch".into())?;
        let f = factorial(self.n);
        let expected_premise = match self.kind {
            PumpKind::Square => {
                check(s.dim() >= 2, || "square expression needs two axes".into())?;
                square_premise(s.dim(), self.n)
            }
            _ => {
                check(s.dim() == 2, || "diagonal expression needs two axes".into())?;
                diag(&f)
            }
        };
        check(self.premise == expected_premise, || "premise vector mismatch".into())?;
        if !s.is_empty() {
            let m = s.max_coordinate().map_err(|e| VerifyError(e.to_string()))?;
            let n0 = match self.kind {
                PumpKind::Square => pumping_bound_square(s),
                _ => pumping_bound_diag(s),
            }
            .map_err(|e| VerifyError(e.to_string()))?;
            check(self.m.as_ref() == Some(&m), || "stored m mismatch".into())?;
            check(self.n0.as_ref() == Some(&n0), || "stored n0 mismatch".into())?;
            check(BigUint::from(self.n) >= n0, || format!("n = {} is below n0 = {n0}", self.n))?;
        }
        if self.case == PumpCase::Vacuous {
            check(self.kind == PumpKind::Square, || "only square certificates may be vacuous".into())?;
            let absent = member(s, &self.premise).map_err(|e| VerifyError(e.to_string()))?.is_none();
            return check(absent, || "vacuous certificate but the premise is a member".into());
        }
        let witness = self.witness.as_ref().ok_or_else(|| VerifyError("missing witness".into()))?;
        check(witness.verify(s, &self.premise), || "witness does not reconstruct the premise".into())?;
        let k = self.k.as_ref().ok_or_else(|| VerifyError("missing k".into()))?;
        let periods = &s.components[witness.component].periods;
        let period = |i: usize| periods.get(i).ok_or_else(|| VerifyError(format!("period {i} out of range")));
        match (&self.case, self.kind) {
            (PumpCase::DiagonalPeriod { period: i }, PumpKind::Diagonal | PumpKind::Cumulative) => {
                let p = period(*i)?;
                check(p[0] == p[1] && &p[0] == k && !k.is_zero(), || "diagonal period does not match k".into())?;
            }
            (PumpCase::OppositePeriods { first, second }, PumpKind::Diagonal | PumpKind::Cumulative) => {
                let (a, b) = (period(*first)?, period(*second)?);
                check(a[0] > a[1] && b[0] < b[1], || "periods are not opposite".into())?;
                check(&(&a[0] * &b[1] - &b[0] * &a[1]) == k, || "k differs from q r' - q' r".into())?;
            }
            (PumpCase::ZeroPrefixPeriod { period: i }, PumpKind::Square) => {
                let p = period(*i)?;
                let d = s.dim();
                check(p.entries()[..d - 1].iter().all(Zero::is_zero), || "period has a nonzero leading entry".into())?;
                check(&p[d - 1] == k && !k.is_zero(), || "period entry does not match k".into())?;
            }
            _ => return Err(VerifyError("case does not fit the certificate kind".into())),
        }
        match self.kind {
            PumpKind::Diagonal | PumpKind::Cumulative => {
                let n0 = self.n0.as_ref().expect("checked above");
                check(k < n0, || "k is not below n0".into())?;
                let ps: Vec<BigUint> = self.instances.iter().map(|i| i.p.clone()).collect();
                check(ps == [1u8, 2, 3].map(BigUint::from), || "instances must be p = 1, 2, 3".into())?;
                for inst in &self.instances {
                    check(inst.target == diag(&(&f + &inst.p * k)), || format!("instance p = {} has the wrong target", inst.p))?;
                    check(inst.decomposition.verify(s, &inst.target), || format!("instance p = {} does not reconstruct", inst.p))?;
                }
                if self.kind == PumpKind::Cumulative {
                    check((&f % k).is_zero(), || "k does not divide n!".into())?;
                    let dbl = self.doubling.as_ref().ok_or_else(|| VerifyError("missing doubling instance".into()))?;
                    check(dbl.p == &f / k, || "doubling uses p other than n!/k".into())?;
                    check(dbl.target == diag(&(&f * 2u8)), || "doubling target is not (2n!, 2n!)".into())?;
                    check(dbl.decomposition.verify(s, &dbl.target), || "doubling does not reconstruct".into())?;
                }
            }
            PumpKind::Square => {
                let g = factorial(self.n - 1);
                check((&g % k).is_zero(), || format!("{k} does not divide (n-1)!"))?;
                let inc = self.increment.as_ref().ok_or_else(|| VerifyError("missing increment".into()))?;
                let mut target = self.premise.clone().into_entries();
                let d = target.len();
                target[d - 1] += &g;
                check(inc.target == Vector::new(target), || "increment target mismatch".into())?;
                check(inc.decomposition.verify(s, &inc.target), || "increment does not reconstruct".into())?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parikh::LinearSet;

    fn g(text: &str) -> Grammar {
        Grammar::parse(text).unwrap()
    }

    fn lin(base: &[u64], periods: &[&[u64]]) -> LinearSet {
        LinearSet::new(Vector::from_u64s(base), periods.iter().map(|p| Vector::from_u64s(p)).collect())
    }

    fn set2(comps: Vec<LinearSet>) -> SemilinearSet {
        SemilinearSet::with_axes(&["i", "j"], comps).unwrap()
    }

    fn ctx(s: &str) -> Context {
        Context::parse(s).unwrap()
    }

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    fn roundtrip(c: &PumpCertificate) {
        let json = serde_json::to_string(c).unwrap();
        let back: PumpCertificate = serde_json::from_str(&json).unwrap();
        assert_eq!(&back, c);
        back.verify().unwrap();
    }

    fn grid_check(gr: &Grammar, c: &Context, sel: &SelectorSet) {
        let cnf = gr.to_cnf();
        for i in 0..=8 {
            for j in 0..=8 {
                let expect = cnf.accepts(&c.instance(i, j));
                assert_eq!(sel.contains(&big(i as u64), &big(j as u64)).unwrap(), expect, "{c} ({i},{j})");
            }
        }
    }

    #[test]
    fn selector_examples() {
        let diag_g = g("S -> a S c | b");
        let s = selector(&diag_g, &ctx(",a,b,c,")).unwrap();
        assert_eq!(s.set.components, vec![lin(&[0, 0], &[&[1, 1]])]);
        grid_check(&diag_g, &ctx(",a,b,c,"), &s);

        let full = g("S -> a S | b S | c S | eps");
        let s = selector(&full, &ctx(",a,b,c,")).unwrap();
        for (i, j) in [(0, 0), (5, 0), (0, 7), (3, 4)] {
            assert!(s.contains(&big(i), &big(j)).unwrap());
        }
        let s = selector(&diag_g, &ctx("a,a,b,c,")).unwrap();
        assert_eq!(s.set.components, vec![lin(&[0, 1], &[&[1, 1]])]);
        assert!(matches!(selector(&diag_g, &ctx(",,b,c,")), Err(PumpError::Regular(RegularError::DegenerateContext))));
    }

    #[test]
    fn selectors_agree_with_cyk() {
        let grammars = [
            "S -> a S c | b",
            "S -> a a S c c | b",
            "S -> X | Y\nX -> a X c | b\nY -> a Y b | eps",
            "S -> X Y\nX -> a X b | eps\nY -> b Y c | eps",
            "S -> a S b S | eps",
        ];
        let contexts = [",a,b,c,", "a,a,b,c,", ",a,,c,", ",ab,,c,", "a,b,,b,c", ",a,,b,", ",aa,b,c,c"];
        for text in grammars {
            let gr = g(text);
            for c in contexts {
                let c = ctx(c);
                grid_check(&gr, &c, &selector(&gr, &c).unwrap());
            }
        }
    }

    #[test]
    fn bounds() {
        let m1 = set2(vec![lin(&[0, 1], &[&[1, 1]])]);
        assert_eq!(pumping_bound_diag(&m1).unwrap(), big(4));
        assert_eq!(pumping_bound_square(&m1).unwrap(), big(2));
        let m3 = set2(vec![lin(&[0, 0], &[&[3, 1]])]);
        assert_eq!(pumping_bound_diag(&m3).unwrap(), big(16));
        let m5 = set2(vec![lin(&[5, 0], &[])]);
        assert_eq!(pumping_bound_square(&m5).unwrap(), big(6));
        let m0 = set2(vec![lin(&[0, 0], &[])]);
        assert_eq!(pumping_bound_diag(&m0).unwrap(), big(1));
        assert_eq!(pumping_bound_square(&m0).unwrap(), big(1));
        assert!(pumping_bound_diag(&set2(vec![])).is_err());
        let three = SemilinearSet::with_axes(&["a", "b", "c"], vec![lin(&[0, 0, 0], &[&[1, 1, 2]])]).unwrap();
        assert_eq!(pumping_bound_square(&three).unwrap(), big(5));
    }

    #[test]
    fn diagonal_case_one() {
        let s = set2(vec![lin(&[0, 0], &[&[1, 1]])]);
        let c = diagonal_pump(&s, 4).unwrap();
        assert_eq!(c.k, Some(big(1)));
        assert_eq!(c.case, PumpCase::DiagonalPeriod { period: 0 });
        assert_eq!(c.instances[0].target, Vector::from_u64s(&[25, 25]));
        roundtrip(&c);

        let s = set2(vec![lin(&[0, 0], &[&[2, 2]])]);
        let c = diagonal_pump(&s, 9).unwrap();
        assert_eq!(c.k, Some(big(2)));
        roundtrip(&c);
    }

    #[test]
    fn diagonal_case_two() {
        let s = set2(vec![lin(&[0, 0], &[&[2, 1], &[1, 2]])]);
        let c = diagonal_pump(&s, 9).unwrap();
        assert_eq!(c.n0, Some(big(9)));
        assert_eq!(c.k, Some(big(3)));
        assert_eq!(c.case, PumpCase::OppositePeriods { first: 0, second: 1 });
        let f = factorial(9);
        for inst in &c.instances {
            assert_eq!(inst.target, diag(&(&f + &inst.p * 3u8)));
            assert!(member(&s, &inst.target).unwrap().is_some());
        }
        roundtrip(&c);
    }

    #[test]
    fn diagonal_refusals() {
        let s = set2(vec![lin(&[0, 0], &[&[1, 1]])]);
        assert!(matches!(diagonal_pump(&s, 3), Err(PumpError::BelowBound { n: 3, .. })));
        let off = set2(vec![lin(&[1, 0], &[&[2, 2]])]);
        assert!(matches!(diagonal_pump(&off, 9), Err(PumpError::PremiseFails(_))));
    }

    #[test]
    fn cumulative_examples() {
        let diag_g = g("S -> a S c | b");
        let c = cumulative_pump(&diag_g, &ctx(",a,b,c,"), 4).unwrap();
        assert_eq!(c.k, Some(big(1)));
        assert_eq!(c.doubling.as_ref().unwrap().target, Vector::from_u64s(&[48, 48]));
        roundtrip(&c);

        let full = g("S -> a S | b S | c S | eps");
        let c = cumulative_pump(&full, &ctx(",a,b,c,"), 4).unwrap();
        assert_eq!(c.k, Some(big(1)));
        assert_eq!(c.case, PumpCase::OppositePeriods { first: 1, second: 0 });
        roundtrip(&c);

        assert!(matches!(cumulative_pump(&diag_g, &ctx(",a,b,c,"), 1), Err(PumpError::BelowBound { .. })));
    }

    #[test]
    fn cumulative_at_large_n() {
        let even = g("S -> a a S c c | b");
        let c = cumulative_pump(&even, &ctx(",a,b,c,"), 60).unwrap();
        assert_eq!(c.k, Some(big(2)));
        roundtrip(&c);
    }

    #[test]
    fn square_examples() {
        let ab = g("S -> A B\nA -> a A | eps\nB -> b B | eps");
        let c = square_pump(&ab, &['a', 'b'], 2).unwrap();
        assert!(matches!(c.case, PumpCase::ZeroPrefixPeriod { .. }));
        assert_eq!(c.increment.as_ref().unwrap().target, Vector::from_u64s(&[2, 5]));
        roundtrip(&c);

        let anbn = g("S -> a S b | eps");
        for n in 2..=5 {
            let c = square_pump(&anbn, &['a', 'b'], n).unwrap();
            assert_eq!(c.case, PumpCase::Vacuous);
            roundtrip(&c);
        }

        let even_b = set2(vec![lin(&[0, 0], &[&[1, 0], &[0, 2]])]);
        let c = square_pump_on(&even_b, 3).unwrap();
        assert_eq!(c.k, Some(big(2)));
        assert_eq!(c.increment.as_ref().unwrap().target, Vector::from_u64s(&[6, 38]));
        roundtrip(&c);
        assert!(matches!(square_pump_on(&even_b, 2), Err(PumpError::BelowBound { .. })));
    }

    #[test]
    fn square_in_three_dimensions() {
        let s = SemilinearSet::with_axes(&["a", "b", "c"], vec![lin(&[0, 0, 0], &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]])])
            .unwrap();
        let c = square_pump_on(&s, 3).unwrap();
        assert_eq!(c.increment.as_ref().unwrap().target, Vector::from_u64s(&[6, 6, 38]));
        roundtrip(&c);
    }

    #[test]
    fn tampered_certificates_fail() {
        let s = set2(vec![lin(&[0, 0], &[&[2, 1], &[1, 2]])]);
        let c = diagonal_pump(&s, 9).unwrap();
        let mut bad = c.clone();
        bad.k = Some(big(4));
        assert!(bad.verify().is_err());
        let mut bad = c.clone();
        bad.instances[1].decomposition.coefficients[0] += 1u8;
        assert!(bad.verify().is_err());
        let mut bad = c.clone();
        bad.expression.components[0].periods[0] = Vector::from_u64s(&[3, 1]);
        assert!(bad.verify().is_err());
        let mut bad = c;
        bad.n = 8;
        assert!(bad.verify().is_err());
    }
}
