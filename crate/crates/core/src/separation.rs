//! Witness sequences, the sequence condition checker and end-to-end
//! certificates that the built-in targets are not finite intersections of
//! context-free languages.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::cfg::{CfgError, Grammar};
use crate::corpus::CorpusEntry;
use crate::parikh::{member, Decomposition, ParikhError, SemilinearSet};
use crate::pump::{
    block_selector, cumulative_pump_on, factorial, letter_pattern_image, pumping_bound_diag,
    pumping_bound_square, selector, square_pump_on, PumpCertificate, PumpError, VerifyError,
};
use crate::regular::{Context, Segment};
use crate::words::{big_string_opt, Alphabet, BlockWord, Vector, Word, WordError};

pub const SEPARATION_VERSION: u32 = 1;
pub const N_MAX: u32 = 500;
pub const WITNESS_RANGE: (u32, u32) = (2, 12);
pub const DEFAULT_CONTEXT_BOUND: usize = 2;
pub const DEFAULT_HORIZON: (u32, u32) = (2, 8);
/// Longest expanded word that is also fed to CYK as a cross-check.
pub const CYK_CROSS_CHECK_LEN: usize = 40;
/// Largest constant block spelled out as a fixed word in a selector pattern.
pub const FIXED_BLOCK_CAP: usize = 4096;

#[derive(Debug, Error)]
pub enum SeparationError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("n = {n} outside 1..={max}")]
    NOutOfRange { n: u32, max: u32 },
    #[error("'{expr}' is negative at n = {n}")]
    Negative { expr: String, n: u32 },
    #[error("unknown target '{0}' (expected L1, L2, L3 or L4)")]
    UnknownTarget(String),
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Pump(#[from] PumpError),
    #[error(transparent)]
    Parikh(#[from] ParikhError),
    #[error(transparent)]
    Cfg(#[from] CfgError),
    #[error(transparent)]
    Word(#[from] WordError),
}

/// Exponent of a witness block as an expression in `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExponentExpr {
    Const(BigUint),
    N,
    Factorial(Box<ExponentExpr>),
    Square(Box<ExponentExpr>),
    Add(Box<ExponentExpr>, Box<ExponentExpr>),
    Sub(Box<ExponentExpr>, Box<ExponentExpr>),
    Mul(Box<ExponentExpr>, Box<ExponentExpr>),
}

impl ExponentExpr {
    pub fn constant(c: u32) -> Self {
        ExponentExpr::Const(BigUint::from(c))
    }

    pub fn is_constant(&self) -> bool {
        match self {
            ExponentExpr::Const(_) => true,
            ExponentExpr::N => false,
            ExponentExpr::Factorial(e) | ExponentExpr::Square(e) => e.is_constant(),
            ExponentExpr::Add(a, b) | ExponentExpr::Sub(a, b) | ExponentExpr::Mul(a, b) => {
                a.is_constant() && b.is_constant()
            }
        }
    }

    pub fn eval(&self, n: u32) -> Result<BigUint, SeparationError> {
        Ok(match self {
            ExponentExpr::Const(c) => c.clone(),
            ExponentExpr::N => BigUint::from(n),
            ExponentExpr::Factorial(e) => {
                let v = e.eval(n)?;
                let v = v
                    .to_u32()
                    .filter(|&v| v <= 100_000)
                    .ok_or_else(|| SeparationError::Syntax(format!("factorial argument {v} too large")))?;
                factorial(v)
            }
            ExponentExpr::Square(e) => {
                let v = e.eval(n)?;
                &v * &v
            }
            ExponentExpr::Add(a, b) => a.eval(n)? + b.eval(n)?,
            ExponentExpr::Mul(a, b) => a.eval(n)? * b.eval(n)?,
            ExponentExpr::Sub(a, b) => {
                let (x, y) = (a.eval(n)?, b.eval(n)?);
                if x < y {
                    return Err(SeparationError::Negative { expr: self.to_string(), n });
                }
                x - y
            }
        })
    }

    fn is_atom(&self) -> bool {
        matches!(self, ExponentExpr::Const(_) | ExponentExpr::N)
    }
}

impl fmt::Display for ExponentExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sum = |e: &ExponentExpr| matches!(e, ExponentExpr::Add(..) | ExponentExpr::Sub(..));
        match self {
            ExponentExpr::Const(c) => write!(f, "{c}"),
            ExponentExpr::N => write!(f, "n"),
            ExponentExpr::Factorial(e) if e.is_atom() => write!(f, "{e}!"),
            ExponentExpr::Factorial(e) => write!(f, "({e})!"),
            ExponentExpr::Square(e) if e.is_atom() => write!(f, "{e}^2"),
            ExponentExpr::Square(e) => write!(f, "({e})^2"),
            ExponentExpr::Add(a, b) => write!(f, "{a}+{b}"),
            ExponentExpr::Sub(a, b) if sum(b) => write!(f, "{a}-({b})"),
            ExponentExpr::Sub(a, b) => write!(f, "{a}-{b}"),
            ExponentExpr::Mul(a, b) => {
                let wrap = |e: &ExponentExpr| if sum(e) { format!("({e})") } else { e.to_string() };
                write!(f, "{}*{}", wrap(a), wrap(b))
            }
        }
    }
}

struct ExprParser<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    src: &'a str,
}

impl ExprParser<'_> {
    fn peek(&mut self) -> Option<char> {
        while self.chars.peek().is_some_and(|c| c.is_whitespace()) {
            self.chars.next();
        }
        self.chars.peek().copied()
    }

    fn err(&self, what: &str) -> SeparationError {
        SeparationError::Syntax(format!("{what} in exponent '{}'", self.src))
    }

    fn sum(&mut self) -> Result<ExponentExpr, SeparationError> {
        let mut acc = self.product()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.chars.next();
                    acc = ExponentExpr::Add(Box::new(acc), Box::new(self.product()?));
                }
                Some('-' | '−') => {
                    self.chars.next();
                    acc = ExponentExpr::Sub(Box::new(acc), Box::new(self.product()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn product(&mut self) -> Result<ExponentExpr, SeparationError> {
        let mut acc = self.postfix()?;
        loop {
            match self.peek() {
                Some('*' | '·') => {
                    self.chars.next();
                }
                // juxtaposition as in `2(n!)`
                Some(c) if c == '(' || c == 'n' || c.is_ascii_digit() => {}
                _ => return Ok(acc),
            }
            acc = ExponentExpr::Mul(Box::new(acc), Box::new(self.postfix()?));
        }
    }

    fn postfix(&mut self) -> Result<ExponentExpr, SeparationError> {
        let mut e = self.atom()?;
        loop {
            match self.peek() {
                Some('!') => {
                    self.chars.next();
                    e = ExponentExpr::Factorial(Box::new(e));
                }
                Some('²') => {
                    self.chars.next();
                    e = ExponentExpr::Square(Box::new(e));
                }
                Some('^') => {
                    self.chars.next();
                    if self.peek() != Some('2') {
                        return Err(self.err("only squaring is supported"));
                    }
                    self.chars.next();
                    if self.chars.peek().is_some_and(|c| c.is_ascii_digit()) {
                        return Err(self.err("only squaring is supported"));
                    }
                    e = ExponentExpr::Square(Box::new(e));
                }
                _ => return Ok(e),
            }
        }
    }

    fn atom(&mut self) -> Result<ExponentExpr, SeparationError> {
        match self.peek() {
            Some('n') => {
                self.chars.next();
                Ok(ExponentExpr::N)
            }
            Some('(') => {
                self.chars.next();
                let e = self.sum()?;
                if self.peek() != Some(')') {
                    return Err(self.err("missing ')'"));
                }
                self.chars.next();
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let mut digits = String::new();
                while let Some(&c) = self.chars.peek().filter(|c| c.is_ascii_digit()) {
                    digits.push(c);
                    self.chars.next();
                }
                Ok(ExponentExpr::Const(digits.parse().expect("digits")))
            }
            Some(c) => Err(self.err(&format!("unexpected '{c}'"))),
            None => Err(self.err("unexpected end")),
        }
    }
}

impl FromStr for ExponentExpr {
    type Err = SeparationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = ExprParser { chars: s.chars().peekable(), src: s };
        let e = p.sum()?;
        if p.peek().is_some() {
            return Err(p.err("trailing input"));
        }
        Ok(e)
    }
}

/// Block word template `l₁^{e₁(n)} … l_k^{e_k(n)}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WitnessSchema {
    pub blocks: Vec<(char, ExponentExpr)>,
}

impl WitnessSchema {
    pub fn eval(&self, n: u32) -> Result<BlockWord, SeparationError> {
        if !(1..=N_MAX).contains(&n) {
            return Err(SeparationError::NOutOfRange { n, max: N_MAX });
        }
        let blocks = self
            .blocks
            .iter()
            .map(|(c, e)| Ok((*c, e.eval(n)?)))
            .collect::<Result<Vec<_>, SeparationError>>()?;
        Ok(BlockWord::from_blocks(blocks))
    }

    pub fn letters(&self) -> Vec<char> {
        let mut out: Vec<char> = self.blocks.iter().map(|(c, _)| *c).collect();
        out.sort();
        out.dedup();
        out
    }

    /// Selector pattern for `x · schema · y`: constant blocks are spelled
    /// out, every other block becomes a marked single-letter loop.
    pub fn segments(&self, x: &Word, y: &Word) -> Result<Vec<Segment>, SeparationError> {
        let mut out = vec![Segment::Fixed(x.clone())];
        for (c, e) in &self.blocks {
            if e.is_constant() {
                let k = e.eval(1)?;
                let k = k
                    .to_usize()
                    .filter(|&k| k <= FIXED_BLOCK_CAP)
                    .ok_or(WordError::TooLarge { length: k, cap: FIXED_BLOCK_CAP })?;
                out.push(Segment::Fixed(Word::new(vec![*c; k])));
            } else {
                out.push(Segment::Loop(Word::new(vec![*c])));
            }
        }
        out.push(Segment::Fixed(y.clone()));
        Ok(out)
    }

    pub fn loop_labels(&self) -> Vec<String> {
        self.blocks.iter().filter(|(_, e)| !e.is_constant()).map(|(c, _)| c.to_string()).collect()
    }

    /// Loop counts of the evaluated schema, one per non-constant block.
    pub fn loop_vector(&self, n: u32) -> Result<Vector, SeparationError> {
        let v = self
            .blocks
            .iter()
            .filter(|(_, e)| !e.is_constant())
            .map(|(_, e)| e.eval(n))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Vector::new(v))
    }

    fn shape(&self) -> Vec<(char, Option<String>)> {
        self.blocks
            .iter()
            .map(|(c, e)| (*c, e.is_constant().then(|| e.to_string())))
            .collect()
    }
}

impl fmt::Display for WitnessSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.blocks.is_empty() {
            return write!(f, "ε");
        }
        for (i, (c, e)) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            match e {
                ExponentExpr::Const(k) if k.is_one() => write!(f, "{c}")?,
                ExponentExpr::Const(k) => write!(f, "{c}^{k}")?,
                e => write!(f, "{c}^{{{e}}}")?,
            }
        }
        Ok(())
    }
}

impl FromStr for WitnessSchema {
    type Err = SeparationError;

    /// Parses `a^{n!} b c^{2(n!)}`; braces are needed once an exponent has
    /// more than one token.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut blocks = Vec::new();
        let mut chars = s.chars().peekable();
        loop {
            while chars.peek().is_some_and(|c| c.is_whitespace()) {
                chars.next();
            }
            let Some(letter) = chars.next() else { break };
            if letter == 'ε' {
                continue;
            }
            if !letter.is_alphanumeric() {
                return Err(SeparationError::Syntax(format!("bad letter '{letter}' in schema '{s}'")));
            }
            if chars.peek() != Some(&'^') {
                blocks.push((letter, ExponentExpr::constant(1)));
                continue;
            }
            chars.next();
            let mut text = String::new();
            if chars.peek() == Some(&'{') {
                chars.next();
                let mut depth = 1;
                for c in chars.by_ref() {
                    match c {
                        '{' => depth += 1,
                        '}' => depth -= 1,
                        _ => {}
                    }
                    if depth == 0 {
                        break;
                    }
                    text.push(c);
                }
                if depth != 0 {
                    return Err(SeparationError::Syntax(format!("unclosed brace in schema '{s}'")));
                }
            } else {
                while let Some(&c) = chars.peek().filter(|c| !c.is_whitespace()) {
                    text.push(c);
                    chars.next();
                }
            }
            blocks.push((letter, text.parse()?));
        }
        Ok(WitnessSchema { blocks })
    }
}

impl Serialize for WitnessSchema {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for WitnessSchema {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn eval_witness(ws: &WitnessSchema, n: u32) -> Result<BlockWord, SeparationError> {
    ws.eval(n)
}

/// Universal pumping statement an engine certifies instance by instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    CumulativePumping,
    SquarePumping,
}

impl Theorem {
    pub fn name(self) -> &'static str {
        match self {
            Theorem::CumulativePumping => "cumulative pumping",
            Theorem::SquarePumping => "square pumping",
        }
    }

    pub fn statement(self) -> &'static str {
        match self {
            Theorem::CumulativePumping => {
                "for every context-free L there is n0 with: n >= n0 and a^{n!} b c^{n!} in L imply \
                 a^{2(n!)} b c^{2(n!)} in L; n0 = (m+1)^2 for the largest coordinate m of the \
                 selector expression; engine: cumulative_pump"
            }
            Theorem::SquarePumping => {
                "for every context-free L there is n0 with: n >= n0 and l1^{n!} ... l(d-1)^{n!} \
                 ld^{(n!)^2} in L imply l1^{n!} ... l(d-1)^{n!} ld^{(n!)^2+(n-1)!} in L; \
                 n0 = (d-1)m+1 for the largest coordinate m of the Parikh image of \
                 L restricted to l1* ... ld*; engine: square_pump"
            }
        }
    }
}

/// Built-in targets with exact arithmetic membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TargetLanguage {
    L1,
    L2,
    L3,
    L4,
}

impl FromStr for TargetLanguage {
    type Err = SeparationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "L1" => Ok(TargetLanguage::L1),
            "L2" => Ok(TargetLanguage::L2),
            "L3" => Ok(TargetLanguage::L3),
            "L4" => Ok(TargetLanguage::L4),
            _ => Err(SeparationError::UnknownTarget(s.to_string())),
        }
    }
}

impl fmt::Display for TargetLanguage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

fn schema(s: &str) -> WitnessSchema {
    s.parse().expect("built-in schema parses")
}

/// `Some(k)` when `x = k!` for some `k ≥ 1`, by trial division.
pub fn factorial_root(x: &BigUint) -> Option<u32> {
    if x.is_zero() {
        return None;
    }
    let mut rest = x.clone();
    let mut k = 1u32;
    loop {
        if rest.is_one() {
            return Some(k);
        }
        let next = BigUint::from(k + 1);
        let (q, r) = rest.div_rem(&next);
        if !r.is_zero() {
            return None;
        }
        rest = q;
        k += 1;
    }
}

impl TargetLanguage {
    pub const ALL: [TargetLanguage; 4] = [TargetLanguage::L1, TargetLanguage::L2, TargetLanguage::L3, TargetLanguage::L4];

    pub fn description(self) -> &'static str {
        match self {
            TargetLanguage::L1 => "{ a^{n!} b c^{n!} : n >= 0 }",
            TargetLanguage::L2 => "{ a^m b^{mn} : m, n >= 1 }",
            TargetLanguage::L3 => "{ a^n b^{n^2} : n >= 1 }",
            TargetLanguage::L4 => "{ a^m b^n c^{mn} : m, n >= 1 }",
        }
    }

    pub fn letters(self) -> &'static [char] {
        match self {
            TargetLanguage::L1 | TargetLanguage::L4 => &['a', 'b', 'c'],
            TargetLanguage::L2 | TargetLanguage::L3 => &['a', 'b'],
        }
    }

    pub fn schemas(self) -> (WitnessSchema, WitnessSchema) {
        match self {
            TargetLanguage::L1 => (schema("a^{n!} b c^{n!}"), schema("a^{2*n!} b c^{2*n!}")),
            TargetLanguage::L2 | TargetLanguage::L3 => {
                (schema("a^{n!} b^{(n!)^2}"), schema("a^{n!} b^{(n!)^2+(n-1)!}"))
            }
            TargetLanguage::L4 => (
                schema("a^{n!} b^{n!} c^{(n!)^2}"),
                schema("a^{n!} b^{n!} c^{(n!)^2+(n-1)!}"),
            ),
        }
    }

    pub fn theorem(self) -> Theorem {
        match self {
            TargetLanguage::L1 => Theorem::CumulativePumping,
            _ => Theorem::SquarePumping,
        }
    }

    pub fn contains(self, w: &BlockWord) -> bool {
        let b = w.blocks();
        let one = BigUint::one();
        match (self, b) {
            (TargetLanguage::L1, [('a', i), ('b', m), ('c', j)]) => *m == one && i == j && factorial_root(i).is_some(),
            (TargetLanguage::L2, [('a', m), ('b', e)]) => e >= m && (e % m).is_zero(),
            (TargetLanguage::L3, [('a', m), ('b', e)]) => *e == m * m,
            (TargetLanguage::L4, [('a', m), ('b', k), ('c', e)]) => *e == m * k,
            _ => false,
        }
    }
}

pub fn target_member(t: TargetLanguage, w: &BlockWord) -> bool {
    t.contains(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellOutcome {
    Holds,
    BelowBound,
    Violation,
    Undecided,
}

/// One `(x, y, n)` cell: memberships of `s_n` and `t_n` in `x⁻¹Ky⁻¹`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub n: u32,
    pub s_in: Option<bool>,
    pub t_in: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_witness: Option<Decomposition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_witness: Option<Decomposition>,
    pub outcome: CellOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextReport {
    pub x: String,
    pub y: String,
    pub s_selector: Option<SemilinearSet>,
    /// Present only when `t` has a different block shape from `s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_selector: Option<SemilinearSet>,
    #[serde(with = "big_string_opt")]
    pub n0: Option<BigUint>,
    pub cells: Vec<Cell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum ConditionStatus {
    HoldsOnHorizon,
    Refuted,
    Partial,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRef {
    pub x: String,
    pub y: String,
    pub n: u32,
}

impl fmt::Display for CellRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |w: &str| if w.is_empty() { "ε".to_string() } else { w.to_string() };
        write!(f, "(x={}, y={}, n={})", show(&self.x), show(&self.y), self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub grammar_hash: String,
    pub letters: String,
    pub s: WitnessSchema,
    pub t: WitnessSchema,
    pub context_bound: usize,
    pub horizon: (u32, u32),
    pub rule: Option<Theorem>,
    pub status: ConditionStatus,
    pub violations: Vec<CellRef>,
    pub below_bound: Vec<CellRef>,
    pub undecided: Vec<CellRef>,
    pub cyk_checks: usize,
    pub contexts: Vec<ContextReport>,
}

fn context_n0(rule: Option<Theorem>, sel: &SemilinearSet) -> Result<Option<BigUint>, ParikhError> {
    if sel.is_empty() {
        return Ok(None);
    }
    match rule {
        Some(Theorem::CumulativePumping) if sel.dim() == 2 => pumping_bound_diag(sel).map(Some),
        Some(Theorem::SquarePumping) if sel.dim() >= 2 => pumping_bound_square(sel).map(Some),
        _ => Ok(None),
    }
}

fn classify(s_in: bool, t_in: bool, n: u32, rule: Option<Theorem>, n0: &Option<BigUint>) -> CellOutcome {
    if !s_in || t_in {
        return CellOutcome::Holds;
    }
    match (rule, n0) {
        (Some(_), Some(n0)) if BigUint::from(n) < *n0 => CellOutcome::BelowBound,
        _ => CellOutcome::Violation,
    }
}

fn decide(sel: &SemilinearSet, v: &Vector) -> Result<Option<Decomposition>, ParikhError> {
    member(sel, v)
}

#[allow(clippy::too_many_arguments)]
fn check_context(
    s: &WitnessSchema,
    t: &WitnessSchema,
    g: &Grammar,
    cnf: &crate::cfg::CnfGrammar,
    x: &Word,
    y: &Word,
    horizon: (u32, u32),
    rule: Option<Theorem>,
) -> Result<(ContextReport, usize), SeparationError> {
    let mut report = ContextReport {
        x: raw(x),
        y: raw(y),
        s_selector: None,
        t_selector: None,
        n0: None,
        cells: Vec::new(),
        error: None,
    };
    let selectors = (|| -> Result<_, SeparationError> {
        let s_sel = block_selector(g, &s.segments(x, y)?, s.loop_labels())?;
        let t_sel = if s.shape() == t.shape() {
            None
        } else {
            Some(block_selector(g, &t.segments(x, y)?, t.loop_labels())?)
        };
        let n0 = context_n0(rule, &s_sel)?;
        Ok((s_sel, t_sel, n0))
    })();
    let (s_sel, t_sel, n0) = match selectors {
        Ok(v) => v,
        Err(SeparationError::Pump(PumpError::Parikh(e))) | Err(SeparationError::Parikh(e)) => {
            report.error = Some(e.to_string());
            for n in horizon.0..=horizon.1 {
                report.cells.push(Cell {
                    n,
                    s_in: None,
                    t_in: None,
                    s_witness: None,
                    t_witness: None,
                    outcome: CellOutcome::Undecided,
                    note: Some(e.to_string()),
                });
            }
            return Ok((report, 0));
        }
        Err(e) => return Err(e),
    };
    let mut cyk_checks = 0;
    for n in horizon.0..=horizon.1 {
        let t_set = t_sel.as_ref().unwrap_or(&s_sel);
        let s_dec = decide(&s_sel, &s.loop_vector(n)?);
        let t_dec = decide(t_set, &t.loop_vector(n)?);
        let (s_dec, t_dec) = match (s_dec, t_dec) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                report.cells.push(Cell {
                    n,
                    s_in: None,
                    t_in: None,
                    s_witness: None,
                    t_witness: None,
                    outcome: CellOutcome::Undecided,
                    note: Some(e.to_string()),
                });
                continue;
            }
        };
        let (s_in, t_in) = (s_dec.is_some(), t_dec.is_some());
        for (schema, claimed) in [(s, s_in), (t, t_in)] {
            let word = x.to_block_word().concat(&schema.eval(n)?).concat(&y.to_block_word());
            if let Ok(w) = word.expand(CYK_CROSS_CHECK_LEN) {
                cyk_checks += 1;
                if cnf.accepts(&w) != claimed {
                    return Err(SeparationError::Inconsistent(format!(
                        "selector and CYK disagree on {word} (selector says {claimed})"
                    )));
                }
            }
        }
        report.cells.push(Cell {
            n,
            s_in: Some(s_in),
            t_in: Some(t_in),
            s_witness: s_dec,
            t_witness: t_dec,
            outcome: classify(s_in, t_in, n, rule, &n0),
            note: None,
        });
    }
    report.s_selector = Some(s_sel);
    report.t_selector = t_sel;
    report.n0 = n0;
    Ok((report, cyk_checks))
}

fn raw(w: &Word) -> String {
    w.letters().iter().collect()
}

fn report_letters(s: &WitnessSchema, t: &WitnessSchema, g: &Grammar) -> Result<Alphabet, WordError> {
    let mut letters = g.terminals().clone();
    letters.extend(s.letters());
    letters.extend(t.letters());
    Alphabet::sorted_from(letters)
}

fn summarize(report: &mut ConditionReport) {
    let (mut violations, mut below, mut undecided) = (Vec::new(), Vec::new(), Vec::new());
    for ctx in &report.contexts {
        for cell in &ctx.cells {
            let r = CellRef { x: ctx.x.clone(), y: ctx.y.clone(), n: cell.n };
            match cell.outcome {
                CellOutcome::Violation => violations.push(r),
                CellOutcome::BelowBound => below.push(r),
                CellOutcome::Undecided => undecided.push(r),
                CellOutcome::Holds => {}
            }
        }
    }
    report.status = if !violations.is_empty() {
        ConditionStatus::Refuted
    } else if !undecided.is_empty() {
        ConditionStatus::Partial
    } else {
        ConditionStatus::HoldsOnHorizon
    };
    report.violations = violations;
    report.below_bound = below;
    report.undecided = undecided;
}

/// Checks `s_n ∈ x⁻¹L(g)y⁻¹ ⟹ t_n ∈ x⁻¹L(g)y⁻¹` for every context with
/// `|x|, |y| ≤ context_bound` and every `n` in the horizon. Under `rule`, a
/// violation below the context's pumping bound is recorded but does not
/// refute; without a rule every violation refutes.
pub fn condition_check(
    s: &WitnessSchema,
    t: &WitnessSchema,
    g: &Grammar,
    context_bound: usize,
    horizon: (u32, u32),
    rule: Option<Theorem>,
) -> Result<ConditionReport, SeparationError> {
    if horizon.0 < 1 || horizon.0 > horizon.1 || horizon.1 > N_MAX {
        return Err(SeparationError::NOutOfRange { n: horizon.1.max(horizon.0), max: N_MAX });
    }
    let alphabet = report_letters(s, t, g)?;
    let words = alphabet.words_up_to(context_bound);
    let pairs: Vec<(&Word, &Word)> = words.iter().flat_map(|x| words.iter().map(move |y| (x, y))).collect();
    let cnf = g.to_cnf();
    let results = pairs
        .par_iter()
        .map(|(x, y)| check_context(s, t, g, &cnf, x, y, horizon, rule))
        .collect::<Result<Vec<_>, _>>()?;
    let cyk_checks = results.iter().map(|(_, c)| c).sum();
    let mut report = ConditionReport {
        grammar_hash: g.content_hash(),
        letters: alphabet.letters().iter().collect(),
        s: s.clone(),
        t: t.clone(),
        context_bound,
        horizon,
        rule,
        status: ConditionStatus::HoldsOnHorizon,
        violations: Vec::new(),
        below_bound: Vec::new(),
        undecided: Vec::new(),
        cyk_checks,
        contexts: results.into_iter().map(|(r, _)| r).collect(),
    };
    summarize(&mut report);
    Ok(report)
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), VerifyError> {
    if cond {
        Ok(())
    } else {
        Err(VerifyError(msg()))
    }
}

fn verify_membership(
    sel: &SemilinearSet,
    v: &Vector,
    claimed: bool,
    witness: &Option<Decomposition>,
    what: &str,
) -> Result<(), VerifyError> {
    match (claimed, witness) {
        (true, Some(d)) => check(d.verify(sel, v), || format!("{what}: stored decomposition does not reconstruct {v}")),
        (true, None) => Err(VerifyError(format!("{what}: membership claimed without decomposition"))),
        (false, None) => {
            let found = member(sel, v).map_err(|e| VerifyError(format!("{what}: {e}")))?;
            check(found.is_none(), || format!("{what}: {v} is in the stored expression"))
        }
        (false, Some(_)) => Err(VerifyError(format!("{what}: decomposition attached to a non-member"))),
    }
}

impl ConditionReport {
    /// Re-checks every decided cell against the stored selector expressions
    /// and the recorded summary. Parikh images are not recomputed.
    pub fn verify(&self) -> Result<(), VerifyError> {
        let alphabet = Alphabet::new(self.letters.chars()).map_err(|e| VerifyError(e.to_string()))?;
        let words = alphabet.words_up_to(self.context_bound);
        check(self.contexts.len() == words.len() * words.len(), || "context list incomplete".into())?;
        let same_shape = self.s.shape() == self.t.shape();
        let mut i = 0;
        for x in &words {
            for y in &words {
                let ctx = &self.contexts[i];
                i += 1;
                check(ctx.x == raw(x) && ctx.y == raw(y), || format!("context {i} out of order"))?;
                let ns: Vec<u32> = ctx.cells.iter().map(|c| c.n).collect();
                check(ns == (self.horizon.0..=self.horizon.1).collect::<Vec<_>>(), || "horizon incomplete".into())?;
                let Some(s_sel) = &ctx.s_selector else {
                    check(ctx.error.is_some(), || "missing selector".into())?;
                    check(ctx.cells.iter().all(|c| c.outcome == CellOutcome::Undecided), || "decided cell without selector".into())?;
                    continue;
                };
                check(same_shape == ctx.t_selector.is_none(), || "selector shape mismatch".into())?;
                let t_sel = ctx.t_selector.as_ref().unwrap_or(s_sel);
                let n0 = context_n0(self.rule, s_sel).map_err(|e| VerifyError(e.to_string()))?;
                check(n0 == ctx.n0, || "recorded pumping bound does not match the expression".into())?;
                for cell in &ctx.cells {
                    let at = CellRef { x: ctx.x.clone(), y: ctx.y.clone(), n: cell.n };
                    let (Some(s_in), Some(t_in)) = (cell.s_in, cell.t_in) else {
                        check(cell.outcome == CellOutcome::Undecided, || format!("{at}: undecided cell with outcome"))?;
                        continue;
                    };
                    let sv = self.s.loop_vector(cell.n).map_err(|e| VerifyError(e.to_string()))?;
                    let tv = self.t.loop_vector(cell.n).map_err(|e| VerifyError(e.to_string()))?;
                    verify_membership(s_sel, &sv, s_in, &cell.s_witness, &format!("{at} s"))?;
                    verify_membership(t_sel, &tv, t_in, &cell.t_witness, &format!("{at} t"))?;
                    check(cell.outcome == classify(s_in, t_in, cell.n, self.rule, &ctx.n0), || {
                        format!("{at}: outcome does not follow from the memberships")
                    })?;
                }
            }
        }
        let mut copy = self.clone();
        summarize(&mut copy);
        check(copy == *self, || "summary does not match the cells".into())
    }
}

/// Result of one pumping engine run during an audit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum EngineOutcome {
    Certificate { certificate: Box<PumpCertificate> },
    /// The engine's premise is not in the expression; nothing to pump.
    PremiseAbsent { reason: String },
    /// The expression is empty, so there is no bound and nothing to pump.
    EmptyExpression,
    Capacity { reason: String },
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineRun {
    pub n: Option<u32>,
    #[serde(flatten)]
    pub outcome: EngineOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum AuditStatus {
    Pass,
    Failed,
    Partial,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrammarAudit {
    pub name: String,
    pub grammar_hash: String,
    pub status: AuditStatus,
    pub engine: Vec<EngineRun>,
    pub condition: ConditionReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub status: AuditStatus,
    pub context_bound: usize,
    pub horizon: (u32, u32),
    pub pump_certificates: usize,
    pub grammars: Vec<GrammarAudit>,
}

fn engine_outcome(result: Result<PumpCertificate, PumpError>) -> EngineOutcome {
    match result {
        Ok(c) => EngineOutcome::Certificate { certificate: Box::new(c) },
        Err(PumpError::PremiseFails(reason)) => EngineOutcome::PremiseAbsent { reason },
        Err(e @ PumpError::TheoremViolation(_)) => EngineOutcome::Failed { reason: e.to_string() },
        Err(e) => EngineOutcome::Capacity { reason: e.to_string() },
    }
}

fn engine_runs(
    theorem: Theorem,
    letters: &[char],
    g: &Grammar,
    n_max: u32,
) -> Vec<EngineRun> {
    let prepared: Result<(SemilinearSet, Option<PumpSource>), PumpError> = match theorem {
        Theorem::CumulativePumping => {
            selector(g, &Context::new("", "a", "b", "c", "")).map(|sel| (sel.set.clone(), Some(PumpSource::Selector(sel))))
        }
        Theorem::SquarePumping => letter_pattern_image(g, letters).map(|s| (s, None)),
    };
    let (expr, source) = match prepared {
        Ok(p) => p,
        Err(e) => return vec![EngineRun { n: None, outcome: engine_outcome(Err(e)) }],
    };
    if expr.is_empty() {
        let outcome = match theorem {
            // the square engine certifies emptiness itself
            Theorem::SquarePumping => engine_outcome(square_pump_on(&expr, 1).map(|mut c| {
                c.grammar_hash = Some(g.content_hash());
                c
            })),
            Theorem::CumulativePumping => EngineOutcome::EmptyExpression,
        };
        let n = matches!(outcome, EngineOutcome::Certificate { .. }).then_some(1);
        return vec![EngineRun { n, outcome }];
    }
    let bound = match theorem {
        Theorem::CumulativePumping => pumping_bound_diag(&expr),
        Theorem::SquarePumping => pumping_bound_square(&expr),
    };
    let n0 = match bound.map(|b| b.to_u32().filter(|&b| b < n_max)) {
        Ok(Some(n0)) => n0,
        Ok(None) => {
            return vec![EngineRun {
                n: None,
                outcome: EngineOutcome::Capacity { reason: format!("pumping bound exceeds n cap {n_max}") },
            }]
        }
        Err(e) => return vec![EngineRun { n: None, outcome: engine_outcome(Err(e.into())) }],
    };
    (n0..=n0 + 1)
        .map(|n| {
            let result = match &source {
                Some(PumpSource::Selector(sel)) => cumulative_pump_on(sel, n),
                None => square_pump_on(&expr, n).map(|mut c| {
                    c.grammar_hash = Some(g.content_hash());
                    c
                }),
            };
            EngineRun { n: Some(n), outcome: engine_outcome(result) }
        })
        .collect()
}

enum PumpSource {
    Selector(crate::pump::SelectorSet),
}

fn grammar_status(condition: &ConditionReport, engine: &[EngineRun]) -> AuditStatus {
    let failed = condition.status == ConditionStatus::Refuted
        || engine.iter().any(|r| matches!(r.outcome, EngineOutcome::Failed { .. }));
    let partial = condition.status == ConditionStatus::Partial
        || engine.iter().any(|r| matches!(r.outcome, EngineOutcome::Capacity { .. }));
    if failed {
        AuditStatus::Failed
    } else if partial {
        AuditStatus::Partial
    } else {
        AuditStatus::Pass
    }
}

fn overall(statuses: impl IntoIterator<Item = AuditStatus>) -> AuditStatus {
    let mut out = AuditStatus::Pass;
    for s in statuses {
        match s {
            AuditStatus::Failed => return AuditStatus::Failed,
            AuditStatus::Partial => out = AuditStatus::Partial,
            AuditStatus::Pass => {}
        }
    }
    out
}

fn count_certificates(grammars: &[GrammarAudit]) -> usize {
    grammars
        .iter()
        .flat_map(|g| &g.engine)
        .filter(|r| matches!(r.outcome, EngineOutcome::Certificate { .. }))
        .count()
}

/// Condition check of the certificate's schemas against every grammar, plus
/// the cited engine at `n₀` and `n₀ + 1`.
pub fn corpus_audit(
    corpus: &[CorpusEntry],
    cert: &SeparationCertificate,
    context_bound: usize,
    horizon: (u32, u32),
    n_max: u32,
) -> Result<AuditReport, SeparationError> {
    let grammars = corpus
        .par_iter()
        .map(|entry| {
            let condition = condition_check(&cert.s, &cert.t, &entry.grammar, context_bound, horizon, Some(cert.theorem))?;
            let engine = engine_runs(cert.theorem, cert.target.letters(), &entry.grammar, n_max);
            Ok(GrammarAudit {
                name: entry.name.clone(),
                grammar_hash: entry.grammar.content_hash(),
                status: grammar_status(&condition, &engine),
                engine,
                condition,
            })
        })
        .collect::<Result<Vec<_>, SeparationError>>()?;
    Ok(AuditReport {
        status: overall(grammars.iter().map(|g| g.status)),
        context_bound,
        horizon,
        pump_certificates: count_certificates(&grammars),
        grammars,
    })
}

impl AuditReport {
    pub fn verify(&self, cert: &SeparationCertificate) -> Result<(), VerifyError> {
        for g in &self.grammars {
            let c = &g.condition;
            check(c.grammar_hash == g.grammar_hash, || format!("{}: grammar hash mismatch", g.name))?;
            check(c.s == cert.s && c.t == cert.t, || format!("{}: schemas differ from the certificate", g.name))?;
            check(c.rule == Some(cert.theorem), || format!("{}: wrong rule", g.name))?;
            check(c.context_bound == self.context_bound && c.horizon == self.horizon, || {
                format!("{}: audit parameters differ", g.name)
            })?;
            c.verify().map_err(|e| VerifyError(format!("{}: {}", g.name, e.0)))?;
            for run in &g.engine {
                if let EngineOutcome::Certificate { certificate } = &run.outcome {
                    certificate.verify().map_err(|e| VerifyError(format!("{}: {}", g.name, e.0)))?;
                    check(certificate.grammar_hash.as_deref() == Some(g.grammar_hash.as_str()), || {
                        format!("{}: pump certificate for another grammar", g.name)
                    })?;
                    check(Some(certificate.n) == run.n, || format!("{}: pump certificate n mismatch", g.name))?;
                }
            }
            check(g.status == grammar_status(c, &g.engine), || format!("{}: status mismatch", g.name))?;
        }
        check(self.status == overall(self.grammars.iter().map(|g| g.status)), || "audit status mismatch".into())?;
        check(self.pump_certificates == count_certificates(&self.grammars), || "certificate count mismatch".into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessCheck {
    pub n: u32,
    pub s_word: String,
    pub t_word: String,
    pub s_in_target: bool,
    pub t_in_target: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Partial,
}

pub const SCOPE_NOTE: &str = "The step over all context-free languages rests on the named theorem, \
whose engine is run on the audit corpus. The witness checks are exact. The corpus audit is a finite \
falsification check over bounded contexts and a bounded horizon, not a proof.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationCertificate {
    pub version: u32,
    pub target: TargetLanguage,
    pub target_language: String,
    pub s: WitnessSchema,
    pub t: WitnessSchema,
    pub witness_range: (u32, u32),
    pub witness_checks: Vec<WitnessCheck>,
    pub theorem: Theorem,
    pub theorem_name: String,
    pub theorem_statement: String,
    pub scope: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditReport>,
}

fn witness_check(target: TargetLanguage, s: &WitnessSchema, t: &WitnessSchema, n: u32) -> Result<WitnessCheck, SeparationError> {
    let (sw, tw) = (s.eval(n)?, t.eval(n)?);
    Ok(WitnessCheck {
        n,
        s_in_target: target.contains(&sw),
        t_in_target: target.contains(&tw),
        s_word: sw.to_string(),
        t_word: tw.to_string(),
    })
}

fn verdict_of(checks: &[WitnessCheck], audit: Option<&AuditReport>) -> Verdict {
    if !checks.iter().all(|c| c.s_in_target && !c.t_in_target) {
        return Verdict::Fail;
    }
    match audit.map(|a| a.status) {
        None | Some(AuditStatus::Pass) => Verdict::Pass,
        Some(AuditStatus::Failed) => Verdict::Fail,
        Some(AuditStatus::Partial) => Verdict::Partial,
    }
}

/// Certificate for `target` with exact witness checks on [`WITNESS_RANGE`];
/// attach an audit with [`SeparationCertificate::with_audit`].
pub fn icf_verdict(target: TargetLanguage) -> Result<SeparationCertificate, SeparationError> {
    let (s, t) = target.schemas();
    let witness_checks = (WITNESS_RANGE.0..=WITNESS_RANGE.1)
        .map(|n| witness_check(target, &s, &t, n))
        .collect::<Result<Vec<_>, _>>()?;
    let theorem = target.theorem();
    Ok(SeparationCertificate {
        version: SEPARATION_VERSION,
        target,
        target_language: target.description().into(),
        verdict: verdict_of(&witness_checks, None),
        s,
        t,
        witness_range: WITNESS_RANGE,
        witness_checks,
        theorem,
        theorem_name: theorem.name().into(),
        theorem_statement: theorem.statement().into(),
        scope: SCOPE_NOTE.into(),
        audit: None,
    })
}

impl SeparationCertificate {
    pub fn with_audit(mut self, audit: AuditReport) -> Self {
        self.verdict = verdict_of(&self.witness_checks, Some(&audit));
        self.audit = Some(audit);
        self
    }

    /// Re-checks the witness arithmetic, every stored decomposition and every
    /// attached pump certificate.
    pub fn verify(&self) -> Result<(), VerifyError> {
        check(self.version == SEPARATION_VERSION, || format!("unknown version {}", self.version))?;
        let t = self.target;
        check((self.s.clone(), self.t.clone()) == t.schemas(), || "schemas are not the target's".into())?;
        check(self.theorem == t.theorem() && self.theorem_name == t.theorem().name(), || "wrong theorem".into())?;
        check(self.target_language == t.description(), || "target description mismatch".into())?;
        let (lo, hi) = self.witness_range;
        check(self.witness_checks.iter().map(|c| c.n).eq(lo..=hi), || "witness range incomplete".into())?;
        for c in &self.witness_checks {
            let fresh = witness_check(t, &self.s, &self.t, c.n).map_err(|e| VerifyError(e.to_string()))?;
            check(fresh == *c, || format!("witness check at n = {} does not reproduce", c.n))?;
            let sw: BlockWord = c.s_word.parse().map_err(|e: WordError| VerifyError(e.to_string()))?;
            check(sw.to_string() == c.s_word, || "stored word does not round-trip".into())?;
        }
        if let Some(a) = &self.audit {
            a.verify(self)?;
        }
        check(self.verdict == verdict_of(&self.witness_checks, self.audit.as_ref()), || "verdict mismatch".into())
    }
}

/// Certificate plus audit in one call.
pub fn separate(
    target: TargetLanguage,
    corpus: &[CorpusEntry],
    context_bound: usize,
    horizon: (u32, u32),
    n_max: u32,
) -> Result<SeparationCertificate, SeparationError> {
    let cert = icf_verdict(target)?;
    let audit = corpus_audit(corpus, &cert, context_bound, horizon, n_max)?;
    Ok(cert.with_audit(audit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::builtin_corpus;

    fn bw(s: &str) -> BlockWord {
        s.parse().unwrap()
    }

    #[test]
    fn exponent_expressions_parse_and_evaluate() {
        let cases = [
            ("n!", 4, 24u64),
            ("(n!)^2", 3, 36),
            ("(n!)^2+(n-1)!", 3, 38),
            ("2(n!)", 5, 240),
            ("2*n!", 5, 240),
            ("n²+1", 3, 10),
            ("(n+1)!-n!", 3, 18),
            ("7", 9, 7),
        ];
        for (src, n, want) in cases {
            let e: ExponentExpr = src.parse().unwrap();
            assert_eq!(e.eval(n).unwrap(), BigUint::from(want), "{src}");
            let back: ExponentExpr = e.to_string().parse().unwrap();
            assert_eq!(back, e, "{src} round trip via {e}");
        }
        assert!("n^3".parse::<ExponentExpr>().is_err());
        assert!("(n".parse::<ExponentExpr>().is_err());
        assert!("n-2".parse::<ExponentExpr>().unwrap().eval(1).is_err());
        assert!(ExponentExpr::constant(3).is_constant() && !"n!".parse::<ExponentExpr>().unwrap().is_constant());
    }

    #[test]
    fn witness_evaluation_examples() {
        let s: WitnessSchema = "a^{n!} b c^{n!}".parse().unwrap();
        assert_eq!(eval_witness(&s, 4).unwrap(), bw("a^24 b c^24"));
        let s: WitnessSchema = "a^{n!} b^{(n!)^2}".parse().unwrap();
        assert_eq!(eval_witness(&s, 3).unwrap(), bw("a^6 b^36"));
        let t: WitnessSchema = "a^{n!} b^{(n!)^2+(n-1)!}".parse().unwrap();
        assert_eq!(eval_witness(&t, 3).unwrap(), bw("a^6 b^38"));
        assert!(eval_witness(&t, 0).is_err());
        assert!(eval_witness(&t, 501).is_err());
        assert!(eval_witness(&s, 500).is_ok());
        assert_eq!(t.to_string().parse::<WitnessSchema>().unwrap(), t);
        assert_eq!(serde_json::to_string(&s).unwrap(), "\"a^{n!} b^{(n!)^2}\"");
    }

    #[test]
    fn target_membership_examples() {
        use TargetLanguage::*;
        assert!(target_member(L1, &bw("a^24 b c^24")));
        assert!(!target_member(L1, &bw("a^48 b c^48")));
        assert!(target_member(L1, &bw("a b c")));
        assert!(!target_member(L1, &bw("a^24 b^2 c^24")));
        assert!(!target_member(L2, &bw("a^6 b^38")));
        assert!(target_member(L2, &bw("a^6 b^36")));
        assert!(!target_member(L2, &bw("a^6 b^3")));
        assert!(target_member(L3, &bw("a^6 b^36")) && !target_member(L3, &bw("a^6 b^12")));
        assert!(target_member(L4, &bw("a^2 b^3 c^6")) && !target_member(L4, &bw("a^2 b^3 c^7")));
        assert!(!target_member(L4, &bw("b^3 c^6")));
        assert_eq!("l2".parse::<TargetLanguage>().unwrap(), L2);
        assert!("L5".parse::<TargetLanguage>().is_err());
    }

    #[test]
    fn factorial_recognition() {
        let facts: Vec<BigUint> = (1..=20).map(factorial).collect();
        for k in 1..=2000u32 {
            let x = BigUint::from(k);
            assert_eq!(factorial_root(&x).is_some(), facts.contains(&x), "{k}");
        }
        assert_eq!(factorial_root(&factorial(60)), Some(60));
        assert_eq!(factorial_root(&(factorial(60) * 2u8)), None);
    }

    #[test]
    fn witness_checks_hold_on_the_verified_range() {
        for t in TargetLanguage::ALL {
            let cert = icf_verdict(t).unwrap();
            assert_eq!(cert.witness_checks.len(), 11);
            assert!(cert.witness_checks.iter().all(|c| c.s_in_target && !c.t_in_target), "{t}");
            assert_eq!(cert.verdict, Verdict::Pass);
            cert.verify().unwrap();
        }
        assert_eq!(icf_verdict(TargetLanguage::L1).unwrap().theorem, Theorem::CumulativePumping);
        assert_eq!(icf_verdict(TargetLanguage::L3).unwrap().theorem, Theorem::SquarePumping);
    }

    #[test]
    fn condition_examples() {
        let (s, t) = TargetLanguage::L1.schemas();
        let diag = Grammar::parse("S -> a S c | b").unwrap();
        let r = condition_check(&s, &t, &diag, 1, (2, 6), None).unwrap();
        assert_eq!(r.status, ConditionStatus::HoldsOnHorizon);
        assert_eq!(r.contexts.len(), 16);
        assert!(r.cyk_checks > 0);
        r.verify().unwrap();
        let even = Grammar::parse("S -> a a S c c | b").unwrap();
        let r = condition_check(&s, &t, &even, 1, (2, 6), None).unwrap();
        assert_eq!(r.status, ConditionStatus::HoldsOnHorizon);
        r.verify().unwrap();

        let s: WitnessSchema = "a^{n}".parse().unwrap();
        let t: WitnessSchema = "b^{n}".parse().unwrap();
        let astar = Grammar::parse("S -> a S | eps").unwrap();
        let r = condition_check(&s, &t, &astar, 0, (1, 3), None).unwrap();
        assert_eq!(r.status, ConditionStatus::Refuted);
        assert_eq!(r.violations[0], CellRef { x: String::new(), y: String::new(), n: 1 });
        r.verify().unwrap();
    }

    #[test]
    fn tampered_condition_report_fails_verification() {
        let (s, t) = TargetLanguage::L1.schemas();
        let g = Grammar::parse("S -> a S c | b").unwrap();
        let mut r = condition_check(&s, &t, &g, 1, (2, 4), None).unwrap();
        let cell = r.contexts[0].cells.iter_mut().find(|c| c.s_in == Some(true)).unwrap();
        cell.t_in = Some(false);
        cell.t_witness = None;
        assert!(r.verify().is_err());
    }

    #[test]
    fn below_bound_violations_do_not_refute() {
        // a^k b c^k with k ≤ 3 only: s_2 = a^2 b c^2 is in, t_2 = a^4 b c^4 is not
        let g = Grammar::parse("S -> b | a b c | a a b c c | a a a b c c c").unwrap();
        let (s, t) = TargetLanguage::L1.schemas();
        let r = condition_check(&s, &t, &g, 0, (2, 3), Some(Theorem::CumulativePumping)).unwrap();
        assert_eq!(r.status, ConditionStatus::HoldsOnHorizon);
        assert_eq!(r.below_bound.len(), 1);
        let r = condition_check(&s, &t, &g, 0, (2, 3), None).unwrap();
        assert_eq!(r.status, ConditionStatus::Refuted);
    }

    #[test]
    fn condition_check_composes_over_horizons() {
        let (s, t) = TargetLanguage::L2.schemas();
        let g = Grammar::parse("S -> a S b b | eps").unwrap();
        let whole = condition_check(&s, &t, &g, 1, (2, 5), Some(Theorem::SquarePumping)).unwrap();
        let lo = condition_check(&s, &t, &g, 1, (2, 3), Some(Theorem::SquarePumping)).unwrap();
        let hi = condition_check(&s, &t, &g, 1, (4, 5), Some(Theorem::SquarePumping)).unwrap();
        assert_eq!(lo.status, ConditionStatus::HoldsOnHorizon);
        assert_eq!(hi.status, ConditionStatus::HoldsOnHorizon);
        assert_eq!(whole.status, ConditionStatus::HoldsOnHorizon);
        for (w, (l, h)) in whole.contexts.iter().zip(lo.contexts.iter().zip(&hi.contexts)) {
            let joined: Vec<_> = l.cells.iter().chain(&h.cells).cloned().collect();
            assert_eq!(w.cells, joined);
        }
    }

    #[test]
    fn audit_on_a_small_corpus_passes_and_verifies() {
        let corpus: Vec<CorpusEntry> = builtin_corpus().into_iter().filter(|e| ["diagonal", "full", "empty"].contains(&e.name.as_str())).collect();
        let cert = icf_verdict(TargetLanguage::L1).unwrap();
        let audit = corpus_audit(&corpus, &cert, 1, (2, 4), N_MAX).unwrap();
        assert_eq!(audit.status, AuditStatus::Pass);
        let cert = cert.with_audit(audit);
        assert_eq!(cert.verdict, Verdict::Pass);
        let json = serde_json::to_string(&cert).unwrap();
        let back: SeparationCertificate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cert);
        back.verify().unwrap();
        let diag = &cert.audit.as_ref().unwrap().grammars[0];
        assert!(diag.engine.iter().all(|r| matches!(r.outcome, EngineOutcome::Certificate { .. })));
    }
}
