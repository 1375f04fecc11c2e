//! Context-free grammars: text format, Chomsky normal form, CYK membership
//! with derivation trees, intersection with finite automata (triple
//! construction), word quotients, homomorphic relabeling and the classical
//! pumping decomposition.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::regular::{block_pattern_nfa, MarkedNfa, Nfa, Segment};
use crate::words::{Alphabet, Word, WordError, DEFAULT_EXPANSION_CAP};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CfgError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: terminal '{letter}' is not in the declared alphabet")]
    UndeclaredTerminal { line: usize, letter: char },
    #[error("grammar has no rules")]
    NoRules,
    #[error("word of length {length} exceeds the expansion cap {cap}; use the semilinear route")]
    TooLarge { length: usize, cap: usize },
    #[error("word '{0}' is not in the language")]
    NotInLanguage(String),
    #[error("word of length {length} is below the pumping constant {constant}")]
    BelowPumpingConstant { length: usize, constant: String },
    #[error("homomorphism is not defined on terminal '{0}'")]
    PartialHomomorphism(char),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Regular(#[from] crate::regular::RegularError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    T(char),
    N(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Production {
    pub lhs: usize,
    pub rhs: Vec<Symbol>,
}

/// First code point used for fresh per-transition terminals.
const TRANSITION_SYMBOL_BASE: u32 = 0xE000;
const TRANSITION_SYMBOL_LIMIT: u32 = 0xF8FF;

/// Fresh terminal naming transition `i` of an automaton in a relabeled
/// intersection grammar.
pub fn transition_symbol(i: usize) -> char {
    let code = TRANSITION_SYMBOL_BASE + u32::try_from(i).expect("transition index");
    assert!(code <= TRANSITION_SYMBOL_LIMIT, "too many transitions to relabel");
    char::from_u32(code).expect("private use code point")
}

pub fn transition_index(c: char) -> Option<usize> {
    let code = c as u32;
    (TRANSITION_SYMBOL_BASE..=TRANSITION_SYMBOL_LIMIT)
        .contains(&code)
        .then(|| (code - TRANSITION_SYMBOL_BASE) as usize)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    nonterminals: Vec<String>,
    terminals: BTreeSet<char>,
    start: usize,
    productions: Vec<Production>,
    warnings: Vec<String>,
}

fn is_nonterminal_token(tok: &str) -> bool {
    let mut cs = tok.chars();
    cs.next().is_some_and(|c| c.is_ascii_uppercase())
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

fn is_terminal_char(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit()
}

impl Grammar {
    pub fn new(
        nonterminals: Vec<String>,
        terminals: BTreeSet<char>,
        start: usize,
        productions: Vec<Production>,
    ) -> Self {
        assert!(start < nonterminals.len());
        let mut g = Grammar { nonterminals, terminals, start, productions, warnings: Vec::new() };
        for p in &g.productions {
            for s in &p.rhs {
                match s {
                    Symbol::N(n) => assert!(*n < g.nonterminals.len(), "undeclared nonterminal"),
                    Symbol::T(c) => {
                        g.terminals.insert(*c);
                    }
                }
            }
        }
        g.productions.sort();
        g.productions.dedup();
        g
    }

    /// Parses one-rule-per-line text: `S -> a S c | b`, `eps` for the empty
    /// word, `#` comments. An optional `alphabet: abc` line declares extra
    /// terminals and makes undeclared ones an error.
    pub fn parse(text: &str) -> Result<Self, CfgError> {
        let mut names: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut declared: Option<BTreeSet<char>> = None;
        let mut productions = Vec::new();
        let mut has_rule: BTreeSet<usize> = BTreeSet::new();
        let mut terminals = BTreeSet::new();
        let mut intern = |names: &mut Vec<String>, s: &str| -> usize {
            if let Some(&i) = index.get(s) {
                return i;
            }
            names.push(s.to_string());
            index.insert(s.to_string(), names.len() - 1);
            names.len() - 1
        };
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |m: String| CfgError::Syntax { line: line_no, message: m };
            if let Some(rest) = line.strip_prefix("alphabet:") {
                declared = Some(rest.chars().filter(|c| !c.is_whitespace()).collect());
                continue;
            }
            let (lhs, rhs) = line
                .split_once("->")
                .ok_or_else(|| syntax("expected 'A -> ...'".into()))?;
            let lhs = lhs.trim();
            if !is_nonterminal_token(lhs) {
                return Err(syntax(format!("left-hand side '{lhs}' is not a nonterminal")));
            }
            let lhs_id = intern(&mut names, lhs);
            has_rule.insert(lhs_id);
            for alt in rhs.split('|') {
                let mut body = Vec::new();
                let toks: Vec<&str> = alt.split_whitespace().collect();
                if toks.is_empty() {
                    return Err(syntax("empty alternative; write 'eps'".into()));
                }
                for tok in toks {
                    if tok == "eps" || tok == "ε" {
                        continue;
                    }
                    if is_nonterminal_token(tok) {
                        body.push(Symbol::N(intern(&mut names, tok)));
                    } else if tok.chars().all(is_terminal_char) {
                        for c in tok.chars() {
                            if let Some(d) = &declared {
                                if !d.contains(&c) {
                                    return Err(CfgError::UndeclaredTerminal { line: line_no, letter: c });
                                }
                            }
                            terminals.insert(c);
                            body.push(Symbol::T(c));
                        }
                    } else {
                        return Err(syntax(format!("bad token '{tok}'")));
                    }
                }
                productions.push(Production { lhs: lhs_id, rhs: body });
            }
        }
        if names.is_empty() {
            return Err(CfgError::NoRules);
        }
        if let Some(d) = declared {
            terminals.extend(d);
        }
        let mut g = Grammar::new(names, terminals, 0, productions);
        for (i, n) in g.nonterminals.iter().enumerate() {
            if !has_rule.contains(&i) {
                g.warnings.push(format!("nonterminal {n} has no rules"));
            }
        }
        let productive = g.productive();
        let reachable = g.reachable();
        for (i, n) in g.nonterminals.iter().enumerate() {
            if has_rule.contains(&i) && !productive[i] {
                g.warnings.push(format!("nonterminal {n} is unproductive"));
            }
            if !reachable[i] {
                g.warnings.push(format!("nonterminal {n} is unreachable"));
            }
        }
        Ok(g)
    }

    pub fn nonterminals(&self) -> &[String] {
        &self.nonterminals
    }

    pub fn terminals(&self) -> &BTreeSet<char> {
        &self.terminals
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Terminal alphabet in sorted order; `None` for a grammar without
    /// terminals.
    pub fn alphabet(&self) -> Option<Alphabet> {
        Alphabet::sorted_from(self.terminals.iter().copied()).ok()
    }

    pub fn with_terminals(mut self, extra: impl IntoIterator<Item = char>) -> Self {
        self.terminals.extend(extra);
        self
    }

    pub fn productive(&self) -> Vec<bool> {
        let mut prod = vec![false; self.nonterminals.len()];
        let mut changed = true;
        while changed {
            changed = false;
            for p in &self.productions {
                if !prod[p.lhs]
                    && p.rhs.iter().all(|s| match s {
                        Symbol::T(_) => true,
                        Symbol::N(n) => prod[*n],
                    })
                {
                    prod[p.lhs] = true;
                    changed = true;
                }
            }
        }
        prod
    }

    pub fn reachable(&self) -> Vec<bool> {
        let mut reach = vec![false; self.nonterminals.len()];
        reach[self.start] = true;
        let mut stack = vec![self.start];
        while let Some(a) = stack.pop() {
            for p in self.productions.iter().filter(|p| p.lhs == a) {
                for s in &p.rhs {
                    if let Symbol::N(n) = s {
                        if !reach[*n] {
                            reach[*n] = true;
                            stack.push(*n);
                        }
                    }
                }
            }
        }
        reach
    }

    pub fn is_empty_language(&self) -> bool {
        !self.productive()[self.start]
    }

    pub fn nullable(&self) -> Vec<bool> {
        let mut null = vec![false; self.nonterminals.len()];
        let mut changed = true;
        while changed {
            changed = false;
            for p in &self.productions {
                if !null[p.lhs] && p.rhs.iter().all(|s| matches!(s, Symbol::N(n) if null[*n])) {
                    null[p.lhs] = true;
                    changed = true;
                }
            }
        }
        null
    }

    /// Keeps only productive and reachable nonterminals. The start symbol is
    /// always kept, so an empty language yields a start without rules.
    pub fn trim(&self) -> Grammar {
        let prod = self.productive();
        let useful_rules: Vec<&Production> = self
            .productions
            .iter()
            .filter(|p| prod[p.lhs] && p.rhs.iter().all(|s| !matches!(s, Symbol::N(n) if !prod[*n])))
            .collect();
        let mut reach = vec![false; self.nonterminals.len()];
        reach[self.start] = true;
        let mut stack = vec![self.start];
        while let Some(a) = stack.pop() {
            for p in useful_rules.iter().filter(|p| p.lhs == a) {
                for s in &p.rhs {
                    if let Symbol::N(n) = s {
                        if !reach[*n] {
                            reach[*n] = true;
                            stack.push(*n);
                        }
                    }
                }
            }
        }
        let keep: Vec<usize> = (0..self.nonterminals.len())
            .filter(|&i| i == self.start || (reach[i] && prod[i]))
            .collect();
        let renum: HashMap<usize, usize> = keep.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let productions = useful_rules
            .into_iter()
            .filter(|p| reach[p.lhs])
            .map(|p| Production {
                lhs: renum[&p.lhs],
                rhs: p
                    .rhs
                    .iter()
                    .map(|s| match s {
                        Symbol::T(c) => Symbol::T(*c),
                        Symbol::N(n) => Symbol::N(renum[n]),
                    })
                    .collect(),
            })
            .collect();
        Grammar::new(
            keep.iter().map(|&i| self.nonterminals[i].clone()).collect(),
            self.terminals.clone(),
            renum[&self.start],
            productions,
        )
    }

    /// Grammar for `L(self) ∪ L(other)` with a fresh start symbol.
    pub fn union(&self, other: &Grammar) -> Grammar {
        let mut names = vec!["U".to_string()];
        names.extend(self.nonterminals.iter().map(|n| format!("{n}1")));
        names.extend(other.nonterminals.iter().map(|n| format!("{n}2")));
        let off1 = 1;
        let off2 = 1 + self.nonterminals.len();
        let shift = |p: &Production, off: usize| Production {
            lhs: p.lhs + off,
            rhs: p
                .rhs
                .iter()
                .map(|s| match s {
                    Symbol::N(n) => Symbol::N(n + off),
                    t => *t,
                })
                .collect(),
        };
        let mut prods = vec![
            Production { lhs: 0, rhs: vec![Symbol::N(self.start + off1)] },
            Production { lhs: 0, rhs: vec![Symbol::N(other.start + off2)] },
        ];
        prods.extend(self.productions.iter().map(|p| shift(p, off1)));
        prods.extend(other.productions.iter().map(|p| shift(p, off2)));
        let terms = self.terminals.union(&other.terminals).copied().collect();
        Grammar::new(names, terms, 0, prods)
    }

    fn symbol_text(&self, s: &Symbol) -> String {
        match s {
            Symbol::T(c) => match transition_index(*c) {
                Some(i) => format!("t{i}"),
                None => c.to_string(),
            },
            Symbol::N(n) => self.nonterminals[*n].clone(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let order: Vec<usize> = std::iter::once(self.start)
            .chain((0..self.nonterminals.len()).filter(|&i| i != self.start))
            .collect();
        for a in order {
            let alts: Vec<String> = self
                .productions
                .iter()
                .filter(|p| p.lhs == a)
                .map(|p| {
                    if p.rhs.is_empty() {
                        "eps".to_string()
                    } else {
                        p.rhs.iter().map(|s| self.symbol_text(s)).collect::<Vec<_>>().join(" ")
                    }
                })
                .collect();
            if !alts.is_empty() {
                out.push_str(&format!("{} -> {}\n", self.nonterminals[a], alts.join(" | ")));
            }
        }
        out
    }

    pub fn to_json(&self) -> GrammarJson {
        let mut productions: Vec<ProductionJson> = self
            .productions
            .iter()
            .map(|p| ProductionJson {
                lhs: self.nonterminals[p.lhs].clone(),
                rhs: p.rhs.iter().map(|s| self.symbol_text(s)).collect(),
            })
            .collect();
        productions.sort();
        GrammarJson {
            start: self.nonterminals[self.start].clone(),
            terminals: self.terminals.iter().map(|&c| self.symbol_text(&Symbol::T(c))).collect(),
            productions,
        }
    }

    /// Short content hash of the canonical JSON export.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(&self.to_json()).expect("grammar json");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Chomsky normal form: binary rules `A → BC`, terminal rules `A → a`,
    /// and a flag for the empty word (conceptually `S₀ → ε` at a fresh start).
    pub fn to_cnf(&self) -> CnfGrammar {
        let g = self.trim();
        let null = g.nullable();
        let n0 = g.nonterminals.len();

        // drop ε: every way of erasing nullable occurrences, keeping nonempty bodies
        let mut bodies: BTreeSet<(usize, Vec<Symbol>)> = BTreeSet::new();
        for p in &g.productions {
            let nullable_pos: Vec<usize> = p
                .rhs
                .iter()
                .enumerate()
                .filter(|(_, s)| matches!(s, Symbol::N(n) if null[*n]))
                .map(|(i, _)| i)
                .collect();
            for mask in 0u64..(1u64 << nullable_pos.len()) {
                let body: Vec<Symbol> = p
                    .rhs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| match nullable_pos.iter().position(|q| q == i) {
                        Some(bit) => mask & (1 << bit) == 0,
                        None => true,
                    })
                    .map(|(_, s)| *s)
                    .collect();
                if !body.is_empty() {
                    bodies.insert((p.lhs, body));
                }
            }
        }

        // unit closure
        let mut unit = vec![vec![false; n0]; n0];
        for (a, row) in unit.iter_mut().enumerate() {
            row[a] = true;
        }
        let mut changed = true;
        while changed {
            changed = false;
            for (a, body) in &bodies {
                if let [Symbol::N(b)] = body[..] {
                    for x in 0..n0 {
                        if unit[x][*a] && !unit[x][b] {
                            unit[x][b] = true;
                            changed = true;
                        }
                    }
                }
            }
        }
        let mut rules: BTreeSet<(usize, Vec<Symbol>)> = BTreeSet::new();
        for (b, body) in &bodies {
            if matches!(body[..], [Symbol::N(_)]) {
                continue;
            }
            for a in 0..n0 {
                if unit[a][*b] {
                    rules.insert((a, body.clone()));
                }
            }
        }

        let mut names = g.nonterminals.clone();
        let mut term_nt: BTreeMap<char, usize> = BTreeMap::new();
        let mut binary = BTreeSet::new();
        let mut unary = BTreeSet::new();
        let mut pending: Vec<(usize, Vec<usize>)> = Vec::new();
        for (a, body) in rules {
            if let [Symbol::T(c)] = body[..] {
                unary.insert((a, c));
                continue;
            }
            let syms: Vec<usize> = body
                .iter()
                .map(|s| match s {
                    Symbol::N(n) => *n,
                    Symbol::T(c) => *term_nt.entry(*c).or_insert_with(|| {
                        names.push(format!("T_{c}"));
                        names.len() - 1
                    }),
                })
                .collect();
            pending.push((a, syms));
        }
        for (&c, &t) in &term_nt {
            unary.insert((t, c));
        }
        let mut chain: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for (a, syms) in pending {
            // A -> X1 Y, Y -> X2 ... Xk, sharing suffix nonterminals
            let mut lhs = a;
            let mut rest = &syms[..];
            while rest.len() > 2 {
                let suffix = rest[1..].to_vec();
                if let Some(&n) = chain.get(&suffix) {
                    binary.insert((lhs, rest[0], n));
                    rest = &[];
                    break;
                }
                names.push(format!("Y{}", chain.len()));
                let n = names.len() - 1;
                chain.insert(suffix, n);
                binary.insert((lhs, rest[0], n));
                lhs = n;
                rest = &rest[1..];
            }
            if let [b, c] = rest[..] {
                binary.insert((lhs, b, c));
            }
        }
        CnfGrammar {
            nonterminals: names,
            terminals: self.terminals.clone(),
            start: g.start,
            binary: binary.into_iter().collect(),
            unary: unary.into_iter().collect(),
            accepts_empty: null[g.start] && !g.productions.is_empty(),
        }
        .trimmed()
    }

    /// Substitutes every terminal occurrence `a` by the word `h(a)`.
    pub fn relabel(&self, h: &BTreeMap<char, Word>) -> Result<Grammar, CfgError> {
        for c in &self.terminals {
            if !h.contains_key(c) {
                return Err(CfgError::PartialHomomorphism(*c));
            }
        }
        let productions = self
            .productions
            .iter()
            .map(|p| Production {
                lhs: p.lhs,
                rhs: p
                    .rhs
                    .iter()
                    .flat_map(|s| match s {
                        Symbol::T(c) => h[c].letters().iter().map(|&l| Symbol::T(l)).collect::<Vec<_>>(),
                        n => vec![*n],
                    })
                    .collect(),
            })
            .collect();
        let terminals = self.terminals.iter().flat_map(|c| h[c].letters().iter().copied()).collect();
        Ok(Grammar::new(self.nonterminals.clone(), terminals, self.start, productions))
    }

    /// Triple construction for `L(self) ∩ L(nfa)`. With `relabel_by_transition`
    /// each terminal occurrence becomes [`transition_symbol`] of the automaton
    /// transition it consumes.
    pub fn intersect_regular(&self, nfa: &Nfa, relabel_by_transition: bool) -> Grammar {
        let cnf = self.to_cnf();
        let nt = cnf.nonterminals.len();
        let q = nfa.num_states();
        let key = |p: usize, a: usize, r: usize| (p * nt + a) * q + r;

        struct Triples<'a> {
            ids: HashMap<usize, usize>,
            names: Vec<String>,
            queue: Vec<(usize, usize, usize)>,
            by_left: HashMap<(usize, usize), Vec<usize>>, // (A, p) -> [r]
            by_right: HashMap<(usize, usize), Vec<usize>>, // (A, r) -> [p]
            labels: &'a [String],
        }
        impl Triples<'_> {
            fn intern(&mut self, k: usize, p: usize, a: usize, r: usize) -> usize {
                if let Some(&id) = self.ids.get(&k) {
                    return id;
                }
                self.names.push(format!("N{p}_{}_{r}", self.labels[a]));
                let id = self.names.len() - 1;
                self.ids.insert(k, id);
                self.queue.push((p, a, r));
                self.by_left.entry((a, p)).or_default().push(r);
                self.by_right.entry((a, r)).or_default().push(p);
                id
            }
        }
        let mut tt = Triples {
            ids: HashMap::new(),
            names: vec!["Start".to_string()],
            queue: Vec::new(),
            by_left: HashMap::new(),
            by_right: HashMap::new(),
            labels: &cnf.nonterminals,
        };
        let mut productions: Vec<Production> = Vec::new();
        let mut seen_rules: HashSet<(usize, usize, usize)> = HashSet::new();

        let mut terminals = BTreeSet::new();
        for (ti, t) in nfa.transitions().iter().enumerate() {
            for &(a, c) in &cnf.unary {
                if c == t.letter {
                    let id = tt.intern(key(t.from, a, t.to), t.from, a, t.to);
                    let sym = if relabel_by_transition { transition_symbol(ti) } else { c };
                    terminals.insert(sym);
                    productions.push(Production { lhs: id, rhs: vec![Symbol::T(sym)] });
                }
            }
        }
        let mut left_rules: HashMap<usize, Vec<(usize, usize)>> = HashMap::new(); // B -> [(A, C)]
        let mut right_rules: HashMap<usize, Vec<(usize, usize)>> = HashMap::new(); // C -> [(A, B)]
        for &(a, b, c) in &cnf.binary {
            left_rules.entry(b).or_default().push((a, c));
            right_rules.entry(c).or_default().push((a, b));
        }
        let mut head = 0;
        while head < tt.queue.len() {
            let (p, x, r) = tt.queue[head];
            head += 1;
            // (A, s, mid, e, B, C): (s, A, e) -> (s, B, mid)(mid, C, e)
            let mut found: Vec<(usize, usize, usize, usize, usize, usize)> = Vec::new();
            if let Some(rules) = left_rules.get(&x) {
                for &(a, c) in rules {
                    for &e in tt.by_left.get(&(c, r)).into_iter().flatten() {
                        found.push((a, p, r, e, x, c));
                    }
                }
            }
            if let Some(rules) = right_rules.get(&x) {
                for &(a, b) in rules {
                    for &s in tt.by_right.get(&(b, p)).into_iter().flatten() {
                        found.push((a, s, p, r, b, x));
                    }
                }
            }
            for (a, s, mid, e, b, c) in found {
                let left = tt.ids[&key(s, b, mid)];
                let right = tt.ids[&key(mid, c, e)];
                let lhs = tt.intern(key(s, a, e), s, a, e);
                if seen_rules.insert((lhs, left, right)) {
                    productions.push(Production { lhs, rhs: vec![Symbol::N(left), Symbol::N(right)] });
                }
            }
        }
        for &p in nfa.initial() {
            for &f in nfa.finals() {
                if let Some(&id) = tt.ids.get(&key(p, cnf.start, f)) {
                    productions.push(Production { lhs: 0, rhs: vec![Symbol::N(id)] });
                }
                if cnf.accepts_empty && p == f {
                    productions.push(Production { lhs: 0, rhs: vec![] });
                }
            }
        }
        let names = tt.names;
        if !relabel_by_transition {
            terminals = self.terminals.clone();
        }
        Grammar::new(names, terminals, 0, productions).trim()
    }

    /// Marked-automaton variant of [`Grammar::intersect_regular`].
    pub fn intersect_marked(&self, nfa: &MarkedNfa) -> Grammar {
        self.intersect_regular(&nfa.nfa, true)
    }

    /// Grammar for `u⁻¹L` (left) or `Lu⁻¹` (right), via intersection with
    /// `u·A*` (resp. `A*·u`) and an erasing relabel of the forced factor.
    pub fn word_quotient(&self, u: &Word, side: QuotientSide) -> Result<Grammar, CfgError> {
        let letters: BTreeSet<char> = self.terminals.iter().chain(u.letters()).copied().collect();
        let alphabet = Alphabet::sorted_from(letters.iter().copied())?;
        let star = Segment::Star(alphabet.letters().to_vec());
        let segments = match side {
            QuotientSide::Left => vec![Segment::Fixed(u.clone()), star],
            QuotientSide::Right => vec![star, Segment::Fixed(u.clone())],
        };
        let marked = block_pattern_nfa(alphabet, &segments)?;
        let inter = self.intersect_marked(&marked);
        let h = erase_except_marked(&marked, inter.terminals(), |t, _| Word::new(vec![t.letter]));
        Ok(inter.relabel(&h)?.with_terminals(self.terminals.iter().copied()))
    }
}

/// Homomorphism on transition symbols: marked transitions map through
/// `keep`, everything else to ε.
pub fn erase_except_marked(
    marked: &MarkedNfa,
    symbols: &BTreeSet<char>,
    keep: impl Fn(&crate::regular::Transition, usize) -> Word,
) -> BTreeMap<char, Word> {
    symbols
        .iter()
        .map(|&c| {
            let idx = transition_index(c).expect("transition symbol");
            let image = match marked.mark_of(idx) {
                Some(m) => keep(&marked.nfa.transitions()[idx], m),
                None => Word::empty(),
            };
            (c, image)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuotientSide {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProductionJson {
    pub lhs: String,
    pub rhs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrammarJson {
    pub start: String,
    pub terminals: Vec<String>,
    pub productions: Vec<ProductionJson>,
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Grammar in Chomsky normal form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfGrammar {
    pub nonterminals: Vec<String>,
    pub terminals: BTreeSet<char>,
    pub start: usize,
    pub binary: Vec<(usize, usize, usize)>,
    pub unary: Vec<(usize, char)>,
    pub accepts_empty: bool,
}

#[derive(Debug, Clone, Copy)]
enum Back {
    Leaf,
    Split(usize, usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DerivationTree {
    Leaf(Option<char>),
    Node { nonterminal: String, children: Vec<DerivationTree> },
}

impl DerivationTree {
    pub fn yield_word(&self) -> Word {
        let mut out = Vec::new();
        fn walk(t: &DerivationTree, out: &mut Vec<char>) {
            match t {
                DerivationTree::Leaf(Some(c)) => out.push(*c),
                DerivationTree::Leaf(None) => {}
                DerivationTree::Node { children, .. } => children.iter().for_each(|c| walk(c, out)),
            }
        }
        walk(self, &mut out);
        Word::new(out)
    }
}

struct Spanned {
    nt: usize,
    start: usize,
    end: usize,
    children: Vec<Spanned>,
}

/// Factorization `z = u v w x y` from the classical pumping lemma, with the
/// pumped instances checked by CYK.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PumpDecomposition {
    pub u: String,
    pub v: String,
    pub w: String,
    pub x: String,
    pub y: String,
    pub constant: String,
    pub verified: Vec<(usize, bool)>,
}

impl CnfGrammar {
    fn trimmed(self) -> CnfGrammar {
        let n = self.nonterminals.len();
        let mut prod = vec![false; n];
        for &(a, _) in &self.unary {
            prod[a] = true;
        }
        let mut changed = true;
        while changed {
            changed = false;
            for &(a, b, c) in &self.binary {
                if !prod[a] && prod[b] && prod[c] {
                    prod[a] = true;
                    changed = true;
                }
            }
        }
        let mut reach = vec![false; n];
        reach[self.start] = true;
        let mut stack = vec![self.start];
        while let Some(a) = stack.pop() {
            for &(x, b, c) in &self.binary {
                if x == a && prod[b] && prod[c] {
                    for y in [b, c] {
                        if !reach[y] {
                            reach[y] = true;
                            stack.push(y);
                        }
                    }
                }
            }
        }
        let keep: Vec<usize> = (0..n).filter(|&i| i == self.start || (prod[i] && reach[i])).collect();
        let renum: HashMap<usize, usize> = keep.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let binary = self
            .binary
            .iter()
            .filter(|(a, b, c)| renum.contains_key(a) && renum.contains_key(b) && renum.contains_key(c) && prod[*a])
            .map(|(a, b, c)| (renum[a], renum[b], renum[c]))
            .collect();
        let unary = self
            .unary
            .iter()
            .filter(|(a, _)| renum.contains_key(a))
            .map(|(a, c)| (renum[a], *c))
            .collect();
        CnfGrammar {
            nonterminals: keep.iter().map(|&i| self.nonterminals[i].clone()).collect(),
            terminals: self.terminals,
            start: renum[&self.start],
            binary,
            unary,
            accepts_empty: self.accepts_empty,
        }
    }

    /// Pumping constant `2^{#nonterminals}`.
    pub fn pumping_constant(&self) -> num_bigint::BigUint {
        num_bigint::BigUint::from(1u8) << self.nonterminals.len()
    }

    fn table(&self, w: &Word) -> Vec<Vec<Vec<Option<Back>>>> {
        let n = w.len();
        let nt = self.nonterminals.len();
        // table[len - 1][i][A]
        let mut table: Vec<Vec<Vec<Option<Back>>>> = Vec::with_capacity(n);
        table.push(
            (0..n)
                .map(|i| {
                    let mut cell = vec![None; nt];
                    for &(a, c) in &self.unary {
                        if c == w[i] {
                            cell[a] = Some(Back::Leaf);
                        }
                    }
                    cell
                })
                .collect(),
        );
        for len in 2..=n {
            let mut row = Vec::with_capacity(n + 1 - len);
            for i in 0..=(n - len) {
                let mut cell: Vec<Option<Back>> = vec![None; nt];
                for split in 1..len {
                    let left = &table[split - 1][i];
                    let right = &table[len - split - 1][i + split];
                    for &(a, b, c) in &self.binary {
                        if cell[a].is_none() && left[b].is_some() && right[c].is_some() {
                            cell[a] = Some(Back::Split(split, b, c));
                        }
                    }
                }
                row.push(cell);
            }
            table.push(row);
        }
        table
    }

    fn spanned(&self, table: &[Vec<Vec<Option<Back>>>], a: usize, i: usize, len: usize) -> Spanned {
        match table[len - 1][i][a].expect("derivable cell") {
            Back::Leaf => Spanned { nt: a, start: i, end: i + 1, children: vec![] },
            Back::Split(k, b, c) => Spanned {
                nt: a,
                start: i,
                end: i + len,
                children: vec![self.spanned(table, b, i, k), self.spanned(table, c, i + k, len - k)],
            },
        }
    }

    fn to_tree(&self, s: &Spanned, w: &Word) -> DerivationTree {
        let children = if s.children.is_empty() {
            vec![DerivationTree::Leaf(Some(w[s.start]))]
        } else {
            s.children.iter().map(|c| self.to_tree(c, w)).collect()
        };
        DerivationTree::Node { nonterminal: self.nonterminals[s.nt].clone(), children }
    }

    /// CYK membership of `w`, with a derivation tree on acceptance.
    pub fn cyk(&self, w: &Word, cap: usize) -> Result<Option<DerivationTree>, CfgError> {
        if w.len() > cap {
            return Err(CfgError::TooLarge { length: w.len(), cap });
        }
        if w.is_empty() {
            return Ok(self.accepts_empty.then(|| DerivationTree::Node {
                nonterminal: self.nonterminals[self.start].clone(),
                children: vec![DerivationTree::Leaf(None)],
            }));
        }
        let table = self.table(w);
        if table[w.len() - 1][0][self.start].is_none() {
            return Ok(None);
        }
        let s = self.spanned(&table, self.start, 0, w.len());
        Ok(Some(self.to_tree(&s, w)))
    }

    pub fn accepts(&self, w: &Word) -> bool {
        if w.is_empty() {
            return self.accepts_empty;
        }
        if w.letters().iter().any(|c| !self.terminals.contains(c)) {
            return false;
        }
        let table = self.table(w);
        table[w.len() - 1][0][self.start].is_some()
    }

    /// Classical pumping decomposition of `z` read off a CYK derivation tree:
    /// the lowest repeated nonterminal on a longest root-to-leaf path.
    pub fn classic_pump_decomposition(&self, z: &Word) -> Result<PumpDecomposition, CfgError> {
        let constant = self.pumping_constant();
        if num_bigint::BigUint::from(z.len()) < constant {
            return Err(CfgError::BelowPumpingConstant { length: z.len(), constant: constant.to_string() });
        }
        if z.len() > DEFAULT_EXPANSION_CAP {
            return Err(CfgError::TooLarge { length: z.len(), cap: DEFAULT_EXPANSION_CAP });
        }
        let table = self.table(z);
        if table[z.len() - 1][0][self.start].is_none() {
            return Err(CfgError::NotInLanguage(z.to_string()));
        }
        let root = self.spanned(&table, self.start, 0, z.len());
        fn deepest<'a>(s: &'a Spanned, path: &mut Vec<&'a Spanned>, best: &mut Vec<&'a Spanned>) {
            path.push(s);
            if s.children.is_empty() {
                if path.len() > best.len() {
                    *best = path.clone();
                }
            } else {
                for c in &s.children {
                    deepest(c, path, best);
                }
            }
            path.pop();
        }
        let mut best = Vec::new();
        deepest(&root, &mut Vec::new(), &mut best);
        let mut last_seen: HashMap<usize, usize> = HashMap::new();
        let mut pair = None;
        for idx in (0..best.len()).rev() {
            if let Some(&lower) = last_seen.get(&best[idx].nt) {
                pair = Some((idx, lower));
                break;
            }
            last_seen.insert(best[idx].nt, idx);
        }
        let (upper, lower) = pair.expect("path longer than the number of nonterminals");
        let (up, low) = (best[upper], best[lower]);
        let s: String = z.letters().iter().collect();
        let chars: Vec<char> = s.chars().collect();
        let slice = |a: usize, b: usize| chars[a..b].iter().collect::<String>();
        let (u, v, w, x, y) = (
            slice(0, up.start),
            slice(up.start, low.start),
            slice(low.start, low.end),
            slice(low.end, up.end),
            slice(up.end, chars.len()),
        );
        let ctx = crate::regular::Context::new(&u, &v, &w, &x, &y);
        let verified = (0..=3).map(|i| (i, self.accepts(&ctx.instance(i, i)))).collect();
        Ok(PumpDecomposition { u, v, w, x, y, constant: constant.to_string(), verified })
    }

    pub fn to_json(&self) -> CnfJson {
        let mut rules: Vec<ProductionJson> = self
            .binary
            .iter()
            .map(|&(a, b, c)| ProductionJson {
                lhs: self.nonterminals[a].clone(),
                rhs: vec![self.nonterminals[b].clone(), self.nonterminals[c].clone()],
            })
            .chain(self.unary.iter().map(|&(a, c)| ProductionJson {
                lhs: self.nonterminals[a].clone(),
                rhs: vec![c.to_string()],
            }))
            .collect();
        rules.sort();
        CnfJson { start: self.nonterminals[self.start].clone(), accepts_empty: self.accepts_empty, rules }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnfJson {
    pub start: String,
    pub accepts_empty: bool,
    pub rules: Vec<ProductionJson>,
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn g(text: &str) -> Grammar {
        Grammar::parse(text).unwrap()
    }

    /// Independent oracle: breadth-first leftmost derivations, pruned by
    /// terminal count and by the number of non-nullable symbols.
    pub(crate) fn derived_words(gr: &Grammar, max_len: usize) -> BTreeSet<Word> {
        let null = gr.nullable();
        let weight = |form: &[Symbol]| {
            form.iter()
                .filter(|s| match s {
                    Symbol::T(_) => true,
                    Symbol::N(n) => !null[*n],
                })
                .count()
        };
        let mut seen: BTreeSet<Vec<Symbol>> = BTreeSet::new();
        let mut out = BTreeSet::new();
        let start = vec![Symbol::N(gr.start())];
        seen.insert(start.clone());
        let mut frontier = vec![start];
        while let Some(form) = frontier.pop() {
            let Some(pos) = form.iter().position(|s| matches!(s, Symbol::N(_))) else {
                out.insert(Word::new(form.iter().map(|s| if let Symbol::T(c) = s { *c } else { unreachable!() }).collect()));
                continue;
            };
            let Symbol::N(a) = form[pos] else { unreachable!() };
            for p in gr.productions().iter().filter(|p| p.lhs == a) {
                let mut next = form[..pos].to_vec();
                next.extend(p.rhs.iter().copied());
                next.extend_from_slice(&form[pos + 1..]);
                if weight(&next) <= max_len && next.len() <= max_len + 6 && seen.insert(next.clone()) {
                    frontier.push(next);
                }
            }
        }
        out
    }

    fn abc() -> Alphabet {
        Alphabet::new("abc".chars()).unwrap()
    }

    fn anbcn(w: &Word) -> bool {
        let s: String = w.letters().iter().collect();
        let n = s.chars().take_while(|&c| c == 'a').count();
        s == format!("{}b{}", "a".repeat(n), "c".repeat(n))
    }

    #[test]
    fn parse_basic_grammar() {
        let gr = g("S -> a S c | b");
        assert_eq!(gr.productions().len(), 2);
        assert_eq!(gr.terminals().iter().collect::<String>(), "abc");
        let eps = g("S -> eps");
        assert_eq!(eps.productions()[0].rhs, vec![]);
    }

    #[test]
    fn parse_useless_symbol_warns() {
        let gr = g("S -> a T");
        assert!(gr.warnings().iter().any(|w| w.contains("T has no rules")));
        assert!(gr.is_empty_language());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(matches!(Grammar::parse("S -> a\nS => b"), Err(CfgError::Syntax { line: 2, .. })));
        assert!(matches!(Grammar::parse("s -> a"), Err(CfgError::Syntax { line: 1, .. })));
        assert!(matches!(Grammar::parse("S -> a + b"), Err(CfgError::Syntax { line: 1, .. })));
        assert!(matches!(
            Grammar::parse("alphabet: ab\nS -> a c"),
            Err(CfgError::UndeclaredTerminal { line: 2, letter: 'c' })
        ));
        assert_eq!(Grammar::parse("# nothing"), Err(CfgError::NoRules));
    }

    #[test]
    fn cnf_preserves_language() {
        let corpus = [
            "S -> a S c | b",
            "S -> eps",
            "S -> a S b S | eps",
            "S -> X Y\nX -> a X b | eps\nY -> b Y c | eps",
            "S -> A\nA -> B\nB -> a | S S",
            "S -> a S | b S | c S | eps",
            "S -> a a S c c | b",
        ];
        for text in corpus {
            let gr = g(text);
            let cnf = gr.to_cnf();
            let oracle = derived_words(&gr, 8);
            for w in abc().words_up_to(8) {
                assert_eq!(cnf.accepts(&w), oracle.contains(&w), "{text}: {w}");
            }
        }
    }

    #[test]
    fn cnf_edge_cases() {
        let eps = g("S -> eps").to_cnf();
        assert!(eps.accepts_empty);
        assert!(eps.binary.is_empty() && eps.unary.is_empty());
        let empty = g("S -> a S").to_cnf();
        assert!(!empty.accepts_empty);
        assert!(empty.binary.is_empty() && empty.unary.is_empty());
    }

    #[test]
    fn cyk_membership_and_tree() {
        let cnf = g("S -> a S c | b").to_cnf();
        let w = Word::from("aabcc");
        let tree = cnf.cyk(&w, 100).unwrap().expect("member");
        assert_eq!(tree.yield_word(), w);
        assert!(cnf.cyk(&Word::from("aabc"), 100).unwrap().is_none());
        assert!(cnf.cyk(&Word::empty(), 100).unwrap().is_none());
        assert!(matches!(cnf.cyk(&Word::from("aaa"), 2), Err(CfgError::TooLarge { .. })));
    }

    #[test]
    fn intersection_with_regular() {
        let gr = g("S -> a S c | b");
        let nfa = Nfa::letter_stars(abc(), &['a', 'b', 'c']).unwrap();
        let inter = gr.intersect_regular(&nfa, false);
        let cnf = inter.to_cnf();
        for w in abc().words_up_to(9) {
            assert_eq!(cnf.accepts(&w), anbcn(&w), "{w}");
        }
        let none = gr.intersect_regular(&Nfa::empty_language(abc()), false);
        assert!(none.is_empty_language());
    }

    #[test]
    fn intersection_matches_conjunction() {
        let abc = abc();
        let nfa = crate::regular::pattern_nfa(abc.clone(), &crate::regular::Context::new("", "ab", "", "c", ""))
            .unwrap()
            .nfa;
        for text in ["S -> a S b S | c | eps", "S -> a S | b S | c S | eps", "S -> X Y\nX -> a X b | eps\nY -> b Y c | eps"] {
            let gr = g(text);
            let base = gr.to_cnf();
            let inter = gr.intersect_regular(&nfa, false).to_cnf();
            for w in abc.words_up_to(8) {
                assert_eq!(inter.accepts(&w), base.accepts(&w) && nfa.accepts(&w), "{text}: {w}");
            }
        }
    }

    #[test]
    fn relabeled_intersection_counts_loop_transitions() {
        let gr = g("S -> a S c | b");
        let marked = crate::regular::pattern_nfa(abc(), &crate::regular::Context::new("", "a", "b", "c", "")).unwrap();
        let inter = gr.intersect_marked(&marked);
        let h = erase_except_marked(&marked, inter.terminals(), |_, m| Word::new(vec![if m == 0 { 'i' } else { 'j' }]));
        let counts = inter.relabel(&h).unwrap().to_cnf();
        let ij = Alphabet::new("ij".chars()).unwrap();
        for w in ij.words_up_to(8) {
            let i = w.letters().iter().filter(|&&c| c == 'i').count();
            let j = w.len() - i;
            let sorted = w.letters().iter().all(|&c| c == 'i') || w.letters().windows(2).all(|p| p != ['j', 'i']);
            // the i-symbols precede the j-symbols in every derived word
            assert_eq!(counts.accepts(&w), sorted && i == j, "{w}");
        }
    }

    #[test]
    fn left_and_right_quotients() {
        let gr = g("S -> a S c | b");
        let left = gr.word_quotient(&Word::from("a"), QuotientSide::Left).unwrap().to_cnf();
        for w in abc().words_up_to(9) {
            assert_eq!(left.accepts(&w), anbcn(&Word::from("a").concat(&w)), "{w}");
        }
        let same = gr.word_quotient(&Word::empty(), QuotientSide::Left).unwrap().to_cnf();
        for w in abc().words_up_to(7) {
            assert_eq!(same.accepts(&w), anbcn(&w));
        }
        let right = gr.word_quotient(&Word::from("b"), QuotientSide::Right).unwrap().to_cnf();
        for t in abc().words_up_to(6) {
            assert_eq!(right.accepts(&t), t.is_empty(), "{t}");
        }
    }

    #[test]
    fn relabel_images() {
        let gr = g("S -> a S c | b");
        let h: BTreeMap<char, Word> = [('a', Word::from("a")), ('b', Word::empty()), ('c', Word::from("c"))].into();
        let img = gr.relabel(&h).unwrap().to_cnf();
        let ac = Alphabet::new("ac".chars()).unwrap();
        for w in ac.words_up_to(8) {
            let n = w.len() / 2;
            let expect = w == Word::from(format!("{}{}", "a".repeat(n), "c".repeat(n)).as_str());
            assert_eq!(img.accepts(&w), expect, "{w}");
        }
        let id: BTreeMap<char, Word> = "abc".chars().map(|c| (c, Word::new(vec![c]))).collect();
        assert_eq!(gr.relabel(&id).unwrap(), gr);
        let xyz = g("S -> a b")
            .relabel(&[('a', Word::from("xy")), ('b', Word::from("z"))].into())
            .unwrap();
        assert_eq!(xyz.productions()[0].rhs, vec![Symbol::T('x'), Symbol::T('y'), Symbol::T('z')]);
        assert_eq!(
            gr.relabel(&[('a', Word::empty())].into()),
            Err(CfgError::PartialHomomorphism('b'))
        );
    }

    #[test]
    fn classic_pumping() {
        let cnf = g("S -> a S c | b").to_cnf();
        let n = cnf.pumping_constant();
        assert_eq!(n, num_bigint::BigUint::from(16u8));
        let z = Word::from(format!("{}b{}", "a".repeat(8), "c".repeat(8)).as_str());
        let d = cnf.classic_pump_decomposition(&z).unwrap();
        assert!(d.verified.iter().all(|(_, ok)| *ok));
        assert!(!d.v.is_empty() && d.v.chars().all(|c| c == 'a'));
        assert!(d.x.chars().all(|c| c == 'c') && d.v.len() == d.x.len());
        assert!(d.v.len() + d.w.len() + d.x.len() <= 16);
        assert!(matches!(
            cnf.classic_pump_decomposition(&Word::from("b")),
            Err(CfgError::BelowPumpingConstant { .. })
        ));
        assert!(matches!(
            cnf.classic_pump_decomposition(&Word::from("abc")),
            Err(CfgError::BelowPumpingConstant { .. })
        ));
        let not_member = Word::from("a".repeat(17).as_str());
        assert!(matches!(cnf.classic_pump_decomposition(&not_member), Err(CfgError::NotInLanguage(_))));
    }

    #[test]
    fn json_export_is_sorted_and_hash_stable() {
        let a = g("S -> b | a S c");
        let b = g("S -> a S c | b");
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.content_hash(), b.content_hash());
        assert_ne!(a.content_hash(), g("S -> a S c | c").content_hash());
    }
}
