//! Finite automata: NFAs, total DFAs, residual (minimal) automata with their
//! inclusion order, quotients, and marked block-pattern automata used by the
//! pumping engines.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::words::{Alphabet, Word, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegularError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("automaton is not minimal")]
    NotMinimal,
    #[error("degenerate context: pumped factors must be nonempty")]
    DegenerateContext,
    #[error("alphabet mismatch: {0} vs {1}")]
    AlphabetMismatch(String, String),
    #[error(transparent)]
    Word(#[from] WordError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Transition {
    pub from: usize,
    pub letter: char,
    pub to: usize,
}

/// Nondeterministic automaton without ε-moves. States are `0..num_states`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nfa {
    alphabet: Alphabet,
    num_states: usize,
    transitions: Vec<Transition>,
    initial: BTreeSet<usize>,
    finals: BTreeSet<usize>,
}

impl Nfa {
    pub fn new(alphabet: Alphabet, num_states: usize) -> Self {
        Nfa {
            alphabet,
            num_states,
            transitions: Vec::new(),
            initial: BTreeSet::new(),
            finals: BTreeSet::new(),
        }
    }

    pub fn add_state(&mut self) -> usize {
        self.num_states += 1;
        self.num_states - 1
    }

    pub fn add_transition(&mut self, from: usize, letter: char, to: usize) -> Result<usize, RegularError> {
        if !self.alphabet.contains(letter) {
            return Err(WordError::LetterOutsideAlphabet(letter).into());
        }
        assert!(from < self.num_states && to < self.num_states, "transition over undeclared state");
        self.transitions.push(Transition { from, letter, to });
        Ok(self.transitions.len() - 1)
    }

    pub fn set_initial(&mut self, q: usize) {
        self.initial.insert(q);
    }

    pub fn set_final(&mut self, q: usize) {
        self.finals.insert(q);
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn initial(&self) -> &BTreeSet<usize> {
        &self.initial
    }

    pub fn finals(&self) -> &BTreeSet<usize> {
        &self.finals
    }

    /// NFA accepting exactly the empty language.
    pub fn empty_language(alphabet: Alphabet) -> Self {
        let mut n = Nfa::new(alphabet, 1);
        n.set_initial(0);
        n
    }

    /// Straight-line NFA for the single word `w`.
    pub fn word(alphabet: Alphabet, w: &Word) -> Result<Self, RegularError> {
        let mut n = Nfa::new(alphabet, 1);
        n.set_initial(0);
        let mut cur = 0;
        for &c in w.letters() {
            let nxt = n.add_state();
            n.add_transition(cur, c, nxt)?;
            cur = nxt;
        }
        n.set_final(cur);
        Ok(n)
    }

    /// NFA for `l₁* l₂* … l_k*` over single letters.
    pub fn letter_stars(alphabet: Alphabet, letters: &[char]) -> Result<Self, RegularError> {
        let segments: Vec<Segment> = letters.iter().map(|&c| Segment::Loop(Word::new(vec![c]))).collect();
        Ok(block_pattern_nfa(alphabet, &segments)?.nfa)
    }

    pub fn accepts(&self, w: &Word) -> bool {
        let mut by_state: HashMap<(usize, char), Vec<usize>> = HashMap::new();
        for t in &self.transitions {
            by_state.entry((t.from, t.letter)).or_default().push(t.to);
        }
        let mut cur: BTreeSet<usize> = self.initial.clone();
        for &c in w.letters() {
            let mut next = BTreeSet::new();
            for q in &cur {
                if let Some(ts) = by_state.get(&(*q, c)) {
                    next.extend(ts.iter().copied());
                }
            }
            cur = next;
        }
        cur.iter().any(|q| self.finals.contains(q))
    }

    /// Subset construction followed by minimization.
    pub fn determinize_minimize(&self) -> Dfa {
        let k = self.alphabet.len();
        let mut succ: Vec<Vec<BTreeSet<usize>>> = vec![vec![BTreeSet::new(); k]; self.num_states];
        for t in &self.transitions {
            let a = self.alphabet.index_of(t.letter).expect("validated letter");
            succ[t.from][a].insert(t.to);
        }
        let mut index: BTreeMap<BTreeSet<usize>, usize> = BTreeMap::new();
        let mut subsets: Vec<BTreeSet<usize>> = Vec::new();
        let mut delta: Vec<Vec<usize>> = Vec::new();
        let start = self.initial.clone();
        index.insert(start.clone(), 0);
        subsets.push(start);
        let mut i = 0;
        while i < subsets.len() {
            let mut row = Vec::with_capacity(k);
            for a in 0..k {
                let mut next = BTreeSet::new();
                for &q in &subsets[i] {
                    next.extend(succ[q][a].iter().copied());
                }
                let id = match index.get(&next) {
                    Some(&id) => id,
                    None => {
                        let id = subsets.len();
                        index.insert(next.clone(), id);
                        subsets.push(next);
                        id
                    }
                };
                row.push(id);
            }
            delta.push(row);
            i += 1;
        }
        let finals = subsets
            .iter()
            .map(|s| s.iter().any(|q| self.finals.contains(q)))
            .collect();
        Dfa {
            alphabet: self.alphabet.clone(),
            delta,
            initial: 0,
            finals,
        }
        .minimize()
    }

    pub fn parse(text: &str) -> Result<Self, RegularError> {
        let mut alphabet: Option<Alphabet> = None;
        let mut names: BTreeMap<String, usize> = BTreeMap::new();
        let mut raw_edges: Vec<(usize, char, String)> = Vec::new();
        let mut initial = Vec::new();
        let mut finals = Vec::new();
        let intern = |names: &mut BTreeMap<String, usize>, s: &str| {
            let n = names.len();
            *names.entry(s.to_string()).or_insert(n)
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let lineno = lineno + 1;
            if line.is_empty() {
                continue;
            }
            let syntax = |m: &str| RegularError::Syntax { line: lineno, message: m.to_string() };
            if let Some(rest) = line.strip_prefix("alphabet:") {
                alphabet = Some(Alphabet::new(rest.trim().chars().filter(|c| !c.is_whitespace()))?);
            } else if let Some(rest) = line.strip_prefix("state ") {
                let mut parts = rest.split_whitespace();
                let name = parts.next().ok_or_else(|| syntax("missing state name"))?;
                let id = intern(&mut names, name);
                for flag in parts {
                    match flag {
                        "initial" | "[initial]" => initial.push(id),
                        "final" | "[final]" => finals.push(id),
                        other => return Err(syntax(&format!("unknown state flag '{other}'"))),
                    }
                }
            } else {
                let parts: Vec<&str> = line.split_whitespace().collect();
                let [from, arrow, to] = parts[..] else {
                    return Err(syntax("expected 'p -a-> q'"));
                };
                let label = arrow
                    .strip_prefix('-')
                    .and_then(|s| s.strip_suffix("->"))
                    .ok_or_else(|| syntax("expected arrow '-a->'"))?;
                let mut cs = label.chars();
                let letter = match (cs.next(), cs.next()) {
                    (Some(c), None) => c,
                    _ => return Err(syntax("transition label must be one letter")),
                };
                let f = intern(&mut names, from);
                intern(&mut names, to);
                raw_edges.push((f, letter, to.to_string()));
            }
        }
        let alphabet = alphabet.ok_or(RegularError::Syntax { line: 1, message: "missing 'alphabet:' header".into() })?;
        let mut nfa = Nfa::new(alphabet, names.len());
        for (f, c, to) in raw_edges {
            let t = names[&to];
            nfa.add_transition(f, c, t)?;
        }
        for q in initial {
            nfa.set_initial(q);
        }
        for q in finals {
            nfa.set_final(q);
        }
        Ok(nfa)
    }
}

/// One segment of a block pattern: a fixed word, a marked loop `v*`, or a
/// marked star over a set of letters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Fixed(Word),
    Loop(Word),
    Star(Vec<char>),
}

/// NFA whose transitions may carry a mark index. A run crossing the marked
/// entry edge of loop `m` exactly `i` times traverses that loop `i` times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedNfa {
    pub nfa: Nfa,
    /// Mark per transition, indexed like `nfa.transitions()`.
    pub marks: Vec<Option<usize>>,
    pub mark_count: usize,
}

impl MarkedNfa {
    pub fn mark_of(&self, transition: usize) -> Option<usize> {
        self.marks[transition]
    }
}

/// The five words `(u, v, w, x, y)` of a pumping context.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Context {
    pub u: String,
    pub v: String,
    pub w: String,
    pub x: String,
    pub y: String,
}

impl Context {
    pub fn new(u: &str, v: &str, w: &str, x: &str, y: &str) -> Self {
        Context {
            u: u.into(),
            v: v.into(),
            w: w.into(),
            x: x.into(),
            y: y.into(),
        }
    }

    /// Parses `u,v,w,x,y`; `eps` or an empty field is the empty word.
    pub fn parse(s: &str) -> Option<Self> {
        let parts: Vec<String> = s
            .split(',')
            .map(|p| {
                let p = p.trim();
                if p == "eps" || p == "ε" {
                    String::new()
                } else {
                    p.to_string()
                }
            })
            .collect();
        if parts.len() != 5 {
            return None;
        }
        Some(Context {
            u: parts[0].clone(),
            v: parts[1].clone(),
            w: parts[2].clone(),
            x: parts[3].clone(),
            y: parts[4].clone(),
        })
    }

    pub fn words(&self) -> [Word; 5] {
        [
            Word::from(self.u.as_str()),
            Word::from(self.v.as_str()),
            Word::from(self.w.as_str()),
            Word::from(self.x.as_str()),
            Word::from(self.y.as_str()),
        ]
    }

    pub fn letters(&self) -> BTreeSet<char> {
        [&self.u, &self.v, &self.w, &self.x, &self.y]
            .iter()
            .flat_map(|s| s.chars())
            .collect()
    }

    /// The word `u vⁱ w xʲ y`.
    pub fn instance(&self, i: usize, j: usize) -> Word {
        let [u, v, w, x, y] = self.words();
        u.concat(&v.repeat(i)).concat(&w).concat(&x.repeat(j)).concat(&y)
    }

    pub fn segments(&self) -> Vec<Segment> {
        let [u, v, w, x, y] = self.words();
        vec![Segment::Fixed(u), Segment::Loop(v), Segment::Fixed(w), Segment::Loop(x), Segment::Fixed(y)]
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |s: &str| if s.is_empty() { "ε".to_string() } else { s.to_string() };
        write!(
            f,
            "({},{},{},{},{})",
            show(&self.u),
            show(&self.v),
            show(&self.w),
            show(&self.x),
            show(&self.y)
        )
    }
}

/// Marked NFA for `u v* w x* y`; the v-loop carries mark 0 and the x-loop
/// mark 1.
pub fn pattern_nfa(alphabet: Alphabet, ctx: &Context) -> Result<MarkedNfa, RegularError> {
    if ctx.v.is_empty() || ctx.x.is_empty() {
        return Err(RegularError::DegenerateContext);
    }
    block_pattern_nfa(alphabet, &ctx.segments())
}

/// Marked NFA for a sequence of segments. Loop and star segments receive
/// consecutive mark indices in order of appearance.
pub fn block_pattern_nfa(alphabet: Alphabet, segments: &[Segment]) -> Result<MarkedNfa, RegularError> {
    // ε-NFA first; loops hang off a hub state left by an ε-edge.
    let mut n_states = 1usize;
    let mut edges: Vec<(usize, Option<char>, usize, Option<usize>)> = Vec::new();
    let mut cur = 0usize;
    let mut mark = 0usize;
    let fresh = |n: &mut usize| {
        *n += 1;
        *n - 1
    };
    for seg in segments {
        match seg {
            Segment::Fixed(w) => {
                for &c in w.letters() {
                    let nxt = fresh(&mut n_states);
                    edges.push((cur, Some(c), nxt, None));
                    cur = nxt;
                }
            }
            Segment::Loop(v) => {
                if v.is_empty() {
                    return Err(RegularError::DegenerateContext);
                }
                let hub = cur;
                let mut prev = hub;
                let len = v.len();
                for (idx, &c) in v.letters().iter().enumerate() {
                    let to = if idx + 1 == len { hub } else { fresh(&mut n_states) };
                    edges.push((prev, Some(c), to, (idx == 0).then_some(mark)));
                    prev = to;
                }
                mark += 1;
                let out = fresh(&mut n_states);
                edges.push((hub, None, out, None));
                cur = out;
            }
            Segment::Star(letters) => {
                let hub = cur;
                for &c in letters {
                    edges.push((hub, Some(c), hub, Some(mark)));
                }
                mark += 1;
                let out = fresh(&mut n_states);
                edges.push((hub, None, out, None));
                cur = out;
            }
        }
    }
    let accept = cur;

    // ε-closures; every ε-edge points forward so a DFS per state suffices.
    let mut eps: Vec<Vec<usize>> = vec![Vec::new(); n_states];
    for &(f, l, t, _) in &edges {
        if l.is_none() {
            eps[f].push(t);
        }
    }
    let closure: Vec<BTreeSet<usize>> = (0..n_states)
        .map(|s| {
            let mut seen = BTreeSet::from([s]);
            let mut stack = vec![s];
            while let Some(q) = stack.pop() {
                for &r in &eps[q] {
                    if seen.insert(r) {
                        stack.push(r);
                    }
                }
            }
            seen
        })
        .collect();

    let mut lifted: BTreeSet<(usize, char, usize, Option<usize>)> = BTreeSet::new();
    for s in 0..n_states {
        for &t in &closure[s] {
            for &(f, l, to, m) in &edges {
                if f == t {
                    if let Some(c) = l {
                        lifted.insert((s, c, to, m));
                    }
                }
            }
        }
    }
    let is_final: Vec<bool> = (0..n_states).map(|s| closure[s].contains(&accept)).collect();

    // trim to states both reachable and co-reachable
    let mut fwd = vec![false; n_states];
    fwd[0] = true;
    let mut stack = vec![0];
    while let Some(q) = stack.pop() {
        for &(f, _, t, _) in &lifted {
            if f == q && !fwd[t] {
                fwd[t] = true;
                stack.push(t);
            }
        }
    }
    let mut bwd: Vec<bool> = is_final.clone();
    let mut changed = true;
    while changed {
        changed = false;
        for &(f, _, t, _) in &lifted {
            if bwd[t] && !bwd[f] {
                bwd[f] = true;
                changed = true;
            }
        }
    }
    let keep: Vec<usize> = (0..n_states).filter(|&s| fwd[s] && (bwd[s] || s == 0)).collect();
    let renum: HashMap<usize, usize> = keep.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut nfa = Nfa::new(alphabet, keep.len());
    nfa.set_initial(0);
    let mut marks = Vec::new();
    for &(f, c, t, m) in &lifted {
        if let (Some(&f2), Some(&t2)) = (renum.get(&f), renum.get(&t)) {
            if bwd[t] {
                nfa.add_transition(f2, c, t2)?;
                marks.push(m);
            }
        }
    }
    for &s in &keep {
        if is_final[s] {
            nfa.set_final(renum[&s]);
        }
    }
    Ok(MarkedNfa { nfa, marks, mark_count: mark })
}

/// Total deterministic automaton. `delta[q][a]` is indexed by alphabet
/// position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dfa {
    alphabet: Alphabet,
    delta: Vec<Vec<usize>>,
    initial: usize,
    finals: Vec<bool>,
}

impl Dfa {
    pub fn from_parts(alphabet: Alphabet, delta: Vec<Vec<usize>>, initial: usize, finals: Vec<bool>) -> Self {
        assert_eq!(delta.len(), finals.len());
        assert!(delta.iter().all(|row| row.len() == alphabet.len() && row.iter().all(|&q| q < finals.len())));
        Dfa { alphabet, delta, initial, finals }
    }

    pub fn empty_language(alphabet: Alphabet) -> Self {
        let k = alphabet.len();
        Dfa::from_parts(alphabet, vec![vec![0; k]], 0, vec![false])
    }

    pub fn universal(alphabet: Alphabet) -> Self {
        let k = alphabet.len();
        Dfa::from_parts(alphabet, vec![vec![0; k]], 0, vec![true])
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn is_final(&self, q: usize) -> bool {
        self.finals[q]
    }

    pub fn finals(&self) -> &[bool] {
        &self.finals
    }

    pub fn step(&self, q: usize, letter_index: usize) -> usize {
        self.delta[q][letter_index]
    }

    pub fn step_letter(&self, q: usize, c: char) -> Option<usize> {
        self.alphabet.index_of(c).map(|a| self.delta[q][a])
    }

    /// State reached from `q` by reading `w`; `None` on a foreign letter.
    pub fn run_from(&self, q: usize, w: &Word) -> Option<usize> {
        w.letters().iter().try_fold(q, |q, &c| self.step_letter(q, c))
    }

    pub fn accepts(&self, w: &Word) -> bool {
        self.run_from(self.initial, w).is_some_and(|q| self.finals[q])
    }

    pub fn with_initial(&self, q: usize) -> Dfa {
        Dfa { initial: q, ..self.clone() }
    }

    pub fn with_finals(&self, finals: Vec<bool>) -> Dfa {
        assert_eq!(finals.len(), self.num_states());
        Dfa { finals, ..self.clone() }
    }

    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        seen[self.initial] = true;
        let mut queue = VecDeque::from([self.initial]);
        while let Some(q) = queue.pop_front() {
            for &r in &self.delta[q] {
                if !seen[r] {
                    seen[r] = true;
                    queue.push_back(r);
                }
            }
        }
        seen
    }

    /// Minimal automaton in canonical numbering (breadth-first from the
    /// initial state, letters in alphabet order), so equal languages give
    /// equal values.
    pub fn minimize(&self) -> Dfa {
        let reach = self.reachable();
        let states: Vec<usize> = (0..self.num_states()).filter(|&q| reach[q]).collect();
        // Moore refinement
        let mut class: Vec<usize> = vec![0; self.num_states()];
        for &q in &states {
            class[q] = usize::from(self.finals[q]);
        }
        loop {
            let mut sig_index: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
            let mut next = vec![0; self.num_states()];
            for &q in &states {
                let sig = (class[q], self.delta[q].iter().map(|&r| class[r]).collect::<Vec<_>>());
                let n = sig_index.len();
                next[q] = *sig_index.entry(sig).or_insert(n);
            }
            let old_count = states.iter().map(|&q| class[q]).collect::<BTreeSet<_>>().len();
            let new_count = sig_index.len();
            class = next;
            if new_count == old_count {
                break;
            }
        }
        // canonical BFS numbering over classes
        let mut order: HashMap<usize, usize> = HashMap::new();
        let mut reps: Vec<usize> = Vec::new();
        order.insert(class[self.initial], 0);
        reps.push(self.initial);
        let mut i = 0;
        while i < reps.len() {
            let q = reps[i];
            for &r in &self.delta[q] {
                if let std::collections::hash_map::Entry::Vacant(e) = order.entry(class[r]) {
                    e.insert(reps.len());
                    reps.push(r);
                }
            }
            i += 1;
        }
        let delta = reps
            .iter()
            .map(|&q| self.delta[q].iter().map(|&r| order[&class[r]]).collect())
            .collect();
        let finals = reps.iter().map(|&q| self.finals[q]).collect();
        Dfa {
            alphabet: self.alphabet.clone(),
            delta,
            initial: 0,
            finals,
        }
    }

    pub fn is_minimal(&self) -> bool {
        let m = self.minimize();
        m.num_states() == self.num_states() && self.reachable().iter().all(|&r| r)
    }

    /// Language inclusion `Lang(p) ⊆ Lang(q)` between two states, by
    /// searching the pair automaton for a state `(final, nonfinal)`.
    pub fn state_language_included(&self, p: usize, q: usize) -> bool {
        let n = self.num_states();
        let mut seen = vec![false; n * n];
        let mut queue = VecDeque::from([(p, q)]);
        seen[p * n + q] = true;
        while let Some((a, b)) = queue.pop_front() {
            if self.finals[a] && !self.finals[b] {
                return false;
            }
            for l in 0..self.alphabet.len() {
                let (a2, b2) = (self.delta[a][l], self.delta[b][l]);
                if !seen[a2 * n + b2] {
                    seen[a2 * n + b2] = true;
                    queue.push_back((a2, b2));
                }
            }
        }
        true
    }

    /// Product automaton used for inclusion between two different machines.
    pub fn language_included_in(&self, other: &Dfa) -> Result<bool, RegularError> {
        self.same_alphabet(other)?;
        let k = self.alphabet.len();
        let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut queue = VecDeque::from([(self.initial, other.initial)]);
        seen.insert((self.initial, other.initial));
        while let Some((a, b)) = queue.pop_front() {
            if self.finals[a] && !other.finals[b] {
                return Ok(false);
            }
            for l in 0..k {
                let nxt = (self.delta[a][l], other.delta[b][l]);
                if seen.insert(nxt) {
                    queue.push_back(nxt);
                }
            }
        }
        Ok(true)
    }

    pub fn equivalent(&self, other: &Dfa) -> bool {
        self.alphabet == other.alphabet && self.minimize() == other.minimize()
    }

    fn same_alphabet(&self, other: &Dfa) -> Result<(), RegularError> {
        if self.alphabet != other.alphabet {
            return Err(RegularError::AlphabetMismatch(self.alphabet.to_string(), other.alphabet.to_string()));
        }
        Ok(())
    }

    /// Automaton for the left quotient `u⁻¹L`: same transitions, initial
    /// state advanced by `u`.
    pub fn residual(&self, u: &Word) -> Result<Dfa, RegularError> {
        self.alphabet.check_word(u)?;
        let q = self.run_from(self.initial, u).expect("checked word");
        Ok(self.with_initial(q))
    }

    /// Automaton for the right quotient `Lw⁻¹`: final states become those
    /// from which `w` leads into the old final set.
    pub fn right_quotient(&self, w: &Word) -> Result<Dfa, RegularError> {
        self.alphabet.check_word(w)?;
        let finals = (0..self.num_states())
            .map(|q| self.finals[self.run_from(q, w).expect("checked word")])
            .collect();
        Ok(self.with_finals(finals))
    }

    /// The inclusion order on residuals. Requires a minimal automaton so the
    /// relation is antisymmetric.
    pub fn residual_order(&self) -> Result<OrderedDfa, RegularError> {
        if !self.reachable().iter().all(|&r| r) {
            return Err(RegularError::NotMinimal);
        }
        let n = self.num_states();
        let mut leq = vec![vec![false; n]; n];
        for p in 0..n {
            for q in 0..n {
                leq[p][q] = p == q || self.state_language_included(p, q);
            }
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if leq[p][q] && leq[q][p] {
                    return Err(RegularError::NotMinimal);
                }
            }
        }
        Ok(OrderedDfa { dfa: self.clone(), leq })
    }

    /// Final-state sets of all right quotients `Lw⁻¹`, in breadth-first
    /// order of discovery (shortest `w` first).
    pub fn quotient_final_sets(&self) -> Vec<Vec<bool>> {
        let mut seen: BTreeSet<Vec<bool>> = BTreeSet::new();
        let mut out = Vec::new();
        let mut queue = VecDeque::from([self.finals.clone()]);
        seen.insert(self.finals.clone());
        while let Some(set) = queue.pop_front() {
            for a in 0..self.alphabet.len() {
                let pre: Vec<bool> = (0..self.num_states()).map(|q| set[self.delta[q][a]]).collect();
                if seen.insert(pre.clone()) {
                    queue.push_back(pre);
                }
            }
            out.push(set);
        }
        out
    }

    /// The distinct right quotients `Lw⁻¹`, which generate the Boolean
    /// algebra of quotients of `L`. Each is returned minimized.
    pub fn quotient_boolean_algebra(&self) -> Result<Vec<Dfa>, RegularError> {
        if !self.is_minimal() {
            return Err(RegularError::NotMinimal);
        }
        Ok(self
            .quotient_final_sets()
            .into_iter()
            .map(|f| self.with_finals(f).minimize())
            .collect())
    }

    pub fn to_nfa(&self) -> Nfa {
        let mut n = Nfa::new(self.alphabet.clone(), self.num_states());
        n.set_initial(self.initial);
        for q in 0..self.num_states() {
            for (a, &r) in self.delta[q].iter().enumerate() {
                n.add_transition(q, self.alphabet.letters()[a], r).expect("own alphabet");
            }
            if self.finals[q] {
                n.set_final(q);
            }
        }
        n
    }

    pub fn to_json(&self) -> AutomatonJson {
        AutomatonJson::from_dfa(self)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("alphabet: {}\n", self.alphabet);
        for q in 0..self.num_states() {
            s.push_str(&format!("state q{q}"));
            if q == self.initial {
                s.push_str(" initial");
            }
            if self.finals[q] {
                s.push_str(" final");
            }
            s.push('\n');
        }
        for q in 0..self.num_states() {
            for (a, &r) in self.delta[q].iter().enumerate() {
                s.push_str(&format!("q{q} -{}-> q{r}\n", self.alphabet.letters()[a]));
            }
        }
        s
    }
}

/// A minimal DFA with the inclusion order on its residual languages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedDfa {
    pub dfa: Dfa,
    leq: Vec<Vec<bool>>,
}

impl OrderedDfa {
    pub fn leq(&self, p: usize, q: usize) -> bool {
        self.leq[p][q]
    }

    pub fn relation(&self) -> &[Vec<bool>] {
        &self.leq
    }

    /// All pairs `(p, q)` with `p ≤ q`, sorted.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.dfa.num_states();
        (0..n)
            .flat_map(|p| (0..n).map(move |q| (p, q)))
            .filter(|&(p, q)| self.leq[p][q])
            .collect()
    }

    pub fn is_partial_order(&self) -> bool {
        let n = self.dfa.num_states();
        (0..n).all(|p| self.leq[p][p])
            && (0..n).all(|p| (0..n).all(|q| p == q || !(self.leq[p][q] && self.leq[q][p])))
            && (0..n).all(|p| (0..n).all(|q| (0..n).all(|r| !(self.leq[p][q] && self.leq[q][r]) || self.leq[p][r])))
    }

    pub fn is_stable(&self) -> bool {
        let k = self.dfa.alphabet().len();
        self.pairs()
            .into_iter()
            .all(|(p, q)| (0..k).all(|a| self.leq[self.dfa.step(p, a)][self.dfa.step(q, a)]))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateJson {
    pub name: String,
    pub initial: bool,
    #[serde(rename = "final")]
    pub is_final: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub from: String,
    pub letter: char,
    pub to: String,
}

/// Deterministic JSON form of an automaton: states and edges sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutomatonJson {
    pub alphabet: String,
    pub states: Vec<StateJson>,
    pub transitions: Vec<EdgeJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<(String, String)>>,
}

impl AutomatonJson {
    pub fn from_dfa(d: &Dfa) -> Self {
        let name = |q: usize| format!("q{q}");
        let states = (0..d.num_states())
            .map(|q| StateJson { name: name(q), initial: q == d.initial, is_final: d.finals[q] })
            .collect();
        let mut transitions = Vec::new();
        for q in 0..d.num_states() {
            for (a, &r) in d.delta[q].iter().enumerate() {
                transitions.push(EdgeJson { from: name(q), letter: d.alphabet.letters()[a], to: name(r) });
            }
        }
        AutomatonJson { alphabet: d.alphabet.to_string(), states, transitions, order: None }
    }
}
