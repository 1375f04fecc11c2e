//! Alphabets, words, run-length block words with arbitrary-precision
//! exponents, and Parikh vectors.

use std::fmt;
use std::ops::{Add, Index};
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Expansion cap used when callers do not pass one explicitly.
pub const DEFAULT_EXPANSION_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("alphabet must not be empty")]
    EmptyAlphabet,
    #[error("duplicate letter '{0}' in alphabet")]
    DuplicateLetter(char),
    #[error("letter '{0}' is not in the alphabet")]
    LetterOutsideAlphabet(char),
    #[error("word of length {length} exceeds the expansion cap {cap}; use the semilinear route")]
    TooLarge { length: BigUint, cap: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("block word syntax error: {0}")]
    Syntax(String),
}

/// Ordered finite set of distinct letters. The order fixes Parikh
/// coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Alphabet {
    letters: Vec<char>,
}

impl Alphabet {
    pub fn new(letters: impl IntoIterator<Item = char>) -> Result<Self, WordError> {
        let letters: Vec<char> = letters.into_iter().collect();
        if letters.is_empty() {
            return Err(WordError::EmptyAlphabet);
        }
        for (i, c) in letters.iter().enumerate() {
            if letters[..i].contains(c) {
                return Err(WordError::DuplicateLetter(*c));
            }
        }
        Ok(Alphabet { letters })
    }

    /// Alphabet from the distinct letters of `s`, sorted.
    pub fn sorted_from(s: impl IntoIterator<Item = char>) -> Result<Self, WordError> {
        let mut letters: Vec<char> = s.into_iter().collect();
        letters.sort_unstable();
        letters.dedup();
        Alphabet::new(letters)
    }

    pub fn letters(&self) -> &[char] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.letters.iter().position(|&l| l == c)
    }

    pub fn contains(&self, c: char) -> bool {
        self.index_of(c).is_some()
    }

    pub fn check_word(&self, w: &Word) -> Result<(), WordError> {
        match w.letters().iter().find(|c| !self.contains(**c)) {
            Some(&c) => Err(WordError::LetterOutsideAlphabet(c)),
            None => Ok(()),
        }
    }

    /// All words of length at most `max_len`, shortlex order.
    pub fn words_up_to(&self, max_len: usize) -> Vec<Word> {
        let mut out = vec![Word::empty()];
        let mut layer = vec![Word::empty()];
        for _ in 0..max_len {
            let mut next = Vec::with_capacity(layer.len() * self.len());
            for w in &layer {
                for &c in &self.letters {
                    let mut v = w.0.clone();
                    v.push(c);
                    next.push(Word(v));
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.letters {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// A finite word. The empty sequence is the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(Vec<char>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn new(letters: Vec<char>) -> Self {
        Word(letters)
    }

    pub fn letters(&self) -> &[char] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn repeat(&self, times: usize) -> Word {
        Word(self.0.repeat(times))
    }

    pub fn to_block_word(&self) -> BlockWord {
        BlockWord::from_blocks(self.0.iter().map(|&c| (c, BigUint::from(1u8))))
    }
}

impl From<&str> for Word {
    fn from(s: &str) -> Self {
        Word(s.chars().collect())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        for c in &self.0 {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl Index<usize> for Word {
    type Output = char;
    fn index(&self, i: usize) -> &char {
        &self.0[i]
    }
}

/// Run-length word `a₁^{e₁} … a_k^{e_k}`, always kept normalized: no zero
/// exponents and no two adjacent blocks on the same letter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BlockWord {
    blocks: Vec<(char, BigUint)>,
}

impl BlockWord {
    pub fn empty() -> Self {
        BlockWord { blocks: Vec::new() }
    }

    pub fn from_blocks(blocks: impl IntoIterator<Item = (char, BigUint)>) -> Self {
        let mut out: Vec<(char, BigUint)> = Vec::new();
        for (c, e) in blocks {
            if e.is_zero() {
                continue;
            }
            match out.last_mut() {
                Some((last, acc)) if *last == c => *acc += e,
                _ => out.push((c, e)),
            }
        }
        BlockWord { blocks: out }
    }

    pub fn blocks(&self) -> &[(char, BigUint)] {
        &self.blocks
    }

    pub fn block_letters(&self) -> Vec<char> {
        self.blocks.iter().map(|(c, _)| *c).collect()
    }

    pub fn exponents(&self) -> Vec<BigUint> {
        self.blocks.iter().map(|(_, e)| e.clone()).collect()
    }

    pub fn len(&self) -> BigUint {
        self.blocks.iter().map(|(_, e)| e).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn concat(&self, other: &BlockWord) -> BlockWord {
        BlockWord::from_blocks(self.blocks.iter().chain(other.blocks.iter()).cloned())
    }

    /// True when every letter occurs in at most one block; the Parikh map is
    /// then injective on words of this block shape.
    pub fn is_parikh_faithful(&self) -> bool {
        let letters = self.block_letters();
        letters
            .iter()
            .enumerate()
            .all(|(i, c)| !letters[..i].contains(c))
    }

    pub fn expand(&self, cap: usize) -> Result<Word, WordError> {
        let len = self.len();
        match len.to_usize() {
            Some(l) if l <= cap => {
                let mut out = Vec::with_capacity(l);
                for (c, e) in &self.blocks {
                    let e = e.to_usize().expect("bounded by cap");
                    out.extend(std::iter::repeat_n(*c, e));
                }
                Ok(Word(out))
            }
            _ => Err(WordError::TooLarge { length: len, cap }),
        }
    }
}

impl fmt::Display for BlockWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.blocks.is_empty() {
            return write!(f, "ε");
        }
        for (i, (c, e)) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            if *e == BigUint::from(1u8) {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}^{e}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for BlockWord {
    type Err = WordError;

    /// Parses `a^3 b c^3`; an omitted exponent means 1, `eps` or `ε` is the
    /// empty word.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut blocks = Vec::new();
        for tok in s.split_whitespace() {
            if tok == "eps" || tok == "ε" {
                continue;
            }
            let (letter, exp) = match tok.split_once('^') {
                Some((l, e)) => {
                    let e = e.trim_start_matches('{').trim_end_matches('}');
                    let e = BigUint::from_str(e)
                        .map_err(|_| WordError::Syntax(format!("bad exponent in '{tok}'")))?;
                    (l, e)
                }
                None => (tok, BigUint::from(1u8)),
            };
            let mut chars = letter.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => blocks.push((c, exp)),
                // bare multi-letter tokens spell a plain word
                (Some(_), Some(_)) if !tok.contains('^') => {
                    blocks.extend(letter.chars().map(|c| (c, BigUint::from(1u8))))
                }
                _ => return Err(WordError::Syntax(format!("bad block '{tok}'"))),
            }
        }
        Ok(BlockWord::from_blocks(blocks))
    }
}

/// Nonnegative integer vector with arbitrary-precision entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vector(Vec<BigUint>);

impl Vector {
    pub fn zero(dim: usize) -> Self {
        Vector(vec![BigUint::zero(); dim])
    }

    pub fn new(entries: Vec<BigUint>) -> Self {
        Vector(entries)
    }

    pub fn from_u64s(entries: &[u64]) -> Self {
        Vector(entries.iter().map(|&e| BigUint::from(e)).collect())
    }

    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut v = Vector::zero(dim);
        v.0[axis] = BigUint::from(1u8);
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[BigUint] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<BigUint> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn max_entry(&self) -> BigUint {
        self.0.iter().max().cloned().unwrap_or_default()
    }

    pub fn scaled(&self, k: &BigUint) -> Vector {
        Vector(self.0.iter().map(|e| e * k).collect())
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &Vector) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn checked_sub(&self, other: &Vector) -> Option<Vector> {
        if !other.le(self) {
            return None;
        }
        Some(Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn add_assign_ref(&mut self, other: &Vector) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Index<usize> for Vector {
    type Output = BigUint;
    fn index(&self, i: usize) -> &BigUint {
        &self.0[i]
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for Vector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|e| e.to_string()))
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw: Vec<String> = Vec::deserialize(d)?;
        raw.iter()
            .map(|s| BigUint::from_str(s).map_err(serde::de::Error::custom))
            .collect::<Result<Vec<_>, _>>()
            .map(Vector)
    }
}

/// Letter-occurrence counts.
pub trait Parikh {
    fn parikh_vector(&self, alphabet: &Alphabet) -> Result<Vector, WordError>;
}

impl Parikh for Word {
    fn parikh_vector(&self, alphabet: &Alphabet) -> Result<Vector, WordError> {
        let mut counts = vec![0u64; alphabet.len()];
        for &c in &self.0 {
            let i = alphabet
                .index_of(c)
                .ok_or(WordError::LetterOutsideAlphabet(c))?;
            counts[i] += 1;
        }
        Ok(Vector::from_u64s(&counts))
    }
}

impl Parikh for BlockWord {
    fn parikh_vector(&self, alphabet: &Alphabet) -> Result<Vector, WordError> {
        let mut v = Vector::zero(alphabet.len());
        for (c, e) in &self.blocks {
            let i = alphabet
                .index_of(*c)
                .ok_or(WordError::LetterOutsideAlphabet(*c))?;
            v.0[i] += e;
        }
        Ok(v)
    }
}

pub fn parikh_vector<W: Parikh>(w: &W, alphabet: &Alphabet) -> Result<Vector, WordError> {
    w.parikh_vector(alphabet)
}

/// Decimal-string serde for a single [`BigUint`].
pub mod big_string {
    use std::str::FromStr;

    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let raw = String::deserialize(d)?;
        BigUint::from_str(&raw).map_err(serde::de::Error::custom)
    }
}

/// Decimal-string serde for a list of [`BigUint`].
pub mod big_string_vec {
    use std::str::FromStr;

    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|e| e.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigUint>, D::Error> {
        let raw: Vec<String> = Vec::deserialize(d)?;
        raw.iter()
            .map(|s| BigUint::from_str(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Decimal-string serde for an optional [`BigUint`].
pub mod big_string_opt {
    use std::str::FromStr;

    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<BigUint>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_some(&x.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigUint>, D::Error> {
        let raw: Option<String> = Option::deserialize(d)?;
        raw.map(|s| BigUint::from_str(&s).map_err(serde::de::Error::custom)).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn abc() -> Alphabet {
        Alphabet::new("abc".chars()).unwrap()
    }

    #[test]
    fn parikh_of_plain_words() {
        let v = Word::from("abcab").parikh_vector(&abc()).unwrap();
        assert_eq!(v, Vector::from_u64s(&[2, 2, 1]));
        let ab = Alphabet::new("ab".chars()).unwrap();
        assert_eq!(Word::empty().parikh_vector(&ab).unwrap(), Vector::from_u64s(&[0, 0]));
    }

    #[test]
    fn parikh_of_block_word_reads_exponents() {
        let bw: BlockWord = "a^120 b c^120".parse().unwrap();
        assert_eq!(bw.parikh_vector(&abc()).unwrap(), Vector::from_u64s(&[120, 1, 120]));
    }

    #[test]
    fn letter_outside_alphabet() {
        let ab = Alphabet::new("ab".chars()).unwrap();
        assert_eq!(
            Word::from("abc").parikh_vector(&ab),
            Err(WordError::LetterOutsideAlphabet('c'))
        );
    }

    #[test]
    fn alphabet_validation() {
        assert_eq!(Alphabet::new("".chars()), Err(WordError::EmptyAlphabet));
        assert_eq!(Alphabet::new("aba".chars()), Err(WordError::DuplicateLetter('a')));
    }

    #[test]
    fn expand_and_cap() {
        let bw: BlockWord = "a^3 b".parse().unwrap();
        assert_eq!(bw.expand(100).unwrap(), Word::from("aaab"));
        let empty: BlockWord = "a^0".parse().unwrap();
        assert_eq!(empty.expand(10).unwrap(), Word::empty());
        let big: BlockWord = "a^720 b^720".parse().unwrap();
        assert!(matches!(big.expand(100), Err(WordError::TooLarge { cap: 100, .. })));
    }

    #[test]
    fn concat_merges_adjacent_blocks() {
        let p = |s: &str| s.parse::<BlockWord>().unwrap();
        assert_eq!(p("a^2").concat(&p("a^3")), p("a^5"));
        assert_eq!(BlockWord::empty().concat(&p("b^4")), p("b^4"));
        assert_eq!(p("a^2 b").concat(&p("b^2 c")), p("a^2 b^3 c"));
    }

    #[test]
    fn faithfulness() {
        let p = |s: &str| s.parse::<BlockWord>().unwrap();
        assert!(p("a^5 b c^5").is_parikh_faithful());
        assert!(!p("c a^5 b c^5").is_parikh_faithful());
    }

    fn block_word() -> impl Strategy<Value = BlockWord> {
        prop::collection::vec((prop::sample::select(vec!['a', 'b', 'c']), 0u32..6), 0..6)
            .prop_map(|bs| BlockWord::from_blocks(bs.into_iter().map(|(c, e)| (c, BigUint::from(e)))))
    }

    proptest! {
        #[test]
        fn parikh_is_additive(u in block_word(), v in block_word()) {
            let a = abc();
            let lhs = u.concat(&v).parikh_vector(&a).unwrap();
            let rhs = &u.parikh_vector(&a).unwrap() + &v.parikh_vector(&a).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn expansion_agrees_with_blocks(bw in block_word()) {
            let a = abc();
            let w = bw.expand(DEFAULT_EXPANSION_CAP).unwrap();
            prop_assert_eq!(BigUint::from(w.len()), bw.len());
            prop_assert_eq!(w.parikh_vector(&a).unwrap(), bw.parikh_vector(&a).unwrap());
            // renormalizing the expansion is a fixed point
            prop_assert_eq!(w.to_block_word(), bw);
        }
    }
}
