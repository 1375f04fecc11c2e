//! Curated grammars used by audits and tests.

use std::path::Path;

use crate::cfg::{CfgError, Grammar};

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub grammar: Grammar,
}

const BUILTIN: [(&str, &str); 8] = [
    ("concat", include_str!("../corpus/concat.cfg")),
    ("diagonal", include_str!("../corpus/diagonal.cfg")),
    ("divisibility", include_str!("../corpus/divisibility.cfg")),
    ("dyck", include_str!("../corpus/dyck.cfg")),
    ("empty", include_str!("../corpus/empty.cfg")),
    ("even_diagonal", include_str!("../corpus/even_diagonal.cfg")),
    ("full", include_str!("../corpus/full.cfg")),
    ("union", include_str!("../corpus/union.cfg")),
];

pub fn builtin_corpus() -> Vec<CorpusEntry> {
    BUILTIN
        .iter()
        .map(|(name, text)| CorpusEntry {
            name: name.to_string(),
            grammar: Grammar::parse(text).expect("shipped grammar parses"),
        })
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: CfgError },
}

/// Every `*.cfg` file in `dir`, sorted by file name.
pub fn load_corpus_dir(dir: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let io = |e| CorpusError::Io { path: dir.display().to_string(), source: e };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let path = p.display().to_string();
            let text = std::fs::read_to_string(&p).map_err(|e| CorpusError::Io { path: path.clone(), source: e })?;
            let grammar = Grammar::parse(&text).map_err(|e| CorpusError::Parse { path, source: e })?;
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(CorpusEntry { name, grammar })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::{Alphabet, Word};

    #[test]
    fn builtin_grammars_have_expected_languages() {
        let corpus = builtin_corpus();
        assert_eq!(corpus.len(), 8);
        let get = |n: &str| corpus.iter().find(|e| e.name == n).unwrap().grammar.to_cnf();
        assert!(get("diagonal").accepts(&Word::from("aabcc")));
        assert!(get("even_diagonal").accepts(&Word::from("aabcc")));
        assert!(!get("even_diagonal").accepts(&Word::from("abc")));
        assert!(get("full").accepts(&Word::from("cab")));
        assert!(get("dyck").accepts(&Word::from("aabbab")));
        assert!(get("divisibility").accepts(&Word::from("aabb")));
        assert!(!get("divisibility").accepts(&Word::from("ab")));
        assert!(get("union").accepts(&Word::from("aabb")) && get("union").accepts(&Word::from("abc")));
        assert!(get("concat").accepts(&Word::from("abbc")));
        let abc = Alphabet::new("abc".chars()).unwrap();
        assert!(abc.words_up_to(6).iter().all(|w| !get("empty").accepts(w)));
        assert!(corpus.iter().find(|e| e.name == "empty").unwrap().grammar.terminals().len() == 3);
    }
}
