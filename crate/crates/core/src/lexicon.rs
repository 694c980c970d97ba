//! Seed dictionaries, gold BLI sets and scored XLSIM pairs.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::space::EmbeddingSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexiconRole {
    Train,
    Test,
}

/// Ordered, duplicate-free list of `(source, target)` translation pairs.
/// A source word may appear with several targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationLexicon {
    pairs: Vec<(String, String)>,
    role: LexiconRole,
}

impl TranslationLexicon {
    /// Builds a lexicon, dropping exact duplicate pairs (first one wins).
    pub fn new<I, S, T>(pairs: I, role: LexiconRole) -> Self
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut seen = HashSet::new();
        let pairs = pairs
            .into_iter()
            .map(|(s, t)| (s.into(), t.into()))
            .filter(|p| seen.insert(p.clone()))
            .collect();
        TranslationLexicon { pairs, role }
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn role(&self) -> LexiconRole {
        self.role
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(s, t)| (s.as_str(), t.as_str()))
    }

    /// Groups pairs by source word, in first-occurrence order.
    pub fn grouped(&self) -> Vec<(&str, Vec<&str>)> {
        let mut order: Vec<(&str, Vec<&str>)> = Vec::new();
        let mut slot = std::collections::HashMap::new();
        for (s, t) in self.iter() {
            let i = *slot.entry(s).or_insert_with(|| {
                order.push((s, Vec::new()));
                order.len() - 1
            });
            order[i].1.push(t);
        }
        order
    }
}

/// Gold-scored word pairs for cross-lingual similarity.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredWordPairs {
    triples: Vec<(String, String, f64)>,
}

impl ScoredWordPairs {
    pub fn new<S: Into<String>, T: Into<String>>(triples: Vec<(S, T, f64)>) -> Result<Self> {
        let triples: Vec<_> = triples
            .into_iter()
            .map(|(s, t, g)| (s.into(), t.into(), g))
            .collect();
        if let Some((s, t, g)) = triples.iter().find(|(_, _, g)| !g.is_finite()) {
            return Err(Error::Invalid(format!("non-finite score {g} for ({s}, {t})")));
        }
        Ok(ScoredWordPairs { triples })
    }

    pub fn triples(&self) -> &[(String, String, f64)] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn word_pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.triples.iter().map(|(s, t, _)| (s.as_str(), t.as_str()))
    }
}

/// Splits a line on tabs when it has any, on whitespace otherwise.
fn columns(line: &str) -> Vec<&str> {
    if line.contains('\t') {
        line.split('\t').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

fn data_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push((i + 1, trimmed.to_string()));
    }
    Ok(out)
}

/// Reads a two-column dictionary. Returns the lexicon and the number of
/// lines skipped for not having exactly two columns.
pub fn load_lexicon(path: impl AsRef<Path>, role: LexiconRole) -> Result<(TranslationLexicon, usize)> {
    let path = path.as_ref();
    let mut skipped = 0;
    let mut pairs = Vec::new();
    for (_, line) in data_lines(path)? {
        match columns(&line).as_slice() {
            [s, t] if !s.is_empty() && !t.is_empty() => pairs.push((s.to_string(), t.to_string())),
            _ => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("{}: skipped {skipped} malformed lines", path.display());
    }
    Ok((TranslationLexicon::new(pairs, role), skipped))
}

/// Reads `source \t target \t score` triples.
pub fn load_scored_pairs(path: impl AsRef<Path>) -> Result<ScoredWordPairs> {
    let path = path.as_ref();
    let mut triples = Vec::new();
    for (line_no, line) in data_lines(path)? {
        let bad = |message: String| Error::Format {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        match columns(&line).as_slice() {
            [s, t, g] => {
                let score: f64 = g.parse().map_err(|_| bad(format!("invalid score {g:?}")))?;
                triples.push((s.to_string(), t.to_string(), score));
            }
            cols => return Err(bad(format!("{} columns, expected 3", cols.len()))),
        }
    }
    ScoredWordPairs::new(triples)
}

/// Removes every training pair that also occurs in `test`, in either
/// orientation. Returns the cleaned lexicon and the number of removed pairs.
pub fn remove_test_leakage<'a, I>(train: &TranslationLexicon, test: I) -> (TranslationLexicon, usize)
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut banned: HashSet<(&str, &str)> = HashSet::new();
    for (a, b) in test {
        banned.insert((a, b));
        banned.insert((b, a));
    }
    let kept: Vec<_> = train
        .iter()
        .filter(|pair| !banned.contains(pair))
        .map(|(s, t)| (s.to_string(), t.to_string()))
        .collect();
    let removed = train.len() - kept.len();
    (TranslationLexicon::new(kept, train.role()), removed)
}

/// Keeps the pairs whose source word is in `src` and target word in `tgt`.
pub fn filter_to_vocab(
    lex: &TranslationLexicon,
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
) -> (TranslationLexicon, usize) {
    let kept: Vec<_> = lex
        .iter()
        .filter(|(s, t)| src.vocab().contains(s) && tgt.vocab().contains(t))
        .map(|(s, t)| (s.to_string(), t.to_string()))
        .collect();
    let dropped = lex.len() - kept.len();
    (TranslationLexicon::new(kept, lex.role()), dropped)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Source,
    Target,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Anchor {
    pub word: String,
    pub side: Side,
}

impl std::fmt::Display for Anchor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let side = match self.side {
            Side::Source => "src",
            Side::Target => "tgt",
        };
        write!(f, "{}@{side}", self.word)
    }
}

/// Splits dictionary pairs into one anchor per distinct word on each side:
/// all source words first, then all target words, each in first-occurrence
/// order. Words missing from their side's space are left out.
pub fn decouple_pairs(lex: &TranslationLexicon, src: &EmbeddingSpace, tgt: &EmbeddingSpace) -> Vec<Anchor> {
    let mut seen = HashSet::new();
    let mut anchors = Vec::new();
    for (side, space) in [(Side::Source, src), (Side::Target, tgt)] {
        for (s, t) in lex.iter() {
            let word = if side == Side::Source { s } else { t };
            if space.vocab().contains(word) && seen.insert((side, word)) {
                anchors.push(Anchor {
                    word: word.to_string(),
                    side,
                });
            }
        }
    }
    anchors
}
