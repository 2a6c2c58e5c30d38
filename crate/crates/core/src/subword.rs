//! Byte-pair encoding.
//!
//! Merges are learned inside words only; word boundaries are implicit.
//! Segmented output marks every piece except the last of a word with a
//! continuation suffix (`@@` by default), so `new@@ est` restores to
//! `newest`.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use crate::corpus_io::TokenSequence;
use crate::error::{Error, Result};

pub const DEFAULT_MARKER: &str = "@@";

type Pair = (String, String);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<Pair>,
    ranks: HashMap<Pair, usize>,
    marker: String,
}

impl BpeModel {
    pub fn new(merges: Vec<Pair>, marker: &str) -> Result<Self> {
        if marker.chars().count() < 2 || marker.chars().any(char::is_whitespace) {
            return Err(Error::validation(format!(
                "continuation marker {marker:?} must be at least two non-space characters"
            )));
        }
        let mut ranks = HashMap::with_capacity(merges.len());
        for (rank, pair) in merges.iter().enumerate() {
            if pair.0.is_empty() || pair.1.is_empty() {
                return Err(Error::validation(format!("merge {rank} has an empty symbol")));
            }
            if ranks.insert(pair.clone(), rank).is_some() {
                return Err(Error::validation(format!(
                    "duplicate merge {} {}",
                    pair.0, pair.1
                )));
            }
        }
        Ok(BpeModel {
            merges,
            ranks,
            marker: marker.to_owned(),
        })
    }

    pub fn merges(&self) -> &[Pair] {
        &self.merges
    }

    pub fn marker(&self) -> &str {
        &self.marker
    }

    /// Parses a model file: one `left right` merge per line, in order.
    pub fn parse(text: &str, marker: &str) -> Result<Self> {
        let mut merges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
                    merges.push((l.to_owned(), r.to_owned()))
                }
                _ => return Err(Error::parse(i + 1, "expected `left right`")),
            }
        }
        BpeModel::new(merges, marker)
    }

    pub fn read(path: impl AsRef<Path>, marker: &str) -> Result<Self> {
        BpeModel::parse(&std::fs::read_to_string(path)?, marker)
    }

    pub fn to_text(&self) -> String {
        self.merges.iter().map(|(l, r)| format!("{l} {r}\n")).collect()
    }

    /// Segments one word. Merges are replayed in model order: each merge
    /// rewrites all of its occurrences left to right, and a merge whose pair
    /// only appears after a later merge is not revisited.
    pub fn segment(&self, word: &str) -> Vec<String> {
        let mut symbols: Vec<String> = word.chars().map(String::from).collect();
        let mut last_rank: Option<usize> = None;
        loop {
            let next = symbols
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())).copied())
                .filter(|&r| last_rank.is_none_or(|l| r > l))
                .min();
            let Some(rank) = next else { break };
            let (left, right) = &self.merges[rank];
            symbols = merge_pair(&symbols, left, right);
            last_rank = Some(rank);
        }
        symbols
    }

    /// Segments a word and attaches continuation markers.
    pub fn apply_word(&self, word: &str) -> Vec<String> {
        let mut pieces = self.segment(word);
        // A final piece that ends in the marker would read as a
        // continuation; split off its last character.
        if let Some(last) = pieces.last() {
            if last.ends_with(&self.marker) {
                let mut last = pieces.pop().unwrap();
                let tail = last.pop().unwrap();
                pieces.push(last);
                pieces.push(tail.to_string());
            }
        }
        let k = pieces.len();
        for p in &mut pieces[..k - 1] {
            p.push_str(&self.marker);
        }
        pieces
    }
}

fn merge_pair(symbols: &[String], left: &str, right: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(symbols.len());
    let mut i = 0;
    while i < symbols.len() {
        if i + 1 < symbols.len() && symbols[i] == left && symbols[i + 1] == right {
            out.push(format!("{left}{right}"));
            i += 2;
        } else {
            out.push(symbols[i].clone());
            i += 1;
        }
    }
    out
}

/// Word frequencies of a tokenized corpus.
pub fn count_words<'a>(sentences: impl IntoIterator<Item = &'a TokenSequence>) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for s in sentences {
        for tok in s.iter() {
            *counts.entry(tok.clone()).or_insert(0) += 1;
        }
    }
    counts
}

/// Learns up to `num_merges` merges, each time merging the most frequent
/// adjacent symbol pair (lexicographically smallest pair on ties). Stops
/// early once no pair occurs at least twice.
pub fn bpe_learn(word_counts: &BTreeMap<String, u64>, num_merges: usize) -> BpeModel {
    let mut words: Vec<(Vec<String>, i64)> = word_counts
        .iter()
        .filter(|(_, &c)| c > 0)
        .map(|(w, &c)| (w.chars().map(String::from).collect(), c as i64))
        .collect();

    let mut counts: HashMap<Pair, i64> = HashMap::new();
    let mut occurs: HashMap<Pair, HashSet<usize>> = HashMap::new();
    for (idx, (syms, freq)) in words.iter().enumerate() {
        for w in syms.windows(2) {
            let p = (w[0].clone(), w[1].clone());
            *counts.entry(p.clone()).or_insert(0) += freq;
            occurs.entry(p).or_default().insert(idx);
        }
    }
    let mut queue: BTreeSet<(Reverse<i64>, Pair)> =
        counts.iter().map(|(p, &c)| (Reverse(c), p.clone())).collect();

    let mut merges = Vec::new();
    while merges.len() < num_merges {
        let Some((Reverse(best), pair)) = queue.first().cloned() else { break };
        if best < 2 {
            break;
        }
        let mut affected: Vec<usize> = occurs.remove(&pair).unwrap_or_default().into_iter().collect();
        affected.sort_unstable();
        let mut delta: HashMap<Pair, i64> = HashMap::new();
        for idx in affected {
            let (syms, freq) = &mut words[idx];
            let merged = merge_pair(syms, &pair.0, &pair.1);
            if merged.len() == syms.len() {
                continue;
            }
            for w in syms.windows(2) {
                *delta.entry((w[0].clone(), w[1].clone())).or_insert(0) -= *freq;
            }
            for w in merged.windows(2) {
                let p = (w[0].clone(), w[1].clone());
                *delta.entry(p.clone()).or_insert(0) += *freq;
                occurs.entry(p).or_default().insert(idx);
            }
            *syms = merged;
        }
        for (p, d) in delta {
            if d == 0 {
                continue;
            }
            let old = counts.get(&p).copied().unwrap_or(0);
            let new = old + d;
            queue.remove(&(Reverse(old), p.clone()));
            if new > 0 {
                queue.insert((Reverse(new), p.clone()));
                counts.insert(p, new);
            } else {
                counts.remove(&p);
            }
        }
        // The merged pair cannot reappear, but drop it explicitly in case
        // a count got out of step.
        if let Some(c) = counts.remove(&pair) {
            queue.remove(&(Reverse(c), pair.clone()));
        }
        merges.push(pair);
    }
    BpeModel::new(merges, DEFAULT_MARKER).expect("learned merges are unique")
}

pub fn bpe_apply(model: &BpeModel, tokens: &TokenSequence) -> TokenSequence {
    let pieces = tokens.iter().flat_map(|t| model.apply_word(t)).collect();
    TokenSequence::from_tokens_unchecked(pieces)
}

/// Joins marked pieces back into words.
pub fn bpe_restore(subwords: &TokenSequence, marker: &str) -> Result<TokenSequence> {
    let mut out = Vec::new();
    let mut current = String::new();
    for piece in subwords.iter() {
        match piece.strip_suffix(marker) {
            Some(stem) => current.push_str(stem),
            None => {
                current.push_str(piece);
                out.push(std::mem::take(&mut current));
            }
        }
    }
    if !current.is_empty() || subwords.last().is_some_and(|p| p.ends_with(marker)) {
        return Err(Error::validation(format!(
            "dangling continuation marker at the end of {subwords}"
        )));
    }
    TokenSequence::try_from_tokens(out)
}
