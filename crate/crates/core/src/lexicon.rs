//! Word lists and edit-distance neighbourhood lookup.
//!
//! [`NeighborIndex`] finds all words within a character edit distance of a
//! query using the symmetric-delete scheme: two strings within distance `d`
//! always share a string reachable from each by at most `d` character
//! deletions. Candidates found that way are confirmed with the
//! optimal-string-alignment distance (Levenshtein plus adjacent swaps).

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use crate::error::Result;

/// Character edit distance used across the toolkit.
pub fn char_distance(a: &str, b: &str) -> usize {
    strsim::osa_distance(a, b)
}

/// Reads one word per line, skipping blank lines.
pub fn read_word_list(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    words: BTreeSet<String>,
    folded: HashSet<String>,
}

impl Vocabulary {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let words: BTreeSet<String> = words.into_iter().map(Into::into).collect();
        let folded = words.iter().map(|w| w.to_lowercase()).collect();
        Vocabulary { words, folded }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Vocabulary::new(read_word_list(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    /// Membership ignoring case.
    pub fn contains_folded(&self, word: &str) -> bool {
        self.words.contains(word) || self.folded.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = &String> {
        self.words.iter()
    }
}

/// Deletion-variant index over a word list.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    words: Vec<String>,
    max_distance: usize,
    variants: HashMap<String, Vec<u32>>,
}

impl NeighborIndex {
    pub fn new<'a>(words: impl IntoIterator<Item = &'a String>, max_distance: usize) -> Self {
        let words: Vec<String> = words
            .into_iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut variants: HashMap<String, Vec<u32>> = HashMap::new();
        for (id, w) in words.iter().enumerate() {
            for v in deletion_variants(w, max_distance) {
                variants.entry(v).or_default().push(id as u32);
            }
        }
        NeighborIndex {
            words,
            max_distance,
            variants,
        }
    }

    pub fn max_distance(&self) -> usize {
        self.max_distance
    }

    /// Indexed words other than `term` within the maximum distance, ordered
    /// by (distance, word).
    pub fn neighbors(&self, term: &str) -> Vec<(usize, &str)> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for v in deletion_variants(term, self.max_distance) {
            let Some(ids) = self.variants.get(&v) else { continue };
            for &id in ids {
                if !seen.insert(id) {
                    continue;
                }
                let word = self.words[id as usize].as_str();
                if word == term {
                    continue;
                }
                let d = char_distance(term, word);
                if d <= self.max_distance {
                    out.push((d, word));
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// All strings reachable from `word` by deleting at most `max` characters,
/// including `word` itself.
fn deletion_variants(word: &str, max: usize) -> HashSet<String> {
    let mut all = HashSet::new();
    all.insert(word.to_owned());
    let mut frontier = vec![word.to_owned()];
    for _ in 0..max {
        let mut next = Vec::new();
        for w in &frontier {
            let chars: Vec<char> = w.chars().collect();
            for skip in 0..chars.len() {
                let v: String = chars
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != skip)
                    .map(|(_, c)| c)
                    .collect();
                if all.insert(v.clone()) {
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    all
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbors_by_distance() {
        let words: Vec<String> = ["cat", "cap", "dog", "act", "cast"].iter().map(|s| s.to_string()).collect();
        let idx = NeighborIndex::new(&words, 1);
        assert_eq!(idx.neighbors("cat"), vec![(1, "act"), (1, "cap"), (1, "cast")]);
        assert!(idx.neighbors("dog").is_empty());
        assert_eq!(idx.neighbors("cot"), vec![(1, "cat")]);
    }

    #[test]
    fn vocabulary_folding() {
        let v = Vocabulary::new(["the", "Paris"]);
        assert!(v.contains_folded("The"));
        assert!(v.contains_folded("paris"));
        assert!(!v.contains("The"));
    }

    #[test]
    fn transposition_is_distance_one() {
        assert_eq!(char_distance("recieve", "receive"), 1);
    }
}
