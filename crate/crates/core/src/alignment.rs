//! Token alignment between a source sentence and a corrected version of it.
//!
//! Alignment uses a weighted Damerau–Levenshtein distance over tokens.
//! Costs are kept in half-token units so that ties compare exactly:
//!
//! | operation                          | cost (half units) |
//! |------------------------------------|-------------------|
//! | match                              | 0                 |
//! | substitution, case-only difference | 1                 |
//! | substitution                       | 2                 |
//! | insertion / deletion               | 2                 |
//! | adjacent transposition             | 2                 |
//!
//! Runs of consecutive non-match operations are merged into span edits.

use crate::corpus_io::TokenSequence;
use crate::error::{Error, Result};

/// Type label of an edit that has not been classified.
pub const UNKNOWN_TYPE: &str = "UNK";

pub const MATCH_COST: u32 = 0;
pub const CASE_SUB_COST: u32 = 1;
pub const SUB_COST: u32 = 2;
pub const INDEL_COST: u32 = 2;
pub const TRANSPOSE_COST: u32 = 2;

/// Replacement of the source span `start..end` by `replacement`.
///
/// `start == end` is an insertion before token `start`; an empty
/// replacement over a non-empty span is a deletion.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edit {
    pub start: usize,
    pub end: usize,
    pub replacement: Vec<String>,
    pub type_label: String,
}

impl Edit {
    pub fn new<I, S>(start: usize, end: usize, replacement: I, type_label: &str) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let edit = Edit {
            start,
            end,
            replacement: replacement.into_iter().map(Into::into).collect(),
            type_label: type_label.to_owned(),
        };
        edit.validate()?;
        Ok(edit)
    }

    pub fn unlabeled(start: usize, end: usize, replacement: Vec<String>) -> Self {
        Edit {
            start,
            end,
            replacement,
            type_label: UNKNOWN_TYPE.to_owned(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.start > self.end {
            return Err(Error::validation(format!(
                "edit span {}..{} is reversed",
                self.start, self.end
            )));
        }
        if self.start == self.end && self.replacement.is_empty() {
            return Err(Error::validation(format!(
                "empty insertion at {}",
                self.start
            )));
        }
        if self
            .replacement
            .iter()
            .any(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(Error::validation("replacement tokens must be non-empty and whitespace-free"));
        }
        Ok(())
    }

    pub fn is_insertion(&self) -> bool {
        self.start == self.end
    }

    pub fn is_deletion(&self) -> bool {
        self.start < self.end && self.replacement.is_empty()
    }

    /// Span and replacement equality, ignoring the type label.
    pub fn same_correction(&self, other: &Edit) -> bool {
        self.start == other.start && self.end == other.end && self.replacement == other.replacement
    }

    pub fn source_span<'a>(&self, source: &'a [String]) -> &'a [String] {
        &source[self.start..self.end]
    }
}

/// Checks that edits are individually valid, sorted by span, within
/// `0..=source_len` and non-overlapping. Two insertions at the same point
/// are rejected.
pub fn validate_edits(edits: &[Edit], source_len: usize) -> Result<()> {
    for e in edits {
        e.validate()?;
        if e.end > source_len {
            return Err(Error::validation(format!(
                "edit span {}..{} exceeds sentence length {source_len}",
                e.start, e.end
            )));
        }
    }
    for pair in edits.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if (a.start, a.end) > (b.start, b.end) {
            return Err(Error::validation(format!(
                "edits out of order: {}..{} before {}..{}",
                a.start, a.end, b.start, b.end
            )));
        }
        if a.end > b.start {
            return Err(Error::validation(format!(
                "overlapping edits {}..{} and {}..{}",
                a.start, a.end, b.start, b.end
            )));
        }
        if a.is_insertion() && b.is_insertion() && a.start == b.start {
            return Err(Error::validation(format!(
                "two insertions at position {}",
                a.start
            )));
        }
    }
    Ok(())
}

/// Applies `edits` to `source`; offsets refer to the original source.
pub fn apply_edits(source: &TokenSequence, edits: &[Edit]) -> Result<TokenSequence> {
    validate_edits(edits, source.len())?;
    let mut out = Vec::with_capacity(source.len());
    let mut cursor = 0;
    for e in edits {
        out.extend_from_slice(&source[cursor..e.start]);
        out.extend(e.replacement.iter().cloned());
        cursor = e.end;
    }
    out.extend_from_slice(&source[cursor..]);
    Ok(TokenSequence::from_tokens_unchecked(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignOp {
    Match,
    Substitute,
    /// Source token absent from the hypothesis.
    Delete,
    /// Hypothesis token absent from the source.
    Insert,
    /// Two adjacent source tokens appear swapped in the hypothesis.
    Transpose,
}

impl AlignOp {
    /// Source and hypothesis tokens consumed by the operation.
    pub fn advance(self) -> (usize, usize) {
        match self {
            AlignOp::Match | AlignOp::Substitute => (1, 1),
            AlignOp::Delete => (1, 0),
            AlignOp::Insert => (0, 1),
            AlignOp::Transpose => (2, 2),
        }
    }
}

/// A minimum-cost operation sequence turning a source into a hypothesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub ops: Vec<AlignOp>,
    /// Total cost in half-token units.
    pub cost: u32,
}

/// Computes a minimum-cost alignment.
///
/// Among equal-cost alternatives the backtrace prefers, from the end of both
/// sequences: match, transposition, substitution, deletion, insertion.
pub fn align(source: &[String], hypothesis: &[String]) -> Alignment {
    let (n, m) = (source.len(), hypothesis.len());
    let lower_src: Vec<String> = source.iter().map(|t| t.to_lowercase()).collect();
    let lower_hyp: Vec<String> = hypothesis.iter().map(|t| t.to_lowercase()).collect();
    let diag = |i: usize, j: usize| -> u32 {
        if source[i] == hypothesis[j] {
            MATCH_COST
        } else if lower_src[i] == lower_hyp[j] {
            CASE_SUB_COST
        } else {
            SUB_COST
        }
    };
    let transposable = |i: usize, j: usize| {
        i >= 2
            && j >= 2
            && source[i - 1] == hypothesis[j - 2]
            && source[i - 2] == hypothesis[j - 1]
            && source[i - 1] != source[i - 2]
    };

    let width = m + 1;
    let mut dp = vec![0u32; (n + 1) * width];
    for i in 0..=n {
        for j in 0..=m {
            let best = if i == 0 {
                j as u32 * INDEL_COST
            } else if j == 0 {
                i as u32 * INDEL_COST
            } else {
                let mut best = dp[(i - 1) * width + j - 1] + diag(i - 1, j - 1);
                best = best.min(dp[(i - 1) * width + j] + INDEL_COST);
                best = best.min(dp[i * width + j - 1] + INDEL_COST);
                if transposable(i, j) {
                    best = best.min(dp[(i - 2) * width + j - 2] + TRANSPOSE_COST);
                }
                best
            };
            dp[i * width + j] = best;
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dp[i * width + j];
        let op = if i > 0 && j > 0 && source[i - 1] == hypothesis[j - 1]
            && dp[(i - 1) * width + j - 1] == here
        {
            AlignOp::Match
        } else if transposable(i, j) && dp[(i - 2) * width + j - 2] + TRANSPOSE_COST == here {
            AlignOp::Transpose
        } else if i > 0 && j > 0 && dp[(i - 1) * width + j - 1] + diag(i - 1, j - 1) == here {
            AlignOp::Substitute
        } else if i > 0 && dp[(i - 1) * width + j] + INDEL_COST == here {
            AlignOp::Delete
        } else {
            AlignOp::Insert
        };
        let (di, dj) = op.advance();
        i -= di;
        j -= dj;
        ops.push(op);
    }
    ops.reverse();
    Alignment {
        ops,
        cost: dp[n * width + m],
    }
}

/// Extracts the span edits turning `source` into `hypothesis`.
///
/// The result is sorted, non-overlapping, labeled [`UNKNOWN_TYPE`], and
/// satisfies `apply_edits(source, &edits) == hypothesis`.
pub fn extract_edits(source: &TokenSequence, hypothesis: &TokenSequence) -> Vec<Edit> {
    let alignment = align(source, hypothesis);
    let mut edits = Vec::new();
    let (mut i, mut j) = (0, 0);
    let mut run: Option<(usize, usize)> = None;
    for op in alignment.ops {
        if op == AlignOp::Match {
            if let Some((si, sj)) = run.take() {
                edits.push(Edit::unlabeled(si, i, hypothesis[sj..j].to_vec()));
            }
        } else if run.is_none() {
            run = Some((i, j));
        }
        let (di, dj) = op.advance();
        i += di;
        j += dj;
    }
    if let Some((si, sj)) = run {
        edits.push(Edit::unlabeled(si, i, hypothesis[sj..j].to_vec()));
    }
    edits
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> TokenSequence {
        TokenSequence::from_line(s)
    }

    fn ed(start: usize, end: usize, rep: &[&str]) -> Edit {
        Edit::unlabeled(start, end, rep.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn identity_has_no_edits() {
        assert!(extract_edits(&ts("a b c"), &ts("a b c")).is_empty());
        assert!(extract_edits(&ts(""), &ts("")).is_empty());
    }

    #[test]
    fn single_substitution() {
        assert_eq!(extract_edits(&ts("a b c"), &ts("a x c")), vec![ed(1, 2, &["x"])]);
    }

    #[test]
    fn transposition_becomes_one_span() {
        assert_eq!(
            extract_edits(&ts("a b c d"), &ts("a c b d")),
            vec![ed(1, 3, &["c", "b"])]
        );
    }

    #[test]
    fn case_only_change_is_cheap() {
        let a = align(&ts("the cat"), &ts("The cat"));
        assert_eq!(a.cost, CASE_SUB_COST);
        assert_eq!(a.ops, vec![AlignOp::Substitute, AlignOp::Match]);
    }

    #[test]
    fn insertion_and_deletion_edits() {
        assert_eq!(extract_edits(&ts("a b"), &ts("a x b")), vec![ed(1, 1, &["x"])]);
        assert_eq!(extract_edits(&ts("a x b"), &ts("a b")), vec![ed(1, 2, &[])]);
        assert_eq!(extract_edits(&ts(""), &ts("x y")), vec![ed(0, 0, &["x", "y"])]);
    }

    #[test]
    fn apply_examples() {
        let s = ts("a b");
        assert_eq!(apply_edits(&s, &[]).unwrap(), s);
        assert_eq!(apply_edits(&s, &[ed(1, 2, &[])]).unwrap(), ts("a"));
        assert_eq!(
            apply_edits(&s, &[ed(0, 0, &["x"]), ed(1, 2, &["y", "z"])]).unwrap(),
            ts("x a y z")
        );
    }

    #[test]
    fn apply_rejects_bad_edits() {
        let s = ts("a b c");
        assert!(apply_edits(&s, &[ed(0, 2, &["x"]), ed(1, 3, &["y"])]).is_err());
        assert!(apply_edits(&s, &[ed(2, 4, &["x"])]).is_err());
        assert!(apply_edits(&s, &[ed(2, 3, &["x"]), ed(0, 1, &["y"])]).is_err());
        assert!(apply_edits(&s, &[ed(1, 1, &["x"]), ed(1, 1, &["y"])]).is_err());
        assert!(Edit::new(1, 1, Vec::<String>::new(), UNKNOWN_TYPE).is_err());
        assert!(Edit::new(2, 1, ["x"], UNKNOWN_TYPE).is_err());
    }

    #[test]
    fn insertion_before_replacement_at_same_point() {
        let s = ts("a b");
        let out = apply_edits(&s, &[ed(1, 1, &["x"]), ed(1, 2, &["y"])]).unwrap();
        assert_eq!(out, ts("a x y"));
    }
}
