//! GLEU: n-gram precision against a reference, penalized for n-grams the
//! hypothesis keeps from the source that the reference dropped.
//!
//! With several references per sentence, each iteration samples one
//! reference per sentence, scores the corpus, and the iteration scores are
//! averaged. Iteration `k` draws from its own generator stream, so the
//! result depends only on the inputs and the seed.

use std::collections::HashMap;

use rand::RngExt;

use crate::corpus_io::TokenSequence;
use crate::error::{Error, Result};
use crate::noising::stream_rng;

pub const DEFAULT_N_MAX: usize = 4;
pub const DEFAULT_ITERATIONS: usize = 500;

/// Sentence-level sufficient statistics; they add up over a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GleuStats {
    /// Index `n - 1` holds the statistic for n-grams of order `n`.
    pub numerators: Vec<u64>,
    pub denominators: Vec<u64>,
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl GleuStats {
    fn zero(n_max: usize) -> Self {
        GleuStats {
            numerators: vec![0; n_max],
            denominators: vec![0; n_max],
            hyp_len: 0,
            ref_len: 0,
        }
    }

    fn add(&mut self, o: &GleuStats) {
        for (a, b) in self.numerators.iter_mut().zip(&o.numerators) {
            *a += b;
        }
        for (a, b) in self.denominators.iter_mut().zip(&o.denominators) {
            *a += b;
        }
        self.hyp_len += o.hyp_len;
        self.ref_len += o.ref_len;
    }

    /// Brevity penalty times the geometric mean of the n-gram precisions.
    /// Any zero numerator or denominator gives 0.
    pub fn score(&self) -> f64 {
        if self
            .numerators
            .iter()
            .chain(&self.denominators)
            .any(|&x| x == 0)
        {
            return 0.0;
        }
        let n_max = self.numerators.len() as f64;
        let log_precision: f64 = self
            .numerators
            .iter()
            .zip(&self.denominators)
            .map(|(&num, &den)| (num as f64 / den as f64).ln() / n_max)
            .sum();
        let bp = (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp().min(1.0);
        bp * log_precision.exp()
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for g in tokens.windows(n) {
            *counts.entry(g).or_insert(0) += 1;
        }
    }
    counts
}

pub fn gleu_stats(
    source: &TokenSequence,
    hypothesis: &TokenSequence,
    reference: &TokenSequence,
    n_max: usize,
) -> GleuStats {
    let mut stats = GleuStats::zero(n_max);
    stats.hyp_len = hypothesis.len() as u64;
    stats.ref_len = reference.len() as u64;
    for n in 1..=n_max {
        let hyp = ngram_counts(hypothesis, n);
        let refs = ngram_counts(reference, n);
        let src = ngram_counts(source, n);
        let mut matched: i64 = 0;
        let mut penalty: i64 = 0;
        for (g, &h) in &hyp {
            let r = refs.get(g).copied().unwrap_or(0);
            let s = src.get(g).copied().unwrap_or(0);
            matched += h.min(r) as i64;
            penalty += (h.min(s) as i64 - r as i64).max(0);
        }
        stats.numerators[n - 1] = (matched - penalty).max(0) as u64;
        stats.denominators[n - 1] = (hypothesis.len() + 1).saturating_sub(n) as u64;
    }
    stats
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GleuParams {
    pub n_max: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for GleuParams {
    fn default() -> Self {
        GleuParams {
            n_max: DEFAULT_N_MAX,
            iterations: DEFAULT_ITERATIONS,
            seed: 0,
        }
    }
}

/// Corpus GLEU averaged over sampled reference assignments.
pub fn gleu_corpus(
    sources: &[TokenSequence],
    hypotheses: &[TokenSequence],
    references: &[Vec<TokenSequence>],
    params: &GleuParams,
) -> Result<f64> {
    if sources.is_empty() {
        return Err(Error::validation("GLEU needs a non-empty corpus"));
    }
    if sources.len() != hypotheses.len() || sources.len() != references.len() {
        return Err(Error::validation(format!(
            "misaligned GLEU inputs: {} sources, {} hypotheses, {} reference sets",
            sources.len(),
            hypotheses.len(),
            references.len()
        )));
    }
    if params.n_max == 0 || params.iterations == 0 {
        return Err(Error::validation("n_max and iterations must be at least 1"));
    }
    if let Some(i) = references.iter().position(Vec::is_empty) {
        return Err(Error::validation(format!("sentence {i} has no references")));
    }

    let per_ref: Vec<Vec<GleuStats>> = sources
        .iter()
        .zip(hypotheses)
        .zip(references)
        .map(|((s, h), refs)| refs.iter().map(|r| gleu_stats(s, h, r, params.n_max)).collect())
        .collect();

    let single = references.iter().all(|r| r.len() == 1);
    let iterations = if single { 1 } else { params.iterations };
    let mut total = 0.0;
    for it in 0..iterations {
        let mut rng = stream_rng(params.seed, it as u64);
        let mut corpus = GleuStats::zero(params.n_max);
        for stats in &per_ref {
            let pick = if stats.len() == 1 {
                0
            } else {
                rng.random_range(0..stats.len())
            };
            corpus.add(&stats[pick]);
        }
        total += corpus.score();
    }
    Ok(total / iterations as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> TokenSequence {
        TokenSequence::from_line(s)
    }

    #[test]
    fn identical_hypothesis_and_reference() {
        let s = gleu_stats(&ts("x y z w v"), &ts("a b c d e"), &ts("a b c d e"), 4);
        assert_eq!(s.numerators, s.denominators);
    }

    #[test]
    fn unchanged_source_with_disjoint_reference() {
        let s = gleu_stats(&ts("a b c d"), &ts("a b c d"), &ts("w x y z"), 4);
        assert_eq!(s.numerators, vec![0, 0, 0, 0]);
    }

    #[test]
    fn hand_counted_bigrams() {
        let s = gleu_stats(&ts("a b c"), &ts("a b d"), &ts("a b e"), 2);
        assert_eq!(s.numerators[1], 1);
        assert_eq!(s.denominators[1], 2);
        assert_eq!(s.numerators[0], 2);
        assert_eq!(s.denominators[0], 3);
    }

    #[test]
    fn penalty_for_kept_source_ngrams() {
        // "b" is kept from the source although the reference removed it.
        let s = gleu_stats(&ts("a b c"), &ts("a b c"), &ts("a c"), 1);
        assert_eq!(s.numerators[0], 1); // 2 matches - 1 penalty
    }

    #[test]
    fn short_hypothesis_has_zero_denominator() {
        let s = gleu_stats(&ts("a"), &ts("a b"), &ts("a b"), 4);
        assert_eq!(s.denominators, vec![2, 1, 0, 0]);
    }

    #[test]
    fn perfect_corpus_scores_one() {
        let refs = vec![vec![ts("a b c d e")], vec![ts("f g h i")]];
        let hyps = vec![ts("a b c d e"), ts("f g h i")];
        let srcs = vec![ts("a b x d e"), ts("f h i")];
        let g = gleu_corpus(&srcs, &hyps, &refs, &GleuParams::default()).unwrap();
        assert_eq!(g, 1.0);
    }

    #[test]
    fn errors() {
        let p = GleuParams::default();
        assert!(gleu_corpus(&[], &[], &[], &p).is_err());
        assert!(gleu_corpus(&[ts("a")], &[ts("a")], &[vec![]], &p).is_err());
        assert!(gleu_corpus(&[ts("a")], &[], &[vec![ts("a")]], &p).is_err());
    }
}
