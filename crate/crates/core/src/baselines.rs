//! Trivial correctors for driving the scorers without a trained model.

use crate::corpus_io::TokenSequence;
use crate::error::{Error, Result};
use crate::lexicon::{NeighborIndex, Vocabulary};

/// Proposes no edits.
pub fn identity_correct(source: &TokenSequence) -> TokenSequence {
    source.clone()
}

/// Replaces out-of-vocabulary tokens that have exactly one vocabulary word
/// within `max_distance` character edits. Ambiguous tokens are left alone.
#[derive(Debug, Clone)]
pub struct SpellCorrector<'v> {
    vocabulary: &'v Vocabulary,
    index: NeighborIndex,
}

impl<'v> SpellCorrector<'v> {
    pub fn new(vocabulary: &'v Vocabulary, max_distance: usize) -> Result<Self> {
        if max_distance == 0 {
            return Err(Error::validation("max_distance must be at least 1"));
        }
        Ok(SpellCorrector {
            vocabulary,
            index: NeighborIndex::new(vocabulary.iter(), max_distance),
        })
    }

    pub fn correct_token<'a>(&'a self, token: &'a str) -> &'a str {
        if self.vocabulary.contains_folded(token) {
            return token;
        }
        match self.index.neighbors(token).as_slice() {
            [(_, only)] => only,
            _ => token,
        }
    }

    pub fn correct(&self, source: &TokenSequence) -> TokenSequence {
        let out = source.iter().map(|t| self.correct_token(t).to_owned()).collect();
        TokenSequence::from_tokens_unchecked(out)
    }
}

/// One-shot form of [`SpellCorrector`]. Builds the index on every call, so
/// prefer the struct for whole corpora.
pub fn spell_correct(source: &TokenSequence, vocabulary: &Vocabulary, max_distance: usize) -> Result<TokenSequence> {
    Ok(SpellCorrector::new(vocabulary, max_distance)?.correct(source))
}
