//! Toolkit for grammatical error correction experiments.
//!
//! The crate covers the data side and the evaluation side of a GEC
//! pipeline. Models are out of scope: the [`baselines`] correctors stand in
//! for them so that every scorer can be exercised end to end.
//!
//! * [`corpus_io`]: M² gold files, parallel corpora, pair filtering, language tags
//! * [`alignment`]: token-level edit extraction and application
//! * [`m2_scorer`]: MaxMatch scoring over an edit lattice
//! * [`gleu`]: GLEU with sampled references
//! * [`error_types`]: rule-based edit classification and per-type scores
//! * [`noising`]: pseudo-error generation and span-masking denoising pairs
//! * [`subword`]: byte-pair encoding
//! * [`report`]: multi-run aggregation and table rendering
//! * [`cli`]: the `gec-lab` command-line front end

pub mod alignment;
pub mod baselines;
pub mod cli;
pub mod corpus_io;
pub mod error;
pub mod error_types;
pub mod gleu;
pub mod lexicon;
pub mod m2_scorer;
pub mod noising;
pub mod report;
pub mod subword;

pub use alignment::{apply_edits, extract_edits, Edit};
pub use corpus_io::{GoldAnnotation, GoldEdit, M2Document, M2Entry, TokenSequence};
pub use error::{Error, Result};
pub use m2_scorer::{f_beta, ScoreReport};
