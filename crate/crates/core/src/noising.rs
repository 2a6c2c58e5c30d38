//! Synthetic training data: pseudo-error injection and span-masking
//! denoising pairs.
//!
//! All randomness comes from ChaCha8 generators. A generator for item `i`
//! of a run with seed `s` is `ChaCha8Rng::seed_from_u64(s)` switched to
//! stream `i`, so items can be processed in any order (or in parallel)
//! without changing the output.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Poisson};

use crate::corpus_io::TokenSequence;
use crate::error::{Error, Result};
use crate::lexicon::{read_word_list, NeighborIndex, Vocabulary};

pub type RngState = ChaCha8Rng;

/// Generator for item `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> RngState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Token to plausible alternatives.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfusionSet {
    map: BTreeMap<String, Vec<String>>,
}

impl ConfusionSet {
    pub fn new(map: BTreeMap<String, Vec<String>>) -> Result<Self> {
        for (tok, cands) in &map {
            if cands.is_empty() {
                return Err(Error::validation(format!("confusion entry {tok:?} has no candidates")));
            }
            if cands.contains(tok) {
                return Err(Error::validation(format!("confusion entry {tok:?} lists itself")));
            }
        }
        Ok(ConfusionSet { map })
    }

    pub fn get(&self, token: &str) -> Option<&[String]> {
        self.map.get(token).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Vec<String>)> {
        self.map.iter()
    }

    /// Parses `token<TAB>cand1 cand2 ...` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let Some((tok, cands)) = line.split_once('\t') else {
                return Err(Error::parse(i + 1, "expected token<TAB>candidates"));
            };
            let cands: Vec<String> = cands.split_whitespace().map(str::to_owned).collect();
            map.insert(tok.trim().to_owned(), cands);
        }
        ConfusionSet::new(map)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        ConfusionSet::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        self.map
            .iter()
            .map(|(t, c)| format!("{t}\t{}\n", c.join(" ")))
            .collect()
    }
}

/// Maps every vocabulary word to the other words within `max_distance`
/// character edits, nearest first, ties in lexicographic order. Words
/// without neighbours are left out.
pub fn build_confusion_set<'a>(
    vocabulary: impl IntoIterator<Item = &'a String>,
    max_distance: usize,
) -> ConfusionSet {
    let words: Vec<&String> = vocabulary.into_iter().collect();
    let index = NeighborIndex::new(words.iter().copied(), max_distance.max(1));
    let map = words
        .iter()
        .filter_map(|w| {
            let cands: Vec<String> = index
                .neighbors(w)
                .into_iter()
                .map(|(_, c)| c.to_owned())
                .collect();
            (!cands.is_empty()).then(|| ((*w).clone(), cands))
        })
        .collect();
    ConfusionSet { map }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseOp {
    Substitute,
    Delete,
    Insert,
    Swap,
}

const OPS: [NoiseOp; 4] = [NoiseOp::Substitute, NoiseOp::Delete, NoiseOp::Insert, NoiseOp::Swap];

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    /// Expected fraction of tokens hit by a word-level operation.
    pub word_error_rate: f64,
    /// Expected fraction of characters hit by a character-level operation.
    pub char_error_rate: f64,
    /// Weights of substitute, delete, insert, swap.
    pub op_weights: [f64; 4],
    pub confusion: ConfusionSet,
    /// Words available for random insertion, in a fixed order.
    pub vocabulary: Vec<String>,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            word_error_rate: 0.15,
            char_error_rate: 0.02,
            op_weights: [0.7, 0.1, 0.1, 0.1],
            confusion: ConfusionSet::default(),
            vocabulary: Vec::new(),
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("word_error_rate", self.word_error_rate),
            ("char_error_rate", self.char_error_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::validation(format!("{name} must lie in [0, 1], got {r}")));
            }
        }
        if self.op_weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::validation("op_weights must be non-negative"));
        }
        let sum: f64 = self.op_weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!("op_weights must sum to 1, got {sum}")));
        }
        Ok(())
    }

    /// Reads a `key = value` config file. Paths are relative to the file.
    ///
    /// Keys: `word_error_rate`, `char_error_rate`, `op_weights` (four
    /// numbers), `vocab`, `confusion`, `max_distance`, `seed`. Without a
    /// `confusion` file the confusion set is derived from `vocab`.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        NoiseConfig::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = NoiseConfig::default();
        let mut vocab_path = None;
        let mut confusion_path = None;
        let mut max_distance = 1usize;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::parse(line_no, "expected key = value"));
            };
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| Error::parse(line_no, format!("bad number {v:?} for {key}")))
            };
            match key {
                "word_error_rate" => cfg.word_error_rate = num(value)?,
                "char_error_rate" => cfg.char_error_rate = num(value)?,
                "op_weights" => {
                    let ws: Vec<f64> = value
                        .split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|s| !s.is_empty())
                        .map(num)
                        .collect::<Result<_>>()?;
                    cfg.op_weights = ws.try_into().map_err(|_| {
                        Error::parse(line_no, "op_weights needs exactly four values")
                    })?;
                }
                "vocab" => vocab_path = Some(base_dir.join(value)),
                "confusion" => confusion_path = Some(base_dir.join(value)),
                "max_distance" => {
                    max_distance = value
                        .parse()
                        .map_err(|_| Error::parse(line_no, format!("bad max_distance {value:?}")))?
                }
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| Error::parse(line_no, format!("bad seed {value:?}")))?
                }
                other => return Err(Error::parse(line_no, format!("unknown key {other:?}"))),
            }
        }
        let vocab = vocab_path.map(read_word_list).transpose()?;
        cfg.confusion = match (&confusion_path, &vocab) {
            (Some(p), _) => ConfusionSet::read(p)?,
            (None, Some(words)) => build_confusion_set(words, max_distance),
            (None, None) => ConfusionSet::default(),
        };
        cfg.vocabulary = match vocab {
            Some(words) => Vocabulary::new(words).iter().cloned().collect(),
            None => cfg
                .confusion
                .iter()
                .flat_map(|(t, c)| std::iter::once(t).chain(c))
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// What one call to [`noise_sentence_with_stats`] did.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NoiseStats {
    pub input_tokens: usize,
    pub word_ops_drawn: usize,
    /// Drawn word operations that changed the sentence (a substitution of
    /// a token without confusion candidates is skipped, for instance).
    pub word_ops_applied: usize,
    pub char_ops_applied: usize,
}

pub fn noise_sentence(tokens: &TokenSequence, config: &NoiseConfig, rng: &mut RngState) -> TokenSequence {
    noise_sentence_with_stats(tokens, config, rng).0
}

pub fn noise_sentence_with_stats(
    tokens: &TokenSequence,
    config: &NoiseConfig,
    rng: &mut RngState,
) -> (TokenSequence, NoiseStats) {
    let mut stats = NoiseStats {
        input_tokens: tokens.len(),
        ..NoiseStats::default()
    };
    let mut words: Vec<String> = tokens.to_vec();
    if words.is_empty() {
        return (TokenSequence::new(), stats);
    }
    let op_dist = WeightedIndex::new(config.op_weights).expect("validated op weights");

    if config.word_error_rate > 0.0 {
        let k = Binomial::new(words.len() as u64, config.word_error_rate)
            .expect("validated rate")
            .sample(rng);
        stats.word_ops_drawn = k as usize;
        for _ in 0..k {
            let applied = match OPS[op_dist.sample(rng)] {
                NoiseOp::Substitute => {
                    if words.is_empty() {
                        false
                    } else {
                        let pos = rng.random_range(0..words.len());
                        match config.confusion.get(&words[pos]) {
                            Some(cands) => {
                                words[pos] = cands[rng.random_range(0..cands.len())].clone();
                                true
                            }
                            None => false,
                        }
                    }
                }
                NoiseOp::Delete => {
                    if words.is_empty() {
                        false
                    } else {
                        let pos = rng.random_range(0..words.len());
                        words.remove(pos);
                        true
                    }
                }
                NoiseOp::Insert => {
                    if config.vocabulary.is_empty() {
                        false
                    } else {
                        let pos = rng.random_range(0..=words.len());
                        let w = config.vocabulary[rng.random_range(0..config.vocabulary.len())].clone();
                        words.insert(pos, w);
                        true
                    }
                }
                NoiseOp::Swap => {
                    if words.len() < 2 {
                        false
                    } else {
                        let pos = rng.random_range(0..words.len() - 1);
                        words.swap(pos, pos + 1);
                        true
                    }
                }
            };
            stats.word_ops_applied += usize::from(applied);
        }
    }

    if config.char_error_rate > 0.0 {
        let alphabet: Vec<char> = tokens
            .iter()
            .flat_map(|t| t.chars())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        for word in &mut words {
            stats.char_ops_applied += noise_chars(word, &alphabet, config, &op_dist, rng);
        }
    }
    (TokenSequence::from_tokens_unchecked(words), stats)
}

fn noise_chars(
    word: &mut String,
    alphabet: &[char],
    config: &NoiseConfig,
    op_dist: &WeightedIndex<f64>,
    rng: &mut RngState,
) -> usize {
    let mut chars: Vec<char> = word.chars().collect();
    let k = Binomial::new(chars.len() as u64, config.char_error_rate)
        .expect("validated rate")
        .sample(rng);
    let mut applied = 0;
    for _ in 0..k {
        let done = match OPS[op_dist.sample(rng)] {
            NoiseOp::Substitute => {
                let pos = rng.random_range(0..chars.len());
                let others: Vec<char> = alphabet.iter().copied().filter(|&c| c != chars[pos]).collect();
                if others.is_empty() {
                    false
                } else {
                    chars[pos] = others[rng.random_range(0..others.len())];
                    true
                }
            }
            // Never empty a token.
            NoiseOp::Delete => {
                if chars.len() < 2 {
                    false
                } else {
                    let pos = rng.random_range(0..chars.len());
                    chars.remove(pos);
                    true
                }
            }
            NoiseOp::Insert => {
                let pos = rng.random_range(0..=chars.len());
                chars.insert(pos, alphabet[rng.random_range(0..alphabet.len())]);
                true
            }
            NoiseOp::Swap => {
                if chars.len() < 2 {
                    false
                } else {
                    let pos = rng.random_range(0..chars.len() - 1);
                    chars.swap(pos, pos + 1);
                    true
                }
            }
        };
        applied += usize::from(done);
    }
    if applied > 0 {
        *word = chars.into_iter().collect();
    }
    applied
}

/// Streams `(noised, original)` pairs, one per input line. Line `i`
/// (0-based) uses generator stream `i` of `config.seed`.
pub struct NoiseCorpus<'a, R> {
    lines: std::io::Lines<R>,
    config: &'a NoiseConfig,
    index: u64,
}

pub fn noise_corpus<R: BufRead>(input: R, config: &NoiseConfig) -> Result<NoiseCorpus<'_, R>> {
    config.validate()?;
    Ok(NoiseCorpus {
        lines: input.lines(),
        config,
        index: 0,
    })
}

impl<R: BufRead> Iterator for NoiseCorpus<'_, R> {
    type Item = Result<(TokenSequence, TokenSequence)>;

    fn next(&mut self) -> Option<Self::Item> {
        let line = self.lines.next()?;
        let i = self.index;
        self.index += 1;
        Some(match line {
            Ok(line) => {
                let original = TokenSequence::from_line(&line);
                let mut rng = stream_rng(self.config.seed, i);
                Ok((noise_sentence(&original, self.config, &mut rng), original))
            }
            Err(source) => Err(Error::IoAt {
                line: i as usize + 1,
                source,
            }),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseConfig {
    /// Fraction of tokens to cover with masked spans.
    pub mask_ratio: f64,
    /// Poisson mean of the span length.
    pub span_lambda: f64,
    pub shuffle_sentences: bool,
    pub mask_token: String,
    pub seed: u64,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        DenoiseConfig {
            mask_ratio: 0.3,
            span_lambda: 3.0,
            shuffle_sentences: false,
            mask_token: "<mask>".to_owned(),
            seed: 0,
        }
    }
}

impl DenoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mask_ratio) {
            return Err(Error::validation(format!(
                "mask_ratio must lie in [0, 1], got {}",
                self.mask_ratio
            )));
        }
        if !(self.span_lambda > 0.0 && self.span_lambda.is_finite()) {
            return Err(Error::validation(format!(
                "span_lambda must be positive, got {}",
                self.span_lambda
            )));
        }
        TokenSequence::try_from_tokens([self.mask_token.as_str()])?;
        Ok(())
    }
}

/// One masked span of the (shuffled) document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskSpan {
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoisedDocument {
    /// Shuffled and masked input.
    pub source: TokenSequence,
    /// Original document, sentences in their original order.
    pub target: TokenSequence,
    /// Spans in order of position, over the shuffled token sequence.
    pub spans: Vec<MaskSpan>,
    pub masked_tokens: usize,
    pub total_tokens: usize,
}

const PLACEMENT_TRIES: usize = 64;
const LENGTH_REDRAWS: usize = 64;

/// Builds a denoising pair: optionally permutes the sentences, then
/// replaces non-overlapping spans with Poisson-distributed lengths by a
/// single mask token each until at least `mask_ratio` of the tokens are
/// covered. A zero-length span inserts a mask token.
pub fn bart_denoise(
    sentences: &[TokenSequence],
    config: &DenoiseConfig,
    rng: &mut RngState,
) -> Result<DenoisedDocument> {
    config.validate()?;
    let target: Vec<String> = sentences.iter().flat_map(|s| s.iter().cloned()).collect();
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    if config.shuffle_sentences {
        order.shuffle(rng);
    }
    let doc: Vec<&String> = order.iter().flat_map(|&i| sentences[i].iter()).collect();
    let n = doc.len();
    let goal = (config.mask_ratio * n as f64).ceil() as usize;

    let poisson = Poisson::new(config.span_lambda)
        .map_err(|e| Error::validation(format!("span_lambda: {e}")))?;
    let mut covered = vec![false; n];
    // zero_at[p]: a bare mask token is inserted before token p.
    let mut zero_at = vec![false; n + 1];
    let mut spans = Vec::new();
    let mut masked = 0;

    let fits = |start: usize, len: usize, covered: &[bool], zero_at: &[bool]| -> bool {
        if len == 0 {
            !zero_at[start] && !(start > 0 && start < n && covered[start - 1] && covered[start])
        } else {
            covered[start..start + len].iter().all(|c| !c)
                && zero_at[start + 1..start + len].iter().all(|z| !z)
        }
    };

    while masked < goal {
        let mut placed = None;
        for _ in 0..LENGTH_REDRAWS {
            let len = poisson.sample(rng) as usize;
            if len > n {
                continue;
            }
            for _ in 0..PLACEMENT_TRIES {
                let start = rng.random_range(0..=n - len);
                if fits(start, len, &covered, &zero_at) {
                    placed = Some(MaskSpan { start, len });
                    break;
                }
            }
            if placed.is_some() {
                break;
            }
        }
        // Crowded document: fall back to a single free token.
        let span = placed.unwrap_or_else(|| {
            let free: Vec<usize> = (0..n).filter(|&i| !covered[i]).collect();
            MaskSpan {
                start: free[rng.random_range(0..free.len())],
                len: 1,
            }
        });
        if span.len == 0 {
            zero_at[span.start] = true;
        } else {
            covered[span.start..span.start + span.len].fill(true);
        }
        masked += span.len;
        spans.push(span);
    }
    spans.sort_by_key(|s| (s.start, s.len));

    let mut source = Vec::with_capacity(n);
    let mut i = 0;
    let mut next_span = spans.iter().filter(|s| s.len > 0).peekable();
    while i <= n {
        if zero_at[i] {
            source.push(config.mask_token.clone());
        }
        if i == n {
            break;
        }
        if next_span.peek().is_some_and(|s| s.start == i) {
            let s = next_span.next().unwrap();
            source.push(config.mask_token.clone());
            i += s.len;
        } else {
            source.push(doc[i].clone());
            i += 1;
        }
    }

    Ok(DenoisedDocument {
        source: TokenSequence::from_tokens_unchecked(source),
        target: TokenSequence::from_tokens_unchecked(target),
        spans,
        masked_tokens: masked,
        total_tokens: n,
    })
}
