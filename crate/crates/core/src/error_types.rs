//! Rule-based edit classification and per-type scoring.
//!
//! Only a handful of types are recognised without a part-of-speech tagger:
//! PUNCT, ORTH, WO, SPELL, DET and PREP. Everything else is OTHER. The
//! first matching rule wins, in that order.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use unicode_general_category::{get_general_category, GeneralCategory};

use crate::alignment::{Edit, UNKNOWN_TYPE};
use crate::corpus_io::{M2Document, TokenSequence};
use crate::error::Result;
use crate::lexicon::{char_distance, read_word_list, Vocabulary};
use crate::m2_scorer::{score_corpus_matches, Counts, M2Params, ScoreReport, TypeScore};

pub const PUNCT: &str = "PUNCT";
pub const ORTH: &str = "ORTH";
pub const WO: &str = "WO";
pub const SPELL: &str = "SPELL";
pub const DET: &str = "DET";
pub const PREP: &str = "PREP";
pub const OTHER: &str = "OTHER";

const MAX_SPELL_DISTANCE: usize = 2;

#[derive(Debug, Clone, Default)]
pub struct TypeLexicons {
    pub determiners: HashSet<String>,
    pub prepositions: HashSet<String>,
    pub vocabulary: Vocabulary,
}

impl TypeLexicons {
    pub fn new<D, P, S>(determiners: D, prepositions: P, vocabulary: Vocabulary) -> Self
    where
        D: IntoIterator<Item = S>,
        P: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        TypeLexicons {
            determiners: determiners.into_iter().map(|s| s.as_ref().to_lowercase()).collect(),
            prepositions: prepositions.into_iter().map(|s| s.as_ref().to_lowercase()).collect(),
            vocabulary,
        }
    }

    /// Loads `determiners.txt`, `prepositions.txt` and (if present)
    /// `vocab.txt` from `dir`.
    pub fn read_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let vocab_path = dir.join("vocab.txt");
        let vocabulary = if vocab_path.exists() {
            Vocabulary::read(vocab_path)?
        } else {
            Vocabulary::default()
        };
        Ok(TypeLexicons::new(
            read_word_list(dir.join("determiners.txt"))?,
            read_word_list(dir.join("prepositions.txt"))?,
            vocabulary,
        ))
    }

    /// Common English determiners and prepositions, no vocabulary.
    pub fn english() -> Self {
        TypeLexicons::new(
            [
                "a", "an", "the", "this", "that", "these", "those", "my", "your", "his", "her",
                "its", "our", "their", "some", "any", "no", "every", "each", "either", "neither",
                "much", "many", "few", "little", "several", "all", "both", "another", "such",
                "what", "which", "whose",
            ],
            [
                "about", "above", "across", "after", "against", "along", "among", "around", "as",
                "at", "before", "behind", "below", "beneath", "beside", "between", "beyond", "by",
                "despite", "down", "during", "except", "for", "from", "in", "inside", "into",
                "like", "near", "of", "off", "on", "onto", "out", "outside", "over", "past",
                "since", "through", "throughout", "till", "to", "toward", "towards", "under",
                "until", "up", "upon", "with", "within", "without",
            ],
            Vocabulary::default(),
        )
    }
}

/// Unicode punctuation (general categories P*) plus ASCII symbols.
pub fn is_punctuation(c: char) -> bool {
    use GeneralCategory::*;
    c.is_ascii_punctuation()
        || matches!(
            get_general_category(c),
            ConnectorPunctuation
                | DashPunctuation
                | OpenPunctuation
                | ClosePunctuation
                | InitialPunctuation
                | FinalPunctuation
                | OtherPunctuation
        )
}

fn all_punct(tokens: &[String]) -> bool {
    !tokens.is_empty() && tokens.iter().all(|t| t.chars().all(is_punctuation))
}

/// Tokens of each side left after removing the (case-folded) tokens the
/// two sides share.
fn uncommon(orig: &[String], cor: &[String]) -> Vec<String> {
    let mut left: Vec<String> = orig.iter().map(|t| t.to_lowercase()).collect();
    let mut rest = Vec::new();
    for t in cor.iter().map(|t| t.to_lowercase()) {
        match left.iter().position(|l| *l == t) {
            Some(p) => {
                left.swap_remove(p);
            }
            None => rest.push(t),
        }
    }
    rest.extend(left);
    rest
}

pub fn classify_edit(edit: &Edit, source: &TokenSequence, lexicons: &TypeLexicons) -> &'static str {
    let orig = edit.source_span(source);
    let cor = edit.replacement.as_slice();

    let punct_side = |a: &[String], b: &[String]| all_punct(a) && (b.is_empty() || all_punct(b));
    if punct_side(orig, cor) || punct_side(cor, orig) {
        return PUNCT;
    }
    if !orig.is_empty() && !cor.is_empty() && orig.concat().to_lowercase() == cor.concat().to_lowercase() {
        return ORTH;
    }
    if orig.len() >= 2 && orig.len() == cor.len() {
        let (mut a, mut b) = (orig.to_vec(), cor.to_vec());
        a.sort();
        b.sort();
        if a == b {
            return WO;
        }
    }
    if orig.len() == 1
        && cor.len() == 1
        && !lexicons.vocabulary.is_empty()
        && !lexicons.vocabulary.contains_folded(&orig[0])
        && lexicons.vocabulary.contains_folded(&cor[0])
        && char_distance(&orig[0].to_lowercase(), &cor[0].to_lowercase()) <= MAX_SPELL_DISTANCE
    {
        return SPELL;
    }
    let rest = uncommon(orig, cor);
    if !rest.is_empty() {
        if rest.iter().all(|t| lexicons.determiners.contains(t)) {
            return DET;
        }
        if rest.iter().all(|t| lexicons.prepositions.contains(t)) {
            return PREP;
        }
    }
    OTHER
}

/// Gold label to use for per-type tallies, if the gold file provides one.
/// ERRANT-style operation prefixes (`M:`, `R:`, `U:`) are dropped.
fn gold_label(edit: &Edit) -> Option<String> {
    let label = edit.type_label.trim();
    if label.is_empty() || label == UNKNOWN_TYPE {
        return None;
    }
    let bare = ["M:", "R:", "U:"]
        .iter()
        .find_map(|p| label.strip_prefix(p))
        .unwrap_or(label);
    Some(bare.to_owned())
}

/// M² scoring with every true positive, false positive and false negative
/// attributed to an error type.
pub fn score_by_type(
    doc: &M2Document,
    hypotheses: &[TokenSequence],
    lexicons: &TypeLexicons,
    params: &M2Params,
) -> Result<ScoreReport> {
    let (mut report, matches) = score_corpus_matches(doc, hypotheses, params)?;
    let mut tallies: BTreeMap<String, Counts> = BTreeMap::new();
    for (entry, m) in doc.entries.iter().zip(&matches) {
        let label_of = |e: &Edit| gold_label(e).unwrap_or_else(|| classify_edit(e, &entry.source, lexicons).to_owned());
        for (p, &correct) in m.proposed.iter().zip(&m.proposed_correct) {
            if correct {
                let gold = m.gold.iter().find(|g| g.same_correction(p)).expect("matched gold edit");
                let label = gold_label(gold).unwrap_or_else(|| classify_edit(p, &entry.source, lexicons).to_owned());
                tallies.entry(label).or_default().tp += 1;
            } else {
                tallies
                    .entry(classify_edit(p, &entry.source, lexicons).to_owned())
                    .or_default()
                    .fp += 1;
            }
        }
        for (g, &matched) in m.gold.iter().zip(&m.gold_matched) {
            if !matched {
                tallies.entry(label_of(g)).or_default().fn_ += 1;
            }
        }
    }
    report.per_type = Some(
        tallies
            .into_iter()
            .map(|(k, c)| (k, TypeScore::from_counts(c, params.beta)))
            .collect(),
    );
    Ok(report)
}

/// Per-type rows ordered by gold-edit frequency (tp + fn), most frequent
/// first, then by name.
pub fn ranked_types<'a>(
    per_type: &'a BTreeMap<String, TypeScore>,
    exclude: &[&str],
    top: Option<usize>,
) -> Vec<(&'a str, &'a TypeScore)> {
    let mut rows: Vec<(&str, &TypeScore)> = per_type
        .iter()
        .filter(|(k, _)| !exclude.contains(&k.as_str()))
        .map(|(k, v)| (k.as_str(), v))
        .collect();
    rows.sort_by(|a, b| (b.1.tp + b.1.fn_).cmp(&(a.1.tp + a.1.fn_)).then(a.0.cmp(b.0)));
    if let Some(n) = top {
        rows.truncate(n);
    }
    rows
}

/// Renders a `Error Type  P  R  F0.5` table with percentages.
pub fn render_type_table(
    per_type: &BTreeMap<String, TypeScore>,
    beta: f64,
    exclude: &[&str],
    top: Option<usize>,
    decimals: usize,
) -> String {
    let rows = ranked_types(per_type, exclude, top);
    let f_head = format!("F{beta}");
    let name_w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0).max("Error Type".len());
    let num_w = (4 + decimals).max(f_head.len());
    let mut out = format!(
        "{:<name_w$}  {:>num_w$}  {:>num_w$}  {:>num_w$}\n",
        "Error Type", "P", "R", f_head
    );
    for (name, s) in rows {
        out.push_str(&format!(
            "{:<name_w$}  {:>num_w$.decimals$}  {:>num_w$.decimals$}  {:>num_w$.decimals$}\n",
            name,
            s.precision * 100.0,
            s.recall * 100.0,
            s.f_beta * 100.0
        ));
    }
    out
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

    fn lex() -> TypeLexicons {
        let mut l = TypeLexicons::english();
        l.vocabulary = Vocabulary::new(["receive", "the", "cat", "i", "will", "it"]);
        l
    }

    #[test]
    fn punctuation() {
        let src = ts("a , b");
        assert_eq!(classify_edit(&ed(1, 2, &["."]), &src, &lex()), PUNCT);
        assert_eq!(classify_edit(&ed(1, 2, &[]), &src, &lex()), PUNCT);
        assert_eq!(classify_edit(&ed(3, 3, &["!"]), &src, &lex()), PUNCT);
        assert_eq!(classify_edit(&ed(0, 0, &["«"]), &src, &lex()), PUNCT);
        assert_ne!(classify_edit(&ed(1, 2, &["x"]), &src, &lex()), PUNCT);
    }

    #[test]
    fn determiner_insertion() {
        assert_eq!(classify_edit(&ed(0, 0, &["the"]), &ts("cat sat"), &lex()), DET);
        assert_eq!(classify_edit(&ed(0, 1, &["the"]), &ts("a cat"), &lex()), DET);
    }

    #[test]
    fn spelling() {
        assert_eq!(classify_edit(&ed(2, 3, &["receive"]), &ts("I will recieve it"), &lex()), SPELL);
        // Replacement outside the vocabulary is not a spelling fix.
        assert_eq!(classify_edit(&ed(2, 3, &["recieves"]), &ts("I will recieve it"), &lex()), OTHER);
    }

    #[test]
    fn orthography_and_word_order() {
        assert_eq!(classify_edit(&ed(0, 1, &["The"]), &ts("the cat"), &lex()), ORTH);
        assert_eq!(classify_edit(&ed(0, 2, &["something"]), &ts("some thing"), &lex()), ORTH);
        assert_eq!(classify_edit(&ed(0, 2, &["b", "a"]), &ts("a b"), &lex()), WO);
    }

    #[test]
    fn prepositions_and_other() {
        assert_eq!(classify_edit(&ed(1, 2, &["on"]), &ts("sit in it"), &lex()), PREP);
        assert_eq!(classify_edit(&ed(1, 3, &["on", "it"]), &ts("sit in it"), &lex()), PREP);
        assert_eq!(classify_edit(&ed(0, 1, &["run"]), &ts("ran away"), &lex()), OTHER);
    }

    #[test]
    fn gold_labels_are_normalized() {
        let mut e = ed(0, 1, &["x"]);
        e.type_label = "R:PREP".into();
        assert_eq!(gold_label(&e).as_deref(), Some("PREP"));
        e.type_label = UNKNOWN_TYPE.into();
        assert_eq!(gold_label(&e), None);
    }

    #[test]
    fn table_layout() {
        let mut per_type = BTreeMap::new();
        per_type.insert(PUNCT.to_owned(), TypeScore::from_counts(Counts { tp: 3, fp: 1, fn_: 1 }, 0.5));
        per_type.insert(OTHER.to_owned(), TypeScore::from_counts(Counts { tp: 9, fp: 0, fn_: 9 }, 0.5));
        per_type.insert(DET.to_owned(), TypeScore::from_counts(Counts { tp: 1, fp: 0, fn_: 0 }, 0.5));
        let table = render_type_table(&per_type, 0.5, &[OTHER], None, 1);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("Error Type"));
        assert!(lines[0].ends_with("F0.5"));
        assert!(lines[1].starts_with("PUNCT"));
        assert!(lines[1].contains("75.0"));
        assert!(lines[2].starts_with("DET"));
    }
}
