//! Corpus formats: M² gold files, one-sentence-per-line text, pair filtering
//! and language tagging.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::Deref;
use std::path::Path;

use crate::alignment::{validate_edits, Edit};
use crate::error::{Error, Result};

/// Correction field value that stands for an empty replacement.
pub const NONE_FIELD: &str = "-NONE-";
const NOOP_TYPE: &str = "noop";
const FIELD_SEP: &str = "|||";

/// A tokenized sentence. Tokens are non-empty and contain no whitespace.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Splits a pre-tokenized line on whitespace.
    pub fn from_line(line: &str) -> Self {
        TokenSequence(line.split_whitespace().map(str::to_owned).collect())
    }

    pub fn try_from_tokens<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if let Some(bad) = tokens
            .iter()
            .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(Error::validation(format!(
                "invalid token {bad:?}: tokens must be non-empty and free of whitespace"
            )));
        }
        Ok(TokenSequence(tokens))
    }

    /// Callers guarantee the token invariant.
    pub(crate) fn from_tokens_unchecked(tokens: Vec<String>) -> Self {
        debug_assert!(tokens
            .iter()
            .all(|t| !t.is_empty() && !t.chars().any(char::is_whitespace)));
        TokenSequence(tokens)
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.0
    }
}

impl Deref for TokenSequence {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, tok) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(tok)?;
        }
        Ok(())
    }
}

/// A gold edit as it appears in an M² file. The `required` and `comment`
/// fields play no part in scoring; they are kept so files round-trip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldEdit {
    pub edit: Edit,
    pub required: String,
    pub comment: String,
}

impl GoldEdit {
    pub fn new(edit: Edit) -> Self {
        GoldEdit {
            edit,
            required: "REQUIRED".to_owned(),
            comment: NONE_FIELD.to_owned(),
        }
    }
}

/// One annotator's edits for one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldAnnotation {
    pub annotator_id: u32,
    pub edits: Vec<GoldEdit>,
    /// Set when the annotator explicitly marked the sentence as correct.
    pub is_noop: bool,
}

impl GoldAnnotation {
    pub fn new(annotator_id: u32, edits: Vec<Edit>) -> Self {
        GoldAnnotation {
            annotator_id,
            edits: edits.into_iter().map(GoldEdit::new).collect(),
            is_noop: false,
        }
    }

    pub fn noop(annotator_id: u32) -> Self {
        GoldAnnotation {
            annotator_id,
            edits: Vec::new(),
            is_noop: true,
        }
    }

    pub fn edits(&self) -> impl ExactSizeIterator<Item = &Edit> + '_ {
        self.edits.iter().map(|g| &g.edit)
    }

    pub fn validate(&self, source_len: usize) -> Result<()> {
        if self.is_noop && !self.edits.is_empty() {
            return Err(Error::validation(format!(
                "annotator {} is marked noop but has edits",
                self.annotator_id
            )));
        }
        let edits: Vec<Edit> = self.edits().cloned().collect();
        validate_edits(&edits, source_len)
            .map_err(|e| Error::validation(format!("annotator {}: {e}", self.annotator_id)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct M2Entry {
    pub source: TokenSequence,
    pub annotations: Vec<GoldAnnotation>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct M2Document {
    pub entries: Vec<M2Entry>,
}

impl M2Document {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        parse_m2(&std::fs::read_to_string(path)?)
    }
}

/// Parses an M² document.
///
/// Annotations are grouped per annotator id and returned in ascending id
/// order. An entry without any `A` line gets a single empty annotation from
/// annotator 0. Edits within an annotation are sorted by span.
pub fn parse_m2(text: &str) -> Result<M2Document> {
    let text = text.replace("\r\n", "\n");
    let mut entries = Vec::new();
    let mut current: Option<(TokenSequence, Vec<(usize, ParsedALine)>)> = None;

    for (idx, line) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            if let Some((source, alines)) = current.take() {
                entries.push(build_entry(source, alines)?);
            }
        } else if line == "S" || line.starts_with("S ") {
            if let Some((source, alines)) = current.take() {
                entries.push(build_entry(source, alines)?);
            }
            current = Some((TokenSequence::from_line(&line[1..]), Vec::new()));
        } else if let Some(rest) = line.strip_prefix("A ") {
            let Some((_, alines)) = current.as_mut() else {
                return Err(Error::parse(line_no, "annotation line before any S line"));
            };
            alines.push((line_no, parse_a_line(rest, line_no)?));
        } else {
            return Err(Error::parse(
                line_no,
                format!("expected an S line, an A line or a blank line, found {line:?}"),
            ));
        }
    }
    if let Some((source, alines)) = current.take() {
        entries.push(build_entry(source, alines)?);
    }
    Ok(M2Document { entries })
}

#[derive(Debug)]
enum ParsedALine {
    Noop { annotator: u32 },
    Edit { annotator: u32, edit: GoldEdit },
}

fn parse_a_line(rest: &str, line_no: usize) -> Result<ParsedALine> {
    let fields: Vec<&str> = rest.split(FIELD_SEP).collect();
    if fields.len() != 6 {
        return Err(Error::parse(
            line_no,
            format!("expected 6 `|||`-separated fields, found {}", fields.len()),
        ));
    }
    let mut span = fields[0].split_whitespace();
    let (Some(start), Some(end), None) = (span.next(), span.next(), span.next()) else {
        return Err(Error::parse(line_no, format!("bad span {:?}", fields[0])));
    };
    let parse_off = |s: &str| {
        s.parse::<i64>()
            .map_err(|_| Error::parse(line_no, format!("bad offset {s:?}")))
    };
    let (start, end) = (parse_off(start)?, parse_off(end)?);
    let annotator: u32 = fields[5]
        .trim()
        .parse()
        .map_err(|_| Error::parse(line_no, format!("bad annotator id {:?}", fields[5])))?;

    if start == -1 && end == -1 {
        if fields[1] != NOOP_TYPE {
            return Err(Error::parse(line_no, "span -1 -1 is reserved for noop annotations"));
        }
        return Ok(ParsedALine::Noop { annotator });
    }
    if start < 0 || end < start {
        return Err(Error::parse(line_no, format!("invalid span {start} {end}")));
    }
    let correction = match fields[2] {
        NONE_FIELD => Vec::new(),
        c => c.split_whitespace().map(str::to_owned).collect(),
    };
    let edit = Edit::new(start as usize, end as usize, correction, fields[1])
        .map_err(|e| Error::parse(line_no, e.to_string()))?;
    Ok(ParsedALine::Edit {
        annotator,
        edit: GoldEdit {
            edit,
            required: fields[3].to_owned(),
            comment: fields[4].to_owned(),
        },
    })
}

fn build_entry(source: TokenSequence, alines: Vec<(usize, ParsedALine)>) -> Result<M2Entry> {
    let mut by_annotator: BTreeMap<u32, GoldAnnotation> = BTreeMap::new();
    for (line_no, aline) in alines {
        match aline {
            ParsedALine::Noop { annotator } => {
                let ann = by_annotator
                    .entry(annotator)
                    .or_insert_with(|| GoldAnnotation::noop(annotator));
                if !ann.edits.is_empty() {
                    return Err(Error::parse(line_no, "noop annotation for an annotator with edits"));
                }
                ann.is_noop = true;
            }
            ParsedALine::Edit { annotator, edit } => {
                if edit.edit.end > source.len() {
                    return Err(Error::validation(format!(
                        "line {line_no}: edit span {}..{} exceeds sentence length {}",
                        edit.edit.start,
                        edit.edit.end,
                        source.len()
                    )));
                }
                let ann = by_annotator
                    .entry(annotator)
                    .or_insert_with(|| GoldAnnotation::new(annotator, Vec::new()));
                if ann.is_noop {
                    return Err(Error::parse(line_no, "edit for an annotator marked noop"));
                }
                ann.edits.push(edit);
            }
        }
    }
    if by_annotator.is_empty() {
        by_annotator.insert(0, GoldAnnotation::new(0, Vec::new()));
    }
    let mut annotations: Vec<GoldAnnotation> = by_annotator.into_values().collect();
    for ann in &mut annotations {
        ann.edits
            .sort_by(|a, b| (a.edit.start, a.edit.end).cmp(&(b.edit.start, b.edit.end)));
        ann.validate(source.len())?;
    }
    Ok(M2Entry {
        source,
        annotations,
    })
}

/// Renders a document in M² format.
///
/// An empty, non-noop annotation emits no lines, so it only survives a
/// round trip as the sole annotation of annotator 0.
pub fn emit_m2(doc: &M2Document) -> String {
    let mut out = String::new();
    for entry in &doc.entries {
        out.push('S');
        for tok in entry.source.iter() {
            out.push(' ');
            out.push_str(tok);
        }
        out.push('\n');
        for ann in &entry.annotations {
            if ann.is_noop {
                out.push_str(&format!(
                    "A -1 -1|||{NOOP_TYPE}|||{NONE_FIELD}|||REQUIRED|||{NONE_FIELD}|||{}\n",
                    ann.annotator_id
                ));
                continue;
            }
            for g in &ann.edits {
                let correction = if g.edit.replacement.is_empty() {
                    NONE_FIELD.to_owned()
                } else {
                    g.edit.replacement.join(" ")
                };
                out.push_str(&format!(
                    "A {} {}|||{}|||{}|||{}|||{}|||{}\n",
                    g.edit.start,
                    g.edit.end,
                    g.edit.type_label,
                    correction,
                    g.required,
                    g.comment,
                    ann.annotator_id
                ));
            }
        }
        out.push('\n');
    }
    out
}

/// Reads one tokenized sentence per line.
pub fn read_sentences(path: impl AsRef<Path>) -> Result<Vec<TokenSequence>> {
    let reader = BufReader::new(File::open(path)?);
    reader
        .lines()
        .enumerate()
        .map(|(i, line)| {
            line.map(|l| TokenSequence::from_line(&l))
                .map_err(|source| Error::IoAt { line: i + 1, source })
        })
        .collect()
}

pub fn write_sentences<'a>(
    path: impl AsRef<Path>,
    sentences: impl IntoIterator<Item = &'a TokenSequence>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for s in sentences {
        writeln!(w, "{s}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an aligned parallel corpus; both files must have the same number of lines.
pub fn read_parallel(
    src: impl AsRef<Path>,
    tgt: impl AsRef<Path>,
) -> Result<Vec<(TokenSequence, TokenSequence)>> {
    let sources = read_sentences(src)?;
    let targets = read_sentences(tgt)?;
    if sources.len() != targets.len() {
        return Err(Error::validation(format!(
            "parallel corpus is misaligned: {} source lines, {} target lines",
            sources.len(),
            targets.len()
        )));
    }
    Ok(sources.into_iter().zip(targets).collect())
}

/// Drops pairs whose two sides are token-wise identical.
pub fn filter_unchanged(
    pairs: impl IntoIterator<Item = (TokenSequence, TokenSequence)>,
) -> Vec<(TokenSequence, TokenSequence)> {
    pairs.into_iter().filter(|(s, t)| s != t).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum TagPosition {
    Initial,
    #[default]
    Final,
}

/// Language codes accepted by [`LanguageRegistry::tag`].
#[derive(Debug, Clone)]
pub struct LanguageRegistry {
    codes: Vec<String>,
}

/// The 25 language codes of the multilingual denoising model family.
const CC25_CODES: [&str; 25] = [
    "ar_AR", "cs_CZ", "de_DE", "en_XX", "es_XX", "et_EE", "fi_FI", "fr_XX", "gu_IN", "hi_IN",
    "it_IT", "ja_XX", "kk_KZ", "ko_KR", "lt_LT", "lv_LV", "my_MM", "ne_NP", "nl_XX", "ro_RO",
    "ru_RU", "si_LK", "tr_TR", "vi_VN", "zh_CN",
];

impl Default for LanguageRegistry {
    fn default() -> Self {
        LanguageRegistry::new(CC25_CODES)
    }
}

impl LanguageRegistry {
    pub fn new<I, S>(codes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        LanguageRegistry {
            codes: codes.into_iter().map(Into::into).collect(),
        }
    }

    pub fn contains(&self, code: &str) -> bool {
        self.codes.iter().any(|c| c == code)
    }

    pub fn tag(
        &self,
        sentence: &TokenSequence,
        code: &str,
        position: TagPosition,
    ) -> Result<TokenSequence> {
        if !self.contains(code) {
            return Err(Error::UnknownLanguage {
                code: code.to_owned(),
                known: self.codes.join(", "),
            });
        }
        let tag = format!("<{code}>");
        if tag.chars().any(char::is_whitespace) {
            return Err(Error::validation(format!("language code {code:?} contains whitespace")));
        }
        let mut tokens = Vec::with_capacity(sentence.len() + 1);
        if position == TagPosition::Initial {
            tokens.push(tag.clone());
        }
        tokens.extend(sentence.iter().cloned());
        if position == TagPosition::Final {
            tokens.push(tag);
        }
        Ok(TokenSequence::from_tokens_unchecked(tokens))
    }
}

/// Appends `<lang_code>` using the default registry.
pub fn tag_language(sentence: &TokenSequence, lang_code: &str) -> Result<TokenSequence> {
    LanguageRegistry::default().tag(sentence, lang_code, TagPosition::Final)
}
