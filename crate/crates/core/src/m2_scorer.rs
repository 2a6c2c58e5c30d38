//! MaxMatch (M²) scoring.
//!
//! For every sentence the scorer builds an edit lattice over all
//! minimum-cost (unit Levenshtein) alignments between source and
//! hypothesis, adds transitive arcs that merge neighbouring edits across at
//! most `max_unchanged` unchanged tokens, and picks the path whose edits
//! match the most gold edits, preferring fewer edits on ties. Corpus scores
//! are micro-averaged; with several annotators the scorer greedily keeps,
//! sentence by sentence, the annotator that maximizes the running F_β.
//!
//! Precision and recall are 1.0 when their denominator is zero.

use std::cmp::Reverse;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::alignment::Edit;
use crate::corpus_io::{GoldAnnotation, M2Document, TokenSequence};
use crate::error::{Error, Result};

pub const DEFAULT_BETA: f64 = 0.5;
pub const DEFAULT_MAX_UNCHANGED: usize = 2;

/// Weighted harmonic mean of precision and recall; 0 when both are 0.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / denom
    }
}

fn ratio_or_one(num: usize, denom: usize) -> f64 {
    if denom == 0 {
        1.0
    } else {
        num as f64 / denom as f64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio_or_one(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio_or_one(self.tp, self.tp + self.fn_)
    }

    pub fn f_beta(&self, beta: f64) -> f64 {
        f_beta(self.precision(), self.recall(), beta)
    }
}

impl std::ops::Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub chosen_annotator: u32,
}

impl SentenceCounts {
    pub fn counts(&self) -> Counts {
        Counts {
            tp: self.tp,
            fp: self.fp,
            fn_: self.fn_,
        }
    }
}

/// Counts and derived scores for one error type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeScore {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
}

impl TypeScore {
    pub fn from_counts(c: Counts, beta: f64) -> Self {
        TypeScore {
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            precision: c.precision(),
            recall: c.recall(),
            f_beta: c.f_beta(beta),
        }
    }

    pub fn counts(&self) -> Counts {
        Counts {
            tp: self.tp,
            fp: self.fp,
            fn_: self.fn_,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
    pub beta: f64,
    pub per_type: Option<BTreeMap<String, TypeScore>>,
    pub per_sentence: Vec<SentenceCounts>,
}

impl ScoreReport {
    pub fn from_counts(c: Counts, beta: f64, per_sentence: Vec<SentenceCounts>) -> Self {
        ScoreReport {
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            precision: c.precision(),
            recall: c.recall(),
            f_beta: c.f_beta(beta),
            beta,
            per_type: None,
            per_sentence,
        }
    }

    pub fn counts(&self) -> Counts {
        Counts {
            tp: self.tp,
            fp: self.fp,
            fn_: self.fn_,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct M2Params {
    pub beta: f64,
    pub max_unchanged: usize,
}

impl Default for M2Params {
    fn default() -> Self {
        M2Params {
            beta: DEFAULT_BETA,
            max_unchanged: DEFAULT_MAX_UNCHANGED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArcKind {
    /// A single matched token.
    Unchanged,
    Edit(Edit),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeArc {
    pub from: usize,
    pub to: usize,
    pub kind: ArcKind,
}

/// Alignment states `(source offset, hypothesis offset)` lying on some
/// minimum-cost alignment, with arcs for every candidate edit.
///
/// Vertex indices are in topological order and every arc goes from a
/// lower index to a higher one.
#[derive(Debug, Clone)]
pub struct EditLattice {
    pub vertices: Vec<(usize, usize)>,
    pub arcs: Vec<LatticeArc>,
    /// `arcs[out_start[v]..out_start[v + 1]]` leave vertex `v`.
    out_start: Vec<usize>,
}

impl EditLattice {
    pub fn build(source: &[String], hypothesis: &[String], max_unchanged: usize) -> Self {
        let (n, m) = (source.len(), hypothesis.len());
        let w = m + 1;
        let at = |i: usize, j: usize| i * w + j;

        let mut fwd = vec![0u32; (n + 1) * w];
        for i in 0..=n {
            for j in 0..=m {
                fwd[at(i, j)] = match (i, j) {
                    (0, _) => j as u32,
                    (_, 0) => i as u32,
                    _ => {
                        let diag = u32::from(source[i - 1] != hypothesis[j - 1]);
                        (fwd[at(i - 1, j - 1)] + diag)
                            .min(fwd[at(i - 1, j)] + 1)
                            .min(fwd[at(i, j - 1)] + 1)
                    }
                };
            }
        }
        let mut bwd = vec![0u32; (n + 1) * w];
        for i in (0..=n).rev() {
            for j in (0..=m).rev() {
                bwd[at(i, j)] = match (i == n, j == m) {
                    (true, _) => (m - j) as u32,
                    (_, true) => (n - i) as u32,
                    _ => {
                        let diag = u32::from(source[i] != hypothesis[j]);
                        (bwd[at(i + 1, j + 1)] + diag)
                            .min(bwd[at(i + 1, j)] + 1)
                            .min(bwd[at(i, j + 1)] + 1)
                    }
                };
            }
        }
        let total = fwd[at(n, m)];

        let mut index = vec![usize::MAX; (n + 1) * w];
        let mut vertices = Vec::new();
        for i in 0..=n {
            for j in 0..=m {
                if fwd[at(i, j)] + bwd[at(i, j)] == total {
                    index[at(i, j)] = vertices.len();
                    vertices.push((i, j));
                }
            }
        }

        // Base arcs on optimal paths: (target vertex, is_match).
        let mut base: Vec<Vec<(usize, bool)>> = vec![Vec::new(); vertices.len()];
        for (v, &(i, j)) in vertices.iter().enumerate() {
            let here = fwd[at(i, j)];
            let mut push = |ti: usize, tj: usize, cost: u32, is_match: bool| {
                if here + cost + bwd[at(ti, tj)] == total {
                    base[v].push((index[at(ti, tj)], is_match));
                }
            };
            if i < n && j < m {
                let same = source[i] == hypothesis[j];
                push(i + 1, j + 1, u32::from(!same), same);
            }
            if i < n {
                push(i + 1, j, 1, false);
            }
            if j < m {
                push(i, j + 1, 1, false);
            }
        }

        let mut arcs = Vec::new();
        let mut out_start = Vec::with_capacity(vertices.len() + 1);
        for u in 0..vertices.len() {
            out_start.push(arcs.len());
            let (ui, uj) = vertices[u];
            for &(t, is_match) in &base[u] {
                if is_match {
                    arcs.push(LatticeArc {
                        from: u,
                        to: t,
                        kind: ArcKind::Unchanged,
                    });
                }
            }
            // Fewest matched tokens on any lattice path from u to each
            // reachable vertex. Vertex order is topological, so popping the
            // smallest pending index finalizes it.
            let mut pending: BTreeMap<usize, usize> = BTreeMap::new();
            pending.insert(u, 0);
            while let Some((v, matches)) = pending.pop_first() {
                let (vi, vj) = vertices[v];
                if v != u && fwd[at(vi, vj)] > fwd[at(ui, uj)] {
                    arcs.push(LatticeArc {
                        from: u,
                        to: v,
                        kind: ArcKind::Edit(Edit::unlabeled(ui, vi, hypothesis[uj..vj].to_vec())),
                    });
                }
                for &(t, is_match) in &base[v] {
                    let next = matches + usize::from(is_match);
                    if next > max_unchanged {
                        continue;
                    }
                    pending
                        .entry(t)
                        .and_modify(|c| *c = (*c).min(next))
                        .or_insert(next);
                }
            }
        }
        out_start.push(arcs.len());

        EditLattice {
            vertices,
            arcs,
            out_start,
        }
    }

    pub fn outgoing(&self, v: usize) -> &[LatticeArc] {
        &self.arcs[self.out_start[v]..self.out_start[v + 1]]
    }

    /// Picks the edit path that matches the most `gold` edits, then has the
    /// fewest edits, then the fewest tokens inside edits (so unchanged words
    /// are only absorbed when that buys a match). Two insertions at the same source position never
    /// follow each other on a chosen path.
    pub fn best_path(&self, gold: &[Edit]) -> Vec<Edit> {
        let gold_keys: HashMap<(usize, usize, &[String]), ()> = gold
            .iter()
            .map(|g| ((g.start, g.end, g.replacement.as_slice()), ()))
            .collect();
        let is_gold = |e: &Edit| gold_keys.contains_key(&(e.start, e.end, e.replacement.as_slice()));

        #[derive(Clone, Copy)]
        struct State {
            tp: usize,
            edits: usize,
            width: usize,
            back: Option<(usize, usize)>, // (arc index, previous state slot)
        }
        impl State {
            fn key(&self) -> (usize, Reverse<usize>, Reverse<usize>) {
                (self.tp, Reverse(self.edits), Reverse(self.width))
            }
        }
        let better = |a: &State, b: &Option<State>| match b {
            None => true,
            Some(b) => a.key() > b.key(),
        };

        // Slot 0: reached by anything else; slot 1: reached by an insertion edit.
        let mut best: Vec<[Option<State>; 2]> = vec![[None, None]; self.vertices.len()];
        if self.vertices.is_empty() {
            return Vec::new();
        }
        best[0][0] = Some(State {
            tp: 0,
            edits: 0,
            width: 0,
            back: None,
        });
        for v in 0..self.vertices.len() {
            for slot in 0..2 {
                let Some(state) = best[v][slot] else { continue };
                for (k, arc) in self.outgoing(v).iter().enumerate() {
                    let arc_idx = self.out_start[v] + k;
                    let (next, next_slot) = match &arc.kind {
                        ArcKind::Unchanged => (
                            State {
                                tp: state.tp,
                                edits: state.edits,
                                width: state.width,
                                back: Some((arc_idx, slot)),
                            },
                            0,
                        ),
                        ArcKind::Edit(e) => {
                            if e.is_insertion() && slot == 1 {
                                continue;
                            }
                            (
                                State {
                                    tp: state.tp + usize::from(is_gold(e)),
                                    edits: state.edits + 1,
                                    width: state.width + (e.end - e.start) + e.replacement.len(),
                                    back: Some((arc_idx, slot)),
                                },
                                usize::from(e.is_insertion()),
                            )
                        }
                    };
                    if better(&next, &best[arc.to][next_slot]) {
                        best[arc.to][next_slot] = Some(next);
                    }
                }
            }
        }

        let last = self.vertices.len() - 1;
        let key = |s: &Option<State>| s.map(|s| s.key());
        let mut slot = usize::from(key(&best[last][1]) > key(&best[last][0]));

        let mut path = Vec::new();
        let mut v = last;
        while let Some((arc_idx, prev_slot)) = best[v][slot].and_then(|s| s.back) {
            let arc = &self.arcs[arc_idx];
            if let ArcKind::Edit(e) = &arc.kind {
                path.push(e.clone());
            }
            v = arc.from;
            slot = prev_slot;
        }
        path.reverse();
        path
    }
}

/// The hypothesis edits chosen against one annotator, and which of them
/// (and of the gold edits) matched.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceMatch {
    pub annotator_id: u32,
    pub proposed: Vec<Edit>,
    pub proposed_correct: Vec<bool>,
    pub gold: Vec<Edit>,
    pub gold_matched: Vec<bool>,
}

impl SentenceMatch {
    pub fn counts(&self) -> Counts {
        let tp = self.proposed_correct.iter().filter(|&&c| c).count();
        Counts {
            tp,
            fp: self.proposed.len() - tp,
            fn_: self.gold.len() - tp,
        }
    }
}

pub fn match_sentence(
    source: &TokenSequence,
    hypothesis: &TokenSequence,
    gold: &GoldAnnotation,
    max_unchanged: usize,
) -> Result<SentenceMatch> {
    gold.validate(source.len())?;
    let gold_edits: Vec<Edit> = gold.edits().cloned().collect();
    let proposed = EditLattice::build(source, hypothesis, max_unchanged).best_path(&gold_edits);
    let proposed_correct: Vec<bool> = proposed
        .iter()
        .map(|p| gold_edits.iter().any(|g| g.same_correction(p)))
        .collect();
    let gold_matched = gold_edits
        .iter()
        .map(|g| proposed.iter().any(|p| p.same_correction(g)))
        .collect();
    Ok(SentenceMatch {
        annotator_id: gold.annotator_id,
        proposed,
        proposed_correct,
        gold: gold_edits,
        gold_matched,
    })
}

pub fn score_sentence(
    source: &TokenSequence,
    hypothesis: &TokenSequence,
    gold: &GoldAnnotation,
    max_unchanged: usize,
) -> Result<SentenceCounts> {
    let c = match_sentence(source, hypothesis, gold, max_unchanged)?.counts();
    Ok(SentenceCounts {
        tp: c.tp,
        fp: c.fp,
        fn_: c.fn_,
        chosen_annotator: gold.annotator_id,
    })
}

/// Scores a hypothesis file against an M² document.
pub fn score_corpus(
    doc: &M2Document,
    hypotheses: &[TokenSequence],
    params: &M2Params,
) -> Result<ScoreReport> {
    score_corpus_matches(doc, hypotheses, params).map(|(report, _)| report)
}

/// Like [`score_corpus`], also returning the match chosen for each sentence.
pub fn score_corpus_matches(
    doc: &M2Document,
    hypotheses: &[TokenSequence],
    params: &M2Params,
) -> Result<(ScoreReport, Vec<SentenceMatch>)> {
    if doc.len() != hypotheses.len() {
        return Err(Error::validation(format!(
            "{} gold entries but {} hypotheses",
            doc.len(),
            hypotheses.len()
        )));
    }
    let mut total = Counts::default();
    let mut per_sentence = Vec::with_capacity(doc.len());
    let mut chosen = Vec::with_capacity(doc.len());
    for (k, (entry, hyp)) in doc.entries.iter().zip(hypotheses).enumerate() {
        let mut best: Option<(f64, Counts, SentenceMatch)> = None;
        for ann in &entry.annotations {
            let m = match_sentence(&entry.source, hyp, ann, params.max_unchanged)?;
            let c = m.counts();
            let f = (total + c).f_beta(params.beta);
            let wins = match &best {
                None => true,
                Some((bf, bc, _)) => prefer(f, c, *bf, *bc),
            };
            if wins {
                best = Some((f, c, m));
            }
        }
        let Some((_, c, m)) = best else {
            return Err(Error::validation(format!("entry {k} has no annotations")));
        };
        total += c;
        per_sentence.push(SentenceCounts {
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            chosen_annotator: m.annotator_id,
        });
        chosen.push(m);
    }
    Ok((ScoreReport::from_counts(total, params.beta, per_sentence), chosen))
}

/// Annotator preference: higher running F, then more true positives, then
/// fewer false positives, then fewer false negatives. Earlier annotators
/// win full ties.
fn prefer(f: f64, c: Counts, best_f: f64, best: Counts) -> bool {
    if f != best_f {
        return f > best_f;
    }
    (std::cmp::Reverse(c.tp), c.fp, c.fn_) < (std::cmp::Reverse(best.tp), best.fp, best.fn_)
}
