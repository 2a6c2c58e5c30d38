//! Run reports and multi-run aggregation.
//!
//! A scoring run is saved as a [`RunReport`] (JSON). Several runs of the
//! same experiment with different seeds are reduced to a [`RunSummary`]
//! holding the mean and sample standard deviation of each metric.
//!
//! Metrics are averaged independently, so the mean F is in general not the
//! F of the mean precision and recall. [`pooled_counts`] is the alternative
//! that sums the raw counts first.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::m2_scorer::{Counts, ScoreReport, TypeScore};

pub const METRIC_M2: &str = "m2";
pub const METRIC_GLEU: &str = "gleu";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_id: String,
    pub metric: String,
    pub beta: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    /// The F score for M² runs, the GLEU score for GLEU runs.
    pub f_beta: f64,
    #[serde(default)]
    pub per_type: BTreeMap<String, TypeScore>,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

impl RunReport {
    pub fn from_m2(run_id: &str, report: &ScoreReport, params: BTreeMap<String, String>) -> Self {
        RunReport {
            run_id: run_id.to_owned(),
            metric: METRIC_M2.to_owned(),
            beta: report.beta,
            tp: report.tp,
            fp: report.fp,
            fn_: report.fn_,
            precision: report.precision,
            recall: report.recall,
            f_beta: report.f_beta,
            per_type: report.per_type.clone().unwrap_or_default(),
            params,
        }
    }

    /// GLEU has no edit counts; they are left at zero and the score goes
    /// in `f_beta`.
    pub fn from_gleu(run_id: &str, score: f64, params: BTreeMap<String, String>) -> Self {
        RunReport {
            run_id: run_id.to_owned(),
            metric: METRIC_GLEU.to_owned(),
            beta: 0.0,
            tp: 0,
            fp: 0,
            fn_: 0,
            precision: 0.0,
            recall: 0.0,
            f_beta: score,
            per_type: BTreeMap::new(),
            params,
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::validation(format!("{}: invalid run report: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run reports always serialize")
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn counts(&self) -> Counts {
        Counts {
            tp: self.tp,
            fp: self.fp,
            fn_: self.fn_,
        }
    }
}

/// Name of the F column for a given beta, e.g. `F0.5`.
pub fn f_name(beta: f64) -> String {
    format!("F{beta}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeSummary {
    /// Number of runs that reported this type.
    pub runs: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub run_id: String,
    /// Metric name (`P`, `R`, `F0.5`, `GLEU`) to a fraction in [0, 1].
    pub metrics: BTreeMap<String, f64>,
    /// Sample standard deviation per metric; zero for a single run.
    pub deviations: BTreeMap<String, f64>,
    pub per_type: Option<BTreeMap<String, TypeSummary>>,
    pub runs: usize,
}

impl RunSummary {
    pub fn from_report(r: &RunReport) -> Self {
        let metrics: BTreeMap<String, f64> = if r.metric == METRIC_GLEU {
            [("GLEU".to_owned(), r.f_beta)].into()
        } else {
            [
                ("P".to_owned(), r.precision),
                ("R".to_owned(), r.recall),
                (f_name(r.beta), r.f_beta),
            ]
            .into()
        };
        let per_type = (!r.per_type.is_empty()).then(|| {
            r.per_type
                .iter()
                .map(|(k, t)| {
                    let s = TypeSummary {
                        runs: 1,
                        precision: t.precision,
                        recall: t.recall,
                        f_beta: t.f_beta,
                    };
                    (k.clone(), s)
                })
                .collect()
        });
        RunSummary {
            run_id: r.run_id.clone(),
            deviations: metrics.keys().map(|k| (k.clone(), 0.0)).collect(),
            metrics,
            per_type,
            runs: 1,
        }
    }

    /// Metric names in display order: P, R, F scores, then the rest.
    pub fn metric_names(&self) -> Vec<&str> {
        let rank = |k: &str| match k {
            "P" => 0,
            "R" => 1,
            _ if k.starts_with('F') => 2,
            _ => 3,
        };
        let mut names: Vec<&str> = self.metrics.keys().map(String::as_str).collect();
        names.sort_by_key(|k| (rank(k), *k));
        names
    }
}

/// Order-independent mean and sample standard deviation.
fn mean_and_sd(values: &mut [f64]) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn aggregate_runs(runs: &[RunSummary]) -> Result<RunSummary> {
    let first = runs
        .first()
        .ok_or_else(|| Error::validation("no runs to aggregate"))?;
    let keys: BTreeSet<&String> = first.metrics.keys().collect();
    for r in &runs[1..] {
        let other: BTreeSet<&String> = r.metrics.keys().collect();
        if other != keys {
            return Err(Error::validation(format!(
                "run {} has metrics {:?} but run {} has {:?}",
                r.run_id, other, first.run_id, keys
            )));
        }
    }

    let mut metrics = BTreeMap::new();
    let mut deviations = BTreeMap::new();
    for k in keys {
        let mut values: Vec<f64> = runs.iter().map(|r| r.metrics[k]).collect();
        let (mean, sd) = mean_and_sd(&mut values);
        metrics.insert(k.clone(), mean);
        deviations.insert(k.clone(), sd);
    }

    let mut by_type: BTreeMap<&str, Vec<&TypeSummary>> = BTreeMap::new();
    for r in runs {
        for (k, t) in r.per_type.iter().flatten() {
            by_type.entry(k).or_default().push(t);
        }
    }
    let per_type = (!by_type.is_empty()).then(|| {
        by_type
            .into_iter()
            .map(|(k, ts)| {
                let avg = |f: fn(&TypeSummary) -> f64| {
                    let mut v: Vec<f64> = ts.iter().map(|t| f(t)).collect();
                    mean_and_sd(&mut v).0
                };
                let s = TypeSummary {
                    runs: ts.iter().map(|t| t.runs).sum(),
                    precision: avg(|t| t.precision),
                    recall: avg(|t| t.recall),
                    f_beta: avg(|t| t.f_beta),
                };
                (k.to_owned(), s)
            })
            .collect()
    });

    Ok(RunSummary {
        run_id: "mean".to_owned(),
        metrics,
        deviations,
        per_type,
        runs: runs.iter().map(|r| r.runs).sum(),
    })
}

/// Sums the counts of M² runs and recomputes P, R and F from the totals.
pub fn pooled_counts(runs: &[RunReport]) -> Result<RunSummary> {
    let first = runs
        .first()
        .ok_or_else(|| Error::validation("no runs to aggregate"))?;
    if let Some(r) = runs.iter().find(|r| r.metric != METRIC_M2 || r.beta != first.beta) {
        return Err(Error::validation(format!(
            "run {} cannot be pooled with run {}: pooling needs M² runs with one beta",
            r.run_id, first.run_id
        )));
    }
    let mut total = Counts::default();
    let mut per_type: BTreeMap<String, (usize, Counts)> = BTreeMap::new();
    for r in runs {
        total += r.counts();
        for (k, t) in &r.per_type {
            let e = per_type.entry(k.clone()).or_default();
            e.0 += 1;
            e.1 += t.counts();
        }
    }
    let mut pooled = RunReport::from_m2(
        "pooled",
        &ScoreReport::from_counts(total, first.beta, Vec::new()),
        BTreeMap::new(),
    );
    pooled.per_type = per_type
        .iter()
        .map(|(k, (_, c))| (k.clone(), TypeScore::from_counts(*c, first.beta)))
        .collect();
    let mut summary = RunSummary::from_report(&pooled);
    if let Some(pt) = summary.per_type.as_mut() {
        for (k, s) in pt.iter_mut() {
            s.runs = per_type[k].0;
        }
    }
    summary.runs = runs.len();
    // Pooling yields a single point estimate.
    summary.deviations.clear();
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableStyle {
    #[default]
    Plain,
    Markdown,
}

/// Renders one row per run plus, if given, a summary row with deviations.
/// Values are percentages.
pub fn render_runs(
    runs: &[RunSummary],
    summary: Option<&RunSummary>,
    style: TableStyle,
    decimals: usize,
) -> String {
    let Some(template) = summary.or(runs.first()) else {
        return String::new();
    };
    let names = template.metric_names();
    let pct = |v: f64| format!("{:.decimals$}", v * 100.0);

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["Run".to_owned()];
    header.extend(names.iter().map(|n| n.to_string()));
    rows.push(header);
    for r in runs {
        let mut row = vec![r.run_id.clone()];
        row.extend(names.iter().map(|n| r.metrics.get(*n).map_or("-".into(), |&v| pct(v))));
        rows.push(row);
    }
    if let Some(s) = summary {
        let mut row = vec![format!("{} (n={})", s.run_id, s.runs)];
        row.extend(names.iter().map(|n| match s.deviations.get(*n) {
            Some(&sd) => format!("{} ± {}", pct(s.metrics[*n]), pct(sd)),
            None => pct(s.metrics[*n]),
        }));
        rows.push(row);
    }

    let cols = rows[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let pad = |s: &str, w: usize, left: bool| {
        let fill = " ".repeat(w - s.chars().count());
        if left { format!("{s}{fill}") } else { format!("{fill}{s}") }
    };

    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| pad(s, widths[c], c == 0))
            .collect();
        match style {
            TableStyle::Plain => {
                let _ = writeln!(out, "{}", cells.join("  "));
            }
            TableStyle::Markdown => {
                let _ = writeln!(out, "| {} |", cells.join(" | "));
                if i == 0 {
                    let rule: Vec<String> = widths
                        .iter()
                        .enumerate()
                        .map(|(c, &w)| {
                            if c == 0 { "-".repeat(w) } else { format!("{}:", "-".repeat(w - 1)) }
                        })
                        .collect();
                    let _ = writeln!(out, "| {} |", rule.join(" | "));
                }
            }
        }
    }
    out
}
