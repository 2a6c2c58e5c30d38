//! The `gec-lab` command line.
//!
//! Exit codes: 0 on success, 1 when inputs fail validation (or cannot be
//! read), 2 on usage errors, including a randomized subcommand run without
//! `--seed`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::alignment::extract_edits;
use crate::baselines::{identity_correct, SpellCorrector};
use crate::corpus_io::{
    emit_m2, filter_unchanged, read_parallel, read_sentences, write_sentences, GoldAnnotation,
    LanguageRegistry, M2Document, M2Entry, TagPosition, TokenSequence,
};
use crate::error::Error;
use crate::error_types::{classify_edit, render_type_table, score_by_type, TypeLexicons};
use crate::gleu::{gleu_corpus, GleuParams, DEFAULT_ITERATIONS, DEFAULT_N_MAX};
use crate::lexicon::Vocabulary;
use crate::m2_scorer::{score_corpus, M2Params, DEFAULT_BETA, DEFAULT_MAX_UNCHANGED};
use crate::noising::{bart_denoise, noise_corpus, stream_rng, DenoiseConfig, NoiseConfig};
use crate::report::{aggregate_runs, f_name, pooled_counts, render_runs, RunReport, RunSummary, TableStyle};
use crate::subword::{bpe_apply, bpe_learn, bpe_restore, count_words, BpeModel, DEFAULT_MARKER};

#[derive(Debug, Parser)]
#[command(name = "gec-lab", version, about = "Grammatical error correction experiment toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalOptions,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOptions {
    /// Seed for randomized subcommands (required by noise, denoise and
    /// multi-reference gleu).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress diagnostics on standard error.
    #[arg(long, short, global = true)]
    quiet: bool,
    /// Write a JSON run report (scoring subcommands only).
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score hypotheses against an M² gold file.
    M2 {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BETA)]
        beta: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_UNCHANGED)]
        max_unchanged: usize,
        /// Identifier stored in the JSON report (defaults to the hypothesis file name).
        #[arg(long)]
        run_id: Option<String>,
    },
    /// Corpus GLEU against one or more reference files.
    Gleu {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref", required = true)]
        refs: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_N_MAX)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
        iter: usize,
        #[arg(long)]
        run_id: Option<String>,
    },
    /// Per-error-type M² scores.
    ErrantLite {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Directory with determiners.txt, prepositions.txt and vocab.txt.
        #[arg(long)]
        lexicons: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BETA)]
        beta: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_UNCHANGED)]
        max_unchanged: usize,
        /// Show only the N most frequent types.
        #[arg(long)]
        top: Option<usize>,
        /// Leave a type out of the table (repeatable).
        #[arg(long)]
        exclude: Vec<String>,
        #[arg(long, default_value_t = 1)]
        decimals: usize,
        #[arg(long)]
        run_id: Option<String>,
    },
    /// Write the edits between two parallel files as M².
    Extract {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        hyp: PathBuf,
        /// Label edits with errant-lite types using this lexicon directory.
        #[arg(long)]
        lexicons: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Inject synthetic errors into a clean corpus.
    Noise {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_src: PathBuf,
        #[arg(long)]
        out_tgt: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Build span-masked denoising pairs. Documents are separated by blank lines.
    Denoise {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_src: PathBuf,
        #[arg(long)]
        out_tgt: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        mask_ratio: f64,
        #[arg(long, default_value_t = 3.0)]
        lambda: f64,
        #[arg(long)]
        shuffle: bool,
        #[arg(long, default_value = "<mask>")]
        mask_token: String,
    },
    /// Learn BPE merges from a tokenized corpus.
    BpeLearn {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        merges: usize,
        #[arg(long)]
        model: PathBuf,
    },
    /// Segment a corpus with a BPE model.
    BpeApply {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value = DEFAULT_MARKER)]
        marker: String,
    },
    /// Join BPE pieces back into words.
    BpeRestore {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value = DEFAULT_MARKER)]
        marker: String,
    },
    /// Run a baseline corrector.
    Correct {
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        max_distance: usize,
    },
    /// Drop unchanged pairs from a parallel corpus and optionally add language tags.
    Filter {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long)]
        out_src: PathBuf,
        #[arg(long)]
        out_tgt: PathBuf,
        /// Keep unchanged pairs.
        #[arg(long)]
        keep_unchanged: bool,
        /// Language code to tag with, e.g. de_DE.
        #[arg(long)]
        lang: Option<String>,
        #[arg(long, value_enum, default_value_t = Side::Target)]
        tag_side: Side,
        #[arg(long, value_enum, default_value_t = Position::Final)]
        tag_position: Position,
    },
    /// Average several JSON run reports.
    Report {
        #[arg(long, required = true, num_args = 1..)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        markdown: bool,
        /// Sum counts across runs instead of averaging scores.
        #[arg(long)]
        pooled: bool,
        #[arg(long, default_value_t = 2)]
        decimals: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Identity,
    Spell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Side {
    Source,
    Target,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Position {
    Initial,
    Final,
}

enum Failure {
    Usage(String),
    Invalid(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(Error::Io(e))
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            2
        }
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

struct Ctx {
    seed: Option<u64>,
    quiet: bool,
    json: Option<PathBuf>,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn require_seed(&self, what: &str) -> CliResult<u64> {
        self.seed
            .ok_or_else(|| Failure::Usage(format!("{what} is randomized and needs an explicit --seed")))
    }

    fn no_json(&self, cmd: &str) -> CliResult {
        match self.json {
            Some(_) => Err(Failure::Usage(format!("--json is only available on scoring subcommands, not {cmd}"))),
            None => Ok(()),
        }
    }

    fn write_report(&self, report: &RunReport) -> CliResult {
        if let Some(path) = &self.json {
            report.write(path)?;
            self.note(format!("wrote {}", path.display()));
        }
        Ok(())
    }
}

fn run_id(explicit: Option<String>, hyp: &Path) -> String {
    explicit.unwrap_or_else(|| {
        hyp.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".to_owned())
    })
}

fn params<const N: usize>(items: [(&str, String); N]) -> BTreeMap<String, String> {
    items.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn run(cli: Cli) -> CliResult {
    let ctx = Ctx {
        seed: cli.global.seed,
        quiet: cli.global.quiet,
        json: cli.global.json,
    };
    match cli.command {
        Command::M2 {
            hyp,
            gold,
            beta,
            max_unchanged,
            run_id: id,
        } => {
            let doc = M2Document::read(&gold)?;
            let hyps = read_sentences(&hyp)?;
            let report = score_corpus(&doc, &hyps, &M2Params { beta, max_unchanged })?;
            println!("{:<6} {:<6} {}", "P", "R", f_name(beta));
            println!(
                "{:<6.2} {:<6.2} {:.2}",
                report.precision * 100.0,
                report.recall * 100.0,
                report.f_beta * 100.0
            );
            ctx.note(format!("tp={} fp={} fn={}", report.tp, report.fp, report.fn_));
            let p = params([
                ("hyp", hyp.display().to_string()),
                ("gold", gold.display().to_string()),
                ("max_unchanged", max_unchanged.to_string()),
            ]);
            ctx.write_report(&RunReport::from_m2(&run_id(id, &hyp), &report, p))
        }

        Command::Gleu {
            src,
            hyp,
            refs,
            n,
            iter,
            run_id: id,
        } => {
            let seed = if refs.len() > 1 {
                ctx.require_seed("gleu with several references")?
            } else {
                ctx.seed.unwrap_or(0)
            };
            let sources = read_sentences(&src)?;
            let hyps = read_sentences(&hyp)?;
            let mut references: Vec<Vec<TokenSequence>> = vec![Vec::with_capacity(refs.len()); sources.len()];
            for path in &refs {
                let r = read_sentences(path)?;
                if r.len() != sources.len() {
                    return Err(Error::Validation(format!(
                        "{} has {} lines but the source has {}",
                        path.display(),
                        r.len(),
                        sources.len()
                    ))
                    .into());
                }
                for (slot, s) in references.iter_mut().zip(r) {
                    slot.push(s);
                }
            }
            let gp = GleuParams {
                n_max: n,
                iterations: iter,
                seed,
            };
            let score = gleu_corpus(&sources, &hyps, &references, &gp)?;
            println!("{score:.4}");
            let p = params([
                ("src", src.display().to_string()),
                ("hyp", hyp.display().to_string()),
                ("refs", refs.len().to_string()),
                ("n", n.to_string()),
                ("iter", iter.to_string()),
                ("seed", seed.to_string()),
            ]);
            ctx.write_report(&RunReport::from_gleu(&run_id(id, &hyp), score, p))
        }

        Command::ErrantLite {
            hyp,
            gold,
            lexicons,
            beta,
            max_unchanged,
            top,
            exclude,
            decimals,
            run_id: id,
        } => {
            let lex = TypeLexicons::read_dir(&lexicons)?;
            let doc = M2Document::read(&gold)?;
            let hyps = read_sentences(&hyp)?;
            let report = score_by_type(&doc, &hyps, &lex, &M2Params { beta, max_unchanged })?;
            let exclude: Vec<&str> = exclude.iter().map(String::as_str).collect();
            let per_type = report.per_type.clone().unwrap_or_default();
            print!("{}", render_type_table(&per_type, beta, &exclude, top, decimals));
            let p = params([
                ("hyp", hyp.display().to_string()),
                ("gold", gold.display().to_string()),
                ("lexicons", lexicons.display().to_string()),
                ("max_unchanged", max_unchanged.to_string()),
            ]);
            ctx.write_report(&RunReport::from_m2(&run_id(id, &hyp), &report, p))
        }

        Command::Extract {
            src,
            hyp,
            lexicons,
            output,
        } => {
            ctx.no_json("extract")?;
            let lex = lexicons.map(TypeLexicons::read_dir).transpose()?;
            let mut doc = M2Document::default();
            for (s, h) in read_parallel(&src, &hyp)? {
                let mut edits = extract_edits(&s, &h);
                if let Some(lex) = &lex {
                    for e in &mut edits {
                        e.type_label = classify_edit(e, &s, lex).to_owned();
                    }
                }
                let ann = if edits.is_empty() {
                    GoldAnnotation::noop(0)
                } else {
                    GoldAnnotation::new(0, edits)
                };
                doc.entries.push(M2Entry {
                    source: s,
                    annotations: vec![ann],
                });
            }
            let text = emit_m2(&doc);
            match output {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }

        Command::Noise {
            input,
            out_src,
            out_tgt,
            config,
        } => {
            let seed = ctx.require_seed("noise")?;
            ctx.no_json("noise")?;
            let mut cfg = NoiseConfig::read(&config)?;
            cfg.seed = seed;
            let reader = BufReader::new(File::open(&input)?);
            let (mut ws, mut wt) = (create(&out_src)?, create(&out_tgt)?);
            let mut lines = 0usize;
            let mut changed = 0usize;
            for pair in noise_corpus(reader, &cfg)? {
                let (noised, original) = pair?;
                changed += usize::from(noised != original);
                writeln!(ws, "{noised}")?;
                writeln!(wt, "{original}")?;
                lines += 1;
            }
            ws.flush()?;
            wt.flush()?;
            ctx.note(format!("noised {lines} lines, {changed} changed"));
            Ok(())
        }

        Command::Denoise {
            input,
            out_src,
            out_tgt,
            mask_ratio,
            lambda,
            shuffle,
            mask_token,
        } => {
            let seed = ctx.require_seed("denoise")?;
            ctx.no_json("denoise")?;
            let cfg = DenoiseConfig {
                mask_ratio,
                span_lambda: lambda,
                shuffle_sentences: shuffle,
                mask_token,
                seed,
            };
            cfg.validate()?;
            let reader = BufReader::new(File::open(&input)?);
            let (mut ws, mut wt) = (create(&out_src)?, create(&out_tgt)?);
            let mut doc: Vec<TokenSequence> = Vec::new();
            let mut index = 0u64;
            let mut flush_doc = |doc: &mut Vec<TokenSequence>, ws: &mut BufWriter<File>, wt: &mut BufWriter<File>| -> CliResult {
                if doc.is_empty() {
                    return Ok(());
                }
                let mut rng = stream_rng(seed, index);
                let out = bart_denoise(doc, &cfg, &mut rng)?;
                writeln!(ws, "{}", out.source)?;
                writeln!(wt, "{}", out.target)?;
                index += 1;
                doc.clear();
                Ok(())
            };
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(|source| Error::IoAt { line: i + 1, source })?;
                if line.trim().is_empty() {
                    flush_doc(&mut doc, &mut ws, &mut wt)?;
                } else {
                    doc.push(TokenSequence::from_line(&line));
                }
            }
            flush_doc(&mut doc, &mut ws, &mut wt)?;
            ws.flush()?;
            wt.flush()?;
            Ok(())
        }

        Command::BpeLearn { input, merges, model } => {
            ctx.no_json("bpe-learn")?;
            let corpus = read_sentences(&input)?;
            let m = bpe_learn(&count_words(&corpus), merges);
            std::fs::write(&model, m.to_text())?;
            ctx.note(format!("learned {} merges", m.merges().len()));
            Ok(())
        }

        Command::BpeApply {
            model,
            input,
            output,
            marker,
        } => {
            ctx.no_json("bpe-apply")?;
            let m = BpeModel::read(&model, &marker)?;
            let corpus = read_sentences(&input)?;
            let out: Vec<TokenSequence> = corpus.iter().map(|s| bpe_apply(&m, s)).collect();
            write_sentences(&output, &out)?;
            Ok(())
        }

        Command::BpeRestore { input, output, marker } => {
            ctx.no_json("bpe-restore")?;
            let corpus = read_sentences(&input)?;
            let out = corpus
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    bpe_restore(s, &marker).map_err(|e| Error::Validation(format!("line {}: {e}", i + 1)))
                })
                .collect::<Result<Vec<_>, _>>()?;
            write_sentences(&output, &out)?;
            Ok(())
        }

        Command::Correct {
            method,
            input,
            output,
            vocab,
            max_distance,
        } => {
            ctx.no_json("correct")?;
            let corpus = read_sentences(&input)?;
            let out: Vec<TokenSequence> = match method {
                Method::Identity => corpus.iter().map(identity_correct).collect(),
                Method::Spell => {
                    let path = vocab.ok_or_else(|| Failure::Usage("--method spell needs --vocab".into()))?;
                    let vocabulary = Vocabulary::read(path)?;
                    let corrector = SpellCorrector::new(&vocabulary, max_distance)?;
                    corpus.iter().map(|s| corrector.correct(s)).collect()
                }
            };
            write_sentences(&output, &out)?;
            Ok(())
        }

        Command::Filter {
            src,
            tgt,
            out_src,
            out_tgt,
            keep_unchanged,
            lang,
            tag_side,
            tag_position,
        } => {
            ctx.no_json("filter")?;
            let pairs = read_parallel(&src, &tgt)?;
            let total = pairs.len();
            let mut pairs = if keep_unchanged { pairs } else { filter_unchanged(pairs) };
            if let Some(code) = lang {
                let registry = LanguageRegistry::default();
                let position = match tag_position {
                    Position::Initial => TagPosition::Initial,
                    Position::Final => TagPosition::Final,
                };
                for (s, t) in &mut pairs {
                    if tag_side != Side::Target {
                        *s = registry.tag(s, &code, position)?;
                    }
                    if tag_side != Side::Source {
                        *t = registry.tag(t, &code, position)?;
                    }
                }
            }
            write_sentences(&out_src, pairs.iter().map(|(s, _)| s))?;
            write_sentences(&out_tgt, pairs.iter().map(|(_, t)| t))?;
            ctx.note(format!("kept {} of {total} pairs", pairs.len()));
            Ok(())
        }

        Command::Report {
            runs,
            markdown,
            pooled,
            decimals,
        } => {
            ctx.no_json("report")?;
            let reports = runs.iter().map(RunReport::read).collect::<Result<Vec<_>, _>>()?;
            let summaries: Vec<RunSummary> = reports.iter().map(RunSummary::from_report).collect();
            let summary = if pooled {
                pooled_counts(&reports)?
            } else {
                aggregate_runs(&summaries)?
            };
            let style = if markdown { TableStyle::Markdown } else { TableStyle::Plain };
            print!("{}", render_runs(&summaries, Some(&summary), style, decimals));
            Ok(())
        }
    }
}
