//! `sumprobe`: corpus tools, scoring and diagnostics, training, and experiment runs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sumprobe_core::corpus::{
    domain_stats, label_corpus, load_corpus, read_extractions, save_corpus, shuffle_split,
    synthetic_corpus, Sentence, Split, SynthSpec, DEFAULT_MAX_SELECT,
};
use sumprobe_core::embeddings::ContextualStore;
use sumprobe_core::harness::{
    rebuild_report, run_diagnostics, run_experiment, train_model, ExperimentSpec,
};
use sumprobe_core::metrics::{positional_bias, rouge_scores, RougeOptions, RougeScore};
use sumprobe_core::training::{evaluate, Checkpoint};

/// Summaries in `score` files: one per line, sentences separated by this token.
const SENTENCE_SEP: &str = "<q>";

#[derive(Parser)]
#[command(name = "sumprobe", version, about = "Extractive summarization testbed")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Corpus statistics, oracle labelling, shuffling and synthetic data.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// ROUGE between line-aligned hypothesis and reference summaries.
    Score {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        stem: bool,
        /// Also write `metric<TAB>value` rows here.
        #[arg(long)]
        tsv: Option<PathBuf>,
    },
    /// ROUGE, repetition, positional bias and length profile of an extraction file.
    Diagnose {
        #[arg(long)]
        extractions: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long = "rep-n", value_delimiter = ',', default_value = "1,2,3")]
        rep_n: Vec<usize>,
        #[arg(long, default_value_t = 30)]
        buckets: usize,
        #[arg(long)]
        stem: bool,
        /// Directory for diagnostics.tsv and plot data; defaults to the extraction file's.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Contextual store inspection.
    #[command(subcommand)]
    Embed(EmbedCmd),
    /// Supervised training of the single model an experiment config describes.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Extract with a checkpoint and score the result.
    Evaluate {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        k: usize,
        /// Contextual store for the corpus (contextual-embedding models only).
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        stem: bool,
        /// Write extractions.jsonl and metrics files here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment grid; exits nonzero when any cell failed.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        resume: bool,
    },
    /// Reassemble report.txt / report.tsv from a run directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Args)]
struct InOut {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum CorpusCmd {
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 30)]
        buckets: usize,
    },
    /// Label every document with greedy oracle flags.
    Oracle {
        #[command(flatten)]
        io: InOut,
        #[arg(long, default_value_t = DEFAULT_MAX_SELECT)]
        max_select: usize,
    },
    /// Shuffle sentence order inside each document of one split.
    Shuffle {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "train")]
        split: String,
    },
    /// Write a seeded synthetic corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 64)]
        documents: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "synthetic")]
        domain: String,
        /// Salient sentences only among the first N.
        #[arg(long)]
        salient_window: Option<usize>,
    },
}

#[derive(Subcommand)]
enum EmbedCmd {
    Inspect {
        #[arg(long)]
        store: PathBuf,
    },
    /// Check the store covers a corpus token-for-token.
    Validate {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
    },
}

fn rouge_opts(stem: bool) -> RougeOptions {
    RougeOptions {
        stem,
        ..RougeOptions::default()
    }
}

fn read_summaries(path: &Path) -> Result<Vec<Vec<Sentence>>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(|line| {
            line.split(SENTENCE_SEP)
                .map(|s| {
                    s.split_whitespace()
                        .map(str::to_string)
                        .collect::<Sentence>()
                })
                .filter(|s| !s.is_empty())
                .collect()
        })
        .collect())
}

fn score_rows(score: &RougeScore) -> String {
    let mut out = String::new();
    for (name, prf) in [
        ("rouge1", score.rouge1),
        ("rouge2", score.rouge2),
        ("rougeL", score.rouge_l),
    ] {
        out.push_str(&format!("{name}.precision\t{}\n", prf.precision));
        out.push_str(&format!("{name}.recall\t{}\n", prf.recall));
        out.push_str(&format!("{name}.f1\t{}\n", prf.f1));
    }
    out
}

fn score_table(score: &RougeScore, pairs: usize) -> String {
    let mut out = format!("{:<8} {:>9} {:>9} {:>9}\n", "metric", "P", "R", "F1");
    for (name, prf) in [
        ("ROUGE-1", score.rouge1),
        ("ROUGE-2", score.rouge2),
        ("ROUGE-L", score.rouge_l),
    ] {
        out.push_str(&format!(
            "{name:<8} {:>9.4} {:>9.4} {:>9.4}\n",
            prf.precision * 100.0,
            prf.recall * 100.0,
            prf.f1 * 100.0
        ));
    }
    out.push_str(&format!("({pairs} summaries)\n"));
    out
}

fn corpus_cmd(cmd: CorpusCmd) -> Result<()> {
    match cmd {
        CorpusCmd::Stats { input, buckets } => {
            let corpus = load_corpus(&input, "")?;
            print!("{}", domain_stats(&corpus)?.to_table());
            if corpus.documents.iter().any(|d| d.oracle_labels.is_some()) {
                let pb = positional_bias(&corpus.documents, buckets)?;
                println!("pos_bias_nats_k{buckets}\t{:.6}", pb.entropy);
            }
        }
        CorpusCmd::Oracle { io, max_select } => {
            let mut corpus = load_corpus(&io.input, "")?;
            label_corpus(&mut corpus, max_select)?;
            save_corpus(&corpus, &io.out)?;
            eprintln!(
                "labelled {} documents -> {}",
                corpus.len(),
                io.out.display()
            );
        }
        CorpusCmd::Shuffle { io, seed, split } => {
            let split =
                Split::from_name(&split).with_context(|| format!("unknown split {split}"))?;
            let corpus = load_corpus(&io.input, "")?;
            save_corpus(&shuffle_split(&corpus, split, seed), &io.out)?;
        }
        CorpusCmd::Synth {
            out,
            documents,
            seed,
            domain,
            salient_window,
        } => {
            let spec = SynthSpec {
                documents,
                seed,
                salient_window,
                ..SynthSpec::default()
            };
            save_corpus(&synthetic_corpus(&domain, &spec), &out)?;
        }
    }
    Ok(())
}

fn embed_cmd(cmd: EmbedCmd) -> Result<()> {
    match cmd {
        EmbedCmd::Inspect { store } => {
            let s = ContextualStore::read(&store)?;
            println!("mode\t{:?}", s.mode);
            println!("dim\t{}", s.dim);
            println!("documents\t{}", s.len());
            println!("rows\t{}", s.total_rows());
        }
        EmbedCmd::Validate { store, corpus } => {
            let s = ContextualStore::read(&store)?;
            let c = load_corpus(&corpus, "")?;
            s.validate(&c)?;
            println!("ok: {} documents covered", c.len());
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Corpus(cmd) => corpus_cmd(cmd)?,
        Command::Embed(cmd) => embed_cmd(cmd)?,
        Command::Score {
            hyp,
            reference,
            stem,
            tsv,
        } => {
            let hyps = read_summaries(&hyp)?;
            let refs = read_summaries(&reference)?;
            if hyps.len() != refs.len() {
                bail!("{} hypotheses but {} references", hyps.len(), refs.len());
            }
            let opts = rouge_opts(stem);
            let scores: Vec<RougeScore> = hyps
                .iter()
                .zip(&refs)
                .map(|(h, r)| rouge_scores(h, r, &opts))
                .collect();
            let mean = RougeScore::mean(&scores);
            print!("{}", score_table(&mean, scores.len()));
            if let Some(p) = tsv {
                std::fs::write(&p, format!("metric\tvalue\n{}", score_rows(&mean)))
                    .with_context(|| format!("writing {}", p.display()))?;
            }
        }
        Command::Diagnose {
            extractions,
            corpus,
            rep_n,
            buckets,
            stem,
            out,
        } => {
            let ex = read_extractions(&extractions)?;
            let corpus = load_corpus(&corpus, "")?;
            let out = out.unwrap_or_else(|| {
                extractions
                    .parent()
                    .map(Path::to_path_buf)
                    .unwrap_or_default()
            });
            let report = run_diagnostics(&ex, &corpus, &rep_n, buckets, &rouge_opts(stem), &out)?;
            print!("{}", report.to_table());
        }
        Command::Train { config } => {
            let spec = ExperimentSpec::load(&config)?;
            let ckpt = train_model(&spec)?;
            println!("{}", ckpt.display());
        }
        Command::Evaluate {
            ckpt,
            corpus,
            k,
            store,
            stem,
            out,
        } => {
            let model = Checkpoint::load(&ckpt)?.to_model()?;
            let corpus = load_corpus(&corpus, "")?;
            let store = store.map(|p| ContextualStore::read(&p)).transpose()?;
            let eval = evaluate(&model, &corpus, k, store.as_ref(), &rouge_opts(stem))?;
            print!("{}", eval.diagnostics.to_table());
            if let Some(dir) = out {
                eval.write(&dir)?;
            }
        }
        Command::Run { config, resume } => {
            let spec = ExperimentSpec::load(&config)?;
            let summary = run_experiment(&spec, resume)?;
            print!("{}", summary.report.to_text());
            if summary.failures() > 0 {
                eprintln!(
                    "{} cell(s) failed; see {}",
                    summary.failures(),
                    summary.dir.join("report.txt").display()
                );
                return Ok(ExitCode::from(2));
            }
        }
        Command::Report { dir } => {
            let report = rebuild_report(&dir)?;
            print!("{}", report.to_text());
            if report.failures() > 0 {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
