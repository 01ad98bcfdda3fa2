use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use scenediff::change::CandidateScope;
use scenediff::config::{MotionEvalMode, MotionTermMode, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "scenediff",
    version,
    about = "Change detection against a view-sequence map"
)]
pub struct Cli {
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic world: map store, query store, tracks, boxes.
    Gen(GenArgs),
    /// Learn the word vocabulary from the map descriptors.
    LearnVocab(RunArgs),
    /// Learn motion words from the map tracks.
    LearnMotion(RunArgs),
    /// Build the inverted index over the map frames.
    Index(RunArgs),
    /// Retrieve the top-R map frames for each query.
    Localize(LocalizeArgs),
    /// Score every query feature for change.
    Detect(RunArgs),
    /// Rank changed features against ground-truth boxes.
    Evaluate(EvaluateArgs),
    /// Rank versus localization error per query.
    PlotData(PlotArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// World TOML; defaults apply to missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the world seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct LocalizeArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Vocabulary file; defaults to `<models>/vocab.vvf`.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// changes.csv; defaults to `<output>/changes.csv`.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub gt: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub gt: PathBuf,
    /// localization.csv; defaults to `<output>/localization.csv`.
    #[arg(long)]
    pub localization: Option<PathBuf>,
}

/// Run-configuration file plus one flag per key. Flags win over the file.
#[derive(Debug, Args, Default)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Query store directory or a single frame file.
    #[arg(long, alias = "query")]
    pub queries: Option<PathBuf>,
    #[arg(long)]
    pub tracks: Option<PathBuf>,
    #[arg(long)]
    pub models: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,

    #[arg(short = 'R', long = "r")]
    pub r: Option<usize>,
    #[arg(short = 'K', long = "k")]
    pub k: Option<usize>,
    #[arg(long = "tm", alias = "Tm")]
    pub tm: Option<f64>,
    /// Degrees.
    #[arg(long = "tc", alias = "Tc")]
    pub tc: Option<f64>,
    #[arg(short = 'B', long = "b")]
    pub b: Option<usize>,
    #[arg(long, alias = "word_count")]
    pub word_count: Option<usize>,
    #[arg(long)]
    pub stride: Option<u32>,
    #[arg(long, alias = "unit_length")]
    pub unit_length: Option<f64>,
    #[arg(long, short = 'L')]
    pub window: Option<usize>,
    #[arg(long)]
    pub exclusion: Option<u64>,

    #[arg(long, alias = "vocab_seed")]
    pub vocab_seed: Option<u64>,
    #[arg(long, alias = "projection_seed")]
    pub projection_seed: Option<u64>,
    #[arg(long, alias = "motion_seed")]
    pub motion_seed: Option<u64>,

    #[arg(long, alias = "vocab_sample")]
    pub vocab_sample: Option<usize>,
    #[arg(long, alias = "kmeans_iterations")]
    pub kmeans_iterations: Option<usize>,
    #[arg(long, alias = "motion_sample_size")]
    pub motion_sample_size: Option<usize>,
    #[arg(long, alias = "motion_iterations")]
    pub motion_iterations: Option<usize>,
    #[arg(long, alias = "motion_words")]
    pub motion_words: Option<usize>,

    #[arg(long, num_args = 0..=1, default_missing_value = "true", conflicts_with = "no_motion")]
    pub motion: Option<bool>,
    #[arg(long)]
    pub no_motion: bool,
    #[arg(long, alias = "keyframes_only", num_args = 0..=1, default_missing_value = "true")]
    pub keyframes_only: Option<bool>,
    #[arg(long, alias = "motion_term", value_parser = parse_term)]
    pub motion_term: Option<MotionTermMode>,
    #[arg(long, alias = "motion_eval", value_parser = parse_eval)]
    pub motion_eval: Option<MotionEvalMode>,
    #[arg(long)]
    pub scorer: Option<String>,
    #[arg(long)]
    pub localizer: Option<String>,
    #[arg(long)]
    pub scope: Option<CandidateScope>,
}

fn parse_term(s: &str) -> Result<MotionTermMode, String> {
    match s {
        "literal" => Ok(MotionTermMode::Literal),
        "separate" => Ok(MotionTermMode::Separate),
        _ => Err(format!("expected literal or separate, got {s}")),
    }
}

fn parse_eval(s: &str) -> Result<MotionEvalMode, String> {
    match s {
        "per-candidate" => Ok(MotionEvalMode::PerCandidate),
        "nearest-only" => Ok(MotionEvalMode::NearestOnly),
        _ => Err(format!("expected per-candidate or nearest-only, got {s}")),
    }
}

impl RunArgs {
    /// Applies the flags on top of `cfg`.
    pub fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    cfg.$field = v.clone();
                }
            )*};
        }
        macro_rules! set_some {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    cfg.$field = Some(v.clone());
                }
            )*};
        }
        set_some!(map, queries, tracks, models, output, vocab_sample, scorer);
        set!(
            r,
            k,
            tm,
            tc,
            b,
            word_count,
            stride,
            unit_length,
            window,
            exclusion,
            vocab_seed,
            projection_seed,
            motion_seed,
            kmeans_iterations,
            motion_sample_size,
            motion_iterations,
            motion_words,
            motion,
            keyframes_only,
            motion_term,
            motion_eval,
            localizer,
            scope
        );
        if self.no_motion {
            cfg.motion = false;
            cfg.scorer = None;
        }
    }
}
