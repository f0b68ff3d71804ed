use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ulma", version, about = "Bioacoustic decomposition, unit discovery and toy encoder training")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ism/Fil/Harf decomposition, reactions and ULM scores per clip, plus height-reaction correlation.
    Analyze(AnalyzeArgs),
    /// 39-dimensional MFCC features for every clip.
    Features(CorpusArgs),
    /// Stage-1 k-means codebook over the extracted MFCC frames.
    Cluster(ClusterArgs),
    /// Masked unit prediction on the corpus.
    Pretrain(PretrainArgs),
    /// Stage-2 codebook over hidden states of a pretrained encoder.
    RefitUnits(RefitArgs),
    /// Train a classification head on manifest labels.
    FinetuneClassify(FinetuneArgs),
    /// Train a multi-label detection head on manifest event tags.
    FinetuneDetect(FinetuneArgs),
    /// Train a scalar reward head from manifest preference pairs.
    RewardTrain(RewardArgs),
    /// Parabolic harf curve between two anchors for a target length.
    SynthHarf(HarfArgs),
    /// Hidden-state vectors of every frame.
    ExportEmbeddings(ExportArgs),
    /// Envelope and harf plots per clip.
    Plot(PlotArgs),
    /// Write a synthetic WAV corpus and its manifest.
    SynthCorpus(SynthArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Working directory for artifacts.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Height ratio at or above which a reaction counts as strong engagement.
    #[arg(long, default_value_t = 0.6)]
    pub hi: f64,
    /// Height ratio below which a reaction counts as low interest.
    #[arg(long, default_value_t = 0.2)]
    pub lo: f64,
    /// Also write SVG plots.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub k: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub seed: u64,
    /// Passes over the corpus.
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.02)]
    pub step_size: f64,
    /// Codebook providing target units [default: OUT/codebook.json].
    #[arg(long)]
    pub codebook: Option<PathBuf>,
    /// Continue from this checkpoint instead of a fresh model.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Hidden layer for stage-2 targets [default: middle layer].
    #[arg(long)]
    pub layer: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RefitArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value_t = 16)]
    pub k: usize,
    #[arg(long)]
    pub seed: u64,
    /// [default: middle layer]
    #[arg(long)]
    pub layer: Option<usize>,
    /// [default: OUT/checkpoint.json]
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FinetuneArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    pub step_size: f64,
    /// [default: OUT/checkpoint.json]
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RewardArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    pub step_size: f64,
    /// [default: OUT/checkpoint.json, or a fresh encoder seeded with --seed if absent]
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Also update the transformer blocks.
    #[arg(long)]
    pub train_encoder: bool,
}

#[derive(Debug, Args)]
pub struct HarfArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub t1: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub h1: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub t2: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub h2: f64,
    /// Target arc length; defaults to 1.1 × chord.
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long, default_value_t = 101)]
    pub samples: usize,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// [default: last layer]
    #[arg(long)]
    pub layer: Option<usize>,
    /// [default: OUT/checkpoint.json]
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorpusKind {
    /// Two steady-tone classes, labelled.
    Tones,
    /// Two-burst clips with context labels.
    Bursts,
    /// Sticky Markov sequences over four tone units.
    Markov,
    /// Three event types in disjoint slots, tagged.
    Events,
    /// Loudness-preference pairs.
    Preference,
    /// Noise only.
    Noise,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub kind: CorpusKind,
    #[arg(long)]
    pub seed: u64,
    /// Clips (or pairs, or clips per class) to generate.
    #[arg(long, default_value_t = 12)]
    pub n: usize,
    #[arg(long, default_value_t = 8000)]
    pub rate: u32,
}
