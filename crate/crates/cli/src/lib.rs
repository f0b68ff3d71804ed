//! `ulma` command-line front end: manifests, artifacts and pipeline commands.

pub mod analyze;
pub mod args;
pub mod artifacts;
pub mod corpus;
pub mod error;
pub mod heads;
pub mod manifest;
pub mod pipeline;
pub mod svg;
pub mod synth;

pub use args::{Cli, Command};
pub use error::CliError;

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Analyze(a) => analyze::analyze(a),
        Command::Features(a) => pipeline::features(a),
        Command::Cluster(a) => pipeline::cluster(a),
        Command::Pretrain(a) => pipeline::pretrain(a),
        Command::RefitUnits(a) => pipeline::refit_units(a),
        Command::FinetuneClassify(a) => heads::finetune_classify(a),
        Command::FinetuneDetect(a) => heads::finetune_detect(a),
        Command::RewardTrain(a) => heads::reward_train(a),
        Command::SynthHarf(a) => synth::synth_harf(a),
        Command::ExportEmbeddings(a) => pipeline::export(a),
        Command::Plot(a) => analyze::plot(a),
        Command::SynthCorpus(a) => synth::synth_corpus(a),
    }
}
