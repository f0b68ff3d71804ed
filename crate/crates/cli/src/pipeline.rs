use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use ulma_core::linalg::Matrix;
use ulma_core::model::{
    export_embeddings, pretrain_step_with_stats, EncoderConfig, EncoderModel, EncoderParams, ModelError, FRAME_RATE,
};
use ulma_core::signal::{mfcc39, AudioClip, FeatureConfig};
use ulma_core::units::{assign, kmeans_fit, refit_from_hidden, resample_labels, KmeansOptions, Stage};

use crate::args::{ClusterArgs, CorpusArgs, ExportArgs, PretrainArgs, RefitArgs};
use crate::artifacts::{
    load_checkpoint, load_codebook, read_jsonl, save_checkpoint, save_codebook, save_summary, write_csv, write_jsonl,
};
use crate::corpus::{artifact, common_rate, ensure_dir, load_all};
use crate::error::CliError;
use crate::manifest::parse_manifest;

/// Consecutive empty masks tolerated before a clip is declared too short.
const MASK_RETRIES: usize = 64;

pub(crate) fn or_default(path: &Option<PathBuf>, out: &Path, name: &str) -> PathBuf {
    path.clone().unwrap_or_else(|| artifact(out, name))
}

fn load_corpus(corpus: &CorpusArgs) -> Result<(Vec<AudioClip<f64>>, u32), CliError> {
    let clips = load_all(&parse_manifest(&corpus.manifest)?)?;
    let rate = common_rate(&clips)?;
    ensure_dir(&corpus.out)?;
    Ok((clips, rate))
}

fn mfcc_of(clip: &AudioClip<f64>) -> Result<(Matrix<f64>, FeatureConfig), CliError> {
    let cfg = FeatureConfig::for_rate(clip.sample_rate());
    let m = mfcc39(clip, &cfg).map_err(|source| CliError::Clip { path: clip.source_id().to_string(), source })?;
    Ok((m.values, cfg))
}

pub fn features(args: &CorpusArgs) -> Result<(), CliError> {
    let (clips, rate) = load_corpus(args)?;
    let cfg = FeatureConfig::for_rate(rate);
    let mats = clips.par_iter().map(|c| mfcc_of(c).map(|(m, _)| m)).collect::<Result<Vec<_>, _>>()?;
    let records: Vec<Value> = clips
        .iter()
        .zip(&mats)
        .map(|(c, m)| {
            let rows: Vec<&[f64]> = m.iter_rows().collect();
            json!({"path": c.source_id(), "frames": m.rows(), "dim": m.cols(), "values": rows})
        })
        .collect();
    let path = artifact(&args.out, "features.jsonl");
    let header = json!({
        "sample_rate": rate,
        "hop_s": cfg.hop as f64 / rate as f64,
        "window_s": cfg.frame_len as f64 / rate as f64,
    });
    write_jsonl(&path, "features", header, &records)?;
    let total: usize = mats.iter().map(Matrix::rows).sum();
    println!("wrote {total} feature frames from {} clips to {}", clips.len(), path.display());
    Ok(())
}

fn bad(path: &Path, reason: impl Into<String>) -> CliError {
    CliError::BadArtifact { path: path.display().to_string(), reason: reason.into() }
}

fn read_features(path: &Path) -> Result<Matrix<f64>, CliError> {
    let (_, records) = read_jsonl(path, "features")?;
    let mut blocks = Vec::with_capacity(records.len());
    for rec in &records {
        let rows: Vec<Vec<f64>> = serde_json::from_value(rec["values"].clone()).map_err(|e| bad(path, e.to_string()))?;
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(bad(path, "ragged feature rows"));
        }
        if !rows.is_empty() {
            blocks.push(Matrix::from_vec(rows.len(), dim, rows.concat()));
        }
    }
    if blocks.is_empty() {
        return Err(bad(path, "no feature records"));
    }
    if blocks.windows(2).any(|w| w[0].cols() != w[1].cols()) {
        return Err(bad(path, "feature dimension differs between clips"));
    }
    Ok(Matrix::vstack(&blocks))
}

pub fn cluster(args: &ClusterArgs) -> Result<(), CliError> {
    let features = read_features(&artifact(&args.out, "features.jsonl"))?;
    let cb = kmeans_fit(&features, args.k, args.seed, &KmeansOptions::default())?;
    let path = artifact(&args.out, "codebook.json");
    save_codebook(&path, &cb)?;
    println!("clustered {} frames into {} units; codebook {}", features.rows(), cb.k(), path.display());
    Ok(())
}

/// Swaps in a fresh unit table when the codebook size differs from the checkpoint.
fn with_unit_count(model: EncoderModel<f64>, k: usize, seed: u64) -> Result<EncoderModel<f64>, CliError> {
    if model.config.k_units == k {
        return Ok(model);
    }
    let config = EncoderConfig { k_units: k, ..model.config.clone() };
    let fresh = EncoderParams::init(&config, &mut ChaCha8Rng::seed_from_u64(seed));
    let params = EncoderParams { unit_emb: fresh.unit_emb, ..model.params };
    Ok(EncoderModel::from_params(config, params, model.seed)?)
}

pub fn pretrain(args: &PretrainArgs) -> Result<(), CliError> {
    let out = &args.corpus.out;
    let (clips, rate) = load_corpus(&args.corpus)?;
    let cb_path = or_default(&args.codebook, out, "codebook.json");
    let cb = load_codebook(&cb_path)?;
    let init = args.init.as_ref().map(|p| load_checkpoint(p)).transpose()?;

    let labels: Vec<Vec<usize>> = match cb.stage {
        Stage::Mfcc => {
            let shape = EncoderModel::<f64>::new(EncoderConfig::for_rate(rate, cb.k()), args.seed)?;
            clips
                .par_iter()
                .map(|c| {
                    let (m, cfg) = mfcc_of(c)?;
                    let units = assign(&cb, &m)?;
                    let hop_s = cfg.hop as f64 / rate as f64;
                    let window_s = cfg.frame_len as f64 / rate as f64;
                    Ok(resample_labels(&units, hop_s, window_s, shape.frame_count(c.len()), 1.0 / FRAME_RATE as f64))
                })
                .collect::<Result<_, CliError>>()?
        }
        Stage::Hidden => {
            let teacher = init.as_ref().ok_or_else(|| {
                CliError::InvalidInput(format!("{} holds hidden-state units; pass --init with the checkpoint they came from", cb_path.display()))
            })?;
            let layer = args.layer.unwrap_or_else(|| teacher.config.default_refit_layer());
            clips
                .par_iter()
                .map(|c| Ok(assign(&cb, &teacher.hidden_states(c, layer)?)?))
                .collect::<Result<_, CliError>>()?
        }
    };

    let mut model = match init {
        Some(m) => with_unit_count(m, cb.k(), args.seed)?,
        None => EncoderModel::new(EncoderConfig::for_rate(rate, cb.k()), args.seed)?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut order: Vec<usize> = (0..clips.len()).collect();
    let mut rows = Vec::with_capacity(args.epochs);
    let mut last = (f64::NAN, f64::NAN);
    for epoch in 1..=args.epochs {
        order.shuffle(&mut rng);
        let (mut loss, mut correct, mut masked) = (0.0, 0, 0);
        for &i in &order {
            let mut retries = 0;
            let o = loop {
                match pretrain_step_with_stats(&mut model, &clips[i], &labels[i], &mut rng, args.step_size) {
                    Err(ModelError::EmptyMask) if retries < MASK_RETRIES => retries += 1,
                    r => break r?,
                }
            };
            loss += o.loss;
            correct += o.correct;
            masked += o.masked;
        }
        last = (loss / clips.len() as f64, correct as f64 / masked as f64);
        log::info!("epoch {epoch}: loss {:.4}, masked accuracy {:.3}", last.0, last.1);
        rows.push(vec![epoch.to_string(), last.0.to_string(), last.1.to_string()]);
    }

    let ckpt = artifact(out, "checkpoint.json");
    save_checkpoint(&ckpt, &model)?;
    write_csv(&artifact(out, "pretrain_log.csv"), "pretrain-log", &["epoch", "mean_loss", "masked_accuracy"], rows)?;
    save_summary(
        &artifact(out, "pretrain_summary.json"),
        "pretrain-summary",
        json!({
            "seed": args.seed,
            "epochs": args.epochs,
            "step_size": args.step_size,
            "codebook_stage": cb.stage.number(),
            "k_units": cb.k(),
            "final_loss": last.0,
            "final_masked_accuracy": last.1,
        }),
    )?;
    println!("pretrained {} epochs (loss {:.4}); checkpoint {}", args.epochs, last.0, ckpt.display());
    Ok(())
}

pub fn refit_units(args: &RefitArgs) -> Result<(), CliError> {
    let out = &args.corpus.out;
    let (clips, _) = load_corpus(&args.corpus)?;
    let model = load_checkpoint(&or_default(&args.checkpoint, out, "checkpoint.json"))?;
    let layer = args.layer.unwrap_or_else(|| model.config.default_refit_layer());
    let cb = refit_from_hidden(&model, &clips, layer, args.k, args.seed)?;
    let path = artifact(out, "codebook_stage2.json");
    save_codebook(&path, &cb)?;
    println!("refit {} units on layer {layer}; codebook {}", cb.k(), path.display());
    Ok(())
}

pub fn export(args: &ExportArgs) -> Result<(), CliError> {
    let out = &args.corpus.out;
    let (clips, _) = load_corpus(&args.corpus)?;
    let model = load_checkpoint(&or_default(&args.checkpoint, out, "checkpoint.json"))?;
    let layer = args.layer.unwrap_or(model.depth() - 1);
    let rows = export_embeddings(&model, &clips, layer)?;
    let records: Vec<Value> =
        rows.iter().map(|r| json!({"path": r.clip_id, "frame": r.frame, "values": r.values})).collect();
    let path = artifact(out, "embeddings.jsonl");
    write_jsonl(&path, "embeddings", json!({"layer": layer, "d_model": model.config.d_model}), &records)?;
    println!("exported {} frame embeddings from layer {layer} to {}", records.len(), path.display());
    Ok(())
}
