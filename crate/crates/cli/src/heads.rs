use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use ulma_core::linalg::Matrix;
use ulma_core::model::{
    finetune_classify_step_frames, finetune_detect_step_frames, head_loss_value, predict_logits, EncoderConfig,
    EncoderModel, FineTuneHead, HeadKind, HeadTarget,
};
use ulma_core::reward::{reward_score, train_reward, PreferencePair, RewardModel, RewardTrainOptions};
use ulma_core::signal::AudioClip;

use crate::args::{FinetuneArgs, RewardArgs};
use crate::artifacts::{load_checkpoint, save_checkpoint, save_head, save_reward_head, save_summary, write_csv, write_jsonl};
use crate::corpus::{artifact, common_rate, ensure_dir, load_all, load_clip};
use crate::error::CliError;
use crate::manifest::{parse_manifest, Manifest, ManifestEntry};
use crate::pipeline::or_default;

struct Prepared {
    manifest: Manifest,
    model: EncoderModel<f64>,
    frames: Vec<Matrix<f64>>,
}

fn prepare(args: &FinetuneArgs) -> Result<Prepared, CliError> {
    let manifest = parse_manifest(&args.corpus.manifest)?;
    let clips = load_all(&manifest)?;
    common_rate(&clips)?;
    ensure_dir(&args.corpus.out)?;
    let model = load_checkpoint(&or_default(&args.checkpoint, &args.corpus.out, "checkpoint.json"))?;
    let frames = clips.par_iter().map(|c| model.conv_frontend(c)).collect::<Result<Vec<_>, _>>()?;
    Ok(Prepared { manifest, model, frames })
}

fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().fold(0, |best, (i, &x)| if x > v[best] { i } else { best })
}

fn line_of(i: usize, e: &ManifestEntry) -> String {
    format!("manifest entry {} ({})", i + 1, e.path)
}

/// Runs `epochs` shuffled passes of `step` over the clips, then `evaluate` after each pass.
fn train_loop<S>(
    state: &mut S,
    n: usize,
    epochs: usize,
    seed: u64,
    step: impl Fn(&mut S, usize) -> Result<f64, CliError>,
    evaluate: impl Fn(&S) -> Result<f64, CliError>,
) -> Result<Vec<(f64, f64)>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = Vec::with_capacity(epochs);
    for epoch in 1..=epochs {
        order.shuffle(&mut rng);
        let mut loss = 0.0;
        for &i in &order {
            loss += step(state, i)?;
        }
        let metric = evaluate(state)?;
        log::info!("epoch {epoch}: loss {:.4}, metric {metric:.3}", loss / n as f64);
        trace.push((loss / n as f64, metric));
    }
    Ok(trace)
}

/// Mean loss of the trained head over all clips.
fn mean_head_loss<'a>(
    model: &EncoderModel<f64>,
    head: &FineTuneHead<f64>,
    frames: &[Matrix<f64>],
    target: impl Fn(usize) -> HeadTarget<'a, f64> + Sync,
) -> Result<f64, CliError> {
    let losses = (0..frames.len())
        .into_par_iter()
        .map(|i| head_loss_value(model, head, &frames[i], target(i)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

fn trace_rows(trace: &[(f64, f64)]) -> Vec<Vec<String>> {
    trace.iter().enumerate().map(|(e, (l, m))| vec![(e + 1).to_string(), l.to_string(), m.to_string()]).collect()
}

pub fn finetune_classify(args: &FinetuneArgs) -> Result<(), CliError> {
    let out = &args.corpus.out;
    let Prepared { manifest, mut model, frames } = prepare(args)?;
    let names = manifest
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| e.label.clone().ok_or_else(|| CliError::InvalidInput(format!("{} has no label", line_of(i, e)))))
        .collect::<Result<Vec<_>, _>>()?;
    let classes: Vec<String> = names.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if classes.len() < 2 {
        return Err(CliError::InvalidInput(format!("need at least two distinct labels, found {}", classes.len())));
    }
    let index: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let labels: Vec<usize> = names.iter().map(|n| index[n.as_str()]).collect();

    let mut head = FineTuneHead::new(model.config.d_model, classes.len(), HeadKind::Classify);
    let accuracy = |model: &EncoderModel<f64>, head: &FineTuneHead<f64>| -> Result<f64, CliError> {
        let hits = frames
            .par_iter()
            .zip(&labels)
            .map(|(f, &y)| predict_logits(model, head, f).map(|l| usize::from(argmax(&l) == y)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(hits.iter().sum::<usize>() as f64 / hits.len() as f64)
    };
    let trace = train_loop(
        &mut (&mut model, &mut head),
        frames.len(),
        args.epochs,
        args.seed,
        |(m, h), i| Ok(finetune_classify_step_frames(m, h, &frames[i], labels[i], args.step_size)?),
        |(m, h)| accuracy(m, h),
    )?;
    let final_loss = mean_head_loss(&model, &head, &frames, |i| HeadTarget::Class(labels[i]))?;
    let train_accuracy = accuracy(&model, &head)?;

    save_head(&artifact(out, "classify_head.json"), &head, &classes)?;
    save_checkpoint(&artifact(out, "checkpoint_classify.json"), &model)?;
    write_csv(&artifact(out, "classify_log.csv"), "classify-log", &["epoch", "mean_loss", "train_accuracy"], trace_rows(&trace))?;
    save_summary(
        &artifact(out, "classify_summary.json"),
        "classify-summary",
        json!({
            "seed": args.seed,
            "epochs": args.epochs,
            "step_size": args.step_size,
            "classes": classes,
            "final_loss": final_loss,
            "train_accuracy": train_accuracy,
        }),
    )?;
    println!("train_accuracy={train_accuracy} over {} clips, {} classes", frames.len(), classes.len());
    Ok(())
}

pub fn finetune_detect(args: &FinetuneArgs) -> Result<(), CliError> {
    let out = &args.corpus.out;
    let Prepared { manifest, mut model, frames } = prepare(args)?;
    let tags: Vec<String> = manifest
        .entries
        .iter()
        .flat_map(|e| e.events.iter().flat_map(|ev| ev.tags.iter().cloned()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if tags.is_empty() {
        return Err(CliError::InvalidInput("no event tags in the manifest".into()));
    }
    let targets: Vec<Vec<f64>> = manifest
        .entries
        .iter()
        .map(|e| tags.iter().map(|t| if e.events.iter().any(|ev| ev.tags.contains(t)) { 1.0 } else { 0.0 }).collect())
        .collect();

    let mut head = FineTuneHead::new(model.config.d_model, tags.len(), HeadKind::Detect);
    let label_accuracy = |model: &EncoderModel<f64>, head: &FineTuneHead<f64>| -> Result<f64, CliError> {
        let hits = frames
            .par_iter()
            .zip(&targets)
            .map(|(f, y)| {
                let l = predict_logits(model, head, f)?;
                Ok(l.iter().zip(y).filter(|(&z, &t)| (z > 0.0) == (t > 0.5)).count())
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(hits.iter().sum::<usize>() as f64 / (frames.len() * tags.len()) as f64)
    };
    let trace = train_loop(
        &mut (&mut model, &mut head),
        frames.len(),
        args.epochs,
        args.seed,
        |(m, h), i| Ok(finetune_detect_step_frames(m, h, &frames[i], &targets[i], args.step_size)?),
        |(m, h)| label_accuracy(m, h),
    )?;
    let final_loss = mean_head_loss(&model, &head, &frames, |i| HeadTarget::Labels(&targets[i]))?;
    let label_acc = label_accuracy(&model, &head)?;

    save_head(&artifact(out, "detect_head.json"), &head, &tags)?;
    save_checkpoint(&artifact(out, "checkpoint_detect.json"), &model)?;
    write_csv(&artifact(out, "detect_log.csv"), "detect-log", &["epoch", "mean_bce", "label_accuracy"], trace_rows(&trace))?;
    save_summary(
        &artifact(out, "detect_summary.json"),
        "detect-summary",
        json!({
            "seed": args.seed,
            "epochs": args.epochs,
            "step_size": args.step_size,
            "tags": tags,
            "final_bce": final_loss,
            "label_accuracy": label_acc,
        }),
    )?;
    println!("label_accuracy={label_acc} over {} clips, {} tags", frames.len(), tags.len());
    Ok(())
}

type PreferenceData = (Vec<String>, Vec<AudioClip<f64>>, Vec<PreferencePair>);

/// Manifest clips followed by any `prefer_over` targets not listed themselves.
fn preference_data(manifest: &Manifest) -> Result<PreferenceData, CliError> {
    let mut paths: Vec<String> = manifest.entries.iter().map(|e| e.path.clone()).collect();
    let mut clips = load_all(manifest)?;
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for (i, p) in paths.iter().enumerate() {
        index.entry(p.clone()).or_insert(i);
    }
    let mut pairs = Vec::new();
    for (i, e) in manifest.entries.iter().enumerate() {
        let Some(other) = &e.prefer_over else { continue };
        let j = match index.get(other) {
            Some(&j) => j,
            None => {
                clips.push(load_clip(manifest, other)?);
                paths.push(other.clone());
                index.insert(other.clone(), paths.len() - 1);
                paths.len() - 1
            }
        };
        pairs.push(PreferencePair::new(i, j, format!("manifest:{}", i + 1)));
    }
    if pairs.is_empty() {
        return Err(CliError::InvalidInput("no prefer_over entries in the manifest".into()));
    }
    Ok((paths, clips, pairs))
}

pub fn reward_train(args: &RewardArgs) -> Result<(), CliError> {
    let out = &args.corpus.out;
    let manifest = parse_manifest(&args.corpus.manifest)?;
    let (paths, clips, pairs) = preference_data(&manifest)?;
    let rate = common_rate(&clips)?;
    ensure_dir(out)?;
    let ckpt = or_default(&args.checkpoint, out, "checkpoint.json");
    let encoder = if args.checkpoint.is_some() || ckpt.exists() {
        load_checkpoint(&ckpt)?
    } else {
        log::warn!("{} not found; scoring with a fresh encoder", ckpt.display());
        EncoderModel::new(EncoderConfig::for_rate(rate, 16), args.seed)?
    };
    let mut rm = RewardModel::new(encoder);
    rm.train_encoder = args.train_encoder;
    let opts = RewardTrainOptions { epochs: args.epochs, step_size: args.step_size, seed: args.seed, batch_size: None };
    let report = train_reward(&mut rm, &clips, &pairs, &opts)?;

    let scores = clips.par_iter().map(|c| reward_score(&rm, c)).collect::<Result<Vec<_>, _>>()?;
    let records: Vec<Value> = paths.iter().zip(&scores).map(|(p, s)| json!({"path": p, "score": s})).collect();
    write_jsonl(&artifact(out, "reward_scores.jsonl"), "reward-scores", json!({"pairs": pairs.len()}), &records)?;
    save_reward_head(&artifact(out, "reward_head.json"), &rm.head)?;
    if args.train_encoder {
        save_checkpoint(&artifact(out, "checkpoint_reward.json"), &rm.encoder)?;
    }
    let rows = report.loss_trace.iter().enumerate().map(|(e, l)| vec![e.to_string(), l.to_string()]);
    write_csv(&artifact(out, "reward_log.csv"), "reward-log", &["epoch", "mean_loss"], rows)?;
    save_summary(
        &artifact(out, "reward_summary.json"),
        "reward-summary",
        json!({
            "seed": args.seed,
            "epochs": args.epochs,
            "step_size": args.step_size,
            "pairs": pairs.len(),
            "train_encoder": args.train_encoder,
            "initial_loss": report.initial_loss,
            "final_loss": report.final_loss,
            "pairwise_accuracy": report.accuracy,
        }),
    )?;
    println!("pairwise_accuracy={} over {} pairs (loss {:.4} -> {:.4})", report.accuracy, pairs.len(), report.initial_loss, report.final_loss);
    Ok(())
}
