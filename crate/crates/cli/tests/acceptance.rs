use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ulma_core::harf::{arc_length, chord_length, fit_sag, parabola_through, Anchor, SagFitOptions};
use ulma_core::linalg::Matrix;
use ulma_core::model::{
    attention_weights, finetune_classify_step_frames, finetune_detect_step_frames, grad_check, head_loss_and_grad,
    head_loss_value, is_frontend, positional_encoding, predict_logits, pretrain_step_with_stats, scaled_dot_attention,
    EncoderConfig, EncoderModel, FineTuneHead, GradCheckOptions, HeadKind, HeadTarget, Linear, ModelError, ParamSet,
};
use ulma_core::reward::{train_reward, RewardModel, RewardTrainOptions};
use ulma_core::segmentation::{auc, comparator, decompose, ComparatorConfig, Polarity, SegmentationError};
use ulma_core::synth::{
    detection_corpus, gaussian_blobs, markov_unit_corpus, noise_clip, preference_corpus, tone_class_corpus,
    two_burst_clip,
};
use ulma_core::units::{assign, kmeans_fit, kmeans_fit_traced, KmeansOptions};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn small_model(seed: u64) -> EncoderModel<f64> {
    EncoderModel::new(EncoderConfig::for_rate(8000, 4), seed).unwrap()
}

fn comparator_oracle(x: f64, cfg: &ComparatorConfig<f64>) -> f64 {
    if x > cfg.v_th {
        cfg.v_max
    } else if x < cfg.v_th {
        cfg.v_min
    } else {
        (cfg.v_max + cfg.v_min) / 2.0
    }
}

fn comparator_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..10_000 {
        let v_min = rng.random_range(-2.0..1.0);
        let cfg = ComparatorConfig { v_th: rng.random_range(-1.0..1.0), v_max: v_min + rng.random_range(0.01..2.0), v_min };
        let x: Vec<f64> = (0..8).map(|_| if rng.random_bool(0.1) { cfg.v_th } else { rng.random_range(-1.0..1.0) }).collect();
        let out = comparator(&x, 8000, &cfg).map_err(|e| e.to_string())?;
        for &v in &out.values {
            ensure(v == cfg.v_min || v == cfg.v_max || v == cfg.mid(), format!("trial {trial}: {v} outside alphabet"))?;
        }
        let higher = ComparatorConfig { v_th: cfg.v_th + rng.random_range(0.0..1.0), ..cfg };
        let count = |c: &ComparatorConfig<f64>| comparator(&x, 8000, c).unwrap().values.iter().filter(|&&v| v == c.v_max).count();
        ensure(count(&higher) <= count(&cfg), format!("trial {trial}: raising the threshold added highs"))?;
    }
    let n = 64;
    let mut x: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).sin()).collect();
    x[n / 2] = 0.0;
    let cfg = ComparatorConfig { v_th: 0.0, v_max: 1.0, v_min: 0.0 };
    let out = comparator(&x, 8000, &cfg).map_err(|e| e.to_string())?;
    for (i, (&v, &s)) in out.values.iter().zip(&x).enumerate() {
        ensure(v.to_bits() == comparator_oracle(s, &cfg).to_bits(), format!("sine sample {i}: {v}"))?;
    }
    Ok("10000 random inputs in alphabet, threshold monotone, sine bit-exact".into())
}

fn positional_encoding_formula() -> Outcome {
    let pe = positional_encoding::<f64>(64, 8).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for pos in 0..64 {
        for i in 0..4 {
            let angle = pos as f64 / 10000f64.powf(2.0 * i as f64 / 8.0);
            worst = worst.max((pe.get(pos, 2 * i) - angle.sin()).abs()).max((pe.get(pos, 2 * i + 1) - angle.cos()).abs());
        }
    }
    ensure(worst <= 1e-12, format!("max deviation {worst:e}"))?;
    ensure(pe.row(0) == [0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0], format!("row 0 is {:?}", pe.row(0)))?;
    Ok(format!("max deviation {worst:e}, row 0 = (0,1,...)"))
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix<f64> {
    Matrix::from_vec(r, c, (0..r * c).map(|_| rng.random_range(-2.0..2.0)).collect())
}

fn attention_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst_sum: f64 = 0.0;
    for _ in 0..200 {
        let (n, m, dk, dv) = (rng.random_range(1..7), rng.random_range(1..7), rng.random_range(1..5), rng.random_range(1..4));
        let (q, k, v) = (random_matrix(&mut rng, n, dk), random_matrix(&mut rng, m, dk), random_matrix(&mut rng, m, dv));
        let w = attention_weights(&q, &k, &v).map_err(|e| e.to_string())?;
        let out = scaled_dot_attention(&q, &k, &v).map_err(|e| e.to_string())?;
        for i in 0..n {
            worst_sum = worst_sum.max((w.row(i).iter().sum::<f64>() - 1.0).abs());
            ensure(w.row(i).iter().all(|&x| x >= 0.0), "negative attention weight")?;
            for c in 0..dv {
                let mix: f64 = (0..m).map(|j| w.get(i, j) * v.get(j, c)).sum();
                let (lo, hi) = (0..m).map(|j| v.get(j, c)).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
                ensure((out.get(i, c) - mix).abs() <= 1e-12, "output is not the weighted mix of V rows")?;
                ensure(out.get(i, c) >= lo - 1e-12 && out.get(i, c) <= hi + 1e-12, "output outside the hull of V")?;
            }
        }
        let qp: Vec<usize> = (0..n).rev().collect();
        let kp: Vec<usize> = (0..m).map(|j| (j + 1) % m).collect();
        let permuted = scaled_dot_attention(&q.select_rows(&qp), &k.select_rows(&kp), &v.select_rows(&kp)).unwrap();
        let expected = out.select_rows(&qp);
        let diff = permuted.as_slice().iter().zip(expected.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure(diff <= 1e-12, format!("permutation equivariance off by {diff:e}"))?;
    }
    ensure(worst_sum <= 1e-12, format!("row sum off by {worst_sum:e}"))?;

    let q = Matrix::from_rows(&[[1.0, 0.0]]);
    let k = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]);
    let w = attention_weights(&q, &k, &k).unwrap();
    let e = (1.0 / 2f64.sqrt()).exp();
    let expected = e / (e + 1.0);
    ensure((w.get(0, 0) - expected).abs() <= 1e-9, format!("hand case {} vs {expected}", w.get(0, 0)))?;
    Ok(format!("row sums within {worst_sum:e}, hand case {:.10}, equivariant", w.get(0, 0)))
}

fn kmeans_suite() -> Outcome {
    let centres = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]]);
    let (x, truth) = gaussian_blobs(&centres, 200, 0.05, 13);
    let (cb, trace) = kmeans_fit_traced(&x, 3, 7, &KmeansOptions::default()).map_err(|e| e.to_string())?;
    ensure(trace.windows(2).all(|w| w[1] <= w[0]), format!("inertia rose: {trace:?}"))?;
    let labels = assign(&cb, &x).unwrap();
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let best = perms.iter().max_by_key(|p| labels.iter().zip(&truth).filter(|(&l, &t)| p[l] == t).count()).unwrap();
    let hits = labels.iter().zip(&truth).filter(|(&l, &t)| best[l] == t).count();
    ensure(hits == truth.len(), format!("{hits}/{} assigned correctly", truth.len()))?;
    let mut worst: f64 = 0.0;
    for j in 0..3 {
        let d: f64 = cb.centroids.row(j).iter().zip(centres.row(best[j])).map(|(a, b)| (a - b).powi(2)).sum();
        worst = worst.max(d.sqrt());
    }
    ensure(worst <= 0.05, format!("centroid error {worst}"))?;
    let again = kmeans_fit(&x, 3, 7, &KmeansOptions::default()).unwrap();
    let bytes = |m: &Matrix<f64>| m.as_slice().iter().flat_map(|v| v.to_le_bytes()).collect::<Vec<u8>>();
    ensure(bytes(&cb.centroids) == bytes(&again.centroids), "refit with the same seed differs")?;
    Ok(format!("{} monotone iterations, centroid error {worst:.4}, 100% assignment, byte-exact", trace.len()))
}

fn gradient_checks() -> Outcome {
    let (clips, _) = tone_class_corpus::<f64>(1, &[700.0], 8000, 0.3, 1);
    let model = small_model(3);
    let frames = model.conv_frontend(&clips[0]).unwrap();
    let mut head = FineTuneHead::new(model.config.d_model, 3, HeadKind::Classify);
    let mut noise = head.clone();
    noise.linear = Linear::init(&mut ChaCha8Rng::seed_from_u64(1), model.config.d_model, 3);
    head.axpy_where(1.0, &noise, |_| true);
    let (_, _, grad) = head_loss_and_grad(&model, &head, &frames, HeadTarget::Class(1)).unwrap();
    let head_report = grad_check(
        &head,
        &grad,
        |h| head_loss_value(&model, h, &frames, HeadTarget::Class(1)),
        &GradCheckOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    ensure(head_report.max_rel_error <= 1e-7, format!("head {:e}", head_report.max_rel_error))?;

    let corpus = markov_unit_corpus::<f64>(1, 4, 8000, 0.3, 0.8, 3);
    let model = small_model(11);
    let (clip, labels) = (&corpus.clips[0], &corpus.units[0]);
    let mask: BTreeSet<usize> = [2, 3, 4, 9, 10].into_iter().collect();
    let (_, grads) = model.masked_loss_and_grad(clip, labels, &mask).unwrap();
    let cfg = model.config.clone();
    let enc_report = grad_check(
        &model.params,
        &grads,
        |p| Ok(EncoderModel::from_params(cfg.clone(), p.clone(), 11)?.masked_loss(clip, labels, &mask)?.loss),
        &GradCheckOptions { eps: 1e-5, max_params: Some(400), seed: 5 },
    )
    .map_err(|e| e.to_string())?;
    ensure(enc_report.max_rel_error <= 1e-4, format!("encoder {:e}", enc_report.max_rel_error))?;
    Ok(format!(
        "head {:.2e} over {} params, encoder {:.2e} over {} params",
        head_report.max_rel_error, head_report.checked, enc_report.max_rel_error, enc_report.checked
    ))
}

fn markov_pretraining() -> Outcome {
    let corpus = markov_unit_corpus::<f64>(8, 4, 8000, 1.0, 0.9, 21);
    let mut model = small_model(2);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let steps = 500;
    let (mut losses, mut correct, mut masked) = (Vec::new(), 0, 0);
    for step in 0..steps {
        let i = step % corpus.clips.len();
        let out = loop {
            match pretrain_step_with_stats(&mut model, &corpus.clips[i], &corpus.units[i], &mut rng, 0.02) {
                Err(ModelError::EmptyMask) => continue,
                other => break other.map_err(|e| e.to_string())?,
            }
        };
        losses.push(out.loss);
        if step + 100 >= steps {
            correct += out.correct;
            masked += out.masked;
        }
    }
    let first = losses[..40].iter().sum::<f64>() / 40.0;
    let last = losses[steps - 40..].iter().sum::<f64>() / 40.0;
    let acc = correct as f64 / masked as f64;
    ensure(last < 0.8 * first, format!("loss {first:.4} -> {last:.4}"))?;
    ensure(acc >= 0.40, format!("masked accuracy {acc:.3}"))?;
    Ok(format!("loss {first:.4} -> {last:.4} (ratio {:.3}), masked accuracy {acc:.3}", last / first))
}

fn classify_finetune() -> Outcome {
    let (clips, labels) = tone_class_corpus::<f64>(10, &[500.0, 1500.0], 8000, 0.5, 4);
    let mut model = small_model(8);
    let before = model.params.clone();
    let frames: Vec<Matrix<f64>> = clips.iter().map(|c| model.conv_frontend(c).unwrap()).collect();
    let mut head = FineTuneHead::new(model.config.d_model, 2, HeadKind::Classify);
    let mut reached = None;
    for epoch in 1..=200 {
        for (f, &y) in frames.iter().zip(&labels) {
            finetune_classify_step_frames(&mut model, &mut head, f, y, 0.05).map_err(|e| e.to_string())?;
        }
        let hits = frames
            .iter()
            .zip(&labels)
            .filter(|(f, &y)| {
                let z = predict_logits(&model, &head, f).unwrap();
                usize::from(z[1] > z[0]) == y
            })
            .count();
        if hits as f64 / labels.len() as f64 >= 0.95 {
            reached = Some(epoch);
            break;
        }
    }
    let epoch = reached.ok_or("accuracy below 0.95 after 200 epochs")?;
    for ((name, a), (_, b)) in before.tensors().into_iter().zip(model.params.tensors()) {
        if is_frontend(&name) {
            ensure(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()), format!("{name} moved"))?;
        }
    }
    Ok(format!("accuracy >= 0.95 after {epoch} epochs, front end bit-identical"))
}

fn detection_head() -> Outcome {
    let (clips, targets) = detection_corpus::<f64>(24, 3, 8000, 0.6, 6);
    let mut model = small_model(4);
    let frames: Vec<Matrix<f64>> = clips.iter().map(|c| model.conv_frontend(c).unwrap()).collect();
    let mut head = FineTuneHead::new(model.config.d_model, 3, HeadKind::Detect);
    let mean_bce = |model: &EncoderModel<f64>, head: &FineTuneHead<f64>| {
        frames.iter().zip(&targets).map(|(f, t)| head_loss_value(model, head, f, HeadTarget::Labels(t)).unwrap()).sum::<f64>()
            / frames.len() as f64
    };
    let initial = mean_bce(&model, &head);
    ensure((initial - 2f64.ln()).abs() < 1e-12, format!("initial BCE {initial}"))?;
    for _ in 0..200 {
        for (f, t) in frames.iter().zip(&targets) {
            finetune_detect_step_frames(&mut model, &mut head, f, t, 0.05).map_err(|e| e.to_string())?;
        }
    }
    let last = mean_bce(&model, &head);
    ensure(last < 0.1, format!("final BCE {last}"))?;
    Ok(format!("initial BCE {initial:.6} (ln 2), final {last:.5}"))
}

fn parabola_arc_closed_form(a: f64, b: f64, t1: f64, t2: f64) -> f64 {
    let g = |t: f64| {
        let u = 2.0 * a * t + b;
        (u * (1.0 + u * u).sqrt() + u.asinh()) / (4.0 * a)
    };
    g(t2) - g(t1)
}

fn anchor(t: f64, h: f64) -> Anchor<f64> {
    Anchor::new(t, h)
}

fn harf_solver() -> Outcome {
    let opts = SagFitOptions::default();
    let mut worst: f64 = 0.0;
    for ((t1, h1), (t2, h2)) in [((0.0f64, 0.0f64), (1.0f64, 0.0f64)), ((0.2, 0.9), (0.7, 0.45)), ((0.0, 0.0), (3.0, 4.0))] {
        let (a1, a2) = (anchor(t1, h1), anchor(t2, h2));
        let chord = chord_length(a1, a2);
        let flat = arc_length(&parabola_through(a1, a2, 0.0).unwrap());
        ensure((flat - chord).abs() <= 1e-12, format!("sag 0 length {flat} vs chord {chord}"))?;
        for factor in [1.0, 1.01, 1.5, 3.0] {
            let fit = fit_sag(a1, a2, factor * chord, &opts).map_err(|e| e.to_string())?;
            let len = arc_length(&parabola_through(a1, a2, fit.sag).unwrap());
            worst = worst.max((len - factor * chord).abs());
        }
    }
    ensure(worst <= 1e-9, format!("round-trip residual {worst:e}"))?;
    let p = parabola_through(anchor(0.5, -0.25), anchor(1.5, 0.75), 0.25).unwrap();
    ensure((p.a - 1.0).abs() < 1e-12 && (p.b + 1.0).abs() < 1e-12, "curve is not y = x^2 - x")?;
    let len = arc_length(&p);
    ensure((len - 1.478_943).abs() <= 1e-6, format!("x^2 - x arc length {len}"))?;
    ensure((len - parabola_arc_closed_form(1.0, -1.0, 0.5, 1.5)).abs() <= 1e-10, "closed form mismatch")?;
    let unit = arc_length(&parabola_through(anchor(0.0, 0.0), anchor(1.0, 0.0), 0.25).unwrap());
    ensure((unit - parabola_arc_closed_form(1.0, -1.0, 0.0, 1.0)).abs() <= 1e-10, "closed form mismatch on [0, 1]")?;
    Ok(format!("round-trip residual {worst:.1e}, y=x^2-x on [0.5, 1.5] = {len:.7}, on [0, 1] = {unit:.7}"))
}

fn segmentation_suite() -> Outcome {
    const HOP: f64 = 0.01;
    let mut worst: f64 = 0.0;
    let mut ratio_err: f64 = 0.0;
    for seed in 0..5 {
        let p = decompose(&two_burst_clip::<f64>(16_000, seed)).map_err(|e| e.to_string())?;
        let fil = p.fil.as_ref().ok_or("no fil found")?;
        for (got, want) in [(p.ism.onset_s, 0.2), (p.ism.offset_s, 0.4), (fil.onset_s, 0.7), (fil.offset_s, 0.8)] {
            worst = worst.max((got - want).abs());
        }
        worst = worst.max((p.chirps_s.ok_or("no chirps")? - 0.3).abs());
        ratio_err = ratio_err.max((p.height_ratio.ok_or("no ratio")? - 0.5).abs());
    }
    ensure(worst <= HOP + 1e-9, format!("timing error {worst}"))?;
    ensure(ratio_err <= 0.02, format!("height ratio error {ratio_err}"))?;
    ensure(
        matches!(decompose(&noise_clip::<f64>(16_000, 1.0, 0.05, 0)), Err(SegmentationError::NoIsmFound)),
        "noise clip did not give NoIsmFound",
    )?;
    Ok(format!("timing error {worst:.4} s (hop {HOP}), ratio error {ratio_err:.4}, noise -> NoIsmFound"))
}

fn correlation_suite() -> Outcome {
    let mut separated = vec![(0.9, Polarity::Positive); 5];
    separated.extend([(0.2, Polarity::Negative); 5]);
    let a_sep = auc(&separated).ok_or("auc undefined")?;
    ensure(a_sep == 1.0, format!("separated AUC {a_sep}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let random: Vec<(f64, Polarity)> = (0..1000)
        .map(|_| (rng.random_range(0.0..1.0), if rng.random_bool(0.5) { Polarity::Positive } else { Polarity::Negative }))
        .collect();
    let a_rand = auc(&random).ok_or("auc undefined")?;
    ensure((a_rand - 0.5).abs() <= 0.06, format!("random AUC {a_rand}"))?;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs: Vec<(f64, Polarity)> = (0..40)
            .map(|i| {
                let p = if i % 2 == 0 { Polarity::Positive } else { Polarity::Negative };
                ((rng.random_range(0..6) as f64) / 5.0, p)
            })
            .collect();
        let flipped: Vec<_> = pairs.iter().map(|&(r, p)| (r, p.flipped())).collect();
        let sum = auc(&pairs).unwrap() + auc(&flipped).unwrap();
        ensure(sum == 1.0, format!("seed {seed}: AUC + flipped AUC = {sum}"))?;
    }
    Ok(format!("separated 1.0, random {a_rand:.4}, antisymmetry exact over 50 tied samples"))
}

fn reward_model() -> Outcome {
    let (clips, pairs) = preference_corpus::<f64>(200, 8000, 0.4, 17);
    let mut rm = RewardModel::new(small_model(5));
    let opts = RewardTrainOptions { epochs: 300, step_size: 0.5, seed: 2, batch_size: None };
    let report = train_reward(&mut rm, &clips, &pairs, &opts).map_err(|e| e.to_string())?;
    ensure((report.initial_loss - 2f64.ln()).abs() <= 0.1, format!("untrained loss {}", report.initial_loss))?;
    ensure(report.accuracy >= 0.90, format!("pairwise accuracy {}", report.accuracy))?;
    Ok(format!(
        "untrained loss {:.4}, trained loss {:.4}, pairwise accuracy {:.3}",
        report.initial_loss, report.final_loss, report.accuracy
    ))
}

fn ulma(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ulma")).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("ulma {}: {}", args[0], String::from_utf8_lossy(&out.stderr).trim()));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

/// synth → features → cluster → pretrain → refit-units → finetune-classify, plus analyze.
fn run_pipeline(dir: &Path) -> Result<f64, String> {
    let d = dir.to_str().unwrap();
    let tones = format!("{d}/tones");
    let manifest = format!("{tones}/manifest.jsonl");
    let m = manifest.as_str();
    ulma(&["synth-corpus", "--out", &tones, "--kind", "tones", "--seed", "1", "--n", "12"])?;
    ulma(&["features", "--manifest", m, "--out", &tones])?;
    ulma(&["cluster", "--out", &tones, "--k", "16", "--seed", "7"])?;
    ulma(&["pretrain", "--manifest", m, "--out", &tones, "--seed", "3"])?;
    ulma(&["refit-units", "--manifest", m, "--out", &tones, "--seed", "4"])?;
    let stdout = ulma(&["finetune-classify", "--manifest", m, "--out", &tones, "--seed", "5"])?;
    let bursts = format!("{d}/bursts");
    ulma(&["synth-corpus", "--out", &bursts, "--kind", "bursts", "--seed", "2", "--n", "8"])?;
    ulma(&["analyze", "--manifest", &format!("{bursts}/manifest.jsonl"), "--out", &bursts, "--svg"])?;
    stdout
        .split_whitespace()
        .find_map(|w| w.strip_prefix("train_accuracy="))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| format!("no accuracy in {stdout:?}"))
}

fn end_to_end_determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let start = Instant::now();
    let accuracy = run_pipeline(a.path())?;
    let elapsed = start.elapsed().as_secs_f64();
    run_pipeline(b.path())?;
    ensure(elapsed < 300.0, format!("pipeline took {elapsed:.1} s"))?;
    ensure(accuracy >= 0.95, format!("train accuracy {accuracy}"))?;
    let artifacts = [
        "tones/codebook.json",
        "tones/codebook_stage2.json",
        "tones/checkpoint.json",
        "tones/checkpoint_classify.json",
        "tones/classify_head.json",
        "tones/features.jsonl",
        "tones/pretrain_log.csv",
        "tones/classify_log.csv",
        "tones/classify_summary.json",
        "bursts/report.jsonl",
        "bursts/envelopes/0000_bursts_0000_envelope.csv",
    ];
    for name in artifacts {
        let read = |dir: &Path| std::fs::read(dir.join(name)).map_err(|e| format!("{name}: {e}"));
        ensure(read(a.path())? == read(b.path())?, format!("{name} differs between runs"))?;
    }
    Ok(format!(
        "{} artifacts byte-identical; pipeline {elapsed:.1} s, train accuracy {accuracy}",
        artifacts.len()
    ))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("comparator", comparator_suite),
        ("positional encoding", positional_encoding_formula),
        ("attention", attention_suite),
        ("k-means", kmeans_suite),
        ("gradient checks", gradient_checks),
        ("masked-unit pretraining", markov_pretraining),
        ("classification fine-tune", classify_finetune),
        ("detection head", detection_head),
        ("harf solver", harf_solver),
        ("segmentation", segmentation_suite),
        ("correlation", correlation_suite),
        ("reward model", reward_model),
        ("end-to-end determinism", end_to_end_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                println!("FAIL {:>2} {name}: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
