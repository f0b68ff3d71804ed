use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ulma_core::linalg::Matrix;
use ulma_core::model::{
    finetune_classify_step_frames, finetune_detect_step_frames, grad_check, head_loss_and_grad, head_loss_value,
    is_frontend, predict_logits, pretrain_step_with_stats, EncoderConfig, EncoderModel, FineTuneHead, GradCheckOptions,
    HeadKind, HeadTarget, ModelError, ParamSet,
};
use ulma_core::synth::{detection_corpus, markov_unit_corpus, tone_class_corpus};

fn small_model(seed: u64) -> EncoderModel<f64> {
    EncoderModel::new(EncoderConfig::for_rate(8000, 4), seed).unwrap()
}

#[test]
fn masked_loss_gradient_matches_finite_differences() {
    let corpus = markov_unit_corpus::<f64>(1, 4, 8000, 0.3, 0.8, 3);
    let model = small_model(11);
    let clip = &corpus.clips[0];
    let labels = &corpus.units[0];
    let mask: BTreeSet<usize> = [2, 3, 4, 9, 10].into_iter().collect();
    let (_, grads) = model.masked_loss_and_grad(clip, labels, &mask).unwrap();
    let cfg = model.config.clone();
    let report = grad_check(
        &model.params,
        &grads,
        |p| {
            let m = EncoderModel::from_params(cfg.clone(), p.clone(), 11)?;
            Ok(m.masked_loss(clip, labels, &mask)?.loss)
        },
        &GradCheckOptions { eps: 1e-5, max_params: Some(400), seed: 5 },
    )
    .unwrap();
    println!("masked loss grad check: {report:?}");
    assert_eq!(report.checked, 400);
    assert!(report.max_rel_error <= 1e-4, "{report:?}");
}

#[test]
fn pretraining_on_markov_units() {
    let corpus = markov_unit_corpus::<f64>(8, 4, 8000, 1.0, 0.9, 21);
    let mut model = small_model(2);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut losses = Vec::new();
    let mut correct = 0;
    let mut masked = 0;
    let steps = 500;
    for step in 0..steps {
        let i = step % corpus.clips.len();
        let out = loop {
            match pretrain_step_with_stats(&mut model, &corpus.clips[i], &corpus.units[i], &mut rng, 0.02) {
                Err(ModelError::EmptyMask) => continue,
                other => break other.unwrap(),
            }
        };
        losses.push(out.loss);
        if step + 100 >= steps {
            correct += out.correct;
            masked += out.masked;
        }
    }
    let first: f64 = losses[..40].iter().sum::<f64>() / 40.0;
    let last: f64 = losses[steps - 40..].iter().sum::<f64>() / 40.0;
    let acc = correct as f64 / masked as f64;
    println!("pretrain loss {first:.4} -> {last:.4}, masked accuracy {acc:.3}");
    assert!(last < 0.8 * first);
    assert!(acc >= 0.40);
}

#[test]
fn classify_finetune_freezes_front_end() {
    let (clips, labels) = tone_class_corpus::<f64>(10, &[500.0, 1500.0], 8000, 0.5, 4);
    let mut model = small_model(8);
    let before = model.params.clone();
    let frames: Vec<Matrix<f64>> = clips.iter().map(|c| model.conv_frontend(c).unwrap()).collect();
    let mut head = FineTuneHead::new(model.config.d_model, 2, HeadKind::Classify);
    let mut acc = 0.0;
    for epoch in 0..200 {
        for (f, &y) in frames.iter().zip(&labels) {
            finetune_classify_step_frames(&mut model, &mut head, f, y, 0.05).unwrap();
        }
        let hits = frames
            .iter()
            .zip(&labels)
            .filter(|(f, &y)| {
                let z = predict_logits(&model, &head, f).unwrap();
                (z[1] > z[0]) as usize == y
            })
            .count();
        acc = hits as f64 / labels.len() as f64;
        if acc >= 0.95 {
            println!("classify accuracy {acc} after {} epochs", epoch + 1);
            break;
        }
    }
    assert!(acc >= 0.95);
    for ((name, a), (_, b)) in before.tensors().into_iter().zip(model.params.tensors()) {
        if is_frontend(&name) {
            assert!(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()), "{name} moved");
        }
    }
}

#[test]
fn detection_head_learns_disjoint_events() {
    let (clips, targets) = detection_corpus::<f64>(24, 3, 8000, 0.6, 6);
    let mut model = small_model(4);
    let frames: Vec<Matrix<f64>> = clips.iter().map(|c| model.conv_frontend(c).unwrap()).collect();
    let mut head = FineTuneHead::new(model.config.d_model, 3, HeadKind::Detect);
    let initial = head_loss_value(&model, &head, &frames[0], HeadTarget::Labels(&targets[0])).unwrap();
    assert!((initial - 2f64.ln()).abs() < 1e-12);
    let mean_bce = |model: &EncoderModel<f64>, head: &FineTuneHead<f64>| {
        frames
            .iter()
            .zip(&targets)
            .map(|(f, t)| head_loss_value(model, head, f, HeadTarget::Labels(t)).unwrap())
            .sum::<f64>()
            / frames.len() as f64
    };
    for _ in 0..200 {
        for (f, t) in frames.iter().zip(&targets) {
            finetune_detect_step_frames(&mut model, &mut head, f, t, 0.05).unwrap();
        }
    }
    let last = mean_bce(&model, &head);
    println!("detection BCE {initial:.4} -> {last:.4}");
    assert!(last < 0.1);
}

#[test]
fn head_gradient_check() {
    let (clips, _) = tone_class_corpus::<f64>(1, &[700.0], 8000, 0.3, 1);
    let model = small_model(3);
    let frames = model.conv_frontend(&clips[0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut head = FineTuneHead::new(model.config.d_model, 3, HeadKind::Classify);
    let mut noise = head.clone();
    noise.linear = ulma_core::model::Linear::init(&mut rng, model.config.d_model, 3);
    head.axpy_where(1.0, &noise, |_| true);
    let (_, _, grad) = head_loss_and_grad(&model, &head, &frames, HeadTarget::Class(1)).unwrap();
    let report = grad_check(
        &head,
        &grad,
        |h| head_loss_value(&model, h, &frames, HeadTarget::Class(1)),
        &GradCheckOptions::default(),
    )
    .unwrap();
    println!("head grad check: {report:?}");
    assert!(report.max_rel_error <= 1e-7);
}


#[test]
fn identical_unit_embeddings_give_uniform_loss() {
    let corpus = markov_unit_corpus::<f64>(1, 4, 8000, 0.5, 0.9, 1);
    let mut model = small_model(5);
    let row = model.params.unit_emb.row(0).to_vec();
    for r in 0..model.params.unit_emb.rows() {
        model.params.unit_emb.row_mut(r).copy_from_slice(&row);
    }
    let mask: BTreeSet<usize> = (0..25).step_by(3).collect();
    let out = model.masked_loss(&corpus.clips[0], &corpus.units[0], &mask).unwrap();
    assert!((out.loss - 4f64.ln()).abs() < 1e-12);
    let bad: Vec<usize> = corpus.units[0].iter().map(|_| 4).collect();
    assert!(matches!(
        model.masked_loss(&corpus.clips[0], &bad, &mask),
        Err(ModelError::LabelOutOfRange { label: 4, classes: 4 })
    ));
    assert!(matches!(
        model.masked_loss(&corpus.clips[0], &corpus.units[0], &BTreeSet::new()),
        Err(ModelError::EmptyMask)
    ));
}

#[test]
fn mean_pool_ignores_frame_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    use rand::Rng;
    let h = Matrix::from_vec(7, 4, (0..28).map(|_| rng.random_range(-1.0f64..1.0)).collect());
    let perm = [3, 0, 6, 1, 5, 2, 4];
    let a = ulma_core::model::mean_pool(&h).unwrap();
    let b = ulma_core::model::mean_pool(&h.select_rows(&perm)).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-15));
}

#[test]
fn single_precision_encoder_runs() {
    let corpus = markov_unit_corpus::<f32>(1, 4, 8000, 0.5, 0.9, 2);
    let mut model = EncoderModel::<f32>::new(EncoderConfig::for_rate(8000, 4), 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut losses = Vec::new();
    while losses.len() < 5 {
        match pretrain_step_with_stats(&mut model, &corpus.clips[0], &corpus.units[0], &mut rng, 0.02f32) {
            Ok(o) => losses.push(o.loss),
            Err(ModelError::EmptyMask) => {}
            Err(e) => panic!("{e}"),
        }
    }
    assert!(losses.iter().all(|l| l.is_finite() && *l >= 0.0));
    assert!(model.encode(&corpus.clips[0]).unwrap().all_finite());
}
