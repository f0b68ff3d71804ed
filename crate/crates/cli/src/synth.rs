use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use ulma_core::harf::{arc_length, chord_length, fit_sag, parabola_through, render_harf, Anchor, SagFitOptions};
use ulma_core::signal::{write_wav_pcm16, AudioClip};
use ulma_core::synth::{
    burst_clip, detection_corpus, markov_unit_corpus, noise_clip, preference_corpus, tone_class_corpus, BurstSpec,
};

use crate::analyze::HARF_SLACK;
use crate::args::{CorpusKind, HarfArgs, SynthArgs};
use crate::artifacts::{save_summary, write_csv, write_text};
use crate::corpus::{artifact, ensure_dir};
use crate::error::CliError;
use crate::manifest::{write_manifest, Context, EventSpan, ManifestEntry};
use crate::svg::{line_plot, Series};

pub fn synth_harf(args: &HarfArgs) -> Result<(), CliError> {
    ensure_dir(&args.out)?;
    let (a1, a2) = (Anchor::new(args.t1, args.h1), Anchor::new(args.t2, args.h2));
    let chord = chord_length(a1, a2);
    let target = args.length.unwrap_or(HARF_SLACK * chord);
    let fit = fit_sag(a1, a2, target, &SagFitOptions::default())?;
    let p = parabola_through(a1, a2, fit.sag)?;
    let curve = render_harf(&p, args.samples)?;
    let rows = curve.iter().map(|(t, y)| vec![t.to_string(), y.to_string()]);
    let csv = artifact(&args.out, "harf.csv");
    write_csv(&csv, "harf", &["time_s", "height"], rows)?;
    save_summary(
        &artifact(&args.out, "harf.json"),
        "harf",
        json!({
            "anchors": [[args.t1, args.h1], [args.t2, args.h2]],
            "chord": chord,
            "target_length": target,
            "arc_length": arc_length(&p),
            "sag": fit.sag,
            "iterations": fit.iterations,
            "residual": fit.residual,
            "parabola": {"a": p.a, "b": p.b, "c": p.c},
        }),
    )?;
    if args.svg {
        let svg = line_plot("harf", &[Series { label: "harf", points: &curve }], &[]);
        write_text(&artifact(&args.out, "harf.svg"), &svg)?;
    }
    println!("sag={} after {} iterations; curve {}", fit.sag, fit.iterations, csv.display());
    Ok(())
}

const CLIP_S: f64 = 1.0;

fn tones(args: &SynthArgs) -> Vec<(AudioClip<f64>, ManifestEntry)> {
    let names = ["low", "high"];
    let (clips, labels) = tone_class_corpus(args.n, &[500.0, 1500.0], args.rate, CLIP_S, args.seed);
    clips
        .into_iter()
        .zip(labels)
        .map(|(c, y)| (c, ManifestEntry { label: Some(names[y].into()), ..ManifestEntry::new("") }))
        .collect()
}

/// Ism at 0.8 over [0.15, 0.35] s and a Fil over [0.6, 0.75] s at a random
/// fraction of that height; high fractions are labelled positive.
fn bursts(args: &SynthArgs) -> Vec<(AudioClip<f64>, ManifestEntry)> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    (0..args.n)
        .map(|i| {
            let ratio: f64 = rng.random_range(0.1..1.0);
            let spec = [
                BurstSpec { start_s: 0.15, end_s: 0.35, amp: 0.8, freq: 440.0 },
                BurstSpec { start_s: 0.6, end_s: 0.75, amp: 0.8 * ratio, freq: 440.0 },
            ];
            let clip = burst_clip(&spec, args.rate, CLIP_S, 0.002, args.seed.wrapping_add(i as u64));
            let context = if ratio >= 0.5 { Context::Positive } else { Context::Negative };
            (clip, ManifestEntry { context: Some(context), ..ManifestEntry::new("") })
        })
        .collect()
}

fn events(args: &SynthArgs) -> Vec<(AudioClip<f64>, ManifestEntry)> {
    const TYPES: usize = 3;
    let slot = CLIP_S / TYPES as f64;
    let (clips, targets) = detection_corpus(args.n, TYPES, args.rate, CLIP_S, args.seed);
    clips
        .into_iter()
        .zip(targets)
        .map(|(c, t)| {
            let events = t
                .iter()
                .enumerate()
                .filter(|(_, &on)| on > 0.5)
                .map(|(j, _)| EventSpan {
                    onset_s: (j as f64 + 0.1) * slot,
                    offset_s: (j as f64 + 0.9) * slot,
                    tags: vec![format!("event{j}")],
                })
                .collect();
            (c, ManifestEntry { events, ..ManifestEntry::new("") })
        })
        .collect()
}

pub fn synth_corpus(args: &SynthArgs) -> Result<(), CliError> {
    if args.n == 0 {
        return Err(CliError::InvalidInput("--n must be positive".into()));
    }
    ensure_dir(&args.out)?;
    let mut items = match args.kind {
        CorpusKind::Tones => tones(args),
        CorpusKind::Bursts => bursts(args),
        CorpusKind::Events => events(args),
        CorpusKind::Markov => markov_unit_corpus(args.n, 4, args.rate, CLIP_S, 0.9, args.seed)
            .clips
            .into_iter()
            .map(|c| (c, ManifestEntry::new("")))
            .collect(),
        CorpusKind::Noise => (0..args.n)
            .map(|i| (noise_clip(args.rate, CLIP_S, 0.05, args.seed.wrapping_add(i as u64)), ManifestEntry::new("")))
            .collect(),
        CorpusKind::Preference => {
            let (clips, pairs) = preference_corpus(args.n, args.rate, 0.5, args.seed);
            let mut items: Vec<_> = clips.into_iter().map(|c| (c, ManifestEntry::new(""))).collect();
            for p in &pairs {
                items[p.chosen].1.prefer_over = Some(p.rejected.to_string());
            }
            items
        }
    };
    let kind = format!("{:?}", args.kind).to_lowercase();
    let names: Vec<String> = (0..items.len()).map(|i| format!("{kind}_{i:04}.wav")).collect();
    for (i, (clip, entry)) in items.iter_mut().enumerate() {
        entry.path = names[i].clone();
        if let Some(j) = &entry.prefer_over {
            entry.prefer_over = Some(names[j.parse::<usize>().expect("index set above")].clone());
        }
        let path = artifact(&args.out, &names[i]);
        write_wav_pcm16(clip, &path).map_err(|source| CliError::Clip { path: path.display().to_string(), source })?;
    }
    let entries: Vec<ManifestEntry> = items.into_iter().map(|(_, e)| e).collect();
    let manifest = artifact(&args.out, "manifest.jsonl");
    write_manifest(&manifest, &entries)?;
    println!("wrote {} {kind} clips and {}", entries.len(), manifest.display());
    Ok(())
}
