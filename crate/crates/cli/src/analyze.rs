use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};
use ulma_core::harf::{chord_length, fit_sag, parabola_through, render_harf, Anchor, SagFitOptions};
use ulma_core::segmentation::{
    classify_reaction, correlate_height_reactions, decompose_with, ulm_score, Burst, Polarity, ReactionThresholds,
    SegmentConfig, SegmentationError, UlmConfig, VocalPattern,
};
use ulma_core::signal::{AudioClip, Envelope};

use crate::args::{AnalyzeArgs, PlotArgs};
use crate::artifacts::{write_csv, write_jsonl, write_text};
use crate::corpus::{artifact, clip_stem, ensure_dir, load_each};
use crate::error::{segmentation_code, CliError};
use crate::manifest::{parse_manifest, Context, ManifestEntry};
use crate::svg::{line_plot, Series};

/// Harf target length as a multiple of the Ism-Fil chord.
pub const HARF_SLACK: f64 = 1.1;
const HARF_SAMPLES: usize = 101;

fn burst_json(b: &Burst<f64>) -> Value {
    json!({"onset_s": b.onset_s, "offset_s": b.offset_s, "peak": b.peak, "density": b.density})
}

fn entry_fields(entry: &ManifestEntry) -> serde_json::Map<String, Value> {
    match serde_json::to_value(entry).expect("entry serializes") {
        Value::Object(m) => m,
        _ => unreachable!("entries serialize to objects"),
    }
}

struct ClipAnalysis {
    pattern: VocalPattern<f64>,
    envelope: Envelope<f64>,
    duration_s: f64,
}

fn analyze_clip(clip: &AudioClip<f64>) -> Result<ClipAnalysis, SegmentationError> {
    let (pattern, envelope) = decompose_with(clip, &SegmentConfig::default())?;
    Ok(ClipAnalysis { pattern, envelope, duration_s: clip.duration_s() })
}

fn clip_record(
    entry: &ManifestEntry,
    outcome: &Result<ClipAnalysis, CliError>,
    thresholds: &ReactionThresholds<f64>,
) -> Result<Value, CliError> {
    let mut rec = serde_json::Map::new();
    rec.insert("record".into(), json!("clip"));
    rec.extend(entry_fields(entry));
    match outcome {
        Ok(a) => {
            let p = &a.pattern;
            let reaction = classify_reaction(p.height_ratio, thresholds)?;
            let ulm = ulm_score(p, &UlmConfig::default(), a.duration_s)?;
            rec.insert("status".into(), json!("ok"));
            rec.insert("ism".into(), burst_json(&p.ism));
            rec.insert("fil".into(), p.fil.as_ref().map_or(Value::Null, burst_json));
            rec.insert("chirps_s".into(), json!(p.chirps_s));
            rec.insert("harf_level".into(), json!(p.harf_level));
            rec.insert("height_ratio".into(), json!(p.height_ratio));
            rec.insert("reaction".into(), json!(reaction.as_str()));
            rec.insert("ulm_score".into(), json!(ulm));
        }
        Err(e) => {
            rec.insert("status".into(), json!("error"));
            rec.insert("error".into(), json!(error_code(e)));
            rec.insert("message".into(), json!(e.to_string()));
        }
    }
    Ok(Value::Object(rec))
}

fn error_code(e: &CliError) -> &'static str {
    match e {
        CliError::Segmentation(s) => segmentation_code(s),
        CliError::Clip { source, .. } => crate::error::signal_code(source),
        other => other.code(),
    }
}

fn correlation_record(entries: &[ManifestEntry], outcomes: &[Result<ClipAnalysis, CliError>]) -> Value {
    let pairs: Vec<(f64, Polarity)> = entries
        .iter()
        .zip(outcomes)
        .filter_map(|(e, o)| {
            let ratio = o.as_ref().ok()?.pattern.height_ratio?;
            match e.context? {
                Context::Positive => Some((ratio, Polarity::Positive)),
                Context::Negative => Some((ratio, Polarity::Negative)),
                Context::Neutral => None,
            }
        })
        .collect();
    match correlate_height_reactions(&pairs) {
        Ok(r) => json!({
            "status": "ok",
            "n_positive": r.n_positive,
            "n_negative": r.n_negative,
            "mean_positive": r.mean_positive,
            "mean_negative": r.mean_negative,
            "threshold": r.threshold,
            "balanced_accuracy": r.balanced_accuracy,
            "auc": r.auc,
        }),
        Err(e) => json!({"status": "skipped", "reason": e.to_string()}),
    }
}

fn envelope_rows(a: &ClipAnalysis) -> Vec<Vec<String>> {
    let env = &a.envelope;
    let mut bursts = vec![0u8; env.len()];
    for (tag, b) in std::iter::once((1, &a.pattern.ism)).chain(a.pattern.fil.iter().map(|f| (2, f))) {
        bursts[b.first_frame..b.end_frame].iter_mut().for_each(|x| *x = tag);
    }
    env.values
        .iter()
        .enumerate()
        .map(|(t, v)| vec![(t as f64 * env.hop_s).to_string(), v.to_string(), bursts[t].to_string()])
        .collect()
}

/// Harf curve hung between the Ism offset and the Fil onset.
fn harf_curve(p: &VocalPattern<f64>) -> Result<Option<Vec<(f64, f64)>>, CliError> {
    let Some(fil) = &p.fil else { return Ok(None) };
    let a1 = Anchor::new(p.ism.offset_s, p.ism.peak);
    let a2 = Anchor::new(fil.onset_s, fil.peak);
    if !(a1.t < a2.t) {
        return Ok(None);
    }
    let fit = fit_sag(a1, a2, HARF_SLACK * chord_length(a1, a2), &SagFitOptions::default())?;
    Ok(Some(render_harf(&parabola_through(a1, a2, fit.sag)?, HARF_SAMPLES)?))
}

fn write_plots(dir: &Path, stem: &str, a: &ClipAnalysis, svg: bool) -> Result<(), CliError> {
    write_csv(&dir.join(format!("{stem}_envelope.csv")), "envelope", &["time_s", "envelope", "burst"], envelope_rows(a))?;
    let harf = harf_curve(&a.pattern)?;
    if let Some(curve) = &harf {
        let rows = curve.iter().map(|(t, y)| vec![t.to_string(), y.to_string()]);
        write_csv(&dir.join(format!("{stem}_harf.csv")), "harf", &["time_s", "height"], rows)?;
    }
    if svg {
        let env = &a.envelope;
        let pts: Vec<(f64, f64)> = env.values.iter().enumerate().map(|(t, &v)| (t as f64 * env.hop_s, v)).collect();
        let mut series = vec![Series { label: "envelope", points: &pts }];
        if let Some(curve) = &harf {
            series.push(Series { label: "harf", points: curve });
        }
        let spans: Vec<(f64, f64)> = std::iter::once(&a.pattern.ism)
            .chain(a.pattern.fil.iter())
            .map(|b| (b.onset_s, b.offset_s))
            .collect();
        write_text(&dir.join(format!("{stem}_envelope.svg")), &line_plot(stem, &series, &spans))?;
    }
    Ok(())
}

type Analyzed = (Vec<ManifestEntry>, Vec<Result<ClipAnalysis, CliError>>);

fn analyze_corpus(manifest_path: &Path) -> Result<Analyzed, CliError> {
    let manifest = parse_manifest(manifest_path)?;
    let outcomes = load_each(&manifest)
        .into_par_iter()
        .map(|clip| clip.and_then(|c| analyze_clip(&c).map_err(CliError::from)))
        .collect();
    Ok((manifest.entries, outcomes))
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let thresholds = ReactionThresholds { hi: args.hi, lo: args.lo };
    classify_reaction(None, &thresholds)?;
    let out = &args.corpus.out;
    ensure_dir(out)?;
    let (entries, outcomes) = analyze_corpus(&args.corpus.manifest)?;
    let mut records = Vec::with_capacity(entries.len() + 1);
    for (e, o) in entries.iter().zip(&outcomes) {
        records.push(clip_record(e, o, &thresholds)?);
    }
    let n_errors = outcomes.iter().filter(|o| o.is_err()).count();
    records.push(json!({
        "record": "corpus",
        "n_clips": entries.len(),
        "n_errors": n_errors,
        "correlation": correlation_record(&entries, &outcomes),
    }));
    let report = artifact(out, "report.jsonl");
    write_jsonl(&report, "analysis-report", json!({"hi": args.hi, "lo": args.lo}), &records)?;

    let plots = out.join("envelopes");
    ensure_dir(&plots)?;
    entries
        .par_iter()
        .zip(&outcomes)
        .enumerate()
        .filter_map(|(i, (e, o))| o.as_ref().ok().map(|a| write_plots(&plots, &clip_stem(i, &e.path), a, args.svg)))
        .collect::<Result<Vec<()>, _>>()?;
    println!("analyzed {} clips ({n_errors} errors); report {}", entries.len(), report.display());
    Ok(())
}

pub fn plot(args: &PlotArgs) -> Result<(), CliError> {
    let dir = args.corpus.out.join("plots");
    ensure_dir(&dir)?;
    let (entries, outcomes) = analyze_corpus(&args.corpus.manifest)?;
    let mut written = 0;
    for (i, (e, o)) in entries.iter().zip(&outcomes).enumerate() {
        match o {
            Ok(a) => {
                write_plots(&dir, &clip_stem(i, &e.path), a, args.svg)?;
                written += 1;
            }
            Err(err) => log::warn!("{}: {err}", e.path),
        }
    }
    println!("plotted {written} of {} clips into {}", entries.len(), dir.display());
    Ok(())
}
