//! Versioned on-disk formats: JSON codebooks, checkpoints and heads, JSONL
//! record streams and CSV tables. Every file starts with a version marker and
//! loaders refuse other versions.

use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use ulma_core::linalg::Matrix;
use ulma_core::model::{EncoderConfig, EncoderModel, EncoderParams, FineTuneHead, HeadKind, Linear, ParamSet};
use ulma_core::units::{Codebook, Stage};

use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn bad(path: &Path, reason: impl Into<String>) -> CliError {
    CliError::BadArtifact { path: path.display().to_string(), reason: reason.into() }
}

fn check_version(path: &Path, value: &Value) -> Result<(), CliError> {
    match value.get("version") {
        Some(v) if v.as_u64() == Some(FORMAT_VERSION as u64) => Ok(()),
        found => Err(CliError::VersionMismatch {
            path: path.display().to_string(),
            expected: FORMAT_VERSION,
            found: found.map_or("none".into(), Value::to_string),
        }),
    }
}

fn check_kind(path: &Path, value: &Value, kind: &str) -> Result<(), CliError> {
    match value.get("kind").and_then(Value::as_str) {
        Some(k) if k == kind => Ok(()),
        other => Err(bad(path, format!("expected kind {kind:?}, found {other:?}"))),
    }
}

/// Parses a versioned JSON document of the given kind.
fn load_document<D: DeserializeOwned>(path: &Path, kind: &str) -> Result<D, CliError> {
    let value: Value = serde_json::from_str(&read_text(path)?).map_err(|e| bad(path, e.to_string()))?;
    check_version(path, &value)?;
    check_kind(path, &value, kind)?;
    serde_json::from_value(value).map_err(|e| bad(path, e.to_string()))
}

fn save_document<S: Serialize>(path: &Path, doc: &S, pretty: bool) -> Result<(), CliError> {
    let mut text = if pretty { serde_json::to_string_pretty(doc) } else { serde_json::to_string(doc) }
        .expect("artifact serializes");
    text.push('\n');
    write_text(path, &text)
}

#[derive(Serialize, Deserialize)]
struct CodebookFile {
    version: u32,
    kind: String,
    stage: u8,
    k: usize,
    dim: usize,
    seed: u64,
    centroids: Vec<f64>,
}

pub fn save_codebook(path: &Path, cb: &Codebook<f64>) -> Result<(), CliError> {
    let doc = CodebookFile {
        version: FORMAT_VERSION,
        kind: "codebook".into(),
        stage: cb.stage.number(),
        k: cb.k(),
        dim: cb.dim(),
        seed: cb.seed,
        centroids: cb.centroids.as_slice().to_vec(),
    };
    save_document(path, &doc, true)
}

pub fn load_codebook(path: &Path) -> Result<Codebook<f64>, CliError> {
    let doc: CodebookFile = load_document(path, "codebook")?;
    let stage = Stage::from_number(doc.stage).ok_or_else(|| bad(path, format!("unknown stage {}", doc.stage)))?;
    if doc.k == 0 || doc.centroids.len() != doc.k * doc.dim {
        return Err(bad(path, "centroid array does not match k × dim"));
    }
    Ok(Codebook { centroids: Matrix::from_vec(doc.k, doc.dim, doc.centroids), stage, seed: doc.seed })
}

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    shape: [usize; 2],
    data: Vec<f64>,
}

fn tensor_records<P: ParamSet<f64>>(params: &P) -> Vec<TensorRecord> {
    params
        .tensors()
        .into_iter()
        .map(|(name, m)| TensorRecord { name, shape: [m.rows(), m.cols()], data: m.as_slice().to_vec() })
        .collect()
}

/// Overwrites every tensor of `params` from `records`, which must match by name and shape.
fn fill_tensors<P: ParamSet<f64>>(path: &Path, params: &mut P, records: Vec<TensorRecord>) -> Result<(), CliError> {
    let mut records: std::collections::BTreeMap<String, TensorRecord> =
        records.into_iter().map(|r| (r.name.clone(), r)).collect();
    for (name, m) in params.tensors_mut() {
        let r = records.remove(&name).ok_or_else(|| bad(path, format!("missing tensor {name}")))?;
        if r.shape != [m.rows(), m.cols()] || r.data.len() != m.rows() * m.cols() {
            return Err(bad(path, format!("tensor {name} has shape {:?}, expected {:?}", r.shape, m.shape())));
        }
        if r.data.iter().any(|v| !v.is_finite()) {
            return Err(bad(path, format!("tensor {name} holds non-finite values")));
        }
        m.as_mut_slice().copy_from_slice(&r.data);
    }
    if let Some(extra) = records.keys().next() {
        return Err(bad(path, format!("unexpected tensor {extra}")));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    kind: String,
    seed: u64,
    config: EncoderConfig,
    tensors: Vec<TensorRecord>,
}

pub fn save_checkpoint(path: &Path, model: &EncoderModel<f64>) -> Result<(), CliError> {
    let doc = CheckpointFile {
        version: FORMAT_VERSION,
        kind: "encoder".into(),
        seed: model.seed,
        config: model.config.clone(),
        tensors: tensor_records(&model.params),
    };
    save_document(path, &doc, false)
}

pub fn load_checkpoint(path: &Path) -> Result<EncoderModel<f64>, CliError> {
    let doc: CheckpointFile = load_document(path, "encoder")?;
    let template = EncoderModel::<f64>::new(doc.config.clone(), doc.seed)?;
    let mut params: EncoderParams<f64> = template.params;
    fill_tensors(path, &mut params, doc.tensors)?;
    Ok(EncoderModel::from_params(doc.config, params, doc.seed)?)
}

#[derive(Serialize, Deserialize)]
struct HeadFile {
    version: u32,
    kind: String,
    classes: Vec<String>,
    tensors: Vec<TensorRecord>,
}

fn head_kind_name(kind: HeadKind) -> &'static str {
    match kind {
        HeadKind::Classify => "classify-head",
        HeadKind::Detect => "detect-head",
    }
}

pub fn save_head(path: &Path, head: &FineTuneHead<f64>, classes: &[String]) -> Result<(), CliError> {
    let doc = HeadFile {
        version: FORMAT_VERSION,
        kind: head_kind_name(head.kind).into(),
        classes: classes.to_vec(),
        tensors: tensor_records(head),
    };
    save_document(path, &doc, false)
}

pub fn load_head(path: &Path, kind: HeadKind, d_model: usize) -> Result<(FineTuneHead<f64>, Vec<String>), CliError> {
    let doc: HeadFile = load_document(path, head_kind_name(kind))?;
    let mut head = FineTuneHead::new(d_model, doc.classes.len(), kind);
    fill_tensors(path, &mut head, doc.tensors)?;
    Ok((head, doc.classes))
}

pub fn save_reward_head(path: &Path, head: &Linear<f64>) -> Result<(), CliError> {
    let doc = HeadFile {
        version: FORMAT_VERSION,
        kind: "reward-head".into(),
        classes: vec!["reward".into()],
        tensors: tensor_records(head),
    };
    save_document(path, &doc, false)
}

pub fn load_reward_head(path: &Path, d_model: usize) -> Result<Linear<f64>, CliError> {
    let doc: HeadFile = load_document(path, "reward-head")?;
    let mut head = Linear::zeros(d_model, 1);
    fill_tensors(path, &mut head, doc.tensors)?;
    Ok(head)
}

/// JSON document with the version header fields prepended.
pub fn save_summary(path: &Path, kind: &str, body: Value) -> Result<(), CliError> {
    let mut doc = Map::new();
    doc.insert("version".into(), json!(FORMAT_VERSION));
    doc.insert("kind".into(), json!(kind));
    if let Value::Object(fields) = body {
        doc.extend(fields);
    }
    save_document(path, &Value::Object(doc), true)
}

/// Header line `{"version":1,"kind":...}` plus `extra`, then one record per line.
pub fn write_jsonl(path: &Path, kind: &str, extra: Value, records: &[Value]) -> Result<(), CliError> {
    let mut header = Map::new();
    header.insert("version".into(), json!(FORMAT_VERSION));
    header.insert("kind".into(), json!(kind));
    if let Value::Object(fields) = extra {
        header.extend(fields);
    }
    let mut text = serde_json::to_string(&Value::Object(header)).expect("header serializes");
    text.push('\n');
    for r in records {
        text.push_str(&serde_json::to_string(r).expect("record serializes"));
        text.push('\n');
    }
    write_text(path, &text)
}

/// Returns the header and the records of a JSONL artifact.
pub fn read_jsonl(path: &Path, kind: &str) -> Result<(Value, Vec<Value>), CliError> {
    let text = read_text(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Value = lines
        .next()
        .ok_or_else(|| bad(path, "empty file"))
        .and_then(|l| serde_json::from_str(l).map_err(|e| bad(path, e.to_string())))?;
    check_version(path, &header)?;
    check_kind(path, &header, kind)?;
    let records = lines
        .map(|l| serde_json::from_str(l).map_err(|e| bad(path, e.to_string())))
        .collect::<Result<_, _>>()?;
    Ok((header, records))
}

/// CSV table preceded by a `# ulma-<kind> v1` line.
pub fn write_csv(path: &Path, kind: &str, columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut text = format!("# ulma-{kind} v{FORMAT_VERSION}\n{}\n", columns.join(","));
    for row in rows {
        writeln!(text, "{}", row.join(",")).expect("string write");
    }
    write_text(path, &text)
}

/// Checks the version line of a CSV artifact and returns header and rows.
pub fn read_csv(path: &Path, kind: &str) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let text = read_text(path)?;
    let mut lines = text.lines();
    let first = lines.next().unwrap_or_default();
    let prefix = format!("# ulma-{kind} v");
    match first.strip_prefix(&prefix) {
        Some(v) if v == FORMAT_VERSION.to_string() => {}
        Some(v) => {
            return Err(CliError::VersionMismatch {
                path: path.display().to_string(),
                expected: FORMAT_VERSION,
                found: v.to_string(),
            })
        }
        None => return Err(bad(path, format!("missing {prefix}N header"))),
    }
    let split = |l: &str| l.split(',').map(str::to_string).collect::<Vec<_>>();
    let header = lines.next().map(split).unwrap_or_default();
    Ok((header, lines.map(split).collect()))
}
