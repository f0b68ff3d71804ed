//! Line-delimited JSON corpus manifests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

const KNOWN_KEYS: [&str; 5] = ["path", "label", "events", "context", "prefer_over"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventSpan {
    pub onset_s: f64,
    pub offset_s: f64,
    #[serde(default)]
    pub tags: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Context {
    Positive,
    Negative,
    Neutral,
}

/// One manifest line. Paths are kept as written; see [`Manifest::resolve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<EventSpan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<Context>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefer_over: Option<String>,
}

impl ManifestEntry {
    pub fn new(path: impl Into<String>) -> Self {
        Self { path: path.into(), label: None, events: Vec::new(), context: None, prefer_over: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    /// Directory relative paths are resolved against.
    pub base: PathBuf,
}

impl Manifest {
    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }
}

pub fn parse_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let entries = parse_manifest_str(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Manifest { entries, base })
}

/// Blank lines are skipped; line numbers in errors are 1-based.
pub fn parse_manifest_str(text: &str) -> Result<Vec<ManifestEntry>, CliError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| CliError::MalformedLine { line, reason };
        let value: Value = serde_json::from_str(raw).map_err(|e| malformed(e.to_string()))?;
        let Value::Object(map) = &value else {
            return Err(malformed("expected a JSON object".into()));
        };
        match map.get("path") {
            Some(Value::String(p)) if !p.is_empty() => {}
            Some(Value::String(_)) | None | Some(Value::Null) => return Err(CliError::MissingPath(line)),
            Some(_) => return Err(malformed("\"path\" must be a string".into())),
        }
        for key in map.keys().filter(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            log::warn!("manifest line {line}: ignoring unknown field {key:?}");
        }
        let entry: ManifestEntry = serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;
        if let Some(ev) = entry.events.iter().find(|ev| !(ev.onset_s < ev.offset_s)) {
            return Err(malformed(format!("event onset {} is not before offset {}", ev.onset_s, ev.offset_s)));
        }
        entries.push(entry);
    }
    Ok(entries)
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<(), CliError> {
    let mut text = String::new();
    for e in entries {
        text.push_str(&serde_json::to_string(e).expect("manifest entries serialize"));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_single() {
        assert!(parse_manifest_str("").unwrap().is_empty());
        let one = parse_manifest_str(r#"{"path": "a.wav", "label": "cat", "context": "positive"}"#).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].label.as_deref(), Some("cat"));
        assert_eq!(one[0].context, Some(Context::Positive));
    }

    #[test]
    fn missing_path_reports_line() {
        let text = "{\"path\": \"a.wav\"}\n\n{\"label\": \"x\"}\n";
        assert!(matches!(parse_manifest_str(text), Err(CliError::MissingPath(3))));
        assert!(matches!(parse_manifest_str(r#"{"path": ""}"#), Err(CliError::MissingPath(1))));
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(parse_manifest_str("{\"path\": \"a\"}\nnot json"), Err(CliError::MalformedLine { line: 2, .. })));
        assert!(matches!(parse_manifest_str("[1, 2]"), Err(CliError::MalformedLine { line: 1, .. })));
        let bad_event = r#"{"path": "a", "events": [{"onset_s": 0.5, "offset_s": 0.2}]}"#;
        assert!(matches!(parse_manifest_str(bad_event), Err(CliError::MalformedLine { line: 1, .. })));
        let bad_context = r#"{"path": "a", "context": "happy"}"#;
        assert!(matches!(parse_manifest_str(bad_context), Err(CliError::MalformedLine { line: 1, .. })));
    }

    #[test]
    fn unknown_fields_are_ignored() {
        let e = parse_manifest_str(r#"{"path": "a.wav", "species": "felis", "prefer_over": "b.wav"}"#).unwrap();
        assert_eq!(e[0].prefer_over.as_deref(), Some("b.wav"));
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        let mut e = ManifestEntry::new("x/y.wav");
        e.events.push(EventSpan { onset_s: 0.1, offset_s: 0.2, tags: vec!["purr".into()] });
        write_manifest(&path, &[e.clone(), ManifestEntry::new("z.wav")]).unwrap();
        let m = parse_manifest(&path).unwrap();
        assert_eq!(m.entries, vec![e, ManifestEntry::new("z.wav")]);
        assert_eq!(m.resolve("x/y.wav"), dir.path().join("x/y.wav"));
    }
}
