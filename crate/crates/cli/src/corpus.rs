use std::path::{Path, PathBuf};

use rayon::prelude::*;
use ulma_core::signal::{load_wav, AudioClip};

use crate::error::CliError;
use crate::manifest::Manifest;

/// Loads every clip in manifest order; failures are kept per clip.
pub fn load_each(manifest: &Manifest) -> Vec<Result<AudioClip<f64>, CliError>> {
    manifest
        .entries
        .par_iter()
        .map(|e| load_clip(manifest, &e.path))
        .collect()
}

pub fn load_clip(manifest: &Manifest, path: &str) -> Result<AudioClip<f64>, CliError> {
    load_wav(manifest.resolve(path))
        .map(|c| c.with_source_id(path))
        .map_err(|source| CliError::Clip { path: path.to_string(), source })
}

/// Loads every clip, failing on the first unreadable one.
pub fn load_all(manifest: &Manifest) -> Result<Vec<AudioClip<f64>>, CliError> {
    if manifest.entries.is_empty() {
        return Err(CliError::InvalidInput("manifest lists no clips".into()));
    }
    load_each(manifest).into_iter().collect()
}

/// The single sample rate shared by all clips.
pub fn common_rate(clips: &[AudioClip<f64>]) -> Result<u32, CliError> {
    let rate = clips.first().map(AudioClip::sample_rate).ok_or_else(|| CliError::InvalidInput("no clips".into()))?;
    match clips.iter().find(|c| c.sample_rate() != rate) {
        Some(c) => Err(CliError::InvalidInput(format!(
            "{} is {} Hz but {} is {rate} Hz; models need one rate",
            c.source_id(),
            c.sample_rate(),
            clips[0].source_id()
        ))),
        None => Ok(rate),
    }
}

/// `0007_name` for the clip at manifest position 7.
pub fn clip_stem(index: usize, path: &str) -> String {
    let stem = Path::new(path).file_stem().and_then(|s| s.to_str()).unwrap_or("clip");
    format!("{index:04}_{stem}")
}

pub fn artifact(out: &Path, name: &str) -> PathBuf {
    out.join(name)
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
