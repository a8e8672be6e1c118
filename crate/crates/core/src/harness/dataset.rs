//! Directories of WAV files as train/validation/test splits.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::config::DataConfig;
use super::resample::resample_signal;
use super::synth::speech_like;
use super::wav::{load_wav, write_wav, SampleFormat};
use crate::error::{Error, Result};
use crate::transforms::{Signal, StftConfig, StftOperator};
use crate::unfolded::Example;

/// One loaded file. `name` is the file name, which also seeds the clip's
/// random initial phase.
#[derive(Clone, Debug, PartialEq)]
pub struct Clip {
    pub name: String,
    pub signal: Signal,
}

#[derive(Debug)]
pub struct SplitLoad {
    pub clips: Vec<Clip>,
    pub failures: Vec<(String, Error)>,
}

/// `.wav` files in `dir`, sorted by file name.
pub fn list_wavs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_wav = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if is_wav && path.is_file() {
            out.push(path);
        }
    }
    out.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(out)
}

fn load_clip(path: &Path, cfg: &DataConfig) -> Result<Clip> {
    let crop = if cfg.crop_seconds > 0.0 {
        Some(cfg.crop_seconds)
    } else {
        None
    };
    let mut signal = load_wav(path, None)?.signal;
    if signal.sample_rate != cfg.sample_rate {
        if !cfg.resample {
            return Err(Error::Config(format!(
                "{} is sampled at {} Hz, configured rate is {} Hz (set data.resample to convert)",
                path.display(),
                signal.sample_rate,
                cfg.sample_rate
            )));
        }
        signal = resample_signal(&signal, cfg.sample_rate)?;
    }
    if let Some(secs) = crop {
        let keep = (secs * cfg.sample_rate as f64).round() as usize;
        if keep > 0 && keep < signal.len() {
            signal.samples.truncate(keep);
        }
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Clip { name, signal })
}

/// Loads up to `limit` files from `dir`. Unreadable files are collected in
/// `failures` instead of aborting.
pub fn load_split(dir: &Path, limit: usize, cfg: &DataConfig) -> Result<SplitLoad> {
    let mut clips = Vec::new();
    let mut failures = Vec::new();
    for path in list_wavs(dir)?.into_iter().take(limit) {
        match load_clip(&path, cfg) {
            Ok(c) => clips.push(c),
            Err(e) => failures.push((path.display().to_string(), e)),
        }
    }
    Ok(SplitLoad { clips, failures })
}

/// Builds training examples, sharing one operator per distinct length.
pub fn examples(clips: &[Clip], stft: StftConfig) -> Result<Vec<Example>> {
    let mut ops: BTreeMap<usize, Arc<StftOperator>> = BTreeMap::new();
    clips
        .iter()
        .map(|c| {
            let op = match ops.get(&c.signal.len()) {
                Some(op) => op.clone(),
                None => {
                    let op = Arc::new(StftOperator::new(stft, c.signal.len())?);
                    ops.insert(c.signal.len(), op.clone());
                    op
                }
            };
            Example::with_operator(c.name.clone(), c.signal.clone(), op)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorpusSpec {
    pub seed: u64,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub seconds: f64,
    pub sample_rate: u32,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            seed: 0,
            train: 40,
            val: 4,
            test: 10,
            seconds: 1.0,
            sample_rate: 16000,
        }
    }
}

/// Writes a synthetic speech-like corpus as `dir/{train,val,test}/*.wav`
/// (32-bit float).
pub fn write_corpus(dir: &Path, spec: &CorpusSpec) -> Result<()> {
    for (split, n) in [
        ("train", spec.train),
        ("val", spec.val),
        ("test", spec.test),
    ] {
        let sub = dir.join(split);
        std::fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
        for i in 0..n {
            let name = format!("{split}_{i:04}.wav");
            let sig = speech_like(
                spec.seed,
                &format!("{split}/{name}"),
                spec.sample_rate,
                spec.seconds,
            )?;
            write_wav(&sub.join(&name), &sig, SampleFormat::Float32)?;
        }
    }
    Ok(())
}
