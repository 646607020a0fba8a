//! Ingestion of a directory of sketch JSON files: filtering, deduplication,
//! and a seeded-hash train/val/test split.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::sketch::{dedup_key, normalize_sketch, RawSketch, Sketch};

use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Self::Train),
            "val" => Some(Self::Val),
            "test" => Some(Self::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub allowed_kinds: Vec<String>,
    pub min_primitives: usize,
    pub max_primitives: usize,
    pub require_constraints: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            allowed_kinds: ["arc", "circle", "line", "point"].map(String::from).to_vec(),
            min_primitives: 6,
            max_primitives: 16,
            require_constraints: true,
        }
    }
}

impl FilterConfig {
    /// Reason the sketch is dropped, if it is.
    pub fn reject(&self, raw: &RawSketch) -> Option<String> {
        if let Some(p) = raw.primitives.iter().find(|p| !self.allowed_kinds.contains(&p.kind)) {
            return Some(format!("primitive kind `{}` not allowed", p.kind));
        }
        let n = raw.primitives.len();
        if n < self.min_primitives {
            return Some(format!("{n} primitives < {}", self.min_primitives));
        }
        if n > self.max_primitives {
            return Some(format!("{n} primitives > {}", self.max_primitives));
        }
        if self.require_constraints && raw.constraints.is_empty() {
            return Some("no constraints".into());
        }
        None
    }
}

/// Fractions for train and validation; test takes the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self { train: 0.925, val: 0.025 }
    }
}

/// Uniform value in [0, 1) from SHA-256 of the seed and id.
pub fn split_hash(id: &str, seed: u64) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(id.as_bytes());
    let d = h.finalize();
    let v = u64::from_be_bytes(d[..8].try_into().expect("8 bytes"));
    (v >> 11) as f64 / (1u64 << 53) as f64
}

/// Split of one sketch id; a pure function of `(id, seed)`.
pub fn assign_split(id: &str, seed: u64, f: &SplitFractions) -> Split {
    let u = split_hash(id, seed);
    if u < f.train {
        Split::Train
    } else if u < f.train + f.val {
        Split::Val
    } else {
        Split::Test
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    pub split: Split,
    pub dedup_key: String,
    pub primitives: usize,
    pub constraints: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dropped {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileError {
    pub path: PathBuf,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub filter: FilterConfig,
    pub fractions: SplitFractions,
    pub entries: Vec<ManifestEntry>,
    pub dropped: Vec<Dropped>,
    pub errors: Vec<FileError>,
}

impl DatasetManifest {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn counts(&self) -> [usize; 3] {
        [Split::Train, Split::Val, Split::Test].map(|s| self.split(s).count())
    }

    /// Loads and normalizes the sketches of one split, in manifest order.
    pub fn load(&self, split: Split) -> Result<Vec<Sketch<f64>>, PipelineError> {
        self.split(split).map(|e| load_normalized(&e.path)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Manifest(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IngestOptions {
    pub seed: u64,
    pub filter: FilterConfig,
    pub fractions: SplitFractions,
}

fn load_normalized(path: &Path) -> Result<Sketch<f64>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    let s = Sketch::<f64>::from_json(&text)?;
    Ok(normalize_sketch(&s)?.0)
}

enum Parsed {
    Kept(ManifestEntry),
    Dropped(Dropped),
    Failed(FileError),
}

fn ingest_file(path: &Path, opts: &IngestOptions) -> Parsed {
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let fail = |message: String| Parsed::Failed(FileError { path: path.to_path_buf(), message });
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(e.to_string()),
    };
    let raw: RawSketch = match serde_json::from_str(&text) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string()),
    };
    if let Some(reason) = opts.filter.reject(&raw) {
        return Parsed::Dropped(Dropped { id, reason });
    }
    let s = match Sketch::<f64>::try_from(&raw) {
        Ok(s) => s,
        Err(e) => return fail(e.to_string()),
    };
    match dedup_key(&s) {
        Ok(k) => Parsed::Kept(ManifestEntry {
            split: assign_split(&id, opts.seed, &opts.fractions),
            id,
            path: path.to_path_buf(),
            dedup_key: k.to_string(),
            primitives: s.primitives().len(),
            constraints: s.constraints().len(),
        }),
        Err(e) => fail(e.to_string()),
    }
}

/// Scans `dir` for `*.json` sketches (sorted by file name), filters,
/// dedups keeping the first occurrence, and assigns splits. Unreadable or
/// malformed files are collected in `errors`.
pub fn ingest_and_filter(dir: &Path, opts: &IngestOptions) -> Result<DatasetManifest, PipelineError> {
    let io = |e: std::io::Error| PipelineError::Io { path: dir.to_path_buf(), message: e.to_string() };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let parsed: Vec<Parsed> = paths.par_iter().map(|p| ingest_file(p, opts)).collect();

    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    let mut dropped = Vec::new();
    let mut errors = Vec::new();
    for p in parsed {
        match p {
            Parsed::Kept(e) => {
                if seen.insert(e.dedup_key.clone()) {
                    entries.push(e);
                } else {
                    dropped.push(Dropped { id: e.id, reason: format!("duplicate of key {}", &e.dedup_key[..12]) });
                }
            }
            Parsed::Dropped(d) => dropped.push(d),
            Parsed::Failed(f) => errors.push(f),
        }
    }
    Ok(DatasetManifest {
        seed: opts.seed,
        filter: opts.filter.clone(),
        fractions: opts.fractions,
        entries,
        dropped,
        errors,
    })
}

/// Writes sketches as `{prefix}{index:05}.json` into `dir`.
pub fn write_corpus(dir: &Path, prefix: &str, sketches: &[Sketch<f64>]) -> Result<Vec<PathBuf>, PipelineError> {
    fs::create_dir_all(dir).map_err(|e| PipelineError::Io { path: dir.to_path_buf(), message: e.to_string() })?;
    sketches
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let path = dir.join(format!("{prefix}{i:05}.json"));
            fs::write(&path, s.to_json()).map_err(|e| PipelineError::Io { path: path.clone(), message: e.to_string() })?;
            Ok(path)
        })
        .collect()
}
