//! Read-only checkpoint cache shared by all requests.

use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::http::StatusCode;
use sketchforge_core::seqmodel::load_checkpoint;
use sketchforge_core::Model32;

use crate::api::ApiError;

#[derive(Debug, Default)]
pub struct CheckpointStore {
    dir: Option<PathBuf>,
    cache: RwLock<HashMap<String, Arc<Model32>>>,
}

impl CheckpointStore {
    /// Loads `<dir>/<name>.ckpt` (or `<dir>/<name>`) on first use.
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir, cache: RwLock::default() }
    }

    /// Registers an in-memory model under `name`.
    pub fn insert(&self, name: impl Into<String>, model: Model32) {
        self.cache.write().expect("cache lock").insert(name.into(), Arc::new(model));
    }

    pub fn get(&self, name: &str) -> Result<Arc<Model32>, ApiError> {
        if let Some(m) = self.cache.read().expect("cache lock").get(name) {
            return Ok(m.clone());
        }
        let unknown = || ApiError::new(StatusCode::NOT_FOUND, "unknown_checkpoint", format!("no checkpoint named `{name}`"));
        let valid = !name.is_empty() && !name.starts_with('.') && name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
        let dir = self.dir.as_ref().filter(|_| valid).ok_or_else(unknown)?;
        let path = [dir.join(format!("{name}.ckpt")), dir.join(name)].into_iter().find(|p| p.is_file()).ok_or_else(unknown)?;
        let file = File::open(&path).map_err(|_| unknown())?;
        let model = Arc::new(load_checkpoint::<f32>(BufReader::new(file))?);
        log::info!("loaded checkpoint {}", path.display());
        Ok(self.cache.write().expect("cache lock").entry(name.to_string()).or_insert(model).clone())
    }
}
