//! File-backed profile store: one JSON file per profile under a directory,
//! mirrored in memory. Writes go through a single writer lock.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use jobmatch_core::CandidateProfile;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("profile store {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("profile file {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug)]
pub struct ProfileStore {
    dir: PathBuf,
    cache: RwLock<HashMap<String, CandidateProfile>>,
    writer: Mutex<()>,
}

impl ProfileStore {
    /// Opens `dir`, creating it if needed, and loads every `*.json` profile.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let mut cache = HashMap::new();
        for entry in std::fs::read_dir(&dir).map_err(io_err(&dir))? {
            let path = entry.map_err(io_err(&dir))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
            let profile: CandidateProfile =
                serde_json::from_str(&text).map_err(|source| StoreError::Json {
                    path: path.display().to_string(),
                    source,
                })?;
            cache.insert(profile.profile_id.clone(), profile);
        }
        Ok(ProfileStore {
            dir,
            cache: RwLock::new(cache),
            writer: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Assigns a fresh opaque id, persists the profile and returns it.
    pub fn create(&self, mut profile: CandidateProfile) -> Result<CandidateProfile, StoreError> {
        profile.profile_id = uuid::Uuid::new_v4().simple().to_string();
        self.put(&profile)?;
        Ok(profile)
    }

    /// Writes `profile` under its own id, replacing any previous version.
    pub fn put(&self, profile: &CandidateProfile) -> Result<(), StoreError> {
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let path = self
            .dir
            .join(format!("{}.json", file_stem(&profile.profile_id)));
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(profile).map_err(|source| StoreError::Json {
            path: path.display().to_string(),
            source,
        })?;
        std::fs::write(&tmp, text).map_err(io_err(&tmp))?;
        std::fs::rename(&tmp, &path).map_err(io_err(&path))?;
        self.cache
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(profile.profile_id.clone(), profile.clone());
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<CandidateProfile> {
        self.cache
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
    }

    pub fn len(&self) -> usize {
        self.cache.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Keeps caller-chosen ids from escaping the store directory.
fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
