//! On-disk cache of null panels, one JSON file per configuration.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use longmem::mc::{null_panel, EstimatorConfig, McConfig, NullPanel, PrefilterMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, StageExt};

/// Bumped whenever the meaning of a stored panel changes.
const STORE_FORMAT: u32 = 1;

/// Everything a null panel depends on. A panel holds all three estimator
/// variants, so the variant is chosen after lookup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreKey {
    pub format: u32,
    pub series_length: usize,
    pub replications: usize,
    pub master_seed: u64,
    pub prefilter: PrefilterMode,
    pub estimator: EstimatorConfig,
}

impl StoreKey {
    pub fn of(cfg: &McConfig) -> Self {
        Self {
            format: STORE_FORMAT,
            series_length: cfg.series_length,
            replications: cfg.replications,
            master_seed: cfg.master_seed,
            prefilter: cfg.prefilter.clone(),
            estimator: cfg.estimator,
        }
    }

    /// SHA-256 of the key's canonical JSON, hex encoded.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("key serialises");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct Entry {
    key: StoreKey,
    panel: NullPanel,
}

#[derive(Debug, Clone)]
pub struct CriticalValuesStore {
    dir: PathBuf,
}

impl CriticalValuesStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, CliError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| CliError::io(dir.display(), e))?;
        Ok(Self { dir })
    }

    fn path(&self, key: &StoreKey) -> PathBuf {
        self.dir.join(format!("{}.json", key.digest()))
    }

    pub fn get(&self, key: &StoreKey) -> Result<Option<NullPanel>, CliError> {
        let path = self.path(key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(CliError::io(path.display(), e)),
        };
        let entry: Entry = serde_json::from_slice(&bytes).map_err(|source| CliError::Json {
            path: path.display().to_string(),
            source,
        })?;
        if entry.key != *key {
            return Err(CliError::Usage(format!(
                "{} holds a panel for a different configuration",
                path.display()
            )));
        }
        Ok(Some(entry.panel))
    }

    /// Writes via a temporary file in the same directory and renames it into place.
    pub fn put(&self, key: &StoreKey, panel: &NullPanel) -> Result<(), CliError> {
        let path = self.path(key);
        let entry = Entry {
            key: key.clone(),
            panel: panel.clone(),
        };
        let bytes = serde_json::to_vec_pretty(&entry).expect("panel serialises");
        let write = || -> std::io::Result<()> {
            let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
            tmp.write_all(&bytes)?;
            tmp.as_file().sync_all()?;
            tmp.persist(&path).map_err(|e| e.error)?;
            Ok(())
        };
        write().map_err(|e| CliError::io(path.display(), e))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

/// Looks the panel up in `store` (if any), computing and storing it on a miss.
pub fn fetch_panel(
    store: Option<&CriticalValuesStore>,
    cfg: &McConfig,
) -> Result<NullPanel, CliError> {
    let key = StoreKey::of(cfg);
    if let Some(s) = store {
        if let Some(p) = s.get(&key)? {
            log::info!(
                "critical values {} loaded from {}",
                key.digest(),
                s.dir().display()
            );
            return Ok(p);
        }
    }
    let panel = null_panel(cfg).stage("critical values")?;
    if let Some(s) = store {
        s.put(&key, &panel)?;
    }
    Ok(panel)
}
