//! Content-addressed store of quantification summaries.
//!
//! Enabled by `NLQ_CACHE_DIR`. The key is the SHA-256 of the state's
//! 17-digit serialisation together with the settings and every option that
//! can change the result. Unreadable or mismatched entries are recomputed.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use nlq_core::extension::{quantify, QuantifyOptions, SettingsCount};
use nlq_core::states::DensityMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::report::QuantifySummary;
use crate::statefile::canonical_matrix;
use crate::{CliError, CliResult};

pub const CACHE_ENV: &str = "NLQ_CACHE_DIR";

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    summary: QuantifySummary,
}

#[derive(Clone, Debug)]
pub struct ResultsCache {
    dir: PathBuf,
}

pub fn cache_key(rho: &DensityMatrix, settings: SettingsCount, opts: &QuantifyOptions) -> String {
    let mut h = Sha256::new();
    h.update(canonical_matrix(rho).as_bytes());
    h.update(format!("settings={settings}\n").as_bytes());
    h.update(format!("mode={}\n", opts.mode).as_bytes());
    h.update(serde_json::to_string(opts).expect("options serialise").as_bytes());
    hex::encode(h.finalize())
}

impl ResultsCache {
    pub fn new(dir: impl Into<PathBuf>) -> CliResult<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self { dir })
    }

    /// The cache named by `NLQ_CACHE_DIR`, if set and non-empty.
    pub fn from_env() -> CliResult<Option<Self>> {
        match std::env::var_os(CACHE_ENV) {
            Some(d) if !d.is_empty() => Ok(Some(Self::new(d)?)),
            _ => Ok(None),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Stored summary for `key`; corrupt entries produce a warning and a miss.
    pub fn get(&self, key: &str) -> Option<QuantifySummary> {
        let path = self.path(key);
        let text = std::fs::read_to_string(&path).ok()?;
        match serde_json::from_str::<Entry>(&text) {
            Ok(e) if e.key == key => Some(e.summary),
            Ok(_) => {
                eprintln!(
                    "warning: cache entry {} has a mismatched key; recomputing",
                    path.display()
                );
                None
            }
            Err(err) => {
                eprintln!(
                    "warning: cache entry {} is corrupt ({err}); recomputing",
                    path.display()
                );
                None
            }
        }
    }

    pub fn put(&self, key: &str, summary: &QuantifySummary) -> CliResult<()> {
        let entry = Entry {
            key: key.to_string(),
            summary: summary.clone(),
        };
        let text = serde_json::to_string_pretty(&entry).expect("entry serialises");
        let path = self.path(key);
        let tmp = self.dir.join(format!(".{key}.{}.tmp", std::process::id()));
        std::fs::write(&tmp, text).map_err(|e| CliError::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| CliError::io(&path, e))
    }
}

/// Quantifies ρ, consulting the cache first. Returns the summary and whether
/// it came from the cache. The lock is held only around cache reads and
/// writes.
pub fn quantify_cached(
    rho: &DensityMatrix,
    settings: SettingsCount,
    opts: &QuantifyOptions,
    cache: Option<&Mutex<ResultsCache>>,
) -> CliResult<(QuantifySummary, bool)> {
    let key = cache.map(|_| cache_key(rho, settings, opts));
    if let (Some(c), Some(k)) = (cache, &key) {
        let hit = c.lock().expect("cache lock").get(k);
        if let Some(s) = hit {
            return Ok((s, true));
        }
    }
    let result = quantify(rho, settings, opts)?;
    let summary = QuantifySummary::new(rho, &result);
    if let (Some(c), Some(k)) = (cache, &key) {
        if let Err(e) = c.lock().expect("cache lock").put(k, &summary) {
            eprintln!("warning: could not write cache entry: {e}");
        }
    }
    Ok((summary, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nlq_core::extension::ExtensionMode;
    use nlq_core::states::{bell, mems};

    fn s22() -> SettingsCount {
        SettingsCount::new(2, 2).unwrap()
    }

    #[test]
    fn key_depends_on_every_input() {
        let base = QuantifyOptions::default();
        let k = cache_key(&bell(), s22(), &base);
        assert_eq!(k, cache_key(&bell(), s22(), &base));
        assert_ne!(k, cache_key(&mems(0.5).unwrap(), s22(), &base));
        assert_ne!(k, cache_key(&bell(), SettingsCount::new(3, 3).unwrap(), &base));
        let mut tol = base.clone();
        tol.solver.gap_tol = 1e-7;
        assert_ne!(k, cache_key(&bell(), s22(), &tol));
        let mut ppt = base.clone();
        ppt.mode = ExtensionMode::PptQuasi;
        assert_ne!(k, cache_key(&bell(), s22(), &ppt));
        let mut bis = base;
        bis.bisect = true;
        assert_ne!(k, cache_key(&bell(), s22(), &bis));
    }

    #[test]
    fn hit_returns_identical_summary_and_corruption_recomputes() {
        let dir = std::env::temp_dir().join(format!("nlq-cache-unit-{}", std::process::id()));
        let cache = Mutex::new(ResultsCache::new(&dir).unwrap());
        let opts = QuantifyOptions::default();
        let (first, hit1) = quantify_cached(&bell(), s22(), &opts, Some(&cache)).unwrap();
        let (second, hit2) = quantify_cached(&bell(), s22(), &opts, Some(&cache)).unwrap();
        assert!(!hit1 && hit2);
        assert_eq!(first, second);

        let key = cache_key(&bell(), s22(), &opts);
        std::fs::write(dir.join(format!("{key}.json")), "{not json").unwrap();
        let (third, hit3) = quantify_cached(&bell(), s22(), &opts, Some(&cache)).unwrap();
        assert!(!hit3);
        assert_eq!(third.lambda_star, first.lambda_star);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
