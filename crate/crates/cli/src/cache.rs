//! On-disk cache of solved Bethe root sets.
//!
//! One JSON file per key. The key covers `(N, M, c, ξ, sector, κ̄)`, hashed
//! over the exact 17-digit decimal text of every complex number, so any change
//! in a stored digit gives a new key. Loaded entries are re-validated with one
//! Newton step before use; the stored roots themselves are returned unchanged,
//! which keeps cold and warm runs bit-identical.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use log::warn;
use qism_core::algebra::{Twist, VacuumRatios};
use qism_core::bethe::{self, BetheError, BetheRootSet, SolverOptions};
use qism_core::C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::complex;

pub const SCHEMA_VERSION: u32 = 1;
/// Environment variable overriding the cache directory.
pub const CACHE_DIR_ENV: &str = "QISM_CACHE_DIR";
pub const DEFAULT_CACHE_DIR: &str = ".qism-cache";

/// Identity of one cached solve.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheKey {
    pub rank: usize,
    pub sites: usize,
    pub coupling: String,
    /// SHA-256 of the inhomogeneities' decimal text.
    pub xi_hash: String,
    pub counts: Vec<usize>,
    pub twist: Vec<String>,
}

impl CacheKey {
    pub fn new(ratios: &VacuumRatios, twist: &Twist, counts: &[usize]) -> Self {
        let xi: Vec<String> = ratios.inhomogeneities().iter().map(|z| complex::format(*z)).collect();
        Self {
            rank: ratios.rank(),
            sites: xi.len(),
            coupling: complex::format(ratios.coupling().value()),
            xi_hash: hex::encode(Sha256::digest(xi.join(",").as_bytes())),
            counts: counts.to_vec(),
            twist: twist.values().iter().map(|z| complex::format(*z)).collect(),
        }
    }

    /// File stem: hash of the whole key.
    pub fn digest(&self) -> String {
        let text = format!(
            "v{SCHEMA_VERSION};N={};M={};c={};xi={};sector={:?};kappa={}",
            self.rank,
            self.sites,
            self.coupling,
            self.xi_hash,
            self.counts,
            self.twist.join(",")
        );
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredRootSet {
    /// Roots per level as `a+bi` text.
    pub levels: Vec<Vec<String>>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootCacheEntry {
    pub schema: u32,
    pub key: CacheKey,
    pub seed: u64,
    pub n_starts: Option<usize>,
    pub roots: Vec<StoredRootSet>,
}

impl RootCacheEntry {
    pub fn new(key: CacheKey, opts: &SolverOptions, sets: &[BetheRootSet]) -> Self {
        let roots = sets
            .iter()
            .map(|s| StoredRootSet {
                levels: s.levels().iter().map(|l| l.iter().map(|z| complex::format(*z)).collect()).collect(),
                residual: s.residual(),
            })
            .collect();
        Self { schema: SCHEMA_VERSION, key, seed: opts.seed, n_starts: opts.n_starts, roots }
    }

    /// Stored roots as numbers; `None` if any literal fails to parse.
    pub fn levels(&self) -> Option<Vec<Vec<Vec<C64>>>> {
        self.roots
            .iter()
            .map(|s| s.levels.iter().map(|l| l.iter().map(|t| complex::parse(t)).collect()).collect())
            .collect()
    }
}

/// Counters for cache behaviour and solver work.
#[derive(Debug, Default)]
pub struct CacheStats {
    pub hits: AtomicUsize,
    pub misses: AtomicUsize,
    /// Multistart solves actually performed.
    pub solver_calls: AtomicUsize,
    pub stale: AtomicUsize,
    pub corrupt: AtomicUsize,
    pub rejected: AtomicUsize,
}

impl CacheStats {
    pub fn snapshot(&self) -> [usize; 6] {
        [&self.hits, &self.misses, &self.solver_calls, &self.stale, &self.corrupt, &self.rejected].map(|a| a.load(Ordering::Relaxed))
    }
}

/// Root cache with an in-memory layer and an optional directory.
#[derive(Debug, Default)]
pub struct RootCache {
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, Vec<BetheRootSet>>>,
    pub stats: CacheStats,
}

impl RootCache {
    /// Memory-only cache.
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Self { dir: Some(dir.into()), ..Self::default() }
    }

    /// Directory from the environment, then `configured`, then the default.
    pub fn resolve_dir(configured: Option<&Path>) -> PathBuf {
        if let Some(v) = std::env::var_os(CACHE_DIR_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(v);
        }
        configured.map_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR), Path::to_path_buf)
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn path(&self, key: &CacheKey) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{}.json", key.digest())))
    }

    /// Reads and re-validates an entry. Stale, corrupt or non-validating
    /// entries are reported and treated as misses.
    pub fn load(&self, key: &CacheKey, ratios: &VacuumRatios, twist: &Twist, tol_root: f64) -> Option<Vec<BetheRootSet>> {
        let path = self.path(key)?;
        let text = fs::read_to_string(&path).ok()?;
        let entry: RootCacheEntry = match serde_json::from_str::<serde_json::Value>(&text) {
            Ok(v) if v.get("schema").and_then(|s| s.as_u64()) != Some(SCHEMA_VERSION as u64) => {
                warn!("ignoring {}: schema {:?}, expected {SCHEMA_VERSION}", path.display(), v.get("schema"));
                self.stats.stale.fetch_add(1, Ordering::Relaxed);
                return None;
            }
            Ok(v) => match serde_json::from_value(v) {
                Ok(e) => e,
                Err(e) => return self.corrupt(&path, &e.to_string()),
            },
            Err(e) => return self.corrupt(&path, &e.to_string()),
        };
        if &entry.key != key {
            return self.corrupt(&path, "key mismatch");
        }
        let Some(levels) = entry.levels() else {
            return self.corrupt(&path, "unparseable root literal");
        };
        let mut out = Vec::with_capacity(levels.len());
        for l in levels {
            // the Newton step only checks; the stored digits are what we use
            if bethe::revalidate(&l, ratios, twist, tol_root).is_err() {
                warn!("cached roots in {} fail re-validation; recomputing", path.display());
                self.stats.rejected.fetch_add(1, Ordering::Relaxed);
                return None;
            }
            out.push(BetheRootSet::new(l, ratios, twist, tol_root).ok()?);
        }
        Some(out)
    }

    fn corrupt<T>(&self, path: &Path, why: &str) -> Option<T> {
        warn!("ignoring corrupt cache entry {}: {why}", path.display());
        self.stats.corrupt.fetch_add(1, Ordering::Relaxed);
        None
    }

    pub fn store(&self, entry: &RootCacheEntry) -> std::io::Result<()> {
        let Some(path) = self.path(&entry.key) else {
            return Ok(());
        };
        if let Some(d) = path.parent() {
            fs::create_dir_all(d)?;
        }
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(entry)?)?;
        fs::rename(tmp, path)
    }

    /// Cached roots for a sector, solving (and storing) on a miss.
    pub fn roots(&self, counts: &[usize], ratios: &VacuumRatios, twist: &Twist, opts: &SolverOptions) -> Result<Vec<BetheRootSet>, BetheError> {
        let key = CacheKey::new(ratios, twist, counts);
        let id = key.digest();
        if let Some(v) = self.memory.lock().unwrap().get(&id) {
            return Ok(v.clone());
        }
        if let Some(v) = self.load(&key, ratios, twist, opts.tol_root) {
            self.stats.hits.fetch_add(1, Ordering::Relaxed);
            self.memory.lock().unwrap().insert(id, v.clone());
            return Ok(v);
        }
        self.stats.misses.fetch_add(1, Ordering::Relaxed);
        self.stats.solver_calls.fetch_add(1, Ordering::Relaxed);
        let sets = bethe::solve_sector(counts, ratios, twist, opts)?;
        // keep exactly what a later load would return
        let sets = match self.stored_form(&key, opts, &sets, ratios, twist) {
            Some(s) => s,
            None => sets,
        };
        if let Err(e) = self.store(&RootCacheEntry::new(key, opts, &sets)) {
            warn!("cannot write root cache: {e}");
        }
        self.memory.lock().unwrap().insert(id, sets.clone());
        Ok(sets)
    }

    fn stored_form(&self, key: &CacheKey, opts: &SolverOptions, sets: &[BetheRootSet], ratios: &VacuumRatios, twist: &Twist) -> Option<Vec<BetheRootSet>> {
        let entry = RootCacheEntry::new(key.clone(), opts, sets);
        entry.levels()?.into_iter().map(|l| BetheRootSet::new(l, ratios, twist, opts.tol_root).ok()).collect()
    }

    /// Entries on disk, skipping unreadable files.
    pub fn entries(&self) -> Vec<(PathBuf, Result<RootCacheEntry, String>)> {
        let Some(dir) = &self.dir else {
            return Vec::new();
        };
        let Ok(rd) = fs::read_dir(dir) else {
            return Vec::new();
        };
        let mut paths: Vec<PathBuf> = rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "json")).collect();
        paths.sort();
        paths
            .into_iter()
            .map(|p| {
                let e = fs::read_to_string(&p).map_err(|e| e.to_string()).and_then(|t| serde_json::from_str(&t).map_err(|e| e.to_string()));
                (p, e)
            })
            .collect()
    }

    /// Deletes every entry file; returns how many were removed.
    pub fn clean(&self) -> std::io::Result<usize> {
        let Some(dir) = &self.dir else {
            return Ok(0);
        };
        if !dir.exists() {
            return Ok(0);
        }
        let mut n = 0;
        for e in fs::read_dir(dir)? {
            let p = e?.path();
            let name = p.file_name().and_then(|s| s.to_str()).unwrap_or("");
            if name.ends_with(".json") || name.ends_with(".json.tmp") {
                fs::remove_file(p)?;
                n += 1;
            }
        }
        self.memory.lock().unwrap().clear();
        Ok(n)
    }
}
