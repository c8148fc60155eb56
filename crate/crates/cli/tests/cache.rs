use std::sync::atomic::Ordering;

use qism_cli::cache::{CacheKey, RootCache, RootCacheEntry, SCHEMA_VERSION};
use qism_core::algebra::{Coupling, Twist, VacuumRatios};
use qism_core::bethe::SolverOptions;
use qism_core::model::random_inhomogeneities;
use qism_core::C64;

fn ratios(xi: Vec<C64>) -> VacuumRatios {
    VacuumRatios::new(3, Coupling::default(), xi).unwrap()
}

fn opts() -> SolverOptions {
    SolverOptions { seed: 7, ..SolverOptions::default() }
}

#[test]
fn round_trip_reproduces_every_digit() {
    let dir = tempfile::tempdir().unwrap();
    let r = ratios(random_inhomogeneities(4, Coupling::default(), 7));
    let tw = Twist::untwisted(3);
    let first = RootCache::at(dir.path()).roots(&[2, 1], &r, &tw, &opts()).unwrap();
    assert!(!first.is_empty());
    let key = CacheKey::new(&r, &tw, &[2, 1]);
    let loaded = RootCache::at(dir.path()).load(&key, &r, &tw, opts().tol_root).unwrap();
    assert_eq!(loaded.len(), first.len());
    for (a, b) in loaded.iter().zip(&first) {
        assert_eq!(a.levels(), b.levels());
    }
}

#[test]
fn hits_skip_the_solver() {
    let dir = tempfile::tempdir().unwrap();
    let r = ratios(random_inhomogeneities(4, Coupling::default(), 7));
    let tw = Twist::untwisted(3);
    let cold = RootCache::at(dir.path());
    cold.roots(&[1, 0], &r, &tw, &opts()).unwrap();
    cold.roots(&[2, 0], &r, &tw, &opts()).unwrap();
    assert_eq!(cold.stats.solver_calls.load(Ordering::Relaxed), 2);
    let warm = RootCache::at(dir.path());
    warm.roots(&[1, 0], &r, &tw, &opts()).unwrap();
    warm.roots(&[2, 0], &r, &tw, &opts()).unwrap();
    warm.roots(&[2, 0], &r, &tw, &opts()).unwrap();
    assert_eq!(warm.stats.solver_calls.load(Ordering::Relaxed), 0);
    assert_eq!(warm.stats.hits.load(Ordering::Relaxed), 2);
}

#[test]
fn tiny_perturbations_change_the_key() {
    let xi = random_inhomogeneities(4, Coupling::default(), 7);
    let mut moved = xi.clone();
    moved[2].re += 1e-12;
    let tw = Twist::untwisted(3);
    let a = CacheKey::new(&ratios(xi.clone()), &tw, &[1, 0]);
    let b = CacheKey::new(&ratios(moved), &tw, &[1, 0]);
    assert_ne!(a.xi_hash, b.xi_hash);
    assert_ne!(a.digest(), b.digest());
    let twisted = CacheKey::new(&ratios(xi.clone()), &Twist::from_exponents(&[C64::new(0.0, 0.0), C64::new(1e-12, 0.0), C64::new(0.0, 0.0)]), &[1, 0]);
    assert_ne!(a.digest(), twisted.digest());
    assert_ne!(a.digest(), CacheKey::new(&ratios(xi), &tw, &[2, 0]).digest());
}

fn entry_path(dir: &std::path::Path, key: &CacheKey) -> std::path::PathBuf {
    dir.join(format!("{}.json", key.digest()))
}

#[test]
fn stale_corrupt_and_tampered_entries_are_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let r = ratios(random_inhomogeneities(4, Coupling::default(), 7));
    let tw = Twist::untwisted(3);
    let key = CacheKey::new(&r, &tw, &[1, 0]);
    let good = RootCache::at(dir.path()).roots(&[1, 0], &r, &tw, &opts()).unwrap();
    let path = entry_path(dir.path(), &key);
    let text = std::fs::read_to_string(&path).unwrap();

    let mut entry: RootCacheEntry = serde_json::from_str(&text).unwrap();
    entry.schema = SCHEMA_VERSION + 1;
    std::fs::write(&path, serde_json::to_string(&entry).unwrap()).unwrap();
    let c = RootCache::at(dir.path());
    assert_eq!(c.roots(&[1, 0], &r, &tw, &opts()).unwrap(), good);
    assert_eq!((c.stats.stale.load(Ordering::Relaxed), c.stats.solver_calls.load(Ordering::Relaxed)), (1, 1));

    std::fs::write(&path, "{ not json").unwrap();
    let c = RootCache::at(dir.path());
    assert_eq!(c.roots(&[1, 0], &r, &tw, &opts()).unwrap(), good);
    assert_eq!(c.stats.corrupt.load(Ordering::Relaxed), 1);

    // a root moved off shell fails the Newton re-validation
    let mut entry: RootCacheEntry = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    entry.roots[0].levels[0][0] = "1.0e-1+1.0e-1i".into();
    std::fs::write(&path, serde_json::to_string(&entry).unwrap()).unwrap();
    let c = RootCache::at(dir.path());
    assert_eq!(c.roots(&[1, 0], &r, &tw, &opts()).unwrap(), good);
    assert_eq!(c.stats.rejected.load(Ordering::Relaxed), 1);
}

#[test]
fn clean_removes_entries() {
    let dir = tempfile::tempdir().unwrap();
    let r = ratios(random_inhomogeneities(3, Coupling::default(), 2));
    let c = RootCache::at(dir.path());
    c.roots(&[1, 0], &r, &Twist::untwisted(3), &opts()).unwrap();
    assert_eq!(c.entries().len(), 1);
    assert_eq!(c.clean().unwrap(), 1);
    assert!(c.entries().is_empty());
}
