//! The `qism` binary: verbs, exit codes and report files.

use std::path::Path;
use std::process::{Command, Output};

use qism_cli::report;

fn qism(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qism")).args(args).env("QISM_CACHE_DIR", cache).output().unwrap()
}

#[test]
fn run_writes_records_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rep");
    let o = qism(&dir.path().join("cache"), &["run", "--set", "suites=bethe,thm41", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = report::read_records(&std::fs::read_to_string(out.join("records.ndjson")).unwrap()).unwrap();
    assert!(recs.iter().any(|r| r.suite == "thm41") && recs.iter().all(|r| r.pass || r.informational));
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("partial zero-mode form factor"));
    // the aggregates follow from the records alone
    assert_eq!(summary, report::format_summary(&report::summarize(&recs)));
}

#[test]
fn warm_cache_reproduces_the_records() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let args = |name: &str| vec!["run".to_string(), "--set".into(), "suites=thm42,lemma51".into(), "--out".into(), dir.path().join(name).display().to_string()];
    for name in ["a", "b"] {
        let a = args(name);
        let o = qism(&cache, &a.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(o.status.code(), Some(0));
    }
    let read = |n: &str| std::fs::read(dir.path().join(n).join("records.ndjson")).unwrap();
    assert_eq!(read("a"), read("b"));
    let listing = qism(&cache, &["show-cache"]);
    assert!(String::from_utf8_lossy(&listing.stdout).contains("schema 1"));
    let cleaned = qism(&cache, &["clean-cache"]);
    assert!(String::from_utf8_lossy(&cleaned.stdout).starts_with("removed "));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let out = dir.path().join("rep");
    let out = out.to_str().unwrap();
    assert_eq!(qism(&cache, &["run", "--set", "sites=9", "--set", "split=4", "--out", out]).status.code(), Some(2));
    assert_eq!(qism(&cache, &["run", "--set", "bogus=1", "--out", out]).status.code(), Some(2));
    // an impossible tolerance turns passing checks into identity failures
    let o = qism(&cache, &["run", "--set", "suites=factorization", "--set", "tol_factorization=1e-300", "--out", out]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn inspection_verbs() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let o = qism(&cache, &["list-sectors", "--set", "sites=2", "--set", "split=1"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(text.lines().count(), 6);
    let o = qism(&cache, &["solve-roots", "--sector", "1,0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("sector [1, 0]"));
}
