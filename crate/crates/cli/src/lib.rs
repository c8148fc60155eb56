//! Configuration, orchestration, root caching and reporting for the
//! verification suites of `qism-core`.

pub mod cache;
pub mod complex;
pub mod config;
pub mod report;
pub mod suites;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use qism_core::formfactor::VerificationRecord;

pub use cache::RootCache;
pub use config::{ConfigError, RunConfig, Suite};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass = 0,
    IdentityFailure = 1,
    ConfigError = 2,
    InternalError = 3,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Everything a run produced.
#[derive(Debug)]
pub struct Outcome {
    pub records: Vec<VerificationRecord>,
    pub timings: Vec<(Suite, Duration)>,
}

impl Outcome {
    pub fn status(&self) -> Status {
        if report::all_pass(&self.records) {
            Status::Pass
        } else {
            Status::IdentityFailure
        }
    }

    pub fn summary(&self) -> Vec<report::SummaryRow> {
        let rows: Vec<report::ReportRecord> = self.records.iter().map(Into::into).collect();
        report::summarize(&rows)
    }
}

/// The cache a configuration asks for.
pub fn open_cache(cfg: &RunConfig) -> RootCache {
    if cfg.use_cache {
        RootCache::at(RootCache::resolve_dir(cfg.cache_dir.as_deref()))
    } else {
        RootCache::in_memory()
    }
}

/// Runs every configured suite on a pool of `cfg.threads` workers.
pub fn run(cfg: &RunConfig, cache: &RootCache) -> anyhow::Result<Outcome> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build()?;
    let (records, timings) = pool.install(|| suites::run_all(cfg, cache))?;
    Ok(Outcome { records, timings })
}

/// Paths of the files written by [`write_report`].
#[derive(Debug, Clone)]
pub struct ReportPaths {
    pub records: PathBuf,
    pub summary: PathBuf,
    pub config: PathBuf,
}

/// Writes `records.ndjson`, `summary.txt` and the effective `config.txt`.
pub fn write_report(cfg: &RunConfig, outcome: &Outcome, dir: &Path) -> std::io::Result<ReportPaths> {
    fs::create_dir_all(dir)?;
    let paths = ReportPaths { records: dir.join("records.ndjson"), summary: dir.join("summary.txt"), config: dir.join("config.txt") };
    let mut buf = Vec::new();
    report::write_records(&mut buf, &outcome.records)?;
    fs::write(&paths.records, buf)?;
    fs::write(&paths.summary, report::format_summary(&outcome.summary()))?;
    fs::write(&paths.config, cfg.to_text())?;
    Ok(paths)
}
