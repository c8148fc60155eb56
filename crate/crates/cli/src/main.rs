use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use qism_cli::config::{self, RunConfig};
use qism_cli::{cache, complex, open_cache, report, run, write_report, Status};
use qism_core::algebra::Twist;
use qism_core::bethe::{self, SolverOptions};
use qism_core::hilbert;

#[derive(Parser)]
#[command(name = "qism", version, about = "Bethe ansatz and form-factor verification for composite GL(N) chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Flat `key = value` configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set sites=3`.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, config::ConfigError> {
        let overrides = self.set.iter().map(|s| config::parse_override(s)).collect::<Result<Vec<_>, _>>()?;
        RunConfig::load(self.config.as_deref(), &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured suites and write the report.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Report directory (overrides `out_dir`).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// List the weight sectors of the configured chain.
    ListSectors {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Solve the Bethe equations for the configured sectors.
    SolveRoots {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Sector counts, e.g. `2,1`; defaults to the configured list.
        #[arg(long)]
        sector: Option<String>,
    },
    /// List cached root sets.
    ShowCache {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Delete cached root sets.
    CleanCache {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg_args = match &cli.command {
        Command::Run { cfg, .. } | Command::ListSectors { cfg } | Command::SolveRoots { cfg, .. } | Command::ShowCache { cfg } | Command::CleanCache { cfg } => cfg,
    };
    let cfg = match cfg_args.load() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(Status::ConfigError.code() as u8);
        }
    };
    let status = match dispatch(&cli.command, cfg) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            Status::InternalError
        }
    };
    ExitCode::from(status.code() as u8)
}

fn dispatch(command: &Command, mut cfg: RunConfig) -> anyhow::Result<Status> {
    match command {
        Command::Run { out, .. } => {
            if let Some(o) = out {
                cfg.out_dir = o.clone();
            }
            let cache = open_cache(&cfg);
            let outcome = run(&cfg, &cache)?;
            let paths = write_report(&cfg, &outcome, &cfg.out_dir).context("writing report")?;
            print!("{}", report::format_summary(&outcome.summary()));
            for (suite, t) in &outcome.timings {
                eprintln!("{:<14} {:>8.2?}", suite.name(), t);
            }
            let [hits, misses, solves, ..] = cache.stats.snapshot();
            eprintln!("root cache: {hits} hits, {misses} misses, {solves} solver calls");
            println!("records: {}", paths.records.display());
            Ok(outcome.status())
        }
        Command::ListSectors { .. } => {
            for s in hilbert::enumerate_sectors(cfg.rank, cfg.sites, cfg.max_dim)? {
                let counts = bethe::counts_from_occupations(s.occupations());
                println!("counts {:?}  occupations {:?}  dimension {}", counts, s.occupations(), s.dimension());
            }
            Ok(Status::Pass)
        }
        Command::SolveRoots { sector, .. } => {
            let sectors = match sector {
                Some(s) => vec![s.split(',').map(|x| x.trim().parse()).collect::<Result<Vec<usize>, _>>().context("parsing --sector")?],
                None => cfg.sectors.clone(),
            };
            let spec = cfg.spec()?;
            let ratios = spec.ratios();
            let twist = Twist::untwisted(cfg.rank);
            let cache = open_cache(&cfg);
            let opts = SolverOptions { n_starts: cfg.n_starts, tol_root: cfg.tol.root, seed: cfg.seed, ..SolverOptions::default() };
            for counts in sectors {
                bethe::check_sector(&counts, cfg.rank, cfg.sites)?;
                let sets = cache.roots(&counts, &ratios, &twist, &opts)?;
                println!("sector {counts:?}: {} admissible root sets", sets.len());
                for (k, s) in sets.iter().enumerate() {
                    let levels: Vec<String> = s.levels().iter().map(|l| format!("[{}]", l.iter().map(|z| complex::format(*z)).collect::<Vec<_>>().join(", "))).collect();
                    println!("  #{k} residual {:.2e}  {}", s.residual(), levels.join(" "));
                }
            }
            Ok(Status::Pass)
        }
        Command::ShowCache { .. } => {
            let dir = cache::RootCache::resolve_dir(cfg.cache_dir.as_deref());
            let cache = cache::RootCache::at(&dir);
            println!("cache directory {}", dir.display());
            for (path, entry) in cache.entries() {
                let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                match entry {
                    Ok(e) => println!(
                        "{name}  schema {}  N={} M={} sector {:?}  {} root sets  seed {}",
                        e.schema,
                        e.key.rank,
                        e.key.sites,
                        e.key.counts,
                        e.roots.len(),
                        e.seed
                    ),
                    Err(err) => println!("{name}  unreadable: {err}"),
                }
            }
            Ok(Status::Pass)
        }
        Command::CleanCache { .. } => {
            let dir = cache::RootCache::resolve_dir(cfg.cache_dir.as_deref());
            let n = cache::RootCache::at(&dir).clean()?;
            println!("removed {n} entries from {}", dir.display());
            Ok(Status::Pass)
        }
    }
}
