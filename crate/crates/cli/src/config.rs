//! Flat `key = value` run configuration.
//!
//! Lines starting with `#` are comments. Complex numbers are written `a+bi`,
//! lists are comma separated and sector lists use `;` between sectors, e.g.
//! `sectors = 0,0; 1,0; 2,1`. Every key has a default, so an empty file is
//! a valid configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qism_core::algebra::{Coupling, Twist};
use qism_core::bethe;
use qism_core::hilbert::DEFAULT_MAX_DIMENSION;
use qism_core::model::{self, ModelSpec, DENSE_OPERATOR_LIMIT};
use qism_core::C64;
use thiserror::Error;

use crate::complex;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("key {key:?}: cannot parse {value:?} as {kind}")]
    Value { key: String, value: String, kind: &'static str },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

type Result<T> = std::result::Result<T, ConfigError>;

/// Verification suites, in run order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Rtt,
    Factorization,
    Bethe,
    Thm41,
    Thm42,
    Lemma51,
    Local,
    Commutators,
    Morphism,
    GlN,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Rtt,
        Suite::Factorization,
        Suite::Bethe,
        Suite::Thm41,
        Suite::Thm42,
        Suite::Lemma51,
        Suite::Local,
        Suite::Commutators,
        Suite::Morphism,
        Suite::GlN,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Rtt => "rtt",
            Suite::Factorization => "factorization",
            Suite::Bethe => "bethe",
            Suite::Thm41 => "thm41",
            Suite::Thm42 => "thm42",
            Suite::Lemma51 => "lemma51",
            Suite::Local => "local",
            Suite::Commutators => "commutators",
            Suite::Morphism => "morphism",
            Suite::GlN => "glN",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name().eq_ignore_ascii_case(name))
    }

    /// Whether the suite builds dense many-body operators.
    fn dense(self) -> bool {
        matches!(self, Suite::Rtt | Suite::Factorization | Suite::Commutators)
    }
}

/// Where the inhomogeneities come from.
#[derive(Debug, Clone, PartialEq)]
pub enum XiMode {
    Seeded,
    Explicit(Vec<C64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub root: f64,
    pub matching: f64,
    pub rtt: f64,
    pub factorization: f64,
    pub thm41: f64,
    pub thm42: f64,
    pub kappa: f64,
    pub sum_rule: f64,
    pub lemma51: f64,
    pub lemma51_degenerate: f64,
    pub local_offdiag: f64,
    pub local_diag: f64,
    pub telescoping: f64,
    pub commutator: f64,
    pub singular: f64,
    pub zero_mode_diag: f64,
    pub morphism: f64,
    pub orthogonality: f64,
    pub gln: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            root: bethe::TOL_ROOT,
            matching: qism_core::spectral::TOL_MATCH,
            rtt: 1e-12,
            factorization: 1e-12,
            thm41: 1e-8,
            thm42: 1e-6,
            kappa: 1e-5,
            sum_rule: 1e-8,
            lemma51: 1e-8,
            lemma51_degenerate: 1e-12,
            local_offdiag: 1e-8,
            local_diag: 1e-6,
            telescoping: 1e-12,
            commutator: 1e-13,
            singular: 1e-9,
            zero_mode_diag: 1e-12,
            morphism: 1e-8,
            orthogonality: 1e-8,
            gln: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub rank: usize,
    pub sites: usize,
    pub split: usize,
    pub coupling: C64,
    pub xi: XiMode,
    pub seed: u64,
    pub max_dim: usize,
    /// Bethe counts `(a_1, …, a_{N−1})` per sector.
    pub sectors: Vec<Vec<usize>>,
    pub suites: Vec<Suite>,
    pub tol: Tolerances,
    /// Multistart count per sector; `None` means `50 · Σ a_k`.
    pub n_starts: Option<usize>,
    /// Transfer-matrix sample points per sector.
    pub tau_samples: usize,
    /// Leading samples used for matching; the rest are held out.
    pub match_samples: usize,
    pub z_samples: usize,
    pub rtt_pairs: usize,
    pub lemma_sector: Vec<usize>,
    pub lemma_betas: usize,
    pub beta_radius: f64,
    /// Ranks exercised by the `glN` suite, with their own chain sizes.
    pub gln_ranks: Vec<usize>,
    pub gl4_sites: usize,
    pub gl4_split: usize,
    pub out_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
    pub use_cache: bool,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            rank: 3,
            sites: 4,
            split: 2,
            coupling: C64::new(1.0, 0.0),
            xi: XiMode::Seeded,
            seed: 7,
            max_dim: DEFAULT_MAX_DIMENSION,
            sectors: default_sectors(3),
            suites: Suite::ALL.to_vec(),
            tol: Tolerances::default(),
            n_starts: None,
            tau_samples: 6,
            match_samples: 3,
            z_samples: 5,
            rtt_pairs: 10,
            lemma_sector: vec![1, 1],
            lemma_betas: 5,
            beta_radius: 0.3,
            gln_ranks: vec![2, 4],
            gl4_sites: 3,
            gl4_split: 1,
            out_dir: PathBuf::from("qism-report"),
            cache_dir: None,
            use_cache: true,
            threads: 0,
        }
    }
}

/// Non-increasing counts with `a_1 ≤ 2` and `Σ a_k ≤ 3`.
pub fn default_sectors(rank: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 1..rank {
        out = out
            .into_iter()
            .flat_map(|p| {
                let top = p.last().copied().unwrap_or(2);
                (0..=top).map(move |v| [p.clone(), vec![v]].concat())
            })
            .collect();
    }
    out.retain(|c| c.iter().sum::<usize>() <= 3);
    out.sort();
    out
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, kind: &'static str) -> Result<T> {
    value.trim().parse().map_err(|_| ConfigError::Value { key: key.into(), value: value.into(), kind })
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str, kind: &'static str) -> Result<Vec<T>> {
    value.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_value(key, s, kind)).collect()
}

fn parse_complex(key: &str, value: &str) -> Result<C64> {
    complex::parse(value).ok_or_else(|| ConfigError::Value { key: key.into(), value: value.into(), kind: "complex a+bi" })
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(ConfigError::Value { key: key.into(), value: value.into(), kind: "bool" }),
    }
}

fn parse_sectors(key: &str, value: &str) -> Result<Vec<Vec<usize>>> {
    value.split(';').filter(|s| !s.trim().is_empty()).map(|s| parse_list(key, s, "sector counts")).collect()
}

fn fmt_list<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Splits `key = value` text into pairs, keeping the last value of a key.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax { line: n + 1, text: raw.into() })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// `key=value` from the command line.
pub fn parse_override(text: &str) -> Result<(String, String)> {
    let (k, v) = text.split_once('=').ok_or_else(|| ConfigError::Syntax { line: 0, text: text.into() })?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

impl RunConfig {
    /// Reads `path` (if given), applies `overrides` and validates.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut pairs = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io { path: p.into(), source })?;
                parse_pairs(&text)?
            }
            None => BTreeMap::new(),
        };
        for (k, v) in overrides {
            pairs.insert(k.clone(), v.clone());
        }
        Self::from_pairs(&pairs)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_pairs(&parse_pairs(text)?)
    }

    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let mut c = RunConfig::default();
        // the rank decides the default sectors, so read it first
        if let Some(v) = pairs.get("rank") {
            c.rank = parse_value("rank", v, "integer")?;
            c.sectors = default_sectors(c.rank);
            c.lemma_sector = if c.rank == 3 { vec![1, 1] } else { [vec![1], vec![0; c.rank.saturating_sub(2)]].concat() };
        }
        for (k, v) in pairs {
            let t = &mut c.tol;
            match k.as_str() {
                "rank" => {}
                "sites" => c.sites = parse_value(k, v, "integer")?,
                "split" => c.split = parse_value(k, v, "integer")?,
                "coupling" => c.coupling = parse_complex(k, v)?,
                "xi" => {
                    c.xi = if v.trim() == "seeded" {
                        XiMode::Seeded
                    } else {
                        XiMode::Explicit(v.split(',').map(|s| parse_complex(k, s)).collect::<Result<_>>()?)
                    }
                }
                "seed" => c.seed = parse_value(k, v, "integer")?,
                "max_dim" => c.max_dim = parse_value(k, v, "integer")?,
                "sectors" => c.sectors = parse_sectors(k, v)?,
                "suites" => {
                    c.suites = if v.trim() == "all" {
                        Suite::ALL.to_vec()
                    } else {
                        v.split(',')
                            .map(|s| Suite::from_name(s.trim()).ok_or_else(|| ConfigError::Value { key: k.clone(), value: s.into(), kind: "suite name" }))
                            .collect::<Result<_>>()?
                    };
                    c.suites.sort();
                    c.suites.dedup();
                }
                "n_starts" => c.n_starts = if v == "auto" { None } else { Some(parse_value(k, v, "integer")?) },
                "tau_samples" => c.tau_samples = parse_value(k, v, "integer")?,
                "match_samples" => c.match_samples = parse_value(k, v, "integer")?,
                "z_samples" => c.z_samples = parse_value(k, v, "integer")?,
                "rtt_pairs" => c.rtt_pairs = parse_value(k, v, "integer")?,
                "lemma_sector" => c.lemma_sector = parse_list(k, v, "sector counts")?,
                "lemma_betas" => c.lemma_betas = parse_value(k, v, "integer")?,
                "beta_radius" => c.beta_radius = parse_value(k, v, "number")?,
                "gln_ranks" => c.gln_ranks = parse_list(k, v, "integer")?,
                "gl4_sites" => c.gl4_sites = parse_value(k, v, "integer")?,
                "gl4_split" => c.gl4_split = parse_value(k, v, "integer")?,
                "out_dir" => c.out_dir = PathBuf::from(v),
                "cache_dir" => c.cache_dir = Some(PathBuf::from(v)),
                "use_cache" => c.use_cache = parse_bool(k, v)?,
                "threads" => c.threads = parse_value(k, v, "integer")?,
                "tol_root" => t.root = parse_value(k, v, "number")?,
                "tol_match" => t.matching = parse_value(k, v, "number")?,
                "tol_rtt" => t.rtt = parse_value(k, v, "number")?,
                "tol_factorization" => t.factorization = parse_value(k, v, "number")?,
                "tol_thm41" => t.thm41 = parse_value(k, v, "number")?,
                "tol_thm42" => t.thm42 = parse_value(k, v, "number")?,
                "tol_kappa" => t.kappa = parse_value(k, v, "number")?,
                "tol_sum_rule" => t.sum_rule = parse_value(k, v, "number")?,
                "tol_lemma51" => t.lemma51 = parse_value(k, v, "number")?,
                "tol_lemma51_degenerate" => t.lemma51_degenerate = parse_value(k, v, "number")?,
                "tol_local_offdiag" => t.local_offdiag = parse_value(k, v, "number")?,
                "tol_local_diag" => t.local_diag = parse_value(k, v, "number")?,
                "tol_telescoping" => t.telescoping = parse_value(k, v, "number")?,
                "tol_commutator" => t.commutator = parse_value(k, v, "number")?,
                "tol_singular" => t.singular = parse_value(k, v, "number")?,
                "tol_zero_mode_diag" => t.zero_mode_diag = parse_value(k, v, "number")?,
                "tol_morphism" => t.morphism = parse_value(k, v, "number")?,
                "tol_orthogonality" => t.orthogonality = parse_value(k, v, "number")?,
                "tol_gln" => t.gln = parse_value(k, v, "number")?,
                _ => return Err(ConfigError::UnknownKey(k.clone())),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn inhomogeneities(&self) -> Vec<C64> {
        match &self.xi {
            XiMode::Seeded => model::random_inhomogeneities(self.sites, self.coupling(), self.seed),
            XiMode::Explicit(v) => v.clone(),
        }
    }

    pub fn coupling(&self) -> Coupling {
        Coupling::new(self.coupling).unwrap_or_default()
    }

    pub fn spec(&self) -> Result<ModelSpec> {
        self.spec_for(self.rank, self.inhomogeneities(), self.split)
    }

    /// Chain with the configured coupling and dimension cap.
    pub fn spec_for(&self, rank: usize, xi: Vec<C64>, split: usize) -> Result<ModelSpec> {
        let coupling = Coupling::new(self.coupling).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        ModelSpec::with_max_dim(rank, coupling, xi, split, Twist::untwisted(rank), self.max_dim).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Module preconditions, checked before any computation.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.rank < 2 {
            return bad(format!("rank {} < 2", self.rank));
        }
        if self.sites == 0 {
            return bad("sites must be positive".into());
        }
        if let XiMode::Explicit(v) = &self.xi {
            if v.len() != self.sites {
                return bad(format!("{} inhomogeneities for {} sites", v.len(), self.sites));
            }
        }
        let spec = self.spec()?;
        spec.check_composite().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.suites.iter().any(|s| s.dense()) && spec.dim() > DENSE_OPERATOR_LIMIT {
            return bad(format!(
                "dense suites need N^M ≤ {DENSE_OPERATOR_LIMIT}, got {}^{} = {}",
                self.rank,
                self.sites,
                spec.dim()
            ));
        }
        for s in &self.sectors {
            bethe::check_sector(s, self.rank, self.sites).map_err(|e| ConfigError::Invalid(format!("sector {s:?}: {e}")))?;
        }
        if self.suites.contains(&Suite::Lemma51) {
            bethe::check_sector(&self.lemma_sector, self.rank, self.sites)
                .map_err(|e| ConfigError::Invalid(format!("lemma_sector {:?}: {e}", self.lemma_sector)))?;
        }
        if self.tau_samples <= self.match_samples {
            return bad(format!("tau_samples ({}) must exceed match_samples ({}) to leave held-out points", self.tau_samples, self.match_samples));
        }
        if self.match_samples == 0 || self.z_samples == 0 {
            return bad("match_samples and z_samples must be positive".into());
        }
        if self.beta_radius.is_nan() || self.beta_radius <= 0.0 {
            return bad("beta_radius must be positive".into());
        }
        if self.suites.contains(&Suite::GlN) {
            for &r in &self.gln_ranks {
                if r < 2 {
                    return bad(format!("gln rank {r} < 2"));
                }
                let (sites, split) = if r >= 4 { (self.gl4_sites, self.gl4_split) } else { (self.sites, self.split) };
                let xi = model::random_inhomogeneities(sites, self.coupling(), self.seed);
                let spec = self.spec_for(r, xi, split)?;
                spec.check_composite().map_err(|e| ConfigError::Invalid(format!("gln rank {r}: {e}")))?;
                if spec.dim() > DENSE_OPERATOR_LIMIT {
                    return bad(format!("gln rank {r}: N^M = {} exceeds {DENSE_OPERATOR_LIMIT}", spec.dim()));
                }
            }
        }
        if self.tol_values().iter().any(|t| t.is_nan() || *t <= 0.0) {
            return bad("tolerances must be positive".into());
        }
        Ok(())
    }

    fn tol_values(&self) -> [f64; 19] {
        let t = &self.tol;
        [
            t.root, t.matching, t.rtt, t.factorization, t.thm41, t.thm42, t.kappa, t.sum_rule, t.lemma51, t.lemma51_degenerate,
            t.local_offdiag, t.local_diag, t.telescoping, t.commutator, t.singular, t.zero_mode_diag, t.morphism, t.orthogonality, t.gln,
        ]
    }

    /// Canonical text form; reading it back gives the same configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let t = &self.tol;
        let xi = match &self.xi {
            XiMode::Seeded => "seeded".to_string(),
            XiMode::Explicit(v) => v.iter().map(|z| complex::format(*z)).collect::<Vec<_>>().join(","),
        };
        let sectors = self.sectors.iter().map(|c| fmt_list(c)).collect::<Vec<_>>().join("; ");
        let suites = self.suites.iter().map(|s| s.name()).collect::<Vec<_>>().join(",");
        let lines: Vec<(&str, String)> = vec![
            ("rank", self.rank.to_string()),
            ("sites", self.sites.to_string()),
            ("split", self.split.to_string()),
            ("coupling", complex::format(self.coupling)),
            ("xi", xi),
            ("seed", self.seed.to_string()),
            ("max_dim", self.max_dim.to_string()),
            ("sectors", sectors),
            ("suites", suites),
            ("n_starts", self.n_starts.map_or("auto".into(), |n| n.to_string())),
            ("tau_samples", self.tau_samples.to_string()),
            ("match_samples", self.match_samples.to_string()),
            ("z_samples", self.z_samples.to_string()),
            ("rtt_pairs", self.rtt_pairs.to_string()),
            ("lemma_sector", fmt_list(&self.lemma_sector)),
            ("lemma_betas", self.lemma_betas.to_string()),
            ("beta_radius", format!("{:e}", self.beta_radius)),
            ("gln_ranks", fmt_list(&self.gln_ranks)),
            ("gl4_sites", self.gl4_sites.to_string()),
            ("gl4_split", self.gl4_split.to_string()),
            ("out_dir", self.out_dir.display().to_string()),
            ("use_cache", self.use_cache.to_string()),
            ("threads", self.threads.to_string()),
            ("tol_root", format!("{:e}", t.root)),
            ("tol_match", format!("{:e}", t.matching)),
            ("tol_rtt", format!("{:e}", t.rtt)),
            ("tol_factorization", format!("{:e}", t.factorization)),
            ("tol_thm41", format!("{:e}", t.thm41)),
            ("tol_thm42", format!("{:e}", t.thm42)),
            ("tol_kappa", format!("{:e}", t.kappa)),
            ("tol_sum_rule", format!("{:e}", t.sum_rule)),
            ("tol_lemma51", format!("{:e}", t.lemma51)),
            ("tol_lemma51_degenerate", format!("{:e}", t.lemma51_degenerate)),
            ("tol_local_offdiag", format!("{:e}", t.local_offdiag)),
            ("tol_local_diag", format!("{:e}", t.local_diag)),
            ("tol_telescoping", format!("{:e}", t.telescoping)),
            ("tol_commutator", format!("{:e}", t.commutator)),
            ("tol_singular", format!("{:e}", t.singular)),
            ("tol_zero_mode_diag", format!("{:e}", t.zero_mode_diag)),
            ("tol_morphism", format!("{:e}", t.morphism)),
            ("tol_orthogonality", format!("{:e}", t.orthogonality)),
            ("tol_gln", format!("{:e}", t.gln)),
        ];
        for (k, v) in lines {
            let _ = writeln!(s, "{k} = {v}");
        }
        if let Some(d) = &self.cache_dir {
            let _ = writeln!(s, "cache_dir = {}", d.display());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sectors_by_rank() {
        assert_eq!(default_sectors(2), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(default_sectors(3), vec![vec![0, 0], vec![1, 0], vec![1, 1], vec![2, 0], vec![2, 1]]);
        assert!(default_sectors(4).contains(&vec![1, 1, 1]));
    }

    #[test]
    fn suites_by_name() {
        for s in Suite::ALL {
            assert_eq!(Suite::from_name(s.name()), Some(s));
        }
        assert_eq!(Suite::from_name("GLN"), Some(Suite::GlN));
        assert_eq!(Suite::from_name("nope"), None);
    }
}
