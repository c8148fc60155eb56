//! The verification suites, run against one configuration.
//!
//! Each suite turns into a flat list of independent tasks that run under
//! rayon; results are collected in task order, so the record stream does not
//! depend on scheduling.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use log::info;
use qism_core::algebra::Twist;
use qism_core::bethe::{self, SolverOptions};
use qism_core::formfactor::{self, compatible, VerificationRecord};
use qism_core::model::{self, ModelSpec, SiteRange};
use qism_core::spectral::{self, build_inventory, Inventory, MatchedState};
use qism_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cache::RootCache;
use crate::config::{default_sectors, ConfigError, RunConfig, Suite};

/// Salts that keep the independent random streams apart.
const SALT_Z: u64 = 0x5a17;
const SALT_RTT: u64 = 0x7a77;
const SALT_BETA: u64 = 0xbe7a;
/// Finite-difference step for the κ-derivative cross-check.
const FD_STEP: f64 = 1e-6;
/// Uniform twist exponent for the degenerate generating-functional case.
const UNIFORM_BETA: C64 = C64::new(0.17, -0.04);

type Records = Vec<VerificationRecord>;

/// A failed record standing in for a check that could not be evaluated.
fn failure(spec: &ModelSpec, suite: &str, identity: &str, err: impl std::fmt::Display) -> VerificationRecord {
    let mut r = VerificationRecord::compare(spec, suite, identity, C64::new(0.0, 0.0), C64::new(0.0, 0.0), 0.0, 0.0);
    r.abs_residual = f64::INFINITY;
    r.rel_residual = f64::INFINITY;
    r.pass = false;
    r.note = format!("error: {err}");
    r
}

fn lift<E: std::fmt::Display>(spec: &ModelSpec, suite: &str, identity: &str, r: Result<VerificationRecord, E>) -> VerificationRecord {
    r.unwrap_or_else(|e| failure(spec, suite, identity, e))
}

/// A residual that should vanish.
fn residual_record(spec: &ModelSpec, suite: &str, identity: &str, res: f64, tol: f64) -> VerificationRecord {
    let mut r = VerificationRecord::compare(spec, suite, identity, C64::new(res, 0.0), C64::new(0.0, 0.0), tol, 0.0);
    r.abs_residual = res;
    r.rel_residual = res;
    r.pass = res < tol;
    r
}

fn distinct_pairs(states: &[MatchedState]) -> Vec<(&MatchedState, &MatchedState)> {
    let mut out = Vec::new();
    for bra in states {
        for ket in states {
            if bra.label != ket.label {
                out.push((bra, ket));
            }
        }
    }
    out
}

fn random_point(rng: &mut ChaCha8Rng, avoid: &[C64], c: C64) -> C64 {
    loop {
        let z = C64::new(rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..1.0));
        if avoid.iter().all(|&a| (z - a).norm() > 0.1 && (z - a - c).norm() > 0.1 && (z - a + c).norm() > 0.1) {
            return z;
        }
    }
}

pub struct Runner<'a> {
    cfg: &'a RunConfig,
    cache: &'a RootCache,
    inventories: Mutex<HashMap<String, Arc<Inventory>>>,
}

impl<'a> Runner<'a> {
    pub fn new(cfg: &'a RunConfig, cache: &'a RootCache) -> Self {
        Self { cfg, cache, inventories: Mutex::default() }
    }

    fn solver_options(&self) -> SolverOptions {
        SolverOptions { n_starts: self.cfg.n_starts, tol_root: self.cfg.tol.root, seed: self.cfg.seed, ..SolverOptions::default() }
    }

    fn z_points(&self, spec: &ModelSpec) -> Vec<C64> {
        spectral::default_sample_points(spec, self.cfg.z_samples, self.cfg.seed ^ SALT_Z)
    }

    /// Matched states for `sectors`, memoized per chain and twist.
    pub fn inventory(&self, spec: &ModelSpec, twist: &Twist, sectors: &[Vec<usize>], lift: bool) -> Result<Arc<Inventory>, spectral::SpectralError> {
        let key = format!("{:?}|{:?}|{:?}|{sectors:?}|{lift}", spec.rank(), spec.inhomogeneities(), twist.values());
        if let Some(inv) = self.inventories.lock().unwrap().get(&key) {
            return Ok(inv.clone());
        }
        let ratios = spec.ratios();
        let opts = self.solver_options();
        let solve = |c: &[usize]| self.cache.roots(c, &ratios, twist, &opts);
        let samples = spectral::default_sample_points(spec, self.cfg.tau_samples, self.cfg.seed);
        let inv = Arc::new(build_inventory(spec, twist, sectors, &samples, self.cfg.match_samples, self.cfg.tol.matching, lift, &solve)?);
        self.inventories.lock().unwrap().insert(key, inv.clone());
        Ok(inv)
    }

    fn regular(&self, spec: &ModelSpec, sectors: &[Vec<usize>]) -> Result<Vec<MatchedState>, spectral::SpectralError> {
        let inv = self.inventory(spec, &Twist::untwisted(spec.rank()), sectors, false)?;
        Ok(inv.regular().cloned().collect())
    }

    /// Runs one suite on the configured chain.
    pub fn run_suite(&self, suite: Suite, spec: &ModelSpec) -> Records {
        let spec = spec.clone();
        let start = Instant::now();
        let out = match suite {
            Suite::Rtt => self.rtt(&spec),
            Suite::Factorization => self.factorization(&spec),
            Suite::Bethe => self.bethe(&spec),
            Suite::Thm41 => self.with_states(&spec, "thm41", &self.cfg.sectors, |s| self.thm41(&spec, s)),
            Suite::Thm42 => self.with_states(&spec, "thm42", &self.cfg.sectors, |s| self.thm42(&spec, s)),
            Suite::Lemma51 => self.lemma51(&spec, &self.cfg.lemma_sector),
            Suite::Local => self.with_states(&spec, "local", &self.cfg.sectors, |s| self.local(&spec, s)),
            Suite::Commutators => self.commutators(&spec),
            Suite::Morphism => self.with_states(&spec, "morphism", &self.cfg.sectors, |s| {
                let z = self.z_points(&spec);
                match formfactor::verify_morphism(&spec, s, &z, self.cfg.tol.morphism) {
                    Ok(r) => r,
                    Err(e) => vec![failure(&spec, "morphism", "antimorphism, per-state normalization", e)],
                }
            }),
            Suite::GlN => self.gln(&spec),
        };
        info!("{}: {} records in {:.2?}", suite.name(), out.len(), start.elapsed());
        out
    }

    fn with_states(&self, spec: &ModelSpec, suite: &str, sectors: &[Vec<usize>], f: impl FnOnce(&[MatchedState]) -> Records) -> Records {
        match self.regular(spec, sectors) {
            Ok(states) => f(&states),
            Err(e) => vec![failure(spec, suite, "matched-state inventory", e)],
        }
    }

    pub fn rtt(&self, spec: &ModelSpec) -> Records {
        let cfg = self.cfg;
        let xi = spec.inhomogeneities().to_vec();
        let c = spec.coupling().value();
        let mut tasks = Vec::new();
        for sites in 1..=spec.sites() {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ SALT_RTT ^ sites as u64);
            for _ in 0..cfg.rtt_pairs {
                let u = random_point(&mut rng, &xi, c);
                let mut avoid = xi.clone();
                avoid.push(u);
                let v = random_point(&mut rng, &avoid, c);
                tasks.push((sites, u, v));
            }
        }
        tasks
            .par_iter()
            .flat_map_iter(|&(sites, u, v)| {
                let split = spec.split().min(sites);
                let sub = match cfg.spec_for(spec.rank(), xi[..sites].to_vec(), split) {
                    Ok(s) => s,
                    Err(e) => return vec![failure(spec, "rtt", "RTT relation", e)],
                };
                [(SiteRange::Full, "RTT relation, full chain"), (SiteRange::Left, "RTT relation, left block"), (SiteRange::Right, "RTT relation, right block")]
                    .into_iter()
                    .map(|(range, name)| {
                        let r = model::check_rtt(&sub, u, v, range).map(|res| residual_record(&sub, "rtt", name, res, cfg.tol.rtt));
                        lift(&sub, "rtt", name, r).at(format!("u={},v={}", formfactor::fmt_c(u), formfactor::fmt_c(v)))
                    })
                    .collect()
            })
            .collect()
    }

    pub fn factorization(&self, spec: &ModelSpec) -> Records {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ SALT_RTT);
        let xi = spec.inhomogeneities().to_vec();
        let points: Vec<C64> = (0..3).map(|_| random_point(&mut rng, &xi, spec.coupling().value())).collect();
        let tasks: Vec<(usize, C64)> = (1..spec.sites()).flat_map(|m| points.iter().map(move |&u| (m, u))).collect();
        let name = "monodromy factorization T = T2 T1";
        tasks
            .par_iter()
            .map(|&(m, u)| {
                let r = spec
                    .with_split(m)
                    .and_then(|s| model::check_factorization(&s, u).map(|res| residual_record(&s, "factorization", name, res, self.cfg.tol.factorization)));
                lift(spec, "factorization", name, r).at(format!("u={}", formfactor::fmt_c(u)))
            })
            .collect()
    }

    pub fn bethe(&self, spec: &ModelSpec) -> Records {
        let tol = &self.cfg.tol;
        let inv = match self.inventory(spec, &Twist::untwisted(spec.rank()), &self.cfg.sectors, false) {
            Ok(i) => i,
            Err(e) => return vec![failure(spec, "bethe", "matched-state inventory", e)],
        };
        let mut out = Vec::new();
        for s in &inv.sectors {
            let label = format!("({})", s.counts.iter().map(usize::to_string).collect::<Vec<_>>().join(","));
            let mut r = VerificationRecord::compare(
                spec,
                "bethe",
                "every admissible root set matches an eigenpair",
                C64::new(s.matched as f64, 0.0),
                C64::new(s.admissible_roots as f64, 0.0),
                tol.matching,
                0.0,
            );
            r.pass = s.unmatched_roots.is_empty();
            r.bra = format!("{label}#");
            r.ket = r.bra.clone();
            r.note = format!("sector dimension {}, {} unmatched eigenpairs, {} degenerate", s.dimension, s.unmatched_pairs, s.degenerate);
            out.push(r);
        }
        for st in inv.regular() {
            let mut r = residual_record(spec, "bethe", "eigenvalue agreement at held-out samples", st.held_out_residual, tol.matching).states(st, st);
            r.note = format!("matching residual {:e}", st.match_residual);
            out.push(r);
        }
        let mut count = VerificationRecord::compare(spec, "bethe", "matched states", C64::new(inv.regular().count() as f64, 0.0), C64::new(0.0, 0.0), 1.0, 0.0)
            .informational();
        count.pass = true;
        out.push(count);
        let states: Vec<&MatchedState> = inv.regular().collect();
        let w = self.z_points(spec)[0];
        let pairs: Vec<_> = states
            .iter()
            .flat_map(|a| states.iter().map(move |b| (*a, *b)))
            .filter(|(a, b)| a.label < b.label && a.occupations() == b.occupations())
            .collect();
        out.extend(pairs.par_iter().map(|(a, b)| {
            lift(spec, "bethe", "orthogonality of on-shell states", formfactor::verify_orthogonality(spec, a, b, w, tol.orthogonality))
        }).collect::<Vec<_>>());
        out
    }

    pub fn thm41(&self, spec: &ModelSpec, states: &[MatchedState]) -> Records {
        let z = self.z_points(spec);
        let tol = self.cfg.tol.thm41;
        let n = spec.rank();
        let mut tasks = Vec::new();
        for (bra, ket) in distinct_pairs(states) {
            for i in 0..n {
                for j in 0..n {
                    if compatible(bra, ket, i, j) {
                        tasks.push((bra, ket, i, j));
                    }
                }
            }
        }
        tasks
            .par_iter()
            .flat_map_iter(|&(bra, ket, i, j)| match formfactor::verify_thm41(spec, bra, ket, i, j, &z, tol) {
                Ok((rec, uff)) => vec![rec, formfactor::z_spread_record(spec, bra, ket, i, j, &uff, tol)],
                Err(e) => vec![failure(spec, "thm41", "partial zero-mode form factor", e).states(bra, ket).indices(i, j)],
            })
            .collect()
    }

    pub fn thm42(&self, spec: &ModelSpec, states: &[MatchedState]) -> Records {
        let tol = &self.cfg.tol;
        let ratios = spec.ratios();
        let n = spec.rank();
        states
            .par_iter()
            .flat_map_iter(|st| {
                let mut out = Vec::new();
                let mut sums = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
                for i in 0..n {
                    let derivs = bethe::kappa_derivatives(&st.roots, &ratios, i).and_then(|d| Ok((d.clone(), bethe::kappa_derivatives_fd(&st.roots, &ratios, i, FD_STEP)?)));
                    let (d, fd) = match derivs {
                        Ok(x) => x,
                        Err(e) => {
                            out.push(failure(spec, "thm42", "diagonal partial zero-mode form factor", e).states(st, st).indices(i, i));
                            continue;
                        }
                    };
                    match formfactor::verify_thm42(spec, st, i, &d, tol.thm42) {
                        Ok(r) => {
                            sums.0 += r.lhs;
                            sums.1 += r.rhs;
                            out.push(r);
                        }
                        Err(e) => out.push(failure(spec, "thm42", "diagonal partial zero-mode form factor", e).states(st, st).indices(i, i)),
                    }
                    out.push(lift(spec, "thm42", "kappa derivative implicit vs finite difference", formfactor::verify_kappa_derivatives(spec, st, i, &d, &fd, tol.kappa)));
                }
                let m = C64::new(spec.split() as f64, 0.0);
                out.push(VerificationRecord::compare(spec, "thm42", "sum rule over i, direct side", sums.0, m, tol.sum_rule, 0.0).states(st, st));
                out.push(VerificationRecord::compare(spec, "thm42", "sum rule over i, formula side", sums.1, m, tol.sum_rule, 0.0).states(st, st));
                out
            })
            .collect()
    }

    /// Twist exponents drawn uniformly from the ball of the configured radius.
    pub fn betas(&self, rank: usize) -> Vec<Vec<C64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ SALT_BETA ^ rank as u64);
        let r = self.cfg.beta_radius;
        (0..self.cfg.lemma_betas)
            .map(|_| loop {
                let b: Vec<C64> = (0..rank).map(|_| C64::new(rng.gen_range(-r..r), rng.gen_range(-r..r))).collect();
                if b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() < r {
                    break b;
                }
            })
            .collect()
    }

    pub fn lemma51(&self, spec: &ModelSpec, sector: &[usize]) -> Records {
        let tol = &self.cfg.tol;
        let name = "generating functional";
        let rank = spec.rank();
        let sectors = [sector.to_vec()];
        let kets = match self.inventory(spec, &Twist::untwisted(rank), &sectors, true) {
            Ok(i) => i,
            Err(e) => return vec![failure(spec, "lemma51", name, e)],
        };
        if kets.states.is_empty() {
            return vec![failure(spec, "lemma51", name, format!("no matched states in sector {sector:?}"))];
        }
        let mut tasks: Vec<(Vec<C64>, Arc<Inventory>, f64)> = Vec::new();
        let mut out = Vec::new();
        for beta in self.betas(rank) {
            match self.inventory(spec, &Twist::from_exponents(&beta), &sectors, false) {
                Ok(bras) if !bras.states.is_empty() => tasks.push((beta, bras, tol.lemma51)),
                Ok(_) => out.push(failure(spec, "lemma51", name, format!("no twisted states for beta {beta:?}"))),
                Err(e) => out.push(failure(spec, "lemma51", name, e)),
            }
        }
        // scalar twists leave the untwisted states on shell
        for beta in [vec![C64::new(0.0, 0.0); rank], vec![UNIFORM_BETA; rank]] {
            tasks.push((beta, kets.clone(), tol.lemma51_degenerate));
        }
        let mut jobs = Vec::new();
        for (beta, bras, t) in &tasks {
            for b in &bras.states {
                for k in &kets.states {
                    jobs.push((beta, b, k, *t));
                }
            }
        }
        out.extend(
            jobs.par_iter()
                .map(|&(beta, bra, ket, t)| lift(spec, "lemma51", name, formfactor::verify_lemma51(spec, beta, bra, ket, t)))
                .collect::<Vec<_>>(),
        );
        out
    }

    pub fn local(&self, spec: &ModelSpec, states: &[MatchedState]) -> Records {
        let tol = &self.cfg.tol;
        let z = self.z_points(spec);
        let sites = spec.sites();
        let mut tasks = Vec::new();
        for (bra, ket) in distinct_pairs(states) {
            for (i, j) in [(0, 1), (1, 1)] {
                if compatible(bra, ket, i, j) {
                    tasks.push((bra, ket, i, j));
                }
            }
        }
        let mut out: Records = tasks
            .par_iter()
            .flat_map_iter(|&(bra, ket, i, j)| {
                let mut recs = Vec::new();
                match formfactor::universal_ff(spec, bra, ket, i, j, &z) {
                    Ok(uff) => {
                        for site in 0..sites {
                            recs.push(lift(
                                spec,
                                "local",
                                "local operator form factor",
                                formfactor::verify_local_offdiag(spec, bra, ket, i, j, site, &uff, tol.local_offdiag),
                            ));
                        }
                    }
                    Err(e) => recs.push(failure(spec, "local", "local operator form factor", e).states(bra, ket).indices(i, j)),
                }
                recs.push(lift(spec, "local", "telescoping sum", formfactor::verify_telescoping(spec, bra, ket, i, j, tol.telescoping)));
                recs
            })
            .collect();
        let ratios = spec.ratios();
        out.extend(
            states
                .par_iter()
                .flat_map_iter(|st| match bethe::kappa_derivatives(&st.roots, &ratios, 1) {
                    Ok(d) => (0..sites)
                        .map(|site| lift(spec, "local", "diagonal local form factor", formfactor::verify_local_diag(spec, st, 1, site, &d, tol.local_diag)))
                        .collect(),
                    Err(e) => vec![failure(spec, "local", "diagonal local form factor", e).states(st, st)],
                })
                .collect::<Vec<_>>(),
        );
        out
    }

    pub fn commutators(&self, spec: &ModelSpec) -> Records {
        let tol = &self.cfg.tol;
        let mut out = match formfactor::verify_commutators(spec, tol.commutator) {
            Ok(r) => r,
            Err(e) => vec![failure(spec, "commutators", "zero-mode commutators", e)],
        };
        out.extend(self.with_states(spec, "commutators", &self.cfg.sectors, |states| {
            states
                .par_iter()
                .flat_map_iter(|st| match formfactor::verify_zero_mode_actions(spec, st, tol.singular, tol.zero_mode_diag) {
                    Ok(r) => r,
                    Err(e) => vec![failure(spec, "commutators", "zero-mode actions", e).states(st, st)],
                })
                .collect()
        }));
        out
    }

    /// Chains of other ranks: the full off-diagonal, diagonal and
    /// generating-functional checks below rank 4, conjecture evidence from
    /// rank 4 on.
    pub fn gln(&self, base: &ModelSpec) -> Records {
        let cfg = self.cfg;
        let mut out = Vec::new();
        for &rank in &cfg.gln_ranks {
            let (sites, split) = if rank >= 4 { (cfg.gl4_sites, cfg.gl4_split) } else { (cfg.sites, cfg.split) };
            let xi = if sites == cfg.sites { cfg.inhomogeneities() } else { model::random_inhomogeneities(sites, cfg.coupling(), cfg.seed) };
            let spec = match cfg.spec_for(rank, xi, split) {
                Ok(s) => s,
                Err(e) => {
                    out.push(failure(base, "glN", "configuration", e));
                    continue;
                }
            };
            let mut recs = if rank < 4 {
                let sectors = default_sectors(rank);
                let lemma = [vec![1], vec![0; rank - 2]].concat();
                let mut r = self.with_states(&spec, "glN", &sectors, |s| {
                    let mut r = self.thm41(&spec, s);
                    r.extend(self.thm42(&spec, s));
                    r
                });
                r.extend(self.lemma51(&spec, &lemma));
                r
            } else {
                let sectors: Vec<_> = default_sectors(rank).into_iter().filter(|c| c.iter().sum::<usize>() <= 2).collect();
                self.with_states(&spec, "glN", &sectors, |s| self.conjecture(&spec, s))
            };
            for r in &mut recs {
                r.suite = "glN".into();
            }
            out.extend(recs);
        }
        out
    }

    fn conjecture(&self, spec: &ModelSpec, states: &[MatchedState]) -> Records {
        let z = self.z_points(spec);
        let n = spec.rank();
        let mut tasks = Vec::new();
        for bra in states {
            for ket in states {
                for i in 0..n {
                    for j in 0..n {
                        let same = bra.label == ket.label;
                        if (same && i == j) || (!same && compatible(bra, ket, i, j)) {
                            tasks.push((bra, ket, i, j));
                        }
                    }
                }
            }
        }
        tasks
            .par_iter()
            .map(|&(bra, ket, i, j)| {
                lift(spec, "glN", "partial zero-mode form factor", formfactor::verify_glN_conjecture(spec, bra, ket, i, j, &z, self.cfg.tol.gln))
                    .note(formfactor::CONJECTURE_NOTE)
            })
            .collect()
    }
}

/// Records of every configured suite, in suite order, with wall times.
pub fn run_all(cfg: &RunConfig, cache: &RootCache) -> Result<(Records, Vec<(Suite, Duration)>), ConfigError> {
    let spec = cfg.spec()?;
    let runner = Runner::new(cfg, cache);
    let mut records = Vec::new();
    let mut timings = Vec::new();
    for &suite in &cfg.suites {
        let start = Instant::now();
        records.extend(runner.run_suite(suite, &spec));
        timings.push((suite, start.elapsed()));
    }
    Ok((records, timings))
}
