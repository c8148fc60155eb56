//! Sector-wise diagonalization of the transfer matrix and binding of Bethe
//! root sets to eigenpairs.
//!
//! Right eigenvectors come from the sector block of `t(w_1)`, left ones from
//! its transpose. Eigenvalues at the other sample points are Rayleigh
//! quotients, which is exact for a commuting family and nondegenerate states.
//! Vectors carry arbitrary normalization; everything downstream is bilinear.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebra::{self, AlgebraError, Twist, VacuumRatios};
use crate::bethe::BetheRootSet;
use crate::hilbert::{bilinear, norm2, WeightSector};
use crate::model::{self, ModelError, ModelSpec, SiteRange};
use crate::C64;

pub const TOL_DEGENERATE: f64 = 1e-9;
pub const TOL_PAIRING: f64 = 1e-8;
pub const TOL_MATCH: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("eigensolver failed on a {0}-dimensional block")]
    Eigensolver(usize),
    #[error("at least one sample point is required")]
    NoSamples,
    #[error("root solver failed: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, SpectralError>;

/// Eigenvector pair of the transfer matrix in one sector, as full-space vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub occupations: Vec<usize>,
    /// `(w_s, τ_s)` for every sample point.
    pub samples: Vec<(C64, C64)>,
    pub right: Vec<C64>,
    pub left: Vec<C64>,
    /// `left · right`.
    pub pairing: C64,
    /// Largest relative eigen-equation residual over samples and both sides.
    pub residual: f64,
}

impl EigenPair {
    pub fn eigenvalue(&self, s: usize) -> C64 {
        self.samples[s].1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorSpectrum {
    pub pairs: Vec<EigenPair>,
    /// Eigenvalues dropped for lying in a degenerate cluster at `w_1`.
    pub degenerate: usize,
    /// Eigenpairs dropped for a vanishing pairing.
    pub unpaired: usize,
}

/// `count` sample points with `|w| ∈ [3, 10]·R`, `R = max(max|ξ|, |c|, 1)`.
pub fn default_sample_points(spec: &ModelSpec, count: usize, seed: u64) -> Vec<C64> {
    let r = spec
        .inhomogeneities()
        .iter()
        .map(|x| x.norm())
        .fold(spec.coupling().value().norm().max(1.0), f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x05ee_d5a3_b1e5_u64);
    (0..count)
        .map(|_| C64::from_polar(r * rng.gen_range(3.0..10.0), rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect()
}

fn eig(m: &Mat<C64>) -> Result<(Vec<C64>, Mat<C64>)> {
    let n = m.nrows();
    let e = m.eigen().map_err(|_| SpectralError::Eigensolver(n))?;
    let values = (0..n).map(|k| e.S().column_vector()[k]).collect();
    Ok((values, e.U().to_owned()))
}

/// Diagonalizes the sector block of the twisted transfer matrix.
pub fn diagonalize_sector(spec: &ModelSpec, sector: &WeightSector, twist: &Twist, samples: &[C64]) -> Result<SectorSpectrum> {
    let w1 = *samples.first().ok_or(SpectralError::NoSamples)?;
    let block = model::transfer_block(spec, w1, twist, sector)?;
    let d = sector.dimension();
    let (vals, right) = eig(&block)?;
    let (lvals, left) = eig(&block.transpose().to_owned())?;

    let mut pairs = Vec::new();
    let mut degenerate = 0;
    let mut unpaired = 0;
    let mut used = vec![false; d];
    for k in 0..d {
        let lam = vals[k];
        let tol = TOL_DEGENERATE * (1.0 + lam.norm());
        if (0..d).any(|l| l != k && (vals[l] - lam).norm() < tol) {
            degenerate += 1;
            continue;
        }
        let Some(l) = (0..d)
            .filter(|&l| !used[l])
            .min_by(|&a, &b| (lvals[a] - lam).norm().total_cmp(&(lvals[b] - lam).norm()))
        else {
            unpaired += 1;
            continue;
        };
        used[l] = true;
        let r_loc: Vec<C64> = (0..d).map(|i| right[(i, k)]).collect();
        let l_loc: Vec<C64> = (0..d).map(|i| left[(i, l)]).collect();
        let rv = sector.embed(&r_loc, spec.dim());
        let lv = sector.embed(&l_loc, spec.dim());
        let pairing = bilinear(&lv, &rv);
        if pairing.norm() <= TOL_PAIRING * norm2(&lv) * norm2(&rv) {
            unpaired += 1;
            continue;
        }
        pairs.push(sample_pair(spec, twist, samples, sector.occupations().to_vec(), lv, rv)?);
    }
    Ok(SectorSpectrum { pairs, degenerate, unpaired })
}

/// Evaluates Rayleigh quotients and eigen-equation residuals for a vector pair.
pub fn sample_pair(
    spec: &ModelSpec,
    twist: &Twist,
    samples: &[C64],
    occupations: Vec<usize>,
    left: Vec<C64>,
    right: Vec<C64>,
) -> Result<EigenPair> {
    let pairing = bilinear(&left, &right);
    let (nl, nr) = (norm2(&left), norm2(&right));
    let mut out = Vec::with_capacity(samples.len());
    let mut residual = 0.0f64;
    for &w in samples {
        let tr = model::apply_transfer(spec, w, twist, &right)?;
        let tau = bilinear(&left, &tr) / pairing;
        let tl = model::apply_transfer_left(spec, w, twist, &left)?;
        let scale = 1.0 + tau.norm();
        let rr = tr.iter().zip(&right).map(|(a, b)| (a - tau * b).norm_sqr()).sum::<f64>().sqrt() / (nr * scale);
        let rl = tl.iter().zip(&left).map(|(a, b)| (a - tau * b).norm_sqr()).sum::<f64>().sqrt() / (nl * scale);
        residual = residual.max(rr).max(rl);
        out.push((w, tau));
    }
    Ok(EigenPair { occupations, samples: out, right, left, pairing, residual })
}

/// Largest `|left_k · right_l| / (‖left_k‖ ‖right_l‖)` over `k ≠ l`.
pub fn biorthogonality(pairs: &[EigenPair]) -> f64 {
    let mut worst = 0.0f64;
    for (k, a) in pairs.iter().enumerate() {
        for (l, b) in pairs.iter().enumerate() {
            if k != l {
                worst = worst.max(bilinear(&a.left, &b.right).norm() / (norm2(&a.left) * norm2(&b.right)));
            }
        }
    }
    worst
}

/// A root set bound to an eigenpair.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedState {
    pub roots: BetheRootSet,
    pub pair: EigenPair,
    /// Worst relative `τ` mismatch over the matching samples.
    pub match_residual: f64,
    /// Worst relative `τ` mismatch over the held-out samples.
    pub held_out_residual: f64,
    /// Set when the pair lives in a lower sector than the roots describe,
    /// i.e. the state is a zero-mode descendant of a highest-weight state.
    pub descendant: bool,
    /// Human-readable tag, e.g. `(2,1)#0`; assigned by [`build_inventory`].
    pub label: String,
}

impl MatchedState {
    pub fn occupations(&self) -> &[usize] {
        &self.pair.occupations
    }

    pub fn counts(&self) -> Vec<usize> {
        crate::bethe::counts_from_occupations(&self.pair.occupations)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchReport {
    pub matched: Vec<MatchedState>,
    pub unmatched_roots: Vec<BetheRootSet>,
    pub unmatched_pairs: usize,
}

/// Relative `τ` mismatch `max_s |τ(w_s|roots) − τ_s| / (1 + |τ_s|)` over `range`.
pub fn tau_mismatch(
    roots: &BetheRootSet,
    pair: &EigenPair,
    ratios: &VacuumRatios,
    twist: &Twist,
    range: std::ops::Range<usize>,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for &(w, t) in &pair.samples[range] {
        let tau = algebra::tau(w, roots.levels(), ratios, twist)?;
        worst = worst.max((tau - t).norm() / (1.0 + t.norm()));
    }
    Ok(worst)
}

/// Greedy one-to-one assignment of root sets to eigenpairs. The first
/// `n_match` samples decide the assignment; the rest are held out.
/// With `descendant` set, accepted matches are flagged as descendants.
pub fn match_states(
    roots: &[BetheRootSet],
    pairs: &[EigenPair],
    ratios: &VacuumRatios,
    twist: &Twist,
    n_match: usize,
    tol: f64,
    descendant: bool,
) -> Result<MatchReport> {
    let mut scores = Vec::new();
    for (r, root) in roots.iter().enumerate() {
        for (p, pair) in pairs.iter().enumerate() {
            let n = n_match.min(pair.samples.len());
            // a pole in τ at a sample point simply disqualifies the candidate
            if let Ok(s) = tau_mismatch(root, pair, ratios, twist, 0..n) {
                scores.push((s, r, p));
            }
        }
    }
    scores.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut root_used = vec![false; roots.len()];
    let mut pair_used = vec![false; pairs.len()];
    let mut matched = Vec::new();
    for (s, r, p) in scores {
        if s >= tol || root_used[r] || pair_used[p] {
            continue;
        }
        root_used[r] = true;
        pair_used[p] = true;
        let pair = &pairs[p];
        let n = n_match.min(pair.samples.len());
        let held = tau_mismatch(&roots[r], pair, ratios, twist, n..pair.samples.len())?;
        matched.push(MatchedState {
            roots: roots[r].clone(),
            pair: pair.clone(),
            match_residual: s,
            held_out_residual: held,
            descendant,
            label: String::new(),
        });
    }
    matched.sort_by(|a, b| a.roots.counts().cmp(b.roots.counts()).then(a.match_residual.total_cmp(&b.match_residual)));
    let unmatched_roots = roots.iter().zip(&root_used).filter(|(_, &u)| !u).map(|(r, _)| r.clone()).collect();
    let unmatched_pairs = pair_used.iter().filter(|&&u| !u).count();
    Ok(MatchReport { matched, unmatched_roots, unmatched_pairs })
}

/// Outcome of solving and matching one sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorReport {
    pub counts: Vec<usize>,
    pub dimension: usize,
    pub admissible_roots: usize,
    pub matched: usize,
    pub descendants: usize,
    pub unmatched_roots: Vec<BetheRootSet>,
    pub unmatched_pairs: usize,
    pub degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Inventory {
    pub states: Vec<MatchedState>,
    pub sectors: Vec<SectorReport>,
}

impl Inventory {
    /// Highest-weight states (finite roots only).
    pub fn regular(&self) -> impl Iterator<Item = &MatchedState> {
        self.states.iter().filter(|s| !s.descendant)
    }

    pub fn in_sector<'a>(&'a self, counts: &'a [usize]) -> impl Iterator<Item = &'a MatchedState> {
        self.states.iter().filter(move |s| s.counts() == counts)
    }
}

/// Sectors whose highest-weight states can have descendants in `counts`.
fn parent_sectors(counts: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    for &c in counts {
        out = out.into_iter().flat_map(|p| (0..=c).map(move |v| [p.clone(), vec![v]].concat())).collect();
    }
    out.retain(|p| p != counts && p.windows(2).all(|w| w[0] >= w[1]));
    out
}

fn format_counts(counts: &[usize]) -> String {
    let parts: Vec<String> = counts.iter().map(usize::to_string).collect();
    format!("({})", parts.join(","))
}

/// Root-set supplier for one sector.
pub type SolveFn<'a> = dyn Fn(&[usize]) -> std::result::Result<Vec<BetheRootSet>, crate::bethe::BetheError> + Sync + 'a;

/// Solves, diagonalizes and matches every sector in `sectors`.
///
/// `solve` supplies root sets for a sector (possibly from a cache). When
/// `lift` is set (untwisted chains only), eigenpairs left unmatched are offered
/// to the root sets of parent sectors: a zero-mode descendant shares its
/// parent's eigenvalue, and its extra roots sit at infinity where every
/// vacuum ratio is one.
#[allow(clippy::too_many_arguments)]
pub fn build_inventory(
    spec: &ModelSpec,
    twist: &Twist,
    sectors: &[Vec<usize>],
    samples: &[C64],
    n_match: usize,
    tol_match: f64,
    lift: bool,
    solve: &SolveFn<'_>,
) -> Result<Inventory> {
    let ratios = spec.ratios();
    let mut solved: std::collections::BTreeMap<Vec<usize>, Vec<BetheRootSet>> = Default::default();
    let mut get = |c: &[usize]| -> Result<Vec<BetheRootSet>> {
        if let Some(v) = solved.get(c) {
            return Ok(v.clone());
        }
        let v = solve(c).map_err(|e| SpectralError::Solver(e.to_string()))?;
        solved.insert(c.to_vec(), v.clone());
        Ok(v)
    };
    let mut inv = Inventory::default();
    for counts in sectors {
        let occ = crate::bethe::occupations(counts, spec.sites());
        let sector = spec.sector(&occ)?;
        let spectrum = diagonalize_sector(spec, &sector, twist, samples)?;
        let roots = get(counts)?;
        let rep = match_states(&roots, &spectrum.pairs, &ratios, twist, n_match, tol_match, false)?;
        let mut states = rep.matched;
        let mut descendants = 0;
        if lift {
            let free: Vec<EigenPair> = spectrum
                .pairs
                .iter()
                .filter(|p| !states.iter().any(|s| s.pair.right == p.right))
                .cloned()
                .collect();
            let mut parents = Vec::new();
            for pc in parent_sectors(counts) {
                parents.extend(get(&pc)?);
            }
            let lifted = match_states(&parents, &free, &ratios, twist, n_match, tol_match, true)?;
            descendants = lifted.matched.len();
            states.extend(lifted.matched);
        }
        for (k, s) in states.iter_mut().enumerate() {
            let tag = if s.descendant { "d" } else { "" };
            s.label = format!("{}#{tag}{k}", format_counts(counts));
        }
        inv.sectors.push(SectorReport {
            counts: counts.clone(),
            dimension: sector.dimension(),
            admissible_roots: roots.len(),
            matched: states.len() - descendants,
            descendants,
            unmatched_roots: rep.unmatched_roots,
            unmatched_pairs: spectrum.pairs.len() - states.len(),
            degenerate: spectrum.degenerate,
        });
        inv.states.extend(states);
    }
    Ok(inv)
}

/// Singular-vector residual: the largest of `‖left · T_ij[0]‖ / ‖left‖` and
/// `‖T_ji[0] · right‖ / ‖right‖` over `i < j` (zero-based).
pub fn singular_residual(spec: &ModelSpec, state: &MatchedState) -> Result<f64> {
    let n = spec.rank();
    let (l, r) = (&state.pair.left, &state.pair.right);
    let (nl, nr) = (norm2(l), norm2(r));
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let a = model::apply_zero_mode_left(spec, SiteRange::Full, i, j, l)?;
            let b = model::apply_zero_mode(spec, SiteRange::Full, j, i, r)?;
            worst = worst.max(norm2(&a) / nl).max(norm2(&b) / nr);
        }
    }
    Ok(worst)
}

/// Largest `‖T_kk[0] · right − n_k · right‖ / ‖right‖` over colours `k`.
pub fn diagonal_zero_mode_residual(spec: &ModelSpec, state: &MatchedState) -> Result<f64> {
    let r = &state.pair.right;
    let nr = norm2(r);
    let mut worst = 0.0f64;
    for (k, &nk) in state.pair.occupations.iter().enumerate() {
        let y = model::apply_zero_mode(spec, SiteRange::Full, k, k, r)?;
        let res = y.iter().zip(r).map(|(a, b)| (a - b * nk as f64).norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(res / nr);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Coupling;
    use crate::bethe::{self, SolverOptions};

    fn cx(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn spec(m: usize, seed: u64) -> ModelSpec {
        ModelSpec::seeded(3, m, Coupling::default(), 1, seed).unwrap()
    }

    #[test]
    fn parents_of_a_sector() {
        let p = parent_sectors(&[1, 1]);
        assert_eq!(p, vec![vec![0, 0], vec![1, 0]]);
        assert_eq!(parent_sectors(&[0, 0]), Vec::<Vec<usize>>::new());
        assert_eq!(parent_sectors(&[2]), vec![vec![0], vec![1]]);
    }

    #[test]
    fn inventory_lifts_descendants() {
        let s = ModelSpec::seeded(3, 4, Coupling::default(), 2, 7).unwrap();
        let tw = Twist::untwisted(3);
        let samples = default_sample_points(&s, 6, 7);
        let ratios = s.ratios();
        let solve = |c: &[usize]| bethe::solve_sector(c, &ratios, &tw, &SolverOptions { seed: 7, ..Default::default() });
        let inv = build_inventory(&s, &tw, &[vec![1, 1]], &samples, 3, TOL_MATCH, true, &solve).unwrap();
        let rep = &inv.sectors[0];
        assert_eq!(rep.admissible_roots, 0);
        assert_eq!(rep.dimension, 4);
        assert_eq!(rep.descendants, 4);
        assert!(inv.states.iter().all(|m| m.descendant && m.held_out_residual < 1e-8));
    }

    #[test]
    fn vacuum_sector() {
        let s = spec(2, 1);
        let samples = default_sample_points(&s, 3, 1);
        for tw in [Twist::untwisted(3), Twist::new(vec![cx(2.0, 0.0), cx(1.0, 0.0), cx(1.0, 0.0)]).unwrap()] {
            let sec = s.sector(&[2, 0, 0]).unwrap();
            let sp = diagonalize_sector(&s, &sec, &tw, &samples).unwrap();
            assert_eq!(sp.pairs.len(), 1);
            for &(w, t) in &sp.pairs[0].samples {
                let expect = tw.get(0) * s.ratios().r1(w).unwrap() + tw.get(1) + tw.get(2);
                assert!((t - expect).norm() < 1e-12 * (1.0 + expect.norm()));
            }
            let roots = BetheRootSet::empty(3, &tw);
            let rep = match_states(&[roots], &sp.pairs, &s.ratios(), &tw, 3, TOL_MATCH, false).unwrap();
            assert_eq!(rep.matched.len(), 1);
            assert!(rep.matched[0].match_residual < 1e-12);
        }
    }

    #[test]
    fn samples_are_far_from_inhomogeneities() {
        let s = spec(4, 2);
        let pts = default_sample_points(&s, 6, 3);
        assert_eq!(pts, default_sample_points(&s, 6, 3));
        for w in pts {
            assert!(w.norm() >= 3.0);
        }
    }

    #[test]
    fn rayleigh_samples_match_rediagonalization() {
        let s = spec(3, 4);
        let sec = s.sector(&[1, 1, 1]).unwrap();
        let samples = default_sample_points(&s, 2, 4);
        let tw = Twist::untwisted(3);
        let sp = diagonalize_sector(&s, &sec, &tw, &samples).unwrap();
        let block2 = model::transfer_block(&s, samples[1], &tw, &sec).unwrap();
        let (vals2, _) = eig(&block2).unwrap();
        for p in &sp.pairs {
            let t2 = p.samples[1].1;
            assert!(vals2.iter().any(|v| (v - t2).norm() < 1e-10 * (1.0 + t2.norm())));
            assert!(p.residual < 1e-10);
        }
        assert!(biorthogonality(&sp.pairs) < 1e-9);
    }

    #[test]
    fn magnons_match_and_perturbed_roots_do_not() {
        let s = spec(3, 5);
        let tw = Twist::untwisted(3);
        let ratios = s.ratios();
        let roots = bethe::solve_sector(&[1, 0], &ratios, &tw, &SolverOptions { seed: 5, ..Default::default() }).unwrap();
        assert_eq!(roots.len(), 2);
        let sec = s.sector(&[2, 1, 0]).unwrap();
        let samples = default_sample_points(&s, 6, 5);
        let sp = diagonalize_sector(&s, &sec, &tw, &samples).unwrap();
        let rep = match_states(&roots, &sp.pairs, &ratios, &tw, 3, TOL_MATCH, false).unwrap();
        assert_eq!(rep.matched.len(), roots.len());
        assert!(rep.unmatched_roots.is_empty());
        for m in &rep.matched {
            assert!(m.held_out_residual < 1e-8);
            assert!(singular_residual(&s, m).unwrap() < 1e-9);
            assert!(diagonal_zero_mode_residual(&s, m).unwrap() < 1e-12);
        }
        let bumped: Vec<BetheRootSet> = roots
            .iter()
            .map(|r| {
                let lv = vec![vec![r.levels()[0][0] + 1e-3], vec![]];
                BetheRootSet::new(lv, &ratios, &tw, 1.0).unwrap()
            })
            .collect();
        let rep = match_states(&bumped, &sp.pairs, &ratios, &tw, 3, TOL_MATCH, false).unwrap();
        assert!(rep.matched.is_empty());
    }
}
