//! Nested Bethe equations: damped Newton with seeded multistart, and
//! κ-derivatives of on-shell roots by implicit differentiation.
//!
//! A sector is labelled by the level cardinalities `a_1 ≥ a_2 ≥ … ≥ a_{N-1}`
//! (`(a, b)` at rank 3); its weight has occupations `n_k = a_{k-1} − a_k` with
//! `a_0 = M`, `a_N = 0`.

use faer::linalg::solvers::Solve;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::{self, AlgebraError, Twist, VacuumRatios, TOL_DISTINCT};
use crate::C64;

/// Convergence threshold on the max-norm of the log residual.
pub const TOL_ROOT: f64 = 1e-11;
/// Root sets closer than this (after canonical sort) are the same solution.
pub const TOL_DEDUPE: f64 = 1e-7;
/// Roots beyond this modulus count as escaping to infinity.
pub const ROOT_BOUND: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BetheError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("sector {counts:?} is not admissible for {sites} sites (need M ≥ a_1 ≥ … ≥ 0)")]
    Sector { counts: Vec<usize>, sites: usize },
    #[error("expected {expected} nesting levels, got {got}")]
    Levels { expected: usize, got: usize },
    #[error("Bethe Jacobian is singular (condition number {cond:.3e})")]
    Singular { cond: f64 },
    #[error("root set is not admissible")]
    NotAdmissible,
    #[error("Newton continuation to the shifted twist did not converge")]
    Continuation,
}

pub type Result<T> = std::result::Result<T, BetheError>;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Defaults to `50 · Σ a_k` when `None`.
    pub n_starts: Option<usize>,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub tol_root: f64,
    pub tol_dedupe: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { n_starts: None, max_iter: 200, max_halvings: 8, tol_root: TOL_ROOT, tol_dedupe: TOL_DEDUPE, seed: 0 }
    }
}

/// One solution of the (twisted) Bethe system.
#[derive(Debug, Clone, PartialEq)]
pub struct BetheRootSet {
    counts: Vec<usize>,
    levels: Vec<Vec<C64>>,
    twist: Twist,
    residual: f64,
    admissible: bool,
}

impl BetheRootSet {
    /// Builds a root set and evaluates its residual and admissibility.
    pub fn new(levels: Vec<Vec<C64>>, ratios: &VacuumRatios, twist: &Twist, tol_root: f64) -> Result<Self> {
        if levels.len() + 1 != ratios.rank() {
            return Err(BetheError::Levels { expected: ratios.rank() - 1, got: levels.len() });
        }
        let mut out = Self {
            counts: levels.iter().map(Vec::len).collect(),
            levels,
            twist: twist.clone(),
            residual: f64::INFINITY,
            admissible: false,
        };
        out.canonicalize();
        if let Ok(r) = algebra::bethe_residual(&out.levels, ratios, twist) {
            out.residual = max_abs(&r);
        }
        out.admissible = out.residual < tol_root && out.roots_admissible(ratios);
        Ok(out)
    }

    /// The root-free solution of sector `(0, …, 0)`.
    pub fn empty(rank: usize, twist: &Twist) -> Self {
        Self {
            counts: vec![0; rank - 1],
            levels: vec![Vec::new(); rank - 1],
            twist: twist.clone(),
            residual: 0.0,
            admissible: true,
        }
    }

    /// Level cardinalities `(a_1, …, a_{N-1})`.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn levels(&self) -> &[Vec<C64>] {
        &self.levels
    }

    pub fn twist(&self) -> &Twist {
        &self.twist
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn is_admissible(&self) -> bool {
        self.admissible
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn flat(&self) -> Vec<C64> {
        self.levels.iter().flatten().copied().collect()
    }

    /// Weight occupations `(n_1, …, n_N)` on a chain of `sites` sites.
    pub fn occupations(&self, sites: usize) -> Vec<usize> {
        occupations(&self.counts, sites)
    }

    /// Largest elementwise distance to another root set with the same counts.
    pub fn distance(&self, other: &Self) -> f64 {
        if self.counts != other.counts {
            return f64::INFINITY;
        }
        self.flat().iter().zip(other.flat()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    fn canonicalize(&mut self) {
        for level in &mut self.levels {
            level.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        }
    }

    fn roots_admissible(&self, ratios: &VacuumRatios) -> bool {
        let c = ratios.coupling().value();
        let flat = self.flat();
        if flat.iter().any(|t| !t.re.is_finite() || !t.im.is_finite() || t.norm() > ROOT_BOUND) {
            return false;
        }
        for level in &self.levels {
            for (j, a) in level.iter().enumerate() {
                if level[j + 1..].iter().any(|b| (a - b).norm() <= TOL_DISTINCT) {
                    return false;
                }
            }
        }
        for w in self.levels.windows(2) {
            for a in &w[0] {
                if w[1].iter().any(|b| (a - b).norm() <= TOL_DISTINCT || (a - b - c).norm() <= TOL_DISTINCT) {
                    return false;
                }
            }
        }
        self.levels[0].iter().all(|t| {
            ratios.inhomogeneities().iter().all(|x| (t - x).norm() > TOL_DISTINCT && (t - x + c).norm() > TOL_DISTINCT)
        })
    }
}

/// Occupations `n_k = a_{k-1} − a_k` with `a_0 = M` and `a_N = 0`.
pub fn occupations(counts: &[usize], sites: usize) -> Vec<usize> {
    let mut a = Vec::with_capacity(counts.len() + 2);
    a.push(sites);
    a.extend_from_slice(counts);
    a.push(0);
    a.windows(2).map(|w| w[0] - w[1]).collect()
}

/// Inverse of [`occupations`]: `a_k = Σ_{l>k} n_l`.
pub fn counts_from_occupations(occ: &[usize]) -> Vec<usize> {
    (1..occ.len()).map(|k| occ[k..].iter().sum()).collect()
}

pub fn check_sector(counts: &[usize], rank: usize, sites: usize) -> Result<()> {
    if counts.len() + 1 != rank {
        return Err(BetheError::Levels { expected: rank - 1, got: counts.len() });
    }
    let ok = counts.first().is_none_or(|&a| a <= sites) && counts.windows(2).all(|w| w[0] >= w[1]);
    if !ok {
        return Err(BetheError::Sector { counts: counts.to_vec(), sites });
    }
    Ok(())
}

fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn to_mat(rows: &[Vec<C64>]) -> Mat<C64> {
    let n = rows.len();
    Mat::from_fn(n, n, |r, c| rows[r][c])
}

/// Solves `A x = b` by partially pivoted LU; `None` when the result is not finite.
pub fn solve_linear(a: &[Vec<C64>], b: &[C64]) -> Option<Vec<C64>> {
    let n = b.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let lu = to_mat(a).partial_piv_lu();
    let rhs = Mat::from_fn(n, 1, |r, _| b[r]);
    let x = lu.solve(&rhs);
    let out: Vec<C64> = (0..n).map(|r| x[(r, 0)]).collect();
    out.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(out)
}

/// One-norm condition number `‖A‖₁ ‖A⁻¹‖₁`; infinite when singular.
pub fn condition_number(a: &[Vec<C64>]) -> f64 {
    let n = a.len();
    if n == 0 {
        return 1.0;
    }
    let lu = to_mat(a).partial_piv_lu();
    let inv = lu.solve(&Mat::<C64>::identity(n, n));
    let norm1 = |f: &dyn Fn(usize, usize) -> C64| (0..n).map(|c| (0..n).map(|r| f(r, c).norm()).sum::<f64>()).fold(0.0, f64::max);
    let k = norm1(&|r, c| a[r][c]) * norm1(&|r, c| inv[(r, c)]);
    if k.is_finite() {
        k
    } else {
        f64::INFINITY
    }
}

fn unflatten(flat: &[C64], counts: &[usize]) -> Vec<Vec<C64>> {
    let mut out = Vec::with_capacity(counts.len());
    let mut pos = 0;
    for &n in counts {
        out.push(flat[pos..pos + n].to_vec());
        pos += n;
    }
    out
}

fn residual_norm(levels: &[Vec<C64>], ratios: &VacuumRatios, twist: &Twist) -> Option<(Vec<C64>, f64)> {
    let r = algebra::bethe_residual(levels, ratios, twist).ok()?;
    let n = max_abs(&r);
    n.is_finite().then_some((r, n))
}

/// Damped Newton from `start`. Returns the final levels and residual when
/// the residual drops below `opts.tol_root`, `None` otherwise.
pub fn newton(start: &[Vec<C64>], ratios: &VacuumRatios, twist: &Twist, opts: &SolverOptions) -> Option<(Vec<Vec<C64>>, f64)> {
    let counts: Vec<usize> = start.iter().map(Vec::len).collect();
    let mut x: Vec<C64> = start.iter().flatten().copied().collect();
    let mut levels = start.to_vec();
    let (mut r, mut norm) = residual_norm(&levels, ratios, twist)?;
    for _ in 0..opts.max_iter {
        if norm < opts.tol_root {
            return Some((levels, norm));
        }
        let jac = algebra::bethe_jacobian(&levels, ratios, twist).ok()?;
        let neg: Vec<C64> = r.iter().map(|v| -v).collect();
        let dx = solve_linear(&jac, &neg)?;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<C64> = x.iter().zip(&dx).map(|(a, d)| a + d * step).collect();
            if trial.iter().any(|t| t.norm() > ROOT_BOUND) {
                step *= 0.5;
                continue;
            }
            let tl = unflatten(&trial, &counts);
            if let Some((tr, tn)) = residual_norm(&tl, ratios, twist) {
                if tn < norm {
                    x = trial;
                    levels = tl;
                    r = tr;
                    norm = tn;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    (norm < opts.tol_root).then_some((levels, norm))
}

fn sample_starts(counts: &[usize], ratios: &VacuumRatios, n_starts: usize, seed: u64) -> Vec<Vec<Vec<C64>>> {
    let xi = ratios.inhomogeneities();
    let c = ratios.coupling().value();
    let mean = if xi.is_empty() { C64::new(0.0, 0.0) } else { xi.iter().sum::<C64>() / xi.len() as f64 };
    let spread = xi.iter().map(|x| (x - mean).norm()).fold(0.0, f64::max);
    let centre = mean - c * 0.5;
    let scale = spread.max(c.norm());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_starts)
        .map(|s| {
            let radius = if s % 2 == 0 { 0.5 * scale } else { scale };
            counts
                .iter()
                .map(|&n| {
                    (0..n)
                        .map(|_| {
                            let rho = radius * rng.gen_range(0.0f64..1.0).sqrt();
                            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                            centre + C64::from_polar(rho, phi)
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Multistart search for admissible solutions in one sector.
///
/// Starts are sampled in a disc around `mean(ξ) − c/2` whose radius
/// alternates between `½·s` and `s`, `s = max(spread(ξ), |c|)`. Wider discs
/// mostly send Newton off to infinity. Runs execute in parallel and are merged by
/// canonical sort, so the output depends only on the inputs and the seed.
/// Completeness is not promised.
pub fn solve_sector(counts: &[usize], ratios: &VacuumRatios, twist: &Twist, opts: &SolverOptions) -> Result<Vec<BetheRootSet>> {
    check_sector(counts, ratios.rank(), ratios.inhomogeneities().len())?;
    if counts.iter().all(|&n| n == 0) {
        return Ok(vec![BetheRootSet::empty(ratios.rank(), twist)]);
    }
    let total: usize = counts.iter().sum();
    let n_starts = opts.n_starts.unwrap_or(50 * total);
    let starts = sample_starts(counts, ratios, n_starts, opts.seed);
    let found: Vec<BetheRootSet> = starts
        .par_iter()
        .filter_map(|s| newton(s, ratios, twist, opts))
        .filter_map(|(levels, _)| BetheRootSet::new(levels, ratios, twist, opts.tol_root).ok())
        .filter(BetheRootSet::is_admissible)
        .collect();
    Ok(dedupe(found, opts.tol_dedupe))
}

fn canonical_key(a: &BetheRootSet, b: &BetheRootSet) -> std::cmp::Ordering {
    for (x, y) in a.flat().iter().zip(b.flat()) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o.is_ne() {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

fn dedupe(mut sets: Vec<BetheRootSet>, tol: f64) -> Vec<BetheRootSet> {
    sets.sort_by(canonical_key);
    let mut kept: Vec<BetheRootSet> = Vec::new();
    for s in sets {
        match kept.iter_mut().find(|k| k.distance(&s) < tol) {
            Some(k) if s.residual < k.residual => *k = s,
            Some(_) => {}
            None => kept.push(s),
        }
    }
    kept
}

/// Re-validates a stored root set: one Newton step, then the residual test.
pub fn revalidate(levels: &[Vec<C64>], ratios: &VacuumRatios, twist: &Twist, tol_root: f64) -> Result<BetheRootSet> {
    let opts = SolverOptions { max_iter: 1, tol_root, ..SolverOptions::default() };
    let refined = match newton(levels, ratios, twist, &opts) {
        Some((l, _)) => l,
        None => levels.to_vec(),
    };
    let set = BetheRootSet::new(refined, ratios, twist, tol_root)?;
    if set.is_admissible() {
        Ok(set)
    } else {
        Err(BetheError::NotAdmissible)
    }
}

/// `dt/dκ_i` for every root, per level.
#[derive(Debug, Clone, PartialEq)]
pub struct RootDerivatives {
    pub index: usize,
    pub levels: Vec<Vec<C64>>,
}

impl RootDerivatives {
    pub fn flat(&self) -> Vec<C64> {
        self.levels.iter().flatten().copied().collect()
    }
}

/// Condition numbers above this are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Implicit derivatives `dt/dκ_i = −J⁻¹ ∂G/∂κ_i` at the root set's twist.
pub fn kappa_derivatives(roots: &BetheRootSet, ratios: &VacuumRatios, i: usize) -> Result<RootDerivatives> {
    if !roots.is_admissible() {
        return Err(BetheError::NotAdmissible);
    }
    let jac = algebra::bethe_jacobian(roots.levels(), ratios, roots.twist())?;
    let cond = condition_number(&jac);
    if cond > MAX_CONDITION {
        return Err(BetheError::Singular { cond });
    }
    let grad = algebra::bethe_twist_gradient(roots.levels(), roots.twist(), i);
    let neg: Vec<C64> = grad.iter().map(|v| -v).collect();
    let d = solve_linear(&jac, &neg).ok_or(BetheError::Singular { cond })?;
    Ok(RootDerivatives { index: i, levels: unflatten(&d, roots.counts()) })
}

/// Central finite differences of re-solved roots at `κ_i ± h`, continued by
/// Newton from the given roots.
pub fn kappa_derivatives_fd(roots: &BetheRootSet, ratios: &VacuumRatios, i: usize, h: f64) -> Result<RootDerivatives> {
    let opts = SolverOptions { max_iter: 20, tol_root: 1e-13, ..SolverOptions::default() };
    let mut shifted = Vec::with_capacity(2);
    for sign in [1.0, -1.0] {
        let tw = roots.twist().with(i, roots.twist().get(i) + sign * h);
        let (levels, _) = newton(roots.levels(), ratios, &tw, &opts)
            .or_else(|| newton(roots.levels(), ratios, &tw, &SolverOptions { tol_root: TOL_ROOT, ..opts.clone() }))
            .ok_or(BetheError::Continuation)?;
        shifted.push(levels.iter().flatten().copied().collect::<Vec<C64>>());
    }
    let d: Vec<C64> = shifted[0].iter().zip(&shifted[1]).map(|(p, m)| (p - m) / (2.0 * h)).collect();
    Ok(RootDerivatives { index: i, levels: unflatten(&d, roots.counts()) })
}

/// `d/dκ_i Σ_k log α_k(t̄^k(κ))` for the given block ratios. At rank 3 with
/// the left-block ratios this is `d/dκ_i log(ℓ_1(ū)/ℓ_3(v̄))`.
pub fn log_ell_kappa_derivative(roots: &BetheRootSet, derivs: &RootDerivatives, block: &VacuumRatios) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for (k, (level, dlevel)) in roots.levels().iter().zip(&derivs.levels).enumerate() {
        for (&t, &dt) in level.iter().zip(dlevel) {
            acc += block.dlog_alpha(k, t)? * dt;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Coupling;

    fn cx(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn ratios(rank: usize, xi: &[C64]) -> VacuumRatios {
        VacuumRatios::new(rank, Coupling::default(), xi.to_vec()).unwrap()
    }

    fn opts(seed: u64) -> SolverOptions {
        SolverOptions { seed, ..SolverOptions::default() }
    }

    #[test]
    fn occupation_bookkeeping() {
        assert_eq!(occupations(&[2, 1], 4), vec![2, 1, 1]);
        assert_eq!(occupations(&[0, 0], 3), vec![3, 0, 0]);
        assert_eq!(occupations(&[2], 4), vec![2, 2]);
        assert_eq!(counts_from_occupations(&[2, 1, 1]), vec![2, 1]);
        assert!(check_sector(&[1, 2], 3, 4).is_err());
        assert!(check_sector(&[5, 0], 3, 4).is_err());
        assert!(check_sector(&[1], 3, 4).is_err());
    }

    #[test]
    fn empty_sector() {
        let r = ratios(3, &[cx(0.0, 0.0), cx(0.3, 0.0)]);
        let sols = solve_sector(&[0, 0], &r, &Twist::untwisted(3), &opts(1)).unwrap();
        assert_eq!(sols.len(), 1);
        assert_eq!(sols[0].residual(), 0.0);
        assert!(sols[0].is_admissible());
    }

    #[test]
    fn single_site_has_no_magnon() {
        let r = ratios(3, &[cx(0.2, 0.1)]);
        let sols = solve_sector(&[1, 0], &r, &Twist::untwisted(3), &opts(2)).unwrap();
        assert!(sols.is_empty());
    }

    #[test]
    fn two_site_magnon_matches_quadratic() {
        // (u+1)(u+0.7) = u(u−0.3)  ⇒  2u = −0.7
        let r = ratios(3, &[cx(0.0, 0.0), cx(0.3, 0.0)]);
        let sols = solve_sector(&[1, 0], &r, &Twist::untwisted(3), &opts(3)).unwrap();
        assert_eq!(sols.len(), 1);
        assert!((sols[0].levels()[0][0] - cx(-0.35, 0.0)).norm() < 1e-12);
        assert!(sols[0].residual() < 1e-12);
        let r2 = ratios(2, &[cx(0.0, 0.0), cx(0.3, 0.0)]);
        let sols2 = solve_sector(&[1], &r2, &Twist::untwisted(2), &opts(3)).unwrap();
        assert!((sols2[0].levels()[0][0] - cx(-0.35, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn twisted_magnon_matches_closed_form() {
        // f(u,0) f(u,0.3) = κ_2/κ_1 =: q   ⇒  (1−q)u² + (1.7 + 0.3q)u + 0.7 = 0
        let r = ratios(3, &[cx(0.0, 0.0), cx(0.3, 0.0)]);
        let q = cx(0.8, 0.1);
        let tw = Twist::new(vec![cx(1.0, 0.0), q, cx(1.0, 0.0)]).unwrap();
        let sols = solve_sector(&[1, 0], &r, &tw, &opts(4)).unwrap();
        let (a, b, c) = (1.0 - q, 1.7 + 0.3 * q, cx(0.7, 0.0));
        let disc = (b * b - 4.0 * a * c).sqrt();
        let roots = [(-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a)];
        assert_eq!(sols.len(), 2);
        for s in &sols {
            let u = s.levels()[0][0];
            assert!(roots.iter().any(|x| (x - u).norm() < 1e-10), "{u}");
        }
    }

    #[test]
    fn solutions_are_deterministic_and_canonical() {
        let xi = [cx(0.1, 0.05), cx(0.5, 0.2), cx(0.8, 0.1), cx(0.3, 0.25)];
        let r = ratios(3, &xi);
        let a = solve_sector(&[2, 1], &r, &Twist::untwisted(3), &opts(9)).unwrap();
        let b = solve_sector(&[2, 1], &r, &Twist::untwisted(3), &opts(9)).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
        for s in &a {
            assert!(s.residual() < TOL_ROOT);
            for level in s.levels() {
                assert!(level.windows(2).all(|w| w[0].re <= w[1].re));
            }
        }
    }

    #[test]
    fn derivatives_implicit_vs_fd() {
        let xi = [cx(0.1, 0.05), cx(0.5, 0.2), cx(0.8, 0.1), cx(0.3, 0.25)];
        let r = ratios(3, &xi);
        let sols = solve_sector(&[2, 1], &r, &Twist::untwisted(3), &opts(5)).unwrap();
        let s = &sols[0];
        let mut rescale = vec![C64::new(0.0, 0.0); s.total()];
        for i in 0..3 {
            let d = kappa_derivatives(s, &r, i).unwrap();
            let fd = kappa_derivatives_fd(s, &r, i, 1e-6).unwrap();
            for (a, b) in d.flat().iter().zip(fd.flat()) {
                assert!((a - b).norm() <= 1e-5 * a.norm().max(1e-3), "{a} vs {b}");
            }
            for (acc, v) in rescale.iter_mut().zip(d.flat()) {
                *acc += v;
            }
        }
        assert!(rescale.iter().all(|v| v.norm() < 1e-10));
    }

    #[test]
    fn b_zero_derivatives() {
        let xi = [cx(0.1, 0.05), cx(0.5, 0.2), cx(0.8, 0.1)];
        let r = ratios(3, &xi);
        let sols = solve_sector(&[1, 0], &r, &Twist::untwisted(3), &opts(6)).unwrap();
        for s in &sols {
            let d3 = kappa_derivatives(s, &r, 2).unwrap();
            assert!(d3.levels[1].is_empty());
            assert!(d3.flat().iter().all(|v| v.norm() == 0.0));
            let empty = VacuumRatios::new(3, Coupling::default(), Vec::new()).unwrap();
            let d1 = kappa_derivatives(s, &r, 0).unwrap();
            assert_eq!(log_ell_kappa_derivative(s, &d1, &empty).unwrap(), cx(0.0, 0.0));
        }
    }

    #[test]
    fn revalidation_rejects_perturbed_roots() {
        let r = ratios(3, &[cx(0.0, 0.0), cx(0.3, 0.0)]);
        let tw = Twist::untwisted(3);
        assert!(revalidate(&[vec![cx(-0.35, 0.0)], vec![]], &r, &tw, TOL_ROOT).is_ok());
        assert!(revalidate(&[vec![cx(-0.2, 0.0)], vec![]], &r, &tw, TOL_ROOT).is_err());
    }
}
