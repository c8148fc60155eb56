//! Scalar building blocks: the rational functions of the R-matrix, vacuum
//! ratios, transfer-matrix eigenvalues and the logarithmic Bethe system.
//!
//! Bethe parameters are organised by nesting level. For rank `N` there are
//! `N - 1` levels; in the GL(3) notation level 0 holds `ū` and level 1 holds
//! `v̄`. All products over sets follow the empty-product-is-one convention.

use std::f64::consts::PI;

use thiserror::Error;

use crate::C64;

/// Two Bethe parameters closer than this are treated as coinciding.
pub const TOL_DISTINCT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("coupling constant must be nonzero")]
    ZeroCoupling,
    #[error("pole: {u} and {v} are closer than {tol:e}")]
    Pole { u: C64, v: C64, tol: f64 },
    #[error("expected {expected} twist parameters, got {got}")]
    TwistLength { expected: usize, got: usize },
    #[error("twist parameter {index} is zero")]
    ZeroTwist { index: usize },
    #[error("expected {expected} root levels, got {got}")]
    LevelCount { expected: usize, got: usize },
    #[error("rank must be at least 2, got {0}")]
    Rank(usize),
}

pub type Result<T> = std::result::Result<T, AlgebraError>;

/// The R-matrix constant `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling(C64);

impl Coupling {
    pub fn new(c: C64) -> Result<Self> {
        if c.norm() == 0.0 {
            return Err(AlgebraError::ZeroCoupling);
        }
        Ok(Self(c))
    }

    pub fn real(c: f64) -> Result<Self> {
        Self::new(C64::new(c, 0.0))
    }

    #[inline]
    pub fn value(self) -> C64 {
        self.0
    }

    /// Distance below which `u - v` counts as a pole: `1e-10 * max(1, |c|)`.
    #[inline]
    pub fn tol_pole(self) -> f64 {
        1e-10 * self.0.norm().max(1.0)
    }
}

impl Default for Coupling {
    fn default() -> Self {
        Self(C64::new(1.0, 0.0))
    }
}

#[inline]
fn check_pole(u: C64, v: C64, c: Coupling) -> Result<C64> {
    let d = u - v;
    let tol = c.tol_pole();
    if d.norm() < tol {
        return Err(AlgebraError::Pole { u, v, tol });
    }
    Ok(d)
}

/// `g(u, v) = c / (u - v)`.
pub fn g(u: C64, v: C64, c: Coupling) -> Result<C64> {
    let d = check_pole(u, v, c)?;
    Ok(c.value() / d)
}

/// `f(u, v) = (u - v + c) / (u - v)`.
pub fn f(u: C64, v: C64, c: Coupling) -> Result<C64> {
    let d = check_pole(u, v, c)?;
    Ok((d + c.value()) / d)
}

/// Principal logarithm of `f(u, v)`, failing at both the pole and the zero.
pub fn log_f(u: C64, v: C64, c: Coupling) -> Result<C64> {
    let d = check_pole(u, v, c)?;
    let num = d + c.value();
    if num.norm() < c.tol_pole() {
        return Err(AlgebraError::Pole { u, v: v - c.value(), tol: c.tol_pole() });
    }
    Ok(num.ln() - d.ln())
}

/// `∂/∂u log f(u, v) = 1/(u - v + c) - 1/(u - v)`; the `v` derivative is its negative.
pub fn dlog_f(u: C64, v: C64, c: Coupling) -> Result<C64> {
    let d = check_pole(u, v, c)?;
    let num = d + c.value();
    if num.norm() < c.tol_pole() {
        return Err(AlgebraError::Pole { u, v: v - c.value(), tol: c.tol_pole() });
    }
    Ok(num.inv() - d.inv())
}

/// `f(ū, v̄) = ∏_{u∈ū} ∏_{v∈v̄} f(u, v)`; equal to one if either set is empty.
pub fn prod_f(us: &[C64], vs: &[C64], c: Coupling) -> Result<C64> {
    let mut acc = C64::new(1.0, 0.0);
    for &u in us {
        for &v in vs {
            acc *= f(u, v, c)?;
        }
    }
    Ok(acc)
}

fn sum_log_f(us: &[C64], vs: &[C64], c: Coupling) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for &u in us {
        for &v in vs {
            acc += log_f(u, v, c)?;
        }
    }
    Ok(acc)
}

/// Reduce a logarithm to the strip `-π < Im ≤ π`.
pub fn principal_strip(z: C64) -> C64 {
    let turns = (z.im / (2.0 * PI)).round();
    let mut out = C64::new(z.re, z.im - 2.0 * PI * turns);
    if out.im <= -PI {
        out.im += 2.0 * PI;
    }
    out
}

/// Diagonal twist `κ̄ = (κ_1, …, κ_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Twist(Vec<C64>);

impl Twist {
    pub fn untwisted(rank: usize) -> Self {
        Self(vec![C64::new(1.0, 0.0); rank])
    }

    pub fn new(kappa: Vec<C64>) -> Result<Self> {
        if let Some(index) = kappa.iter().position(|k| k.norm() == 0.0) {
            return Err(AlgebraError::ZeroTwist { index });
        }
        Ok(Self(kappa))
    }

    /// `κ_i = exp(β_i)`.
    pub fn from_exponents(beta: &[C64]) -> Self {
        Self(beta.iter().map(|b| b.exp()).collect())
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[C64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> C64 {
        self.0[i]
    }

    pub fn is_untwisted(&self) -> bool {
        self.0.iter().all(|k| *k == C64::new(1.0, 0.0))
    }

    /// Copy with `κ_i` replaced.
    pub fn with(&self, i: usize, value: C64) -> Self {
        let mut k = self.0.clone();
        k[i] = value;
        Self(k)
    }

    fn check_rank(&self, rank: usize) -> Result<()> {
        if self.0.len() != rank {
            return Err(AlgebraError::TwistLength { expected: rank, got: self.0.len() });
        }
        Ok(())
    }
}

/// Vacuum eigenvalues of a block of fundamental-representation sites.
///
/// `λ_1(w) = ∏_n f(w, ξ_n)` and `λ_i(w) = 1` for `i ≥ 2`. With the sites of the
/// whole chain this yields `r_1`, `r_3 ≡ 1`; with the left block it yields the
/// composite ratios `ℓ_1`, `ℓ_3 ≡ 1`, and with a single site the local ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct VacuumRatios {
    rank: usize,
    coupling: Coupling,
    xi: Vec<C64>,
}

impl VacuumRatios {
    pub fn new(rank: usize, coupling: Coupling, xi: Vec<C64>) -> Result<Self> {
        if rank < 2 {
            return Err(AlgebraError::Rank(rank));
        }
        Ok(Self { rank, coupling, xi })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn inhomogeneities(&self) -> &[C64] {
        &self.xi
    }

    /// `λ_i(w)`, zero-based colour index.
    pub fn lambda(&self, i: usize, w: C64) -> Result<C64> {
        if i == 0 {
            let mut acc = C64::new(1.0, 0.0);
            for &x in &self.xi {
                acc *= f(w, x, self.coupling)?;
            }
            Ok(acc)
        } else {
            Ok(C64::new(1.0, 0.0))
        }
    }

    /// `α_k(t) = λ_k(t) / λ_{k+1}(t)` for level `k` (zero-based).
    pub fn alpha(&self, k: usize, t: C64) -> Result<C64> {
        Ok(self.lambda(k, t)? / self.lambda(k + 1, t)?)
    }

    /// Branch-consistent `log α_k(t)` as a sum of principal logarithms.
    pub fn log_alpha(&self, k: usize, t: C64) -> Result<C64> {
        if k == 0 {
            let mut acc = C64::new(0.0, 0.0);
            for &x in &self.xi {
                acc += log_f(t, x, self.coupling)?;
            }
            Ok(acc)
        } else {
            Ok(C64::new(0.0, 0.0))
        }
    }

    /// `d/dt log α_k(t)`.
    pub fn dlog_alpha(&self, k: usize, t: C64) -> Result<C64> {
        if k == 0 {
            let mut acc = C64::new(0.0, 0.0);
            for &x in &self.xi {
                acc += dlog_f(t, x, self.coupling)?;
            }
            Ok(acc)
        } else {
            Ok(C64::new(0.0, 0.0))
        }
    }

    /// `r_1(w)` in the GL(3) convention (equal to `α_1`).
    pub fn r1(&self, w: C64) -> Result<C64> {
        self.alpha(0, w)
    }

    /// `r_3(w) = λ_3 / λ_2`; identically one for the fundamental chain.
    pub fn r3(&self, w: C64) -> Result<C64> {
        Ok(self.lambda(2.min(self.rank - 1), w)? / self.lambda(1, w)?)
    }

    /// Zero-mode coefficient `λ_i[0]`: the number of sites for colour 0, else zero.
    pub fn zero_mode(&self, i: usize) -> f64 {
        if i == 0 {
            self.xi.len() as f64
        } else {
            0.0
        }
    }

    /// Product `∏_k α_k(t̄^k)` over all levels.
    pub fn alpha_product(&self, levels: &[Vec<C64>]) -> Result<C64> {
        let mut acc = C64::new(1.0, 0.0);
        for (k, level) in levels.iter().enumerate() {
            for &t in level {
                acc *= self.alpha(k, t)?;
            }
        }
        Ok(acc)
    }
}

fn check_levels(levels: &[Vec<C64>], rank: usize) -> Result<()> {
    if levels.len() != rank - 1 {
        return Err(AlgebraError::LevelCount { expected: rank - 1, got: levels.len() });
    }
    Ok(())
}

/// Twisted transfer-matrix eigenvalue
/// `τ(w) = Σ_i κ_i λ_i(w) f(w, t̄^{i-1}) f(t̄^i, w)` with `t̄^0 = t̄^N = ∅`
/// (one-based levels). For rank 3 this is
/// `κ_1 r_1(w) f(ū,w) + κ_2 f(w,ū) f(v̄,w) + κ_3 r_3(w) f(w,v̄)`.
pub fn tau(w: C64, levels: &[Vec<C64>], ratios: &VacuumRatios, twist: &Twist) -> Result<C64> {
    let rank = ratios.rank();
    check_levels(levels, rank)?;
    twist.check_rank(rank)?;
    let c = ratios.coupling();
    let wv = [w];
    let mut total = C64::new(0.0, 0.0);
    for i in 0..rank {
        let mut term = twist.get(i) * ratios.lambda(i, w)?;
        if i >= 1 {
            term *= prod_f(&wv, &levels[i - 1], c)?;
        }
        if i < rank - 1 {
            term *= prod_f(&levels[i], &wv, c)?;
        }
        total += term;
    }
    Ok(total)
}

/// Flat position of root `j` of level `k` in the residual vector.
pub fn level_offsets(levels: &[Vec<C64>]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(levels.len() + 1);
    let mut acc = 0;
    for level in levels {
        offsets.push(acc);
        acc += level.len();
    }
    offsets.push(acc);
    offsets
}

/// Logarithmic (twisted) Bethe residuals, level-major.
///
/// For root `t_j` of level `k`:
/// `log α_k(t_j) − log(κ_{k+1}/κ_k) − Σ_{l≠j}[log f(t_j,t_l) − log f(t_l,t_j)]
///  − log f(t̄^{k+1}, t_j) + log f(t_j, t̄^{k−1})`, reduced to the principal strip.
/// At rank 3 this is the log form of the twisted system with `(κ_2/κ_1)` for
/// `ū` and `(κ_2/κ_3)` for `v̄`.
pub fn bethe_residual(levels: &[Vec<C64>], ratios: &VacuumRatios, twist: &Twist) -> Result<Vec<C64>> {
    let rank = ratios.rank();
    check_levels(levels, rank)?;
    twist.check_rank(rank)?;
    let c = ratios.coupling();
    let mut out = Vec::with_capacity(levels.iter().map(Vec::len).sum());
    for (k, level) in levels.iter().enumerate() {
        let twist_log = twist.get(k + 1).ln() - twist.get(k).ln();
        for (j, &t) in level.iter().enumerate() {
            let mut r = ratios.log_alpha(k, t)? - twist_log;
            for (l, &s) in level.iter().enumerate() {
                if l != j {
                    r -= log_f(t, s, c)? - log_f(s, t, c)?;
                }
            }
            if k + 1 < levels.len() {
                r -= sum_log_f(&levels[k + 1], &[t], c)?;
            }
            if k >= 1 {
                r += sum_log_f(&[t], &levels[k - 1], c)?;
            }
            out.push(principal_strip(r));
        }
    }
    Ok(out)
}

/// Analytic Jacobian `∂ residual_p / ∂ root_q` of [`bethe_residual`], row-major.
pub fn bethe_jacobian(levels: &[Vec<C64>], ratios: &VacuumRatios, twist: &Twist) -> Result<Vec<Vec<C64>>> {
    let rank = ratios.rank();
    check_levels(levels, rank)?;
    twist.check_rank(rank)?;
    let c = ratios.coupling();
    let offsets = level_offsets(levels);
    let n = offsets[levels.len()];
    let zero = C64::new(0.0, 0.0);
    let mut jac = vec![vec![zero; n]; n];
    for (k, level) in levels.iter().enumerate() {
        for (j, &t) in level.iter().enumerate() {
            let p = offsets[k] + j;
            let mut diag = ratios.dlog_alpha(k, t)?;
            for (l, &s) in level.iter().enumerate() {
                if l != j {
                    let both = dlog_f(t, s, c)? + dlog_f(s, t, c)?;
                    diag -= both;
                    jac[p][offsets[k] + l] += both;
                }
            }
            if k + 1 < levels.len() {
                for (l, &s) in levels[k + 1].iter().enumerate() {
                    let d = dlog_f(s, t, c)?;
                    diag += d;
                    jac[p][offsets[k + 1] + l] -= d;
                }
            }
            if k >= 1 {
                for (l, &s) in levels[k - 1].iter().enumerate() {
                    let d = dlog_f(t, s, c)?;
                    diag += d;
                    jac[p][offsets[k - 1] + l] -= d;
                }
            }
            jac[p][p] += diag;
        }
    }
    Ok(jac)
}

/// `∂ residual / ∂ κ_i` (zero-based `i`) at the given twist.
pub fn bethe_twist_gradient(levels: &[Vec<C64>], twist: &Twist, i: usize) -> Vec<C64> {
    let mut out = Vec::new();
    for (k, level) in levels.iter().enumerate() {
        let mut d = C64::new(0.0, 0.0);
        if i == k + 1 {
            d -= twist.get(k + 1).inv();
        }
        if i == k {
            d += twist.get(k).inv();
        }
        out.extend(std::iter::repeat_n(d, level.len()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c1() -> Coupling {
        Coupling::real(1.0).unwrap()
    }

    fn cx(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn g_examples() {
        assert!(close(g(cx(2.0, 0.0), cx(1.0, 0.0), c1()).unwrap(), cx(1.0, 0.0), 1e-15));
        let u = cx(0.3, -1.2);
        let c = Coupling::new(cx(0.7, 0.2)).unwrap();
        assert!(close(g(u, u + c.value(), c).unwrap(), cx(-1.0, 0.0), 1e-15));
        let c2 = Coupling::real(2.0).unwrap();
        assert!(close(g(cx(1.0, 1.0), cx(0.0, 1.0), c2).unwrap(), cx(2.0, 0.0), 1e-15));
    }

    #[test]
    fn f_examples() {
        assert!(close(f(cx(2.0, 0.0), cx(1.0, 0.0), c1()).unwrap(), cx(2.0, 0.0), 1e-15));
        let (u, v) = (cx(3.0, 0.0), cx(1.0, 0.0));
        let lhs = f(u, v, c1()).unwrap() * f(v, u, c1()).unwrap();
        let gg = g(u, v, c1()).unwrap();
        assert!(close(lhs, C64::new(1.0, 0.0) - gg * gg, 1e-15));
        assert!(close(f(cx(1.0, 0.0), cx(0.0, 0.0), c1()).unwrap(), cx(2.0, 0.0), 1e-15));
    }

    #[test]
    fn poles_are_reported() {
        let u = cx(0.5, 0.5);
        assert!(matches!(g(u, u, c1()), Err(AlgebraError::Pole { .. })));
        assert!(matches!(f(u, u + cx(1e-12, 0.0), c1()), Err(AlgebraError::Pole { .. })));
        // zero of f: u - v = -c
        assert!(log_f(u, u + cx(1.0, 0.0), c1()).is_err());
        assert!(matches!(Coupling::real(0.0), Err(AlgebraError::ZeroCoupling)));
    }

    #[test]
    fn prod_f_examples() {
        let two = [cx(1.0, 0.0), cx(2.0, 0.0)];
        assert_eq!(prod_f(&[], &two, c1()).unwrap(), cx(1.0, 0.0));
        assert_eq!(prod_f(&two, &[], c1()).unwrap(), cx(1.0, 0.0));
        assert!(close(prod_f(&[cx(3.0, 0.0)], &two, c1()).unwrap(), cx(3.0, 0.0), 1e-14));
        assert!(close(prod_f(&[cx(5.0, 0.0)], &[cx(2.0, 0.0)], c1()).unwrap(), cx(4.0 / 3.0, 0.0), 1e-15));
    }

    #[test]
    fn tau_without_roots_is_vacuum_sum() {
        let xi = vec![cx(0.1, 0.05), cx(0.6, 0.2)];
        let ratios = VacuumRatios::new(3, c1(), xi).unwrap();
        let w = cx(4.0, 1.0);
        let levels = vec![vec![], vec![]];
        let t = tau(w, &levels, &ratios, &Twist::untwisted(3)).unwrap();
        let expect = ratios.r1(w).unwrap() + C64::new(1.0, 0.0) + ratios.r3(w).unwrap();
        assert!(close(t, expect, 1e-14));
        let tw = Twist::new(vec![cx(2.0, 0.0), cx(1.0, 0.0), cx(1.0, 0.0)]).unwrap();
        let t2 = tau(w, &levels, &ratios, &tw).unwrap();
        assert!(close(t2, ratios.r1(w).unwrap() * 2.0 + 2.0, 1e-14));
    }

    #[test]
    fn tau_rank3_matches_explicit_formula() {
        let xi = vec![cx(0.1, 0.05), cx(0.6, 0.2), cx(0.3, 0.1)];
        let ratios = VacuumRatios::new(3, c1(), xi).unwrap();
        let us = vec![cx(-0.3, 0.4), cx(0.2, -0.7)];
        let vs = vec![cx(0.1, 0.9)];
        let w = cx(2.5, -0.4);
        let c = c1();
        let wv = [w];
        let explicit = ratios.r1(w).unwrap() * prod_f(&us, &wv, c).unwrap()
            + prod_f(&wv, &us, c).unwrap() * prod_f(&vs, &wv, c).unwrap()
            + ratios.r3(w).unwrap() * prod_f(&wv, &vs, c).unwrap();
        let got = tau(w, &[us, vs], &ratios, &Twist::untwisted(3)).unwrap();
        assert!(close(got, explicit, 1e-13));
    }

    #[test]
    fn single_root_jacobian_is_log_derivative_of_r1() {
        let xi = vec![cx(0.0, 0.0), cx(0.3, 0.0)];
        let ratios = VacuumRatios::new(3, c1(), xi).unwrap();
        let u = cx(0.4, 0.8);
        let levels = vec![vec![u], vec![]];
        let jac = bethe_jacobian(&levels, &ratios, &Twist::untwisted(3)).unwrap();
        assert_eq!(jac.len(), 1);
        assert!(close(jac[0][0], ratios.dlog_alpha(0, u).unwrap(), 1e-15));
    }

    #[test]
    fn twist_gradient_only_sees_neighbouring_ratios() {
        let levels = vec![vec![cx(0.1, 0.0), cx(0.2, 0.0)], vec![cx(0.3, 0.0)]];
        let tw = Twist::untwisted(3);
        let g2 = bethe_twist_gradient(&levels, &tw, 2);
        assert_eq!(g2, vec![cx(0.0, 0.0), cx(0.0, 0.0), cx(-1.0, 0.0)]);
        let g0 = bethe_twist_gradient(&levels, &tw, 0);
        assert_eq!(g0, vec![cx(1.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.0)]);
        let g1 = bethe_twist_gradient(&levels, &tw, 1);
        assert_eq!(g1, vec![cx(-1.0, 0.0), cx(-1.0, 0.0), cx(1.0, 0.0)]);
    }

    #[test]
    fn principal_strip_range() {
        for k in -5..=5 {
            let z = principal_strip(cx(0.3, 0.7 + 2.0 * PI * k as f64));
            assert!(close(z, cx(0.3, 0.7), 1e-12));
        }
        assert!(principal_strip(cx(0.0, -PI)).im > 0.0);
    }
}
