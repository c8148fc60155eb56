//! Matrix elements between matched states and the identity checks built on
//! them.
//!
//! Every check compares two quantities that are bilinear in the same pair of
//! vectors `(bra.left, ket.right)`, so the arbitrary spectral normalization
//! cancels. Operator indices are zero-based in the API and one-based in
//! [`VerificationRecord`].

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::algebra::{self, AlgebraError, Twist, VacuumRatios};
use crate::bethe::{self, BetheError, BetheRootSet, RootDerivatives};
use crate::hilbert::{self, bilinear, norm2, HilbertError, ManyBodyOperator};
use crate::model::{self, ModelError, ModelSpec, SiteRange};
use crate::spectral::MatchedState;
use crate::C64;

/// Absolute floor, relative to `‖left‖·‖right‖`, below which two sides
/// count as equal even when their relative difference is large.
pub const ABS_FLOOR: f64 = 1e-10;
/// Smallest admissible `|τ^C(z) − τ^B(z)|`.
pub const TOL_DENOMINATOR: f64 = 1e-6;
/// Modulus floor in the relative residual.
pub const REL_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormFactorError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Bethe(#[from] BetheError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Spectral(#[from] crate::spectral::SpectralError),
    #[error("operator maps occupations {ket:?} to {expected:?}, but the bra has {bra:?}")]
    SectorMismatch { bra: Vec<usize>, ket: Vec<usize>, expected: Vec<usize> },
    #[error("every z sample has |τ^C − τ^B| below {0:e}")]
    DegenerateDenominator(f64),
    #[error("bra and ket are the same state")]
    SameState,
}

pub type Result<T> = std::result::Result<T, FormFactorError>;

/// One identity check.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationRecord {
    pub suite: String,
    pub identity: String,
    pub rank: usize,
    pub sites: usize,
    pub split: usize,
    pub bra: String,
    pub ket: String,
    /// One-based operator row index, when the check involves one.
    pub i: Option<usize>,
    /// One-based operator column index.
    pub j: Option<usize>,
    /// Spectral point, site, or twist exponents, as text.
    pub point: String,
    pub lhs: C64,
    pub rhs: C64,
    pub abs_residual: f64,
    pub rel_residual: f64,
    pub tol: f64,
    pub pass: bool,
    /// Reported for information only; excluded from the overall verdict.
    pub informational: bool,
    pub note: String,
    pub runtime: Duration,
}

impl VerificationRecord {
    /// Scalar comparison: passes when the relative residual is below `tol`
    /// or the absolute residual is below `ABS_FLOOR · scale`.
    pub fn compare(spec: &ModelSpec, suite: &str, identity: &str, lhs: C64, rhs: C64, tol: f64, scale: f64) -> Self {
        let abs = (lhs - rhs).norm();
        let rel = abs / lhs.norm().max(rhs.norm()).max(REL_FLOOR);
        Self {
            suite: suite.into(),
            identity: identity.into(),
            rank: spec.rank(),
            sites: spec.sites(),
            split: spec.split(),
            bra: String::new(),
            ket: String::new(),
            i: None,
            j: None,
            point: String::new(),
            lhs,
            rhs,
            abs_residual: abs,
            rel_residual: rel,
            tol,
            pass: rel < tol || abs < ABS_FLOOR * scale,
            informational: false,
            note: String::new(),
            runtime: Duration::ZERO,
        }
    }

    /// Operator identity `A = B`: `lhs`/`rhs` carry `‖A‖`, `‖B‖` and the
    /// check passes when `‖A − B‖ < tol` (max-norms).
    pub fn operator(spec: &ModelSpec, suite: &str, identity: &str, a: &ManyBodyOperator, b: &ManyBodyOperator, tol: f64) -> Result<Self> {
        let diff = a.sub(b)?.max_norm();
        let (na, nb) = (a.max_norm(), b.max_norm());
        let mut r = Self::compare(spec, suite, identity, C64::new(na, 0.0), C64::new(nb, 0.0), tol, 0.0);
        r.abs_residual = diff;
        r.rel_residual = diff / na.max(nb).max(REL_FLOOR);
        r.pass = diff < tol;
        Ok(r)
    }

    pub fn states(mut self, bra: &MatchedState, ket: &MatchedState) -> Self {
        self.bra = bra.label.clone();
        self.ket = ket.label.clone();
        self
    }

    pub fn indices(mut self, i: usize, j: usize) -> Self {
        self.i = Some(i + 1);
        self.j = Some(j + 1);
        self
    }

    pub fn at(mut self, point: impl Into<String>) -> Self {
        self.point = point.into();
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn informational(mut self) -> Self {
        self.informational = true;
        self
    }

    pub fn timed(mut self, start: Instant) -> Self {
        self.runtime = start.elapsed();
        self
    }
}

/// Operators whose matrix elements are taken between matched states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Operator<'a> {
    Identity,
    /// `T_ij(z)` over a site range.
    Monodromy { i: usize, j: usize, z: C64, range: SiteRange },
    /// `(T^{range}[0])_ij = Σ_{n ∈ range} E_{ji}^{(n)}`.
    ZeroMode { i: usize, j: usize, range: SiteRange },
    /// `t(w)` with the given twist.
    Transfer { w: C64, twist: &'a Twist },
}

impl Operator<'_> {
    pub fn apply(&self, spec: &ModelSpec, x: &[C64]) -> Result<Vec<C64>> {
        Ok(match *self {
            Operator::Identity => x.to_vec(),
            Operator::Monodromy { i, j, z, range } => model::apply_monodromy_entry(spec, z, range, i, j, x)?,
            Operator::ZeroMode { i, j, range } => model::apply_zero_mode(spec, range, i, j, x)?,
            Operator::Transfer { w, twist } => model::apply_transfer(spec, w, twist, x)?,
        })
    }

    /// Occupations of `T_ij · ψ` for `ψ` with occupations `occ`: colour `i`
    /// is turned into colour `j`.
    pub fn image(&self, occ: &[usize]) -> Option<Vec<usize>> {
        match *self {
            Operator::Identity | Operator::Transfer { .. } => Some(occ.to_vec()),
            Operator::Monodromy { i, j, .. } | Operator::ZeroMode { i, j, .. } => shift(occ, i, j),
        }
    }
}

fn shift(occ: &[usize], i: usize, j: usize) -> Option<Vec<usize>> {
    if i == j {
        return Some(occ.to_vec());
    }
    let mut out = occ.to_vec();
    out[i] = out[i].checked_sub(1)?;
    out[j] += 1;
    Some(out)
}

/// Whether `T_ij` connects `ket` to `bra`.
pub fn compatible(bra: &MatchedState, ket: &MatchedState, i: usize, j: usize) -> bool {
    shift(ket.occupations(), i, j).as_deref() == Some(bra.occupations())
}

/// `bra.left · A · ket.right`.
pub fn direct_element(spec: &ModelSpec, bra: &MatchedState, op: Operator<'_>, ket: &MatchedState) -> Result<C64> {
    let expected = op.image(ket.occupations());
    if expected.as_deref() != Some(bra.occupations()) {
        return Err(FormFactorError::SectorMismatch {
            bra: bra.occupations().to_vec(),
            ket: ket.occupations().to_vec(),
            expected: expected.unwrap_or_default(),
        });
    }
    Ok(bilinear(&bra.pair.left, &op.apply(spec, &ket.pair.right)?))
}

/// `‖bra.left‖ · ‖ket.right‖`.
pub fn scale(bra: &MatchedState, ket: &MatchedState) -> f64 {
    norm2(&bra.pair.left) * norm2(&ket.pair.right)
}

/// Universal form factor with its z-stability diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct UniversalFormFactor {
    pub value: C64,
    /// The z sample the value was taken at (largest `|Δτ|`).
    pub z: C64,
    /// `|τ^C(z) − τ^B(z)|` at that sample.
    pub delta: f64,
    /// Smallest admissible `|Δτ|`, which bounds the noise in `spread_abs`.
    pub min_delta: f64,
    /// Max pairwise difference across admissible samples, relative to `max|F|`.
    pub spread: f64,
    /// The same difference, absolute.
    pub spread_abs: f64,
    /// `‖left‖·‖right‖` of the two states.
    pub scale: f64,
    /// Number of admissible samples.
    pub used: usize,
}

impl UniversalFormFactor {
    /// Absolute scale of `prefactor · value`: an absolute error `ε‖l‖‖r‖` in
    /// the matrix element becomes `ε‖l‖‖r‖·|prefactor|/|Δτ|`.
    pub fn floor_scale(&self, prefactor: C64) -> f64 {
        self.scale * (prefactor.norm() / self.delta).max(1.0)
    }
}

/// `⟨C|T_ij(z)|B⟩ / (τ^C(z) − τ^B(z))` over the admissible `z` samples.
/// Eigenvalues come from the (untwisted) root sets.
pub fn universal_ff(
    spec: &ModelSpec,
    bra: &MatchedState,
    ket: &MatchedState,
    i: usize,
    j: usize,
    z_samples: &[C64],
) -> Result<UniversalFormFactor> {
    let ratios = spec.ratios();
    let tw = Twist::untwisted(spec.rank());
    let mut values = Vec::new();
    for &z in z_samples {
        let dt = algebra::tau(z, bra.roots.levels(), &ratios, &tw)? - algebra::tau(z, ket.roots.levels(), &ratios, &tw)?;
        if dt.norm() < TOL_DENOMINATOR {
            continue;
        }
        let el = direct_element(spec, bra, Operator::Monodromy { i, j, z, range: SiteRange::Full }, ket)?;
        values.push((z, el / dt, dt.norm()));
    }
    let best = values
        .iter()
        .max_by(|a, b| a.2.total_cmp(&b.2))
        .ok_or(FormFactorError::DegenerateDenominator(TOL_DENOMINATOR))?;
    let biggest = values.iter().map(|v| v.1.norm()).fold(0.0, f64::max);
    let mut spread_abs = 0.0f64;
    for a in &values {
        for b in &values {
            spread_abs = spread_abs.max((a.1 - b.1).norm());
        }
    }
    Ok(UniversalFormFactor {
        value: best.1,
        z: best.0,
        delta: best.2,
        min_delta: values.iter().map(|v| v.2).fold(f64::INFINITY, f64::min),
        spread: spread_abs / biggest.max(REL_FLOOR),
        spread_abs,
        scale: scale(bra, ket),
        used: values.len(),
    })
}

fn distinct(bra: &MatchedState, ket: &MatchedState) -> Result<()> {
    if bra.label == ket.label && bra.pair.right == ket.pair.right {
        return Err(FormFactorError::SameState);
    }
    Ok(())
}

fn alpha_ratio(block: &VacuumRatios, bra: &BetheRootSet, ket: &BetheRootSet) -> Result<C64> {
    Ok(block.alpha_product(bra.levels())? / block.alpha_product(ket.levels())?)
}

/// Zero-mode form factor of the left block against the universal form factor:
/// `⟨C|T^{(1)}_ij[0]|B⟩ = (∏_k α^{(1)}_k(t̄^{C,k}) / α^{(1)}_k(t̄^{B,k}) − 1) · 𝔉^{(i,j)}`.
/// At rank 3 the product is `ℓ_1(ū^C)ℓ_3(v̄^B) / (ℓ_1(ū^B)ℓ_3(v̄^C))`; the same
/// code path serves every rank.
pub fn verify_thm41(
    spec: &ModelSpec,
    bra: &MatchedState,
    ket: &MatchedState,
    i: usize,
    j: usize,
    z_samples: &[C64],
    tol: f64,
) -> Result<(VerificationRecord, UniversalFormFactor)> {
    let start = Instant::now();
    distinct(bra, ket)?;
    let lhs = direct_element(spec, bra, Operator::ZeroMode { i, j, range: SiteRange::Left }, ket)?;
    let uff = universal_ff(spec, bra, ket, i, j, z_samples)?;
    let ratio = alpha_ratio(&spec.composite().left(), &bra.roots, &ket.roots)?;
    let rhs = (ratio - 1.0) * uff.value;
    let rec = VerificationRecord::compare(spec, "thm41", "partial zero-mode form factor", lhs, rhs, tol, uff.floor_scale(ratio - 1.0))
        .states(bra, ket)
        .indices(i, j)
        .at(format!("z={}", fmt_c(uff.z)))
        .timed(start);
    Ok((rec, uff))
}

/// z-independence record for a universal form factor.
pub fn z_spread_record(spec: &ModelSpec, bra: &MatchedState, ket: &MatchedState, i: usize, j: usize, uff: &UniversalFormFactor, tol: f64) -> VerificationRecord {
    let mut r = VerificationRecord::compare(spec, "thm41", "universal form factor z-independence", uff.value, uff.value, tol, 0.0)
        .states(bra, ket)
        .indices(i, j)
        .at(format!("{} samples", uff.used));
    r.abs_residual = uff.spread_abs;
    r.rel_residual = uff.spread;
    r.pass = uff.spread < tol || uff.spread_abs < ABS_FLOOR * uff.scale / uff.min_delta.min(1.0);
    r
}

/// `d/dκ_i Σ_k log α_k(t̄^k(κ))` for the given block, via implicit derivatives.
pub fn log_ratio_derivative(state: &MatchedState, block: &VacuumRatios, derivs: &RootDerivatives) -> Result<C64> {
    Ok(bethe::log_ell_kappa_derivative(&state.roots, derivs, block)?)
}

/// Diagonal zero-mode form factor:
/// `⟨B|T^{(1)}_ii[0]|B⟩ / ⟨B|B⟩ = λ^{(1)}_i[0] + d/dκ_i Σ_k log α^{(1)}_k(t̄^k(κ))`,
/// i.e. `δ_{i1}ℓ_1[0] + δ_{i3}ℓ_3[0] + d/dκ_i log(ℓ_1(ū)/ℓ_3(v̄))` at rank 3.
pub fn verify_thm42(spec: &ModelSpec, state: &MatchedState, i: usize, derivs: &RootDerivatives, tol: f64) -> Result<VerificationRecord> {
    let start = Instant::now();
    let el = direct_element(spec, state, Operator::ZeroMode { i, j: i, range: SiteRange::Left }, state)?;
    let lhs = el / state.pair.pairing;
    let comp = spec.composite();
    let rhs = comp.lambda_zero(i) + log_ratio_derivative(state, &comp.left(), derivs)?;
    Ok(VerificationRecord::compare(spec, "thm42", "diagonal partial zero-mode form factor", lhs, rhs, tol, 1.0)
        .states(state, state)
        .indices(i, i)
        .timed(start))
}

/// Implicit vs finite-difference κ-derivatives of one state's roots: the
/// records compare `d/dκ_i log ℓ` and the largest root-level discrepancy.
pub fn verify_kappa_derivatives(
    spec: &ModelSpec,
    state: &MatchedState,
    i: usize,
    implicit: &RootDerivatives,
    fd: &RootDerivatives,
    tol: f64,
) -> Result<VerificationRecord> {
    let left = spec.composite().left();
    let a = log_ratio_derivative(state, &left, implicit)?;
    let b = log_ratio_derivative(state, &left, fd)?;
    let mut rec = VerificationRecord::compare(spec, "thm42", "kappa derivative implicit vs finite difference", a, b, tol, 1e-3)
        .states(state, state)
        .indices(i, i);
    let worst = implicit
        .flat()
        .iter()
        .zip(fd.flat())
        .map(|(x, y)| (x - y).norm() / x.norm().max(y.norm()).max(1e-3))
        .fold(0.0, f64::max);
    rec.rel_residual = rec.rel_residual.max(worst);
    rec.pass = rec.pass && worst < tol;
    Ok(rec)
}

/// Note attached to rank ≥ 4 partial zero-mode records.
pub const CONJECTURE_NOTE: &str = "conjecture evidence, not a proved claim";

/// Partial zero-mode form factor at any rank: the off-diagonal form for
/// distinct states, the diagonal form (with implicit κ-derivatives) when
/// `bra` and `ket` coincide and `i == j`. Records at rank ≥ 4 carry
/// [`CONJECTURE_NOTE`].
#[allow(non_snake_case)]
pub fn verify_glN_conjecture(
    spec: &ModelSpec,
    bra: &MatchedState,
    ket: &MatchedState,
    i: usize,
    j: usize,
    z_samples: &[C64],
    tol: f64,
) -> Result<VerificationRecord> {
    let mut rec = if bra.label == ket.label && i == j {
        let derivs = bethe::kappa_derivatives(&bra.roots, &spec.ratios(), i)?;
        verify_thm42(spec, bra, i, &derivs, tol)?
    } else {
        verify_thm41(spec, bra, ket, i, j, z_samples, tol)?.0
    };
    rec.suite = "glN".into();
    rec.note = if spec.rank() >= 4 { CONJECTURE_NOTE.into() } else { "proved regime".into() };
    Ok(rec)
}

/// Generating functional: with `Q = Σ_i β_i T^{(1)}_ii[0]` and the bra an
/// eigenvector of the transfer matrix twisted by `κ_i = e^{β_i}`,
/// `⟨C^κ| e^Q |B⟩ = e^{Σ_i β_i λ^{(1)}_i[0]} · ∏_k α^{(1)}_k(t̄^{C,k})/α^{(1)}_k(t̄^{B,k}) · ⟨C^κ|B⟩`.
pub fn verify_lemma51(spec: &ModelSpec, beta: &[C64], bra: &MatchedState, ket: &MatchedState, tol: f64) -> Result<VerificationRecord> {
    let start = Instant::now();
    if bra.occupations() != ket.occupations() {
        return Err(FormFactorError::SectorMismatch {
            bra: bra.occupations().to_vec(),
            ket: ket.occupations().to_vec(),
            expected: ket.occupations().to_vec(),
        });
    }
    let basis = spec.basis();
    let left_sites = 0..spec.split();
    // Q is diagonal in the product basis: its eigenvalue is Σ_i β_i n_i(left)
    let mut lhs = C64::new(0.0, 0.0);
    for (x, (&l, &r)) in bra.pair.left.iter().zip(&ket.pair.right).enumerate() {
        if l == C64::new(0.0, 0.0) || r == C64::new(0.0, 0.0) {
            continue;
        }
        let occ = basis.occupations_on(x, left_sites.clone());
        let q: C64 = occ.iter().zip(beta).map(|(&n, &b)| b * n as f64).sum();
        lhs += l * q.exp() * r;
    }
    let comp = spec.composite();
    let zero: C64 = beta.iter().enumerate().map(|(i, &b)| b * comp.lambda_zero(i)).sum();
    let ratio = alpha_ratio(&comp.left(), &bra.roots, &ket.roots)?;
    let rhs = zero.exp() * ratio * bilinear(&bra.pair.left, &ket.pair.right);
    Ok(VerificationRecord::compare(spec, "lemma51", "generating functional", lhs, rhs, tol, scale(bra, ket))
        .states(bra, ket)
        .at(format!("beta=[{}]", beta.iter().map(|b| fmt_c(*b)).collect::<Vec<_>>().join(";")))
        .timed(start))
}

/// Local operator `E_{ji}^{(site)} = (L_site[0])_ij` between distinct states:
/// `(r_site − 1) · ∏_{n<site} r_n · 𝔉^{(i,j)}` with per-site ratios
/// `r_n = ∏_k α_k(t̄^{C,k}|n) / α_k(t̄^{B,k}|n)`.
#[allow(clippy::too_many_arguments)]
pub fn verify_local_offdiag(
    spec: &ModelSpec,
    bra: &MatchedState,
    ket: &MatchedState,
    i: usize,
    j: usize,
    site: usize,
    uff: &UniversalFormFactor,
    tol: f64,
) -> Result<VerificationRecord> {
    let start = Instant::now();
    distinct(bra, ket)?;
    let lhs = direct_element(spec, bra, Operator::ZeroMode { i, j, range: SiteRange::Span(site, site + 1) }, ket)?;
    let comp = spec.composite();
    let mut before = C64::new(1.0, 0.0);
    for n in 0..site {
        before *= alpha_ratio(&comp.local(n), &bra.roots, &ket.roots)?;
    }
    let here = alpha_ratio(&comp.local(site), &bra.roots, &ket.roots)?;
    let rhs = (here - 1.0) * before * uff.value;
    Ok(VerificationRecord::compare(spec, "local", "local operator form factor", lhs, rhs, tol, uff.floor_scale((here - 1.0) * before))
        .states(bra, ket)
        .indices(i, j)
        .at(format!("site={}", site + 1))
        .timed(start))
}

/// Local operator `E_{ii}^{(site)}` on one state:
/// `λ_i(·|site)[0] + d/dκ_i Σ_k log α_k(t̄^k(κ)|site)`.
pub fn verify_local_diag(spec: &ModelSpec, state: &MatchedState, i: usize, site: usize, derivs: &RootDerivatives, tol: f64) -> Result<VerificationRecord> {
    let start = Instant::now();
    let el = direct_element(spec, state, Operator::ZeroMode { i, j: i, range: SiteRange::Span(site, site + 1) }, state)?;
    let lhs = el / state.pair.pairing;
    let local = spec.composite().local(site);
    let rhs = local.zero_mode(i) + log_ratio_derivative(state, &local, derivs)?;
    Ok(VerificationRecord::compare(spec, "local", "local operator diagonal form factor", lhs, rhs, tol, 1.0)
        .states(state, state)
        .indices(i, i)
        .at(format!("site={}", site + 1))
        .timed(start))
}

/// Σ over the left-block sites of local matrix elements equals the
/// partial-zero-mode matrix element.
pub fn verify_telescoping(spec: &ModelSpec, bra: &MatchedState, ket: &MatchedState, i: usize, j: usize, tol: f64) -> Result<VerificationRecord> {
    let mut sum = C64::new(0.0, 0.0);
    for site in 0..spec.split() {
        sum += direct_element(spec, bra, Operator::ZeroMode { i, j, range: SiteRange::Span(site, site + 1) }, ket)?;
    }
    let whole = direct_element(spec, bra, Operator::ZeroMode { i, j, range: SiteRange::Left }, ket)?;
    let mut rec = VerificationRecord::compare(spec, "local", "telescoping over left sites", sum, whole, tol, 0.0)
        .states(bra, ket)
        .indices(i, j);
    // exactness is judged on the absolute scale of the vectors
    rec.pass = rec.abs_residual < tol * scale(bra, ket).max(1.0);
    Ok(rec)
}

/// Zero-mode commutator relations, as exact operator identities.
pub fn verify_commutators(spec: &ModelSpec, tol: f64) -> Result<Vec<VerificationRecord>> {
    let n = spec.rank();
    let full = model::build_zero_mode(spec, SiteRange::Full)?;
    let left = model::build_zero_mode(spec, SiteRange::Left)?;
    let right = model::build_zero_mode(spec, SiteRange::Right)?;
    let zero = ManyBodyOperator::zeros(spec.dim());
    let mut out = Vec::new();
    let suite = "commutators";
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let start = Instant::now();
            let a = left.entry(i, i).commutator(full.entry(j, i))?;
            out.push(VerificationRecord::operator(spec, suite, "[T1_ii[0], T_ji[0]] = T1_ji[0]", &a, left.entry(j, i), tol)?.indices(i, j).timed(start));
            let start = Instant::now();
            let b = full.entry(i, j).commutator(left.entry(i, i))?;
            out.push(VerificationRecord::operator(spec, suite, "[T_ij[0], T1_ii[0]] = T1_ij[0]", &b, left.entry(i, j), tol)?.indices(i, j).timed(start));
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let start = Instant::now();
                let c = full.entry(i, j).commutator(left.entry(k, i))?;
                out.push(
                    VerificationRecord::operator(spec, suite, "[T_ij[0], T1_ki[0]] = T1_kj[0]", &c, left.entry(k, j), tol)?
                        .indices(i, j)
                        .at(format!("k={}", k + 1))
                        .timed(start),
                );
            }
        }
    }
    // [T_ij[0], T_kl[0]] = δ_il T_kj[0] − δ_kj T_il[0], and the two blocks commute
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let start = Instant::now();
                    let lhs = full.entry(i, j).commutator(full.entry(k, l))?;
                    let mut rhs = zero.clone();
                    if i == l {
                        rhs = rhs.add(full.entry(k, j))?;
                    }
                    if k == j {
                        rhs = rhs.sub(full.entry(i, l))?;
                    }
                    let at = format!("k={},l={}", k + 1, l + 1);
                    out.push(VerificationRecord::operator(spec, suite, "[T_ij[0], T_kl[0]] zero-mode algebra", &lhs, &rhs, tol)?.indices(i, j).at(at.clone()).timed(start));
                    let start = Instant::now();
                    let blocks = left.entry(i, j).commutator(right.entry(k, l))?;
                    out.push(VerificationRecord::operator(spec, suite, "[T1_ij[0], T2_kl[0]] = 0", &blocks, &zero, tol)?.indices(i, j).at(at).timed(start));
                }
            }
        }
    }
    Ok(out)
}

/// Singular-vector and weight records for one matched highest-weight state.
pub fn verify_zero_mode_actions(spec: &ModelSpec, state: &MatchedState, tol_singular: f64, tol_diag: f64) -> Result<Vec<VerificationRecord>> {
    let start = Instant::now();
    let sing = crate::spectral::singular_residual(spec, state)?;
    let mut a = VerificationRecord::compare(spec, "zero-modes", "singular vector property", C64::new(sing, 0.0), C64::new(0.0, 0.0), tol_singular, 0.0)
        .states(state, state)
        .timed(start);
    a.pass = sing < tol_singular;
    a.rel_residual = sing;
    let mut out = vec![a];
    let r = &state.pair.right;
    let nr = norm2(r);
    for (k, &nk) in state.occupations().iter().enumerate() {
        let start = Instant::now();
        let y = model::apply_zero_mode(spec, SiteRange::Full, k, k, r)?;
        let eig = bilinear(&state.pair.left, &y) / state.pair.pairing;
        let res = y.iter().zip(r).map(|(a, b)| (a - b * nk as f64).norm_sqr()).sum::<f64>().sqrt() / nr;
        let mut rec = VerificationRecord::compare(spec, "zero-modes", "diagonal zero-mode eigenvalue", eig, C64::new(nk as f64, 0.0), tol_diag, 0.0)
            .states(state, state)
            .indices(k, k)
            .timed(start);
        rec.pass = rec.pass && res < tol_diag;
        rec.abs_residual = rec.abs_residual.max(res);
        out.push(rec);
    }
    Ok(out)
}

/// Orthogonality of distinct on-shell states under `t(w)`.
pub fn verify_orthogonality(spec: &ModelSpec, bra: &MatchedState, ket: &MatchedState, w: C64, tol: f64) -> Result<VerificationRecord> {
    distinct(bra, ket)?;
    let tw = Twist::untwisted(spec.rank());
    let el = direct_element(spec, bra, Operator::Transfer { w, twist: &tw }, ket)?;
    let s = scale(bra, ket);
    let mut rec = VerificationRecord::compare(spec, "bethe", "orthogonality of on-shell states", el, C64::new(0.0, 0.0), tol, s)
        .states(bra, ket)
        .at(format!("w={}", fmt_c(w)));
    rec.rel_residual = el.norm() / s;
    rec.pass = rec.rel_residual < tol;
    Ok(rec)
}

/// Antimorphism relation `𝔉^{(i,j)}(C;B) = −𝔉^{(j,i)}(B;C)`.
///
/// Spectral left and right vectors differ from the dual/ordinary Bethe
/// vectors by per-state factors, so the relation can only hold as
/// `𝔉^{(i,j)}(X;Y) = −(ρ_X/ρ_Y) 𝔉^{(j,i)}(Y;X)` with `ρ_X` the ratio of the
/// two normalizations of `X`. `ρ` is fixed along a spanning tree (first
/// usable edge per state, deterministic order) and every other relation is
/// a genuine check. The raw relation (`ρ ≡ 1`) is reported as information.
pub fn verify_morphism(spec: &ModelSpec, states: &[MatchedState], z_samples: &[C64], tol: f64) -> Result<Vec<VerificationRecord>> {
    let n = spec.rank();
    struct Edge {
        x: usize,
        y: usize,
        i: usize,
        j: usize,
        fwd: C64,
        back: C64,
        /// floor scale of the forward value, and of the gauge-transported back value
        scale: f64,
    }
    let mut edges = Vec::new();
    for x in 0..states.len() {
        for y in 0..states.len() {
            if x == y {
                continue;
            }
            for i in 0..n {
                for j in 0..n {
                    if !compatible(&states[x], &states[y], i, j) {
                        continue;
                    }
                    // ordered pairs cover both orientations once each; keep x < y
                    if x > y {
                        continue;
                    }
                    let f = universal_ff(spec, &states[x], &states[y], i, j, z_samples)?;
                    let b = universal_ff(spec, &states[y], &states[x], j, i, z_samples)?;
                    let scale = f.floor_scale(C64::new(1.0, 0.0)).max(b.floor_scale(C64::new(1.0, 0.0)));
                    edges.push(Edge { x, y, i, j, fwd: f.value, back: b.value, scale });
                }
            }
        }
    }
    let usable = |e: &Edge| e.fwd.norm() > 1e-4 * e.scale && e.back.norm() > 1e-4 * e.scale;
    let mut rho: Vec<Option<C64>> = vec![None; states.len()];
    let mut tree = vec![false; edges.len()];
    if !states.is_empty() {
        rho[0] = Some(C64::new(1.0, 0.0));
    }
    loop {
        let mut grew = false;
        for (k, e) in edges.iter().enumerate() {
            if tree[k] || !usable(e) {
                continue;
            }
            // 𝔉(X;Y) = −(ρ_X/ρ_Y) 𝔉(Y;X)
            match (rho[e.x], rho[e.y]) {
                (Some(rx), None) => {
                    rho[e.y] = Some(-rx * e.back / e.fwd);
                    tree[k] = true;
                    grew = true;
                }
                (None, Some(ry)) => {
                    rho[e.x] = Some(-ry * e.fwd / e.back);
                    tree[k] = true;
                    grew = true;
                }
                _ => {}
            }
        }
        if !grew {
            // start a new component from its first unreached state
            match rho.iter().position(Option::is_none) {
                Some(p) if edges.iter().any(|e| (e.x == p || e.y == p) && usable(e)) => rho[p] = Some(C64::new(1.0, 0.0)),
                _ => break,
            }
        }
    }
    let mut out = Vec::new();
    for (k, e) in edges.iter().enumerate() {
        let (sx, sy) = (&states[e.x], &states[e.y]);
        let raw = VerificationRecord::compare(spec, "morphism", "antimorphism, raw spectral normalization", e.fwd, -e.back, tol, e.scale)
            .states(sx, sy)
            .indices(e.i, e.j)
            .informational();
        out.push(raw);
        if tree[k] {
            continue;
        }
        if let (Some(rx), Some(ry)) = (rho[e.x], rho[e.y]) {
            let gauge = rx / ry;
            let rhs = -gauge * e.back;
            let floor = e.scale * gauge.norm().max(1.0);
            out.push(
                VerificationRecord::compare(spec, "morphism", "antimorphism, per-state normalization", e.fwd, rhs, tol, floor)
                    .states(sx, sy)
                    .indices(e.i, e.j),
            );
        }
    }
    Ok(out)
}

/// `a+bi` with 17 significant digits.
pub fn fmt_c(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:.16e}{}{:.16e}i", z.re, sign, z.im.abs())
}

/// Helper for callers that want `E_{ji}^{(site)}` as a dense operator.
pub fn local_operator(spec: &ModelSpec, i: usize, j: usize, site: usize) -> Result<ManyBodyOperator> {
    Ok(hilbert::embed_elementary(j, i, site, spec.basis())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Coupling;
    use crate::bethe::SolverOptions;
    use crate::spectral::{build_inventory, default_sample_points, Inventory, TOL_MATCH};

    fn inventory(spec: &ModelSpec, sectors: &[Vec<usize>], seed: u64) -> Inventory {
        let tw = Twist::untwisted(spec.rank());
        let ratios = spec.ratios();
        let solve = |c: &[usize]| bethe::solve_sector(c, &ratios, &tw, &SolverOptions { seed, ..Default::default() });
        let samples = default_sample_points(spec, 6, seed);
        build_inventory(spec, &tw, sectors, &samples, 3, TOL_MATCH, false, &solve).unwrap()
    }

    #[test]
    fn identity_and_transfer_elements() {
        let s = ModelSpec::seeded(3, 3, Coupling::default(), 1, 3).unwrap();
        let inv = inventory(&s, &[vec![1, 0]], 3);
        let st = &inv.states[0];
        let id = direct_element(&s, st, Operator::Identity, st).unwrap();
        assert!((id - st.pair.pairing).norm() < 1e-14);
        let tw = Twist::untwisted(3);
        let w = C64::new(4.0, 1.0);
        let el = direct_element(&s, st, Operator::Transfer { w, twist: &tw }, st).unwrap();
        let tau = algebra::tau(w, st.roots.levels(), &s.ratios(), &tw).unwrap();
        assert!((el - tau * id).norm() < 1e-10 * id.norm());
        let err = direct_element(&s, st, Operator::ZeroMode { i: 0, j: 1, range: SiteRange::Left }, st);
        assert!(matches!(err, Err(FormFactorError::SectorMismatch { .. })));
    }

    #[test]
    fn rescaling_the_bra_scales_the_universal_form_factor() {
        let s = ModelSpec::seeded(3, 3, Coupling::default(), 1, 4).unwrap();
        let inv = inventory(&s, &[vec![1, 0]], 4);
        let (a, b) = (&inv.states[0], &inv.states[1]);
        let z = default_sample_points(&s, 5, 40);
        let f = universal_ff(&s, a, b, 1, 1, &z).unwrap();
        let k = C64::new(7.0, 1.0);
        let mut scaled = a.clone();
        scaled.pair.left.iter_mut().for_each(|x| *x *= k);
        let g = universal_ff(&s, &scaled, b, 1, 1, &z).unwrap();
        assert!((g.value - f.value * k).norm() < 1e-12 * g.value.norm());
        assert!(f.spread < 1e-8);
    }

    #[test]
    fn records_use_relative_or_floor() {
        let s = ModelSpec::seeded(3, 2, Coupling::default(), 1, 1).unwrap();
        let r = VerificationRecord::compare(&s, "x", "y", C64::new(1.0, 0.0), C64::new(1.0 + 1e-9, 0.0), 1e-8, 1.0);
        assert!(r.pass);
        let r = VerificationRecord::compare(&s, "x", "y", C64::new(1e-14, 0.0), C64::new(-1e-14, 0.0), 1e-8, 1.0);
        assert!(r.pass && r.rel_residual > 1.0);
        let r = VerificationRecord::compare(&s, "x", "y", C64::new(1.0, 0.0), C64::new(1.1, 0.0), 1e-8, 1.0);
        assert!(!r.pass);
        assert_eq!(fmt_c(C64::new(0.5, -0.25)), "5.0000000000000000e-1-2.5000000000000000e-1i");
    }
}
