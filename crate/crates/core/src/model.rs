//! Concrete inhomogeneous chain in the fundamental representation.
//!
//! Every site carries `L_n(u)_{ij} = δ_ij + g(u, ξ_n) E_{ji}^{(n)}`, and the
//! monodromy over a site range is the ordered product with the highest site
//! leftmost. Two evaluation paths are offered:
//!
//! * dense operator-valued matrices ([`build_monodromy`], [`build_zero_mode`],
//!   [`transfer_matrix`]) for structural checks on small chains;
//! * vector propagation ([`apply_monodromy_column`], [`apply_monodromy_row`],
//!   [`transfer_block`]) which never forms an `N^M × N^M` matrix and is what
//!   the spectral and form-factor layers use.

use std::ops::Range;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebra::{self, AlgebraError, Coupling, Twist, VacuumRatios, TOL_DISTINCT};
use crate::hilbert::{self, Basis, HilbertError, ManyBodyOperator, WeightSector, DEFAULT_MAX_DIMENSION};
use crate::C64;

/// Largest space on which full dense operator arrays are built (`3^6`).
pub const DENSE_OPERATOR_LIMIT: usize = 729;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error("expected {expected} inhomogeneities, got {got}")]
    InhomogeneityCount { expected: usize, got: usize },
    #[error("inhomogeneities {p} and {q} coincide")]
    Coincident { p: usize, q: usize },
    #[error("inhomogeneities {p} and {q} differ by ±c")]
    ShiftedByCoupling { p: usize, q: usize },
    #[error("split site {split} outside 1..{sites}")]
    Split { split: usize, sites: usize },
    #[error("dense operators need dimension ≤ {max}, got {dim}")]
    DenseLimit { dim: usize, max: usize },
    #[error("site range {start}..{end} not inside 0..{sites}")]
    Range { start: usize, end: usize, sites: usize },
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Chain definition.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    rank: usize,
    coupling: Coupling,
    xi: Vec<C64>,
    split: usize,
    twist: Twist,
    basis: Basis,
}

impl ModelSpec {
    /// Validates the inhomogeneities and the split. A split of `0` or `M`
    /// is accepted (one block is empty); [`ModelSpec::check_composite`]
    /// enforces a proper split.
    pub fn new(rank: usize, coupling: Coupling, xi: Vec<C64>, split: usize, twist: Twist) -> Result<Self> {
        Self::with_max_dim(rank, coupling, xi, split, twist, DEFAULT_MAX_DIMENSION)
    }

    pub fn with_max_dim(
        rank: usize,
        coupling: Coupling,
        xi: Vec<C64>,
        split: usize,
        twist: Twist,
        max_dim: usize,
    ) -> Result<Self> {
        let sites = xi.len();
        let basis = Basis::new(rank, sites, max_dim)?;
        if twist.rank() != rank {
            return Err(AlgebraError::TwistLength { expected: rank, got: twist.rank() }.into());
        }
        if split > sites {
            return Err(ModelError::Split { split, sites });
        }
        let c = coupling.value();
        for p in 0..sites {
            for q in p + 1..sites {
                let d = xi[p] - xi[q];
                if d.norm() <= TOL_DISTINCT {
                    return Err(ModelError::Coincident { p, q });
                }
                if (d - c).norm() <= TOL_DISTINCT || (d + c).norm() <= TOL_DISTINCT {
                    return Err(ModelError::ShiftedByCoupling { p, q });
                }
            }
        }
        Ok(Self { rank, coupling, xi, split, twist, basis })
    }

    /// Untwisted chain with seeded random inhomogeneities.
    pub fn seeded(rank: usize, sites: usize, coupling: Coupling, split: usize, seed: u64) -> Result<Self> {
        let xi = random_inhomogeneities(sites, coupling, seed);
        Self::new(rank, coupling, xi, split, Twist::untwisted(rank))
    }

    pub fn check_composite(&self) -> Result<()> {
        if self.split == 0 || self.split >= self.sites() {
            return Err(ModelError::Split { split: self.split, sites: self.sites() });
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn sites(&self) -> usize {
        self.xi.len()
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn inhomogeneities(&self) -> &[C64] {
        &self.xi
    }

    pub fn split(&self) -> usize {
        self.split
    }

    pub fn twist(&self) -> &Twist {
        &self.twist
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn with_twist(&self, twist: Twist) -> Result<Self> {
        if twist.rank() != self.rank {
            return Err(AlgebraError::TwistLength { expected: self.rank, got: twist.rank() }.into());
        }
        Ok(Self { twist, ..self.clone() })
    }

    pub fn with_split(&self, split: usize) -> Result<Self> {
        if split > self.sites() {
            return Err(ModelError::Split { split, sites: self.sites() });
        }
        Ok(Self { split, ..self.clone() })
    }

    pub fn sector(&self, occupations: &[usize]) -> Result<WeightSector> {
        Ok(self.basis.sector(occupations)?)
    }

    /// Vacuum ratios of the whole chain (`r_k`).
    pub fn ratios(&self) -> VacuumRatios {
        VacuumRatios::new(self.rank, self.coupling, self.xi.clone()).expect("rank validated")
    }

    pub fn composite(&self) -> CompositeRatios {
        CompositeRatios { spec: self.clone() }
    }

    fn resolve(&self, range: SiteRange) -> Result<Range<usize>> {
        let r = range.sites(self.sites(), self.split);
        if r.start > r.end || r.end > self.sites() {
            return Err(ModelError::Range { start: r.start, end: r.end, sites: self.sites() });
        }
        Ok(r)
    }

    fn check_pole(&self, u: C64, sites: &Range<usize>) -> Result<()> {
        for n in sites.clone() {
            algebra::g(u, self.xi[n], self.coupling)?;
        }
        Ok(())
    }
}

/// Inhomogeneities uniform in `[0,1] + i[0,0.3]`, resampled until pairwise
/// separated and free of `±c` coincidences by a comfortable margin.
pub fn random_inhomogeneities(sites: usize, coupling: Coupling, seed: u64) -> Vec<C64> {
    const MARGIN: f64 = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = coupling.value();
    let mut xi: Vec<C64> = Vec::with_capacity(sites);
    while xi.len() < sites {
        let cand = C64::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..0.3));
        let ok = xi.iter().all(|&x| {
            let d = cand - x;
            d.norm() > MARGIN && (d - c).norm() > MARGIN && (d + c).norm() > MARGIN
        });
        if ok {
            xi.push(cand);
        }
    }
    xi
}

/// A contiguous block of sites (zero-based, half-open).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteRange {
    Full,
    /// Sites `0..split`.
    Left,
    /// Sites `split..M`.
    Right,
    Span(usize, usize),
}

impl SiteRange {
    pub fn sites(self, total: usize, split: usize) -> Range<usize> {
        match self {
            SiteRange::Full => 0..total,
            SiteRange::Left => 0..split,
            SiteRange::Right => split..total,
            SiteRange::Span(a, b) => a..b,
        }
    }
}

/// Site-local `L_n(u)`: `N²` entries, each an `N × N` matrix on the site.
pub fn build_l(spec: &ModelSpec, site: usize, u: C64) -> Result<Vec<Mat<C64>>> {
    if site >= spec.sites() {
        return Err(HilbertError::IndexOutOfRange { what: "site", value: site, bound: spec.sites() }.into());
    }
    let n = spec.rank();
    let g = algebra::g(u, spec.xi[site], spec.coupling)?;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            // δ_ij·1 + g E_{ji}
            out.push(Mat::from_fn(n, n, |r, c| {
                let mut v = C64::new(0.0, 0.0);
                if i == j && r == c {
                    v += 1.0;
                }
                if r == j && c == i {
                    v += g;
                }
                v
            }));
        }
    }
    Ok(out)
}

/// Operator-valued `N × N` matrix (monodromy or zero mode).
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    rank: usize,
    entries: Vec<ManyBodyOperator>,
}

impl OperatorMatrix {
    fn identity(rank: usize, dim: usize) -> Self {
        let entries = (0..rank * rank)
            .map(|k| if k / rank == k % rank { ManyBodyOperator::identity(dim) } else { ManyBodyOperator::zeros(dim) })
            .collect();
        Self { rank, entries }
    }

    fn zeros(rank: usize, dim: usize) -> Self {
        Self { rank, entries: (0..rank * rank).map(|_| ManyBodyOperator::zeros(dim)).collect() }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Entry `(i, j)`, zero-based.
    pub fn entry(&self, i: usize, j: usize) -> &ManyBodyOperator {
        &self.entries[i * self.rank + j]
    }

    /// Auxiliary-space product `(self · other)_{ij} = Σ_k self_{ik} other_{kj}`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        let n = self.rank;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = ManyBodyOperator::zeros(self.entry(0, 0).dim());
                for k in 0..n {
                    acc = acc.add(&self.entry(i, k).mul(other.entry(k, j))?)?;
                }
                entries.push(acc);
            }
        }
        Ok(Self { rank: n, entries })
    }

    /// Largest entrywise max-norm of `self − other`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        let mut m = 0.0f64;
        for (a, b) in self.entries.iter().zip(&other.entries) {
            m = m.max(a.sub(b)?.max_norm());
        }
        Ok(m)
    }
}

pub type Monodromy = OperatorMatrix;
pub type ZeroMode = OperatorMatrix;

fn dense_guard(spec: &ModelSpec) -> Result<()> {
    if spec.dim() > DENSE_OPERATOR_LIMIT {
        return Err(ModelError::DenseLimit { dim: spec.dim(), max: DENSE_OPERATOR_LIMIT });
    }
    Ok(())
}

/// `dst += coeff · E_{ab}^{(site)} · src` for dense matrices (row relabelling).
fn add_left_elementary(basis: &Basis, a: usize, b: usize, site: usize, coeff: C64, src: &Mat<C64>, dst: &mut Mat<C64>) {
    let stride = basis.stride(site);
    let rank = basis.rank();
    let cols = src.ncols();
    for row in 0..src.nrows() {
        if (row / stride) % rank != b {
            continue;
        }
        let target = row + a * stride - b * stride;
        for col in 0..cols {
            let v = src[(row, col)];
            if v != C64::new(0.0, 0.0) {
                dst[(target, col)] += coeff * v;
            }
        }
    }
}

/// Dense monodromy `T(u) = L_{end-1}(u) ⋯ L_{start}(u)` over `range`.
pub fn build_monodromy(spec: &ModelSpec, u: C64, range: SiteRange) -> Result<Monodromy> {
    dense_guard(spec)?;
    let sites = spec.resolve(range)?;
    spec.check_pole(u, &sites)?;
    let n = spec.rank();
    let mut t = OperatorMatrix::identity(n, spec.dim());
    for site in sites {
        let g = algebra::g(u, spec.xi[site], spec.coupling)?;
        // T_ij ← T_ij + g Σ_k E_{ki} T_kj
        let mut next = t.clone();
        for i in 0..n {
            for j in 0..n {
                let mut acc = next.entries[i * n + j].mat().clone();
                for k in 0..n {
                    add_left_elementary(spec.basis(), k, i, site, g, t.entry(k, j).mat(), &mut acc);
                }
                next.entries[i * n + j] = ManyBodyOperator::from_mat(acc)?;
            }
        }
        t = next;
    }
    Ok(t)
}

/// Dense zero mode `(T[0])_{ij} = Σ_{n ∈ range} E_{ji}^{(n)}`.
pub fn build_zero_mode(spec: &ModelSpec, range: SiteRange) -> Result<ZeroMode> {
    dense_guard(spec)?;
    let sites = spec.resolve(range)?;
    let n = spec.rank();
    let mut z = OperatorMatrix::zeros(n, spec.dim());
    for i in 0..n {
        for j in 0..n {
            let mut acc = ManyBodyOperator::zeros(spec.dim());
            for site in sites.clone() {
                acc = acc.add(&hilbert::embed_elementary(j, i, site, spec.basis())?)?;
            }
            z.entries[i * n + j] = acc;
        }
    }
    Ok(z)
}

/// Dense twisted transfer matrix `Σ_i κ_i T_ii(w)`.
pub fn transfer_matrix(spec: &ModelSpec, w: C64, twist: &Twist) -> Result<ManyBodyOperator> {
    twist_guard(spec, twist)?;
    let t = build_monodromy(spec, w, SiteRange::Full)?;
    let mut acc = ManyBodyOperator::zeros(spec.dim());
    for i in 0..spec.rank() {
        acc = acc.add(&t.entry(i, i).scale(twist.get(i)))?;
    }
    Ok(acc)
}

fn twist_guard(spec: &ModelSpec, twist: &Twist) -> Result<()> {
    if twist.rank() != spec.rank() {
        return Err(AlgebraError::TwistLength { expected: spec.rank(), got: twist.rank() }.into());
    }
    Ok(())
}

fn check_vector(spec: &ModelSpec, len: usize) -> Result<()> {
    if len != spec.dim() {
        return Err(HilbertError::DimensionMismatch { left: spec.dim(), right: len }.into());
    }
    Ok(())
}

/// Column `j` of the monodromy applied to `x`: returns `[T_0j(u) x, …, T_{N-1,j}(u) x]`.
pub fn apply_monodromy_column(spec: &ModelSpec, u: C64, range: SiteRange, j: usize, x: &[C64]) -> Result<Vec<Vec<C64>>> {
    check_vector(spec, x.len())?;
    let sites = spec.resolve(range)?;
    spec.check_pole(u, &sites)?;
    let n = spec.rank();
    let zero = vec![C64::new(0.0, 0.0); x.len()];
    let mut v: Vec<Vec<C64>> = (0..n).map(|k| if k == j { x.to_vec() } else { zero.clone() }).collect();
    for site in sites {
        let g = algebra::g(u, spec.xi[site], spec.coupling)?;
        let mut next = v.clone();
        for (i, out) in next.iter_mut().enumerate() {
            for (k, vk) in v.iter().enumerate() {
                hilbert::apply_elementary(spec.basis(), k, i, site, g, vk, out);
            }
        }
        v = next;
    }
    Ok(v)
}

/// Row `i` of the monodromy applied from the left to `y`: `[y T_i0(u), …, y T_{i,N-1}(u)]`.
pub fn apply_monodromy_row(spec: &ModelSpec, u: C64, range: SiteRange, i: usize, y: &[C64]) -> Result<Vec<Vec<C64>>> {
    check_vector(spec, y.len())?;
    let sites = spec.resolve(range)?;
    spec.check_pole(u, &sites)?;
    let n = spec.rank();
    let zero = vec![C64::new(0.0, 0.0); y.len()];
    let mut w: Vec<Vec<C64>> = (0..n).map(|k| if k == i { y.to_vec() } else { zero.clone() }).collect();
    for site in sites.rev() {
        let g = algebra::g(u, spec.xi[site], spec.coupling)?;
        // W_j ← W_j + g Σ_k W_k E_{jk}
        let mut next = w.clone();
        for (j, out) in next.iter_mut().enumerate() {
            for (k, wk) in w.iter().enumerate() {
                hilbert::apply_elementary_left(spec.basis(), j, k, site, g, wk, out);
            }
        }
        w = next;
    }
    Ok(w)
}

/// `T_ij(u) x` over `range`.
pub fn apply_monodromy_entry(spec: &ModelSpec, u: C64, range: SiteRange, i: usize, j: usize, x: &[C64]) -> Result<Vec<C64>> {
    Ok(apply_monodromy_column(spec, u, range, j, x)?.swap_remove(i))
}

/// `t(w) x` for the twisted transfer matrix, without dense operators.
pub fn apply_transfer(spec: &ModelSpec, w: C64, twist: &Twist, x: &[C64]) -> Result<Vec<C64>> {
    twist_guard(spec, twist)?;
    let mut out = vec![C64::new(0.0, 0.0); x.len()];
    for i in 0..spec.rank() {
        let ti = apply_monodromy_entry(spec, w, SiteRange::Full, i, i, x)?;
        let k = twist.get(i);
        for (o, v) in out.iter_mut().zip(ti) {
            *o += k * v;
        }
    }
    Ok(out)
}

/// `y t(w)` for a row vector `y`.
pub fn apply_transfer_left(spec: &ModelSpec, w: C64, twist: &Twist, y: &[C64]) -> Result<Vec<C64>> {
    twist_guard(spec, twist)?;
    let mut out = vec![C64::new(0.0, 0.0); y.len()];
    for i in 0..spec.rank() {
        let ti = apply_monodromy_row(spec, w, SiteRange::Full, i, y)?.swap_remove(i);
        let k = twist.get(i);
        for (o, v) in out.iter_mut().zip(ti) {
            *o += k * v;
        }
    }
    Ok(out)
}

/// `(T^{range}[0])_{ij} x = Σ_{n ∈ range} E_{ji}^{(n)} x`.
pub fn apply_zero_mode(spec: &ModelSpec, range: SiteRange, i: usize, j: usize, x: &[C64]) -> Result<Vec<C64>> {
    check_vector(spec, x.len())?;
    let sites = spec.resolve(range)?;
    let mut out = vec![C64::new(0.0, 0.0); x.len()];
    for site in sites {
        hilbert::apply_elementary(spec.basis(), j, i, site, C64::new(1.0, 0.0), x, &mut out);
    }
    Ok(out)
}

/// `y (T^{range}[0])_{ij}` for a row vector `y`.
pub fn apply_zero_mode_left(spec: &ModelSpec, range: SiteRange, i: usize, j: usize, y: &[C64]) -> Result<Vec<C64>> {
    check_vector(spec, y.len())?;
    let sites = spec.resolve(range)?;
    let mut out = vec![C64::new(0.0, 0.0); y.len()];
    for site in sites {
        hilbert::apply_elementary_left(spec.basis(), j, i, site, C64::new(1.0, 0.0), y, &mut out);
    }
    Ok(out)
}

/// Sector block of `t(w)`, built column by column from vector propagation.
pub fn transfer_block(spec: &ModelSpec, w: C64, twist: &Twist, sector: &WeightSector) -> Result<Mat<C64>> {
    let d = sector.dimension();
    let mut block = Mat::<C64>::zeros(d, d);
    let mut e = vec![C64::new(0.0, 0.0); spec.dim()];
    for (col, &g) in sector.indices().iter().enumerate() {
        e[g] = C64::new(1.0, 0.0);
        let y = apply_transfer(spec, w, twist, &e)?;
        e[g] = C64::new(0.0, 0.0);
        for (row, &h) in sector.indices().iter().enumerate() {
            block[(row, col)] = y[h];
        }
    }
    Ok(block)
}

/// Max-norm of `R_{12}(u,v) T_1(u) T_2(v) − T_2(v) T_1(u) R_{12}(u,v)` on
/// `C^N ⊗ C^N ⊗ H`. In components, entry `(ab, cd)` is
/// `T_ac(u)T_bd(v) + g T_bc(u)T_ad(v) − T_bd(v)T_ac(u) − g T_bc(v)T_ad(u)`.
pub fn check_rtt(spec: &ModelSpec, u: C64, v: C64, range: SiteRange) -> Result<f64> {
    let g = algebra::g(u, v, spec.coupling)?;
    let tu = build_monodromy(spec, u, range)?;
    let tv = build_monodromy(spec, v, range)?;
    let n = spec.rank();
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let lhs = tu.entry(a, c).mul(tv.entry(b, d))?.add(&tu.entry(b, c).mul(tv.entry(a, d))?.scale(g))?;
                    let rhs = tv.entry(b, d).mul(tu.entry(a, c))?.add(&tv.entry(b, c).mul(tu.entry(a, d))?.scale(g))?;
                    worst = worst.max(lhs.sub(&rhs)?.max_norm());
                }
            }
        }
    }
    Ok(worst)
}

/// Max entrywise residual of `T(u) − T^{(2)}(u) T^{(1)}(u)`.
pub fn check_factorization(spec: &ModelSpec, u: C64) -> Result<f64> {
    let full = build_monodromy(spec, u, SiteRange::Full)?;
    let left = build_monodromy(spec, u, SiteRange::Left)?;
    let right = build_monodromy(spec, u, SiteRange::Right)?;
    full.distance(&right.product(&left)?)
}

/// Vacuum ratios of the composite model: `ℓ_k` of the left block, its zero
/// modes, and the single-site local ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeRatios {
    spec: ModelSpec,
}

impl CompositeRatios {
    /// Ratios of the left block `0..split`.
    pub fn left(&self) -> VacuumRatios {
        self.block(0..self.spec.split)
    }

    /// Ratios of an arbitrary block.
    pub fn block(&self, sites: Range<usize>) -> VacuumRatios {
        VacuumRatios::new(self.spec.rank, self.spec.coupling, self.spec.xi[sites].to_vec()).expect("rank validated")
    }

    /// Local ratios of the single site `site`.
    pub fn local(&self, site: usize) -> VacuumRatios {
        self.block(site..site + 1)
    }

    /// `ℓ_{k+1}(u)` in one-based labelling, i.e. `α_k` of the left block.
    pub fn ell(&self, k: usize, u: C64) -> Result<C64> {
        Ok(self.left().alpha(k, u)?)
    }

    /// Zero-mode coefficients `λ^{(1)}_i[0]` of the left block.
    pub fn lambda_zero(&self, i: usize) -> f64 {
        self.left().zero_mode(i)
    }

    /// `ℓ_1[0]` (the number of left sites) and `ℓ_3[0] = 0`; generically
    /// `λ_k[0] − λ_{k+1}[0]`.
    pub fn ell_zero(&self, k: usize) -> f64 {
        self.lambda_zero(k) - self.lambda_zero(k + 1)
    }
}
