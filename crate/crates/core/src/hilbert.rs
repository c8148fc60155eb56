//! The `N^M`-dimensional product space of the chain, its weight sectors, and
//! dense operators acting on it.
//!
//! Basis states are indexed lexicographically with site 0 as the slowest
//! digit: `index = Σ_n d_n N^{M-1-n}` where `d_n ∈ 0..N` is the colour on
//! site `n`. Colour 0 is the pseudovacuum colour.

use faer::Mat;
use thiserror::Error;

use crate::C64;

/// Largest full-space dimension accepted by default (`3^8`).
pub const DEFAULT_MAX_DIMENSION: usize = 6561;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HilbertError {
    #[error("rank must be at least 2, got {0}")]
    Rank(usize),
    #[error("chain needs at least one site")]
    NoSites,
    #[error("dimension {rank}^{sites} exceeds the dense limit {max}")]
    TooLarge { rank: usize, sites: usize, max: usize },
    #[error("{what} index {value} out of range 0..{bound}")]
    IndexOutOfRange { what: &'static str, value: usize, bound: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("occupations {0:?} do not describe a sector of this basis")]
    BadOccupations(Vec<usize>),
}

pub type Result<T> = std::result::Result<T, HilbertError>;

/// Product basis of `sites` copies of `C^rank`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    rank: usize,
    sites: usize,
    dim: usize,
    strides: Vec<usize>,
}

impl Basis {
    pub fn new(rank: usize, sites: usize, max_dim: usize) -> Result<Self> {
        if rank < 2 {
            return Err(HilbertError::Rank(rank));
        }
        if sites == 0 {
            return Err(HilbertError::NoSites);
        }
        let too_large = HilbertError::TooLarge { rank, sites, max: max_dim };
        let mut dim: usize = 1;
        for _ in 0..sites {
            dim = dim.checked_mul(rank).ok_or_else(|| too_large.clone())?;
        }
        if dim > max_dim {
            return Err(too_large);
        }
        let strides = (0..sites).map(|n| rank.pow((sites - 1 - n) as u32)).collect();
        Ok(Self { rank, sites, dim, strides })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn stride(&self, site: usize) -> usize {
        self.strides[site]
    }

    #[inline]
    pub fn digit(&self, index: usize, site: usize) -> usize {
        (index / self.strides[site]) % self.rank
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    pub fn occupations(&self, index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.rank];
        for n in 0..self.sites {
            occ[self.digit(index, n)] += 1;
        }
        occ
    }

    /// Colour counts restricted to the sites in `sites`.
    pub fn occupations_on(&self, index: usize, sites: std::ops::Range<usize>) -> Vec<usize> {
        let mut occ = vec![0; self.rank];
        for n in sites {
            occ[self.digit(index, n)] += 1;
        }
        occ
    }

    /// The all-colour-0 state.
    pub fn vacuum(&self) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.dim];
        v[0] = C64::new(1.0, 0.0);
        v
    }

    pub fn sector(&self, occupations: &[usize]) -> Result<WeightSector> {
        if occupations.len() != self.rank || occupations.iter().sum::<usize>() != self.sites {
            return Err(HilbertError::BadOccupations(occupations.to_vec()));
        }
        let indices = (0..self.dim).filter(|&i| self.occupations(i) == occupations).collect();
        Ok(WeightSector { occupations: occupations.to_vec(), indices })
    }
}

/// Joint eigenspace of the colour-number operators.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightSector {
    occupations: Vec<usize>,
    indices: Vec<usize>,
}

impl WeightSector {
    pub fn occupations(&self) -> &[usize] {
        &self.occupations
    }

    /// Global basis indices, ascending.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn dimension(&self) -> usize {
        self.indices.len()
    }

    pub fn position(&self, index: usize) -> Option<usize> {
        self.indices.binary_search(&index).ok()
    }

    /// Embed sector-local coordinates into the full space.
    pub fn embed(&self, local: &[C64], dim: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); dim];
        for (&g, &x) in self.indices.iter().zip(local) {
            out[g] = x;
        }
        out
    }

    /// Norm of the part of `v` lying outside this sector.
    pub fn leakage(&self, v: &[C64]) -> f64 {
        let mut inside = vec![false; v.len()];
        for &g in &self.indices {
            inside[g] = true;
        }
        v.iter()
            .zip(&inside)
            .filter(|(_, &ins)| !ins)
            .map(|(x, _)| x.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn compositions(total: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first);
        compositions(total - first, parts - 1, prefix, out);
        prefix.pop();
    }
}

/// All weight sectors of the `rank^sites` space, each with its basis indices.
///
/// Sectors are ordered by occupation vector, colour 0 count descending.
pub fn enumerate_sectors(rank: usize, sites: usize, max_dim: usize) -> Result<Vec<WeightSector>> {
    let basis = Basis::new(rank, sites, max_dim)?;
    let mut occs = Vec::new();
    compositions(sites, rank, &mut Vec::new(), &mut occs);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); occs.len()];
    let lookup: std::collections::HashMap<Vec<usize>, usize> =
        occs.iter().cloned().enumerate().map(|(k, o)| (o, k)).collect();
    for idx in 0..basis.dim() {
        buckets[lookup[&basis.occupations(idx)]].push(idx);
    }
    Ok(occs
        .into_iter()
        .zip(buckets)
        .map(|(occupations, indices)| WeightSector { occupations, indices })
        .collect())
}

/// `y += coeff · E_{ij}^{(site)} x`, where `E_{ij}` maps colour `j` to colour `i`.
pub fn apply_elementary(basis: &Basis, i: usize, j: usize, site: usize, coeff: C64, x: &[C64], y: &mut [C64]) {
    let stride = basis.stride(site);
    let rank = basis.rank();
    for (idx, &xv) in x.iter().enumerate() {
        if xv == C64::new(0.0, 0.0) || (idx / stride) % rank != j {
            continue;
        }
        let target = idx + i * stride - j * stride;
        y[target] += coeff * xv;
    }
}

/// `y += coeff · x · E_{ij}^{(site)}` for a row vector `x`.
pub fn apply_elementary_left(basis: &Basis, i: usize, j: usize, site: usize, coeff: C64, x: &[C64], y: &mut [C64]) {
    // (x E_ij)_β = x_α with α = β shifted from colour j to colour i
    let stride = basis.stride(site);
    let rank = basis.rank();
    for (idx, &xv) in x.iter().enumerate() {
        if xv == C64::new(0.0, 0.0) || (idx / stride) % rank != i {
            continue;
        }
        let target = idx + j * stride - i * stride;
        y[target] += coeff * xv;
    }
}

/// Dense complex operator on the chain space.
#[derive(Debug, Clone)]
pub struct ManyBodyOperator {
    mat: Mat<C64>,
}

impl ManyBodyOperator {
    pub fn zeros(dim: usize) -> Self {
        Self { mat: Mat::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { mat: Mat::identity(dim, dim) }
    }

    pub fn from_mat(mat: Mat<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(HilbertError::DimensionMismatch { left: mat.nrows(), right: mat.ncols() });
        }
        Ok(Self { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &Mat<C64> {
        &self.mat
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(HilbertError::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self { mat: &self.mat * &other.mat })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self { mat: &self.mat + &other.mat })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self { mat: &self.mat - &other.mat })
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { mat: Mat::from_fn(self.dim(), self.dim(), |r, c| self.mat[(r, c)] * s) }
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self { mat: &self.mat * &other.mat - &other.mat * &self.mat })
    }

    /// Largest entry modulus.
    pub fn max_norm(&self) -> f64 {
        let mut m = 0.0f64;
        for c in 0..self.dim() {
            for r in 0..self.dim() {
                m = m.max(self.mat[(r, c)].norm());
            }
        }
        m
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut y = vec![C64::new(0.0, 0.0); n];
        for (c, &xc) in x.iter().enumerate().take(n) {
            if xc == C64::new(0.0, 0.0) {
                continue;
            }
            for (r, yr) in y.iter_mut().enumerate() {
                *yr += self.mat[(r, c)] * xc;
            }
        }
        y
    }

    /// Row vector times operator.
    pub fn apply_left(&self, x: &[C64]) -> Vec<C64> {
        let n = self.dim();
        (0..n)
            .map(|c| (0..n).map(|r| x[r] * self.mat[(r, c)]).sum())
            .collect()
    }

    /// The `(rows, cols)` block as a dense matrix.
    pub fn block(&self, rows: &WeightSector, cols: &WeightSector) -> Mat<C64> {
        Mat::from_fn(rows.dimension(), cols.dimension(), |r, c| {
            self.mat[(rows.indices()[r], cols.indices()[c])]
        })
    }

    /// Largest entry connecting two different sectors.
    pub fn off_block_norm(&self, sectors: &[WeightSector]) -> f64 {
        let mut label = vec![0usize; self.dim()];
        for (k, s) in sectors.iter().enumerate() {
            for &g in s.indices() {
                label[g] = k;
            }
        }
        let mut m = 0.0f64;
        for c in 0..self.dim() {
            for r in 0..self.dim() {
                if label[r] != label[c] {
                    m = m.max(self.mat[(r, c)].norm());
                }
            }
        }
        m
    }
}

/// `E_{ij}` acting on `site` and identity elsewhere (zero-based indices).
pub fn embed_elementary(i: usize, j: usize, site: usize, basis: &Basis) -> Result<ManyBodyOperator> {
    let rank = basis.rank();
    for (what, value, bound) in [("row colour", i, rank), ("column colour", j, rank), ("site", site, basis.sites())] {
        if value >= bound {
            return Err(HilbertError::IndexOutOfRange { what, value, bound });
        }
    }
    let dim = basis.dim();
    let stride = basis.stride(site);
    let mut mat = Mat::<C64>::zeros(dim, dim);
    for idx in 0..dim {
        if basis.digit(idx, site) == j {
            mat[(idx + i * stride - j * stride, idx)] = C64::new(1.0, 0.0);
        }
    }
    Ok(ManyBodyOperator { mat })
}

/// Inner product without conjugation: `Σ a_k b_k`.
pub fn bilinear(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(n: usize, m: usize) -> Basis {
        Basis::new(n, m, DEFAULT_MAX_DIMENSION).unwrap()
    }

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn sector_counts() {
        let s = enumerate_sectors(3, 1, DEFAULT_MAX_DIMENSION).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.iter().all(|x| x.dimension() == 1));

        let s = enumerate_sectors(3, 2, DEFAULT_MAX_DIMENSION).unwrap();
        let s110 = s.iter().find(|x| x.occupations() == [1, 1, 0]).unwrap();
        assert_eq!(s110.dimension(), 2);

        let s = enumerate_sectors(2, 4, DEFAULT_MAX_DIMENSION).unwrap();
        let s22 = s.iter().find(|x| x.occupations() == [2, 2]).unwrap();
        assert_eq!(s22.dimension(), 6);
    }

    #[test]
    fn sectors_partition_basis() {
        for (n, m) in [(2, 5), (3, 4), (4, 3)] {
            let sectors = enumerate_sectors(n, m, DEFAULT_MAX_DIMENSION).unwrap();
            let mut all: Vec<usize> = sectors.iter().flat_map(|s| s.indices().to_vec()).collect();
            all.sort_unstable();
            assert_eq!(all, (0..n.pow(m as u32)).collect::<Vec<_>>());
            for s in &sectors {
                assert!(s.indices().windows(2).all(|w| w[0] < w[1]));
                let expect = (1..=m).product::<usize>()
                    / s.occupations().iter().map(|&k| (1..=k).product::<usize>()).product::<usize>();
                assert_eq!(s.dimension(), expect);
            }
        }
    }

    #[test]
    fn dense_limit_guard() {
        assert!(matches!(Basis::new(3, 9, DEFAULT_MAX_DIMENSION), Err(HilbertError::TooLarge { .. })));
        assert!(Basis::new(3, 8, DEFAULT_MAX_DIMENSION).is_ok());
    }

    #[test]
    fn elementary_single_site() {
        let b = basis(2, 1);
        let e01 = embed_elementary(0, 1, 0, &b).unwrap();
        assert_eq!(e01.entry(0, 1), one());
        assert_eq!(e01.max_norm(), 1.0);
        assert_eq!(e01.entry(1, 0), C64::new(0.0, 0.0));
        let e10 = embed_elementary(1, 0, 0, &b).unwrap();
        let e11 = embed_elementary(1, 1, 0, &b).unwrap();
        let prod = e10.mul(&e01).unwrap();
        assert_eq!(prod.sub(&e11).unwrap().max_norm(), 0.0);
    }

    #[test]
    fn elementary_algebra_sitewise() {
        let b = basis(3, 2);
        for site in 0..2 {
            for (i, j, k, l) in [(0, 1, 1, 2), (2, 0, 0, 1), (1, 1, 2, 2), (0, 2, 2, 0)] {
                let lhs = embed_elementary(i, j, site, &b).unwrap().mul(&embed_elementary(k, l, site, &b).unwrap()).unwrap();
                let rhs = if j == k { embed_elementary(i, l, site, &b).unwrap() } else { ManyBodyOperator::zeros(b.dim()) };
                assert_eq!(lhs.sub(&rhs).unwrap().max_norm(), 0.0);
            }
        }
        let a = embed_elementary(0, 0, 0, &b).unwrap();
        let c = embed_elementary(1, 1, 1, &b).unwrap();
        assert_eq!(a.commutator(&c).unwrap().max_norm(), 0.0);
        let id = ManyBodyOperator::identity(b.dim());
        assert_eq!(id.mul(&a).unwrap().sub(&a).unwrap().max_norm(), 0.0);
    }

    #[test]
    fn number_operator_on_sectors() {
        let b = basis(3, 4);
        let mut n0 = ManyBodyOperator::zeros(b.dim());
        for site in 0..4 {
            n0 = n0.add(&embed_elementary(0, 0, site, &b).unwrap()).unwrap();
        }
        for s in enumerate_sectors(3, 4, DEFAULT_MAX_DIMENSION).unwrap() {
            for &g in s.indices() {
                assert_eq!(n0.entry(g, g), C64::new(s.occupations()[0] as f64, 0.0));
            }
        }
        assert_eq!(n0.off_block_norm(&enumerate_sectors(3, 4, DEFAULT_MAX_DIMENSION).unwrap()), 0.0);
    }

    #[test]
    fn sparse_application_matches_dense() {
        let b = basis(3, 3);
        let x: Vec<C64> = (0..b.dim()).map(|k| C64::new(k as f64 * 0.1, 1.0 - k as f64 * 0.03)).collect();
        for (i, j, site) in [(0, 1, 0), (2, 1, 2), (1, 1, 1), (0, 2, 1)] {
            let dense = embed_elementary(i, j, site, &b).unwrap();
            let mut y = vec![C64::new(0.0, 0.0); b.dim()];
            apply_elementary(&b, i, j, site, one(), &x, &mut y);
            let yd = dense.apply(&x);
            assert!(y.iter().zip(&yd).all(|(a, c)| (a - c).norm() < 1e-15));
            let mut yl = vec![C64::new(0.0, 0.0); b.dim()];
            apply_elementary_left(&b, i, j, site, one(), &x, &mut yl);
            let yld = dense.apply_left(&x);
            assert!(yl.iter().zip(&yld).all(|(a, c)| (a - c).norm() < 1e-15));
        }
    }

    #[test]
    fn out_of_range_indices() {
        let b = basis(3, 2);
        assert!(embed_elementary(3, 0, 0, &b).is_err());
        assert!(embed_elementary(0, 0, 2, &b).is_err());
        assert!(ManyBodyOperator::identity(3).mul(&ManyBodyOperator::identity(4)).is_err());
    }
}
