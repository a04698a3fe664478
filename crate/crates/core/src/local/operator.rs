use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::{One, Zero};

use super::{checked_dim, Volume};
use crate::error::{Error, Result};
use crate::matrix::{kron_all, operator_norm_dense, ComplexMatrix, DEFAULT_DENSE_CAP, DEFAULT_KRON_CAP};

/// Largest dimension of a block formed by fusing overlapping factors.
pub(crate) const FUSE_CAP: usize = 1024;

/// Tolerance for detecting an identity tensor leg.
const IDENTITY_TOL: f64 = 1e-12;

/// A dense block acting on a strictly increasing list of sites.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    sites: Vec<usize>,
    matrix: ComplexMatrix,
}

impl Factor {
    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// A finite-volume observable: `scale · (F₁ ⊗ F₂ ⊗ …)` with the factors on
/// pairwise disjoint site sets. An operator without factors is a multiple of
/// the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOperator {
    site_dim: usize,
    scale: Complex64,
    factors: Vec<Factor>,
}

fn validate_sites(sites: &[usize]) -> Result<()> {
    if sites.contains(&0) {
        return Err(Error::InvalidSupport("site indices start at 1".into()));
    }
    if sites.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSupport(format!("support {sites:?} is not strictly increasing")));
    }
    Ok(())
}

fn check_block(site_dim: usize, sites: &[usize], matrix: &ComplexMatrix) -> Result<()> {
    let dim = checked_dim(site_dim, sites.len()).ok_or(Error::Capacity { dim: usize::MAX, cap: DEFAULT_KRON_CAP })?;
    if !matrix.is_square() || matrix.rows() != dim {
        return Err(Error::ShapeMismatch {
            expected: format!("{dim}x{dim} for {} sites of dimension {site_dim}", sites.len()),
            found: format!("{}x{}", matrix.rows(), matrix.cols()),
        });
    }
    Ok(())
}

/// For each position of the reordered legs, `order[p]` is the old leg index.
/// Returns `map` with `new_matrix[i][j] = old_matrix[map[i]][map[j]]`.
fn leg_permutation(d: usize, order: &[usize]) -> Vec<usize> {
    let k = order.len();
    let strides: Vec<usize> = (0..k).map(|q| d.pow((k - 1 - q) as u32)).collect();
    let dim = d.pow(k as u32);
    (0..dim)
        .map(|new| {
            let mut rem = new;
            let mut old = 0;
            for p in (0..k).rev() {
                old += (rem % d) * strides[order[p]];
                rem /= d;
            }
            old
        })
        .collect()
}

fn permute_legs(m: &ComplexMatrix, d: usize, order: &[usize]) -> ComplexMatrix {
    if order.iter().enumerate().all(|(p, &q)| p == q) {
        return m.clone();
    }
    let map = leg_permutation(d, order);
    ComplexMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(map[i], map[j]))
}

/// Dense matrix of `⊗ factors` on the sorted site list `target ⊇ ∪ sites`.
fn dense_factors_on(factors: &[&Factor], target: &[usize], d: usize, cap: usize) -> Result<ComplexMatrix> {
    let dim = checked_dim(d, target.len()).ok_or(Error::Capacity { dim: usize::MAX, cap })?;
    if dim > cap {
        return Err(Error::Capacity { dim, cap });
    }
    let mut order_sites: Vec<usize> = factors.iter().flat_map(|f| f.sites.iter().copied()).collect();
    let covered = order_sites.len();
    order_sites.extend(target.iter().copied().filter(|s| !factors.iter().any(|f| f.sites.contains(s))));
    if order_sites.len() != target.len() {
        return Err(Error::InvalidSupport(format!("target {target:?} does not contain the operator support")));
    }
    let rest = ComplexMatrix::identity(dim / d.pow(covered as u32));
    let concat = kron_all(factors.iter().map(|f| &f.matrix).chain(core::iter::once(&rest)), cap)?;
    let order: Vec<usize> = target
        .iter()
        .map(|s| order_sites.iter().position(|x| x == s).expect("site present"))
        .collect();
    Ok(permute_legs(&concat, d, &order))
}

fn bits_key(z: &Complex64) -> (u64, u64) {
    (z.re.to_bits(), z.im.to_bits())
}

/// Like [`dense_factors_on`], but every entry multiplies its factor entries
/// in an order fixed by their values, so the block does not depend on how
/// sites are labelled.
fn canonical_dense_on(factors: &[&Factor], target: &[usize], d: usize, cap: usize) -> Result<ComplexMatrix> {
    let k = target.len();
    let dim = checked_dim(d, k).ok_or(Error::Capacity { dim: usize::MAX, cap })?;
    if dim > cap {
        return Err(Error::Capacity { dim, cap });
    }
    let legs: Vec<Vec<usize>> = factors
        .iter()
        .map(|f| {
            f.sites
                .iter()
                .map(|s| {
                    target.iter().position(|t| t == s).ok_or_else(|| {
                        Error::InvalidSupport(format!("target {target:?} does not contain site {s}"))
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let free: Vec<usize> = (0..k).filter(|p| !legs.iter().any(|l| l.contains(p))).collect();
    let digits = |mut idx: usize, out: &mut [usize]| {
        for p in (0..k).rev() {
            out[p] = idx % d;
            idx /= d;
        }
    };
    let (mut rd, mut cd) = (vec![0; k], vec![0; k]);
    let mut entries = Vec::with_capacity(factors.len());
    let mut m = ComplexMatrix::zeros(dim, dim);
    for r in 0..dim {
        digits(r, &mut rd);
        for c in 0..dim {
            digits(c, &mut cd);
            if free.iter().any(|&p| rd[p] != cd[p]) {
                continue;
            }
            entries.clear();
            for (f, lg) in factors.iter().zip(&legs) {
                let (fr, fc) = lg.iter().fold((0, 0), |(fr, fc), &p| (fr * d + rd[p], fc * d + cd[p]));
                entries.push(f.matrix.get(fr, fc));
            }
            entries.sort_unstable_by_key(bits_key);
            m.set(r, c, entries.iter().fold(Complex64::one(), |acc, e| acc * e));
        }
    }
    Ok(m)
}

/// Matrix product whose entries sum their nonzero terms in sorted order.
/// Relabelling sites permutes the terms of each entry, so the result is
/// bitwise independent of the labelling.
fn canonical_matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows: Vec<Vec<(usize, Complex64)>> = (0..a.rows())
        .map(|i| (0..a.cols()).map(|k| (k, a.get(i, k))).filter(|(_, x)| !x.is_zero()).collect())
        .collect();
    let mut terms = Vec::new();
    ComplexMatrix::from_fn(a.rows(), b.cols(), |i, j| {
        terms.clear();
        terms.extend(rows[i].iter().map(|&(k, x)| x * b.get(k, j)).filter(|t| !t.is_zero()));
        terms.sort_unstable_by_key(bits_key);
        terms.iter().fold(Complex64::zero(), |acc, t| acc + t)
    })
}

/// Operator norm of a `k`-leg block, evaluated on the cyclic leg rotation
/// with the smallest bit pattern. Cyclic shifts of the chain rotate the leg
/// order of every factor, so this value is shift invariant bit for bit.
fn rotation_canonical_norm(m: &ComplexMatrix, d: usize, k: usize) -> Result<f64> {
    let key = |x: &ComplexMatrix| x.data().iter().map(bits_key).collect::<Vec<_>>();
    let mut best = m.clone();
    let mut best_key = key(&best);
    for r in 1..k {
        let order: Vec<usize> = (0..k).map(|p| (p + r) % k).collect();
        let cand = permute_legs(m, d, &order);
        let cand_key = key(&cand);
        if cand_key < best_key {
            best = cand;
            best_key = cand_key;
        }
    }
    operator_norm_dense(&best, DEFAULT_DENSE_CAP)
}

fn sorted_union<'a>(lists: impl IntoIterator<Item = &'a [usize]>) -> Vec<usize> {
    let mut all: Vec<usize> = lists.into_iter().flatten().copied().collect();
    all.sort_unstable();
    all.dedup();
    all
}

struct Components {
    /// Per component: indices into the left and right factor lists.
    groups: Vec<(Vec<usize>, Vec<usize>)>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Connected components of the overlap graph between two factor lists.
fn components(left: &[Factor], right: &[Factor]) -> Components {
    let nl = left.len();
    let mut parent: Vec<usize> = (0..nl + right.len()).collect();
    let owner: BTreeMap<usize, usize> =
        left.iter().enumerate().flat_map(|(i, f)| f.sites.iter().map(move |&s| (s, i))).collect();
    for (j, f) in right.iter().enumerate() {
        for s in &f.sites {
            if let Some(&i) = owner.get(s) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, nl + j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut by_root: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for x in 0..parent.len() {
        let r = find(&mut parent, x);
        let entry = by_root.entry(r).or_default();
        if x < nl {
            entry.0.push(x);
        } else {
            entry.1.push(x - nl);
        }
    }
    Components { groups: by_root.into_values().collect() }
}

impl LocalOperator {
    /// An operator on `support` given by a dense matrix of dimension
    /// `site_dim^|support|`. An empty support takes a 1x1 matrix.
    pub fn new(site_dim: usize, support: Vec<usize>, matrix: ComplexMatrix) -> Result<Self> {
        if site_dim == 0 {
            return Err(Error::Contract("site dimension must be positive".into()));
        }
        validate_sites(&support)?;
        check_block(site_dim, &support, &matrix)?;
        if support.is_empty() {
            return Ok(Self::scalar(site_dim, matrix.get(0, 0)));
        }
        Ok(Self::from_parts(site_dim, Complex64::one(), vec![Factor { sites: support, matrix }]))
    }

    /// A single-site operator; the site dimension is read off the matrix.
    pub fn on_site(site: usize, matrix: ComplexMatrix) -> Result<Self> {
        Self::new(matrix.rows(), vec![site], matrix)
    }

    /// An elementary tensor of blocks on pairwise disjoint site lists.
    pub fn tensor(site_dim: usize, blocks: Vec<(Vec<usize>, ComplexMatrix)>) -> Result<Self> {
        let mut factors = Vec::with_capacity(blocks.len());
        for (sites, matrix) in blocks {
            validate_sites(&sites)?;
            check_block(site_dim, &sites, &matrix)?;
            if !sites.is_empty() {
                factors.push(Factor { sites, matrix });
            }
        }
        let all: usize = factors.iter().map(|f| f.sites.len()).sum();
        if sorted_union(factors.iter().map(|f| f.sites.as_slice())).len() != all {
            return Err(Error::InvalidSupport("tensor blocks overlap".into()));
        }
        Ok(Self::from_parts(site_dim, Complex64::one(), factors))
    }

    /// `⊗_{(x, m)} m` at the given distinct sites.
    pub fn site_product(site_dim: usize, ops: impl IntoIterator<Item = (usize, ComplexMatrix)>) -> Result<Self> {
        Self::tensor(site_dim, ops.into_iter().map(|(s, m)| (vec![s], m)).collect())
    }

    pub fn identity(site_dim: usize) -> Self {
        Self::scalar(site_dim, Complex64::one())
    }

    pub fn zero(site_dim: usize) -> Self {
        Self::scalar(site_dim, Complex64::zero())
    }

    pub fn scalar(site_dim: usize, c: Complex64) -> Self {
        Self { site_dim, scale: c, factors: Vec::new() }
    }

    fn from_parts(site_dim: usize, scale: Complex64, mut factors: Vec<Factor>) -> Self {
        if scale.is_zero() || factors.iter().any(|f| f.matrix.is_zero()) {
            return Self::zero(site_dim);
        }
        factors.sort_by_key(|f| f.sites[0]);
        Self { site_dim, scale, factors }
    }

    #[inline]
    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    #[inline]
    pub fn scale(&self) -> Complex64 {
        self.scale
    }

    #[inline]
    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn is_zero(&self) -> bool {
        self.scale.is_zero()
    }

    /// True for multiples of the identity (including zero).
    pub fn is_scalar(&self) -> bool {
        self.factors.is_empty()
    }

    /// Sorted union of the factor supports.
    pub fn support(&self) -> Vec<usize> {
        sorted_union(self.factors.iter().map(|f| f.sites.as_slice()))
    }

    pub fn support_len(&self) -> usize {
        self.factors.iter().map(|f| f.sites.len()).sum()
    }

    pub fn min_site(&self) -> Option<usize> {
        self.factors.iter().map(|f| f.sites[0]).min()
    }

    pub fn max_site(&self) -> Option<usize> {
        self.factors.iter().filter_map(|f| f.sites.last().copied()).max()
    }

    /// `max − min + 1` of the support, zero for scalars.
    pub fn span(&self) -> usize {
        match (self.min_site(), self.max_site()) {
            (Some(lo), Some(hi)) => hi - lo + 1,
            _ => 0,
        }
    }

    /// Dense matrix on the operator's own support (1x1 for scalars).
    pub fn matrix(&self) -> Result<ComplexMatrix> {
        self.dense_on(&self.support(), DEFAULT_KRON_CAP)
    }

    /// Dense matrix on a sorted site list containing the support.
    pub fn dense_on(&self, sites: &[usize], cap: usize) -> Result<ComplexMatrix> {
        validate_sites(sites)?;
        let refs: Vec<&Factor> = self.factors.iter().collect();
        Ok(dense_factors_on(&refs, sites, self.site_dim, cap)?.scale(self.scale))
    }

    /// The operator `a ⊗ 1` on the whole volume as a single dense block.
    pub fn embed(&self, volume: Volume) -> Result<LocalOperator> {
        let support = self.support();
        volume.check_sites(&support)?;
        let sites: Vec<usize> = (1..=volume.size()).collect();
        let matrix = self.dense_on(&sites, DEFAULT_KRON_CAP)?;
        Self::new(self.site_dim, sites, matrix)
    }

    /// Operator norm, exact: the norm of an elementary tensor is the product of
    /// the factor norms.
    pub fn norm(&self) -> Result<f64> {
        let mut norms = self
            .factors
            .iter()
            .map(|f| rotation_canonical_norm(&f.matrix, self.site_dim, f.sites.len()))
            .collect::<Result<Vec<f64>>>()?;
        // a fixed multiplication order keeps the result independent of factor order
        norms.sort_unstable_by(f64::total_cmp);
        Ok(norms.into_iter().fold(self.scale.norm(), |acc, x| acc * x))
    }

    pub fn adjoint(&self) -> Self {
        Self {
            site_dim: self.site_dim,
            scale: self.scale.conj(),
            factors: self
                .factors
                .iter()
                .map(|f| Factor { sites: f.sites.clone(), matrix: f.matrix.adjoint() })
                .collect(),
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self::from_parts(self.site_dim, self.scale * c, self.factors.clone())
    }

    /// Moves every site through the injective map `f`, reordering tensor legs
    /// so that each factor's sites stay increasing.
    pub(crate) fn relabel(&self, f: impl Fn(usize) -> usize) -> Self {
        let factors = self
            .factors
            .iter()
            .map(|fac| {
                let moved: Vec<usize> = fac.sites.iter().map(|&s| f(s)).collect();
                let mut sorted = moved.clone();
                sorted.sort_unstable();
                let order: Vec<usize> =
                    sorted.iter().map(|s| moved.iter().position(|x| x == s).expect("injective relabel")).collect();
                Factor { matrix: permute_legs(&fac.matrix, self.site_dim, &order), sites: sorted }
            })
            .collect();
        Self::from_parts(self.site_dim, self.scale, factors)
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.site_dim != other.site_dim {
            return Err(Error::SiteDimMismatch { left: self.site_dim, right: other.site_dim });
        }
        Ok(())
    }

    fn fuse(&self, other: &Self, left: &[usize], right: &[usize], cap: usize) -> Result<(Vec<usize>, ComplexMatrix, ComplexMatrix)> {
        let lf: Vec<&Factor> = left.iter().map(|&i| &self.factors[i]).collect();
        let rf: Vec<&Factor> = right.iter().map(|&j| &other.factors[j]).collect();
        let sites = sorted_union(lf.iter().chain(&rf).map(|f| f.sites.as_slice()));
        let a = dense_factors_on(&lf, &sites, self.site_dim, cap)?;
        let b = dense_factors_on(&rf, &sites, self.site_dim, cap)?;
        Ok((sites, a, b))
    }

    /// Pointwise product `self · other` on the union of the supports.
    ///
    /// Overlapping factors are fused with a labelling-independent summation
    /// order, so relabelling commutes with products bit for bit.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let comps = components(&self.factors, &other.factors);
        let mut factors = Vec::with_capacity(comps.groups.len());
        for (left, right) in &comps.groups {
            match (left.as_slice(), right.as_slice()) {
                ([i], []) => factors.push(self.factors[*i].clone()),
                ([], [j]) => factors.push(other.factors[*j].clone()),
                _ => {
                    let lf: Vec<&Factor> = left.iter().map(|&i| &self.factors[i]).collect();
                    let rf: Vec<&Factor> = right.iter().map(|&j| &other.factors[j]).collect();
                    let sites = sorted_union(lf.iter().chain(&rf).map(|f| f.sites.as_slice()));
                    let a = canonical_dense_on(&lf, &sites, self.site_dim, FUSE_CAP)?;
                    let b = canonical_dense_on(&rf, &sites, self.site_dim, FUSE_CAP)?;
                    factors.push(Factor { sites, matrix: canonical_matmul(&a, &b) });
                }
            }
        }
        Ok(Self::from_parts(self.site_dim, self.scale * other.scale, factors))
    }

    /// `[self, other]`. Disjoint supports give the exact zero without any
    /// dense work; otherwise all overlapping factors are fused into one block
    /// and the remaining factors ride along untouched.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.commutator_capped(other, FUSE_CAP)
    }

    pub(crate) fn commutator_capped(&self, other: &Self, cap: usize) -> Result<Self> {
        self.check_dims(other)?;
        let comps = components(&self.factors, &other.factors);
        let (mut left, mut right) = (Vec::new(), Vec::new());
        let mut rest = Vec::new();
        for (l, r) in &comps.groups {
            if !l.is_empty() && !r.is_empty() {
                left.extend_from_slice(l);
                right.extend_from_slice(r);
            } else {
                rest.extend(l.iter().map(|&i| self.factors[i].clone()));
                rest.extend(r.iter().map(|&j| other.factors[j].clone()));
            }
        }
        if left.is_empty() {
            return Ok(Self::zero(self.site_dim));
        }
        left.sort_unstable();
        right.sort_unstable();
        let (sites, a, b) = self.fuse(other, &left, &right, cap)?;
        let c = a.commutator(&b);
        if c.is_zero() {
            return Ok(Self::zero(self.site_dim));
        }
        rest.push(Factor { sites, matrix: c });
        Ok(Self::from_parts(self.site_dim, self.scale * other.scale, rest))
    }

    /// Drops every tensor leg whose factor is the identity (to within 1e-12).
    pub fn reduce_support(&self) -> Self {
        let d = self.site_dim;
        let mut scale = self.scale;
        let mut factors = Vec::new();
        for f in &self.factors {
            let mut cur = f.clone();
            let mut q = 0;
            while q < cur.sites.len() {
                match strip_identity_leg(&cur.matrix, d, cur.sites.len(), q) {
                    Some(reduced) => {
                        cur.sites.remove(q);
                        cur.matrix = reduced;
                    }
                    None => q += 1,
                }
            }
            if cur.sites.is_empty() {
                scale *= cur.matrix.get(0, 0);
            } else {
                factors.push(cur);
            }
        }
        Self::from_parts(d, scale, factors)
    }
}

/// If leg `q` of a `k`-leg block is the identity, returns the block on the
/// remaining legs.
fn strip_identity_leg(m: &ComplexMatrix, d: usize, k: usize, q: usize) -> Option<ComplexMatrix> {
    let mut order: Vec<usize> = (0..k).filter(|&p| p != q).collect();
    order.push(q);
    let p = permute_legs(m, d, &order);
    let rd = p.rows() / d;
    let inv_d = 1.0 / d as f64;
    let reduced = ComplexMatrix::from_fn(rd, rd, |a, b| (0..d).map(|i| p.get(a * d + i, b * d + i)).sum::<Complex64>() * inv_d);
    for a in 0..rd {
        for b in 0..rd {
            let x = reduced.get(a, b);
            for i in 0..d {
                for j in 0..d {
                    let expect = if i == j { x } else { Complex64::zero() };
                    if (p.get(a * d + i, b * d + j) - expect).norm() > IDENTITY_TOL {
                        return None;
                    }
                }
            }
        }
    }
    Some(reduced)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{kron, pauli, Pauli};
    use crate::testutil::{random_matrix, Lcg};

    fn x() -> ComplexMatrix {
        pauli(Pauli::X)
    }
    fn z() -> ComplexMatrix {
        pauli(Pauli::Z)
    }
    fn i2() -> ComplexMatrix {
        pauli(Pauli::Identity)
    }
    fn vol(n: usize) -> Volume {
        Volume::new(n).unwrap()
    }

    #[test]
    fn rejects_invalid_supports() {
        assert!(LocalOperator::new(2, vec![2, 1], kron(&x(), &x()).unwrap()).is_err());
        assert!(LocalOperator::new(2, vec![0], x()).is_err());
        assert!(LocalOperator::new(2, vec![1, 2], x()).is_err());
        assert!(LocalOperator::tensor(2, vec![(vec![1, 2], kron(&x(), &x()).unwrap()), (vec![2], z())]).is_err());
    }

    #[test]
    fn embed_examples() {
        let a = LocalOperator::on_site(2, z()).unwrap();
        let e = a.embed(vol(3)).unwrap();
        let oracle = kron(&i2(), &kron(&z(), &i2()).unwrap()).unwrap();
        assert_eq!(e.matrix().unwrap(), oracle);
        assert_eq!(e.support(), vec![1, 2, 3]);

        let one = LocalOperator::new(2, vec![], ComplexMatrix::identity(1)).unwrap();
        assert_eq!(one.embed(vol(2)).unwrap().matrix().unwrap(), ComplexMatrix::identity(4));

        assert_eq!(a.embed(vol(1)), Err(Error::OutsideVolume { site: 2, volume: 1 }));
    }

    #[test]
    fn embedding_is_isometric() {
        let mut rng = Lcg::new(17);
        for _ in 0..10 {
            let a = LocalOperator::on_site(1, random_matrix(&mut rng, 2)).unwrap();
            let e = a.embed(vol(5)).unwrap();
            let dense = operator_norm_dense(&e.matrix().unwrap(), 64).unwrap();
            assert!((dense - a.norm().unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn product_examples() {
        let x1 = LocalOperator::on_site(1, x()).unwrap();
        assert_eq!(x1.product(&x1).unwrap().matrix().unwrap(), ComplexMatrix::identity(2));

        let z4 = LocalOperator::on_site(4, z()).unwrap();
        let p = x1.product(&z4).unwrap();
        assert_eq!(p.support(), vec![1, 4]);
        assert_eq!(p.matrix().unwrap(), kron(&x(), &z()).unwrap());

        assert_eq!(x1.product(&LocalOperator::identity(2)).unwrap(), x1);
    }

    #[test]
    fn product_site_dim_mismatch() {
        let a = LocalOperator::on_site(1, x()).unwrap();
        let b = LocalOperator::on_site(1, ComplexMatrix::identity(3)).unwrap();
        assert_eq!(a.product(&b), Err(Error::SiteDimMismatch { left: 2, right: 3 }));
    }

    #[test]
    fn commutator_examples() {
        let x1 = LocalOperator::on_site(1, x()).unwrap();
        let z1 = LocalOperator::on_site(1, z()).unwrap();
        let c = x1.commutator(&z1).unwrap();
        assert_eq!(c.matrix().unwrap(), pauli(Pauli::Y).scale(Complex64::new(0.0, -2.0)));
        assert!((c.norm().unwrap() - 2.0).abs() < 1e-12);

        let z7 = LocalOperator::on_site(7, z()).unwrap();
        let zero = x1.commutator(&z7).unwrap();
        assert!(zero.is_zero() && zero.factors().is_empty());

        let mut rng = Lcg::new(3);
        let a = LocalOperator::new(2, vec![2, 3], random_matrix(&mut rng, 4)).unwrap();
        assert!(a.commutator(&a).unwrap().is_zero());
    }

    #[test]
    fn commutator_keeps_untouched_factors() {
        // [X1 X2 X3, Z1] = [X, Z] ⊗ X ⊗ X
        let chain = LocalOperator::site_product(2, (1..=3).map(|s| (s, x()))).unwrap();
        let z1 = LocalOperator::on_site(1, z()).unwrap();
        let c = chain.commutator(&z1).unwrap();
        assert_eq!(c.factors().len(), 3);
        let oracle = {
            let cz = x().commutator(&z());
            kron(&cz, &kron(&x(), &x()).unwrap()).unwrap()
        };
        assert_eq!(c.matrix().unwrap(), oracle);
    }

    #[test]
    fn relabel_reorders_legs() {
        let xz = LocalOperator::new(2, vec![1, 2], kron(&x(), &z()).unwrap()).unwrap();
        let swapped = xz.relabel(|s| 3 - s);
        assert_eq!(swapped.support(), vec![1, 2]);
        assert_eq!(swapped.matrix().unwrap(), kron(&z(), &x()).unwrap());
    }

    #[test]
    fn reduce_support_examples() {
        let iz = LocalOperator::new(2, vec![1, 2], kron(&i2(), &z()).unwrap()).unwrap();
        assert_eq!(iz.reduce_support(), LocalOperator::on_site(2, z()).unwrap());

        let x3 = LocalOperator::on_site(3, x()).unwrap();
        assert_eq!(x3.reduce_support(), x3);

        let mut rng = Lcg::new(5);
        for _ in 0..5 {
            let a = LocalOperator::on_site(2, random_matrix(&mut rng, 2)).unwrap();
            let r = a.embed(vol(4)).unwrap().reduce_support();
            assert_eq!(r.support(), vec![2]);
            assert!(r.matrix().unwrap().max_abs_diff(&a.matrix().unwrap()) < 1e-12);
        }

        let scalar = LocalOperator::new(2, vec![1, 2], ComplexMatrix::identity(4).scale(Complex64::new(3.0, 0.0))).unwrap();
        assert_eq!(scalar.reduce_support(), LocalOperator::scalar(2, Complex64::new(3.0, 0.0)));
    }

    #[test]
    fn dense_on_interleaved_factors() {
        // factor {1,3} and factor {2}
        let mut rng = Lcg::new(11);
        let a = random_matrix(&mut rng, 4);
        let b = random_matrix(&mut rng, 2);
        let op = LocalOperator::tensor(2, vec![(vec![1, 3], a.clone()), (vec![2], b.clone())]).unwrap();
        let dense = op.matrix().unwrap();
        // brute force: <i1 i2 i3| A_{13} ⊗ B_2 |j1 j2 j3> = A[(i1 i3),(j1 j3)] B[i2, j2]
        for i in 0..8usize {
            for j in 0..8usize {
                let (i1, i2, i3) = (i >> 2, (i >> 1) & 1, i & 1);
                let (j1, j2, j3) = (j >> 2, (j >> 1) & 1, j & 1);
                let expect = a.get(i1 * 2 + i3, j1 * 2 + j3) * b.get(i2, j2);
                assert_eq!(dense.get(i, j), expect);
            }
        }
    }
}
