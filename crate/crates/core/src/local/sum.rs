use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::{One, Zero};

use super::operator::{LocalOperator, FUSE_CAP};
use super::Volume;
use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

/// A formal sum `Σ c_k · op_k` of local operators sharing a site dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSum {
    site_dim: usize,
    terms: Vec<(Complex64, LocalOperator)>,
}

impl From<LocalOperator> for OperatorSum {
    fn from(op: LocalOperator) -> Self {
        let mut s = Self::zero(op.site_dim());
        if !op.is_zero() {
            s.terms.push((Complex64::one(), op));
        }
        s
    }
}

impl OperatorSum {
    pub fn zero(site_dim: usize) -> Self {
        Self { site_dim, terms: Vec::new() }
    }

    pub fn from_terms(site_dim: usize, terms: impl IntoIterator<Item = (Complex64, LocalOperator)>) -> Result<Self> {
        let mut s = Self::zero(site_dim);
        for (c, op) in terms {
            s.push(c, op)?;
        }
        Ok(s)
    }

    /// Appends `c · op`; zero terms are dropped.
    pub fn push(&mut self, c: Complex64, op: LocalOperator) -> Result<()> {
        if op.site_dim() != self.site_dim {
            return Err(Error::SiteDimMismatch { left: self.site_dim, right: op.site_dim() });
        }
        if !c.is_zero() && !op.is_zero() {
            self.terms.push((c, op));
        }
        Ok(())
    }

    #[inline]
    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    #[inline]
    pub fn terms(&self) -> &[(Complex64, LocalOperator)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sorted union of all term supports.
    pub fn support(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.terms.iter().flat_map(|(_, op)| op.support()).collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    pub fn max_site(&self) -> Option<usize> {
        self.terms.iter().filter_map(|(_, op)| op.max_site()).max()
    }

    pub fn check_volume(&self, volume: Volume) -> Result<()> {
        match self.max_site() {
            Some(site) if site > volume.size() => Err(Error::OutsideVolume { site, volume: volume.size() }),
            _ => Ok(()),
        }
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.site_dim != other.site_dim {
            return Err(Error::SiteDimMismatch { left: self.site_dim, right: other.site_dim });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        if c.is_zero() {
            return Self::zero(self.site_dim);
        }
        Self { site_dim: self.site_dim, terms: self.terms.iter().map(|(k, op)| (k * c, op.clone())).collect() }
    }

    pub fn adjoint(&self) -> Self {
        Self { site_dim: self.site_dim, terms: self.terms.iter().map(|(c, op)| (c.conj(), op.adjoint())).collect() }
    }

    /// Applies `f` to every operator, keeping coefficients.
    pub fn map_ops(&self, mut f: impl FnMut(&LocalOperator) -> Result<LocalOperator>) -> Result<Self> {
        let mut out = Self::zero(self.site_dim);
        for (c, op) in &self.terms {
            out.push(*c, f(op)?)?;
        }
        Ok(out)
    }

    /// Pointwise product, expanded over all term pairs.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let mut out = Self::zero(self.site_dim);
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                out.push(a * b, x.product(y)?)?;
            }
        }
        Ok(out)
    }

    /// `[self, other]` expanded over term pairs; pairs with disjoint supports
    /// contribute nothing. A pair whose overlap is too large to fuse is
    /// expanded as `x·y − y·x` instead.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let mut out = Self::zero(self.site_dim);
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                match x.commutator_capped(y, FUSE_CAP) {
                    Ok(c) => out.push(a * b, c)?,
                    Err(Error::Capacity { .. }) => {
                        out.push(a * b, x.product(y)?)?;
                        out.push(-(a * b), y.product(x)?)?;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(out)
    }

    /// Merges terms whose factors are bitwise identical and drops the terms
    /// whose combined coefficient vanishes. Term order follows first occurrence.
    pub fn simplify(&self) -> Self {
        let mut merged: Vec<(Complex64, LocalOperator)> = Vec::with_capacity(self.terms.len());
        for (c, op) in &self.terms {
            let weight = c * op.scale();
            match merged.iter_mut().find(|(_, m)| m.factors() == op.factors()) {
                Some((acc, _)) => *acc += weight,
                None => merged.push((weight, op.scaled(op.scale().inv()))),
            }
        }
        merged.retain(|(c, _)| !c.is_zero());
        Self { site_dim: self.site_dim, terms: merged }
    }

    /// Dense matrix on a sorted site list containing every support.
    pub fn dense_on(&self, sites: &[usize], cap: usize) -> Result<ComplexMatrix> {
        let dim = super::checked_dim(self.site_dim, sites.len()).ok_or(Error::Capacity { dim: usize::MAX, cap })?;
        if dim > cap {
            return Err(Error::Capacity { dim, cap });
        }
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for (c, op) in &self.terms {
            acc = &acc + &op.dense_on(sites, cap)?.scale(*c);
        }
        Ok(acc)
    }

    /// Dense matrix on the full volume.
    pub fn dense(&self, volume: Volume, cap: usize) -> Result<ComplexMatrix> {
        self.check_volume(volume)?;
        let sites: Vec<usize> = (1..=volume.size()).collect();
        self.dense_on(&sites, cap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{pauli, Pauli};
    use crate::testutil::{random_op, Lcg};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn simplify_cancels_identical_terms() {
        let z1 = LocalOperator::on_site(1, pauli(Pauli::Z)).unwrap();
        let z2 = LocalOperator::on_site(2, pauli(Pauli::Z)).unwrap();
        let s = OperatorSum::from_terms(2, [(c(0.5), z1.clone()), (c(0.5), z2), (c(-0.5), z1)]).unwrap();
        let r = s.simplify();
        assert_eq!(r.len(), 1);
        assert_eq!(r.terms()[0].1.support(), vec![2]);
    }

    #[test]
    fn disjoint_commutator_is_empty() {
        let mut rng = Lcg::new(8);
        for _ in 0..20 {
            let a = OperatorSum::from(random_op(&mut rng, &[1, 2]));
            let b = OperatorSum::from(random_op(&mut rng, &[4, 6]));
            assert!(a.commutator(&b).unwrap().is_empty());
        }
    }

    #[test]
    fn pointwise_laws_against_dense() {
        let mut rng = Lcg::new(21);
        let sites: Vec<usize> = (1..=4).collect();
        for _ in 0..10 {
            let a = OperatorSum::from_terms(2, [(c(0.3), random_op(&mut rng, &[1, 2])), (c(1.0), random_op(&mut rng, &[3]))]).unwrap();
            let b = OperatorSum::from_terms(2, [(c(-1.0), random_op(&mut rng, &[2, 4]))]).unwrap();
            let (da, db) = (a.dense_on(&sites, 64).unwrap(), b.dense_on(&sites, 64).unwrap());
            let prod = a.product(&b).unwrap().dense_on(&sites, 64).unwrap();
            assert!(prod.max_abs_diff(&da.matmul(&db)) < 1e-10);
            let comm = a.commutator(&b).unwrap().dense_on(&sites, 64).unwrap();
            assert!(comm.max_abs_diff(&da.commutator(&db)) < 1e-10);
            let adj = a.adjoint().dense_on(&sites, 64).unwrap();
            assert!(adj.max_abs_diff(&da.adjoint()) < 1e-12);
        }
    }
}
