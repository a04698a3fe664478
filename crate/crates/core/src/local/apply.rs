use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Zero;

use super::{checked_dim, LocalOperator, OperatorSum, Volume};
use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

/// Amplitudes of a vector in `(C^d)^{⊗N}`, site 1 most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    volume: Volume,
    site_dim: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(volume: Volume, site_dim: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = checked_dim(site_dim, volume.size()).ok_or(Error::Capacity { dim: usize::MAX, cap: usize::MAX })?;
        if amplitudes.len() != dim {
            return Err(Error::ShapeMismatch {
                expected: alloc::format!("{dim} amplitudes"),
                found: alloc::format!("{}", amplitudes.len()),
            });
        }
        Ok(Self { volume, site_dim, amplitudes })
    }

    /// The computational basis vector with the given index.
    pub fn basis(volume: Volume, site_dim: usize, index: usize) -> Result<Self> {
        let dim = checked_dim(site_dim, volume.size()).ok_or(Error::Capacity { dim: usize::MAX, cap: usize::MAX })?;
        let mut amplitudes = vec![Complex64::zero(); dim];
        *amplitudes.get_mut(index).ok_or(Error::Contract(alloc::format!("basis index {index} >= {dim}")))? =
            Complex64::new(1.0, 0.0);
        Ok(Self { volume, site_dim, amplitudes })
    }

    pub fn volume(&self) -> Volume {
        self.volume
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        num_traits::Float::sqrt(self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>())
    }
}

/// Applies one dense block acting on `sites` (ascending) in place.
fn apply_block(matrix: &ComplexMatrix, sites: &[usize], d: usize, n: usize, v: &mut [Complex64]) {
    let k = sites.len();
    let strides: Vec<usize> = sites.iter().map(|&s| d.pow((n - s) as u32)).collect();
    let local_dim = matrix.rows();
    let offsets: Vec<usize> = (0..local_dim)
        .map(|l| {
            let mut rem = l;
            let mut off = 0;
            for t in (0..k).rev() {
                off += (rem % d) * strides[t];
                rem /= d;
            }
            off
        })
        .collect();
    let mut gathered = vec![Complex64::zero(); local_dim];
    let mut out = vec![Complex64::zero(); local_dim];
    for base in 0..v.len() {
        if strides.iter().any(|&st| (base / st) % d != 0) {
            continue;
        }
        for (g, &off) in gathered.iter_mut().zip(&offsets) {
            *g = v[base + off];
        }
        matrix.apply_into(&gathered, &mut out);
        for (&o, &off) in out.iter().zip(&offsets) {
            v[base + off] = o;
        }
    }
}

/// `op · v` on a chain of `n` sites; factors are applied one after another.
pub(crate) fn apply_operator(op: &LocalOperator, n: usize, v: &[Complex64], out: &mut [Complex64]) {
    out.copy_from_slice(v);
    for f in op.factors() {
        apply_block(f.matrix(), f.sites(), op.site_dim(), n, out);
    }
    let s = op.scale();
    if s != Complex64::new(1.0, 0.0) {
        out.iter_mut().for_each(|z| *z *= s);
    }
}

/// `out = Σ c_k op_k v` without forming any matrix on the full chain.
pub(crate) fn apply_sum(s: &OperatorSum, n: usize, v: &[Complex64], out: &mut [Complex64], scratch: &mut [Complex64]) {
    out.iter_mut().for_each(|z| *z = Complex64::zero());
    for (c, op) in s.terms() {
        apply_operator(op, n, v, scratch);
        for (o, &t) in out.iter_mut().zip(scratch.iter()) {
            *o += c * t;
        }
    }
}

impl OperatorSum {
    /// Matrix-free action of the sum on a state vector.
    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if v.site_dim != self.site_dim() {
            return Err(Error::SiteDimMismatch { left: self.site_dim(), right: v.site_dim });
        }
        self.check_volume(v.volume)?;
        let mut out = vec![Complex64::zero(); v.amplitudes.len()];
        let mut scratch = out.clone();
        apply_sum(self, v.volume.size(), &v.amplitudes, &mut out, &mut scratch);
        Ok(StateVector { volume: v.volume, site_dim: v.site_dim, amplitudes: out })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{pauli, Pauli};
    use crate::testutil::{random_op, random_vector, Lcg};

    #[test]
    fn zero_sum_gives_zero_vector() {
        let vol = Volume::new(3).unwrap();
        let v = StateVector::basis(vol, 2, 5).unwrap();
        let out = OperatorSum::zero(2).apply(&v).unwrap();
        assert!(out.amplitudes().iter().all(|z| z.is_zero()));
    }

    #[test]
    fn z_on_all_up_is_eigenvector() {
        let vol = Volume::new(4).unwrap();
        let v = StateVector::basis(vol, 2, 0).unwrap();
        let s = OperatorSum::from(LocalOperator::on_site(1, pauli(Pauli::Z)).unwrap());
        assert_eq!(s.apply(&v).unwrap(), v);
    }

    #[test]
    fn x_flips_most_significant_digit() {
        let vol = Volume::new(3).unwrap();
        let v = StateVector::basis(vol, 2, 0).unwrap();
        let s = OperatorSum::from(LocalOperator::on_site(1, pauli(Pauli::X)).unwrap());
        assert_eq!(s.apply(&v).unwrap(), StateVector::basis(vol, 2, 4).unwrap());
    }

    #[test]
    fn apply_matches_dense_product() {
        let mut rng = Lcg::new(99);
        let n = 6;
        let vol = Volume::new(n).unwrap();
        for _ in 0..5 {
            let mut s = OperatorSum::zero(2);
            s.push(Complex64::new(0.7, -0.2), random_op(&mut rng, &[1, 4])).unwrap();
            s.push(Complex64::new(-1.1, 0.0), random_op(&mut rng, &[2, 3, 6])).unwrap();
            s.push(Complex64::new(0.0, 0.4), random_op(&mut rng, &[5])).unwrap();
            let v = StateVector::new(vol, 2, random_vector(&mut rng, 1 << n)).unwrap();
            let fast = s.apply(&v).unwrap();
            let dense = s.dense(vol, 1 << n).unwrap();
            let mut slow = vec![Complex64::zero(); 1 << n];
            dense.apply_into(v.amplitudes(), &mut slow);
            let err = fast.amplitudes().iter().zip(&slow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10, "err = {err}");
        }
    }

    #[test]
    fn apply_rejects_outside_support() {
        let vol = Volume::new(2).unwrap();
        let v = StateVector::basis(vol, 2, 0).unwrap();
        let s = OperatorSum::from(LocalOperator::on_site(3, pauli(Pauli::Z)).unwrap());
        assert!(matches!(s.apply(&v), Err(Error::OutsideVolume { site: 3, volume: 2 })));
    }
}
