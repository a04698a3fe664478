//! Translation-invariant product states `ω = ρ^{⊗N}` and their expectations.
//!
//! Expectations are taken factor by factor on each term's own support. The
//! dense route through `ρ^{⊗N}` is kept only as an independent cross-check.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::local::{LocalOperator, OperatorSum, Volume};
use crate::matrix::{hermitian_eigenvalues, kron_all, pauli, ComplexMatrix, Pauli};
use crate::shift::{gamma_average, gamma_pow};

const STATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    rho: ComplexMatrix,
}

/// `tr(A·B)` for square matrices of equal size.
fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let n = a.rows();
    let mut acc = Complex64::zero();
    for i in 0..n {
        for j in 0..n {
            acc += a.get(i, j) * b.get(j, i);
        }
    }
    acc
}

impl ProductState {
    /// Validates that `rho` is a density matrix: self-adjoint, unit trace and
    /// positive semidefinite, each to within 1e-12.
    pub fn new(rho: ComplexMatrix) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::InvalidState(format!("density matrix is {}x{}", rho.rows(), rho.cols())));
        }
        if !rho.is_hermitian(STATE_TOL) {
            return Err(Error::InvalidState("density matrix is not self-adjoint".into()));
        }
        let tr = rho.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!("density matrix has trace {} (expected 1)", tr.re)));
        }
        if let Some(&low) = hermitian_eigenvalues(&rho).iter().find(|&&e| e < -STATE_TOL) {
            return Err(Error::InvalidState(format!("density matrix has negative eigenvalue {low}")));
        }
        Ok(Self { rho })
    }

    /// Qubit state `½(1 + x σ¹ + y σ² + z σ³)`.
    pub fn bloch(x: f64, y: f64, z: f64) -> Result<Self> {
        let terms = [(Pauli::Identity, 1.0), (Pauli::X, x), (Pauli::Y, y), (Pauli::Z, z)];
        let rho = terms
            .iter()
            .fold(ComplexMatrix::zeros(2, 2), |acc, &(p, w)| &acc + &pauli(p).scale(Complex64::new(0.5 * w, 0.0)));
        Self::new(rho)
    }

    pub fn maximally_mixed(site_dim: usize) -> Self {
        Self { rho: ComplexMatrix::identity(site_dim).scale(Complex64::new(1.0 / site_dim as f64, 0.0)) }
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn site_dim(&self) -> usize {
        self.rho.rows()
    }

    /// Single-site expectation `tr(ρ a)`.
    pub fn site_expectation(&self, a: &ComplexMatrix) -> Complex64 {
        trace_product(&self.rho, a)
    }

    fn check_dim(&self, site_dim: usize) -> Result<()> {
        if site_dim != self.site_dim() {
            return Err(Error::SiteDimMismatch { left: self.site_dim(), right: site_dim });
        }
        Ok(())
    }

    /// `ω(op)` as a product over the operator's factors.
    pub fn expectation_op(&self, op: &LocalOperator) -> Result<Complex64> {
        self.check_dim(op.site_dim())?;
        let mut acc = op.scale();
        for f in op.factors() {
            let rho_k = kron_all(core::iter::repeat_n(&self.rho, f.sites().len()), usize::MAX)?;
            acc *= trace_product(&rho_k, f.matrix());
        }
        Ok(acc)
    }

    /// `ω(s)` for a sum supported in `volume`, computed termwise.
    pub fn expectation(&self, s: &OperatorSum, volume: Volume) -> Result<Complex64> {
        s.check_volume(volume)?;
        s.terms().iter().try_fold(Complex64::zero(), |acc, (c, op)| Ok(acc + c * self.expectation_op(op)?))
    }

    /// `tr(ρ^{⊗N} · s)` through the dense matrices; dimension capped at `cap`.
    pub fn expectation_dense(&self, s: &OperatorSum, volume: Volume, cap: usize) -> Result<Complex64> {
        self.check_dim(s.site_dim())?;
        let dense = s.dense(volume, cap)?;
        let rho_n = kron_all(core::iter::repeat_n(&self.rho, volume.size()), cap)?;
        Ok(trace_product(&rho_n, &dense))
    }

    /// `ω(γ̄(a)²) − ω(γ̄(a))²` for a self-adjoint single-site `a`. Only pairs
    /// of shifted copies with overlapping supports contribute; disjoint pairs
    /// factorize exactly in a product state.
    pub fn average_variance(&self, seed: &LocalOperator, volume: Volume) -> Result<f64> {
        self.check_dim(seed.site_dim())?;
        if seed.support_len() > 1 {
            return Err(Error::Contract("variance seed must act on a single site".into()));
        }
        let m = seed.matrix()?;
        if !m.is_hermitian(STATE_TOL) {
            return Err(Error::Contract("variance seed must be self-adjoint".into()));
        }
        let avg = gamma_average(seed, volume)?;
        let terms = avg.terms();
        let means: Vec<Complex64> =
            terms.iter().map(|(c, op)| Ok(c * self.expectation_op(op)?)).collect::<Result<_>>()?;
        let mut var = Complex64::zero();
        for (i, (ci, a)) in terms.iter().enumerate() {
            for (j, (cj, b)) in terms.iter().enumerate() {
                let (sa, sb) = (a.support(), b.support());
                if !sa.iter().any(|x| sb.contains(x)) {
                    continue;
                }
                var += ci * cj * self.expectation_op(&a.product(b)?)? - means[i] * means[j];
            }
        }
        Ok(var.re)
    }

    /// `|ω(γ̄(γ^j a)) − ω(γ̄(a))|`; zero at every finite volume because
    /// `γ̄ ∘ γ^j = γ̄`.
    pub fn induced_invariance_residual(&self, seed: &LocalOperator, volume: Volume, j: i64) -> Result<f64> {
        let base = self.expectation(&gamma_average(seed, volume)?, volume)?;
        let shifted = self.expectation(&gamma_average(&gamma_pow(seed, volume, j)?, volume)?, volume)?;
        Ok((shifted - base).norm())
    }
}
