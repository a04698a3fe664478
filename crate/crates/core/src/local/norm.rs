use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{Float, Zero};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::apply::apply_sum;
use super::{checked_dim, OperatorSum, Volume};
use crate::error::{Error, Result};
use crate::matrix::{operator_norm_dense, DEFAULT_DENSE_CAP};

/// Largest Hilbert-space dimension handled by the matrix-free path.
pub const ITERATIVE_CAP: usize = 1 << 22;

/// How an operator norm is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormMethod {
    /// Exact Hermitian eigensolve on the union of the supports.
    Dense,
    /// Krylov iteration on `s*·s` using the matrix-free action.
    Iterative,
    /// Exact factor norms for single terms, dense when within the cap,
    /// iterative otherwise.
    Auto,
    /// Product of factor norms of a single elementary tensor (reported only).
    Factored,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    pub method: NormMethod,
    pub dense_cap: usize,
    pub seed: u64,
    /// Relative residual tolerance on the top Ritz value of `s*·s`.
    pub tolerance: f64,
    /// Cap on applications of `s*·s`.
    pub max_iterations: usize,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self { method: NormMethod::Auto, dense_cap: DEFAULT_DENSE_CAP, seed: 0, tolerance: 1e-9, max_iterations: 10_000 }
    }
}

impl NormOptions {
    pub fn with_method(self, method: NormMethod) -> Self {
        Self { method, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOutcome {
    /// The norm, or the best estimate when `converged` is false.
    pub value: f64,
    pub converged: bool,
    pub method: NormMethod,
    pub iterations: usize,
}

impl NormOutcome {
    fn exact(value: f64, method: NormMethod) -> Self {
        Self { value, converged: true, method, iterations: 0 }
    }
}

/// Operator norm of `s` on `volume`.
///
/// Tensoring with identities is isometric, so both routes work on the union
/// of the term supports rather than the whole chain.
pub fn norm(s: &OperatorSum, volume: Volume, opts: &NormOptions) -> Result<NormOutcome> {
    s.check_volume(volume)?;
    let support = s.support();
    if support.is_empty() {
        let c: Complex64 = s.terms().iter().map(|(c, op)| c * op.scale()).sum();
        return Ok(NormOutcome::exact(c.norm(), NormMethod::Factored));
    }
    let d = s.site_dim();
    let dim = checked_dim(d, support.len());
    let method = match opts.method {
        NormMethod::Auto if s.len() == 1 => {
            let (c, op) = &s.terms()[0];
            return Ok(NormOutcome::exact(c.norm() * op.norm()?, NormMethod::Factored));
        }
        NormMethod::Auto | NormMethod::Factored => match dim {
            Some(n) if n <= opts.dense_cap => NormMethod::Dense,
            _ => NormMethod::Iterative,
        },
        m => m,
    };
    match method {
        NormMethod::Dense => {
            let m = s.dense_on(&support, opts.dense_cap)?;
            Ok(NormOutcome::exact(operator_norm_dense(&m, opts.dense_cap)?, NormMethod::Dense))
        }
        _ => {
            let dim = match dim {
                Some(n) if n <= ITERATIVE_CAP => n,
                other => return Err(Error::Capacity { dim: other.unwrap_or(usize::MAX), cap: ITERATIVE_CAP }),
            };
            let position = |x: usize| support.binary_search(&x).expect("site in support") + 1;
            let compact = s.map_ops(|op| Ok(op.relabel(position)))?;
            let seed = opts.seed
                ^ (volume.size() as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
                ^ (s.len() as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
            Ok(lanczos_norm(&compact, support.len(), dim, seed, opts))
        }
    }
}

fn random_unit(dim: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
    let mut v: Vec<Complex64> = (0..dim).map(|_| Complex64::new(uniform(), uniform())).collect();
    normalize(&mut v);
    v
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let n = Float::sqrt(v.iter().map(|z| z.norm_sqr()).sum::<f64>());
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
    n
}

/// Largest eigenpair of the symmetric tridiagonal matrix (alpha, beta).
fn top_ritz(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = t.symmetric_eigen();
    let (idx, &theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite Ritz values"))
        .expect("nonempty");
    (theta, eig.eigenvectors.column(idx).iter().copied().collect())
}

/// Lanczos with full reorthogonalization on `H = s*·s`, restarted from the
/// current Ritz vector when the basis is full.
fn lanczos_norm(s: &OperatorSum, n: usize, dim: usize, seed: u64, opts: &NormOptions) -> NormOutcome {
    let adj = s.adjoint();
    let mut tmp = vec![Complex64::zero(); dim];
    let mut scratch = vec![Complex64::zero(); dim];
    let mut apply_h = |v: &[Complex64], out: &mut [Complex64]| {
        apply_sum(s, n, v, &mut tmp, &mut scratch);
        apply_sum(&adj, n, &tmp, out, &mut scratch);
    };

    let max_basis = dim.min(100).min(((1usize << 24) / dim).max(8));
    let mut start = random_unit(dim, seed);
    let mut matvecs = 0;
    loop {
        let mut basis: Vec<Vec<Complex64>> = vec![start.clone()];
        let (mut alpha, mut beta): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut w = vec![Complex64::zero(); dim];
        let mut ritz = Vec::new();
        for k in 0..max_basis {
            apply_h(&basis[k], &mut w);
            matvecs += 1;
            let a = dot(&basis[k], &w).re;
            for _ in 0..2 {
                for q in &basis {
                    let h = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= h * y);
                }
            }
            let b = normalize(&mut w);
            alpha.push(a);
            let (theta, y) = top_ritz(&alpha, &beta);
            let best = theta.max(0.0);
            let residual = b * y[k].abs();
            let scale = theta.abs().max(f64::MIN_POSITIVE);
            if residual <= opts.tolerance * scale || b <= 1e-14 * scale.max(a.abs()) || basis.len() == dim {
                return NormOutcome { value: best.sqrt(), converged: true, method: NormMethod::Iterative, iterations: matvecs };
            }
            if matvecs >= opts.max_iterations {
                return NormOutcome { value: best.sqrt(), converged: false, method: NormMethod::Iterative, iterations: matvecs };
            }
            ritz = y;
            beta.push(b);
            basis.push(w.clone());
        }
        let mut next = vec![Complex64::zero(); dim];
        for (coef, q) in ritz.iter().zip(&basis) {
            next.iter_mut().zip(q).for_each(|(x, y)| *x += *coef * y);
        }
        normalize(&mut next);
        start = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local::LocalOperator;
    use crate::matrix::{pauli, Pauli};
    use crate::testutil::{random_sum, Lcg};

    fn vol(n: usize) -> Volume {
        Volume::new(n).unwrap()
    }

    #[test]
    fn identity_has_unit_norm_iteratively() {
        let s = OperatorSum::from(LocalOperator::identity(2));
        let out = norm(&s, vol(10), &NormOptions::default().with_method(NormMethod::Iterative)).unwrap();
        assert!((out.value - 1.0).abs() < 1e-12);

        // identity written on explicit sites still runs the Krylov path
        let i3 = LocalOperator::site_product(2, (1..=10).map(|s| (s, pauli(Pauli::Identity)))).unwrap();
        let out = norm(&OperatorSum::from(i3), vol(10), &NormOptions::default().with_method(NormMethod::Iterative)).unwrap();
        assert!(out.converged && (out.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn half_sum_of_two_z() {
        let mut s = OperatorSum::zero(2);
        for site in [1, 2] {
            s.push(Complex64::new(0.5, 0.0), LocalOperator::on_site(site, pauli(Pauli::Z)).unwrap()).unwrap();
        }
        for method in [NormMethod::Dense, NormMethod::Iterative, NormMethod::Auto] {
            let out = norm(&s, vol(2), &NormOptions::default().with_method(method)).unwrap();
            assert!((out.value - 1.0).abs() < 1e-9, "{method:?}: {}", out.value);
        }
    }

    #[test]
    fn dense_and_iterative_agree_on_random_sums() {
        let mut rng = Lcg::new(2024);
        for case in 0..12 {
            let s = random_sum(&mut rng, 9, 5);
            let opts = NormOptions { seed: case, ..NormOptions::default() };
            let dense = norm(&s, vol(9), &opts.with_method(NormMethod::Dense)).unwrap();
            let iter = norm(&s, vol(9), &opts.with_method(NormMethod::Iterative)).unwrap();
            assert!(iter.converged);
            assert!((dense.value - iter.value).abs() <= 1e-8, "{} vs {}", dense.value, iter.value);
        }
    }

    #[test]
    fn unconverged_is_reported() {
        let mut rng = Lcg::new(1);
        let s = random_sum(&mut rng, 8, 6);
        let opts = NormOptions { max_iterations: 2, method: NormMethod::Iterative, ..NormOptions::default() };
        let out = norm(&s, vol(8), &opts).unwrap();
        assert!(!out.converged);
        assert!(out.value > 0.0);
    }

    #[test]
    fn dense_cap_is_enforced() {
        let s = crate::testutil::random_sum(&mut Lcg::new(4), 6, 3);
        let opts = NormOptions { dense_cap: 4, method: NormMethod::Dense, ..NormOptions::default() };
        assert!(matches!(norm(&s, vol(6), &opts), Err(Error::Capacity { .. })));
    }

    #[test]
    fn support_outside_volume() {
        let s = OperatorSum::from(LocalOperator::on_site(5, pauli(Pauli::Z)).unwrap());
        assert!(matches!(norm(&s, vol(4), &NormOptions::default()), Err(Error::OutsideVolume { .. })));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let s = random_sum(&mut Lcg::new(7), 8, 4);
        let opts = NormOptions { seed: 42, method: NormMethod::Iterative, ..NormOptions::default() };
        let a = norm(&s, vol(8), &opts).unwrap();
        let b = norm(&s, vol(8), &opts).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
