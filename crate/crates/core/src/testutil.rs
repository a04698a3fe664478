//! Seeded random inputs shared by the unit tests.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::local::{LocalOperator, OperatorSum};
use crate::matrix::ComplexMatrix;

pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
        self.0 ^ (self.0 >> 29)
    }

    /// Uniform in [-1, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

pub fn random_matrix(rng: &mut Lcg, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.uniform(), rng.uniform()))
}

pub fn random_vector(rng: &mut Lcg, dim: usize) -> Vec<Complex64> {
    (0..dim).map(|_| Complex64::new(rng.uniform(), rng.uniform())).collect()
}

/// Random qubit operator on the given ascending sites.
pub fn random_op(rng: &mut Lcg, sites: &[usize]) -> LocalOperator {
    LocalOperator::new(2, sites.to_vec(), random_matrix(rng, 1 << sites.len())).unwrap()
}

/// Random qubit sum on `{1..n}` with terms supported on 1 to 3 sites.
pub fn random_sum(rng: &mut Lcg, n: usize, terms: usize) -> OperatorSum {
    let mut s = OperatorSum::zero(2);
    for _ in 0..terms {
        let k = 1 + rng.below(3.min(n));
        let mut sites: Vec<usize> = Vec::new();
        while sites.len() < k {
            let x = 1 + rng.below(n);
            if !sites.contains(&x) {
                sites.push(x);
            }
        }
        sites.sort_unstable();
        s.push(Complex64::new(rng.uniform(), rng.uniform()), random_op(rng, &sites)).unwrap();
    }
    s
}
