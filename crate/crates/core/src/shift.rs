//! Cyclic left shift on `{1, …, N}`, its average, and γ-sequences.
//!
//! Shifts relabel supports and never build permutation matrices: `γ^j` sends
//! site `x` to `((x − 1 − j) mod N) + 1`, so an elementary tensor
//! `a₁ ⊗ a₂ ⊗ … ⊗ a_N` becomes `a₂ ⊗ … ⊗ a_N ⊗ a₁`.


use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::local::{norm, LocalOperator, NormOptions, OperatorSum, Volume};

fn shift_site(x: usize, n: usize, j: i64) -> usize {
    let pos = (x as i64 - 1 - j).rem_euclid(n as i64);
    pos as usize + 1
}

/// `γ_Λ^j(a)` on the volume; `j` is reduced mod N.
pub fn gamma_pow(a: &LocalOperator, volume: Volume, j: i64) -> Result<LocalOperator> {
    volume.check_sites(&a.support())?;
    let n = volume.size();
    if j.rem_euclid(n as i64) == 0 {
        return Ok(a.clone());
    }
    Ok(a.relabel(|x| shift_site(x, n, j)))
}

/// `γ_Λ^j` applied termwise to a sum.
pub fn gamma_pow_sum(s: &OperatorSum, volume: Volume, j: i64) -> Result<OperatorSum> {
    s.map_ops(|op| gamma_pow(op, volume, j))
}

/// `γ̄_Λ(a) = (1/N) Σ_{j<N} γ^j(a)` as an N-term sum.
pub fn gamma_average(a: &LocalOperator, volume: Volume) -> Result<OperatorSum> {
    let n = volume.size();
    let w = Complex64::new(1.0 / n as f64, 0.0);
    let mut out = OperatorSum::zero(a.site_dim());
    for j in 0..n {
        out.push(w, gamma_pow(a, volume, j as i64)?)?;
    }
    Ok(out)
}

/// `γ̄_Λ` applied to a sum.
pub fn gamma_average_sum(s: &OperatorSum, volume: Volume) -> Result<OperatorSum> {
    let mut out = OperatorSum::zero(s.site_dim());
    for (c, op) in s.terms() {
        out = out.add(&gamma_average(op, volume)?.scaled(*c))?;
    }
    Ok(out)
}

/// A local seed anchored at sites `{1, …, |Λ₀|}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSequenceSpec {
    seed: LocalOperator,
    base_support_size: usize,
}

impl GammaSequenceSpec {
    /// Translates the seed so that its leftmost site is 1. `|Λ₀|` is the span
    /// of the translated support.
    pub fn new(seed: LocalOperator) -> Result<Self> {
        let lo = seed
            .min_site()
            .ok_or_else(|| Error::InvalidSupport("γ-sequence seed needs a nonempty support".into()))?;
        let seed = seed.relabel(|x| x + 1 - lo);
        let base_support_size = seed.span();
        Ok(Self { seed, base_support_size })
    }

    pub fn seed(&self) -> &LocalOperator {
        &self.seed
    }

    pub fn base_support_size(&self) -> usize {
        self.base_support_size
    }
}

/// The γ-sequence at volume N: the averaged seed when `N ≥ |Λ₀|`, zero otherwise.
pub fn eval_gamma_sequence(spec: &GammaSequenceSpec, volume: Volume) -> Result<OperatorSum> {
    if volume.size() < spec.base_support_size {
        return Ok(OperatorSum::zero(spec.seed.site_dim()));
    }
    gamma_average(&spec.seed, volume)
}

/// Whether `‖γ(s) − s‖ ≤ tol` on the volume. Identical shifted terms are
/// cancelled before any norm is taken.
pub fn is_gamma_invariant(s: &OperatorSum, volume: Volume, tol: f64, opts: &NormOptions) -> Result<bool> {
    let diff = gamma_pow_sum(s, volume, 1)?.sub(s)?.simplify();
    if diff.is_empty() {
        return Ok(true);
    }
    Ok(norm(&diff, volume, opts)?.value <= tol)
}
