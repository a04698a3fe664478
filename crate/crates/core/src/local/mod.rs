//! Support-aware local operators on finite chains `{1, …, N}`.
//!
//! Operators are kept factored as a scalar times an elementary tensor of
//! dense blocks on disjoint site sets. Dense matrices are only formed on the
//! union of the supports that actually interact, so commutators with
//! disjoint supports are exact zeros and never allocate.
//!
//! Basis convention: site 1 is the most significant tensor factor, so a basis
//! index on `N` sites is `b = Σ_x digit(x)·d^(N−x)`.

mod apply;
mod norm;
mod operator;
mod sum;

pub use apply::StateVector;
pub use norm::{norm, NormMethod, NormOptions, NormOutcome};
pub use operator::{Factor, LocalOperator};
pub use sum::OperatorSum;

use crate::error::{Error, Result};

/// The interval volume `{1, …, N}` with `N ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Volume(usize);

impl Volume {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::EmptyVolume);
        }
        Ok(Self(size))
    }

    #[inline]
    pub fn size(self) -> usize {
        self.0
    }

    #[inline]
    pub fn contains(self, site: usize) -> bool {
        (1..=self.0).contains(&site)
    }

    pub(crate) fn check_sites(self, sites: &[usize]) -> Result<()> {
        match sites.iter().find(|&&s| !self.contains(s)) {
            Some(&site) => Err(Error::OutsideVolume { site, volume: self.0 }),
            None => Ok(()),
        }
    }
}

/// `base^exp`, or `None` on overflow.
pub(crate) fn checked_dim(base: usize, exp: usize) -> Option<usize> {
    u32::try_from(exp).ok().and_then(|e| base.checked_pow(e))
}
