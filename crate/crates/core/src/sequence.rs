//! Volume-indexed observable sequences `N ↦ a_N ∈ B_{1..N}`.
//!
//! A sequence is an evaluation rule, not a stored array: [`ObservableSequence::eval`]
//! produces the operator sum at one volume and the schedule decides which
//! volumes are visited.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::local::{norm, LocalOperator, NormOptions, OperatorSum, Volume};
use crate::matrix::{operator_norm_dense, ComplexMatrix, DEFAULT_DENSE_CAP};
use crate::shift::{eval_gamma_sequence, GammaSequenceSpec};

/// Where a translated single-site observable sits at volume N.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteRule {
    /// `x_N = max(1, N − k)`; `FromRight(0)` is the rightmost site.
    FromRight(usize),
    /// `x_N = ⌈N/2⌉`.
    Middle,
}

impl Default for SiteRule {
    fn default() -> Self {
        SiteRule::FromRight(0)
    }
}

impl SiteRule {
    pub fn site(self, n: usize) -> usize {
        match self {
            SiteRule::FromRight(k) => n.saturating_sub(k).max(1),
            SiteRule::Middle => n.div_ceil(2),
        }
    }
}

/// Consecutive blocks of lengths `B_n = slope·n + offset`, n = 0, 1, 2, …
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPartition {
    slope: usize,
    offset: usize,
}

impl Default for BlockPartition {
    fn default() -> Self {
        Self { slope: 1, offset: 1 }
    }
}

impl BlockPartition {
    /// Block lengths must be positive and strictly increasing.
    pub fn new(slope: usize, offset: usize) -> Result<Self> {
        if slope == 0 {
            return Err(Error::Contract("block lengths must be strictly increasing".into()));
        }
        if offset == 0 {
            return Err(Error::Contract("block lengths must be positive".into()));
        }
        Ok(Self { slope, offset })
    }

    pub fn length(&self, block: usize) -> usize {
        self.slope * block + self.offset
    }

    /// First site of block n: `1 + Σ_{k<n} B_k`.
    pub fn first_site(&self, block: usize) -> usize {
        1 + (0..block).map(|k| self.length(k)).sum::<usize>()
    }

    /// Index of the block containing `site` (sites start at 1).
    pub fn block_of(&self, site: usize) -> usize {
        assert!(site >= 1, "sites start at 1");
        let mut block = 0;
        let mut end = self.length(0);
        while site > end {
            block += 1;
            end += self.length(block);
        }
        block
    }

    pub fn is_even_block(&self, site: usize) -> bool {
        self.block_of(site).is_multiple_of(2)
    }
}

/// Per-volume scalar used by [`ObservableSequence::Scale`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleFactor {
    Constant(Complex64),
    /// `c / N`.
    PerVolume(Complex64),
}

impl ScaleFactor {
    pub fn at(self, n: usize) -> Complex64 {
        match self {
            ScaleFactor::Constant(c) => c,
            ScaleFactor::PerVolume(c) => c / n as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObservableSequence {
    /// A fixed local operator, zero until the volume contains its support.
    LocalEmbed(LocalOperator),
    /// A single-site observable placed at `site_rule(N)`.
    TranslatedToInfinity { seed: ComplexMatrix, site_rule: SiteRule },
    Gamma(GammaSequenceSpec),
    /// `⊗_{x ≤ N} op`.
    UniformProduct(ComplexMatrix),
    /// `odd` on odd sites (site 1 is odd), `even` on even sites.
    ParityProduct { odd: ComplexMatrix, even: ComplexMatrix },
    /// `even` on sites of even-indexed blocks, `odd` on odd-indexed blocks.
    BlockProduct { partition: BlockPartition, even: ComplexMatrix, odd: ComplexMatrix },
    /// `1^{⊗(N−⌊N/2⌋)} ⊗ op^{⊗⌊N/2⌋}`.
    HalfChain(ComplexMatrix),
    Sum(Box<ObservableSequence>, Box<ObservableSequence>),
    Product(Box<ObservableSequence>, Box<ObservableSequence>),
    Adjoint(Box<ObservableSequence>),
    Scale(ScaleFactor, Box<ObservableSequence>),
}

fn square_dim(m: &ComplexMatrix) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    Ok(m.rows())
}

fn same_dim(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<usize> {
    let (da, db) = (square_dim(a)?, square_dim(b)?);
    if da != db {
        return Err(Error::SiteDimMismatch { left: da, right: db });
    }
    Ok(da)
}

impl ObservableSequence {
    pub fn local(op: LocalOperator) -> Self {
        Self::LocalEmbed(op)
    }

    pub fn translated(seed: ComplexMatrix, site_rule: SiteRule) -> Result<Self> {
        square_dim(&seed)?;
        Ok(Self::TranslatedToInfinity { seed, site_rule })
    }

    pub fn gamma(seed: LocalOperator) -> Result<Self> {
        Ok(Self::Gamma(GammaSequenceSpec::new(seed)?))
    }

    pub fn uniform(op: ComplexMatrix) -> Result<Self> {
        square_dim(&op)?;
        Ok(Self::UniformProduct(op))
    }

    pub fn parity(odd: ComplexMatrix, even: ComplexMatrix) -> Result<Self> {
        same_dim(&odd, &even)?;
        Ok(Self::ParityProduct { odd, even })
    }

    pub fn blocks(partition: BlockPartition, even: ComplexMatrix, odd: ComplexMatrix) -> Result<Self> {
        same_dim(&even, &odd)?;
        Ok(Self::BlockProduct { partition, even, odd })
    }

    /// Requires `‖op‖ ≤ 1` so that the sequence stays bounded.
    pub fn half_chain(op: ComplexMatrix) -> Result<Self> {
        square_dim(&op)?;
        let n = operator_norm_dense(&op, DEFAULT_DENSE_CAP)?;
        if n > 1.0 + 1e-12 {
            return Err(Error::Contract(format!("half-chain site operator has norm {n} > 1")));
        }
        Ok(Self::HalfChain(op))
    }

    pub fn sum(self, other: Self) -> Result<Self> {
        self.check_pair(&other)?;
        Ok(Self::Sum(Box::new(self), Box::new(other)))
    }

    pub fn product(self, other: Self) -> Result<Self> {
        self.check_pair(&other)?;
        Ok(Self::Product(Box::new(self), Box::new(other)))
    }

    pub fn adjoint(self) -> Self {
        Self::Adjoint(Box::new(self))
    }

    pub fn scale(self, factor: ScaleFactor) -> Self {
        Self::Scale(factor, Box::new(self))
    }

    fn check_pair(&self, other: &Self) -> Result<()> {
        let (l, r) = (self.site_dim(), other.site_dim());
        if l != r {
            return Err(Error::SiteDimMismatch { left: l, right: r });
        }
        Ok(())
    }

    pub fn site_dim(&self) -> usize {
        match self {
            Self::LocalEmbed(op) => op.site_dim(),
            Self::Gamma(spec) => spec.seed().site_dim(),
            Self::TranslatedToInfinity { seed: m, .. }
            | Self::UniformProduct(m)
            | Self::ParityProduct { odd: m, .. }
            | Self::BlockProduct { even: m, .. }
            | Self::HalfChain(m) => m.rows(),
            Self::Sum(a, _) | Self::Product(a, _) | Self::Adjoint(a) | Self::Scale(_, a) => a.site_dim(),
        }
    }

    /// Short tag naming the constructor.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::LocalEmbed(_) => "local",
            Self::TranslatedToInfinity { .. } => "translated",
            Self::Gamma(_) => "gamma",
            Self::UniformProduct(_) => "uniform",
            Self::ParityProduct { .. } => "parity",
            Self::BlockProduct { .. } => "block",
            Self::HalfChain(_) => "half_chain",
            Self::Sum(..) => "sum",
            Self::Product(..) => "product",
            Self::Adjoint(_) => "adjoint",
            Self::Scale(..) => "scale",
        }
    }

    /// The operator sum at volume `n`.
    pub fn eval(&self, n: usize) -> Result<OperatorSum> {
        let volume = Volume::new(n)?;
        let d = self.site_dim();
        let product = |site_op: &dyn Fn(usize) -> ComplexMatrix| -> Result<OperatorSum> {
            Ok(LocalOperator::site_product(d, (1..=n).map(|x| (x, site_op(x))))?.into())
        };
        match self {
            Self::LocalEmbed(op) => {
                if op.max_site().is_some_and(|m| m > n) {
                    Ok(OperatorSum::zero(d))
                } else {
                    Ok(op.clone().into())
                }
            }
            Self::TranslatedToInfinity { seed, site_rule } => {
                let site = site_rule.site(n);
                if !volume.contains(site) {
                    return Err(Error::Contract(format!("site rule placed the seed at {site} outside 1..{n}")));
                }
                Ok(LocalOperator::new(d, alloc::vec![site], seed.clone())?.into())
            }
            Self::Gamma(spec) => eval_gamma_sequence(spec, volume),
            Self::UniformProduct(op) => product(&|_| op.clone()),
            Self::ParityProduct { odd, even } => product(&|x| if x % 2 == 1 { odd.clone() } else { even.clone() }),
            Self::BlockProduct { partition, even, odd } => {
                product(&|x| if partition.is_even_block(x) { even.clone() } else { odd.clone() })
            }
            Self::HalfChain(op) => {
                let first = n - n / 2 + 1;
                Ok(LocalOperator::site_product(d, (first..=n).map(|x| (x, op.clone())))?.into())
            }
            Self::Sum(a, b) => a.eval(n)?.add(&b.eval(n)?),
            Self::Product(a, b) => a.eval(n)?.product(&b.eval(n)?),
            Self::Adjoint(a) => Ok(a.eval(n)?.adjoint()),
            Self::Scale(f, a) => Ok(a.eval(n)?.scaled(f.at(n))),
        }
    }
}

/// A strictly increasing list of volumes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VolumeSchedule(Vec<usize>);

impl VolumeSchedule {
    pub fn new(points: Vec<usize>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidSchedule("schedule is empty".into()));
        }
        if points[0] == 0 {
            return Err(Error::InvalidSchedule("volumes must be positive".into()));
        }
        if let Some(w) = points.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSchedule(format!("not strictly increasing at {} -> {}", w[0], w[1])));
        }
        Ok(Self(points))
    }

    /// `from, from+step, …` up to and including `to`.
    pub fn range(from: usize, to: usize, step: usize) -> Result<Self> {
        if step == 0 {
            return Err(Error::InvalidSchedule("step must be positive".into()));
        }
        Self::new((from..=to).step_by(step).collect())
    }

    pub fn points(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One measured value along a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub n: usize,
    /// Value, best estimate when unconverged, NaN when evaluation failed.
    pub value: f64,
    pub converged: bool,
    pub error: Option<Error>,
}

impl TracePoint {
    pub fn exact(n: usize, value: f64) -> Self {
        Self { n, value, converged: true, error: None }
    }

    pub fn failed(n: usize, error: Error) -> Self {
        Self { n, value: f64::NAN, converged: false, error: Some(error) }
    }

    /// Wraps a norm computation; failures become unconverged points.
    pub fn from_norm(n: usize, result: Result<crate::local::NormOutcome>) -> Self {
        match result {
            Ok(out) => Self { n, value: out.value, converged: out.converged, error: None },
            Err(e) => Self::failed(n, e),
        }
    }
}

/// `‖a_N‖` at one volume.
pub fn seq_norm_at(seq: &ObservableSequence, n: usize, opts: &NormOptions) -> TracePoint {
    let result = Volume::new(n).and_then(|v| norm(&seq.eval(n)?, v, opts));
    TracePoint::from_norm(n, result)
}

/// `‖a_N‖` along the schedule.
pub fn seq_norm_trace(seq: &ObservableSequence, schedule: &VolumeSchedule, opts: &NormOptions) -> Vec<TracePoint> {
    schedule.points().iter().map(|&n| seq_norm_at(seq, n, opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{pauli, Pauli};
    use crate::local::NormMethod;
    use alloc::vec;

    fn x() -> ComplexMatrix {
        pauli(Pauli::X)
    }
    fn z() -> ComplexMatrix {
        pauli(Pauli::Z)
    }

    #[test]
    fn half_chain_matches_displayed_list() {
        let seq = ObservableSequence::half_chain(z()).unwrap();
        let expected_supports: [&[usize]; 8] =
            [&[], &[2], &[3], &[3, 4], &[4, 5], &[4, 5, 6], &[5, 6, 7], &[5, 6, 7, 8]];
        for (n, sup) in (1..=8).zip(expected_supports) {
            let s = seq.eval(n).unwrap();
            assert_eq!(s.len(), 1);
            assert_eq!(s.support(), sup.to_vec(), "N = {n}");
            assert!(s.terms()[0].1.factors().iter().all(|f| f.matrix() == &z()));
        }
        assert!(ObservableSequence::half_chain(x().scale(Complex64::new(2.0, 0.0))).is_err());
    }

    #[test]
    fn translated_and_products() {
        let t = ObservableSequence::translated(x(), SiteRule::default()).unwrap();
        assert_eq!(t.eval(6).unwrap().support(), vec![6]);
        let t1 = ObservableSequence::translated(x(), SiteRule::FromRight(1)).unwrap();
        assert_eq!(t1.eval(1).unwrap().support(), vec![1]);
        assert_eq!(t1.eval(5).unwrap().support(), vec![4]);

        let u = ObservableSequence::uniform(x()).unwrap();
        let sq = u.clone().product(u).unwrap();
        let dense = sq.eval(5).unwrap().dense(Volume::new(5).unwrap(), 64).unwrap();
        assert_eq!(dense, ComplexMatrix::identity(32));
    }

    #[test]
    fn block_partition_table() {
        let p = BlockPartition::default();
        let blocks: Vec<usize> = (1..=10).map(|s| p.block_of(s)).collect();
        assert_eq!(blocks, vec![0, 1, 1, 2, 2, 2, 3, 3, 3, 3]);
        assert!(p.is_even_block(6));
        assert!(!p.is_even_block(2));
        for n in 0..6 {
            assert_eq!(p.first_site(n), 1 + (0..n).map(|k| k + 1).sum::<usize>());
            assert_eq!(p.block_of(p.first_site(n)), n);
        }
        assert!(BlockPartition::new(0, 3).is_err());
        assert!(BlockPartition::new(1, 0).is_err());
    }

    #[test]
    fn parity_and_block_site_assignment() {
        let par = ObservableSequence::parity(x(), z()).unwrap().eval(4).unwrap();
        let mats: Vec<_> = par.terms()[0].1.factors().iter().map(|f| f.matrix().clone()).collect();
        assert_eq!(mats, vec![x(), z(), x(), z()]);

        let blk = ObservableSequence::blocks(BlockPartition::default(), x(), z()).unwrap().eval(6).unwrap();
        let mats: Vec<_> = blk.terms()[0].1.factors().iter().map(|f| f.matrix().clone()).collect();
        assert_eq!(mats, vec![x(), z(), z(), x(), x(), x()]);
    }

    #[test]
    fn local_embed_zero_branch() {
        let op = LocalOperator::on_site(3, x()).unwrap();
        let seq = ObservableSequence::local(op);
        assert!(seq.eval(2).unwrap().is_empty());
        assert_eq!(seq.eval(3).unwrap().len(), 1);
    }

    #[test]
    fn norm_traces() {
        let opts = NormOptions::default();
        let sched = VolumeSchedule::range(1, 10, 1).unwrap();
        for p in seq_norm_trace(&ObservableSequence::uniform(x()).unwrap(), &sched, &opts) {
            assert!((p.value - 1.0).abs() < 1e-12);
        }
        let scaled = ObservableSequence::local(LocalOperator::on_site(1, x()).unwrap())
            .scale(ScaleFactor::PerVolume(Complex64::new(1.0, 0.0)));
        for p in seq_norm_trace(&scaled, &sched, &opts) {
            assert!((p.value - 1.0 / p.n as f64).abs() < 1e-15);
        }
        let gamma = ObservableSequence::gamma(LocalOperator::on_site(1, z()).unwrap()).unwrap();
        let dense = opts.with_method(NormMethod::Dense);
        for p in seq_norm_trace(&gamma, &sched, &dense) {
            assert!((p.value - 1.0).abs() < 1e-10, "N={}: {}", p.n, p.value);
        }
    }

    #[test]
    fn trace_marks_failures_instead_of_aborting() {
        let gamma = ObservableSequence::gamma(LocalOperator::on_site(1, z()).unwrap()).unwrap();
        let opts = NormOptions { method: NormMethod::Dense, dense_cap: 16, ..NormOptions::default() };
        let trace = seq_norm_trace(&gamma, &VolumeSchedule::new(vec![2, 4, 6]).unwrap(), &opts);
        assert!(trace[0].converged && trace[1].converged);
        assert!(!trace[2].converged && trace[2].error.is_some());
    }

    #[test]
    fn schedule_validation() {
        assert!(VolumeSchedule::new(vec![4, 4]).is_err());
        assert!(VolumeSchedule::new(vec![]).is_err());
        assert!(VolumeSchedule::new(vec![0, 1]).is_err());
        assert_eq!(VolumeSchedule::range(4, 10, 3).unwrap().points(), &[4, 7, 10]);
    }

    #[test]
    fn pointwise_algebra_matches_dense() {
        let a = ObservableSequence::gamma(LocalOperator::on_site(1, x()).unwrap()).unwrap();
        let b = ObservableSequence::parity(z(), x()).unwrap();
        for n in [3usize, 6] {
            let v = Volume::new(n).unwrap();
            let (da, db) = (a.eval(n).unwrap().dense(v, 64).unwrap(), b.eval(n).unwrap().dense(v, 64).unwrap());
            let sum = a.clone().sum(b.clone()).unwrap().eval(n).unwrap().dense(v, 64).unwrap();
            assert!(sum.max_abs_diff(&(&da + &db)) < 1e-10);
            let prod = a.clone().product(b.clone()).unwrap().eval(n).unwrap().dense(v, 64).unwrap();
            assert!(prod.max_abs_diff(&da.matmul(&db)) < 1e-10);
            let adj = b.clone().adjoint().eval(n).unwrap().dense(v, 64).unwrap();
            assert!(adj.max_abs_diff(&db.adjoint()) < 1e-12);
        }
    }
}
