//! Finite-schedule estimators for limits along growing volumes.
//!
//! Every estimator produces a [`DecayReport`]: the measured trace, a log-log
//! least-squares fit over the tail half of the schedule, and a classification
//! with explicit cutoffs. The full trace is always kept so callers can judge
//! stabilization themselves.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::local::{norm, LocalOperator, NormOptions, OperatorSum, Volume};
use crate::matrix::{pauli, kron, Pauli};
use crate::sequence::{seq_norm_at, ObservableSequence, TracePoint, VolumeSchedule};
use crate::shift::GammaSequenceSpec;

/// Slack allowed between a measured commutator and its analytic bound.
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Vanishing,
    BoundedNonvanishing,
    Unconverged,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Vanishing => "vanishing",
            Classification::BoundedNonvanishing => "bounded_nonvanishing",
            Classification::Unconverged => "unconverged",
        }
    }
}

/// Cutoffs used to classify a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Vanishing when the fitted exponent is at most `-vanish_exponent`.
    pub vanish_exponent: f64,
    /// Vanishing when every tail value is below this floor.
    pub zero_floor: f64,
    /// Bounded-nonvanishing needs every tail value above this floor...
    pub nonvanishing_floor: f64,
    /// ...and a fitted exponent smaller than this in magnitude.
    pub flat_exponent: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { vanish_exponent: 0.5, zero_floor: 1e-9, nonvanishing_floor: 1e-6, flat_exponent: 0.1 }
    }
}

/// Least-squares fit of `log value = exponent · log N + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub exponent: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub points: usize,
}

/// Fits a power law; needs at least three points with positive values.
pub fn fit_power_law(points: &[(usize, f64)]) -> Option<PowerFit> {
    if points.len() < 3 || points.iter().any(|&(n, v)| n == 0 || !(v.is_finite() && v > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|&(n, _)| Float::ln(n as f64)).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, v)| Float::ln(v)).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x) * (y - intercept - slope * x)).sum();
    Some(PowerFit { exponent: slope, residual: Float::sqrt(ss / k), points: points.len() })
}

/// Measured values against an analytic upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub pairs: Vec<(usize, f64)>,
    /// Volumes where the measured value exceeds the bound by more than [`BOUND_SLACK`].
    pub violations: Vec<usize>,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub points: Vec<TracePoint>,
    pub fit: Option<PowerFit>,
    pub classification: Classification,
    pub bound: Option<BoundCheck>,
}

impl DecayReport {
    /// Sorts the points by volume, fits and classifies.
    ///
    /// The tail is the last half of the schedule (at least one point). The
    /// fit uses the tail when it has three or more points and the whole
    /// schedule otherwise.
    pub fn from_points(mut points: Vec<TracePoint>, th: &Thresholds) -> Self {
        points.sort_by_key(|p| p.n);
        let tail_len = (points.len() / 2).max(1).min(points.len());
        let tail = &points[points.len() - tail_len..];
        let window = if tail.len() >= 3 { tail } else { &points[..] };
        let fit = fit_power_law(&window.iter().map(|p| (p.n, p.value)).collect::<Vec<_>>());

        let all_converged = !points.is_empty() && points.iter().all(|p| p.converged);
        let classification = if !all_converged {
            Classification::Unconverged
        } else if tail.iter().all(|p| p.value.abs() < th.zero_floor) {
            Classification::Vanishing
        } else {
            match fit {
                Some(f) if f.exponent <= -th.vanish_exponent => Classification::Vanishing,
                Some(f)
                    if f.exponent.abs() < th.flat_exponent
                        && tail.iter().all(|p| p.value > th.nonvanishing_floor) =>
                {
                    Classification::BoundedNonvanishing
                }
                _ => Classification::Unconverged,
            }
        };
        Self { points, fit, classification, bound: None }
    }

    pub fn tail(&self) -> &[TracePoint] {
        let k = (self.points.len() / 2).max(1).min(self.points.len());
        &self.points[self.points.len() - k..]
    }

    /// Largest tail value: the finite stand-in for `limsup`.
    pub fn tail_max(&self) -> f64 {
        self.tail().iter().map(|p| p.value).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

fn volume(n: usize) -> Result<Volume> {
    Volume::new(n)
}

/// `limsup ‖a_N‖` estimated as the maximum over the tail half of the schedule.
pub fn quotient_norm_estimate(
    seq: &ObservableSequence,
    schedule: &VolumeSchedule,
    opts: &NormOptions,
) -> (f64, DecayReport) {
    let points = schedule.points().iter().map(|&n| seq_norm_at(seq, n, opts)).collect();
    let report = DecayReport::from_points(points, &Thresholds::default());
    (report.tail_max(), report)
}

/// `‖a_N − b_N‖` with identical terms cancelled first.
pub fn difference_norm_at(a: &ObservableSequence, b: &ObservableSequence, n: usize, opts: &NormOptions) -> TracePoint {
    let result = volume(n).and_then(|v| {
        let diff = a.eval(n)?.sub(&b.eval(n)?)?.simplify();
        norm(&diff, v, opts)
    });
    TracePoint::from_norm(n, result)
}

/// Tests `lim ‖a_N − b_N‖ = 0`; vanishing iff the fitted exponent is at most
/// `-tol_exponent` or the tail sits below 1e-9.
pub fn equivalence_test(
    a: &ObservableSequence,
    b: &ObservableSequence,
    schedule: &VolumeSchedule,
    tol_exponent: f64,
    opts: &NormOptions,
) -> DecayReport {
    let points = schedule.points().iter().map(|&n| difference_norm_at(a, b, n, opts)).collect();
    let th = Thresholds { vanish_exponent: tol_exponent, ..Thresholds::default() };
    DecayReport::from_points(points, &th)
}

/// Tests `lim ‖a_N‖ = 0`.
pub fn vanishing_test(seq: &ObservableSequence, schedule: &VolumeSchedule, opts: &NormOptions) -> DecayReport {
    let points = schedule.points().iter().map(|&n| seq_norm_at(seq, n, opts)).collect();
    DecayReport::from_points(points, &Thresholds::default())
}

/// `‖[a_N, b]‖` for a fixed local probe.
pub fn commutator_norm_at(seq: &ObservableSequence, probe: &LocalOperator, n: usize, opts: &NormOptions) -> TracePoint {
    let result = volume(n).and_then(|v| {
        let probe_sum = OperatorSum::from(probe.clone());
        probe_sum.check_volume(v)?;
        let c = seq.eval(n)?.commutator(&probe_sum)?.simplify();
        norm(&c, v, opts)
    });
    TracePoint::from_norm(n, result)
}

/// Single-site Paulis at sites 1 and 2 plus `σ¹ ⊗ σ³` on `{1, 2}`.
pub fn default_probes() -> Vec<LocalOperator> {
    let mut probes = Vec::new();
    for site in [1, 2] {
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            probes.push(LocalOperator::on_site(site, pauli(p)).expect("valid Pauli probe"));
        }
    }
    let xz = kron(&pauli(Pauli::X), &pauli(Pauli::Z)).expect("4x4");
    probes.push(LocalOperator::new(2, vec![1, 2], xz).expect("valid two-site probe"));
    probes
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProbeOutcome {
    Tested(DecayReport),
    /// The probe does not fit in the smallest scheduled volume.
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    pub outcomes: Vec<ProbeOutcome>,
}

impl MembershipReport {
    /// True when at least one probe was tested and every tested probe's
    /// commutator trace vanishes. This is a finite, one-sided check.
    pub fn passes(&self) -> bool {
        let mut tested = self.outcomes.iter().filter_map(|o| match o {
            ProbeOutcome::Tested(r) => Some(r),
            ProbeOutcome::Skipped(_) => None,
        });
        let mut any = false;
        let all = tested.all(|r| {
            any = true;
            r.classification == Classification::Vanishing
        });
        any && all
    }
}

/// Whether `probe` can be tested on this schedule.
pub fn probe_fits(probe: &LocalOperator, schedule: &VolumeSchedule) -> core::result::Result<(), String> {
    let min_n = schedule.points()[0];
    match probe.max_site() {
        Some(m) if m > min_n => Err(format!("probe support reaches site {m} beyond the smallest volume {min_n}")),
        _ => Ok(()),
    }
}

/// Commutator traces of `seq` against each fixed local probe.
pub fn commutant_membership(
    seq: &ObservableSequence,
    probes: &[LocalOperator],
    schedule: &VolumeSchedule,
    opts: &NormOptions,
) -> MembershipReport {
    let outcomes = probes
        .iter()
        .map(|probe| match probe_fits(probe, schedule) {
            Err(reason) => ProbeOutcome::Skipped(reason),
            Ok(()) => {
                let points = schedule.points().iter().map(|&n| commutator_norm_at(seq, probe, n, opts)).collect();
                ProbeOutcome::Tested(DecayReport::from_points(points, &Thresholds::default()))
            }
        })
        .collect();
    MembershipReport { outcomes }
}

/// `2 (|Λ₀| + |Λ′|) ‖seed‖ ‖probe‖ / N`, with `|Λ₀|`, `|Λ′|` the spans of
/// the seed and probe supports.
pub fn gamma_commutator_bound(spec: &GammaSequenceSpec, probe: &LocalOperator, n: usize) -> Result<f64> {
    let spans = (spec.base_support_size() + probe.span()) as f64;
    Ok(2.0 * spans * spec.seed().norm()? * probe.norm()? / n as f64)
}

/// Attaches a bound check: value ≤ bound + [`BOUND_SLACK`] at every point.
pub fn check_bound(report: &mut DecayReport, bounds: Vec<(usize, f64)>) {
    let violations = report
        .points
        .iter()
        .zip(&bounds)
        .filter(|(p, (_, b))| p.value.is_nan() || p.value > b + BOUND_SLACK)
        .map(|(p, _)| p.n)
        .collect();
    report.bound = Some(BoundCheck { pairs: bounds, violations });
}

/// Measured `‖[γ̄-sequence(N), probe]‖` against the explicit `O(1/N)` bound.
pub fn gamma_bound_check(
    spec: &GammaSequenceSpec,
    probe: &LocalOperator,
    schedule: &VolumeSchedule,
    opts: &NormOptions,
) -> Result<DecayReport> {
    let seq = ObservableSequence::Gamma(spec.clone());
    let points = schedule.points().iter().map(|&n| commutator_norm_at(&seq, probe, n, opts)).collect();
    let mut report = DecayReport::from_points(points, &Thresholds::default());
    let bounds = schedule
        .points()
        .iter()
        .map(|&n| Ok((n, gamma_commutator_bound(spec, probe, n)?)))
        .collect::<Result<Vec<_>>>()?;
    check_bound(&mut report, bounds);
    Ok(report)
}

/// `‖[a_N, c_N]‖` at one volume.
pub fn mutual_commutator_at(a: &ObservableSequence, c: &ObservableSequence, n: usize, opts: &NormOptions) -> TracePoint {
    let result = volume(n).and_then(|v| norm(&a.eval(n)?.commutator(&c.eval(n)?)?.simplify(), v, opts));
    TracePoint::from_norm(n, result)
}

pub fn mutual_commutator_trace(
    a: &ObservableSequence,
    c: &ObservableSequence,
    schedule: &VolumeSchedule,
    opts: &NormOptions,
) -> DecayReport {
    let points = schedule.points().iter().map(|&n| mutual_commutator_at(a, c, n, opts)).collect();
    DecayReport::from_points(points, &Thresholds::default())
}

/// For two translated-to-infinity sequences sharing a site rule, the
/// mutual commutator trace is the constant `‖[a, c]‖` of the single-site
/// seeds; `None` for any other pair.
pub fn translated_pair_constant(a: &ObservableSequence, c: &ObservableSequence) -> Result<Option<f64>> {
    match (a, c) {
        (
            ObservableSequence::TranslatedToInfinity { seed: sa, site_rule: ra },
            ObservableSequence::TranslatedToInfinity { seed: sc, site_rule: rc },
        ) if ra == rc => {
            if sa.rows() != sc.rows() {
                return Err(Error::SiteDimMismatch { left: sa.rows(), right: sc.rows() });
            }
            Ok(Some(crate::matrix::operator_norm_dense(&sa.commutator(sc), usize::MAX)?))
        }
        _ => Ok(None),
    }
}

/// Scales a sequence by `1/N`, the canonical vanishing perturbation.
pub fn per_volume(seq: ObservableSequence) -> ObservableSequence {
    seq.scale(crate::sequence::ScaleFactor::PerVolume(Complex64::new(1.0, 0.0)))
}
