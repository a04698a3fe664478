//! Classical lattice: one torus `T²` per site with coordinates `(q_x, p_x)`
//! and `{q_x, p_x} = 1`. Observables are finite Fourier series
//!
//! `f(q, p) = Σ_k c(k) Π_x exp(i (m_x q_x + n_x p_x))`
//!
//! and every operation below is exact arithmetic on the coefficients.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::asymptotics::{DecayReport, Thresholds};
use crate::error::{Error, Result};
use crate::sequence::{TracePoint, VolumeSchedule};

/// Most sites a sup-norm grid may range over.
pub const GRID_SITE_CAP: usize = 3;
pub const DEFAULT_GRID_POINTS: usize = 64;

/// One site's frequency pair `(m, n)`; never `(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mode {
    pub site: usize,
    pub m: i64,
    pub n: i64,
}

/// Sparse frequency vector: modes sorted by site, one per site.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frequency(Vec<Mode>);

impl Frequency {
    /// Builds a frequency from `(site, m, n)` triples; repeated sites add up.
    pub fn new(modes: impl IntoIterator<Item = (usize, i64, i64)>) -> Result<Self> {
        let mut by_site: BTreeMap<usize, (i64, i64)> = BTreeMap::new();
        for (site, m, n) in modes {
            if site == 0 {
                return Err(Error::InvalidSupport("sites are numbered from 1".into()));
            }
            let e = by_site.entry(site).or_insert((0, 0));
            e.0 += m;
            e.1 += n;
        }
        Ok(Self::from_map(by_site))
    }

    fn from_map(map: BTreeMap<usize, (i64, i64)>) -> Self {
        Frequency(
            map.into_iter()
                .filter(|&(_, (m, n))| (m, n) != (0, 0))
                .map(|(site, (m, n))| Mode { site, m, n })
                .collect(),
        )
    }

    pub fn modes(&self) -> &[Mode] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn negated(&self) -> Self {
        Frequency(self.0.iter().map(|md| Mode { m: -md.m, n: -md.n, ..*md }).collect())
    }

    fn plus(&self, other: &Self) -> Self {
        let mut map: BTreeMap<usize, (i64, i64)> = self.0.iter().map(|md| (md.site, (md.m, md.n))).collect();
        for md in &other.0 {
            let e = map.entry(md.site).or_insert((0, 0));
            e.0 += md.m;
            e.1 += md.n;
        }
        Self::from_map(map)
    }

    /// `Σ_x (m_x n'_x − n_x m'_x)` over common sites.
    fn symplectic(&self, other: &Self) -> i64 {
        let (mut i, mut j, mut acc) = (0, 0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, b) = (self.0[i], other.0[j]);
            match a.site.cmp(&b.site) {
                core::cmp::Ordering::Less => i += 1,
                core::cmp::Ordering::Greater => j += 1,
                core::cmp::Ordering::Equal => {
                    acc += a.m * b.n - a.n * b.m;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Relabels sites through an injective map.
    fn relabel(&self, f: &impl Fn(usize) -> usize) -> Self {
        let mut modes: Vec<Mode> = self.0.iter().map(|md| Mode { site: f(md.site), ..*md }).collect();
        modes.sort();
        Frequency(modes)
    }
}

/// Trigonometric polynomial on a finite product of tori.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrigObservable {
    coeffs: BTreeMap<Frequency, Complex64>,
}

impl TrigObservable {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        let mut f = Self::zero();
        f.add_term(Frequency::default(), c);
        f
    }

    /// `amp · exp(i (m q_site + n p_site))`.
    pub fn mode(site: usize, m: i64, n: i64, amp: Complex64) -> Result<Self> {
        let mut f = Self::zero();
        f.add_term(Frequency::new([(site, m, n)])?, amp);
        Ok(f)
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Frequency, Complex64)>) -> Self {
        let mut f = Self::zero();
        for (k, c) in terms {
            f.add_term(k, c);
        }
        f
    }

    fn half_pair(site: usize, m: i64, n: i64, plus: Complex64, minus: Complex64) -> Result<Self> {
        Ok(Self::mode(site, m, n, plus)?.add(&Self::mode(site, -m, -n, minus)?))
    }

    pub fn cos_q(site: usize) -> Result<Self> {
        Self::half_pair(site, 1, 0, Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0))
    }

    pub fn sin_q(site: usize) -> Result<Self> {
        Self::half_pair(site, 1, 0, Complex64::new(0.0, -0.5), Complex64::new(0.0, 0.5))
    }

    pub fn cos_p(site: usize) -> Result<Self> {
        Self::half_pair(site, 0, 1, Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0))
    }

    pub fn sin_p(site: usize) -> Result<Self> {
        Self::half_pair(site, 0, 1, Complex64::new(0.0, -0.5), Complex64::new(0.0, 0.5))
    }

    fn add_term(&mut self, k: Frequency, c: Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        if c == zero {
            return;
        }
        match self.coeffs.get_mut(&k) {
            Some(slot) => {
                *slot += c;
                if *slot == zero {
                    self.coeffs.remove(&k);
                }
            }
            None => {
                self.coeffs.insert(k, c);
            }
        }
    }

    pub fn coefficients(&self) -> &BTreeMap<Frequency, Complex64> {
        &self.coeffs
    }

    pub fn coefficient(&self, k: &Frequency) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.coeffs {
            out.add_term(k.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self::from_terms(self.coeffs.iter().map(|(k, c)| (k.clone(), c * s)))
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (k, c) in &self.coeffs {
            for (k2, c2) in &other.coeffs {
                out.add_term(k.plus(k2), c * c2);
            }
        }
        out
    }

    /// Complex conjugate function.
    pub fn conj(&self) -> Self {
        Self::from_terms(self.coeffs.iter().map(|(k, c)| (k.negated(), c.conj())))
    }

    /// Whether `c(−k) = conj(c(k))` for all `k` within `tol`.
    pub fn is_real_valued(&self, tol: f64) -> bool {
        self.sub(&self.conj()).l1_norm() <= tol
    }

    /// Relabels sites through an injective map.
    pub fn translate(&self, f: impl Fn(usize) -> usize) -> Self {
        Self::from_terms(self.coeffs.iter().map(|(k, c)| (k.relabel(&f), *c)))
    }

    /// Sites carrying a nonzero frequency.
    pub fn support(&self) -> BTreeSet<usize> {
        self.coeffs.keys().flat_map(|k| k.0.iter().map(|md| md.site)).collect()
    }

    pub fn min_site(&self) -> Option<usize> {
        self.support().into_iter().next()
    }

    pub fn max_site(&self) -> Option<usize> {
        self.support().into_iter().next_back()
    }

    /// `Σ |c(k)|`, an upper bound on the sup norm.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// Evaluates at the point whose site-`x` coordinates are `coords(x)`.
    pub fn eval_at(&self, coords: impl Fn(usize) -> (f64, f64)) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(k, c)| {
                let phase: f64 = k.0.iter().map(|md| {
                    let (q, p) = coords(md.site);
                    md.m as f64 * q + md.n as f64 * p
                }).sum();
                c * Complex64::new(0.0, phase).exp()
            })
            .sum()
    }
}

/// Canonical bracket `Σ_x (∂_{q_x} f ∂_{p_x} g − ∂_{p_x} f ∂_{q_x} g)`.
pub fn poisson_bracket(f: &TrigObservable, g: &TrigObservable) -> TrigObservable {
    let mut out = TrigObservable::zero();
    for (k, c) in &f.coeffs {
        for (k2, c2) in &g.coeffs {
            let w = k.symplectic(k2);
            if w != 0 {
                out.add_term(k.plus(k2), c * c2 * -(w as f64));
            }
        }
    }
    out
}

/// `(grid lower bound, ℓ¹ upper bound)` on `sup |f|`.
///
/// The lower bound is the maximum over a uniform grid with `grid_points`
/// values per active angle; only angles carrying a nonzero frequency are
/// sampled.
pub fn sup_norm_bounds(f: &TrigObservable, grid_points: usize) -> Result<(f64, f64)> {
    if grid_points < 8 {
        return Err(Error::Contract(format!("grid needs at least 8 points per angle, got {grid_points}")));
    }
    let sites = f.support();
    if sites.len() > GRID_SITE_CAP {
        return Err(Error::GridTooLarge { support: sites.len(), cap: GRID_SITE_CAP });
    }
    // active coordinates as (site, is_p)
    let coords: Vec<(usize, bool)> = {
        let mut set = BTreeSet::new();
        for k in f.coeffs.keys() {
            for md in &k.0 {
                if md.m != 0 {
                    set.insert((md.site, false));
                }
                if md.n != 0 {
                    set.insert((md.site, true));
                }
            }
        }
        set.into_iter().collect()
    };
    let g = grid_points as i64;
    let table: Vec<Complex64> =
        (0..grid_points).map(|t| Complex64::new(0.0, 2.0 * PI * t as f64 / grid_points as f64).exp()).collect();
    let terms: Vec<(Vec<i64>, Complex64)> = f
        .coeffs
        .iter()
        .map(|(k, c)| {
            let weights = coords
                .iter()
                .map(|&(site, is_p)| {
                    k.0.iter().find(|md| md.site == site).map_or(0, |md| if is_p { md.n } else { md.m })
                })
                .collect();
            (weights, *c)
        })
        .collect();

    let mut idx = vec![0usize; coords.len()];
    let mut lower: f64 = 0.0;
    loop {
        let value: Complex64 = terms
            .iter()
            .map(|(w, c)| {
                let t: i64 = w.iter().zip(&idx).map(|(wi, &ii)| wi * ii as i64).sum();
                c * table[t.rem_euclid(g) as usize]
            })
            .sum();
        lower = lower.max(value.norm());
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return Ok((lower, f.l1_norm()));
            }
            idx[pos] += 1;
            if idx[pos] < grid_points {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

fn shift_site(x: usize, n: usize, j: usize) -> usize {
    (x as i64 - 1 - j as i64).rem_euclid(n as i64) as usize + 1
}

/// `(1/N) Σ_j` of the cyclic translates of `f` on `{1, …, N}`.
pub fn cyclic_average_eval(f: &TrigObservable, n: usize) -> Result<TrigObservable> {
    if n == 0 {
        return Err(Error::EmptyVolume);
    }
    if let Some(site) = f.max_site().filter(|&s| s > n) {
        return Err(Error::OutsideVolume { site, volume: n });
    }
    let w = Complex64::new(1.0 / n as f64, 0.0);
    let mut out = TrigObservable::zero();
    for j in 0..n {
        out = out.add(&f.translate(|x| shift_site(x, n, j)).scaled(w));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassicalSequence {
    /// `f` at every volume that contains its support, zero before.
    LocalEmbed(TrigObservable),
    CyclicAverage(TrigObservable),
    /// `f` translated by `N + 1 + gap − min support`, so it sits beyond site `N + gap`.
    TailShifted { f: TrigObservable, gap: usize },
}

impl ClassicalSequence {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ClassicalSequence::LocalEmbed(_) => "local",
            ClassicalSequence::CyclicAverage(_) => "cyclic_average",
            ClassicalSequence::TailShifted { .. } => "tail",
        }
    }

    pub fn eval(&self, n: usize) -> Result<TrigObservable> {
        match self {
            ClassicalSequence::LocalEmbed(f) => {
                Ok(if f.max_site().is_some_and(|s| s > n) { TrigObservable::zero() } else { f.clone() })
            }
            ClassicalSequence::CyclicAverage(f) => {
                if f.max_site().is_some_and(|s| s > n) {
                    Ok(TrigObservable::zero())
                } else {
                    cyclic_average_eval(f, n)
                }
            }
            ClassicalSequence::TailShifted { f, gap } => match f.min_site() {
                None => Ok(f.clone()),
                Some(lo) => {
                    let shift = n + 1 + gap - lo;
                    Ok(f.translate(|x| x + shift))
                }
            },
        }
    }
}

/// Sequence of translates of `f` whose supports lie beyond site `N + gap`.
pub fn tail_sequence(f: TrigObservable, gap: usize) -> ClassicalSequence {
    ClassicalSequence::TailShifted { f, gap }
}

/// ℓ¹ norm of `{seq(N), probe}`.
pub fn bracket_norm_at(seq: &ClassicalSequence, probe: &TrigObservable, n: usize) -> TracePoint {
    match seq.eval(n) {
        Ok(f) => TracePoint::exact(n, poisson_bracket(&f, probe).l1_norm()),
        Err(e) => TracePoint::failed(n, e),
    }
}

/// Trace of upper sup-norm bounds of `{seq(N), probe}`.
pub fn bracket_decay_test(seq: &ClassicalSequence, probe: &TrigObservable, schedule: &VolumeSchedule) -> DecayReport {
    let points = schedule.points().iter().map(|&n| bracket_norm_at(seq, probe, n)).collect();
    DecayReport::from_points(points, &Thresholds::default())
}
