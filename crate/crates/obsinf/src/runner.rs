//! Executes a validated configuration.
//!
//! Schedule points fan out over a rayon pool; results are collected in
//! schedule order, so the report does not depend on the number of workers.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use obsinf_core::asymptotics::{
    check_bound, commutator_norm_at, difference_norm_at, gamma_commutator_bound,
    mutual_commutator_at, probe_fits, translated_pair_constant, Classification, DecayReport, Thresholds,
};
use obsinf_core::classical::bracket_norm_at;
use obsinf_core::sequence::{seq_norm_at, ObservableSequence, TracePoint};
use obsinf_core::shift::gamma_average;
use obsinf_core::{NormMethod, NormOptions, Volume};

use crate::config::{probe_labels, Body, ExperimentConfig, Expectations};
use crate::report::{Assertion, Meta, Report, Series};

/// Tolerance for the variance law `N · Var = ω(a²) − ω(a)²`.
pub const VARIANCE_TOL: f64 = 1e-9;
/// Tolerance for the mean of an averaged observable.
pub const MEAN_TOL: f64 = 1e-10;
/// Tolerance for the induced-invariance residual.
pub const RESIDUAL_TOL: f64 = 1e-12;
/// Tolerance for the constant mutual commutator of translated pairs.
pub const MUTUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the rayon default.
    pub jobs: Option<usize>,
    /// Record wall time per point (makes output run-dependent).
    pub timings: bool,
}

#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    /// Some point could not be evaluated (its error is recorded inline).
    pub had_point_errors: bool,
}

impl Outcome {
    /// 0 when every assertion passed, 2 on an assertion failure, 1 when a
    /// point failed to evaluate.
    pub fn exit_code(&self) -> i32 {
        if self.had_point_errors {
            1
        } else if self.report.meta.passed {
            0
        } else {
            2
        }
    }
}

fn method_name(m: NormMethod) -> &'static str {
    match m {
        NormMethod::Dense => "dense",
        NormMethod::Iterative => "iterative",
        NormMethod::Auto | NormMethod::Factored => "auto",
    }
}

struct Tracer {
    points: Vec<usize>,
    timings: bool,
}

impl Tracer {
    fn trace(&self, f: impl Fn(usize) -> TracePoint + Sync) -> (Vec<TracePoint>, Vec<Option<f64>>) {
        self.points
            .par_iter()
            .map(|&n| {
                let start = Instant::now();
                let p = f(n);
                (p, self.timings.then(|| start.elapsed().as_secs_f64() * 1e3))
            })
            .unzip()
    }

    fn series(&self, label: &str, th: &Thresholds, f: impl Fn(usize) -> TracePoint + Sync) -> (Series, DecayReport) {
        let (pts, walls) = self.trace(f);
        let report = DecayReport::from_points(pts, th);
        (Series::from_report(label, &report, &walls), report)
    }
}

fn assertion(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Assertion {
    Assertion { name: name.into(), passed, detail: detail.into() }
}

fn classification_assertion(name: &str, r: &DecayReport, want: Classification) -> Assertion {
    let detail = match r.fit {
        Some(f) => format!("{} (exponent {:.4})", r.classification.as_str(), f.exponent),
        None => r.classification.as_str().to_string(),
    };
    assertion(name, r.classification == want, detail)
}

fn max_deviation(r: &DecayReport, target: impl Fn(usize) -> f64) -> f64 {
    r.points.iter().map(|p| (p.value - target(p.n)).abs()).fold(0.0, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
}

fn within(name: &str, dev: f64, tol: f64) -> Assertion {
    assertion(name, dev <= tol, format!("max deviation {dev:e} (tolerance {tol:e})"))
}

/// Runs the experiment; errors only when the worker pool cannot start.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome, String> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| e.to_string())?;
    Ok(pool.install(|| run_in_pool(cfg, opts)))
}

fn run_in_pool(cfg: &ExperimentConfig, opts: &RunOptions) -> Outcome {
    let norm_opts = NormOptions { method: cfg.method, dense_cap: cfg.dense_cap, seed: cfg.seed, ..NormOptions::default() };
    let tracer = Tracer { points: cfg.schedule.points().to_vec(), timings: opts.timings };
    let th = Thresholds::default();
    let mut series = Vec::new();
    let mut assertions = Vec::new();

    match &cfg.body {
        Body::Sequence(seq) => {
            let (mut s, r) = tracer.series("norm", &th, |n| seq_norm_at(seq, n, &norm_opts));
            s.note = Some(format!("limsup estimate {}", r.tail_max()));
            if cfg.kind == crate::config::Kind::Decay {
                assertions.push(classification_assertion("vanishing", &r, Classification::Vanishing));
            }
            series.push(s);
        }
        Body::Pair(a, b) if cfg.kind == crate::config::Kind::Equiv => {
            let th = Thresholds { vanish_exponent: cfg.tol_exponent, ..th };
            let (s, r) = tracer.series("difference", &th, |n| difference_norm_at(a, b, n, &norm_opts));
            assertions.push(classification_assertion("equivalent", &r, Classification::Vanishing));
            series.push(s);
        }
        Body::Pair(a, c) => {
            let (s, r) = tracer.series("mutual", &th, |n| mutual_commutator_at(a, c, n, &norm_opts));
            match translated_pair_constant(a, c) {
                Ok(Some(k)) => assertions.push(within(&format!("constant {k}"), max_deviation(&r, |_| k), MUTUAL_TOL)),
                Ok(None) => {}
                Err(e) => assertions.push(assertion("constant", false, e.to_string())),
            }
            series.push(s);
        }
        Body::Commutant { sequence, probes } => {
            let mut tested = 0;
            let mut all_vanish = true;
            for (probe, label) in probes.iter().zip(probe_labels(probes)) {
                match probe_fits(&probe.op, &cfg.schedule) {
                    Err(reason) => series.push(Series::skipped(label, reason)),
                    Ok(()) => {
                        let (s, r) = tracer.series(&label, &th, |n| commutator_norm_at(sequence, &probe.op, n, &norm_opts));
                        tested += 1;
                        all_vanish &= r.classification == Classification::Vanishing;
                        series.push(s);
                    }
                }
            }
            assertions.push(assertion(
                "membership",
                tested > 0 && all_vanish,
                format!("{tested} of {} probes tested", probes.len()),
            ));
        }
        Body::GammaBound { spec, probes } => {
            let seq = ObservableSequence::Gamma(spec.clone());
            for (probe, label) in probes.iter().zip(probe_labels(probes)) {
                let (pts, walls) = tracer.trace(|n| commutator_norm_at(&seq, &probe.op, n, &norm_opts));
                let mut r = DecayReport::from_points(pts, &th);
                match tracer.points.iter().map(|&n| Ok((n, gamma_commutator_bound(spec, &probe.op, n)?))).collect() {
                    Ok(bounds) => check_bound(&mut r, bounds),
                    Err(e) => {
                        let e: obsinf_core::Error = e;
                        assertions.push(assertion(format!("{label}: bound"), false, e.to_string()));
                    }
                }
                if let Some(b) = &r.bound {
                    assertions.push(assertion(
                        format!("{label}: bound"),
                        b.holds(),
                        format!("{} violations", b.violations.len()),
                    ));
                }
                assertions.push(classification_assertion(&format!("{label}: vanishing"), &r, Classification::Vanishing));
                series.push(Series::from_report(label, &r, &walls));
            }
        }
        Body::Expect { sequence, state } => {
            let values: Vec<(usize, obsinf_core::Result<Complex64>, Option<f64>)> = tracer
                .points
                .par_iter()
                .map(|&n| {
                    let t = Instant::now();
                    let z = Volume::new(n).and_then(|v| state.expectation(&sequence.eval(n)?, v));
                    (n, z, opts.timings.then(|| t.elapsed().as_secs_f64() * 1e3))
                })
                .collect();
            let part = |f: fn(Complex64) -> f64| -> Vec<TracePoint> {
                values
                    .iter()
                    .map(|(n, z, _)| match z {
                        Ok(z) => TracePoint::exact(*n, f(*z)),
                        Err(e) => TracePoint::failed(*n, e.clone()),
                    })
                    .collect()
            };
            let walls: Vec<Option<f64>> = values.iter().map(|v| v.2).collect();
            let (re, im) = (part(|z| z.re), part(|z| z.im));
            series.push(Series::from_report("expectation", &DecayReport::from_points(re, &th), &walls));
            if im.iter().any(|p| p.value.abs() > 1e-12) {
                series.push(Series::from_report("expectation_imag", &DecayReport::from_points(im, &th), &[]));
            }
        }
        Body::Variance { observable, state } => {
            let m = observable.matrix().expect("single-site observable");
            let mean = state.site_expectation(&m).re;
            let second = state.site_expectation(&m.matmul(&m)).re;
            let spread = second - mean * mean;
            let (s, r) = tracer.series("mean", &th, |n| {
                match Volume::new(n).and_then(|v| state.expectation(&gamma_average(observable, v)?, v)) {
                    Ok(z) => TracePoint::exact(n, z.re),
                    Err(e) => TracePoint::failed(n, e),
                }
            });
            assertions.push(within(&format!("mean equals {mean}"), max_deviation(&r, |_| mean), MEAN_TOL));
            series.push(s);
            let (s, r) = tracer.series("variance_times_n", &th, |n| {
                match Volume::new(n).and_then(|v| state.average_variance(observable, v)) {
                    Ok(var) => TracePoint::exact(n, var * n as f64),
                    Err(e) => TracePoint::failed(n, e),
                }
            });
            assertions.push(within(&format!("variance times N equals {spread}"), max_deviation(&r, |_| spread), VARIANCE_TOL));
            series.push(s);
            let (s, r) = tracer.series("invariance_residual", &th, |n| {
                let res = Volume::new(n).and_then(|v| {
                    (0..4).try_fold(0.0f64, |acc, j| Ok(acc.max(state.induced_invariance_residual(observable, v, j)?)))
                });
                match res {
                    Ok(x) => TracePoint::exact(n, x),
                    Err(e) => TracePoint::failed(n, e),
                }
            });
            assertions.push(within("invariance residual", max_deviation(&r, |_| 0.0), RESIDUAL_TOL));
            series.push(s);
        }
        Body::ClassicalDecay { sequence, probe } => {
            let (pts, walls) = tracer.trace(|n| bracket_norm_at(sequence, probe, n));
            let r = DecayReport::from_points(pts, &th);
            assertions.push(classification_assertion("vanishing", &r, Classification::Vanishing));
            series.push(Series::from_report("bracket_l1", &r, &walls));
        }
    }

    assertions.extend(user_assertions(&cfg.expect, &series));
    let had_point_errors = series.iter().flat_map(|s| &s.points).any(|p| p.error.is_some());
    let passed = assertions.iter().all(|a| a.passed);
    let meta = Meta {
        tool: "obsinf".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kind: cfg.kind.as_str().into(),
        seed: cfg.seed,
        method: method_name(cfg.method).into(),
        dense_cap: cfg.dense_cap,
        passed,
        assertions,
        config: cfg.echo.clone(),
    };
    Outcome { report: Report { meta, schedule: cfg.schedule.points().to_vec(), series }, had_point_errors }
}

fn user_assertions(e: &Expectations, series: &[Series]) -> Vec<Assertion> {
    let mut out = Vec::new();
    let selected: Vec<&Series> = series
        .iter()
        .filter(|s| s.classification != "skipped")
        .filter(|s| e.series.as_ref().is_none_or(|want| &s.label == want))
        .collect();
    if let Some(want) = &e.series {
        if selected.is_empty() {
            out.push(assertion("expect.series", false, format!("no series labelled '{want}'")));
        }
    }
    for s in selected {
        if let Some(c) = e.classification {
            out.push(assertion(
                format!("{}: classification", s.label),
                s.classification_is(c),
                format!("got {}, expected {}", s.classification, c.as_str()),
            ));
        }
        if let Some((target, tol)) = e.exponent {
            let (ok, detail) = match s.fit {
                Some(f) => ((f.exponent - target).abs() <= tol, format!("exponent {} vs {target} ± {tol}", f.exponent)),
                None => (false, "no fit".to_string()),
            };
            out.push(assertion(format!("{}: exponent", s.label), ok, detail));
        }
        if let Some((values, tol)) = &e.values {
            let (ok, detail) = if values.len() != s.points.len() {
                (false, format!("{} expected values for {} points", values.len(), s.points.len()))
            } else {
                let dev = s
                    .points
                    .iter()
                    .zip(values)
                    .map(|(p, v)| p.value.map_or(f64::INFINITY, |x| (x - v).abs()))
                    .fold(0.0, f64::max);
                (dev <= *tol, format!("max deviation {dev:e} (tolerance {tol:e})"))
            };
            out.push(assertion(format!("{}: values", s.label), ok, detail));
        }
    }
    out
}
