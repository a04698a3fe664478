//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use obsinf_core::asymptotics::{
    commutant_membership, default_probes, gamma_bound_check, mutual_commutator_trace, per_volume,
    quotient_norm_estimate, vanishing_test, Classification, ProbeOutcome,
};
use obsinf_core::classical::{
    bracket_decay_test, poisson_bracket, tail_sequence, ClassicalSequence, Frequency, TrigObservable,
};
use obsinf_core::matrix::{kron, operator_norm_dense, pauli, ComplexMatrix, Pauli};
use obsinf_core::sequence::{BlockPartition, ObservableSequence, SiteRule, VolumeSchedule};
use obsinf_core::shift::{gamma_average_sum, gamma_pow, GammaSequenceSpec};
use obsinf_core::local::norm;
use obsinf_core::{LocalOperator, NormMethod, NormOptions, OperatorSum, ProductState, Volume};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}
fn x() -> ComplexMatrix {
    pauli(Pauli::X)
}
fn z() -> ComplexMatrix {
    pauli(Pauli::Z)
}
fn at(site: usize, m: ComplexMatrix) -> LocalOperator {
    LocalOperator::on_site(site, m).unwrap()
}
fn two(a: ComplexMatrix, b: ComplexMatrix) -> LocalOperator {
    LocalOperator::new(2, vec![1, 2], kron(&a, &b).unwrap()).unwrap()
}
fn vol(n: usize) -> Volume {
    Volume::new(n).unwrap()
}
fn range(from: usize, to: usize) -> VolumeSchedule {
    VolumeSchedule::range(from, to, 1).unwrap()
}

fn random_matrix(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn random_op(rng: &mut ChaCha8Rng, max_site: usize, max_len: usize) -> LocalOperator {
    let len = rng.gen_range(1..=max_len);
    let mut sites: Vec<usize> = Vec::new();
    while sites.len() < len {
        let s = rng.gen_range(1..=max_site);
        if !sites.contains(&s) {
            sites.push(s);
        }
    }
    sites.sort();
    LocalOperator::new(2, sites, random_matrix(rng, 1 << len)).unwrap()
}

fn random_sum(rng: &mut ChaCha8Rng, max_site: usize, terms: usize) -> OperatorSum {
    let ops = (0..terms).map(|_| (Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), random_op(rng, max_site, 3)));
    OperatorSum::from_terms(2, ops).unwrap()
}

fn random_state(rng: &mut ChaCha8Rng) -> ProductState {
    let m = random_matrix(rng, 2);
    let rho = m.matmul(&m.adjoint());
    let t = rho.trace();
    ProductState::new(rho.scale(t.inv())).unwrap()
}

fn random_trig(rng: &mut ChaCha8Rng, sites: &[usize], terms: usize) -> TrigObservable {
    TrigObservable::from_terms((0..terms).map(|_| {
        let modes: Vec<(usize, i64, i64)> = sites.iter().map(|&s| (s, rng.gen_range(-2..=2), rng.gen_range(-2..=2))).collect();
        (Frequency::new(modes).unwrap(), Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }))
}

fn dense_diff(a: &OperatorSum, b: &OperatorSum, n: usize) -> f64 {
    let (a, b) = (a.dense(vol(n), 1 << 12).unwrap(), b.dense(vol(n), 1 << 12).unwrap());
    a.max_abs_diff(&b)
}

fn one(op: LocalOperator) -> OperatorSum {
    OperatorSum::from(op)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let seeds = [("pauli1", at(1, x())), ("pauli3", at(1, z())), ("pauli1 pauli1", two(x(), x()))];
    let probes = [("pauli1@1", at(1, x())), ("pauli3@1", at(1, z())), ("pauli1@1 pauli3@2", two(x(), z()))];
    let schedule = range(4, 14);
    let mut failures = Vec::new();
    let (mut fitted, mut zero) = (0, 0);
    for (sname, seed) in &seeds {
        let spec = GammaSequenceSpec::new(seed.clone()).unwrap();
        for (pname, probe) in &probes {
            let r = gamma_bound_check(&spec, probe, &schedule, &NormOptions::default()).unwrap();
            let b = r.bound.as_ref().unwrap();
            if !b.holds() || r.points.iter().any(|p| !p.converged) {
                failures.push(format!("{sname} vs {pname}: bound violated at {:?}", b.violations));
            }
            if r.values().iter().all(|&v| v == 0.0) {
                zero += 1;
                continue;
            }
            match r.fit {
                Some(f) if (f.exponent + 1.0).abs() <= 0.15 => fitted += 1,
                other => failures.push(format!("{sname} vs {pname}: fit {other:?}")),
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 60.0 {
        failures.push(format!("runtime {secs:.1} s"));
    }
    outcome(
        failures.is_empty(),
        format!("{fitted} pairs fit -1 +/- 0.15, {zero} pairs commute exactly, all bounds hold, {secs:.2} s {}", failures.join("; ")),
    )
}

fn criterion_2() -> Outcome {
    let opts = NormOptions::default();
    let a = ObservableSequence::translated(x(), SiteRule::default()).unwrap();
    let b = ObservableSequence::translated(z(), SiteRule::default()).unwrap();
    let r = mutual_commutator_trace(&a, &b, &range(2, 14), &opts);
    let dev = r.values().iter().map(|v| (v - 2.0).abs()).fold(0.0, f64::max);
    let mut ok = dev <= 1e-9;
    let mut zeros = 0;
    for seq in [&a, &b] {
        let m = commutant_membership(seq, &default_probes(), &range(3, 14), &opts);
        for o in &m.outcomes {
            match o {
                ProbeOutcome::Tested(t) if t.values().iter().all(|&v| v == 0.0) => zeros += 1,
                _ => ok = false,
            }
        }
        ok &= m.passes();
    }
    outcome(ok, format!("mutual trace max |v - 2| = {dev:e}; {zeros} probe traces exactly zero"))
}

fn criterion_3() -> Outcome {
    let opts = NormOptions::default();
    let seq = ObservableSequence::half_chain(z()).unwrap();
    let probe = at(3, x());
    let m = commutant_membership(&seq, std::slice::from_ref(&probe), &range(3, 14), &opts);
    let ProbeOutcome::Tested(r) = &m.outcomes[0] else {
        return outcome(false, "probe skipped");
    };
    let mut ok = true;
    let mut oracle_dev: f64 = 0.0;
    for p in &r.points {
        if p.n <= 4 {
            ok &= (p.value - 2.0).abs() <= 1e-9;
        } else {
            ok &= p.value == 0.0;
        }
        if p.n <= 10 {
            let v = vol(p.n);
            let s = seq.eval(p.n).unwrap().dense(v, 1 << 10).unwrap();
            let b = one(probe.clone()).dense(v, 1 << 10).unwrap();
            let d = operator_norm_dense(&s.commutator(&b), 1 << 10).unwrap();
            oracle_dev = oracle_dev.max((d - p.value).abs());
        }
    }
    ok &= oracle_dev <= 1e-9;
    outcome(ok, format!("values {:?}; dense oracle deviation {oracle_dev:e}", r.values()))
}

fn criterion_4() -> Outcome {
    let rho = ProductState::bloch(-1.0, 0.0, 0.0).unwrap();
    let uniform = ObservableSequence::uniform(x()).unwrap();
    let mut dev_i: f64 = 0.0;
    for n in 1..=14 {
        let e = rho.expectation(&uniform.eval(n).unwrap(), vol(n)).unwrap();
        dev_i = dev_i.max((e - c((-1f64).powi(n as i32))).norm());
    }
    let parity = ObservableSequence::parity(x(), z()).unwrap();
    let blocks = ObservableSequence::blocks(BlockPartition::new(1, 1).unwrap(), x(), z()).unwrap();
    let other = ProductState::bloch(0.3, -0.2, 0.5).unwrap();
    let mut dev_oracle: f64 = 0.0;
    for seq in [&uniform, &parity, &blocks] {
        for state in [&rho, &other] {
            for n in 1..=10 {
                let s = seq.eval(n).unwrap();
                let f = state.expectation(&s, vol(n)).unwrap();
                let d = state.expectation_dense(&s, vol(n), 1 << 10).unwrap();
                dev_oracle = dev_oracle.max((f - d).norm());
            }
        }
    }
    outcome(
        dev_i <= 1e-10 && dev_oracle <= 1e-10,
        format!("uniform vs (-1)^N: {dev_i:e}; parity/blocks/uniform vs dense oracle: {dev_oracle:e}"),
    )
}

fn criterion_5() -> Outcome {
    let state = ProductState::bloch(0.0, 0.0, 0.6).unwrap();
    let seed = at(1, z());
    let seq = ObservableSequence::gamma(seed.clone()).unwrap();
    let mut mean_dev: f64 = 0.0;
    for n in 1..=14 {
        mean_dev = mean_dev.max((state.expectation(&seq.eval(n).unwrap(), vol(n)).unwrap() - c(0.6)).norm());
    }
    let mut var_dev: f64 = 0.0;
    let mut res: f64 = 0.0;
    for n in 4..=12 {
        var_dev = var_dev.max((state.average_variance(&seed, vol(n)).unwrap() * n as f64 - 0.64).abs());
        for j in 0..4 {
            res = res.max(state.induced_invariance_residual(&seed, vol(n), j).unwrap());
        }
    }
    outcome(
        mean_dev <= 1e-10 && var_dev <= 1e-9 && res <= 1e-12,
        format!("mean {mean_dev:e}, variance*N {var_dev:e}, invariance residual {res:e}"),
    )
}

fn criterion_6() -> Outcome {
    let opts = NormOptions::default();
    let seq = ObservableSequence::gamma(at(1, z())).unwrap();
    let (est, _) = quotient_norm_estimate(&seq, &range(2, 12), &opts);
    let r = vanishing_test(&per_volume(seq), &range(4, 14), &opts);
    let exp = r.fit.map(|f| f.exponent).unwrap_or(f64::NAN);
    outcome(
        (est - 1.0).abs() <= 1e-9 && r.classification == Classification::Vanishing && (exp + 1.0).abs() <= 0.05,
        format!("estimate {est}, scaled sequence {} with exponent {exp}", r.classification.as_str()),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 10;
    let (mut norm_dev, mut exp_dev): (f64, f64) = (0.0, 0.0);
    let mut unconverged = 0;
    for _ in 0..50 {
        let terms = rng.gen_range(1..=6);
        let s = random_sum(&mut rng, n, terms);
        let opts = NormOptions { dense_cap: 1 << 10, ..NormOptions::default() };
        let dense = norm(&s, vol(n), &opts.with_method(NormMethod::Dense)).unwrap();
        let it = norm(&s, vol(n), &opts.with_method(NormMethod::Iterative)).unwrap();
        if !it.converged {
            unconverged += 1;
        }
        norm_dev = norm_dev.max((dense.value - it.value).abs());
        let state = random_state(&mut rng);
        let f = state.expectation(&s, vol(n)).unwrap();
        let d = state.expectation_dense(&s, vol(n), 1 << 10).unwrap();
        exp_dev = exp_dev.max((f - d).norm());
    }
    outcome(
        norm_dev <= 1e-8 && exp_dev <= 1e-10 && unconverged == 0,
        format!("iterative vs dense {norm_dev:e}, factorized vs dense expectation {exp_dev:e}, {unconverged} unconverged"),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cases = 100;
    let mut worst = [0.0f64; 6];
    let mut morphism_mismatches = 0;
    let n = 6;
    for _ in 0..cases {
        let a = random_sum(&mut rng, n, 2);
        let b = random_sum(&mut rng, n, 2);
        let d = random_sum(&mut rng, n, 2);
        // Leibniz: [a·a′, b] = a·[a′, b] + [a, b]·a′
        let lhs = a.product(&b).unwrap().commutator(&d).unwrap();
        let rhs = a.product(&b.commutator(&d).unwrap()).unwrap().add(&a.commutator(&d).unwrap().product(&b).unwrap()).unwrap();
        worst[0] = worst[0].max(dense_diff(&lhs, &rhs, n));
        // star compatibility: [a, b]* = [b*, a*]
        let lhs = a.commutator(&b).unwrap().adjoint();
        let rhs = b.adjoint().commutator(&a.adjoint()).unwrap();
        worst[1] = worst[1].max(dense_diff(&lhs, &rhs, n));

        // γ is a *-morphism exactly: compared as factored operators, not densified
        let (p, q) = (random_op(&mut rng, n, 3), random_op(&mut rng, n, 3));
        let j = rng.gen_range(0..n as i64);
        let g = |o: &LocalOperator| gamma_pow(o, vol(n), j).unwrap();
        if g(&p.product(&q).unwrap()) != g(&p).product(&g(&q)).unwrap() || g(&p.adjoint()) != g(&p).adjoint() {
            morphism_mismatches += 1;
        }

        let m = rng.gen_range(3..=8);
        let s = random_sum(&mut rng, m, 2);
        let avg = gamma_average_sum(&s, vol(m)).unwrap();
        let twice = gamma_average_sum(&avg, vol(m)).unwrap();
        worst[3] = worst[3].max(dense_diff(&avg, &twice, m));

        let f = random_trig(&mut rng, &[1, 2], 3);
        let g2 = random_trig(&mut rng, &[2, 3], 3);
        let h = random_trig(&mut rng, &[1, 3], 3);
        let jac = poisson_bracket(&f, &poisson_bracket(&g2, &h))
            .add(&poisson_bracket(&g2, &poisson_bracket(&h, &f)))
            .add(&poisson_bracket(&h, &poisson_bracket(&f, &g2)));
        worst[4] = worst[4].max(jac.l1_norm());
        let lhs = poisson_bracket(&f.mul(&g2), &h);
        let rhs = f.mul(&poisson_bracket(&g2, &h)).add(&poisson_bracket(&f, &h).mul(&g2));
        worst[5] = worst[5].max(lhs.sub(&rhs).l1_norm());
    }
    let tols = [1e-10, 1e-12, 0.0, 1e-10, 1e-10, 1e-12];
    let names = ["Leibniz", "star", "gamma morphism", "average idempotence", "Jacobi", "Poisson Leibniz"];
    worst[2] = morphism_mismatches as f64;
    let ok = worst.iter().zip(tols).all(|(w, t)| *w <= t);
    let detail: Vec<String> = names.iter().zip(worst).map(|(n, w)| format!("{n} {w:e}")).collect();
    outcome(ok, format!("{cases} cases each (gamma morphism counts inexact cases): {}", detail.join(", ")))
}

fn criterion_9() -> Outcome {
    let seq = ClassicalSequence::CyclicAverage(TrigObservable::cos_q(1).unwrap());
    let r = bracket_decay_test(&seq, &TrigObservable::cos_p(1).unwrap(), &range(2, 64));
    let ratios: Vec<f64> = r.points.iter().map(|p| p.value * p.n as f64).collect();
    let spread = ratios.iter().map(|q| (q - ratios[0]).abs()).fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut nonzero = 0;
    for _ in 0..20 {
        let f = random_trig(&mut rng, &[1, 2], 3);
        let tail = tail_sequence(f, 0);
        let probe = random_trig(&mut rng, &[1, 2, 3], 4);
        for n in 3..=64 {
            if !poisson_bracket(&tail.eval(n).unwrap(), &probe).is_zero() {
                nonzero += 1;
            }
        }
    }
    outcome(
        spread <= 1e-12 && (ratios[0] - 1.0).abs() <= 1e-12 && nonzero == 0,
        format!("N * trace spread {spread:e} around {}; {nonzero} nonzero tail brackets", ratios[0]),
    )
}

fn criterion_10() -> Outcome {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let bin = env!("CARGO_BIN_EXE_obsinf");
    let by_kind = [
        "norm-gamma.json",
        "decay-per-volume.json",
        "equiv.json",
        "commutant-translated.json",
        "gamma-bound.json",
        "expect-uniform.json",
        "variance.json",
        "classical-decay.json",
        "mutual-translated.json",
    ];
    let exec = |name: &str| {
        Command::new(bin).args(["run", root.join(name).to_str().unwrap(), "--seed", "42"]).output().unwrap()
    };
    let mut problems = Vec::new();
    for name in by_kind {
        let (a, b) = (exec(name), exec(name));
        if a.stdout.is_empty() || a.stdout != b.stdout {
            problems.push(format!("{name} not byte-identical"));
        }
    }
    for (name, code) in [("gamma-bound.json", 0), ("invalid.json", 1), ("fails-commutant-uniform.json", 2)] {
        let got = exec(name).status.code();
        if got != Some(code) {
            problems.push(format!("{name} exited {got:?}, expected {code}"));
        }
    }
    outcome(problems.is_empty(), format!("9 kinds twice at seed 42, exit codes 0/1/2 {}", problems.join("; ")))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("gamma-average commutator bound suite", criterion_1),
        ("translated sequences: commuting with probes, not with each other", criterion_2),
        ("half-chain commutator with a fixed probe", criterion_3),
        ("oscillating product expectations", criterion_4),
        ("product-state mean, variance and invariance", criterion_5),
        ("quotient norm and vanishing rate", criterion_6),
        ("iterative and factorized evaluation against dense oracles", criterion_7),
        ("algebraic laws", criterion_8),
        ("classical bracket decay and tail brackets", criterion_9),
        ("CLI determinism and exit codes", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.passed {
            failed += 1;
        }
        println!("criterion {:>2} {}: {} ({})", i + 1, if o.passed { "PASS" } else { "FAIL" }, name, o.detail.trim_end());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
