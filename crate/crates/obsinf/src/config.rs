//! Experiment configuration: a JSON tree validated into typed inputs.
//!
//! Validation does not stop at the first problem; every diagnostic carries
//! the path of the offending field (`sequence.terms[1].op`, `schedule`, …).

use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex64;
use obsinf_core::asymptotics::{default_probes, Classification};
use obsinf_core::classical::{tail_sequence, ClassicalSequence, TrigObservable};
use obsinf_core::matrix::{pauli, ComplexMatrix, Pauli, DEFAULT_DENSE_CAP};
use obsinf_core::sequence::{BlockPartition, ObservableSequence, ScaleFactor, SiteRule, VolumeSchedule};
use obsinf_core::shift::GammaSequenceSpec;
use obsinf_core::{LocalOperator, NormMethod, ProductState};
use serde_json::Value;

use crate::trig::parse_trig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", if self.path.is_empty() { "<root>" } else { &self.path }, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Norm,
    Decay,
    Equiv,
    Commutant,
    GammaBound,
    Expect,
    Variance,
    ClassicalDecay,
    Mutual,
}

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::Norm,
        Kind::Decay,
        Kind::Equiv,
        Kind::Commutant,
        Kind::GammaBound,
        Kind::Expect,
        Kind::Variance,
        Kind::ClassicalDecay,
        Kind::Mutual,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Norm => "norm",
            Kind::Decay => "decay",
            Kind::Equiv => "equiv",
            Kind::Commutant => "commutant",
            Kind::GammaBound => "gamma-bound",
            Kind::Expect => "expect",
            Kind::Variance => "variance",
            Kind::ClassicalDecay => "classical-decay",
            Kind::Mutual => "mutual",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "json" => Some(Format::Json),
            "csv" => Some(Format::Csv),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub label: String,
    pub op: LocalOperator,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    /// `norm`, `decay`.
    Sequence(ObservableSequence),
    /// `equiv`, `mutual`.
    Pair(ObservableSequence, ObservableSequence),
    Commutant { sequence: ObservableSequence, probes: Vec<Probe> },
    GammaBound { spec: GammaSequenceSpec, probes: Vec<Probe> },
    Expect { sequence: ObservableSequence, state: ProductState },
    Variance { observable: LocalOperator, state: ProductState },
    ClassicalDecay { sequence: ClassicalSequence, probe: TrigObservable },
}

/// Optional user assertions checked against every series (or the one named).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Expectations {
    pub series: Option<String>,
    pub classification: Option<Classification>,
    pub exponent: Option<(f64, f64)>,
    pub values: Option<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub schedule: VolumeSchedule,
    pub method: NormMethod,
    pub dense_cap: usize,
    pub seed: u64,
    pub tol_exponent: f64,
    pub body: Body,
    pub expect: Expectations,
    pub output_path: Option<String>,
    pub format: Format,
    /// The parsed input tree, echoed into reports.
    pub echo: Value,
}

struct Ctx {
    diags: Vec<Diagnostic>,
}

impl Ctx {
    fn err<T>(&mut self, path: &str, message: impl Into<String>) -> Option<T> {
        self.diags.push(Diagnostic { path: path.to_string(), message: message.into() });
        None
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn index(path: &str, i: usize) -> String {
    format!("{path}[{i}]")
}

fn object<'a>(v: &'a Value, path: &str, allowed: &[&str], ctx: &mut Ctx) -> Option<&'a serde_json::Map<String, Value>> {
    let Some(map) = v.as_object() else {
        return ctx.err(path, "expected an object");
    };
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            ctx.err::<()>(&join(path, key), format!("unknown field (allowed: {})", allowed.join(", ")));
        }
    }
    Some(map)
}

fn required<'a>(map: &'a serde_json::Map<String, Value>, path: &str, key: &str, ctx: &mut Ctx) -> Option<&'a Value> {
    match map.get(key) {
        Some(v) => Some(v),
        None => ctx.err(&join(path, key), "missing required field"),
    }
}

fn number(v: &Value, path: &str, ctx: &mut Ctx) -> Option<f64> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Some(x),
        _ => ctx.err(path, "expected a finite number"),
    }
}

fn positive_int(v: &Value, path: &str, ctx: &mut Ctx) -> Option<usize> {
    match v.as_u64() {
        Some(x) if x >= 1 => Some(x as usize),
        _ => ctx.err(path, "expected a positive integer"),
    }
}

fn string<'a>(v: &'a Value, path: &str, ctx: &mut Ctx) -> Option<&'a str> {
    match v.as_str() {
        Some(s) => Some(s),
        None => ctx.err(path, "expected a string"),
    }
}

fn complex(v: &Value, path: &str, ctx: &mut Ctx) -> Option<Complex64> {
    if let Some(arr) = v.as_array() {
        if arr.len() == 2 {
            let re = number(&arr[0], &index(path, 0), ctx);
            let im = number(&arr[1], &index(path, 1), ctx);
            return Some(Complex64::new(re?, im?));
        }
        return ctx.err(path, "expected a number or a [re, im] pair");
    }
    if v.is_number() {
        return number(v, path, ctx).map(|x| Complex64::new(x, 0.0));
    }
    ctx.err(path, "expected a number or a [re, im] pair")
}

fn named_matrix(name: &str) -> Option<ComplexMatrix> {
    let p = match name {
        "identity" | "pauli0" => Pauli::Identity,
        "pauli1" => Pauli::X,
        "pauli2" => Pauli::Y,
        "pauli3" => Pauli::Z,
        _ => return None,
    };
    Some(pauli(p))
}

/// Matrix literal: a name (`pauli1`, `pauli2`, `pauli3`, `identity`), rows of
/// complex entries, or `{"scale": c, "matrix": m}`.
fn matrix(v: &Value, path: &str, ctx: &mut Ctx) -> Option<ComplexMatrix> {
    match v {
        Value::String(name) => match named_matrix(name) {
            Some(m) => Some(m),
            None => ctx.err(path, format!("unknown matrix name '{name}' (pauli1, pauli2, pauli3, identity)")),
        },
        Value::Array(rows) => {
            if rows.is_empty() {
                return ctx.err(path, "matrix needs at least one row");
            }
            let mut parsed = Vec::with_capacity(rows.len());
            let mut ok = true;
            for (i, row) in rows.iter().enumerate() {
                let rp = index(path, i);
                let Some(entries) = row.as_array() else {
                    ctx.err::<()>(&rp, "expected a row array");
                    ok = false;
                    continue;
                };
                let mut r = Vec::with_capacity(entries.len());
                for (j, e) in entries.iter().enumerate() {
                    match complex(e, &index(&rp, j), ctx) {
                        Some(c) => r.push(c),
                        None => ok = false,
                    }
                }
                parsed.push(r);
            }
            if !ok {
                return None;
            }
            let m = match ComplexMatrix::from_rows(&parsed) {
                Ok(m) => m,
                Err(e) => return ctx.err(path, format!("malformed matrix literal: {e}")),
            };
            if !m.is_square() {
                return ctx.err(path, format!("malformed matrix literal: not square ({}x{})", m.rows(), m.cols()));
            }
            Some(m)
        }
        Value::Object(_) => {
            let map = object(v, path, &["scale", "matrix"], ctx)?;
            let s = required(map, path, "scale", ctx).and_then(|s| complex(s, &join(path, "scale"), ctx));
            let m = required(map, path, "matrix", ctx).and_then(|m| matrix(m, &join(path, "matrix"), ctx));
            Some(m?.scale(s?))
        }
        _ => ctx.err(path, "malformed matrix literal: expected a name, rows, or {scale, matrix}"),
    }
}

fn sites(v: &Value, path: &str, ctx: &mut Ctx) -> Option<Vec<usize>> {
    let Some(arr) = v.as_array() else {
        return ctx.err(path, "expected an array of site numbers");
    };
    let mut out = Vec::with_capacity(arr.len());
    for (i, s) in arr.iter().enumerate() {
        out.push(positive_int(s, &index(path, i), ctx)?);
    }
    Some(out)
}

fn site_dim_of(m: &ComplexMatrix, sites: usize, path: &str, ctx: &mut Ctx) -> Option<usize> {
    if sites == 0 {
        return ctx.err(path, "support must contain at least one site");
    }
    let mut d = 1usize;
    while d.checked_pow(sites as u32).is_some_and(|p| p < m.rows()) {
        d += 1;
    }
    if d.checked_pow(sites as u32) != Some(m.rows()) {
        return ctx.err(path, format!("matrix dimension {} is not d^{} for any site dimension d", m.rows(), sites));
    }
    Some(d)
}

fn label_part(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        _ => "custom".into(),
    }
}

/// `{"sites": [...], "matrix": m}` or `{"sites": [...], "factors": [m, ...]}`,
/// with an optional complex `coeff`.
fn operator(v: &Value, path: &str, ctx: &mut Ctx) -> Option<Probe> {
    let map = object(v, path, &["sites", "matrix", "factors", "coeff"], ctx)?;
    let support = required(map, path, "sites", ctx).and_then(|s| sites(s, &join(path, "sites"), ctx));
    let coeff = match map.get("coeff") {
        Some(c) => complex(c, &join(path, "coeff"), ctx),
        None => Some(Complex64::new(1.0, 0.0)),
    };
    let (op, label) = match (map.get("matrix"), map.get("factors")) {
        (Some(m), None) => {
            let m = matrix(m, &join(path, "matrix"), ctx);
            let support = support?;
            let m = m?;
            let d = site_dim_of(&m, support.len(), &join(path, "matrix"), ctx)?;
            let label = format!(
                "{}@{}",
                label_part(&map["matrix"]),
                support.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
            );
            match LocalOperator::new(d, support, m) {
                Ok(op) => (op, label),
                Err(e) => return ctx.err(path, e.to_string()),
            }
        }
        (None, Some(f)) => {
            let fp = join(path, "factors");
            let Some(arr) = f.as_array() else {
                return ctx.err(&fp, "expected an array of single-site matrices");
            };
            let ms: Vec<Option<ComplexMatrix>> =
                arr.iter().enumerate().map(|(i, m)| matrix(m, &index(&fp, i), ctx)).collect();
            let support = support?;
            if ms.len() != support.len() {
                return ctx.err(&fp, format!("{} factors for {} sites", ms.len(), support.len()));
            }
            let ms: Vec<ComplexMatrix> = ms.into_iter().collect::<Option<_>>()?;
            let label = support
                .iter()
                .zip(arr)
                .map(|(s, m)| format!("{}@{s}", label_part(m)))
                .collect::<Vec<_>>()
                .join(" ");
            let d = ms[0].rows();
            match LocalOperator::site_product(d, support.into_iter().zip(ms)) {
                Ok(op) => (op, label),
                Err(e) => return ctx.err(path, e.to_string()),
            }
        }
        (Some(_), Some(_)) => return ctx.err(path, "give either 'matrix' or 'factors', not both"),
        (None, None) => return ctx.err(path, "missing 'matrix' or 'factors'"),
    };
    let coeff = coeff?;
    if coeff == Complex64::new(1.0, 0.0) {
        Some(Probe { label, op })
    } else {
        Some(Probe { label: format!("({},{})*{label}", coeff.re, coeff.im), op: op.scaled(coeff) })
    }
}

fn site_rule(v: Option<&Value>, path: &str, ctx: &mut Ctx) -> Option<SiteRule> {
    match v {
        None => Some(SiteRule::default()),
        Some(Value::String(s)) if s == "right" => Some(SiteRule::FromRight(0)),
        Some(Value::String(s)) if s == "middle" => Some(SiteRule::Middle),
        Some(Value::Object(_)) => {
            let map = object(v?, path, &["from_right"], ctx)?;
            let k = required(map, path, "from_right", ctx)?;
            match k.as_u64() {
                Some(k) => Some(SiteRule::FromRight(k as usize)),
                None => ctx.err(&join(path, "from_right"), "expected a non-negative integer"),
            }
        }
        Some(_) => ctx.err(path, "expected \"right\", \"middle\" or {\"from_right\": k}"),
    }
}

const SEQUENCE_TYPES: &str = "local, translated, gamma, uniform, parity, blocks, half_chain, sum, product, adjoint, scale";

fn sequence(v: &Value, path: &str, ctx: &mut Ctx) -> Option<ObservableSequence> {
    let Some(tag) = v.get("type").and_then(Value::as_str) else {
        return ctx.err(&join(path, "type"), format!("missing sequence type ({SEQUENCE_TYPES})"));
    };
    let core_err = |ctx: &mut Ctx, e: obsinf_core::Error| ctx.err::<ObservableSequence>(path, e.to_string());
    let fields: &[&str] = match tag {
        "local" | "gamma" => &["type", "op"],
        "translated" => &["type", "seed", "site"],
        "uniform" | "half_chain" => &["type", "op"],
        "parity" => &["type", "odd", "even"],
        "blocks" => &["type", "slope", "offset", "even", "odd"],
        "sum" => &["type", "terms"],
        "product" => &["type", "factors"],
        "adjoint" => &["type", "of"],
        "scale" => &["type", "of", "factor", "per_volume"],
        other => return ctx.err(&join(path, "type"), format!("unknown sequence type '{other}' ({SEQUENCE_TYPES})")),
    };
    let map = object(v, path, fields, ctx)?;
    let mat = |key: &str, ctx: &mut Ctx| required(map, path, key, ctx).and_then(|m| matrix(m, &join(path, key), ctx));
    match tag {
        "local" => {
            let op = required(map, path, "op", ctx).and_then(|o| operator(o, &join(path, "op"), ctx))?;
            Some(ObservableSequence::local(op.op))
        }
        "gamma" => {
            let op = required(map, path, "op", ctx).and_then(|o| operator(o, &join(path, "op"), ctx))?;
            ObservableSequence::gamma(op.op).map_err(|e| core_err(ctx, e)).ok()
        }
        "translated" => {
            let seed = mat("seed", ctx);
            let rule = site_rule(map.get("site"), &join(path, "site"), ctx);
            ObservableSequence::translated(seed?, rule?).map_err(|e| core_err(ctx, e)).ok()
        }
        "uniform" => ObservableSequence::uniform(mat("op", ctx)?).map_err(|e| core_err(ctx, e)).ok(),
        "half_chain" => ObservableSequence::half_chain(mat("op", ctx)?).map_err(|e| core_err(ctx, e)).ok(),
        "parity" => {
            let (odd, even) = (mat("odd", ctx), mat("even", ctx));
            ObservableSequence::parity(odd?, even?).map_err(|e| core_err(ctx, e)).ok()
        }
        "blocks" => {
            let slope = map.get("slope").map_or(Some(1), |s| positive_int(s, &join(path, "slope"), ctx));
            let offset = map.get("offset").map_or(Some(1), |s| positive_int(s, &join(path, "offset"), ctx));
            let (even, odd) = (mat("even", ctx), mat("odd", ctx));
            let partition = BlockPartition::new(slope?, offset?).map_err(|e| core_err(ctx, e)).ok()?;
            ObservableSequence::blocks(partition, even?, odd?).map_err(|e| core_err(ctx, e)).ok()
        }
        "sum" | "product" => {
            let key = if tag == "sum" { "terms" } else { "factors" };
            let lp = join(path, key);
            let arr = required(map, path, key, ctx)?;
            let Some(arr) = arr.as_array().filter(|a| !a.is_empty()) else {
                return ctx.err(&lp, "expected a non-empty array of sequences");
            };
            let parts: Vec<Option<ObservableSequence>> =
                arr.iter().enumerate().map(|(i, s)| sequence(s, &index(&lp, i), ctx)).collect();
            let mut parts = parts.into_iter().collect::<Option<Vec<_>>>()?.into_iter();
            let first = parts.next()?;
            parts
                .try_fold(first, |acc, s| if tag == "sum" { acc.sum(s) } else { acc.product(s) })
                .map_err(|e| core_err(ctx, e))
                .ok()
        }
        "adjoint" => {
            let inner = required(map, path, "of", ctx).and_then(|s| sequence(s, &join(path, "of"), ctx))?;
            Some(inner.adjoint())
        }
        "scale" => {
            let inner = required(map, path, "of", ctx).and_then(|s| sequence(s, &join(path, "of"), ctx));
            let factor = required(map, path, "factor", ctx).and_then(|c| complex(c, &join(path, "factor"), ctx));
            let per_volume = match map.get("per_volume") {
                None => Some(false),
                Some(Value::Bool(b)) => Some(*b),
                Some(_) => ctx.err(&join(path, "per_volume"), "expected a boolean"),
            };
            let f = if per_volume? { ScaleFactor::PerVolume(factor?) } else { ScaleFactor::Constant(factor?) };
            Some(inner?.scale(f))
        }
        _ => unreachable!(),
    }
}

fn classical_sequence(v: &Value, path: &str, ctx: &mut Ctx) -> Option<ClassicalSequence> {
    let map = object(v, path, &["type", "f", "gap"], ctx)?;
    let tag = required(map, path, "type", ctx).and_then(|t| string(t, &join(path, "type"), ctx));
    let f = required(map, path, "f", ctx).and_then(|f| trig(f, &join(path, "f"), ctx));
    let gap = match map.get("gap") {
        None => Some(0),
        Some(g) => match g.as_u64() {
            Some(g) => Some(g as usize),
            None => ctx.err(&join(path, "gap"), "expected a non-negative integer"),
        },
    };
    match tag? {
        "local" => Some(ClassicalSequence::LocalEmbed(f?)),
        "cyclic_average" => Some(ClassicalSequence::CyclicAverage(f?)),
        "tail" => Some(tail_sequence(f?, gap?)),
        other => ctx.err(&join(path, "type"), format!("unknown classical sequence type '{other}' (local, cyclic_average, tail)")),
    }
}

fn trig(v: &Value, path: &str, ctx: &mut Ctx) -> Option<TrigObservable> {
    let s = string(v, path, ctx)?;
    match parse_trig(s) {
        Ok(f) => Some(f),
        Err(e) => ctx.err(path, format!("malformed trigonometric observable: {e}")),
    }
}

fn state(v: &Value, path: &str, ctx: &mut Ctx) -> Option<ProductState> {
    let map = object(v, path, &["rho", "bloch"], ctx)?;
    match (map.get("rho"), map.get("bloch")) {
        (Some(r), None) => {
            let rp = join(path, "rho");
            let m = matrix(r, &rp, ctx)?;
            ProductState::new(m).map_err(|e| ctx.err::<()>(&rp, format!("density matrix invariant violated: {e}"))).ok()
        }
        (None, Some(b)) => {
            let bp = join(path, "bloch");
            let Some(arr) = b.as_array().filter(|a| a.len() == 3) else {
                return ctx.err(&bp, "expected [x, y, z]");
            };
            let xyz: Vec<Option<f64>> = arr.iter().enumerate().map(|(i, x)| number(x, &index(&bp, i), ctx)).collect();
            let xyz: Vec<f64> = xyz.into_iter().collect::<Option<_>>()?;
            ProductState::bloch(xyz[0], xyz[1], xyz[2])
                .map_err(|e| ctx.err::<()>(&bp, format!("density matrix invariant violated: {e}")))
                .ok()
        }
        _ => ctx.err(path, "give exactly one of 'rho' or 'bloch'"),
    }
}

fn schedule(v: &Value, path: &str, ctx: &mut Ctx) -> Option<VolumeSchedule> {
    let result = match v {
        Value::Array(arr) => {
            let pts: Vec<Option<usize>> = arr.iter().enumerate().map(|(i, n)| positive_int(n, &index(path, i), ctx)).collect();
            VolumeSchedule::new(pts.into_iter().collect::<Option<_>>()?)
        }
        Value::Object(_) => {
            let map = object(v, path, &["from", "to", "step"], ctx)?;
            let from = required(map, path, "from", ctx).and_then(|x| positive_int(x, &join(path, "from"), ctx));
            let to = required(map, path, "to", ctx).and_then(|x| positive_int(x, &join(path, "to"), ctx));
            let step = map.get("step").map_or(Some(1), |x| positive_int(x, &join(path, "step"), ctx));
            VolumeSchedule::range(from?, to?, step?)
        }
        _ => return ctx.err(path, "expected an array of volumes or {from, to, step}"),
    };
    result.map_err(|e| ctx.err::<()>(path, e.to_string())).ok()
}

fn probes(map: &serde_json::Map<String, Value>, ctx: &mut Ctx) -> Option<Vec<Probe>> {
    match map.get("probes") {
        None => Some(default_probe_list()),
        Some(Value::Array(arr)) if !arr.is_empty() => {
            let ps: Vec<Option<Probe>> =
                arr.iter().enumerate().map(|(i, p)| operator(p, &index("probes", i), ctx)).collect();
            ps.into_iter().collect()
        }
        Some(_) => ctx.err("probes", "expected a non-empty array of operators"),
    }
}

/// The default probes with readable labels.
pub fn default_probe_list() -> Vec<Probe> {
    let labels = ["pauli1@1", "pauli2@1", "pauli3@1", "pauli1@2", "pauli2@2", "pauli3@2", "pauli1@1 pauli3@2"];
    labels.iter().zip(default_probes()).map(|(l, op)| Probe { label: l.to_string(), op }).collect()
}

fn pair(map: &serde_json::Map<String, Value>, ctx: &mut Ctx) -> Option<(ObservableSequence, ObservableSequence)> {
    let arr = required(map, "", "sequences", ctx)?;
    let Some(arr) = arr.as_array().filter(|a| a.len() == 2) else {
        return ctx.err("sequences", "expected exactly two sequences");
    };
    let a = sequence(&arr[0], "sequences[0]", ctx);
    let b = sequence(&arr[1], "sequences[1]", ctx);
    Some((a?, b?))
}

fn classification(s: &str) -> Option<Classification> {
    [Classification::Vanishing, Classification::BoundedNonvanishing, Classification::Unconverged]
        .into_iter()
        .find(|c| c.as_str() == s)
}

fn expectations(v: &Value, ctx: &mut Ctx) -> Option<Expectations> {
    let path = "expect";
    let map = object(v, path, &["series", "classification", "exponent", "exponent_tol", "values", "values_tol"], ctx)?;
    let mut out = Expectations::default();
    let mut ok = true;
    if let Some(s) = map.get("series") {
        out.series = string(s, &join(path, "series"), ctx).map(str::to_string);
        ok &= out.series.is_some();
    }
    if let Some(c) = map.get("classification") {
        out.classification = string(c, &join(path, "classification"), ctx).and_then(|s| {
            classification(s).or_else(|| {
                ctx.err(&join(path, "classification"), "expected vanishing, bounded_nonvanishing or unconverged")
            })
        });
        ok &= out.classification.is_some();
    }
    if let Some(e) = map.get("exponent") {
        let tol = map.get("exponent_tol").map_or(Some(0.15), |t| number(t, &join(path, "exponent_tol"), ctx));
        out.exponent = number(e, &join(path, "exponent"), ctx).zip(tol);
        ok &= out.exponent.is_some();
    }
    if let Some(vs) = map.get("values") {
        let vp = join(path, "values");
        let tol = map.get("values_tol").map_or(Some(1e-9), |t| number(t, &join(path, "values_tol"), ctx));
        let values = match vs.as_array() {
            Some(arr) => arr.iter().enumerate().map(|(i, x)| number(x, &index(&vp, i), ctx)).collect::<Option<Vec<_>>>(),
            None => ctx.err(&vp, "expected an array of numbers"),
        };
        out.values = values.zip(tol);
        ok &= out.values.is_some();
    }
    ok.then_some(out)
}

const TOP_LEVEL: &[&str] = &[
    "kind",
    "schedule",
    "method",
    "dense_cap",
    "seed",
    "tol_exponent",
    "sequence",
    "sequences",
    "observable",
    "probes",
    "probe",
    "state",
    "expect",
    "output",
];

/// Parses and validates a configuration, reporting every problem found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let root: Value = serde_json::from_str(text).map_err(|e| ConfigError {
        diagnostics: vec![Diagnostic { path: String::new(), message: format!("not valid JSON: {e}") }],
    })?;
    let mut ctx = Ctx { diags: Vec::new() };
    let cfg = validate(&root, &mut ctx);
    match cfg {
        Some(cfg) if ctx.diags.is_empty() => Ok(cfg),
        _ => {
            if ctx.diags.is_empty() {
                ctx.diags.push(Diagnostic { path: String::new(), message: "invalid configuration".into() });
            }
            Err(ConfigError { diagnostics: ctx.diags })
        }
    }
}

fn validate(root: &Value, ctx: &mut Ctx) -> Option<ExperimentConfig> {
    let map = object(root, "", TOP_LEVEL, ctx)?;
    let kind = required(map, "", "kind", ctx).and_then(|k| string(k, "kind", ctx)).and_then(|k| {
        Kind::parse(k).or_else(|| {
            let names: Vec<&str> = Kind::ALL.iter().map(|k| k.as_str()).collect();
            ctx.err("kind", format!("unknown experiment kind '{k}' (one of {})", names.join(", ")))
        })
    });
    let sched = required(map, "", "schedule", ctx).and_then(|s| schedule(s, "schedule", ctx));
    let method = match map.get("method") {
        None => Some(NormMethod::Auto),
        Some(m) => match string(m, "method", ctx) {
            Some("dense") => Some(NormMethod::Dense),
            Some("iterative") => Some(NormMethod::Iterative),
            Some("auto") => Some(NormMethod::Auto),
            Some(other) => ctx.err("method", format!("unknown method '{other}' (dense, iterative, auto)")),
            None => None,
        },
    };
    let dense_cap = map.get("dense_cap").map_or(Some(DEFAULT_DENSE_CAP), |c| positive_int(c, "dense_cap", ctx));
    let seed = match map.get("seed") {
        None => Some(0),
        Some(s) => s.as_u64().or_else(|| ctx.err("seed", "expected a non-negative integer")),
    };
    let tol_exponent = map.get("tol_exponent").map_or(Some(0.5), |t| number(t, "tol_exponent", ctx));
    let expect = map.get("expect").map_or(Some(Expectations::default()), |e| expectations(e, ctx));
    let (output_path, format) = match map.get("output") {
        None => (Some(None), Some(Format::Json)),
        Some(o) => match object(o, "output", &["path", "format"], ctx) {
            None => (None, None),
            Some(om) => {
                let path = om.get("path").map_or(Some(None), |p| string(p, "output.path", ctx).map(|s| Some(s.to_string())));
                let format = om.get("format").map_or(Some(Format::Json), |f| {
                    string(f, "output.format", ctx)
                        .and_then(|s| Format::parse(s).or_else(|| ctx.err("output.format", "expected json or csv")))
                });
                (path, format)
            }
        },
    };

    let body = kind.and_then(|kind| body(kind, map, ctx));
    Some(ExperimentConfig {
        kind: kind?,
        schedule: sched?,
        method: method?,
        dense_cap: dense_cap?,
        seed: seed?,
        tol_exponent: tol_exponent?,
        body: body?,
        expect: expect?,
        output_path: output_path?,
        format: format?,
        echo: root.clone(),
    })
}

fn body(kind: Kind, map: &serde_json::Map<String, Value>, ctx: &mut Ctx) -> Option<Body> {
    let used: &[&str] = match kind {
        Kind::Norm | Kind::Decay => &["sequence"],
        Kind::Equiv => &["sequences", "tol_exponent"],
        Kind::Mutual => &["sequences"],
        Kind::Commutant => &["sequence", "probes"],
        Kind::GammaBound => &["observable", "probes"],
        Kind::Expect => &["sequence", "state"],
        Kind::Variance => &["observable", "state"],
        Kind::ClassicalDecay => &["sequence", "probe"],
    };
    let specific = ["sequence", "sequences", "observable", "probes", "probe", "state", "tol_exponent"];
    for key in specific {
        if map.contains_key(key) && !used.contains(&key) {
            ctx.err::<()>(key, format!("not used by experiment kind '{}'", kind.as_str()));
        }
    }
    let seq = |ctx: &mut Ctx| required(map, "", "sequence", ctx).and_then(|s| sequence(s, "sequence", ctx));
    let st = |ctx: &mut Ctx| required(map, "", "state", ctx).and_then(|s| state(s, "state", ctx));
    let observable = |ctx: &mut Ctx| required(map, "", "observable", ctx).and_then(|o| operator(o, "observable", ctx));
    match kind {
        Kind::Norm | Kind::Decay => seq(ctx).map(Body::Sequence),
        Kind::Equiv | Kind::Mutual => pair(map, ctx).map(|(a, b)| Body::Pair(a, b)),
        Kind::Commutant => {
            let (s, p) = (seq(ctx), probes(map, ctx));
            Some(Body::Commutant { sequence: s?, probes: p? })
        }
        Kind::GammaBound => {
            let (o, p) = (observable(ctx), probes(map, ctx));
            let spec = GammaSequenceSpec::new(o?.op).map_err(|e| ctx.err::<()>("observable", e.to_string())).ok();
            Some(Body::GammaBound { spec: spec?, probes: p? })
        }
        Kind::Expect => {
            let (s, st) = (seq(ctx), st(ctx));
            let (s, st) = (s?, st?);
            if s.site_dim() != st.site_dim() {
                return ctx.err("state", format!("state acts on dimension {} but the sequence on {}", st.site_dim(), s.site_dim()));
            }
            Some(Body::Expect { sequence: s, state: st })
        }
        Kind::Variance => {
            let (o, st) = (observable(ctx), st(ctx));
            let (o, st) = (o?, st?);
            if o.op.support_len() != 1 {
                return ctx.err("observable", "variance needs a single-site observable");
            }
            if !o.op.matrix().map(|m| m.is_hermitian(1e-12)).unwrap_or(false) {
                return ctx.err("observable", "variance needs a self-adjoint observable");
            }
            if o.op.site_dim() != st.site_dim() {
                return ctx.err("state", "state and observable act on different site dimensions");
            }
            Some(Body::Variance { observable: o.op, state: st })
        }
        Kind::ClassicalDecay => {
            let s = required(map, "", "sequence", ctx).and_then(|s| classical_sequence(s, "sequence", ctx));
            let p = required(map, "", "probe", ctx).and_then(|p| trig(p, "probe", ctx));
            Some(Body::ClassicalDecay { sequence: s?, probe: p? })
        }
    }
}

/// Labels used in reports; unique per config.
pub fn probe_labels(probes: &[Probe]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    probes
        .iter()
        .enumerate()
        .map(|(i, p)| if seen.insert(p.label.clone()) { p.label.clone() } else { format!("{} #{i}", p.label) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paths(text: &str) -> Vec<String> {
        parse_config(text).unwrap_err().diagnostics.into_iter().map(|d| d.path).collect()
    }

    #[test]
    fn minimal_gamma_bound_is_valid() {
        let cfg = parse_config(
            r#"{"kind": "gamma-bound", "schedule": [4, 6, 8, 10],
                "observable": {"sites": [1], "matrix": "pauli3"},
                "probes": [{"sites": [1], "matrix": "pauli1"}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.kind, Kind::GammaBound);
        assert_eq!(cfg.schedule.points(), &[4, 6, 8, 10]);
        let Body::GammaBound { probes, .. } = cfg.body else { panic!() };
        assert_eq!(probes[0].label, "pauli1@1");
    }

    #[test]
    fn repeated_volume_names_schedule() {
        let p = paths(r#"{"kind": "norm", "schedule": [4, 4], "sequence": {"type": "uniform", "op": "pauli1"}}"#);
        assert_eq!(p, vec!["schedule"]);
    }

    #[test]
    fn bad_trace_names_state_invariant() {
        let err = parse_config(
            r#"{"kind": "expect", "schedule": [1, 2],
                "sequence": {"type": "uniform", "op": "pauli1"},
                "state": {"rho": [[0.5, 0], [0, 0.4]]}}"#,
        )
        .unwrap_err();
        assert_eq!(err.diagnostics.len(), 1);
        assert_eq!(err.diagnostics[0].path, "state.rho");
        assert!(err.diagnostics[0].message.contains("trace"));
    }

    #[test]
    fn all_errors_are_collected() {
        let p = paths(
            r#"{"kind": "mutual", "schedule": [3, 2], "method": "fast",
                "sequences": [{"type": "translated", "seed": "pauli7"},
                              {"type": "sum", "terms": [{"type": "uniform", "op": [[1, 0], [0]]}]}],
                "color": "red"}"#,
        );
        for expected in ["color", "schedule", "method", "sequences[0].seed", "sequences[1].terms[0].op"] {
            assert!(p.iter().any(|x| x == expected), "{expected} missing from {p:?}");
        }
    }

    #[test]
    fn unknown_kind_and_sequence_type() {
        let p = paths(r#"{"kind": "plot", "schedule": [1]}"#);
        assert_eq!(p, vec!["kind"]);
        let p = paths(r#"{"kind": "norm", "schedule": [1], "sequence": {"type": "spiral"}}"#);
        assert_eq!(p, vec!["sequence.type"]);
    }

    #[test]
    fn matrix_literal_forms() {
        let mut ctx = Ctx { diags: Vec::new() };
        let m = matrix(&serde_json::json!([[0, [0, -1]], [[0, 1], 0]]), "m", &mut ctx).unwrap();
        assert_eq!(m, pauli(Pauli::Y));
        let half = matrix(&serde_json::json!({"scale": 0.5, "matrix": "identity"}), "m", &mut ctx).unwrap();
        assert_eq!(half, ComplexMatrix::identity(2).scale(Complex64::new(0.5, 0.0)));
        assert!(matrix(&serde_json::json!([[1, 2, 3], [4, 5, 6]]), "m", &mut ctx).is_none());
        assert_eq!(ctx.diags.len(), 1);
    }

    #[test]
    fn factor_operators_and_labels() {
        let mut ctx = Ctx { diags: Vec::new() };
        let p = operator(&serde_json::json!({"sites": [1, 2], "factors": ["pauli1", "pauli3"]}), "op", &mut ctx).unwrap();
        assert_eq!(p.label, "pauli1@1 pauli3@2");
        assert_eq!(p.op.support(), vec![1, 2]);
        let q = operator(&serde_json::json!({"sites": [1, 2], "matrix": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}), "op", &mut ctx).unwrap();
        assert_eq!(q.label, "custom@1,2");
        assert!(operator(&serde_json::json!({"sites": [1], "matrix": [[1,0,0],[0,1,0],[0,0,1]], "coeff": [0, 1]}), "op", &mut ctx).is_some());
        assert!(ctx.diags.is_empty());
    }
}
