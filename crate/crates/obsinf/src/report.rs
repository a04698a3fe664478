//! Report layout and its JSON / CSV encodings.

use serde::Serialize;
use serde_json::Value;

use obsinf_core::asymptotics::{Classification, DecayReport};
use obsinf_core::sequence::TracePoint;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub meta: Meta,
    pub schedule: Vec<usize>,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub seed: u64,
    pub method: String,
    pub dense_cap: usize,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
    pub config: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub label: String,
    pub points: Vec<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<Fit>,
    pub classification: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<Bound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Point {
    pub n: usize,
    /// `null` when the point failed.
    pub value: Option<f64>,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fit {
    pub exponent: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bound {
    pub values: Vec<BoundValue>,
    pub violations: Vec<usize>,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundValue {
    pub n: usize,
    pub bound: f64,
}

impl Point {
    pub fn from_trace(p: &TracePoint, wall_ms: Option<f64>) -> Self {
        Self {
            n: p.n,
            value: p.value.is_finite().then_some(p.value),
            converged: p.converged,
            error: p.error.as_ref().map(|e| e.to_string()),
            wall_ms,
        }
    }
}

impl Series {
    pub fn from_report(label: impl Into<String>, r: &DecayReport, wall_ms: &[Option<f64>]) -> Self {
        let mut walls = wall_ms.iter().copied();
        Self {
            label: label.into(),
            points: r.points.iter().map(|p| Point::from_trace(p, walls.next().flatten())).collect(),
            fit: r.fit.map(|f| Fit { exponent: f.exponent, residual: f.residual }),
            classification: r.classification.as_str().to_string(),
            bound: r.bound.as_ref().map(|b| Bound {
                values: b.pairs.iter().map(|&(n, bound)| BoundValue { n, bound }).collect(),
                violations: b.violations.clone(),
                holds: b.holds(),
            }),
            note: None,
        }
    }

    pub fn skipped(label: impl Into<String>, reason: String) -> Self {
        Self {
            label: label.into(),
            points: Vec::new(),
            fit: None,
            classification: "skipped".into(),
            bound: None,
            note: Some(reason),
        }
    }

    pub fn classification_is(&self, c: Classification) -> bool {
        self.classification == c.as_str()
    }
}

pub fn to_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// One row per point; series-level fields repeat on each row.
pub fn to_csv(report: &Report) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "n", "value", "converged", "classification", "exponent", "residual", "bound", "error"])
        .expect("in-memory write");
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for s in &report.series {
        let (exp, res) = (opt(s.fit.map(|f| f.exponent)), opt(s.fit.map(|f| f.residual)));
        for p in &s.points {
            let bound = s.bound.as_ref().and_then(|b| b.values.iter().find(|v| v.n == p.n)).map(|v| v.bound);
            w.write_record([
                s.label.clone(),
                p.n.to_string(),
                opt(p.value),
                p.converged.to_string(),
                s.classification.clone(),
                exp.clone(),
                res.clone(),
                opt(bound),
                p.error.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// JSON Schema for [`Report`].
pub fn schema() -> Value {
    serde_json::json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "obsinf report",
        "type": "object",
        "required": ["meta", "schedule", "series"],
        "properties": {
            "meta": {
                "type": "object",
                "required": ["tool", "version", "kind", "seed", "method", "dense_cap", "passed", "assertions", "config"],
                "properties": {
                    "tool": {"type": "string"},
                    "version": {"type": "string"},
                    "kind": {"enum": ["norm", "decay", "equiv", "commutant", "gamma-bound", "expect", "variance", "classical-decay", "mutual"]},
                    "seed": {"type": "integer", "minimum": 0},
                    "method": {"enum": ["dense", "iterative", "auto"]},
                    "dense_cap": {"type": "integer", "minimum": 1},
                    "passed": {"type": "boolean"},
                    "assertions": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["name", "passed", "detail"],
                            "properties": {"name": {"type": "string"}, "passed": {"type": "boolean"}, "detail": {"type": "string"}}
                        }
                    },
                    "config": {"description": "the input configuration, echoed verbatim"}
                }
            },
            "schedule": {"type": "array", "items": {"type": "integer", "minimum": 1}},
            "series": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["label", "points", "classification"],
                    "properties": {
                        "label": {"type": "string"},
                        "points": {
                            "type": "array",
                            "items": {
                                "type": "object",
                                "required": ["n", "value", "converged"],
                                "properties": {
                                    "n": {"type": "integer"},
                                    "value": {"type": ["number", "null"]},
                                    "converged": {"type": "boolean"},
                                    "error": {"type": "string"},
                                    "wall_ms": {"type": "number", "description": "present only with --timings"}
                                }
                            }
                        },
                        "fit": {
                            "type": "object",
                            "description": "log-log least squares over the tail half; omitted below three positive points",
                            "required": ["exponent", "residual"],
                            "properties": {"exponent": {"type": "number"}, "residual": {"type": "number"}}
                        },
                        "classification": {"enum": ["vanishing", "bounded_nonvanishing", "unconverged", "skipped"]},
                        "bound": {
                            "type": "object",
                            "required": ["values", "violations", "holds"],
                            "properties": {
                                "values": {"type": "array", "items": {"type": "object", "properties": {"n": {"type": "integer"}, "bound": {"type": "number"}}}},
                                "violations": {"type": "array", "items": {"type": "integer"}},
                                "holds": {"type": "boolean"}
                            }
                        },
                        "note": {"type": "string"}
                    }
                }
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use obsinf_core::asymptotics::Thresholds;

    fn meta() -> Meta {
        Meta {
            tool: "obsinf".into(),
            version: "0".into(),
            kind: "norm".into(),
            seed: 0,
            method: "auto".into(),
            dense_cap: 1024,
            passed: true,
            assertions: vec![],
            config: Value::Null,
        }
    }

    #[test]
    fn empty_series_is_valid_json() {
        let r = Report { meta: meta(), schedule: vec![], series: vec![] };
        let v: Value = serde_json::from_str(&to_json(&r)).unwrap();
        assert_eq!(v["series"], serde_json::json!([]));
    }

    #[test]
    fn single_point_omits_fit() {
        let d = DecayReport::from_points(vec![TracePoint::exact(4, 1.0)], &Thresholds::default());
        let s = Series::from_report("x", &d, &[]);
        let r = Report { meta: meta(), schedule: vec![4], series: vec![s] };
        let v: Value = serde_json::from_str(&to_json(&r)).unwrap();
        assert!(v["series"][0].get("fit").is_none());
        assert_eq!(v["series"][0]["classification"], "unconverged");
        assert_eq!(v["series"][0]["points"][0], serde_json::json!({"n": 4, "value": 1.0, "converged": true}));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let d = DecayReport::from_points(
            (2..6).map(|n| TracePoint::exact(n, 1.0 / n as f64)).collect(),
            &Thresholds::default(),
        );
        let r = Report { meta: meta(), schedule: vec![2, 3, 4, 5], series: vec![Series::from_report("a, b", &d, &[])] };
        let csv = to_csv(&r);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("label,n,value"));
        assert!(lines[1].starts_with("\"a, b\",2,0.5,true"));
    }
}
