use std::fmt::Write as _;

use contologic::metric::Grid;
use contologic::MetricTable;
use serde_json::{json, Map, Value};

/// Outcome of one verb: a verdict plus a JSON body.
pub struct Report {
    pub verb: &'static str,
    pub pass: bool,
    /// Lines printed first in text mode.
    pub summary: Vec<String>,
    pub body: Value,
}

impl Report {
    pub fn new(verb: &'static str, pass: bool, body: Value) -> Self {
        Report {
            verb,
            pass,
            summary: Vec::new(),
            body,
        }
    }

    pub fn line(mut self, s: impl Into<String>) -> Self {
        self.summary.push(s.into());
        self
    }

    pub fn verdict(&self) -> &'static str {
        if self.pass {
            "pass"
        } else {
            "fail"
        }
    }

    pub fn render(&self, as_json: bool) -> String {
        if as_json {
            let v = json!({ "verb": self.verb, "verdict": self.verdict(), "report": self.body });
            let mut s = serde_json::to_string_pretty(&v).expect("serializable");
            s.push('\n');
            return s;
        }
        let mut out = String::new();
        writeln!(out, "{}: {}", self.verb, self.verdict()).unwrap();
        for l in &self.summary {
            writeln!(out, "{l}").unwrap();
        }
        flatten("", &self.body, &mut out);
        out
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&p, x, out);
            }
        }
        Value::Array(a) if a.iter().any(|x| x.is_object() || x.is_array()) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        Value::Array(a) => {
            let items: Vec<String> = a.iter().map(scalar).collect();
            writeln!(out, "  {prefix} = [{}]", items.join(", ")).unwrap();
        }
        _ => writeln!(out, "  {prefix} = {}", scalar(v)).unwrap(),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// `{"a": {"b": "1/4", ...}, ...}` keyed by labels.
pub fn metric_json(m: &MetricTable) -> Value {
    let mut rows = Map::new();
    for i in 0..m.len() {
        let mut row = Map::new();
        for j in 0..m.len() {
            row.insert(m.label(j).to_string(), json!(m.d(i, j)));
        }
        rows.insert(m.label(i).to_string(), Value::Object(row));
    }
    Value::Object(rows)
}

pub fn grid_json(g: &Grid, rows: &[String], cols: &[String]) -> Value {
    let mut out = Map::new();
    for (i, r) in rows.iter().enumerate() {
        let mut row = Map::new();
        for (j, c) in cols.iter().enumerate() {
            row.insert(c.clone(), json!(g.get(i, j)));
        }
        out.insert(r.clone(), Value::Object(row));
    }
    Value::Object(out)
}

pub fn table_json<T: serde::Serialize>(labels: &[String], values: &[T]) -> Value {
    let mut out = Map::new();
    for (l, v) in labels.iter().zip(values) {
        out.insert(l.clone(), json!(v));
    }
    Value::Object(out)
}
