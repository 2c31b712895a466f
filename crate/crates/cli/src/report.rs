//! Report records and their JSON / CSV encodings.
//!
//! JSON objects use `serde_json`'s default ordered map, so keys come out
//! sorted. Non-finite numbers are written as strings.

use serde_json::{json, Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub suite: String,
    pub name: String,
    pub value: f64,
    /// `None` for informational records.
    pub tol: Option<f64>,
    pub pass: bool,
    pub error: Option<String>,
    pub data: Map<String, Value>,
}

pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

impl Record {
    pub fn check(suite: &str, name: &str, value: f64, tol: f64) -> Self {
        Self {
            suite: suite.into(),
            name: name.into(),
            value,
            tol: Some(tol),
            // NaN fails.
            pass: value <= tol,
            error: None,
            data: Map::new(),
        }
    }

    pub fn info(suite: &str, name: &str, value: f64) -> Self {
        Self { suite: suite.into(), name: name.into(), value, tol: None, pass: true, error: None, data: Map::new() }
    }

    pub fn error(suite: &str, name: &str, tol: f64, message: &str) -> Self {
        Self {
            suite: suite.into(),
            name: name.into(),
            value: f64::NAN,
            tol: Some(tol),
            pass: false,
            error: Some(message.into()),
            data: Map::new(),
        }
    }

    /// Interval check `lo <= value <= hi`, reported as the distance outside.
    pub fn within(suite: &str, name: &str, value: f64, lo: f64, hi: f64) -> Self {
        let mut r = Self::info(suite, name, value);
        r.pass = value >= lo && value <= hi;
        r.data.insert("range".into(), json!([lo, hi]));
        r
    }

    pub fn with(mut self, key: &str, v: Value) -> Self {
        self.data.insert(key.into(), v);
        self
    }

    pub fn asserted(&self) -> bool {
        self.tol.is_some() || self.data.contains_key("range")
    }

    /// Replace the tolerance of an asserted threshold check.
    pub fn override_tol(&mut self, tol: f64) {
        if self.tol.is_some() && self.error.is_none() {
            self.tol = Some(tol);
            self.pass = self.value <= tol;
        }
    }

    pub fn to_json(&self) -> Value {
        let mut m = self.data.clone();
        m.insert("suite".into(), json!(self.suite));
        m.insert("name".into(), json!(self.name));
        m.insert("value".into(), num(self.value));
        m.insert("tol".into(), self.tol.map(num).unwrap_or(Value::Null));
        m.insert("pass".into(), json!(self.pass));
        if let Some(e) = &self.error {
            m.insert("error".into(), json!(e));
        }
        Value::Object(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub config: Map<String, Value>,
    pub records: Vec<Record>,
    pub extra: Map<String, Value>,
    /// Rows for CSV output: header then data.
    pub table: Option<(Vec<String>, Vec<Vec<String>>)>,
    pub elapsed_seconds: f64,
    /// Per-suite wall time in seconds, kept under `timing`.
    pub suite_seconds: Vec<(String, f64)>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn failed(&self) -> Vec<&Record> {
        self.records.iter().filter(|r| !r.pass).collect()
    }

    pub fn to_json(&self) -> Value {
        let asserted = self.records.iter().filter(|r| r.asserted()).count();
        let failed: Vec<Value> = self.failed().iter().map(|r| json!(format!("{}/{}", r.suite, r.name))).collect();
        let mut summary = Map::new();
        summary.insert("pass".into(), json!(self.passed()));
        summary.insert("asserted".into(), json!(asserted));
        summary.insert("failed".into(), Value::Array(failed));
        let mut root = self.extra.clone();
        root.insert("command".into(), json!(self.command));
        root.insert("config".into(), Value::Object(self.config.clone()));
        root.insert("records".into(), Value::Array(self.records.iter().map(Record::to_json).collect()));
        root.insert("summary".into(), Value::Object(summary));
        let suites: Map<String, Value> = self.suite_seconds.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        root.insert("timing".into(), json!({ "elapsed_seconds": self.elapsed_seconds, "suites": suites }));
        root.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        Value::Object(root)
    }

    pub fn json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("report values serialize");
        s.push('\n');
        s
    }

    /// The command's table if it has one, otherwise one row per record.
    pub fn csv_string(&self) -> anyhow::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        match &self.table {
            Some((header, rows)) => {
                w.write_record(header)?;
                for row in rows {
                    w.write_record(row)?;
                }
            }
            None => {
                w.write_record(["suite", "name", "value", "tol", "pass"])?;
                for r in &self.records {
                    let tol = r.tol.map(|t| t.to_string()).unwrap_or_default();
                    w.write_record([&r.suite, &r.name, &r.value.to_string(), &tol, &r.pass.to_string()])?;
                }
            }
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }

    pub fn summary_line(&self) -> String {
        let asserted = self.records.iter().filter(|r| r.asserted()).count();
        let failed = self.failed().len();
        let status = if failed == 0 { "PASS" } else { "FAIL" };
        format!("{}: {status} ({} of {asserted} asserted checks failed)", self.command, failed)
    }
}

/// `value` with the `timing` key removed, for determinism comparisons.
pub fn without_timing(mut value: Value) -> Value {
    if let Value::Object(m) = &mut value {
        m.remove("timing");
    }
    value
}
