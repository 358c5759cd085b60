//! Check records and the run report, with JSON and CSV renderings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    KnownBoundaryException,
    ExtrapolatedPass,
    /// A check built on extrapolated ingredients that did not hold. Reported
    /// but never fails the run.
    ExtrapolatedFail,
    ErratumRecorded,
}

impl Status {
    pub fn is_failure(self) -> bool {
        self == Status::Fail
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::KnownBoundaryException => "KNOWN_BOUNDARY_EXCEPTION",
            Status::ExtrapolatedPass => "EXTRAPOLATED_PASS",
            Status::ExtrapolatedFail => "EXTRAPOLATED_FAIL",
            Status::ErratumRecorded => "ERRATUM_RECORDED",
        }
    }

    /// PASS or FAIL by comparing a residual with a tolerance. NaN fails.
    pub fn from_residual(residual: f64, tolerance: f64) -> Status {
        if residual <= tolerance {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn extrapolated(self) -> Status {
        match self {
            Status::Pass => Status::ExtrapolatedPass,
            Status::Fail => Status::ExtrapolatedFail,
            s => s,
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orders: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckRecord {
    pub check_name: String,
    pub params: Params,
    pub status: Status,
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_sign: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub metrics: BTreeMap<String, serde_json::Value>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, status: Status) -> Self {
        CheckRecord {
            check_name: name.into(),
            params: Params::default(),
            status,
            residual: None,
            tolerance: None,
            fitted_sign: None,
            wall_time: None,
            note: None,
            metrics: BTreeMap::new(),
        }
    }

    /// Record whose status follows from residual <= tolerance.
    pub fn measured(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        let mut r = Self::new(name, Status::from_residual(residual, tolerance));
        r.residual = Some(residual);
        r.tolerance = Some(tolerance);
        r
    }

    pub fn l(mut self, l: usize) -> Self {
        self.params.l = Some(l);
        self
    }

    pub fn b(mut self, b: i32) -> Self {
        self.params.b = Some(b);
        self
    }

    pub fn x(mut self, x: f64) -> Self {
        self.params.x = Some(x);
        self
    }

    pub fn orders(mut self, n: usize) -> Self {
        self.params.orders = Some(n);
        self
    }

    pub fn partition(mut self, p: impl Into<String>) -> Self {
        self.params.partition = Some(p.into());
        self
    }

    pub fn sign(mut self, s: Option<i32>) -> Self {
        self.fitted_sign = s;
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn metric(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.metrics.insert(key.to_string(), v);
        self
    }

    pub fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }
}

pub const CSV_COLUMNS: [&str; 11] =
    ["checkName", "L", "b", "x", "orders", "status", "residual", "tolerance", "fittedSign", "wallTime", "note"];

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn sci(v: &Option<f64>) -> String {
    v.map(|f| format!("{f:e}")).unwrap_or_default()
}

impl CheckRecord {
    /// One CSV row in the order of [`CSV_COLUMNS`].
    pub fn csv_row(&self) -> [String; 11] {
        [
            self.check_name.clone(),
            opt(&self.params.l),
            opt(&self.params.b),
            opt(&self.params.x),
            opt(&self.params.orders),
            self.status.to_string(),
            sci(&self.residual),
            sci(&self.tolerance),
            opt(&self.fitted_sign),
            opt(&self.wall_time),
            self.note.clone().unwrap_or_default(),
        ]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerificationReport {
    pub run_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub records: Vec<CheckRecord>,
}

impl VerificationReport {
    /// The run id is a hash of the configuration, so equal configurations
    /// give equal ids.
    pub fn new(config: serde_json::Value, seed: u64) -> Self {
        let mut h = Sha256::new();
        h.update(config.to_string().as_bytes());
        h.update(seed.to_le_bytes());
        let digest = h.finalize();
        let run_id = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        VerificationReport { run_id, timestamp: None, config, seed, records: Vec::new() }
    }

    pub fn push(&mut self, r: CheckRecord) {
        self.records.push(r);
    }

    pub fn extend(&mut self, rs: impl IntoIterator<Item = CheckRecord>) {
        self.records.extend(rs);
    }

    pub fn has_failures(&self) -> bool {
        self.records.iter().any(|r| r.status.is_failure())
    }

    pub fn count(&self, status: Status) -> usize {
        self.records.iter().filter(|r| r.status == status).count()
    }

    pub fn summary(&self) -> BTreeMap<Status, usize> {
        let mut m = BTreeMap::new();
        for r in &self.records {
            *m.entry(r.status).or_insert(0) += 1;
        }
        m
    }

    /// Distinct check names carrying ERRATUM_RECORDED or
    /// KNOWN_BOUNDARY_EXCEPTION.
    pub fn recorded_discrepancies(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .records
            .iter()
            .filter(|r| matches!(r.status, Status::ErratumRecorded | Status::KnownBoundaryException))
            .map(|r| r.check_name.clone())
            .collect();
        names.sort();
        names.dedup();
        names
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }
}
