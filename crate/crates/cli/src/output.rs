//! CSV and JSON writers. Byte output depends only on the values passed in.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::config::Tolerances;
use crate::experiments::{Check, Row};

pub const CSV_HEADER: &str = "experiment,order,eps1,eps2,channel,value";

/// 17 significant digits, enough to round-trip any f64.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv(experiment: &str, rows: &[Row]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{experiment},{},{},{},{:?},{}",
            r.order.as_str(),
            float(r.eps1),
            float(r.eps2),
            r.channel,
            float(r.value)
        );
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub name: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NumericalFailure,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub artifact: &'static str,
    pub version: &'static str,
    pub experiment: String,
    pub config_sha256: String,
    pub seed: u64,
    pub status: Status,
    pub error: Option<ErrorRecord>,
    pub tolerances: Tolerances,
    pub checks: Vec<Check>,
    pub results: Value,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary is plain data");
        s.push('\n');
        s
    }
}
