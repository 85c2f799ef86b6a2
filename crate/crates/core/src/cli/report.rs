//! The JSON document every subcommand prints.
//!
//! Reports carry no timings or absolute paths, so a fixed command line on
//! fixed files reproduces the same bytes.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::psd::{PsdMatrix, TolerancePolicy};

pub const SCHEMA: &str = "shorted-ops/report-v1";

/// JSON Schema of [`RunReport`], shipped with the crate.
pub const SCHEMA_JSON: &str = include_str!("../../schema/report-v1.json");

pub const EXIT_OK: i32 = 0;
/// Anything that is not one of the documented outcomes.
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DISAGREEMENT: i32 = 3;
pub const EXIT_PROPERTY: i32 = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputRecord {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub command: String,
    pub inputs: Vec<InputRecord>,
    pub policy: TolerancePolicy,
    pub outputs: BTreeMap<String, Value>,
    pub diagnostics: BTreeMap<String, Value>,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunReport {
    pub fn new(command: &str, policy: TolerancePolicy) -> Self {
        Self {
            schema: SCHEMA,
            command: command.into(),
            inputs: Vec::new(),
            policy,
            outputs: BTreeMap::new(),
            diagnostics: BTreeMap::new(),
            exit_code: EXIT_OK,
            error: None,
        }
    }

    pub fn input(&mut self, role: &str, path: &str, bytes: &[u8]) {
        self.inputs.push(InputRecord {
            role: role.into(),
            path: path.into(),
            sha256: sha256_hex(bytes),
        });
    }

    pub fn output(&mut self, key: &str, v: impl Serialize) {
        self.outputs.insert(key.into(), to_value(v));
    }

    pub fn diag(&mut self, key: &str, v: impl Serialize) {
        self.diagnostics.insert(key.into(), to_value(v));
    }

    /// Records `e` and sets the exit code for its class.
    pub fn fail(&mut self, e: &Error) {
        self.exit_code = exit_code_for(e);
        self.error = Some(e.to_string());
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("value is serializable")
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::NotSquare { .. }
        | Error::NotPsd { .. }
        | Error::DimMismatch { .. }
        | Error::BadExponent(_)
        | Error::NotDefinite { .. }
        | Error::ScheduleInvalid(_)
        | Error::NotContraction { .. }
        | Error::InfeasibleSpec(_)
        | Error::OracleUnsupported(_)
        | Error::InvalidPolicy(_)
        | Error::Parse(_) => EXIT_INPUT,
        Error::RouteDisagreement { .. } => EXIT_DISAGREEMENT,
        Error::InternalInconsistency(_) => EXIT_INTERNAL,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Row-major nested arrays.
pub fn matrix_value(m: &PsdMatrix) -> Value {
    let e = m.entries();
    Value::Array(
        (0..e.nrows())
            .map(|i| Value::Array((0..e.ncols()).map(|j| Value::from(e[(i, j)])).collect()))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_file_names_the_version() {
        let s: Value = serde_json::from_str(SCHEMA_JSON).unwrap();
        assert_eq!(s["properties"]["schema"]["const"], SCHEMA);
    }

    #[test]
    fn errors_map_to_documented_codes() {
        assert_eq!(exit_code_for(&Error::Parse("x".into())), EXIT_INPUT);
        assert_eq!(
            exit_code_for(&Error::RouteDisagreement {
                residuals: vec![],
                threshold: 0.0
            }),
            EXIT_DISAGREEMENT
        );
    }

    #[test]
    fn matrices_serialize_row_major() {
        let m = PsdMatrix::diag(&[1.0, 2.0]);
        assert_eq!(matrix_value(&m), serde_json::json!([[1.0, 0.0], [0.0, 2.0]]));
    }
}
