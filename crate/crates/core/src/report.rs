//! Experiment reports: command echo, input digests, result payload and the
//! symbol table needed to read label codes.  Reports are deterministic;
//! wall-clock timing is only included on request.

use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::codes::SymbolTable;

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    /// Input path to SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub result: serde_json::Value,
    pub symbols: SymbolTable,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u128>,
}

impl ExperimentReport {
    pub fn new(command: Vec<String>, symbols: SymbolTable) -> Self {
        ExperimentReport {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command,
            inputs: BTreeMap::new(),
            result: serde_json::Value::Null,
            symbols,
            timing_ms: None,
        }
    }

    pub fn record_input(&mut self, path: &str, bytes: &[u8]) {
        self.inputs.insert(path.to_string(), digest(bytes));
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
