use std::path::Path;
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::commands::CliError;
use crate::Format;

/// One command run. Everything except `wall_time_s` is a function of the
/// inputs and the seed.
#[derive(Debug, Serialize)]
pub struct ResultRecord {
    pub command: &'static str,
    pub input_digest: String,
    pub outputs: serde_json::Value,
    pub wall_time_s: f64,
}

pub enum Payload {
    Record(ResultRecord),
    /// A mesh spec, written as-is.
    Spec(String),
}

pub struct Output {
    pub payload: Payload,
    pub csv: Option<String>,
}

impl Output {
    pub fn record(
        command: &'static str,
        inputs: &[String],
        outputs: impl Serialize,
        csv: String,
        elapsed: Duration,
    ) -> Result<Self, CliError> {
        let record = ResultRecord {
            command,
            input_digest: digest(inputs),
            outputs: serde_json::to_value(outputs).map_err(|e| CliError::Io(e.to_string()))?,
            wall_time_s: elapsed.as_secs_f64(),
        };
        Ok(Self { payload: Payload::Record(record), csv: Some(csv) })
    }

    pub fn emit(&self, format: Format, path: Option<&Path>) -> Result<(), CliError> {
        let text = match (&self.payload, format) {
            (Payload::Spec(json), _) => json.clone(),
            (Payload::Record(_), Format::Csv) => self.csv.clone().unwrap_or_default(),
            (Payload::Record(r), Format::Json) => {
                serde_json::to_string_pretty(r).map_err(|e| CliError::Io(e.to_string()))?
            }
        };
        let text = if text.ends_with('\n') { text } else { text + "\n" };
        match path {
            Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

/// SHA-256 over the canonical inputs, separated by newlines.
pub fn digest(inputs: &[String]) -> String {
    let mut h = Sha256::new();
    for s in inputs {
        h.update(s.as_bytes());
        h.update(b"\n");
    }
    format!("{:x}", h.finalize())
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}
