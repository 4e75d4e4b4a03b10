use std::path::Path;

use super::compare::EvalReport;
use crate::error::Result;

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Long format, one row per (problem, method), with the generation
    /// metadata repeated on every row.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        out.write_record([
            "problem",
            "method",
            "log_score",
            "time_secs",
            "error",
            "qr",
            "mode",
            "seed",
            "circuit_hash",
        ])?;
        let meta = &self.meta.problems;
        for m in &self.methods {
            for i in 0..m.scores.len() {
                out.write_record([
                    i.to_string(),
                    m.method.clone(),
                    m.score(i).to_string(),
                    m.times_secs[i].to_string(),
                    m.errors[i].clone().unwrap_or_default(),
                    meta.qr.to_string(),
                    meta.mode.to_string(),
                    meta.seed.to_string(),
                    meta.circuit_hash.clone(),
                ])?;
            }
        }
        let bytes = out.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("utf-8 output"))
    }
}
