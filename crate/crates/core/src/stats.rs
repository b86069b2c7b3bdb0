//! Per-stage accounting and run reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::Document;

/// Counters for one pipeline stage. Tokens are whitespace-separated tokens
/// of the document text, the unit used by all retention statistics.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageStats {
    pub stage_name: String,
    pub docs_in: u64,
    pub docs_out: u64,
    pub tokens_in: u64,
    pub tokens_out: u64,
    #[serde(default)]
    pub rule_hit_counts: BTreeMap<String, u64>,
}

impl StageStats {
    pub fn new(stage_name: impl Into<String>) -> Self {
        StageStats { stage_name: stage_name.into(), ..Default::default() }
    }

    pub fn observe_in(&mut self, doc: &Document) {
        self.docs_in += 1;
        self.tokens_in += doc.word_count() as u64;
    }

    pub fn observe_out(&mut self, doc: &Document) {
        self.docs_out += 1;
        self.tokens_out += doc.word_count() as u64;
    }

    pub fn hit(&mut self, rule_id: &str) {
        *self.rule_hit_counts.entry(rule_id.to_string()).or_insert(0) += 1;
    }

    pub fn add(&mut self, other: &StageStats) {
        self.docs_in += other.docs_in;
        self.docs_out += other.docs_out;
        self.tokens_in += other.tokens_in;
        self.tokens_out += other.tokens_out;
        for (k, v) in &other.rule_hit_counts {
            *self.rule_hit_counts.entry(k.clone()).or_insert(0) += v;
        }
    }
}

/// Sum stats that describe the same stage across shards or runs.
pub fn merge_stats(stats: &[StageStats]) -> Result<StageStats> {
    let first = stats
        .first()
        .ok_or_else(|| Error::InvalidInput("merge_stats: empty input".into()))?;
    let mut merged = StageStats::new(&first.stage_name);
    for s in stats {
        if s.stage_name != first.stage_name {
            return Err(Error::InvalidInput(format!(
                "merge_stats: stage name mismatch: {} vs {}",
                first.stage_name, s.stage_name
            )));
        }
        merged.add(s);
    }
    Ok(merged)
}

/// Summary of one pipeline run, serialized next to the outputs as
/// `run_report.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub pipeline: String,
    /// Stage stats in execution order; `docs_out` of stage i equals
    /// `docs_in` of stage i+1.
    pub per_stage: Vec<StageStats>,
    pub wall_time_s: f64,
    /// Stable digest of the semantic configuration (pipeline, inputs,
    /// thresholds, models, seed). Worker count and output paths are
    /// execution details and excluded.
    pub config_fingerprint: u64,
}

impl RunReport {
    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::format("run report", path, e.to_string()))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &std::path::Path) -> Result<RunReport> {
        let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&data).map_err(|e| Error::format("run report", path, e.to_string()))
    }
}

/// Aggregate several run reports (same pipeline, e.g. one per shard batch)
/// and render the per-stage retention table.
pub fn aggregate_reports(reports: &[RunReport]) -> Result<Vec<StageStats>> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidInput("stats: no reports given".into()))?;
    for r in reports {
        if r.pipeline != first.pipeline {
            return Err(Error::InvalidInput(format!(
                "stats: mixed pipelines: {} vs {}",
                first.pipeline, r.pipeline
            )));
        }
        if r.per_stage.len() != first.per_stage.len() {
            return Err(Error::InvalidInput(
                "stats: reports have different stage lists".into(),
            ));
        }
    }
    let mut merged = Vec::new();
    for i in 0..first.per_stage.len() {
        let column: Vec<StageStats> = reports.iter().map(|r| r.per_stage[i].clone()).collect();
        merged.push(merge_stats(&column)?);
    }
    Ok(merged)
}

fn pct(num: u64, den: u64) -> f64 {
    if den == 0 {
        100.0
    } else {
        num as f64 / den as f64 * 100.0
    }
}

/// Render the aligned retention table for aggregated stage stats.
pub fn render_retention_table(stages: &[StageStats]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<20} {:>12} {:>12} {:>8} {:>14} {:>14} {:>9}\n",
        "stage", "docs_in", "docs_out", "docs%", "tokens_in", "tokens_out", "tokens%"
    ));
    for s in stages {
        out.push_str(&format!(
            "{:<20} {:>12} {:>12} {:>7.1}% {:>14} {:>14} {:>8.1}%\n",
            s.stage_name,
            s.docs_in,
            s.docs_out,
            pct(s.docs_out, s.docs_in),
            s.tokens_in,
            s.tokens_out,
            pct(s.tokens_out, s.tokens_in),
        ));
    }
    if let (Some(first), Some(last)) = (stages.first(), stages.last()) {
        out.push_str(&format!(
            "final retention: docs {:.2}% ({} of {}), tokens {:.2}% ({} of {})\n",
            pct(last.docs_out, first.docs_in),
            last.docs_out,
            first.docs_in,
            pct(last.tokens_out, first.tokens_in),
            last.tokens_out,
            first.tokens_in,
        ));
    }
    out
}
