//! Experiment tables: one CSV row per trial plus a per-mode JSON summary.

use serde::{Deserialize, Serialize};

use super::experiment::TrialResult;
use super::scenario::RenderMode;
use super::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub mode: RenderMode,
    pub true_length_m: f64,
    pub trial: usize,
    pub estimated_m: f64,
    pub abs_error_m: f64,
    pub max_desync_m: f64,
}

impl From<&TrialResult> for ReportRow {
    fn from(r: &TrialResult) -> Self {
        Self {
            mode: r.mode,
            true_length_m: r.true_length_m,
            trial: r.trial,
            estimated_m: r.estimated_m,
            abs_error_m: r.abs_error_m,
            max_desync_m: r.max_desync_m,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: RenderMode,
    pub trials: usize,
    pub mean_abs_error_m: f64,
    /// Sample standard deviation (zero for a single trial).
    pub std_abs_error_m: f64,
    pub mean_error_m: f64,
    pub std_error_m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub modes: Vec<ModeSummary>,
}

impl Summary {
    pub fn mode(&self, mode: RenderMode) -> Option<&ModeSummary> {
        self.modes.iter().find(|m| m.mode == mode)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn summarize(rows: &[ReportRow]) -> Summary {
    let modes = [RenderMode::Haptic, RenderMode::VisualOnly]
        .into_iter()
        .filter_map(|mode| {
            let sel: Vec<&ReportRow> = rows.iter().filter(|r| r.mode == mode).collect();
            if sel.is_empty() {
                return None;
            }
            let abs: Vec<f64> = sel.iter().map(|r| r.abs_error_m).collect();
            let signed: Vec<f64> = sel.iter().map(|r| r.estimated_m - r.true_length_m).collect();
            let (mean_abs, std_abs) = mean_std(&abs);
            let (mean_err, std_err) = mean_std(&signed);
            Some(ModeSummary {
                mode,
                trials: sel.len(),
                mean_abs_error_m: mean_abs,
                std_abs_error_m: std_abs,
                mean_error_m: mean_err,
                std_error_m: std_err,
            })
        })
        .collect();
    Summary { modes }
}

pub fn to_csv(rows: &[ReportRow]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Runtime(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn parse_csv(text: &str) -> Result<Vec<ReportRow>, HarnessError> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(|e| HarnessError::File(e.to_string())))
        .collect()
}

/// CSV table and JSON summary for a non-empty result set.
pub fn emit_report(results: &[TrialResult]) -> Result<(String, Summary), HarnessError> {
    if results.is_empty() {
        return Err(HarnessError::Config("no results to report".into()));
    }
    let rows: Vec<ReportRow> = results.iter().map(ReportRow::from).collect();
    Ok((to_csv(&rows)?, summarize(&rows)))
}

/// Reads a results JSON document (an array of trials) back into rows.
pub fn parse_results_json(text: &str) -> Result<Vec<TrialResult>, HarnessError> {
    serde_json::from_str(text).map_err(|e| HarnessError::File(e.to_string()))
}
