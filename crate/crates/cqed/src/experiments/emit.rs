//! Serialization of scenario results: a CSV time series and a JSON summary.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CqedError, Result};

use super::ScenarioResult;

/// Column order of the CSV time series. Optional columns are left empty for
/// scenarios that do not produce them.
pub const CSV_HEADER: &str = "t_s,norm,p_survival_exact,p_survival_eff,var_x,var_p,epr_sum_var";

fn cell(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.17e}"),
        None => String::new(),
    }
}

/// The sampled time series as CSV text, one row per sample.
pub fn csv_string(result: &ScenarioResult) -> String {
    let mut out = String::with_capacity(64 * (result.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in &result.rows {
        out.push_str(&format!(
            "{:.17e},{:.17e},{},{},{},{},{}\n",
            row.t_s,
            row.norm,
            cell(row.p_survival_exact),
            cell(row.p_survival_eff),
            cell(row.var_x),
            cell(row.var_p),
            cell(row.epr_sum_var),
        ));
    }
    out
}

/// The summary document (config echo, merits, provenance) as pretty JSON.
pub fn json_summary_string(result: &ScenarioResult) -> Result<String> {
    serde_json::to_string_pretty(&result.summary_document())
        .map_err(|e| CqedError::InvalidState(format!("summary serialization failed: {e}")))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CqedError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Write the CSV series to `path`.
pub fn write_csv(result: &ScenarioResult, path: &Path) -> Result<()> {
    write_text(path, &csv_string(result))
}

/// Write the JSON summary to `path`.
pub fn write_json(result: &ScenarioResult, path: &Path) -> Result<()> {
    write_text(path, &json_summary_string(result)?)
}

/// Write the selected outputs into `dir` as `<scenario_id>.csv` and
/// `<scenario_id>.json`, creating the directory first. Returns the paths
/// written.
pub fn write_outputs(
    result: &ScenarioResult,
    dir: &Path,
    csv: bool,
    json: bool,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| CqedError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();
    if csv {
        let path = dir.join(format!("{}.csv", result.config.scenario_id));
        write_csv(result, &path)?;
        written.push(path);
    }
    if json {
        let path = dir.join(format!("{}.json", result.config.scenario_id));
        write_json(result, &path)?;
        written.push(path);
    }
    Ok(written)
}
