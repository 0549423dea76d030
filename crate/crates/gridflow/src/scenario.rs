//! Scenario documents: a case (inline or by path) plus simulation settings.

use std::path::Path;

use gridflow_core::engine::{Scenario, SimConfig};
use serde::Deserialize;

use crate::case::{parse_case_doc, read_text, CaseDoc, LoadDoc, LoadError};

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineLimit {
    /// 1-based line number.
    pub line: usize,
    /// p.u.
    pub limit: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(default)]
    pub name: Option<String>,
    /// Path relative to the scenario file, or an inline case document.
    pub case: serde_json::Value,
    #[serde(default)]
    pub line_limits: Vec<LineLimit>,
    #[serde(default)]
    pub load_schedules: Vec<LoadDoc>,
    #[serde(default)]
    pub config: SimConfig,
}

fn resolve(doc: ScenarioDoc, path: &Path) -> Result<Scenario, LoadError> {
    let mut case_doc: CaseDoc = match doc.case {
        serde_json::Value::String(p) => {
            let full = path.parent().unwrap_or(Path::new(".")).join(p);
            parse_case_doc(&read_text(&full)?, &full)?
        }
        inline => {
            serde_json::from_value(inline).map_err(|source| LoadError::Json { path: path.to_path_buf(), source })?
        }
    };
    for l in doc.load_schedules {
        case_doc.set_load_schedule(l.bus, l.schedule);
    }
    let case_err = |source| LoadError::Case { path: path.to_path_buf(), source };
    let mut case = case_doc.build().map_err(case_err)?;
    for l in &doc.line_limits {
        case.set_line_limit(l.line, l.limit).map_err(case_err)?;
    }
    doc.config
        .validate(&case)
        .map_err(|source| LoadError::Config { path: path.to_path_buf(), source })?;
    Ok(Scenario { case, config: doc.config })
}

/// Parses a scenario; a case given by path is resolved against `path`'s directory.
pub fn parse_scenario(text: &str, path: &Path) -> Result<Scenario, LoadError> {
    let doc: ScenarioDoc =
        serde_json::from_str(text).map_err(|source| LoadError::Json { path: path.to_path_buf(), source })?;
    resolve(doc, path)
}

pub fn read_scenario(path: &Path) -> Result<Scenario, LoadError> {
    parse_scenario(&read_text(path)?, path)
}
