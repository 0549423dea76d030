//! JSON network cases.

use std::fs;
use std::path::{Path, PathBuf};

use gridflow_core::grid::{CostCurve, GeneratorSpec, LineSpec, LoadSpec, NetworkCase};
use gridflow_core::{CaseError, ConfigError};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Case {
        path: PathBuf,
        #[source]
        source: CaseError,
    },
    #[error("{path}: {source}")]
    Config {
        path: PathBuf,
        #[source]
        source: ConfigError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineDoc {
    pub from: u32,
    pub to: u32,
    pub x: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorDoc {
    pub bus: u32,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub pmin: f64,
    pub pmax: f64,
    /// Output lag time constant, s.
    #[serde(default = "default_lag")]
    pub lag_s: f64,
}

fn default_lag() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadDoc {
    pub bus: u32,
    /// `[time s, MW]` breakpoints.
    pub schedule: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommDoc {
    #[serde(default)]
    pub controllers: Vec<(u32, u32)>,
    #[serde(default)]
    pub meters: Vec<(u32, u32)>,
}

/// On-disk form of a network case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseDoc {
    pub base_mva: f64,
    pub buses: Vec<u32>,
    pub lines: Vec<LineDoc>,
    pub generators: Vec<GeneratorDoc>,
    pub loads: Vec<LoadDoc>,
    #[serde(default)]
    pub comm: CommDoc,
}

impl CaseDoc {
    /// Replaces the schedule of the load at `bus`, adding the load if absent.
    pub fn set_load_schedule(&mut self, bus: u32, schedule: Vec<(f64, f64)>) {
        match self.loads.iter_mut().find(|l| l.bus == bus) {
            Some(l) => l.schedule = schedule,
            None => self.loads.push(LoadDoc { bus, schedule }),
        }
    }

    pub fn build(&self) -> Result<NetworkCase, CaseError> {
        let lines = self
            .lines
            .iter()
            .map(|l| LineSpec { from: l.from, to: l.to, reactance: l.x, limit: l.limit })
            .collect();
        let generators = self
            .generators
            .iter()
            .map(|g| GeneratorSpec {
                bus: g.bus,
                cost: CostCurve { alpha: g.alpha, beta: g.beta, gamma: g.gamma },
                pmin_mw: g.pmin,
                pmax_mw: g.pmax,
                lag_s: g.lag_s,
            })
            .collect();
        let loads = self
            .loads
            .iter()
            .map(|l| LoadSpec { bus: l.bus, schedule_mw: l.schedule.clone() })
            .collect();
        NetworkCase::new(
            self.base_mva,
            self.buses.clone(),
            lines,
            generators,
            loads,
            &self.comm.controllers,
            &self.comm.meters,
        )
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })
}

pub fn parse_case_doc(text: &str, path: &Path) -> Result<CaseDoc, LoadError> {
    serde_json::from_str(text).map_err(|source| LoadError::Json { path: path.to_path_buf(), source })
}

/// Parses and validates a case document.
pub fn load_case(text: &str) -> Result<NetworkCase, LoadError> {
    let path = Path::new("<case>");
    parse_case_doc(text, path)?
        .build()
        .map_err(|source| LoadError::Case { path: path.to_path_buf(), source })
}

pub fn read_case(path: &Path) -> Result<NetworkCase, LoadError> {
    parse_case_doc(&read_text(path)?, path)?
        .build()
        .map_err(|source| LoadError::Case { path: path.to_path_buf(), source })
}
