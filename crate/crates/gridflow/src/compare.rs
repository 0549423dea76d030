//! Distributed end state against a centralized dispatch.

use gridflow_core::engine::Trace;
use gridflow_core::grid::{GridMatrices, NetworkCase};
use gridflow_core::oracle::{centralized_dcopf_bruteforce, centralized_ed, total_cost, DispatchSolution};
use gridflow_core::{CaseError, OracleError};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CompareError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub generator: usize,
    pub bus: u32,
    pub distributed_mw: f64,
    pub oracle_mw: f64,
    pub difference_mw: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    /// `dcopf_bruteforce` when line limits are included, else `economic_dispatch`.
    pub oracle: &'static str,
    pub time_s: f64,
    pub rows: Vec<CompareRow>,
    pub distributed_cost: f64,
    pub oracle_cost: f64,
    /// `(distributed − oracle) / oracle`, percent.
    pub cost_gap_pct: f64,
    pub oracle_lambda: Option<f64>,
    pub distributed_lambda: Vec<f64>,
}

/// Centralized solution for the scheduled loads at time `t`. Exhaustive
/// DC-OPF on a 1 MW grid when the fleet is small enough, plain economic
/// dispatch otherwise.
pub fn oracle_at(case: &NetworkCase, t: f64) -> Result<(&'static str, DispatchSolution), CompareError> {
    let base = case.base_mva();
    let loads_mw: Vec<f64> = case.load_profile(t).iter().map(|v| v * base).collect();
    if case.n_generators() <= 3 {
        let grid = GridMatrices::build(case)?;
        Ok(("dcopf_bruteforce", centralized_dcopf_bruteforce(case, &grid, &loads_mw, 1.0)?))
    } else {
        let demand = loads_mw.iter().sum();
        Ok(("economic_dispatch", centralized_ed(case.generators(), demand)?))
    }
}

pub fn compare(case: &NetworkCase, trace: &Trace) -> Result<CompareReport, CompareError> {
    let last = trace.last().ok_or(CompareError::EmptyTrace)?;
    let (oracle, solution) = oracle_at(case, last.t)?;
    let rows = case
        .generators()
        .iter()
        .enumerate()
        .map(|(i, g)| CompareRow {
            generator: i + 1,
            bus: g.bus,
            distributed_mw: last.actual[i],
            oracle_mw: solution.outputs[i],
            difference_mw: last.actual[i] - solution.outputs[i],
        })
        .collect();
    let distributed_cost = total_cost(case.generators(), &last.actual);
    Ok(CompareReport {
        oracle,
        time_s: last.t,
        rows,
        distributed_cost,
        oracle_cost: solution.cost,
        cost_gap_pct: 100.0 * (distributed_cost - solution.cost) / solution.cost,
        oracle_lambda: solution.lambda,
        distributed_lambda: last.lambda.clone(),
    })
}
