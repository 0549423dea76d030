//! Static network description and the matrices derived from it.
//!
//! Bus angles are indexed over the non-reference buses `2..n_b`; the first
//! listed bus is the reference with its angle pinned at zero. Injections and
//! flows are per-unit on the case base; generator economics stay in MW.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::CaseError;
use crate::graph::CommGraph;
use crate::numerics::{numerical_rank, pinv, DEFAULT_RANK_TOL};

/// Quadratic generation cost `α + βP + γP²` with `P` in MW.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CostCurve {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl CostCurve {
    /// Hourly cost in $/h at output `p_mw`.
    pub fn cost(&self, p_mw: f64) -> f64 {
        self.alpha + self.beta * p_mw + self.gamma * p_mw * p_mw
    }

    /// Incremental cost dF/dP in $/MWh.
    pub fn marginal(&self, p_mw: f64) -> f64 {
        self.beta + 2.0 * self.gamma * p_mw
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub bus: u32,
    pub cost: CostCurve,
    pub pmin_mw: f64,
    pub pmax_mw: f64,
    pub lag_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSpec {
    pub from: u32,
    pub to: u32,
    /// Series reactance, p.u.
    pub reactance: f64,
    /// Thermal flow limit, p.u.
    pub limit: f64,
}

/// Load schedule as `(time s, MW)` breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSpec {
    pub bus: u32,
    pub schedule_mw: Vec<(f64, f64)>,
}

/// Piecewise-linear schedule: linear between breakpoints, held flat before the
/// first and after the last.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    points: Vec<(f64, f64)>,
}

impl Schedule {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, &'static str> {
        if points.is_empty() {
            return Err("schedule is empty");
        }
        if points.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err("schedule has a non-finite entry");
        }
        if points.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err("schedule times must be non-decreasing");
        }
        Ok(Self { points })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            points: vec![(0.0, value)],
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let pts = &self.points;
        if t <= pts[0].0 {
            return pts[0].1;
        }
        for w in pts.windows(2) {
            let (t0, v0) = w[0];
            let (t1, v1) = w[1];
            if t <= t1 {
                if t1 == t0 {
                    return v1;
                }
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
            }
        }
        pts[pts.len() - 1].1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Load {
    pub bus: u32,
    /// Draw in p.u.
    pub schedule: Schedule,
}

/// Validated network case. Construct through [`NetworkCase::new`].
#[derive(Debug, Clone)]
pub struct NetworkCase {
    base_mva: f64,
    buses: Vec<u32>,
    lines: Vec<LineSpec>,
    generators: Vec<GeneratorSpec>,
    loads: Vec<Load>,
    /// Vertices are generator indices.
    controller_graph: CommGraph,
    /// Vertices are bus indices, one meter per bus.
    meter_graph: CommGraph,
}

impl NetworkCase {
    /// Checks every case invariant and converts load schedules to p.u.
    ///
    /// Communication edges are given as bus-id pairs: controller edges join
    /// generator buses, meter edges join arbitrary buses.
    pub fn new(
        base_mva: f64,
        buses: Vec<u32>,
        lines: Vec<LineSpec>,
        generators: Vec<GeneratorSpec>,
        loads: Vec<LoadSpec>,
        controller_edges: &[(u32, u32)],
        meter_edges: &[(u32, u32)],
    ) -> Result<Self, CaseError> {
        if !(base_mva.is_finite() && base_mva > 0.0) {
            return Err(CaseError::NonPositiveBase(base_mva));
        }
        if buses.is_empty() {
            return Err(CaseError::NoBuses);
        }
        for (k, b) in buses.iter().enumerate() {
            if buses[..k].contains(b) {
                return Err(CaseError::DuplicateBus(*b));
            }
        }
        let index = |bus: u32, what: &dyn Fn() -> alloc::string::String| {
            buses
                .iter()
                .position(|&b| b == bus)
                .ok_or_else(|| CaseError::UnknownBus { what: what(), bus })
        };

        let mut power_edges = Vec::with_capacity(lines.len());
        for (k, line) in lines.iter().enumerate() {
            let n = k + 1;
            let from = index(line.from, &|| format!("line {n}"))?;
            let to = index(line.to, &|| format!("line {n}"))?;
            if from == to {
                return Err(CaseError::SelfLoop { line: n, bus: line.from });
            }
            if !line.reactance.is_finite() || !line.limit.is_finite() {
                return Err(CaseError::NonFinite(format!("line {n}")));
            }
            if line.reactance <= 0.0 {
                return Err(CaseError::NonPositiveReactance {
                    line: n,
                    from: line.from,
                    to: line.to,
                    x: line.reactance,
                });
            }
            if line.limit <= 0.0 {
                return Err(CaseError::NonPositiveLimit {
                    line: n,
                    from: line.from,
                    to: line.to,
                    limit: line.limit,
                });
            }
            power_edges.push((from, to));
        }
        let power = CommGraph::from_edges(buses.len(), &power_edges);
        if let Some(v) = power.unreachable() {
            return Err(CaseError::Disconnected { graph: "power", bus: buses[v] });
        }

        if generators.is_empty() {
            return Err(CaseError::NoGenerators);
        }
        for (k, g) in generators.iter().enumerate() {
            index(g.bus, &|| format!("generator {}", k + 1))?;
            if generators[..k].iter().any(|h| h.bus == g.bus) {
                return Err(CaseError::DuplicateGenerator(g.bus));
            }
            let values = [g.cost.alpha, g.cost.beta, g.cost.gamma, g.pmin_mw, g.pmax_mw, g.lag_s];
            if values.iter().any(|v| !v.is_finite()) {
                return Err(CaseError::NonFinite(format!("generator at bus {}", g.bus)));
            }
            if g.pmin_mw > g.pmax_mw {
                return Err(CaseError::GeneratorLimits { bus: g.bus, pmin: g.pmin_mw, pmax: g.pmax_mw });
            }
            if g.cost.gamma <= 0.0 {
                return Err(CaseError::NonPositiveGamma { bus: g.bus, gamma: g.cost.gamma });
            }
            if g.lag_s <= 0.0 {
                return Err(CaseError::NonPositiveLag { bus: g.bus, lag: g.lag_s });
            }
        }

        let mut converted = Vec::with_capacity(loads.len());
        for (k, l) in loads.into_iter().enumerate() {
            index(l.bus, &|| format!("load {}", k + 1))?;
            let pts = l
                .schedule_mw
                .iter()
                .map(|&(t, mw)| (t, mw / base_mva))
                .collect();
            let schedule = Schedule::new(pts).map_err(|reason| CaseError::BadSchedule {
                bus: l.bus,
                reason: reason.to_string(),
            })?;
            converted.push(Load { bus: l.bus, schedule });
        }

        let gen_index = |bus: u32| generators.iter().position(|g| g.bus == bus);
        let mut ctrl_edges = Vec::with_capacity(controller_edges.len());
        for &(a, b) in controller_edges {
            let ia = gen_index(a).ok_or_else(|| CaseError::UnknownBus {
                what: "controller edge (no generator at bus)".to_string(),
                bus: a,
            })?;
            let ib = gen_index(b).ok_or_else(|| CaseError::UnknownBus {
                what: "controller edge (no generator at bus)".to_string(),
                bus: b,
            })?;
            ctrl_edges.push((ia, ib));
        }
        let controller_graph = CommGraph::from_edges(generators.len(), &ctrl_edges);
        if let Some(v) = controller_graph.unreachable() {
            return Err(CaseError::Disconnected {
                graph: "controller",
                bus: generators[v].bus,
            });
        }

        let mut m_edges = Vec::with_capacity(meter_edges.len());
        for &(a, b) in meter_edges {
            let ia = index(a, &|| "meter edge".to_string())?;
            let ib = index(b, &|| "meter edge".to_string())?;
            m_edges.push((ia, ib));
        }
        let meter_graph = CommGraph::from_edges(buses.len(), &m_edges);
        if let Some(v) = meter_graph.unreachable() {
            return Err(CaseError::Disconnected { graph: "meter", bus: buses[v] });
        }

        Ok(Self {
            base_mva,
            buses,
            lines,
            generators,
            loads: converted,
            controller_graph,
            meter_graph,
        })
    }

    pub fn base_mva(&self) -> f64 {
        self.base_mva
    }

    pub fn buses(&self) -> &[u32] {
        &self.buses
    }

    pub fn lines(&self) -> &[LineSpec] {
        &self.lines
    }

    pub fn generators(&self) -> &[GeneratorSpec] {
        &self.generators
    }

    pub fn loads(&self) -> &[Load] {
        &self.loads
    }

    pub fn controller_graph(&self) -> &CommGraph {
        &self.controller_graph
    }

    pub fn meter_graph(&self) -> &CommGraph {
        &self.meter_graph
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn n_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn bus_index(&self, bus: u32) -> Option<usize> {
        self.buses.iter().position(|&b| b == bus)
    }

    /// Generator index hosted at bus index `bus_idx`, if any.
    pub fn generator_at(&self, bus_idx: usize) -> Option<usize> {
        let id = self.buses[bus_idx];
        self.generators.iter().position(|g| g.bus == id)
    }

    /// Overrides the flow limit of 1-based line `line`.
    pub fn set_line_limit(&mut self, line: usize, limit: f64) -> Result<(), CaseError> {
        let n = self.lines.len();
        let spec = self
            .lines
            .get_mut(line.wrapping_sub(1))
            .ok_or(CaseError::UnknownLine { line, count: n })?;
        if !(limit.is_finite() && limit > 0.0) {
            return Err(CaseError::NonPositiveLimit {
                line,
                from: spec.from,
                to: spec.to,
                limit,
            });
        }
        spec.limit = limit;
        Ok(())
    }

    /// Nodal load draw per bus index at time `t`, p.u.
    pub fn load_profile(&self, t: f64) -> DVector<f64> {
        let mut out = DVector::zeros(self.n_buses());
        for l in &self.loads {
            let i = self.bus_index(l.bus).expect("validated load bus");
            out[i] += l.schedule.value_at(t);
        }
        out
    }
}

/// Measurement model of the meter network: one meter per bus measuring net
/// nodal injection, `z = Hobs θ + e` with `e ~ N(0, R)`.
#[derive(Debug, Clone)]
pub struct ObservationModel {
    pub hobs: DMatrix<f64>,
    /// Diagonal of `R`.
    pub r_diag: DVector<f64>,
}

/// Everything the distributed algorithms need from the network topology.
#[derive(Debug, Clone)]
pub struct GridMatrices {
    /// Full nodal susceptance matrix, n_b × n_b.
    pub bfull: DMatrix<f64>,
    /// Injection-to-angle map, (n_b−1) × n_b.
    pub t: DMatrix<f64>,
    /// Angle-to-flow map, m_l × (n_b−1).
    pub hflow: DMatrix<f64>,
    /// Columns of `t` at generator buses, in generator order.
    pub tg: DMatrix<f64>,
    /// Columns of `t` at load columns, in `load_columns` order.
    pub tl: DMatrix<f64>,
    /// Bus index of every column of `tl`.
    pub load_columns: Vec<usize>,
    /// `hflow · tg`, flow sensitivity to generator injections.
    pub gen_sensitivity: DMatrix<f64>,
    /// `hflow · tl`, flow sensitivity to load-column injections.
    pub load_sensitivity: DMatrix<f64>,
    /// `hflow · t`, flow sensitivity to every nodal injection.
    pub ptdf: DMatrix<f64>,
    pub limits: DVector<f64>,
    pub observation: ObservationModel,
}

impl GridMatrices {
    pub fn build(case: &NetworkCase) -> Result<Self, CaseError> {
        let nb = case.n_buses();
        let ml = case.n_lines();
        let mut bfull = DMatrix::zeros(nb, nb);
        let mut hflow = DMatrix::zeros(ml, nb - 1);
        let mut limits = DVector::zeros(ml);
        for (u, line) in case.lines().iter().enumerate() {
            let i = case.bus_index(line.from).expect("validated line");
            let j = case.bus_index(line.to).expect("validated line");
            let b = 1.0 / line.reactance;
            bfull[(i, i)] += b;
            bfull[(j, j)] += b;
            bfull[(i, j)] -= b;
            bfull[(j, i)] -= b;
            if i > 0 {
                hflow[(u, i - 1)] = b;
            }
            if j > 0 {
                hflow[(u, j - 1)] = -b;
            }
            limits[u] = line.limit;
        }

        let reduced = bfull.columns(1, nb - 1).into_owned();
        let rank = numerical_rank(&reduced, DEFAULT_RANK_TOL);
        if rank != nb - 1 {
            return Err(CaseError::RankDeficient { rank, expected: nb - 1 });
        }
        let t = pinv(&reduced, DEFAULT_RANK_TOL);

        let gen_cols: Vec<usize> = case
            .generators()
            .iter()
            .map(|g| case.bus_index(g.bus).expect("validated generator"))
            .collect();
        let has_load: Vec<bool> = (0..nb)
            .map(|i| case.loads().iter().any(|l| case.bus_index(l.bus) == Some(i)))
            .collect();
        let load_columns: Vec<usize> = (0..nb)
            .filter(|&i| has_load[i] || case.generator_at(i).is_none())
            .collect();
        let tg = t.select_columns(gen_cols.iter());
        let tl = t.select_columns(load_columns.iter());
        let gen_sensitivity = &hflow * &tg;
        let load_sensitivity = &hflow * &tl;
        let ptdf = &hflow * &t;

        let observation = ObservationModel {
            hobs: reduced,
            r_diag: DVector::zeros(nb),
        };

        Ok(Self {
            bfull,
            t,
            hflow,
            tg,
            tl,
            load_columns,
            gen_sensitivity,
            load_sensitivity,
            ptdf,
            limits,
            observation,
        })
    }

    /// Sets `R = σ² I` on the observation model.
    pub fn with_meter_sigma(mut self, sigma: f64) -> Self {
        self.observation.r_diag.fill(sigma * sigma);
        self
    }

    pub fn n_buses(&self) -> usize {
        self.bfull.nrows()
    }

    pub fn n_lines(&self) -> usize {
        self.hflow.nrows()
    }

    pub fn n_generators(&self) -> usize {
        self.tg.ncols()
    }

    pub fn n_load_columns(&self) -> usize {
        self.tl.ncols()
    }

    /// Angles of buses `2..n_b` for a nodal injection vector.
    pub fn angles(&self, injections: &DVector<f64>) -> DVector<f64> {
        &self.t * injections
    }

    /// Full angle vector with the reference angle prepended.
    pub fn full_angles(&self, theta: &DVector<f64>) -> DVector<f64> {
        let mut full = DVector::zeros(theta.len() + 1);
        full.rows_mut(1, theta.len()).copy_from(theta);
        full
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    pub(crate) fn two_bus() -> NetworkCase {
        NetworkCase::new(
            100.0,
            vec![1, 2],
            vec![LineSpec { from: 1, to: 2, reactance: 0.5, limit: 2.0 }],
            vec![GeneratorSpec {
                bus: 1,
                cost: CostCurve { alpha: 0.0, beta: 8.0, gamma: 0.001 },
                pmin_mw: 0.0,
                pmax_mw: 500.0,
                lag_s: 0.5,
            }],
            vec![LoadSpec { bus: 2, schedule_mw: vec![(0.0, 100.0)] }],
            &[],
            &[(1, 2)],
        )
        .unwrap()
    }

    #[test]
    fn two_bus_matrices() {
        let case = two_bus();
        assert_eq!(case.n_buses(), 2);
        assert_eq!(case.n_lines(), 1);
        let g = GridMatrices::build(&case).unwrap();
        assert!((g.bfull[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((g.bfull[(0, 1)] + 2.0).abs() < 1e-15);
        assert_eq!(g.t.shape(), (1, 2));
        assert!((g.t[(0, 0)] + 0.25).abs() < 1e-15);
        assert!((g.t[(0, 1)] - 0.25).abs() < 1e-15);

        let p = dvector![-1.0, 1.0];
        let theta = g.angles(&p);
        assert!((theta[0] - 0.5).abs() < 1e-15);
        let flow = &g.hflow * &theta;
        assert!((flow[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn loads_convert_to_per_unit() {
        let case = two_bus();
        let profile = case.load_profile(3.0);
        assert_eq!(profile[0], 0.0);
        assert!((profile[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_reactance_names_line() {
        let err = NetworkCase::new(
            100.0,
            vec![1, 2, 3],
            vec![
                LineSpec { from: 1, to: 2, reactance: 0.1, limit: 1.0 },
                LineSpec { from: 2, to: 3, reactance: 0.0, limit: 1.0 },
            ],
            vec![GeneratorSpec {
                bus: 1,
                cost: CostCurve { alpha: 0.0, beta: 8.0, gamma: 0.001 },
                pmin_mw: 0.0,
                pmax_mw: 500.0,
                lag_s: 0.5,
            }],
            vec![],
            &[],
            &[(1, 2), (2, 3)],
        )
        .unwrap_err();
        assert_eq!(
            err,
            CaseError::NonPositiveReactance { line: 2, from: 2, to: 3, x: 0.0 }
        );
    }

    #[test]
    fn disconnected_power_graph_is_rejected() {
        let err = NetworkCase::new(
            100.0,
            vec![1, 2, 3],
            vec![LineSpec { from: 1, to: 2, reactance: 0.1, limit: 1.0 }],
            vec![GeneratorSpec {
                bus: 1,
                cost: CostCurve { alpha: 0.0, beta: 8.0, gamma: 0.001 },
                pmin_mw: 0.0,
                pmax_mw: 500.0,
                lag_s: 0.5,
            }],
            vec![],
            &[],
            &[(1, 2), (2, 3)],
        )
        .unwrap_err();
        assert_eq!(err, CaseError::Disconnected { graph: "power", bus: 3 });
    }

    #[test]
    fn schedule_interpolates_ramps() {
        let s = Schedule::new(vec![(0.0, 3.0), (5.0, 3.0), (7.0, 4.0)]).unwrap();
        assert_eq!(s.value_at(-1.0), 3.0);
        assert_eq!(s.value_at(5.0), 3.0);
        assert!((s.value_at(6.0) - 3.5).abs() < 1e-15);
        assert_eq!(s.value_at(100.0), 4.0);
        assert!(Schedule::new(vec![(1.0, 0.0), (0.5, 0.0)]).is_err());
    }

    #[test]
    fn mixed_bus_gets_both_columns() {
        let case = NetworkCase::new(
            100.0,
            vec![1, 2, 3],
            vec![
                LineSpec { from: 1, to: 2, reactance: 0.1, limit: 1.0 },
                LineSpec { from: 2, to: 3, reactance: 0.2, limit: 1.0 },
            ],
            vec![
                GeneratorSpec {
                    bus: 1,
                    cost: CostCurve { alpha: 0.0, beta: 8.0, gamma: 0.001 },
                    pmin_mw: 0.0,
                    pmax_mw: 500.0,
                    lag_s: 0.5,
                },
                GeneratorSpec {
                    bus: 3,
                    cost: CostCurve { alpha: 0.0, beta: 8.0, gamma: 0.001 },
                    pmin_mw: 0.0,
                    pmax_mw: 500.0,
                    lag_s: 0.5,
                },
            ],
            vec![LoadSpec { bus: 3, schedule_mw: vec![(0.0, 50.0)] }],
            &[(1, 3)],
            &[(1, 2), (2, 3)],
        )
        .unwrap();
        let g = GridMatrices::build(&case).unwrap();
        // Bus 2 has neither generator nor load, bus 3 has both.
        assert_eq!(g.load_columns, vec![1, 2]);
        assert_eq!(g.tg.ncols(), 2);
    }
}
