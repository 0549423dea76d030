//! Centralized reference solvers. Deliberately simple; used to check the
//! distributed algorithms, never inside them.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DVector;

use crate::ded::{reference_from_lambda, GeneratorParams};
use crate::error::OracleError;
use crate::grid::{GeneratorSpec, GridMatrices, NetworkCase};

#[derive(Debug, Clone, PartialEq)]
pub struct DispatchSolution {
    /// Output per generator, MW.
    pub outputs: Vec<f64>,
    /// System incremental cost; undefined when line limits bind.
    pub lambda: Option<f64>,
    /// Total cost, $/h.
    pub cost: f64,
    /// Generators sitting on an output limit, and lines on their flow limit.
    pub binding: Vec<Binding>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    GeneratorMin(usize),
    GeneratorMax(usize),
    Line(usize),
}

pub fn total_cost(gens: &[GeneratorSpec], outputs: &[f64]) -> f64 {
    gens.iter().zip(outputs).map(|(g, &p)| g.cost.cost(p)).sum()
}

fn generator_bindings(gens: &[GeneratorSpec], outputs: &[f64], tol: f64) -> Vec<Binding> {
    let mut out = Vec::new();
    for (i, (g, &p)) in gens.iter().zip(outputs).enumerate() {
        if p <= g.pmin_mw + tol {
            out.push(Binding::GeneratorMin(i));
        } else if p >= g.pmax_mw - tol {
            out.push(Binding::GeneratorMax(i));
        }
    }
    out
}

/// Economic dispatch by bisection on λ with clamped outputs.
pub fn centralized_ed(gens: &[GeneratorSpec], demand_mw: f64) -> Result<DispatchSolution, OracleError> {
    let min: f64 = gens.iter().map(|g| g.pmin_mw).sum();
    let max: f64 = gens.iter().map(|g| g.pmax_mw).sum();
    if !(demand_mw >= min - 1e-9 && demand_mw <= max + 1e-9) {
        return Err(OracleError::InfeasibleDemand { demand: demand_mw, min, max });
    }
    let params: Vec<GeneratorParams> = gens.iter().map(GeneratorParams::from).collect();
    let supply = |lambda: f64| -> f64 { params.iter().map(|g| reference_from_lambda(lambda, g)).sum() };

    let mut lo = gens
        .iter()
        .map(|g| g.cost.marginal(g.pmin_mw))
        .fold(f64::INFINITY, f64::min);
    let mut hi = gens
        .iter()
        .map(|g| g.cost.marginal(g.pmax_mw))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut lambda = 0.5 * (lo + hi);
    for _ in 0..200 {
        lambda = 0.5 * (lo + hi);
        let mismatch = supply(lambda) - demand_mw;
        if mismatch.abs() < 1e-9 {
            break;
        }
        if mismatch > 0.0 {
            hi = lambda;
        } else {
            lo = lambda;
        }
    }
    let outputs: Vec<f64> = params.iter().map(|g| reference_from_lambda(lambda, g)).collect();
    Ok(DispatchSolution {
        cost: total_cost(gens, &outputs),
        binding: generator_bindings(gens, &outputs, 1e-9),
        outputs,
        lambda: Some(lambda),
    })
}

/// Exhaustive DC-OPF over a grid of generator outputs.
///
/// All but the last generator are enumerated on `step_mw` increments between
/// their limits; the last one closes the power balance exactly. Points that
/// violate an output limit or `|H·T·P| ≤ P_f^max` are discarded.
pub fn centralized_dcopf_bruteforce(
    case: &NetworkCase,
    grid: &GridMatrices,
    loads_mw: &[f64],
    step_mw: f64,
) -> Result<DispatchSolution, OracleError> {
    let gens = case.generators();
    let ng = gens.len();
    if ng > 3 {
        return Err(OracleError::TooManyGenerators(ng));
    }
    if !(step_mw > 0.0 && step_mw.is_finite()) {
        return Err(OracleError::BadStep(step_mw));
    }
    if loads_mw.len() != case.n_buses() {
        return Err(OracleError::LoadCount { expected: case.n_buses(), found: loads_mw.len() });
    }
    let base = case.base_mva();
    let demand: f64 = loads_mw.iter().sum();
    let gen_bus: Vec<usize> = gens.iter().map(|g| case.bus_index(g.bus).expect("validated")).collect();

    let counts: Vec<usize> = gens[..ng - 1]
        .iter()
        .map(|g| libm::floor((g.pmax_mw - g.pmin_mw) / step_mw + 1e-9) as usize + 1)
        .collect();

    let mut best: Option<(f64, Vec<f64>, DVector<f64>)> = None;
    let mut idx = vec![0usize; ng.saturating_sub(1)];
    loop {
        let mut outputs: Vec<f64> = idx
            .iter()
            .zip(gens)
            .map(|(&k, g)| g.pmin_mw + k as f64 * step_mw)
            .collect();
        let last = demand - outputs.iter().sum::<f64>();
        let lg = &gens[ng - 1];
        if last >= lg.pmin_mw - 1e-9 && last <= lg.pmax_mw + 1e-9 {
            outputs.push(last.clamp(lg.pmin_mw, lg.pmax_mw));
            let mut p = DVector::from_iterator(loads_mw.len(), loads_mw.iter().map(|l| -l / base));
            for (g, &bus) in gen_bus.iter().enumerate() {
                p[bus] += outputs[g] / base;
            }
            let flows = &grid.ptdf * p;
            let feasible = flows.iter().zip(grid.limits.iter()).all(|(f, lim)| f.abs() <= lim + 1e-12);
            if feasible {
                let cost = total_cost(gens, &outputs);
                if best.as_ref().is_none_or(|(c, _, _)| cost < *c) {
                    best = Some((cost, outputs, flows));
                }
            }
        }
        // Odometer increment over the enumerated generators.
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                let (cost, outputs, flows) = best.ok_or(OracleError::EmptyFeasibleSet)?;
                let mut binding = generator_bindings(gens, &outputs, 1e-9);
                for (u, (f, lim)) in flows.iter().zip(grid.limits.iter()).enumerate() {
                    if f.abs() >= lim - step_mw / base {
                        binding.push(Binding::Line(u));
                    }
                }
                let lambda = if binding.iter().any(|b| matches!(b, Binding::Line(_))) {
                    None
                } else {
                    centralized_ed(gens, demand).ok().and_then(|s| s.lambda)
                };
                return Ok(DispatchSolution { outputs, lambda, cost, binding });
            }
            idx[pos] += 1;
            if idx[pos] < counts[pos] {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{CostCurve, LineSpec, LoadSpec};

    fn gen(bus: u32, beta: f64, gamma: f64, pmin: f64, pmax: f64) -> GeneratorSpec {
        GeneratorSpec {
            bus,
            cost: CostCurve { alpha: 0.0, beta, gamma },
            pmin_mw: pmin,
            pmax_mw: pmax,
            lag_s: 0.5,
        }
    }

    #[test]
    fn two_generator_hand_solution() {
        // 8 + 0.002 P1 = 7.8 + 0.002 P2, P1 + P2 = 500 → P = (200, 300), λ = 8.4.
        let gens = [gen(1, 8.0, 0.001, 0.0, 1000.0), gen(2, 7.8, 0.001, 0.0, 1000.0)];
        let s = centralized_ed(&gens, 500.0).unwrap();
        assert!((s.outputs[0] - 200.0).abs() < 1e-6);
        assert!((s.outputs[1] - 300.0).abs() < 1e-6);
        assert!((s.lambda.unwrap() - 8.4).abs() < 1e-9);
    }

    #[test]
    fn demand_at_minimum() {
        let gens = [gen(1, 8.0, 0.001, 100.0, 1000.0), gen(2, 7.8, 0.001, 50.0, 1000.0)];
        let s = centralized_ed(&gens, 150.0).unwrap();
        assert!((s.outputs[0] - 100.0).abs() < 1e-6);
        assert!((s.outputs[1] - 50.0).abs() < 1e-6);
        assert!(matches!(
            centralized_ed(&gens, 10.0),
            Err(OracleError::InfeasibleDemand { .. })
        ));
    }

    #[test]
    fn single_generator() {
        let gens = [gen(1, 8.0, 0.002, 0.0, 1000.0)];
        let s = centralized_ed(&gens, 300.0).unwrap();
        assert!((s.outputs[0] - 300.0).abs() < 1e-6);
        assert!((s.lambda.unwrap() - (8.0 + 2.0 * 0.002 * 300.0)).abs() < 1e-8);
    }

    fn three_bus(limit_13: f64) -> NetworkCase {
        NetworkCase::new(
            100.0,
            vec![1, 2, 3],
            vec![
                LineSpec { from: 1, to: 2, reactance: 0.1, limit: 10.0 },
                LineSpec { from: 1, to: 3, reactance: 0.1, limit: limit_13 },
                LineSpec { from: 2, to: 3, reactance: 0.1, limit: 10.0 },
            ],
            vec![gen(1, 8.0, 0.002, 0.0, 500.0), gen(2, 9.0, 0.002, 0.0, 500.0)],
            vec![LoadSpec { bus: 3, schedule_mw: vec![(0.0, 300.0)] }],
            &[(1, 2)],
            &[(1, 2), (2, 3), (1, 3)],
        )
        .unwrap()
    }

    #[test]
    fn bruteforce_matches_ed_when_unconstrained() {
        let case = three_bus(10.0);
        let grid = GridMatrices::build(&case).unwrap();
        let loads = [0.0, 0.0, 300.0];
        let bf = centralized_dcopf_bruteforce(&case, &grid, &loads, 1.0).unwrap();
        let ed = centralized_ed(case.generators(), 300.0).unwrap();
        for (a, b) in bf.outputs.iter().zip(&ed.outputs) {
            assert!((a - b).abs() <= 1.0);
        }
        assert!(bf.cost >= ed.cost - 1e-6);
    }

    #[test]
    fn binding_line_raises_cost() {
        let case = three_bus(1.5);
        let grid = GridMatrices::build(&case).unwrap();
        let loads = [0.0, 0.0, 300.0];
        let bf = centralized_dcopf_bruteforce(&case, &grid, &loads, 1.0).unwrap();
        let ed = centralized_ed(case.generators(), 300.0).unwrap();
        assert!(bf.cost > ed.cost + 1.0);
        assert!(bf.binding.contains(&Binding::Line(1)));
        assert!(bf.lambda.is_none());
    }

    #[test]
    fn infeasible_limits_reported() {
        let case = three_bus(0.01);
        let grid = GridMatrices::build(&case).unwrap();
        let loads = [0.0, 0.0, 300.0];
        assert_eq!(
            centralized_dcopf_bruteforce(&case, &grid, &loads, 1.0),
            Err(OracleError::EmptyFeasibleSet)
        );
    }
}
