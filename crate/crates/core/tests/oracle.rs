use gridflow_core::grid::{CostCurve, GeneratorSpec, GridMatrices, LineSpec, LoadSpec, NetworkCase};
use gridflow_core::oracle::{centralized_dcopf_bruteforce, centralized_ed, total_cost};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gen(bus: u32, beta: f64, gamma: f64) -> GeneratorSpec {
    GeneratorSpec {
        bus,
        cost: CostCurve { alpha: 50.0, beta, gamma },
        pmin_mw: 10.0,
        pmax_mw: 300.0,
        lag_s: 0.5,
    }
}

fn line(from: u32, to: u32, x: f64, limit: f64) -> LineSpec {
    LineSpec { from, to, reactance: x, limit }
}

fn congested_case() -> NetworkCase {
    NetworkCase::new(
        100.0,
        vec![1, 2, 3, 4],
        vec![line(1, 2, 0.1, 10.0), line(2, 3, 0.2, 1.2), line(3, 4, 0.1, 10.0), line(4, 1, 0.15, 10.0)],
        vec![gen(1, 7.0, 0.002), gen(2, 8.0, 0.003), gen(4, 9.5, 0.001)],
        vec![LoadSpec { bus: 3, schedule_mw: vec![(0.0, 350.0)] }, LoadSpec { bus: 2, schedule_mw: vec![(0.0, 60.0)] }],
        &[(1, 2), (2, 4)],
        &[(1, 2), (2, 3), (3, 4)],
    )
    .unwrap()
}

#[test]
fn bruteforce_beats_random_feasible_points() {
    let case = congested_case();
    let grid = GridMatrices::build(&case).unwrap();
    let loads = [0.0, 60.0, 350.0, 0.0];
    let best = centralized_dcopf_bruteforce(&case, &grid, &loads, 1.0).unwrap();
    let gens = case.generators();
    let demand: f64 = loads.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 10_000 {
        let p1 = gens[0].pmin_mw + rng.random_range(0..=290) as f64;
        let p2 = gens[1].pmin_mw + rng.random_range(0..=290) as f64;
        let p3 = demand - p1 - p2;
        if !(gens[2].pmin_mw..=gens[2].pmax_mw).contains(&p3) {
            continue;
        }
        let outputs = [p1, p2, p3];
        let mut inj = DVector::from_iterator(4, loads.iter().map(|l| -l / 100.0));
        for (g, &p) in gens.iter().zip(&outputs) {
            inj[case.bus_index(g.bus).unwrap()] += p / 100.0;
        }
        let flows = &grid.ptdf * inj;
        if flows.iter().zip(grid.limits.iter()).any(|(f, lim)| f.abs() > *lim) {
            continue;
        }
        assert!(total_cost(gens, &outputs) >= best.cost - 1e-9, "{outputs:?} beats the oracle");
        checked += 1;
    }
    assert!(best.lambda.is_none(), "line 2-3 should bind");
}

#[test]
fn interior_dispatch_equalizes_marginal_cost() {
    let case = congested_case();
    let sol = centralized_ed(case.generators(), 410.0).unwrap();
    let lambda = sol.lambda.unwrap();
    for (g, &p) in case.generators().iter().zip(&sol.outputs) {
        if p > g.pmin_mw && p < g.pmax_mw {
            assert!((g.cost.marginal(p) - lambda).abs() < 1e-6);
        }
    }
    assert!((sol.outputs.iter().sum::<f64>() - 410.0).abs() < 1e-6);
}
