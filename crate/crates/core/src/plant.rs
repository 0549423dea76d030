//! Ground-truth plant: lossless DC network, a single aggregate frequency and
//! first-order generator response.

use alloc::vec::Vec;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::grid::{GridMatrices, NetworkCase};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PlantParams {
    /// Aggregate inertia M, p.u.·s/Hz.
    pub inertia: f64,
    /// Load damping D, p.u./Hz.
    pub damping: f64,
    /// Rated frequency, Hz.
    pub f0: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self { inertia: 10.0, damping: 1.0, f0: 60.0 }
    }
}

/// `f′ = f + (τ/M)(ΣP_gen − ΣP_load − D(f − f₀))`.
pub fn step_frequency(f: f64, total_gen: f64, total_load: f64, params: &PlantParams, tau: f64) -> f64 {
    f + (tau / params.inertia) * (total_gen - total_load - params.damping * (f - params.f0))
}

/// First-order lag toward the references, clamped to the output limits.
pub fn step_generators(
    actual: &[f64],
    references: &[f64],
    tau: f64,
    lags: &[f64],
    limits: &[(f64, f64)],
) -> Vec<f64> {
    actual
        .iter()
        .zip(references)
        .zip(lags.iter().zip(limits))
        .map(|((&a, &r), (&lag, &(lo, hi)))| (a + (tau / lag) * (r - a)).clamp(lo, hi))
        .collect()
}

/// Nodal load draw at time `t` with optional Gaussian perturbation, p.u. per bus.
pub fn step_loads<R: Rng + ?Sized>(case: &NetworkCase, t: f64, sigma: f64, rng: &mut R) -> DVector<f64> {
    let mut draw = case.load_profile(t);
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("finite sigma");
        for l in case.loads() {
            let i = case.bus_index(l.bus).expect("validated load bus");
            draw[i] += normal.sample(rng);
        }
    }
    draw
}

#[derive(Debug, Clone)]
pub struct PlantState {
    /// Actual generator outputs, p.u.
    pub gen_output: Vec<f64>,
    /// Load draw per bus, p.u.
    pub load: DVector<f64>,
    pub frequency: f64,
    /// Angles of buses `2..n_b`, rad.
    pub theta: DVector<f64>,
    /// Line flows, p.u.
    pub flows: DVector<f64>,
    pub t: f64,
}

#[derive(Debug, Clone)]
pub struct Plant {
    params: PlantParams,
    gen_bus: Vec<usize>,
    /// Share of any power imbalance absorbed by each generator's inertia.
    participation: Vec<f64>,
    lags: Vec<f64>,
    limits: Vec<(f64, f64)>,
    state: PlantState,
}

impl Plant {
    /// Starts at time `t0` with the given generator outputs (p.u.) and the
    /// scheduled loads at `t0`.
    pub fn new(case: &NetworkCase, grid: &GridMatrices, params: PlantParams, gen_output: Vec<f64>, t0: f64) -> Self {
        let base = case.base_mva();
        let gens = case.generators();
        let gen_bus = gens
            .iter()
            .map(|g| case.bus_index(g.bus).expect("validated generator"))
            .collect();
        // Inertia taken proportional to rating.
        let rating: f64 = gens.iter().map(|g| g.pmax_mw.max(0.0)).sum();
        let participation = if rating > 0.0 {
            gens.iter().map(|g| g.pmax_mw.max(0.0) / rating).collect()
        } else {
            gens.iter().map(|_| 1.0 / gens.len() as f64).collect()
        };
        let lags = gens.iter().map(|g| g.lag_s).collect();
        let limits = gens.iter().map(|g| (g.pmin_mw / base, g.pmax_mw / base)).collect();
        let load = case.load_profile(t0);
        let mut plant = Self {
            params,
            gen_bus,
            participation,
            lags,
            limits,
            state: PlantState {
                gen_output,
                load,
                frequency: params.f0,
                theta: DVector::zeros(grid.n_buses() - 1),
                flows: DVector::zeros(grid.n_lines()),
                t: t0,
            },
        };
        plant.refresh_flows(grid);
        plant
    }

    pub fn state(&self) -> &PlantState {
        &self.state
    }

    pub fn params(&self) -> &PlantParams {
        &self.params
    }

    pub fn total_generation(&self) -> f64 {
        self.state.gen_output.iter().sum()
    }

    pub fn total_load(&self) -> f64 {
        self.state.load.sum()
    }

    /// Mechanical nodal injections `P_gen − P_load` per bus, p.u.
    pub fn injections(&self) -> DVector<f64> {
        let mut p = -&self.state.load;
        for (g, &bus) in self.gen_bus.iter().enumerate() {
            p[bus] += self.state.gen_output[g];
        }
        p
    }

    /// Electrical injections seen by the network: the imbalance is taken up by
    /// the generators' inertia in proportion to their share, so the result
    /// always sums to zero.
    pub fn balanced_injections(&self) -> DVector<f64> {
        let mut p = self.injections();
        let imbalance = p.sum();
        for (g, &bus) in self.gen_bus.iter().enumerate() {
            p[bus] -= imbalance * self.participation[g];
        }
        p
    }

    /// `θ = T·P_balanced`, `P_f = H_flow·θ`.
    pub fn solve_dc_flow(&self, grid: &GridMatrices, injections: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let mut balanced = injections.clone();
        let imbalance = balanced.sum();
        for (g, &bus) in self.gen_bus.iter().enumerate() {
            balanced[bus] -= imbalance * self.participation[g];
        }
        let theta = &grid.t * balanced;
        let flows = &grid.hflow * &theta;
        (theta, flows)
    }

    fn refresh_flows(&mut self, grid: &GridMatrices) {
        let (theta, flows) = self.solve_dc_flow(grid, &self.injections());
        self.state.theta = theta;
        self.state.flows = flows;
    }

    /// Advances one interval: frequency from the current imbalance, then the
    /// generators toward `references` (p.u.) and the loads to their scheduled
    /// value at the new time.
    pub fn advance<R: Rng + ?Sized>(
        &mut self,
        case: &NetworkCase,
        grid: &GridMatrices,
        references: &[f64],
        tau: f64,
        load_sigma: f64,
        rng: &mut R,
    ) {
        self.state.frequency = step_frequency(
            self.state.frequency,
            self.total_generation(),
            self.total_load(),
            &self.params,
            tau,
        );
        self.state.gen_output = step_generators(&self.state.gen_output, references, tau, &self.lags, &self.limits);
        self.state.t += tau;
        self.state.load = step_loads(case, self.state.t, load_sigma, rng);
        self.refresh_flows(grid);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn frequency_equilibrium_and_deficit() {
        let p = PlantParams::default();
        assert_eq!(step_frequency(60.0, 5.0, 5.0, &p, 0.01), 60.0);
        assert!(step_frequency(60.0, 4.9, 5.0, &p, 0.01) < 60.0);
    }

    #[test]
    fn frequency_settles_at_damped_offset() {
        let p = PlantParams::default();
        let mut f = 60.0;
        for _ in 0..20_000 {
            f = step_frequency(f, 4.9, 5.0, &p, 0.01);
        }
        // Fixed point: 0 = ΔP − D(f − f₀).
        assert!((f - (60.0 - 0.1 / p.damping)).abs() < 1e-9);
    }

    #[test]
    fn first_order_response() {
        let limits = [(0.0, 10.0)];
        assert_eq!(step_generators(&[2.0], &[2.0], 0.01, &[0.5], &limits), vec![2.0]);
        assert_eq!(step_generators(&[2.0], &[3.0], 0.5, &[0.5], &limits), vec![3.0]);
        let mut a = vec![0.0];
        for k in 1..=10 {
            a = step_generators(&a, &[1.0], 0.1, &[0.5], &limits);
            let closed = 1.0 - libm::pow(1.0 - 0.2, k as f64);
            assert!((a[0] - closed).abs() < 1e-12);
        }
        assert_eq!(step_generators(&[9.9], &[20.0], 0.5, &[0.5], &limits), vec![10.0]);
    }
}
