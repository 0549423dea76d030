//! Synchronous-round orchestration of meters, controllers and plant.
//!
//! Each step runs the meters first (sample, propagate, estimate), then every
//! controller on what its attached meter and its neighbours reported, then
//! advances the plant and records the result.

mod config;
mod exchange;
mod trace;

pub use config::{CommConfig, ConstraintConfig, Decimation, DseConfig, Scenario, SimConfig};
pub use exchange::{Exchange, Inbox};
pub use trace::{StepRecord, Trace};

use alloc::rc::Rc;
use alloc::vec::Vec;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::constraint::{constrain_step, ConstraintInputs, ConstraintState, Mode};
use crate::ded::{predict_gen_updates, reference_from_lambda, ControllerState, GeneratorParams};
use crate::dse::{MeterState, StateEstimator};
use crate::error::ConfigError;
use crate::forecast::{check_overflow, predict_line_flows_with, LoadForecaster, OverflowFlags};
use crate::grid::{GridMatrices, NetworkCase};
use crate::oracle::{centralized_ed, total_cost};
use crate::plant::Plant;

const STREAM_LOAD: u64 = 1;
const STREAM_METER: u64 = 2;
const STREAM_CONTROLLER_LINKS: u64 = 3;
const STREAM_METER_LINKS: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// One generator controller together with its attached meter and the
/// constraint layer it runs.
#[derive(Debug, Clone)]
pub struct Controller {
    pub ded: ControllerState,
    /// Bus index of the attached meter.
    pub meter: usize,
    pub constraint: ConstraintState,
    pub forecaster: LoadForecaster,
    /// Line flows from the attached meter's latest estimate, p.u.
    pub est_flows: DVector<f64>,
}

#[derive(Debug, Clone, Default)]
struct StepSummary {
    mode: Mode,
    flags: Vec<i8>,
    residual: Option<f64>,
}

pub struct Simulation {
    case: NetworkCase,
    grid: GridMatrices,
    config: SimConfig,
    estimator: StateEstimator,
    plant: Plant,
    fleet: Vec<GeneratorParams>,
    gen_bus: Vec<usize>,
    controllers: Vec<Controller>,
    meters: Vec<MeterState>,
    readings: DVector<f64>,
    lambda_net: Exchange<f64>,
    meter_net: Exchange<Rc<DVector<f64>>>,
    load_rng: ChaCha8Rng,
    meter_rng: ChaCha8Rng,
    meter_noise: Option<Normal<f64>>,
    last: StepSummary,
    step: usize,
}

impl Simulation {
    /// Validates the scenario and sets up the economic operating point for the
    /// loads at `t = 0`: all controllers agree on the optimal λ, references and
    /// outputs sit at the optimal dispatch and the frequency is rated.
    pub fn new(scenario: Scenario) -> Result<Self, ConfigError> {
        let Scenario { case, config } = scenario;
        config.validate(&case)?;
        let grid = GridMatrices::build(&case)?.with_meter_sigma(config.dse.meter_sigma);
        let estimator = StateEstimator::new(&grid.observation)?;
        let base = case.base_mva();
        let gens = case.generators();

        let demand = case.load_profile(0.0).sum() * base;
        let dispatch = centralized_ed(gens, demand).map_err(ConfigError::Initialization)?;
        let lambda0 = dispatch.lambda.unwrap_or(0.0);
        let outputs_pu: Vec<f64> = dispatch.outputs.iter().map(|p| p / base).collect();
        let plant = Plant::new(&case, &grid, config.plant, outputs_pu, 0.0);

        let fleet: Vec<GeneratorParams> = gens.iter().map(GeneratorParams::from).collect();
        let gen_bus: Vec<usize> = gens
            .iter()
            .map(|g| case.bus_index(g.bus).expect("validated generator"))
            .collect();
        let meter_of: Vec<usize> = match &config.attachment {
            Some(att) => att.iter().map(|&b| case.bus_index(b).expect("validated attachment")).collect(),
            None => gen_bus.clone(),
        };

        let control_tau = config.tau * config.decimation.control as f64;
        let ctrl_weights = case.controller_graph().metropolis_weights();
        let lines = grid.n_lines();
        let load_cols = grid.n_load_columns();
        let controllers = ctrl_weights
            .into_iter()
            .enumerate()
            .map(|(i, weights)| Controller {
                ded: ControllerState {
                    index: i,
                    lambda: lambda0,
                    prev_freq_error: 0.0,
                    reference: dispatch.outputs[i],
                    gains: config.gains,
                    weights,
                    tau: control_tau,
                    f0: config.plant.f0,
                    fleet: fleet.clone(),
                },
                meter: meter_of[i],
                constraint: ConstraintState::new(lines, config.constraint.penalty),
                forecaster: LoadForecaster::new(
                    load_cols,
                    config.constraint.ar_window,
                    config.constraint.ar_refit_every,
                ),
                est_flows: DVector::zeros(lines),
            })
            .collect();

        let meter_noise = if config.dse.meter_sigma > 0.0 {
            Some(Normal::new(0.0, config.dse.meter_sigma).expect("validated sigma"))
        } else {
            None
        };
        let lambda_net = Exchange::new(
            case.controller_graph(),
            config.comm.drop_probability,
            config.comm.delay_rounds,
            stream(config.seed, STREAM_CONTROLLER_LINKS),
        );
        let meter_net = Exchange::new(
            case.meter_graph(),
            config.comm.drop_probability,
            config.comm.delay_rounds,
            stream(config.seed, STREAM_METER_LINKS),
        );
        let nb = case.n_buses();
        let mut sim = Self {
            grid,
            estimator,
            plant,
            fleet,
            gen_bus,
            controllers,
            meters: Vec::new(),
            readings: DVector::zeros(nb),
            lambda_net,
            meter_net,
            load_rng: stream(config.seed, STREAM_LOAD),
            meter_rng: stream(config.seed, STREAM_METER),
            meter_noise,
            last: StepSummary { mode: Mode::Normal, flags: alloc::vec![0; lines], residual: None },
            step: 0,
            case,
            config,
        };

        sim.sample_meters();
        let meter_weights = sim.case.meter_graph().metropolis_weights();
        sim.meters = meter_weights
            .into_iter()
            .enumerate()
            .map(|(i, w)| MeterState::new(i, nb, sim.readings[i], w, sim.config.dse.step))
            .collect();
        for _ in 0..sim.config.dse.warmup_rounds {
            sim.propagate_round();
        }
        for c in 0..sim.controllers.len() {
            let z = sim.meters[sim.controllers[c].meter].z.clone();
            let flows = sim.flows_from(&z);
            let level = sim.load_levels(&z);
            let ctrl = &mut sim.controllers[c];
            ctrl.est_flows = flows;
            ctrl.forecaster.observe(&level);
        }
        Ok(sim)
    }

    pub fn case(&self) -> &NetworkCase {
        &self.case
    }

    pub fn grid(&self) -> &GridMatrices {
        &self.grid
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn plant(&self) -> &Plant {
        &self.plant
    }

    pub fn controllers(&self) -> &[Controller] {
        &self.controllers
    }

    pub fn meters(&self) -> &[MeterState] {
        &self.meters
    }

    /// Steps taken so far.
    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// Line flows meter `i` would report from its current measurement vector.
    pub fn meter_flow_estimate(&self, i: usize) -> DVector<f64> {
        self.flows_from(&self.meters[i].z)
    }

    fn flows_from(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.grid.hflow * self.estimator.estimate(z)
    }

    fn sample_meters(&mut self) {
        self.readings = self.plant.balanced_injections();
        if let Some(noise) = &self.meter_noise {
            for r in self.readings.iter_mut() {
                *r += noise.sample(&mut self.meter_rng);
            }
        }
    }

    fn propagate_round(&mut self) {
        let outbox: Vec<Rc<DVector<f64>>> = self
            .meters
            .iter()
            .map(|m| Rc::new(m.refreshed(self.readings[m.index])))
            .collect();
        let inboxes = self.meter_net.round(&outbox);
        for (m, inbox) in self.meters.iter_mut().zip(&inboxes) {
            let heard: Vec<(usize, &DVector<f64>)> = inbox.iter().map(|(j, z)| (*j, &**z)).collect();
            m.dse_step(&heard, self.readings[m.index]);
        }
    }

    /// Load-column injections as controller `c` reads them from `z`. A load
    /// sharing its bus with a generator cannot be separated from the metered
    /// injection, so its level is held at zero.
    fn load_levels(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.grid.load_columns.len(),
            self.grid.load_columns.iter().map(|&bus| match self.case.generator_at(bus) {
                Some(_) => 0.0,
                None => z[bus],
            }),
        )
    }

    /// Scheduled load-column injection change over the next control interval.
    fn scheduled_load_delta(&self) -> DVector<f64> {
        let t = self.plant.state().t;
        let horizon = self.config.tau * self.config.decimation.control as f64;
        let now = self.case.load_profile(t);
        let next = self.case.load_profile(t + horizon);
        DVector::from_iterator(
            self.grid.load_columns.len(),
            self.grid.load_columns.iter().map(|&b| -(next[b] - now[b])),
        )
    }

    fn control_round(&mut self) -> StepSummary {
        let base = self.case.base_mva();
        let cfg = self.config.constraint.clone();
        let outbox: Vec<f64> = self.controllers.iter().map(|c| c.ded.lambda).collect();
        let inboxes = self.lambda_net.round(&outbox);
        let f_meas = self.plant.state().frequency;
        let oracle_delta = (cfg.enabled && cfg.oracle_load_forecast).then(|| self.scheduled_load_delta());

        let mut summary = StepSummary {
            mode: Mode::Normal,
            flags: alloc::vec![0; self.grid.n_lines()],
            residual: None,
        };
        #[allow(clippy::needless_range_loop)]
        for c in 0..self.controllers.len() {
            let z = self.meters[self.controllers[c].meter].z.clone();
            let est = self.flows_from(&z);
            let level = cfg.enabled.then(|| self.load_levels(&z));

            let grid = &self.grid;
            let fleet = &self.fleet;
            let ctrl = &mut self.controllers[c];
            ctrl.est_flows = est;
            let own = ctrl.ded.index;
            let lambda_prev = ctrl.ded.lambda;
            let mut view = ctrl.ded.local_references();
            view[own] = ctrl.ded.reference;

            let (lambda, dlambda) = ctrl.ded.consensus_step(&inboxes[c], f_meas);
            let ed_shift = reference_from_lambda(lambda, &fleet[own]) - reference_from_lambda(lambda_prev, &fleet[own]);
            let own_params = fleet[own];

            if !cfg.enabled {
                ctrl.ded.reference = (ctrl.ded.reference + ed_shift).clamp(own_params.pmin, own_params.pmax);
                continue;
            }

            let gen_delta = DVector::from_iterator(
                fleet.len(),
                predict_gen_updates(dlambda, &view, fleet).into_iter().map(|p| p / base),
            );
            let level = level.expect("constraint enabled");
            ctrl.forecaster.observe(&level);
            let load_delta = match &oracle_delta {
                Some(d) => d.clone(),
                None => ctrl.forecaster.predict(),
            };
            let predicted_flows = predict_line_flows_with(
                &ctrl.est_flows,
                &gen_delta,
                &load_delta,
                &grid.gen_sensitivity,
                &grid.load_sensitivity,
            );
            let predicted = check_overflow(&predicted_flows, &grid.limits, cfg.activation);
            let outcome = constrain_step(
                ConstraintInputs {
                    gen_delta: &gen_delta,
                    load_delta: &load_delta,
                    predicted: &predicted,
                    live_flows: &ctrl.est_flows,
                    grid,
                    penalty_enabled: cfg.penalty_enabled,
                },
                &mut ctrl.constraint,
            );
            let shift = match outcome.mode {
                Mode::Normal => ed_shift,
                _ => outcome.update[own] * base,
            };
            ctrl.ded.reference = (ctrl.ded.reference + shift).clamp(own_params.pmin, own_params.pmax);

            if outcome.mode == Mode::Correct {
                let r = outcome.flagged_increment.amax();
                summary.residual = Some(summary.residual.map_or(r, |old: f64| old.max(r)));
            }
            summary.mode = summary.mode.max(outcome.mode);
            let merged = OverflowFlags::from_signs(summary.flags).union(&outcome.flags);
            summary.flags = merged.signs().to_vec();
        }
        summary
    }

    /// Advances one step and returns the record for the new time.
    pub fn step(&mut self) -> StepRecord {
        let k = self.step;
        if k.is_multiple_of(self.config.decimation.dse) {
            self.sample_meters();
            for _ in 0..self.config.dse.rounds_per_step {
                self.propagate_round();
            }
        }
        if k.is_multiple_of(self.config.decimation.control) {
            self.last = self.control_round();
        } else {
            self.last.residual = None;
        }

        let base = self.case.base_mva();
        let refs: Vec<f64> = self.controllers.iter().map(|c| c.ded.reference / base).collect();
        self.plant.advance(
            &self.case,
            &self.grid,
            &refs,
            self.config.tau,
            self.config.load_sigma,
            &mut self.load_rng,
        );
        self.step += 1;
        self.record()
    }

    fn record(&self) -> StepRecord {
        let base = self.case.base_mva();
        let st = self.plant.state();
        let actual: Vec<f64> = st.gen_output.iter().map(|p| p * base).collect();
        StepRecord {
            t: self.step as f64 * self.config.tau,
            frequency: st.frequency,
            lambda: self.controllers.iter().map(|c| c.ded.lambda).collect(),
            reference: self.controllers.iter().map(|c| c.ded.reference).collect(),
            cost: total_cost(self.case.generators(), &actual),
            actual,
            flow: st.flows.iter().copied().collect(),
            est_flow: self
                .controllers
                .iter()
                .map(|c| c.est_flows.iter().copied().collect())
                .collect(),
            flags: self.last.flags.clone(),
            mode: self.last.mode,
            correction_residual: self.last.residual,
        }
    }

    /// Bus indices of the generators, in generator order.
    pub fn generator_buses(&self) -> &[usize] {
        &self.gen_bus
    }
}

/// Runs a scenario for its full duration.
pub fn run(scenario: Scenario) -> Result<Trace, ConfigError> {
    let steps = scenario.config.steps();
    let mut sim = Simulation::new(scenario)?;
    let mut trace = Trace { records: Vec::with_capacity(steps) };
    for _ in 0..steps {
        trace.records.push(sim.step());
    }
    Ok(trace)
}
