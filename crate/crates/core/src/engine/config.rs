use alloc::vec::Vec;

use crate::constraint::PenaltyGains;
use crate::ded::ControllerGains;
use crate::error::ConfigError;
use crate::grid::NetworkCase;
use crate::plant::PlantParams;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ConstraintConfig {
    pub enabled: bool,
    pub penalty_enabled: bool,
    pub penalty: PenaltyGains,
    /// Activation ratio ρ: a line is flagged at `|P_f| ≥ ρ·P_f^max`.
    pub activation: f64,
    pub ar_window: usize,
    pub ar_refit_every: usize,
    /// Feed the scheduled load change to the controllers instead of the
    /// AR(2) forecast.
    pub oracle_load_forecast: bool,
}

impl Default for ConstraintConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            penalty_enabled: true,
            penalty: PenaltyGains::default(),
            activation: 1.0,
            ar_window: 50,
            ar_refit_every: 10,
            oracle_load_forecast: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct DseConfig {
    /// Standard deviation of each meter reading, p.u.
    pub meter_sigma: f64,
    /// Propagation rounds per control step.
    pub rounds_per_step: usize,
    /// Propagation rounds run on the initial operating point before step 0.
    pub warmup_rounds: usize,
    /// Propagation step multiplying the Metropolis weights.
    pub step: f64,
}

impl Default for DseConfig {
    fn default() -> Self {
        Self {
            meter_sigma: 0.0,
            rounds_per_step: 1,
            warmup_rounds: 0,
            step: 1.0,
        }
    }
}

/// Link model shared by the controller and meter networks.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct CommConfig {
    pub drop_probability: f64,
    /// Rounds between sending and delivery.
    pub delay_rounds: usize,
}

/// Run a subsystem only every `n` plant steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct Decimation {
    pub control: usize,
    pub dse: usize,
}

impl Default for Decimation {
    fn default() -> Self {
        Self { control: 1, dse: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SimConfig {
    pub duration_s: f64,
    /// Step τ, s.
    pub tau: f64,
    pub seed: u64,
    pub gains: ControllerGains,
    pub constraint: ConstraintConfig,
    pub plant: PlantParams,
    pub dse: DseConfig,
    pub comm: CommConfig,
    pub decimation: Decimation,
    /// Standard deviation of the load perturbation, p.u.
    pub load_sigma: f64,
    /// Meter bus each controller reads from, in generator order. Defaults to
    /// the generator's own bus.
    pub attachment: Option<Vec<u32>>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            duration_s: 10.0,
            tau: 0.01,
            seed: 0,
            gains: ControllerGains::default(),
            constraint: ConstraintConfig::default(),
            plant: PlantParams::default(),
            dse: DseConfig::default(),
            comm: CommConfig::default(),
            decimation: Decimation::default(),
            load_sigma: 0.0,
            attachment: None,
        }
    }
}

fn positive(v: f64, name: &'static str) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::NonPositive(name))
    }
}

fn non_negative(v: f64, name: &'static str) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::Negative(name))
    }
}

impl SimConfig {
    pub fn validate(&self, case: &NetworkCase) -> Result<(), ConfigError> {
        non_negative(self.duration_s, "duration_s")?;
        positive(self.tau, "tau")?;
        non_negative(self.gains.kp, "gains.kp")?;
        non_negative(self.gains.ki, "gains.ki")?;
        non_negative(self.constraint.penalty.kfp, "constraint.penalty.kfp")?;
        non_negative(self.constraint.penalty.kfi, "constraint.penalty.kfi")?;
        positive(self.constraint.activation, "constraint.activation")?;
        if self.constraint.ar_window < 3 {
            return Err(ConfigError::ArWindow(self.constraint.ar_window));
        }
        if self.constraint.ar_refit_every == 0 {
            return Err(ConfigError::NonPositive("constraint.ar_refit_every"));
        }
        positive(self.plant.inertia, "plant.inertia")?;
        non_negative(self.plant.damping, "plant.damping")?;
        positive(self.plant.f0, "plant.f0")?;
        non_negative(self.dse.meter_sigma, "dse.meter_sigma")?;
        positive(self.dse.step, "dse.step")?;
        non_negative(self.load_sigma, "load_sigma")?;
        let p = self.comm.drop_probability;
        if !(0.0..=1.0).contains(&p) {
            return Err(ConfigError::DropProbability(p));
        }
        if self.decimation.control == 0 {
            return Err(ConfigError::NonPositive("decimation.control"));
        }
        if self.decimation.dse == 0 {
            return Err(ConfigError::NonPositive("decimation.dse"));
        }
        if let Some(att) = &self.attachment {
            if att.len() != case.n_generators() {
                return Err(ConfigError::AttachmentCount {
                    expected: case.n_generators(),
                    found: att.len(),
                });
            }
            for (g, &bus) in att.iter().enumerate() {
                if case.bus_index(bus).is_none() {
                    return Err(ConfigError::UnknownMeter { generator: g, bus });
                }
            }
        }
        Ok(())
    }

    /// Number of plant steps in `duration_s`.
    pub fn steps(&self) -> usize {
        libm::round(self.duration_s / self.tau) as usize
    }
}

/// A network together with everything needed to simulate it.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub case: NetworkCase,
    pub config: SimConfig,
}
