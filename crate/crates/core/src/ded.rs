//! Generator-controller side of distributed economic dispatch.
//!
//! Each controller runs a consensus protocol on its incremental-cost estimate
//! λ, plus a PI term on measured frequency error so that the agreed λ settles
//! where generation matches load.

use alloc::vec::Vec;

use crate::grid::GeneratorSpec;

/// Per-generator parameters every controller keeps locally, MW and $/MWh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorParams {
    pub beta: f64,
    pub gamma: f64,
    pub pmin: f64,
    pub pmax: f64,
}

impl From<&GeneratorSpec> for GeneratorParams {
    fn from(g: &GeneratorSpec) -> Self {
        Self {
            beta: g.cost.beta,
            gamma: g.cost.gamma,
            pmin: g.pmin_mw,
            pmax: g.pmax_mw,
        }
    }
}

impl GeneratorParams {
    pub fn is_interior(&self, p: f64) -> bool {
        self.pmin < p && p < self.pmax
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ControllerGains {
    /// Proportional frequency gain, MW/Hz.
    pub kp: f64,
    /// Integral frequency gain, MW/(Hz·s).
    pub ki: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self { kp: 40.0, ki: 10.0 }
    }
}

#[derive(Debug, Clone)]
pub struct ControllerState {
    /// Index of the generator this controller drives.
    pub index: usize,
    pub lambda: f64,
    pub prev_freq_error: f64,
    /// Current power reference P*, MW.
    pub reference: f64,
    pub gains: ControllerGains,
    /// Consensus weight for each neighbor, keyed by neighbor index.
    pub weights: Vec<(usize, f64)>,
    /// Control interval τ, s.
    pub tau: f64,
    /// Rated frequency f₀, Hz.
    pub f0: f64,
    /// Parameters of every generator in the fleet, in generator order.
    pub fleet: Vec<GeneratorParams>,
}

impl ControllerState {
    pub fn own(&self) -> &GeneratorParams {
        &self.fleet[self.index]
    }

    fn weight(&self, neighbor: usize) -> Option<f64> {
        self.weights
            .iter()
            .find(|(j, _)| *j == neighbor)
            .map(|&(_, w)| w)
    }

    /// One synchronous round: consensus on the neighbours' previous-round λ
    /// plus the frequency PI term. Returns `(λ_i(k), dλ_i(k))`.
    ///
    /// Messages from agents that are not configured neighbours are ignored;
    /// missing messages simply drop out of the consensus sum.
    pub fn consensus_step(&mut self, neighbor_lambdas: &[(usize, f64)], f_meas: f64) -> (f64, f64) {
        let consensus: f64 = neighbor_lambdas
            .iter()
            .filter_map(|&(j, lj)| self.weight(j).map(|w| w * (lj - self.lambda)))
            .sum();
        let freq_error = self.f0 - f_meas;
        let freq_error_change = freq_error - self.prev_freq_error;
        let gamma = self.own().gamma;
        let attraction =
            2.0 * gamma * (self.gains.kp * freq_error_change + self.tau * self.gains.ki * freq_error);
        let dlambda = self.tau * consensus + attraction;
        self.lambda += dlambda;
        self.prev_freq_error = freq_error;
        (self.lambda, dlambda)
    }

    /// References of every generator as this controller sees them from its own λ.
    pub fn local_references(&self) -> Vec<f64> {
        self.fleet
            .iter()
            .map(|g| reference_from_lambda(self.lambda, g))
            .collect()
    }
}

/// Clamped economic-dispatch output for incremental cost `lambda`, MW.
pub fn reference_from_lambda(lambda: f64, gen: &GeneratorParams) -> f64 {
    let p = (lambda - gen.beta) / (2.0 * gen.gamma);
    p.clamp(gen.pmin, gen.pmax)
}

/// Predicted reference update of every generator for a λ step of `dlambda`, MW.
///
/// A generator whose reference sits on a limit is predicted not to move.
pub fn predict_gen_updates(dlambda: f64, references: &[f64], fleet: &[GeneratorParams]) -> Vec<f64> {
    fleet
        .iter()
        .zip(references)
        .map(|(g, &p)| {
            if g.is_interior(p) {
                dlambda / (2.0 * g.gamma)
            } else {
                0.0
            }
        })
        .collect()
}
