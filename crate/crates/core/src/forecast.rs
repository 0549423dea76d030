//! Next-step load and line-flow prediction.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::numerics::{pinv, DEFAULT_RANK_TOL};

/// Least-squares AR(2) coefficients `(φ₁, φ₂)` for `samples`.
///
/// Returns the minimum-norm solution, so a rank-deficient history (constant or
/// all-zero) still yields a well-defined fit; fewer than three samples give
/// `(0, 0)`.
pub fn fit_ar2(samples: &[f64]) -> (f64, f64) {
    if samples.len() < 3 {
        return (0.0, 0.0);
    }
    let n = samples.len() - 2;
    let mut design = DMatrix::zeros(n, 2);
    let mut target = DVector::zeros(n);
    for t in 2..samples.len() {
        design[(t - 2, 0)] = samples[t - 1];
        design[(t - 2, 1)] = samples[t - 2];
        target[t - 2] = samples[t];
    }
    let phi = pinv(&design, DEFAULT_RANK_TOL) * target;
    if phi.iter().all(|p| p.is_finite()) {
        (phi[0], phi[1])
    } else {
        (0.0, 0.0)
    }
}

/// Whether `phi` lies in the closed AR(2) stationarity triangle, with a little
/// slack so unit-root fits such as persistence are kept.
pub fn is_admissible(phi: (f64, f64)) -> bool {
    const SLACK: f64 = 1e-6;
    let (a, b) = phi;
    a + b <= 1.0 + SLACK && b - a <= 1.0 + SLACK && b.abs() <= 1.0 + SLACK
}

pub fn predict_load_delta(phi: (f64, f64), last: f64, before_last: f64) -> f64 {
    phi.0 * last + phi.1 * before_last
}

/// Rolling history of one load column's step-to-step injection change.
#[derive(Debug, Clone)]
pub struct LoadHistory {
    samples: VecDeque<f64>,
    window: usize,
    refit_every: usize,
    since_refit: usize,
    phi: Option<(f64, f64)>,
}

impl LoadHistory {
    pub fn new(window: usize, refit_every: usize) -> Self {
        Self {
            samples: VecDeque::with_capacity(window),
            window: window.max(3),
            refit_every: refit_every.max(1),
            since_refit: 0,
            phi: None,
        }
    }

    /// Appends a sample and refits on schedule. A refit outside the
    /// stationarity triangle is discarded in favour of the previous
    /// coefficients, or `(0, 0)` if there are none yet.
    pub fn push(&mut self, delta: f64) {
        if !delta.is_finite() {
            return;
        }
        if self.samples.len() == self.window {
            self.samples.pop_front();
        }
        self.samples.push_back(delta);
        self.since_refit += 1;
        if self.samples.len() >= 3 && (self.phi.is_none() || self.since_refit >= self.refit_every) {
            let buf: Vec<f64> = self.samples.iter().copied().collect();
            let phi = fit_ar2(&buf);
            if is_admissible(phi) || self.phi.is_none() {
                self.phi = Some(if is_admissible(phi) { phi } else { (0.0, 0.0) });
            }
            self.since_refit = 0;
        }
    }

    pub fn coefficients(&self) -> Option<(f64, f64)> {
        self.phi
    }

    /// AR(2) prediction of the next delta; persistence until a fit exists.
    pub fn predict(&self) -> f64 {
        let n = self.samples.len();
        match (self.phi, n) {
            (_, 0) => 0.0,
            (Some(phi), n) if n >= 2 => predict_load_delta(phi, self.samples[n - 1], self.samples[n - 2]),
            _ => self.samples[n - 1],
        }
    }
}

/// Per-column AR(2) forecaster driven by observed load-column injections.
#[derive(Debug, Clone)]
pub struct LoadForecaster {
    histories: Vec<LoadHistory>,
    last_level: Option<DVector<f64>>,
}

impl LoadForecaster {
    pub fn new(columns: usize, window: usize, refit_every: usize) -> Self {
        Self {
            histories: vec![LoadHistory::new(window, refit_every); columns],
            last_level: None,
        }
    }

    /// Records a new observation of the load-column injection levels.
    pub fn observe(&mut self, level: &DVector<f64>) {
        if let Some(prev) = &self.last_level {
            for (h, (now, before)) in self.histories.iter_mut().zip(level.iter().zip(prev.iter())) {
                h.push(now - before);
            }
        }
        self.last_level = Some(level.clone());
    }

    pub fn predict(&self) -> DVector<f64> {
        DVector::from_iterator(self.histories.len(), self.histories.iter().map(LoadHistory::predict))
    }

    pub fn histories(&self) -> &[LoadHistory] {
        &self.histories
    }
}

/// `P_f(k) = P_f(k−1) + H·T_g·ΔP_g + H·T_L·ΔP_L`, all in p.u.
pub fn predict_line_flows(
    prev_flows: &DVector<f64>,
    gen_delta: &DVector<f64>,
    load_delta: &DVector<f64>,
    hflow: &DMatrix<f64>,
    tg: &DMatrix<f64>,
    tl: &DMatrix<f64>,
) -> DVector<f64> {
    prev_flows + hflow * (tg * gen_delta + tl * load_delta)
}

/// Same as [`predict_line_flows`] with the flow sensitivities `H·T_g` and
/// `H·T_L` already multiplied out.
pub fn predict_line_flows_with(
    prev_flows: &DVector<f64>,
    gen_delta: &DVector<f64>,
    load_delta: &DVector<f64>,
    gen_sensitivity: &DMatrix<f64>,
    load_sensitivity: &DMatrix<f64>,
) -> DVector<f64> {
    let mut out = prev_flows.clone();
    out.gemv(1.0, gen_sensitivity, gen_delta, 1.0);
    out.gemv(1.0, load_sensitivity, load_delta, 1.0);
    out
}

/// Lines whose flow magnitude reaches the activation threshold, together with
/// the direction of the threatened violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverflowFlags {
    /// `+1`/`-1` for a flagged line, `0` otherwise.
    signs: Vec<i8>,
}

impl OverflowFlags {
    pub fn none(lines: usize) -> Self {
        Self { signs: vec![0; lines] }
    }

    pub fn from_signs(signs: Vec<i8>) -> Self {
        Self {
            signs: signs.into_iter().map(|s| s.signum()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn is_flagged(&self, line: usize) -> bool {
        self.signs[line] != 0
    }

    /// Direction of the violation on a flagged line.
    pub fn sign(&self, line: usize) -> Option<i8> {
        match self.signs[line] {
            0 => None,
            s => Some(s),
        }
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn any(&self) -> bool {
        self.signs.iter().any(|&s| s != 0)
    }

    pub fn count(&self) -> usize {
        self.signs.iter().filter(|&&s| s != 0).count()
    }

    /// Lines flagged in either set; `self` wins on direction conflicts.
    pub fn union(&self, other: &OverflowFlags) -> OverflowFlags {
        let signs = self
            .signs
            .iter()
            .zip(&other.signs)
            .map(|(&a, &b)| if a != 0 { a } else { b })
            .collect();
        OverflowFlags { signs }
    }
}

/// Flags line `u` when `|P_f,u| ≥ ρ·P_f,u^max`.
pub fn check_overflow(predicted: &DVector<f64>, limits: &DVector<f64>, activation: f64) -> OverflowFlags {
    let signs = predicted
        .iter()
        .zip(limits.iter())
        .map(|(&p, &lim)| {
            if p.abs() >= activation * lim {
                if p >= 0.0 {
                    1
                } else {
                    -1
                }
            } else {
                0
            }
        })
        .collect();
    OverflowFlags { signs }
}
