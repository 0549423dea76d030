//! Smart-meter side of distributed state estimation.
//!
//! Every meter keeps a copy of the whole measurement vector. Its own entry is
//! overwritten with the local reading each round; the others are pulled toward
//! the neighbours' copies, so readings propagate across the meter graph. Any
//! meter can then recover bus angles by weighted least squares.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::EstimationError;
use crate::grid::ObservationModel;

#[derive(Debug, Clone)]
pub struct MeterState {
    /// Index of this meter in the measurement vector.
    pub index: usize,
    /// Propagated measurement vector Z_i.
    pub z: DVector<f64>,
    /// Propagation weight for each neighbour, keyed by neighbour index.
    pub weights: Vec<(usize, f64)>,
    /// Propagation step; 1.0 when the weights already carry the step size.
    pub step: f64,
}

impl MeterState {
    /// Starts from the local reading with every other entry at zero.
    pub fn new(index: usize, n_meters: usize, local: f64, weights: Vec<(usize, f64)>, step: f64) -> Self {
        let mut z = DVector::zeros(n_meters);
        z[index] = local;
        Self { index, z, weights, step }
    }

    /// `Z'_i`: the current vector with the local entry refreshed.
    pub fn refreshed(&self, local: f64) -> DVector<f64> {
        let mut zp = self.z.clone();
        zp[self.index] = local;
        zp
    }

    /// One propagation round. `neighbors` holds the `Z'_j` of every neighbour
    /// heard from this round; unknown senders are ignored.
    pub fn dse_step(&mut self, neighbors: &[(usize, &DVector<f64>)], local: f64) {
        self.z[self.index] = local;
        let mut pull = DVector::zeros(self.z.len());
        let mut total = 0.0;
        for &(j, zj) in neighbors {
            if let Some(&(_, w)) = self.weights.iter().find(|(k, _)| *k == j) {
                pull.axpy(w, zj, 1.0);
                total += w;
            }
        }
        pull.axpy(-total, &self.z, 1.0);
        // I⁰_i masks the own entry.
        pull[self.index] = 0.0;
        self.z.axpy(self.step, &pull, 1.0);
    }
}

/// Precomputed weighted-least-squares gain `(HᵀR⁻¹H)⁻¹HᵀR⁻¹`.
#[derive(Debug, Clone)]
pub struct StateEstimator {
    gain: DMatrix<f64>,
}

impl StateEstimator {
    /// A zero covariance (`R = 0·I`) is taken as the noiseless limit of
    /// `R = σ²I`, where the weights cancel and the estimator is ordinary least
    /// squares.
    pub fn new(model: &ObservationModel) -> Result<Self, EstimationError> {
        let r = &model.r_diag;
        if r.len() != model.hobs.nrows() || r.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(EstimationError::BadCovariance);
        }
        let weights = if r.iter().all(|&v| v == 0.0) {
            DVector::from_element(r.len(), 1.0)
        } else if r.iter().all(|&v| v > 0.0) {
            r.map(|v| 1.0 / v)
        } else {
            return Err(EstimationError::BadCovariance);
        };
        let h = &model.hobs;
        let mut weighted_t = h.transpose();
        for (mut col, w) in weighted_t.column_iter_mut().zip(weights.iter()) {
            col *= *w;
        }
        let normal = &weighted_t * h;
        let chol = normal.cholesky().ok_or(EstimationError::Unobservable)?;
        let gain = chol.solve(&weighted_t);
        if gain.iter().any(|g| !g.is_finite()) {
            return Err(EstimationError::Unobservable);
        }
        Ok(Self { gain })
    }

    pub fn estimate(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.gain * z
    }

    pub fn gain(&self) -> &DMatrix<f64> {
        &self.gain
    }
}

/// `θ̂ = (HᵀR⁻¹H)⁻¹HᵀR⁻¹Z`.
pub fn wls_estimate(z: &DVector<f64>, model: &ObservationModel) -> Result<DVector<f64>, EstimationError> {
    Ok(StateEstimator::new(model)?.estimate(z))
}

pub fn flows_from_states(theta: &DVector<f64>, hflow: &DMatrix<f64>) -> DVector<f64> {
    hflow * theta
}
