use alloc::vec::Vec;

use crate::constraint::Mode;

/// State of the whole system after one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub frequency: f64,
    /// Per generator.
    pub lambda: Vec<f64>,
    /// Per generator, MW.
    pub reference: Vec<f64>,
    /// Per generator, MW.
    pub actual: Vec<f64>,
    /// True line flows, p.u.
    pub flow: Vec<f64>,
    /// Line flows as estimated by each controller's attached meter, p.u.
    pub est_flow: Vec<Vec<f64>>,
    /// Lines flagged by any controller, with direction.
    pub flags: Vec<i8>,
    /// Most restrictive mode among the controllers.
    pub mode: Mode,
    /// Total generation cost from actual outputs, $/h.
    pub cost: f64,
    /// Largest `‖H_v(T_g ΔP_g* + T_L ΔP_L)‖∞` among controllers that ran the
    /// correction without the penalty this step.
    pub correction_residual: Option<f64>,
}

impl StepRecord {
    pub fn lambda_spread(&self) -> f64 {
        let max = self.lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.lambda.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<StepRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }

    /// Records with `t ≥ from`.
    pub fn since(&self, from: f64) -> impl Iterator<Item = &StepRecord> {
        self.records.iter().filter(move |r| r.t >= from - 1e-12)
    }

    pub fn mode_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for r in &self.records {
            counts[r.mode as usize] += 1;
        }
        counts
    }
}
