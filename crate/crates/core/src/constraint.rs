//! Line-flow constraint layer on top of the dispatch update.
//!
//! When a line is predicted to overflow, the dispatch update is rebuilt from a
//! particular solution that cancels the predicted load effect on the flagged
//! lines and the projection of the original update onto the kernel of the
//! flagged-line sensitivity. Lines that are already overloaded additionally
//! get a PI-shaped penalty that pushes their flow back under the limit.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::forecast::OverflowFlags;
use crate::grid::GridMatrices;
use crate::numerics::{nullspace_basis, pinv, project_onto_columns, DEFAULT_RANK_TOL};

/// Which branch of the constraint flowchart produced an update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Mode {
    #[default]
    Normal,
    Correct,
    Penalty,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Normal => "normal",
            Mode::Correct => "correct",
            Mode::Penalty => "penalty",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PenaltyGains {
    pub kfp: f64,
    pub kfi: f64,
}

impl Default for PenaltyGains {
    fn default() -> Self {
        Self { kfp: 2.0, kfi: 0.01 }
    }
}

#[derive(Debug, Clone)]
pub struct ConstraintState {
    /// Previous positive excess per line; `None` while the line is not violated.
    prev_excess: Vec<Option<f64>>,
    pub gains: PenaltyGains,
    pub mode: Mode,
}

impl ConstraintState {
    pub fn new(lines: usize, gains: PenaltyGains) -> Self {
        Self {
            prev_excess: vec![None; lines],
            gains,
            mode: Mode::Normal,
        }
    }

    pub fn prev_excess(&self, line: usize) -> Option<f64> {
        self.prev_excess[line]
    }
}

/// Multiplies row `u` of `m` by the violation sign of line `u`, zeroing the
/// rows of unflagged lines.
pub fn signed_rows(flags: &OverflowFlags, m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (u, &s) in flags.signs().iter().enumerate() {
        let mut row = out.row_mut(u);
        row *= f64::from(s);
    }
    out
}

/// `H_v = Diag(OF)·H_flow` with flagged rows oriented so that a violation is a
/// positive excess.
pub fn build_violation_matrix(flags: &OverflowFlags, hflow: &DMatrix<f64>) -> DMatrix<f64> {
    signed_rows(flags, hflow)
}

/// `ΔP_g^η = −(H_v T_g)⁺ H_v T_L ΔP_L`: the minimum-norm generator update that
/// best cancels the load-driven flow change on the flagged lines.
pub fn particular_correction(
    hv: &DMatrix<f64>,
    tg: &DMatrix<f64>,
    tl: &DMatrix<f64>,
    load_delta: &DVector<f64>,
) -> DVector<f64> {
    let hv_tg = hv * tg;
    let hv_tl_dl = hv * (tl * load_delta);
    -(pinv(&hv_tg, DEFAULT_RANK_TOL) * hv_tl_dl)
}

/// `ΔP_g^ζ`: the closest vector to `gen_delta` inside `ker(H_v T_g)`.
pub fn kernel_correction(hv_tg: &DMatrix<f64>, gen_delta: &DVector<f64>) -> DVector<f64> {
    let basis = nullspace_basis(hv_tg, DEFAULT_RANK_TOL);
    project_onto_columns(&basis, gen_delta).expect("orthonormal kernel basis")
}

/// Positive excess `sign·P_f − P_f^max` of every violated line, else zero.
pub fn violation_excess(live: &OverflowFlags, flows: &DVector<f64>, limits: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        flows.len(),
        (0..flows.len()).map(|u| match live.sign(u) {
            Some(s) => (f64::from(s) * flows[u] - limits[u]).max(0.0),
            None => 0.0,
        }),
    )
}

/// Lines whose flow magnitude strictly exceeds the limit.
pub fn live_violations(flows: &DVector<f64>, limits: &DVector<f64>) -> OverflowFlags {
    OverflowFlags::from_signs(
        flows
            .iter()
            .zip(limits.iter())
            .map(|(&f, &lim)| if f.abs() > lim { if f > 0.0 { 1 } else { -1 } } else { 0 })
            .collect(),
    )
}

/// `ΔP_g^π = −(H_v T_g)⁺ (K_fp·d²P_f,v + K_fi·dP_f,v)`.
///
/// `live` marks the lines that are violated right now; their excess memory is
/// updated and the memory of every other line is cleared.
pub fn penalty_update(
    live: &OverflowFlags,
    flows: &DVector<f64>,
    limits: &DVector<f64>,
    state: &mut ConstraintState,
    hv_tg: &DMatrix<f64>,
) -> DVector<f64> {
    let step = penalty_step(live, flows, limits, state);
    -(pinv(hv_tg, DEFAULT_RANK_TOL) * step)
}

/// The flow-decrease step vector `F_s`.
fn penalty_step(
    live: &OverflowFlags,
    flows: &DVector<f64>,
    limits: &DVector<f64>,
    state: &mut ConstraintState,
) -> DVector<f64> {
    let excess = violation_excess(live, flows, limits);
    let mut step = DVector::zeros(flows.len());
    for u in 0..flows.len() {
        if live.is_flagged(u) {
            let prev = state.prev_excess[u].unwrap_or(0.0);
            step[u] = state.gains.kfp * (excess[u] - prev) + state.gains.kfi * excess[u];
            state.prev_excess[u] = Some(excess[u]);
        } else {
            state.prev_excess[u] = None;
        }
    }
    step
}

/// Inputs of one constraint evaluation, all in p.u. and from the same step.
#[derive(Debug, Clone, Copy)]
pub struct ConstraintInputs<'a> {
    /// Dispatch update predicted from the consensus step.
    pub gen_delta: &'a DVector<f64>,
    /// Predicted load-column injection change.
    pub load_delta: &'a DVector<f64>,
    /// Flags from the line-flow prediction.
    pub predicted: &'a OverflowFlags,
    /// Current flows as estimated by the attached meter.
    pub live_flows: &'a DVector<f64>,
    pub grid: &'a GridMatrices,
    pub penalty_enabled: bool,
}

#[derive(Debug, Clone)]
pub struct ConstraintOutcome {
    /// Corrected dispatch update `ΔP_g*`, p.u.
    pub update: DVector<f64>,
    pub mode: Mode,
    /// Lines that entered `H_v` (predicted ∪ live).
    pub flags: OverflowFlags,
    /// Currently violated lines.
    pub live: OverflowFlags,
    /// Predicted flow increment on the flagged lines,
    /// `H_v (T_g ΔP_g* + T_L ΔP_L)`; zero on unflagged lines.
    pub flagged_increment: DVector<f64>,
}

/// One pass through the constraint flowchart.
pub fn constrain_step(inputs: ConstraintInputs<'_>, state: &mut ConstraintState) -> ConstraintOutcome {
    let grid = inputs.grid;
    let live = live_violations(inputs.live_flows, &grid.limits);
    let flags = inputs.predicted.union(&live);
    let lines = grid.n_lines();

    if !flags.any() {
        // Nothing is violated, so no excess memory survives.
        for p in &mut state.prev_excess {
            *p = None;
        }
        state.mode = Mode::Normal;
        return ConstraintOutcome {
            update: inputs.gen_delta.clone(),
            mode: Mode::Normal,
            flags,
            live,
            flagged_increment: DVector::zeros(lines),
        };
    }

    let hv_tg = signed_rows(&flags, &grid.gen_sensitivity);
    let hv_tl = signed_rows(&flags, &grid.load_sensitivity);
    let hv_tg_pinv = pinv(&hv_tg, DEFAULT_RANK_TOL);
    let load_effect = &hv_tl * inputs.load_delta;

    let particular = -(&hv_tg_pinv * &load_effect);
    let kernel = kernel_correction(&hv_tg, inputs.gen_delta);
    let mut update = particular + kernel;

    let mode = if live.any() && inputs.penalty_enabled {
        let step = penalty_step(&live, inputs.live_flows, &grid.limits, state);
        update -= &hv_tg_pinv * step;
        Mode::Penalty
    } else {
        for (u, p) in state.prev_excess.iter_mut().enumerate() {
            if !live.is_flagged(u) {
                *p = None;
            }
        }
        Mode::Correct
    };
    state.mode = mode;

    let flagged_increment = &hv_tg * &update + load_effect;
    ConstraintOutcome {
        update,
        mode,
        flags,
        live,
        flagged_increment,
    }
}
