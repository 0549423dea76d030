//! Trace CSV and run summary.

use std::io::Write;

use gridflow_core::engine::Trace;
use serde::Serialize;

/// `x` with 9 significant digits, trailing zeros removed.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&exp) {
        return format!("{x:.8e}");
    }
    let decimals = (8 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.') } else { &s };
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

pub fn csv_header(generators: usize, lines: usize) -> Vec<String> {
    let mut h = vec!["t".to_string(), "f".to_string()];
    for prefix in ["lambda", "ref", "act"] {
        h.extend((1..=generators).map(|i| format!("{prefix}_{i}")));
    }
    for prefix in ["flow", "est_flow", "of"] {
        h.extend((1..=lines).map(|i| format!("{prefix}_{i}")));
    }
    h.push("mode".into());
    h.push("cost".into());
    h
}

/// Writes every `downsample`-th record (the first always included). The
/// estimated flows are those of the first controller's meter.
pub fn write_trace_csv<W: Write>(
    trace: &Trace,
    generators: usize,
    lines: usize,
    downsample: usize,
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(generators, lines))?;
    let step = downsample.max(1);
    for r in trace.records.iter().step_by(step) {
        let mut row: Vec<String> = Vec::with_capacity(2 + 3 * generators + 3 * lines + 2);
        row.push(sig9(r.t));
        row.push(sig9(r.frequency));
        row.extend(r.lambda.iter().map(|&v| sig9(v)));
        row.extend(r.reference.iter().map(|&v| sig9(v)));
        row.extend(r.actual.iter().map(|&v| sig9(v)));
        row.extend(r.flow.iter().map(|&v| sig9(v)));
        match r.est_flow.first() {
            Some(est) => row.extend(est.iter().map(|&v| sig9(v))),
            None => row.extend((0..lines).map(|_| String::new())),
        }
        row.extend(r.flags.iter().map(|s| s.to_string()));
        row.push(r.mode.as_str().into());
        row.push(sig9(r.cost));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeCounts {
    pub normal: usize,
    pub correct: usize,
    pub penalty: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub steps: usize,
    pub final_time_s: f64,
    /// $/h.
    pub final_cost: f64,
    /// Largest `|flow| − limit` over the run, p.u.; zero if never exceeded.
    pub max_violation: f64,
    /// 1-based line of the largest violation.
    pub max_violation_line: Option<usize>,
    pub final_flows: Vec<f64>,
    pub lambda_spread: f64,
    pub final_frequency: f64,
    /// RMS of `f − f₀` over the run, Hz.
    pub frequency_rms: f64,
    pub mode_counts: ModeCounts,
    pub wall_clock_per_step_s: f64,
}

impl RunSummary {
    pub fn from_trace(trace: &Trace, limits: &[f64], f0: f64, wall_clock_s: f64) -> Self {
        let mut max_violation = 0.0;
        let mut max_line = None;
        for r in &trace.records {
            for (u, (f, lim)) in r.flow.iter().zip(limits).enumerate() {
                let v = f.abs() - lim;
                if v > max_violation {
                    max_violation = v;
                    max_line = Some(u + 1);
                }
            }
        }
        let n = trace.len();
        let frequency_rms = if n == 0 {
            0.0
        } else {
            (trace.records.iter().map(|r| (r.frequency - f0).powi(2)).sum::<f64>() / n as f64).sqrt()
        };
        let [normal, correct, penalty] = trace.mode_counts();
        let last = trace.last();
        Self {
            steps: n,
            final_time_s: last.map_or(0.0, |r| r.t),
            final_cost: last.map_or(0.0, |r| r.cost),
            max_violation,
            max_violation_line: max_line,
            final_flows: last.map_or_else(Vec::new, |r| r.flow.clone()),
            lambda_spread: last.map_or(0.0, |r| r.lambda_spread()),
            final_frequency: last.map_or(f0, |r| r.frequency),
            frequency_rms,
            mode_counts: ModeCounts { normal, correct, penalty },
            wall_clock_per_step_s: if n == 0 { 0.0 } else { wall_clock_s / n as f64 },
        }
    }
}
