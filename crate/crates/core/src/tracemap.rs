//! The trace map `T(x, y, z) = (2xy - z, x, y)` and escape classification.

use serde::Serialize;

use crate::model::ModelParams;
use crate::transfer::{self, fvi_triple, x0_closed, x1_closed, HalfTrace, DEFAULT_ESCAPE_CAP};

/// Default generation depth for membership queries.
pub const DEFAULT_K_MAX: usize = 40;

/// A point `(x_{k+1}, x_k, x_{k-1})` of the trace-map phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceTriple {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl TraceTriple {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn fvi(&self) -> f64 {
        fvi_triple(self.x, self.y, self.z)
    }

    pub fn max_abs(&self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }
}

pub fn trace_map_step(p: TraceTriple) -> TraceTriple {
    TraceTriple::new(2.0 * p.x * p.y - p.z, p.x, p.y)
}

/// Forward orbit `p, T(p), T^2(p), ...`.
pub fn orbit(p: TraceTriple) -> impl Iterator<Item = TraceTriple> {
    std::iter::successors(Some(p), |&q| Some(trace_map_step(q)))
}

/// `gamma(E) = (x_1, x_0, x_{-1})`.
pub fn curve_of_initial_conditions(energy: f64, params: &ModelParams) -> TraceTriple {
    TraceTriple::new(x1_closed(energy, params), x0_closed(energy, params), 1.0)
}

/// Escape verdict for one energy.
///
/// `Escaped` certifies that the orbit is unbounded; `BoundedUpTo` only says
/// that no escape was seen within the generations examined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OrbitClassification {
    Escaped { step: usize },
    BoundedUpTo { k_max: usize },
}

impl OrbitClassification {
    pub fn is_escaped(&self) -> bool {
        matches!(self, OrbitClassification::Escaped { .. })
    }
}

pub fn classify_orbit(energy: f64, params: &ModelParams, k_max: usize) -> OrbitClassification {
    let run = transfer::half_traces_recursive(energy, params, k_max.max(1), DEFAULT_ESCAPE_CAP);
    match run.escape_index {
        Some(step) if step < k_max => OrbitClassification::Escaped { step },
        _ => OrbitClassification::BoundedUpTo { k_max },
    }
}

/// `(k, log|x_{k+1}| / log|x_k|)` along an escaping orbit, for every `k`
/// at which `|x_{k-2}|`, `|x_{k-1}|` and `|x_k|` all exceed `threshold`.
///
/// Right after the orbit first passes the threshold the ratio still depends
/// on how small the preceding values were; three consecutive large values
/// put it in the regime where it tends to the golden mean. Empty if no
/// escape happens by `k_max`.
pub fn escape_growth_ratios(
    energy: f64,
    params: &ModelParams,
    k_max: usize,
    threshold: f64,
) -> Vec<(usize, f64)> {
    if !classify_orbit(energy, params, k_max).is_escaped() {
        return Vec::new();
    }
    // seq[i] = x_{i-1}
    let seq: Vec<f64> = transfer::half_traces_log(energy, params, k_max)
        .iter()
        .map(HalfTrace::ln_abs)
        .collect();
    let ln_threshold = threshold.ln();
    (2..k_max)
        .filter(|&k| (k - 1..=k + 1).all(|i| seq[i] > ln_threshold))
        .map(|k| (k, seq[k + 2] / seq[k + 1]))
        .collect()
}
