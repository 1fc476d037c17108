//! Text serialization of results.
//!
//! Floats are written with 17 significant digits so they round-trip
//! exactly; output depends only on the values, never on timing or thread
//! count.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::fractal::DimensionEstimate;
use crate::lyapunov::{LyapunovEstimate, LyapunovMethod};
use crate::model::ModelParams;
use crate::spectrum::{Band, BandSet, BandSetKind};

/// `x` in scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A float serialized through [`fmt_f64`]; non-finite values become `null`.
#[derive(Debug, Clone, Copy)]
pub struct Exact(pub f64);

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(fmt_f64(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

#[derive(Serialize)]
struct ExactParams {
    lambda: Exact,
    ell: u32,
}

impl From<&ModelParams> for ExactParams {
    fn from(p: &ModelParams) -> Self {
        Self {
            lambda: Exact(p.lambda),
            ell: p.ell,
        }
    }
}

#[derive(Serialize)]
struct BandSetJson {
    params: Option<ExactParams>,
    k: usize,
    kind: BandSetKind,
    tol: Exact,
    merged: usize,
    degenerate: usize,
    bands: Vec<[Exact; 2]>,
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable value")
}

pub fn band_set_csv(bs: &BandSet) -> String {
    let mut out = String::from("lo,hi\n");
    for b in bs.bands() {
        out.push_str(&format!("{},{}\n", fmt_f64(b.lo), fmt_f64(b.hi)));
    }
    out
}

/// Parses the output of [`band_set_csv`], skipping `#` comment lines.
pub fn band_set_from_csv(text: &str) -> Result<BandSet> {
    let mut bands = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == "lo,hi" {
            continue;
        }
        let parse = |s: Option<&str>| -> Result<f64> {
            s.and_then(|t| t.trim().parse().ok())
                .ok_or_else(|| Error::InvalidParams(format!("bad band on line {}: {line}", i + 1)))
        };
        let mut parts = line.split(',');
        let lo = parse(parts.next())?;
        let hi = parse(parts.next())?;
        bands.push(Band { lo, hi });
    }
    BandSet::from_bands(bands, 0.0)
}

pub fn band_set_json(bs: &BandSet) -> String {
    to_json(&BandSetJson {
        params: bs.params.as_ref().map(ExactParams::from),
        k: bs.generation,
        kind: bs.kind,
        tol: Exact(bs.tol),
        merged: bs.merged,
        degenerate: bs.degenerate_count(),
        bands: bs
            .bands()
            .iter()
            .map(|b| [Exact(b.lo), Exact(b.hi)])
            .collect(),
    })
}

#[derive(Serialize)]
struct DimensionJson {
    slope: Exact,
    intercept: Exact,
    r_squared: Exact,
    window: Option<[Exact; 2]>,
    generation_cutoff: Exact,
    eps_values: Vec<Exact>,
    counts: Vec<u64>,
}

pub fn dimension_json(est: &DimensionEstimate) -> String {
    to_json(&DimensionJson {
        slope: Exact(est.slope),
        intercept: Exact(est.intercept),
        r_squared: Exact(est.r_squared),
        window: est.window.map(|(a, b)| [Exact(a), Exact(b)]),
        generation_cutoff: Exact(est.generation_cutoff),
        eps_values: est.eps_values.iter().copied().map(Exact).collect(),
        counts: est.counts.clone(),
    })
}

pub fn dimension_csv(est: &DimensionEstimate) -> String {
    let mut out = String::from("eps,count\n");
    for (e, n) in est.eps_values.iter().zip(&est.counts) {
        out.push_str(&format!("{},{n}\n", fmt_f64(*e)));
    }
    out
}

fn method_name(m: LyapunovMethod) -> &'static str {
    match m {
        LyapunovMethod::MatrixNorm => "matrix_norm",
        LyapunovMethod::TraceGrowth => "trace_growth",
    }
}

pub fn lyapunov_csv(estimates: &[LyapunovEstimate]) -> String {
    let mut out = String::from("energy,exponent,k_used,method\n");
    for e in estimates {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(e.energy),
            fmt_f64(e.value),
            e.k_used,
            method_name(e.method)
        ));
    }
    out
}

#[derive(Serialize)]
struct LyapunovJson {
    energy: Exact,
    exponent: Exact,
    k_used: usize,
    method: &'static str,
}

pub fn lyapunov_json(estimates: &[LyapunovEstimate]) -> String {
    let rows: Vec<LyapunovJson> = estimates
        .iter()
        .map(|e| LyapunovJson {
            energy: Exact(e.energy),
            exponent: Exact(e.value),
            k_used: e.k_used,
            method: method_name(e.method),
        })
        .collect();
    to_json(&rows)
}

pub fn eigenvalues_csv(eigs: &[f64]) -> String {
    let mut out = String::from("eigenvalue\n");
    for &e in eigs {
        out.push_str(&fmt_f64(e));
        out.push('\n');
    }
    out
}
