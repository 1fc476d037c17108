//! Single-artifact subcommands.

use std::fmt;

use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;

use sieved_core::io::{
    band_set_csv, band_set_json, dimension_csv, dimension_json, fmt_f64, lyapunov_csv,
    lyapunov_json, Exact,
};
use sieved_core::oracle::{generation_for_size, CONSISTENCY_THRESHOLD};
use sieved_core::spectrum::default_tol;
use sieved_core::tracemap::curve_of_initial_conditions;
use sieved_core::{
    box_dimension, build_truncation, cover, default_scales, eigenvalues, fvi_energy,
    lyapunov_exponent, membership, sigma_k_bands, spectral_consistency, BandSet, DimensionEstimate,
    EnergyGrid, Error, Membership, ModelParams, ScaleRange,
};

use crate::output::{emit, render, Manifest};
use crate::{ModelArgs, OutputArgs};

/// Bad input detected outside the core library.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// 2 for usage errors, 3 for numerical-resolution failures, 4 for resource
/// limits, 1 for anything else (I/O).
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::InvalidParams(_)
                | Error::InvalidScaleRange(_)
                | Error::EmptyWindow { .. }
                | Error::EmptyBandSet
                | Error::IndexOutOfWindow { .. }
                | Error::WindowTooLarge { .. } => 2,
                Error::UnresolvedEdge { .. }
                | Error::EntryOverflow { .. }
                | Error::DegenerateRegression { .. } => 3,
                Error::ResourceLimit { .. } | Error::FibonacciOverflow { .. } => 4,
            };
        }
    }
    1
}

pub fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi] = parts[..] else {
        return Err(format!("expected LO:HI, got {s:?}"));
    };
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| format!("bad number {lo:?}"))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| format!("bad number {hi:?}"))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!("window needs finite LO < HI, got {s:?}"));
    }
    Ok((lo, hi))
}

pub fn parse_grid(s: &str) -> std::result::Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err(format!("expected LO:HI:N, got {s:?}"));
    };
    let (lo, hi) = parse_window(&format!("{lo}:{hi}"))?;
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| format!("bad point count {n:?}"))?;
    if n < 2 {
        return Err(format!("grid needs at least 2 points, got {n}"));
    }
    Ok((lo, hi, n))
}

fn params(model: ModelArgs) -> Result<ModelParams> {
    Ok(ModelParams::with_coupling(model.lambda, model.ell)?)
}

fn base_manifest(command: &str, model: ModelArgs) -> Manifest {
    Manifest::new(command)
        .with("lambda", model.lambda)
        .with("ell", model.ell)
}

pub fn bands(
    model: ModelArgs,
    k: usize,
    tol: Option<f64>,
    out: &OutputArgs,
    union: bool,
) -> Result<()> {
    let q = params(model)?;
    let tol = tol.unwrap_or_else(|| default_tol(k));
    let bs = if union {
        cover(k, &q, tol)?
    } else {
        sigma_k_bands(k, &q, tol)?
    };
    let manifest = base_manifest(if union { "cover" } else { "bands" }, model)
        .with("k", k)
        .with("tol", tol)
        .with("n_bands", bs.len())
        .with("measure", bs.measure());
    emit(
        out.out.as_deref(),
        &render(
            &manifest,
            out.format,
            &band_set_csv(&bs),
            &band_set_json(&bs),
        ),
    )
}

/// Box sizes from the flags, filling gaps from [`default_scales`] of `set`.
fn resolve_scales(
    set: &BandSet,
    eps_min: Option<f64>,
    eps_max: Option<f64>,
    n: usize,
) -> Result<ScaleRange> {
    if let (Some(lo), Some(hi)) = (eps_min, eps_max) {
        return Ok(ScaleRange::new(lo, hi, n)?);
    }
    let auto = default_scales(set, n)?;
    Ok(ScaleRange::new(
        eps_min.unwrap_or(auto.eps_min),
        eps_max.unwrap_or(auto.eps_max),
        n,
    )?)
}

pub fn dimension(
    model: ModelArgs,
    k: usize,
    tol: f64,
    (eps_min, eps_max, n_scales): (Option<f64>, Option<f64>, usize),
    window: Option<(f64, f64)>,
    out: &OutputArgs,
) -> Result<()> {
    let q = params(model)?;
    let c = cover(k, &q, tol)?;
    let set = match window {
        Some((lo, hi)) => c.restrict(lo, hi),
        None => c,
    };
    if set.is_empty() {
        let (lo, hi) = window.unwrap_or((f64::NAN, f64::NAN));
        return Err(Error::EmptyWindow { lo, hi }.into());
    }
    let scales = resolve_scales(&set, eps_min, eps_max, n_scales)?;
    let mut est: DimensionEstimate = box_dimension(&set, &scales)?;
    est.window = window;
    let mut manifest = base_manifest("dimension", model)
        .with("k", k)
        .with("tol", tol)
        .with("eps_min", scales.eps_min)
        .with("eps_max", scales.eps_max)
        .with("scales", n_scales);
    if let Some((lo, hi)) = window {
        manifest = manifest.with("window", format!("{lo}:{hi}"));
    }
    let summary = format!(
        "# slope: {}\n# intercept: {}\n# r_squared: {}\n# generation_cutoff: {}\n",
        fmt_f64(est.slope),
        fmt_f64(est.intercept),
        fmt_f64(est.r_squared),
        fmt_f64(est.generation_cutoff)
    );
    emit(
        out.out.as_deref(),
        &render(
            &manifest,
            out.format,
            &(summary + &dimension_csv(&est)),
            &dimension_json(&est),
        ),
    )
}

#[derive(Serialize)]
struct SpecialRow {
    j: u32,
    energy: Exact,
    fvi: Exact,
    x1: Exact,
    in_cover: bool,
    escape_step: Option<usize>,
}

pub fn special_energies(model: ModelArgs, k_max: usize, out: &OutputArgs) -> Result<()> {
    let q = params(model)?;
    let rows: Vec<SpecialRow> = (1..q.ell)
        .map(|j| {
            let e = 2.0 * (std::f64::consts::PI * f64::from(j) / f64::from(q.ell)).cos();
            let verdict = membership(e, &q, k_max);
            SpecialRow {
                j,
                energy: Exact(e),
                fvi: Exact(fvi_energy(e, &q)),
                x1: Exact(curve_of_initial_conditions(e, &q).x),
                in_cover: matches!(verdict, Membership::InCoverUpTo { .. }),
                escape_step: match verdict {
                    Membership::OutsideCertified { step } => Some(step),
                    Membership::InCoverUpTo { .. } => None,
                },
            }
        })
        .collect();
    let mut csv = String::from("j,energy,fvi,x1,membership,escape_step\n");
    for r in &rows {
        let verdict = if r.in_cover { "in_cover" } else { "outside" };
        let step = r.escape_step.map_or(String::new(), |s| s.to_string());
        csv.push_str(&format!(
            "{},{},{},{},{verdict},{step}\n",
            r.j,
            fmt_f64(r.energy.0),
            fmt_f64(r.fvi.0),
            fmt_f64(r.x1.0)
        ));
    }
    let json = serde_json::to_string_pretty(&rows)?;
    let manifest = base_manifest("special-energies", model).with("k", k_max);
    emit(
        out.out.as_deref(),
        &render(&manifest, out.format, &csv, &json),
    )
}

pub fn lyapunov(
    model: ModelArgs,
    (lo, hi, n): (f64, f64, usize),
    k_max: usize,
    out: &OutputArgs,
) -> Result<()> {
    let q = params(model)?;
    let grid = EnergyGrid::new(lo, hi, n)?;
    let estimates = grid
        .points()
        .into_par_iter()
        .map(|e| lyapunov_exponent(e, &q, k_max))
        .collect::<sieved_core::Result<Vec<_>>>()?;
    let manifest = base_manifest("lyapunov", model)
        .with("grid", format!("{lo}:{hi}:{n}"))
        .with("k", k_max);
    emit(
        out.out.as_deref(),
        &render(
            &manifest,
            out.format,
            &lyapunov_csv(&estimates),
            &lyapunov_json(&estimates),
        ),
    )
}

#[derive(Serialize)]
struct OracleJson {
    n_eigenvalues: usize,
    delta: Exact,
    fraction_inside: Exact,
    worst_distance: Exact,
    threshold: Exact,
    flagged: bool,
}

pub fn oracle_check(
    model: ModelArgs,
    size: usize,
    k: usize,
    delta: f64,
    tol: Option<f64>,
    out: &OutputArgs,
) -> Result<()> {
    if !(delta > 0.0) {
        return Err(UsageError(format!("--delta must be positive, got {delta}")).into());
    }
    let q = params(model)?;
    let tol = tol.unwrap_or_else(|| default_tol(k));
    let generation = generation_for_size(&q, size)?;
    let op = build_truncation(&q, generation, size)?;
    let (eigs, c) = rayon::join(|| eigenvalues(&op, 1e-12), || cover(k, &q, tol));
    let report = spectral_consistency(&eigs, &c?, delta);
    let csv = format!(
        "quantity,value\nn_eigenvalues,{}\ndelta,{}\nfraction_inside,{}\nworst_distance,{}\nthreshold,{}\nflagged,{}\n",
        report.n_eigenvalues,
        fmt_f64(report.delta),
        fmt_f64(report.fraction_inside),
        fmt_f64(report.worst_distance),
        fmt_f64(CONSISTENCY_THRESHOLD),
        report.flagged
    );
    let json = serde_json::to_string_pretty(&OracleJson {
        n_eigenvalues: report.n_eigenvalues,
        delta: Exact(report.delta),
        fraction_inside: Exact(report.fraction_inside),
        worst_distance: Exact(report.worst_distance),
        threshold: Exact(CONSISTENCY_THRESHOLD),
        flagged: report.flagged,
    })?;
    let manifest = base_manifest("oracle-check", model)
        .with("size", size)
        .with("word_generation", generation)
        .with("k", k)
        .with("tol", tol)
        .with("delta", delta);
    emit(
        out.out.as_deref(),
        &render(&manifest, out.format, &csv, &json),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_and_grid_parsing() {
        assert_eq!(parse_window("-1:2.5"), Ok((-1.0, 2.5)));
        assert!(parse_window("2:1").is_err());
        assert!(parse_window("1").is_err());
        assert_eq!(parse_grid("-3:3:7"), Ok((-3.0, 3.0, 7)));
        assert!(parse_grid("0:1:1").is_err());
        assert!(parse_grid("0:1:x").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::InvalidParams("x".into()).into()), 2);
        assert_eq!(
            exit_code(
                &Error::UnresolvedEdge {
                    k: 1,
                    lo: 0.0,
                    hi: 1.0
                }
                .into()
            ),
            3
        );
        let limit = Error::ResourceLimit {
            what: "x",
            requested: 2,
            limit: 1,
        };
        assert_eq!(exit_code(&anyhow::Error::from(limit).context("outer")), 4);
        assert_eq!(exit_code(&UsageError("x".into()).into()), 2);
        assert_eq!(exit_code(&anyhow::anyhow!("io")), 1);
    }
}
