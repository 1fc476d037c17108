//! Experiment matrix over several sieve spacings.
//!
//! For each `l` the cover at the generation of matching period is measured,
//! box-counted globally and inside windows around `E = lambda`. Results go
//! to per-`l` CSV files plus `summary.csv`. `manifest.json` is rewritten
//! after every finished spacing and lists the completed rows, so an
//! interrupted run resumes where it stopped.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use sieved_core::io::fmt_f64;
use sieved_core::model::matched_generation;
use sieved_core::{box_dimension, cover, default_scales, fibonacci, BandSet, ModelParams};

use crate::commands::UsageError;
use crate::output::{render, write_file, Format, Manifest};

/// Window half-widths around `E = lambda`; the first is `K = [lambda - 2, lambda + 2]`.
pub const HALF_WIDTHS: [f64; 4] = [2.0, 1.0, 0.5, 0.25];

const CHECKPOINT: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportConfig {
    pub lambda: f64,
    pub ells: Vec<u32>,
    pub k: usize,
    pub tol: f64,
    pub scales: usize,
}

impl ReportConfig {
    fn manifest(&self) -> Manifest {
        Manifest::new("report")
            .with("lambda", self.lambda)
            .with("ells", self.ells.clone())
            .with("k", self.k)
            .with("tol", self.tol)
            .with("scales", self.scales)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub ell: u32,
    pub k: usize,
    pub period: u64,
    pub n_bands: usize,
    pub measure: f64,
    pub dimension: Option<f64>,
    pub r_squared: Option<f64>,
    pub local_dimension: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    manifest: Value,
    complete: bool,
    rows: Vec<Row>,
}

fn load_checkpoint(path: &Path, manifest: &Value) -> Result<Vec<Row>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cp: Checkpoint = serde_json::from_str(&text)
        .with_context(|| format!("parsing checkpoint {}", path.display()))?;
    if &cp.manifest != manifest {
        return Err(UsageError(format!(
            "{} was written with different parameters; use a fresh output directory",
            path.display()
        ))
        .into());
    }
    Ok(cp.rows)
}

fn save_checkpoint(path: &Path, manifest: &Value, rows: &[Row], complete: bool) -> Result<()> {
    let cp = Checkpoint {
        manifest: manifest.clone(),
        complete,
        rows: rows.to_vec(),
    };
    write_file(path, &(serde_json::to_string_pretty(&cp)? + "\n"))
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), fmt_f64)
}

fn slope_in_window(c: &BandSet, center: f64, half_width: f64, n: usize) -> Option<(f64, f64)> {
    let part = c.restrict(center - half_width, center + half_width);
    let est = box_dimension(&part, &default_scales(&part, n).ok()?).ok()?;
    Some((est.slope, est.r_squared))
}

fn run_spacing(cfg: &ReportConfig, ell: u32, dir: &Path) -> Result<Row> {
    let q = ModelParams::with_coupling(cfg.lambda, ell)?;
    let k = matched_generation(ell, fibonacci(cfg.k)? as f64)?;
    let covers = (0..=k)
        .map(|j| cover(j, &q, cfg.tol))
        .collect::<sieved_core::Result<Vec<_>>>()?;
    let last = &covers[k];

    let manifest = cfg.manifest().with("ell", ell).with("k_ell", k);
    let mut measures = String::from("k,measure,n_bands\n");
    for (j, c) in covers.iter().enumerate() {
        measures.push_str(&format!("{j},{},{}\n", fmt_f64(c.measure()), c.len()));
    }
    write_file(
        &dir.join(format!("measure_ell{ell}.csv")),
        &render(&manifest, Format::Csv, &measures, ""),
    )?;

    let mut local = String::from("half_width,slope,r_squared\n");
    let mut first = None;
    for hw in HALF_WIDTHS {
        let est = slope_in_window(last, cfg.lambda, hw, cfg.scales);
        first = first.or(Some(est.map(|e| e.0)));
        local.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(hw),
            opt(est.map(|e| e.0)),
            opt(est.map(|e| e.1))
        ));
    }
    write_file(
        &dir.join(format!("local_ell{ell}.csv")),
        &render(&manifest, Format::Csv, &local, ""),
    )?;

    let global = default_scales(last, cfg.scales)
        .and_then(|s| box_dimension(last, &s))
        .ok();
    Ok(Row {
        ell,
        k,
        period: u64::from(ell) * fibonacci(k)?,
        n_bands: last.len(),
        measure: last.measure(),
        dimension: global.as_ref().map(|e| e.slope),
        r_squared: global.as_ref().map(|e| e.r_squared),
        local_dimension: first.flatten(),
    })
}

pub fn run(cfg: &ReportConfig, dir: &Path) -> Result<()> {
    if cfg.ells.is_empty() || cfg.ells.contains(&0) {
        return Err(UsageError("--ells needs one or more spacings >= 1".into()).into());
    }
    ModelParams::with_coupling(cfg.lambda, 1)?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let manifest = cfg.manifest();
    let manifest_value = manifest.to_value();
    let checkpoint = dir.join(CHECKPOINT);
    let mut rows = load_checkpoint(&checkpoint, &manifest_value)?;
    for &ell in &cfg.ells {
        if rows.iter().any(|r| r.ell == ell) {
            continue;
        }
        rows.push(run_spacing(cfg, ell, dir)?);
        save_checkpoint(&checkpoint, &manifest_value, &rows, false)?;
    }
    rows.sort_by_key(|r| cfg.ells.iter().position(|&e| e == r.ell));

    let mut summary =
        String::from("ell,k,period,n_bands,measure,dimension,r_squared,local_dimension\n");
    for r in &rows {
        summary.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.ell,
            r.k,
            r.period,
            r.n_bands,
            fmt_f64(r.measure),
            opt(r.dimension),
            opt(r.r_squared),
            opt(r.local_dimension)
        ));
    }
    write_file(
        &dir.join("summary.csv"),
        &render(&manifest, Format::Csv, &summary, ""),
    )?;
    save_checkpoint(&checkpoint, &manifest_value, &rows, true)?;
    eprintln!("report written to {}", dir.display());
    Ok(())
}
