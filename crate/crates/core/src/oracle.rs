//! Finite truncations of the sieved operator and a Sturm-sequence bisection
//! eigensolver, used as an independent check on the trace-map spectra.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{fibonacci, sieved_sites, substitution_word, ModelParams};
use crate::spectrum::BandSet;

/// Fraction of eigenvalues that must lie near the cover before a
/// consistency report is flagged.
pub const CONSISTENCY_THRESHOLD: f64 = 0.95;

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TridiagonalOperator {
    diagonal: Vec<f64>,
    offdiagonal: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn new(diagonal: Vec<f64>, offdiagonal: Vec<f64>) -> Result<Self> {
        if offdiagonal.len() + 1 != diagonal.len().max(1) {
            return Err(Error::InvalidParams(format!(
                "{} diagonal entries need {} off-diagonal entries, got {}",
                diagonal.len(),
                diagonal.len().saturating_sub(1),
                offdiagonal.len()
            )));
        }
        Ok(Self {
            diagonal,
            offdiagonal,
        })
    }

    /// Discrete Schrödinger operator with unit hopping.
    pub fn schrodinger(potential: Vec<f64>) -> Self {
        let off = vec![1.0; potential.len().saturating_sub(1)];
        Self {
            diagonal: potential,
            offdiagonal: off,
        }
    }

    pub fn size(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn offdiagonal(&self) -> &[f64] {
        &self.offdiagonal
    }

    /// Leading principal block of the given size.
    pub fn leading(&self, size: usize) -> Self {
        let size = size.min(self.size());
        Self {
            diagonal: self.diagonal[..size].to_vec(),
            offdiagonal: self.offdiagonal[..size.saturating_sub(1)].to_vec(),
        }
    }

    fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (i, &d) in self.diagonal.iter().enumerate() {
            let left = if i > 0 {
                self.offdiagonal[i - 1].abs()
            } else {
                0.0
            };
            let right = self.offdiagonal.get(i).map_or(0.0, |e| e.abs());
            lo = lo.min(d - left - right);
            hi = hi.max(d + left + right);
        }
        (lo, hi)
    }
}

/// Dirichlet truncation to `size` sites from the middle of the sieved
/// expansion of `w_{word_generation}`.
pub fn build_truncation(
    params: &ModelParams,
    word_generation: usize,
    size: usize,
) -> Result<TridiagonalOperator> {
    let available = u128::from(params.ell) * u128::from(fibonacci(word_generation + 1)?);
    if size as u128 > available {
        return Err(Error::WindowTooLarge {
            size,
            available: available.min(usize::MAX as u128) as usize,
        });
    }
    let sites = sieved_sites(params, &substitution_word(word_generation)?);
    let start = (sites.len() - size) / 2;
    Ok(TridiagonalOperator::schrodinger(
        sites[start..start + size].to_vec(),
    ))
}

/// Smallest word generation whose sieved expansion has at least `2 * size` sites.
pub fn generation_for_size(params: &ModelParams, size: usize) -> Result<usize> {
    let need = 2 * size as u128;
    (0..90)
        .find(|&g| fibonacci(g + 1).is_ok_and(|f| u128::from(params.ell) * u128::from(f) >= need))
        .ok_or(Error::ResourceLimit {
            what: "truncation size",
            requested: size as u128,
            limit: u128::from(u64::MAX),
        })
}

/// Number of eigenvalues strictly below `shift`.
pub fn sturm_count(op: &TridiagonalOperator, shift: f64) -> usize {
    const PIVMIN: f64 = 1e-150;
    let mut count = 0;
    let mut q = 1.0;
    for (i, &d) in op.diagonal.iter().enumerate() {
        q = if i == 0 {
            d - shift
        } else {
            let e = op.offdiagonal[i - 1];
            (d - shift) - e * e / q
        };
        if q.abs() < PIVMIN {
            q = -PIVMIN;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues in ascending order, each bracketed to width `tol`.
pub fn eigenvalues(op: &TridiagonalOperator, tol: f64) -> Vec<f64> {
    let n = op.size();
    if n == 0 {
        return Vec::new();
    }
    let (lo, hi) = op.gershgorin();
    let pad = 1e-12 * (lo.abs() + hi.abs() + 1.0);
    let (lo, hi) = (lo - pad, hi + pad);
    let mut out = vec![f64::NAN; n];
    split(op, tol.max(f64::EPSILON), lo, hi, &mut out);
    out
}

/// `out` holds the eigenvalues with indices in `[count(lo), count(hi))`.
fn split(op: &TridiagonalOperator, tol: f64, lo: f64, hi: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let mid = 0.5 * (lo + hi);
    if hi - lo <= tol || mid <= lo || mid >= hi {
        out.fill(mid);
        return;
    }
    let below = sturm_count(op, mid) - sturm_count(op, lo);
    let (left, right) = out.split_at_mut(below.min(out.len()));
    if left.len() + right.len() > 64 {
        rayon::join(
            || split(op, tol, lo, mid, left),
            || split(op, tol, mid, hi, right),
        );
    } else {
        split(op, tol, lo, mid, left);
        split(op, tol, mid, hi, right);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub n_eigenvalues: usize,
    pub delta: f64,
    pub fraction_inside: f64,
    pub worst_distance: f64,
    /// Set when `fraction_inside` falls below [`CONSISTENCY_THRESHOLD`].
    pub flagged: bool,
}

/// How many eigenvalues fall within `delta` of the band set.
pub fn spectral_consistency(eigs: &[f64], cover: &BandSet, delta: f64) -> ConsistencyReport {
    let mut inside = 0usize;
    let mut worst = 0.0f64;
    for &e in eigs {
        let d = cover.distance(e);
        if d <= delta {
            inside += 1;
        }
        worst = worst.max(d);
    }
    let fraction_inside = if eigs.is_empty() {
        1.0
    } else {
        inside as f64 / eigs.len() as f64
    };
    ConsistencyReport {
        n_eigenvalues: eigs.len(),
        delta,
        fraction_inside,
        worst_distance: worst,
        flagged: fraction_inside < CONSISTENCY_THRESHOLD,
    }
}
