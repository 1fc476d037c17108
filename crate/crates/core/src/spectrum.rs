//! Periodic-approximant band sets `Sigma_k = {E : |x_k(E)| <= 1}` and the
//! covers `Sigma_k ∪ Sigma_{k+1}`.
//!
//! `x_k` is the half-discriminant of the `l F_k`-periodic operator whose
//! period cell is the sieved word of the first `F_k` letters of `w_inf`.
//! It is a polynomial of degree `n = l F_k` with positive leading term, so
//! `Sigma_k` is exactly `n` closed bands (some possibly touching) and the
//! gap to the left of band `j` has sign `(-1)^(n + j - 1)`.
//!
//! Band edges are bracketed with the Dirichlet eigenvalues of the period
//! cell truncated to its first `n - 1` sites: there is exactly one of them
//! in every closed gap. They are located by bisection on the oscillation
//! count of the cell. Between two consecutive separators `x_k` crosses the
//! band monotonically, so each edge is a plain bisection on `x_k`, which is
//! evaluated through the trace-map recursion in `O(k)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{fibonacci, period_word, sieved_sites, ModelParams};
use crate::tracemap::{classify_orbit, OrbitClassification};
use crate::transfer::{half_trace_at, HalfTrace};

/// Largest period (`l F_k`) accepted by [`sigma_k_bands`].
pub const MAX_PERIOD: u64 = 1 << 20;

/// Default band-edge tolerance: `1e-10` up to generation 14, `1e-8` above.
pub fn default_tol(k: usize) -> f64 {
    if k <= 14 {
        1e-10
    } else {
        1e-8
    }
}

/// Energies examined by band scans: `[-3, lambda + 3]`.
pub fn search_window(params: &ModelParams) -> (f64, f64) {
    (-3.0, params.lambda + 3.0)
}

/// A closed energy interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "band [{lo}, {hi}] is reversed");
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn distance(&self, e: f64) -> f64 {
        if e < self.lo {
            self.lo - e
        } else if e > self.hi {
            e - self.hi
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BandSetKind {
    SigmaK,
    CoverK,
    /// Hand-built sets (test fixtures, windows of other sets).
    Custom,
}

/// Sorted union of pairwise disjoint closed bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSet {
    bands: Vec<Band>,
    pub generation: usize,
    pub params: Option<ModelParams>,
    pub kind: BandSetKind,
    pub tol: f64,
    /// Number of touching band pairs that were merged because no gap wider
    /// than `tol` could be certified between them.
    pub merged: usize,
}

impl BandSet {
    /// Builds a set from arbitrary bands, sorting them and merging any that
    /// overlap or are closer than `tol`.
    pub fn from_bands(mut bands: Vec<Band>, tol: f64) -> Result<Self> {
        if bands
            .iter()
            .any(|b| !(b.lo <= b.hi) || !b.lo.is_finite() || !b.hi.is_finite())
        {
            return Err(Error::InvalidParams(
                "band with reversed or non-finite ends".into(),
            ));
        }
        bands.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let (bands, merged) = merge_close(bands, tol);
        Ok(Self {
            bands,
            generation: 0,
            params: None,
            kind: BandSetKind::Custom,
            tol,
            merged,
        })
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    /// Bands of zero width: in computed sets, bands too narrow to resolve in
    /// floating point, located to within a few ulps.
    pub fn degenerate_count(&self) -> usize {
        self.bands.iter().filter(|b| b.lo == b.hi).count()
    }

    pub fn measure(&self) -> f64 {
        self.bands.iter().map(Band::width).sum()
    }

    pub fn min_width(&self) -> Option<f64> {
        self.bands.iter().map(Band::width).min_by(f64::total_cmp)
    }

    /// Distance from `e` to the nearest band (zero inside).
    pub fn distance(&self, e: f64) -> f64 {
        if self.bands.is_empty() {
            return f64::INFINITY;
        }
        let i = self.bands.partition_point(|b| b.hi < e);
        let mut best = f64::INFINITY;
        if i < self.bands.len() {
            best = self.bands[i].distance(e);
        }
        if i > 0 {
            best = best.min(self.bands[i - 1].distance(e));
        }
        best
    }

    pub fn contains(&self, e: f64, slack: f64) -> bool {
        self.distance(e) <= slack
    }

    /// `self ⊆ other ⊕ slack`.
    pub fn is_subset_of(&self, other: &BandSet, slack: f64) -> bool {
        // every band of self must sit inside one dilated band of other
        self.bands.iter().all(|b| {
            let i = other.bands.partition_point(|o| o.hi + slack < b.lo);
            other
                .bands
                .get(i)
                .is_some_and(|o| o.lo - slack <= b.lo && b.hi <= o.hi + slack)
        })
    }

    /// Intersection with `[lo, hi]`.
    pub fn restrict(&self, lo: f64, hi: f64) -> BandSet {
        let bands = self
            .bands
            .iter()
            .filter(|b| b.hi >= lo && b.lo <= hi)
            .map(|b| Band::new(b.lo.max(lo), b.hi.min(hi)))
            .collect();
        BandSet {
            bands,
            merged: 0,
            ..self.clone()
        }
    }

    /// Union, merged at the coarser of the two tolerances.
    pub fn union(&self, other: &BandSet) -> BandSet {
        let tol = self.tol.max(other.tol);
        let mut bands: Vec<Band> = self.bands.iter().chain(&other.bands).copied().collect();
        bands.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let (bands, merged) = merge_close(bands, tol);
        BandSet {
            bands,
            generation: self.generation.min(other.generation),
            params: self.params,
            kind: BandSetKind::CoverK,
            tol,
            merged: self.merged + other.merged + merged,
        }
    }
}

fn merge_close(bands: Vec<Band>, tol: f64) -> (Vec<Band>, usize) {
    let mut out: Vec<Band> = Vec::with_capacity(bands.len());
    let mut merged = 0;
    for b in bands {
        match out.last_mut() {
            Some(last) if b.lo - last.hi <= tol => {
                last.hi = last.hi.max(b.hi);
                merged += 1;
            }
            _ => out.push(b),
        }
    }
    (out, merged)
}

pub fn lebesgue_measure(bs: &BandSet) -> f64 {
    bs.measure()
}

struct ApproximantCell {
    k: usize,
    params: ModelParams,
    /// Site potentials of the truncated period cell (`n - 1` sites).
    truncated: Vec<f64>,
    n: usize,
    sep_tol: f64,
}

impl ApproximantCell {
    fn new(k: usize, params: &ModelParams, tol: f64) -> Result<Self> {
        let n = u64::from(params.ell)
            .checked_mul(fibonacci(k)?)
            .filter(|&n| n <= MAX_PERIOD)
            .ok_or(Error::ResourceLimit {
                what: "approximant period",
                requested: u128::from(params.ell) * u128::from(fibonacci(k).unwrap_or(u64::MAX)),
                limit: MAX_PERIOD.into(),
            })? as usize;
        let mut sites = sieved_sites(params, &period_word(k)?);
        sites.truncate(n - 1);
        Ok(Self {
            k,
            params: *params,
            truncated: sites,
            n,
            sep_tol: 0.25 * tol,
        })
    }

    /// Number of Dirichlet eigenvalues of the truncated cell below `e`.
    fn count_below(&self, e: f64) -> usize {
        const PIVMIN: f64 = 1e-150;
        let mut count = 0;
        let mut q = 1.0;
        for (i, &v) in self.truncated.iter().enumerate() {
            q = if i == 0 { v - e } else { (v - e) - 1.0 / q };
            if q.abs() < PIVMIN {
                q = -PIVMIN;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Sign of `x_k` in gap `j` (gap 0 lies below every band).
    fn gap_sign(&self, j: usize) -> f64 {
        if (self.n + j) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Index of the open gap containing `e`, given the Dirichlet count there.
    fn gap_at(&self, e: f64, count: usize) -> Option<usize> {
        let x = half_trace_at(e, &self.params, self.k);
        if x.beyond(self.gap_sign(count)) {
            Some(count)
        } else if x.beyond(self.gap_sign(count + 1)) {
            Some(count + 1)
        } else {
            None
        }
    }

    /// The `j`-th Dirichlet eigenvalue, known to lie in `[lo, hi]`, to full
    /// precision. It lies in the closed gap `j`, so it is a valid separator
    /// even when no point of the open gap is resolvable in floating point.
    fn dirichlet_eigenvalue(&self, j: usize, mut lo: f64, mut hi: f64) -> f64 {
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return hi;
            }
            if self.count_below(mid) >= j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    /// Fills `seps[i]` with a point of closed gap `first + i`; every
    /// Dirichlet eigenvalue of those gaps lies in `[lo, hi]`.
    fn locate(&self, lo: f64, hi: f64, first: usize, seps: &mut [f64]) {
        if seps.is_empty() {
            return;
        }
        let mid = 0.5 * (lo + hi);
        if hi - lo <= self.sep_tol || mid <= lo || mid >= hi {
            for (i, s) in seps.iter_mut().enumerate() {
                *s = self.dirichlet_eigenvalue(first + i, lo, hi);
            }
            return;
        }
        let count = self.count_below(mid);
        let below = count.saturating_sub(first - 1).min(seps.len());
        let (left, right) = seps.split_at_mut(below);
        let mut right_first = first + below;
        let (left, right) = match self.gap_at(mid, count) {
            Some(g) if below > 0 && g == first + below - 1 => {
                let n = left.len();
                left[n - 1] = mid;
                (&mut left[..n - 1], right)
            }
            Some(g) if !right.is_empty() && g == right_first => {
                right[0] = mid;
                right_first += 1;
                (left, &mut right[1..])
            }
            _ => (left, right),
        };
        if left.len() + right.len() > 64 {
            rayon::join(
                || self.locate(lo, mid, first, left),
                || self.locate(mid, hi, right_first, right),
            );
        } else {
            self.locate(lo, mid, first, left);
            self.locate(mid, hi, right_first, right);
        }
    }
}

/// Margin by which `|x_k|` must exceed one inside a gap for the gap to count.
pub const GAP_CERT_MARGIN: f64 = 1e-12;

fn gap_certified(x: HalfTrace) -> bool {
    match x {
        HalfTrace::Linear(v) => v.abs() > 1.0 + GAP_CERT_MARGIN,
        HalfTrace::Log { ln_abs, .. } => ln_abs > 0.0,
    }
}

/// Shrinks `[lo, hi]` (with `pred(lo)` true, `pred(hi)` false) to width `tol`.
fn bisect(mut lo: f64, mut hi: f64, tol: f64, pred: impl Fn(f64) -> bool) -> (f64, f64) {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// `Sigma_k` on the search window, edges localized to `tol`.
///
/// Reported edges are the outer end of each final bracket, so every band
/// contains the exact band it approximates.
pub fn sigma_k_bands(k: usize, params: &ModelParams, tol: f64) -> Result<BandSet> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let cell = ApproximantCell::new(k, params, tol)?;
    let (w_lo, w_hi) = search_window(params);
    let n = cell.n;

    let mut seps = vec![f64::NAN; n + 1];
    seps[0] = w_lo;
    seps[n] = w_hi;
    cell.locate(w_lo, w_hi, 1, &mut seps[1..n]);

    let x_at = |e: f64| half_trace_at(e, params, k);
    let bands: Vec<Band> = (1..=n)
        .into_par_iter()
        .map(|j| {
            let (a, b) = (seps[j - 1], seps[j]);
            let (s_left, s_right) = (cell.gap_sign(j - 1), cell.gap_sign(j));
            if a > b {
                return Err(Error::UnresolvedEdge { k, lo: b, hi: a });
            }
            let (in_left, in_right) = (x_at(a).beyond(s_left), x_at(b).beyond(s_right));
            // A band narrower than the floating-point grid shows up as a
            // direct jump from one gap to the next; report it as a point.
            if x_at(b).beyond(s_left) {
                return Ok(Band::new(b, b));
            }
            if x_at(a).beyond(s_right) {
                return Ok(Band::new(a, a));
            }
            // left edge: last point still in the gap to the left
            let lo = if in_left {
                bisect(a, b, tol, |e| x_at(e).beyond(s_left)).0
            } else {
                a
            };
            // right edge: first point inside the gap to the right
            let hi = if in_right {
                bisect(lo, b, tol, |e| !x_at(e).beyond(s_right)).1
            } else {
                b
            };
            Ok(Band::new(lo, hi))
        })
        .collect::<Result<_>>()?;

    // A gap survives only if it is wider than tol and x_k clears the band
    // level at its midpoint by more than rounding noise.
    let mut merged = 0;
    let mut kept: Vec<Band> = Vec::with_capacity(bands.len());
    for b in bands {
        match kept.last_mut() {
            Some(last) if b.lo - last.hi <= tol || !gap_certified(x_at(0.5 * (last.hi + b.lo))) => {
                last.hi = last.hi.max(b.hi);
                merged += 1;
            }
            _ => kept.push(b),
        }
    }
    Ok(BandSet {
        bands: kept,
        generation: k,
        params: Some(*params),
        kind: BandSetKind::SigmaK,
        tol,
        merged,
    })
}

/// `Sigma_k ∪ Sigma_{k+1}`.
pub fn cover(k: usize, params: &ModelParams, tol: f64) -> Result<BandSet> {
    let (a, b) = rayon::join(
        || sigma_k_bands(k, params, tol),
        || sigma_k_bands(k + 1, params, tol),
    );
    let mut c = a?.union(&b?);
    c.generation = k;
    c.kind = BandSetKind::CoverK;
    Ok(c)
}

/// Spectrum membership verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Membership {
    /// Escape at this step proves the energy is outside the spectrum.
    OutsideCertified { step: usize },
    /// Inside every cover examined.
    InCoverUpTo { k_max: usize },
}

pub fn membership(energy: f64, params: &ModelParams, k_max: usize) -> Membership {
    match classify_orbit(energy, params, k_max) {
        OrbitClassification::Escaped { step } => Membership::OutsideCertified { step },
        OrbitClassification::BoundedUpTo { k_max } => Membership::InCoverUpTo { k_max },
    }
}
