//! Box-counting dimension of band sets and the large-coupling dimension model.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::spectrum::{cover, BandSet};
use crate::transfer::fvi_energy;

/// Geometrically spaced box sizes `eps_min ..= eps_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleRange {
    pub eps_min: f64,
    pub eps_max: f64,
    pub n_scales: usize,
}

impl ScaleRange {
    pub fn new(eps_min: f64, eps_max: f64, n_scales: usize) -> Result<Self> {
        if !(eps_min > 0.0 && eps_min.is_finite() && eps_max.is_finite()) {
            return Err(Error::InvalidScaleRange(format!(
                "box sizes must be positive and finite, got [{eps_min}, {eps_max}]"
            )));
        }
        if eps_min >= eps_max {
            return Err(Error::InvalidScaleRange(format!(
                "eps_min {eps_min} must be below eps_max {eps_max}"
            )));
        }
        if n_scales < 5 {
            return Err(Error::InvalidScaleRange(format!(
                "need at least 5 scales, got {n_scales}"
            )));
        }
        Ok(Self {
            eps_min,
            eps_max,
            n_scales,
        })
    }

    /// Box sizes in increasing order.
    pub fn values(&self) -> Vec<f64> {
        let ratio = (self.eps_max / self.eps_min).ln();
        (0..self.n_scales)
            .map(|i| {
                let t = i as f64 / (self.n_scales - 1) as f64;
                if i + 1 == self.n_scales {
                    self.eps_max
                } else {
                    self.eps_min * (ratio * t).exp()
                }
            })
            .collect()
    }
}

/// Scale range used when none is given.
///
/// Runs from three times the narrowest band (never below the set's edge
/// tolerance, under which widths are not resolved) up to a tenth of the
/// set's extent. If that spans less than a decade, as for a window lying
/// inside one band, the two decades below the top are used instead.
pub fn default_scales(bs: &BandSet, n_scales: usize) -> Result<ScaleRange> {
    let (Some(first), Some(last)) = (bs.bands().first(), bs.bands().last()) else {
        return Err(Error::EmptyBandSet);
    };
    let narrowest = bs
        .bands()
        .iter()
        .map(|b| b.width())
        .filter(|&w| w > 0.0)
        .fold(f64::INFINITY, f64::min)
        .max(bs.tol);
    let eps_max = (last.hi - first.lo) / 10.0;
    if !(eps_max > 0.0) {
        return Err(Error::DegenerateRegression { usable: 0 });
    }
    let eps_min = if 3.0 * narrowest >= eps_max / 10.0 {
        eps_max / 100.0
    } else {
        3.0 * narrowest
    };
    ScaleRange::new(eps_min, eps_max, n_scales)
}

/// Result of a box-counting regression.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionEstimate {
    /// Slope of `log N(eps)` against `log(1/eps)`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub eps_values: Vec<f64>,
    pub counts: Vec<u64>,
    pub window: Option<(f64, f64)>,
    /// `3 *` the narrowest band; box sizes below it see the finite
    /// generation rather than the limit set.
    pub generation_cutoff: f64,
}

/// Band ends closer than this fraction of a cell to a grid line are taken to
/// lie on it, so that rounding in `lo / eps` cannot add a cell.
pub const GRID_SNAP: f64 = 1e-6;

fn snapped(t: f64) -> f64 {
    let r = t.round();
    if (t - r).abs() <= GRID_SNAP {
        r
    } else {
        t
    }
}

/// Number of grid cells `[m eps, (m + 1) eps)` meeting the band union.
///
/// Bands are treated as half-open on the right, so an endpoint that lands
/// exactly on a grid line does not claim the next cell.
pub fn box_count(bs: &BandSet, eps: f64) -> u64 {
    let mut count = 0u64;
    let mut last: Option<i64> = None;
    for b in bs.bands() {
        let first = snapped(b.lo / eps).floor() as i64;
        let end = if b.hi > b.lo {
            (snapped(b.hi / eps).ceil() as i64 - 1).max(first)
        } else {
            first
        };
        let start = match last {
            Some(l) => first.max(l + 1),
            None => first,
        };
        if end >= start {
            count += (end - start + 1) as u64;
        }
        last = Some(last.map_or(end, |l| l.max(end)));
    }
    count
}

/// Least-squares slope of `ln N` against `ln(1/eps)`.
pub fn box_dimension(bs: &BandSet, scales: &ScaleRange) -> Result<DimensionEstimate> {
    if bs.is_empty() {
        return Err(Error::EmptyBandSet);
    }
    let eps_values = scales.values();
    let counts: Vec<u64> = eps_values.iter().map(|&e| box_count(bs, e)).collect();
    let pts: Vec<(f64, f64)> = eps_values
        .iter()
        .zip(&counts)
        .filter(|(_, &n)| n > 0)
        .map(|(&e, &n)| (-e.ln(), (n as f64).ln()))
        .collect();
    let (slope, intercept, r_squared) = least_squares(&pts)?;
    Ok(DimensionEstimate {
        slope,
        intercept,
        r_squared,
        eps_values,
        counts,
        window: None,
        generation_cutoff: 3.0 * bs.min_width().unwrap_or(0.0),
    })
}

fn least_squares(pts: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let mut xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    xs.dedup();
    if xs.len() < 3 {
        return Err(Error::DegenerateRegression { usable: xs.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok((slope, my - slope * mx, r_squared))
}

/// Box dimension of `bs ∩ [center - half_width, center + half_width]`.
pub fn local_dimension_of(
    bs: &BandSet,
    center: f64,
    half_width: f64,
    scales: &ScaleRange,
) -> Result<DimensionEstimate> {
    let (lo, hi) = (center - half_width, center + half_width);
    let part = bs.restrict(lo, hi);
    if part.is_empty() {
        return Err(Error::EmptyWindow { lo, hi });
    }
    let mut est = box_dimension(&part, scales)?;
    est.window = Some((lo, hi));
    Ok(est)
}

/// Box dimension of `cover(k)` inside an energy window.
pub fn local_dimension(
    params: &ModelParams,
    center: f64,
    half_width: f64,
    k: usize,
    tol: f64,
    scales: &ScaleRange,
) -> Result<DimensionEstimate> {
    let c = cover(k, params, tol)?;
    local_dimension_of(&c, center, half_width, scales)
}

/// Large-coupling model of half the dimension of the trace map's
/// non-wandering set on the surface `FVI = V`.
///
/// Uses `F(V) = ln(1 + sqrt 2) / ln V`, which is exact only as `V -> inf`,
/// clamped to 1 below `V = 1 + sqrt 2` where the asymptote reaches 1.
/// At moderate `V` this is an extrapolation, not a measured value.
pub fn f_model(v: f64) -> Result<f64> {
    if !(v >= 0.0) {
        return Err(Error::InvalidParams(format!("F(V) needs V >= 0, got {v}")));
    }
    let c = std::f64::consts::SQRT_2.ln_1p();
    let clamp_at = c.exp();
    if v <= clamp_at {
        Ok(1.0)
    } else {
        Ok(c / v.ln())
    }
}

/// `F(FVI(E))`, the modelled local dimension of the spectrum at `E`.
pub fn predicted_local_dimension(energy: f64, params: &ModelParams) -> f64 {
    f_model(fvi_energy(energy, params)).expect("FVI is a square")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::Band;

    fn set(bands: &[(f64, f64)]) -> BandSet {
        BandSet::from_bands(bands.iter().map(|&(a, b)| Band::new(a, b)).collect(), 0.0).unwrap()
    }

    fn cantor(generation: u32) -> BandSet {
        let mut bands = vec![(0.0f64, 1.0f64)];
        for _ in 0..generation {
            bands = bands
                .into_iter()
                .flat_map(|(a, b)| {
                    let t = (b - a) / 3.0;
                    [(a, a + t), (b - t, b)]
                })
                .collect();
        }
        set(&bands)
    }

    #[test]
    fn box_count_examples() {
        assert_eq!(box_count(&set(&[(0.0, 1.0)]), 0.25), 4);
        assert_eq!(box_count(&set(&[(-2.0, 2.0)]), 1.0), 4);
        assert_eq!(box_count(&set(&[(0.0, 0.1), (0.9, 1.0)]), 0.5), 2);
        assert_eq!(box_count(&set(&[(0.3, 0.3)]), 0.5), 1);
        // bands sharing a cell are counted once
        assert_eq!(box_count(&set(&[(0.1, 0.2), (0.3, 0.4)]), 1.0), 1);
    }

    #[test]
    fn unit_interval_dimension() {
        let est = box_dimension(
            &set(&[(0.0, 1.0)]),
            &ScaleRange::new(1e-4, 1e-1, 12).unwrap(),
        )
        .unwrap();
        assert!((est.slope - 1.0).abs() <= 0.01, "{}", est.slope);
    }

    #[test]
    fn cantor_dimension() {
        let c = cantor(10);
        let scales = ScaleRange::new(3f64.powi(-9), 3f64.powi(-3), 13).unwrap();
        let est = box_dimension(&c, &scales).unwrap();
        let target = 2f64.ln() / 3f64.ln();
        assert!((est.slope - target).abs() <= 0.02, "{}", est.slope);
    }

    #[test]
    fn counts_monotone_on_nested_scales() {
        // scales differing by powers of 2 give nested grids
        let c = cantor(8);
        let scales = ScaleRange::new(1e-3, 1e-3 * 2f64.powi(8), 9).unwrap();
        let est = box_dimension(&c, &scales).unwrap();
        for w in est.counts.windows(2) {
            assert!(w[0] >= w[1], "{:?}", est.counts);
        }
    }

    #[test]
    fn dimension_errors() {
        let empty = set(&[]);
        let s = ScaleRange::new(1e-3, 1e-1, 6).unwrap();
        assert_eq!(box_dimension(&empty, &s), Err(Error::EmptyBandSet));
        assert!(ScaleRange::new(1e-1, 1e-3, 6).is_err());
        assert!(ScaleRange::new(0.0, 1e-3, 6).is_err());
        assert!(ScaleRange::new(1e-3, 1e-2, 4).is_err());
        assert!(matches!(
            local_dimension_of(&set(&[(0.0, 1.0)]), 5.0, 1.0, &s),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn default_scale_rule() {
        let s = default_scales(&cantor(6), 10).unwrap();
        assert!((s.eps_min - 3.0 * 3f64.powi(-6)).abs() < 1e-15);
        assert!((s.eps_max - 0.1).abs() < 1e-15);
        let s = default_scales(&set(&[(0.0, 1.0)]), 10).unwrap();
        assert!((s.eps_min - 1e-3).abs() < 1e-15);
        assert_eq!(default_scales(&set(&[]), 10), Err(Error::EmptyBandSet));
        assert!(default_scales(&set(&[(1.0, 1.0)]), 10).is_err());
    }

    #[test]
    fn f_model_values() {
        assert_eq!(f_model(0.0).unwrap(), 1.0);
        let v100 = f_model(100.0).unwrap();
        assert!((v100 - 0.1914).abs() < 5e-5, "{v100}");
        assert!(f_model(1e300).unwrap() < 0.002);
        assert!(f_model(-1.0).is_err());
        let mut prev = 1.0;
        for i in 0..1000 {
            let f = f_model(f64::from(i) * 0.37).unwrap();
            assert!(f <= prev && (0.0..=1.0).contains(&f));
            prev = f;
        }
    }

    #[test]
    fn predicted_dimension_examples() {
        let q = ModelParams::new(3.0, 4).unwrap();
        for j in 1..4 {
            let e = 2.0 * (std::f64::consts::PI * f64::from(j) / 4.0).cos();
            assert_eq!(predicted_local_dimension(e, &q), 1.0);
        }
        let q = ModelParams::new(20.0, 1).unwrap();
        for e in [-1.0, 5.0, 19.0] {
            assert!((predicted_local_dimension(e, &q) - f_model(100.0).unwrap()).abs() < 1e-12);
        }
    }
}
