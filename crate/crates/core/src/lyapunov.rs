//! Per-site Lyapunov exponents along the substitution fixed point and a
//! uniform-hyperbolicity scan.
//!
//! Exponents are normalized per lattice site of the sieved operator: the
//! block product `M_k` spans `l F_k` sites.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{fibonacci, ModelParams};
use crate::tracemap::{classify_orbit, OrbitClassification};
use crate::transfer::{half_trace_at, initial_matrices, y_matrix, Mat2};

/// Site-ordered products are rescaled after this many factors.
pub const RENORMALIZE_EVERY: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LyapunovMethod {
    MatrixNorm,
    TraceGrowth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovEstimate {
    pub energy: f64,
    /// Log growth per lattice site.
    pub value: f64,
    pub k_used: usize,
    pub method: LyapunovMethod,
}

/// `(A, s)` with `M_k = e^s A` and `max|A_ij| = 1`.
pub fn renormalized_m_k(energy: f64, params: &ModelParams, k: usize) -> (Mat2, f64) {
    fn normalize(m: Mat2, s: f64) -> (Mat2, f64) {
        let scale = m.max_abs();
        (m.scale(1.0 / scale), s + scale.ln())
    }
    let (_, m0, m1) = initial_matrices(energy, params);
    let mut older = normalize(m0, 0.0);
    let mut newer = normalize(m1, 0.0);
    if k == 0 {
        return older;
    }
    for _ in 2..=k {
        let next = normalize(older.0 * newer.0, older.1 + newer.1);
        older = newer;
        newer = next;
    }
    newer
}

/// `ln ||M_k||`.
pub fn log_norm_m_k(energy: f64, params: &ModelParams, k: usize) -> f64 {
    let (a, s) = renormalized_m_k(energy, params, k);
    s + a.norm().ln()
}

/// `ln ||Y(E - v_{n-1}) ... Y(E - v_0)||` for the given site potentials.
pub fn site_product_log_norm(energy: f64, sites: &[f64]) -> f64 {
    let mut m = Mat2::IDENTITY;
    let mut log_scale = 0.0;
    for (i, &v) in sites.iter().enumerate() {
        m = y_matrix(energy - v) * m;
        if (i + 1) % RENORMALIZE_EVERY == 0 {
            let s = m.max_abs();
            m = m.scale(1.0 / s);
            log_scale += s.ln();
        }
    }
    log_scale + m.norm().ln()
}

fn sites_per_block(params: &ModelParams, k: usize) -> Result<f64> {
    Ok(f64::from(params.ell) * fibonacci(k)? as f64)
}

/// Lyapunov exponent estimate at generation `k_max` (at least 5).
///
/// Escaping energies use `ln|x_k| / (l F_k)`, followed in log form so any
/// depth is reachable; bounded ones use `ln ||M_k|| / (l F_k)`.
pub fn lyapunov_exponent(
    energy: f64,
    params: &ModelParams,
    k_max: usize,
) -> Result<LyapunovEstimate> {
    if k_max < 5 {
        return Err(Error::InvalidParams(format!(
            "k_max must be >= 5, got {k_max}"
        )));
    }
    let sites = sites_per_block(params, k_max)?;
    let (value, method) = match classify_orbit(energy, params, k_max) {
        OrbitClassification::Escaped { .. } => (
            half_trace_at(energy, params, k_max).ln_abs() / sites,
            LyapunovMethod::TraceGrowth,
        ),
        OrbitClassification::BoundedUpTo { .. } => (
            log_norm_m_k(energy, params, k_max) / sites,
            LyapunovMethod::MatrixNorm,
        ),
    };
    Ok(LyapunovEstimate {
        energy,
        value: value.max(0.0),
        k_used: k_max,
        method,
    })
}

/// Uniform grid `lo ..= hi` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl EnergyGrid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) || n == 0 || (n == 1 && lo != hi) {
            return Err(Error::InvalidParams(format!(
                "bad energy grid {lo}:{hi}:{n}"
            )));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                if i + 1 == self.n {
                    self.hi
                } else {
                    self.lo + step * i as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UhVerdict {
    UhLike,
    NotUhLike,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UhPoint {
    pub energy: f64,
    pub verdict: UhVerdict,
    pub exponent: LyapunovEstimate,
}

/// Marks an energy uniformly-hyperbolic-like when escape is certified within
/// `k_max` and the exponent exceeds `threshold`.
pub fn uh_scan(
    params: &ModelParams,
    grid: &EnergyGrid,
    k_max: usize,
    threshold: f64,
) -> Result<Vec<UhPoint>> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidParams(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    grid.points()
        .into_par_iter()
        .map(|e| {
            let exponent = lyapunov_exponent(e, params, k_max)?;
            let escaped = classify_orbit(e, params, k_max).is_escaped();
            let verdict = if escaped && exponent.value > threshold {
                UhVerdict::UhLike
            } else {
                UhVerdict::NotUhLike
            };
            Ok(UhPoint {
                energy: e,
                verdict,
                exponent,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{period_word, sieved_sites};

    fn p(lambda: f64, ell: u32) -> ModelParams {
        ModelParams::with_coupling(lambda, ell).unwrap()
    }

    fn free_rate(e: f64) -> f64 {
        let xi = 0.5 * (e.abs() + (e * e - 4.0).sqrt());
        xi.ln()
    }

    #[test]
    fn free_exponent() {
        let est = lyapunov_exponent(3.0, &p(0.0, 1), 25).unwrap();
        let xi = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((est.value - xi.ln()).abs() < 1e-3);
        assert!((xi.ln() - 0.9624).abs() < 1e-4);
        assert_eq!(est.method, LyapunovMethod::TraceGrowth);
    }

    #[test]
    fn special_energy_exponent_vanishes() {
        let est = lyapunov_exponent(0.0, &p(2.0, 2), 20).unwrap();
        assert_eq!(est.method, LyapunovMethod::MatrixNorm);
        assert!(est.value.abs() <= 0.05, "{}", est.value);
    }

    #[test]
    fn large_energy_exponent_matches_explicit_products() {
        let q = p(4.0, 1);
        let est = lyapunov_exponent(10.0, &q, 20).unwrap();
        assert!(est.value > 0.5);
        // explicit site products along the fixed point
        for k in 6..=10 {
            let sites = sieved_sites(&q, &period_word(k).unwrap());
            let explicit = site_product_log_norm(10.0, &sites) / sites.len() as f64;
            let block = log_norm_m_k(10.0, &q, k) / sites.len() as f64;
            assert!((explicit - block).abs() < 1e-9 * explicit.abs().max(1.0));
            assert!(explicit > 0.5);
        }
    }

    #[test]
    fn methods_agree_on_escaping_energies() {
        for &(lambda, ell) in &[(2.0, 1), (3.0, 2), (4.0, 3)] {
            let q = p(lambda, ell);
            for e in [-2.9, lambda + 2.7, 0.5 * lambda + 0.13] {
                if !classify_orbit(e, &q, 20).is_escaped() {
                    continue;
                }
                let trace = half_trace_at(e, &q, 20).ln_abs();
                let norm = log_norm_m_k(e, &q, 20);
                assert!(
                    (trace - norm).abs() <= 0.05 * norm,
                    "e={e}: {trace} vs {norm}"
                );
            }
        }
    }

    #[test]
    fn free_grid_matches_closed_form() {
        let q = p(0.0, 1);
        for i in 0..20 {
            let e = 2.1 + 7.9 * f64::from(i) / 19.0;
            for s in [e, -e] {
                let est = lyapunov_exponent(s, &q, 25).unwrap();
                assert!((est.value - free_rate(s)).abs() <= 1e-3, "E={s}");
            }
        }
    }

    #[test]
    fn uh_scan_examples() {
        let grid = EnergyGrid::new(-4.0, 4.0, 161).unwrap();
        let pts = uh_scan(&p(0.0, 1), &grid, 25, 1e-3).unwrap();
        for pt in &pts {
            if pt.energy.abs() > 2.01 {
                assert_eq!(pt.verdict, UhVerdict::UhLike, "{}", pt.energy);
            } else if pt.energy.abs() < 1.99 {
                assert_eq!(pt.verdict, UhVerdict::NotUhLike, "{}", pt.energy);
            }
        }
        let q = p(3.0, 2);
        let grid = EnergyGrid::new(0.0, 6.0, 2).unwrap();
        let pts = uh_scan(&q, &grid, 20, 0.01).unwrap();
        assert_eq!(pts[0].verdict, UhVerdict::NotUhLike);
        assert_eq!(pts[1].verdict, UhVerdict::UhLike);
        assert!(EnergyGrid::new(1.0, 0.0, 3).is_err());
        assert!(uh_scan(&q, &grid, 20, 0.0).is_err());
    }

    #[test]
    fn rejects_shallow_depth() {
        assert!(lyapunov_exponent(1.0, &p(1.0, 1), 4).is_err());
    }
}
