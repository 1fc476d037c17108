//! Transfer matrices, the `M_k` renormalization and half-traces.
//!
//! The half-traces `x_k = tr(M_k) / 2` obey `x_{k+1} = 2 x_k x_{k-1} - x_{k-2}`
//! with `x_{-1} = 1`. The seeds `x_0` and `x_1` are evaluated through the
//! Chebyshev recurrence `a_{j+1} = E a_j - a_{j-1}`, `a_0 = 0`, `a_1 = 1`,
//! for which `Y(E)^j = [a_{j+1} -a_j; a_j -a_{j-1}]`. This keeps the
//! removable singularity of `(xi^l - xi^-l) / (xi - xi^-1)` at `E = +-2`
//! out of the arithmetic entirely.

use std::ops::Mul;

use serde::Serialize;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Magnitude at which the linear recursion stops (or switches to log mode).
pub const DEFAULT_ESCAPE_CAP: f64 = 1e8;

/// Certified escape requires two consecutive half-traces above
/// `1 + max(ESCAPE_MARGIN, bound)`, where `bound` is the running error bound
/// of [`half_traces_recursive`].
///
/// Near the special energies of the sieved model the orbit shadows a
/// hyperbolic periodic orbit with `|x_k| = 1`; the rounding of `E` itself is
/// amplified by `phi^2` per step and must not be mistaken for escape.
pub const ESCAPE_MARGIN: f64 = 1e-9;

/// Row-major 2x2 real matrix `[a b; c d]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn half_trace(&self) -> f64 {
        0.5 * self.trace()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.a
            .abs()
            .max(self.b.abs())
            .max(self.c.abs())
            .max(self.d.abs())
    }

    /// Spectral norm (largest singular value).
    pub fn norm(&self) -> f64 {
        let fro2 = self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d;
        let det = self.det();
        let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0);
        (0.5 * (fro2 + disc.sqrt())).sqrt()
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    pub fn pow(&self, n: u32) -> Mat2 {
        (0..n).fold(Mat2::IDENTITY, |acc, _| acc * *self)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, r: Mat2) -> Mat2 {
        Mat2::new(
            self.a * r.a + self.b * r.c,
            self.a * r.b + self.b * r.d,
            self.c * r.a + self.d * r.c,
            self.c * r.b + self.d * r.d,
        )
    }
}

/// One-step transfer matrix `Y(s) = [s -1; 1 0]`.
pub fn y_matrix(s: f64) -> Mat2 {
    Mat2::new(s, -1.0, 1.0, 0.0)
}

/// `(M_{-1}, M_0, M_1)` with `M_0 = Y(E)^l` and `M_1 = M_{-1} M_0`.
pub fn initial_matrices(energy: f64, params: &ModelParams) -> (Mat2, Mat2, Mat2) {
    let m_minus1 = Mat2::new(1.0, -params.lambda, 0.0, 1.0);
    let (am1, a0, a1) = chebyshev_triple(energy, params.ell);
    let m0 = Mat2::new(a1, -a0, a0, -am1);
    (m_minus1, m0, m_minus1 * m0)
}

/// `(a_{l-1}, a_l, a_{l+1})` of the Chebyshev recurrence at `E`.
fn chebyshev_triple(energy: f64, ell: u32) -> (f64, f64, f64) {
    let (mut prev, mut cur) = (0.0, 1.0);
    for _ in 1..ell {
        let next = energy * cur - prev;
        prev = cur;
        cur = next;
    }
    (prev, cur, energy * cur - prev)
}

/// Derivatives in `E` of the same triple.
fn chebyshev_triple_derivative(energy: f64, ell: u32) -> (f64, f64, f64) {
    let (mut prev, mut cur) = (0.0, 1.0);
    let (mut dprev, mut dcur) = (0.0, 0.0);
    for _ in 1..ell {
        let next = energy * cur - prev;
        let dnext = cur + energy * dcur - dprev;
        prev = cur;
        cur = next;
        dprev = dcur;
        dcur = dnext;
    }
    (dprev, dcur, cur + energy * dcur - dprev)
}

/// `(xi^l - xi^-l) / (xi - xi^-1)` where `E = xi + 1/xi`, continuous in `E`.
///
/// Equals `sin(l t) / sin(t)` for `E = 2 cos t` and `l * (+-1)^(l+1)` at `E = +-2`.
pub fn dirichlet_ratio(energy: f64, ell: u32) -> f64 {
    chebyshev_triple(energy, ell).1
}

/// `x_0 = (xi^l + xi^-l) / 2`.
pub fn x0_closed(energy: f64, params: &ModelParams) -> f64 {
    let (am1, _, a1) = chebyshev_triple(energy, params.ell);
    0.5 * (a1 - am1)
}

/// `x_1 = x_0 - (lambda / 2) (xi^l - xi^-l) / (xi - xi^-1)`.
pub fn x1_closed(energy: f64, params: &ModelParams) -> f64 {
    let (am1, a0, a1) = chebyshev_triple(energy, params.ell);
    0.5 * (a1 - am1) - 0.5 * params.lambda * a0
}

/// Fricke-Vogt invariant `x^2 + y^2 + z^2 - 2xyz - 1`.
pub fn fvi_triple(x: f64, y: f64, z: f64) -> f64 {
    x * x + y * y + z * z - 2.0 * x * y * z - 1.0
}

/// Fricke-Vogt invariant along the curve of initial conditions.
pub fn fvi_energy(energy: f64, params: &ModelParams) -> f64 {
    let r = dirichlet_ratio(energy, params.ell);
    0.25 * params.lambda * params.lambda * r * r
}

/// Half-traces `x_{-1}, x_0, ..., x_K` at one energy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfTraceRun {
    pub params: ModelParams,
    pub energy: f64,
    /// `values[0]` is `x_{-1}`, `values[k + 1]` is `x_k`.
    pub values: Vec<f64>,
    /// First-order bound on `|x_k - x_k(E')|` over all `E'` that round to
    /// `energy`, including rounding in the recursion; aligned with `values`.
    pub bounds: Vec<f64>,
    /// First `k >= 0` with `|x_k|` and `|x_{k+1}|` both certified above one.
    pub escape_index: Option<usize>,
    /// Generation at which the run stopped because `|x_k|` exceeded the cap.
    pub stopped_at: Option<usize>,
}

impl HalfTraceRun {
    /// `x_k` for `k >= -1`, if computed.
    pub fn x(&self, k: isize) -> Option<f64> {
        usize::try_from(k + 1)
            .ok()
            .and_then(|i| self.values.get(i))
            .copied()
    }

    /// Largest generation computed.
    pub fn last_k(&self) -> usize {
        self.values.len().saturating_sub(2)
    }
}

pub(crate) fn escapes(x: f64) -> bool {
    x.abs() > 1.0 + ESCAPE_MARGIN
}

fn escapes_within(x: f64, bound: f64) -> bool {
    x.abs() > 1.0 + ESCAPE_MARGIN.max(bound)
}

/// Error bounds for `(x_0, x_1)`: input rounding of `E` through `dx/dE`
/// plus the Chebyshev evaluation.
fn seed_bounds(energy: f64, params: &ModelParams) -> (f64, f64) {
    const U: f64 = f64::EPSILON;
    let (am1, a0, a1) = chebyshev_triple(energy, params.ell);
    let (dam1, da0, da1) = chebyshev_triple_derivative(energy, params.ell);
    let spread = U * energy.abs();
    let eval = 4.0 * f64::from(params.ell) * U * (1.0 + energy.abs());
    let dx0 = 0.5 * (da1 - dam1);
    let dx1 = dx0 - 0.5 * params.lambda * da0;
    let b0 = dx0.abs() * spread + eval * (1.0 + a1.abs() + am1.abs());
    let b1 = dx1.abs() * spread + eval * (1.0 + a1.abs() + am1.abs() + params.lambda * a0.abs());
    (b0, b1)
}

/// Scalar recursion for the half-traces up to `x_{k_max}`.
///
/// Stops after the first `x_k` above `escape_cap` once escape has been
/// certified (or at `k_max`).
pub fn half_traces_recursive(
    energy: f64,
    params: &ModelParams,
    k_max: usize,
    escape_cap: f64,
) -> HalfTraceRun {
    let (b0, b1) = seed_bounds(energy, params);
    let mut values = Vec::with_capacity(k_max + 2);
    let mut bounds = Vec::with_capacity(k_max + 2);
    values.extend([1.0, x0_closed(energy, params)]);
    bounds.extend([0.0, b0]);
    let mut escape_index = None;
    let mut stopped_at = None;
    if k_max >= 1 {
        values.push(x1_closed(energy, params));
        bounds.push(b1);
    }
    loop {
        let kk = values.len() - 2;
        // escape check on the pair (x_{kk-1}, x_kk)
        if escape_index.is_none()
            && kk >= 1
            && escapes_within(values[kk], bounds[kk])
            && escapes_within(values[kk + 1], bounds[kk + 1])
        {
            escape_index = Some(kk - 1);
        }
        if kk >= k_max {
            break;
        }
        if escape_index.is_some() && values[kk + 1].abs() > escape_cap {
            stopped_at = Some(kk);
            break;
        }
        let n = values.len();
        let (a, b, c) = (values[n - 1], values[n - 2], values[n - 3]);
        let (ea, eb, ec) = (bounds[n - 1], bounds[n - 2], bounds[n - 3]);
        let next = 2.0 * a * b - c;
        let rounding = 2.0 * f64::EPSILON * (2.0 * (a * b).abs() + c.abs());
        values.push(next);
        bounds.push(2.0 * (a.abs() * eb + b.abs() * ea + ea * eb) + ec + rounding);
    }
    HalfTraceRun {
        params: *params,
        energy,
        values,
        bounds,
        escape_index,
        stopped_at,
    }
}

/// 2x2 matrix in double-double arithmetic, `[a b; c d]`.
#[derive(Clone, Copy)]
struct WideMat([TwoFloat; 4]);

impl WideMat {
    fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self([a.into(), b.into(), c.into(), d.into()])
    }

    fn mul(&self, o: &WideMat) -> WideMat {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = o.0;
        WideMat([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }

    fn half_trace(&self) -> f64 {
        f64::from((self.0[0] + self.0[3]) * 0.5)
    }

    fn is_finite(&self) -> bool {
        self.0.iter().all(|x| f64::from(*x).is_finite())
    }
}

/// Half-traces `(tr M_k) / 2` for `k = -1..=k_max` by explicit matrix
/// products, with `M_0` formed as the literal power `Y(E)^l`.
///
/// Products are carried in double-double precision: entries of `M_k` can
/// be far larger than its trace, and this route serves as the reference
/// for the scalar recursion.
pub fn half_traces_matrix(energy: f64, params: &ModelParams, k_max: usize) -> Result<Vec<f64>> {
    let mm1 = WideMat::new(1.0, -params.lambda, 0.0, 1.0);
    let y = WideMat::new(energy, -1.0, 1.0, 0.0);
    let m0 = (1..params.ell).fold(y, |acc, _| y.mul(&acc));
    let m1 = mm1.mul(&m0);
    let mut out = vec![mm1.half_trace(), m0.half_trace()];
    if k_max >= 1 {
        out.push(m1.half_trace());
    }
    let (mut older, mut newer) = (m0, m1);
    for k in 2..=k_max {
        let next = older.mul(&newer);
        if !next.is_finite() {
            return Err(Error::EntryOverflow { k });
        }
        out.push(next.half_trace());
        older = newer;
        newer = next;
    }
    Ok(out)
}

/// `M_k` itself, by the product recursion.
pub fn m_matrix(energy: f64, params: &ModelParams, k: isize) -> Result<Mat2> {
    let (mm1, m0, m1) = initial_matrices(energy, params);
    match k {
        ..=-2 => Err(Error::InvalidParams(format!("M_{k} is undefined"))),
        -1 => Ok(mm1),
        0 => Ok(m0),
        _ => {
            let (mut older, mut newer) = (m0, m1);
            for step in 2..=k as usize {
                let next = older * newer;
                if !next.is_finite() {
                    return Err(Error::EntryOverflow { k: step });
                }
                older = newer;
                newer = next;
            }
            Ok(newer)
        }
    }
}

/// `dx_k/dE` for `k = -1..`, aligned with the values of
/// [`half_traces_recursive`] run with the same cap.
pub fn half_trace_derivatives(
    energy: f64,
    params: &ModelParams,
    k_max: usize,
    escape_cap: f64,
) -> Vec<f64> {
    let run = half_traces_recursive(energy, params, k_max, escape_cap);
    let (dam1, da0, da1) = chebyshev_triple_derivative(energy, params.ell);
    let dx0 = 0.5 * (da1 - dam1);
    let mut d = vec![0.0, dx0];
    if run.values.len() > 2 {
        d.push(dx0 - 0.5 * params.lambda * da0);
    }
    let x = &run.values;
    for i in 3..x.len() {
        // x_i = 2 x_{i-1} x_{i-2} - x_{i-3} in storage indices
        let next = 2.0 * (d[i - 1] * x[i - 2] + x[i - 1] * d[i - 2]) - d[i - 3];
        d.push(next);
    }
    d
}

/// A half-trace that may be too large for `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum HalfTrace {
    Linear(f64),
    /// `sign * exp(ln_abs)`.
    Log {
        sign: f64,
        ln_abs: f64,
    },
}

impl HalfTrace {
    pub fn signum(&self) -> f64 {
        match *self {
            HalfTrace::Linear(0.0) => 0.0,
            HalfTrace::Linear(x) => x.signum(),
            HalfTrace::Log { sign, .. } => sign,
        }
    }

    pub fn ln_abs(&self) -> f64 {
        match *self {
            HalfTrace::Linear(x) => x.abs().ln(),
            HalfTrace::Log { ln_abs, .. } => ln_abs,
        }
    }

    /// Value as `f64`; saturates to an infinity in log mode beyond range.
    pub fn to_f64(&self) -> f64 {
        match *self {
            HalfTrace::Linear(x) => x,
            HalfTrace::Log { sign, ln_abs } => sign * ln_abs.exp(),
        }
    }

    /// `s * x > 1` for `s = +-1`.
    pub fn beyond(&self, s: f64) -> bool {
        match *self {
            HalfTrace::Linear(x) => s * x > 1.0,
            HalfTrace::Log { sign, ln_abs } => sign * s > 0.0 && ln_abs > 0.0,
        }
    }

    pub fn abs_le_one(&self) -> bool {
        !self.beyond(1.0) && !self.beyond(-1.0)
    }

    fn escapes(&self) -> bool {
        match *self {
            HalfTrace::Linear(x) => escapes(x),
            HalfTrace::Log { ln_abs, .. } => ln_abs > ESCAPE_MARGIN.ln_1p(),
        }
    }
}

/// Half-trace sequence that continues in sign/log form after a certified escape.
///
/// Once two consecutive values exceed one in modulus and the latest exceeds
/// [`DEFAULT_ESCAPE_CAP`], every later step is evaluated as
/// `x_{k+1} = 2 x_k x_{k-1} (1 - r)` with `r = x_{k-2} / (2 x_k x_{k-1})`
/// in logarithmic form, so the orbit can be followed to any depth.
#[derive(Debug, Clone)]
pub struct HalfTraceIter {
    window: [HalfTrace; 3],
    filled: usize,
    escaped: bool,
    log_mode: bool,
    energy: f64,
    params: ModelParams,
}

impl HalfTraceIter {
    pub fn new(energy: f64, params: &ModelParams) -> Self {
        Self {
            window: [HalfTrace::Linear(0.0); 3],
            filled: 0,
            escaped: false,
            log_mode: false,
            energy,
            params: *params,
        }
    }

    fn step(&self) -> HalfTrace {
        let [c, b, a] = self.window; // x_{k-2}, x_{k-1}, x_k
        if !self.log_mode {
            if let (HalfTrace::Linear(a), HalfTrace::Linear(b), HalfTrace::Linear(c)) = (a, b, c) {
                return HalfTrace::Linear(2.0 * a * b - c);
            }
        }
        let ln_lead = std::f64::consts::LN_2 + a.ln_abs() + b.ln_abs();
        let sign_lead = a.signum() * b.signum();
        let r = c.signum() * sign_lead * (c.ln_abs() - ln_lead).exp();
        let factor = 1.0 - r;
        HalfTrace::Log {
            sign: sign_lead * factor.signum(),
            ln_abs: ln_lead + factor.abs().ln(),
        }
    }
}

impl Iterator for HalfTraceIter {
    type Item = HalfTrace;

    fn next(&mut self) -> Option<HalfTrace> {
        let value = match self.filled {
            0 => HalfTrace::Linear(1.0),
            1 => HalfTrace::Linear(x0_closed(self.energy, &self.params)),
            2 => HalfTrace::Linear(x1_closed(self.energy, &self.params)),
            _ => self.step(),
        };
        if self.filled >= 2 && !self.escaped && value.escapes() && self.window[2].escapes() {
            self.escaped = true;
        }
        if self.escaped && value.ln_abs() > DEFAULT_ESCAPE_CAP.ln() {
            self.log_mode = true;
        }
        self.window = [self.window[1], self.window[2], value];
        self.filled += 1;
        Some(value)
    }
}

/// `x_{-1}, ..., x_{k_max}` without overflow.
pub fn half_traces_log(energy: f64, params: &ModelParams, k_max: usize) -> Vec<HalfTrace> {
    HalfTraceIter::new(energy, params).take(k_max + 2).collect()
}

/// `x_k` alone, without overflow.
pub fn half_trace_at(energy: f64, params: &ModelParams, k: usize) -> HalfTrace {
    HalfTraceIter::new(energy, params)
        .nth(k + 1)
        .expect("iterator is infinite")
}
