//! Spectra of Fibonacci Hamiltonians sieved by a lattice spacing `l`.
//!
//! The operator acts on `l^2(Z)` as `(Hu)(n) = u(n+1) + u(n-1) + V(n) u(n)`
//! with `V(n) = lambda * w(n / l)` when `l | n` and `0` otherwise, where `w`
//! is the Fibonacci substitution fixed point. Spectra are approximated by
//! band sets derived from the trace-map recursion of half-traces of
//! transfer matrices.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fractal;
pub mod io;
pub mod lyapunov;
pub mod model;
pub mod oracle;
pub mod spectrum;
pub mod tracemap;
pub mod transfer;

pub use error::{Error, Result};
pub use fractal::{
    box_count, box_dimension, default_scales, f_model, local_dimension, predicted_local_dimension,
    DimensionEstimate, ScaleRange,
};
pub use lyapunov::{
    lyapunov_exponent, uh_scan, EnergyGrid, LyapunovEstimate, LyapunovMethod, UhPoint, UhVerdict,
};
pub use model::{
    fibonacci, omega_zero, sieved_potential, substitution_word, BinaryWord, ModelParams,
};
pub use oracle::{
    build_truncation, eigenvalues, spectral_consistency, ConsistencyReport, TridiagonalOperator,
};
pub use spectrum::{cover, membership, sigma_k_bands, Band, BandSet, BandSetKind, Membership};
pub use tracemap::{classify_orbit, trace_map_step, OrbitClassification, TraceTriple};
pub use transfer::{fvi_energy, half_trace_at, HalfTrace, Mat2};
