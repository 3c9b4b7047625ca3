//! Spectral extinction analysis.
//!
//! The spread dies out from any initial condition when the spectral radius
//! of `A ⊙ W` (elementwise product of counts and link probabilities) is
//! strictly below 1. The condition is sufficient only: a radius at or above
//! 1 is reported as "not guaranteed", never as "persists".

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::matrix::Mat;
use crate::network::{NetworkKind, TransmissionNetwork};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("hadamard product requires equal shapes: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("spectral radius requires a square matrix, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("matrix contains a non-finite entry at [{0}][{1}]")]
    NonFinite(usize, usize),
    #[error("extinction analysis requires an epidemic network kind, got {0:?}")]
    NotEpidemic(NetworkKind),
    #[error("homogeneous threshold requires a symmetric 0/1 adjacency with zero diagonal: {0}")]
    BadHomogeneousAdjacency(String),
    #[error("homogeneous threshold requires delta in (0,1) and beta in [0,1), got delta={0}, beta={1}")]
    BadHomogeneousRates(f64, f64),
}

/// How a spectral radius value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpectralMethod {
    PowerIteration,
    DenseEigen,
}

/// Diagnostics attached to a spectral-radius estimate.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub method: SpectralMethod,
    pub iterations: usize,
    /// `‖Mx − λx‖∞ / ‖x‖∞` at the final iterate (0 for the dense route).
    pub residual: f64,
    pub converged: bool,
    /// Dense-eigenvalue value when the cross-check ran (`n ≤ 64`).
    pub cross_check: Option<f64>,
}

/// Verdict of the extinction threshold check on a network.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub spectral_radius: f64,
    /// True iff `spectral_radius < 1` strictly.
    pub extinction_guaranteed: bool,
    /// `|radius − 1| < 1e−9`: strict comparison is numerically meaningless.
    pub boundary_indeterminate: bool,
    pub method: SpectralMethod,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Elementwise (Hadamard) product.
pub fn hadamard(a: &Mat, b: &Mat) -> Result<Mat, AnalysisError> {
    if !a.same_shape(b) {
        return Err(AnalysisError::ShapeMismatch(
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols(),
        ));
    }
    Ok(Mat::from_fn(a.rows(), a.cols(), |i, j| {
        a[(i, j)] * b[(i, j)]
    }))
}

const MAX_POWER_ITERATIONS: usize = 20_000;
const MAX_RESTARTS: usize = 3;
/// Dense cross-check ceiling.
const DENSE_LIMIT: usize = 64;
/// `|radius − 1|` below this is reported as indeterminate.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;

/// Largest absolute eigenvalue via a general dense eigen routine
/// (Schur-based complex eigenvalues; handles non-symmetric matrices).
/// `None` when the bounded Schur iteration does not converge.
fn dense_spectral_radius(m: &Mat) -> Option<f64> {
    if m.as_slice().iter().all(|&v| v == 0.0) {
        return Some(0.0);
    }
    let n = m.rows();
    let dm = DMatrix::from_fn(n, n, |i, j| m[(i, j)]);
    let schur = nalgebra::linalg::Schur::try_new(dm, 1e-13, 200_000)?;
    Some(
        schur
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max),
    )
}

/// Deterministic positive pseudo-random restart vector (splitmix64 bits).
fn restart_vector(n: usize, salt: u64) -> Vec<f64> {
    let mut state = 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(salt | 1);
    (0..n)
        .map(|_| {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^= z >> 31;
            // strictly positive in (0.1, 1.1): keeps Collatz ratios defined
            0.1 + (z >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

/// Power iteration for a nonnegative matrix, on the shifted form `M + σI`
/// so that complex or negative eigenvalues on the spectral circle cannot
/// stall convergence. The Collatz–Wielandt max ratio bounds the radius
/// from above; the stopping rule is the eigen-residual, which closes even
/// for reducible matrices (where the min/max ratio gap never does).
fn power_iteration_nonnegative(m: &Mat, tol: f64) -> (f64, usize, f64, bool) {
    let n = m.rows();
    let upper: f64 = (0..n)
        .map(|i| m.row(i).iter().sum::<f64>())
        .fold(0.0, f64::max);
    if upper == 0.0 {
        return (0.0, 0, 0.0, true);
    }
    let sigma = 0.125 * upper;
    let mut total_iters = 0;
    let mut best = (f64::NAN, f64::INFINITY); // (radius, residual)
    for restart in 0..=MAX_RESTARTS {
        let mut x = restart_vector(n, restart as u64 + 1);
        let norm0 = x.iter().fold(0.0f64, |a, &v| a.max(v));
        x.iter_mut().for_each(|v| *v /= norm0);
        let mut lambda = 0.0;
        let mut residual = f64::INFINITY;
        for _ in 0..MAX_POWER_ITERATIONS {
            total_iters += 1;
            let mut y = m.matvec(&x);
            for i in 0..n {
                y[i] += sigma * x[i];
            }
            // x stays positive: the shifted diagonal is at least σ
            lambda = (0..n).map(|i| y[i] / x[i]).fold(0.0f64, f64::max);
            residual = (0..n)
                .map(|i| (y[i] - lambda * x[i]).abs())
                .fold(0.0, f64::max);
            let ymax = y.iter().fold(0.0f64, |a, &v| a.max(v));
            x = y.into_iter().map(|v| v / ymax).collect();
            if residual <= tol * lambda.max(1.0) {
                return (
                    (lambda - sigma).max(0.0),
                    total_iters,
                    residual,
                    true,
                );
            }
        }
        if residual < best.1 {
            best = ((lambda - sigma).max(0.0), residual);
        }
    }
    (best.0, total_iters, best.1, false)
}

/// Growth-rate power iteration for matrices with mixed signs: the dominant
/// eigenvalue may be a complex pair, so the per-step norm ratio oscillates;
/// a geometric mean over a trailing window converges to `|λ|max`.
fn power_iteration_general(m: &Mat, tol: f64) -> (f64, usize, f64, bool) {
    let n = m.rows();
    let mut x = restart_vector(n, 7);
    let norm0: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= norm0);
    const WINDOW: usize = 24;
    let mut ratios = Vec::with_capacity(MAX_POWER_ITERATIONS);
    let mut estimate = 0.0;
    for it in 1..=MAX_POWER_ITERATIONS {
        let y = m.matvec(&x);
        let norm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return (0.0, it, 0.0, true);
        }
        ratios.push(norm);
        x = y.into_iter().map(|v| v / norm).collect();
        if ratios.len() >= 2 * WINDOW {
            let recent: f64 = ratios[ratios.len() - WINDOW..]
                .iter()
                .map(|r| r.ln())
                .sum::<f64>()
                / WINDOW as f64;
            let prev: f64 = ratios[ratios.len() - 2 * WINDOW..ratios.len() - WINDOW]
                .iter()
                .map(|r| r.ln())
                .sum::<f64>()
                / WINDOW as f64;
            let spread = (recent - prev).abs();
            estimate = recent.exp();
            if spread <= tol {
                return (estimate, it, spread, true);
            }
        }
    }
    (estimate, MAX_POWER_ITERATIONS, f64::INFINITY, false)
}

/// Spectral radius `max_i |λ_i|` of a square matrix.
///
/// Nonnegative matrices use shifted power iteration with restarts; matrices
/// up to 64×64 are cross-checked against (or, with mixed signs, delegated
/// to) a dense eigenvalue routine. Non-convergence is reported in the
/// attached [`SpectralReport`], not as an error.
pub fn spectral_radius(m: &Mat, tol: f64) -> Result<(f64, SpectralReport), AnalysisError> {
    if !m.is_square() {
        return Err(AnalysisError::NotSquare(m.rows(), m.cols()));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(AnalysisError::BadTolerance(tol));
    }
    for ((i, j), v) in m.iter() {
        if !v.is_finite() {
            return Err(AnalysisError::NonFinite(i, j));
        }
    }
    let nonnegative = m.as_slice().iter().all(|&v| v >= 0.0);
    let small = m.rows() <= DENSE_LIMIT;

    if nonnegative {
        let (radius, iterations, residual, converged) = power_iteration_nonnegative(m, tol);
        let cross = if small { dense_spectral_radius(m) } else { None };
        if let (false, Some(dense)) = (converged, cross) {
            // unconverged but a dense value exists: fall back to it
            return Ok((
                dense,
                SpectralReport {
                    method: SpectralMethod::DenseEigen,
                    iterations,
                    residual,
                    converged: true,
                    cross_check: Some(dense),
                },
            ));
        }
        Ok((
            radius,
            SpectralReport {
                method: SpectralMethod::PowerIteration,
                iterations,
                residual,
                converged,
                cross_check: cross,
            },
        ))
    } else {
        if small {
            if let Some(radius) = dense_spectral_radius(m) {
                return Ok((
                    radius,
                    SpectralReport {
                        method: SpectralMethod::DenseEigen,
                        iterations: 0,
                        residual: 0.0,
                        converged: true,
                        cross_check: Some(radius),
                    },
                ));
            }
        }
        let (radius, iterations, residual, converged) = power_iteration_general(m, tol);
        Ok((
            radius,
            SpectralReport {
                method: SpectralMethod::PowerIteration,
                iterations,
                residual,
                converged,
                cross_check: None,
            },
        ))
    }
}

pub const DEFAULT_SPECTRAL_TOLERANCE: f64 = 1e-10;

/// Extinction threshold check: spectral radius of `A ⊙ W` strictly below 1
/// guarantees die-out for single- and multi-particle dynamics alike.
pub fn extinction_check(net: &TransmissionNetwork) -> Result<ThresholdReport, AnalysisError> {
    if !net.kind().is_epidemic() {
        return Err(AnalysisError::NotEpidemic(net.kind()));
    }
    let m = hadamard(net.a(), net.w())?;
    let (radius, report) = spectral_radius(&m, DEFAULT_SPECTRAL_TOLERANCE)?;
    Ok(ThresholdReport {
        spectral_radius: radius,
        extinction_guaranteed: radius < 1.0,
        boundary_indeterminate: (radius - 1.0).abs() < BOUNDARY_TOLERANCE,
        method: report.method,
        iterations: report.iterations,
        residual: report.residual,
        converged: report.converged,
    })
}

/// Homogeneous special case: adjacency `Ã` without self-loops, uniform
/// cross-infection probability `β` and self-healing probability `δ`.
/// Extinction is guaranteed iff `λ_max(Ã) < δ/β`; `β = 0` (no cross
/// infection) is degenerate and always true.
pub fn homogeneous_threshold(
    adj_no_selfloops: &Mat,
    delta: f64,
    beta: f64,
) -> Result<bool, AnalysisError> {
    if !adj_no_selfloops.is_square() {
        return Err(AnalysisError::NotSquare(
            adj_no_selfloops.rows(),
            adj_no_selfloops.cols(),
        ));
    }
    let n = adj_no_selfloops.rows();
    for i in 0..n {
        if adj_no_selfloops[(i, i)] != 0.0 {
            return Err(AnalysisError::BadHomogeneousAdjacency(format!(
                "diagonal entry [{i}][{i}] must be 0"
            )));
        }
        for j in 0..n {
            let v = adj_no_selfloops[(i, j)];
            if v != 0.0 && v != 1.0 {
                return Err(AnalysisError::BadHomogeneousAdjacency(format!(
                    "entry [{i}][{j}] = {v} not in {{0,1}}"
                )));
            }
            if (v - adj_no_selfloops[(j, i)]).abs() != 0.0 {
                return Err(AnalysisError::BadHomogeneousAdjacency(format!(
                    "asymmetric at [{i}][{j}]"
                )));
            }
        }
    }
    if delta.is_nan() || delta <= 0.0 || delta >= 1.0 || !(0.0..1.0).contains(&beta) {
        return Err(AnalysisError::BadHomogeneousRates(delta, beta));
    }
    if beta == 0.0 {
        return Ok(true);
    }
    let (lambda_max, _) = spectral_radius(adj_no_selfloops, DEFAULT_SPECTRAL_TOLERANCE)?;
    Ok(lambda_max < delta / beta)
}

/// Assemble the network whose threshold the homogeneous rule describes:
/// self-loops with `w_ii = 1 − δ` and links with `w_ij = β`.
pub fn homogeneous_network(
    adj_no_selfloops: &Mat,
    delta: f64,
    beta: f64,
) -> Result<TransmissionNetwork, crate::network::NetworkError> {
    let n = adj_no_selfloops.rows();
    let mut a = adj_no_selfloops.clone();
    let mut w = Mat::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = 1.0;
        w[(i, i)] = 1.0 - delta;
        for j in 0..n {
            if i != j && adj_no_selfloops[(i, j)] != 0.0 {
                w[(i, j)] = beta;
            }
        }
    }
    TransmissionNetwork::new(NetworkKind::SingleParticle, a, w)
}
