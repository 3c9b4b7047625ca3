//! Continuous-time SIS limits of the discrete spread dynamics.
//!
//! Scaling the discrete link probabilities with the step length
//! (`w_ij = c_ij·Δ` off-diagonal, `w_ii = e^{−c_ii·Δ}` or `1 − c_ii·Δ`)
//! and letting `Δ → 0` turns the single-particle model into the network
//! SIS ODE `dp_i/dt = (1−p_i) Σ_{j≠i} a_ij c_ij p_j − c_ii p_i`, and the
//! multi-particle model into its rate-product form. This module provides
//! the two vector fields, a fixed-step RK4 integrator, and the Δ-ladder
//! consistency harness that verifies first-order convergence of the
//! discrete dynamics to the RK4 reference.

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{simulate, InitialState, Representation};
use crate::matrix::Mat;
use crate::network::{NetworkKind, ProbabilityState, TransmissionNetwork};

#[derive(Debug, Error)]
pub enum ContinuumError {
    #[error("rate matrix must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("rate c[{0}][{1}] = {2} must be a finite nonnegative number")]
    BadRate(usize, usize, f64),
    #[error("epsilon = {0} outside [0, 1]")]
    BadEpsilon(f64),
    #[error("state length {got} does not match rate dimension {expected}")]
    StateLength { expected: usize, got: usize },
    #[error("step dt = {0} must be positive and finite")]
    BadStep(f64),
    #[error("t_end = {0} must be nonnegative and finite")]
    BadHorizon(f64),
    #[error("vector field produced a non-finite value at step {step}, node {node}")]
    NonFiniteField { step: usize, node: usize },
    #[error("delta = {delta} too large: off-diagonal w[{row}][{col}] = {value} exceeds 1")]
    DeltaTooLarge {
        delta: f64,
        row: usize,
        col: usize,
        value: f64,
    },
    #[error("delta list must be positive and strictly decreasing")]
    BadDeltaList,
    #[error("multi-particle consistency needs delta small enough: {0}")]
    MultiScaleViolation(String),
    #[error(transparent)]
    Network(#[from] crate::network::NetworkError),
    #[error(transparent)]
    Dynamics(#[from] crate::dynamics::DynamicsError),
}

/// Continuous-time rates. `c[i][j]` (`i ≠ j`) is the cross-node
/// transmission rate per unit time; `c[i][i]` the self-healing rate.
/// The multi-particle model adds per-particle rates `kappa` and the
/// scaling split `epsilon` between counts and probabilities.
#[derive(Debug, Clone)]
pub struct ContinuousRates {
    pub c: Mat,
    pub kappa: Option<Mat>,
    pub epsilon: f64,
}

impl ContinuousRates {
    pub fn new(c: Mat, kappa: Option<Mat>, epsilon: f64) -> Result<Self, ContinuumError> {
        if !c.is_square() {
            return Err(ContinuumError::NotSquare(c.rows(), c.cols()));
        }
        for ((i, j), v) in c.iter() {
            if !v.is_finite() || v < 0.0 {
                return Err(ContinuumError::BadRate(i, j, v));
            }
        }
        if let Some(k) = &kappa {
            if !k.is_square() || k.rows() != c.rows() {
                return Err(ContinuumError::NotSquare(k.rows(), k.cols()));
            }
            for ((i, j), v) in k.iter() {
                if !v.is_finite() || v < 0.0 {
                    return Err(ContinuumError::BadRate(i, j, v));
                }
            }
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(ContinuumError::BadEpsilon(epsilon));
        }
        Ok(ContinuousRates { c, kappa, epsilon })
    }

    pub fn n(&self) -> usize {
        self.c.rows()
    }
}

/// Network SIS field: `dp_i/dt = (1−p_i) Σ_{j≠i} a_ij c_ij p_j − c_ii p_i`.
/// With `c_ii = 0` this is the SI field (no recovery term).
pub fn sis_rhs_single(rates: &ContinuousRates, adj: &Mat, p: &[f64]) -> Vec<f64> {
    let n = rates.n();
    debug_assert_eq!(p.len(), n);
    (0..n)
        .map(|i| {
            let incoming: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| adj[(i, j)] * rates.c[(i, j)] * p[j])
                .sum();
            (1.0 - p[i]) * incoming - rates.c[(i, i)] * p[i]
        })
        .collect()
}

/// Multi-particle SIS field:
/// `dp_h/dt = −c_hh κ_hh p_h + (1−p_h) Σ_{q≠h} c_hq κ_hq p_q`.
/// The products `c·κ` are the expected effective transmissions per unit
/// time; with `κ ≡ 1` and matching coefficients this is the single field.
pub fn sis_rhs_multi(rates: &ContinuousRates, p: &[f64]) -> Vec<f64> {
    let n = rates.n();
    debug_assert_eq!(p.len(), n);
    let ones = Mat::filled(n, n, 1.0);
    let kappa = rates.kappa.as_ref().unwrap_or(&ones);
    (0..n)
        .map(|h| {
            let incoming: f64 = (0..n)
                .filter(|&q| q != h)
                .map(|q| rates.c[(h, q)] * kappa[(h, q)] * p[q])
                .sum();
            (1.0 - p[h]) * incoming - rates.c[(h, h)] * kappa[(h, h)] * p[h]
        })
        .collect()
}

/// A continuous-time trajectory on the RK4 grid.
#[derive(Debug, Clone, Serialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `(step, node, magnitude)` of every clamp back into [0, 1].
    pub clamp_events: Vec<(usize, usize, f64)>,
}

impl TimeSeries {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("time series is nonempty")
    }

    /// CSV export with columns `t,node,p`.
    pub fn write_csv(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "t,node,p")?;
        for (t, state) in self.times.iter().zip(&self.states) {
            for (i, v) in state.iter().enumerate() {
                writeln!(out, "{t},{i},{v}")?;
            }
        }
        Ok(())
    }
}

/// Classical fixed-step RK4 on `dp/dt = rhs(p)`, clamping each accepted
/// state to `[0,1]ⁿ` (events logged) and aborting on NaN with the step
/// index. The final partial step lands exactly on `t_end`.
pub fn integrate(
    rhs: impl Fn(&[f64]) -> Vec<f64>,
    p0: &ProbabilityState,
    t_end: f64,
    dt: f64,
) -> Result<TimeSeries, ContinuumError> {
    if dt.is_nan() || dt <= 0.0 || !dt.is_finite() {
        return Err(ContinuumError::BadStep(dt));
    }
    if t_end.is_nan() || t_end < 0.0 || !t_end.is_finite() {
        return Err(ContinuumError::BadHorizon(t_end));
    }
    let mut p = p0.as_slice().to_vec();
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut states = vec![p.clone()];
    let mut clamp_events = Vec::new();
    let mut step = 0usize;
    while t < t_end - 1e-12 * t_end.max(1.0) {
        let h = dt.min(t_end - t);
        step += 1;
        let k1 = rhs(&p);
        let k2 = rhs(&add_scaled(&p, &k1, 0.5 * h));
        let k3 = rhs(&add_scaled(&p, &k2, 0.5 * h));
        let k4 = rhs(&add_scaled(&p, &k3, h));
        for i in 0..p.len() {
            let dp = (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            let next = p[i] + dp;
            if next.is_nan() {
                return Err(ContinuumError::NonFiniteField { step, node: i });
            }
            let clamped = next.clamp(0.0, 1.0);
            if clamped != next {
                clamp_events.push((step, i, (next - clamped).abs()));
            }
            p[i] = clamped;
        }
        t += h;
        times.push(t);
        states.push(p.clone());
    }
    Ok(TimeSeries {
        times,
        states,
        clamp_events,
    })
}

fn add_scaled(p: &[f64], k: &[f64], h: f64) -> Vec<f64> {
    p.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

/// Self-loop discretization variant: both scale as `1 − c_ii·Δ + o(Δ)` and
/// lead to the same continuous limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SelfTransmission {
    /// `w_ii = e^{−c_ii·Δ}` (default; exact for an isolated node).
    Exponential,
    /// `w_ii = max(1 − c_ii·Δ, 0)`.
    Linear,
}

/// Build the single-particle network that discretizes `rates` over `adj`
/// with step `Δ`: `w_ij = c_ij·Δ` off-diagonal, self-loops per `variant`.
pub fn discretize_single(
    rates: &ContinuousRates,
    adj: &Mat,
    delta: f64,
    variant: SelfTransmission,
) -> Result<TransmissionNetwork, ContinuumError> {
    let n = rates.n();
    let mut a = adj.clone();
    let mut w = Mat::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = 1.0;
        w[(i, i)] = match variant {
            SelfTransmission::Exponential => (-rates.c[(i, i)] * delta).exp(),
            SelfTransmission::Linear => (1.0 - rates.c[(i, i)] * delta).max(0.0),
        };
        for j in 0..n {
            if i == j || adj[(i, j)] == 0.0 {
                continue;
            }
            let wij = rates.c[(i, j)] * delta;
            if wij > 1.0 {
                return Err(ContinuumError::DeltaTooLarge {
                    delta,
                    row: i,
                    col: j,
                    value: wij,
                });
            }
            w[(i, j)] = wij;
        }
    }
    Ok(TransmissionNetwork::new(NetworkKind::SingleParticle, a, w)?)
}

/// One row of the consistency table.
#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyRow {
    pub delta: f64,
    pub sup_error: f64,
    /// `log2(e(Δ_prev) / e(Δ))`; absent on the first row.
    pub order_estimate: Option<f64>,
}

/// Reference integration is run at `Δ / this` per row.
const REFERENCE_REFINEMENT: f64 = 100.0;

/// For each `Δ` in a decreasing ladder, simulate the discretized
/// single-particle dynamics to (approximately) time `t_end` and report the
/// sup-norm deviation of the endpoint from the RK4 reference. Deviations
/// shrink linearly in `Δ`; consecutive rows carry the empirical order.
pub fn discretization_consistency(
    rates: &ContinuousRates,
    adj: &Mat,
    p0: &ProbabilityState,
    deltas: &[f64],
    t_end: f64,
    variant: SelfTransmission,
) -> Result<Vec<ConsistencyRow>, ContinuumError> {
    if deltas.is_empty()
        || deltas.iter().any(|d| d.is_nan() || *d <= 0.0)
        || deltas.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(ContinuumError::BadDeltaList);
    }
    if p0.len() != rates.n() {
        return Err(ContinuumError::StateLength {
            expected: rates.n(),
            got: p0.len(),
        });
    }
    let mut rows: Vec<ConsistencyRow> = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let steps = (t_end / delta).round().max(1.0) as usize;
        let t_star = steps as f64 * delta;
        let net = discretize_single(rates, adj, delta, variant)?;
        let traj = simulate(
            &net,
            &InitialState::Probability(p0.clone()),
            steps,
            Representation::Probability,
        )?;
        let reference = integrate(
            |p| sis_rhs_single(rates, adj, p),
            p0,
            t_star,
            delta / REFERENCE_REFINEMENT,
        )?;
        let sup_error = traj
            .last()
            .iter()
            .zip(reference.final_state())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let order_estimate = rows
            .last()
            .map(|prev: &ConsistencyRow| (prev.sup_error / sup_error).log2()
                / (prev.delta / delta).log2());
        rows.push(ConsistencyRow {
            delta,
            sup_error,
            order_estimate,
        });
    }
    Ok(rows)
}

/// Multi-particle analogue: cross-link counts scale as `Δ^ε·c` and
/// per-particle probabilities as `Δ^{1−ε}·κ`, so their product — and the
/// limit — is independent of the split `ε`. The self-loop keeps one
/// particle (`a_hh = 1`) with `w_hh = 1 − c_hh·κ_hh·Δ`: scaling the
/// diagonal count itself would inject self-damping at rate `c_hh/Δ^{1−ε}`
/// per unit time, which blows up as `Δ → 0` instead of approaching the
/// rate-product field.
pub fn discretization_consistency_multi(
    rates: &ContinuousRates,
    p0: &ProbabilityState,
    deltas: &[f64],
    t_end: f64,
) -> Result<Vec<ConsistencyRow>, ContinuumError> {
    if deltas.is_empty()
        || deltas.iter().any(|d| d.is_nan() || *d <= 0.0)
        || deltas.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(ContinuumError::BadDeltaList);
    }
    let n = rates.n();
    if p0.len() != n {
        return Err(ContinuumError::StateLength {
            expected: n,
            got: p0.len(),
        });
    }
    let ones = Mat::filled(n, n, 1.0);
    let kappa = rates.kappa.as_ref().unwrap_or(&ones).clone();
    let eps = rates.epsilon;
    let mut rows: Vec<ConsistencyRow> = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let de = delta.powf(eps);
        let dw = delta.powf(1.0 - eps);
        let mut a = Mat::zeros(n, n);
        let mut w = Mat::zeros(n, n);
        for h in 0..n {
            let wh = 1.0 - delta * rates.c[(h, h)] * kappa[(h, h)];
            if wh < 0.0 {
                return Err(ContinuumError::MultiScaleViolation(format!(
                    "self-healing product at node {h} exceeds 1/delta for delta {delta}"
                )));
            }
            a[(h, h)] = 1.0;
            w[(h, h)] = wh;
            for q in 0..n {
                if q == h {
                    continue;
                }
                let av = de * rates.c[(h, q)];
                let wv = dw * kappa[(h, q)];
                if wv > 1.0 {
                    return Err(ContinuumError::DeltaTooLarge {
                        delta,
                        row: h,
                        col: q,
                        value: wv,
                    });
                }
                a[(h, q)] = av;
                w[(h, q)] = wv;
            }
        }
        let net = TransmissionNetwork::new(NetworkKind::MultiParticle, a, w)?;
        let steps = (t_end / delta).round().max(1.0) as usize;
        let t_star = steps as f64 * delta;
        let traj = simulate(
            &net,
            &InitialState::Probability(p0.clone()),
            steps,
            Representation::Probability,
        )?;
        let reference = integrate(
            |p| sis_rhs_multi(rates, p),
            p0,
            t_star,
            delta / REFERENCE_REFINEMENT,
        )?;
        let sup_error = traj
            .last()
            .iter()
            .zip(reference.final_state())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let order_estimate = rows
            .last()
            .map(|prev: &ConsistencyRow| (prev.sup_error / sup_error).log2()
                / (prev.delta / delta).log2());
        rows.push(ConsistencyRow {
            delta,
            sup_error,
            order_estimate,
        });
    }
    Ok(rows)
}

/// CSV export of a consistency table: `delta,sup_error,order_estimate`.
pub fn write_consistency_csv(
    rows: &[ConsistencyRow],
    out: &mut impl std::io::Write,
) -> std::io::Result<()> {
    writeln!(out, "delta,sup_error,order_estimate")?;
    for row in rows {
        match row.order_estimate {
            Some(o) => writeln!(out, "{},{},{o}", row.delta, row.sup_error)?,
            None => writeln!(out, "{},{},", row.delta, row.sup_error)?,
        }
    }
    Ok(())
}
