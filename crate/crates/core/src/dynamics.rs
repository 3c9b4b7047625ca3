//! Discrete-time spread dynamics in both state representations.
//!
//! Every epidemic step has a probability-space form (products of per-link
//! escape probabilities) and an info-space form (sums of link activations);
//! the two commute exactly with the `p ↔ s` bijection and the test suite
//! holds them to each other as an equivalence oracle.

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::activations::psi_raw;
use crate::matrix::Mat;
use crate::network::{
    info_to_prob, prob_to_info, InfoState, NetworkKind, ProbabilityState, TransmissionNetwork,
};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("operation requires a {expected:?} network, got {got:?}")]
    KindMismatch {
        expected: NetworkKind,
        got: NetworkKind,
    },
    #[error("state length {got} does not match node count {expected}")]
    StateLength { expected: usize, got: usize },
    #[error("shape mismatch: a is {a_rows}x{a_cols}, w is {w_rows}x{w_cols}, state length {state}")]
    GeneralShape {
        a_rows: usize,
        a_cols: usize,
        w_rows: usize,
        w_cols: usize,
        state: usize,
    },
    #[error("activation level w[{row}][{col}] = {value} outside [0, 1]")]
    LevelOutOfRange { row: usize, col: usize, value: f64 },
    #[error(
        "horizon {horizon} exceeds the dense-trajectory limit {max}; use simulate_streaming"
    )]
    HorizonTooLarge { horizon: usize, max: usize },
}

fn check_kind(net: &TransmissionNetwork, expected: NetworkKind) -> Result<(), DynamicsError> {
    if net.kind() != expected {
        return Err(DynamicsError::KindMismatch {
            expected,
            got: net.kind(),
        });
    }
    Ok(())
}

fn check_len(net: &TransmissionNetwork, len: usize) -> Result<(), DynamicsError> {
    if len != net.n() {
        return Err(DynamicsError::StateLength {
            expected: net.n(),
            got: len,
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Step operations
// ---------------------------------------------------------------------------

/// One linear step `s' = A·s` of the effective-transmission dynamics.
/// `+∞` is absorbing: any in-neighbor at `+∞` forces the node to `+∞`.
pub fn step_effective_info(
    net: &TransmissionNetwork,
    s: &InfoState,
) -> Result<InfoState, DynamicsError> {
    check_kind(net, NetworkKind::EffectiveAdjacency)?;
    check_len(net, s.len())?;
    let sv = s.as_slice();
    let out = (0..net.n())
        .map(|i| net.in_links(i).map(|(j, a, _)| a * sv[j]).sum())
        .collect();
    Ok(InfoState::from_trusted(out))
}

/// `k`-step prediction `p(k) = 1 − exp∘(−Aᵏ s(0))`, computed by repeated
/// application of [`step_effective_info`].
pub fn predict_effective_prob(
    net: &TransmissionNetwork,
    p: &ProbabilityState,
    k: usize,
) -> Result<ProbabilityState, DynamicsError> {
    check_kind(net, NetworkKind::EffectiveAdjacency)?;
    check_len(net, p.len())?;
    if k == 0 {
        return Ok(p.clone());
    }
    let mut s = prob_to_info(p);
    for _ in 0..k {
        s = step_effective_info(net, &s)?;
    }
    Ok(info_to_prob(&s))
}

/// Above this size the per-node escape product accumulates in log space:
/// long products of near-1 factors lose precision multiplied directly.
const LOG_PRODUCT_NODES: usize = 64;

/// Single-particle probability step: `p'_i = 1 − Π_{j: a_ij≠0} (1 − w_ij p_j)`.
pub fn step_single_prob(
    net: &TransmissionNetwork,
    p: &ProbabilityState,
) -> Result<ProbabilityState, DynamicsError> {
    check_kind(net, NetworkKind::SingleParticle)?;
    check_len(net, p.len())?;
    let pv = p.as_slice();
    let log_space = net.n() > LOG_PRODUCT_NODES;
    let out = (0..net.n())
        .map(|i| {
            if log_space {
                let sum: f64 = net
                    .in_links(i)
                    .map(|(j, _, w)| (-w * pv[j]).ln_1p())
                    .sum();
                -sum.exp_m1()
            } else {
                let escape: f64 = net.in_links(i).map(|(j, _, w)| 1.0 - w * pv[j]).product();
                1.0 - escape
            }
        })
        .map(|v| v.clamp(0.0, 1.0))
        .collect();
    Ok(ProbabilityState::from_trusted(out))
}

/// Single-particle info step: `s'_i = Σ_j a_ij ψ(w_ij, s_j)`.
pub fn step_single_info(
    net: &TransmissionNetwork,
    s: &InfoState,
) -> Result<InfoState, DynamicsError> {
    check_kind(net, NetworkKind::SingleParticle)?;
    check_len(net, s.len())?;
    let sv = s.as_slice();
    let out = (0..net.n())
        .map(|i| {
            net.in_links(i)
                .map(|(j, a, w)| a * psi_raw(w, sv[j]))
                .sum()
        })
        .collect();
    Ok(InfoState::from_trusted(out))
}

/// Multi-particle probability step:
/// `p'_h = 1 − Π_{q: a_hq≠0} (1 − w_hq p_q)^{a_hq}` via log accumulation
/// (the exponents are real).
pub fn step_multi_prob(
    net: &TransmissionNetwork,
    p: &ProbabilityState,
) -> Result<ProbabilityState, DynamicsError> {
    check_kind(net, NetworkKind::MultiParticle)?;
    check_len(net, p.len())?;
    let pv = p.as_slice();
    let out = (0..net.n())
        .map(|h| {
            let sum: f64 = net
                .in_links(h)
                .map(|(q, a, w)| a * (-w * pv[q]).ln_1p())
                .sum();
            (-sum.exp_m1()).clamp(0.0, 1.0)
        })
        .collect();
    Ok(ProbabilityState::from_trusted(out))
}

/// Multi-particle info step: `s'_h = Σ_q a_hq ψ(w_hq, s_q)`.
pub fn step_multi_info(
    net: &TransmissionNetwork,
    s: &InfoState,
) -> Result<InfoState, DynamicsError> {
    check_kind(net, NetworkKind::MultiParticle)?;
    check_len(net, s.len())?;
    let sv = s.as_slice();
    let out = (0..net.n())
        .map(|h| {
            net.in_links(h)
                .map(|(q, a, w)| a * psi_raw(w, sv[q]))
                .sum()
        })
        .collect();
    Ok(InfoState::from_trusted(out))
}

/// One layer of the general form `out_i = Σ_j a_ij ψ(w_ij, s_j)` with real
/// weights `a` and an unrestricted real state (negative entries pass
/// through; zero weights contribute nothing even against infinite
/// activations).
pub fn step_general_info(a: &Mat, w: &Mat, s: &[f64]) -> Result<Vec<f64>, DynamicsError> {
    if !a.same_shape(w) || a.cols() != s.len() {
        return Err(DynamicsError::GeneralShape {
            a_rows: a.rows(),
            a_cols: a.cols(),
            w_rows: w.rows(),
            w_cols: w.cols(),
            state: s.len(),
        });
    }
    for ((i, j), v) in w.iter() {
        if !(0.0..=1.0).contains(&v) || v.is_nan() {
            return Err(DynamicsError::LevelOutOfRange {
                row: i,
                col: j,
                value: v,
            });
        }
    }
    Ok((0..a.rows())
        .map(|i| {
            a.row(i)
                .iter()
                .zip(w.row(i))
                .zip(s)
                .filter(|((av, _), _)| **av != 0.0)
                .map(|((av, wv), sv)| av * psi_raw(*wv, *sv))
                .sum()
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

/// Which state space a trajectory is recorded (and iterated) in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Representation {
    #[serde(rename = "probability")]
    Probability,
    #[serde(rename = "info")]
    Info,
}

/// Initial condition in either representation; converted as needed.
#[derive(Debug, Clone)]
pub enum InitialState {
    Probability(ProbabilityState),
    Info(InfoState),
}

impl InitialState {
    fn len(&self) -> usize {
        match self {
            InitialState::Probability(p) => p.len(),
            InitialState::Info(s) => s.len(),
        }
    }

    fn to_prob(&self) -> ProbabilityState {
        match self {
            InitialState::Probability(p) => p.clone(),
            InitialState::Info(s) => info_to_prob(s),
        }
    }

    fn to_info(&self) -> InfoState {
        match self {
            InitialState::Probability(p) => prob_to_info(p),
            InitialState::Info(s) => s.clone(),
        }
    }
}

/// A densely recorded trajectory: `horizon + 1` states.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub representation: Representation,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k]
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory has an initial state")
    }

    /// CSV export with columns `step,node,p,s`; the missing representation
    /// is derived through the exact bijection.
    pub fn write_csv(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(out, "step,node,p,s")?;
        for (k, state) in self.states.iter().enumerate() {
            for (i, &v) in state.iter().enumerate() {
                let (p, s) = match self.representation {
                    Representation::Probability => {
                        let ps = ProbabilityState::new(vec![v]).expect("recorded p valid");
                        (v, prob_to_info(&ps).as_slice()[0])
                    }
                    Representation::Info => {
                        let is = InfoState::new(vec![v]).expect("recorded s valid");
                        (info_to_prob(&is).as_slice()[0], v)
                    }
                };
                writeln!(out, "{k},{i},{p},{s}")?;
            }
        }
        Ok(())
    }

    /// JSON mirror of the CSV structure. Infinite `s` values are not
    /// representable as JSON numbers and serialize as `null`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "representation": self.representation,
            "states": self.states,
        })
    }
}

/// Horizons beyond this require [`simulate_streaming`].
pub const MAX_DENSE_HORIZON: usize = 1_000_000;

/// Iterate the kind-appropriate step `horizon` times, recording every state.
pub fn simulate(
    net: &TransmissionNetwork,
    initial: &InitialState,
    horizon: usize,
    representation: Representation,
) -> Result<Trajectory, DynamicsError> {
    if horizon > MAX_DENSE_HORIZON {
        return Err(DynamicsError::HorizonTooLarge {
            horizon,
            max: MAX_DENSE_HORIZON,
        });
    }
    let mut states = Vec::with_capacity(horizon + 1);
    simulate_streaming(net, initial, horizon, representation, |_, state| {
        states.push(state.to_vec())
    })?;
    Ok(Trajectory {
        representation,
        states,
    })
}

/// Streaming form of [`simulate`]: the callback receives `(step, state)`
/// for every step including 0, and no trajectory is retained.
pub fn simulate_streaming(
    net: &TransmissionNetwork,
    initial: &InitialState,
    horizon: usize,
    representation: Representation,
    mut on_state: impl FnMut(usize, &[f64]),
) -> Result<(), DynamicsError> {
    check_len(net, initial.len())?;
    if net.kind() == NetworkKind::GeneralReal {
        return Err(DynamicsError::KindMismatch {
            expected: NetworkKind::SingleParticle,
            got: NetworkKind::GeneralReal,
        });
    }
    match representation {
        Representation::Probability => {
            let mut p = initial.to_prob();
            on_state(0, p.as_slice());
            for k in 1..=horizon {
                p = match net.kind() {
                    NetworkKind::EffectiveAdjacency => {
                        // probability form of the linear step: convert,
                        // apply, convert back
                        let s = step_effective_info(net, &prob_to_info(&p))?;
                        info_to_prob(&s)
                    }
                    NetworkKind::SingleParticle => step_single_prob(net, &p)?,
                    NetworkKind::MultiParticle => step_multi_prob(net, &p)?,
                    NetworkKind::GeneralReal => unreachable!(),
                };
                on_state(k, p.as_slice());
            }
        }
        Representation::Info => {
            let mut s = initial.to_info();
            on_state(0, s.as_slice());
            for k in 1..=horizon {
                s = match net.kind() {
                    NetworkKind::EffectiveAdjacency => step_effective_info(net, &s)?,
                    NetworkKind::SingleParticle => step_single_info(net, &s)?,
                    NetworkKind::MultiParticle => step_multi_info(net, &s)?,
                    NetworkKind::GeneralReal => unreachable!(),
                };
                on_state(k, s.as_slice());
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    fn mat(rows: &[Vec<f64>]) -> Mat {
        Mat::from_rows(rows).unwrap()
    }

    fn net(kind: NetworkKind, a: &[Vec<f64>], w: &[Vec<f64>]) -> TransmissionNetwork {
        TransmissionNetwork::new(kind, mat(a), mat(w)).unwrap()
    }

    fn prob(p: &[f64]) -> ProbabilityState {
        ProbabilityState::new(p.to_vec()).unwrap()
    }

    fn info(s: &[f64]) -> InfoState {
        InfoState::new(s.to_vec()).unwrap()
    }

    #[test]
    fn effective_identity_keeps_state() {
        let n = net(
            NetworkKind::EffectiveAdjacency,
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
        );
        let s = info(&[0.4, 2.5]);
        assert_eq!(step_effective_info(&n, &s).unwrap(), s);
    }

    #[test]
    fn effective_complete_graph_spreads() {
        let n = net(
            NetworkKind::EffectiveAdjacency,
            &[vec![1.0, 1.0], vec![1.0, 1.0]],
            &vec![vec![1.0; 2]; 2],
        );
        let s1 = step_effective_info(&n, &info(&[1.0, 0.0])).unwrap();
        assert_eq!(s1.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn effective_infinity_absorbs() {
        let n = net(
            NetworkKind::EffectiveAdjacency,
            &[vec![1.0, 1.0], vec![0.0, 1.0]],
            &vec![vec![1.0; 2]; 2],
        );
        let s1 = step_effective_info(&n, &info(&[0.0, INF])).unwrap();
        assert_eq!(s1.as_slice(), &[INF, INF]);
        // node 1 has no link from node 0, so a finite node stays finite
        let s2 = step_effective_info(&n, &info(&[INF, 0.5])).unwrap();
        assert_eq!(s2.as_slice(), &[INF, 0.5]);
    }

    #[test]
    fn predict_effective_examples() {
        let single = net(NetworkKind::EffectiveAdjacency, &[vec![1.0]], &[vec![1.0]]);
        let p0 = prob(&[0.3]);
        assert_eq!(
            predict_effective_prob(&single, &p0, 0).unwrap().as_slice(),
            &[0.3]
        );
        let p2 = predict_effective_prob(&single, &p0, 2).unwrap();
        assert!((p2.as_slice()[0] - 0.3).abs() < 1e-14);

        // path 1—2—3 with self-loops: certainty reaches node 3 in two steps
        let path = net(
            NetworkKind::EffectiveAdjacency,
            &[
                vec![1.0, 1.0, 0.0],
                vec![1.0, 1.0, 1.0],
                vec![0.0, 1.0, 1.0],
            ],
            &vec![vec![1.0; 3]; 3],
        );
        let p = predict_effective_prob(&path, &prob(&[1.0, 0.0, 0.0]), 2).unwrap();
        assert_eq!(p.as_slice()[2], 1.0);
    }

    #[test]
    fn single_prob_examples() {
        let n = net(
            NetworkKind::SingleParticle,
            &[vec![1.0, 1.0], vec![1.0, 1.0]],
            &vec![vec![0.5; 2]; 2],
        );
        let zero = step_single_prob(&n, &prob(&[0.0, 0.0])).unwrap();
        assert_eq!(zero.as_slice(), &[0.0, 0.0]);
        let p1 = step_single_prob(&n, &prob(&[1.0, 0.0])).unwrap();
        assert_eq!(p1.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn isolated_node_decays_geometrically() {
        let n = net(NetworkKind::SingleParticle, &[vec![1.0]], &[vec![0.9]]);
        let mut p = prob(&[0.7]);
        for k in 1..=200u32 {
            p = step_single_prob(&n, &p).unwrap();
            let expected = 0.9f64.powi(k as i32) * 0.7;
            assert!(
                (p.as_slice()[0] - expected).abs() < 1e-12,
                "k={k}: {} vs {expected}",
                p.as_slice()[0]
            );
        }
    }

    #[test]
    fn single_info_matches_prob_route() {
        let n = net(
            NetworkKind::SingleParticle,
            &[vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0]],
            &[
                vec![0.9, 0.3, 0.0],
                vec![0.0, 0.8, 0.6],
                vec![0.2, 0.0, 0.7],
            ],
        );
        let p = prob(&[0.2, 0.7, 0.05]);
        let via_prob = step_single_prob(&n, &p).unwrap();
        let via_info = info_to_prob(&step_single_info(&n, &prob_to_info(&p)).unwrap());
        for (a, b) in via_prob.as_slice().iter().zip(via_info.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_info_full_pass_is_linear() {
        let a = [vec![1.0, 1.0], vec![0.0, 1.0]];
        let n = net(NetworkKind::SingleParticle, &a, &vec![vec![1.0; 2]; 2]);
        let s = info(&[0.3, 1.4]);
        let out = step_single_info(&n, &s).unwrap();
        assert!((out.as_slice()[0] - 1.7).abs() < 1e-14);
        assert!((out.as_slice()[1] - 1.4).abs() < 1e-14);
        assert_eq!(
            step_single_info(&n, &info(&[0.0, 0.0])).unwrap().as_slice(),
            &[0.0, 0.0]
        );
    }

    #[test]
    fn multi_reduces_to_single_at_unit_counts() {
        let a = [vec![1.0, 1.0], vec![1.0, 1.0]];
        let w = [vec![0.4, 0.7], vec![0.2, 0.9]];
        let single = net(NetworkKind::SingleParticle, &a, &w);
        let multi = net(NetworkKind::MultiParticle, &a, &w);
        let p = prob(&[0.25, 0.6]);
        let ps = step_single_prob(&single, &p).unwrap();
        let pm = step_multi_prob(&multi, &p).unwrap();
        for (x, y) in ps.as_slice().iter().zip(pm.as_slice()) {
            assert!((x - y).abs() < 1e-14);
        }
        let s = prob_to_info(&p);
        let ss = step_single_info(&single, &s).unwrap();
        let sm = step_multi_info(&multi, &s).unwrap();
        for (x, y) in ss.as_slice().iter().zip(sm.as_slice()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn multi_integer_counts_match_repeated_factors() {
        // powered product with integer a equals literally repeated factors
        let a = [vec![2.0, 3.0], vec![1.0, 4.0]];
        let w = [vec![0.35, 0.6], vec![0.15, 0.5]];
        let multi = net(NetworkKind::MultiParticle, &a, &w);
        let p = prob(&[0.3, 0.8]);
        let got = step_multi_prob(&multi, &p).unwrap();
        for h in 0..2 {
            let mut escape = 1.0;
            for q in 0..2 {
                for _ in 0..(a[h][q] as usize) {
                    escape *= 1.0 - w[h][q] * p.as_slice()[q];
                }
            }
            assert!((got.as_slice()[h] - (1.0 - escape)).abs() < 1e-12);
        }
        assert_eq!(
            step_multi_prob(&multi, &prob(&[0.0, 0.0]))
                .unwrap()
                .as_slice(),
            &[0.0, 0.0]
        );
    }

    #[test]
    fn general_step_examples() {
        let a = Mat::identity(3);
        let w = Mat::filled(3, 3, 1.0);
        let s = vec![0.5, -1.2, 3.0];
        let out = step_general_info(&a, &w, &s).unwrap();
        for (x, y) in out.iter().zip(&s) {
            assert!((x - y).abs() < 1e-14);
        }
        // negative states propagate
        assert!(out[1] < 0.0);
        // specializes to the single-particle info step on binary a, s >= 0
        let ab = [vec![1.0, 1.0], vec![0.0, 1.0]];
        let wb = [vec![0.3, 0.8], vec![0.5, 0.6]];
        let nb = net(NetworkKind::SingleParticle, &ab, &wb);
        let sb = info(&[0.4, 1.1]);
        let via_single = step_single_info(&nb, &sb).unwrap();
        let via_general =
            step_general_info(&mat(&ab), &mat(&wb), sb.as_slice()).unwrap();
        assert_eq!(via_single.as_slice(), via_general.as_slice());
    }

    #[test]
    fn general_step_rejects_bad_levels() {
        let a = Mat::identity(2);
        let w = Mat::filled(2, 2, 1.5);
        assert!(matches!(
            step_general_info(&a, &w, &[0.0, 0.0]),
            Err(DynamicsError::LevelOutOfRange { .. })
        ));
    }

    #[test]
    fn simulate_records_horizon_plus_one() {
        let n = net(NetworkKind::SingleParticle, &[vec![1.0]], &[vec![0.5]]);
        let t = simulate(
            &n,
            &InitialState::Probability(prob(&[0.4])),
            0,
            Representation::Probability,
        )
        .unwrap();
        assert_eq!(t.states.len(), 1);
        assert_eq!(t.horizon(), 0);
    }

    #[test]
    fn simulate_representations_agree() {
        let n = net(
            NetworkKind::SingleParticle,
            &[vec![1.0, 1.0], vec![1.0, 1.0]],
            &[vec![0.6, 0.3], vec![0.2, 0.7]],
        );
        let init = InitialState::Probability(prob(&[0.9, 0.1]));
        let tp = simulate(&n, &init, 40, Representation::Probability).unwrap();
        let ti = simulate(&n, &init, 40, Representation::Info).unwrap();
        for (ps, ss) in tp.states.iter().zip(&ti.states) {
            let mapped = info_to_prob(&InfoState::new(ss.clone()).unwrap());
            for (a, b) in ps.iter().zip(mapped.as_slice()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn streaming_matches_dense_and_guards_horizon() {
        let n = net(NetworkKind::SingleParticle, &[vec![1.0]], &[vec![0.8]]);
        let init = InitialState::Probability(prob(&[0.5]));
        let t = simulate(&n, &init, 10, Representation::Probability).unwrap();
        let mut streamed = Vec::new();
        simulate_streaming(&n, &init, 10, Representation::Probability, |_, s| {
            streamed.push(s.to_vec())
        })
        .unwrap();
        assert_eq!(t.states, streamed);
        assert!(matches!(
            simulate(&n, &init, MAX_DENSE_HORIZON + 1, Representation::Probability),
            Err(DynamicsError::HorizonTooLarge { .. })
        ));
    }

    #[test]
    fn log_space_product_matches_direct() {
        // above the node threshold the product switches to log space;
        // both routes must agree tightly
        let n_nodes = 80;
        let mut a = Mat::identity(n_nodes);
        let mut w = Mat::zeros(n_nodes, n_nodes);
        for i in 0..n_nodes {
            w[(i, i)] = 0.9;
            a[(i, (i + 1) % n_nodes)] = 1.0;
            w[(i, (i + 1) % n_nodes)] = 0.05;
        }
        let big = TransmissionNetwork::new(NetworkKind::SingleParticle, a, w).unwrap();
        let p0: Vec<f64> = (0..n_nodes).map(|i| (i as f64) / (n_nodes as f64)).collect();
        let p = prob(&p0);
        let via_log = step_single_prob(&big, &p).unwrap();
        // direct product route, straight from the definition
        let mut direct = vec![0.0; n_nodes];
        for (i, slot) in direct.iter_mut().enumerate() {
            let mut escape = 1.0;
            for (j, _, wv) in big.in_links(i) {
                escape *= 1.0 - wv * p0[j];
            }
            *slot = 1.0 - escape;
        }
        for (x, y) in via_log.as_slice().iter().zip(&direct) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_export_shape() {
        let n = net(NetworkKind::SingleParticle, &[vec![1.0]], &[vec![0.5]]);
        let t = simulate(
            &n,
            &InitialState::Probability(prob(&[1.0])),
            1,
            Representation::Probability,
        )
        .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "step,node,p,s");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,0,1,inf"));
    }
}
