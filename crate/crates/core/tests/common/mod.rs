//! Shared helpers for the integration suites: finite-difference stencils,
//! deterministic random instances, and tolerance utilities.

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use transnn::network::{NetworkKind, ProbabilityState, TransmissionNetwork};
use transnn::Mat;

/// Relative error with an absolute floor: finite-difference references
/// carry ~1e−11 absolute noise, so a pure ratio is meaningless for
/// near-zero derivatives.
pub fn rel_err(approx: f64, reference: f64, floor: f64) -> f64 {
    (approx - reference).abs() / approx.abs().max(reference.abs()).max(floor)
}

/// Central first derivative, O(h²).
pub fn fd1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Central n-th derivative stencils, O(h²).
pub fn fd_n(f: impl Fn(f64) -> f64, x: f64, h: f64, n: u32) -> f64 {
    match n {
        1 => fd1(f, x, h),
        2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
        3 => (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h))
            / (2.0 * h * h * h),
        4 => {
            (f(x + 2.0 * h) - 4.0 * f(x + h) + 6.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h))
                / (h * h * h * h)
        }
        _ => panic!("stencil order {n} not implemented"),
    }
}

/// Uniform grid of `count` points on `[lo, hi]` inclusive.
pub fn grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
        .collect()
}

/// Random single-particle network: Erdős–Rényi links at `link_prob`,
/// self-loops always present, weights uniform below `w_max`.
pub fn random_single_net(
    rng: &mut StdRng,
    n: usize,
    link_prob: f64,
    w_max: f64,
) -> TransmissionNetwork {
    let mut a = Mat::identity(n);
    let mut w = Mat::zeros(n, n);
    for i in 0..n {
        w[(i, i)] = rng.random_range(0.0..w_max);
        for j in 0..n {
            if i != j && rng.random_range(0.0..1.0) < link_prob {
                a[(i, j)] = 1.0;
                w[(i, j)] = rng.random_range(0.0..w_max);
            }
        }
    }
    TransmissionNetwork::new(NetworkKind::SingleParticle, a, w).expect("generated net valid")
}

/// Random multi-particle network with counts in `{0.5, 1, 1.5, 2, 3}`.
pub fn random_multi_net(rng: &mut StdRng, n: usize, link_prob: f64) -> TransmissionNetwork {
    let counts = [0.5, 1.0, 1.5, 2.0, 3.0];
    let mut a = Mat::zeros(n, n);
    let mut w = Mat::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = counts[rng.random_range(0..counts.len())];
        w[(i, i)] = rng.random_range(0.0..0.9);
        for j in 0..n {
            if i != j && rng.random_range(0.0..1.0) < link_prob {
                a[(i, j)] = counts[rng.random_range(0..counts.len())];
                w[(i, j)] = rng.random_range(0.0..0.9);
            }
        }
    }
    TransmissionNetwork::new(NetworkKind::MultiParticle, a, w).expect("generated net valid")
}

pub fn random_prob_state(rng: &mut StdRng, n: usize, max: f64) -> ProbabilityState {
    ProbabilityState::new((0..n).map(|_| rng.random_range(0.0..max)).collect())
        .expect("generated state valid")
}

pub fn seeded(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Random symmetric 0/1 adjacency with zero diagonal.
pub fn random_symmetric_adjacency(rng: &mut StdRng, n: usize, link_prob: f64) -> Mat {
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_range(0.0..1.0) < link_prob {
                m[(i, j)] = 1.0;
                m[(j, i)] = 1.0;
            }
        }
    }
    m
}
