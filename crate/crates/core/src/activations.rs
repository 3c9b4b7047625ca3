//! Tunable link activation functions and their derivative calculus.
//!
//! Three activation families share a single level parameter `w ∈ [0, 1]`
//! governing how much signal a link passes (`w = 0` no pass, `w = 1` full
//! pass):
//!
//! | Function | Closed form | Character |
//! |---|---|---|
//! | [`psi`] | `−log(1 − w + w·e^{−x})` | log-sigmoid-like, concave in `x` |
//! | [`psi_plus`] | `psi(w, x)` for `x ≥ 0`, else `0` | nonnegative clip, ReLU at `w = 1` |
//! | [`phi`] | `log(1 − w + w·e^{x}) = −psi(w, −x)` | softplus-like with negative part |
//!
//! Inputs live on the extended reals: `exp(−∞) = 0` and `log(0) = −∞`
//! follow IEEE semantics, `NaN` is rejected. Partial derivatives in both
//! arguments are closed-form; `n`-th derivatives in `x` are polynomials in
//! the first derivative with Stirling-number coefficients, and `k`-th
//! derivatives in `w` are powers of the first:
//!
//! - `∂ₓⁿ psi = Σ_{k=1..n} (−1)^{k+n} (k−1)! S(n,k) (∂ₓ psi)^k`
//! - `∂_wᵏ psi = (k−1)! (∂_w psi)^k`
//!
//! Special levels recover the classics: `psi(0.5, x) = log(2σ(x))`,
//! `∂ₓ psi(0.5, −x) = σ(x)`, `∂_w psi(0.5, x) = 2 tanh(x/2)`,
//! `phi(0.5, x) = log(0.5) + softplus(x)`, and `∂ₓ phi(w, 0) = w` makes
//! `∂ₓ phi(w, ·)` a sigmoid with tunable midpoint value.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest `n` for which [`stirling2`] stays within exact `u128` range
/// with a comfortable margin.
pub const STIRLING_MAX_N: u32 = 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActivationError {
    #[error("activation level w = {0} outside [0, 1]")]
    LevelOutOfRange(f64),
    #[error("NaN input rejected")]
    NanInput,
    #[error("stirling2 supports n <= {STIRLING_MAX_N}, got n = {0}")]
    StirlingRange(u32),
}

/// Which of the three tunable activations a model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActivationKind {
    /// `psi`: the tunable log-sigmoid.
    TLogSigmoid,
    /// `psi_plus`: `psi` clipped to zero for negative inputs.
    TLogSigmoidPlus,
    /// `phi`: the tunable soft-affine reflection of `psi`.
    TSoftAffine,
}

impl ActivationKind {
    /// Activation value, unchecked `w` (callers validate at construction).
    pub(crate) fn value_raw(self, w: f64, x: f64) -> f64 {
        match self {
            ActivationKind::TLogSigmoid => psi_raw(w, x),
            ActivationKind::TLogSigmoidPlus => psi_plus_raw(w, x),
            ActivationKind::TSoftAffine => phi_raw(w, x),
        }
    }

    /// Partial derivative in the signal argument `x`.
    ///
    /// `psi_plus` uses subgradient 0 at the kink `x = 0`.
    pub(crate) fn deriv_x_raw(self, w: f64, x: f64) -> f64 {
        match self {
            ActivationKind::TLogSigmoid => dpsi_dx_raw(w, x),
            ActivationKind::TLogSigmoidPlus => {
                if x > 0.0 {
                    dpsi_dx_raw(w, x)
                } else {
                    0.0
                }
            }
            ActivationKind::TSoftAffine => dphi_dx_raw(w, x),
        }
    }

    /// Partial derivative in the level argument `w`.
    pub(crate) fn deriv_w_raw(self, w: f64, x: f64) -> f64 {
        match self {
            ActivationKind::TLogSigmoid => dpsi_dw_raw(w, x),
            ActivationKind::TLogSigmoidPlus => {
                if x > 0.0 {
                    dpsi_dw_raw(w, x)
                } else {
                    0.0
                }
            }
            ActivationKind::TSoftAffine => dphi_dw_raw(w, x),
        }
    }
}

fn check_wx(w: f64, x: f64) -> Result<(), ActivationError> {
    if w.is_nan() || x.is_nan() {
        return Err(ActivationError::NanInput);
    }
    if !(0.0..=1.0).contains(&w) {
        return Err(ActivationError::LevelOutOfRange(w));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Raw kernels. Assume w in [0,1] and non-NaN x; hot paths (dynamics, learn)
// call these after validating once at construction.
// ---------------------------------------------------------------------------

/// Above this |x| the naive `expm1(−x)` path overflows; switch to the
/// factored form `x − log(w + (1−w)e^{x})`.
const EXP_OVERFLOW_EDGE: f64 = -690.0;

pub(crate) fn psi_raw(w: f64, x: f64) -> f64 {
    if w == 0.0 {
        return 0.0; // no pass, also avoids 0·inf at x = −inf
    }
    if w == 1.0 {
        return x; // full pass is exactly the identity
    }
    if x == f64::INFINITY {
        return -(-w).ln_1p(); // −log(1−w)
    }
    if x >= EXP_OVERFLOW_EDGE {
        // −log1p(w·expm1(−x)): cancellation-free near x = 0.
        -(w * (-x).exp_m1()).ln_1p()
    } else {
        // −log(1−w+we^{−x}) = x − log(w + (1−w)e^{x})
        x - (w + (1.0 - w) * x.exp()).ln()
    }
}

pub(crate) fn psi_plus_raw(w: f64, x: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else {
        psi_raw(w, x)
    }
}

pub(crate) fn phi_raw(w: f64, x: f64) -> f64 {
    -psi_raw(w, -x)
}

pub(crate) fn dpsi_dx_raw(w: f64, x: f64) -> f64 {
    if w == 0.0 {
        return 0.0;
    }
    if w == 1.0 {
        return 1.0;
    }
    if x >= 0.0 {
        let t = (-x).exp(); // in (0, 1]
        w * t / (1.0 - w + w * t)
    } else {
        let t = x.exp(); // in (0, 1)
        w / ((1.0 - w) * t + w)
    }
}

pub(crate) fn dpsi_dw_raw(w: f64, x: f64) -> f64 {
    if x >= 0.0 {
        let t = (-x).exp_m1(); // e^{−x} − 1 in [−1, 0]
        -t / (1.0 + w * t)
    } else {
        // multiply through by e^{x} to avoid overflow for large −x
        let t = x.exp();
        x.exp_m1() / ((1.0 - w) * t + w)
    }
}

pub(crate) fn dpsi_dw_higher_raw(w: f64, x: f64, k: u32) -> f64 {
    // ∂_wᵏ psi = (k−1)! (∂_w psi)^k
    let d = dpsi_dw_raw(w, x);
    factorial_f64(k - 1) * d.powi(k as i32)
}

pub(crate) fn dpsi_dx_higher_raw(w: f64, x: f64, n: u32) -> f64 {
    let d = dpsi_dx_raw(w, x);
    stirling_alternating_sum(d, n, Parity::PsiSign)
}

pub(crate) fn dphi_dx_raw(w: f64, x: f64) -> f64 {
    dpsi_dx_raw(w, -x)
}

pub(crate) fn dphi_dw_raw(w: f64, x: f64) -> f64 {
    -dpsi_dw_raw(w, -x)
}

pub(crate) fn dphi_dw_higher_raw(w: f64, x: f64, k: u32) -> f64 {
    -dpsi_dw_higher_raw(w, -x, k)
}

pub(crate) fn dphi_dx_higher_raw(w: f64, x: f64, n: u32) -> f64 {
    let d = dphi_dx_raw(w, x);
    stirling_alternating_sum(d, n, Parity::PhiSign)
}

enum Parity {
    /// `(−1)^{k+n}` — log-sigmoid family.
    PsiSign,
    /// `(−1)^{k−1}` — soft-affine family.
    PhiSign,
}

/// `Σ_{k=1..n} sign(k) (k−1)! S(n,k) d^k` with an f64 Stirling row.
fn stirling_alternating_sum(d: f64, n: u32, parity: Parity) -> f64 {
    let row = stirling_row_f64(n);
    let mut acc = 0.0;
    let mut d_pow = 1.0;
    let mut fact = 1.0; // (k−1)!
    for k in 1..=n {
        d_pow *= d;
        if k > 1 {
            fact *= (k - 1) as f64;
        }
        let sign = match parity {
            Parity::PsiSign => {
                if (k + n) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Parity::PhiSign => {
                if k % 2 == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        acc += sign * fact * row[k as usize] * d_pow;
    }
    acc
}

/// Row `S(n, 0..=n)` of Stirling numbers of the second kind in f64
/// (exact up to the f64 integer range, saturating beyond).
fn stirling_row_f64(n: u32) -> Vec<f64> {
    let n = n as usize;
    let mut row = vec![0.0; n + 1];
    row[0] = 1.0;
    for m in 1..=n {
        // update in place right-to-left: S(m,k) = k·S(m−1,k) + S(m−1,k−1)
        row[m] = 1.0;
        for k in (1..m).rev() {
            row[k] = k as f64 * row[k] + row[k - 1];
        }
        row[0] = 0.0;
    }
    row
}

fn factorial_f64(k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

// ---------------------------------------------------------------------------
// Checked public API
// ---------------------------------------------------------------------------

/// Tunable log-sigmoid `−log(1 − w + w·e^{−x})`.
///
/// Monotone nondecreasing in `x`; `psi(w, 0) = 0`, `psi(0, x) = 0`,
/// `psi(1, x) = x`.
pub fn psi(w: f64, x: f64) -> Result<f64, ActivationError> {
    check_wx(w, x)?;
    Ok(psi_raw(w, x))
}

/// `psi` clipped to zero for negative inputs; equals ReLU at `w = 1`.
pub fn psi_plus(w: f64, x: f64) -> Result<f64, ActivationError> {
    check_wx(w, x)?;
    Ok(psi_plus_raw(w, x))
}

/// Tunable soft-affine `log(1 − w + w·e^{x})`, exactly `−psi(w, −x)`.
pub fn phi(w: f64, x: f64) -> Result<f64, ActivationError> {
    check_wx(w, x)?;
    Ok(phi_raw(w, x))
}

/// `∂_w psi = (1 − e^{−x}) e^{psi(w,x)}`: zero at `x = 0`, sign of `x`
/// elsewhere. The closed form extends continuously to `w ∈ {0, 1}`.
pub fn dpsi_dw(w: f64, x: f64) -> Result<f64, ActivationError> {
    check_wx(w, x)?;
    Ok(dpsi_dw_raw(w, x))
}

/// `∂_wᵏ psi = (k−1)! (1 − e^{−x})^k e^{k·psi(w,x)}` for `k ≥ 1`.
///
/// Always zero at `x = 0`; nonnegative for even `k` (convexity in `w`).
/// Overflow saturates to `±∞` rather than erroring.
pub fn dpsi_dw_higher(w: f64, x: f64, k: u32) -> Result<f64, ActivationError> {
    check_wx(w, x)?;
    assert!(k >= 1, "derivative order k must be >= 1");
    Ok(dpsi_dw_higher_raw(w, x, k))
}

/// `∂_x psi = w e^{−x} e^{psi(w,x)} ∈ [0, 1]`; equals `w` at `x = 0`.
pub fn dpsi_dx(w: f64, x: f64) -> Result<f64, ActivationError> {
    check_wx(w, x)?;
    Ok(dpsi_dx_raw(w, x))
}

/// `n`-th `x`-derivative of `psi` via the Stirling-number expansion
/// `Σ_{k=1..n} (−1)^{k+n} (k−1)! S(n,k) (∂_x psi)^k`.
///
/// For `n = 2` this is `−d(1−d) ≤ 0` with `d = ∂_x psi` (concavity in `x`).
pub fn dpsi_dx_higher(w: f64, x: f64, n: u32) -> Result<f64, ActivationError> {
    check_wx(w, x)?;
    assert!(n >= 1, "derivative order n must be >= 1");
    Ok(dpsi_dx_higher_raw(w, x, n))
}

/// `∂_w phi = (e^{x} − 1) e^{−phi(w,x)}`; mirrors `dpsi_dw` through the
/// reflection `phi(w, x) = −psi(w, −x)`.
pub fn dphi_dw(w: f64, x: f64) -> Result<f64, ActivationError> {
    check_wx(w, x)?;
    Ok(dphi_dw_raw(w, x))
}

/// `∂_wᵏ phi = (−1)^{k−1} (k−1)! (∂_w phi)^k` for `k ≥ 1`.
pub fn dphi_dw_higher(w: f64, x: f64, k: u32) -> Result<f64, ActivationError> {
    check_wx(w, x)?;
    assert!(k >= 1, "derivative order k must be >= 1");
    Ok(dphi_dw_higher_raw(w, x, k))
}

/// `∂_x phi = w e^{x} e^{−phi(w,x)}`: a tunable sigmoid with
/// `∂_x phi(w, 0) = w`.
pub fn dphi_dx(w: f64, x: f64) -> Result<f64, ActivationError> {
    check_wx(w, x)?;
    Ok(dphi_dx_raw(w, x))
}

/// `n`-th `x`-derivative of `phi`:
/// `Σ_{k=1..n} (−1)^{k−1} (k−1)! S(n,k) (∂_x phi)^k`.
pub fn dphi_dx_higher(w: f64, x: f64, n: u32) -> Result<f64, ActivationError> {
    check_wx(w, x)?;
    assert!(n >= 1, "derivative order n must be >= 1");
    Ok(dphi_dx_higher_raw(w, x, n))
}

/// Stirling number of the second kind `S(n, k)`, exact, via the recurrence
/// `S(n,k) = k·S(n−1,k) + S(n−1,k−1)` with `S(0,0) = 1`.
///
/// Guarded to `n ≤ 30` so every value fits a `u128` exactly; `k > n`
/// returns 0.
pub fn stirling2(n: u32, k: u32) -> Result<u128, ActivationError> {
    if n > STIRLING_MAX_N {
        return Err(ActivationError::StirlingRange(n));
    }
    if k > n {
        return Ok(0);
    }
    let mut row = vec![0u128; n as usize + 1];
    row[0] = 1;
    for m in 1..=n as usize {
        row[m] = 1;
        for j in (1..m).rev() {
            row[j] = j as u128 * row[j] + row[j - 1];
        }
        row[0] = 0;
    }
    Ok(row[k as usize])
}
