//! Single-hidden-layer function approximation with a fixed nonzero bias.
//!
//! The approximator is `y_i(x) = Σ_j a_ij · act(w_j, η_jᵀx + b)`: input
//! links are full-pass (`w = 1`) so the hidden pre-activation is the affine
//! map `η_jᵀx + b` with one shared fixed bias `b ≠ 0`; the output links
//! carry the trainable activation levels `w_j` (shared across outputs) and
//! real weights `a_ij`. Density holds with rational `a_ij` as well, which
//! [`round_output_weights_rational`] probes by snapping each output weight
//! to its best rational approximation with a bounded denominator.

use std::sync::Arc;

/// Shared target-function closure.
pub type TargetFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

use rand::rngs::StdRng;
use rand::SeedableRng;

use crate::activations::ActivationKind;
use crate::matrix::Mat;

use super::train::{train, Dataset, Loss, Optimizer, Targets, TrainConfig};
use super::{LayerMask, LayeredTransNN, LearnError, OutputHead};

/// A target function on a compact box.
#[derive(Clone)]
pub struct ApproxTarget {
    pub name: String,
    pub dim_in: usize,
    pub dim_out: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub f: TargetFn,
}

impl ApproxTarget {
    pub fn scalar_1d(
        name: &str,
        lo: f64,
        hi: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ApproxTarget {
            name: name.to_string(),
            dim_in: 1,
            dim_out: 1,
            lo: vec![lo],
            hi: vec![hi],
            f: Arc::new(move |x| vec![f(x[0])]),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }

    /// Bundled named targets: `sin`, `gaussian-bump`, `sawtooth-smooth`,
    /// `2d-peaks`.
    pub fn by_name(name: &str) -> Option<ApproxTarget> {
        match name {
            "sin" => Some(ApproxTarget::scalar_1d(
                "sin",
                -std::f64::consts::PI,
                std::f64::consts::PI,
                f64::sin,
            )),
            "gaussian-bump" => Some(ApproxTarget::scalar_1d(
                "gaussian-bump",
                -3.0,
                3.0,
                |x| (-x * x).exp(),
            )),
            "sawtooth-smooth" => Some(ApproxTarget::scalar_1d(
                "sawtooth-smooth",
                -std::f64::consts::PI,
                std::f64::consts::PI,
                |x| {
                    // truncated Fourier sawtooth: smooth, oscillatory
                    (1..=5)
                        .map(|k| {
                            let kf = k as f64;
                            (2.0 / std::f64::consts::PI) * (-1.0f64).powi(k + 1)
                                * (kf * x).sin()
                                / kf
                        })
                        .sum()
                },
            )),
            "2d-peaks" => Some(ApproxTarget {
                name: "2d-peaks".to_string(),
                dim_in: 2,
                dim_out: 1,
                lo: vec![-3.0, -3.0],
                hi: vec![3.0, 3.0],
                f: Arc::new(|v| {
                    let (x, y) = (v[0], v[1]);
                    let z = 3.0 * (1.0 - x).powi(2) * (-x * x - (y + 1.0).powi(2)).exp()
                        - 10.0 * (x / 5.0 - x.powi(3) - y.powi(5)) * (-x * x - y * y).exp()
                        - (1.0 / 3.0) * (-(x + 1.0).powi(2) - y * y).exp();
                    vec![z / 8.0]
                }),
            }),
            _ => None,
        }
    }

    /// The residual `f − F` of a partial fit, on the same box.
    fn residual(&self, fitted: &LayeredTransNN, stage: usize) -> ApproxTarget {
        let fitted = fitted.clone();
        let inner = Arc::clone(&self.f);
        ApproxTarget {
            name: format!("{}-residual-{stage}", self.name),
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            lo: self.lo.clone(),
            hi: self.hi.clone(),
            f: Arc::new(move |x| {
                let want = inner(x);
                let (got, _) = fitted.forward(x).expect("fitted model evaluates");
                want.iter().zip(&got).map(|(w, g)| w - g).collect()
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ApproxConfig {
    /// Fixed shared bias `b ≠ 0` (positive required for the clipped kind).
    pub bias: f64,
    pub activation: ActivationKind,
    pub train_points: usize,
    pub eval_points: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Multiplicative per-epoch learning-rate factor (1 = constant).
    pub lr_decay: f64,
    pub seed: u64,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        ApproxConfig {
            bias: 1.0,
            activation: ActivationKind::TLogSigmoid,
            train_points: 256,
            eval_points: 2001,
            epochs: 5000,
            learning_rate: 0.02,
            lr_decay: 0.9995,
            seed: 1,
        }
    }
}

/// Uniform grid over the target's box with roughly `points` samples
/// (`⌈points^{1/d}⌉` per axis beyond one dimension).
fn grid(target: &ApproxTarget, points: usize) -> Vec<Vec<f64>> {
    let d = target.dim_in;
    let per_axis = if d == 1 {
        points.max(2)
    } else {
        (points as f64).powf(1.0 / d as f64).ceil() as usize
    }
    .max(2);
    let mut out = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let x: Vec<f64> = (0..d)
            .map(|k| {
                target.lo[k]
                    + (target.hi[k] - target.lo[k]) * idx[k] as f64 / (per_axis - 1) as f64
            })
            .collect();
        out.push(x);
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == d {
                return out;
            }
        }
    }
}

/// The regression set sampled from the target on its training grid.
fn training_set(target: &ApproxTarget, cfg: &ApproxConfig) -> Result<Dataset, LearnError> {
    let train_inputs = grid(target, cfg.train_points);
    let rows = train_inputs.len();
    let mut inputs = Mat::zeros(rows, target.dim_in);
    let mut targets = Mat::zeros(rows, target.dim_out);
    for (r, x) in train_inputs.iter().enumerate() {
        for (c, v) in x.iter().enumerate() {
            inputs[(r, c)] = *v;
        }
        for (c, v) in target.eval(x).iter().enumerate() {
            targets[(r, c)] = *v;
        }
    }
    Dataset::new(inputs, Targets::Regression(targets))
}

/// Sup-norm error of the model against the target on a dense grid.
pub fn sup_error_on_grid(
    model: &LayeredTransNN,
    target: &ApproxTarget,
    points: usize,
) -> Result<f64, LearnError> {
    let mut sup = 0.0f64;
    for x in grid(target, points) {
        let (out, _) = model.forward(&x)?;
        let want = target.eval(&x);
        for (o, y) in out.iter().zip(&want) {
            sup = sup.max((o - y).abs());
        }
    }
    Ok(sup)
}

/// Build and train the single-hidden-layer approximator of the given
/// width; returns the model and its sup-error estimate on a dense grid.
pub fn fit_universal(
    target: &ApproxTarget,
    width: usize,
    cfg: &ApproxConfig,
) -> Result<(LayeredTransNN, f64), LearnError> {
    if cfg.bias == 0.0 || cfg.bias.is_nan() {
        return Err(LearnError::ZeroBias);
    }
    if cfg.activation == ActivationKind::TLogSigmoidPlus && cfg.bias <= 0.0 {
        return Err(LearnError::NonPositiveBias(cfg.bias));
    }
    if width == 0 {
        return Err(LearnError::BadConfig("width must be >= 1".into()));
    }
    let mut model = LayeredTransNN::new(
        &[target.dim_in, width, target.dim_out],
        cfg.activation,
        OutputHead::Identity,
        cfg.seed,
    )?;
    // input layer: full-pass links, fixed shared bias b
    model.set_layer_w(0, 1.0);
    model.set_layer_bias(0, cfg.bias);
    model.set_mask(
        0,
        LayerMask {
            a: true, // η trainable
            w: false,
            bias: false,
        },
    );
    // output layer: trainable a and levels, no bias; levels shared across
    // outputs when the target is vector-valued
    model.set_layer_bias(1, 0.0);
    model.set_mask(
        1,
        LayerMask {
            a: true,
            w: true,
            bias: false,
        },
    );
    if target.dim_out > 1 {
        model.set_tied_w_rows(1, true);
    }
    // each hidden unit bends where its pre-activation crosses zero
    // (η_jᵀx + b = 0); with the shared fixed bias that knee is pinned at
    // −b/η in one dimension, so scatter the knees over the box instead of
    // sampling η blindly (fan-in init leaves the box center bare); every
    // fourth unit starts gentle so flat trends stay reachable
    {
        use rand::Rng;
        let mut rng = StdRng::seed_from_u64(cfg.seed ^ 0x5eed);
        let d = target.dim_in;
        let span: f64 = (0..d)
            .map(|k| target.hi[k] - target.lo[k])
            .fold(0.0, f64::max)
            .max(1e-9);
        let mut eta = Mat::zeros(width, d);
        for j in 0..width {
            if j % 4 == 0 {
                for k in 0..d {
                    eta[(j, k)] = rng.random_range(-2.0 / span..2.0 / span);
                }
                continue;
            }
            loop {
                let dir: Vec<f64> = if d == 1 {
                    vec![1.0]
                } else {
                    let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
                    v.into_iter().map(|x| x / norm).collect()
                };
                let knee: Vec<f64> = (0..d)
                    .map(|k| rng.random_range(target.lo[k]..target.hi[k]))
                    .collect();
                let dot: f64 = dir.iter().zip(&knee).map(|(u, x)| u * x).sum();
                if dot.abs() >= 0.03 * span {
                    let scale = -cfg.bias / dot;
                    for k in 0..d {
                        eta[(j, k)] = scale * dir[k];
                    }
                    break;
                }
            }
        }
        model.set_layer_a(0, eta);
    }

    let data = training_set(target, cfg)?;
    let tcfg = TrainConfig {
        loss: Loss::Mse,
        optimizer: Optimizer::adam(),
        learning_rate: cfg.learning_rate,
        lr_decay: cfg.lr_decay,
        l2_weight: 0.0,
        epochs: cfg.epochs,
        batch_size: data.len(), // full batch: deterministic, smooth descent
        seed: cfg.seed,
        train_a: true,
        train_w: true,
        train_eta: true,
        train_bias: false,
        val_fraction: 0.0,
    };
    let result = train(model, &data, &tcfg)?;
    // the model is linear in the output weights: after the gradient phase
    // has shaped (η, w), solve that layer exactly — Adam's tail on this
    // ill-conditioned least-squares block decays like 1/t and would need
    // orders of magnitude more epochs to match
    let mut model = result.model;
    refit_output_layer(&mut model, &data)?;
    let sup = sup_error_on_grid(&model, target, cfg.eval_points)?;
    Ok((model, sup))
}

/// Ridge least-squares refit of the output-layer weights against the
/// training set, holding every other parameter fixed.
fn refit_output_layer(model: &mut LayeredTransNN, data: &Dataset) -> Result<(), LearnError> {
    let last = model.layer_count() - 1;
    let width = model.layer_sizes()[last];
    let dim_out = model.output_size();
    let rows = data.len();
    let targets = match &data.targets {
        Targets::Regression(t) => t,
        Targets::Labels(_) => {
            return Err(LearnError::BadConfig(
                "output refit needs regression targets".into(),
            ))
        }
    };
    let mut states = Vec::with_capacity(rows);
    for r in 0..rows {
        let (_, tape) = model.forward(data.inputs.row(r))?;
        states.push(tape.states[last].clone());
    }
    let act = model.activation();
    let w_out = model.layer_w(last).clone();
    let bias_out = model.layer_bias(last).to_vec();
    let mut a_new = model.layer_a(last).clone();
    for i in 0..dim_out {
        let phi = nalgebra::DMatrix::from_fn(rows, width, |r, j| {
            act.value_raw(w_out[(i, j)], states[r][j])
        });
        let y = nalgebra::DVector::from_fn(rows, |r, _| targets[(r, i)] - bias_out[i]);
        let mut ata = phi.transpose() * &phi;
        let ridge = 1e-10 * ata.trace().max(1e-12) / width as f64;
        for d in 0..width {
            ata[(d, d)] += ridge;
        }
        let aty = phi.transpose() * y;
        if let Some(sol) = ata.lu().solve(&aty) {
            for j in 0..width {
                a_new[(i, j)] = sol[j];
            }
        }
    }
    model.set_layer_a(last, a_new);
    Ok(())
}

/// One rung of a width ladder.
#[derive(Debug)]
pub struct LadderRung {
    pub width: usize,
    pub model: LayeredTransNN,
    pub sup_error: f64,
}

/// Fit an increasing width ladder stagewise: the first rung trains
/// directly; every later rung keeps the previous units and trains its
/// extra units against the residual, then takes the better of the
/// combined model with and without a joint output refit. Each rung is a
/// genuine model of its width, and it only improves if the added capacity
/// actually shrinks the residual.
pub fn fit_universal_ladder(
    target: &ApproxTarget,
    widths: &[usize],
    cfg: &ApproxConfig,
) -> Result<Vec<LadderRung>, LearnError> {
    if widths.is_empty() || widths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LearnError::BadConfig(
            "ladder widths must be nonempty and strictly increasing".into(),
        ));
    }
    let mut rungs: Vec<LadderRung> = Vec::with_capacity(widths.len());
    for (idx, &width) in widths.iter().enumerate() {
        if idx == 0 {
            let (model, sup) = fit_universal(target, width, cfg)?;
            rungs.push(LadderRung {
                width,
                model,
                sup_error: sup,
            });
            continue;
        }
        let prev = rungs.last().unwrap();
        let extra = width - prev.width;
        let residual = target.residual(&prev.model, idx);
        let sub_cfg = ApproxConfig {
            seed: cfg.seed.wrapping_add(101 * idx as u64),
            ..cfg.clone()
        };
        let (sub, _) = fit_universal(&residual, extra, &sub_cfg)?;
        let combined = concat_hidden_units(&prev.model, &sub, target)?;
        let sup_plain = sup_error_on_grid(&combined, target, cfg.eval_points)?;
        let mut refitted = combined.clone();
        refit_output_layer(&mut refitted, &training_set(target, cfg)?)?;
        let sup_refit = sup_error_on_grid(&refitted, target, cfg.eval_points)?;
        let (model, sup) = if sup_refit < sup_plain {
            (refitted, sup_refit)
        } else {
            (combined, sup_plain)
        };
        rungs.push(LadderRung {
            width,
            model,
            sup_error: sup,
        });
    }
    Ok(rungs)
}

/// Join two single-hidden-layer models over the same box into one whose
/// hidden layer is the union of their units and whose output is the sum.
fn concat_hidden_units(
    left: &LayeredTransNN,
    right: &LayeredTransNN,
    target: &ApproxTarget,
) -> Result<LayeredTransNN, LearnError> {
    let (wa, wb) = (left.layer_sizes()[1], right.layer_sizes()[1]);
    let width = wa + wb;
    let d = target.dim_in;
    let m = target.dim_out;
    debug_assert_eq!(left.layer_bias(0)[0], right.layer_bias(0)[0]);
    let mut model = LayeredTransNN::new(&[d, width, m], left.activation(), OutputHead::Identity, 0)?;
    model.set_layer_w(0, 1.0);
    model.set_layer_bias(0, left.layer_bias(0)[0]);
    model.set_mask(0, LayerMask { a: true, w: false, bias: false });
    model.set_layer_bias(1, 0.0);
    model.set_mask(1, LayerMask { a: true, w: true, bias: false });
    if m > 1 {
        model.set_tied_w_rows(1, true);
    }
    let mut eta = Mat::zeros(width, d);
    let mut a_out = Mat::zeros(m, width);
    let mut w_out = Mat::filled(m, width, 0.5);
    for (offset, src, w_src) in [(0usize, left, wa), (wa, right, wb)] {
        for j in 0..w_src {
            for c in 0..d {
                eta[(offset + j, c)] = src.layer_a(0)[(j, c)];
            }
            for r in 0..m {
                a_out[(r, offset + j)] = src.layer_a(1)[(r, j)];
                w_out[(r, offset + j)] = src.layer_w(1)[(r, j)];
            }
        }
    }
    model.set_layer_a(0, eta);
    model.set_layer_a(1, a_out);
    model.set_layer_w_matrix(1, w_out);
    Ok(model)
}

/// Best rational approximation `p/q` of `x` with `q ≤ max_den`, by
/// continued-fraction convergents and the final semiconvergent.
pub fn best_rational(x: f64, max_den: u64) -> (i64, u64) {
    assert!(max_den >= 1);
    if !x.is_finite() || x.abs() >= 9e15 {
        return (x as i64, 1);
    }
    let neg = x < 0.0;
    let mut v = x.abs();
    // convergents p/q of the continued fraction of |x|
    let (mut p0, mut q0, mut p1, mut q1) = (1i128, 0i128, v.floor() as i128, 1i128);
    v -= v.floor();
    while v > 1e-18 && q1 <= max_den as i128 {
        v = 1.0 / v;
        let a = v.floor();
        if a >= 9e17 {
            break;
        }
        v -= a;
        let a = a as i128;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    let (best_p, best_q) = if q1 <= max_den as i128 {
        (p1, q1)
    } else {
        // the last convergent overshot: take the best semiconvergent
        let t = (max_den as i128 - q0) / q1.max(1);
        let (sp, sq) = (p0 + t * p1, q0 + t * q1);
        let err = |p: i128, q: i128| ((x.abs()) - p as f64 / q as f64).abs();
        if sq >= 1 && err(sp, sq) < err(p0, q0.max(1)) {
            (sp, sq.max(1))
        } else {
            (p0, q0.max(1))
        }
    };
    let p = if neg { -best_p } else { best_p };
    (p as i64, best_q as u64)
}

/// Snap the output-layer weights to rationals with denominators at most
/// `max_den`; returns the rounded model and the largest `|Δa|`.
pub fn round_output_weights_rational(
    model: &LayeredTransNN,
    max_den: u64,
) -> (LayeredTransNN, f64) {
    let mut rounded = model.clone();
    let last = rounded.layer_count() - 1;
    let a = rounded.layer_a(last).clone();
    let mut max_delta = 0.0f64;
    let snapped = Mat::from_fn(a.rows(), a.cols(), |i, j| {
        let v = a[(i, j)];
        let (p, q) = best_rational(v, max_den);
        let r = p as f64 / q as f64;
        max_delta = max_delta.max((r - v).abs());
        r
    });
    rounded.set_layer_a(last, snapped);
    (rounded, max_delta)
}
