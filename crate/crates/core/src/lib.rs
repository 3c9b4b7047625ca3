//! Transmission neural networks.
//!
//! A network spread process with per-link transmission probabilities has two
//! exact state representations: per-node infection probabilities `p ∈ [0,1]ⁿ`,
//! and the negative-log-negative state `s = −log(1−p) ∈ [0,+∞]ⁿ` in which one
//! step of the spread dynamics is a layer of a neural network whose
//! activations sit on the links. This crate implements:
//!
//! - [`activations`]: the tunable link activations (log-sigmoid, its
//!   nonnegative clip, and the soft-affine reflection) with their full
//!   derivative calculus, including Stirling-number higher derivatives;
//! - [`network`]: transmission-network data model, state conversions,
//!   modulation, and JSON/CSV file I/O;
//! - [`dynamics`]: discrete-time spread steps in both representations, with
//!   trajectory recording and export;
//! - [`analysis`]: the spectral extinction threshold (radius of `A ⊙ W`) via
//!   power iteration with a dense eigenvalue cross-check;
//! - [`continuum`]: continuous-time SIS limits of both discrete models, an
//!   RK4 integrator, and a step-size consistency harness;
//! - [`learn`]: layered models with trainable per-link activation levels,
//!   analytic backpropagation, training, and single-hidden-layer function
//!   approximation.

pub mod activations;
pub mod analysis;
pub mod continuum;
pub mod dynamics;
pub mod learn;
pub mod matrix;
pub mod network;

pub use matrix::Mat;
