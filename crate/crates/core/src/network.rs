//! Transmission-network data model, state representations, and file I/O.
//!
//! A network couples a count/adjacency matrix `a` with a matrix `w` of
//! per-link transmission probabilities in `[0, 1]`. Node states come in two
//! equivalent representations: infection probabilities `p ∈ [0,1]ⁿ` and the
//! negative-log-negative state `s = −log(1−p) ∈ [0,+∞]ⁿ` (the Shannon
//! information of staying healthy), connected by [`prob_to_info`] /
//! [`info_to_prob`].

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Mat;

/// Which dynamics family the matrices describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NetworkKind {
    /// `a` is a 0/1 adjacency of effective transmissions; `w` is unused by
    /// the dynamics (kept for uniformity).
    #[serde(rename = "effective")]
    EffectiveAdjacency,
    /// One potential transmission per link per step; `a` is 0/1 adjacency.
    #[serde(rename = "single")]
    SingleParticle,
    /// `a[h][q]` independent particle transmissions per link per step.
    #[serde(rename = "multi")]
    MultiParticle,
    /// Unconstrained real link weights (layered-model building block).
    #[serde(rename = "general")]
    GeneralReal,
}

impl NetworkKind {
    /// Epidemic kinds require self-loops and carry probability semantics.
    pub fn is_epidemic(self) -> bool {
        !matches!(self, NetworkKind::GeneralReal)
    }
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("network must have at least one node")]
    Empty,
    #[error("matrix `{name}` must be {n}x{n}, got {rows}x{cols}")]
    ShapeMismatch {
        name: &'static str,
        n: usize,
        rows: usize,
        cols: usize,
    },
    #[error("non-finite entry at {name}[{row}][{col}]")]
    NonFinite {
        name: &'static str,
        row: usize,
        col: usize,
    },
    #[error("link probability w[{row}][{col}] = {value} outside [0, 1]")]
    WeightOutOfRange { row: usize, col: usize, value: f64 },
    #[error("missing self-loop: a[{node}][{node}] must be positive for {kind:?} networks")]
    MissingSelfLoop { node: usize, kind: NetworkKind },
    #[error("a[{row}][{col}] = {value}: effective-adjacency entries must be 0 or 1")]
    NotBinary { row: usize, col: usize, value: f64 },
    #[error("a[{row}][{col}] = {value}: particle counts must be nonnegative")]
    NegativeCount { row: usize, col: usize, value: f64 },
    #[error("probability p[{index}] = {value} outside [0, 1]")]
    ProbabilityOutOfRange { index: usize, value: f64 },
    #[error("info state s[{index}] = {value} must be nonnegative (NaN rejected)")]
    InvalidInfo { index: usize, value: f64 },
    #[error("modulation parameter {name}[{index}] = {value} outside [0, 1]")]
    ModulationOutOfRange {
        name: &'static str,
        index: usize,
        value: f64,
    },
    #[error("modulation vector {name} has length {got}, expected {expected}")]
    ModulationLength {
        name: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("network file provides both `w` and `modulation`; use exactly one")]
    AmbiguousWeights,
    #[error("unknown modulation mode `{0}` (expected none|global|dual)")]
    UnknownModulationMode(String),
    #[error("network file provides neither `w` nor `modulation`")]
    MissingWeights,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid JSON: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}:{line}: {msg}")]
    CsvFormat {
        path: String,
        line: usize,
        msg: String,
    },
}

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

/// Per-node infection probabilities, entries in `[0, 1]` (1 = confirmed).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityState(Vec<f64>);

impl ProbabilityState {
    pub fn new(p: Vec<f64>) -> Result<Self, NetworkError> {
        for (i, &v) in p.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) || v.is_nan() {
                return Err(NetworkError::ProbabilityOutOfRange { index: i, value: v });
            }
        }
        Ok(ProbabilityState(p))
    }

    pub fn zeros(n: usize) -> Self {
        ProbabilityState(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Construction for values already guaranteed in range (step outputs).
    pub(crate) fn from_trusted(p: Vec<f64>) -> Self {
        debug_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        ProbabilityState(p)
    }
}

/// Negative-log-negative state, entries in `[0, +∞]` (`+∞` ⇔ `p = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct InfoState(Vec<f64>);

impl InfoState {
    pub fn new(s: Vec<f64>) -> Result<Self, NetworkError> {
        for (i, &v) in s.iter().enumerate() {
            if v.is_nan() || v < 0.0 {
                return Err(NetworkError::InvalidInfo { index: i, value: v });
            }
        }
        Ok(InfoState(s))
    }

    pub fn zeros(n: usize) -> Self {
        InfoState(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn from_trusted(s: Vec<f64>) -> Self {
        debug_assert!(s.iter().all(|v| *v >= 0.0));
        InfoState(s)
    }
}

/// Probabilities this close to 1 are snapped to exactly 1 (`s = +∞`):
/// below the `log1p` precision floor a huge finite `s` is meaningless.
const PROB_ONE_SNAP: f64 = 1e-15;

/// `s_i = −log(1 − p_i)`: monotone bijection `[0,1] → [0,+∞]`.
pub fn prob_to_info(p: &ProbabilityState) -> InfoState {
    InfoState(
        p.as_slice()
            .iter()
            .map(|&v| {
                if 1.0 - v < PROB_ONE_SNAP {
                    f64::INFINITY
                } else {
                    -(-v).ln_1p()
                }
            })
            .collect(),
    )
}

/// `p_i = 1 − e^{−s_i}`, the inverse of [`prob_to_info`].
pub fn info_to_prob(s: &InfoState) -> ProbabilityState {
    ProbabilityState(s.as_slice().iter().map(|&v| -(-v).exp_m1()).collect())
}

// ---------------------------------------------------------------------------
// Modulation
// ---------------------------------------------------------------------------

/// How the inherent link probabilities `c` are rescaled into effective `w`.
#[derive(Debug, Clone, PartialEq)]
pub enum ModulationMode {
    None,
    /// `w = γ·c` elementwise, one global level `γ ∈ [0,1]`.
    Global(f64),
    /// `w[h][q] = α[h]·c[h][q]·β[q]`: post- and pre-synaptic per-node levels.
    DualNodal { alpha: Vec<f64>, beta: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Modulation {
    pub mode: ModulationMode,
    /// Inherent probabilities `c`, entries in `[0, 1]`.
    pub base: Mat,
}

fn check_unit_vec(name: &'static str, v: &[f64], n: usize) -> Result<(), NetworkError> {
    if v.len() != n {
        return Err(NetworkError::ModulationLength {
            name,
            got: v.len(),
            expected: n,
        });
    }
    for (i, &x) in v.iter().enumerate() {
        if !(0.0..=1.0).contains(&x) || x.is_nan() {
            return Err(NetworkError::ModulationOutOfRange {
                name,
                index: i,
                value: x,
            });
        }
    }
    Ok(())
}

/// Effective link-probability matrix; every output entry stays in `[0, 1]`
/// by construction.
pub fn apply_modulation(m: &Modulation) -> Result<Mat, NetworkError> {
    let n = m.base.rows();
    for ((i, j), v) in m.base.iter() {
        if !(0.0..=1.0).contains(&v) || v.is_nan() {
            return Err(NetworkError::WeightOutOfRange {
                row: i,
                col: j,
                value: v,
            });
        }
    }
    match &m.mode {
        ModulationMode::None => Ok(m.base.clone()),
        ModulationMode::Global(gamma) => {
            check_unit_vec("gamma", std::slice::from_ref(gamma), 1)?;
            Ok(m.base.scale(*gamma))
        }
        ModulationMode::DualNodal { alpha, beta } => {
            check_unit_vec("alpha", alpha, n)?;
            check_unit_vec("beta", beta, m.base.cols())?;
            Ok(Mat::from_fn(m.base.rows(), m.base.cols(), |h, q| {
                alpha[h] * m.base[(h, q)] * beta[q]
            }))
        }
    }
}

// ---------------------------------------------------------------------------
// TransmissionNetwork
// ---------------------------------------------------------------------------

/// Nonzero in-links of one node: `(source, count, level)`.
type Link = (usize, f64, f64);

/// Immutable transmission network: counts/adjacency `a`, link probabilities
/// `w`, and a kind tag. Validated on construction; dynamics may then use
/// the unchecked activation kernels.
#[derive(Clone)]
pub struct TransmissionNetwork {
    n: usize,
    kind: NetworkKind,
    a: Mat,
    w: Mat,
    /// True when every count is integer-valued (exactly representable).
    counts_integral: bool,
    /// Compressed in-link lists, built only for sparse counts.
    links: Option<Vec<Vec<Link>>>,
}

/// Build compressed link lists when at least this fraction of counts is zero.
const SPARSE_ZERO_DENSITY: f64 = 0.95;
/// Below this size the dense scan is always cheap enough.
const SPARSE_MIN_NODES: usize = 64;

impl TransmissionNetwork {
    pub fn new(kind: NetworkKind, a: Mat, w: Mat) -> Result<Self, NetworkError> {
        let n = a.rows();
        if n == 0 {
            return Err(NetworkError::Empty);
        }
        if !a.is_square() {
            return Err(NetworkError::ShapeMismatch {
                name: "a",
                n,
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        if w.rows() != n || w.cols() != n {
            return Err(NetworkError::ShapeMismatch {
                name: "w",
                n,
                rows: w.rows(),
                cols: w.cols(),
            });
        }
        for ((i, j), v) in a.iter() {
            if !v.is_finite() {
                return Err(NetworkError::NonFinite {
                    name: "a",
                    row: i,
                    col: j,
                });
            }
            match kind {
                NetworkKind::EffectiveAdjacency | NetworkKind::SingleParticle => {
                    if v != 0.0 && v != 1.0 {
                        return Err(NetworkError::NotBinary {
                            row: i,
                            col: j,
                            value: v,
                        });
                    }
                }
                NetworkKind::MultiParticle => {
                    if v < 0.0 {
                        return Err(NetworkError::NegativeCount {
                            row: i,
                            col: j,
                            value: v,
                        });
                    }
                }
                NetworkKind::GeneralReal => {}
            }
        }
        for ((i, j), v) in w.iter() {
            if !(0.0..=1.0).contains(&v) || v.is_nan() {
                return Err(NetworkError::WeightOutOfRange {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
        if kind.is_epidemic() {
            for i in 0..n {
                if a[(i, i)] <= 0.0 {
                    return Err(NetworkError::MissingSelfLoop { node: i, kind });
                }
            }
        }
        let counts_integral = a.as_slice().iter().all(|v| v.fract() == 0.0);
        let mut net = TransmissionNetwork {
            n,
            kind,
            a,
            w,
            counts_integral,
            links: None,
        };
        if net.n >= SPARSE_MIN_NODES && net.a.zero_density() >= SPARSE_ZERO_DENSITY {
            net.rebuild_links();
        }
        Ok(net)
    }

    /// Construct with `w` derived from a modulation instead of given directly.
    pub fn with_modulation(
        kind: NetworkKind,
        a: Mat,
        modulation: &Modulation,
    ) -> Result<Self, NetworkError> {
        let w = apply_modulation(modulation)?;
        TransmissionNetwork::new(kind, a, w)
    }

    fn rebuild_links(&mut self) {
        let lists = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .filter(|&j| self.a[(i, j)] != 0.0)
                    .map(|j| (j, self.a[(i, j)], self.w[(i, j)]))
                    .collect()
            })
            .collect();
        self.links = Some(lists);
    }

    /// Force the compressed (or dense) storage path; used by equivalence
    /// tests only.
    #[doc(hidden)]
    pub fn set_sparse_storage(&mut self, sparse: bool) {
        if sparse {
            self.rebuild_links();
        } else {
            self.links = None;
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> NetworkKind {
        self.kind
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn w(&self) -> &Mat {
        &self.w
    }

    pub fn counts_are_integral(&self) -> bool {
        self.counts_integral
    }

    /// Iterate nonzero in-links of node `i` as `(source, count, level)`.
    /// Entries with `a[i][j] == 0` never appear: absent links contribute
    /// nothing regardless of their stored `w`.
    pub fn in_links(&self, i: usize) -> InLinks<'_> {
        match &self.links {
            Some(lists) => InLinks::Sparse(lists[i].iter()),
            None => InLinks::Dense {
                a: self.a.row(i),
                w: self.w.row(i),
                j: 0,
            },
        }
    }
}

impl fmt::Debug for TransmissionNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransmissionNetwork")
            .field("n", &self.n)
            .field("kind", &self.kind)
            .field("sparse", &self.links.is_some())
            .finish()
    }
}

pub enum InLinks<'a> {
    Sparse(std::slice::Iter<'a, Link>),
    Dense {
        a: &'a [f64],
        w: &'a [f64],
        j: usize,
    },
}

impl Iterator for InLinks<'_> {
    type Item = Link;

    fn next(&mut self) -> Option<Link> {
        match self {
            InLinks::Sparse(it) => it.next().copied(),
            InLinks::Dense { a, w, j } => {
                while *j < a.len() {
                    let k = *j;
                    *j += 1;
                    if a[k] != 0.0 {
                        return Some((k, a[k], w[k]));
                    }
                }
                None
            }
        }
    }
}

// ---------------------------------------------------------------------------
// File I/O
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ModulationFile {
    mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<Vec<f64>>,
    base: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    n: usize,
    kind: NetworkKind,
    a: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    modulation: Option<ModulationFile>,
}

fn mat_from_nested(
    name: &'static str,
    n: usize,
    rows: &[Vec<f64>],
) -> Result<Mat, NetworkError> {
    let m = Mat::from_rows(rows).ok_or(NetworkError::ShapeMismatch {
        name,
        n,
        rows: rows.len(),
        cols: rows.first().map_or(0, Vec::len),
    })?;
    if m.rows() != n || m.cols() != n {
        return Err(NetworkError::ShapeMismatch {
            name,
            n,
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    Ok(m)
}

/// Load a network from its JSON file form. The file carries either an
/// explicit `w` matrix or a `modulation` block that derives it, never both.
pub fn load_network(path: impl AsRef<Path>) -> Result<TransmissionNetwork, NetworkError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: NetworkFile =
        serde_json::from_str(&text).map_err(|source| NetworkError::Json {
            path: path.display().to_string(),
            source,
        })?;
    network_from_file(file)
}

fn network_from_file(file: NetworkFile) -> Result<TransmissionNetwork, NetworkError> {
    let a = mat_from_nested("a", file.n, &file.a)?;
    match (file.w, file.modulation) {
        (Some(_), Some(_)) => Err(NetworkError::AmbiguousWeights),
        (None, None) => Err(NetworkError::MissingWeights),
        (Some(w), None) => {
            let w = mat_from_nested("w", file.n, &w)?;
            TransmissionNetwork::new(file.kind, a, w)
        }
        (None, Some(mf)) => {
            let base = mat_from_nested("modulation.base", file.n, &mf.base)?;
            let mode = match mf.mode.as_str() {
                "none" => ModulationMode::None,
                "global" => ModulationMode::Global(mf.gamma.unwrap_or(1.0)),
                "dual" => ModulationMode::DualNodal {
                    alpha: mf.alpha.unwrap_or_else(|| vec![1.0; file.n]),
                    beta: mf.beta.unwrap_or_else(|| vec![1.0; file.n]),
                },
                other => return Err(NetworkError::UnknownModulationMode(other.to_string())),
            };
            TransmissionNetwork::with_modulation(file.kind, a, &Modulation { mode, base })
        }
    }
}

/// Save a network as JSON. `load_network ∘ save_network` is the identity
/// (bit-exact: floats serialize in shortest round-trip form).
pub fn save_network(
    net: &TransmissionNetwork,
    path: impl AsRef<Path>,
) -> Result<(), NetworkError> {
    let path = path.as_ref();
    let file = NetworkFile {
        n: net.n,
        kind: net.kind,
        a: net.a.to_nested(),
        w: Some(net.w.to_nested()),
        modulation: None,
    };
    let text = serde_json::to_string_pretty(&file).expect("network serializes");
    fs::write(path, text).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Load the CSV edge-list form (`src,dst,a,w` header, 0-based node ids,
/// self-loop rows required for epidemic kinds). Node count is inferred
/// from the largest id.
pub fn load_network_csv(
    path: impl AsRef<Path>,
    kind: NetworkKind,
) -> Result<TransmissionNetwork, NetworkError> {
    let path = path.as_ref();
    let pstr = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| NetworkError::Io {
        path: pstr.clone(),
        source,
    })?;
    let err = |line: usize, msg: String| NetworkError::CsvFormat {
        path: pstr.clone(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "src,dst,a,w" => {}
        Some((_, header)) => {
            return Err(err(1, format!("expected header `src,dst,a,w`, got `{header}`")))
        }
        None => return Err(err(1, "empty file".into())),
    }
    let mut entries: Vec<(usize, usize, f64, f64)> = Vec::new();
    let mut n = 0usize;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(err(line_no, format!("expected 4 fields, got {}", parts.len())));
        }
        let src: usize = parts[0]
            .trim()
            .parse()
            .map_err(|e| err(line_no, format!("bad src `{}`: {e}", parts[0])))?;
        let dst: usize = parts[1]
            .trim()
            .parse()
            .map_err(|e| err(line_no, format!("bad dst `{}`: {e}", parts[1])))?;
        let a: f64 = parts[2]
            .trim()
            .parse()
            .map_err(|e| err(line_no, format!("bad a `{}`: {e}", parts[2])))?;
        let w: f64 = parts[3]
            .trim()
            .parse()
            .map_err(|e| err(line_no, format!("bad w `{}`: {e}", parts[3])))?;
        if entries.iter().any(|&(s, d, _, _)| s == src && d == dst) {
            return Err(err(line_no, format!("duplicate edge {src}->{dst}")));
        }
        n = n.max(src + 1).max(dst + 1);
        entries.push((src, dst, a, w));
    }
    if n == 0 {
        return Err(NetworkError::Empty);
    }
    let mut a = Mat::zeros(n, n);
    let mut w = Mat::zeros(n, n);
    for (src, dst, av, wv) in entries {
        a[(dst, src)] = av;
        w[(dst, src)] = wv;
    }
    TransmissionNetwork::new(kind, a, w)
}

/// Save the CSV edge-list form: one row per nonzero count, row-major by
/// destination then source.
pub fn save_network_csv(
    net: &TransmissionNetwork,
    path: impl AsRef<Path>,
) -> Result<(), NetworkError> {
    let mut out = String::from("src,dst,a,w\n");
    for dst in 0..net.n {
        for (src, a, w) in net.in_links(dst) {
            out.push_str(&format!("{src},{dst},{a},{w}\n"));
        }
    }
    let path = path.as_ref();
    fs::write(path, out).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })
}
