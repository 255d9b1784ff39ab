//! Lattice geometry on the periodic torus, model parameters, and Fourier-mode
//! bookkeeping shared by every analysis and the simulator.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("lattice dimensions must be positive, got {rows}x{cols}")]
    EmptyLattice { rows: usize, cols: usize },
    #[error("coupling strength must be finite and non-negative, got {0}")]
    NegativeCoupling(f64),
    #[error("{what} matrix has {got} entries, expected {expected}")]
    ShapeMismatch { what: &'static str, got: usize, expected: usize },
    #[error("delay {value} on {edge} edge into node ({m}, {n}) is not strictly positive and finite")]
    NonPositiveDelay { edge: Edge, m: usize, n: usize, value: f64 },
}

/// Incoming edge of a node: from the node above (`Down`) or from the left (`Right`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Edge {
    Down,
    Right,
}

impl std::fmt::Display for Edge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Edge::Down => f.write_str("down"),
            Edge::Right => f.write_str("right"),
        }
    }
}

/// Stuart-Landau node parameters: linear growth `alpha`, intrinsic frequency `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlParams {
    pub alpha: f64,
    pub beta: f64,
}

/// FitzHugh-Nagumo node with an excitatory synaptic gating variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FhnParams {
    /// External stimulus current `I`.
    pub current: f64,
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    /// Synaptic reversal potential.
    pub v_r: f64,
}

impl FhnParams {
    pub const DEFAULT_A: f64 = 0.7;
    pub const DEFAULT_B: f64 = 0.8;
    pub const DEFAULT_EPS: f64 = 0.08;
    pub const DEFAULT_V_R: f64 = 2.0;

    pub fn with_current(current: f64) -> Self {
        Self {
            current,
            a: Self::DEFAULT_A,
            b: Self::DEFAULT_B,
            eps: Self::DEFAULT_EPS,
            v_r: Self::DEFAULT_V_R,
        }
    }
}

impl Default for FhnParams {
    fn default() -> Self {
        Self::with_current(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelParams {
    #[serde(rename = "sl")]
    StuartLandau(SlParams),
    #[serde(rename = "fhn")]
    FitzHughNagumo(FhnParams),
}

impl ModelParams {
    /// Number of state components per node.
    pub fn dim(&self) -> usize {
        match self {
            ModelParams::StuartLandau(_) => 2,
            ModelParams::FitzHughNagumo(_) => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelParams::StuartLandau(_) => "sl",
            ModelParams::FitzHughNagumo(_) => "fhn",
        }
    }
}

/// An `M x N` lattice with periodic boundaries in both directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    rows: usize,
    cols: usize,
    pub params: ModelParams,
    coupling: f64,
}

impl LatticeSpec {
    pub fn new(
        rows: usize,
        cols: usize,
        params: ModelParams,
        coupling: f64,
    ) -> Result<Self, LatticeError> {
        if rows == 0 || cols == 0 {
            return Err(LatticeError::EmptyLattice { rows, cols });
        }
        if !(coupling.is_finite() && coupling >= 0.0) {
            return Err(LatticeError::NegativeCoupling(coupling));
        }
        Ok(Self { rows, cols, params, coupling })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn nodes(&self) -> usize {
        self.rows * self.cols
    }

    /// Row-major flat index of node `(m, n)`.
    #[inline]
    pub fn index(&self, m: usize, n: usize) -> usize {
        m * self.cols + n
    }

    /// Node feeding `(m, n)` through its down edge, i.e. `(m-1, n)` on the torus.
    #[inline]
    pub fn up_neighbor(&self, m: usize, n: usize) -> (usize, usize) {
        ((m + self.rows - 1) % self.rows, n)
    }

    /// Node feeding `(m, n)` through its right edge, i.e. `(m, n-1)` on the torus.
    #[inline]
    pub fn left_neighbor(&self, m: usize, n: usize) -> (usize, usize) {
        (m, (n + self.cols - 1) % self.cols)
    }

    pub fn modes(&self) -> Vec<WaveVector> {
        enumerate_modes(self.rows, self.cols)
    }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn principal_angle(x: f64) -> f64 {
    let mut r = x.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

/// Spatial wavevector `(k1, k2)` of a lattice Fourier mode.
///
/// Stored in a canonical representative: both components are first reduced to
/// `(-pi, pi]`, then one of them is moved by a full turn when needed so that
/// `k_minus` lies in `(-pi/2, pi/2]`. The effective coupling `C cos(k_minus)` is
/// then non-negative, which is the orientation the large-delay formulas assume.
/// The homogeneous mode is `(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveVector {
    k1: f64,
    k2: f64,
}

impl WaveVector {
    pub const MODE_TOLERANCE: f64 = 1e-12;

    pub fn new(k1: f64, k2: f64) -> Self {
        let mut k1 = principal_angle(k1);
        let k2 = principal_angle(k2);
        let km = 0.5 * (k1 - k2);
        if km > FRAC_PI_2 {
            k1 -= TAU;
        } else if km <= -FRAC_PI_2 {
            k1 += TAU;
        }
        Self { k1, k2 }
    }

    /// Mode `2 pi (l / rows, j / cols)`.
    pub fn from_indices(l: usize, j: usize, rows: usize, cols: usize) -> Self {
        Self::new(
            TAU * (l % rows) as f64 / rows as f64,
            TAU * (j % cols) as f64 / cols as f64,
        )
    }

    /// Build from rotated coordinates; `k1 = k_plus + k_minus`, `k2 = k_plus - k_minus`.
    pub fn from_rotated(k_plus: f64, k_minus: f64) -> Self {
        Self::new(k_plus + k_minus, k_plus - k_minus)
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn k2(&self) -> f64 {
        self.k2
    }

    pub fn k_plus(&self) -> f64 {
        0.5 * (self.k1 + self.k2)
    }

    pub fn k_minus(&self) -> f64 {
        0.5 * (self.k1 - self.k2)
    }

    /// Equality of the underlying lattice modes, i.e. componentwise modulo `2 pi`.
    pub fn same_mode(&self, other: &WaveVector) -> bool {
        let d1 = principal_angle(self.k1 - other.k1).abs();
        let d2 = principal_angle(self.k2 - other.k2).abs();
        d1 <= Self::MODE_TOLERANCE && d2 <= Self::MODE_TOLERANCE
    }
}

/// All `rows * cols` admissible wavevectors, ordered by `(l, j)` with `l, j`
/// starting at zero, so the homogeneous mode comes first.
pub fn enumerate_modes(rows: usize, cols: usize) -> Vec<WaveVector> {
    let mut out = Vec::with_capacity(rows * cols);
    for l in 0..rows {
        for j in 0..cols {
            out.push(WaveVector::from_indices(l, j, rows, cols));
        }
    }
    out
}

/// Per-edge coupling delays. `down[m][n]` delays the signal from `(m-1, n)`,
/// `right[m][n]` the one from `(m, n-1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayMap {
    rows: usize,
    cols: usize,
    down: Vec<f64>,
    right: Vec<f64>,
}

impl DelayMap {
    pub fn new(
        rows: usize,
        cols: usize,
        down: Vec<f64>,
        right: Vec<f64>,
    ) -> Result<Self, LatticeError> {
        if rows == 0 || cols == 0 {
            return Err(LatticeError::EmptyLattice { rows, cols });
        }
        let expected = rows * cols;
        for (what, v) in [("down", &down), ("right", &right)] {
            if v.len() != expected {
                return Err(LatticeError::ShapeMismatch { what, got: v.len(), expected });
            }
        }
        for (edge, v) in [(Edge::Down, &down), (Edge::Right, &right)] {
            if let Some(i) = v.iter().position(|d| !(d.is_finite() && *d > 0.0)) {
                return Err(LatticeError::NonPositiveDelay {
                    edge,
                    m: i / cols,
                    n: i % cols,
                    value: v[i],
                });
            }
        }
        Ok(Self { rows, cols, down, right })
    }

    pub fn homogeneous(rows: usize, cols: usize, tau: f64) -> Result<Self, LatticeError> {
        Self::new(rows, cols, vec![tau; rows * cols], vec![tau; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn down(&self, m: usize, n: usize) -> f64 {
        self.down[m * self.cols + n]
    }

    pub fn right(&self, m: usize, n: usize) -> f64 {
        self.right[m * self.cols + n]
    }

    pub fn down_slice(&self) -> &[f64] {
        &self.down
    }

    pub fn right_slice(&self) -> &[f64] {
        &self.right
    }

    pub fn max_delay(&self) -> f64 {
        self.down.iter().chain(&self.right).copied().fold(f64::MIN, f64::max)
    }

    pub fn min_delay(&self) -> f64 {
        self.down.iter().chain(&self.right).copied().fold(f64::MAX, f64::min)
    }
}
