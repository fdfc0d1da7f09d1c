use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters and discretization controls of the HV metric solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HvParams {
    /// Weight of `v²` in the action.
    pub kappa: f64,
    /// Weight of `v_x²`.
    pub lambda: f64,
    /// Weight of `v_xx²`.
    pub epsilon: f64,
    /// Spatial intervals on `[0, 1]`; signals carry `n_x + 1` samples.
    pub n_x: usize,
    /// Temporal intervals on `[0, 1]`.
    pub n_t: usize,
    pub max_iters: usize,
    /// Relative change of the quadratic energy below which iteration stops.
    pub tol: f64,
}

impl HvParams {
    pub const DEFAULT_KAPPA: f64 = 1e-10;
    pub const DEFAULT_LAMBDA: f64 = 1e-10;
    pub const DEFAULT_EPSILON: f64 = 1e-7;

    /// Transport-like defaults for signals with `n_x + 1` samples.
    pub fn for_grid(n_x: usize) -> Self {
        Self {
            kappa: Self::DEFAULT_KAPPA,
            lambda: Self::DEFAULT_LAMBDA,
            epsilon: Self::DEFAULT_EPSILON,
            n_x,
            n_t: 16,
            max_iters: 100,
            tol: 1e-8,
        }
    }

    pub fn with_weights(mut self, kappa: f64, lambda: f64, epsilon: f64) -> Self {
        self.kappa = kappa;
        self.lambda = lambda;
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::param("kappa", "must be positive"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::param("lambda", "must be nonnegative"));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::param("epsilon", "must be positive"));
        }
        if self.n_x < 4 {
            return Err(Error::param("n_x", "needs at least 4 intervals"));
        }
        if self.n_t < 2 {
            return Err(Error::param("n_t", "needs at least 2 intervals"));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be positive"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("tol", "must be positive"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n_x as f64
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.n_t as f64
    }
}

/// Real samples on uniform nodes, remapped to `[0, 1]` for the metric.
///
/// `start` and `step` describe the original physical axis and are only kept
/// so results can be mapped back.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSignal {
    values: Vec<f64>,
    pub start: f64,
    pub step: f64,
}

impl GridSignal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_axis(values, 0.0, 1.0)
    }

    pub fn with_axis(values: Vec<f64>, start: f64, step: f64) -> Result<Self> {
        if values.len() < 5 {
            return Err(Error::param("values", "a grid signal needs at least 5 samples"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("values", "samples must be finite"));
        }
        Ok(Self { values, start, step })
    }

    /// Samples `g` at the `n_x + 1` nodes of `[0, 1]`.
    pub fn from_fn(n_x: usize, g: impl Fn(f64) -> f64) -> Result<Self> {
        let h = 1.0 / n_x as f64;
        Self::new((0..=n_x).map(|i| g(i as f64 * h)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_x(&self) -> usize {
        self.values.len() - 1
    }

    /// Trapezoidal L2 norm on the unit interval.
    pub fn l2_norm(&self) -> f64 {
        trapezoid_norm(&self.values)
    }

    pub(crate) fn same_grid(&self, other: &Self) -> bool {
        self.values.len() == other.values.len()
    }
}

pub(crate) fn trapezoid_norm(values: &[f64]) -> f64 {
    let w = trapezoid_weights(values.len());
    values.iter().zip(&w).map(|(v, w)| w * v * v).sum::<f64>().sqrt()
}

/// Trapezoid weights for `n` uniform nodes on `[0, 1]`.
pub fn trapezoid_weights(n: usize) -> Vec<f64> {
    let h = 1.0 / (n - 1) as f64;
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

/// Real and imaginary components sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGridSignal {
    pub re: GridSignal,
    pub im: GridSignal,
}

impl ComplexGridSignal {
    pub fn new(re: GridSignal, im: GridSignal) -> Result<Self> {
        if !re.same_grid(&im) || re.start != im.start || re.step != im.step {
            return Err(Error::GridMismatch("real and imaginary parts must share a grid".into()));
        }
        Ok(Self { re, im })
    }

    pub fn from_complex(samples: &[num_complex::Complex64]) -> Result<Self> {
        Self::new(
            GridSignal::new(samples.iter().map(|c| c.re).collect())?,
            GridSignal::new(samples.iter().map(|c| c.im).collect())?,
        )
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }
}

/// Dense row-major array indexed `[row][col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, g: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(g(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Discrete admissible path on the unit space-time square.
///
/// `f` lives on the `n_t + 1` time levels. `v` and `z` live on the `n_t`
/// half levels `t = (j + 1/2) Δt`, where the discrete transport equation
/// `(f_{j+1} - f_j)/Δt + v f_x = z` is imposed.
#[derive(Debug, Clone, PartialEq)]
pub struct HvPath {
    pub f: Field,
    pub v: Field,
    pub z: Field,
}

impl HvPath {
    pub fn n_t(&self) -> usize {
        self.v.rows()
    }

    pub fn n_x(&self) -> usize {
        self.f.cols() - 1
    }
}

#[derive(Debug, Clone)]
pub struct HvResult {
    /// `sqrt(action)` at the final path.
    pub distance: f64,
    pub action: f64,
    /// `∬ κv² + λv_x² + εv_xx² + z²` at the final path.
    pub quad_energy: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Quadratic energy before the first iteration and after every iteration.
    pub energy_history: Vec<f64>,
    pub path: HvPath,
    pub(crate) params: HvParams,
}

impl HvResult {
    pub fn params(&self) -> &HvParams {
        &self.params
    }
}
