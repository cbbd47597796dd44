//! Grids, sampled paths and power-law weighted measures.
//!
//! Every integral in the crate is a trapezoid sum over the nodes of a
//! [`WeightedMeasure`], with the density evaluated at the nodes. Paths live on
//! a closed uniform grid of `[0, 1]` and are extended by zero outside it.

use crate::error::{invalid, Error, Result};

/// Positions within this distance of `[0, 1]` are treated as inside.
pub(crate) const EDGE_EPS: f64 = 1e-12;

/// Closed uniform grid `t_i = i / (n - 1)` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnitGrid {
    n: usize,
}

impl UnitGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return invalid(format!("grid needs at least 2 nodes, got {n}"));
        }
        Ok(Self { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            1.0
        } else {
            i as f64 / (self.n - 1) as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Trapezoid weights of Lebesgue measure on the grid nodes.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.step();
        let mut w = vec![h; self.n];
        w[0] = 0.5 * h;
        w[self.n - 1] = 0.5 * h;
        w
    }
}

pub fn make_uniform_grid(n: usize) -> Result<UnitGrid> {
    UnitGrid::new(n)
}

/// A real function on `[0, 1]` known at the nodes of a [`UnitGrid`].
///
/// Off-node values inside `[0, 1]` are linearly interpolated; values outside
/// are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    grid: UnitGrid,
    values: Vec<f64>,
}

impl SampledPath {
    pub fn new(grid: UnitGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return invalid(format!(
                "path has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: UnitGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: UnitGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> UnitGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn eval(&self, t: f64) -> f64 {
        eval_zero_extended(&self.values, t)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn try_add(&self, other: &SampledPath) -> Result<Self> {
        if self.grid != other.grid {
            return invalid("paths live on different grids");
        }
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }
}

/// Evaluates node values of a uniform grid at `t`, zero outside `[0, 1]`.
pub(crate) fn eval_zero_extended(values: &[f64], t: f64) -> f64 {
    let n = values.len();
    if !(-EDGE_EPS..=1.0 + EDGE_EPS).contains(&t) {
        return 0.0;
    }
    let x = (t * (n - 1) as f64).clamp(0.0, (n - 1) as f64);
    let i = (x.floor() as usize).min(n - 2);
    let frac = x - i as f64;
    if frac == 0.0 {
        values[i]
    } else {
        (1.0 - frac) * values[i] + frac * values[i + 1]
    }
}

/// Writes into `out[i]` the zero-extended, linearly interpolated value of
/// `values` at fractional index `i + offset`.
///
/// `offset` is measured in grid cells. Offsets within `1e-9` of an integer are
/// snapped so on-grid shifts stay exact.
pub(crate) fn shift_into(values: &[f64], offset: f64, out: &mut [f64]) {
    let n = values.len() as isize;
    debug_assert_eq!(out.len(), values.len());
    let nearest = offset.round();
    let (k, frac) = if (offset - nearest).abs() < 1e-9 {
        (nearest as isize, 0.0)
    } else {
        let k = offset.floor();
        (k as isize, offset - k)
    };
    // valid source indices j = i + k must satisfy 0 <= j <= hi
    let hi = if frac == 0.0 { n - 1 } else { n - 2 };
    let lo_i = (-k).max(0);
    let hi_i = (hi - k).min(n - 1);
    out.iter_mut().for_each(|o| *o = 0.0);
    if lo_i > hi_i {
        return;
    }
    let (lo_i, hi_i) = (lo_i as usize, hi_i as usize);
    if frac == 0.0 {
        for i in lo_i..=hi_i {
            out[i] = values[(i as isize + k) as usize];
        }
    } else {
        let a = 1.0 - frac;
        for i in lo_i..=hi_i {
            let j = (i as isize + k) as usize;
            out[i] = a * values[j] + frac * values[j + 1];
        }
    }
}

/// Density family of a [`WeightedMeasure`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureKind {
    Lebesgue,
    /// density `x^exponent`
    Power {
        exponent: f64,
    },
}

impl MeasureKind {
    pub fn exponent(&self) -> f64 {
        match self {
            MeasureKind::Lebesgue => 0.0,
            MeasureKind::Power { exponent } => *exponent,
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match self {
            MeasureKind::Lebesgue => 1.0,
            MeasureKind::Power { exponent } => x.powf(*exponent),
        }
    }
}

/// A density on an interval together with its quadrature nodes.
///
/// The trapezoid weights (density included) are precomputed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMeasure {
    kind: MeasureKind,
    support: (f64, f64),
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedMeasure {
    pub fn with_nodes(kind: MeasureKind, support: (f64, f64), nodes: Vec<f64>) -> Result<Self> {
        let (a, b) = support;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return invalid(format!("bad support ({a}, {b})"));
        }
        if nodes.is_empty() {
            return invalid("measure needs at least one quadrature node");
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("quadrature nodes must be strictly increasing");
        }
        let tol = 1e-12 * (b - a).max(1.0);
        if nodes[0] < a - tol || nodes[nodes.len() - 1] > b + tol {
            return invalid("quadrature nodes leave the support");
        }
        if let MeasureKind::Power { exponent } = kind {
            if !exponent.is_finite() {
                return invalid("power exponent must be finite");
            }
            if a < 0.0 {
                return invalid("power density needs a nonnegative support");
            }
            if exponent < -1.0 && a <= 0.0 {
                return invalid(format!(
                    "density x^{exponent} is not integrable at 0; truncate the support"
                ));
            }
            if exponent < 0.0 && nodes[0] <= 0.0 {
                return invalid("singular density evaluated at 0");
            }
        }
        let weights = trapezoid_weights(&nodes)
            .into_iter()
            .zip(&nodes)
            .map(|(w, &x)| w * kind.density(x))
            .collect();
        Ok(Self {
            kind,
            support,
            nodes,
            weights,
        })
    }

    /// Lebesgue measure on `[a, b]` with `n` uniform nodes.
    pub fn lebesgue(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return invalid("need at least 2 nodes");
        }
        let nodes = (0..n)
            .map(|i| {
                if i + 1 == n {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                }
            })
            .collect();
        Self::with_nodes(MeasureKind::Lebesgue, (a, b), nodes)
    }

    /// Lebesgue measure on `[0, 1]` at the nodes of `grid`.
    pub fn on_grid(grid: &UnitGrid) -> Self {
        Self::lebesgue(0.0, 1.0, grid.len()).expect("grid has at least two nodes")
    }

    /// Power-law measure `x^exponent dx` on `(delta_min, 1]` with `n`
    /// geometrically spaced nodes.
    pub fn power(exponent: f64, delta_min: f64, n: usize) -> Result<Self> {
        if !(delta_min > 0.0 && delta_min < 1.0) {
            return invalid(format!("delta_min must lie in (0, 1), got {delta_min}"));
        }
        if n < 2 {
            return invalid("need at least 2 nodes");
        }
        let ratio = (1.0 / delta_min).ln();
        let nodes = (0..n)
            .map(|i| {
                if i + 1 == n {
                    1.0
                } else {
                    delta_min * (ratio * i as f64 / (n - 1) as f64).exp()
                }
            })
            .collect();
        Self::with_nodes(MeasureKind::Power { exponent }, (delta_min, 1.0), nodes)
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature weights with the density folded in.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.nodes.len() {
            return invalid(format!(
                "{} values for {} quadrature nodes",
                values.len(),
                self.nodes.len()
            ));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite integrand value {bad}"
            )));
        }
        Ok(values.iter().zip(&self.weights).map(|(v, w)| v * w).sum())
    }
}

pub fn make_power_measure(exponent: f64, delta_min: f64, n: usize) -> Result<WeightedMeasure> {
    WeightedMeasure::power(exponent, delta_min, n)
}

pub fn integrate(values: &[f64], measure: &WeightedMeasure) -> Result<f64> {
    measure.integrate(values)
}

/// Trapezoid weights for (possibly non-uniform) increasing nodes.
pub(crate) fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let half = 0.5 * (nodes[i + 1] - nodes[i]);
        w[i] += half;
        w[i + 1] += half;
    }
    w
}
