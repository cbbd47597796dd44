//! Covering numbers of finite (semi-)metric spaces and the entropy integrals
//! `V(m) = 9 int_0^D N(eps)^{1/m} d eps`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::mixed_norms::{pow_abs, root};
use crate::process_models::ThetaTable;
use crate::quadrature::WeightedMeasure;

/// Tolerance for the triangle inequality check.
pub const TRIANGLE_TOL: f64 = 1e-9;

/// Default number of epsilon nodes in [`entropy_integral`].
pub const DEFAULT_EPS_NODES: usize = 257;

/// Labelled points with a symmetric distance matrix (row-major).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteMetricSpace {
    points: Vec<f64>,
    dist: Vec<f64>,
}

impl FiniteMetricSpace {
    pub fn new(points: Vec<f64>, dist: Vec<f64>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return invalid("metric space needs at least one point");
        }
        if dist.len() != n * n {
            return invalid(format!("distance matrix must be {n}x{n}"));
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return invalid(format!("nonzero diagonal at {i}"));
            }
            for j in 0..n {
                let d = dist[i * n + j];
                if !(d >= 0.0 && d.is_finite()) {
                    return invalid(format!(
                        "distance ({i}, {j}) = {d} is not a finite nonnegative number"
                    ));
                }
                if (d - dist[j * n + i]).abs() > 1e-12 * d.max(1.0) {
                    return invalid(format!("distance matrix is not symmetric at ({i}, {j})"));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let dij = dist[i * n + j];
                for k in 0..n {
                    if dij > dist[i * n + k] + dist[k * n + j] + TRIANGLE_TOL {
                        return invalid(format!("triangle inequality fails for ({i}, {k}, {j})"));
                    }
                }
            }
        }
        Ok(Self { points, dist })
    }

    pub fn from_fn(points: Vec<f64>, d: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let dist = points
            .iter()
            .flat_map(|&a| points.iter().map(move |&b| (a, b)))
            .map(|(a, b)| if a == b { 0.0 } else { d(a, b) })
            .collect();
        Self::new(points, dist)
    }

    /// `n` uniform points of `[-1, 1]` with `|x - y|`.
    pub fn uniform_interval(n: usize) -> Result<Self> {
        Self::from_fn(crate::process_models::z_grid(n), |a, b| (a - b).abs())
    }

    pub fn single_point() -> Self {
        Self {
            points: vec![0.0],
            dist: vec![0.0],
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.len() + j]
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest positive distance, if any.
    pub fn min_positive_distance(&self) -> Option<f64> {
        self.dist
            .iter()
            .copied()
            .filter(|d| *d > 0.0)
            .min_by(f64::total_cmp)
    }

    /// Number of points up to zero distance.
    pub fn distinct_points(&self) -> usize {
        let n = self.len();
        (0..n)
            .filter(|&i| (0..i).all(|j| self.dist(i, j) > 0.0))
            .count()
    }
}

fn greedy_cover(space: &FiniteMetricSpace, eps: f64) -> usize {
    let n = space.len();
    let reach = eps * (1.0 + 1e-12);
    let inside = |c: usize, j: usize| space.dist(c, j) <= reach;
    let mut gain: Vec<usize> = (0..n)
        .map(|c| (0..n).filter(|&j| inside(c, j)).count())
        .collect();
    let mut covered = vec![false; n];
    let mut left = n;
    let mut balls = 0;
    while left > 0 {
        let mut best = 0;
        for c in 1..n {
            if gain[c] > gain[best] {
                best = c;
            }
        }
        for j in 0..n {
            if !covered[j] && inside(best, j) {
                covered[j] = true;
                left -= 1;
                for (c, g) in gain.iter_mut().enumerate() {
                    if inside(c, j) {
                        *g -= 1;
                    }
                }
            }
        }
        balls += 1;
    }
    balls
}

/// Greedy covering sizes as a step function of the radius.
///
/// Each center is chosen to cover the most uncovered points (lowest index on
/// ties). Because a cover at radius `r` also covers at any larger radius, the
/// profile keeps the running minimum over the radii where balls change, which
/// makes it nonincreasing.
#[derive(Debug, Clone)]
pub struct CoveringProfile {
    radii: Vec<f64>,
    counts: Vec<usize>,
    below: usize,
}

impl CoveringProfile {
    pub fn new(space: &FiniteMetricSpace) -> Self {
        let mut radii: Vec<f64> = space.dist.iter().copied().filter(|d| *d > 0.0).collect();
        radii.sort_by(f64::total_cmp);
        radii.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
        let raw: Vec<usize> = radii.par_iter().map(|&r| greedy_cover(space, r)).collect();
        let below = space.distinct_points();
        let mut best = below;
        let counts = raw
            .into_iter()
            .map(|c| {
                best = best.min(c);
                best
            })
            .collect();
        Self {
            radii,
            counts,
            below,
        }
    }

    /// `N(eps)` for `eps > 0`.
    pub fn count(&self, eps: f64) -> usize {
        let k = self.radii.partition_point(|&r| r <= eps * (1.0 + 1e-12));
        if k == 0 {
            self.below
        } else {
            self.counts[k - 1]
        }
    }
}

/// Number of closed `eps`-balls in a greedy cover of `space`; an upper bound
/// on the minimum, nonincreasing in `eps`.
pub fn covering_number(space: &FiniteMetricSpace, epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0) {
        return invalid(format!("epsilon must be positive, got {epsilon}"));
    }
    Ok(CoveringProfile::new(space).count(epsilon))
}

/// `9 int_0^D N(eps)^{1/m} d eps`: closed form on `[0, d_min / 2]`, where `N`
/// is the number of distinct points, then a trapezoid sum on `eps_nodes`
/// uniform radii of `[d_min / 2, D]`. `m = inf` gives `9 D`.
pub fn entropy_integral(space: &FiniteMetricSpace, m: f64, eps_nodes: usize) -> Result<f64> {
    if !(m >= 1.0) {
        return invalid(format!("m must be at least 1, got {m}"));
    }
    if eps_nodes < 2 {
        return invalid("need at least 2 epsilon nodes");
    }
    let diam = space.diameter();
    let Some(dmin) = space.min_positive_distance() else {
        return Ok(0.0);
    };
    let profile = CoveringProfile::new(space);
    let g = |n: usize| (n as f64).powf(1.0 / m);
    let a = 0.5 * dmin;
    let mut total = a * g(profile.below);
    let step = (diam - a) / (eps_nodes - 1) as f64;
    let vals: Vec<f64> = (0..eps_nodes)
        .map(|i| {
            let e = if i + 1 == eps_nodes {
                diam
            } else {
                a + step * i as f64
            };
            g(profile.count(e))
        })
        .collect();
    for w in vals.windows(2) {
        total += 0.5 * step * (w[0] + w[1]);
    }
    Ok(9.0 * total)
}

/// `V * (int |mu|^s d nu)^{1/s}` with `mu` sampled at the nodes of `nu`.
pub fn beta_of_m(v: f64, mu_curve: &[f64], s: f64, nu: &WeightedMeasure) -> Result<f64> {
    if mu_curve.len() != nu.len() {
        return invalid(format!(
            "curve has {} values but the measure has {} nodes",
            mu_curve.len(),
            nu.len()
        ));
    }
    if !(v >= 0.0) {
        return invalid("V must be nonnegative");
    }
    if v == 0.0 {
        return Ok(0.0);
    }
    let integrand: Vec<f64> = mu_curve.iter().map(|x| pow_abs(*x, s)).collect();
    Ok(v * root(nu.integrate(&integrand)?, s))
}

/// `(T, rho_m)` over the z points of a theta table.
pub fn rho_space(table: &ThetaTable, m: f64) -> Result<FiniteMetricSpace> {
    FiniteMetricSpace::new(table.z().to_vec(), table.rho_matrix(m)?)
}

/// `(T, r_m)`: distances normalized by a majorant `lambda` of `mu_m` given at
/// the table's deltas.
pub fn r_space(table: &ThetaTable, m: f64, lambda: &[f64]) -> Result<FiniteMetricSpace> {
    FiniteMetricSpace::new(table.z().to_vec(), table.distance_matrix(m, lambda)?)
}
