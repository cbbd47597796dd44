//! Gaussian (and one non-Gaussian) process samplers on the unit grid, plus
//! the distance and modulus functionals induced by a process.
//!
//! Randomness is keyed by `(seed, replica)`: replica `r` draws from a ChaCha
//! stream selected by `r`, node by node, so an ensemble does not depend on
//! generation order or thread count.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::besov::shift_lp;
use crate::error::{invalid, Error, Result};
use crate::mixed_norms::Exponent;
use crate::quadrature::{eval_zero_extended, SampledPath, UnitGrid, EDGE_EPS};
use crate::stats::{gaussian_moment_root, moment_norm, Estimate};

/// Largest grid for dense fBm covariance factorization.
pub const MAX_FBM_NODES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Wiener,
    Fbm,
    IidGaussianField,
    /// Random walk with `±sigma sqrt(dt)` increments; centered, not Gaussian.
    RademacherWalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessModel {
    pub kind: ModelKind,
    /// Hurst index, used by `Fbm` only.
    pub hurst: f64,
    pub sigma: f64,
}

impl ProcessModel {
    pub fn new(kind: ModelKind, hurst: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return invalid(format!("sigma must be positive, got {sigma}"));
        }
        if kind == ModelKind::Fbm && !(hurst > 0.0 && hurst < 1.0) {
            return invalid(format!("hurst must lie in (0, 1), got {hurst}"));
        }
        let hurst = match kind {
            ModelKind::Fbm => hurst,
            _ => 0.5,
        };
        Ok(Self { kind, hurst, sigma })
    }

    pub fn wiener() -> Self {
        Self {
            kind: ModelKind::Wiener,
            hurst: 0.5,
            sigma: 1.0,
        }
    }

    pub fn fbm(hurst: f64) -> Result<Self> {
        Self::new(ModelKind::Fbm, hurst, 1.0)
    }

    pub fn rademacher_walk() -> Self {
        Self {
            kind: ModelKind::RademacherWalk,
            hurst: 0.5,
            sigma: 1.0,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        self.kind != ModelKind::RademacherWalk
    }

    /// `Cov(xi(t), xi(u))`, zero when either point is outside `[0, 1]`.
    pub fn covariance(&self, t: f64, u: f64) -> Result<f64> {
        let inside = |x: f64| (-EDGE_EPS..=1.0 + EDGE_EPS).contains(&x);
        if !inside(t) || !inside(u) {
            return Ok(0.0);
        }
        let (t, u) = (t.clamp(0.0, 1.0), u.clamp(0.0, 1.0));
        let s2 = self.sigma * self.sigma;
        Ok(match self.kind {
            ModelKind::Wiener => s2 * t.min(u),
            ModelKind::Fbm => {
                let h2 = 2.0 * self.hurst;
                0.5 * s2 * (t.powf(h2) + u.powf(h2) - (t - u).abs().powf(h2))
            }
            ModelKind::IidGaussianField => {
                if t == u && t > 0.0 {
                    s2
                } else {
                    0.0
                }
            }
            ModelKind::RademacherWalk => {
                return Err(Error::Unsupported(
                    "analytic distances need a Gaussian model".into(),
                ))
            }
        })
    }

    /// `Var(xi(t) - xi(u))` under zero extension.
    pub fn increment_variance(&self, t: f64, u: f64) -> Result<f64> {
        let v = self.covariance(t, t)? + self.covariance(u, u)? - 2.0 * self.covariance(t, u)?;
        Ok(v.max(0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub grid: UnitGrid,
    pub replicas: usize,
    pub seed: u64,
}

impl Serialize for UnitGrid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u64(self.len() as u64)
    }
}

impl<'de> Deserialize<'de> for UnitGrid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let n = u64::deserialize(d)? as usize;
        UnitGrid::new(n).map_err(serde::de::Error::custom)
    }
}

/// `R` paths on a common grid, stored replica-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    grid: UnitGrid,
    values: Vec<f64>,
}

impl Ensemble {
    pub fn new(grid: UnitGrid, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || !values.len().is_multiple_of(grid.len()) {
            return invalid("ensemble values must hold a whole number of paths");
        }
        Ok(Self { grid, values })
    }

    pub fn from_paths(paths: &[SampledPath]) -> Result<Self> {
        let first = paths
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty ensemble".into()))?;
        let grid = first.grid();
        if paths.iter().any(|p| p.grid() != grid) {
            return invalid("paths live on different grids");
        }
        let values = paths
            .iter()
            .flat_map(|p| p.values().iter().copied())
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> UnitGrid {
        self.grid
    }

    pub fn replicas(&self) -> usize {
        self.values.len() / self.grid.len()
    }

    pub fn path_values(&self, r: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[r * n..(r + 1) * n]
    }

    pub fn path(&self, r: usize) -> SampledPath {
        SampledPath::new(self.grid, self.path_values(r).to_vec()).expect("consistent length")
    }

    pub fn paths(&self) -> impl Iterator<Item = SampledPath> + '_ {
        (0..self.replicas()).map(|r| self.path(r))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Values of every replica at `t` (zero extended, interpolated).
    pub fn at(&self, t: f64) -> Vec<f64> {
        (0..self.replicas())
            .map(|r| eval_zero_extended(self.path_values(r), t))
            .collect()
    }
}

/// Deterministic per-index path generator.
#[derive(Debug, Clone)]
pub struct PathSampler {
    model: ProcessModel,
    grid: UnitGrid,
    seed: u64,
    fbm_factor: Option<Arc<DMatrix<f64>>>,
    jitter: f64,
}

impl PathSampler {
    pub fn new(model: ProcessModel, grid: UnitGrid, seed: u64) -> Result<Self> {
        let (fbm_factor, jitter) = if model.kind == ModelKind::Fbm {
            if grid.len() > MAX_FBM_NODES {
                return invalid(format!(
                    "fbm sampling supports at most {MAX_FBM_NODES} nodes, got {}",
                    grid.len()
                ));
            }
            let (l, j) = fbm_cholesky(&model, &grid)?;
            (Some(Arc::new(l)), j)
        } else {
            (None, 0.0)
        };
        Ok(Self {
            model,
            grid,
            seed,
            fbm_factor,
            jitter,
        })
    }

    pub fn model(&self) -> ProcessModel {
        self.model
    }

    pub fn grid(&self) -> UnitGrid {
        self.grid
    }

    /// Diagonal jitter that was needed to factor the fBm covariance (0 if none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    /// Path number `index` written into `out`; `out[0] = 0`.
    pub fn fill(&self, index: u64, out: &mut [f64]) {
        let n = self.grid.len();
        debug_assert_eq!(out.len(), n);
        let mut rng = self.rng(index);
        let sigma = self.model.sigma;
        let sd = sigma * self.grid.step().sqrt();
        out[0] = 0.0;
        match self.model.kind {
            ModelKind::Wiener => {
                for i in 1..n {
                    let z: f64 = rng.sample(StandardNormal);
                    out[i] = out[i - 1] + sd * z;
                }
            }
            ModelKind::RademacherWalk => {
                for i in 1..n {
                    let step = if rng.random::<bool>() { sd } else { -sd };
                    out[i] = out[i - 1] + step;
                }
            }
            ModelKind::IidGaussianField => {
                for o in out.iter_mut().skip(1) {
                    let z: f64 = rng.sample(StandardNormal);
                    *o = sigma * z;
                }
            }
            ModelKind::Fbm => {
                let l = self.fbm_factor.as_ref().expect("factor built for fbm");
                let z = DVector::from_fn(n - 1, |_, _| rng.sample::<f64, _>(StandardNormal));
                let x = l.as_ref() * z;
                out[1..].copy_from_slice(x.as_slice());
            }
        }
    }

    pub fn path(&self, index: u64) -> SampledPath {
        let mut v = vec![0.0; self.grid.len()];
        self.fill(index, &mut v);
        SampledPath::new(self.grid, v).expect("grid-sized")
    }

    /// Paths `first .. first + count` as an ensemble.
    pub fn ensemble(&self, first: u64, count: usize) -> Result<Ensemble> {
        if count == 0 {
            return invalid("need at least one replica");
        }
        let n = self.grid.len();
        let mut values = vec![0.0; n * count];
        values
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(r, chunk)| self.fill(first + r as u64, chunk));
        Ensemble::new(self.grid, values)
    }
}

/// Lower Cholesky factor of the fBm covariance on nodes `t_1 .. t_{n-1}`.
///
/// Retries with diagonal jitter `1e-12 * 10^k * max(diag)` for `k = 0..6`
/// when rounding makes the matrix numerically indefinite.
fn fbm_cholesky(model: &ProcessModel, grid: &UnitGrid) -> Result<(DMatrix<f64>, f64)> {
    let m = grid.len() - 1;
    let t: Vec<f64> = (1..grid.len()).map(|i| grid.node(i)).collect();
    let mut cov = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let c = model.covariance(t[i], t[j])?;
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    if let Some(ch) = cov.clone().cholesky() {
        return Ok((ch.l(), 0.0));
    }
    let scale = (0..m).map(|i| cov[(i, i)]).fold(0.0, f64::max);
    for k in 0..=6 {
        let jitter = 1e-12 * 10f64.powi(k) * scale;
        let mut c = cov.clone();
        for i in 0..m {
            c[(i, i)] += jitter;
        }
        if let Some(ch) = c.cholesky() {
            return Ok((ch.l(), jitter));
        }
    }
    Err(Error::Numeric(
        "fbm covariance is not positive definite even with jitter up to 1e-6".into(),
    ))
}

/// `R` independent paths of `model` on `cfg.grid`, all starting at 0.
pub fn sample(model: &ProcessModel, cfg: &SamplerConfig) -> Result<Ensemble> {
    PathSampler::new(*model, cfg.grid, cfg.seed)?.ensemble(0, cfg.replicas)
}

fn check_unit(x: f64, name: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return invalid(format!("{name} must lie in [0, 1], got {x}"));
    }
    Ok(())
}

fn check_m(m: f64) -> Result<()> {
    if !(m >= 1.0 && m.is_finite()) {
        return invalid(format!("moment order must be a finite m >= 1, got {m}"));
    }
    Ok(())
}

/// Analytic `(E|xi(t) - xi(u)|^m)^{1/m}` for Gaussian models.
pub fn pisier_distance(model: &ProcessModel, t: f64, u: f64, m: f64) -> Result<f64> {
    check_unit(t, "t")?;
    check_unit(u, "u")?;
    pisier_distance_extended(model, t, u, m)
}

/// [`pisier_distance`] for arbitrary real `t, u`, with `xi := 0` off `[0, 1]`.
pub fn pisier_distance_extended(model: &ProcessModel, t: f64, u: f64, m: f64) -> Result<f64> {
    check_m(m)?;
    if !model.is_gaussian() {
        return Err(Error::Unsupported(
            "analytic distances need a Gaussian model".into(),
        ));
    }
    Ok(gaussian_moment_root(m) * model.increment_variance(t, u)?.sqrt())
}

/// Monte Carlo `(mean_r |xi_r(t) - xi_r(u)|^m)^{1/m}` with its standard error.
pub fn pisier_distance_empirical(ens: &Ensemble, t: f64, u: f64, m: f64) -> Result<Estimate> {
    check_m(m)?;
    if ens.replicas() < 2 {
        return invalid("need at least two replicas");
    }
    let a = ens.at(t);
    let b = ens.at(u);
    let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    Ok(moment_norm(&diffs, m))
}

/// How shifted points that leave `[0, 1]` are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// the path is zero outside `[0, 1]`
    ZeroExtension,
    /// only points with `t + h` in `[0, 1]` count
    InteriorOnly,
}

/// `sup_t d_m(t + h, t)` under both boundary conventions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaM {
    pub with_boundary: f64,
    pub interior: f64,
}

/// `sigma_m(h)` as a maximum over `t_nodes` uniform points of `[0, 1]`.
pub fn sigma_m(model: &ProcessModel, h: f64, m: f64, t_nodes: usize) -> Result<SigmaM> {
    if !(h.abs() <= 1.0) {
        return invalid(format!("shift must satisfy |h| <= 1, got {h}"));
    }
    let grid = UnitGrid::new(t_nodes)?;
    let mut out = SigmaM {
        with_boundary: 0.0,
        interior: 0.0,
    };
    for t in grid.nodes() {
        let d = pisier_distance_extended(model, t + h, t, m)?;
        out.with_boundary = out.with_boundary.max(d);
        if (-EDGE_EPS..=1.0 + EDGE_EPS).contains(&(t + h)) {
            out.interior = out.interior.max(d);
        }
    }
    Ok(out)
}

/// `lambda_m(delta) = sqrt(m) sqrt(delta |ln delta|)` on `(0, 1/e]`.
pub fn wiener_lambda(delta: f64, m: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= (-1.0f64).exp() * (1.0 + 1e-15)) {
        return invalid(format!("delta must lie in (0, 1/e], got {delta}"));
    }
    Ok(m.sqrt() * (delta * delta.ln().abs()).sqrt())
}

/// Uniform points of `[-1, 1]`; a single point is `{0}`.
pub fn z_grid(z_nodes: usize) -> Vec<f64> {
    match z_nodes {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n)
            .map(|i| {
                if i + 1 == n {
                    1.0
                } else {
                    -1.0 + 2.0 * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Per-replica values of `theta(z, delta) = |xi(. + z delta) - xi(.)|_p`.
#[derive(Debug, Clone)]
pub struct ThetaTable {
    z: Vec<f64>,
    deltas: Vec<f64>,
    replicas: usize,
    // index (zi * deltas + di) * replicas + r
    theta: Vec<f64>,
}

impl ThetaTable {
    pub fn build(
        ens: &Ensemble,
        z: &[f64],
        deltas: &[f64],
        p: Exponent,
        boundary: Boundary,
    ) -> Result<Self> {
        if z.is_empty() || deltas.is_empty() {
            return invalid("need at least one z and one delta");
        }
        if z.iter().any(|v| v.abs() > 1.0) || deltas.iter().any(|d| !(0.0..=1.0).contains(d)) {
            return invalid("z must lie in [-1, 1] and delta in [0, 1]");
        }
        let grid = ens.grid();
        let w = grid.trapezoid_weights();
        let r = ens.replicas();
        let outside = boundary == Boundary::ZeroExtension;
        let pairs: Vec<(f64, f64)> = z
            .iter()
            .flat_map(|&zv| deltas.iter().map(move |&d| (zv, d)))
            .collect();
        let theta: Vec<f64> = pairs
            .par_iter()
            .flat_map_iter(|&(zv, d)| {
                let off = zv * d / grid.step();
                let w = &w;
                (0..r).map(move |i| shift_lp(ens.path_values(i), w, off, p, outside))
            })
            .collect();
        Ok(Self {
            z: z.to_vec(),
            deltas: deltas.to_vec(),
            replicas: r,
            theta,
        })
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn replicas(&self) -> usize {
        self.replicas
    }

    pub fn samples(&self, zi: usize, di: usize) -> &[f64] {
        let start = (zi * self.deltas.len() + di) * self.replicas;
        &self.theta[start..start + self.replicas]
    }

    /// `|theta(z, delta)|_{m, Omega}` for every `(z, delta)`, z-major.
    pub fn moment_table(&self, m: f64) -> Vec<f64> {
        (0..self.z.len())
            .flat_map(|zi| (0..self.deltas.len()).map(move |di| (zi, di)))
            .map(|(zi, di)| moment_norm(self.samples(zi, di), m).value)
            .collect()
    }

    /// `mu_m(delta) = max_z |theta(z, delta)|_{m, Omega}` for every delta.
    pub fn mu(&self, m: f64) -> Vec<f64> {
        let nd = self.deltas.len();
        let table = self.moment_table(m);
        (0..nd)
            .map(|di| {
                (0..self.z.len())
                    .map(|zi| table[zi * nd + di])
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    fn diff_norm(&self, i: usize, j: usize, di: usize, m: f64) -> f64 {
        let a = self.samples(i, di);
        let b = self.samples(j, di);
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        moment_norm(&d, m).value
    }

    /// `rho_m(z_i, z_j) = max_delta |theta_i - theta_j|_{m, Omega} / mu_m(delta)`.
    pub fn rho(&self, i: usize, j: usize, m: f64) -> Result<f64> {
        let mu = self.mu(m);
        self.rho_with_mu(i, j, m, &mu)
    }

    fn rho_with_mu(&self, i: usize, j: usize, m: f64, mu: &[f64]) -> Result<f64> {
        if let Some(di) = mu.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::UndefinedDistance(format!(
                "mu_m vanishes at delta = {}",
                self.deltas[di]
            )));
        }
        if i == j {
            return Ok(0.0);
        }
        Ok((0..self.deltas.len())
            .map(|di| self.diff_norm(i, j, di, m) / mu[di])
            .fold(0.0, f64::max))
    }

    /// Full `rho_m` matrix over the z points, row-major.
    pub fn rho_matrix(&self, m: f64) -> Result<Vec<f64>> {
        let mu = self.mu(m);
        self.distance_matrix(m, &mu)
    }

    /// `max_delta |theta_i - theta_j|_{m, Omega} / denom(delta)` for all pairs,
    /// row-major. With `denom = mu_m` this is `rho_m`; with a majorant
    /// `lambda_m` it is `r_m`.
    pub fn distance_matrix(&self, m: f64, denom: &[f64]) -> Result<Vec<f64>> {
        if denom.len() != self.deltas.len() {
            return invalid("one normalizer per delta is required");
        }
        if let Some(di) = denom.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::UndefinedDistance(format!(
                "normalizer vanishes at delta = {}",
                self.deltas[di]
            )));
        }
        let n = self.z.len();
        let upper: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let vals: Vec<f64> = upper
            .par_iter()
            .map(|&(i, j)| self.rho_with_mu(i, j, m, denom))
            .collect::<Result<_>>()?;
        let mut out = vec![0.0; n * n];
        for (&(i, j), v) in upper.iter().zip(vals) {
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
        Ok(out)
    }
}

/// `mu_m(delta) = max_z (E |xi(. + z delta) - xi(.)|_p^m)^{1/m}` estimated over
/// the ensemble, with `z` on `z_nodes` uniform points of `[-1, 1]`.
pub fn theta_norm_mu(
    ens: &Ensemble,
    delta: f64,
    m: f64,
    p: Exponent,
    z_nodes: usize,
    boundary: Boundary,
) -> Result<f64> {
    check_m(m)?;
    if delta == 0.0 {
        return Ok(0.0);
    }
    let table = ThetaTable::build(ens, &z_grid(z_nodes), &[delta], p, boundary)?;
    Ok(table.mu(m)[0])
}

/// `rho_m(z1, z2)` with `mu_m` taken over `z_nodes` uniform z points.
#[allow(clippy::too_many_arguments)]
pub fn rho_distance(
    ens: &Ensemble,
    z1: f64,
    z2: f64,
    m: f64,
    p: Exponent,
    deltas: &[f64],
    z_nodes: usize,
    boundary: Boundary,
) -> Result<f64> {
    check_m(m)?;
    if z1.abs() > 1.0 || z2.abs() > 1.0 {
        return invalid("z1, z2 must lie in [-1, 1]");
    }
    let mut z = z_grid(z_nodes);
    z.push(z1);
    z.push(z2);
    let table = ThetaTable::build(ens, &z, deltas, p, boundary)?;
    let mu_table = ThetaTable {
        z: table.z[..z_nodes].to_vec(),
        deltas: table.deltas.clone(),
        replicas: table.replicas,
        theta: table.theta[..z_nodes * deltas.len() * table.replicas].to_vec(),
    };
    let mu = mu_table.mu(m);
    let n = table.z.len();
    table.rho_with_mu(n - 2, n - 1, m, &mu)
}
