//! Moduli of continuity and ordinary / generalized Besov (semi)norms of
//! sampled paths.
//!
//! Paths are zero outside `[0, 1]`, so even constant functions have nonzero
//! moduli: a shift pushes part of the path off the interval and the jump at
//! the boundary shows up in every difference norm.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mixed_norms::{
    mixed_norm, pow_abs, root, weighted_lp, AxisWeights, Exponent, ExponentVector, SampledField,
};
use crate::quadrature::{shift_into, MeasureKind, SampledPath, UnitGrid, WeightedMeasure};

/// Default number of shift nodes on `[-delta, delta]` (odd, so `h = 0` is a node).
pub const DEFAULT_H_NODES: usize = 65;
/// Default number of `z` nodes on `[-1, 1]` for the mixed-norm representation.
pub const DEFAULT_Z_NODES: usize = 65;
/// Default number of geometric `delta` nodes.
pub const DEFAULT_DELTA_NODES: usize = 64;

/// Smallest resolved scale on a grid, `1 / n`.
pub fn default_delta_min(grid: &UnitGrid) -> f64 {
    1.0 / grid.len() as f64
}

/// Exponents `(p, q, s, alpha)` of a Besov seminorm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub p: Exponent,
    pub q: Exponent,
    pub s: f64,
    pub alpha: f64,
}

impl BesovParams {
    pub fn new(p: Exponent, q: Exponent, s: f64, alpha: f64) -> Result<Self> {
        if !(s.is_finite() && s >= 1.0) {
            return invalid(format!("s must be a finite exponent >= 1, got {s}"));
        }
        if !alpha.is_finite() {
            return invalid("alpha must be finite");
        }
        Ok(Self { p, q, s, alpha })
    }

    pub fn finite(p: f64, q: f64, s: f64, alpha: f64) -> Result<Self> {
        Self::new(Exponent::finite(p)?, Exponent::finite(q)?, s, alpha)
    }

    /// Density exponent `-1 - alpha * s` of the measure `d delta / delta^{1 + alpha s}`.
    pub fn besov_exponent(&self) -> f64 {
        -1.0 - self.alpha * self.s
    }

    /// Largest of `p`, `q`, `s` as a real (infinite if `p` or `q` is).
    pub fn max_exponent(&self) -> f64 {
        self.p.value().max(self.q.value()).max(self.s)
    }
}

/// Which modulus enters the seminorm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BesovKind {
    /// sup over shifts
    Ordinary,
    /// `q`-average over shifts
    Generalized,
}

/// `s / q - alpha s - 1`, the exponent of the measure used once shifts are
/// rescaled to `z in [-1, 1]`. `q = INFINITY` contributes `s / q = 0`.
pub fn gamma_exponent(params: &BesovParams) -> f64 {
    let inv_q = match params.q {
        Exponent::Finite(q) => 1.0 / q,
        Exponent::Infinity => 0.0,
    };
    params.s * inv_q - params.alpha * params.s - 1.0
}

/// Power measure `delta^{-1 - alpha s} d delta` on `(delta_min, 1]`.
pub fn besov_measure(params: &BesovParams, delta_min: f64, n: usize) -> Result<WeightedMeasure> {
    WeightedMeasure::power(params.besov_exponent(), delta_min, n)
}

/// Power measure `delta^gamma d delta` on `(delta_min, 1]`.
pub fn nu_measure(params: &BesovParams, delta_min: f64, n: usize) -> Result<WeightedMeasure> {
    WeightedMeasure::power(gamma_exponent(params), delta_min, n)
}

/// Splits a shift of `offset` cells into the index ranges of a grid of `n`
/// nodes: `[0, lo)` and `(hi, n)` land outside `[0, 1]`, `[lo, hi]` inside.
/// Returns `(k, frac, lo, hi)`; the range is empty when `lo > hi`.
#[inline]
fn shift_ranges(n: usize, offset: f64) -> (isize, f64, isize, isize) {
    let n = n as isize;
    let nearest = offset.round();
    let (k, frac) = if (offset - nearest).abs() < 1e-9 {
        (nearest as isize, 0.0)
    } else {
        let k = offset.floor();
        (k as isize, offset - k)
    };
    let top = if frac == 0.0 { n - 1 } else { n - 2 };
    (k, frac, (-k).max(0), (top - k).min(n - 1))
}

/// `sum_i w_i |f(t_i + h) - f(t_i)|^p` for `h = offset` cells, or the max of
/// `|f(t_i + h) - f(t_i)|` when `p` is infinite.
///
/// With `outside = false` the nodes whose shifted position leaves `[0, 1]`
/// are skipped instead of contributing `|f(t_i)|^p`.
pub(crate) fn shift_lp_sum(
    values: &[f64],
    weights: &[f64],
    offset: f64,
    p: Exponent,
    outside: bool,
) -> f64 {
    let n = values.len();
    let (k, frac, lo, hi) = shift_ranges(n, offset);
    let a = 1.0 - frac;
    let mut acc = 0.0f64;
    let mut add = |i: usize, d: f64| match p {
        Exponent::Infinity => acc = acc.max(d.abs()),
        Exponent::Finite(p) => acc += weights[i] * pow_abs(d, p),
    };
    if lo > hi {
        if outside {
            for i in 0..n {
                add(i, values[i]);
            }
        }
        return acc;
    }
    let (lo, hi) = (lo as usize, hi as usize);
    if outside {
        for i in 0..lo {
            add(i, values[i]);
        }
    }
    if frac == 0.0 {
        for i in lo..=hi {
            let j = (i as isize + k) as usize;
            add(i, values[j] - values[i]);
        }
    } else {
        for i in lo..=hi {
            let j = (i as isize + k) as usize;
            add(i, a * values[j] + frac * values[j + 1] - values[i]);
        }
    }
    if outside {
        for i in hi + 1..n {
            add(i, values[i]);
        }
    }
    acc
}

pub(crate) fn shift_lp(
    values: &[f64],
    weights: &[f64],
    offset: f64,
    p: Exponent,
    outside: bool,
) -> f64 {
    let s = shift_lp_sum(values, weights, offset, p, outside);
    match p {
        Exponent::Infinity => s,
        Exponent::Finite(p) => root(s, p),
    }
}

/// The path `t -> f(t + h) - f(t)` on the grid of `f`.
pub fn shift_difference(f: &SampledPath, h: f64) -> Result<SampledPath> {
    if !(h.abs() <= 1.0) {
        return invalid(format!("shift must satisfy |h| <= 1, got {h}"));
    }
    let grid = f.grid();
    let mut shifted = vec![0.0; grid.len()];
    shift_into(f.values(), h / grid.step(), &mut shifted);
    let values = shifted.iter().zip(f.values()).map(|(s, v)| s - v).collect();
    SampledPath::new(grid, values)
}

fn check_delta(delta: f64, h_nodes: usize) -> Result<()> {
    if !(0.0..=1.0).contains(&delta) {
        return invalid(format!("delta must lie in [0, 1], got {delta}"));
    }
    if h_nodes < 2 {
        return invalid("need at least 2 shift nodes");
    }
    Ok(())
}

/// Uniform shift grid on `[-delta, delta]`, in grid cells.
fn shift_offsets(delta: f64, h_nodes: usize, step: f64) -> impl Iterator<Item = f64> {
    let last = h_nodes - 1;
    (0..h_nodes).map(move |j| {
        let z = if j == last {
            1.0
        } else {
            -1.0 + 2.0 * j as f64 / last as f64
        };
        z * delta / step
    })
}

/// `max_{|h| <= delta} |S_h f|_p` over `h_nodes` uniform shifts.
pub fn modulus_continuity(f: &SampledPath, delta: f64, p: Exponent, h_nodes: usize) -> Result<f64> {
    check_delta(delta, h_nodes)?;
    if delta == 0.0 {
        return Ok(0.0);
    }
    let grid = f.grid();
    let w = grid.trapezoid_weights();
    Ok(shift_offsets(delta, h_nodes, grid.step())
        .map(|off| shift_lp(f.values(), &w, off, p, true))
        .fold(0.0, f64::max))
}

/// `(int_{-delta}^{delta} |S_h f|_p^q dh)^{1/q}` by the trapezoid rule over
/// `h_nodes` shifts; `q = INFINITY` falls back to [`modulus_continuity`].
pub fn modulus_q(
    f: &SampledPath,
    delta: f64,
    p: Exponent,
    q: Exponent,
    h_nodes: usize,
) -> Result<f64> {
    let q = match q {
        Exponent::Infinity => return modulus_continuity(f, delta, p, h_nodes),
        Exponent::Finite(q) => q,
    };
    check_delta(delta, h_nodes)?;
    if delta == 0.0 {
        return Ok(0.0);
    }
    let grid = f.grid();
    let w = grid.trapezoid_weights();
    Ok(modulus_q_inner(
        f.values(),
        &w,
        grid.step(),
        delta,
        p,
        q,
        h_nodes,
    ))
}

fn modulus_q_inner(
    values: &[f64],
    w: &[f64],
    step: f64,
    delta: f64,
    p: Exponent,
    q: f64,
    h_nodes: usize,
) -> f64 {
    let dh = 2.0 * delta / (h_nodes - 1) as f64;
    let last = h_nodes - 1;
    let norms: Vec<f64> = shift_offsets(delta, h_nodes, step)
        .map(|off| shift_lp(values, w, off, p, true))
        .collect();
    // scale by the largest norm so that large q does not underflow
    let top = norms.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    let sum: f64 = norms
        .iter()
        .enumerate()
        .map(|(j, g)| {
            let tw = if j == 0 || j == last { 0.5 * dh } else { dh };
            tw * pow_abs(g / top, q)
        })
        .sum();
    top * root(sum, q)
}

/// Moduli at increasing `deltas`, each at least the previous one.
///
/// Successive sup-moduli are maxima over nested shift sets, so carrying the
/// running maximum forward only tightens the discretized supremum.
pub fn modulus_profile(
    f: &SampledPath,
    deltas: &[f64],
    p: Exponent,
    h_nodes: usize,
) -> Result<Vec<f64>> {
    if deltas.windows(2).any(|d| d[1] < d[0]) {
        return invalid("deltas must be nondecreasing");
    }
    let mut best = 0.0f64;
    deltas
        .iter()
        .map(|&d| {
            best = best.max(modulus_continuity(f, d, p, h_nodes)?);
            Ok(best)
        })
        .collect()
}

fn check_besov_measure(params: &BesovParams, measure: &WeightedMeasure) -> Result<()> {
    let want = params.besov_exponent();
    let got = measure.kind().exponent();
    let ok = match measure.kind() {
        MeasureKind::Power { .. } => (got - want).abs() <= 1e-12 * (1.0 + want.abs()),
        MeasureKind::Lebesgue => want == 0.0,
    };
    if !ok {
        return invalid(format!(
            "delta measure exponent {got} does not match -1 - alpha s = {want}"
        ));
    }
    let (a, b) = measure.support();
    if a < 0.0 || b > 1.0 + 1e-12 {
        return invalid("delta measure must live in (0, 1]");
    }
    Ok(())
}

/// Ordinary (`kind = Ordinary`) or generalized Besov seminorm,
/// `(int Delta(delta)^s delta^{-1 - alpha s} d delta)^{1/s}`.
///
/// `delta_measure` must be the power measure of [`besov_measure`]; its
/// truncation `delta_min` is the caller's choice.
pub fn besov_seminorm(
    f: &SampledPath,
    params: &BesovParams,
    delta_measure: &WeightedMeasure,
    h_nodes: usize,
    kind: BesovKind,
) -> Result<f64> {
    check_besov_measure(params, delta_measure)?;
    if h_nodes < 2 {
        return invalid("need at least 2 shift nodes");
    }
    let moduli = match (kind, params.q) {
        (BesovKind::Ordinary, _) | (BesovKind::Generalized, Exponent::Infinity) => {
            modulus_profile(f, delta_measure.nodes(), params.p, h_nodes)?
        }
        (BesovKind::Generalized, Exponent::Finite(q)) => {
            let grid = f.grid();
            let w = grid.trapezoid_weights();
            delta_measure
                .nodes()
                .iter()
                .map(|&d| modulus_q_inner(f.values(), &w, grid.step(), d, params.p, q, h_nodes))
                .collect()
        }
    };
    let integrand: Vec<f64> = moduli.iter().map(|m| pow_abs(*m, params.s)).collect();
    Ok(root(delta_measure.integrate(&integrand)?, params.s))
}

/// `|f|_p + seminorm`.
pub fn besov_norm(
    f: &SampledPath,
    params: &BesovParams,
    delta_measure: &WeightedMeasure,
    h_nodes: usize,
    kind: BesovKind,
) -> Result<f64> {
    let lp = weighted_lp(f.values(), &f.grid().trapezoid_weights(), params.p);
    Ok(lp + besov_seminorm(f, params, delta_measure, h_nodes, kind)?)
}

/// The generalized seminorm computed as the three-axis mixed norm of
/// `V(t, z, delta) = f(t + z delta) - f(t)`: `t` with exponent `p`, `z` on
/// `[-1, 1]` with `q`, `delta` with `s` against `nu` (exponent `gamma`).
pub fn seminorm_via_mixed(
    f: &SampledPath,
    params: &BesovParams,
    z_nodes: usize,
    nu: &WeightedMeasure,
) -> Result<f64> {
    let (p, q) = match (params.p, params.q) {
        (Exponent::Finite(p), Exponent::Finite(q)) => (p, q),
        _ => {
            return Err(Error::Unsupported(
                "mixed-norm representation needs finite p and q".into(),
            ))
        }
    };
    let gamma = gamma_exponent(params);
    if (nu.kind().exponent() - gamma).abs() > 1e-12 * (1.0 + gamma.abs()) {
        return invalid(format!(
            "nu exponent {} does not match gamma = {gamma}",
            nu.kind().exponent()
        ));
    }
    let field = shift_field(f, z_nodes, nu)?;
    mixed_norm(&field, &ExponentVector::from_reals(&[p, q, params.s])?)
}

/// Field `f(t + z delta) - f(t)` on (grid nodes) x (`z_nodes` on `[-1, 1]`)
/// x (nodes of `delta_measure`), with matching axis weights.
pub fn shift_field(
    f: &SampledPath,
    z_nodes: usize,
    delta_measure: &WeightedMeasure,
) -> Result<SampledField> {
    let grid = f.grid();
    let zm = WeightedMeasure::lebesgue(-1.0, 1.0, z_nodes)?;
    let (n, nz, nd) = (grid.len(), zm.len(), delta_measure.len());
    let mut values = vec![0.0; n * nz * nd];
    let mut buf = vec![0.0; n];
    for (zi, &z) in zm.nodes().iter().enumerate() {
        for (di, &d) in delta_measure.nodes().iter().enumerate() {
            shift_into(f.values(), z * d / grid.step(), &mut buf);
            for ti in 0..n {
                values[(ti * nz + zi) * nd + di] = buf[ti] - f.values()[ti];
            }
        }
    }
    SampledField::new(
        vec![n, nz, nd],
        values,
        vec![
            AxisWeights::new(grid.trapezoid_weights())?,
            AxisWeights::from_measure(&zm),
            AxisWeights::from_measure(delta_measure),
        ],
    )
}

/// Reusable evaluator: parameters, truncated measure and shift resolution.
#[derive(Debug, Clone)]
pub struct BesovEvaluator {
    pub params: BesovParams,
    pub kind: BesovKind,
    pub h_nodes: usize,
    measure: WeightedMeasure,
}

impl BesovEvaluator {
    pub fn new(
        params: BesovParams,
        kind: BesovKind,
        delta_min: f64,
        delta_nodes: usize,
        h_nodes: usize,
    ) -> Result<Self> {
        Ok(Self {
            params,
            kind,
            h_nodes,
            measure: besov_measure(&params, delta_min, delta_nodes)?,
        })
    }

    pub fn measure(&self) -> &WeightedMeasure {
        &self.measure
    }

    pub fn delta_min(&self) -> f64 {
        self.measure.support().0
    }

    pub fn seminorm(&self, f: &SampledPath) -> Result<f64> {
        besov_seminorm(f, &self.params, &self.measure, self.h_nodes, self.kind)
    }

    /// `(|f|_p, seminorm)`.
    pub fn evaluate(&self, f: &SampledPath) -> Result<(f64, f64)> {
        let lp = weighted_lp(f.values(), &f.grid().trapezoid_weights(), self.params.p);
        Ok((lp, self.seminorm(f)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fin(p: f64) -> Exponent {
        Exponent::finite(p).unwrap()
    }

    fn identity(n: usize) -> SampledPath {
        SampledPath::from_fn(UnitGrid::new(n).unwrap(), |t| t)
    }

    #[test]
    fn shift_difference_examples() {
        let f = identity(41);
        let z = shift_difference(&f, 0.0).unwrap();
        assert!(z.values().iter().all(|v| *v == 0.0));
        let zero = SampledPath::zeros(f.grid());
        assert!(shift_difference(&zero, 0.3)
            .unwrap()
            .values()
            .iter()
            .all(|v| *v == 0.0));
        let s = shift_difference(&f, 0.25).unwrap();
        assert_relative_eq!(s.eval(0.5), 0.25, epsilon = 1e-12);
        assert_relative_eq!(s.eval(0.9), -0.9, epsilon = 1e-12);
        assert!(shift_difference(&f, 1.5).is_err());
    }

    #[test]
    fn modulus_examples() {
        let f = identity(257);
        assert_eq!(modulus_continuity(&f, 0.0, fin(1.0), 65).unwrap(), 0.0);
        let sup = modulus_continuity(&f, 0.3, Exponent::Infinity, 65).unwrap();
        assert_relative_eq!(sup, 1.0, epsilon = 1e-12);
        assert!(modulus_continuity(&f, 1.2, fin(1.0), 65).is_err());
        assert!(modulus_continuity(&f, -0.1, fin(1.0), 65).is_err());
    }

    #[test]
    fn q_infinity_is_sup_modulus() {
        let f = SampledPath::from_fn(UnitGrid::new(129).unwrap(), |t| (5.0 * t).sin());
        for d in [0.05, 0.2, 0.7] {
            assert_eq!(
                modulus_q(&f, d, fin(2.0), Exponent::Infinity, 33).unwrap(),
                modulus_continuity(&f, d, fin(2.0), 33).unwrap()
            );
        }
        let zero = SampledPath::zeros(f.grid());
        assert_eq!(modulus_q(&zero, 0.4, fin(2.0), fin(3.0), 33).unwrap(), 0.0);
    }

    #[test]
    fn q_limit_approaches_sup() {
        let f = SampledPath::from_fn(UnitGrid::new(257).unwrap(), |t| (3.0 * t).sin() * t);
        let d = 0.3;
        let sup = modulus_continuity(&f, d, fin(2.0), 129).unwrap();
        let mut prev = 0.0;
        for q in [8.0, 64.0, 512.0, 4096.0] {
            let v = modulus_q(&f, d, fin(2.0), fin(q), 129).unwrap();
            assert!(v > prev && v <= sup * (1.0 + 1e-12), "q={q}: {v} vs {sup}");
            prev = v;
        }
        assert!((sup - prev) / sup < 0.01, "{prev} vs {sup}");
        // a flat maximum converges fast: constant path, |S_h f|_4 = |h|^{1/4}
        let one = SampledPath::from_fn(UnitGrid::new(1025).unwrap(), |_| 1.0);
        let sup = modulus_continuity(&one, 1.0, fin(4.0), 129).unwrap();
        let q64 = modulus_q(&one, 1.0, fin(4.0), fin(64.0), 129).unwrap();
        assert!((sup - q64) / sup < 0.05, "{q64} vs {sup}");
    }

    #[test]
    fn gamma_values() {
        let g =
            |a: f64, q: f64, s: f64| gamma_exponent(&BesovParams::finite(1.0, q, s, a).unwrap());
        assert_relative_eq!(g(0.25, 2.0, 2.0), -0.5, epsilon = 1e-15);
        assert_relative_eq!(g(0.0, 1.0, 1.0), 0.0, epsilon = 1e-15);
        assert_relative_eq!(g(0.1, 4.0, 2.0), -0.7, epsilon = 1e-15);
    }

    #[test]
    fn seminorm_zero_and_generalized_q_inf() {
        let g = UnitGrid::new(129).unwrap();
        let params = BesovParams::new(fin(2.0), Exponent::Infinity, 2.0, 0.3).unwrap();
        let mu = besov_measure(&params, default_delta_min(&g), 32).unwrap();
        let zero = SampledPath::zeros(g);
        assert_eq!(
            besov_seminorm(&zero, &params, &mu, 33, BesovKind::Generalized).unwrap(),
            0.0
        );
        let f = SampledPath::from_fn(g, |t| (7.0 * t).cos());
        let a = besov_seminorm(&f, &params, &mu, 33, BesovKind::Generalized).unwrap();
        let b = besov_seminorm(&f, &params, &mu, 33, BesovKind::Ordinary).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn seminorm_rejects_wrong_measure() {
        let g = UnitGrid::new(65).unwrap();
        let params = BesovParams::finite(1.0, 1.0, 1.0, 0.5).unwrap();
        let wrong = WeightedMeasure::power(-1.0, 0.01, 16).unwrap();
        let f = identity(65);
        assert!(besov_seminorm(&f, &params, &wrong, 33, BesovKind::Ordinary).is_err());
        let _ = g;
    }

    #[test]
    fn constant_has_positive_seminorm() {
        let g = UnitGrid::new(129).unwrap();
        let params = BesovParams::finite(2.0, 2.0, 2.0, 0.2).unwrap();
        let mu = besov_measure(&params, default_delta_min(&g), 32).unwrap();
        let c = SampledPath::from_fn(g, |_| 0.7);
        let semi = besov_seminorm(&c, &params, &mu, 33, BesovKind::Ordinary).unwrap();
        assert!(semi > 0.0);
        let norm = besov_norm(&c, &params, &mu, 33, BesovKind::Ordinary).unwrap();
        assert_relative_eq!(norm, 0.7 + semi, epsilon = 1e-12);
    }

    #[test]
    fn mixed_representation_homogeneous() {
        let g = UnitGrid::new(65).unwrap();
        let params = BesovParams::finite(1.0, 1.0, 1.0, 0.5).unwrap();
        let nu = nu_measure(&params, default_delta_min(&g), 16).unwrap();
        let f = SampledPath::from_fn(g, |t| t * (1.0 - t) + 0.2);
        let a = seminorm_via_mixed(&f, &params, 16, &nu).unwrap();
        let b = seminorm_via_mixed(&f.scaled(2.0), &params, 16, &nu).unwrap();
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-13);
        assert_eq!(
            seminorm_via_mixed(&SampledPath::zeros(g), &params, 16, &nu).unwrap(),
            0.0
        );
        let inf = BesovParams::new(fin(1.0), Exponent::Infinity, 1.0, 0.5).unwrap();
        assert!(matches!(
            seminorm_via_mixed(&f, &inf, 16, &nu),
            Err(Error::Unsupported(_))
        ));
    }
}
