//! Iterated (anisotropic) Lebesgue norms of sampled multi-axis fields.
//!
//! Axes are integrated innermost first, each with its own exponent and
//! quadrature weights. The order is always explicit: swapping two axes
//! generally changes the value.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{SampledPath, WeightedMeasure};

/// A Lebesgue exponent: a real `p >= 1` or `INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn finite(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return invalid(format!("exponent must be >= 1, got {p}"));
        }
        if p.is_infinite() {
            return Ok(Exponent::Infinity);
        }
        Ok(Exponent::Finite(p))
    }

    /// `f64::INFINITY` for [`Exponent::Infinity`].
    pub fn value(&self) -> f64 {
        match self {
            Exponent::Finite(p) => *p,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Exponent::Finite(_))
    }

    pub fn as_finite(&self) -> Option<f64> {
        match self {
            Exponent::Finite(p) => Some(*p),
            Exponent::Infinity => None,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::Parse(format!("not an exponent: {s:?}")))?;
                Exponent::finite(p)
            }
        }
    }
}

impl TryFrom<String> for Exponent {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Exponent> for String {
    fn from(e: Exponent) -> String {
        e.to_string()
    }
}

/// Exponents of a mixed norm, innermost axis first.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentVector(pub Vec<Exponent>);

impl ExponentVector {
    pub fn new(entries: Vec<Exponent>) -> Self {
        Self(entries)
    }

    pub fn from_reals(ps: &[f64]) -> Result<Self> {
        ps.iter()
            .map(|&p| Exponent::finite(p))
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest entry, `INFINITY` dominating.
    pub fn max(&self) -> Option<Exponent> {
        self.0
            .iter()
            .copied()
            .reduce(|a, b| if a.value() >= b.value() { a } else { b })
    }
}

/// Nonnegative quadrature weights for one axis of a [`SampledField`].
#[derive(Debug, Clone, PartialEq)]
pub struct AxisWeights(Vec<f64>);

impl AxisWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return invalid("axis needs at least one node");
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return invalid("axis weights must be finite and nonnegative");
        }
        Ok(Self(weights))
    }

    pub fn from_measure(measure: &WeightedMeasure) -> Self {
        Self(measure.weights().to_vec())
    }

    /// Empirical probability over `r` replicas: weight `1/r` each.
    pub fn uniform_probability(r: usize) -> Result<Self> {
        if r == 0 {
            return invalid("probability axis needs at least one replica");
        }
        Ok(Self(vec![1.0 / r as f64; r]))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn is_probability(&self) -> bool {
        (self.total() - 1.0).abs() <= 1e-12
    }
}

/// Dense row-major field with one set of axis weights per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    shape: Vec<usize>,
    values: Vec<f64>,
    axes: Vec<AxisWeights>,
}

impl SampledField {
    pub fn new(shape: Vec<usize>, values: Vec<f64>, axes: Vec<AxisWeights>) -> Result<Self> {
        if shape.is_empty() {
            return invalid("field needs at least one axis");
        }
        if shape.len() != axes.len() {
            return invalid(format!(
                "{} axes in shape but {} weight sets",
                shape.len(),
                axes.len()
            ));
        }
        if shape.iter().product::<usize>() != values.len() {
            return invalid("product of shape does not match number of values");
        }
        if let Some((k, _)) = shape
            .iter()
            .zip(&axes)
            .enumerate()
            .find(|(_, (n, w))| **n != w.len())
        {
            return invalid(format!("axis {k}: length and weight count differ"));
        }
        Ok(Self {
            shape,
            values,
            axes,
        })
    }

    /// Builds a field by evaluating `f` at every multi-index.
    pub fn from_fn(axes: Vec<AxisWeights>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let shape: Vec<usize> = axes.iter().map(AxisWeights::len).collect();
        let total: usize = shape.iter().product();
        let mut idx = vec![0usize; shape.len()];
        let mut values = Vec::with_capacity(total);
        for _ in 0..total {
            values.push(f(&idx));
            for k in (0..shape.len()).rev() {
                idx[k] += 1;
                if idx[k] < shape[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Self::new(shape, values, axes)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn axes(&self) -> &[AxisWeights] {
        &self.axes
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            axes: self.axes.clone(),
        }
    }

    pub fn try_add(&self, other: &SampledField) -> Result<Self> {
        if self.shape != other.shape || self.axes != other.axes {
            return invalid("fields differ in shape or weights");
        }
        Ok(Self {
            shape: self.shape.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
            axes: self.axes.clone(),
        })
    }
}

#[inline]
pub(crate) fn pow_abs(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else {
        a.powf(p)
    }
}

#[inline]
pub(crate) fn root(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x.sqrt()
    } else {
        x.powf(1.0 / p)
    }
}

/// `(sum_i w_i |v_i|^p)^{1/p}`, or `max |v_i|` for `INFINITY`.
pub(crate) fn weighted_lp(values: &[f64], weights: &[f64], p: Exponent) -> f64 {
    match p {
        Exponent::Infinity => values.iter().fold(0.0, |m, v| m.max(v.abs())),
        Exponent::Finite(p) => {
            let s: f64 = values
                .iter()
                .zip(weights)
                .map(|(v, w)| w * pow_abs(*v, p))
                .sum();
            root(s, p)
        }
    }
}

/// Collapses `axis` of a row-major array with the given exponent.
fn reduce_axis(
    values: &[f64],
    shape: &[usize],
    axis: usize,
    weights: &[f64],
    p: Exponent,
) -> (Vec<f64>, Vec<usize>) {
    let outer: usize = shape[..axis].iter().product();
    let len = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![0.0f64; outer * inner];
    for o in 0..outer {
        let acc = &mut out[o * inner..(o + 1) * inner];
        for (i, &w) in weights.iter().enumerate().take(len) {
            let row = &values[(o * len + i) * inner..(o * len + i + 1) * inner];
            match p {
                Exponent::Infinity => {
                    for (a, v) in acc.iter_mut().zip(row) {
                        *a = (*a).max(v.abs());
                    }
                }
                Exponent::Finite(p) => {
                    for (a, v) in acc.iter_mut().zip(row) {
                        *a += w * pow_abs(*v, p);
                    }
                }
            }
        }
        if let Exponent::Finite(p) = p {
            acc.iter_mut().for_each(|a| *a = root(*a, p));
        }
    }
    let mut new_shape = shape.to_vec();
    new_shape.remove(axis);
    (out, new_shape)
}

/// Mixed norm with an explicit integration order.
///
/// `order` lists `(axis, exponent)` pairs from the innermost integral to the
/// outermost; every axis of the field must appear exactly once.
pub fn mixed_norm_ordered(field: &SampledField, order: &[(usize, Exponent)]) -> Result<f64> {
    let d = field.ndim();
    if order.len() != d {
        return invalid(format!(
            "{} exponents for a field with {d} axes",
            order.len()
        ));
    }
    let mut seen = vec![false; d];
    for &(a, _) in order {
        if a >= d || seen[a] {
            return invalid("integration order must list each axis once");
        }
        seen[a] = true;
    }
    // current position of every original axis after earlier reductions
    let mut remaining: Vec<usize> = (0..d).collect();
    let mut values = field.values.clone();
    let mut shape = field.shape.clone();
    for &(axis, p) in order {
        let pos = remaining
            .iter()
            .position(|&a| a == axis)
            .expect("validated above");
        let (v, s) = reduce_axis(&values, &shape, pos, field.axes[axis].weights(), p);
        values = v;
        shape = s;
        remaining.remove(pos);
    }
    debug_assert_eq!(values.len(), 1);
    Ok(values[0])
}

/// Mixed norm integrating axis 0 innermost with `exponents[0]`, then axis 1,
/// and so on.
pub fn mixed_norm(field: &SampledField, exponents: &ExponentVector) -> Result<f64> {
    if exponents.len() != field.ndim() {
        return invalid(format!(
            "{} exponents for a field with {} axes",
            exponents.len(),
            field.ndim()
        ));
    }
    let order: Vec<(usize, Exponent)> = exponents.0.iter().copied().enumerate().collect();
    mixed_norm_ordered(field, &order)
}

/// `L_p` norm of a path against `measure`, evaluated at the measure's nodes.
pub fn lp_norm(path: &SampledPath, p: Exponent, measure: &WeightedMeasure) -> Result<f64> {
    let (a, b) = measure.support();
    if a < -1e-12 || b > 1.0 + 1e-12 {
        return invalid("measure must be supported inside [0, 1]");
    }
    let values: Vec<f64> = measure.nodes().iter().map(|&t| path.eval(t)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return invalid("path has non-finite values");
    }
    Ok(weighted_lp(&values, measure.weights(), p))
}

/// `L_p` norm of a path against Lebesgue measure on its own grid nodes.
pub fn lp_norm_on_grid(path: &SampledPath, p: Exponent) -> f64 {
    let w = path.grid().trapezoid_weights();
    weighted_lp(path.values(), &w, p)
}

/// Both sides of the permutation inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PermutationPair {
    /// `r`-axis integrated last (outermost).
    pub lhs: f64,
    /// `r`-axis integrated first (innermost).
    pub rhs: f64,
}

impl PermutationPair {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + rel_tol)
    }
}

/// Evaluates the mixed norm of `field` with the probability axis outermost
/// (`lhs`) and innermost (`rhs`).
///
/// `inner_exponents` apply to the remaining axes in increasing axis order.
/// The inequality `lhs <= rhs` is guaranteed only for `r >= max(inner)`.
pub fn permutation_pair(
    field: &SampledField,
    inner_exponents: &ExponentVector,
    r: Exponent,
    prob_axis: usize,
) -> Result<PermutationPair> {
    let d = field.ndim();
    if prob_axis >= d {
        return invalid(format!("axis {prob_axis} out of range"));
    }
    if inner_exponents.len() + 1 != d {
        return invalid("need one inner exponent per non-probability axis");
    }
    if !field.axes[prob_axis].is_probability() {
        return invalid("probability axis weights must sum to 1");
    }
    if let Some(pmax) = inner_exponents.max() {
        if r.value() < pmax.value() {
            return invalid(format!(
                "r = {r} is below the largest inner exponent {pmax}"
            ));
        }
    }
    let others: Vec<usize> = (0..d).filter(|&a| a != prob_axis).collect();
    let inner: Vec<(usize, Exponent)> = others
        .iter()
        .copied()
        .zip(inner_exponents.0.iter().copied())
        .collect();

    let mut outer_last = inner.clone();
    outer_last.push((prob_axis, r));
    let mut inner_first = vec![(prob_axis, r)];
    inner_first.extend(inner);

    Ok(PermutationPair {
        lhs: mixed_norm_ordered(field, &outer_last)?,
        rhs: mixed_norm_ordered(field, &inner_first)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::UnitGrid;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn fin(p: f64) -> Exponent {
        Exponent::finite(p).unwrap()
    }

    #[test]
    fn exponent_parsing() {
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::Infinity);
        assert_eq!("2.5".parse::<Exponent>().unwrap(), Exponent::Finite(2.5));
        assert!("0.5".parse::<Exponent>().is_err());
        assert!("abc".parse::<Exponent>().is_err());
    }

    #[test]
    fn lp_norm_examples() {
        let g = UnitGrid::new(1024).unwrap();
        let leb = WeightedMeasure::on_grid(&g);
        let half = SampledPath::from_fn(g, |_| 0.5);
        assert_relative_eq!(
            lp_norm(&half, fin(3.0), &leb).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        let id = SampledPath::from_fn(g, |t| t);
        let l2 = lp_norm(&id, fin(2.0), &leb).unwrap();
        assert!((l2 - 1.0 / 3f64.sqrt()).abs() < 1e-4, "{l2}");
        assert_eq!(lp_norm(&id, Exponent::Infinity, &leb).unwrap(), 1.0);
        assert!(Exponent::finite(0.9).is_err());
    }

    #[test]
    fn factorized_field_factorizes() {
        let gx = WeightedMeasure::lebesgue(0.0, 1.0, 33).unwrap();
        let gy = WeightedMeasure::lebesgue(0.0, 1.0, 17).unwrap();
        let g = |x: f64| 1.0 + x * x;
        let h = |y: f64| (2.0 * y).cos();
        let (xs, ys) = (gx.nodes().to_vec(), gy.nodes().to_vec());
        let field = SampledField::from_fn(
            vec![
                AxisWeights::from_measure(&gx),
                AxisWeights::from_measure(&gy),
            ],
            |i| g(xs[i[0]]) * h(ys[i[1]]),
        )
        .unwrap();
        let (p1, p2) = (1.5, 3.0);
        let lhs = mixed_norm(&field, &ExponentVector::from_reals(&[p1, p2]).unwrap()).unwrap();
        let gn = weighted_lp(
            &xs.iter().map(|&x| g(x)).collect::<Vec<_>>(),
            gx.weights(),
            fin(p1),
        );
        let hn = weighted_lp(
            &ys.iter().map(|&y| h(y)).collect::<Vec<_>>(),
            gy.weights(),
            fin(p2),
        );
        assert_relative_eq!(lhs, gn * hn, max_relative = 1e-13);
    }

    #[test]
    fn constant_field_has_unit_norm() {
        let m = WeightedMeasure::lebesgue(0.0, 1.0, 9).unwrap();
        let axes = vec![AxisWeights::from_measure(&m), AxisWeights::from_measure(&m)];
        let f = SampledField::from_fn(axes, |_| 1.0).unwrap();
        for (p, q) in [(1.0, 1.0), (2.0, 7.0), (4.5, 1.5)] {
            let v = mixed_norm(&f, &ExponentVector::from_reals(&[p, q]).unwrap()).unwrap();
            assert_relative_eq!(v, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn two_by_two_order_matters() {
        // f = [[1, 0], [0, 1]] with weight 1/2 per index on each axis.
        let axes = vec![
            AxisWeights::uniform_probability(2).unwrap(),
            AxisWeights::uniform_probability(2).unwrap(),
        ];
        let field = SampledField::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0], axes.clone()).unwrap();
        let n12 = mixed_norm(&field, &ExponentVector::from_reals(&[1.0, 2.0]).unwrap()).unwrap();
        let n21 = mixed_norm(&field, &ExponentVector::from_reals(&[2.0, 1.0]).unwrap()).unwrap();
        // brute force: inner sums over axis 0 give 1/2 per row of axis 1
        let brute12 = (0.5 * 0.5f64.powi(2) * 2.0).sqrt();
        let brute21 = 0.5 * (0.5f64).sqrt() * 2.0;
        assert_relative_eq!(n12, brute12, epsilon = 1e-15);
        assert_relative_eq!(n21, brute21, epsilon = 1e-15);
        assert!((n12 - n21).abs() > 1e-3);

        // a non-symmetric field distinguishes the two orders
        let field = SampledField::new(vec![2, 2], vec![1.0, 2.0, 0.0, 3.0], axes).unwrap();
        let a = mixed_norm(&field, &ExponentVector::from_reals(&[1.0, 2.0]).unwrap()).unwrap();
        let b = mixed_norm(&field, &ExponentVector::from_reals(&[2.0, 1.0]).unwrap()).unwrap();
        // axis 0 inner, L1: column j -> (|f0j| + |f1j|)/2 = [0.5, 2.5]; L2 outer
        assert_relative_eq!(a, ((0.25 + 6.25) / 2.0f64).sqrt(), epsilon = 1e-14);
        // axis 0 inner, L2: [sqrt(0.5), sqrt(6.5)]; L1 outer
        assert_relative_eq!(b, (0.5f64.sqrt() + 6.5f64.sqrt()) / 2.0, epsilon = 1e-14);
        assert!((a - b).abs() > 1e-3);
        let pp = mixed_norm(&field, &ExponentVector::from_reals(&[3.0, 3.0]).unwrap()).unwrap();
        let flat = ((1.0 + 8.0 + 0.0 + 27.0) / 4.0f64).powf(1.0 / 3.0);
        assert_relative_eq!(pp, flat, max_relative = 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let axes = vec![AxisWeights::uniform_probability(2).unwrap()];
        let f = SampledField::new(vec![2], vec![1.0, 2.0], axes).unwrap();
        assert!(mixed_norm(&f, &ExponentVector::from_reals(&[1.0, 2.0]).unwrap()).is_err());
        assert!(SampledField::new(vec![3], vec![1.0, 2.0], vec![]).is_err());
    }

    #[test]
    fn permutation_rejects_small_r() {
        let axes = vec![
            AxisWeights::uniform_probability(2).unwrap(),
            AxisWeights::uniform_probability(3).unwrap(),
        ];
        let f = SampledField::from_fn(axes, |i| (i[0] + i[1]) as f64).unwrap();
        let inner = ExponentVector::from_reals(&[3.0]).unwrap();
        assert!(permutation_pair(&f, &inner, fin(2.0), 1).is_err());
        assert!(permutation_pair(&f, &inner, fin(3.0), 1).is_ok());
    }

    #[test]
    fn permutation_constant_in_probability_axis() {
        let axes = vec![
            AxisWeights::new(vec![0.2, 0.3, 0.5, 0.1]).unwrap(),
            AxisWeights::uniform_probability(5).unwrap(),
        ];
        let f = SampledField::from_fn(axes, |i| 1.0 + i[0] as f64).unwrap();
        let pp = permutation_pair(
            &f,
            &ExponentVector::from_reals(&[2.0]).unwrap(),
            fin(3.0),
            1,
        )
        .unwrap();
        assert_relative_eq!(pp.lhs, pp.rhs, max_relative = 1e-14);
    }

    fn field_strategy() -> impl Strategy<Value = (Vec<usize>, Vec<f64>, Vec<Vec<f64>>)> {
        (1usize..5, 1usize..5, 1usize..6).prop_flat_map(|(a, b, c)| {
            let shape = vec![a, b, c];
            (
                Just(shape),
                prop::collection::vec(-3.0f64..3.0, a * b * c),
                (
                    prop::collection::vec(0.01f64..1.0, a),
                    prop::collection::vec(0.01f64..1.0, b),
                    prop::collection::vec(0.01f64..1.0, c),
                )
                    .prop_map(|(x, y, z)| vec![x, y, z]),
            )
        })
    }

    fn build(shape: Vec<usize>, values: Vec<f64>, w: Vec<Vec<f64>>) -> SampledField {
        let axes = w
            .into_iter()
            .map(|v| AxisWeights::new(v).unwrap())
            .collect();
        SampledField::new(shape, values, axes).unwrap()
    }

    proptest! {
        #[test]
        fn homogeneity((shape, values, w) in field_strategy(), c in -5.0f64..5.0,
                       ps in prop::collection::vec(1.0f64..6.0, 3)) {
            let f = build(shape, values, w);
            let e = ExponentVector::from_reals(&ps).unwrap();
            let a = mixed_norm(&f.scaled(c), &e).unwrap();
            let b = c.abs() * mixed_norm(&f, &e).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b));
        }

        #[test]
        fn diagonal_collapse((shape, values, w) in field_strategy(), p in 1.0f64..6.0) {
            let f = build(shape.clone(), values.clone(), w.clone());
            let e = ExponentVector::from_reals(&[p, p, p]).unwrap();
            let nested = mixed_norm(&f, &e).unwrap();
            let mut s = 0.0;
            for i in 0..shape[0] { for j in 0..shape[1] { for k in 0..shape[2] {
                let v = values[(i * shape[1] + j) * shape[2] + k];
                s += w[0][i] * w[1][j] * w[2][k] * v.abs().powf(p);
            }}}
            let flat = s.powf(1.0 / p);
            prop_assert!((nested - flat).abs() <= 1e-12 * (1.0 + flat));
        }

        #[test]
        fn triangle_inequality((shape, values, w) in field_strategy(),
                               other in prop::collection::vec(-3.0f64..3.0, 100),
                               ps in prop::collection::vec(1.0f64..6.0, 3)) {
            let f = build(shape.clone(), values.clone(), w.clone());
            let gv: Vec<f64> = (0..values.len()).map(|i| other[i % other.len()]).collect();
            let g = build(shape, gv, w);
            let e = ExponentVector::from_reals(&ps).unwrap();
            let sum = mixed_norm(&f.try_add(&g).unwrap(), &e).unwrap();
            let bound = mixed_norm(&f, &e).unwrap() + mixed_norm(&g, &e).unwrap();
            prop_assert!(sum <= bound * (1.0 + 1e-12) + 1e-15);
        }
    }
}
