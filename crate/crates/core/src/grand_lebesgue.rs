//! Grand Lebesgue norms `sup_m |f|_m / psi(m)` and the exponential tail
//! bounds obtained from the Young–Fenchel transform of `m ln psi(m)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Moment orders used when a moment curve is built without an explicit grid.
pub const DEFAULT_M_GRID: [f64; 11] = [1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0];

/// Number of log-spaced points in the Young–Fenchel grid of a power `psi`.
pub const DEFAULT_YF_POINTS: usize = 2048;

/// A `psi` function on `[1, B)`.
///
/// `Tabulated` interpolates `m ln psi(m)` linearly in `m` between nodes and is
/// infinite outside the node range. Since `m ln |f|_m` is convex in `m`, this
/// interpolation never undercuts the moments it was fitted to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsiFunction {
    /// `psi(p) = p^{1/l}`
    PowerL { l: f64, upper: Option<f64> },
    Tabulated {
        table: Vec<(f64, f64)>,
        upper: Option<f64>,
    },
}

impl PsiFunction {
    pub fn power(l: f64) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return invalid(format!("power psi needs l > 0, got {l}"));
        }
        Ok(Self::PowerL { l, upper: None })
    }

    /// `psi_2(p) = sqrt(p)`, the subgaussian case.
    pub fn sqrt() -> Self {
        Self::PowerL {
            l: 2.0,
            upper: None,
        }
    }

    pub fn tabulated(table: Vec<(f64, f64)>) -> Result<Self> {
        if table.is_empty() {
            return invalid("psi table is empty");
        }
        for w in table.windows(2) {
            if !(w[1].0 > w[0].0) {
                return invalid("psi table m values must be strictly increasing");
            }
        }
        for &(m, v) in &table {
            if !(m >= 1.0 && m.is_finite()) {
                return invalid(format!("psi table m = {m} is outside [1, inf)"));
            }
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("psi({m}) = {v} must be positive and finite"));
            }
        }
        Ok(Self::Tabulated { table, upper: None })
    }

    /// The degenerate `psi_(r)`: finite only at `r`, where it equals 1.
    pub fn degenerate(r: f64) -> Result<Self> {
        Self::tabulated(vec![(r, 1.0)])
    }

    /// Restrict the support to `[1, b)`.
    pub fn with_upper(self, b: f64) -> Result<Self> {
        if !(b > 1.0) {
            return invalid(format!("support bound must exceed 1, got {b}"));
        }
        Ok(match self {
            Self::PowerL { l, .. } => Self::PowerL { l, upper: Some(b) },
            Self::Tabulated { table, .. } => {
                if table.last().is_some_and(|&(m, _)| m >= b) {
                    return invalid("psi table reaches beyond the support bound");
                }
                Self::Tabulated {
                    table,
                    upper: Some(b),
                }
            }
        })
    }

    /// `B`, or infinity.
    pub fn upper(&self) -> f64 {
        match self {
            Self::PowerL { upper, .. } | Self::Tabulated { upper, .. } => {
                upper.unwrap_or(f64::INFINITY)
            }
        }
    }

    pub fn in_support(&self, m: f64) -> bool {
        m >= 1.0 && m < self.upper()
    }

    /// `m ln psi(m)`, `+inf` where `psi` is infinite.
    pub fn tilde(&self, m: f64) -> Result<f64> {
        if !self.in_support(m) {
            return invalid(format!("m = {m} is outside the support of psi"));
        }
        Ok(match self {
            Self::PowerL { l, .. } => m * m.ln() / l,
            Self::Tabulated { table, .. } => tabulated_tilde(table, m),
        })
    }

    pub fn eval(&self, m: f64) -> Result<f64> {
        let t = self.tilde(m)?;
        Ok(if t.is_infinite() {
            f64::INFINITY
        } else {
            (t / m).exp()
        })
    }
}

fn tabulated_tilde(table: &[(f64, f64)], m: f64) -> f64 {
    let tol = 1e-12;
    let i = table.partition_point(|&(x, _)| x < m * (1.0 - tol));
    if i == table.len() {
        return f64::INFINITY;
    }
    let (m1, v1) = table[i];
    if (m1 - m).abs() <= tol * m {
        return m1 * v1.ln();
    }
    if i == 0 {
        return f64::INFINITY;
    }
    let (m0, v0) = table[i - 1];
    let (g0, g1) = (m0 * v0.ln(), m1 * v1.ln());
    g0 + (g1 - g0) * (m - m0) / (m1 - m0)
}

/// `max_m |f|_m / psi(m)` over the supplied curve of `(m, |f|_m)` pairs.
pub fn gls_norm(curve: &[(f64, f64)], psi: &PsiFunction) -> Result<f64> {
    if curve.is_empty() {
        return invalid("moment curve is empty");
    }
    let mut best = 0.0f64;
    for &(m, v) in curve {
        if !(v >= 0.0) {
            return invalid(format!("moment at m = {m} must be nonnegative, got {v}"));
        }
        let p = psi.eval(m)?;
        if p.is_finite() {
            best = best.max(v / p);
        }
    }
    Ok(best)
}

/// The curve `m -> m ln psi(m)` at the given orders.
pub fn tilde_psi(psi: &PsiFunction, ms: &[f64]) -> Result<Vec<f64>> {
    ms.iter().map(|&m| psi.tilde(m)).collect()
}

/// `max_i (p_i |y| - g_i)` over a finite grid.
pub fn young_fenchel(ps: &[f64], gs: &[f64], y: f64) -> Result<f64> {
    if ps.is_empty() {
        return invalid("Young-Fenchel grid is empty");
    }
    if ps.len() != gs.len() {
        return invalid("grid and curve lengths differ");
    }
    Ok(ps
        .iter()
        .zip(gs)
        .map(|(p, g)| p * y.abs() - g)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `n` log-spaced points of `[lo, hi]`, endpoints exact.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 || hi <= lo {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i + 1 == n => hi,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// `psi~*(y)` on the default grid: the table nodes for tabulated `psi`,
/// otherwise `points` log-spaced orders in `[1, min(B, e^{max(2, l)|y| + 2})]`.
pub fn psi_conjugate(psi: &PsiFunction, y: f64, points: usize) -> Result<f64> {
    let ps = match psi {
        PsiFunction::Tabulated { table, .. } => table.iter().map(|&(m, _)| m).collect(),
        PsiFunction::PowerL { l, .. } => {
            let mut hi = (l.max(2.0) * y.abs() + 2.0).exp();
            let b = psi.upper();
            if b.is_finite() {
                hi = hi.min(b * (1.0 - 1e-12));
            }
            log_grid(1.0, hi.max(1.0), points.max(2))
        }
    };
    let gs = tilde_psi(psi, &ps)?;
    young_fenchel(&ps, &gs, y)
}

/// `exp(-psi~*(ln u))`, the tail bound for `u > e` when the norm is at most 1.
pub fn tail_bound(psi: &PsiFunction, u: f64) -> Result<f64> {
    if !(u > std::f64::consts::E) {
        return invalid(format!("tail bound holds only for u > e, got {u}"));
    }
    extrapolated_tail_bound(psi, u)
}

/// The same formula for any `u > 1`, including the range `u <= e` where it is
/// not a theorem.
pub fn extrapolated_tail_bound(psi: &PsiFunction, u: f64) -> Result<f64> {
    if !(u > 1.0) {
        return invalid(format!("tail formula needs u > 1, got {u}"));
    }
    Ok((-psi_conjugate(psi, u.ln(), DEFAULT_YF_POINTS)?)
        .exp()
        .min(1.0))
}

/// Tail bound for a variable whose norm is `norm` rather than 1.
pub fn scaled_tail_bound(psi: &PsiFunction, norm: f64, u: f64) -> Result<f64> {
    if norm < 0.0 {
        return invalid("norm must be nonnegative");
    }
    if norm == 0.0 {
        return Ok(0.0);
    }
    tail_bound(psi, u / norm)
}

/// Tabulated `psi` whose values are the supplied moments.
pub fn fit_psi_from_moments(curve: &[(f64, f64)]) -> Result<PsiFunction> {
    if let Some(&(m, v)) = curve.iter().find(|&&(_, v)| !(v > 0.0)) {
        return invalid(format!("moment at m = {m} is not positive ({v})"));
    }
    PsiFunction::tabulated(curve.to_vec()).map_err(|e| match e {
        Error::InvalidArgument(msg) => Error::InvalidArgument(format!("cannot fit psi: {msg}")),
        other => other,
    })
}
