//! Besov norms of sampled paths through mixed Lebesgue norms, Gaussian
//! process sampling, Grand Lebesgue tail bounds and Monte Carlo experiments
//! on the central limit theorem in Besov spaces.
//!
//! Paths live on a closed uniform grid of `[0, 1]` and are zero outside it.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod besov;
pub mod clt_lab;
pub mod entropy;
pub mod error;
pub mod grand_lebesgue;
pub mod io;
pub mod mixed_norms;
pub mod process_models;
pub mod quadrature;
pub mod stats;

pub use besov::{BesovEvaluator, BesovKind, BesovParams};
pub use clt_lab::{CltConfig, CltReport};
pub use entropy::FiniteMetricSpace;
pub use error::{Error, Result};
pub use grand_lebesgue::PsiFunction;
pub use mixed_norms::{AxisWeights, Exponent, ExponentVector, SampledField};
pub use process_models::{Boundary, Ensemble, ModelKind, PathSampler, ProcessModel, SamplerConfig};
pub use quadrature::{MeasureKind, SampledPath, UnitGrid, WeightedMeasure};
