// Negated float comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod barycentric;
pub mod cli;
pub mod error;
pub mod heuristics;
pub mod io;
pub mod linalg;
pub mod loewner;
pub mod model;
pub mod realify;
pub mod synth;

pub use analysis::{relative_error_curve, interp_residuals, ErrorPoint, FitReport, TransferFunction};
pub use barycentric::{Method, StructuredBarycentricForm};
pub use error::{Error, Result};
pub use heuristics::{check_assumptions, make_support_points, select_interpolation_points, AssumptionReport, FrequencySample, SupportStrategy};
pub use linalg::C64;
pub use loewner::{fit, Fit, FitOptions, InterpolationData};
pub use model::{FirstOrderModel, Model, PoleSet, SecondOrderModel, Stability};
