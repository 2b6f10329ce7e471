//! Relative error curves and fit diagnostics.

use serde::Serialize;

use crate::barycentric::{Method, StructuredBarycentricForm};
use crate::error::{Error, Result};
use crate::heuristics::FrequencySample;
use crate::linalg::C64;
use crate::loewner::InterpolationData;
use crate::model::{FirstOrderModel, Model, PoleSet, SecondOrderModel, Stability};

/// Anything that evaluates a scalar transfer function.
pub trait TransferFunction {
    fn eval(&self, s: C64) -> Result<C64>;
}

impl TransferFunction for Model {
    fn eval(&self, s: C64) -> Result<C64> {
        Model::eval(self, s)
    }
}
impl TransferFunction for SecondOrderModel {
    fn eval(&self, s: C64) -> Result<C64> {
        SecondOrderModel::eval(self, s)
    }
}
impl TransferFunction for FirstOrderModel {
    fn eval(&self, s: C64) -> Result<C64> {
        FirstOrderModel::eval(self, s)
    }
}
impl TransferFunction for StructuredBarycentricForm {
    fn eval(&self, s: C64) -> Result<C64> {
        StructuredBarycentricForm::eval(self, s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorPoint {
    pub omega: f64,
    /// `+inf` when the model could not be evaluated (numerical pole).
    pub eps_rel: f64,
}

/// `|H(s_k) - Hhat(s_k)| / |H(s_k)|` for every sample. Points where the
/// model is numerically singular get `+inf` instead of an error.
pub fn relative_error_curve<T: TransferFunction + ?Sized>(model: &T, samples: &[FrequencySample]) -> Result<Vec<ErrorPoint>> {
    samples
        .iter()
        .enumerate()
        .map(|(index, smp)| {
            let href = smp.value.norm();
            if href == 0.0 {
                return Err(Error::ZeroReference { index });
            }
            let eps_rel = match model.eval(smp.s) {
                Ok(v) => (smp.value - v).norm() / href,
                Err(Error::NearPole { .. } | Error::ZeroDenominator { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            Ok(ErrorPoint { omega: smp.omega(), eps_rel })
        })
        .collect()
}

/// `Hhat(lambda_i) - h_i` followed by `Hhat(mu_j) - g_j`.
pub fn interp_residuals<T: TransferFunction + ?Sized>(model: &T, data: &InterpolationData) -> Result<Vec<C64>> {
    data.all_conditions().map(|(s, v)| Ok(model.eval(s)? - v)).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub max: f64,
    pub mean: f64,
    pub median: f64,
}

impl ErrorSummary {
    pub fn of(curve: &[ErrorPoint]) -> Self {
        if curve.is_empty() {
            return ErrorSummary::default();
        }
        let mut v: Vec<f64> = curve.iter().map(|p| p.eps_rel).collect();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        ErrorSummary { max: v[n - 1], mean: v.iter().sum::<f64>() / n as f64, median }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub method: Method,
    pub order: usize,
    /// One residual per interpolation condition, left set first.
    pub residuals: Vec<C64>,
    /// Residuals divided by the magnitude of the matched value.
    pub relative_residuals: Vec<f64>,
    pub cond_estimate: f64,
    pub poles: PoleSet,
    pub error_curve: Vec<ErrorPoint>,
    pub errors: ErrorSummary,
    pub warnings: Vec<String>,
}

impl FitReport {
    pub fn new(method: Method, model: &Model, data: &InterpolationData, cond_estimate: f64) -> Result<Self> {
        // A point that is numerically a pole of the fit gets an infinite
        // residual and a warning; the fit itself is still usable elsewhere.
        let mut warnings = Vec::new();
        let mut residuals = Vec::with_capacity(2 * data.order());
        for (k, (s, v)) in data.all_conditions().enumerate() {
            match model.eval(s) {
                Ok(hs) => residuals.push(hs - v),
                Err(Error::NearPole { cond, .. }) => {
                    warnings.push(format!("interpolation point {k} ({s}) is numerically a pole of the fit (condition {cond:.3e})"));
                    residuals.push(C64::new(f64::INFINITY, 0.0));
                }
                Err(e) => return Err(e),
            }
        }
        let relative_residuals = residuals
            .iter()
            .zip(data.all_conditions())
            .map(|(r, (_, v))| if v.norm() > 0.0 { r.norm() / v.norm() } else { r.norm() })
            .collect();
        let poles = model.poles()?;
        Ok(FitReport {
            method,
            order: model.order(),
            residuals,
            relative_residuals,
            cond_estimate,
            poles,
            error_curve: Vec::new(),
            errors: ErrorSummary::default(),
            warnings,
        })
    }

    /// Attaches the error curve against `samples`.
    pub fn with_error_curve(mut self, model: &Model, samples: &[FrequencySample]) -> Result<Self> {
        self.error_curve = relative_error_curve(model, samples)?;
        self.errors = ErrorSummary::of(&self.error_curve);
        Ok(self)
    }

    pub fn residual_max(&self) -> f64 {
        self.residuals.iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    pub fn relative_residual_max(&self) -> f64 {
        self.relative_residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn stable_count(&self) -> usize {
        self.poles.count(Stability::Stable)
    }
}
