//! Divided-difference matrices, weight solves and interpolating realizations.
//!
//! Rows of every divided-difference matrix belong to the right data
//! `(mu_j, g_j)` and columns to the left data `(lambda_i, h_i)`.

use log::warn;

use crate::analysis::FitReport;
use crate::barycentric::{Method, StructuredBarycentricForm, NODE_TOL};
use crate::error::{Error, Result};
use crate::heuristics::{self, AssumptionReport};
use crate::linalg::{self, CMatrix, CVector, Lu, C64, ONE};
use crate::model::{FirstOrderModel, Model, SecondOrderModel, REALNESS_TOL};
use crate::realify::{self, ConjugationPattern};

/// Condition estimate above which a weight solve emits a diagnostic.
pub const COND_WARNING: f64 = 1e10;

/// Relative pivot size (against the one-norm) treated as rank deficiency.
pub const RANK_TOL: f64 = 1e-14;

/// Left and right interpolation data.
///
/// Construction only checks shapes and finiteness; distinctness and the
/// method-specific conditions are reported by
/// [`heuristics::check_assumptions`], which [`fit`] runs before solving.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationData {
    left_points: Vec<C64>,
    left_values: Vec<C64>,
    right_points: Vec<C64>,
    right_values: Vec<C64>,
    conjugate_closed: bool,
}

impl InterpolationData {
    pub fn new(
        left_points: Vec<C64>,
        left_values: Vec<C64>,
        right_points: Vec<C64>,
        right_values: Vec<C64>,
    ) -> Result<Self> {
        let r = left_points.len();
        if r == 0 {
            return Err(Error::InvalidData("interpolation data needs at least one point per side".into()));
        }
        if left_values.len() != r || right_points.len() != r || right_values.len() != r {
            return Err(Error::DimensionMismatch(format!(
                "left and right sets must both hold {r} points and values"
            )));
        }
        let all = left_points.iter().chain(&left_values).chain(&right_points).chain(&right_values);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("interpolation data must be finite".into()));
        }
        let conjugate_closed = ConjugationPattern::detect(&left_points).is_some()
            && ConjugationPattern::detect(&right_points).is_some();
        Ok(InterpolationData { left_points, left_values, right_points, right_values, conjugate_closed })
    }

    pub fn order(&self) -> usize {
        self.left_points.len()
    }
    pub fn left_points(&self) -> &[C64] {
        &self.left_points
    }
    pub fn left_values(&self) -> &[C64] {
        &self.left_values
    }
    pub fn right_points(&self) -> &[C64] {
        &self.right_points
    }
    pub fn right_values(&self) -> &[C64] {
        &self.right_values
    }

    /// Both sets closed under conjugation with partners stored next to each other.
    pub fn is_conjugate_closed(&self) -> bool {
        self.conjugate_closed
    }

    /// Applies `perm` (new position -> old index) to the right set.
    pub fn permute_right(&self, perm: &[usize]) -> Result<Self> {
        InterpolationData::new(
            self.left_points.clone(),
            self.left_values.clone(),
            perm.iter().map(|&k| self.right_points[k]).collect(),
            perm.iter().map(|&k| self.right_values[k]).collect(),
        )
    }

    /// All `2r` points and values, left set first.
    pub fn all_conditions(&self) -> impl Iterator<Item = (C64, C64)> + '_ {
        self.left_points
            .iter()
            .zip(&self.left_values)
            .chain(self.right_points.iter().zip(&self.right_values))
            .map(|(p, v)| (*p, *v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DividedDifferenceMatrix {
    matrix: CMatrix,
    method: Method,
    cond_estimate: f64,
}

impl DividedDifferenceMatrix {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
    pub fn method(&self) -> Method {
        self.method
    }
    pub fn cond_estimate(&self) -> f64 {
        self.cond_estimate
    }
}

fn vanishes(a: C64, b: C64) -> bool {
    a == b || (a - b).norm() <= NODE_TOL * a.norm().max(b.norm())
}

fn check_support(method: Method, r: usize, support: Option<&[C64]>) -> Result<()> {
    match (method.needs_support(), support) {
        (true, Some(sp)) if sp.len() == r => Ok(()),
        (true, Some(sp)) => Err(Error::DimensionMismatch(format!("support has length {}, expected {r}", sp.len()))),
        (true, None) => Err(Error::InvalidData(format!("{method} needs support points"))),
        (false, Some(_)) => Err(Error::InvalidData(format!("{method} takes no support points"))),
        (false, None) => Ok(()),
    }
}

fn check_nonzero_left(data: &InterpolationData) -> Result<()> {
    match data.left_points.iter().position(|l| *l == linalg::ZERO) {
        Some(index) => Err(Error::ZeroInterpolationPoint { index }),
        None => Ok(()),
    }
}

pub fn build_divided_difference_matrix(
    method: Method,
    data: &InterpolationData,
    support: Option<&[C64]>,
) -> Result<DividedDifferenceMatrix> {
    let r = data.order();
    check_support(method, r, support)?;
    if method == Method::DampingConstrained {
        check_nonzero_left(data)?;
    }
    let (lam, h, mu, g) = (&data.left_points, &data.left_values, &data.right_points, &data.right_values);
    let mut matrix = CMatrix::zeros(r, r);
    for j in 0..r {
        for i in 0..r {
            if vanishes(mu[j], lam[i]) {
                return Err(Error::DegenerateKernel { row: j, col: i, reason: "mu_j equals lambda_i".into() });
            }
            matrix[(j, i)] = match method {
                Method::FirstOrder => (h[i] - g[j]) / (mu[j] - lam[i]),
                Method::StiffnessConstrained | Method::DampingConstrained => {
                    let sp = support.expect("checked")[i];
                    if vanishes(mu[j], sp) {
                        return Err(Error::DegenerateKernel {
                            row: j,
                            col: i,
                            reason: "mu_j equals the support point of column i".into(),
                        });
                    }
                    let numerator = if method == Method::DampingConstrained {
                        h[i] - mu[j] * g[j] / lam[i]
                    } else {
                        h[i] - g[j]
                    };
                    numerator / ((mu[j] - lam[i]) * (mu[j] - sp))
                }
                Method::ZeroDamping => {
                    let (m2, l2) = (mu[j] * mu[j], lam[i] * lam[i]);
                    if vanishes(m2, l2) {
                        return Err(Error::DegenerateKernel { row: j, col: i, reason: "mu_j^2 equals lambda_i^2".into() });
                    }
                    (h[i] - g[j]) / (m2 - l2)
                }
            };
        }
    }
    let cond_estimate = Lu::new(&matrix).cond_estimate();
    Ok(DividedDifferenceMatrix { matrix, method, cond_estimate })
}

fn solve_checked(matrix: &CMatrix, rhs: &CVector, cond: f64) -> Result<CVector> {
    let lu = Lu::new(matrix);
    let pivot = lu.min_pivot();
    let norm = lu.norm1();
    if !(pivot > RANK_TOL * norm) {
        return Err(Error::SingularLoewner { pivot, norm });
    }
    if cond > COND_WARNING {
        warn!("divided-difference matrix is ill-conditioned (condition estimate {cond:.3e})");
    }
    let w = lu.solve(rhs);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularLoewner { pivot, norm });
    }
    Ok(w)
}

/// Solves `L w = g` by pivoted LU.
pub fn solve_weights(l: &DividedDifferenceMatrix, g: &[C64]) -> Result<Vec<C64>> {
    let r = l.matrix.nrows();
    if g.len() != r {
        return Err(Error::DimensionMismatch(format!("right-hand side has length {}, expected {r}", g.len())));
    }
    let w = solve_checked(&l.matrix, &CVector::from_column_slice(g), l.cond_estimate)?;
    Ok(w.iter().copied().collect())
}

/// Weight solve for conjugation-closed data.
///
/// The system is transformed with the block unitaries of both patterns,
/// which makes it real; the weights come back with exact conjugate
/// symmetry, so the realified model carries no solve-induced imaginary
/// residue.
pub fn solve_weights_conjugate(
    l: &DividedDifferenceMatrix,
    g: &[C64],
    left: &ConjugationPattern,
    right: &ConjugationPattern,
) -> Result<Vec<C64>> {
    let r = l.matrix.nrows();
    if g.len() != r || left.len() != r || right.len() != r {
        return Err(Error::DimensionMismatch("patterns and right-hand side must match the matrix".into()));
    }
    let pl = realify::transform_matrix(left);
    let pr = realify::transform_matrix(right);
    let drop_imag = |v: &mut C64| *v = C64::new(v.re, 0.0);
    let mut lt = pr.adjoint() * &l.matrix * &pl;
    lt.apply(drop_imag);
    let mut gt = pr.adjoint() * CVector::from_column_slice(g);
    gt.apply(drop_imag);
    let wt = solve_checked(&lt, &gt, l.cond_estimate)?;
    Ok((pl * wt).iter().copied().collect())
}

/// Assembles the second-order (or first-order) realization of a form.
pub fn realize(method: Method, nodes: &[C64], values: &[C64], weights: &[C64], support: Option<&[C64]>) -> Result<Model> {
    let r = nodes.len();
    if values.len() != r || weights.len() != r {
        return Err(Error::DimensionMismatch(format!("nodes, values and weights must have length {r}")));
    }
    check_support(method, r, support)?;
    let wmax = linalg::max_abs(weights.iter().copied());
    if let Some(i) = weights.iter().position(|w| w.norm() < 1e-14 * wmax || *w == linalg::ZERO) {
        warn!("weight {i} is numerically zero; interpolation at lambda_{i} is not guaranteed");
    }
    let b = CVector::from_column_slice(weights);
    let c = CVector::from_column_slice(values);
    let ones = CVector::from_element(r, ONE);
    let lambda = linalg::diag(nodes);
    let identity = CMatrix::identity(r, r);
    let model: Model = match method {
        Method::StiffnessConstrained => {
            let sigma = linalg::diag(support.expect("checked"));
            let d = -(&lambda + &sigma);
            let k = &b * ones.transpose() + &lambda * &sigma;
            SecondOrderModel::new(identity, d, k, b, c)?.into()
        }
        Method::DampingConstrained => {
            if let Some(index) = nodes.iter().position(|l| *l == linalg::ZERO) {
                return Err(Error::ZeroInterpolationPoint { index });
            }
            let theta = linalg::diag(support.expect("checked"));
            let f = CVector::from_iterator(r, nodes.iter().map(|l| ONE / l));
            let d = &b * f.transpose() - &lambda - &theta;
            let k = &theta * &lambda;
            SecondOrderModel::new(identity, d, k, b, c)?.into()
        }
        Method::ZeroDamping => {
            let k = &b * ones.transpose() - &lambda * &lambda;
            SecondOrderModel::new(identity, CMatrix::zeros(r, r), k, b, c)?.into()
        }
        Method::FirstOrder => {
            let a = &lambda - &b * ones.transpose();
            FirstOrderModel::new(a, b, c)?.into()
        }
    };
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Return a real realization (requires conjugation-closed data, or data that already yields a real model).
    pub realify: bool,
    /// Run the assumption checker and refuse to fit on hard findings.
    pub check_assumptions: bool,
    /// Relative bound for imaginary residue in realified models.
    pub realness_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { realify: false, check_assumptions: true, realness_tol: REALNESS_TOL }
    }
}

/// Everything produced by one fit.
#[derive(Debug, Clone)]
pub struct Fit {
    pub model: Model,
    pub form: StructuredBarycentricForm,
    pub report: FitReport,
    /// Data in the order used for the fit (conjugate pairs adjacent when realified).
    pub data: InterpolationData,
    pub support: Option<Vec<C64>>,
    pub assumptions: AssumptionReport,
}

/// Build, solve and realize in one go.
pub fn fit(method: Method, data: &InterpolationData, support: Option<&[C64]>, options: &FitOptions) -> Result<Fit> {
    let r = data.order();
    if method == Method::DampingConstrained {
        check_nonzero_left(data)?;
    }
    check_support(method, r, support)?;
    let assumptions = heuristics::check_assumptions(method, data, support);
    if options.check_assumptions && assumptions.has_hard() {
        return Err(Error::AssumptionViolation(assumptions));
    }

    let mut warnings = Vec::new();
    let sorted = if options.realify {
        match realify::sort_conjugate_closed(data, support) {
            Ok(sorted) if sorted.left.has_pairs() || sorted.right.has_pairs() => Some(sorted),
            Ok(_) | Err(Error::NotConjugationClosed { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    let (data, support) = match &sorted {
        Some(s) => (s.data.clone(), s.support.clone()),
        None => (data.clone(), support.map(<[C64]>::to_vec)),
    };
    let l = build_divided_difference_matrix(method, &data, support.as_deref())?;
    if l.cond_estimate > COND_WARNING {
        warnings.push(format!("divided-difference condition estimate {:.3e}", l.cond_estimate));
    }
    let weights = match &sorted {
        Some(s) => solve_weights_conjugate(&l, data.right_values(), &s.left, &s.right)?,
        None => solve_weights(&l, data.right_values())?,
    };
    let wmax = linalg::max_abs(weights.iter().copied());
    for (i, w) in weights.iter().enumerate() {
        if w.norm() < 1e-14 * wmax || *w == linalg::ZERO {
            warnings.push(format!("weight {i} is numerically zero"));
        }
    }
    let form = StructuredBarycentricForm::new(
        method,
        data.left_points().to_vec(),
        data.left_values().to_vec(),
        weights.clone(),
        support.clone(),
    )?;
    let mut model = realize(method, data.left_points(), data.left_values(), &weights, support.as_deref())?;
    if options.realify {
        model = match &sorted {
            Some(s) => realify::real_transform(&model, &s.left, options.realness_tol)?,
            None => realify::require_real(&model, options.realness_tol)?,
        };
    }
    let mut report = FitReport::new(method, &model, &data, l.cond_estimate)?;
    report.warnings.extend(warnings);
    report.warnings.extend(assumptions.findings().iter().map(|f| f.to_string()));
    Ok(Fit { model, form, report, data, support, assumptions })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn worked() -> InterpolationData {
        InterpolationData::new(vec![c(1.0)], vec![c(2.0)], vec![c(3.0)], vec![c(1.0)]).unwrap()
    }

    fn entry(m: &DividedDifferenceMatrix) -> C64 {
        m.matrix()[(0, 0)]
    }

    #[test]
    fn scalar_divided_differences() {
        let d = worked();
        let k = build_divided_difference_matrix(Method::StiffnessConstrained, &d, Some(&[c(-1.0)])).unwrap();
        assert!((entry(&k) - c(0.125)).norm() < 1e-16);
        let kd0 = build_divided_difference_matrix(Method::ZeroDamping, &d, None).unwrap();
        assert!((entry(&kd0) - c(0.125)).norm() < 1e-16);
        let dd = build_divided_difference_matrix(Method::DampingConstrained, &d, Some(&[c(2.0)])).unwrap();
        assert!((entry(&dd) - c(-0.5)).norm() < 1e-16);
        let fo = build_divided_difference_matrix(Method::FirstOrder, &d, None).unwrap();
        assert!((entry(&fo) - c(0.5)).norm() < 1e-16);
    }

    #[test]
    fn degenerate_kernel_names_pair() {
        let d = worked();
        let err = build_divided_difference_matrix(Method::StiffnessConstrained, &d, Some(&[c(3.0)])).unwrap_err();
        assert!(matches!(err, Error::DegenerateKernel { row: 0, col: 0, .. }));
        let d = InterpolationData::new(vec![c(1.0)], vec![c(2.0)], vec![c(-1.0)], vec![c(1.0)]).unwrap();
        let err = build_divided_difference_matrix(Method::ZeroDamping, &d, None).unwrap_err();
        assert!(matches!(err, Error::DegenerateKernel { .. }));
    }

    #[test]
    fn scalar_weight_solves() {
        let d = worked();
        let k = build_divided_difference_matrix(Method::StiffnessConstrained, &d, Some(&[c(-1.0)])).unwrap();
        assert!((solve_weights(&k, &[c(1.0)]).unwrap()[0] - c(8.0)).norm() < 1e-14);
        let dd = build_divided_difference_matrix(Method::DampingConstrained, &d, Some(&[c(2.0)])).unwrap();
        assert!((solve_weights(&dd, &[c(1.0)]).unwrap()[0] - c(-2.0)).norm() < 1e-14);
    }

    #[test]
    fn identity_system_returns_rhs() {
        let l = DividedDifferenceMatrix { matrix: CMatrix::identity(3, 3), method: Method::FirstOrder, cond_estimate: 1.0 };
        let g = vec![c(1.0), C64::new(0.0, 2.0), c(-3.0)];
        assert_eq!(solve_weights(&l, &g).unwrap(), g);
    }

    #[test]
    fn singular_system_rejected() {
        let l = DividedDifferenceMatrix { matrix: CMatrix::from_element(2, 2, ONE), method: Method::FirstOrder, cond_estimate: f64::INFINITY };
        assert!(matches!(solve_weights(&l, &[c(1.0), c(1.0)]), Err(Error::SingularLoewner { .. })));
    }

    #[test]
    fn scalar_realizations() {
        let m = realize(Method::StiffnessConstrained, &[c(1.0)], &[c(2.0)], &[c(8.0)], Some(&[c(-1.0)])).unwrap();
        let so = m.as_second_order().unwrap();
        assert_eq!(so.damping()[(0, 0)], c(0.0));
        assert_eq!(so.stiffness()[(0, 0)], c(7.0));
        assert!((m.eval(c(3.0)).unwrap() - c(1.0)).norm() < 1e-15);

        let m = realize(Method::DampingConstrained, &[c(1.0)], &[c(2.0)], &[c(-2.0)], Some(&[c(2.0)])).unwrap();
        let so = m.as_second_order().unwrap();
        assert_eq!(so.damping()[(0, 0)], c(-5.0));
        assert_eq!(so.stiffness()[(0, 0)], c(2.0));
        assert!((m.eval(c(1.0)).unwrap() - c(2.0)).norm() < 1e-15);
        assert!((m.eval(c(3.0)).unwrap() - c(1.0)).norm() < 1e-15);

        let m = realize(Method::ZeroDamping, &[c(1.0)], &[c(2.0)], &[c(8.0)], None).unwrap();
        assert_eq!(m.as_second_order().unwrap().stiffness()[(0, 0)], c(7.0));

        let m = realize(Method::FirstOrder, &[c(1.0)], &[c(2.0)], &[c(2.0)], None).unwrap();
        assert_eq!(m.as_first_order().unwrap().state()[(0, 0)], c(-1.0));

        let err = realize(Method::DampingConstrained, &[c(0.0)], &[c(2.0)], &[c(1.0)], Some(&[c(2.0)])).unwrap_err();
        assert!(matches!(err, Error::ZeroInterpolationPoint { index: 0 }));
    }

    #[test]
    fn fit_worked_example() {
        let d = worked();
        let fit = fit(Method::StiffnessConstrained, &d, Some(&[c(-1.0)]), &FitOptions::default()).unwrap();
        assert!(fit.report.residuals.iter().all(|r| r.norm() <= 1e-14));
        let so = fit.model.as_second_order().unwrap();
        assert_eq!(so.input()[0], c(8.0));
        assert!(fit.report.warnings.is_empty());
    }

    #[test]
    fn fit_zero_point_for_damping_constrained() {
        let d = InterpolationData::new(vec![c(0.0)], vec![c(2.0)], vec![c(3.0)], vec![c(1.0)]).unwrap();
        let err = fit(Method::DampingConstrained, &d, Some(&[c(2.0)]), &FitOptions::default()).unwrap_err();
        assert!(matches!(err, Error::ZeroInterpolationPoint { index: 0 }));
    }

    #[test]
    fn conjugate_solve_matches_plain_solve() {
        let i = C64::new(0.0, 1.0);
        let lam = vec![i * 1.0, -i * 1.0, i * 3.0, -i * 3.0];
        let mu = vec![i * 2.0, -i * 2.0, i * 4.0, -i * 4.0];
        let h_of = |s: C64| ONE / (s * s + s * 0.1 + 2.5);
        let data = InterpolationData::new(
            lam.clone(),
            lam.iter().map(|s| h_of(*s)).collect(),
            mu.clone(),
            mu.iter().map(|s| h_of(*s)).collect(),
        )
        .unwrap();
        let support: Vec<C64> = lam.iter().map(|l| C64::new(-1.0, -l.im)).collect();
        let l = build_divided_difference_matrix(Method::StiffnessConstrained, &data, Some(&support)).unwrap();
        let plain = solve_weights(&l, data.right_values()).unwrap();
        let pat_l = ConjugationPattern::detect(&lam).unwrap();
        let pat_r = ConjugationPattern::detect(&mu).unwrap();
        let sym = solve_weights_conjugate(&l, data.right_values(), &pat_l, &pat_r).unwrap();
        for (a, b) in plain.iter().zip(&sym) {
            assert!(linalg::rel_diff(*a, *b) < 1e-10);
        }
        assert_eq!(sym[1], sym[0].conj());
    }
}
