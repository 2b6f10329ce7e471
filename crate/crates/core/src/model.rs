//! State-space model types, transfer-function evaluation and poles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, Lu, C64, ONE, ZERO};

/// Condition-estimate threshold above which a pencil solve is treated as a pole hit.
pub const POLE_GUARD: f64 = 1e12;

/// Default relative bound on imaginary parts for a model to count as real.
pub const REALNESS_TOL: f64 = 1e-12;

/// Eigenvalues larger than this in magnitude are reported as numerically infinite.
pub const INFINITE_POLE: f64 = 1e14;

/// Half-width of the band around the imaginary axis classified as marginal.
pub const STABILITY_DEADBAND: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Structure {
    Zero,
    Identity,
    Diagonal,
    Dense,
}

impl Structure {
    pub fn detect(a: &CMatrix) -> Self {
        let n = a.nrows();
        let mut off_diag_zero = true;
        for i in 0..n {
            for j in 0..n {
                if i != j && a[(i, j)] != ZERO {
                    off_diag_zero = false;
                }
            }
        }
        if !off_diag_zero {
            return Structure::Dense;
        }
        if (0..n).all(|i| a[(i, i)] == ZERO) {
            Structure::Zero
        } else if (0..n).all(|i| a[(i, i)] == ONE) {
            Structure::Identity
        } else {
            Structure::Diagonal
        }
    }
}

fn is_real_within(tol: f64, parts: &[&[C64]]) -> bool {
    let all = || parts.iter().flat_map(|p| p.iter().copied());
    let scale = linalg::max_abs(all());
    linalg::max_imag(all()) <= tol * scale
}

/// Condition of a pencil value measured against its coefficient norms.
///
/// Using the norm of the assembled pencil alone would call every nonzero
/// scalar perfectly conditioned, so a `1x1` model could never report a pole.
fn pencil_condition(lu: &Lu, coefficient_scale: f64) -> f64 {
    let scale = lu.norm1().max(coefficient_scale);
    if scale == 0.0 {
        return f64::INFINITY;
    }
    scale * lu.inverse_norm1_estimate()
}

/// Second-order model `s^2 M + s D + K` with input `b` and output `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderModel {
    mass: CMatrix,
    damping: CMatrix,
    stiffness: CMatrix,
    input: CVector,
    output: CVector,
    tags: [Structure; 3],
    real: bool,
}

impl SecondOrderModel {
    pub fn new(mass: CMatrix, damping: CMatrix, stiffness: CMatrix, input: CVector, output: CVector) -> Result<Self> {
        let r = mass.nrows();
        if r == 0 {
            return Err(Error::DimensionMismatch("model order must be positive".into()));
        }
        for (name, m) in [("M", &mass), ("D", &damping), ("K", &stiffness)] {
            if m.nrows() != r || m.ncols() != r {
                return Err(Error::DimensionMismatch(format!("{name} must be {r}x{r}")));
            }
        }
        if input.len() != r || output.len() != r {
            return Err(Error::DimensionMismatch(format!("b and c must have length {r}")));
        }
        let cond = Lu::new(&mass).cond_estimate();
        if !(cond <= POLE_GUARD) {
            return Err(Error::SingularMass { cond });
        }
        let tags = [Structure::detect(&mass), Structure::detect(&damping), Structure::detect(&stiffness)];
        let mut model = SecondOrderModel { mass, damping, stiffness, input, output, tags, real: false };
        model.real = model.realness_within(REALNESS_TOL);
        Ok(model)
    }

    fn realness_within(&self, tol: f64) -> bool {
        is_real_within(
            tol,
            &[
                self.mass.as_slice(),
                self.damping.as_slice(),
                self.stiffness.as_slice(),
                self.input.as_slice(),
                self.output.as_slice(),
            ],
        )
    }

    /// Recomputes the realness flag with a caller-chosen relative tolerance.
    pub fn with_realness_tolerance(mut self, tol: f64) -> Self {
        self.real = self.realness_within(tol);
        self
    }

    /// Drops imaginary parts. Callers must have checked they are negligible.
    pub(crate) fn into_real(mut self) -> Self {
        for m in [&mut self.mass, &mut self.damping, &mut self.stiffness] {
            m.apply(|v| *v = C64::new(v.re, 0.0));
        }
        for v in [&mut self.input, &mut self.output] {
            v.apply(|x| *x = C64::new(x.re, 0.0));
        }
        self.tags = [Structure::detect(&self.mass), Structure::detect(&self.damping), Structure::detect(&self.stiffness)];
        self.real = true;
        self
    }

    pub fn order(&self) -> usize {
        self.mass.nrows()
    }
    pub fn mass(&self) -> &CMatrix {
        &self.mass
    }
    pub fn damping(&self) -> &CMatrix {
        &self.damping
    }
    pub fn stiffness(&self) -> &CMatrix {
        &self.stiffness
    }
    pub fn input(&self) -> &CVector {
        &self.input
    }
    pub fn output(&self) -> &CVector {
        &self.output
    }
    pub fn mass_structure(&self) -> Structure {
        self.tags[0]
    }
    pub fn damping_structure(&self) -> Structure {
        self.tags[1]
    }
    pub fn stiffness_structure(&self) -> Structure {
        self.tags[2]
    }
    pub fn is_real(&self) -> bool {
        self.real
    }

    /// `c^T (s^2 M + s D + K)^{-1} b` through one pivoted solve.
    pub fn eval(&self, s: C64) -> Result<C64> {
        let pencil = &self.mass * (s * s) + &self.damping * s + &self.stiffness;
        let lu = Lu::new(&pencil);
        let scale = s.norm_sqr() * linalg::norm1(&self.mass)
            + s.norm() * linalg::norm1(&self.damping)
            + linalg::norm1(&self.stiffness);
        let cond = pencil_condition(&lu, scale);
        if !(cond <= POLE_GUARD) {
            return Err(Error::NearPole { s, cond });
        }
        let x = lu.solve(&self.input);
        Ok(linalg::dot_t(&self.output, &x))
    }

    /// Eigenvalues of the companion pencil `([[I,0],[0,M]], [[0,I],[-K,-D]])`.
    pub fn poles(&self) -> Result<PoleSet> {
        let r = self.order();
        let lu = Lu::new(&self.mass);
        let cond = lu.cond_estimate();
        if !(cond <= POLE_GUARD) {
            return Err(Error::SingularMass { cond });
        }
        let solve_cols = |a: &CMatrix| {
            let mut out = CMatrix::zeros(r, r);
            for j in 0..r {
                out.set_column(j, &lu.solve(&a.column(j).into_owned()));
            }
            out
        };
        let mk = solve_cols(&self.stiffness);
        let md = solve_cols(&self.damping);
        // Substituting s = alpha t balances the companion blocks; stiffness
        // entries scale like frequency squared and would otherwise dominate.
        let alpha = [linalg::norm1(&mk).sqrt(), linalg::norm1(&md), 1.0]
            .into_iter()
            .find(|a| *a > 0.0 && a.is_finite())
            .unwrap_or(1.0);
        let mut a = CMatrix::zeros(2 * r, 2 * r);
        for i in 0..r {
            a[(i, r + i)] = ONE;
            for j in 0..r {
                a[(r + i, j)] = -mk[(i, j)] / (alpha * alpha);
                a[(r + i, r + j)] = -md[(i, j)] / alpha;
            }
        }
        let poles = linalg::eigenvalues(&a)
            .ok_or_else(|| Error::InvalidData("eigenvalue iteration did not converge".into()))?;
        Ok(PoleSet::new(poles.into_iter().map(|t| t * alpha).collect()))
    }
}

/// First-order model `c^T (s I - A)^{-1} b`; the descriptor matrix is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderModel {
    state: CMatrix,
    input: CVector,
    output: CVector,
    real: bool,
}

impl FirstOrderModel {
    pub fn new(state: CMatrix, input: CVector, output: CVector) -> Result<Self> {
        let r = state.nrows();
        if r == 0 || state.ncols() != r {
            return Err(Error::DimensionMismatch("A must be square with positive order".into()));
        }
        if input.len() != r || output.len() != r {
            return Err(Error::DimensionMismatch(format!("b and c must have length {r}")));
        }
        let mut model = FirstOrderModel { state, input, output, real: false };
        model.real = model.realness_within(REALNESS_TOL);
        Ok(model)
    }

    fn realness_within(&self, tol: f64) -> bool {
        is_real_within(tol, &[self.state.as_slice(), self.input.as_slice(), self.output.as_slice()])
    }

    pub fn with_realness_tolerance(mut self, tol: f64) -> Self {
        self.real = self.realness_within(tol);
        self
    }

    pub(crate) fn into_real(mut self) -> Self {
        self.state.apply(|v| *v = C64::new(v.re, 0.0));
        for v in [&mut self.input, &mut self.output] {
            v.apply(|x| *x = C64::new(x.re, 0.0));
        }
        self.real = true;
        self
    }

    pub fn order(&self) -> usize {
        self.state.nrows()
    }
    pub fn descriptor(&self) -> CMatrix {
        CMatrix::identity(self.order(), self.order())
    }
    pub fn state(&self) -> &CMatrix {
        &self.state
    }
    pub fn input(&self) -> &CVector {
        &self.input
    }
    pub fn output(&self) -> &CVector {
        &self.output
    }
    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn eval(&self, s: C64) -> Result<C64> {
        let r = self.order();
        let pencil = CMatrix::identity(r, r) * s - &self.state;
        let lu = Lu::new(&pencil);
        let cond = pencil_condition(&lu, s.norm() + linalg::norm1(&self.state));
        if !(cond <= POLE_GUARD) {
            return Err(Error::NearPole { s, cond });
        }
        Ok(linalg::dot_t(&self.output, &lu.solve(&self.input)))
    }

    pub fn poles(&self) -> Result<PoleSet> {
        let poles = linalg::eigenvalues(&self.state)
            .ok_or_else(|| Error::InvalidData("eigenvalue iteration did not converge".into()))?;
        Ok(PoleSet::new(poles))
    }
}

/// Either kind of fitted realization.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    SecondOrder(SecondOrderModel),
    FirstOrder(FirstOrderModel),
}

impl Model {
    pub fn eval(&self, s: C64) -> Result<C64> {
        match self {
            Model::SecondOrder(m) => m.eval(s),
            Model::FirstOrder(m) => m.eval(s),
        }
    }

    pub fn poles(&self) -> Result<PoleSet> {
        match self {
            Model::SecondOrder(m) => m.poles(),
            Model::FirstOrder(m) => m.poles(),
        }
    }

    pub fn order(&self) -> usize {
        match self {
            Model::SecondOrder(m) => m.order(),
            Model::FirstOrder(m) => m.order(),
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            Model::SecondOrder(m) => m.is_real(),
            Model::FirstOrder(m) => m.is_real(),
        }
    }

    pub fn as_second_order(&self) -> Option<&SecondOrderModel> {
        match self {
            Model::SecondOrder(m) => Some(m),
            Model::FirstOrder(_) => None,
        }
    }

    pub fn as_first_order(&self) -> Option<&FirstOrderModel> {
        match self {
            Model::FirstOrder(m) => Some(m),
            Model::SecondOrder(_) => None,
        }
    }
}

impl From<SecondOrderModel> for Model {
    fn from(m: SecondOrderModel) -> Self {
        Model::SecondOrder(m)
    }
}

impl From<FirstOrderModel> for Model {
    fn from(m: FirstOrderModel) -> Self {
        Model::FirstOrder(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Marginal,
    Unstable,
}

/// Unordered eigenvalues of a model pencil.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleSet {
    poles: Vec<C64>,
}

impl PoleSet {
    pub fn new(poles: Vec<C64>) -> Self {
        PoleSet { poles }
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.poles
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn classify(pole: C64) -> Stability {
        let band = STABILITY_DEADBAND * pole.norm().max(1.0);
        if pole.re.abs() <= band {
            Stability::Marginal
        } else if pole.re < 0.0 {
            Stability::Stable
        } else {
            Stability::Unstable
        }
    }

    pub fn count(&self, which: Stability) -> usize {
        self.poles.iter().filter(|p| Self::classify(**p) == which).count()
    }

    /// Poles too large to be distinguished from infinity in finite precision.
    pub fn numerically_infinite(&self) -> usize {
        self.poles.iter().filter(|p| !(p.norm() <= INFINITE_POLE)).count()
    }

    /// Largest relative distance in a greedy nearest-neighbour pairing of two pole sets.
    pub fn matching_distance(&self, other: &PoleSet) -> f64 {
        if self.len() != other.len() {
            return f64::INFINITY;
        }
        let mut unused: Vec<C64> = other.poles.clone();
        let mut worst: f64 = 0.0;
        let mut order: Vec<C64> = self.poles.clone();
        order.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap_or(std::cmp::Ordering::Equal));
        for p in order {
            let (idx, d) = unused
                .iter()
                .enumerate()
                .map(|(i, q)| (i, linalg::rel_diff(p, *q)))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            worst = worst.max(d);
            unused.swap_remove(idx);
        }
        worst
    }

    /// True when every pole has a conjugate partner within relative `tol`.
    pub fn is_conjugation_closed(&self, tol: f64) -> bool {
        let conj = PoleSet::new(self.poles.iter().map(|p| p.conj()).collect());
        self.matching_distance(&conj) <= tol
    }
}
