//! Closed-form barycentric transfer functions.
//!
//! All four forms share the quotient shape
//!
//! ```text
//!          sum_i h_i w_i k_i(s)
//! H(s) = ------------------------
//!         1 + sum_i w_i q_i(s)
//! ```
//!
//! with per-method kernels:
//!
//! | method   | `k_i(s)`                         | `q_i(s)`           |
//! |----------|----------------------------------|--------------------|
//! | `fo`     | `1 / (s - lambda_i)`             | `k_i(s)`           |
//! | `so-k`   | `1 / ((s - lambda_i)(s - sigma_i))` | `k_i(s)`        |
//! | `so-d`   | `1 / ((s - lambda_i)(s - theta_i))` | `s k_i(s) / lambda_i` |
//! | `so-kd0` | `1 / (s^2 - lambda_i^2)`         | `k_i(s)`           |
//!
//! The leading `1` in the denominator comes from the rank-one update of the
//! realization and is kept for the first-order form as well.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, Lu, C64, ONE};
use crate::model::POLE_GUARD;

/// Relative distance below which an evaluation point is treated as sitting on a node.
pub const NODE_TOL: f64 = 1e-14;

/// Relative threshold for a vanishing barycentric denominator.
pub const DENOMINATOR_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Unstructured first-order barycentric Loewner baseline.
    #[serde(rename = "fo")]
    FirstOrder,
    /// Stiffness constrained by the interpolation conditions; support points fix the damping.
    #[serde(rename = "so-k")]
    StiffnessConstrained,
    /// Damping constrained by the interpolation conditions; support points fix the stiffness.
    #[serde(rename = "so-d")]
    DampingConstrained,
    /// Zero damping matrix.
    #[serde(rename = "so-kd0")]
    ZeroDamping,
}

impl Method {
    pub const ALL: [Method; 4] =
        [Method::StiffnessConstrained, Method::DampingConstrained, Method::ZeroDamping, Method::FirstOrder];

    pub fn tag(self) -> &'static str {
        match self {
            Method::FirstOrder => "fo",
            Method::StiffnessConstrained => "so-k",
            Method::DampingConstrained => "so-d",
            Method::ZeroDamping => "so-kd0",
        }
    }

    pub fn needs_support(self) -> bool {
        matches!(self, Method::StiffnessConstrained | Method::DampingConstrained)
    }

    pub fn is_second_order(self) -> bool {
        !matches!(self, Method::FirstOrder)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fo" => Ok(Method::FirstOrder),
            "so-k" => Ok(Method::StiffnessConstrained),
            "so-d" => Ok(Method::DampingConstrained),
            "so-kd0" => Ok(Method::ZeroDamping),
            other => Err(Error::InvalidForm(format!("unknown method tag {other:?}"))),
        }
    }
}

/// Nodes, values, weights and (for `so-k`/`so-d`) support points of a barycentric form.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredBarycentricForm {
    method: Method,
    nodes: Vec<C64>,
    values: Vec<C64>,
    weights: Vec<C64>,
    support: Option<Vec<C64>>,
}

impl StructuredBarycentricForm {
    pub fn new(
        method: Method,
        nodes: Vec<C64>,
        values: Vec<C64>,
        weights: Vec<C64>,
        support: Option<Vec<C64>>,
    ) -> Result<Self> {
        let r = nodes.len();
        if r == 0 {
            return Err(Error::InvalidForm("a form needs at least one node".into()));
        }
        if values.len() != r || weights.len() != r {
            return Err(Error::DimensionMismatch(format!("nodes, values and weights must all have length {r}")));
        }
        match (&support, method.needs_support()) {
            (Some(sp), true) if sp.len() != r => {
                return Err(Error::DimensionMismatch(format!("support must have length {r}")));
            }
            (None, true) => return Err(Error::InvalidForm(format!("{method} needs support points"))),
            (Some(_), false) => return Err(Error::InvalidForm(format!("{method} takes no support points"))),
            _ => {}
        }
        for i in 0..r {
            for k in (i + 1)..r {
                if nodes[i] == nodes[k] {
                    return Err(Error::InvalidForm(format!("nodes {i} and {k} coincide")));
                }
                if method == Method::ZeroDamping && nodes[i] + nodes[k] == linalg::ZERO {
                    return Err(Error::InvalidForm(format!("nodes {i} and {k} are negatives of each other")));
                }
            }
        }
        if let Some(i) = weights.iter().position(|w| *w == linalg::ZERO) {
            return Err(Error::InvalidForm(format!("weight {i} is zero")));
        }
        if method == Method::DampingConstrained {
            if let Some(i) = nodes.iter().position(|l| *l == linalg::ZERO) {
                return Err(Error::ZeroInterpolationPoint { index: i });
            }
        }
        Ok(StructuredBarycentricForm { method, nodes, values, weights, support })
    }

    pub fn method(&self) -> Method {
        self.method
    }
    pub fn order(&self) -> usize {
        self.nodes.len()
    }
    pub fn nodes(&self) -> &[C64] {
        &self.nodes
    }
    pub fn values(&self) -> &[C64] {
        &self.values
    }
    pub fn weights(&self) -> &[C64] {
        &self.weights
    }
    pub fn support(&self) -> Option<&[C64]> {
        self.support.as_deref()
    }

    /// `delta_i = -(lambda_i + sigma_i)` for the stiffness-constrained form.
    pub fn damping_parameters(&self) -> Option<Vec<C64>> {
        match (self.method, &self.support) {
            (Method::StiffnessConstrained, Some(sp)) => {
                Some(self.nodes.iter().zip(sp).map(|(l, s)| -(l + s)).collect())
            }
            _ => None,
        }
    }

    /// `kappa_i = theta_i lambda_i` for the damping-constrained form.
    pub fn stiffness_parameters(&self) -> Option<Vec<C64>> {
        match (self.method, &self.support) {
            (Method::DampingConstrained, Some(sp)) => Some(self.nodes.iter().zip(sp).map(|(l, t)| t * l).collect()),
            _ => None,
        }
    }

    fn matches(a: C64, b: C64) -> bool {
        a == b || (a - b).norm() <= NODE_TOL * a.norm().max(b.norm())
    }

    pub fn eval(&self, s: C64) -> Result<C64> {
        // Removable singularities at the nodes.
        if let Some(i) = self.nodes.iter().position(|l| *l == s) {
            return Ok(self.values[i]);
        }
        if let Some(i) = self.nodes.iter().position(|l| Self::matches(*l, s)) {
            return Ok(self.values[i]);
        }
        if self.method == Method::ZeroDamping {
            let s2 = s * s;
            if let Some(i) = self.nodes.iter().position(|l| Self::matches(l * l, s2)) {
                return Ok(self.values[i]);
            }
        }
        if let Some(sp) = &self.support {
            let hits: Vec<usize> = (0..sp.len()).filter(|&k| Self::matches(sp[k], s)).collect();
            if !hits.is_empty() {
                return self.eval_at_support(s, &hits);
            }
        }

        let r = self.order();
        let mut num = Vec::with_capacity(r);
        let mut den = Vec::with_capacity(r);
        for i in 0..r {
            let (l, h, w) = (self.nodes[i], self.values[i], self.weights[i]);
            let kernel = match self.method {
                Method::FirstOrder => ONE / (s - l),
                Method::StiffnessConstrained | Method::DampingConstrained => {
                    let sp = self.support.as_ref().expect("validated at construction")[i];
                    ONE / ((s - l) * (s - sp))
                }
                Method::ZeroDamping => ONE / (s * s - l * l),
            };
            num.push(h * w * kernel);
            den.push(match self.method {
                Method::DampingConstrained => s * w * kernel / l,
                _ => w * kernel,
            });
        }
        let n = linalg::pairwise_sum(&num);
        let d = ONE + linalg::pairwise_sum(&den);
        let scale = 1.0 + den.iter().map(|t| t.norm()).sum::<f64>();
        if !(d.norm() >= DENOMINATOR_TOL * scale) || !n.is_finite() {
            return Err(Error::ZeroDenominator { s, magnitude: d.norm() });
        }
        Ok(n / d)
    }

    /// Limit of the quotient at a support point shared by the indices in `hits`.
    fn eval_at_support(&self, s: C64, hits: &[usize]) -> Result<C64> {
        let mut num = Vec::with_capacity(hits.len());
        let mut den = Vec::with_capacity(hits.len());
        for &k in hits {
            let (l, h, w) = (self.nodes[k], self.values[k], self.weights[k]);
            num.push(h * w / (s - l));
            den.push(match self.method {
                Method::DampingConstrained => s * w / (l * (s - l)),
                _ => w / (s - l),
            });
        }
        let n = linalg::pairwise_sum(&num);
        let d = linalg::pairwise_sum(&den);
        let scale = den.iter().map(|t| t.norm()).sum::<f64>();
        if !(d.norm() > DENOMINATOR_TOL * scale) {
            return Err(Error::ZeroDenominator { s, magnitude: d.norm() });
        }
        Ok(n / d)
    }
}

/// `z^T (X + u v^T)^{-1} u` through the rank-one identity `z^T X^{-1} u / (1 + v^T X^{-1} u)`.
pub fn smw_scalar(x: &CMatrix, u: &CVector, v: &CVector, z: &CVector) -> Result<C64> {
    let r = x.nrows();
    if !x.is_square() || u.len() != r || v.len() != r || z.len() != r {
        return Err(Error::DimensionMismatch(format!("X must be {r}x{r} and u, v, z length {r}")));
    }
    let lu = Lu::new(x);
    let cond = lu.cond_estimate();
    if !(cond <= POLE_GUARD) {
        return Err(Error::InvalidData(format!("X is numerically singular (condition estimate {cond:.3e})")));
    }
    let xu = lu.solve(u);
    let vxu = linalg::dot_t(v, &xu);
    let denom = ONE + vxu;
    if denom.norm() < DENOMINATOR_TOL * (1.0 + vxu.norm()) {
        return Err(Error::SingularDenominator { magnitude: denom.norm() });
    }
    Ok(linalg::dot_t(z, &xu) / denom)
}
