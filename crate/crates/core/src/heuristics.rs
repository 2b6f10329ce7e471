//! Interpolation-point selection, support-point strategies and the
//! pre-fit assumption checker.

use std::fmt;

use serde::Serialize;

use crate::barycentric::Method;
use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::loewner::InterpolationData;

/// Relative tolerance for point equality in [`check_assumptions`].
pub const EQUALITY_TOL: f64 = 1e-12;

/// Default multiplier for constant-multiple support points.
pub const DEFAULT_MULTIPLIER: C64 = C64::new(-5.0, -1e-3);

/// Bounds for the automatic order.
pub const AUTO_ORDER_MIN: usize = 2;
pub const AUTO_ORDER_MAX: usize = 30;

/// One transfer-function value at a complex point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencySample {
    pub s: C64,
    pub value: C64,
}

impl FrequencySample {
    pub fn new(s: C64, value: C64) -> Self {
        FrequencySample { s, value }
    }

    /// Sample at `s = i omega`.
    pub fn on_axis(omega: f64, value: C64) -> Self {
        FrequencySample { s: C64::new(0.0, omega), value }
    }

    pub fn omega(&self) -> f64 {
        self.s.im
    }

    pub fn is_on_axis(&self) -> bool {
        self.s.re == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SupportStrategy {
    /// Every support point equals `alpha * omega_max`, where `omega_max` is
    /// the largest interpolation-point modulus. With `conjugate_pairs`,
    /// points whose left node has negative imaginary part get
    /// `conj(alpha) * omega_max`, which keeps conjugation-closed data
    /// realifiable.
    ConstantMultiple { alpha: C64, conjugate_pairs: bool },
    /// `sigma_i = rho - i Im(lambda_i)` with `rho < 0`.
    ConjugateReflected { rho: f64 },
    UserSupplied(Vec<C64>),
}

impl Default for SupportStrategy {
    fn default() -> Self {
        SupportStrategy::ConstantMultiple { alpha: DEFAULT_MULTIPLIER, conjugate_pairs: false }
    }
}

fn omega_max(data: &InterpolationData) -> f64 {
    data.left_points().iter().chain(data.right_points()).map(|p| p.norm()).fold(0.0, f64::max)
}

pub fn make_support_points(strategy: &SupportStrategy, data: &InterpolationData) -> Result<Vec<C64>> {
    let lam = data.left_points();
    match strategy {
        SupportStrategy::ConstantMultiple { alpha, conjugate_pairs } => {
            let w = omega_max(data);
            Ok(lam
                .iter()
                .map(|l| if *conjugate_pairs && l.im < 0.0 { alpha.conj() * w } else { alpha * w })
                .collect())
        }
        SupportStrategy::ConjugateReflected { rho } => {
            if !(*rho < 0.0) {
                return Err(Error::StrategyMismatch(format!("reflection offset must be negative, got {rho}")));
            }
            if let Some(l) = lam.iter().find(|l| l.re != 0.0) {
                return Err(Error::StrategyMismatch(format!("conjugate reflection needs imaginary-axis points, got {l}")));
            }
            Ok(lam.iter().map(|l| C64::new(*rho, -l.im)).collect())
        }
        SupportStrategy::UserSupplied(points) => {
            if points.len() != lam.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} support points supplied for {} interpolation points",
                    points.len(),
                    lam.len()
                )));
            }
            Ok(points.clone())
        }
    }
}

/// Stiffness-positivity recipe for the D-constrained form:
/// `theta_i = -i (Im(lambda_i) + c_i)`, which makes `kappa_i = theta_i lambda_i`
/// real and positive. Each offset must satisfy `c_i * Im(lambda_i) > 0`.
pub fn stiffness_positive_support(data: &InterpolationData, offsets: &[f64]) -> Result<Vec<C64>> {
    let lam = data.left_points();
    if offsets.len() != lam.len() {
        return Err(Error::DimensionMismatch("one offset per interpolation point is needed".into()));
    }
    lam.iter()
        .zip(offsets)
        .map(|(l, c)| {
            if l.re != 0.0 {
                return Err(Error::StrategyMismatch(format!("recipe needs imaginary-axis points, got {l}")));
            }
            if !(c * l.im > 0.0) {
                return Err(Error::StrategyMismatch(format!("offset {c} has the wrong sign for {l}")));
            }
            Ok(C64::new(0.0, -(l.im + c)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AssumptionId {
    A1_1,
    A1_2,
    A2_1,
    A2_2,
    Kd0Pairing,
    DNonzeroLambda,
}

impl fmt::Display for AssumptionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AssumptionId::A1_1 => "A1.1",
            AssumptionId::A1_2 => "A1.2",
            AssumptionId::A2_1 => "A2.1",
            AssumptionId::A2_2 => "A2.2",
            AssumptionId::Kd0Pairing => "KD0-pairing",
            AssumptionId::DNonzeroLambda => "D-nonzero-lambda",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Hard,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub assumption: AssumptionId,
    pub severity: Severity,
    pub indices: Vec<usize>,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Hard => "hard",
            Severity::Warning => "warning",
        };
        write!(f, "[{}] {sev}: {}", self.assumption, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AssumptionReport {
    findings: Vec<Finding>,
}

impl AssumptionReport {
    pub fn findings(&self) -> &[Finding] {
        &self.findings
    }
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
    pub fn has_hard(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Hard)
    }
    pub fn hard(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Hard)
    }
    fn push(&mut self, assumption: AssumptionId, severity: Severity, indices: Vec<usize>, message: String) {
        self.findings.push(Finding { assumption, severity, indices, message });
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.findings.is_empty() {
            return writeln!(f, "all assumption checks passed");
        }
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        Ok(())
    }
}

fn same(a: C64, b: C64) -> bool {
    a == b || linalg::approx_eq_rel(a, b, EQUALITY_TOL)
}

fn sums_to_zero(a: C64, b: C64) -> bool {
    let s = a + b;
    s == linalg::ZERO || s.norm() <= EQUALITY_TOL * a.norm().max(b.norm())
}

fn duplicates(report: &mut AssumptionReport, name: &str, pts: &[C64]) {
    for i in 0..pts.len() {
        for k in (i + 1)..pts.len() {
            if same(pts[i], pts[k]) {
                report.push(
                    AssumptionId::A1_2,
                    Severity::Hard,
                    vec![i, k],
                    format!("{name}[{i}] and {name}[{k}] coincide at {}", pts[i]),
                );
            }
        }
    }
}

/// Checks the distinctness and method-specific assumptions; never fails.
pub fn check_assumptions(method: Method, data: &InterpolationData, support: Option<&[C64]>) -> AssumptionReport {
    let mut report = AssumptionReport::default();
    let (lam, mu) = (data.left_points(), data.right_points());
    duplicates(&mut report, "lambda", lam);
    duplicates(&mut report, "mu", mu);
    for (i, l) in lam.iter().enumerate() {
        for (j, m) in mu.iter().enumerate() {
            if same(*l, *m) {
                report.push(
                    AssumptionId::A1_2,
                    Severity::Hard,
                    vec![i, j],
                    format!("lambda[{i}] and mu[{j}] coincide at {l}"),
                );
            }
        }
    }

    if method.needs_support() {
        let id = if method == Method::StiffnessConstrained { AssumptionId::A2_1 } else { AssumptionId::A2_2 };
        let name = if method == Method::StiffnessConstrained { "sigma" } else { "theta" };
        match support {
            None => report.push(id, Severity::Hard, vec![], format!("{method} needs support points")),
            Some(sp) if sp.len() != lam.len() => report.push(
                id,
                Severity::Hard,
                vec![],
                format!("{} support points for {} interpolation points", sp.len(), lam.len()),
            ),
            Some(sp) => {
                for (k, s) in sp.iter().enumerate() {
                    for (set, pts) in [("lambda", lam), ("mu", mu)] {
                        for (i, p) in pts.iter().enumerate() {
                            if same(*s, *p) {
                                report.push(id, Severity::Hard, vec![k, i], format!("{name}[{k}] equals {set}[{i}] = {p}"));
                            }
                        }
                    }
                }
                let hull: Vec<C64> = lam.iter().chain(mu).copied().collect();
                let inside: Vec<usize> = (0..sp.len()).filter(|&k| in_convex_hull(sp[k], &hull)).collect();
                if !inside.is_empty() {
                    report.push(
                        id,
                        Severity::Warning,
                        inside.clone(),
                        format!("{name} at indices {inside:?} lie inside the convex hull of the interpolation points"),
                    );
                }
            }
        }
    } else if support.is_some() {
        report.push(AssumptionId::A2_1, Severity::Warning, vec![], format!("{method} ignores support points"));
    }

    if method == Method::DampingConstrained {
        for (set, pts) in [("lambda", lam), ("mu", mu)] {
            for (i, p) in pts.iter().enumerate() {
                if *p == linalg::ZERO {
                    report.push(AssumptionId::DNonzeroLambda, Severity::Hard, vec![i], format!("{set}[{i}] is zero"));
                }
            }
        }
    }

    if method == Method::ZeroDamping {
        let pairs = |report: &mut AssumptionReport, a: (&str, &[C64]), b: (&str, &[C64]), same_set: bool| {
            for (i, x) in a.1.iter().enumerate() {
                for (k, y) in b.1.iter().enumerate() {
                    if (same_set && k <= i) || !sums_to_zero(*x, *y) {
                        continue;
                    }
                    report.push(
                        AssumptionId::Kd0Pairing,
                        Severity::Hard,
                        vec![i, k],
                        format!("{}[{i}] + {}[{k}] = 0; the zero-damping form cannot separate +s and -s", a.0, b.0),
                    );
                }
            }
        };
        pairs(&mut report, ("lambda", lam), ("lambda", lam), true);
        pairs(&mut report, ("mu", mu), ("lambda", lam), false);
        pairs(&mut report, ("mu", mu), ("mu", mu), true);
    }
    report
}

fn cross(o: C64, a: C64, b: C64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

/// Membership of `z` in the convex hull of `points` in the complex plane.
/// Boundary points count as inside.
pub fn in_convex_hull(z: C64, points: &[C64]) -> bool {
    if points.is_empty() {
        return false;
    }
    let scale = points.iter().map(|p| p.norm()).fold(z.norm(), f64::max).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    pts.dedup_by(|a, b| (*a - *b).norm() <= tol);
    if pts.len() == 1 {
        return (z - pts[0]).norm() <= tol;
    }
    // Andrew's monotone chain.
    let mut hull: Vec<C64> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &C64>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= tol * scale {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.len() <= 2 {
        // Collinear: test distance to the segment between the extreme points.
        let (a, b) = (pts[0], pts[pts.len() - 1]);
        let ab = b - a;
        let t = ((z - a) * ab.conj()).re / ab.norm_sqr();
        if !(-1e-12..=1.0 + 1e-12).contains(&t) {
            return false;
        }
        return (a + ab * t.clamp(0.0, 1.0) - z).norm() <= tol;
    }
    (0..hull.len()).all(|k| cross(hull[k], hull[(k + 1) % hull.len()], z) >= -tol * scale)
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    omega: f64,
    value: C64,
    /// Index into the sample list, or `None` for an inserted midpoint.
    sample: Option<usize>,
}

fn validate_samples(samples: &[FrequencySample]) -> Result<()> {
    for (k, smp) in samples.iter().enumerate() {
        if !smp.is_on_axis() || smp.omega() < 0.0 {
            return Err(Error::InvalidData(format!("sample {k} is not on the positive imaginary axis")));
        }
        if !smp.value.is_finite() {
            return Err(Error::InvalidData(format!("sample {k} has a non-finite value")));
        }
        if k > 0 && !(smp.omega() > samples[k - 1].omega()) {
            return Err(Error::InvalidData(format!("sample {k} does not increase in frequency")));
        }
    }
    Ok(())
}

fn midpoint(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        (a * b).sqrt()
    } else {
        0.5 * (a + b)
    }
}

fn gap(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        (b / a).ln()
    } else {
        f64::INFINITY
    }
}

/// Nearest sample to `omega` in log distance (linear if either side is zero); ties go low.
fn nearest_sample(samples: &[FrequencySample], lo: usize, hi: usize, omega: f64) -> usize {
    let dist = |k: usize| {
        let w = samples[k].omega();
        if w > 0.0 && omega > 0.0 {
            (w / omega).ln().abs()
        } else {
            (w - omega).abs()
        }
    };
    (lo..=hi).fold(lo, |best, k| if dist(k) < dist(best) { k } else { best })
}

/// Picks interpolation points from local extrema of `|h|` and splits them
/// alternately into left and right sets.
///
/// Candidates are the strict three-point extrema plus both endpoints. If
/// more points are needed, the largest log-frequency gap is filled first:
/// by the sample nearest its geometric midpoint when the gap holds unused
/// samples, otherwise (only between neighbouring samples) by the midpoint
/// itself with the value of the nearest sample. With `order = None` the
/// order is half the candidate count, rounded up and clamped to `[2, 30]`.
pub fn select_interpolation_points(samples: &[FrequencySample], order: Option<usize>) -> Result<InterpolationData> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!("{} samples; at least 2 are needed", samples.len())));
    }
    validate_samples(samples)?;
    let n = samples.len();
    let mag: Vec<f64> = samples.iter().map(|s| s.value.norm()).collect();
    let mut cands: Vec<Candidate> = (0..n)
        .filter(|&k| {
            k == 0
                || k == n - 1
                || (mag[k] > mag[k - 1] && mag[k] > mag[k + 1])
                || (mag[k] < mag[k - 1] && mag[k] < mag[k + 1])
        })
        .map(|k| Candidate { omega: samples[k].omega(), value: samples[k].value, sample: Some(k) })
        .collect();

    let r = match order {
        Some(0) => return Err(Error::InvalidData("order must be positive".into())),
        Some(r) => r,
        None => cands.len().div_ceil(2).clamp(AUTO_ORDER_MIN, AUTO_ORDER_MAX),
    };
    let want = 2 * r;

    while cands.len() < want {
        let mut best: Option<(f64, usize)> = None;
        for g in 0..cands.len() - 1 {
            let (a, b) = (cands[g], cands[g + 1]);
            let fillable = match (a.sample, b.sample) {
                (Some(x), Some(y)) => y > x,
                _ => false,
            };
            if fillable {
                let size = gap(a.omega, b.omega);
                if best.is_none_or(|(s, _)| size >= s) {
                    best = Some((size, g));
                }
            }
        }
        let Some((_, g)) = best else {
            return Err(Error::InsufficientData(format!(
                "only {} distinct candidates can be formed, {want} are needed",
                cands.len()
            )));
        };
        let (a, b) = (cands[g], cands[g + 1]);
        let (x, y) = (a.sample.unwrap(), b.sample.unwrap());
        let mid = midpoint(a.omega, b.omega);
        let new = if y > x + 1 {
            let k = nearest_sample(samples, x + 1, y - 1, mid);
            Candidate { omega: samples[k].omega(), value: samples[k].value, sample: Some(k) }
        } else {
            let k = nearest_sample(samples, x, y, mid);
            Candidate { omega: mid, value: samples[k].value, sample: None }
        };
        cands.insert(g + 1, new);
    }

    if cands.len() > want {
        let last = cands.len() - 1;
        let keep: Vec<usize> = (0..want).map(|k| (k * last + (want - 1) / 2) / (want - 1)).collect();
        cands = keep.iter().map(|&k| cands[k]).collect();
    }

    let (mut lp, mut lv, mut rp, mut rv) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (rank, c) in cands.iter().enumerate() {
        let s = C64::new(0.0, c.omega);
        if rank % 2 == 0 {
            lp.push(s);
            lv.push(c.value);
        } else {
            rp.push(s);
            rv.push(c.value);
        }
    }
    InterpolationData::new(lp, lv, rp, rv)
}

fn close_set(points: &[C64], values: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let (mut p, mut v) = (Vec::new(), Vec::new());
    for (x, h) in points.iter().zip(values) {
        p.push(*x);
        v.push(*h);
        if x.im != 0.0 {
            p.push(x.conj());
            v.push(h.conj());
        }
    }
    (p, v)
}

/// Adds the conjugate of every non-real point, using `H(conj s) = conj H(s)`.
///
/// Fails when the two sets end up with different sizes (a real point in
/// one set only).
pub fn close_under_conjugation(data: &InterpolationData) -> Result<InterpolationData> {
    let (lp, lv) = close_set(data.left_points(), data.left_values());
    let (rp, rv) = close_set(data.right_points(), data.right_values());
    InterpolationData::new(lp, lv, rp, rv)
}
