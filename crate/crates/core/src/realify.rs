//! Real realizations from conjugation-closed complex ones.
//!
//! The block transform is `P = diag(J_k)` with
//! `J_k = [[1, -i], [1, i]] / sqrt(2)` on each conjugate pair and `1` on
//! real points. Matrices map by the unitary similarity `P^H X P`, inputs by
//! `P^H b` and outputs by `c^T P`, so the transfer function is unchanged.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::loewner::InterpolationData;
use crate::model::{FirstOrderModel, Model, SecondOrderModel, Structure};

/// Relative tolerance for recognizing conjugate partners and real points.
pub const PAIR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    /// Indices `i` and `i + 1` hold a conjugate pair.
    Pair(usize),
    Singleton(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjugationPattern {
    blocks: Vec<Block>,
    len: usize,
}

fn is_real_point(p: C64) -> bool {
    p.im.abs() <= PAIR_TOL * p.norm()
}

fn are_conjugates(a: C64, b: C64) -> bool {
    linalg::approx_eq_rel(a, b.conj(), PAIR_TOL)
}

impl ConjugationPattern {
    /// Pattern of an already ordered point list; `None` unless every
    /// non-real point is immediately followed by its conjugate.
    pub fn detect(points: &[C64]) -> Option<Self> {
        let mut blocks = Vec::new();
        let mut i = 0;
        while i < points.len() {
            if is_real_point(points[i]) {
                blocks.push(Block::Singleton(i));
                i += 1;
            } else if i + 1 < points.len() && are_conjugates(points[i], points[i + 1]) {
                blocks.push(Block::Pair(i));
                i += 2;
            } else {
                return None;
            }
        }
        Some(ConjugationPattern { blocks, len: points.len() })
    }

    pub fn singletons(n: usize) -> Self {
        ConjugationPattern { blocks: (0..n).map(Block::Singleton).collect(), len: n }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Number of indices covered.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn has_pairs(&self) -> bool {
        self.blocks.iter().any(|b| matches!(b, Block::Pair(_)))
    }
}

/// Data reordered so conjugate partners are adjacent.
#[derive(Debug, Clone)]
pub struct SortedData {
    pub data: InterpolationData,
    pub support: Option<Vec<C64>>,
    pub left: ConjugationPattern,
    pub right: ConjugationPattern,
    /// `left_perm[new] = old` for the left set (and the support points).
    pub left_perm: Vec<usize>,
    pub right_perm: Vec<usize>,
}

/// Pairs come first in order of first appearance, positive imaginary part
/// leading; real points trail in their original order.
fn conjugate_order(points: &[C64]) -> Result<(Vec<usize>, ConjugationPattern)> {
    let n = points.len();
    let mut used = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut blocks = Vec::new();
    for i in 0..n {
        if used[i] || is_real_point(points[i]) {
            continue;
        }
        let partner = (0..n).find(|&k| k != i && !used[k] && !is_real_point(points[k]) && are_conjugates(points[i], points[k]));
        let Some(k) = partner else {
            return Err(Error::NotConjugationClosed { point: points[i] });
        };
        used[i] = true;
        used[k] = true;
        let (first, second) = if points[i].im > 0.0 { (i, k) } else { (k, i) };
        blocks.push(Block::Pair(order.len()));
        order.push(first);
        order.push(second);
    }
    for (i, _) in used.iter().enumerate().filter(|(_, u)| !**u) {
        blocks.push(Block::Singleton(order.len()));
        order.push(i);
    }
    Ok((order, ConjugationPattern { blocks, len: n }))
}

/// Reorders both sets (and the support points with the left set) into
/// conjugate-adjacent order.
pub fn sort_conjugate_closed(data: &InterpolationData, support: Option<&[C64]>) -> Result<SortedData> {
    let (left_perm, left) = conjugate_order(data.left_points())?;
    let (right_perm, right) = conjugate_order(data.right_points())?;
    let pick = |v: &[C64], perm: &[usize]| perm.iter().map(|&k| v[k]).collect::<Vec<_>>();
    let support = match support {
        Some(sp) => {
            if sp.len() != left_perm.len() {
                return Err(Error::DimensionMismatch("support length differs from the left set".into()));
            }
            let sorted = pick(sp, &left_perm);
            for b in &left.blocks {
                if let Block::Pair(i) = b {
                    if !linalg::approx_eq_rel(sorted[i + 1], sorted[*i].conj(), PAIR_TOL) {
                        return Err(Error::NotConjugationClosed { point: sorted[*i] });
                    }
                }
            }
            Some(sorted)
        }
        None => None,
    };
    let sorted = InterpolationData::new(
        pick(data.left_points(), &left_perm),
        pick(data.left_values(), &left_perm),
        pick(data.right_points(), &right_perm),
        pick(data.right_values(), &right_perm),
    )?;
    Ok(SortedData { data: sorted, support, left, right, left_perm, right_perm })
}

/// The block unitary `P` of a pattern.
pub fn transform_matrix(pattern: &ConjugationPattern) -> CMatrix {
    let mut p = CMatrix::zeros(pattern.len, pattern.len);
    let h = FRAC_1_SQRT_2;
    for b in &pattern.blocks {
        match *b {
            Block::Singleton(i) => p[(i, i)] = linalg::ONE,
            Block::Pair(i) => {
                p[(i, i)] = C64::new(h, 0.0);
                p[(i, i + 1)] = C64::new(0.0, -h);
                p[(i + 1, i)] = C64::new(h, 0.0);
                p[(i + 1, i + 1)] = C64::new(0.0, h);
            }
        }
    }
    p
}

fn check_real(part: &'static str, values: &[C64], tol: f64) -> Result<()> {
    let residue = linalg::max_imag(values.iter().copied());
    let bound = tol * linalg::max_abs(values.iter().copied());
    if residue > bound {
        return Err(Error::ResidualImaginary { part, residue, bound });
    }
    Ok(())
}

fn strip(m: CMatrix) -> CMatrix {
    m.map(|v| C64::new(v.re, 0.0))
}

fn strip_v(v: CVector) -> CVector {
    v.map(|x| C64::new(x.re, 0.0))
}

/// Keeps exact identity and zero blocks exact instead of carrying roundoff.
fn similar(x: &CMatrix, tag: Structure, p: &CMatrix) -> CMatrix {
    match tag {
        Structure::Zero | Structure::Identity => x.clone(),
        _ => p.adjoint() * x * p,
    }
}

/// Applies the block transform and stores the result as a real model.
pub fn real_transform(model: &Model, pattern: &ConjugationPattern, tol: f64) -> Result<Model> {
    if pattern.len() != model.order() {
        return Err(Error::DimensionMismatch(format!(
            "pattern covers {} indices, model order is {}",
            pattern.len(),
            model.order()
        )));
    }
    let p = transform_matrix(pattern);
    match model {
        Model::SecondOrder(m) => {
            let mass = similar(m.mass(), m.mass_structure(), &p);
            let damping = similar(m.damping(), m.damping_structure(), &p);
            let stiffness = similar(m.stiffness(), m.stiffness_structure(), &p);
            let input = p.adjoint() * m.input();
            let output = p.transpose() * m.output();
            real_second_order(mass, damping, stiffness, input, output, tol).map(Model::from)
        }
        Model::FirstOrder(m) => {
            let state = p.adjoint() * m.state() * &p;
            let input = p.adjoint() * m.input();
            let output = p.transpose() * m.output();
            real_first_order(state, input, output, tol).map(Model::from)
        }
    }
}

fn real_second_order(m: CMatrix, d: CMatrix, k: CMatrix, b: CVector, c: CVector, tol: f64) -> Result<SecondOrderModel> {
    check_real("M", m.as_slice(), tol)?;
    check_real("D", d.as_slice(), tol)?;
    check_real("K", k.as_slice(), tol)?;
    check_real("b", b.as_slice(), tol)?;
    check_real("c", c.as_slice(), tol)?;
    Ok(SecondOrderModel::new(strip(m), strip(d), strip(k), strip_v(b), strip_v(c))?.into_real())
}

fn real_first_order(a: CMatrix, b: CVector, c: CVector, tol: f64) -> Result<FirstOrderModel> {
    check_real("A", a.as_slice(), tol)?;
    check_real("b", b.as_slice(), tol)?;
    check_real("c", c.as_slice(), tol)?;
    Ok(FirstOrderModel::new(strip(a), strip_v(b), strip_v(c))?.into_real())
}

/// Realness check without a transform: succeeds only if the model already is real.
pub fn require_real(model: &Model, tol: f64) -> Result<Model> {
    match model {
        Model::SecondOrder(m) => real_second_order(
            m.mass().clone(),
            m.damping().clone(),
            m.stiffness().clone(),
            m.input().clone(),
            m.output().clone(),
            tol,
        )
        .map(Model::from),
        Model::FirstOrder(m) => {
            real_first_order(m.state().clone(), m.input().clone(), m.output().clone(), tol).map(Model::from)
        }
    }
}
