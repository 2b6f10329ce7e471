//! Dense complex kernels shared by the model, form and Loewner modules.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// LU factorization with partial (row) pivoting, `P A = L U`.
///
/// `L` is unit lower triangular and shares storage with `U`. Row `i` of
/// `P A` is row `perm[i]` of `A`. Factorization never fails; a zero pivot
/// column is skipped and reported through [`Lu::min_pivot`].
#[derive(Debug, Clone)]
pub struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
    norm1: f64,
}

impl Lu {
    pub fn new(a: &CMatrix) -> Self {
        assert!(a.is_square(), "LU needs a square matrix");
        let n = a.nrows();
        let norm1 = norm1(a);
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if p != k {
                lu.swap_rows(p, k);
                perm.swap(p, k);
            }
            if pmax == 0.0 {
                continue;
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor != ZERO {
                    for j in (k + 1)..n {
                        let ukj = lu[(k, j)];
                        lu[(i, j)] -= factor * ukj;
                    }
                }
            }
        }
        Lu { lu, perm, norm1 }
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// One-norm of the factored matrix.
    pub fn norm1(&self) -> f64 {
        self.norm1
    }

    pub fn min_pivot(&self) -> f64 {
        (0..self.dim())
            .map(|k| self.lu[(k, k)].norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &CVector) -> CVector {
        let n = self.dim();
        let mut x = CVector::from_fn(n, |i, _| b[self.perm[i]]);
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        x
    }

    /// Solves `A^H x = b`.
    pub fn solve_adjoint(&self, b: &CVector) -> CVector {
        let n = self.dim();
        let mut w = b.clone();
        // U^H t = b
        for i in 0..n {
            let mut acc = w[i];
            for j in 0..i {
                acc -= self.lu[(j, i)].conj() * w[j];
            }
            w[i] = acc / self.lu[(i, i)].conj();
        }
        // L^H w = t
        for i in (0..n).rev() {
            let mut acc = w[i];
            for j in (i + 1)..n {
                acc -= self.lu[(j, i)].conj() * w[j];
            }
            w[i] = acc;
        }
        let mut x = CVector::zeros(n);
        for i in 0..n {
            x[self.perm[i]] = w[i];
        }
        x
    }

    /// Hager–Higham estimate of `||A^-1||_1`.
    pub fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 0.0;
        }
        if self.min_pivot() == 0.0 {
            return f64::INFINITY;
        }
        let mut x = CVector::from_element(n, C64::new(1.0 / n as f64, 0.0));
        let mut estimate = 0.0;
        let mut last_j = usize::MAX;
        for iter in 0..5 {
            let y = self.solve(&x);
            let ynorm: f64 = y.iter().map(|v| v.norm()).sum();
            if !ynorm.is_finite() {
                return f64::INFINITY;
            }
            if iter > 0 && ynorm <= estimate {
                break;
            }
            estimate = ynorm;
            let xi = y.map(|v| {
                let m = v.norm();
                if m == 0.0 {
                    ONE
                } else {
                    v / m
                }
            });
            let z = self.solve_adjoint(&xi);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold((0, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            let ztx = z.iter().zip(x.iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = CVector::zeros(n);
            x[j] = ONE;
        }
        // Higham's alternating test vector guards against unlucky starts.
        let alt = CVector::from_fn(n, |i, _| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
            C64::new(sign * (1.0 + i as f64 / denom), 0.0)
        });
        let y = self.solve(&alt);
        let alt_est = 2.0 * y.iter().map(|v| v.norm()).sum::<f64>() / (3.0 * n as f64);
        estimate.max(alt_est)
    }

    /// One-norm condition estimate `||A||_1 * est(||A^-1||_1)`.
    pub fn cond_estimate(&self) -> f64 {
        if self.norm1 == 0.0 {
            return f64::INFINITY;
        }
        self.norm1 * self.inverse_norm1_estimate()
    }
}

pub fn norm1(a: &CMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(values: impl IntoIterator<Item = C64>) -> f64 {
    values.into_iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn max_imag(values: impl IntoIterator<Item = C64>) -> f64 {
    values.into_iter().map(|v| v.im.abs()).fold(0.0, f64::max)
}

/// Pairwise (cascade) summation; block size 8 at the leaves.
pub fn pairwise_sum(values: &[C64]) -> C64 {
    if values.len() <= 8 {
        values.iter().fold(ZERO, |acc, v| acc + v)
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// Unsymmetric transposed dot product `x^T y` (no conjugation).
pub fn dot_t(x: &CVector, y: &CVector) -> C64 {
    x.iter().zip(y.iter()).fold(ZERO, |acc, (a, b)| acc + a * b)
}

/// Eigenvalues of a general complex matrix from its Schur form.
pub fn eigenvalues(a: &CMatrix) -> Option<Vec<C64>> {
    let n = a.nrows();
    if n == 0 {
        return Some(Vec::new());
    }
    // A slightly looser deflation threshold rescues the rare matrix on which
    // the tightest one stalls.
    [(f64::EPSILON, 1000 * n), (8.0 * f64::EPSILON, 10_000 * n)]
        .into_iter()
        .find_map(|(eps, iters)| Schur::try_new(a.clone(), eps, iters)?.eigenvalues())
        .map(|ev| ev.iter().copied().collect())
}

/// `|a - b| <= tol * max(|a|, |b|)`, with exact equality required at zero.
pub fn approx_eq_rel(a: C64, b: C64, tol: f64) -> bool {
    let scale = a.norm().max(b.norm());
    (a - b).norm() <= tol * scale
}

pub fn rel_diff(a: C64, b: C64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

pub fn diag(values: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(values))
}
