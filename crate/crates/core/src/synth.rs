//! Seeded synthetic second-order systems used as ground truth.
//!
//! The generator is ChaCha8 (`rand_chacha`) seeded through
//! `SeedableRng::seed_from_u64`. Draw order: the `n x n` Gaussian matrix
//! whose QR factor orients `K` (column-major), then `b`, then `c`, then the
//! Gaussian factor of a random SPD damping matrix if requested.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heuristics::FrequencySample;
use crate::linalg::{CMatrix, CVector, C64};
use crate::model::SecondOrderModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DampingKind {
    None,
    /// `D = alpha M + beta K`.
    Proportional { alpha: f64, beta: f64 },
    /// `D = scale (G G^T / n + I / 10)` for Gaussian `G`.
    RandomSpd { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub order: usize,
    pub damping: DampingKind,
    pub omega_min: f64,
    pub omega_max: f64,
    pub samples: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::InvalidData("synthetic order must be positive".into()));
        }
        if !(self.omega_min > 0.0 && self.omega_min < self.omega_max && self.omega_max.is_finite()) {
            return Err(Error::InvalidData("frequency range needs 0 < omega_min < omega_max".into()));
        }
        if self.samples < 4 {
            return Err(Error::InvalidData("at least 4 samples are needed".into()));
        }
        Ok(())
    }

    /// Log-spaced grid of `samples` frequencies covering the range.
    pub fn grid(&self) -> Vec<f64> {
        log_grid(self.omega_min, self.omega_max, self.samples)
    }
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| match k {
            0 => lo,
            k if k == n - 1 => hi,
            k => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| C64::new(v, 0.0))
}

/// Real model with `M = I`, SPD `K` whose natural frequencies are
/// log-spaced inside the range, damping per `spec.damping` and Gaussian
/// `b`, `c`.
pub fn random_so_system(spec: &SynthSpec) -> Result<SecondOrderModel> {
    spec.validate()?;
    let n = spec.order;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let q = gaussian(&mut rng, n, n).qr().q();
    let ratio = spec.omega_max / spec.omega_min;
    let freqs: Vec<f64> = (0..n).map(|k| spec.omega_min * ratio.powf((k as f64 + 0.5) / n as f64)).collect();
    let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, freqs.iter().map(|w| w * w)));
    let k = &q * lam * q.transpose();
    let k = (&k + k.transpose()) * 0.5;
    let b = gaussian(&mut rng, n, 1);
    let c = gaussian(&mut rng, n, 1);
    let d = match spec.damping {
        DampingKind::None => DMatrix::zeros(n, n),
        DampingKind::Proportional { alpha, beta } => DMatrix::identity(n, n) * alpha + &k * beta,
        DampingKind::RandomSpd { scale } => {
            let g = gaussian(&mut rng, n, n);
            let spd = &g * g.transpose() / n as f64 + DMatrix::identity(n, n) * 0.1;
            (&spd + spd.transpose()) * (0.5 * scale)
        }
    };
    SecondOrderModel::new(
        CMatrix::identity(n, n),
        complexify(&d),
        complexify(&k),
        CVector::from_iterator(n, b.iter().map(|v| C64::new(*v, 0.0))),
        CVector::from_iterator(n, c.iter().map(|v| C64::new(*v, 0.0))),
    )
}

/// Samples `H(i omega)` on the grid, in grid order.
pub fn sample_tf(model: &SecondOrderModel, omegas: &[f64]) -> Result<Vec<FrequencySample>> {
    omegas
        .iter()
        .map(|&w| {
            let s = C64::new(0.0, w);
            Ok(FrequencySample::new(s, model.eval(s)?))
        })
        .collect()
}

/// Multiplies each value by `1 + rel_sigma * (x + i y)` with standard normal `x`, `y`.
pub fn perturb(samples: &[FrequencySample], rel_sigma: f64, seed: u64) -> Vec<FrequencySample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    samples
        .iter()
        .map(|smp| {
            let x: f64 = StandardNormal.sample(&mut rng);
            let y: f64 = StandardNormal.sample(&mut rng);
            FrequencySample::new(smp.s, smp.value * (C64::new(1.0, 0.0) + C64::new(x, y) * rel_sigma))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(order: usize, damping: DampingKind, seed: u64) -> SynthSpec {
        SynthSpec { order, damping, omega_min: 1.0, omega_max: 4.0, samples: 10, seed }
    }

    #[test]
    fn scalar_undamped_system() {
        let m = random_so_system(&spec(1, DampingKind::None, 3)).unwrap();
        assert!((m.stiffness()[(0, 0)].re - 4.0).abs() < 1e-14);
        let mut p: Vec<C64> = m.poles().unwrap().as_slice().to_vec();
        p.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((p[0] - C64::new(0.0, -2.0)).norm() < 1e-12);
        assert!((p[1] - C64::new(0.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_proportional_damping_is_undamped() {
        let a = random_so_system(&spec(2, DampingKind::Proportional { alpha: 0.0, beta: 0.0 }, 5)).unwrap();
        let b = random_so_system(&spec(2, DampingKind::None, 5)).unwrap();
        assert_eq!(a.damping(), b.damping());
        assert_eq!(a.stiffness(), b.stiffness());
    }

    #[test]
    fn same_seed_same_model() {
        let s = spec(6, DampingKind::RandomSpd { scale: 0.1 }, 42);
        assert_eq!(random_so_system(&s).unwrap(), random_so_system(&s).unwrap());
    }

    #[test]
    fn stiffness_is_spd() {
        let m = random_so_system(&spec(5, DampingKind::None, 9)).unwrap();
        let k = m.stiffness().map(|v| v.re);
        assert_eq!(k, k.transpose());
        let ev = k.symmetric_eigen().eigenvalues;
        assert!(ev.iter().all(|e| *e > 0.0));
    }

    #[test]
    fn sampling_keeps_grid_order() {
        let m = random_so_system(&spec(3, DampingKind::None, 1)).unwrap();
        let grid = [0.5, 1.7, 3.3, 9.0];
        let smp = sample_tf(&m, &grid).unwrap();
        assert_eq!(smp.len(), 4);
        for (s, w) in smp.iter().zip(grid) {
            assert_eq!(s.omega(), w);
        }
    }

    #[test]
    fn undamped_samples_are_even_and_real() {
        let m = random_so_system(&spec(4, DampingKind::None, 2)).unwrap();
        for w in [0.7, 1.9, 5.5] {
            let plus = m.eval(C64::new(0.0, w)).unwrap();
            let minus = m.eval(C64::new(0.0, -w)).unwrap();
            assert!((plus - minus).norm() <= 1e-12 * plus.norm());
            assert!(plus.im.abs() <= 1e-12 * plus.norm());
        }
    }

    #[test]
    fn invalid_specs() {
        let mut s = spec(2, DampingKind::None, 0);
        s.omega_min = 5.0;
        assert!(random_so_system(&s).is_err());
        s = spec(0, DampingKind::None, 0);
        assert!(random_so_system(&s).is_err());
    }
}
