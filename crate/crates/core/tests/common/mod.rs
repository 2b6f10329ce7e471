//! Fixtures shared by the integration test targets.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sobary::heuristics::{self, FrequencySample};
use sobary::linalg::C64;
use sobary::synth::{self, DampingKind, SynthSpec};
use sobary::{InterpolationData, Method, SecondOrderModel};

pub const OMEGA_MIN: f64 = 1.0;
pub const OMEGA_MAX: f64 = 100.0;

pub fn truth(order: usize, damping: DampingKind, seed: u64) -> SecondOrderModel {
    let spec = SynthSpec { order, damping, omega_min: OMEGA_MIN, omega_max: OMEGA_MAX, samples: 400, seed };
    synth::random_so_system(&spec).unwrap()
}

pub fn light_damping() -> DampingKind {
    DampingKind::RandomSpd { scale: 0.05 }
}

pub fn samples(model: &SecondOrderModel, lo: f64, hi: f64, n: usize) -> Vec<FrequencySample> {
    synth::sample_tf(model, &synth::log_grid(lo, hi, n)).unwrap()
}

/// Imaginary-axis data of order `r`: conjugation-closed (`r / 2` frequencies
/// per side plus conjugates) unless the method is the zero-damping one,
/// whose form cannot separate `s` from `-s`.
pub fn axis_data(samples: &[FrequencySample], method: Method, r: usize) -> InterpolationData {
    if method == Method::ZeroDamping {
        heuristics::select_interpolation_points(samples, Some(r)).unwrap()
    } else {
        assert!(r.is_multiple_of(2));
        let half = heuristics::select_interpolation_points(samples, Some(r / 2)).unwrap();
        heuristics::close_under_conjugation(&half).unwrap()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random points in a box around the sampled band, away from the real axis.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<C64> {
    (0..n)
        .map(|_| {
            let re = rng.random_range(-0.5..0.5) * scale;
            let im = rng.random_range(-1.2..1.2) * scale;
            C64::new(re, im)
        })
        .collect()
}

pub fn rel(a: C64, b: C64) -> f64 {
    sobary::linalg::rel_diff(a, b)
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
