//! Test-only reference computations, kept independent of the library's
//! closed forms.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use wpduality::hilbert::ComplexVector;
use wpduality::optics::{slit_amplitude, Path, QuantonEnvironmentState, SlitGeometry};

/// `Σ_b |Σ_j ψ_j(x)·⟨b|χ_j⟩|²` over the computational basis of the
/// environment.
pub fn brute_force_density(state: &QuantonEnvironmentState, x: f64, geom: &SlitGeometry) -> f64 {
    let psi = [slit_amplitude(x, Path::One, geom), slit_amplitude(x, Path::Two, geom)];
    let [chi1, chi2] = state.chi();
    (0..state.env_dim())
        .map(|b| (psi[0] * chi1[b] + psi[1] * chi2[b]).norm_sqr())
        .sum()
}

pub fn random_state(rng: &mut impl Rng) -> QuantonEnvironmentState {
    let dim = [1usize, 2, 4][rng.random_range(0..3)];
    let mut draw = || -> Vec<Complex64> {
        (0..dim)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    };
    let (a, b) = (draw(), draw());
    let total: f64 = a.iter().chain(&b).map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let scale = |v: Vec<Complex64>| ComplexVector::new(v.into_iter().map(|z| z / total).collect()).unwrap();
    QuantonEnvironmentState::new(scale(a), scale(b)).unwrap()
}
