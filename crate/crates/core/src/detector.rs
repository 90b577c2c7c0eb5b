//! Path detector, discrimination ancilla and the entangled states they form
//! with the quanton.
//!
//! The detector is a qubit left in `|d1⟩ = (1, 0)` or `|d2⟩ = (c, √(1−c²))`
//! by a quanton passing slit 1 or 2, with real overlap `c = ⟨d1|d2⟩`. The
//! ancilla is a second qubit starting in `|a0⟩ = |a1⟩ = (1, 0)`; its other
//! basis state `|a2⟩ = (0, 1)` flags the inconclusive branch. Joint
//! detector ⊗ ancilla vectors use the index `2·detector + ancilla`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::hilbert::{complete_unitary, inner, tensor, ComplexMatrix, ComplexVector};
use crate::optics::{Path, QuantonEnvironmentState};

/// Branch probabilities below this are rounding residue and count as zero.
pub const PROBABILITY_FLOOR: f64 = 1e-24;

const ANCILLA_DIM: usize = 2;

pub(crate) fn check_overlap(c: f64) -> Result<f64> {
    if c.is_finite() && (0.0..=1.0).contains(&c) {
        Ok(c)
    } else {
        Err(Error::OverlapOutOfRange(c))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorPair {
    overlap: f64,
    d1: ComplexVector,
    d2: ComplexVector,
}

impl DetectorPair {
    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    pub fn state(&self, path: Path) -> &ComplexVector {
        match path {
            Path::One => &self.d1,
            Path::Two => &self.d2,
        }
    }
}

pub fn make_detector_pair(c: f64) -> Result<DetectorPair> {
    let c = check_overlap(c)?;
    Ok(DetectorPair {
        overlap: c,
        d1: ComplexVector::from_real(&[1.0, 0.0]),
        d2: ComplexVector::from_real(&[c, (1.0 - c * c).sqrt()]),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AncillaOutcome {
    /// Conclusive branch, detector left in `|p1⟩` or `|p2⟩`.
    A1,
    /// Inconclusive branch, detector left in `|q⟩` for both paths.
    A2,
}

impl AncillaOutcome {
    fn basis_index(self) -> usize {
        match self {
            AncillaOutcome::A1 => 0,
            AncillaOutcome::A2 => 1,
        }
    }

    pub fn state(self) -> ComplexVector {
        ComplexVector::basis(ANCILLA_DIM, self.basis_index())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathVerdict {
    Slit1,
    Slit2,
    Inconclusive,
}

impl PathVerdict {
    pub fn conclusive(path: Path) -> Self {
        match path {
            Path::One => PathVerdict::Slit1,
            Path::Two => PathVerdict::Slit2,
        }
    }

    pub fn path(self) -> Option<Path> {
        match self {
            PathVerdict::Slit1 => Some(Path::One),
            PathVerdict::Slit2 => Some(Path::Two),
            PathVerdict::Inconclusive => None,
        }
    }

    pub fn is_conclusive(self) -> bool {
        self != PathVerdict::Inconclusive
    }
}

/// `|Ψ⟩ = (|ψ1⟩|d1⟩ + |ψ2⟩|d2⟩)/√2`, optionally with the ancilla `|a0⟩`
/// appended to each detector state.
pub fn correlated_state(pair: &DetectorPair, with_ancilla: bool) -> QuantonEnvironmentState {
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let a0 = initial_ancilla();
    let chi = |d: &ComplexVector| {
        let env = if with_ancilla { tensor(d, &a0) } else { d.clone() };
        env.scale(s)
    };
    QuantonEnvironmentState::new(chi(&pair.d1), chi(&pair.d2))
        .expect("detector states are normalized by construction")
}

pub fn initial_ancilla() -> ComplexVector {
    ComplexVector::basis(ANCILLA_DIM, 0)
}

/// The detector–ancilla interaction
///
/// ```text
/// U (|d_i⟩|a0⟩) = α |p_i⟩|a1⟩ + β |q⟩|a2⟩,   α = √(1−c), β = √c
/// ```
///
/// completed to a unitary on the 4-dimensional detector ⊗ ancilla space.
#[derive(Debug, Clone, PartialEq)]
pub struct UqsdUnitary {
    pair: DetectorPair,
    alpha: f64,
    beta: f64,
    matrix: ComplexMatrix,
    p1: ComplexVector,
    p2: ComplexVector,
    q: ComplexVector,
}

impl UqsdUnitary {
    pub fn overlap(&self) -> f64 {
        self.pair.overlap
    }

    pub fn pair(&self) -> &DetectorPair {
        &self.pair
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `|p1⟩` or `|p2⟩`.
    pub fn pointer(&self, path: Path) -> &ComplexVector {
        match path {
            Path::One => &self.p1,
            Path::Two => &self.p2,
        }
    }

    pub fn q(&self) -> &ComplexVector {
        &self.q
    }

    /// `|d_i⟩|a0⟩`
    pub fn input(&self, path: Path) -> ComplexVector {
        tensor(self.pair.state(path), &initial_ancilla())
    }

    /// `α|p_i⟩|a1⟩ + β|q⟩|a2⟩`
    pub fn prescribed_image(&self, path: Path) -> ComplexVector {
        let conclusive = tensor(self.pointer(path), &AncillaOutcome::A1.state());
        let inconclusive = tensor(&self.q, &AncillaOutcome::A2.state());
        conclusive
            .scale(Complex64::new(self.alpha, 0.0))
            .add(&inconclusive.scale(Complex64::new(self.beta, 0.0)))
            .expect("same dimension")
    }

    /// Largest entrywise deviation of `U(|d_i⟩|a0⟩)` from its prescribed image.
    pub fn image_residual(&self) -> f64 {
        Path::BOTH
            .iter()
            .map(|&p| {
                let got = self.matrix.apply(&self.input(p)).expect("dim 4");
                got.max_abs_diff(&self.prescribed_image(p)).expect("dim 4")
            })
            .fold(0.0, f64::max)
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.matrix.unitarity_defect().expect("square")
    }
}

pub fn build_uqsd(c: f64) -> Result<UqsdUnitary> {
    let pair = make_detector_pair(c)?;
    let s = FRAC_1_SQRT_2;
    let mut u = UqsdUnitary {
        alpha: (1.0 - pair.overlap).sqrt(),
        beta: pair.overlap.sqrt(),
        pair,
        matrix: ComplexMatrix::identity(4),
        p1: ComplexVector::basis(2, 0),
        p2: ComplexVector::basis(2, 1),
        q: ComplexVector::from_real(&[s, s]),
    };
    let pairs: Vec<_> = Path::BOTH
        .iter()
        .map(|&p| (u.input(p), u.prescribed_image(p)))
        .collect();
    u.matrix = complete_unitary(&pairs)?;
    Ok(u)
}

/// `|Ψ_f⟩ = U|Ψ_i⟩`, acting on the environment vector of each path.
pub fn apply_uqsd(state: &QuantonEnvironmentState, u: &UqsdUnitary) -> Result<QuantonEnvironmentState> {
    if state.env_dim() != 4 {
        return Err(Error::DimensionMismatch {
            left: state.env_dim(),
            right: 4,
        });
    }
    let [chi1, chi2] = state.chi();
    QuantonEnvironmentState::new(u.matrix.apply(chi1)?, u.matrix.apply(chi2)?)
}

/// Keeps only the ancilla component `outcome` of each environment vector.
fn ancilla_component(chi: &ComplexVector, outcome: AncillaOutcome) -> ComplexVector {
    let keep = outcome.basis_index();
    let amps = chi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, &a)| if k % ANCILLA_DIM == keep { a } else { Complex64::new(0.0, 0.0) })
        .collect();
    ComplexVector::new(amps).expect("finite amplitudes")
}

/// Projects onto an ancilla outcome. Returns the outcome probability and
/// the renormalized conditional state.
pub fn project_ancilla(
    state: &QuantonEnvironmentState,
    outcome: AncillaOutcome,
) -> Result<(f64, QuantonEnvironmentState)> {
    if state.env_dim() != 4 {
        return Err(Error::DimensionMismatch {
            left: state.env_dim(),
            right: 4,
        });
    }
    let [chi1, chi2] = state.chi();
    let (p1, p2) = (ancilla_component(chi1, outcome), ancilla_component(chi2, outcome));
    let probability = p1.norm_sqr() + p2.norm_sqr();
    if probability < PROBABILITY_FLOOR {
        return Err(Error::EmptyBranch);
    }
    let s = Complex64::new(1.0 / probability.sqrt(), 0.0);
    let conditional = QuantonEnvironmentState::new(p1.scale(s), p2.scale(s))?;
    Ok((probability, conditional))
}

/// Best probability of an error-free path verdict, `1 − c`.
pub fn uqsd_success_probability(c: f64) -> Result<f64> {
    Ok(1.0 - check_overlap(c)?)
}

fn floor_probability(p: f64) -> f64 {
    if p < PROBABILITY_FLOOR {
        0.0
    } else {
        p
    }
}

/// One quanton's worth of path discrimination: prepares `U(|d_path⟩|a0⟩)`,
/// measures the ancilla, and on the conclusive branch measures the detector
/// in the `{p1, p2}` basis.
pub fn discriminate<R: Rng + ?Sized>(true_path: Path, u: &UqsdUnitary, rng: &mut R) -> PathVerdict {
    let out = u.matrix.apply(&u.input(true_path)).expect("dim 4");
    let conclusive = ancilla_component(&out, AncillaOutcome::A1);
    let p_conclusive = floor_probability(conclusive.norm_sqr());
    if rng.random::<f64>() >= p_conclusive {
        return PathVerdict::Inconclusive;
    }
    // detector amplitudes on the conclusive branch
    let det = ComplexVector::new(
        conclusive
            .amplitudes()
            .iter()
            .step_by(ANCILLA_DIM)
            .copied()
            .collect(),
    )
    .expect("finite amplitudes");
    let w1 = floor_probability(inner(&u.p1, &det).expect("dim 2").norm_sqr());
    let w2 = floor_probability(inner(&u.p2, &det).expect("dim 2").norm_sqr());
    if rng.random::<f64>() * (w1 + w2) < w1 {
        PathVerdict::Slit1
    } else {
        PathVerdict::Slit2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{partial_trace, Subsystem};
    use crate::optics::{screen_density, SlitGeometry};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> impl Iterator<Item = f64> {
        (0..=20).map(|k| k as f64 * 0.05)
    }

    #[test]
    fn detector_pair_examples() {
        let p = make_detector_pair(0.0).unwrap();
        assert_eq!(p.state(Path::Two), &ComplexVector::from_real(&[0.0, 1.0]));
        let p = make_detector_pair(1.0).unwrap();
        assert_eq!(p.state(Path::Two), p.state(Path::One));
        let p = make_detector_pair(0.6).unwrap();
        assert!(p.state(Path::Two).max_abs_diff(&ComplexVector::from_real(&[0.6, 0.8])).unwrap() < 1e-15);
        let ov = inner(p.state(Path::One), p.state(Path::Two)).unwrap();
        assert!((ov - Complex64::new(0.6, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn overlap_range_errors() {
        for bad in [-0.1, 1.0001, f64::NAN] {
            assert!(make_detector_pair(bad).is_err());
            assert!(build_uqsd(bad).is_err());
            assert!(uqsd_success_probability(bad).is_err());
        }
    }

    #[test]
    fn correlated_state_examples() {
        let st = correlated_state(&make_detector_pair(0.0).unwrap(), false);
        assert!(st.coherence().norm() < 1e-15);
        for c in [0.0, 0.3, 1.0] {
            for anc in [false, true] {
                let st = correlated_state(&make_detector_pair(c).unwrap(), anc);
                assert_eq!(st.env_dim(), if anc { 4 } else { 2 });
                for ch in st.chi() {
                    assert!((ch.norm_sqr() - 0.5).abs() < 1e-15);
                }
            }
        }
        // c = 1 factorizes: χ1 = χ2 so the pattern carries full fringes
        let st = correlated_state(&make_detector_pair(1.0).unwrap(), false);
        assert_eq!(st.chi()[0], st.chi()[1]);
    }

    #[test]
    fn uqsd_limits() {
        let u = build_uqsd(0.0).unwrap();
        assert_eq!(u.beta(), 0.0);
        for p in Path::BOTH {
            let out = u.matrix().apply(&u.input(p)).unwrap();
            let want = tensor(u.pointer(p), &AncillaOutcome::A1.state());
            assert!(out.max_abs_diff(&want).unwrap() < 1e-15);
        }
        let u = build_uqsd(1.0).unwrap();
        assert_eq!(u.alpha(), 0.0);
        let want = tensor(u.q(), &AncillaOutcome::A2.state());
        for p in Path::BOTH {
            let out = u.matrix().apply(&u.input(p)).unwrap();
            assert!(out.max_abs_diff(&want).unwrap() < 1e-15);
        }
        let u = build_uqsd(0.5).unwrap();
        assert!((u.alpha() - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((u.beta() - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(u.unitarity_defect() <= 1e-12);
    }

    #[test]
    fn uqsd_invariants_on_grid() {
        for c in grid() {
            let u = build_uqsd(c).unwrap();
            assert!((u.alpha().powi(2) - (1.0 - c)).abs() <= 1e-12);
            assert!((u.beta().powi(2) - c).abs() <= 1e-12);
            assert!(inner(u.pointer(Path::One), u.pointer(Path::Two)).unwrap().norm() <= 1e-12);
            assert!((u.q().norm() - 1.0).abs() <= 1e-12);
            let ov = inner(&u.prescribed_image(Path::One), &u.prescribed_image(Path::Two)).unwrap();
            assert!((ov - Complex64::new(c, 0.0)).norm() <= 1e-12, "c = {c}");
            assert!(u.unitarity_defect() <= 1e-12);
            assert!(u.image_residual() <= 1e-12);
        }
    }

    #[test]
    fn apply_requires_ancilla() {
        let pair = make_detector_pair(0.5).unwrap();
        let u = build_uqsd(0.5).unwrap();
        assert!(matches!(
            apply_uqsd(&correlated_state(&pair, false), &u),
            Err(Error::DimensionMismatch { left: 2, right: 4 })
        ));
    }

    fn final_state(c: f64) -> QuantonEnvironmentState {
        let pair = make_detector_pair(c).unwrap();
        apply_uqsd(&correlated_state(&pair, true), &build_uqsd(c).unwrap()).unwrap()
    }

    #[test]
    fn final_state_matches_closed_form() {
        for c in grid() {
            let st = final_state(c);
            assert!((st.total_norm_sqr() - 1.0).abs() <= 1e-12);
            let u = build_uqsd(c).unwrap();
            let (a, b) = ((1.0 - c).sqrt() * FRAC_1_SQRT_2, c.sqrt() * FRAC_1_SQRT_2);
            for p in Path::BOTH {
                let want = tensor(u.pointer(p), &AncillaOutcome::A1.state())
                    .scale(Complex64::new(a, 0.0))
                    .add(&tensor(u.q(), &AncillaOutcome::A2.state()).scale(Complex64::new(b, 0.0)))
                    .unwrap();
                assert!(st.chi_for(p).max_abs_diff(&want).unwrap() <= 1e-12);
            }
        }
    }

    #[test]
    fn branch_probabilities() {
        assert!(matches!(project_ancilla(&final_state(0.0), AncillaOutcome::A2), Err(Error::EmptyBranch)));
        assert!(matches!(project_ancilla(&final_state(1.0), AncillaOutcome::A1), Err(Error::EmptyBranch)));
        let (p2, _) = project_ancilla(&final_state(0.5), AncillaOutcome::A2).unwrap();
        assert!((p2 - 0.5).abs() <= 1e-12);
        for c in grid().filter(|&c| c > 0.0 && c < 1.0) {
            let st = final_state(c);
            let (p1, _) = project_ancilla(&st, AncillaOutcome::A1).unwrap();
            let (p2, _) = project_ancilla(&st, AncillaOutcome::A2).unwrap();
            assert!((p1 + p2 - 1.0).abs() <= 1e-12);
            assert!((p1 - (1.0 - c)).abs() <= 1e-12);
        }
    }

    #[test]
    fn conditional_branches() {
        let geom = SlitGeometry::default();
        let st = final_state(0.25);
        let (_, a1) = project_ancilla(&st, AncillaOutcome::A1).unwrap();
        let (_, a2) = project_ancilla(&st, AncillaOutcome::A2).unwrap();
        assert!(a1.coherence().norm() <= 1e-12);
        assert!((a2.coherence() - Complex64::new(0.5, 0.0)).norm() <= 1e-12);
        for k in -30..=30 {
            let x = k as f64 * 0.0077;
            let g2 = geom.envelope_sqr(x);
            assert!((screen_density(&a1, x, &geom) - g2).abs() <= 1e-12);
            let fringe = g2 * (1.0 + (geom.fringe_wavenumber() * x).cos());
            assert!((screen_density(&a2, x, &geom) - fringe).abs() <= 1e-12);
        }
    }

    #[test]
    fn ancilla_does_not_change_screen_density() {
        let geom = SlitGeometry::default();
        for c in grid() {
            let before = correlated_state(&make_detector_pair(c).unwrap(), false);
            let after = final_state(c);
            for k in -50..=50 {
                let x = k as f64 * 0.0149;
                let d = (screen_density(&before, x, &geom) - screen_density(&after, x, &geom)).abs();
                assert!(d <= 1e-12);
            }
        }
    }

    #[test]
    fn reduced_detector_state_is_equal_mixture() {
        for c in grid() {
            let pair = make_detector_pair(c).unwrap();
            let rho = partial_trace(&correlated_state(&pair, false), Subsystem::Detector).unwrap();
            let half = Complex64::new(0.5, 0.0);
            let want = ComplexMatrix::outer(pair.state(Path::One), pair.state(Path::One));
            let want2 = ComplexMatrix::outer(pair.state(Path::Two), pair.state(Path::Two));
            for r in 0..2 {
                for col in 0..2 {
                    let w = half * (want.get(r, col) + want2.get(r, col));
                    assert!((rho.get(r, col) - w).norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn success_probability() {
        assert_eq!(uqsd_success_probability(0.0).unwrap(), 1.0);
        assert_eq!(uqsd_success_probability(1.0).unwrap(), 0.0);
        assert_eq!(uqsd_success_probability(0.5).unwrap(), 0.5);
    }

    #[test]
    fn discriminate_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u0 = build_uqsd(0.0).unwrap();
        let u1 = build_uqsd(1.0).unwrap();
        for _ in 0..10_000 {
            for p in Path::BOTH {
                assert_eq!(discriminate(p, &u0, &mut rng), PathVerdict::conclusive(p));
                assert_eq!(discriminate(p, &u1, &mut rng), PathVerdict::Inconclusive);
            }
        }
    }

    #[test]
    fn discriminate_statistics() {
        let n = 1_000_000u32;
        let band = 3.0 * (0.25 / n as f64).sqrt();
        for c in [0.1, 0.5, 0.9] {
            let u = build_uqsd(c).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            for p in Path::BOTH {
                let mut inconclusive = 0u32;
                for _ in 0..n {
                    match discriminate(p, &u, &mut rng).path() {
                        None => inconclusive += 1,
                        Some(v) => assert_eq!(v, p, "wrong conclusive verdict"),
                    }
                }
                let frac = inconclusive as f64 / n as f64;
                if c == 0.5 {
                    assert!((frac - 0.5).abs() <= band, "{frac}");
                } else {
                    let sigma = (c * (1.0 - c) / n as f64).sqrt();
                    assert!((frac - c).abs() <= 5.0 * sigma, "c={c} frac={frac}");
                }
            }
        }
    }
}
