//! Screen amplitudes of the two slits and the resulting detection densities.
//!
//! Each slit contributes a far-field amplitude with a linear phase and a
//! shared Gaussian envelope,
//!
//! ```text
//! ψ_j(x) = g(x)·exp(i·(−1)^j·π·x/Δ),   g(x) = (2πw²)^(−1/4)·exp(−x²/(4w²))
//! ```
//!
//! so `|ψ1 + ψ2|²/2 = g²(x)(1 + cos(2πx/Δ))`. The path states overlap by
//! `exp(−2(πw/Δ)²)`, which [`SlitGeometry`] keeps below 1e-70 and which is
//! treated as exactly zero everywhere else.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::{self, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{inner, ComplexVector, NORM_TOL};

/// Smallest accepted envelope width in units of the fringe period.
pub const MIN_ENVELOPE_PERIODS: f64 = 3.0;
/// Accepted deviation of a density curve's integral from one.
pub const CURVE_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Path {
    One,
    Two,
}

impl Path {
    pub const BOTH: [Path; 2] = [Path::One, Path::Two];

    pub fn from_index(j: usize) -> Result<Self> {
        match j {
            1 => Ok(Path::One),
            2 => Ok(Path::Two),
            other => Err(Error::InvalidPath(other)),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Path::One => 1,
            Path::Two => 2,
        }
    }
}

impl TryFrom<usize> for Path {
    type Error = Error;

    fn try_from(j: usize) -> Result<Self> {
        Path::from_index(j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitGeometry {
    slit_separation: f64,
    wavelength: f64,
    screen_distance: f64,
    envelope_width: f64,
}

impl Default for SlitGeometry {
    /// d = 10 µm, λ = 500 nm, L = 1 m, w = 15 cm (Δ = 5 cm).
    fn default() -> Self {
        Self {
            slit_separation: 10e-6,
            wavelength: 500e-9,
            screen_distance: 1.0,
            envelope_width: 0.15,
        }
    }
}

impl SlitGeometry {
    /// Half-width of the default screen window, 5w.
    pub const DEFAULT_WINDOW: f64 = 0.75;
    pub const DEFAULT_POINTS: usize = 4096;

    pub fn new(
        slit_separation: f64,
        wavelength: f64,
        screen_distance: f64,
        envelope_width: f64,
    ) -> Result<Self> {
        let mut problems = Vec::new();
        for (name, value) in [
            ("slit separation", slit_separation),
            ("wavelength", wavelength),
            ("screen distance", screen_distance),
            ("envelope width", envelope_width),
        ] {
            if !(value.is_finite() && value > 0.0) {
                problems.push(format!("{name} must be positive and finite (got {value})"));
            }
        }
        if !problems.is_empty() {
            return Err(Error::InvalidGeometry(problems.join("; ")));
        }
        let geom = Self {
            slit_separation,
            wavelength,
            screen_distance,
            envelope_width,
        };
        let ratio = geom.envelope_periods();
        // relative slack so that w = 3Δ survives rounding in λL/d
        if ratio < MIN_ENVELOPE_PERIODS * (1.0 - 1e-12) {
            return Err(Error::InvalidGeometry(format!(
                "envelope width must be at least {MIN_ENVELOPE_PERIODS} fringe periods (got {ratio:.6})"
            )));
        }
        Ok(geom)
    }

    pub fn slit_separation(&self) -> f64 {
        self.slit_separation
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn screen_distance(&self) -> f64 {
        self.screen_distance
    }

    pub fn envelope_width(&self) -> f64 {
        self.envelope_width
    }

    /// Δ = λL/d
    pub fn fringe_period(&self) -> f64 {
        self.wavelength * self.screen_distance / self.slit_separation
    }

    /// w/Δ
    pub fn envelope_periods(&self) -> f64 {
        self.envelope_width / self.fringe_period()
    }

    /// Spatial frequency 2π/Δ of the fringes.
    pub fn fringe_wavenumber(&self) -> f64 {
        2.0 * PI / self.fringe_period()
    }

    /// `|⟨ψ1|ψ2⟩| = exp(−2(πw/Δ)²)`
    pub fn path_overlap(&self) -> f64 {
        let r = PI * self.envelope_periods();
        (-2.0 * r * r).exp()
    }

    /// g(x)
    pub fn envelope(&self, x: f64) -> f64 {
        let w = self.envelope_width;
        (2.0 * PI * w * w).powf(-0.25) * (-x * x / (4.0 * w * w)).exp()
    }

    /// g²(x), a normal density with standard deviation w.
    pub fn envelope_sqr(&self, x: f64) -> f64 {
        let w = self.envelope_width;
        (-x * x / (2.0 * w * w)).exp() / ((2.0 * PI).sqrt() * w)
    }
}

/// ⟨x|ψ_j⟩
pub fn slit_amplitude(x: f64, path: Path, geom: &SlitGeometry) -> Complex64 {
    let sign = match path {
        Path::One => -1.0,
        Path::Two => 1.0,
    };
    let phase = sign * PI * x / geom.fringe_period();
    Complex64::from_polar(geom.envelope(x), phase)
}

/// The joint state `Σ_j |ψ_j⟩⊗|χ_j⟩`, stored as the two environment
/// vectors. `env_dim` is 1 for a bare quanton, 2 with a detector and 4 with
/// detector ⊗ ancilla.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantonEnvironmentState {
    chi: [ComplexVector; 2],
}

impl QuantonEnvironmentState {
    pub fn new(chi1: ComplexVector, chi2: ComplexVector) -> Result<Self> {
        if chi1.dim() != chi2.dim() {
            return Err(Error::DimensionMismatch {
                left: chi1.dim(),
                right: chi2.dim(),
            });
        }
        if !matches!(chi1.dim(), 1 | 2 | 4) {
            return Err(Error::EnvironmentDimension(chi1.dim()));
        }
        let state = Self { chi: [chi1, chi2] };
        let norm_sqr = state.total_norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(state)
    }

    /// Skips the normalization check; the dimension must still be valid.
    #[cfg(test)]
    pub(crate) fn new_unchecked(chi1: ComplexVector, chi2: ComplexVector) -> Self {
        debug_assert_eq!(chi1.dim(), chi2.dim());
        Self { chi: [chi1, chi2] }
    }

    /// `(|ψ1⟩ + |ψ2⟩)/√2` with no environment.
    pub fn bare() -> Self {
        let amp = ComplexVector::from_real(&[FRAC_1_SQRT_2]);
        Self {
            chi: [amp.clone(), amp],
        }
    }

    pub fn env_dim(&self) -> usize {
        self.chi[0].dim()
    }

    pub fn chi(&self) -> &[ComplexVector; 2] {
        &self.chi
    }

    pub fn chi_for(&self, path: Path) -> &ComplexVector {
        &self.chi[path.index() - 1]
    }

    /// `⟨χ1|χ1⟩ + ⟨χ2|χ2⟩`
    pub fn total_norm_sqr(&self) -> f64 {
        self.chi[0].norm_sqr() + self.chi[1].norm_sqr()
    }

    /// `⟨χ1|χ2⟩`, the coherence factor multiplying the fringe term.
    pub fn coherence(&self) -> Complex64 {
        inner(&self.chi[0], &self.chi[1]).expect("environment dims are equal by construction")
    }

    fn gram(&self) -> PathGram {
        PathGram {
            n11: self.chi[0].norm_sqr(),
            n22: self.chi[1].norm_sqr(),
            c12: self.coherence(),
        }
    }
}

struct PathGram {
    n11: f64,
    n22: f64,
    /// ⟨χ1|χ2⟩
    c12: Complex64,
}

impl PathGram {
    fn density(&self, x: f64, geom: &SlitGeometry) -> f64 {
        let psi1 = slit_amplitude(x, Path::One, geom);
        let psi2 = slit_amplitude(x, Path::Two, geom);
        // Σ_jk ψ_j conj(ψ_k) ⟨χ_k|χ_j⟩; the two cross terms are conjugates
        let cross = psi1 * psi2.conj() * self.c12.conj();
        let value = psi1.norm_sqr() * self.n11 + psi2.norm_sqr() * self.n22 + 2.0 * cross.re;
        value.max(0.0)
    }
}

/// Probability density per meter of detecting the quanton at `x`.
pub fn screen_density(state: &QuantonEnvironmentState, x: f64, geom: &SlitGeometry) -> f64 {
    state.gram().density(x, geom)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Trapezoid integral over the grid.
    pub integral: f64,
    /// Set when the integral misses one by more than [`CURVE_NORM_TOL`],
    /// usually because the window is too narrow.
    pub normalization_warning: bool,
}

impl DensityCurve {
    pub fn step(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    /// Density divided by g²(x).
    pub fn envelope_normalized(&self, geom: &SlitGeometry) -> Vec<f64> {
        self.grid
            .iter()
            .zip(&self.values)
            .map(|(&x, &v)| v / geom.envelope_sqr(x))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x_m,density_per_m")?;
        for (x, v) in self.grid.iter().zip(&self.values) {
            writeln!(out, "{x},{v}")?;
        }
        Ok(())
    }
}

pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Samples [`screen_density`] on `n_points` uniform points over `[-x_max, x_max]`.
pub fn density_curve(
    state: &QuantonEnvironmentState,
    geom: &SlitGeometry,
    x_max: f64,
    n_points: usize,
) -> Result<DensityCurve> {
    if n_points < 2 {
        return Err(Error::InvalidConfig(format!(
            "density curve needs at least 2 points (got {n_points})"
        )));
    }
    if !(x_max.is_finite() && x_max > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "window half-width must be positive (got {x_max})"
        )));
    }
    let gram = state.gram();
    let step = 2.0 * x_max / (n_points - 1) as f64;
    let grid: Vec<f64> = (0..n_points)
        .map(|k| {
            if k == n_points - 1 {
                x_max
            } else {
                -x_max + k as f64 * step
            }
        })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&x| gram.density(x, geom)).collect();
    let integral = trapezoid(&grid, &values);
    Ok(DensityCurve {
        normalization_warning: (integral - 1.0).abs() > CURVE_NORM_TOL,
        grid,
        values,
        integral,
    })
}
