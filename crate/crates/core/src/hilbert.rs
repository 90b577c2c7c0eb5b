//! Dense complex linear algebra for the small Hilbert spaces of the
//! experiment (path ⊗ detector ⊗ ancilla, at most 16 dimensions).
//!
//! Everything is stored densely in row-major order. Values are immutable
//! after construction and every operation returns a fresh value.

use std::fmt;
use std::ops::Index;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::optics::QuantonEnvironmentState;

/// Tolerance for normalization and unitarity checks.
pub const NORM_TOL: f64 = 1e-12;
/// Relative tolerance for rank decisions during orthonormal extension.
pub const RANK_TOL: f64 = 1e-10;
/// Maximum inner-product change accepted by [`complete_unitary`].
pub const ISOMETRY_TOL: f64 = 1e-10;
/// Lowest eigenvalue accepted for a density matrix.
pub const PSD_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, PartialEq)]
pub struct ComplexVector {
    amps: Vec<Complex64>,
}

impl ComplexVector {
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::DimensionMismatch { left: 0, right: 1 });
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { amps })
    }

    /// Vector with real amplitudes. Panics on an empty slice.
    pub fn from_real(values: &[f64]) -> Self {
        assert!(!values.is_empty(), "empty vector");
        Self {
            amps: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    /// Computational basis vector `|index⟩` in `dim` dimensions.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self { amps }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "empty vector");
        Self {
            amps: vec![ZERO; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    /// Rescales to unit norm. Also returns the factor that was applied, so
    /// callers can see how far the input was from normalized.
    pub fn normalized(&self) -> Result<(Self, f64)> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        let factor = 1.0 / n;
        Ok((self.scale(Complex64::new(factor, 0.0)), factor))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            amps: self.amps.iter().map(|a| a * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(Self {
            amps: self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(Self {
            amps: self.amps.iter().zip(&other.amps).map(|(a, b)| a - b).collect(),
        })
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

impl Index<usize> for ComplexVector {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.amps[i]
    }
}

impl fmt::Debug for ComplexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.amps.iter()).finish()
    }
}

fn check_dims(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { left, right });
    }
    Ok(())
}

/// `⟨u|v⟩ = Σ conj(u_k)·v_k`.
pub fn inner(u: &ComplexVector, v: &ComplexVector) -> Result<Complex64> {
    check_dims(u.dim(), v.dim())?;
    Ok(inner_unchecked(&u.amps, &v.amps))
}

fn inner_unchecked(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Kronecker product; index `i·v.dim() + k` holds `u_i·v_k`.
pub fn tensor(u: &ComplexVector, v: &ComplexVector) -> ComplexVector {
    let mut amps = Vec::with_capacity(u.dim() * v.dim());
    for a in &u.amps {
        for b in &v.amps {
            amps.push(a * b);
        }
    }
    ComplexVector { amps }
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch { left: rows, right: cols });
        }
        check_dims(entries.len(), rows * cols)?;
        if entries.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.entries[i * dim + i] = ONE;
        }
        m
    }

    /// `|u⟩⟨v|`
    pub fn outer(u: &ComplexVector, v: &ComplexVector) -> Self {
        let (rows, cols) = (u.dim(), v.dim());
        let mut entries = Vec::with_capacity(rows * cols);
        for a in &u.amps {
            for b in &v.amps {
                entries.push(a * b.conj());
            }
        }
        Self { rows, cols, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.entries[r * self.cols + c]
    }

    pub fn column(&self, c: usize) -> ComplexVector {
        ComplexVector {
            amps: (0..self.rows).map(|r| self.get(r, c)).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                entries.push(self.get(r, c).conj());
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dims(self.cols, other.rows)?;
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == ZERO {
                    continue;
                }
                for c in 0..other.cols {
                    out.entries[r * other.cols + c] += a * other.get(k, c);
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &ComplexVector) -> Result<ComplexVector> {
        check_dims(self.cols, v.dim())?;
        Ok(ComplexVector {
            amps: self
                .entries
                .chunks_exact(self.cols)
                .map(|row| row.iter().zip(&v.amps).map(|(a, b)| a * b).sum())
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self.rows, other.rows)?;
        check_dims(self.cols, other.cols)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Max-entry norm.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// `max |U†U − I|`, or `None` for a non-square matrix.
    pub fn unitarity_defect(&self) -> Option<f64> {
        if self.rows != self.cols {
            return None;
        }
        let gram = self.adjoint().matmul(self).ok()?;
        gram.max_abs_diff(&Self::identity(self.rows)).ok()
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect().is_some_and(|d| d <= NORM_TOL)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.rows == self.cols
            && self
                .adjoint()
                .max_abs_diff(self)
                .is_ok_and(|d| d <= tol)
    }

    /// Hermitian, unit trace and no eigenvalue below `-PSD_TOL`.
    pub fn is_density(&self) -> bool {
        self.is_hermitian(NORM_TOL)
            && (self.trace() - ONE).norm() <= NORM_TOL
            && self.is_psd(PSD_TOL)
    }

    /// Tests `self + shift·I ≻ 0` by Cholesky factorization, which holds iff
    /// every eigenvalue exceeds `-shift`. Assumes a Hermitian matrix.
    pub fn is_psd(&self, shift: f64) -> bool {
        let n = self.rows;
        if n != self.cols {
            return false;
        }
        let mut l = vec![ZERO; n * n];
        for j in 0..n {
            let mut d = self.get(j, j).re + shift;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if d <= 0.0 {
                return false;
            }
            let d = d.sqrt();
            l[j * n + j] = Complex64::new(d, 0.0);
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / d;
            }
        }
        true
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[Complex64]> = self.entries.chunks_exact(self.cols).collect();
        f.debug_list().entries(rows).finish()
    }
}

/// Factor of a [`QuantonEnvironmentState`] to keep in [`partial_trace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    Path,
    /// Detector and ancilla together (whatever the state carries).
    Environment,
    Detector,
    Ancilla,
}

/// Reduced density matrix of one factor of the joint quanton state.
///
/// Path states are treated as exactly orthonormal, so the joint state is
/// the vector with components `(j, e) ↦ χ_j[e]`.
pub fn partial_trace(state: &QuantonEnvironmentState, keep: Subsystem) -> Result<ComplexMatrix> {
    let norm_sqr = state.total_norm_sqr();
    if (norm_sqr - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm_sqr });
    }
    let env_dim = state.env_dim();
    let mut dims = vec![2];
    match env_dim {
        1 => {}
        2 => dims.push(2),
        4 => dims.extend([2, 2]),
        other => return Err(Error::EnvironmentDimension(other)),
    }
    let keep_factors: Vec<usize> = match keep {
        Subsystem::Path => vec![0],
        Subsystem::Environment => (1..dims.len()).collect(),
        Subsystem::Detector if dims.len() >= 2 => vec![1],
        Subsystem::Detector => return Err(Error::MissingSubsystem("detector")),
        Subsystem::Ancilla if dims.len() == 3 => vec![2],
        Subsystem::Ancilla => return Err(Error::MissingSubsystem("ancilla")),
    };
    if keep_factors.is_empty() {
        return Err(Error::MissingSubsystem("environment"));
    }
    let [chi1, chi2] = state.chi();
    let amps: Vec<Complex64> = chi1
        .amplitudes()
        .iter()
        .chain(chi2.amplitudes())
        .copied()
        .collect();
    Ok(reduce_pure(&amps, &dims, &keep_factors))
}

/// `Tr_rest |v⟩⟨v|` for a pure multipartite vector with factor sizes `dims`
/// (first factor most significant).
fn reduce_pure(amps: &[Complex64], dims: &[usize], keep: &[usize]) -> ComplexMatrix {
    let keep_dim: usize = keep.iter().map(|&f| dims[f]).product();
    let rest_dim = amps.len() / keep_dim;
    // m[a][r]: amplitude with kept index a and traced index r
    let mut m = vec![ZERO; keep_dim * rest_dim];
    let mut digits = vec![0usize; dims.len()];
    for (flat, &amp) in amps.iter().enumerate() {
        let mut rem = flat;
        for f in (0..dims.len()).rev() {
            digits[f] = rem % dims[f];
            rem /= dims[f];
        }
        let (mut a, mut r) = (0, 0);
        for (f, &digit) in digits.iter().enumerate() {
            if keep.contains(&f) {
                a = a * dims[f] + digit;
            } else {
                r = r * dims[f] + digit;
            }
        }
        m[a * rest_dim + r] = amp;
    }
    let mut rho = ComplexMatrix::zeros(keep_dim, keep_dim);
    for a in 0..keep_dim {
        for b in 0..keep_dim {
            let row_a = &m[a * rest_dim..(a + 1) * rest_dim];
            let row_b = &m[b * rest_dim..(b + 1) * rest_dim];
            rho.entries[a * keep_dim + b] = inner_unchecked(row_b, row_a);
        }
    }
    rho
}

/// Extends a partial isometry, given as input→output pairs, to a unitary.
///
/// The input span is orthonormalized with column pivoting; the same linear
/// combinations of the outputs give an orthonormal basis of the output
/// span. Both bases are then extended over the computational basis and
/// `U = Σ_i |f_i⟩⟨e_i|`.
pub fn complete_unitary(pairs: &[(ComplexVector, ComplexVector)]) -> Result<ComplexMatrix> {
    let Some((first, _)) = pairs.first() else {
        return Err(Error::DimensionMismatch { left: 0, right: 1 });
    };
    let dim = first.dim();
    for (u, v) in pairs {
        check_dims(dim, u.dim())?;
        check_dims(dim, v.dim())?;
    }

    let mut max_deviation: f64 = 0.0;
    for (a, (ua, va)) in pairs.iter().enumerate() {
        for (ub, vb) in &pairs[a..] {
            let gin = inner_unchecked(&ua.amps, &ub.amps);
            let gout = inner_unchecked(&va.amps, &vb.amps);
            max_deviation = max_deviation.max((gin - gout).norm());
        }
    }
    if max_deviation > ISOMETRY_TOL {
        return Err(Error::NotIsometric { max_deviation });
    }

    let inputs: Vec<&ComplexVector> = pairs.iter().map(|(u, _)| u).collect();
    let scale = inputs.iter().map(|u| u.norm()).fold(0.0, f64::max);
    let (in_basis, coeffs) = pivoted_orthonormalize(&inputs, scale * RANK_TOL);

    let mut out_basis: Vec<ComplexVector> = coeffs
        .iter()
        .map(|t| {
            let mut f = vec![ZERO; dim];
            for (c, (_, v)) in t.iter().zip(pairs) {
                for (fi, vi) in f.iter_mut().zip(&v.amps) {
                    *fi += c * vi;
                }
            }
            ComplexVector { amps: f }
        })
        .collect();
    // clean residual non-orthogonality inherited from the tolerance window
    for i in 0..out_basis.len() {
        let mut f = out_basis[i].clone();
        project_out(&mut f.amps, &out_basis[..i]);
        project_out(&mut f.amps, &out_basis[..i]);
        let n = f.norm();
        if n < 0.5 {
            return Err(Error::NotIsometric { max_deviation: 1.0 - n });
        }
        out_basis[i] = f.scale(Complex64::new(1.0 / n, 0.0));
    }

    let in_full = extend_to_basis(in_basis, dim);
    let out_full = extend_to_basis(out_basis, dim);

    let mut u = ComplexMatrix::zeros(dim, dim);
    for (e, f) in in_full.iter().zip(&out_full) {
        for r in 0..dim {
            for c in 0..dim {
                u.entries[r * dim + c] += f.amps[r] * e.amps[c].conj();
            }
        }
    }
    Ok(u)
}

/// Removes the components along an orthonormal `basis` from `v`.
fn project_out(v: &mut [Complex64], basis: &[ComplexVector]) -> Vec<Complex64> {
    let mut overlaps = Vec::with_capacity(basis.len());
    for e in basis {
        let ov = inner_unchecked(&e.amps, v);
        for (vi, ei) in v.iter_mut().zip(&e.amps) {
            *vi -= ov * ei;
        }
        overlaps.push(ov);
    }
    overlaps
}

/// Pivoted Gram–Schmidt with a second orthogonalization pass. Returns the
/// orthonormal basis and, for each basis vector, its coefficients in terms
/// of the original vectors. Candidates whose residual drops to `tol` or
/// below are treated as dependent.
fn pivoted_orthonormalize(
    vectors: &[&ComplexVector],
    tol: f64,
) -> (Vec<ComplexVector>, Vec<Vec<Complex64>>) {
    let m = vectors.len();
    let mut residuals: Vec<Vec<Complex64>> = vectors.iter().map(|v| v.amps.clone()).collect();
    let mut res_coeffs: Vec<Vec<Complex64>> = (0..m)
        .map(|k| {
            let mut c = vec![ZERO; m];
            c[k] = ONE;
            c
        })
        .collect();
    let mut active: Vec<usize> = (0..m).collect();
    let mut basis: Vec<ComplexVector> = Vec::new();
    let mut coeffs: Vec<Vec<Complex64>> = Vec::new();

    while !active.is_empty() {
        let (pos, norm) = active
            .iter()
            .enumerate()
            .map(|(pos, &k)| (pos, residuals[k].iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()))
            .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if norm <= tol {
            break;
        }
        let k = active.swap_remove(pos);
        let mut v = std::mem::take(&mut residuals[k]);
        let mut t = std::mem::take(&mut res_coeffs[k]);
        // re-orthogonalization pass
        let overlaps = project_out(&mut v, &basis);
        for (ov, tb) in overlaps.iter().zip(&coeffs) {
            for (ti, bi) in t.iter_mut().zip(tb) {
                *ti -= ov * bi;
            }
        }
        let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if n <= tol {
            continue;
        }
        let inv = Complex64::new(1.0 / n, 0.0);
        let e = ComplexVector {
            amps: v.iter().map(|a| a * inv).collect(),
        };
        let te: Vec<Complex64> = t.iter().map(|a| a * inv).collect();
        for &l in &active {
            let ov = inner_unchecked(&e.amps, &residuals[l]);
            for (ri, ei) in residuals[l].iter_mut().zip(&e.amps) {
                *ri -= ov * ei;
            }
            for (ci, ti) in res_coeffs[l].iter_mut().zip(&te) {
                *ci -= ov * ti;
            }
        }
        basis.push(e);
        coeffs.push(te);
    }
    (basis, coeffs)
}

/// Completes an orthonormal set to a basis of the full space by drawing on
/// the computational basis, most-independent vector first.
fn extend_to_basis(mut basis: Vec<ComplexVector>, dim: usize) -> Vec<ComplexVector> {
    let mut candidates: Vec<usize> = (0..dim).collect();
    while basis.len() < dim {
        let (pos, mut best) = candidates
            .iter()
            .enumerate()
            .map(|(pos, &k)| {
                let mut v = ComplexVector::basis(dim, k).amps;
                project_out(&mut v, &basis);
                project_out(&mut v, &basis);
                (pos, v)
            })
            .max_by(|a, b| {
                let na: f64 = a.1.iter().map(|x| x.norm_sqr()).sum();
                let nb: f64 = b.1.iter().map(|x| x.norm_sqr()).sum();
                na.total_cmp(&nb)
            })
            .expect("fewer basis vectors than dimensions implies a candidate remains");
        candidates.swap_remove(pos);
        let n = best.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut best {
            *a /= n;
        }
        basis.push(ComplexVector { amps: best });
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::QuantonEnvironmentState;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_vector(rng: &mut impl Rng, dim: usize) -> ComplexVector {
        ComplexVector::new(
            (0..dim)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn inner_examples() {
        let e0 = ComplexVector::basis(2, 0);
        let e1 = ComplexVector::basis(2, 1);
        assert_eq!(inner(&e0, &e0).unwrap(), ONE);
        assert_eq!(inner(&e0, &e1).unwrap(), ZERO);
        let d2 = ComplexVector::from_real(&[0.6, 0.8]);
        assert!((inner(&e0, &d2).unwrap() - c(0.6, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn inner_rejects_mismatched_dims() {
        let err = inner(&ComplexVector::basis(2, 0), &ComplexVector::basis(3, 0)).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { left: 2, right: 3 });
    }

    #[test]
    fn inner_is_conjugate_symmetric() {
        let u = ComplexVector::new(vec![c(1.0, 2.0), c(-0.5, 0.3)]).unwrap();
        let v = ComplexVector::new(vec![c(0.2, -1.0), c(0.7, 0.1)]).unwrap();
        let uv = inner(&u, &v).unwrap();
        let vu = inner(&v, &u).unwrap();
        assert!((uv - vu.conj()).norm() < 1e-15);
    }

    #[test]
    fn tensor_examples() {
        let e0 = ComplexVector::basis(2, 0);
        assert_eq!(tensor(&e0, &e0), ComplexVector::basis(4, 0));
        let ab = ComplexVector::new(vec![c(0.3, 0.1), c(-0.2, 0.9)]).unwrap();
        let t = tensor(&ab, &e0);
        assert_eq!(t.amplitudes(), &[ab[0], ZERO, ab[1], ZERO]);
    }

    #[test]
    fn normalized_reports_correction() {
        let v = ComplexVector::from_real(&[3.0, 4.0]);
        let (n, factor) = v.normalized().unwrap();
        assert!(n.is_normalized());
        assert!((factor - 0.2).abs() < 1e-15);
        assert_eq!(ComplexVector::zeros(2).normalized().unwrap_err(), Error::ZeroVector);
    }

    #[test]
    fn rejects_non_finite() {
        assert_eq!(
            ComplexVector::new(vec![c(f64::NAN, 0.0)]).unwrap_err(),
            Error::NonFinite
        );
    }

    fn detector_state(d2: &[f64]) -> QuantonEnvironmentState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        QuantonEnvironmentState::new(
            ComplexVector::from_real(&[s, 0.0]),
            ComplexVector::from_real(&[d2[0] * s, d2[1] * s]),
        )
        .unwrap()
    }

    #[test]
    fn partial_trace_examples() {
        let cases: [(&[f64], [f64; 4]); 3] = [
            (&[0.0, 1.0], [0.5, 0.0, 0.0, 0.5]),
            (&[1.0, 0.0], [1.0, 0.0, 0.0, 0.0]),
            (&[0.6, 0.8], [0.68, 0.24, 0.24, 0.32]),
        ];
        for (d2, expected) in cases {
            let rho = partial_trace(&detector_state(d2), Subsystem::Detector).unwrap();
            let want = ComplexMatrix::from_real(2, 2, &expected).unwrap();
            assert!(rho.max_abs_diff(&want).unwrap() < 1e-12, "{rho:?}");
            assert!(rho.is_density());
        }
    }

    #[test]
    fn partial_trace_over_path_gives_overlaps() {
        let rho = partial_trace(&detector_state(&[0.6, 0.8]), Subsystem::Path).unwrap();
        let want = ComplexMatrix::from_real(2, 2, &[0.5, 0.3, 0.3, 0.5]).unwrap();
        assert!(rho.max_abs_diff(&want).unwrap() < 1e-12);
    }

    #[test]
    fn partial_trace_errors() {
        let bare = QuantonEnvironmentState::bare();
        assert_eq!(
            partial_trace(&bare, Subsystem::Detector).unwrap_err(),
            Error::MissingSubsystem("detector")
        );
        assert_eq!(
            partial_trace(&detector_state(&[0.0, 1.0]), Subsystem::Ancilla).unwrap_err(),
            Error::MissingSubsystem("ancilla")
        );
        let unnormalized = QuantonEnvironmentState::new_unchecked(
            ComplexVector::from_real(&[1.0, 0.0]),
            ComplexVector::from_real(&[1.0, 0.0]),
        );
        assert!(matches!(
            partial_trace(&unnormalized, Subsystem::Detector),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn density_checks() {
        assert!(ComplexMatrix::from_real(2, 2, &[0.5, 0.0, 0.0, 0.5]).unwrap().is_density());
        // trace 1 but an eigenvalue of -0.1
        assert!(!ComplexMatrix::from_real(2, 2, &[1.1, 0.0, 0.0, -0.1]).unwrap().is_density());
        // not Hermitian
        assert!(!ComplexMatrix::from_real(2, 2, &[0.5, 0.1, 0.0, 0.5]).unwrap().is_density());
    }

    #[test]
    fn complete_identity_from_single_pair() {
        let e0 = ComplexVector::basis(2, 0);
        let u = complete_unitary(&[(e0.clone(), e0.clone())]).unwrap();
        assert!(u.is_unitary());
        assert!(u.apply(&e0).unwrap().max_abs_diff(&e0).unwrap() < 1e-15);
    }

    #[test]
    fn complete_permutation() {
        let perm = [2usize, 0, 3, 1];
        let pairs: Vec<_> = perm
            .iter()
            .enumerate()
            .map(|(i, &j)| (ComplexVector::basis(4, i), ComplexVector::basis(4, j)))
            .collect();
        let u = complete_unitary(&pairs).unwrap();
        for (i, &j) in perm.iter().enumerate() {
            for r in 0..4 {
                let want = if r == j { ONE } else { ZERO };
                assert!((u.get(r, i) - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn complete_rejects_non_isometric() {
        let pairs = [
            (ComplexVector::basis(2, 0), ComplexVector::basis(2, 0)),
            (ComplexVector::basis(2, 1), ComplexVector::basis(2, 0)),
        ];
        assert!(matches!(
            complete_unitary(&pairs),
            Err(Error::NotIsometric { .. })
        ));
    }

    #[test]
    fn complete_handles_dependent_inputs() {
        let v = ComplexVector::from_real(&[0.6, 0.8, 0.0]);
        let w = ComplexVector::from_real(&[0.0, 0.0, 1.0]);
        let u = complete_unitary(&[(v.clone(), w.clone()), (v.clone(), w.clone())]).unwrap();
        assert!(u.is_unitary());
        assert!(u.apply(&v).unwrap().max_abs_diff(&w).unwrap() < 1e-12);
    }

    /// A random unitary built from an independent route: Gram–Schmidt on
    /// random columns, in plain order.
    fn random_unitary(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
        let mut cols: Vec<ComplexVector> = Vec::new();
        while cols.len() < dim {
            let mut v = random_vector(rng, dim);
            project_out(&mut v.amps, &cols);
            project_out(&mut v.amps, &cols);
            let n = v.norm();
            if n > 1e-3 {
                cols.push(v.scale(c(1.0 / n, 0.0)));
            }
        }
        let mut m = ComplexMatrix::zeros(dim, dim);
        for (j, col) in cols.iter().enumerate() {
            for i in 0..dim {
                m.entries[i * dim + j] = col[i];
            }
        }
        m
    }

    #[test]
    fn complete_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..1000 {
            let dim = 2 + trial % 7;
            let target = random_unitary(&mut rng, dim);
            let n_pairs = rng.random_range(1..=dim);
            let pairs: Vec<_> = (0..n_pairs)
                .map(|_| {
                    let u = random_vector(&mut rng, dim);
                    let v = target.apply(&u).unwrap();
                    (u, v)
                })
                .collect();
            let u = complete_unitary(&pairs).unwrap();
            assert!(u.unitarity_defect().unwrap() <= 1e-12, "trial {trial}");
            for (a, b) in &pairs {
                assert!(u.apply(a).unwrap().max_abs_diff(b).unwrap() <= 1e-12);
            }
        }
    }

    fn arb_vector(dim: usize) -> impl Strategy<Value = ComplexVector> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
            .prop_map(|v| ComplexVector::new(v.into_iter().map(|(r, i)| c(r, i)).collect()).unwrap())
    }

    proptest! {
        #[test]
        fn self_inner_is_norm_squared(u in (1usize..9).prop_flat_map(arb_vector)) {
            let ip = inner(&u, &u).unwrap();
            prop_assert!(ip.im.abs() <= 1e-12);
            prop_assert!(ip.re >= 0.0);
            prop_assert!((ip.re - u.norm_sqr()).abs() <= 1e-12);
        }

        #[test]
        fn tensor_norm_is_multiplicative(u in arb_vector(3), v in arb_vector(2)) {
            let t = tensor(&u, &v);
            prop_assert_eq!(t.dim(), 6);
            prop_assert!((t.norm() - u.norm() * v.norm()).abs() <= 1e-12);
        }

        #[test]
        fn tensor_is_associative(u in arb_vector(2), v in arb_vector(3), w in arb_vector(2)) {
            let left = tensor(&tensor(&u, &v), &w);
            let right = tensor(&u, &tensor(&v, &w));
            prop_assert!(left.max_abs_diff(&right).unwrap() <= 1e-15);
        }

        #[test]
        fn partial_trace_is_density(
            chi in (prop::sample::select(vec![1usize, 2, 4]))
                .prop_flat_map(|d| (arb_vector(d), arb_vector(d)))
        ) {
            let total = (chi.0.norm_sqr() + chi.1.norm_sqr()).sqrt();
            prop_assume!(total > 1e-3);
            let s = c(1.0 / total, 0.0);
            let state = QuantonEnvironmentState::new(chi.0.scale(s), chi.1.scale(s)).unwrap();
            let selectors: &[Subsystem] = match state.env_dim() {
                1 => &[Subsystem::Path],
                2 => &[Subsystem::Path, Subsystem::Detector, Subsystem::Environment],
                _ => &[Subsystem::Path, Subsystem::Detector, Subsystem::Ancilla, Subsystem::Environment],
            };
            for &sel in selectors {
                let rho = partial_trace(&state, sel).unwrap();
                prop_assert!(rho.is_density(), "{:?} {:?}", sel, rho);
            }
        }
    }
}
