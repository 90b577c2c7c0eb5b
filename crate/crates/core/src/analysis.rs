//! Fringe visibility estimation and the wave–particle duality quantities.

use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::detector::check_overlap;
use crate::error::{Error, Result};
use crate::montecarlo::SubEnsembleHistogram;
use crate::optics::{DensityCurve, SlitGeometry};

/// Tolerance for the algebraic duality identities.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Width of the statistical band, in standard errors, applied to measured
/// visibilities before testing the duality inequalities.
pub const SIGMA_BAND: f64 = 5.0;
/// Finest grid step accepted by the extremum estimator, in fringe periods.
pub const MIN_POINTS_PER_PERIOD: f64 = 32.0;
pub const MIN_PHASOR_SAMPLES: u64 = 100;
/// Largest visibility estimate that may be reported.
pub const MAX_REPORTED_VISIBILITY: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EstimatorMethod {
    BornNeighborhood,
    Phasor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeEstimate {
    pub v_hat: f64,
    pub std_error: f64,
    pub method: EstimatorMethod,
    /// `v_hat` lies in (1, 1.05], above the physical range by noise.
    pub overshoot: bool,
}

impl FringeEstimate {
    fn new(v_hat: f64, std_error: f64, method: EstimatorMethod) -> Result<Self> {
        if !v_hat.is_finite() || !(0.0..=MAX_REPORTED_VISIBILITY).contains(&v_hat) {
            return Err(Error::EstimateOutOfRange(v_hat));
        }
        Ok(Self {
            v_hat,
            std_error,
            method,
            overshoot: v_hat > 1.0,
        })
    }
}

pub fn visibility_analytic(c: f64) -> Result<f64> {
    check_overlap(c)
}

pub fn distinguishability_q(c: f64) -> Result<f64> {
    Ok(1.0 - check_overlap(c)?)
}

pub fn englert_d(c: f64) -> Result<f64> {
    let c = check_overlap(c)?;
    Ok((1.0 - c * c).sqrt())
}

/// Sub-grid extremum from the parabola through `i-1, i, i+1`.
fn refine_extremum(f: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= f.len() {
        return f[i];
    }
    let (y0, y1, y2) = (f[i - 1], f[i], f[i + 1]);
    let curvature = y0 - 2.0 * y1 + y2;
    if curvature == 0.0 {
        return y1;
    }
    let offset = 0.5 * (y0 - y2) / curvature;
    if offset.abs() > 1.0 {
        return y1;
    }
    y1 - 0.25 * (y0 - y2) * offset
}

/// `(I_max − I_min)/(I_max + I_min)` of the envelope-normalized curve over the
/// central fringe period `[−Δ/2, Δ/2]`.
pub fn visibility_born(curve: &DensityCurve, geom: &SlitGeometry) -> Result<FringeEstimate> {
    let period = geom.fringe_period();
    if curve.grid.len() < 2 {
        return Err(Error::WindowTooSmall);
    }
    let step = curve.step();
    let limit = period / MIN_POINTS_PER_PERIOD;
    if step > limit {
        return Err(Error::InsufficientResolution { step, limit });
    }
    let half = 0.5 * period;
    let (first, last) = (curve.grid[0], curve.grid[curve.grid.len() - 1]);
    if first > -half || last < half {
        return Err(Error::WindowTooSmall);
    }

    let normalized = curve.envelope_normalized(geom);
    let central: Vec<usize> = (0..curve.grid.len())
        .filter(|&k| curve.grid[k].abs() <= half)
        .collect();
    let by_value = |a: &&usize, b: &&usize| normalized[**a].total_cmp(&normalized[**b]);
    let i_max = *central.iter().max_by(by_value).ok_or(Error::WindowTooSmall)?;
    let i_min = *central.iter().min_by(by_value).ok_or(Error::WindowTooSmall)?;

    let hi = refine_extremum(&normalized, i_max).max(normalized[i_max]);
    let lo = refine_extremum(&normalized, i_min).min(normalized[i_min]).max(0.0);
    let v = if hi + lo > 0.0 { (hi - lo) / (hi + lo) } else { 0.0 };
    FringeEstimate::new(v, 0.0, EstimatorMethod::BornNeighborhood)
}

/// `2·|Σ w_k exp(i·2πx_k/Δ)| / Σ w_k`
fn weighted_phasor(points: impl Iterator<Item = (f64, f64)>, geom: &SlitGeometry) -> f64 {
    let k = geom.fringe_wavenumber();
    let (sum, weight) = points.fold((Complex64::new(0.0, 0.0), 0.0), |(s, w), (x, wt)| {
        (s + Complex64::from_polar(wt, k * x), w + wt)
    });
    if weight > 0.0 {
        2.0 * sum.norm() / weight
    } else {
        0.0
    }
}

/// Phasor estimate from individual screen positions.
pub fn visibility_phasor(samples: &[f64], geom: &SlitGeometry) -> Result<FringeEstimate> {
    let n = samples.len() as u64;
    if n < MIN_PHASOR_SAMPLES {
        return Err(Error::TooFewSamples { got: n, need: MIN_PHASOR_SAMPLES });
    }
    let v = weighted_phasor(samples.iter().map(|&x| (x, 1.0)), geom);
    FringeEstimate::new(v, (2.0 / n as f64).sqrt(), EstimatorMethod::Phasor)
}

/// Phasor estimate from a histogram, placing every count at its bin center.
pub fn visibility_phasor_histogram(
    hist: &SubEnsembleHistogram,
    geom: &SlitGeometry,
) -> Result<FringeEstimate> {
    let n = hist.total();
    if n < MIN_PHASOR_SAMPLES {
        return Err(Error::TooFewSamples { got: n, need: MIN_PHASOR_SAMPLES });
    }
    let points = hist
        .bin_edges
        .windows(2)
        .zip(&hist.counts)
        .map(|(e, &count)| (0.5 * (e[0] + e[1]), count as f64));
    let v = weighted_phasor(points, geom);
    FringeEstimate::new(v, (2.0 / n as f64).sqrt(), EstimatorMethod::Phasor)
}

/// Phasor estimate of a noiseless density curve, weighting grid points by
/// their density.
pub fn visibility_phasor_curve(curve: &DensityCurve, geom: &SlitGeometry) -> Result<FringeEstimate> {
    if curve.grid.len() < 2 {
        return Err(Error::WindowTooSmall);
    }
    let v = weighted_phasor(curve.grid.iter().copied().zip(curve.values.iter().copied()), geom);
    FringeEstimate::new(v, 0.0, EstimatorMethod::Phasor)
}

/// Measured visibilities of the three sub-ensembles; any may be missing.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeasuredVisibilities {
    pub all: Option<FringeEstimate>,
    pub a1: Option<FringeEstimate>,
    pub a2: Option<FringeEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualityReport {
    pub c: f64,
    pub v_analytic: f64,
    pub v_measured_all: Option<FringeEstimate>,
    pub v_measured_a1: Option<FringeEstimate>,
    pub v_measured_a2: Option<FringeEstimate>,
    pub d_q: f64,
    pub d_englert: f64,
    /// D_Q + V
    pub sum_dq_v: f64,
    /// V² + D²
    pub sum_v2_d2: f64,
    /// `1 − √(1 − D²) − D_Q`
    pub bridge_residual: f64,
    /// `1 − (D_Q + V')` with V' the band-lowered measured visibility
    /// (or the analytic one without measurements).
    pub linear_slack: f64,
    /// `1 − (V'² + D²)`
    pub quadratic_slack: f64,
    pub pass_identity: bool,
    pub pass_inequality: bool,
}

/// Evaluates `D_Q + V = 1` and `V² + D² = 1` analytically, and
/// `D_Q + V ≤ 1`, `V² + D² ≤ 1` with the measured ALL-ensemble visibility
/// substituted. The measured value is first lowered by [`SIGMA_BAND`]
/// standard errors.
pub fn duality_report(c: f64, measurements: Option<&MeasuredVisibilities>) -> Result<DualityReport> {
    let v = visibility_analytic(c)?;
    let d_q = distinguishability_q(c)?;
    let d = englert_d(c)?;
    let sum_dq_v = d_q + v;
    let sum_v2_d2 = v * v + d * d;
    let bridge_residual = 1.0 - (1.0 - d * d).sqrt() - d_q;

    let measured = measurements.copied().unwrap_or_default();
    let v_test = match measured.all {
        Some(est) => (est.v_hat - SIGMA_BAND * est.std_error).max(0.0),
        None => v,
    };
    let linear_slack = 1.0 - (d_q + v_test);
    let quadratic_slack = 1.0 - (v_test * v_test + d * d);

    Ok(DualityReport {
        c,
        v_analytic: v,
        v_measured_all: measured.all,
        v_measured_a1: measured.a1,
        v_measured_a2: measured.a2,
        d_q,
        d_englert: d,
        sum_dq_v,
        sum_v2_d2,
        bridge_residual,
        linear_slack,
        quadratic_slack,
        pass_identity: (sum_dq_v - 1.0).abs() <= IDENTITY_TOL
            && (sum_v2_d2 - 1.0).abs() <= IDENTITY_TOL,
        pass_inequality: linear_slack >= -IDENTITY_TOL && quadratic_slack >= -IDENTITY_TOL,
    })
}

/// Flat form of a [`DualityReport`] with the published field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityRecord {
    pub c: f64,
    pub v_analytic: f64,
    pub v_all: Option<f64>,
    pub v_a1: Option<f64>,
    pub v_a2: Option<f64>,
    pub d_q: f64,
    pub d_englert: f64,
    pub sum_dq_v: f64,
    pub sum_v2_d2: f64,
    pub pass_identity: bool,
    pub pass_inequality: bool,
}

pub const SWEEP_CSV_HEADER: &str =
    "c,v_analytic,v_all,v_a1,v_a2,d_q,d_englert,sum_dq_v,sum_v2_d2,pass_identity,pass_inequality";

impl DualityReport {
    pub fn record(&self) -> DualityRecord {
        DualityRecord {
            c: self.c,
            v_analytic: self.v_analytic,
            v_all: self.v_measured_all.map(|e| e.v_hat),
            v_a1: self.v_measured_a1.map(|e| e.v_hat),
            v_a2: self.v_measured_a2.map(|e| e.v_hat),
            d_q: self.d_q,
            d_englert: self.d_englert,
            sum_dq_v: self.sum_dq_v,
            sum_v2_d2: self.sum_v2_d2,
            pass_identity: self.pass_identity,
            pass_inequality: self.pass_inequality,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.record()).expect("record is serializable")
    }
}

impl DualityRecord {
    pub fn write_csv_row<W: Write>(&self, mut out: W) -> io::Result<()> {
        fn opt(v: Option<f64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.c,
            self.v_analytic,
            opt(self.v_all),
            opt(self.v_a1),
            opt(self.v_a2),
            self.d_q,
            self.d_englert,
            self.sum_dq_v,
            self.sum_v2_d2,
            self.pass_identity,
            self.pass_inequality
        )
    }
}

pub fn write_sweep_csv<W: Write>(reports: &[DualityReport], mut out: W) -> io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in reports {
        r.record().write_csv_row(&mut out)?;
    }
    Ok(())
}
