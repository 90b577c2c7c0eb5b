//! Quanton-by-quanton sampling of the experiment after the ancilla
//! interaction, and accumulation into sub-ensemble histograms.
//!
//! Each quanton is given a hidden slit, uniformly at random, which drives
//! [`discriminate`]; the resulting ancilla outcome then selects the screen
//! distribution: the fringe-free envelope `g²(x)` on A1, the full-contrast
//! pattern `g²(x)(1 + cos(2πx/Δ))` on A2. The joint statistics of
//! (ancilla, verdict, x) are those of the entangled final state.
//!
//! # Streams
//!
//! A run is split into `n_streams` independent streams. Stream `s` draws
//! from `ChaCha8Rng::seed_from_u64(seed)` switched to stream number `s`
//! (ChaCha's 64-bit stream counter), and receives `⌊N/S⌋` samples plus one
//! more if `s < N mod S`. Per-stream histograms are summed in stream order,
//! so results depend only on `(seed, n_streams)`.

use std::io::{self, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::analysis::{
    duality_report, visibility_phasor_histogram, DualityReport, MeasuredVisibilities,
};
use crate::detector::{build_uqsd, check_overlap, discriminate, AncillaOutcome, PathVerdict, UqsdUnitary};
use crate::error::{Error, Result};
use crate::optics::{Path, SlitGeometry};

pub const MIN_BINS: usize = 16;
/// Smallest window half-width, in envelope widths.
pub const MIN_WINDOW_WIDTHS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub overlap: f64,
    pub geometry: SlitGeometry,
    pub n_samples: u64,
    pub seed: u64,
    pub n_bins: usize,
    /// Histogram window half-width in meters.
    pub x_max: f64,
    pub n_streams: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            overlap: 0.5,
            geometry: SlitGeometry::default(),
            n_samples: 1_000_000,
            seed: 42,
            n_bins: 4096,
            x_max: SlitGeometry::DEFAULT_WINDOW,
            n_streams: 8,
        }
    }
}

impl RunConfig {
    /// Every violated constraint, or an empty list.
    pub fn problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if check_overlap(self.overlap).is_err() {
            problems.push(format!("overlap must lie in [0, 1] (got {})", self.overlap));
        }
        if self.n_bins < MIN_BINS {
            problems.push(format!("bins must be at least {MIN_BINS} (got {})", self.n_bins));
        }
        let min_window = MIN_WINDOW_WIDTHS * self.geometry.envelope_width();
        if !(self.x_max.is_finite() && self.x_max >= min_window * (1.0 - 1e-12)) {
            problems.push(format!(
                "window must be at least {MIN_WINDOW_WIDTHS} envelope widths ({min_window} m, got {})",
                self.x_max
            ));
        }
        if self.n_streams == 0 {
            problems.push("streams must be at least 1".to_string());
        }
        problems
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantonRecord {
    pub ancilla: AncillaOutcome,
    pub verdict: PathVerdict,
    pub x: f64,
    /// The slit that drove the detector; not observable in the experiment.
    pub true_path: Path,
}

/// Draws screen positions from `g²(x)(1 + V·cos(2πx/Δ))` by rejection from
/// the envelope `g²(x)`, scaled by `1 + V`.
#[derive(Debug, Clone, Copy)]
pub struct FringeSampler {
    visibility: f64,
    wavenumber: f64,
    envelope: Normal<f64>,
}

impl FringeSampler {
    pub fn new(visibility: f64, geom: &SlitGeometry) -> Result<Self> {
        let visibility = check_overlap(visibility)?;
        Ok(Self {
            visibility,
            wavenumber: geom.fringe_wavenumber(),
            envelope: Normal::new(0.0, geom.envelope_width())
                .map_err(|e| Error::InvalidGeometry(e.to_string()))?,
        })
    }

    /// target(x) / ((1 + V)·g²(x)); never above one.
    pub fn acceptance(&self, x: f64) -> f64 {
        (1.0 + self.visibility * (self.wavenumber * x).cos()) / (1.0 + self.visibility)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let x = self.envelope.sample(rng);
            if self.visibility == 0.0 || rng.random::<f64>() < self.acceptance(x) {
                return x;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuantonSampler {
    uqsd: UqsdUnitary,
    fringe_free: FringeSampler,
    full_fringes: FringeSampler,
}

impl QuantonSampler {
    pub fn new(c: f64, geom: &SlitGeometry) -> Result<Self> {
        Ok(Self {
            uqsd: build_uqsd(c)?,
            fringe_free: FringeSampler::new(0.0, geom)?,
            full_fringes: FringeSampler::new(1.0, geom)?,
        })
    }

    pub fn uqsd(&self) -> &UqsdUnitary {
        &self.uqsd
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> QuantonRecord {
        let true_path = if rng.random::<bool>() { Path::One } else { Path::Two };
        let verdict = discriminate(true_path, &self.uqsd, rng);
        let (ancilla, x) = if verdict.is_conclusive() {
            (AncillaOutcome::A1, self.fringe_free.sample(rng))
        } else {
            (AncillaOutcome::A2, self.full_fringes.sample(rng))
        };
        QuantonRecord {
            ancilla,
            verdict,
            x,
            true_path,
        }
    }
}

/// Single draw; builds the interaction on every call, so prefer
/// [`QuantonSampler`] in loops.
pub fn sample_quanton<R: Rng + ?Sized>(c: f64, geom: &SlitGeometry, rng: &mut R) -> Result<QuantonRecord> {
    Ok(QuantonSampler::new(c, geom)?.sample(rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleTag {
    A1,
    A2,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubEnsembleHistogram {
    pub tag: EnsembleTag,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl SubEnsembleHistogram {
    pub fn new(tag: EnsembleTag, x_max: f64, n_bins: usize) -> Self {
        let width = 2.0 * x_max / n_bins as f64;
        let bin_edges = (0..=n_bins)
            .map(|k| if k == n_bins { x_max } else { -x_max + k as f64 * width })
            .collect();
        Self {
            tag,
            bin_edges,
            counts: vec![0; n_bins],
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn add_counts(&mut self, other: &Self) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

/// Bin lookup over `[-x_max, x_max]`; `None` outside the window.
fn bin_index(x: f64, x_max: f64, n_bins: usize) -> Option<usize> {
    if !(x.abs() <= x_max) {
        return None;
    }
    let k = ((x + x_max) / (2.0 * x_max) * n_bins as f64).floor() as usize;
    Some(k.min(n_bins - 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histograms {
    pub a1: SubEnsembleHistogram,
    pub a2: SubEnsembleHistogram,
    pub all: SubEnsembleHistogram,
}

pub const HISTOGRAM_CSV_HEADER: &str = "bin_left_m,bin_right_m,count_a1,count_a2,count_all";

impl Histograms {
    fn empty(x_max: f64, n_bins: usize) -> Self {
        Self {
            a1: SubEnsembleHistogram::new(EnsembleTag::A1, x_max, n_bins),
            a2: SubEnsembleHistogram::new(EnsembleTag::A2, x_max, n_bins),
            all: SubEnsembleHistogram::new(EnsembleTag::All, x_max, n_bins),
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{HISTOGRAM_CSV_HEADER}")?;
        for (k, edge) in self.all.bin_edges.windows(2).enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                edge[0], edge[1], self.a1.counts[k], self.a2.counts[k], self.all.counts[k]
            )?;
        }
        Ok(())
    }
}

/// Per-record tallies, including samples that fell outside the window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RecordSummary {
    pub n_samples: u64,
    pub a1: u64,
    pub a2: u64,
    pub slit1: u64,
    pub slit2: u64,
    /// Conclusive verdicts that named the wrong slit.
    pub wrong_verdicts: u64,
    pub out_of_window: u64,
}

impl RecordSummary {
    pub fn a2_fraction(&self) -> Option<f64> {
        (self.n_samples > 0).then(|| self.a2 as f64 / self.n_samples as f64)
    }

    pub fn conclusive_fraction(&self) -> Option<f64> {
        (self.n_samples > 0).then(|| (self.slit1 + self.slit2) as f64 / self.n_samples as f64)
    }

    fn add(&mut self, o: &Self) {
        self.n_samples += o.n_samples;
        self.a1 += o.a1;
        self.a2 += o.a2;
        self.slit1 += o.slit1;
        self.slit2 += o.slit2;
        self.wrong_verdicts += o.wrong_verdicts;
        self.out_of_window += o.out_of_window;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: RunConfig,
    pub histograms: Histograms,
    pub summary: RecordSummary,
    /// Phasor visibilities of the three histograms, where estimable.
    pub measured: MeasuredVisibilities,
}

impl ExperimentResult {
    pub fn report(&self) -> Result<DualityReport> {
        duality_report(self.config.overlap, Some(&self.measured))
    }
}

pub fn stream_rng(seed: u64, stream: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

fn run_stream(
    sampler: &QuantonSampler,
    config: &RunConfig,
    stream: usize,
    n: u64,
) -> (Histograms, RecordSummary) {
    let mut rng = stream_rng(config.seed, stream);
    let mut hist = Histograms::empty(config.x_max, config.n_bins);
    let mut summary = RecordSummary {
        n_samples: n,
        ..Default::default()
    };
    for _ in 0..n {
        let rec = sampler.sample(&mut rng);
        match rec.ancilla {
            AncillaOutcome::A1 => summary.a1 += 1,
            AncillaOutcome::A2 => summary.a2 += 1,
        }
        match rec.verdict {
            PathVerdict::Slit1 => summary.slit1 += 1,
            PathVerdict::Slit2 => summary.slit2 += 1,
            PathVerdict::Inconclusive => {}
        }
        if rec.verdict.path().is_some_and(|p| p != rec.true_path) {
            summary.wrong_verdicts += 1;
        }
        let Some(k) = bin_index(rec.x, config.x_max, config.n_bins) else {
            summary.out_of_window += 1;
            continue;
        };
        match rec.ancilla {
            AncillaOutcome::A1 => hist.a1.counts[k] += 1,
            AncillaOutcome::A2 => hist.a2.counts[k] += 1,
        }
        hist.all.counts[k] += 1;
    }
    (hist, summary)
}

pub fn run_experiment(config: &RunConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let sampler = QuantonSampler::new(config.overlap, &config.geometry)?;
    let streams = config.n_streams as u64;
    let per_stream: Vec<u64> = (0..streams)
        .map(|s| config.n_samples / streams + u64::from(s < config.n_samples % streams))
        .collect();

    let partials: Vec<(Histograms, RecordSummary)> = per_stream
        .par_iter()
        .enumerate()
        .map(|(s, &n)| run_stream(&sampler, config, s, n))
        .collect();

    let mut histograms = Histograms::empty(config.x_max, config.n_bins);
    let mut summary = RecordSummary::default();
    for (h, s) in &partials {
        histograms.a1.add_counts(&h.a1);
        histograms.a2.add_counts(&h.a2);
        histograms.all.add_counts(&h.all);
        summary.add(s);
    }

    let geom = &config.geometry;
    let measured = MeasuredVisibilities {
        all: visibility_phasor_histogram(&histograms.all, geom).ok(),
        a1: visibility_phasor_histogram(&histograms.a1, geom).ok(),
        a2: visibility_phasor_histogram(&histograms.a2, geom).ok(),
    };
    Ok(ExperimentResult {
        config: config.clone(),
        histograms,
        summary,
        measured,
    })
}
