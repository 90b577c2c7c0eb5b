//! Two-slit interference with a quantum path detector and an ancilla that
//! performs unambiguous discrimination of the detector states.
//!
//! The quanton's two paths become entangled with detector states of overlap
//! `c = ⟨d1|d2⟩`. An ancilla interaction splits the detected quantons into a
//! conclusive sub-ensemble (fraction `1 − c`, which-path known, no fringes)
//! and an inconclusive one (fraction `c`, full fringes), so that the fringe
//! visibility is `V = c` and the path distinguishability is `D_Q = 1 − c`.
//!
//! Modules, bottom up:
//! - [`hilbert`]: small dense complex linear algebra
//! - [`optics`]: slit amplitudes and screen densities
//! - [`detector`]: detector states, the discrimination unitary, projections
//! - [`montecarlo`]: quanton-by-quanton sampling into histograms
//! - [`analysis`]: visibility estimators and duality reports
//! - [`cli`]: the `wpduality` command

pub mod analysis;
pub mod cli;
pub mod detector;
pub mod error;
pub mod hilbert;
pub mod montecarlo;
pub mod optics;

pub use error::{Error, Result};
