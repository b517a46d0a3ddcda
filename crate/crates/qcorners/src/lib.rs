//! Counting and regularity toolkit for quadratic corner patterns
//! `(x, y), (x+d, y), (x, y+d²)` on finite 2-D grids.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`] — windows, bit-packed set indicators, dense complex functions,
//!   vertical fibers, and the set/function text formats.
//! * [`kernels`] — triangular (Fejér) weights, their stretched variants, and
//!   fiber convolution with direct and FFT paths.
//! * [`gowers`] — difference functions and `U^s` uniformity norms.
//! * [`expsums`] — torus distance, quadratic exponential sums, Fourier
//!   coefficients, rational approximation certificates, frequency clustering
//!   and spectrum scans.
//! * [`counting`] — the weighted counting operator, exact per-difference
//!   counts (naive and bit-parallel), dual functions, and the triangle
//!   path-count lower bound.
//! * [`energy`] — the fiberwise smoothing energy, the irregularity
//!   functional, and the stride-refining energy increment iteration.
//! * [`popular`] — the popular-difference search pipeline, brute-force
//!   oracles, threshold verdicts, and the 1-D lift.
//! * [`gen`] — seeded set/function generators.
//! * [`runner`] — experiment configs, report files, and the task runner the
//!   CLI wraps.
//!
//! With the default `parallel` feature the heavy loops run on rayon; disabling
//! it yields a dependency-free sequential build with bit-identical results.

pub mod counting;
pub mod energy;
pub mod error;
pub mod expsums;
pub mod gen;
pub mod gowers;
pub mod grid;
pub mod kernels;
pub mod popular;
pub mod runner;

mod fmt;
mod par;

pub use error::{Error, Result};
