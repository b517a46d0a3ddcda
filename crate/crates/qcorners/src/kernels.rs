//! Triangular smoothing kernels and fiber convolution.
//!
//! `triangular(H)` is the unit-mass weight `h ↦ (1/⌊H⌋)(1 − |h|/⌊H⌋)₊` on ℤ
//! (the floor is taken before any arithmetic, so fractional `H` is legal and
//! `triangular(2.9) == triangular(2)`). `stretch` moves the weights onto the
//! progression `q·ℤ`. Weights are exact rationals with a float mirror; every
//! mass/symmetry check runs on the rational side.

use std::cell::RefCell;
use std::fmt;

use num::rational::Ratio;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::Fiber;

/// Exact kernel weight.
pub type Weight = Ratio<i64>;

/// Convolution path selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvMethod {
    /// Sparse direct sum over the kernel's nonzero offsets.
    Direct,
    /// Zero-padded FFT (no wraparound).
    Fft,
    /// Direct below [`DEFAULT_FFT_CROSSOVER`], FFT above.
    Auto,
}

/// `Auto` switches to the FFT when (fiber length) × (kernel span) exceeds this.
pub const DEFAULT_FFT_CROSSOVER: usize = 1 << 15;

/// A symmetric, unit-mass weight function on ℤ supported on a progression `q·ℤ`.
#[derive(Debug, Clone)]
pub struct Kernel {
    stride: i64,
    halfwidth: f64,
    /// Ascending offsets with nonzero weight.
    offsets: Vec<i64>,
    exact: Vec<Weight>,
    approx: Vec<f64>,
}

impl PartialEq for Kernel {
    /// Kernels are equal when they are the same weight function; the stride
    /// and halfwidth fields are construction metadata.
    fn eq(&self, other: &Self) -> bool {
        self.offsets == other.offsets && self.exact == other.exact
    }
}

impl Eq for Kernel {}

/// The triangular kernel of halfwidth `H` (stride 1).
///
/// Weights are `(⌊H⌋ − |h|)/⌊H⌋²` for `|h| < ⌊H⌋`; the mass is exactly 1.
pub fn triangular(h: f64) -> Result<Kernel> {
    if !(h >= 1.0) {
        return Err(Error::Domain(format!(
            "triangular kernel needs halfwidth >= 1, got {h}"
        )));
    }
    let hf = h.floor() as i64;
    let mut offsets = Vec::with_capacity((2 * hf - 1) as usize);
    let mut exact = Vec::with_capacity(offsets.capacity());
    for k in -(hf - 1)..=(hf - 1) {
        offsets.push(k);
        exact.push(Ratio::new(hf - k.abs(), hf * hf));
    }
    Ok(Kernel::from_parts(1, h, offsets, exact))
}

impl Kernel {
    fn from_parts(stride: i64, halfwidth: f64, offsets: Vec<i64>, exact: Vec<Weight>) -> Kernel {
        let approx = exact
            .iter()
            .map(|w| *w.numer() as f64 / *w.denom() as f64)
            .collect();
        Kernel {
            stride,
            halfwidth,
            offsets,
            exact,
            approx,
        }
    }

    /// Moves the weights onto `q·ℤ`: `w'(q·h) = w(h)`.
    ///
    /// Only stride-1 kernels can be stretched; `stretch(k, 1)` is `k` itself.
    pub fn stretch(&self, q: i64) -> Result<Kernel> {
        if q <= 0 {
            return Err(Error::Domain(format!("stretch stride must be >= 1, got {q}")));
        }
        if self.stride != 1 {
            return Err(Error::Domain(
                "stretch requires a stride-1 kernel".to_string(),
            ));
        }
        if q == 1 {
            return Ok(self.clone());
        }
        let offsets = self.offsets.iter().map(|h| h * q).collect();
        Ok(Kernel::from_parts(
            q,
            self.halfwidth,
            offsets,
            self.exact.clone(),
        ))
    }

    /// The convolution of two weight tables, in exact arithmetic.
    ///
    /// Used by the associativity self-checks; mass 1 is preserved exactly.
    #[must_use]
    pub fn compose(&self, other: &Kernel) -> Kernel {
        use std::collections::BTreeMap;
        let mut acc: BTreeMap<i64, Weight> = BTreeMap::new();
        for (h1, w1) in self.iter_exact() {
            for (h2, w2) in other.iter_exact() {
                *acc.entry(h1 + h2).or_insert_with(|| Ratio::new(0, 1)) += w1 * w2;
            }
        }
        acc.retain(|_, w| *w.numer() != 0);
        let offsets: Vec<i64> = acc.keys().copied().collect();
        let exact: Vec<Weight> = acc.values().copied().collect();
        let stride = offsets
            .iter()
            .filter(|h| **h != 0)
            .fold(0i64, |g, h| num::integer::gcd(g, h.abs()))
            .max(1);
        let halfwidth = (offsets.iter().map(|h| h.abs()).max().unwrap_or(0) / stride + 1) as f64;
        Kernel::from_parts(stride, halfwidth, offsets, exact)
    }

    /// The progression stride `q`.
    #[must_use]
    pub fn stride(&self) -> i64 {
        self.stride
    }

    /// The halfwidth parameter `H` the kernel was built with.
    #[must_use]
    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    /// Ascending offsets with nonzero weight.
    #[must_use]
    pub fn support(&self) -> &[i64] {
        &self.offsets
    }

    /// Largest |offset| in the support (0 for a point mass).
    #[must_use]
    pub fn max_abs_offset(&self) -> i64 {
        self.offsets
            .iter()
            .map(|h| h.abs())
            .max()
            .unwrap_or(0)
    }

    /// Number of points in the dense span `[−max, max]`.
    #[must_use]
    pub fn span_len(&self) -> usize {
        (2 * self.max_abs_offset() + 1) as usize
    }

    /// Float weight at `h` (0 off the support).
    #[must_use]
    pub fn weight(&self, h: i64) -> f64 {
        match self.offsets.binary_search(&h) {
            Ok(i) => self.approx[i],
            Err(_) => 0.0,
        }
    }

    /// Exact weight at `h` (0 off the support).
    #[must_use]
    pub fn weight_exact(&self, h: i64) -> Weight {
        match self.offsets.binary_search(&h) {
            Ok(i) => self.exact[i],
            Err(_) => Ratio::new(0, 1),
        }
    }

    /// Iterates `(offset, float weight)` in ascending offset order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.offsets.iter().copied().zip(self.approx.iter().copied())
    }

    /// Iterates `(offset, exact weight)` in ascending offset order.
    pub fn iter_exact(&self) -> impl Iterator<Item = (i64, Weight)> + '_ {
        self.offsets.iter().copied().zip(self.exact.iter().copied())
    }

    /// Exact total mass (1 for every kernel built here).
    #[must_use]
    pub fn mass_exact(&self) -> Weight {
        self.exact
            .iter()
            .fold(Ratio::new(0, 1), |acc, w| acc + *w)
    }

    /// Exact symmetry check `w(h) == w(−h)`.
    #[must_use]
    pub fn is_symmetric(&self) -> bool {
        self.iter_exact().all(|(h, w)| self.weight_exact(-h) == w)
    }
}

impl fmt::Display for Kernel {
    /// One `offset numer/denom` line per support point.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (h, w) in self.iter_exact() {
            writeln!(f, "{h} {}/{}", w.numer(), w.denom())?;
        }
        Ok(())
    }
}

/// `(f∗k)(y) = Σ_h f(y−h) k(h)` on the support of `f` dilated by that of `k`.
#[must_use]
pub fn convolve(f: &Fiber, k: &Kernel, method: ConvMethod) -> Fiber {
    convolve_with_crossover(f, k, method, DEFAULT_FFT_CROSSOVER)
}

/// [`convolve`] with an explicit `Auto` crossover (fiber length × kernel span).
#[must_use]
pub fn convolve_with_crossover(
    f: &Fiber,
    k: &Kernel,
    method: ConvMethod,
    crossover: usize,
) -> Fiber {
    if f.is_empty() {
        return Fiber::new(f.y_lo(), Vec::new());
    }
    let use_fft = match method {
        ConvMethod::Direct => false,
        ConvMethod::Fft => true,
        ConvMethod::Auto => f.len().saturating_mul(k.span_len()) > crossover,
    };
    if use_fft {
        convolve_fft(f, k)
    } else {
        convolve_direct(f, k)
    }
}

fn convolve_direct(f: &Fiber, k: &Kernel) -> Fiber {
    let w = k.max_abs_offset();
    let out_lo = f.y_lo() - w;
    let out_len = f.len() + 2 * w as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); out_len];
    let vals = f.values();
    for (h, wt) in k.iter() {
        // out[y] += wt · f(y − h): the f block lands at offset h + w.
        let base = (h + w) as usize;
        for (i, v) in vals.iter().enumerate() {
            out[base + i] += wt * v;
        }
    }
    Fiber::new(out_lo, out)
}

fn convolve_fft(f: &Fiber, k: &Kernel) -> Fiber {
    let w = k.max_abs_offset();
    let mut dense = vec![Complex64::new(0.0, 0.0); k.span_len()];
    for (h, wt) in k.iter() {
        dense[(h + w) as usize] = Complex64::new(wt, 0.0);
    }
    let out = fft_linear_convolution(f.values(), &dense);
    Fiber::new(f.y_lo() - w, out)
}

thread_local! {
    // One planner per worker thread; plans are cached inside the planner.
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Full linear convolution of two dense complex sequences via zero-padded FFT.
///
/// Output length is `a.len() + b.len() − 1`; padding guarantees no wraparound.
pub(crate) fn fft_linear_convolution(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let out_len = a.len() + b.len() - 1;
    let n = out_len.next_power_of_two();
    let mut fa = vec![Complex64::new(0.0, 0.0); n];
    let mut fb = vec![Complex64::new(0.0, 0.0); n];
    fa[..a.len()].copy_from_slice(a);
    fb[..b.len()].copy_from_slice(b);
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        let fwd = planner.plan_fft_forward(n);
        fwd.process(&mut fa);
        fwd.process(&mut fb);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x *= y;
        }
        let inv = planner.plan_fft_inverse(n);
        inv.process(&mut fa);
    });
    let scale = 1.0 / n as f64;
    fa.truncate(out_len);
    for v in &mut fa {
        *v *= scale;
    }
    fa
}
