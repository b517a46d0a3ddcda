//! Difference functions and Gowers `U^s` uniformity norms on fibers.
//!
//! The norm here is the unnormalized one: sums run over ℤ (i.e. over the
//! finite support), with no averaging. Callers compare against a reference
//! indicator's norm when they need a normalized statement. For complex input
//! the standard alternating convention applies: the factor at cube corner ω is
//! conjugated when ω has an odd number of ones, which is exactly what iterating
//! `diff_fn` produces.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Fiber;
use crate::kernels;
use crate::par;

/// The order `s` of a `U^s` norm; desk scale caps it at 6.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GowersOrder(u32);

impl GowersOrder {
    /// Validates `1 ≤ s ≤ 6`.
    pub fn new(s: u32) -> Result<Self> {
        if (1..=6).contains(&s) {
            Ok(GowersOrder(s))
        } else {
            Err(Error::Domain(format!("Gowers order must be in 1..=6, got {s}")))
        }
    }

    /// The raw order.
    #[must_use]
    pub fn get(&self) -> u32 {
        self.0
    }
}

/// `Δ_h f: x ↦ f(x)·conj(f(x+h))` on the overlap of the two supports.
///
/// An empty overlap yields the canonical empty fiber (at 0), so iterated
/// differences compare equal regardless of the order the `h`'s were applied.
#[must_use]
pub fn diff_fn(f: &Fiber, h: i64) -> Fiber {
    let Some(f_hi) = f.y_hi() else {
        return Fiber::new(0, Vec::new());
    };
    // x must satisfy x ∈ supp f and x + h ∈ supp f.
    let lo = f.y_lo().max(f.y_lo() - h);
    let hi = f_hi.min(f_hi - h);
    if lo > hi {
        return Fiber::new(0, Vec::new());
    }
    let values = (lo..=hi)
        .map(|x| f.value_at(x) * f.value_at(x + h).conj())
        .collect();
    Fiber::new(lo, values)
}

/// Autocorrelation `c(h) = Σ_x f(x)·conj(f(x+h))` for `|h| < len(f)`.
///
/// This is also `Σ_x Δ_h f(x)`; the FFT route kicks in for long fibers.
fn autocorrelation(f: &Fiber) -> Vec<Complex64> {
    let n = f.len();
    if n == 0 {
        return Vec::new();
    }
    let vals = f.values();
    if n < 256 {
        // c[h + n − 1] for h in −(n−1)..=(n−1)
        let mut c = vec![Complex64::new(0.0, 0.0); 2 * n - 1];
        for (h_idx, slot) in c.iter_mut().enumerate() {
            let h = h_idx as i64 - (n as i64 - 1);
            let (a, b) = if h >= 0 {
                (0usize, h as usize)
            } else {
                ((-h) as usize, 0usize)
            };
            let m = n - a.max(b);
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..m {
                acc += vals[a + i] * vals[b + i].conj();
            }
            *slot = acc;
        }
        return c;
    }
    // (f ∗ rev(conj f))(m) = c(n−1−m); reverse to index by h.
    let rev_conj: Vec<Complex64> = vals.iter().rev().map(Complex64::conj).collect();
    let mut conv = kernels::fft_linear_convolution(vals, &rev_conj);
    conv.reverse();
    conv
}

/// The unnormalized `U^s` power sum `Σ_{x, h₁..h_s} Δ_{h₁..h_s} f(x)`.
///
/// Evaluated by peeling one difference at a time down to
/// `U¹-sum(g) = |Σ g|²`; at `s = 2` the autocorrelation shortcut
/// `Σ_h |c(h)|²` replaces the recursion.
fn us_power_sum(f: &Fiber, s: u32) -> f64 {
    if f.is_empty() {
        return 0.0;
    }
    match s {
        1 => f.sum().norm_sqr(),
        2 => autocorrelation(f).iter().map(|c| c.norm_sqr()).sum(),
        _ => {
            let n = f.len() as i64;
            // h ranges over the support difference set.
            let per_h = par::map_indexed((2 * n - 1) as usize, |i| {
                let h = i as i64 - (n - 1);
                us_power_sum(&diff_fn(f, h), s - 1)
            });
            per_h.into_iter().sum()
        }
    }
}

/// The Gowers norm `‖f‖_{U^s} = (Σ_{x,h₁..h_s} Δ_{h₁..h_s} f(x))^{1/2^s}`.
///
/// With `window = Some((lo, hi))` the norm of `f·1_{[lo,hi]}` is computed
/// (the localized variant). The inner power sum is checked to be finite and
/// not meaningfully negative before taking the `2^s`-th root.
pub fn gowers_norm(f: &Fiber, s: GowersOrder, window: Option<(i64, i64)>) -> Result<f64> {
    let restricted;
    let f = match window {
        Some((lo, hi)) => {
            restricted = f.restrict(lo, hi);
            &restricted
        }
        None => f,
    };
    let total = us_power_sum(f, s.get());
    let scale = (f.len() as f64).powi(s.get() as i32 + 1);
    let tol = 1e-6 * scale;
    if !total.is_finite() || total < -tol {
        return Err(Error::NumericalIntegrity(format!(
            "U^{} power sum {total} is negative beyond tolerance {tol} (broken difference function?)",
            s.get()
        )));
    }
    Ok(total.max(0.0).powf(1.0 / (1u64 << s.get()) as f64))
}
