//! The weighted counting operator, exact per-difference counts, dual
//! functions, and the triangle path-count bound.
//!
//! All sums are computed unnormalized over ℤ² (i.e. over supports) and
//! divided by the window area N1·N2 where the operator definition asks for
//! it; callers wanting plain expectation semantics pass the window their
//! functions live on.

use num_complex::Complex64;
use serde::Serialize;
use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::{DenseFunction, GridWindow, Rect, SetIndicator};
use crate::kernels::{triangular, Kernel};
use crate::par;

/// Parameters of the counting operator: difference scale `N`, stride `q`,
/// localized kernel halfwidth `M`, and the normalizing window.
#[derive(Debug, Clone, Copy)]
pub struct CountingParams {
    n: u64,
    q: u64,
    m: u64,
    window: GridWindow,
}

impl CountingParams {
    /// The global operator: stride 1, kernel halfwidth `N`.
    pub fn global(n: u64, window: GridWindow) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("difference scale N must be >= 1".into()));
        }
        Ok(CountingParams {
            n,
            q: 1,
            m: n,
            window,
        })
    }

    /// The localized operator with stride `q` and kernel halfwidth `M`.
    ///
    /// Requires `q·M ≤ √N2` (checked exactly as `(qM)² ≤ N2`).
    pub fn localized(n: u64, q: u64, m: u64, window: GridWindow) -> Result<Self> {
        if n < 1 || q < 1 || m < 1 {
            return Err(Error::Domain(
                "counting parameters N, q, M must all be >= 1".into(),
            ));
        }
        let qm = q as u128 * m as u128;
        if qm * qm > window.n2() as u128 {
            return Err(Error::Domain(format!(
                "localization requires q·M <= sqrt(N2): q={q}, M={m}, N2={}",
                window.n2()
            )));
        }
        Ok(CountingParams { n, q, m, window })
    }

    /// Difference scale `N`.
    #[must_use]
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Stride `q`.
    #[must_use]
    pub fn q(&self) -> u64 {
        self.q
    }

    /// Kernel halfwidth `M`.
    #[must_use]
    pub fn m(&self) -> u64 {
        self.m
    }

    /// The normalizing window.
    #[must_use]
    pub fn window(&self) -> GridWindow {
        self.window
    }
}

#[inline]
fn at(row: Option<&[Complex64]>, y_lo: i64, y: i64) -> Complex64 {
    match row {
        Some(r) => {
            let i = y - y_lo;
            if i >= 0 && (i as usize) < r.len() {
                r[i as usize]
            } else {
                Complex64::new(0.0, 0.0)
            }
        }
        None => Complex64::new(0.0, 0.0),
    }
}

/// The counting operator
/// `Σ_{x,y,d} μ_M(d) f0(x,y) f1(x+qd,y) f2(x,y+q²d²) / (N1·N2)`.
///
/// With `q = 1, M = N` and functions supported on the window this is the
/// doubly-averaged operator over `[N1]×[N2]`. All three inputs must carry the
/// 1-bounded flag.
pub fn lambda(
    f0: &DenseFunction,
    f1: &DenseFunction,
    f2: &DenseFunction,
    p: &CountingParams,
) -> Result<Complex64> {
    for (name, f) in [("f0", f0), ("f1", f1), ("f2", f2)] {
        if !f.is_bounded() {
            return Err(Error::Contract(format!(
                "lambda requires 1-bounded inputs; {name} is not"
            )));
        }
    }
    let kernel = triangular(p.m as f64)?;
    let total = lambda_unnormalized(f0, f1, f2, p.q as i64, &kernel);
    Ok(total / p.window.area() as f64)
}

/// The unnormalized triple sum with an arbitrary difference kernel.
pub(crate) fn lambda_unnormalized(
    f0: &DenseFunction,
    f1: &DenseFunction,
    f2: &DenseFunction,
    q: i64,
    kernel: &Kernel,
) -> Complex64 {
    let r0 = f0.rect();
    let weights: Vec<(i64, f64)> = kernel.iter().collect();
    let per_x = par::map_indexed(r0.width() as usize, |xi| {
        let x = r0.x_lo + xi as i64;
        let row0 = f0.row_slice(x).expect("x ranges over f0's box");
        let row2 = f2.row_slice(x);
        let mut acc = Complex64::new(0.0, 0.0);
        for &(d, w) in &weights {
            let row1 = f1.row_slice(x + q * d);
            let shift = q * q * d * d;
            let mut inner = Complex64::new(0.0, 0.0);
            for (i, v0) in row0.iter().enumerate() {
                if *v0 == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let y = r0.y_lo + i as i64;
                let v1 = at(row1, f1.rect().y_lo, y);
                if v1 == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let v2 = at(row2, f2.rect().y_lo, y + shift);
                inner += v0 * v1 * v2;
            }
            acc += w * inner;
        }
        acc
    });
    per_x.into_iter().sum()
}

/// Counting method selector for per-difference counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMethod {
    /// Straightforward membership loop; the oracle.
    Naive,
    /// Word-AND + popcount over packed bit rows.
    BitParallel,
}

/// Exact `#{(x,y) ∈ A : (x+d, y) ∈ A, (x, y+d²) ∈ A}`.
///
/// Both methods are bit-identical; shifts leaving the window contribute zero.
#[must_use]
pub fn count_for_difference(a: &SetIndicator, d: i64, method: CountMethod) -> u64 {
    let w = a.window();
    let n1 = w.n1();
    let n2 = w.n2();
    if d.unsigned_abs() as i64 >= n1 {
        return 0;
    }
    let dsq = (d as i128) * (d as i128);
    if dsq >= n2 as i128 && d != 0 {
        return 0;
    }
    let dsq = dsq as i64;
    match method {
        CountMethod::Naive => {
            let mut count = 0;
            for x in 1..=n1 {
                for y in 1..=n2 {
                    if a.contains(x, y) && a.contains(x + d, y) && a.contains(x, y + dsq) {
                        count += 1;
                    }
                }
            }
            count
        }
        CountMethod::BitParallel => {
            let s = dsq as usize;
            let (word_off, bit_off) = (s / 64, s % 64);
            let mut count = 0u64;
            let lo = 1.max(1 - d);
            let hi = n1.min(n1 - d);
            for x in lo..=hi {
                let row = a.row_words(x).expect("x in window");
                let row_d = a.row_words(x + d).expect("x+d in window");
                for i in 0..row.len() {
                    let both = row[i] & row_d[i];
                    if both == 0 {
                        continue;
                    }
                    // row(x) >> d², assembled from one or two words.
                    let j = i + word_off;
                    let mut shifted = if j < row.len() { row[j] >> bit_off } else { 0 };
                    if bit_off > 0 && j + 1 < row.len() {
                        shifted |= row[j + 1] << (64 - bit_off);
                    }
                    count += u64::from((both & shifted).count_ones());
                }
            }
            count
        }
    }
}

/// The map `d ↦ count_for_difference(A, d)` over an inclusive range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountProfile {
    pub d_values: Vec<i64>,
    pub counts: Vec<u64>,
}

/// Evaluates the count for every `d` in `[d_lo, d_hi]` (parallel over `d`).
pub fn count_profile(
    a: &SetIndicator,
    d_lo: i64,
    d_hi: i64,
    method: CountMethod,
) -> Result<CountProfile> {
    if d_lo > d_hi {
        return Err(Error::Domain(format!("empty difference range [{d_lo}, {d_hi}]")));
    }
    let d_values: Vec<i64> = (d_lo..=d_hi).collect();
    let counts = par::map_indexed(d_values.len(), |i| {
        count_for_difference(a, d_values[i], method)
    });
    Ok(CountProfile { d_values, counts })
}

impl CountProfile {
    /// Writes the profile as CSV (`d,count`).
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "d,count")?;
        for (d, c) in self.d_values.iter().zip(&self.counts) {
            writeln!(w, "{d},{c}")?;
        }
        Ok(())
    }
}

/// `Σ_{|d|<M} μ_M(d) · count_for_difference(A, q·d)` — the stride-`q`
/// kernel-weighted configuration count, unnormalized.
#[must_use]
pub fn weighted_count(a: &SetIndicator, q: u64, m: u64) -> f64 {
    let kernel = triangular(m as f64).expect("M >= 1");
    let weights: Vec<(i64, f64)> = kernel.iter().collect();
    let per_d = par::map_indexed(weights.len(), |i| {
        let (d, w) = weights[i];
        w * count_for_difference(a, q as i64 * d, CountMethod::BitParallel) as f64
    });
    per_d.into_iter().sum()
}

/// [`lambda`] specialised to indicator inputs, via exact integer counts.
#[must_use]
pub fn lambda_indicator(a: &SetIndicator, p: &CountingParams) -> f64 {
    weighted_count(a, p.q, p.m) / p.window.area() as f64
}

/// The dual function `F(x,y) = Σ_d μ_N(d) f0(x, y−d²) f1(x+d, y−d²)`.
///
/// Pairing `F` against any `g` recovers the counting operator:
/// `Σ F·g` equals the unnormalized triple sum of `(f0, f1, g)`.
pub fn dual_f(f0: &DenseFunction, f1: &DenseFunction, n: u64) -> Result<DenseFunction> {
    for (name, f) in [("f0", f0), ("f1", f1)] {
        if !f.is_bounded() {
            return Err(Error::Contract(format!(
                "dual_f requires 1-bounded inputs; {name} is not"
            )));
        }
    }
    let kernel = triangular(n as f64)?;
    let wmax = kernel.max_abs_offset();
    let (r0, r1) = (f0.rect(), f1.rect());
    let x_lo = r0.x_lo.max(r1.x_lo - wmax);
    let x_hi = r0.x_hi.min(r1.x_hi + wmax);
    let y_lo = r0.y_lo.max(r1.y_lo);
    let y_hi = r0.y_hi.min(r1.y_hi) + wmax * wmax;
    if x_lo > x_hi || y_lo > y_hi {
        return Ok(DenseFunction::zero(r0));
    }
    let rect = Rect::new(x_lo, x_hi, y_lo, y_hi)?;
    let weights: Vec<(i64, f64)> = kernel.iter().collect();
    dense_from_rows(rect, |x, y| {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(d, w) in &weights {
            let ys = y - d * d;
            let v0 = f0.eval(x, ys);
            if v0 == Complex64::new(0.0, 0.0) {
                continue;
            }
            acc += w * v0 * f1.eval(x + d, ys);
        }
        acc
    })
}

/// The dual function `G(x,y) = Σ_d μ_N(d) f0(x−d, y) f2(x−d, y+d²)`.
///
/// Pairing `f1` against `G` recovers the counting operator on `(f0, f1, f2)`.
pub fn dual_g(f0: &DenseFunction, f2: &DenseFunction, n: u64) -> Result<DenseFunction> {
    for (name, f) in [("f0", f0), ("f2", f2)] {
        if !f.is_bounded() {
            return Err(Error::Contract(format!(
                "dual_g requires 1-bounded inputs; {name} is not"
            )));
        }
    }
    let kernel = triangular(n as f64)?;
    let wmax = kernel.max_abs_offset();
    let (r0, r2) = (f0.rect(), f2.rect());
    let x_lo = r0.x_lo.max(r2.x_lo) - wmax;
    let x_hi = r0.x_hi.min(r2.x_hi) + wmax;
    let y_lo = r0.y_lo.max(r2.y_lo - wmax * wmax);
    let y_hi = r0.y_hi.min(r2.y_hi);
    if x_lo > x_hi || y_lo > y_hi {
        return Ok(DenseFunction::zero(r0));
    }
    let rect = Rect::new(x_lo, x_hi, y_lo, y_hi)?;
    let weights: Vec<(i64, f64)> = kernel.iter().collect();
    dense_from_rows(rect, |x, y| {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(d, w) in &weights {
            let v0 = f0.eval(x - d, y);
            if v0 == Complex64::new(0.0, 0.0) {
                continue;
            }
            acc += w * v0 * f2.eval(x - d, y + d * d);
        }
        acc
    })
}

/// Builds a dense function in parallel over rows (fixed row order).
fn dense_from_rows(
    rect: Rect,
    f: impl Fn(i64, i64) -> Complex64 + Sync + Send,
) -> Result<DenseFunction> {
    let h = rect.height() as usize;
    let rows = par::map_indexed(rect.width() as usize, |xi| {
        let x = rect.x_lo + xi as i64;
        (0..h)
            .map(|yi| f(x, rect.y_lo + yi as i64))
            .collect::<Vec<_>>()
    });
    DenseFunction::new(rect, rows.concat())
}

/// `E 1_A(x,y)·1_A(x',y)·1_A(x,y') = Σ_{(x,y)∈A} R(y)·C(x) / (N1²·N2²)`,
/// with `R` and `C` the line counts. Always ≥ density³.
#[must_use]
pub fn blakley_roy_lhs(a: &SetIndicator) -> f64 {
    let r = a.line_counts_y();
    let c = a.line_counts_x();
    let mut total: u128 = 0;
    for (x, y) in a.points() {
        total += r[(y - 1) as usize] as u128 * c[(x - 1) as usize] as u128;
    }
    let w = a.window();
    let denom = (w.n1() as f64 * w.n2() as f64).powi(2);
    total as f64 / denom
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridWindow;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Deterministic 1-bounded complex function for identity tests.
    fn pseudo_function(rect: Rect, seed: u64) -> DenseFunction {
        DenseFunction::from_fn(rect, |x, y| {
            let mut t = (x as u64)
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add((y as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9))
                .wrapping_add(seed.wrapping_mul(0x94D0_49BB_1331_11EB));
            t ^= t >> 31;
            t = t.wrapping_mul(0xD6E8_FEB8_6659_FD93);
            let re = ((t >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
            let im = (((t.wrapping_mul(0xA076_1D64_78BD_642F)) >> 11) as f64
                / (1u64 << 53) as f64)
                * 2.0
                - 1.0;
            c(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
        .unwrap()
    }

    fn full_indicator(n1: i64, n2: i64) -> SetIndicator {
        SetIndicator::full(GridWindow::new(n1, n2).unwrap())
    }

    #[test]
    fn lambda_on_full_two_by_four() {
        let a = full_indicator(2, 4);
        let f = a.indicator_function();
        let p = CountingParams::global(2, a.window()).unwrap();
        let got = lambda(&f, &f, &f, &p).unwrap();
        assert!((got - c(0.6875, 0.0)).norm() < 1e-12);
        assert!((lambda_indicator(&a, &p) - 0.6875).abs() < 1e-12);
    }

    #[test]
    fn lambda_vanishes_with_zero_factor() {
        let a = full_indicator(3, 9);
        let f = a.indicator_function();
        let z = DenseFunction::zero(f.rect());
        let p = CountingParams::global(3, a.window()).unwrap();
        assert_eq!(lambda(&f, &f, &z, &p).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn lambda_rejects_unbounded_input() {
        let rect = Rect::new(1, 2, 1, 4).unwrap();
        let big = DenseFunction::from_fn(rect, |_, _| c(2.0, 0.0)).unwrap();
        let ok = DenseFunction::from_fn(rect, |_, _| c(1.0, 0.0)).unwrap();
        let p = CountingParams::global(2, GridWindow::new(2, 4).unwrap()).unwrap();
        let err = lambda(&ok, &big, &ok, &p).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn localized_params_enforce_qm_bound() {
        let w = GridWindow::new(8, 64).unwrap();
        assert!(CountingParams::localized(8, 2, 4, w).is_ok()); // 8 = √64
        assert!(CountingParams::localized(8, 3, 3, w).is_err()); // 9 > 8
    }

    #[test]
    fn count_on_full_three_grid() {
        let a = full_indicator(3, 3);
        for m in [CountMethod::Naive, CountMethod::BitParallel] {
            assert_eq!(count_for_difference(&a, 0, m), 9);
            assert_eq!(count_for_difference(&a, 1, m), 4);
            assert_eq!(count_for_difference(&a, 2, m), 0);
            assert_eq!(count_for_difference(&a, -1, m), 4);
        }
    }

    #[test]
    fn profile_on_full_three_grid() {
        let a = full_indicator(3, 3);
        let p = count_profile(&a, -2, 2, CountMethod::BitParallel).unwrap();
        assert_eq!(p.d_values, vec![-2, -1, 0, 1, 2]);
        assert_eq!(p.counts, vec![0, 4, 9, 4, 0]);
    }

    #[test]
    fn profile_edge_cases() {
        let w = GridWindow::new(3, 3).unwrap();
        let empty = SetIndicator::from_points(&[], w).unwrap();
        let p = count_profile(&empty, -2, 2, CountMethod::Naive).unwrap();
        assert!(p.counts.iter().all(|&c| c == 0));

        let single = SetIndicator::from_points(&[(1, 1)], w).unwrap();
        let p = count_profile(&single, -1, 1, CountMethod::BitParallel).unwrap();
        assert_eq!(p.counts, vec![0, 1, 0]);
        assert_eq!(p.counts[1], single.cardinality());
    }

    #[test]
    fn bit_parallel_crosses_word_boundaries() {
        // y-window of 130 forces 3 words per row; d² = 4 shifts across them.
        let w = GridWindow::new(4, 130).unwrap();
        let mut pts = Vec::new();
        for x in 1..=4 {
            for y in (1..=130).step_by(3) {
                pts.push((x, y));
            }
        }
        let a = SetIndicator::from_points(&pts, w).unwrap();
        for d in -3..=3 {
            assert_eq!(
                count_for_difference(&a, d, CountMethod::Naive),
                count_for_difference(&a, d, CountMethod::BitParallel),
                "d={d}"
            );
        }
    }

    #[test]
    fn profile_csv_round() {
        let a = full_indicator(3, 3);
        let p = count_profile(&a, -2, 2, CountMethod::BitParallel).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "d,count\n-2,0\n-1,4\n0,9\n1,4\n2,0\n"
        );
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, "{\"d_values\":[-2,-1,0,1,2],\"counts\":[0,4,9,4,0]}");
    }

    #[test]
    fn dual_f_point_values() {
        let a = full_indicator(2, 4);
        let f = a.indicator_function();
        let big_f = dual_f(&f, &f, 2).unwrap();
        assert!((big_f.eval(1, 2) - c(0.75, 0.0)).norm() < 1e-12);
        assert!(big_f.is_bounded());
        let z = DenseFunction::zero(f.rect());
        assert_eq!(dual_f(&z, &z, 2).unwrap().l2_norm_sq(), 0.0);
    }

    #[test]
    fn dual_g_point_values() {
        let a = full_indicator(2, 4);
        let f = a.indicator_function();
        let big_g = dual_g(&f, &f, 2).unwrap();
        assert!((big_g.eval(2, 1) - c(0.75, 0.0)).norm() < 1e-12);
        assert!(big_g.is_bounded());
    }

    fn pair_sum(a: &DenseFunction, b: &DenseFunction) -> Complex64 {
        let r = a.rect();
        let mut acc = c(0.0, 0.0);
        for x in r.x_lo..=r.x_hi {
            for y in r.y_lo..=r.y_hi {
                acc += a.eval(x, y) * b.eval(x, y);
            }
        }
        acc
    }

    #[test]
    fn dual_identities_on_random_functions() {
        for seed in 0..8 {
            let rect = Rect::new(1, 4, 1, 16).unwrap();
            let f0 = pseudo_function(rect, seed * 3);
            let f1 = pseudo_function(rect, seed * 3 + 1);
            let f2 = pseudo_function(rect, seed * 3 + 2);
            let w = GridWindow::new(4, 16).unwrap();
            let p = CountingParams::global(4, w).unwrap();
            let lam = lambda(&f0, &f1, &f2, &p).unwrap() * w.area() as f64;

            let via_f = pair_sum(&dual_f(&f0, &f1, 4).unwrap(), &f2);
            assert!((lam - via_f).norm() <= 1e-9 * (1.0 + lam.norm()), "F seed {seed}");

            let via_g = pair_sum(&dual_g(&f0, &f2, 4).unwrap(), &f1);
            assert!((lam - via_g).norm() <= 1e-9 * (1.0 + lam.norm()), "G seed {seed}");
        }
    }

    #[test]
    fn blakley_roy_examples() {
        assert!((blakley_roy_lhs(&full_indicator(5, 5)) - 1.0).abs() < 1e-12);

        let w = GridWindow::new(3, 3).unwrap();
        let single = SetIndicator::from_points(&[(2, 3)], w).unwrap();
        assert!((blakley_roy_lhs(&single) - 1.0 / 81.0).abs() < 1e-15);

        // Product set B×C in [6]²: value is exactly (|B|/6)²·(|C|/6)².
        let w6 = GridWindow::new(6, 6).unwrap();
        let mut pts = Vec::new();
        for &x in &[1, 3, 5] {
            for &y in &[2, 4] {
                pts.push((x, y));
            }
        }
        let prod = SetIndicator::from_points(&pts, w6).unwrap();
        let want = (0.5f64).powi(2) * (1.0f64 / 3.0).powi(2);
        assert!((blakley_roy_lhs(&prod) - want).abs() < 1e-12);

        // Brute-force cross-check of the path-count formula.
        let mut brute: u64 = 0;
        for x in 1..=6 {
            for y in 1..=6 {
                for xp in 1..=6 {
                    for yp in 1..=6 {
                        if prod.contains(x, y) && prod.contains(xp, y) && prod.contains(x, yp) {
                            brute += 1;
                        }
                    }
                }
            }
        }
        assert!((blakley_roy_lhs(&prod) - brute as f64 / 1296.0).abs() < 1e-12);
    }

    fn seeded_set(n1: i64, n2: i64, density_pct: u32, seed: u64) -> SetIndicator {
        let w = GridWindow::new(n1, n2).unwrap();
        let mut pts = Vec::new();
        for x in 1..=n1 {
            for y in 1..=n2 {
                let mut t = (x as u64 * 0x1F3D_5B79 + y as u64)
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    .wrapping_add(seed);
                t ^= t >> 29;
                t = t.wrapping_mul(0xBF58_476D_1CE4_E5B9);
                if t % 100 < density_pct as u64 {
                    pts.push((x, y));
                }
            }
        }
        SetIndicator::from_points(&pts, w).unwrap()
    }

    #[test]
    fn weighted_count_matches_lambda_on_indicators() {
        for seed in 0..5 {
            let a = seeded_set(6, 36, 60, seed);
            let p = CountingParams::global(6, a.window()).unwrap();
            let fast = lambda_indicator(&a, &p);
            let f = a.indicator_function();
            let slow = lambda(&f, &f, &f, &p).unwrap();
            assert!(slow.im.abs() < 1e-12);
            assert!((fast - slow.re).abs() <= 1e-9 * (1.0 + fast.abs()));
        }
    }

    proptest! {
        #[test]
        fn naive_equals_bitparallel(seed in 0u64..200, n in 4i64..20, dens in 1u32..100) {
            let a = seeded_set(n, n, dens, seed);
            for d in -n..=n {
                prop_assert_eq!(
                    count_for_difference(&a, d, CountMethod::Naive),
                    count_for_difference(&a, d, CountMethod::BitParallel)
                );
            }
        }

        #[test]
        fn count_never_exceeds_cardinality(seed in 0u64..100, d in -10i64..10) {
            let a = seeded_set(12, 30, 50, seed);
            prop_assert!(count_for_difference(&a, d, CountMethod::BitParallel) <= a.cardinality());
        }

        #[test]
        fn blakley_roy_inequality(seed in 0u64..300, n1 in 2i64..12, n2 in 2i64..12, dens in 0u32..=100) {
            let a = seeded_set(n1, n2, dens, seed);
            prop_assert!(blakley_roy_lhs(&a) >= a.density().powi(3) - 1e-12);
        }
    }
}
