//! Exponential sums and rational frequency structure.
//!
//! Frequencies live on the torus ℝ/ℤ. `rationalize` hunts for a small
//! denominator `q` with `‖qα‖·S ≤ Q` by walking the continued-fraction
//! convergents of `α`; the minimal satisfying `q` is always a convergent
//! denominator (any smaller `q'` with `‖q'α‖ ≤ ‖qα‖` would satisfy the
//! threshold first, making `q` a best approximation of the second kind), so
//! the walk is exhaustive, not heuristic.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt::g12;
use crate::grid::{DenseFunction, Fiber};
use crate::par;

/// `e(t) = e^{2πit}`, the unit phase (note: **no** minus sign).
#[must_use]
pub fn phase(t: f64) -> Complex64 {
    // Dropping the integer part first keeps the sin/cos argument small.
    let frac = t - t.floor();
    let th = 2.0 * std::f64::consts::PI * frac;
    Complex64::new(th.cos(), th.sin())
}

/// Distance from `a` to the nearest integer, in `[0, 1/2]`.
#[must_use]
pub fn torus_norm(a: f64) -> f64 {
    (a - a.round()).abs()
}

/// A frequency on the torus, reduced into `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Frequency(f64);

impl Frequency {
    /// Reduces any real number mod 1 into `[0, 1)`.
    #[must_use]
    pub fn new(a: f64) -> Self {
        let mut v = a.rem_euclid(1.0);
        if v >= 1.0 {
            // rem_euclid can land exactly on 1.0 for tiny negative inputs.
            v = 0.0;
        }
        Frequency(v)
    }

    /// The reduced value in `[0, 1)`.
    #[must_use]
    pub fn value(&self) -> f64 {
        self.0
    }
}

/// `Σ_d μ_N(d) e(αd² + βd)` with the triangular weight of halfwidth `N`.
///
/// The modulus never exceeds 1 (unit kernel mass, unit phases).
#[must_use]
pub fn weyl_sum(alpha: Frequency, beta: Frequency, n: u64) -> Complex64 {
    let k = crate::kernels::triangular(n as f64).expect("n >= 1 is a valid halfwidth");
    let mut acc = Complex64::new(0.0, 0.0);
    for (d, w) in k.iter() {
        let t = alpha.value() * (d * d) as f64 + beta.value() * d as f64;
        acc += w * phase(t);
    }
    acc
}

/// The Fourier coefficient `f̂(α) = Σ_y f(y) e(αy)`.
#[must_use]
pub fn fourier_coefficient(f: &Fiber, alpha: Frequency) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, v) in f.values().iter().enumerate() {
        if *v != Complex64::new(0.0, 0.0) {
            let y = f.y_lo() + i as i64;
            acc += v * phase(alpha.value() * y as f64);
        }
    }
    acc
}

/// A verified witness that `α` is within `Q/S` of a rational with
/// denominator `q ≤ Q` (in the torus metric, after multiplying by `q`).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MajorArcCertificate {
    /// The certified frequency.
    pub alpha: Frequency,
    /// The denominator found.
    pub q: u64,
    /// The search bound `Q`.
    pub q_bound: u64,
    /// The scale `S` the approximation quality is measured against.
    pub scale: f64,
    /// `‖qα‖_𝕋 · S`; at most `q_bound` by construction.
    pub achieved: f64,
}

impl MajorArcCertificate {
    /// Builds a certificate, re-verifying the claimed inequality.
    pub fn new(alpha: Frequency, q: u64, q_bound: u64, scale: f64) -> Result<Self> {
        let achieved = torus_norm(q as f64 * alpha.value()) * scale;
        let cert = MajorArcCertificate {
            alpha,
            q,
            q_bound,
            scale,
            achieved,
        };
        if !cert.verify() {
            return Err(Error::NumericalIntegrity(format!(
                "certificate failed re-verification: q={q}, achieved={achieved}, bound={q_bound}"
            )));
        }
        Ok(cert)
    }

    /// Recomputes `‖qα‖·S ≤ Q` and `q ≤ Q` from scratch.
    #[must_use]
    pub fn verify(&self) -> bool {
        self.q >= 1
            && self.q <= self.q_bound
            && torus_norm(self.q as f64 * self.alpha.value()) * self.scale
                <= self.q_bound as f64
    }
}

/// Continued-fraction convergent denominators of `x ∈ [0, 1)`, ascending,
/// capped at `q_max` and at 64 terms.
fn convergent_denominators(x: f64, q_max: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    let (mut q_prev, mut q_cur) = (0u64, 1u64);
    let mut frac = x;
    for _ in 0..64 {
        if frac <= f64::EPSILON {
            break; // rational: expansion terminated
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        if a >= u64::MAX as f64 {
            break;
        }
        let a = a as u64;
        let Some(q_next) = a.checked_mul(q_cur).and_then(|v| v.checked_add(q_prev)) else {
            break;
        };
        if q_next > q_max {
            break;
        }
        out.push(q_next);
        (q_prev, q_cur) = (q_cur, q_next);
        frac = inv - a as f64;
    }
    out
}

/// Smallest `q ≤ q_max` with `‖qα‖_𝕋 ≤ q_max / scale`, as a verified
/// certificate; `None` when no such `q` exists.
#[must_use]
pub fn rationalize(alpha: Frequency, q_max: u64, scale: f64) -> Option<MajorArcCertificate> {
    if q_max < 1 || !(scale > 0.0) {
        return None;
    }
    for q in convergent_denominators(alpha.value(), q_max) {
        if torus_norm(q as f64 * alpha.value()) * scale <= q_max as f64 {
            return MajorArcCertificate::new(alpha, q, q_max, scale).ok();
        }
    }
    None
}

/// Frequencies that rounded to the same grid point `t/T`.
#[derive(Debug, Clone, Serialize)]
pub struct FrequencyCluster {
    /// Smallest member frequency (a deterministic class representative).
    pub representative: Frequency,
    /// Indices into the input list.
    pub members: Vec<usize>,
    /// The rounding grid denominator `T`.
    pub grid: f64,
}

/// Rounds every frequency to the nearest `t/T` with `T = 100·q_max·scale`
/// and groups equal grid points.
///
/// Clusters come back sorted by descending size, ties by ascending
/// representative.
#[must_use]
pub fn cluster_major_arcs(
    freqs: &[Frequency],
    q_max: u64,
    scale: f64,
) -> Vec<FrequencyCluster> {
    let t_grid = 100.0 * q_max as f64 * scale;
    let mut classes: std::collections::BTreeMap<i64, Vec<usize>> = std::collections::BTreeMap::new();
    for (m, f) in freqs.iter().enumerate() {
        let mut t = (f.value() * t_grid).round();
        if t >= t_grid {
            t = 0.0; // t/T ≡ 1 ≡ 0 on the torus
        }
        classes.entry(t as i64).or_default().push(m);
    }
    let mut out: Vec<FrequencyCluster> = classes
        .into_values()
        .map(|members| {
            let representative = members
                .iter()
                .map(|&m| freqs[m])
                .min_by(|a, b| a.value().total_cmp(&b.value()))
                .expect("nonempty class");
            FrequencyCluster {
                representative,
                members,
                grid: t_grid,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.members
            .len()
            .cmp(&a.members.len())
            .then(a.representative.value().total_cmp(&b.representative.value()))
    });
    out
}

/// Scan direction for [`fiber_correlation_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Score `β` by `Σ_y |Σ_x f(x,y) e(βx)|`.
    Horizontal,
    /// Score `α` by `Σ_x |Σ_y f(x,y) e(αy)|`.
    Vertical,
}

/// One row of a spectrum report.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectrumLine {
    /// The scanned frequency.
    pub alpha: Frequency,
    /// Numerator: `a` for an exact `a/q` candidate, else the grid index `t`.
    pub freq_num: i64,
    /// Denominator `q`, or the grid `T` for off-rational candidates.
    pub freq_den_or_grid: f64,
    /// The direction-appropriate correlation score.
    pub score: f64,
}

/// Evaluates the fiberwise correlation score on the major-arc candidate grid
/// `{a/q + j/T : q ≤ q_max, gcd(a,q)=1, |j| ≤ 2}`, `T = 100·q_max·scale`.
///
/// Returns every candidate, sorted by descending score with ties broken by
/// ascending frequency; deterministic for fixed input.
#[must_use]
pub fn fiber_correlation_scan(
    f: &DenseFunction,
    direction: Direction,
    q_max: u64,
    scale: f64,
) -> Vec<SpectrumLine> {
    let t_grid = 100.0 * q_max.max(1) as f64 * scale.max(f64::MIN_POSITIVE);
    let mut candidates: Vec<(Frequency, i64, f64)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for q in 1..=q_max.max(1) {
        for a in 0..q.max(1) {
            if num::integer::gcd(a, q) != 1 && !(a == 0 && q == 1) {
                continue;
            }
            for j in -2i64..=2 {
                let val = Frequency::new(a as f64 / q as f64 + j as f64 / t_grid);
                if !seen.insert(val.value().to_bits()) {
                    continue;
                }
                let (num, den) = if j == 0 {
                    (a as i64, q as f64)
                } else {
                    ((val.value() * t_grid).round() as i64, t_grid)
                };
                candidates.push((val, num, den));
            }
        }
    }

    let rect = f.rect();
    let scores = par::map_indexed(candidates.len(), |ci| {
        let alpha = candidates[ci].0.value();
        let mut score = 0.0;
        match direction {
            Direction::Vertical => {
                for x in rect.x_lo..=rect.x_hi {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for y in rect.y_lo..=rect.y_hi {
                        let v = f.eval(x, y);
                        if v != Complex64::new(0.0, 0.0) {
                            acc += v * phase(alpha * y as f64);
                        }
                    }
                    score += acc.norm();
                }
            }
            Direction::Horizontal => {
                for y in rect.y_lo..=rect.y_hi {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for x in rect.x_lo..=rect.x_hi {
                        let v = f.eval(x, y);
                        if v != Complex64::new(0.0, 0.0) {
                            acc += v * phase(alpha * x as f64);
                        }
                    }
                    score += acc.norm();
                }
            }
        }
        score
    });

    let mut out: Vec<SpectrumLine> = candidates
        .into_iter()
        .zip(scores)
        .map(|((alpha, freq_num, freq_den_or_grid), score)| SpectrumLine {
            alpha,
            freq_num,
            freq_den_or_grid,
            score,
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.alpha.value().total_cmp(&b.alpha.value()))
    });
    out
}

/// Writes a spectrum report as CSV (`freq_num,freq_den_or_grid,score`).
pub fn write_spectrum_csv(lines: &[SpectrumLine], mut w: impl Write) -> Result<()> {
    writeln!(w, "freq_num,freq_den_or_grid,score")?;
    for l in lines {
        writeln!(w, "{},{},{}", l.freq_num, g12(l.freq_den_or_grid), g12(l.score))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Rect;
    use proptest::prelude::*;

    #[test]
    fn torus_norm_examples() {
        assert_eq!(torus_norm(0.75), 0.25);
        assert!((torus_norm(3.2) - 0.2).abs() < 1e-12);
        assert_eq!(torus_norm(0.5), 0.5);
        assert_eq!(torus_norm(-0.25), 0.25);
    }

    #[test]
    fn frequency_reduces_mod_one() {
        assert_eq!(Frequency::new(1.25).value(), 0.25);
        assert_eq!(Frequency::new(-0.25).value(), 0.75);
        assert_eq!(Frequency::new(0.0).value(), 0.0);
        let f = Frequency::new(-1e-18);
        assert!(f.value() < 1.0 && f.value() >= 0.0);
    }

    #[test]
    fn weyl_sum_examples() {
        let z = Frequency::new(0.0);
        let h = Frequency::new(0.5);
        assert!((weyl_sum(z, z, 7) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        // d² + d is even, so every phase is +1.
        assert!((weyl_sum(h, h, 2) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        // 1/2·1 + 1/4·e(1/2) + 1/4·e(1/2) = 0.
        assert!(weyl_sum(h, z, 2).norm() < 1e-12);
    }

    #[test]
    fn weyl_sum_is_one_bounded() {
        for i in 0..40 {
            let a = Frequency::new(i as f64 * 0.137);
            let b = Frequency::new(i as f64 * 0.311);
            assert!(weyl_sum(a, b, 11).norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn fourier_coefficient_examples() {
        let delta = Fiber::new(0, vec![Complex64::new(1.0, 0.0)]);
        assert!((fourier_coefficient(&delta, Frequency::new(0.37)) - Complex64::new(1.0, 0.0))
            .norm()
            < 1e-12);
        let f = Fiber::new(1, vec![Complex64::new(1.0, 0.0); 6]);
        assert!((fourier_coefficient(&f, Frequency::new(0.0)).re - 6.0).abs() < 1e-12);
        let f4 = Fiber::new(1, vec![Complex64::new(1.0, 0.0); 4]);
        assert!(fourier_coefficient(&f4, Frequency::new(0.5)).norm() < 1e-12);
    }

    #[test]
    fn rationalize_finds_planted_denominator() {
        let alpha = Frequency::new(1.0 / 3.0 + 1e-7);
        let cert = rationalize(alpha, 10, 1e4).unwrap();
        assert_eq!(cert.q, 3);
        assert!((cert.achieved - 3e-3).abs() < 1e-6);
        assert!(cert.verify());
    }

    #[test]
    fn rationalize_zero_frequency() {
        let cert = rationalize(Frequency::new(0.0), 5, 100.0).unwrap();
        assert_eq!(cert.q, 1);
        assert_eq!(cert.achieved, 0.0);
    }

    #[test]
    fn rationalize_rejects_badly_approximable() {
        let alpha = Frequency::new(std::f64::consts::SQRT_2 - 1.0);
        assert!(rationalize(alpha, 5, 1e6).is_none());
        // Exhaustive confirmation over the whole search range.
        for q in 1..=5u64 {
            assert!(torus_norm(q as f64 * alpha.value()) * 1e6 > 5.0);
        }
    }

    #[test]
    fn rationalize_returns_smallest_q() {
        // 1/2 certifies at q = 2 even though larger multiples also work.
        let cert = rationalize(Frequency::new(0.5), 10, 1e3).unwrap();
        assert_eq!(cert.q, 2);
        // 2/5: CF denominators 1, 2, 5; only q = 5 clears scale 1e3.
        let cert = rationalize(Frequency::new(0.4), 10, 1e3).unwrap();
        assert_eq!(cert.q, 5);
    }

    #[test]
    fn cluster_examples() {
        let same = vec![Frequency::new(0.37); 4];
        let cl = cluster_major_arcs(&same, 3, 10.0);
        assert_eq!(cl.len(), 1);
        assert_eq!(cl[0].members, vec![0, 1, 2, 3]);

        let freqs = vec![
            Frequency::new(0.1),
            Frequency::new(0.1 + 1e-9),
            Frequency::new(0.7),
        ];
        // T = 100·1·1 = 100, so 1e-9 < 1/(2T) collapses the near pair.
        let cl = cluster_major_arcs(&freqs, 1, 1.0);
        assert_eq!(cl.len(), 2);
        assert_eq!(cl[0].members, vec![0, 1]);
        assert_eq!(cl[0].representative.value(), 0.1);
        assert_eq!(cl[1].members, vec![2]);

        assert!(cluster_major_arcs(&[], 3, 10.0).is_empty());
    }

    #[test]
    fn cluster_wraps_frequencies_near_one() {
        let freqs = vec![Frequency::new(1.0 - 1e-9), Frequency::new(1e-9)];
        let cl = cluster_major_arcs(&freqs, 1, 1.0);
        assert_eq!(cl.len(), 1);
        assert_eq!(cl[0].members, vec![0, 1]);
    }

    #[test]
    fn scan_zero_function_scores_zero() {
        let f = DenseFunction::zero(Rect::new(1, 3, 1, 5).unwrap());
        let lines = fiber_correlation_scan(&f, Direction::Vertical, 4, 10.0);
        assert!(!lines.is_empty());
        assert!(lines.iter().all(|l| l.score == 0.0));
    }

    #[test]
    fn scan_finds_vertical_third_frequency() {
        // f(x, y) = e(−y/3) on [2]×[9]: full mass at α = 1/3, score 2·9.
        let rect = Rect::new(1, 2, 1, 9).unwrap();
        let f = DenseFunction::from_fn(rect, |_, y| phase(-(y as f64) / 3.0)).unwrap();
        let lines = fiber_correlation_scan(&f, Direction::Vertical, 4, 100.0);
        let top = &lines[0];
        assert!((top.alpha.value() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!((top.freq_num, top.freq_den_or_grid), (1, 3.0));
        assert!((top.score - 18.0).abs() < 1e-9);
        assert!(lines[1].score < top.score - 1e-6);
    }

    #[test]
    fn scan_finds_horizontal_half_frequency() {
        // f(x, y) = (−1)^x on [4]×[2]: mass at β = 1/2, score 2·4.
        let rect = Rect::new(1, 4, 1, 2).unwrap();
        let f = DenseFunction::from_fn(rect, |x, _| {
            Complex64::new(if x % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        })
        .unwrap();
        let lines = fiber_correlation_scan(&f, Direction::Horizontal, 4, 100.0);
        let top = &lines[0];
        assert!((top.alpha.value() - 0.5).abs() < 1e-12);
        assert!((top.score - 8.0).abs() < 1e-9);
    }

    #[test]
    fn spectrum_csv_format() {
        let lines = vec![SpectrumLine {
            alpha: Frequency::new(0.5),
            freq_num: 1,
            freq_den_or_grid: 2.0,
            score: 8.0,
        }];
        let mut buf = Vec::new();
        write_spectrum_csv(&lines, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "freq_num,freq_den_or_grid,score\n1,2,8\n"
        );
    }

    proptest! {
        #[test]
        fn weyl_conjugation_symmetry(a in 0.0f64..1.0, b in 0.0f64..1.0, n in 1u64..32) {
            let lhs = weyl_sum(Frequency::new(a), Frequency::new(b), n);
            let rhs = weyl_sum(Frequency::new(-a), Frequency::new(-b), n).conj();
            prop_assert!((lhs - rhs).norm() <= 1e-12);
        }

        #[test]
        fn certificates_verify_independently(a in 0.0f64..1.0, q_max in 1u64..200, scale in 1.0f64..1e6) {
            if let Some(cert) = rationalize(Frequency::new(a), q_max, scale) {
                prop_assert!(cert.verify());
                prop_assert!(cert.q >= 1 && cert.q <= q_max);
                prop_assert!(torus_norm(cert.q as f64 * a) * scale <= q_max as f64 + 1e-9);
            }
        }

        #[test]
        fn planted_rationals_recovered(a in 1u64..40, q0 in 1u64..21, theta in -5.0f64..5.0) {
            // α = a/q₀ + θ/S with S = 10⁴, Q = 100: the threshold holds at q₀,
            // so some q ≤ q₀ certifies; the returned q must itself verify.
            let s = 1e4;
            let alpha = Frequency::new(a as f64 / q0 as f64 + theta / s);
            let cert = rationalize(alpha, 100, s);
            prop_assert!(cert.is_some());
            let cert = cert.unwrap();
            prop_assert!(cert.q <= q0);
            prop_assert!(cert.verify());
        }

        #[test]
        fn cluster_count_is_cubically_bounded(
            qs in proptest::collection::vec((1u64..8, 0u64..8, -2i64..=2), 1..60),
        ) {
            // Major-arc inputs: a/q + j/T for q ≤ Q = 8.
            let q_max = 8u64;
            let scale = 100.0;
            let t_grid = 100.0 * q_max as f64 * scale;
            let freqs: Vec<Frequency> = qs
                .into_iter()
                .map(|(q, a, j)| Frequency::new((a % q) as f64 / q as f64 + j as f64 / t_grid))
                .collect();
            let clusters = cluster_major_arcs(&freqs, q_max, scale);
            prop_assert!(clusters.len() as u64 <= 64 * q_max.pow(3));
            let total: usize = clusters.iter().map(|c| c.members.len()).sum();
            prop_assert_eq!(total, freqs.len());
        }
    }
}
