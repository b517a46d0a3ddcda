//! The popular-difference pipeline: refinement run, weighted-count verdict,
//! brute-force oracle, square-window threshold check, and the 1-D lift.

use num::integer::Roots;
use serde::Serialize;
use std::collections::BTreeSet;
use std::io::Write;

use crate::counting::{count_for_difference, weighted_count, CountMethod};
use crate::energy::{energy_increment_run, IncrementConfig, IncrementTrace, Termination};
use crate::error::{Error, Result};
use crate::fmt::g12;
use crate::grid::{GridWindow, SetIndicator};
use crate::par;

/// Outcome of [`popular_difference_search`].
///
/// `weighted_count` is the quantity the verdict compares against
/// `threshold`: the kernel-weighted stride count when the refinement run
/// ends regular, and the best unweighted single-difference count when it
/// does not — so `pass == (weighted_count >= threshold)` always.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopularDifferenceReport {
    pub delta: f64,
    pub epsilon: f64,
    pub q: u64,
    #[serde(rename = "M")]
    pub m: u64,
    pub weighted_count: f64,
    pub threshold: f64,
    pub pass: bool,
    pub best_d: i64,
    pub best_count: u64,
    pub trace: IncrementTrace,
}

impl PopularDifferenceReport {
    /// Serializes the full report (trace included) as pretty JSON.
    pub fn write_json(&self, mut w: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self)
            .map_err(|e| Error::Task(format!("report serialization failed: {e}")))?;
        writeln!(w)?;
        Ok(())
    }

    /// The summary CSV header.
    #[must_use]
    pub fn csv_header() -> &'static str {
        "delta,epsilon,q,M,weighted_count,threshold,pass,best_d,best_count"
    }

    /// One summary CSV row (no trace).
    #[must_use]
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            g12(self.delta),
            g12(self.epsilon),
            self.q,
            self.m,
            g12(self.weighted_count),
            g12(self.threshold),
            self.pass,
            self.best_d,
            self.best_count
        )
    }

    /// Writes header plus the summary row.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{}", Self::csv_header())?;
        writeln!(w, "{}", self.csv_row())?;
        Ok(())
    }
}

/// True when `cand` beats `incumbent` under the difference tie-break:
/// larger count, then smaller |d|, then positive over negative.
fn better(cand: (i64, u64), incumbent: (i64, u64)) -> bool {
    cand.1 > incumbent.1
        || (cand.1 == incumbent.1
            && (cand.0.abs() < incumbent.0.abs()
                || (cand.0.abs() == incumbent.0.abs() && cand.0 > incumbent.0)))
}

/// Best difference among an explicit nonzero candidate list (parallel
/// evaluation, deterministic tie-break). `None` on an empty list.
fn best_over(a: &SetIndicator, candidates: &[i64]) -> Option<(i64, u64)> {
    let counts = par::map_indexed(candidates.len(), |i| {
        count_for_difference(a, candidates[i], CountMethod::BitParallel)
    });
    let mut best: Option<(i64, u64)> = None;
    for (&d, &c) in candidates.iter().zip(&counts) {
        if best.is_none() || better((d, c), best.unwrap()) {
            best = Some((d, c));
        }
    }
    best
}

/// Exhaustive best nonzero difference over the inclusive range
/// `[d_lo, d_hi]` (0 skipped). Ties go to the smallest |d|, then to the
/// positive sign.
pub fn brute_force_best_difference(
    a: &SetIndicator,
    d_lo: i64,
    d_hi: i64,
) -> Result<(i64, u64)> {
    let candidates: Vec<i64> = (d_lo..=d_hi).filter(|&d| d != 0).collect();
    best_over(a, &candidates).ok_or_else(|| {
        Error::Domain(format!(
            "no nonzero difference in range [{d_lo}, {d_hi}]"
        ))
    })
}

/// The full pipeline: refine `(1_A, 1_A, 1_A)` until regular, then compare
/// the μ_M-weighted stride-`q` configuration count against
/// `(δ³ − ε)·N1·N2` and report the best single difference.
///
/// On a regular exit the best difference is searched over the stride
/// multiples `{q·d : 0 < |d| < M}`; when that set is empty (`M = 1`) or the
/// run ends abnormally, the search falls back to `0 < |d| ≤ ⌊√N2⌋` and, on
/// abnormal exits, the verdict compares that best count to the threshold.
pub fn popular_difference_search(
    a: &SetIndicator,
    epsilon: f64,
    cfg: &IncrementConfig,
) -> Result<PopularDifferenceReport> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::Domain(format!(
            "epsilon must lie in (0, 1/2], got {epsilon}"
        )));
    }
    let window = a.window();
    let (n1, n2) = (window.n1(), window.n2());
    if (n1 as i128) * (n1 as i128) < n2 as i128 {
        return Err(Error::Domain(format!(
            "window must satisfy N1 >= sqrt(N2), got {n1}x{n2}"
        )));
    }

    let f = a.indicator_function();
    let trace = energy_increment_run(&f, &f, &f, cfg, window)?;
    let last = *trace.final_state();
    let (q, m) = (last.q, last.m);
    let delta = a.density();
    let area = window.area() as f64;
    let threshold = (delta.powi(3) - epsilon) * area;
    let regular = trace.termination == Termination::IrregularitySmall;

    let fallback_max = (n2 as u64).sqrt().max(1) as i64;
    let stride_multiples: Vec<i64> = (1..m as i64)
        .flat_map(|d| [q as i64 * d, -(q as i64 * d)])
        .collect();

    let (weighted, best_d, best_count) = if regular {
        let wc = weighted_count(a, q, m);
        let (d, c) = match best_over(a, &stride_multiples) {
            Some(found) => found,
            None => brute_force_best_difference(a, -fallback_max, fallback_max)?,
        };
        (wc, d, c)
    } else {
        let (d, c) = brute_force_best_difference(a, -fallback_max, fallback_max)?;
        (c as f64, d, c)
    };

    Ok(PopularDifferenceReport {
        delta,
        epsilon,
        q,
        m,
        weighted_count: weighted,
        threshold,
        pass: weighted >= threshold,
        best_d,
        best_count,
        trace,
    })
}

/// Verdict of the square-window single-difference check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdVerdict {
    pub pass: bool,
    pub witness_d: i64,
    pub witness_count: u64,
    pub threshold: f64,
    pub margin: f64,
}

/// True iff some nonzero `d` has `count_for_difference(A, d) ≥ (δ³−ε)·N²`
/// on a square window, reporting the best witness and its margin.
pub fn verify_2d_threshold(a: &SetIndicator, epsilon: f64) -> Result<ThresholdVerdict> {
    let window = a.window();
    if window.n1() != window.n2() {
        return Err(Error::Domain(format!(
            "square window required, got {}x{}",
            window.n1(),
            window.n2()
        )));
    }
    let n = window.n1() as f64;
    let threshold = (a.density().powi(3) - epsilon) * n * n;
    let r = (window.n2() as u64).sqrt().max(1) as i64;
    let (witness_d, witness_count) = brute_force_best_difference(a, -r, r)?;
    Ok(ThresholdVerdict {
        pass: witness_count as f64 >= threshold,
        witness_d,
        witness_count,
        threshold,
        margin: witness_count as f64 - threshold,
    })
}

/// The 1-D verdict threshold `δ³ − 4ε`, the binomial-theorem relaxation of
/// `(δ − ε)³`.
#[must_use]
pub fn one_d_threshold(delta: f64, epsilon: f64) -> f64 {
    delta.powi(3) - 4.0 * epsilon
}

/// Lifts a subset of `[N]` to the window `[⌊√N⌋]×[N]`:
/// `(x, y) ∈ Ã ⟺ x + y ∈ A1`.
pub fn lift_1d(a1: &[i64], n: i64) -> Result<SetIndicator> {
    if n < 1 {
        return Err(Error::Domain(format!("ambient bound must be >= 1, got {n}")));
    }
    let elements: BTreeSet<i64> = a1.iter().copied().collect();
    for &a in &elements {
        if a < 1 || a > n {
            return Err(Error::Domain(format!("element {a} outside [1, {n}]")));
        }
    }
    let root = (n as u64).sqrt().max(1) as i64;
    let window = GridWindow::new(root, n)?;
    let mut pts = Vec::new();
    for x in 1..=root {
        for &a in &elements {
            let y = a - x;
            if y >= 1 {
                pts.push((x, y));
            }
        }
    }
    SetIndicator::from_points(&pts, window)
}

/// Transfers a 2-D witness on the lift back down: returns the smallest
/// `x₀ ∈ [⌊√N⌋]` maximizing the per-column triple count of the lifted set
/// at difference `d`, together with every `y ∈ [N]` whose pattern
/// `(x₀+y, x₀+y+d, x₀+y+d²)` lies in `A1`.
///
/// The returned list has at least `count_for_difference(Ã, d) / ⌊√N⌋`
/// entries.
pub fn lift_transfer(a1: &[i64], n: i64, d: i64) -> Result<(i64, Vec<i64>)> {
    if d == 0 {
        return Err(Error::Domain("difference must be nonzero".into()));
    }
    let lifted = lift_1d(a1, n)?;
    let root = lifted.window().n1();
    let dsq = d
        .checked_mul(d)
        .ok_or_else(|| Error::Domain(format!("difference {d} overflows when squared")))?;

    let scores = par::map_indexed(root as usize, |xi| {
        let x0 = 1 + xi as i64;
        (1..=n)
            .filter(|&y| {
                lifted.contains(x0, y) && lifted.contains(x0 + d, y) && lifted.contains(x0, y + dsq)
            })
            .count() as u64
    });
    let mut best_x = 1i64;
    let mut best_score = scores[0];
    for (xi, &s) in scores.iter().enumerate().skip(1) {
        if s > best_score {
            best_score = s;
            best_x = 1 + xi as i64;
        }
    }

    let elements: BTreeSet<i64> = a1.iter().copied().collect();
    let ys: Vec<i64> = (1..=n)
        .filter(|&y| {
            elements.contains(&(best_x + y))
                && elements.contains(&(best_x + y + d))
                && elements.contains(&(best_x + y + dsq))
        })
        .collect();
    Ok((best_x, ys))
}
