//! The L² energy of stride-smoothed fibers, the paired irregularity
//! functional, and the stride-refinement iteration it drives.
//!
//! The iteration replaces an existential inverse step with an explicit
//! search: when the irregularity is large, candidate strides are read off
//! the vertical spectrum of the unsmoothed residue, and a refinement is
//! accepted only when the measured energy gain clears a threshold.

use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;

use crate::counting::lambda_unnormalized;
use crate::error::{Error, Result};
use crate::expsums::{fiber_correlation_scan, rationalize, Direction};
use crate::grid::{DenseFunction, GridWindow, Rect};
use crate::kernels::{convolve, triangular, ConvMethod, Kernel};
use crate::par;

/// One stage of the refinement iteration: the stride `q`, the window
/// halfwidth `M`, and the measured energy/irregularity at that stage.
/// `accepted_q_tilde` records the stride factor accepted *leaving* this
/// stage (`None` on the final one).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyState {
    pub stage: u32,
    pub q: u64,
    #[serde(rename = "M")]
    pub m: u64,
    pub energy: f64,
    pub irregularity: f64,
    pub accepted_q_tilde: Option<u64>,
}

/// Tuning knobs for [`energy_increment_run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementConfig {
    /// Regularity target in (0, 1/2].
    pub epsilon: f64,
    /// A refinement is accepted only if energy grows by at least
    /// `gain_threshold · N1 · N2`.
    pub gain_threshold: f64,
    /// Largest stride factor the spectral search may propose.
    pub q_tilde_max: u64,
    /// Window shrink factor per refinement, in (0, 1).
    pub m_shrink: f64,
    /// Hard stage cap.
    pub max_stages: u32,
}

impl IncrementConfig {
    /// The default parameterization at regularity `ε`: gain threshold `ε⁴`,
    /// stride bound `⌈ε⁻²⌉`, shrink `ε²`, stage cap `⌈ε⁻⁴⌉ + 2`.
    pub fn from_epsilon(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 0.5) {
            return Err(Error::Domain(format!(
                "epsilon must lie in (0, 1/2], got {epsilon}"
            )));
        }
        let cfg = IncrementConfig {
            epsilon,
            gain_threshold: epsilon.powi(4),
            q_tilde_max: (epsilon.powi(-2)).ceil() as u64,
            m_shrink: epsilon * epsilon,
            max_stages: (epsilon.powi(-4)).ceil() as u32 + 2,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every field range, including that the stage cap leaves room
    /// for the maximal number of accepted refinements (`1 + 1/gain`).
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 0.5) {
            return Err(Error::Domain(format!(
                "epsilon must lie in (0, 1/2], got {}",
                self.epsilon
            )));
        }
        if !(self.gain_threshold > 0.0) {
            return Err(Error::Domain("gain threshold must be positive".into()));
        }
        if self.q_tilde_max < 1 {
            return Err(Error::Domain("stride bound must be >= 1".into()));
        }
        if !(self.m_shrink > 0.0 && self.m_shrink < 1.0) {
            return Err(Error::Domain(format!(
                "shrink factor must lie in (0, 1), got {}",
                self.m_shrink
            )));
        }
        let needed = (1.0 + 1.0 / self.gain_threshold).ceil();
        if (self.max_stages as f64) < needed {
            return Err(Error::Domain(format!(
                "stage cap {} cannot accommodate up to {needed} accepted stages",
                self.max_stages
            )));
        }
        Ok(())
    }
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The irregularity fell to `ε·N1·N2` or below.
    IrregularitySmall,
    /// The window could not shrink further, or no candidate stride
    /// delivered the required energy gain.
    WindowExhausted,
    /// The stage cap was reached.
    StageCap,
}

/// The full ledger of a refinement run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncrementTrace {
    pub states: Vec<EnergyState>,
    pub termination: Termination,
}

impl IncrementTrace {
    /// The last recorded stage. Traces are never empty.
    #[must_use]
    pub fn final_state(&self) -> &EnergyState {
        self.states.last().expect("trace has at least one stage")
    }

    /// Re-checks the run's structural guarantees: stages numbered from 0,
    /// every accepted transition grows energy by the configured gain, the
    /// number of accepted stages is at most `1 + 1/gain`, and every stage
    /// keeps `q·M ≤ ε·√N2`.
    pub fn check_invariants(&self, cfg: &IncrementConfig, window: GridWindow) -> Result<()> {
        let area = window.area() as f64;
        let budget = cfg.epsilon * cfg.epsilon * window.n2() as f64;
        let mut accepted = 0u32;
        for (i, st) in self.states.iter().enumerate() {
            if st.stage as usize != i {
                return Err(Error::NumericalIntegrity(format!(
                    "trace stages out of order at index {i}"
                )));
            }
            let qm = st.q as f64 * st.m as f64;
            if qm * qm > budget * (1.0 + 1e-9) {
                return Err(Error::NumericalIntegrity(format!(
                    "stage {i} violates q·M <= eps·sqrt(N2): q={}, M={}",
                    st.q, st.m
                )));
            }
            if let Some(qt) = st.accepted_q_tilde {
                accepted += 1;
                let next = self.states.get(i + 1).ok_or_else(|| {
                    Error::NumericalIntegrity(format!(
                        "stage {i} accepts a refinement but the trace ends"
                    ))
                })?;
                if next.q != st.q * qt {
                    return Err(Error::NumericalIntegrity(format!(
                        "stage {} stride {} does not equal {}·{}",
                        i + 1,
                        next.q,
                        st.q,
                        qt
                    )));
                }
                if next.energy < st.energy + cfg.gain_threshold * area {
                    return Err(Error::NumericalIntegrity(format!(
                        "accepted stage {} gained only {}",
                        i + 1,
                        next.energy - st.energy
                    )));
                }
            }
        }
        if (accepted as f64) > 1.0 + 1.0 / cfg.gain_threshold {
            return Err(Error::NumericalIntegrity(format!(
                "{accepted} accepted stages exceeds the 1 + 1/gain budget"
            )));
        }
        Ok(())
    }

    /// Serializes the trace as pretty-printed JSON.
    pub fn write_json(&self, mut w: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self)
            .map_err(|e| Error::Task(format!("trace serialization failed: {e}")))?;
        writeln!(w)?;
        Ok(())
    }
}

/// The smoothing kernel at stride `q`, window `M`: the triangular weight of
/// halfwidth `M²` stretched onto `q²·ℤ`.
fn stretched_square_kernel(q: u64, m: u64) -> Result<Kernel> {
    if q < 1 || m < 1 {
        return Err(Error::Domain("stride q and window M must be >= 1".into()));
    }
    let q2 = (q as i64)
        .checked_mul(q as i64)
        .ok_or_else(|| Error::Domain(format!("stride {q} overflows when squared")))?;
    triangular(m as f64 * m as f64)?.stretch(q2)
}

/// `Σ_x ‖f^x ∗ μ_{q²,M²}‖₂²`: the total L² mass of every vertical fiber
/// after stride-`q²` smoothing at window `M²`. Nonnegative; at most `Σ|f|²`
/// for any input (smoothing contracts L²).
pub fn energy(f2: &DenseFunction, q: u64, m: u64) -> Result<f64> {
    let kernel = stretched_square_kernel(q, m)?;
    let rect = f2.rect();
    let per_x = par::map_indexed(rect.width() as usize, |xi| {
        let fiber = f2.fiber(rect.x_lo + xi as i64);
        convolve(&fiber, &kernel, ConvMethod::Auto).l2_norm_sq()
    });
    Ok(per_x.into_iter().sum())
}

/// `f − f∗μ_{q²,M²}`, materialized on the y-extended box where either term
/// is nonzero. One fiber convolution per column.
pub(crate) fn smoothed_difference(f2: &DenseFunction, q: u64, m: u64) -> Result<DenseFunction> {
    let kernel = stretched_square_kernel(q, m)?;
    let w = kernel.max_abs_offset();
    let r = f2.rect();
    let rect = Rect::new(r.x_lo, r.x_hi, r.y_lo - w, r.y_hi + w)?;
    let h = rect.height() as usize;
    let rows = par::map_indexed(rect.width() as usize, |xi| {
        let x = rect.x_lo + xi as i64;
        let smoothed = convolve(&f2.fiber(x), &kernel, ConvMethod::Auto);
        (0..h)
            .map(|yi| {
                let y = rect.y_lo + yi as i64;
                f2.eval(x, y) - smoothed.value_at(y)
            })
            .collect::<Vec<_>>()
    });
    DenseFunction::new(rect, rows.concat())
}

/// `|Σ_{x,y,d} μ_{⌊εM⌋}(d) f0(x,y) f1(x+qd,y) (f2 − f2∗μ_{q²,M²})(x, y+q²d²)|`:
/// how strongly the pair `(f0, f1)` sees the unsmoothed residue of `f2`
/// along stride-`q` differences.
///
/// The short kernel needs `⌊εM⌋ ≥ 1`; anything smaller is a domain error.
pub fn irregularity(
    f0: &DenseFunction,
    f1: &DenseFunction,
    f2: &DenseFunction,
    q: u64,
    m: u64,
    epsilon: f64,
) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let width = epsilon * m as f64;
    if width.floor() < 1.0 {
        return Err(Error::Domain(format!(
            "difference kernel undefined: floor(eps·M) = floor({width}) < 1"
        )));
    }
    irregularity_with_width(f0, f1, f2, q, m, width)
}

/// [`irregularity`] with the short-kernel width clamped up to 1, so stages
/// with `εM < 1` degrade to a point-mass difference kernel instead of
/// failing. The iteration uses this; the strict entry point keeps the
/// documented domain.
pub(crate) fn irregularity_clamped(
    f0: &DenseFunction,
    f1: &DenseFunction,
    f2: &DenseFunction,
    q: u64,
    m: u64,
    epsilon: f64,
) -> Result<f64> {
    irregularity_with_width(f0, f1, f2, q, m, (epsilon * m as f64).max(1.0))
}

fn irregularity_with_width(
    f0: &DenseFunction,
    f1: &DenseFunction,
    f2: &DenseFunction,
    q: u64,
    m: u64,
    width: f64,
) -> Result<f64> {
    let short = triangular(width)?;
    let residue = smoothed_difference(f2, q, m)?;
    Ok(lambda_unnormalized(f0, f1, &residue, q as i64, &short).norm())
}

/// Candidate stride factors `q̃ ≤ q_tilde_max`, ranked by the strongest
/// certified vertical correlation of the unsmoothed residue.
///
/// Each scanned frequency is rationalized at scale `M²`; frequencies that
/// certify to the same denominator keep their best score. Empty when
/// nothing scores above zero.
pub fn spectral_candidate(
    f2: &DenseFunction,
    q: u64,
    m: u64,
    cfg: &IncrementConfig,
) -> Result<Vec<(u64, f64)>> {
    let residue = smoothed_difference(f2, q, m)?;
    let scale = m as f64 * m as f64;
    let lines = fiber_correlation_scan(&residue, Direction::Vertical, cfg.q_tilde_max, scale);
    let mut best: BTreeMap<u64, f64> = BTreeMap::new();
    for line in &lines {
        if line.score <= 0.0 {
            continue;
        }
        if let Some(cert) = rationalize(line.alpha, cfg.q_tilde_max, scale) {
            let entry = best.entry(cert.q).or_insert(0.0);
            if line.score > *entry {
                *entry = line.score;
            }
        }
    }
    let mut out: Vec<(u64, f64)> = best.into_iter().collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(out)
}

/// The refinement iteration. Starting from `(q, M) = (1, ⌊ε√N2⌋)`, each
/// stage measures the irregularity; while it exceeds `ε·N1·N2`, the stage
/// proposes strides from [`spectral_candidate`], shrinks the window to
/// `⌊m_shrink·M/q̃⌋`, and accepts the candidate with the best measured
/// energy gain provided the gain is at least `gain_threshold·N1·N2`.
///
/// Stops with [`Termination::IrregularitySmall`] on a regular stage,
/// [`Termination::WindowExhausted`] when no candidate can be used (window
/// below 2 or gain too small), or [`Termination::StageCap`].
pub fn energy_increment_run(
    f0: &DenseFunction,
    f1: &DenseFunction,
    f2: &DenseFunction,
    cfg: &IncrementConfig,
    window: GridWindow,
) -> Result<IncrementTrace> {
    cfg.validate()?;
    if window.n2() < 4 {
        return Err(Error::Domain(format!(
            "window height must be at least 4, got {}",
            window.n2()
        )));
    }
    let m0 = (cfg.epsilon * (window.n2() as f64).sqrt()).floor();
    if m0 < 1.0 {
        return Err(Error::Domain(format!(
            "initial window floor(eps·sqrt(N2)) is 0 for eps = {}, N2 = {}",
            cfg.epsilon,
            window.n2()
        )));
    }

    let area = window.area() as f64;
    let mut q: u64 = 1;
    let mut m = m0 as u64;
    let mut states: Vec<EnergyState> = Vec::new();
    let termination = loop {
        if states.len() as u32 >= cfg.max_stages {
            break Termination::StageCap;
        }
        let current_energy = energy(f2, q, m)?;
        let irr = irregularity_clamped(f0, f1, f2, q, m, cfg.epsilon)?;
        let mut state = EnergyState {
            stage: states.len() as u32,
            q,
            m,
            energy: current_energy,
            irregularity: irr,
            accepted_q_tilde: None,
        };
        if irr <= cfg.epsilon * area {
            states.push(state);
            break Termination::IrregularitySmall;
        }

        let mut best: Option<(u64, u64, f64)> = None;
        for &(q_tilde, _score) in &spectral_candidate(f2, q, m, cfg)? {
            let m_new = (cfg.m_shrink * m as f64 / q_tilde as f64).floor();
            if m_new < 2.0 {
                continue;
            }
            let q_new = q.checked_mul(q_tilde).ok_or_else(|| {
                Error::NumericalIntegrity(format!("stride overflow at q̃ = {q_tilde}"))
            })?;
            let gain = energy(f2, q_new, m_new as u64)? - current_energy;
            if best.map_or(true, |(_, _, g)| gain > g) {
                best = Some((q_tilde, m_new as u64, gain));
            }
        }
        match best {
            Some((q_tilde, m_new, gain)) if gain >= cfg.gain_threshold * area => {
                state.accepted_q_tilde = Some(q_tilde);
                states.push(state);
                q *= q_tilde;
                m = m_new;
            }
            _ => {
                states.push(state);
                break Termination::WindowExhausted;
            }
        }
    };

    let trace = IncrementTrace {
        states,
        termination,
    };
    trace.check_invariants(cfg, window)?;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Fiber, SetIndicator};
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn full_fn(n1: i64, n2: i64) -> DenseFunction {
        SetIndicator::full(GridWindow::new(n1, n2).unwrap()).indicator_function()
    }

    fn stripe_fn(n1: i64, n2: i64, r: i64) -> (SetIndicator, DenseFunction) {
        let w = GridWindow::new(n1, n2).unwrap();
        let mut pts = Vec::new();
        for x in 1..=n1 {
            for y in 1..=n2 {
                if y % r == 0 {
                    pts.push((x, y));
                }
            }
        }
        let a = SetIndicator::from_points(&pts, w).unwrap();
        let f = a.indicator_function();
        (a, f)
    }

    #[test]
    fn energy_of_zero_is_zero() {
        let z = DenseFunction::zero(Rect::new(1, 2, 1, 9).unwrap());
        assert_eq!(energy(&z, 1, 3).unwrap(), 0.0);
    }

    #[test]
    fn energy_with_point_mass_kernel_is_l2_norm() {
        let f = full_fn(2, 9);
        assert!((energy(&f, 1, 1).unwrap() - 18.0).abs() < 1e-12);
        assert!((energy(&f, 7, 1).unwrap() - 18.0).abs() < 1e-12);
    }

    #[test]
    fn energy_of_short_interval() {
        // One column of height 4 smoothed at window 2 (kernel halfwidth 4):
        // fiber values (1/16, 3/16, 6/16, 10/16, 12/16, 12/16, 10/16, 6/16,
        // 3/16, 1/16), giving 580/256.
        let f = full_fn(1, 4);
        assert!((energy(&f, 1, 2).unwrap() - 580.0 / 256.0).abs() < 1e-12);
    }

    #[test]
    fn energy_never_exceeds_l2_mass() {
        for seed in 0..6u64 {
            let rect = Rect::new(1, 3, 1, 60).unwrap();
            let f = DenseFunction::from_fn(rect, |x, y| {
                let t = (x as u64 * 7919 + y as u64 * 104729 + seed * 31)
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15);
                c(((t >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0)
            })
            .unwrap();
            let mass: f64 = f.l2_norm_sq();
            for (q, m) in [(1, 2), (1, 3), (2, 2), (3, 2)] {
                let e = energy(&f, q, m).unwrap();
                assert!(e >= 0.0);
                assert!(e <= mass * (1.0 + 1e-6), "q={q} m={m}: {e} > {mass}");
            }
        }
    }

    #[test]
    fn irregularity_of_zero_inputs() {
        let f = full_fn(4, 100);
        let z = DenseFunction::zero(f.rect());
        assert_eq!(irregularity(&f, &f, &z, 1, 10, 0.5).unwrap(), 0.0);
        assert_eq!(irregularity(&z, &f, &f, 1, 10, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn irregularity_of_constant_is_boundary_sized() {
        // Smoothing the full indicator only misses mass near the y-edges:
        // the residue lives within q²M² = 100 of the boundary, so the total
        // is far below the 4·10⁴ bulk, and under the 4·200 boundary budget.
        let f = full_fn(4, 10_000);
        let irr = irregularity(&f, &f, &f, 1, 10, 0.5).unwrap();
        assert!(irr <= 800.0, "got {irr}");
        assert!(irr > 0.0);
    }

    #[test]
    fn irregularity_rejects_vanishing_kernel() {
        let f = full_fn(2, 100);
        let err = irregularity(&f, &f, &f, 1, 3, 0.25).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        // The clamped variant degrades to a point mass instead.
        assert!(irregularity_clamped(&f, &f, &f, 1, 3, 0.25).is_ok());
    }

    #[test]
    fn spectral_candidates_for_zero_function() {
        let z = DenseFunction::zero(Rect::new(1, 2, 1, 64).unwrap());
        let cfg = IncrementConfig::from_epsilon(0.5).unwrap();
        assert!(spectral_candidate(&z, 1, 2, &cfg).unwrap().is_empty());
    }

    #[test]
    fn spectral_candidates_find_alternating_stride() {
        let rect = Rect::new(1, 2, 1, 64).unwrap();
        let f = DenseFunction::from_fn(rect, |_, y| c(if y % 2 == 0 { 1.0 } else { -1.0 }))
            .unwrap();
        let cfg = IncrementConfig {
            epsilon: 0.125,
            gain_threshold: 1e-4,
            q_tilde_max: 8,
            m_shrink: 0.9,
            max_stages: 10_010,
        };
        let cands = spectral_candidate(&f, 1, 8, &cfg).unwrap();
        assert_eq!(cands.first().map(|&(q, _)| q), Some(2));
    }

    #[test]
    fn spectral_candidates_find_third_roots() {
        let rect = Rect::new(1, 2, 1, 63).unwrap();
        let f = DenseFunction::from_fn(rect, |_, y| {
            crate::expsums::phase(y as f64 / 3.0)
        })
        .unwrap();
        let cfg = IncrementConfig {
            epsilon: 0.125,
            gain_threshold: 1e-4,
            q_tilde_max: 8,
            m_shrink: 0.9,
            max_stages: 10_010,
        };
        let cands = spectral_candidate(&f, 1, 8, &cfg).unwrap();
        assert_eq!(cands.first().map(|&(q, _)| q), Some(3));
    }

    #[test]
    fn run_on_zero_terminates_immediately() {
        let w = GridWindow::new(4, 256).unwrap();
        let z = DenseFunction::zero(Rect::new(1, 4, 1, 256).unwrap());
        let cfg = IncrementConfig::from_epsilon(0.25).unwrap();
        let trace = energy_increment_run(&z, &z, &z, &cfg, w).unwrap();
        assert_eq!(trace.termination, Termination::IrregularitySmall);
        assert_eq!(trace.states.len(), 1);
        assert_eq!(trace.final_state().q, 1);
        assert_eq!(trace.final_state().m, 4); // ⌊0.25·16⌋
    }

    #[test]
    fn run_on_full_window_is_regular_at_stage_zero() {
        let w = GridWindow::new(8, 4096).unwrap();
        let f = full_fn(8, 4096);
        let cfg = IncrementConfig::from_epsilon(0.1).unwrap();
        let trace = energy_increment_run(&f, &f, &f, &cfg, w).unwrap();
        assert_eq!(trace.termination, Termination::IrregularitySmall);
        assert_eq!(trace.states.len(), 1);
        assert_eq!(trace.final_state().m, 6); // ⌊0.1·64⌋
    }

    #[test]
    fn run_discovers_even_stripe() {
        let w = GridWindow::new(8, 4096).unwrap();
        let (_, f) = stripe_fn(8, 4096, 2);
        let cfg = IncrementConfig {
            epsilon: 0.125,
            gain_threshold: 0.125f64.powi(4),
            q_tilde_max: 8,
            m_shrink: 0.9,
            max_stages: 4200,
        };
        let trace = energy_increment_run(&f, &f, &f, &cfg, w).unwrap();
        assert_eq!(trace.termination, Termination::IrregularitySmall);
        assert_eq!(trace.states.len(), 2);
        assert_eq!(trace.states[0].accepted_q_tilde, Some(2));
        assert_eq!(trace.final_state().q, 2);
        trace.check_invariants(&cfg, w).unwrap();
    }

    #[test]
    fn run_rejects_degenerate_window() {
        let w = GridWindow::new(8, 4096).unwrap();
        let f = full_fn(8, 4096);
        // ⌊0.01·64⌋ = 0: no initial window exists at this epsilon.
        let cfg = IncrementConfig::from_epsilon(0.01).unwrap();
        let err = energy_increment_run(&f, &f, &f, &cfg, w).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn trace_json_shape() {
        let w = GridWindow::new(4, 256).unwrap();
        let z = DenseFunction::zero(Rect::new(1, 4, 1, 256).unwrap());
        let cfg = IncrementConfig::from_epsilon(0.25).unwrap();
        let trace = energy_increment_run(&z, &z, &z, &cfg, w).unwrap();
        let mut buf = Vec::new();
        trace.write_json(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["termination"], "irregularity_small");
        assert_eq!(v["states"][0]["stage"], 0);
        assert_eq!(v["states"][0]["q"], 1);
        assert_eq!(v["states"][0]["M"], 4);
        assert_eq!(v["states"][0]["accepted_q_tilde"], serde_json::Value::Null);
        assert!(v["states"][0]["energy"].is_number());
        assert!(v["states"][0]["irregularity"].is_number());
    }

    #[test]
    fn config_validation() {
        assert!(IncrementConfig::from_epsilon(0.5).is_ok());
        assert!(IncrementConfig::from_epsilon(0.0).is_err());
        assert!(IncrementConfig::from_epsilon(0.6).is_err());
        let mut cfg = IncrementConfig::from_epsilon(0.5).unwrap();
        cfg.m_shrink = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = IncrementConfig::from_epsilon(0.5).unwrap();
        cfg.max_stages = 3; // needs ceil(1 + 16) = 17
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn determinism_across_runs() {
        let w = GridWindow::new(8, 1024).unwrap();
        let (_, f) = stripe_fn(8, 1024, 3);
        let cfg = IncrementConfig {
            epsilon: 0.25,
            gain_threshold: 0.001,
            q_tilde_max: 6,
            m_shrink: 0.9,
            max_stages: 1010,
        };
        let t1 = energy_increment_run(&f, &f, &f, &cfg, w).unwrap();
        let t2 = energy_increment_run(&f, &f, &f, &cfg, w).unwrap();
        assert_eq!(t1, t2);
        let mut b1 = Vec::new();
        let mut b2 = Vec::new();
        t1.write_json(&mut b1).unwrap();
        t2.write_json(&mut b2).unwrap();
        assert_eq!(b1, b2);
    }

    #[test]
    fn smoothing_orthogonality_decays_with_window() {
        // ⟨f∗μ_{q²,M²}, f∗(μ_{q²,M²} − μ_{q²q̃²,M̃²})⟩, normalized by Σ|f|²,
        // along M̃/M ∈ {1/4, 1/8, 1/16, 1/32} at fixed q̃ = 2: each step may
        // not grow by more than the 10⁻³ noise floor.
        let len = 8192usize;
        let mut vals = Vec::with_capacity(len);
        let mut t: u64 = 0x3C6E_F372_FE94_F82A;
        for _ in 0..len {
            t ^= t << 13;
            t ^= t >> 7;
            t ^= t << 17;
            let re = (t >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
            vals.push(c(re));
        }
        let f = Fiber::new(1, vals);
        let mass = f.l2_norm_sq();

        let (q, q_tilde, m) = (1i64, 2i64, 32u64);
        let coarse = triangular((m * m) as f64).unwrap().stretch(q * q).unwrap();
        let a = convolve(&f, &coarse, ConvMethod::Auto);
        let mut scores = Vec::new();
        for m_tilde in [8u64, 4, 2, 1] {
            let fine = triangular((m_tilde * m_tilde) as f64)
                .unwrap()
                .stretch(q * q * q_tilde * q_tilde)
                .unwrap();
            let b = convolve(&f, &fine, ConvMethod::Auto);
            let mut inner = Complex64::new(0.0, 0.0);
            let hi = a.y_hi().unwrap();
            for y in a.y_lo()..=hi {
                inner += a.value_at(y) * (a.value_at(y) - b.value_at(y)).conj();
            }
            scores.push(inner.norm() / mass);
        }
        for pair in scores.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-3,
                "orthogonality trend broken: {scores:?}"
            );
        }
    }
}
