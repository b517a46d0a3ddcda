//! Seeded input generators: random sets, structured stripes and products,
//! the three-function sign construction, and file loading.
//!
//! All randomness comes from a counter-based seeded stream (ChaCha8) with a
//! fixed traversal order, so a given spec produces identical output on every
//! platform and thread count. OS entropy is never consulted.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::grid::{parse_set_text, DenseFunction, GridWindow, Rect, SetIndicator};

/// What to generate.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    /// Each point of `[N1]×[N2]` kept independently with probability
    /// `delta`.
    RandomDensity {
        n1: i64,
        n2: i64,
        delta: f64,
        seed: u64,
    },
    /// The product `B×C` inside `[N1]×[N2]`.
    Product {
        b: Vec<i64>,
        c: Vec<i64>,
        n1: i64,
        n2: i64,
    },
    /// The stripe `[N1]×{y ≡ 0 mod stride}`.
    Stripe { n1: i64, n2: i64, stride: i64 },
    /// Three 1-bounded sign functions on `[N]×[N²]` built from one random
    /// `φ: [N²] → {±1}`:
    /// `f0 = φ(x)φ(y)(−1)^{x+y}`, `f1 = (−1)^x φ(y)`, `f2 = φ(x)(−1)^y`.
    /// Their pointwise configuration product is identically 1 on the
    /// common support.
    RandomPhaseTriple { n: i64, seed: u64 },
    /// A set file on disk.
    FromFile { path: PathBuf },
}

/// Generator output: a point set or a function triple.
#[derive(Debug, Clone)]
pub enum Generated {
    Set(SetIndicator),
    Triple(Box<[DenseFunction; 3]>),
}

impl Generated {
    /// The set; a domain error for function triples.
    pub fn into_set(self) -> Result<SetIndicator> {
        match self {
            Generated::Set(s) => Ok(s),
            Generated::Triple(_) => Err(Error::Domain(
                "this task needs a point set, but the generator produced a function triple".into(),
            )),
        }
    }

    /// The ambient window of the generated object.
    #[must_use]
    pub fn window(&self) -> GridWindow {
        match self {
            Generated::Set(s) => s.window(),
            Generated::Triple(fs) => {
                let r = fs[0].rect();
                GridWindow::new(r.x_hi, r.y_hi).expect("triple windows are valid")
            }
        }
    }
}

/// Runs a generator spec. Deterministic in the spec (including its seed).
pub fn generate(spec: &GeneratorSpec) -> Result<Generated> {
    Ok(generate_with_warnings(spec)?.0)
}

/// [`generate`], also surfacing any parse warnings from file loading.
pub fn generate_with_warnings(spec: &GeneratorSpec) -> Result<(Generated, Vec<String>)> {
    match spec {
        GeneratorSpec::RandomDensity { n1, n2, delta, seed } => {
            if !(0.0..=1.0).contains(delta) {
                return Err(Error::Domain(format!(
                    "density must lie in [0, 1], got {delta}"
                )));
            }
            let window = GridWindow::new(*n1, *n2)?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut pts = Vec::new();
            for x in 1..=*n1 {
                for y in 1..=*n2 {
                    if rng.gen::<f64>() < *delta {
                        pts.push((x, y));
                    }
                }
            }
            Ok((Generated::Set(SetIndicator::from_points(&pts, window)?), vec![]))
        }
        GeneratorSpec::Product { b, c, n1, n2 } => {
            let window = GridWindow::new(*n1, *n2)?;
            let b: BTreeSet<i64> = b.iter().copied().collect();
            let c: BTreeSet<i64> = c.iter().copied().collect();
            for &x in &b {
                if x < 1 || x > *n1 {
                    return Err(Error::Domain(format!("factor element {x} outside [1, {n1}]")));
                }
            }
            for &y in &c {
                if y < 1 || y > *n2 {
                    return Err(Error::Domain(format!("factor element {y} outside [1, {n2}]")));
                }
            }
            let pts: Vec<(i64, i64)> = b
                .iter()
                .flat_map(|&x| c.iter().map(move |&y| (x, y)))
                .collect();
            Ok((Generated::Set(SetIndicator::from_points(&pts, window)?), vec![]))
        }
        GeneratorSpec::Stripe { n1, n2, stride } => {
            if *stride < 1 {
                return Err(Error::Domain(format!("stripe stride must be >= 1, got {stride}")));
            }
            let window = GridWindow::new(*n1, *n2)?;
            let mut pts = Vec::new();
            for x in 1..=*n1 {
                let mut y = *stride;
                while y <= *n2 {
                    pts.push((x, y));
                    y += *stride;
                }
            }
            Ok((Generated::Set(SetIndicator::from_points(&pts, window)?), vec![]))
        }
        GeneratorSpec::RandomPhaseTriple { n, seed } => {
            Ok((Generated::Triple(random_phase_triple(*n, *seed)?), vec![]))
        }
        GeneratorSpec::FromFile { path } => {
            let text = std::fs::read_to_string(path)?;
            let parsed = parse_set_text(&text)?;
            Ok((Generated::Set(parsed.set), parsed.warnings))
        }
    }
}

/// The sign-construction triple on `[N]×[N²]` from one shared random
/// `φ: [N²] → {±1}`.
pub fn random_phase_triple(n: i64, seed: u64) -> Result<Box<[DenseFunction; 3]>> {
    if n < 1 {
        return Err(Error::Domain(format!("side length must be >= 1, got {n}")));
    }
    let n2 = n
        .checked_mul(n)
        .ok_or_else(|| Error::Domain(format!("side length {n} overflows when squared")))?;
    let rect = Rect::new(1, n, 1, n2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi: Vec<f64> = (0..n2).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
    let phi = |v: i64| phi[(v - 1) as usize];
    let sign = |v: i64| if v % 2 == 0 { 1.0 } else { -1.0 };

    let f0 = DenseFunction::from_fn(rect, |x, y| {
        Complex64::new(phi(x) * phi(y) * sign(x + y), 0.0)
    })?;
    let f1 = DenseFunction::from_fn(rect, |x, y| Complex64::new(sign(x) * phi(y), 0.0))?;
    let f2 = DenseFunction::from_fn(rect, |x, y| Complex64::new(phi(x) * sign(y), 0.0))?;
    Ok(Box::new([f0, f1, f2]))
}

/// A seeded 1-bounded complex function on a box: independent values drawn
/// uniformly from the square `[−c, c]²` with `c = 1/√2`, row-major order.
pub fn random_bounded_function(rect: Rect, seed: u64) -> Result<DenseFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(rect.area() as usize);
    for _ in 0..rect.area() {
        let re = (rng.gen::<f64>() * 2.0 - 1.0) * std::f64::consts::FRAC_1_SQRT_2;
        let im = (rng.gen::<f64>() * 2.0 - 1.0) * std::f64::consts::FRAC_1_SQRT_2;
        values.push(Complex64::new(re, im));
    }
    DenseFunction::new(rect, values)
}
