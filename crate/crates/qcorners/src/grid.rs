//! Grid substrate: windows, set indicators, dense complex functions, fibers.
//!
//! Coordinates are 1-indexed throughout the public API — the window `[N1]×[N2]`
//! is `{1..N1}×{1..N2}` — and converted to 0-based offsets internally, so the
//! rest of the crate never juggles off-by-ones. Sets are stored as per-`x`
//! packed bit rows over `y` because the hot counting loops scan in `y` and
//! want word-parallel AND + popcount.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest cell count we accept for windows and function boxes.
/// Keeps every count safely inside `u64`/`i64` and allocations sane.
const MAX_CELLS: i64 = 1 << 31;

/// The box `[N1]×[N2] = {1..N1}×{1..N2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridWindow {
    n1: i64,
    n2: i64,
}

impl GridWindow {
    /// Creates the window `[n1]×[n2]`; both extents must be ≥ 1.
    pub fn new(n1: i64, n2: i64) -> Result<Self> {
        if n1 < 1 || n2 < 1 {
            return Err(Error::Domain(format!(
                "window extents must be >= 1, got {n1}x{n2}"
            )));
        }
        if n1.checked_mul(n2).is_none_or(|a| a > MAX_CELLS) {
            return Err(Error::Domain(format!(
                "window {n1}x{n2} exceeds the {MAX_CELLS}-cell cap"
            )));
        }
        Ok(GridWindow { n1, n2 })
    }

    /// Horizontal extent N1.
    #[must_use]
    pub fn n1(&self) -> i64 {
        self.n1
    }

    /// Vertical extent N2.
    #[must_use]
    pub fn n2(&self) -> i64 {
        self.n2
    }

    /// Number of cells N1·N2.
    #[must_use]
    pub fn area(&self) -> i64 {
        self.n1 * self.n2
    }

    /// True when (x, y) lies inside the window.
    #[must_use]
    pub fn contains(&self, x: i64, y: i64) -> bool {
        1 <= x && x <= self.n1 && 1 <= y && y <= self.n2
    }

    /// The window as an inclusive rectangle.
    #[must_use]
    pub fn rect(&self) -> Rect {
        Rect {
            x_lo: 1,
            x_hi: self.n1,
            y_lo: 1,
            y_hi: self.n2,
        }
    }
}

/// A subset of a window, stored as one packed bit row per `x`.
///
/// Bit `y − 1` of row `x` is set iff `(x, y)` is in the set. Rows are padded
/// to whole 64-bit words; padding bits are always zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetIndicator {
    window: GridWindow,
    words_per_row: usize,
    rows: Vec<u64>,
    cardinality: u64,
}

impl SetIndicator {
    /// Builds the indicator of the given points inside `window`.
    ///
    /// Duplicate points are collapsed; any point outside the window is an
    /// error naming the offender.
    pub fn from_points(points: &[(i64, i64)], window: GridWindow) -> Result<Self> {
        let words_per_row = (window.n2 as usize).div_ceil(64);
        let mut rows = vec![0u64; window.n1 as usize * words_per_row];
        let mut cardinality = 0u64;
        for &(x, y) in points {
            if !window.contains(x, y) {
                return Err(Error::Domain(format!(
                    "point outside window: ({x}, {y}) not in [{}]x[{}]",
                    window.n1, window.n2
                )));
            }
            let bit = (y - 1) as usize;
            let idx = (x - 1) as usize * words_per_row + bit / 64;
            let mask = 1u64 << (bit % 64);
            if rows[idx] & mask == 0 {
                rows[idx] |= mask;
                cardinality += 1;
            }
        }
        Ok(SetIndicator {
            window,
            words_per_row,
            rows,
            cardinality,
        })
    }

    /// The full window as a set.
    pub fn full(window: GridWindow) -> Self {
        let words_per_row = (window.n2 as usize).div_ceil(64);
        let mut rows = vec![0u64; window.n1 as usize * words_per_row];
        for x0 in 0..window.n1 as usize {
            let row = &mut rows[x0 * words_per_row..(x0 + 1) * words_per_row];
            let mut remaining = window.n2 as usize;
            for w in row.iter_mut() {
                let take = remaining.min(64);
                *w = if take == 64 { !0 } else { (1u64 << take) - 1 };
                remaining -= take;
            }
        }
        SetIndicator {
            window,
            words_per_row,
            rows,
            cardinality: window.area() as u64,
        }
    }

    /// The containing window.
    #[must_use]
    pub fn window(&self) -> GridWindow {
        self.window
    }

    /// Number of points in the set.
    #[must_use]
    pub fn cardinality(&self) -> u64 {
        self.cardinality
    }

    /// |A| / (N1·N2).
    #[must_use]
    pub fn density(&self) -> f64 {
        self.cardinality as f64 / self.window.area() as f64
    }

    /// Membership test; false outside the window.
    #[must_use]
    pub fn contains(&self, x: i64, y: i64) -> bool {
        if !self.window.contains(x, y) {
            return false;
        }
        let bit = (y - 1) as usize;
        let idx = (x - 1) as usize * self.words_per_row + bit / 64;
        self.rows[idx] & (1u64 << (bit % 64)) != 0
    }

    /// The packed bit row for column `x` (1-indexed); `None` outside `[N1]`.
    #[must_use]
    pub fn row_words(&self, x: i64) -> Option<&[u64]> {
        if x < 1 || x > self.window.n1 {
            return None;
        }
        let x0 = (x - 1) as usize;
        Some(&self.rows[x0 * self.words_per_row..(x0 + 1) * self.words_per_row])
    }

    /// All points of the set, sorted by (x, y).
    #[must_use]
    pub fn points(&self) -> Vec<(i64, i64)> {
        let mut out = Vec::with_capacity(self.cardinality as usize);
        for x in 1..=self.window.n1 {
            let row = self.row_words(x).unwrap();
            for (wi, &w) in row.iter().enumerate() {
                let mut bits = w;
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    out.push((x, (wi * 64 + b) as i64 + 1));
                    bits &= bits - 1;
                }
            }
        }
        out
    }

    /// Freshly recomputed population count over all rows (cache check).
    #[must_use]
    pub fn recount(&self) -> u64 {
        self.rows.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    /// Points per horizontal line: `R(y) = #{x' : (x', y) ∈ A}` for y ∈ [N2].
    #[must_use]
    pub fn line_counts_y(&self) -> Vec<u64> {
        let mut r = vec![0u64; self.window.n2 as usize];
        for &(_, y) in &self.points() {
            r[(y - 1) as usize] += 1;
        }
        r
    }

    /// Points per vertical line: `C(x) = #{y' : (x, y') ∈ A}` for x ∈ [N1].
    #[must_use]
    pub fn line_counts_x(&self) -> Vec<u64> {
        (1..=self.window.n1)
            .map(|x| {
                self.row_words(x)
                    .unwrap()
                    .iter()
                    .map(|w| u64::from(w.count_ones()))
                    .sum()
            })
            .collect()
    }

    /// The set as a 0/1 dense function on the window box.
    #[must_use]
    pub fn indicator_function(&self) -> DenseFunction {
        let rect = self.window.rect();
        DenseFunction::from_fn(rect, |x, y| {
            if self.contains(x, y) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .expect("indicator values are finite")
    }
}

/// Inclusive integer rectangle `[x_lo, x_hi]×[y_lo, y_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x_lo: i64,
    pub x_hi: i64,
    pub y_lo: i64,
    pub y_hi: i64,
}

impl Rect {
    /// Creates a rectangle; each low bound must not exceed its high bound.
    pub fn new(x_lo: i64, x_hi: i64, y_lo: i64, y_hi: i64) -> Result<Self> {
        if x_lo > x_hi || y_lo > y_hi {
            return Err(Error::Domain(format!(
                "empty rectangle [{x_lo}, {x_hi}]x[{y_lo}, {y_hi}]"
            )));
        }
        let r = Rect {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        };
        if r.width()
            .checked_mul(r.height())
            .is_none_or(|a| a > MAX_CELLS)
        {
            return Err(Error::Domain(format!(
                "rectangle [{x_lo}, {x_hi}]x[{y_lo}, {y_hi}] exceeds the {MAX_CELLS}-cell cap"
            )));
        }
        Ok(r)
    }

    /// Horizontal cell count.
    #[must_use]
    pub fn width(&self) -> i64 {
        self.x_hi - self.x_lo + 1
    }

    /// Vertical cell count.
    #[must_use]
    pub fn height(&self) -> i64 {
        self.y_hi - self.y_lo + 1
    }

    /// Total cell count.
    #[must_use]
    pub fn area(&self) -> i64 {
        self.width() * self.height()
    }

    /// True when (x, y) lies inside.
    #[must_use]
    pub fn contains(&self, x: i64, y: i64) -> bool {
        self.x_lo <= x && x <= self.x_hi && self.y_lo <= y && y <= self.y_hi
    }
}

/// Slack on the 1-boundedness check: |value| ≤ 1 + 2⁻⁴⁰ still counts as bounded.
const BOUNDED_SLACK: f64 = 1.0 + 1.0 / (1u64 << 40) as f64;

/// A finitely supported complex function on ℤ², stored densely on a box.
///
/// Evaluation outside the box is exactly 0. The `bounded` flag is computed at
/// construction and records whether the sup-norm is ≤ 1 (with a hair of float
/// slack); several operators require it as a precondition.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseFunction {
    rect: Rect,
    values: Vec<Complex64>,
    bounded: bool,
}

impl DenseFunction {
    /// Wraps a row-major (by `x`, then `y`) value array on `rect`.
    ///
    /// All values must be finite; NaN/Inf anywhere is rejected.
    pub fn new(rect: Rect, values: Vec<Complex64>) -> Result<Self> {
        if values.len() as i64 != rect.area() {
            return Err(Error::Domain(format!(
                "value array length {} does not match box area {}",
                values.len(),
                rect.area()
            )));
        }
        let mut bounded = true;
        for v in &values {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Domain("non-finite function value".into()));
            }
            if v.norm_sqr() > BOUNDED_SLACK * BOUNDED_SLACK {
                bounded = false;
            }
        }
        Ok(DenseFunction {
            rect,
            values,
            bounded,
        })
    }

    /// Builds the function by evaluating `f` on every cell of `rect`.
    pub fn from_fn(rect: Rect, f: impl Fn(i64, i64) -> Complex64) -> Result<Self> {
        let mut values = Vec::with_capacity(rect.area() as usize);
        for x in rect.x_lo..=rect.x_hi {
            for y in rect.y_lo..=rect.y_hi {
                values.push(f(x, y));
            }
        }
        DenseFunction::new(rect, values)
    }

    /// The zero function on `rect`.
    #[must_use]
    pub fn zero(rect: Rect) -> Self {
        DenseFunction {
            rect,
            values: vec![Complex64::new(0.0, 0.0); rect.area() as usize],
            bounded: true,
        }
    }

    /// The support box.
    #[must_use]
    pub fn rect(&self) -> Rect {
        self.rect
    }

    /// Whether every |value| ≤ 1 (up to 2⁻⁴⁰ slack).
    #[must_use]
    pub fn is_bounded(&self) -> bool {
        self.bounded
    }

    /// f(x, y); exactly 0 outside the support box.
    #[must_use]
    pub fn eval(&self, x: i64, y: i64) -> Complex64 {
        if !self.rect.contains(x, y) {
            return Complex64::new(0.0, 0.0);
        }
        let ix = (x - self.rect.x_lo) as usize * self.rect.height() as usize
            + (y - self.rect.y_lo) as usize;
        self.values[ix]
    }

    /// The vertical fiber `y ↦ f(x, y)` on the box's y-interval.
    ///
    /// When `x` falls outside the box the fiber is identically zero (on the
    /// same y-interval).
    #[must_use]
    pub fn fiber(&self, x: i64) -> Fiber {
        let h = self.rect.height() as usize;
        if x < self.rect.x_lo || x > self.rect.x_hi {
            return Fiber::new(self.rect.y_lo, vec![Complex64::new(0.0, 0.0); h]);
        }
        let ix = (x - self.rect.x_lo) as usize * h;
        Fiber::new(self.rect.y_lo, self.values[ix..ix + h].to_vec())
    }

    /// Raw values, row-major by `x` then `y`.
    #[must_use]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Borrowed y-row at `x` (starting at `rect().y_lo`); `None` outside the box.
    ///
    /// Same data as [`DenseFunction::fiber`], without the copy — for hot loops.
    #[must_use]
    pub fn row_slice(&self, x: i64) -> Option<&[Complex64]> {
        if x < self.rect.x_lo || x > self.rect.x_hi {
            return None;
        }
        let h = self.rect.height() as usize;
        let ix = (x - self.rect.x_lo) as usize * h;
        Some(&self.values[ix..ix + h])
    }

    /// Σ |f(x,y)|² over the box.
    #[must_use]
    pub fn l2_norm_sq(&self) -> f64 {
        self.values.iter().map(Complex64::norm_sqr).sum()
    }
}

/// A complex sequence indexed by `y` over an integer interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Fiber {
    y_lo: i64,
    values: Vec<Complex64>,
}

impl Fiber {
    /// Wraps values starting at `y_lo`; an empty value list is the zero fiber.
    #[must_use]
    pub fn new(y_lo: i64, values: Vec<Complex64>) -> Self {
        Fiber { y_lo, values }
    }

    /// A fiber of zeros on `[y_lo, y_lo + len)`.
    #[must_use]
    pub fn zeros(y_lo: i64, len: usize) -> Self {
        Fiber::new(y_lo, vec![Complex64::new(0.0, 0.0); len])
    }

    /// First index of the stored interval.
    #[must_use]
    pub fn y_lo(&self) -> i64 {
        self.y_lo
    }

    /// Last index of the stored interval; `None` when empty.
    #[must_use]
    pub fn y_hi(&self) -> Option<i64> {
        if self.values.is_empty() {
            None
        } else {
            Some(self.y_lo + self.values.len() as i64 - 1)
        }
    }

    /// Stored length.
    #[must_use]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when nothing is stored.
    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// f(y); exactly 0 outside the stored interval.
    #[must_use]
    pub fn value_at(&self, y: i64) -> Complex64 {
        if y < self.y_lo || y >= self.y_lo + self.values.len() as i64 {
            return Complex64::new(0.0, 0.0);
        }
        self.values[(y - self.y_lo) as usize]
    }

    /// Stored values in index order.
    #[must_use]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Σ f(y).
    #[must_use]
    pub fn sum(&self) -> Complex64 {
        self.values.iter().sum()
    }

    /// Σ |f(y)|².
    #[must_use]
    pub fn l2_norm_sq(&self) -> f64 {
        self.values.iter().map(Complex64::norm_sqr).sum()
    }

    /// Pointwise conjugate.
    #[must_use]
    pub fn conj(&self) -> Fiber {
        Fiber::new(self.y_lo, self.values.iter().map(Complex64::conj).collect())
    }

    /// Restriction to `[lo, hi]` (values outside drop to implicit zero).
    #[must_use]
    pub fn restrict(&self, lo: i64, hi: i64) -> Fiber {
        if self.values.is_empty() || hi < self.y_lo || lo > self.y_lo + self.values.len() as i64 - 1
        {
            return Fiber::new(lo, Vec::new());
        }
        let lo = lo.max(self.y_lo);
        let hi = hi.min(self.y_lo + self.values.len() as i64 - 1);
        let a = (lo - self.y_lo) as usize;
        let b = (hi - self.y_lo) as usize;
        Fiber::new(lo, self.values[a..=b].to_vec())
    }
}

/// A set parsed from text plus any diagnostics produced on the way.
#[derive(Debug)]
pub struct ParsedSet {
    pub set: SetIndicator,
    /// Human-readable warnings (duplicate points etc.); print to stderr.
    pub warnings: Vec<String>,
}

/// Parses the set text format.
///
/// Line 1: `N1 N2`. Every further non-comment line: `x y` (1-indexed). Lines
/// starting with `#` and blank lines are ignored. Duplicate points are kept
/// once, with a warning per duplicate.
pub fn parse_set_text(text: &str) -> Result<ParsedSet> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty set file".into()))?;
    let dims = parse_ints(header)
        .ok_or_else(|| Error::Parse(format!("line {hline}: expected \"N1 N2\", got {header:?}")))?;
    let [n1, n2] = dims[..] else {
        return Err(Error::Parse(format!(
            "line {hline}: expected exactly two window extents, got {header:?}"
        )));
    };
    let window = GridWindow::new(n1, n2)?;

    let mut points = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut warnings = Vec::new();
    for (ln, line) in lines {
        let nums = parse_ints(line)
            .ok_or_else(|| Error::Parse(format!("line {ln}: expected \"x y\", got {line:?}")))?;
        let [x, y] = nums[..] else {
            return Err(Error::Parse(format!(
                "line {ln}: expected exactly two coordinates, got {line:?}"
            )));
        };
        if !window.contains(x, y) {
            return Err(Error::Parse(format!(
                "line {ln}: point outside window: ({x}, {y}) not in [{n1}]x[{n2}]"
            )));
        }
        if !seen.insert((x, y)) {
            warnings.push(format!("line {ln}: duplicate point ignored: ({x}, {y})"));
            continue;
        }
        points.push((x, y));
    }
    let set = SetIndicator::from_points(&points, window)?;
    Ok(ParsedSet { set, warnings })
}

/// Renders a set in the text format (points sorted by (x, y)).
#[must_use]
pub fn format_set(set: &SetIndicator) -> String {
    let w = set.window();
    let mut out = format!("{} {}\n", w.n1(), w.n2());
    for (x, y) in set.points() {
        out.push_str(&format!("{x} {y}\n"));
    }
    out
}

/// Parses the dense-function text format.
///
/// Line 1: `x_lo x_hi y_lo y_hi`. Every further non-comment line:
/// `x y re im`. Unlisted cells are zero; a cell listed twice takes the last
/// value.
pub fn parse_function_text(text: &str) -> Result<DenseFunction> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty function file".into()))?;
    let dims = parse_ints(header).ok_or_else(|| {
        Error::Parse(format!(
            "line {hline}: expected \"x_lo x_hi y_lo y_hi\", got {header:?}"
        ))
    })?;
    let [x_lo, x_hi, y_lo, y_hi] = dims[..] else {
        return Err(Error::Parse(format!(
            "line {hline}: expected exactly four box bounds, got {header:?}"
        )));
    };
    let rect = Rect::new(x_lo, x_hi, y_lo, y_hi)?;

    let mut values = vec![Complex64::new(0.0, 0.0); rect.area() as usize];
    for (ln, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [xs, ys, res, ims] = fields[..] else {
            return Err(Error::Parse(format!(
                "line {ln}: expected \"x y re im\", got {line:?}"
            )));
        };
        let x: i64 = xs
            .parse()
            .map_err(|_| Error::Parse(format!("line {ln}: bad x coordinate {xs:?}")))?;
        let y: i64 = ys
            .parse()
            .map_err(|_| Error::Parse(format!("line {ln}: bad y coordinate {ys:?}")))?;
        let re: f64 = res
            .parse()
            .map_err(|_| Error::Parse(format!("line {ln}: bad real part {res:?}")))?;
        let im: f64 = ims
            .parse()
            .map_err(|_| Error::Parse(format!("line {ln}: bad imaginary part {ims:?}")))?;
        if !rect.contains(x, y) {
            return Err(Error::Parse(format!(
                "line {ln}: cell ({x}, {y}) outside the declared box"
            )));
        }
        let ix = (x - rect.x_lo) as usize * rect.height() as usize + (y - rect.y_lo) as usize;
        values[ix] = Complex64::new(re, im);
    }
    DenseFunction::new(rect, values)
}

/// Renders a function in the text format (nonzero cells only, row-major).
///
/// Values print in Rust's shortest round-trip form, so parsing the output
/// reproduces the function exactly.
#[must_use]
pub fn format_function(f: &DenseFunction) -> String {
    let r = f.rect();
    let mut out = format!("{} {} {} {}\n", r.x_lo, r.x_hi, r.y_lo, r.y_hi);
    for x in r.x_lo..=r.x_hi {
        for y in r.y_lo..=r.y_hi {
            let v = f.eval(x, y);
            if v != Complex64::new(0.0, 0.0) {
                out.push_str(&format!("{x} {y} {} {}\n", v.re, v.im));
            }
        }
    }
    out
}

fn parse_ints(line: &str) -> Option<Vec<i64>> {
    line.split_whitespace()
        .map(|t| t.parse::<i64>().ok())
        .collect()
}
