//! Experiment runner: a key-value config format, task dispatch, and
//! deterministic report files.
//!
//! Reports never embed timestamps or machine state, and every parallel
//! reduction in the library is fixed-order, so a config (with its seed)
//! maps to byte-identical output at any thread count.

use num::integer::Roots;
use num_complex::Complex64;
use serde_json::json;
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::counting::{count_profile, dual_f, dual_g, lambda, CountMethod, CountingParams};
use crate::energy::{energy_increment_run, IncrementConfig};
use crate::error::{Error, Result};
use crate::expsums::{fiber_correlation_scan, rationalize, write_spectrum_csv, Direction};
use crate::fmt::g12;
use crate::gen::{generate_with_warnings, Generated, GeneratorSpec};
use crate::gowers::{gowers_norm, GowersOrder};
use crate::grid::{format_function, format_set, DenseFunction, GridWindow, SetIndicator};
use crate::popular::{popular_difference_search, verify_2d_threshold};

/// What the runner should do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// Write the generated object to data files.
    Gen,
    /// Per-difference configuration counts.
    Count,
    /// Per-column uniformity norms.
    Gowers,
    /// Vertical frequency scan with rational certificates.
    Weyl,
    /// Counting operator versus both dual pairings.
    Dual,
    /// The refinement iteration trace.
    Energy,
    /// The popular-difference pipeline.
    Popdiff,
    /// The square-window single-difference verdict.
    Verify,
}

impl Task {
    /// Lower-case task name, as used in config files and file names.
    #[must_use]
    pub fn name(&self) -> &'static str {
        match self {
            Task::Gen => "gen",
            Task::Count => "count",
            Task::Gowers => "gowers",
            Task::Weyl => "weyl",
            Task::Dual => "dual",
            Task::Energy => "energy",
            Task::Popdiff => "popdiff",
            Task::Verify => "verify",
        }
    }
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gen" => Ok(Task::Gen),
            "count" => Ok(Task::Count),
            "gowers" => Ok(Task::Gowers),
            "weyl" => Ok(Task::Weyl),
            "dual" => Ok(Task::Dual),
            "energy" => Ok(Task::Energy),
            "popdiff" => Ok(Task::Popdiff),
            "verify" => Ok(Task::Verify),
            other => Err(Error::Parse(format!("unknown task '{other}'"))),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which report artifacts to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    Json,
    Csv,
    /// JSON report plus CSV tables (the default).
    #[default]
    Both,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "both" => Ok(ReportFormat::Both),
            other => Err(Error::Parse(format!("unknown format '{other}'"))),
        }
    }
}

/// A full experiment description; the config file mirrors these fields.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub task: Option<Task>,
    pub generator: Option<GeneratorSpec>,
    pub epsilon: Option<f64>,
    pub d_min: Option<i64>,
    pub d_max: Option<i64>,
    pub order: Option<u32>,
    pub q_max: Option<u64>,
    pub scale: Option<f64>,
    pub format: Option<ReportFormat>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub gain_threshold: Option<f64>,
    pub q_tilde_max: Option<u64>,
    pub m_shrink: Option<f64>,
    pub max_stages: Option<u32>,
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Parse(format!("bad value '{v}' for key '{key}'")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<i64>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value::<i64>(key, s))
        .collect()
}

/// Parses the key-value config text.
///
/// One `key = value` pair per line; `#` starts a comment; keys are
/// case-insensitive and listed in the README. Unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut pairs: BTreeMap<String, String> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse(format!(
                "config line {}: expected 'key = value', got '{line}'",
                i + 1
            )));
        };
        pairs.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
    }

    let mut cfg = ExperimentConfig::default();
    let get = |k: &str| pairs.get(k).map(String::as_str);
    for key in pairs.keys() {
        const KNOWN: &[&str] = &[
            "task", "generator", "n1", "n2", "n", "delta", "seed", "stride", "b", "c", "path",
            "epsilon", "d_min", "d_max", "order", "q_max", "scale", "format", "output",
            "threads", "gain_threshold", "q_tilde_max", "m_shrink", "max_stages",
        ];
        if !KNOWN.contains(&key.as_str()) {
            return Err(Error::Parse(format!("unknown config key '{key}'")));
        }
    }

    if let Some(v) = get("task") {
        cfg.task = Some(v.parse()?);
    }
    if let Some(kind) = get("generator") {
        let require = |k: &str| {
            get(k).ok_or_else(|| Error::Parse(format!("{kind} generator requires key '{k}'")))
        };
        cfg.generator = Some(match kind {
            "random_density" => GeneratorSpec::RandomDensity {
                n1: parse_value("n1", require("n1")?)?,
                n2: parse_value("n2", require("n2")?)?,
                delta: parse_value("delta", require("delta")?)?,
                seed: parse_value("seed", require("seed")?)?,
            },
            "product" => GeneratorSpec::Product {
                b: parse_list("b", require("b")?)?,
                c: parse_list("c", require("c")?)?,
                n1: parse_value("n1", require("n1")?)?,
                n2: parse_value("n2", require("n2")?)?,
            },
            "stripe" => GeneratorSpec::Stripe {
                n1: parse_value("n1", require("n1")?)?,
                n2: parse_value("n2", require("n2")?)?,
                stride: parse_value("stride", require("stride")?)?,
            },
            "random_phase_triple" => GeneratorSpec::RandomPhaseTriple {
                n: parse_value("n", require("n")?)?,
                seed: parse_value("seed", require("seed")?)?,
            },
            "from_file" => GeneratorSpec::FromFile {
                path: PathBuf::from(require("path")?),
            },
            other => return Err(Error::Parse(format!("unknown generator '{other}'"))),
        });
    } else if let Some(path) = get("path") {
        cfg.generator = Some(GeneratorSpec::FromFile {
            path: PathBuf::from(path),
        });
    }
    if let Some(v) = get("epsilon") {
        cfg.epsilon = Some(parse_value("epsilon", v)?);
    }
    if let Some(v) = get("d_min") {
        cfg.d_min = Some(parse_value("d_min", v)?);
    }
    if let Some(v) = get("d_max") {
        cfg.d_max = Some(parse_value("d_max", v)?);
    }
    if let Some(v) = get("order") {
        cfg.order = Some(parse_value("order", v)?);
    }
    if let Some(v) = get("q_max") {
        cfg.q_max = Some(parse_value("q_max", v)?);
    }
    if let Some(v) = get("scale") {
        cfg.scale = Some(parse_value("scale", v)?);
    }
    if let Some(v) = get("format") {
        cfg.format = Some(v.parse()?);
    }
    if let Some(v) = get("output") {
        cfg.output = Some(PathBuf::from(v));
    }
    if let Some(v) = get("threads") {
        cfg.threads = Some(parse_value("threads", v)?);
    }
    if let Some(v) = get("gain_threshold") {
        cfg.gain_threshold = Some(parse_value("gain_threshold", v)?);
    }
    if let Some(v) = get("q_tilde_max") {
        cfg.q_tilde_max = Some(parse_value("q_tilde_max", v)?);
    }
    if let Some(v) = get("m_shrink") {
        cfg.m_shrink = Some(parse_value("m_shrink", v)?);
    }
    if let Some(v) = get("max_stages") {
        cfg.max_stages = Some(parse_value("max_stages", v)?);
    }
    Ok(cfg)
}

/// Paths written by a run, in write order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
}

struct Reporter {
    dir: PathBuf,
    format: ReportFormat,
    files: Vec<PathBuf>,
}

impl Reporter {
    fn write(&mut self, name: &str, content: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, content)?;
        self.files.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, content: &[u8]) -> Result<()> {
        if self.format != ReportFormat::Csv {
            self.write(name, content)?;
        }
        Ok(())
    }

    fn csv(&mut self, name: &str, content: &[u8]) -> Result<()> {
        if self.format != ReportFormat::Json {
            self.write(name, content)?;
        }
        Ok(())
    }
}

fn increment_config(cfg: &ExperimentConfig, task: Task) -> Result<(f64, IncrementConfig)> {
    let epsilon = cfg
        .epsilon
        .ok_or_else(|| Error::Domain(format!("{task} requires epsilon")))?;
    let mut inc = IncrementConfig::from_epsilon(epsilon)?;
    if let Some(v) = cfg.gain_threshold {
        inc.gain_threshold = v;
    }
    if let Some(v) = cfg.q_tilde_max {
        inc.q_tilde_max = v;
    }
    if let Some(v) = cfg.m_shrink {
        inc.m_shrink = v;
    }
    if let Some(v) = cfg.max_stages {
        inc.max_stages = v;
    }
    inc.validate()?;
    Ok((epsilon, inc))
}

fn triple_of(generated: Generated) -> ([DenseFunction; 3], GridWindow) {
    let w = generated.window();
    match generated {
        Generated::Triple(fs) => (*fs, w),
        Generated::Set(a) => {
            let f = a.indicator_function();
            ([f.clone(), f.clone(), f], w)
        }
    }
}

fn pair_sum(a: &DenseFunction, b: &DenseFunction) -> Complex64 {
    let r = a.rect();
    let mut acc = Complex64::new(0.0, 0.0);
    for x in r.x_lo..=r.x_hi {
        let row = a.row_slice(x).expect("x in box");
        for (i, v) in row.iter().enumerate() {
            if *v != Complex64::new(0.0, 0.0) {
                acc += v * b.eval(x, r.y_lo + i as i64);
            }
        }
    }
    acc
}

/// Executes the configured task and writes its report files.
///
/// Every task writes a JSON report; tasks with tabular output also write
/// CSV. `format` drops one of the two; generated data files (`gen`) are
/// always written.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let task = cfg
        .task
        .ok_or_else(|| Error::Domain("config does not name a task".into()))?;
    let spec = cfg
        .generator
        .as_ref()
        .ok_or_else(|| Error::Domain("config does not name a generator or input".into()))?;
    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    let mut rep = Reporter {
        dir,
        format: cfg.format.unwrap_or_default(),
        files: Vec::new(),
    };

    let (generated, warnings) = generate_with_warnings(spec)?;

    match task {
        Task::Gen => run_gen(cfg, generated, &warnings, &mut rep)?,
        Task::Count => run_count(cfg, generated.into_set()?, &mut rep)?,
        Task::Gowers => run_gowers(cfg, generated.into_set()?, &mut rep)?,
        Task::Weyl => run_weyl(cfg, generated.into_set()?, &mut rep)?,
        Task::Dual => run_dual(generated, &mut rep)?,
        Task::Energy => run_energy(cfg, generated, &mut rep)?,
        Task::Popdiff => run_popdiff(cfg, generated.into_set()?, &mut rep)?,
        Task::Verify => run_verify(cfg, generated.into_set()?, &mut rep)?,
    }
    Ok(RunSummary { files: rep.files })
}

fn json_bytes(v: &serde_json::Value) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(v)
        .map_err(|e| Error::Task(format!("report serialization failed: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn run_gen(
    _cfg: &ExperimentConfig,
    generated: Generated,
    warnings: &[String],
    rep: &mut Reporter,
) -> Result<()> {
    let report = match &generated {
        Generated::Set(a) => {
            rep.write("set.txt", format_set(a).as_bytes())?;
            json!({
                "kind": "set",
                "n1": a.window().n1(),
                "n2": a.window().n2(),
                "cardinality": a.cardinality(),
                "density": a.density(),
                "warnings": warnings,
            })
        }
        Generated::Triple(fs) => {
            for (i, f) in fs.iter().enumerate() {
                rep.write(&format!("f{i}.txt"), format_function(f).as_bytes())?;
            }
            let r = fs[0].rect();
            json!({
                "kind": "triple",
                "n1": r.x_hi,
                "n2": r.y_hi,
                "warnings": warnings,
            })
        }
    };
    rep.json("gen.json", &json_bytes(&report)?)
}

fn default_d_range(a: &SetIndicator) -> (i64, i64) {
    let r = ((a.window().n2() as u64).sqrt() as i64).min(a.window().n1() - 1);
    (-r, r)
}

fn run_count(cfg: &ExperimentConfig, a: SetIndicator, rep: &mut Reporter) -> Result<()> {
    let (lo_default, hi_default) = default_d_range(&a);
    let d_lo = cfg.d_min.unwrap_or(lo_default);
    let d_hi = cfg.d_max.unwrap_or(hi_default);
    let profile = count_profile(&a, d_lo, d_hi, CountMethod::BitParallel)?;
    let mut csv = Vec::new();
    profile.write_csv(&mut csv)?;
    rep.csv("count.csv", &csv)?;
    let report = json!({
        "n1": a.window().n1(),
        "n2": a.window().n2(),
        "cardinality": a.cardinality(),
        "d_values": profile.d_values,
        "counts": profile.counts,
    });
    rep.json("count.json", &json_bytes(&report)?)
}

fn run_gowers(cfg: &ExperimentConfig, a: SetIndicator, rep: &mut Reporter) -> Result<()> {
    let s = GowersOrder::new(cfg.order.unwrap_or(2))?;
    let f = a.indicator_function();
    let mut rows = Vec::new();
    for x in 1..=a.window().n1() {
        let norm = gowers_norm(&f.fiber(x), s, None)?;
        rows.push((x, norm));
    }
    let mut csv = String::from("x,norm\n");
    for (x, n) in &rows {
        csv.push_str(&format!("{x},{}\n", g12(*n)));
    }
    rep.csv("gowers.csv", csv.as_bytes())?;
    let report = json!({
        "order": cfg.order.unwrap_or(2),
        "norms": rows.iter().map(|(x, n)| json!({"x": x, "norm": n})).collect::<Vec<_>>(),
    });
    rep.json("gowers.json", &json_bytes(&report)?)
}

fn run_weyl(cfg: &ExperimentConfig, a: SetIndicator, rep: &mut Reporter) -> Result<()> {
    let q_max = cfg.q_max.unwrap_or(10);
    let scale = cfg.scale.unwrap_or(a.window().n2() as f64);
    let f = a.indicator_function();
    let lines = fiber_correlation_scan(&f, Direction::Vertical, q_max, scale);
    let mut csv = Vec::new();
    write_spectrum_csv(&lines, &mut csv)?;
    rep.csv("weyl.csv", &csv)?;
    let certificates: Vec<_> = lines
        .iter()
        .take(10)
        .filter_map(|l| rationalize(l.alpha, q_max, scale))
        .collect();
    let report = json!({
        "q_max": q_max,
        "scale": scale,
        "lines": lines,
        "certificates": certificates,
    });
    rep.json("weyl.json", &json_bytes(&report)?)
}

fn run_dual(generated: Generated, rep: &mut Reporter) -> Result<()> {
    let (fs, window) = triple_of(generated);
    let [f0, f1, f2] = &fs;
    let n = window.n1() as u64;
    let params = CountingParams::global(n, window)?;
    let lam = lambda(f0, f1, f2, &params)?;
    let area = window.area() as f64;
    let via_f = pair_sum(&dual_f(f0, f1, n)?, f2) / area;
    let via_g = pair_sum(&dual_g(f0, f2, n)?, f1) / area;
    let rel = |x: Complex64| (lam - x).norm() / (1.0 + lam.norm());
    let report = json!({
        "n": n,
        "lambda": [lam.re, lam.im],
        "via_first_dual": [via_f.re, via_f.im],
        "via_second_dual": [via_g.re, via_g.im],
        "residual_first": rel(via_f),
        "residual_second": rel(via_g),
    });
    let csv = format!(
        "quantity,re,im\nlambda,{},{}\nvia_first_dual,{},{}\nvia_second_dual,{},{}\n",
        g12(lam.re),
        g12(lam.im),
        g12(via_f.re),
        g12(via_f.im),
        g12(via_g.re),
        g12(via_g.im),
    );
    rep.csv("dual.csv", csv.as_bytes())?;
    rep.json("dual.json", &json_bytes(&report)?)
}

fn run_energy(cfg: &ExperimentConfig, generated: Generated, rep: &mut Reporter) -> Result<()> {
    let (_, inc) = increment_config(cfg, Task::Energy)?;
    let (fs, window) = triple_of(generated);
    let [f0, f1, f2] = &fs;
    let trace = energy_increment_run(f0, f1, f2, &inc, window)?;
    let mut js = Vec::new();
    trace.write_json(&mut js)?;
    rep.json("trace.json", &js)?;
    let mut csv = String::from("stage,q,M,energy,irregularity,accepted_q_tilde\n");
    for st in &trace.states {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            st.stage,
            st.q,
            st.m,
            g12(st.energy),
            g12(st.irregularity),
            st.accepted_q_tilde.map_or(String::new(), |q| q.to_string()),
        ));
    }
    rep.csv("trace.csv", csv.as_bytes())
}

fn run_popdiff(cfg: &ExperimentConfig, a: SetIndicator, rep: &mut Reporter) -> Result<()> {
    let (epsilon, inc) = increment_config(cfg, Task::Popdiff)?;
    let report = popular_difference_search(&a, epsilon, &inc)?;
    let mut js = Vec::new();
    report.write_json(&mut js)?;
    rep.json("popdiff.json", &js)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    rep.csv("popdiff.csv", &csv)
}

fn run_verify(cfg: &ExperimentConfig, a: SetIndicator, rep: &mut Reporter) -> Result<()> {
    let epsilon = cfg
        .epsilon
        .ok_or_else(|| Error::Domain("verify requires epsilon".into()))?;
    let verdict = verify_2d_threshold(&a, epsilon)?;
    let report = serde_json::to_value(verdict)
        .map_err(|e| Error::Task(format!("report serialization failed: {e}")))?;
    rep.json("verify.json", &json_bytes(&report)?)?;
    let csv = format!(
        "pass,witness_d,witness_count,threshold,margin\n{},{},{},{},{}\n",
        verdict.pass,
        verdict.witness_d,
        verdict.witness_count,
        g12(verdict.threshold),
        g12(verdict.margin),
    );
    rep.csv("verify.csv", csv.as_bytes())
}

/// Runs `f` on a dedicated pool of `threads` workers (data-parallel build),
/// or directly when no count is given. Without the parallel feature the
/// count is ignored and execution is sequential.
#[cfg(feature = "parallel")]
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Task(format!("thread pool construction failed: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Sequential-build variant: the thread count is ignored.
#[cfg(not(feature = "parallel"))]
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let _ = threads;
    Ok(f())
}
