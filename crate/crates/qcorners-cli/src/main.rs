//! Command-line driver: one subcommand per task, a shared flag set, and an
//! optional key-value config file that flags override.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use qcorners::gen::GeneratorSpec;
use qcorners::runner::{parse_config, run_experiment, with_threads, ExperimentConfig, Task};
use qcorners::Error;

#[derive(Parser)]
#[command(name = "qcorners", version, about = "Corner-counting experiments on finite grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a point set or function triple and write it to files.
    Gen(TaskArgs),
    /// Count configurations for each difference in a range.
    Count(TaskArgs),
    /// Per-column uniformity norms.
    Gowers(TaskArgs),
    /// Vertical frequency scan with rational certificates.
    Weyl(TaskArgs),
    /// Compare the counting operator against both dual pairings.
    Dual(TaskArgs),
    /// Run the refinement iteration and report its trace.
    Energy(TaskArgs),
    /// Full popular-difference pipeline with verdict.
    Popdiff(TaskArgs),
    /// Single-difference threshold verdict on a square window.
    Verify(TaskArgs),
}

impl Command {
    fn split(&self) -> (Task, &TaskArgs) {
        match self {
            Command::Gen(a) => (Task::Gen, a),
            Command::Count(a) => (Task::Count, a),
            Command::Gowers(a) => (Task::Gowers, a),
            Command::Weyl(a) => (Task::Weyl, a),
            Command::Dual(a) => (Task::Dual, a),
            Command::Energy(a) => (Task::Energy, a),
            Command::Popdiff(a) => (Task::Popdiff, a),
            Command::Verify(a) => (Task::Verify, a),
        }
    }
}

#[derive(Args)]
struct TaskArgs {
    /// Key-value config file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Read the input set from this file instead of generating one.
    #[arg(long)]
    input: Option<PathBuf>,

    /// Directory for report files (default: current directory).
    #[arg(long)]
    output: Option<PathBuf>,

    /// Artifacts to keep: json, csv, or both.
    #[arg(long)]
    format: Option<String>,

    /// Seed for the random generators.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads for the run (parallel build only).
    #[arg(long)]
    threads: Option<usize>,

    /// Density or accuracy parameter, task-dependent.
    #[arg(long)]
    epsilon: Option<f64>,

    /// Smallest difference to count.
    #[arg(long, allow_negative_numbers = true)]
    d_min: Option<i64>,

    /// Largest difference to count.
    #[arg(long, allow_negative_numbers = true)]
    d_max: Option<i64>,

    /// Uniformity norm order (2..=6).
    #[arg(long)]
    order: Option<u32>,

    /// Largest denominator searched in the frequency scan.
    #[arg(long)]
    q_max: Option<u64>,

    /// Scale the rational approximation quality is measured against.
    #[arg(long)]
    scale: Option<f64>,

    /// Gain acceptance threshold override for the refinement iteration.
    #[arg(long)]
    gain_threshold: Option<f64>,

    /// Candidate stride bound override for the refinement iteration.
    #[arg(long)]
    q_tilde_max: Option<u64>,

    /// Window shrink factor override for the refinement iteration.
    #[arg(long)]
    m_shrink: Option<f64>,

    /// Stage cap override for the refinement iteration.
    #[arg(long)]
    max_stages: Option<u32>,

    /// Window width for the built-in generators.
    #[arg(long)]
    n1: Option<i64>,

    /// Window height for the built-in generators.
    #[arg(long)]
    n2: Option<i64>,

    /// Density for the random set generator (picks random_density).
    #[arg(long)]
    delta: Option<f64>,

    /// Stride for the stripe generator (picks stripe).
    #[arg(long)]
    stride: Option<i64>,

    /// Side length for the random phase triple (picks random_phase_triple).
    #[arg(long)]
    phase_n: Option<i64>,

    /// First factor of a product set, comma-separated (picks product).
    #[arg(long, value_delimiter = ',')]
    b: Option<Vec<i64>>,

    /// Second factor of a product set, comma-separated (picks product).
    #[arg(long, value_delimiter = ',')]
    c: Option<Vec<i64>>,
}

fn require_dims(args: &TaskArgs, kind: &str) -> Result<(i64, i64), Error> {
    match (args.n1, args.n2) {
        (Some(n1), Some(n2)) => Ok((n1, n2)),
        _ => Err(Error::Domain(format!(
            "the {kind} generator needs --n1 and --n2"
        ))),
    }
}

fn generator_from_flags(args: &TaskArgs) -> Result<Option<GeneratorSpec>, Error> {
    if let Some(path) = &args.input {
        return Ok(Some(GeneratorSpec::FromFile { path: path.clone() }));
    }
    if let Some(n) = args.phase_n {
        let seed = args
            .seed
            .ok_or_else(|| Error::Domain("random_phase_triple requires --seed".into()))?;
        return Ok(Some(GeneratorSpec::RandomPhaseTriple { n, seed }));
    }
    if let Some(delta) = args.delta {
        let (n1, n2) = require_dims(args, "random_density")?;
        let seed = args
            .seed
            .ok_or_else(|| Error::Domain("random_density requires --seed".into()))?;
        return Ok(Some(GeneratorSpec::RandomDensity { n1, n2, delta, seed }));
    }
    if let Some(stride) = args.stride {
        let (n1, n2) = require_dims(args, "stripe")?;
        return Ok(Some(GeneratorSpec::Stripe { n1, n2, stride }));
    }
    if args.b.is_some() || args.c.is_some() {
        let (b, c) = match (&args.b, &args.c) {
            (Some(b), Some(c)) => (b.clone(), c.clone()),
            _ => return Err(Error::Domain("the product generator needs --b and --c".into())),
        };
        let (n1, n2) = require_dims(args, "product")?;
        return Ok(Some(GeneratorSpec::Product { b, c, n1, n2 }));
    }
    Ok(None)
}

fn build_config(task: Task, args: &TaskArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    cfg.task = Some(task);

    if let Some(spec) = generator_from_flags(args)? {
        cfg.generator = Some(spec);
    } else if let Some(seed) = args.seed {
        // A bare --seed reseeds a random generator taken from the config.
        match &mut cfg.generator {
            Some(GeneratorSpec::RandomDensity { seed: s, .. })
            | Some(GeneratorSpec::RandomPhaseTriple { seed: s, .. }) => *s = seed,
            _ => {}
        }
    }

    if let Some(v) = args.epsilon {
        cfg.epsilon = Some(v);
    }
    if let Some(v) = args.d_min {
        cfg.d_min = Some(v);
    }
    if let Some(v) = args.d_max {
        cfg.d_max = Some(v);
    }
    if let Some(v) = args.order {
        cfg.order = Some(v);
    }
    if let Some(v) = args.q_max {
        cfg.q_max = Some(v);
    }
    if let Some(v) = args.scale {
        cfg.scale = Some(v);
    }
    if let Some(v) = &args.format {
        cfg.format = Some(v.parse()?);
    }
    if let Some(v) = &args.output {
        cfg.output = Some(v.clone());
    }
    if let Some(v) = args.threads {
        cfg.threads = Some(v);
    }
    if let Some(v) = args.gain_threshold {
        cfg.gain_threshold = Some(v);
    }
    if let Some(v) = args.q_tilde_max {
        cfg.q_tilde_max = Some(v);
    }
    if let Some(v) = args.m_shrink {
        cfg.m_shrink = Some(v);
    }
    if let Some(v) = args.max_stages {
        cfg.max_stages = Some(v);
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let (task, args) = cli.command.split();
    let cfg = build_config(task, args)?;
    let summary = with_threads(cfg.threads, || run_experiment(&cfg))??;
    for path in &summary.files {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
