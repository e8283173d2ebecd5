//! Command-line front end for the registration toolkit.
//!
//! Three subcommands cover the whole workflow: `synth` cuts a template
//! out of a scene (generating the scene when none is given) and writes
//! the ground-truth sidecar, `register` runs one optimizer against a
//! pair, and `benchmark` runs the seeded multi-run protocol and writes
//! JSON/CSV/SVG reports. Every subcommand is deterministic given its
//! full flag set and never mutates its input files.

// Validation deliberately writes `!(lo < hi)` instead of `lo >= hi`: the
// negated form also rejects NaN, the rewrite clippy suggests accepts it.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use regsearch::evolution::GaParams;
use regsearch::harness::{
    report, benchmark_with_progress, BenchmarkConfig, BenchmarkError, GroundTruth,
};
use regsearch::imagecore::{
    distort, extract_template, load_image, synthetic_scene, write_pgm, DistortionSpec,
};
use regsearch::simplex::{AnnealingParams, SimplexParams};
use regsearch::swarm::SwarmParams;
use regsearch::{
    run, Algorithm, Image, ImageError, ObjectiveConfig, ObjectiveEvaluator, OptimizerConfig,
    ParameterBounds, RunError,
};

use config::FileConfig;

/// Failure classes mapped onto exit codes: usage or configuration
/// problems exit 1, I/O problems exit 2, broken internal invariants
/// exit 3. Success, including registrations with large error values,
/// exits 0.
pub enum CliError {
    Usage(String),
    Io(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Internal(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "regsearch",
    version,
    about = "Register a template into a scene by derivative-free search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cut a template from a scene and write the ground-truth sidecar
    Synth(SynthArgs),
    /// Run one optimizer against a scene/template pair
    Register(RegisterArgs),
    /// Run the seeded multi-run benchmark and write reports
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// key=value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: $REGSEARCH_OUT_DIR or .]
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Scene image to cut from (PGM or PNG); omitted = generate one
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Generated scene width in pixels [default: 256]
    #[arg(long)]
    scene_width: Option<usize>,
    /// Generated scene height in pixels [default: 256]
    #[arg(long)]
    scene_height: Option<usize>,
    /// Scene x coordinate of the template center [default: 151.5]
    #[arg(long)]
    cx: Option<f64>,
    /// Scene y coordinate of the template center [default: 151.5]
    #[arg(long)]
    cy: Option<f64>,
    /// Extraction magnification; the ground-truth scale is its
    /// reciprocal [default: 2.0]
    #[arg(long)]
    sigma: Option<f64>,
    /// Template width in pixels [default: 170]
    #[arg(long)]
    template_width: Option<usize>,
    /// Template height in pixels [default: 138]
    #[arg(long)]
    template_height: Option<usize>,
    /// Also write a Gaussian-blurred template variant with this sigma
    #[arg(long)]
    blur_sigma: Option<f64>,
    /// Also write a noisy template variant with this Gaussian sigma
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Seed for the noisy variant [default: 0]
    #[arg(long)]
    noise_seed: Option<u64>,
}

#[derive(Args)]
struct RegisterArgs {
    /// key=value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: $REGSEARCH_OUT_DIR or .]
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Scene image path (PGM or PNG)
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Template image path (PGM or PNG)
    #[arg(long)]
    template: Option<PathBuf>,
    /// simplex | simulated_annealing | genetic | swarm | random_search
    /// (aliases: nm, sa, ga, pso, baseline) [default: simplex]
    #[arg(long)]
    algorithm: Option<String>,
    /// RNG seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Objective evaluation budget [default: 1000]
    #[arg(long)]
    budget: Option<u32>,
    /// Record a best-so-far trace in the run record [default: false]
    #[arg(long)]
    trace: Option<bool>,
    /// Run-record JSON path [default: <out-dir>/run.json]
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// key=value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: $REGSEARCH_OUT_DIR or .]
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Scene image path (PGM or PNG)
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Template image path (PGM or PNG)
    #[arg(long)]
    template: Option<PathBuf>,
    /// Ground-truth sidecar JSON path
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    /// Comma-separated algorithms to benchmark
    /// [default: simplex,simulated_annealing,genetic,swarm]
    #[arg(long)]
    algorithms: Option<String>,
    /// Runs per algorithm [default: 50]
    #[arg(long)]
    runs: Option<u32>,
    /// Base seed; each run's seed derives from it [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Objective evaluation budget per run [default: 1000]
    #[arg(long)]
    budget: Option<u32>,
    /// Cap on concurrent runs [default: one per core]
    #[arg(long)]
    jobs: Option<usize>,
    /// Append the random-search baseline [default: true]
    #[arg(long)]
    baseline: Option<bool>,
    #[command(flatten)]
    tuning: TuningArgs,
}

/// Optimizer and objective knobs shared by `register` and `benchmark`.
/// Every field mirrors a config-file key; unset means the library
/// default.
#[derive(Args)]
struct TuningArgs {
    /// Penalty added per template pixel that falls outside the scene
    #[arg(long)]
    penalty_c: Option<f64>,
    /// Pose bound overrides; defaults come from the scene size
    #[arg(long)]
    x_min: Option<f64>,
    #[arg(long)]
    x_max: Option<f64>,
    #[arg(long)]
    y_min: Option<f64>,
    #[arg(long)]
    y_max: Option<f64>,
    #[arg(long)]
    s_min: Option<f64>,
    #[arg(long)]
    s_max: Option<f64>,
    /// Simplex start-scan lattice counts per axis
    #[arg(long)]
    grid_x: Option<usize>,
    #[arg(long)]
    grid_y: Option<usize>,
    #[arg(long)]
    grid_s: Option<usize>,
    /// Largest budget share the start scan may consume
    #[arg(long)]
    grid_budget_fraction: Option<f64>,
    /// Charge start-scan evaluations against the budget (true/false)
    #[arg(long)]
    charge_grid: Option<bool>,
    /// Simplex convergence tolerance on the value spread
    #[arg(long)]
    tol_f: Option<f64>,
    /// Simplex convergence tolerance on the vertex diameter
    #[arg(long)]
    tol_x: Option<f64>,
    /// Initial simplex edge as a fraction of each bound range
    #[arg(long)]
    initial_step_fraction: Option<f64>,
    /// Annealing start temperature, or `auto` for the initial spread
    #[arg(long, value_parser = TInitial::from_str)]
    t_initial: Option<TInitial>,
    /// Geometric cooling factor per temperature block
    #[arg(long)]
    decay: Option<f64>,
    /// Simplex steps per temperature block
    #[arg(long)]
    iters_per_temp: Option<u32>,
    /// Boltzmann constant of the acceptance rule
    #[arg(long)]
    k_b: Option<f64>,
    /// Evaluations without improvement before a stall restart
    #[arg(long)]
    stall_evals: Option<u32>,
    /// Simplex diameter below which a stalled run restarts
    #[arg(long)]
    stall_diameter: Option<f64>,
    /// Genetic population size
    #[arg(long)]
    population_size: Option<usize>,
    /// Probability weight of selecting the best-ranked individual
    #[arg(long)]
    q_select: Option<f64>,
    /// Parent pairs recombined per generation
    #[arg(long)]
    crossovers_per_gen: Option<usize>,
    /// Individuals mutated per generation
    #[arg(long)]
    mutations_per_gen: Option<usize>,
    /// Non-uniformity exponent of the mutation schedule
    #[arg(long)]
    mutation_shape_b: Option<f64>,
    /// Swarm size
    #[arg(long)]
    particle_count: Option<usize>,
    /// Velocity inertia factor
    #[arg(long)]
    alpha: Option<f64>,
    /// Attraction toward a particle's own best position
    #[arg(long)]
    beta_i: Option<f64>,
    /// Attraction toward the neighborhood's best position
    #[arg(long)]
    beta_g: Option<f64>,
    /// Ring neighbors to either side of each particle
    #[arg(long)]
    neighborhood_radius: Option<usize>,
    /// Speed cap as a fraction of each bound range, or `none`
    #[arg(long, value_parser = VMax::from_str)]
    v_max: Option<VMax>,
    /// Initial velocity limit as a fraction of each bound range
    #[arg(long)]
    init_velocity_fraction: Option<f64>,
    /// Scale attraction terms by per-component uniform draws
    /// (true/false)
    #[arg(long)]
    stochastic: Option<bool>,
}

/// Velocity cap argument: a fraction, or `none` to remove the cap.
#[derive(Clone, Copy)]
struct VMax(Option<f64>);

impl FromStr for VMax {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("none") {
            return Ok(VMax(None));
        }
        s.parse::<f64>()
            .map(|v| VMax(Some(v)))
            .map_err(|_| format!("expected a number or `none`, got `{s}`"))
    }
}

/// Start-temperature argument: a value, or `auto` to derive it from
/// the initial simplex's value spread.
#[derive(Clone, Copy)]
struct TInitial(Option<f64>);

impl FromStr for TInitial {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(TInitial(None));
        }
        s.parse::<f64>()
            .map(|v| TInitial(Some(v)))
            .map_err(|_| format!("expected a number or `auto`, got `{s}`"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Register(args) => cmd_register(args),
        Command::Benchmark(args) => cmd_benchmark(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    match path {
        Some(path) => FileConfig::load(path),
        None => Ok(FileConfig::empty()),
    }
}

/// Flag beats file beats the environment's default directory.
fn resolve_out_dir(merged: Option<PathBuf>) -> PathBuf {
    merged
        .or_else(|| std::env::var_os("REGSEARCH_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn read_image(path: &Path) -> Result<Image, CliError> {
    load_image(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn write_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("cannot write {}: {e}", path.display()))
}

fn require(path: Option<PathBuf>, key: &str) -> Result<PathBuf, CliError> {
    path.ok_or_else(|| CliError::Usage(format!("--{key} is required (flag or config key `{key}`)")))
}

fn parse_algorithm(name: &str) -> Result<Algorithm, CliError> {
    Algorithm::from_name(name).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown algorithm `{name}`; valid names: simplex, simulated_annealing, \
             genetic, swarm, random_search (aliases: nm, sa, ga, pso, baseline)"
        ))
    })
}

fn parse_algorithm_list(list: &str) -> Result<Vec<Algorithm>, CliError> {
    let mut out = Vec::new();
    for part in list.split(',') {
        let part = part.trim();
        if !part.is_empty() {
            out.push(parse_algorithm(part)?);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("the algorithms list is empty".into()));
    }
    Ok(out)
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let mut file = load_file_config(args.config.as_deref())?;
    let out_dir = resolve_out_dir(file.merge(args.out_dir, "out-dir")?);
    let scene_path = file.merge(args.scene, "scene")?;
    let scene_width = file.merge(args.scene_width, "scene-width")?.unwrap_or(256);
    let scene_height = file.merge(args.scene_height, "scene-height")?.unwrap_or(256);
    let cx = file.merge(args.cx, "cx")?.unwrap_or(151.5);
    let cy = file.merge(args.cy, "cy")?.unwrap_or(151.5);
    let sigma = file.merge(args.sigma, "sigma")?.unwrap_or(2.0);
    let template_width = file.merge(args.template_width, "template-width")?.unwrap_or(170);
    let template_height = file
        .merge(args.template_height, "template-height")?
        .unwrap_or(138);
    let blur_sigma = file.merge(args.blur_sigma, "blur-sigma")?;
    let noise_sigma = file.merge(args.noise_sigma, "noise-sigma")?;
    let noise_seed = file.merge(args.noise_seed, "noise-seed")?.unwrap_or(0);
    file.finish()?;

    if sigma <= 0.0 {
        return Err(CliError::Usage(format!("sigma must be positive, got {sigma}")));
    }
    for (key, value) in [("blur-sigma", blur_sigma), ("noise-sigma", noise_sigma)] {
        if let Some(v) = value {
            if v <= 0.0 {
                return Err(CliError::Usage(format!("{key} must be positive, got {v}")));
            }
        }
    }
    if scene_path.is_none() && (scene_width < 2 || scene_height < 2) {
        return Err(CliError::Usage(format!(
            "generated scene must be at least 2x2, got {scene_width}x{scene_height}"
        )));
    }

    // Everything is computed before anything is written, so an invalid
    // window or distortion leaves no files behind.
    let (scene, generated) = match &scene_path {
        Some(path) => (read_image(path)?, false),
        None => (synthetic_scene(scene_width, scene_height), true),
    };
    let template = extract_template(&scene, cx, cy, sigma, template_width, template_height)
        .map_err(|e| match e {
            ImageError::SampleOutOfDomain { x, y } => CliError::Usage(format!(
                "extraction window reaches outside the scene (sample at ({x}, {y})); \
                 move the center, shrink the template, or raise sigma"
            )),
            other => CliError::Usage(format!("invalid extraction window: {other}")),
        })?;
    let blurred = blur_sigma.map(|sigma| distort(&template, &DistortionSpec::GaussianBlur { sigma }));
    let noisy = noise_sigma.map(|sigma| {
        distort(
            &template,
            &DistortionSpec::GaussianNoise {
                sigma,
                seed: noise_seed,
            },
        )
    });
    let truth = GroundTruth::new(cx, cy, 1.0 / sigma);

    fs::create_dir_all(&out_dir).map_err(|e| write_error(&out_dir, e))?;
    let mut written = Vec::new();
    if generated {
        let path = out_dir.join("scene.pgm");
        let note = format!("synthetic scene {scene_width}x{scene_height}");
        write_pgm(&scene, &path, &note).map_err(|e| write_error(&path, e))?;
        written.push(path);
    }
    let note = format!("template cut at ({cx}, {cy}), magnification {sigma}");
    let path = out_dir.join("template.pgm");
    write_pgm(&template, &path, &note).map_err(|e| write_error(&path, e))?;
    written.push(path);
    if let Some(img) = &blurred {
        let path = out_dir.join("template_blur.pgm");
        let note = format!("{note}, blur sigma {}", blur_sigma.unwrap());
        write_pgm(img, &path, &note).map_err(|e| write_error(&path, e))?;
        written.push(path);
    }
    if let Some(img) = &noisy {
        let path = out_dir.join("template_noise.pgm");
        let note = format!(
            "{note}, noise sigma {} seed {noise_seed}",
            noise_sigma.unwrap()
        );
        write_pgm(img, &path, &note).map_err(|e| write_error(&path, e))?;
        written.push(path);
    }
    let path = out_dir.join("ground_truth.json");
    let body = serde_json::to_string_pretty(&truth)
        .map_err(|e| CliError::Internal(format!("ground truth serialization failed: {e}")))?;
    fs::write(&path, body + "\n").map_err(|e| write_error(&path, e))?;
    written.push(path);

    for path in &written {
        println!("wrote {}", path.display());
    }
    println!(
        "ground truth: x={}, y={}, s={}",
        truth.x_g, truth.y_g, truth.s_g
    );
    Ok(())
}

fn cmd_register(args: RegisterArgs) -> Result<(), CliError> {
    let mut file = load_file_config(args.config.as_deref())?;
    let out_dir = resolve_out_dir(file.merge(args.out_dir, "out-dir")?);
    let scene_path = file.merge(args.scene, "scene")?;
    let template_path = file.merge(args.template, "template")?;
    let algorithm_name = file
        .merge(args.algorithm, "algorithm")?
        .unwrap_or_else(|| "simplex".to_string());
    let seed = file.merge(args.seed, "seed")?.unwrap_or(0);
    let budget = file
        .merge(args.budget, "budget")?
        .unwrap_or(OptimizerConfig::DEFAULT_BUDGET);
    let trace = file.merge(args.trace, "trace")?.unwrap_or(false);
    let out = file.merge(args.out, "out")?;
    let tuning = resolve_tuning(args.tuning, &mut file)?;
    // An unrecognized key is diagnosed before any missing-flag error:
    // the typo is usually the missing setting.
    file.finish()?;
    let scene_path = require(scene_path, "scene")?;
    let template_path = require(template_path, "template")?;

    let algorithm = parse_algorithm(&algorithm_name)?;
    let scene = read_image(&scene_path)?;
    let template = read_image(&template_path)?;
    let objective = build_objective(&scene, &tuning)?;

    let mut optimizer = OptimizerConfig::new(algorithm, seed);
    optimizer.eval_budget = budget;
    optimizer.record_trace = trace;
    apply_tuning(
        &mut optimizer.simplex,
        &mut optimizer.annealing,
        &mut optimizer.genetic,
        &mut optimizer.swarm,
        &tuning,
    );

    let mut evaluator = ObjectiveEvaluator::new(&scene, &template, objective, budget);
    let record = run(&optimizer, &mut evaluator).map_err(run_error)?;
    // Registration quality is data, not failure: a pose stuck under the
    // penalty still exits 0, with the breakdown printed for inspection.
    let detail = evaluator.peek(record.best_pose);

    println!("algorithm: {}", record.algorithm);
    println!("seed: {}", record.seed);
    println!("best pose: {}", record.best_pose);
    println!("penalized error: {}", record.best_error);
    println!("raw error: {}", detail.error_raw);
    println!("out pixels: {}", detail.out_pixels);
    println!("overlap: {}", detail.overlap);
    println!("evals used: {}", record.evals_used);

    let out_path = out.unwrap_or_else(|| out_dir.join("run.json"));
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| write_error(parent, e))?;
        }
    }
    let body = serde_json::to_string_pretty(&record)
        .map_err(|e| CliError::Internal(format!("run record serialization failed: {e}")))?;
    fs::write(&out_path, body + "\n").map_err(|e| write_error(&out_path, e))?;
    println!("wrote {}", out_path.display());
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<(), CliError> {
    let mut file = load_file_config(args.config.as_deref())?;
    let out_dir = resolve_out_dir(file.merge(args.out_dir, "out-dir")?);
    let scene_path = file.merge(args.scene, "scene")?;
    let template_path = file.merge(args.template, "template")?;
    let truth_path = file.merge(args.ground_truth, "ground-truth")?;
    let algorithms = file.merge(args.algorithms, "algorithms")?;
    let runs = file.merge(args.runs, "runs")?.unwrap_or(50);
    let seed = file.merge(args.seed, "seed")?.unwrap_or(0);
    let budget = file
        .merge(args.budget, "budget")?
        .unwrap_or(OptimizerConfig::DEFAULT_BUDGET);
    let jobs = file.merge(args.jobs, "jobs")?;
    let baseline = file.merge(args.baseline, "baseline")?.unwrap_or(true);
    let tuning = resolve_tuning(args.tuning, &mut file)?;
    file.finish()?;
    let scene_path = require(scene_path, "scene")?;
    let template_path = require(template_path, "template")?;
    let truth_path = require(truth_path, "ground-truth")?;

    let scene = read_image(&scene_path)?;
    let template = read_image(&template_path)?;
    let truth_text = fs::read_to_string(&truth_path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", truth_path.display())))?;
    let truth: GroundTruth = serde_json::from_str(&truth_text).map_err(|e| {
        CliError::Io(format!(
            "{}: not a ground-truth sidecar: {e}",
            truth_path.display()
        ))
    })?;

    let mut config = BenchmarkConfig::for_scene(&scene, seed);
    if let Some(list) = &algorithms {
        config.algorithms = parse_algorithm_list(list)?;
    }
    config.runs_per_algorithm = runs;
    config.eval_budget = budget;
    config.include_baseline = baseline;
    config.jobs = jobs;
    config.objective = build_objective(&scene, &tuning)?;
    apply_tuning(
        &mut config.simplex,
        &mut config.annealing,
        &mut config.genetic,
        &mut config.swarm,
        &tuning,
    );

    let report = benchmark_with_progress(&scene, &template, &truth, &config, |algorithm, i| {
        println!("{algorithm} run {}/{runs} done", i + 1);
    })
    .map_err(benchmark_error)?;

    fs::create_dir_all(&out_dir).map_err(|e| write_error(&out_dir, e))?;
    let json_path = out_dir.join("report.json");
    report::write_json(&report, &json_path).map_err(|e| write_error(&json_path, e))?;
    let csv_path = out_dir.join("report.csv");
    report::write_csv(&report, &csv_path).map_err(|e| write_error(&csv_path, e))?;
    let svg_paths = report::write_svgs(&report, &out_dir).map_err(|e| write_error(&out_dir, e))?;

    for path in [&json_path, &csv_path].into_iter().chain(&svg_paths) {
        println!("wrote {}", path.display());
    }
    for summary in &report.summaries {
        println!(
            "{}: median distance {:.4}, best {:.4}, worst {:.4}, mean evals {:.1}",
            summary.algorithm,
            summary.median_distance,
            summary.best_distance,
            summary.worst_distance,
            summary.mean_evals
        );
    }
    Ok(())
}

/// Fills every unset tuning flag from its config-file key.
fn resolve_tuning(t: TuningArgs, file: &mut FileConfig) -> Result<TuningArgs, CliError> {
    Ok(TuningArgs {
        penalty_c: file.merge(t.penalty_c, "penalty-c")?,
        x_min: file.merge(t.x_min, "x-min")?,
        x_max: file.merge(t.x_max, "x-max")?,
        y_min: file.merge(t.y_min, "y-min")?,
        y_max: file.merge(t.y_max, "y-max")?,
        s_min: file.merge(t.s_min, "s-min")?,
        s_max: file.merge(t.s_max, "s-max")?,
        grid_x: file.merge(t.grid_x, "grid-x")?,
        grid_y: file.merge(t.grid_y, "grid-y")?,
        grid_s: file.merge(t.grid_s, "grid-s")?,
        grid_budget_fraction: file.merge(t.grid_budget_fraction, "grid-budget-fraction")?,
        charge_grid: file.merge(t.charge_grid, "charge-grid")?,
        tol_f: file.merge(t.tol_f, "tol-f")?,
        tol_x: file.merge(t.tol_x, "tol-x")?,
        initial_step_fraction: file.merge(t.initial_step_fraction, "initial-step-fraction")?,
        t_initial: file.merge(t.t_initial, "t-initial")?,
        decay: file.merge(t.decay, "decay")?,
        iters_per_temp: file.merge(t.iters_per_temp, "iters-per-temp")?,
        k_b: file.merge(t.k_b, "k-b")?,
        stall_evals: file.merge(t.stall_evals, "stall-evals")?,
        stall_diameter: file.merge(t.stall_diameter, "stall-diameter")?,
        population_size: file.merge(t.population_size, "population-size")?,
        q_select: file.merge(t.q_select, "q-select")?,
        crossovers_per_gen: file.merge(t.crossovers_per_gen, "crossovers-per-gen")?,
        mutations_per_gen: file.merge(t.mutations_per_gen, "mutations-per-gen")?,
        mutation_shape_b: file.merge(t.mutation_shape_b, "mutation-shape-b")?,
        particle_count: file.merge(t.particle_count, "particle-count")?,
        alpha: file.merge(t.alpha, "alpha")?,
        beta_i: file.merge(t.beta_i, "beta-i")?,
        beta_g: file.merge(t.beta_g, "beta-g")?,
        neighborhood_radius: file.merge(t.neighborhood_radius, "neighborhood-radius")?,
        v_max: file.merge(t.v_max, "v-max")?,
        init_velocity_fraction: file.merge(t.init_velocity_fraction, "init-velocity-fraction")?,
        stochastic: file.merge(t.stochastic, "stochastic")?,
    })
}

/// Bounds come from the scene unless overridden; the objective's
/// penalty constant rides along. Overrides are validated here so a bad
/// flag is a usage error, not a panic.
fn build_objective(scene: &Image, t: &TuningArgs) -> Result<ObjectiveConfig, CliError> {
    let d = ParameterBounds::for_scene(scene);
    let x = (t.x_min.unwrap_or(d.x_min), t.x_max.unwrap_or(d.x_max));
    let y = (t.y_min.unwrap_or(d.y_min), t.y_max.unwrap_or(d.y_max));
    let s = (t.s_min.unwrap_or(d.s_min), t.s_max.unwrap_or(d.s_max));
    for (name, (lo, hi)) in [("x", x), ("y", y), ("s", s)] {
        if !(lo < hi) {
            return Err(CliError::Usage(format!(
                "{name} bounds must satisfy min < max, got [{lo}, {hi}]"
            )));
        }
    }
    if s.0 <= 0.0 {
        return Err(CliError::Usage(format!("s-min must be positive, got {}", s.0)));
    }
    let bounds = ParameterBounds::new(x.0, x.1, y.0, y.1, s.0, s.1);
    let mut objective = ObjectiveConfig::new(bounds);
    if let Some(c) = t.penalty_c {
        if c <= 0.0 {
            return Err(CliError::Usage(format!("penalty-c must be positive, got {c}")));
        }
        objective = objective.with_penalty(c);
    }
    Ok(objective)
}

/// Overwrites the four parameter blocks with any set tuning values.
/// Range validation stays in the library so the benchmark and a single
/// run reject identical configurations identically.
fn apply_tuning(
    simplex: &mut SimplexParams,
    annealing: &mut AnnealingParams,
    genetic: &mut GaParams,
    swarm: &mut SwarmParams,
    t: &TuningArgs,
) {
    if let Some(v) = t.grid_x {
        simplex.grid.0 = v;
    }
    if let Some(v) = t.grid_y {
        simplex.grid.1 = v;
    }
    if let Some(v) = t.grid_s {
        simplex.grid.2 = v;
    }
    if let Some(v) = t.grid_budget_fraction {
        simplex.grid_budget_fraction = v;
    }
    if let Some(v) = t.charge_grid {
        simplex.charge_grid = v;
    }
    if let Some(v) = t.tol_f {
        simplex.tol_f = v;
    }
    if let Some(v) = t.tol_x {
        simplex.tol_x = v;
    }
    if let Some(v) = t.initial_step_fraction {
        simplex.initial_step_fraction = v;
    }
    if let Some(v) = t.t_initial {
        annealing.schedule.t_initial = v.0;
    }
    if let Some(v) = t.decay {
        annealing.schedule.decay = v;
    }
    if let Some(v) = t.iters_per_temp {
        annealing.schedule.iters_per_temp = v;
    }
    if let Some(v) = t.k_b {
        annealing.schedule.k_b = v;
    }
    if let Some(v) = t.stall_evals {
        annealing.stall_evals = v;
    }
    if let Some(v) = t.stall_diameter {
        annealing.stall_diameter = v;
    }
    if let Some(v) = t.population_size {
        genetic.population_size = v;
    }
    if let Some(v) = t.q_select {
        genetic.q_select = v;
    }
    if let Some(v) = t.crossovers_per_gen {
        genetic.crossovers_per_gen = v;
    }
    if let Some(v) = t.mutations_per_gen {
        genetic.mutations_per_gen = v;
    }
    if let Some(v) = t.mutation_shape_b {
        genetic.mutation_shape_b = v;
    }
    if let Some(v) = t.particle_count {
        swarm.particle_count = v;
    }
    if let Some(v) = t.alpha {
        swarm.alpha = v;
    }
    if let Some(v) = t.beta_i {
        swarm.beta_i = v;
    }
    if let Some(v) = t.beta_g {
        swarm.beta_g = v;
    }
    if let Some(v) = t.neighborhood_radius {
        swarm.neighborhood_radius = v;
    }
    if let Some(v) = t.v_max {
        swarm.v_max = v.0;
    }
    if let Some(v) = t.init_velocity_fraction {
        swarm.init_velocity_fraction = v;
    }
    if let Some(v) = t.stochastic {
        swarm.stochastic = v;
    }
}

fn run_error(e: RunError) -> CliError {
    match e {
        RunError::InvalidParams(m) => CliError::Usage(m),
        RunError::ZeroBudget => CliError::Usage("budget must be at least 1".into()),
        other => CliError::Internal(other.to_string()),
    }
}

fn benchmark_error(e: BenchmarkError) -> CliError {
    match e {
        BenchmarkError::InvalidConfig(m) => CliError::Usage(m),
        BenchmarkError::Run {
            source: RunError::InvalidParams(m),
            ..
        } => CliError::Usage(m),
        other => CliError::Internal(other.to_string()),
    }
}
