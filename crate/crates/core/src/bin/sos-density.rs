//! Command-line front end: synthetic data, fitting, grid export and the
//! robust-versus-relaxed counterexample.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sos_density::counterexample::{self, CounterexampleConfig};
use sos_density::data::{self, GridSpec};
use sos_density::moments::MomentOptions;
use sos_density::sosmodel::ModelFile;
use sos_density::{
    fit_with, select_support, EmpiricalDistribution, Error, FitConfig, Kernel, KernelFamily, MomentCache, MomentData,
    ReferenceMeasure, SosDensityModel, StepSize, SupportSet,
};

const CACHE_ENV: &str = "SOS_DENSITY_CACHE_DIR";

#[derive(Parser)]
#[command(name = "sos-density", version, about = "Sum-of-squares kernel density models fitted by MMD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the two-moons data set to a CSV file.
    GenData(GenDataArgs),
    /// Fit a model to the points of a CSV file.
    Fit(FitArgs),
    /// Evaluate a saved model on a rectangular grid.
    EvalGrid(EvalGridArgs),
    /// Compare the relaxed and the exact MMD-ball adversary on a 1-d grid.
    Counterexample(CounterexampleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Gaussian,
    Laplace,
}

impl From<KernelArg> for KernelFamily {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Gaussian => KernelFamily::Gaussian,
            KernelArg::Laplace => KernelFamily::Laplace,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    Rd,
    Box,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct GenDataArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    /// Number of support points; defaults to min(50, n).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1e-3)]
    lambda: f64,
    #[arg(long, value_enum, default_value_t = KernelArg::Gaussian)]
    kernel: KernelArg,
    #[arg(long, value_enum, default_value_t = MeasureArg::Rd)]
    measure: MeasureArg,
    /// Box bounds as `lo1,hi1,lo2,hi2,...`; required with `--measure box`.
    #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true)]
    bounds: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5000)]
    iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Seeds support selection and the step-size power iteration.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fixed step size; estimated from the curvature when omitted.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    accelerate: Switch,
    /// Model JSON; the report and trace are written beside it.
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalGridArgs {
    #[arg(long)]
    model: PathBuf,
    /// Grid bounds as `lo1,hi1,...`; defaults to the support bounding box
    /// padded by four bandwidths (or the measure's box).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    bounds: Option<Vec<f64>>,
    /// Nodes per axis; defaults to 400 in 1-d and 200 in 2-d.
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long, default_value = "grid.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct CounterexampleArgs {
    #[arg(long, default_value_t = 0.3)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, value_enum, default_value_t = KernelArg::Gaussian)]
    kernel: KernelArg,
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    lower: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    upper: f64,
    #[arg(long, default_value_t = 401)]
    grid_points: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    data_point: f64,
    /// Summary JSON; the curve and adversary CSVs are written beside it.
    #[arg(long, default_value = "counterexample.json")]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Fit(a) => fit(a),
        Command::EvalGrid(a) => eval_grid(a),
        Command::Counterexample(a) => run_counterexample(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Json(_) | Error::Csv { .. } => 1,
        e if e.is_numerical() => 3,
        _ => 2,
    }
}

/// Writes every file to a temporary sibling first and renames only once all
/// writes succeeded, so a failure leaves no partial output behind.
fn write_all(outputs: &[(PathBuf, String)]) -> Result<(), Error> {
    let mut staged = Vec::with_capacity(outputs.len());
    for (path, text) in outputs {
        let mut name = path.file_name().unwrap_or_default().to_os_string();
        name.push(".tmp");
        let tmp = path.with_file_name(name);
        if let Err(e) = fs::write(&tmp, text) {
            let _ = fs::remove_file(&tmp);
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            return Err(e.into());
        }
        staged.push((tmp, path));
    }
    for (tmp, path) in &staged {
        fs::rename(tmp, path)?;
    }
    Ok(())
}

/// `dir/stem.json` becomes `dir/stem.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn cache_near(path: &Path) -> MomentCache {
    match std::env::var_os(CACHE_ENV) {
        Some(dir) if !dir.is_empty() => MomentCache::new(PathBuf::from(dir)),
        _ => MomentCache::new(path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."))),
    }
}

fn has_closed_form(kernel: &Kernel, measure: &ReferenceMeasure) -> bool {
    kernel.family() == KernelFamily::Gaussian && *measure == ReferenceMeasure::LebesgueRd
}

fn split_bounds(flat: &[f64], what: &str) -> Result<(Vec<f64>, Vec<f64>), Error> {
    if flat.is_empty() || flat.len() % 2 != 0 {
        return Err(Error::InvalidParameter(format!("{what} needs pairs lo,hi per axis, got {} values", flat.len())));
    }
    Ok(flat.chunks(2).map(|c| (c[0], c[1])).unzip())
}

/// Prefixes I/O failures with the offending path.
fn at(path: &Path) -> impl FnOnce(Error) -> Error + '_ {
    move |e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    }
}

fn gen_data(a: GenDataArgs) -> Result<(), Error> {
    let points = data::gen_two_moons(a.n, a.noise, a.seed)?;
    write_all(&[(a.out.clone(), data::points_csv(&points))])?;
    println!("wrote {} points to {}", points.len(), a.out.display());
    Ok(())
}

fn fit(a: FitArgs) -> Result<(), Error> {
    let points = data::read_points_csv(&a.data).map_err(at(&a.data))?;
    let kernel = Kernel::new(a.kernel.into(), a.sigma)?;
    let measure = match (a.measure, &a.bounds) {
        (MeasureArg::Rd, None) => ReferenceMeasure::LebesgueRd,
        (MeasureArg::Rd, Some(_)) => return Err(Error::InvalidParameter("--box requires --measure box".into())),
        (MeasureArg::Box, None) => return Err(Error::InvalidParameter("--measure box requires --box".into())),
        (MeasureArg::Box, Some(flat)) => {
            let (lower, upper) = split_bounds(flat, "--box")?;
            ReferenceMeasure::lebesgue_box(lower, upper)?
        }
    };
    let m = a.m.unwrap_or(points.len().min(50));
    let support_points = select_support(&points, m, a.seed)?;
    let opts = MomentOptions::default();
    let moments = if has_closed_form(&kernel, &measure) {
        MomentData::compute(&kernel, &support_points, &measure, &opts)?
    } else {
        cache_near(&a.data).load_or_compute(&kernel, &support_points, &measure, &opts)?
    };
    let support = SupportSet::new(kernel, support_points)?;
    let cfg = FitConfig {
        lambda_trace: a.lambda,
        max_iters: a.iters,
        step_size: a.step.map_or(StepSize::Auto, StepSize::Fixed),
        tol: a.tol,
        accelerate: matches!(a.accelerate, Switch::On),
        rng_seed: a.seed,
        ..FitConfig::default()
    };
    let emp = EmpiricalDistribution::uniform(points)?;
    let (model, report) = fit_with(&emp, Arc::new(support), Arc::new(moments), &measure, &cfg)?;

    let report_path = sibling(&a.out, "report.json");
    let trace_path = sibling(&a.out, "trace.csv");
    write_all(&[
        (a.out.clone(), model.to_json()?),
        (report_path.clone(), report.to_json()?),
        (trace_path.clone(), report.trace_csv()),
    ])?;
    println!("mass {:.12}", report.final_mass);
    println!("projected_mmd_sq {:.6e}", report.final_projected_mmd());
    println!("iterations {} (converged: {})", report.iterations, report.converged);
    println!("wrote {}, {}, {}", a.out.display(), report_path.display(), trace_path.display());
    Ok(())
}

fn load_model(path: &Path) -> Result<SosDensityModel, Error> {
    let file: ModelFile = serde_json::from_str(&fs::read_to_string(path).map_err(|e| at(path)(e.into()))?)?;
    let kernel = Kernel::new(file.kernel.family, file.kernel.bandwidth)?;
    if has_closed_form(&kernel, &file.measure) {
        SosDensityModel::from_file(&file, None)
    } else {
        SosDensityModel::from_file(&file, Some(&cache_near(path)))
    }
}

fn default_grid(model: &SosDensityModel) -> (Vec<f64>, Vec<f64>) {
    if let ReferenceMeasure::LebesgueBox { lower, upper } = model.measure() {
        return (lower.clone(), upper.clone());
    }
    let pad = 4.0 * model.kernel().bandwidth();
    let pts = model.support().points();
    (0..pts.dim())
        .map(|k| {
            let (lo, hi) = pts.rows().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[k]), hi.max(r[k])));
            (lo - pad, hi + pad)
        })
        .unzip()
}

fn eval_grid(a: EvalGridArgs) -> Result<(), Error> {
    let model = load_model(&a.model)?;
    let d = model.dim();
    if !(1..=2).contains(&d) {
        return Err(Error::Unsupported(format!("grid export supports d = 1 or 2, model has d = {d}")));
    }
    let (lower, upper) = match &a.bounds {
        Some(flat) => split_bounds(flat, "--bounds")?,
        None => default_grid(&model),
    };
    let resolution = a.resolution.unwrap_or(if d == 1 { 400 } else { 200 });
    let grid = GridSpec::new(lower, upper, resolution)?;
    let eval = data::evaluate_grid(&model, &grid)?;
    write_all(&[(a.out.clone(), eval.to_csv())])?;
    println!("nodes {}", eval.values.len());
    println!("riemann_mass {:.9}", eval.riemann_mass);
    println!("discretization_error {:.3e}", eval.discretization_error);
    println!("model_mass {:.12}", eval.model_mass);
    println!("min_density {:.3e}", eval.min_value);
    println!("wrote {}", a.out.display());
    Ok(())
}

fn run_counterexample(a: CounterexampleArgs) -> Result<(), Error> {
    let cfg = CounterexampleConfig {
        epsilon: a.epsilon,
        lower: a.lower,
        upper: a.upper,
        grid_points: a.grid_points,
        sigma: a.sigma,
        data_point: a.data_point,
        kernel: a.kernel.into(),
    };
    let report = counterexample::run(&cfg)?;
    let curves = sibling(&a.out, "curves.csv");
    let adversary = sibling(&a.out, "adversary.csv");
    write_all(&[
        (a.out.clone(), report.summary_json()?),
        (curves.clone(), report.curves_csv()),
        (adversary.clone(), report.adversary_csv()),
    ])?;
    println!("theta_star_relaxed {}", report.theta_star_relaxed);
    println!("theta_star_mmd {}", report.theta_star_mmd);
    println!("max_constraint_violation {:.3e}", report.max_constraint_violation);
    println!("wrote {}, {}, {}", a.out.display(), curves.display(), adversary.display());
    Ok(())
}
