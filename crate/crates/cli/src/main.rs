//! `wallprobe`: dataset generation, model training, inversion and
//! evaluation for the through-wall characterization toolkit.
//!
//! Exit codes: 0 success, 2 configuration or argument error, 3 numeric
//! divergence during training, 4 I/O or parse error.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use wallprobe_core::classical::{bam_invert, bim_invert, bp_invert, MeasurementVector};
use wallprobe_core::eval::{
    self, calibrated_operators, dataset_samples, export_profile, import_measurement,
    run_benchmark, ArchConfig, EvalError, Method, SweepTable, BIM_MAX_ITERS, BIM_TOL,
};
use wallprobe_core::fdtd::{
    check_courant, run_fdtd, FdtdError, GridSpec, MediumGrid, ReceiverArray, SourceSpec,
};
use wallprobe_core::gan::{GanError, GanVariant, ModelBundle, TrainConfig};
use wallprobe_core::nn::NnError;
use wallprobe_core::pipeline::{
    calibrate, case_rel_path, read_case, read_dataset, split_dataset, write_case, write_manifest,
    Case, ManifestEntry, PipelineError, Split,
};
use wallprobe_core::wall::{
    enumerate_dataset, rasterize_medium, WallError, WallSpec,
};

// -- error classification ------------------------------------------------------

const EXIT_CONFIG: i32 = 2;
const EXIT_DIVERGENCE: i32 = 3;
const EXIT_IO: i32 = 4;

struct CliError {
    message: String,
    code: i32,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn config_err(message: impl Into<String>) -> CliError {
    CliError {
        message: message.into(),
        code: EXIT_CONFIG,
    }
}

fn io_err(message: impl Into<String>) -> CliError {
    CliError {
        message: message.into(),
        code: EXIT_IO,
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        io_err(e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::InvalidArgument(_) => config_err(e.to_string()),
            _ => io_err(e.to_string()),
        }
    }
}

impl From<WallError> for CliError {
    fn from(e: WallError) -> Self {
        match e {
            WallError::Parse(_) => io_err(e.to_string()),
            _ => config_err(e.to_string()),
        }
    }
}

impl From<FdtdError> for CliError {
    fn from(e: FdtdError) -> Self {
        config_err(e.to_string())
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::Io(_) | NnError::Parse(_) => io_err(e.to_string()),
            _ => config_err(e.to_string()),
        }
    }
}

impl From<GanError> for CliError {
    fn from(e: GanError) -> Self {
        match e {
            GanError::Divergence { .. } => CliError {
                message: e.to_string(),
                code: EXIT_DIVERGENCE,
            },
            GanError::Io(_) | GanError::Parse(_) => io_err(e.to_string()),
            GanError::Nn(inner) => inner.into(),
            _ => config_err(e.to_string()),
        }
    }
}

impl From<wallprobe_core::classical::ClassicalError> for CliError {
    fn from(e: wallprobe_core::classical::ClassicalError) -> Self {
        config_err(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Io(_) | EvalError::Parse(_) => io_err(e.to_string()),
            EvalError::Gan(inner) => inner.into(),
            EvalError::Pipeline(inner) => inner.into(),
            EvalError::Wall(inner) => inner.into(),
            _ => config_err(e.to_string()),
        }
    }
}

// -- command line ----------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "wallprobe",
    about = "Through-wall radar wall characterization: simulate, train, invert, benchmark",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the wall dataset and write case files plus a manifest.
    GenDataset(GenDatasetArgs),
    /// Train an adversarial or baseline inverter on a generated dataset.
    Train(TrainArgs),
    /// Invert one field input with a trained model.
    Invert(InvertArgs),
    /// Invert one case with a classical integral-equation method.
    Classical(ClassicalArgs),
    /// Score methods on the validation split and write an NMSE report.
    Eval(EvalArgs),
    /// Run a robustness sweep described by a config file.
    Sweep(SweepArgs),
    /// Import a measured 10-receiver phasor CSV and invert it.
    ImportVna(ImportVnaArgs),
}

#[derive(Args)]
struct GenDatasetArgs {
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated wall types to include (homo,ylayer,xlayer,airgap).
    #[arg(long)]
    types: Option<String>,
    /// FDTD cell size override in meters (time step stays 0.02 ns).
    #[arg(long)]
    grid_dx: Option<f64>,
    /// Keep only the first N walls of the (filtered) enumeration.
    #[arg(long)]
    limit: Option<usize>,
    /// Keep every Nth wall of the (filtered) enumeration, for stratified
    /// desk-scale subsets; applied before --limit.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Split seed for the stratified 90/10 train/validation split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the per-wall simulations.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory produced by gen-dataset.
    #[arg(long)]
    dataset: PathBuf,
    /// Model variant (gan-annf|gan-annt|gan-cnnf|gan-cnnt|fcnn-f|fcnn-t|cnn-t).
    #[arg(long)]
    model: String,
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    #[arg(long, default_value_t = 16)]
    batch: usize,
    #[arg(long, default_value_t = 2e-4)]
    lr: f64,
    #[arg(long, default_value_t = 0.2)]
    dropout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Training arithmetic (f32|f64). Checkpoints are always f64.
    #[arg(long, default_value = "f32")]
    precision: String,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    /// Optional per-epoch loss/NMSE log (CSV).
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct InvertArgs {
    /// Trained model file.
    #[arg(long)]
    model: PathBuf,
    /// Input: a .wpb case file or a text file of field values.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    latent_seed: u64,
    /// Output prefix for <prefix>.csv and <prefix>.pgm.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassicalArgs {
    /// Inversion method (bp|bam|bim).
    #[arg(long)]
    method: String,
    /// Input .wpb case file.
    #[arg(long)]
    input: PathBuf,
    /// Tikhonov regularization weight (BAM only; default 0.01 * ||A||^2).
    #[arg(long)]
    lambda: Option<f64>,
    /// Iteration cap (BIM only).
    #[arg(long, default_value_t = BIM_MAX_ITERS)]
    max_iters: usize,
    /// Output prefix for <prefix>.csv and <prefix>.pgm.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Dataset directory.
    #[arg(long)]
    dataset: PathBuf,
    /// Comma-separated methods (bp,bam,bim and/or model variants).
    #[arg(long)]
    methods: String,
    /// Directory holding trained models named <variant>.wpm.
    #[arg(long)]
    models: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    latent_seed: u64,
    /// Report CSV output path.
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep kind (receivers|standoff|lossy|target|arch|hyper).
    #[arg(long)]
    kind: String,
    /// Key=value config file; see the README for per-kind keys.
    #[arg(long)]
    config: PathBuf,
    /// Report CSV output path.
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct ImportVnaArgs {
    /// Measured phasor CSV: 10 rows of `receiver_index, re, im`.
    #[arg(long)]
    csv: PathBuf,
    /// Trained frequency-input model file.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 0)]
    latent_seed: u64,
    /// Output prefix for <prefix>.csv and <prefix>.pgm.
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenDataset(a) => gen_dataset(a),
        Command::Train(a) => train_cmd(a),
        Command::Invert(a) => invert_cmd(a),
        Command::Classical(a) => classical_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::ImportVna(a) => import_vna_cmd(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.code);
    }
}

// -- gen-dataset -----------------------------------------------------------------

const WALL_TYPES: [&str; 4] = ["homo", "ylayer", "xlayer", "airgap"];

fn gen_dataset(args: GenDatasetArgs) -> Result<(), CliError> {
    let types: Vec<String> = match &args.types {
        None => WALL_TYPES.iter().map(|s| s.to_string()).collect(),
        Some(list) => {
            let ts: Vec<String> = list.split(',').map(|s| s.trim().to_string()).collect();
            for t in &ts {
                if !WALL_TYPES.contains(&t.as_str()) {
                    return Err(config_err(format!("unknown wall type {t:?}")));
                }
            }
            ts
        }
    };
    let grid = match args.grid_dx {
        Some(dx) if dx > 0.0 => GridSpec::with_resolution(dx, 0.02e-9),
        Some(dx) => return Err(config_err(format!("grid-dx must be > 0, got {dx}"))),
        None => GridSpec::standard(),
    };
    if !check_courant(&grid)? {
        return Err(config_err(format!(
            "dx {} is unstable at the fixed 0.02 ns time step (Courant limit {:.3e} s)",
            grid.dx,
            grid.courant_limit()
        )));
    }
    if args.stride == 0 {
        return Err(config_err("stride must be >= 1"));
    }
    let jobs = args.jobs.max(1);
    let mut specs: Vec<WallSpec> = enumerate_dataset()
        .into_iter()
        .filter(|s| types.iter().any(|t| t == s.type_tag()))
        .step_by(args.stride)
        .collect();
    if let Some(limit) = args.limit {
        specs.truncate(limit);
    }
    if specs.is_empty() {
        return Err(config_err("no walls selected"));
    }
    // Ids carry a per-type counter so file names stay stable under type
    // filtering.
    let mut counters: BTreeMap<&str, usize> = BTreeMap::new();
    let ids: Vec<String> = specs
        .iter()
        .map(|s| {
            let c = counters.entry(s.type_tag()).or_insert(0);
            *c += 1;
            format!("{}-{:04}", s.type_tag(), c)
        })
        .collect();

    std::fs::create_dir_all(&args.out)?;
    for t in &types {
        std::fs::create_dir_all(args.out.join(t))?;
    }

    let steps = grid.default_steps();
    let source = SourceSpec::default();
    let receivers = ReceiverArray::default();
    eprintln!(
        "simulating {} walls on a {}x{} grid, {} steps, {} thread(s)",
        specs.len(),
        grid.nx,
        grid.ny,
        steps,
        jobs
    );
    // The free-space reference is identical for every wall; run it once.
    let free_medium = MediumGrid::free_space(grid.nx, grid.ny);
    let freespace = run_fdtd(&grid, &free_medium, &source, &receivers, steps)?;

    let done = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<Result<(), CliError>> = std::thread::scope(|scope| {
        let chunk = specs.len().div_ceil(jobs);
        let handles: Vec<_> = specs
            .chunks(chunk)
            .zip(ids.chunks(chunk))
            .map(|(specs, ids)| {
                let (grid, source, receivers, freespace, out, done) =
                    (&grid, &source, &receivers, &freespace, &args.out, &done);
                scope.spawn(move || -> Result<(), CliError> {
                    for (spec, id) in specs.iter().zip(ids) {
                        let medium = rasterize_medium(spec, None, grid)?;
                        let wall = run_fdtd(grid, &medium, source, receivers, steps)?;
                        let rec = calibrate(&wall, freespace)?;
                        let case = Case {
                            id: id.clone(),
                            spec: spec.clone(),
                            dt: grid.dt,
                            scattered: rec.scattered,
                            freespace: freespace.samples.clone(),
                        };
                        write_case(&out.join(case_rel_path(spec, id)), &case)?;
                        let n = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
                        if n % 25 == 0 {
                            eprintln!("  {n} walls done");
                        }
                    }
                    Ok(())
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    for r in results {
        r?;
    }

    let (train_idx, _) = split_dataset(&specs, 0.9, args.seed)?;
    let entries: Vec<ManifestEntry> = specs
        .iter()
        .zip(&ids)
        .enumerate()
        .map(|(i, (spec, id))| ManifestEntry {
            id: id.clone(),
            spec: spec.clone(),
            split: if train_idx.contains(&i) {
                Split::Train
            } else {
                Split::Validation
            },
        })
        .collect();
    write_manifest(&args.out, &entries)?;
    println!(
        "wrote {} cases and manifest.csv to {}",
        specs.len(),
        args.out.display()
    );
    Ok(())
}

// -- train -----------------------------------------------------------------------

fn parse_variant(s: &str) -> Result<GanVariant, CliError> {
    s.parse::<GanVariant>()
        .map_err(|e| config_err(e.to_string()))
}

fn train_cmd(args: TrainArgs) -> Result<(), CliError> {
    let variant = parse_variant(&args.model)?;
    let dataset = read_dataset(&args.dataset)?;
    let (train_set, val_set) = dataset_samples(&dataset, variant)?;
    let config = TrainConfig {
        epochs: args.epochs,
        batch: args.batch,
        lr: args.lr,
        dropout: args.dropout,
        seed: args.seed,
        ..TrainConfig::default()
    };
    eprintln!(
        "training {variant}: {} train / {} validation cases, {} epochs",
        train_set.len(),
        val_set.len(),
        config.epochs
    );
    let started = std::time::Instant::now();
    let (bundle, log) = match args.precision.as_str() {
        "f32" => wallprobe_core::gan::train::<f32>(variant, &train_set, &val_set, &config)?,
        "f64" => wallprobe_core::gan::train::<f64>(variant, &train_set, &val_set, &config)?,
        other => return Err(config_err(format!("precision must be f32 or f64, got {other:?}"))),
    };
    bundle.save_to_path(&args.out).map_err(CliError::from)?;
    if let Some(log_path) = &args.log {
        std::fs::write(log_path, log.to_csv())?;
    }
    let final_nmse = log.epochs.last().map(|e| e.val_nmse);
    println!(
        "trained {variant} in {:.1} min; final validation NMSE {}; model at {}",
        started.elapsed().as_secs_f64() / 60.0,
        final_nmse.map_or("n/a".to_string(), |v| format!("{v:.4}")),
        args.out.display()
    );
    Ok(())
}

// -- invert ----------------------------------------------------------------------

fn read_field_input(path: &Path, variant: GanVariant) -> Result<Vec<f64>, CliError> {
    if path.extension().is_some_and(|e| e == "wpb") {
        let case = read_case(path)?;
        return Ok(eval::case_input(variant, &case)?);
    }
    let text = std::fs::read_to_string(path)?;
    text.split([',', '\n', ' ', '\t'])
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| io_err(format!("non-numeric field value {t:?} in {}", path.display())))
        })
        .collect()
}

fn invert_cmd(args: InvertArgs) -> Result<(), CliError> {
    let bundle = ModelBundle::load_from_path(&args.model).map_err(CliError::from)?;
    let input = read_field_input(&args.input, bundle.variant)?;
    let profile = bundle.infer(&input, args.latent_seed).map_err(CliError::from)?;
    export_profile(&profile, &args.out)?;
    println!(
        "wrote {}.csv and {}.pgm",
        args.out.display(),
        args.out.display()
    );
    Ok(())
}

// -- classical ---------------------------------------------------------------------

fn classical_cmd(args: ClassicalArgs) -> Result<(), CliError> {
    let case = read_case(&args.input)?;
    let ops = calibrated_operators(&case)?;
    let s = MeasurementVector::from_freq_layout(&case.freq_input()?.0)?;
    let profile = match args.method.as_str() {
        "bp" => {
            if args.lambda.is_some() {
                return Err(config_err("--lambda only applies to bam"));
            }
            bp_invert(&ops, &s)?.to_profile()
        }
        "bam" => bam_invert(&ops, &s, args.lambda)?.to_profile(),
        "bim" => {
            if args.lambda.is_some() {
                return Err(config_err("--lambda only applies to bam"));
            }
            let result = bim_invert(&ops, &s, args.max_iters, BIM_TOL)?;
            eprintln!(
                "bim: {} iteration(s), converged={}{}",
                result.iterations,
                result.converged,
                if result.oscillation_warning {
                    " (warning: oscillation, best-residual iterate returned)"
                } else {
                    ""
                }
            );
            result.chi.to_profile()
        }
        other => return Err(config_err(format!("unknown method {other:?}"))),
    };
    export_profile(&profile, &args.out)?;
    println!(
        "wrote {}.csv and {}.pgm",
        args.out.display(),
        args.out.display()
    );
    Ok(())
}

// -- eval ------------------------------------------------------------------------

fn eval_cmd(args: EvalArgs) -> Result<(), CliError> {
    let methods: Vec<Method> = args
        .methods
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Method>().map_err(CliError::from))
        .collect::<Result<_, _>>()?;
    let dataset = read_dataset(&args.dataset)?;
    let mut models = BTreeMap::new();
    for m in &methods {
        if let Method::Neural(v) = m {
            let dir = args.models.as_ref().ok_or_else(|| {
                config_err(format!("method {v} needs --models pointing at trained models"))
            })?;
            let path = dir.join(format!("{v}.wpm"));
            if !path.exists() {
                return Err(config_err(format!(
                    "no trained model for {v} at {}",
                    path.display()
                )));
            }
            models.insert(*v, ModelBundle::load_from_path(&path).map_err(CliError::from)?);
        }
    }
    let report = run_benchmark(&dataset, &methods, &models, args.latent_seed)?;
    std::fs::write(&args.report, report.to_csv())?;
    print!("{}", report.to_table());
    println!("report written to {}", args.report.display());
    Ok(())
}

// -- sweep -----------------------------------------------------------------------

/// Key=value config file; keys may repeat (used by `config=` rows).
struct SweepConfigFile {
    entries: Vec<(String, String)>,
}

impl SweepConfigFile {
    fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        let mut entries = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                io_err(format!(
                    "{}:{}: expected key=value, got {line:?}",
                    path.display(),
                    ln + 1
                ))
            })?;
            entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(SweepConfigFile { entries })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| config_err(format!("sweep config is missing {key}=")))
    }

    fn parse<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| io_err(format!("bad value for {key}: {v:?}"))),
        }
    }

    fn parse_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError> {
        let raw = self.require(key)?;
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| io_err(format!("bad value in {key}: {s:?}")))
            })
            .collect()
    }

    fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> {
        self.entries
            .iter()
            .filter(move |(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

fn sweep_train_config(cfg: &SweepConfigFile) -> Result<TrainConfig, CliError> {
    Ok(TrainConfig {
        epochs: cfg.parse("epochs", 1000)?,
        batch: cfg.parse("batch", 16)?,
        lr: cfg.parse("lr", 2e-4)?,
        dropout: cfg.parse("dropout", 0.2)?,
        seed: cfg.parse("seed", 0)?,
        ..TrainConfig::default()
    })
}

/// Every `stride`-th wall of the full enumeration, optionally restricted by
/// type, for desk-scale simulation sweeps.
fn strided_walls(cfg: &SweepConfigFile, type_filter: Option<&str>) -> Result<Vec<WallSpec>, CliError> {
    let stride: usize = cfg.parse("wall_stride", 1)?;
    if stride == 0 {
        return Err(config_err("wall_stride must be >= 1"));
    }
    let walls: Vec<WallSpec> = enumerate_dataset()
        .into_iter()
        .filter(|s| type_filter.is_none_or(|t| s.type_tag() == t))
        .step_by(stride)
        .collect();
    if walls.is_empty() {
        return Err(config_err("wall selection is empty"));
    }
    Ok(walls)
}

fn sweep_cmd(args: SweepArgs) -> Result<(), CliError> {
    let cfg = SweepConfigFile::load(&args.config)?;
    let latent_seed: u64 = cfg.parse("latent_seed", 0)?;
    let grid = GridSpec::standard();
    let steps = grid.default_steps();
    let table: SweepTable = match args.kind.as_str() {
        "receivers" => {
            let dataset = read_dataset(Path::new(cfg.require("dataset")?))?;
            let variant = parse_variant(cfg.require("variant")?)?;
            let counts: Vec<usize> = cfg.parse_list("counts")?;
            eval::sweep_receivers::<f32>(
                &dataset,
                variant,
                &counts,
                &sweep_train_config(&cfg)?,
                latent_seed,
            )?
        }
        "standoff" => {
            let variant = parse_variant(cfg.require("variant")?)?;
            let values: Vec<f64> = cfg.parse_list("values")?;
            let walls = strided_walls(&cfg, None)?;
            eval::sweep_standoff::<f32>(
                &walls,
                &values,
                variant,
                &sweep_train_config(&cfg)?,
                &grid,
                steps,
                cfg.parse("split_seed", 0)?,
                latent_seed,
            )?
        }
        "lossy" => {
            let bundle = ModelBundle::load_from_path(Path::new(cfg.require("model")?))
                .map_err(CliError::from)?;
            let sigmas: Vec<f64> = cfg.parse_list("sigmas")?;
            let walls = strided_walls(&cfg, Some("airgap"))?;
            eval::sweep_lossy(&bundle, &walls, &sigmas, &grid, steps, latent_seed)?
        }
        "target" => {
            let bundle = ModelBundle::load_from_path(Path::new(cfg.require("model")?))
                .map_err(CliError::from)?;
            let wall: WallSpec = cfg
                .require("wall")?
                .parse()
                .map_err(|e: WallError| io_err(e.to_string()))?;
            let widths: Vec<f64> = match cfg.get("widths") {
                Some(_) => cfg.parse_list("widths")?,
                None => eval::TARGET_WIDTHS.to_vec(),
            };
            let offsets: Vec<f64> = match cfg.get("offsets") {
                Some(_) => cfg.parse_list("offsets")?,
                None => eval::TARGET_OFFSETS.to_vec(),
            };
            let study = eval::eval_with_target(
                &bundle, &wall, &widths, &offsets, &grid, steps, latent_seed,
            )?;
            let mut rows = vec![eval::SweepRow {
                label: "target-free".into(),
                nmse: study.target_free_nmse,
            }];
            rows.extend(study.cases.iter().map(|c| eval::SweepRow {
                label: format!("w={} off={}", c.width, c.offset),
                nmse: c.nmse,
            }));
            rows.push(eval::SweepRow {
                label: "mean".into(),
                nmse: study.mean_nmse,
            });
            SweepTable {
                kind: "target".into(),
                rows,
            }
        }
        "arch" | "hyper" => {
            let dataset = read_dataset(Path::new(cfg.require("dataset")?))?;
            let mut configs = Vec::new();
            for row in cfg.all("config") {
                // variant,epochs,batch,lr,dropout[,seed]
                let f: Vec<&str> = row.split(',').map(str::trim).collect();
                if f.len() != 5 && f.len() != 6 {
                    return Err(io_err(format!(
                        "config row needs variant,epochs,batch,lr,dropout[,seed]: {row:?}"
                    )));
                }
                let num = |s: &str| -> Result<f64, CliError> {
                    s.parse()
                        .map_err(|_| io_err(format!("bad number {s:?} in config row {row:?}")))
                };
                configs.push(ArchConfig {
                    variant: parse_variant(f[0])?,
                    epochs: num(f[1])? as usize,
                    batch: num(f[2])? as usize,
                    lr: num(f[3])?,
                    dropout: num(f[4])?,
                    seed: if f.len() == 6 { num(f[5])? as u64 } else { 0 },
                });
            }
            eval::sweep_architecture::<f32>(&dataset, &configs, latent_seed)?
        }
        other => return Err(config_err(format!("unknown sweep kind {other:?}"))),
    };
    std::fs::write(&args.report, table.to_csv())?;
    print!("{}", table.to_table());
    println!("report written to {}", args.report.display());
    Ok(())
}

// -- import-vna ---------------------------------------------------------------------

fn import_vna_cmd(args: ImportVnaArgs) -> Result<(), CliError> {
    let bundle = ModelBundle::load_from_path(&args.model).map_err(CliError::from)?;
    if bundle.variant.is_time() {
        return Err(config_err(format!(
            "{} takes time-domain inputs; VNA import needs a frequency-input model",
            bundle.variant
        )));
    }
    let v = import_measurement(&args.csv)?;
    let profile = bundle.infer(&v.0, args.latent_seed).map_err(CliError::from)?;
    export_profile(&profile, &args.out)?;
    println!(
        "wrote {}.csv and {}.pgm",
        args.out.display(),
        args.out.display()
    );
    Ok(())
}
