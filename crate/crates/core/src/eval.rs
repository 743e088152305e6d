//! Evaluation harness: the NMSE metric, the benchmark report over the
//! validation split, robustness sweeps (receiver count, standoff, lossy
//! walls, behind-wall targets, architectures) and measurement import /
//! profile export.
//!
//! Expensive operations take their dataset, epoch counts and grids as
//! arguments so callers can run them at full scale or desk scale; nothing
//! here hard-codes a training budget.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use thiserror::Error;

use crate::classical::{
    bam_invert, bim_invert, bp_invert, build_operators, ClassicalError, MeasurementVector,
    ScatterOperators,
};
use crate::fdtd::{run_pair, FdtdError, GridSpec, ReceiverArray, SourceSpec};
use crate::gan::{train, GanError, GanVariant, ModelBundle, TrainConfig, TrainSample};
use crate::nn::Scalar;
use crate::pipeline::{
    calibrate, downsample, extract_phasor, split_dataset, Case, ManifestEntry, PipelineError,
    Split, DOWNSAMPLE_FACTOR, RECEIVERS, TIME_SAMPLES_KEPT,
};
use crate::wall::{
    rasterize_medium, rasterize_profile, DielectricProfile, TargetSpec, WallError, WallSpec,
    PROFILE_SIZE, WALL_FRONT_Y,
};
use crate::F0;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Wall(#[from] WallError),
    #[error(transparent)]
    Fdtd(#[from] FdtdError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Gan(#[from] GanError),
    #[error(transparent)]
    Classical(#[from] ClassicalError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

// -- NMSE ----------------------------------------------------------------------

/// Normalized mean squared error ||t - e||^2 / ||t||^2 over flat slices.
pub fn nmse_slices(truth: &[f64], est: &[f64]) -> Result<f64, EvalError> {
    if truth.len() != est.len() || truth.is_empty() {
        return Err(EvalError::InvalidArgument(format!(
            "shape mismatch: truth has {} values, estimate {}",
            truth.len(),
            est.len()
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (&t, &e) in truth.iter().zip(est) {
        num += (t - e) * (t - e);
        den += t * t;
    }
    if den == 0.0 {
        return Err(EvalError::InvalidArgument(
            "all-zero ground truth has no defined NMSE".into(),
        ));
    }
    Ok(num / den)
}

/// NMSE between two 32x32 permittivity profiles.
pub fn nmse(truth: &DielectricProfile, est: &DielectricProfile) -> f64 {
    // Profiles always hold 1024 values >= 1, so the slice form cannot fail.
    nmse_slices(truth.values(), est.values()).expect("profiles have fixed nonzero shape")
}

// -- methods and reports -------------------------------------------------------

/// One inversion method the benchmark can score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Bp,
    Bam,
    Bim,
    Neural(GanVariant),
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Bp => "bp",
            Method::Bam => "bam",
            Method::Bim => "bim",
            Method::Neural(v) => v.tag(),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, EvalError> {
        match s {
            "bp" => Ok(Method::Bp),
            "bam" => Ok(Method::Bam),
            "bim" => Ok(Method::Bim),
            other => other
                .parse::<GanVariant>()
                .map(Method::Neural)
                .map_err(|_| EvalError::Config(format!("unknown method {other:?}"))),
        }
    }
}

/// Per-case score inside a [`MethodReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct CaseScore {
    pub id: String,
    pub wall_type: String,
    pub nmse: f64,
}

/// A method's scores over the validation split.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodReport {
    pub method: String,
    pub cases: Vec<CaseScore>,
    /// Arithmetic mean of the per-case values.
    pub mean: f64,
    pub mean_by_type: BTreeMap<String, f64>,
    /// Training wall-clock, when the caller trained the model in-session.
    pub train_minutes: Option<f64>,
    /// Inference wall-clock over the whole split.
    pub test_seconds: f64,
}

/// Benchmark output: one [`MethodReport`] per requested method.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NmseReport {
    pub methods: Vec<MethodReport>,
}

impl NmseReport {
    /// Deterministic CSV: per-case rows then aggregate rows. Timings are
    /// deliberately excluded so identical seeds give byte-identical output;
    /// they appear in [`NmseReport::to_table`].
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,case,type,nmse\n");
        for m in &self.methods {
            for c in &m.cases {
                let _ = writeln!(out, "{},{},{},{:.17e}", m.method, c.id, c.wall_type, c.nmse);
            }
            for (t, v) in &m.mean_by_type {
                let _ = writeln!(out, "{},mean,{},{:.17e}", m.method, t, v);
            }
            let _ = writeln!(out, "{},mean,all,{:.17e}", m.method, m.mean);
        }
        out
    }

    /// Aligned text table with aggregate NMSE and measured timings.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:>8} {:>12} {:>12} {:>12}",
            "method", "cases", "mean NMSE", "train (min)", "test (s)"
        );
        for m in &self.methods {
            let train = match m.train_minutes {
                Some(t) => format!("{t:.2}"),
                None => "-".to_string(),
            };
            let _ = writeln!(
                out,
                "{:<12} {:>8} {:>12.4} {:>12} {:>12.3}",
                m.method,
                m.cases.len(),
                m.mean,
                train,
                m.test_seconds
            );
        }
        out
    }
}

fn mean_and_by_type(cases: &[CaseScore]) -> (f64, BTreeMap<String, f64>) {
    let mean = cases.iter().map(|c| c.nmse).sum::<f64>() / cases.len() as f64;
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for c in cases {
        let e = sums.entry(c.wall_type.clone()).or_insert((0.0, 0));
        e.0 += c.nmse;
        e.1 += 1;
    }
    let by_type = sums
        .into_iter()
        .map(|(t, (s, n))| (t, s / n as f64))
        .collect();
    (mean, by_type)
}

/// Field input for a case in the layout a variant's generator expects.
pub fn case_input(variant: GanVariant, case: &Case) -> Result<Vec<f64>, EvalError> {
    Ok(if variant.is_time() {
        case.time_input()?.0
    } else {
        case.freq_input()?.0
    })
}

/// Builds (train, validation) sample lists for a variant from a loaded
/// dataset, honoring the manifest split.
pub fn dataset_samples(
    dataset: &[(ManifestEntry, Case)],
    variant: GanVariant,
) -> Result<(Vec<TrainSample>, Vec<TrainSample>), EvalError> {
    let mut train_set = Vec::new();
    let mut val_set = Vec::new();
    for (entry, case) in dataset {
        let sample = TrainSample {
            input: case_input(variant, case)?,
            target: case.target_profile().values().to_vec(),
        };
        match entry.split {
            Split::Train => train_set.push(sample),
            Split::Validation => val_set.push(sample),
        }
    }
    Ok((train_set, val_set))
}

/// Converts the 20-value [re x10, im x10] layout into complex phasors
/// without the measurement conjugation (used for calibration inputs).
fn freq_layout_to_phasors(freq: &[f64]) -> Result<Vec<Complex64>, EvalError> {
    if freq.len() != 2 * RECEIVERS {
        return Err(EvalError::InvalidArgument(format!(
            "expected {} phasor values, got {}",
            2 * RECEIVERS,
            freq.len()
        )));
    }
    Ok((0..RECEIVERS)
        // Stored phasors follow e^{+i omega t}; the operators use
        // e^{-i omega t}, so conjugate here exactly as
        // MeasurementVector::from_freq_layout does for the scattered data.
        .map(|r| Complex64::new(freq[r], -freq[RECEIVERS + r]))
        .collect())
}

/// Operators for the standard benchmark geometry, with the incident field
/// calibrated against one case's free-space record.
pub fn calibrated_operators(case: &Case) -> Result<ScatterOperators, EvalError> {
    let receivers = ReceiverArray::default().positions;
    let mut ops = build_operators(&receivers, SourceSpec::default().position, F0)?;
    let fs = extract_phasor(&case.freespace_record(), F0)?;
    ops.calibrate_incident(&freq_layout_to_phasors(&fs.0)?)?;
    Ok(ops)
}

/// Default BIM iteration budget used by the benchmark.
pub const BIM_MAX_ITERS: usize = 20;
/// Default BIM relative-change stopping tolerance.
pub const BIM_TOL: f64 = 1e-3;

/// Scores every requested method on the dataset's validation split.
/// Neural methods need a trained bundle in `models`; per-case latent draws
/// are seeded deterministically from `latent_seed`.
pub fn run_benchmark(
    dataset: &[(ManifestEntry, Case)],
    methods: &[Method],
    models: &BTreeMap<GanVariant, ModelBundle>,
    latent_seed: u64,
) -> Result<NmseReport, EvalError> {
    if methods.is_empty() {
        return Err(EvalError::Config("no methods requested".into()));
    }
    let val: Vec<&(ManifestEntry, Case)> = dataset
        .iter()
        .filter(|(e, _)| e.split == Split::Validation)
        .collect();
    if val.is_empty() {
        return Err(EvalError::Config(
            "dataset has no validation-split cases".into(),
        ));
    }
    let mut report = NmseReport::default();
    for &method in methods {
        let bundle = match method {
            Method::Neural(v) => Some(models.get(&v).ok_or_else(|| {
                EvalError::Config(format!("no trained model provided for {v}"))
            })?),
            _ => None,
        };
        let started = Instant::now();
        let mut cases = Vec::with_capacity(val.len());
        for (i, (entry, case)) in val.iter().enumerate() {
            let truth = case.target_profile();
            let est = match method {
                Method::Neural(v) => {
                    let input = case_input(v, case)?;
                    bundle
                        .expect("checked above")
                        .infer(&input, latent_seed.wrapping_add(i as u64))?
                }
                classical_method => {
                    let ops = calibrated_operators(case)?;
                    let s = MeasurementVector::from_freq_layout(&case.freq_input()?.0)?;
                    match classical_method {
                        Method::Bp => bp_invert(&ops, &s)?.to_profile(),
                        Method::Bam => bam_invert(&ops, &s, None)?.to_profile(),
                        Method::Bim => {
                            bim_invert(&ops, &s, BIM_MAX_ITERS, BIM_TOL)?.chi.to_profile()
                        }
                        Method::Neural(_) => unreachable!(),
                    }
                }
            };
            cases.push(CaseScore {
                id: entry.id.clone(),
                wall_type: entry.spec.type_tag().to_string(),
                nmse: nmse(&truth, &est),
            });
        }
        let test_seconds = started.elapsed().as_secs_f64();
        let (mean, mean_by_type) = mean_and_by_type(&cases);
        report.methods.push(MethodReport {
            method: method.tag().to_string(),
            cases,
            mean,
            mean_by_type,
            train_minutes: None,
            test_seconds,
        });
    }
    Ok(report)
}

// -- sweep tables ----------------------------------------------------------------

/// One row of a sweep result.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub label: String,
    pub nmse: f64,
}

/// Generic sweep output: mean validation NMSE per axis value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub kind: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},nmse\n", self.kind);
        for r in &self.rows {
            let _ = writeln!(out, "{},{:.17e}", r.label, r.nmse);
        }
        out
    }

    pub fn to_table(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .chain([self.kind.len()])
            .max()
            .unwrap_or(0);
        let mut out = format!("{:<width$} {:>10}\n", self.kind, "NMSE");
        for r in &self.rows {
            let _ = writeln!(out, "{:<width$} {:>10.4}", r.label, r.nmse);
        }
        out
    }
}

/// Mean single-draw NMSE of a trained bundle over a sample list.
pub fn bundle_nmse(
    bundle: &ModelBundle,
    samples: &[TrainSample],
    latent_seed: u64,
) -> Result<f64, EvalError> {
    if samples.is_empty() {
        return Err(EvalError::InvalidArgument("no samples to score".into()));
    }
    let mut total = 0.0;
    for (i, s) in samples.iter().enumerate() {
        let est = bundle.infer(&s.input, latent_seed.wrapping_add(i as u64))?;
        total += nmse_slices(&s.target, est.values())?;
    }
    Ok(total / samples.len() as f64)
}

// -- receiver-count sweep ------------------------------------------------------

/// Nested, aperture-spanning receiver subsets (1-based indices into the
/// standard 10-element array): each count keeps every receiver of the count
/// below it.
pub const RECEIVER_SUBSETS: [(usize, &[usize]); 5] = [
    (2, &[1, 10]),
    (4, &[1, 3, 8, 10]),
    (6, &[1, 3, 5, 6, 8, 10]),
    (8, &[1, 2, 3, 5, 6, 8, 9, 10]),
    (10, &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]),
];

/// The receiver subset used for `count` active receivers.
pub fn receiver_subset(count: usize) -> Result<&'static [usize], EvalError> {
    RECEIVER_SUBSETS
        .iter()
        .find(|(c, _)| *c == count)
        .map(|(_, s)| *s)
        .ok_or_else(|| {
            EvalError::InvalidArgument(format!(
                "receiver count {count} not one of {{2, 4, 6, 8, 10}}"
            ))
        })
}

/// Restricts a full 10-receiver input vector to a receiver subset,
/// preserving the variant's layout (re/im blocks for frequency inputs,
/// per-receiver sample blocks for time inputs).
pub fn truncate_receivers(
    variant: GanVariant,
    input: &[f64],
    subset: &[usize],
) -> Result<Vec<f64>, EvalError> {
    if input.len() != variant.field_len() {
        return Err(EvalError::InvalidArgument(format!(
            "expected the full {}-value input for {variant}, got {}",
            variant.field_len(),
            input.len()
        )));
    }
    if subset.is_empty() || subset.iter().any(|&r| r == 0 || r > RECEIVERS) {
        return Err(EvalError::InvalidArgument(
            "receiver subset entries must lie in 1..=10".into(),
        ));
    }
    let mut out = Vec::new();
    if variant.is_time() {
        for &r in subset {
            let start = (r - 1) * TIME_SAMPLES_KEPT;
            out.extend_from_slice(&input[start..start + TIME_SAMPLES_KEPT]);
        }
    } else {
        for &r in subset {
            out.push(input[r - 1]);
        }
        for &r in subset {
            out.push(input[RECEIVERS + r - 1]);
        }
    }
    Ok(out)
}

/// Retrains `variant` per receiver count on truncated input vectors and
/// reports the mean validation NMSE per count.
pub fn sweep_receivers<T: Scalar>(
    dataset: &[(ManifestEntry, Case)],
    variant: GanVariant,
    counts: &[usize],
    config: &TrainConfig,
    latent_seed: u64,
) -> Result<SweepTable, EvalError> {
    if counts.is_empty() {
        return Err(EvalError::Config("no receiver counts requested".into()));
    }
    let (full_train, full_val) = dataset_samples(dataset, variant)?;
    let mut rows = Vec::new();
    for &count in counts {
        let subset = receiver_subset(count)?;
        let restrict = |set: &[TrainSample]| -> Result<Vec<TrainSample>, EvalError> {
            set.iter()
                .map(|s| {
                    Ok(TrainSample {
                        input: truncate_receivers(variant, &s.input, subset)?,
                        target: s.target.clone(),
                    })
                })
                .collect()
        };
        let train_set = restrict(&full_train)?;
        let val_set = restrict(&full_val)?;
        let (bundle, _) = train::<T>(variant, &train_set, &val_set, config)?;
        rows.push(SweepRow {
            label: count.to_string(),
            nmse: bundle_nmse(&bundle, &val_set, latent_seed)?,
        });
    }
    Ok(SweepTable {
        kind: "receivers".into(),
        rows,
    })
}

// -- simulation-backed sweeps ----------------------------------------------------

/// Simulates one wall (with an optional behind-wall target) and returns the
/// calibrated field input for `variant`.
fn simulate_input(
    spec: &WallSpec,
    target: Option<&TargetSpec>,
    grid: &GridSpec,
    steps: usize,
    receivers: &ReceiverArray,
    variant: GanVariant,
) -> Result<Vec<f64>, EvalError> {
    let medium = rasterize_medium(spec, target, grid)?;
    let source = SourceSpec::default();
    let (wall, freespace) = run_pair(grid, &medium, &source, receivers, steps)?;
    let rec = calibrate(&wall, &freespace)?;
    Ok(if variant.is_time() {
        downsample(&rec, DOWNSAMPLE_FACTOR, TIME_SAMPLES_KEPT)?.0
    } else {
        extract_phasor(&rec, F0)?.0
    })
}

fn check_standoff(grid: &GridSpec, standoff: f64) -> Result<(), EvalError> {
    let y = WALL_FRONT_Y - standoff;
    if standoff <= 0.0 {
        return Err(EvalError::Wall(WallError::Geometry(format!(
            "standoff {standoff} places receivers at or behind the wall front face"
        ))));
    }
    if !grid.contains_interior(-0.28, y) || !grid.contains_interior(0.28, y) {
        return Err(EvalError::Wall(WallError::Geometry(format!(
            "standoff {standoff} places receivers outside the non-PML region"
        ))));
    }
    Ok(())
}

/// Regenerates fields at each receiver standoff, retrains `variant` and
/// reports the mean validation NMSE per standoff.
#[allow(clippy::too_many_arguments)]
pub fn sweep_standoff<T: Scalar>(
    specs: &[WallSpec],
    standoffs: &[f64],
    variant: GanVariant,
    config: &TrainConfig,
    grid: &GridSpec,
    steps: usize,
    split_seed: u64,
    latent_seed: u64,
) -> Result<SweepTable, EvalError> {
    if specs.is_empty() || standoffs.is_empty() {
        return Err(EvalError::Config(
            "standoff sweep needs walls and standoff values".into(),
        ));
    }
    for &s in standoffs {
        check_standoff(grid, s)?;
    }
    let (train_idx, val_idx) = split_dataset(specs, 0.9, split_seed)?;
    if val_idx.is_empty() {
        return Err(EvalError::Config(
            "standoff sweep needs at least one validation wall".into(),
        ));
    }
    let mut rows = Vec::new();
    for &standoff in standoffs {
        let receivers = ReceiverArray::line(RECEIVERS, WALL_FRONT_Y, standoff);
        let mut samples = Vec::with_capacity(specs.len());
        for spec in specs {
            samples.push(TrainSample {
                input: simulate_input(spec, None, grid, steps, &receivers, variant)?,
                target: rasterize_profile(spec)?.values().to_vec(),
            });
        }
        let pick = |idx: &[usize]| idx.iter().map(|&i| samples[i].clone()).collect::<Vec<_>>();
        let (train_set, val_set) = (pick(&train_idx), pick(&val_idx));
        let (bundle, _) = train::<T>(variant, &train_set, &val_set, config)?;
        rows.push(SweepRow {
            label: format!("{standoff}"),
            nmse: bundle_nmse(&bundle, &val_set, latent_seed)?,
        });
    }
    Ok(SweepTable {
        kind: "standoff".into(),
        rows,
    })
}

/// Re-simulates air-gap walls with each conductivity and scores a model
/// trained on lossless data against each lossy field (truth stays the
/// lossless geometry).
pub fn sweep_lossy(
    bundle: &ModelBundle,
    specs: &[WallSpec],
    sigmas: &[f64],
    grid: &GridSpec,
    steps: usize,
    latent_seed: u64,
) -> Result<SweepTable, EvalError> {
    if specs.is_empty() || sigmas.is_empty() {
        return Err(EvalError::Config(
            "lossy sweep needs walls and conductivity values".into(),
        ));
    }
    for spec in specs {
        if spec.type_tag() != "airgap" {
            return Err(EvalError::InvalidArgument(
                "lossy sweep walls must be air-gap walls".into(),
            ));
        }
    }
    if let Some(&bad) = sigmas.iter().find(|&&s| s < 0.0) {
        return Err(EvalError::InvalidArgument(format!(
            "conductivity must be >= 0, got {bad}"
        )));
    }
    let receivers = ReceiverArray::default();
    let mut rows = Vec::new();
    for &sigma in sigmas {
        let mut total = 0.0;
        for (i, spec) in specs.iter().enumerate() {
            let lossy = WallSpec::with_sigma(spec.kind.clone(), sigma);
            let input =
                simulate_input(&lossy, None, grid, steps, &receivers, bundle.variant)?;
            let truth = rasterize_profile(spec)?;
            let est = bundle.infer(&input, latent_seed.wrapping_add(i as u64))?;
            total += nmse(&truth, &est);
        }
        rows.push(SweepRow {
            label: format!("{sigma}"),
            nmse: total / specs.len() as f64,
        });
    }
    Ok(SweepTable {
        kind: "sigma".into(),
        rows,
    })
}

// -- behind-wall target study ----------------------------------------------------

/// Default target widths (m) for the behind-wall study.
pub const TARGET_WIDTHS: [f64; 5] = [0.2, 0.3, 0.4, 0.5, 0.6];
/// Default target-center offsets behind the wall back face (m).
pub const TARGET_OFFSETS: [f64; 5] = [0.3, 0.4, 0.5, 0.6, 0.7];
/// Default target height (m).
pub const TARGET_HEIGHT: f64 = 0.3;
/// Default target permittivity.
pub const TARGET_EPS: f64 = 4.0;

/// One behind-wall target case and its score.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetScore {
    pub width: f64,
    pub offset: f64,
    pub nmse: f64,
}

/// Result of the behind-wall target study.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetStudy {
    /// Score without any target, for the degradation baseline.
    pub target_free_nmse: f64,
    pub cases: Vec<TargetScore>,
    pub mean_nmse: f64,
}

/// Places a `widths` x `offsets` grid of rectangular dielectric targets
/// behind the wall, re-simulates each scene and scores `bundle` against the
/// wall-only ground truth.
#[allow(clippy::too_many_arguments)]
pub fn eval_with_target(
    bundle: &ModelBundle,
    wall: &WallSpec,
    widths: &[f64],
    offsets: &[f64],
    grid: &GridSpec,
    steps: usize,
    latent_seed: u64,
) -> Result<TargetStudy, EvalError> {
    if widths.is_empty() || offsets.is_empty() {
        return Err(EvalError::Config(
            "target study needs widths and offsets".into(),
        ));
    }
    let receivers = ReceiverArray::default();
    let truth = rasterize_profile(wall)?;
    let free_input = simulate_input(wall, None, grid, steps, &receivers, bundle.variant)?;
    let target_free_nmse = nmse(&truth, &bundle.infer(&free_input, latent_seed)?);
    let back = WALL_FRONT_Y + wall.thickness();
    let mut cases = Vec::with_capacity(widths.len() * offsets.len());
    for (i, &width) in widths.iter().enumerate() {
        for (j, &offset) in offsets.iter().enumerate() {
            let target = TargetSpec {
                center: (0.0, back + offset),
                width,
                height: TARGET_HEIGHT,
                eps_r: TARGET_EPS,
            };
            let input =
                simulate_input(wall, Some(&target), grid, steps, &receivers, bundle.variant)?;
            let seed = latent_seed
                .wrapping_add((i * offsets.len() + j) as u64)
                .wrapping_add(1);
            cases.push(TargetScore {
                width,
                offset,
                nmse: nmse(&truth, &bundle.infer(&input, seed)?),
            });
        }
    }
    let mean_nmse = cases.iter().map(|c| c.nmse).sum::<f64>() / cases.len() as f64;
    Ok(TargetStudy {
        target_free_nmse,
        cases,
        mean_nmse,
    })
}

// -- architecture / hyper-parameter sweep -----------------------------------------

/// One training configuration in an architecture sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchConfig {
    pub variant: GanVariant,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub dropout: f64,
    pub seed: u64,
}

impl ArchConfig {
    fn validate(&self) -> Result<(), EvalError> {
        if self.epochs == 0 || self.batch == 0 {
            return Err(EvalError::Config(
                "epochs and batch must be >= 1".into(),
            ));
        }
        if !(self.lr > 0.0) {
            return Err(EvalError::Config(format!(
                "learning rate must be > 0, got {}",
                self.lr
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(EvalError::Config(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }

    fn label(&self) -> String {
        format!(
            "{} lr={} dropout={} batch={} epochs={}",
            self.variant, self.lr, self.dropout, self.batch, self.epochs
        )
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch: self.batch,
            lr: self.lr,
            dropout: self.dropout,
            seed: self.seed,
            ..TrainConfig::default()
        }
    }
}

/// Trains every configuration in the grid (at its own epoch budget) and
/// reports the mean validation NMSE per configuration.
pub fn sweep_architecture<T: Scalar>(
    dataset: &[(ManifestEntry, Case)],
    configs: &[ArchConfig],
    latent_seed: u64,
) -> Result<SweepTable, EvalError> {
    if configs.is_empty() {
        return Err(EvalError::Config("empty architecture grid".into()));
    }
    let mut rows = Vec::new();
    for cfg in configs {
        cfg.validate()?;
        let (train_set, val_set) = dataset_samples(dataset, cfg.variant)?;
        let (bundle, _) = train::<T>(cfg.variant, &train_set, &val_set, &cfg.train_config())?;
        rows.push(SweepRow {
            label: cfg.label(),
            nmse: bundle_nmse(&bundle, &val_set, latent_seed)?,
        });
    }
    Ok(SweepTable {
        kind: "configuration".into(),
        rows,
    })
}

// -- measurement import / profile export -------------------------------------------

/// Parses a measured 10-receiver phasor CSV (rows `receiver_index, re, im`,
/// free-space subtraction already applied) into the 20-value frequency
/// input layout. The returned vector is unnormalized; [`ModelBundle::infer`]
/// applies the bundle's training scale.
pub fn import_measurement(path: &Path) -> Result<crate::pipeline::FreqInputVector, EvalError> {
    let text = std::fs::read_to_string(path)?;
    let mut re = vec![f64::NAN; RECEIVERS];
    let mut im = vec![f64::NAN; RECEIVERS];
    let mut rows = 0usize;
    for (ln, line) in text.lines().enumerate() {
        let row = ln + 1;
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(EvalError::Parse(format!(
                "row {row}: expected `receiver_index, re, im`, got {} fields",
                fields.len()
            )));
        }
        let idx: usize = fields[0]
            .parse()
            .map_err(|_| EvalError::Parse(format!("row {row}: bad receiver index {:?}", fields[0])))?;
        if idx == 0 || idx > RECEIVERS {
            return Err(EvalError::Parse(format!(
                "row {row}: receiver index {idx} outside 1..={RECEIVERS}"
            )));
        }
        if !re[idx - 1].is_nan() {
            return Err(EvalError::Parse(format!(
                "row {row}: duplicate receiver index {idx}"
            )));
        }
        let parse = |s: &str| -> Result<f64, EvalError> {
            s.parse()
                .map_err(|_| EvalError::Parse(format!("row {row}: non-numeric field {s:?}")))
        };
        re[idx - 1] = parse(fields[1])?;
        im[idx - 1] = parse(fields[2])?;
    }
    if rows != RECEIVERS {
        return Err(EvalError::Parse(format!(
            "expected {RECEIVERS} measurement rows, got {rows}"
        )));
    }
    re.extend(im);
    Ok(crate::pipeline::FreqInputVector(re))
}

/// Writes `<prefix>.csv` (32x32 decimal CSV) and `<prefix>.pgm` (binary P5,
/// permittivity mapped linearly from [1, 8] to [0, 255], clamped above).
pub fn export_profile(profile: &DielectricProfile, prefix: &Path) -> Result<(), EvalError> {
    let with_ext = |ext: &str| {
        let mut p = prefix.as_os_str().to_owned();
        p.push(".");
        p.push(ext);
        std::path::PathBuf::from(p)
    };
    std::fs::write(with_ext("csv"), profile.to_csv())?;
    let mut pgm = format!("P5\n{PROFILE_SIZE} {PROFILE_SIZE}\n255\n").into_bytes();
    pgm.extend(profile.values().iter().map(|&e| {
        let v = (e - 1.0) / 7.0 * 255.0;
        v.round().clamp(0.0, 255.0) as u8
    }));
    std::fs::write(with_ext("pgm"), pgm)?;
    Ok(())
}
