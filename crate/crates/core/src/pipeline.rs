//! Conversion of raw FDTD records into network input vectors, plus dataset
//! splitting and case-file persistence.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::fdtd::FieldRecord;
use crate::wall::{rasterize_profile, DielectricProfile, WallSpec};
use crate::F0;

pub const RECEIVERS: usize = 10;
pub const DOWNSAMPLE_FACTOR: usize = 20;
pub const TIME_SAMPLES_KEPT: usize = 52;
/// Latent noise lengths for the time and frequency pipelines.
pub const LATENT_TIME: usize = 2600;
pub const LATENT_FREQ: usize = 100;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },
    #[error("unsupported case file version {0:?}")]
    UnsupportedVersion(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn parse_err(context: impl Into<String>, message: impl Into<String>) -> PipelineError {
    PipelineError::Parse {
        context: context.into(),
        message: message.into(),
    }
}

/// Scattered field: wall record minus free-space record, per receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedRecord {
    pub dt: f64,
    /// `scattered[r][n]`, shape receivers x steps.
    pub scattered: Vec<Vec<f64>>,
}

impl CalibratedRecord {
    pub fn receiver_count(&self) -> usize {
        self.scattered.len()
    }

    pub fn steps(&self) -> usize {
        self.scattered.first().map_or(0, |s| s.len())
    }
}

/// 520 = 10 receivers x 52 samples, receiver-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeInputVector(pub Vec<f64>);

/// 20 = 10 real parts then 10 imaginary parts of the 2.4 GHz phasors.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqInputVector(pub Vec<f64>);

/// Elementwise subtraction of the free-space record from the wall record.
pub fn calibrate(
    wall: &FieldRecord,
    freespace: &FieldRecord,
) -> Result<CalibratedRecord, PipelineError> {
    if wall.dt != freespace.dt
        || wall.receiver_count() != freespace.receiver_count()
        || wall.steps() != freespace.steps()
    {
        return Err(PipelineError::InvalidArgument(
            "wall and free-space records must share dt, receiver count and length".into(),
        ));
    }
    let scattered = wall
        .samples
        .iter()
        .zip(&freespace.samples)
        .map(|(w, f)| w.iter().zip(f).map(|(a, b)| a - b).collect())
        .collect();
    Ok(CalibratedRecord {
        dt: wall.dt,
        scattered,
    })
}

/// Keeps every `factor`-th sample starting at index 0, truncated to `keep`
/// samples per receiver, concatenated receiver-major.
pub fn downsample(
    rec: &CalibratedRecord,
    factor: usize,
    keep: usize,
) -> Result<TimeInputVector, PipelineError> {
    if factor == 0 || keep == 0 {
        return Err(PipelineError::InvalidArgument(
            "factor and keep must be positive".into(),
        ));
    }
    // Sample k is taken at index k*factor, so the last one needs
    // (keep-1)*factor + 1 raw samples.
    let needed = (keep - 1) * factor + 1;
    if rec.steps() < needed {
        return Err(PipelineError::InvalidArgument(format!(
            "record has {} samples per receiver, need {needed}",
            rec.steps()
        )));
    }
    let mut out = Vec::with_capacity(rec.receiver_count() * keep);
    for series in &rec.scattered {
        out.extend(series.iter().step_by(factor).take(keep));
    }
    Ok(TimeInputVector(out))
}

/// Per-receiver complex phasor at `f0` via a least-squares fit of
/// `a*cos(2*pi*f0*t) + b*sin(2*pi*f0*t)` over the final half of the record.
/// The phasor is `a - i*b`; output layout is all real parts then all
/// imaginary parts.
pub fn extract_phasor(rec: &CalibratedRecord, f0: f64) -> Result<FreqInputVector, PipelineError> {
    let n = rec.steps();
    let window = n / 2;
    let span = window as f64 * rec.dt;
    if span < 10.0 / f0 {
        return Err(PipelineError::InvalidArgument(format!(
            "fit window of {span:e}s spans fewer than 10 periods of {f0:e}Hz"
        )));
    }
    let omega = 2.0 * std::f64::consts::PI * f0;
    let mut re = Vec::with_capacity(rec.receiver_count());
    let mut im = Vec::with_capacity(rec.receiver_count());
    for series in &rec.scattered {
        // Normal equations for the two-parameter fit.
        let (mut scc, mut sss, mut scs, mut syc, mut sys) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for k in n - window..n {
            let t = k as f64 * rec.dt;
            let (s, c) = (omega * t).sin_cos();
            scc += c * c;
            sss += s * s;
            scs += c * s;
            syc += series[k] * c;
            sys += series[k] * s;
        }
        let det = scc * sss - scs * scs;
        let (a, b) = if det.abs() < 1e-300 {
            (0.0, 0.0)
        } else {
            ((syc * sss - sys * scs) / det, (sys * scc - syc * scs) / det)
        };
        re.push(a);
        im.push(-b);
    }
    re.extend(im);
    Ok(FreqInputVector(re))
}

/// Reproducible standard-normal latent vector.
pub fn make_latent(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// One dataset case: raw calibrated records plus derived ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub id: String,
    pub spec: WallSpec,
    pub dt: f64,
    /// Calibrated (wall minus free space) per-receiver series.
    pub scattered: Vec<Vec<f64>>,
    /// Free-space per-receiver series, kept for incident-field scaling.
    pub freespace: Vec<Vec<f64>>,
}

impl Case {
    pub fn calibrated(&self) -> CalibratedRecord {
        CalibratedRecord {
            dt: self.dt,
            scattered: self.scattered.clone(),
        }
    }

    pub fn freespace_record(&self) -> CalibratedRecord {
        CalibratedRecord {
            dt: self.dt,
            scattered: self.freespace.clone(),
        }
    }

    pub fn target_profile(&self) -> DielectricProfile {
        rasterize_profile(&self.spec).expect("stored spec is valid")
    }

    /// Default time-pipeline input vector (downsample by 20, keep 52).
    pub fn time_input(&self) -> Result<TimeInputVector, PipelineError> {
        downsample(&self.calibrated(), DOWNSAMPLE_FACTOR, TIME_SAMPLES_KEPT)
    }

    /// Default frequency-pipeline input vector (phasors before
    /// downsampling).
    pub fn freq_input(&self) -> Result<FreqInputVector, PipelineError> {
        extract_phasor(&self.calibrated(), F0)
    }
}

/// Deterministic 90/10 split stratified by wall type. Train size is
/// `floor(n * train_frac)` overall, apportioned across types by largest
/// remainder. Returns (train indices, validation indices).
pub fn split_dataset(
    specs: &[WallSpec],
    train_frac: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), PipelineError> {
    if specs.is_empty() {
        return Err(PipelineError::InvalidArgument("empty dataset".into()));
    }
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(PipelineError::InvalidArgument(
            "train_frac must lie in (0, 1)".into(),
        ));
    }
    let mut by_type: BTreeMap<&'static str, Vec<usize>> = BTreeMap::new();
    for (i, s) in specs.iter().enumerate() {
        by_type.entry(s.type_tag()).or_default().push(i);
    }
    let total_train = (specs.len() as f64 * train_frac).floor() as usize;
    // Largest-remainder apportionment of the train quota across types.
    let quotas: Vec<(&str, f64)> = by_type
        .iter()
        .map(|(t, v)| (*t, v.len() as f64 * train_frac))
        .collect();
    let mut counts: Vec<usize> = quotas.iter().map(|(_, q)| q.floor() as usize).collect();
    let mut short = total_train - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a].1 - quotas[a].1.floor();
        let rb = quotas[b].1 - quotas[b].1.floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &k in &order {
        if short == 0 {
            break;
        }
        counts[k] += 1;
        short -= 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (k, (_, indices)) in by_type.iter().enumerate() {
        let mut idx = indices.clone();
        idx.shuffle(&mut rng);
        train.extend_from_slice(&idx[..counts[k]]);
        val.extend_from_slice(&idx[counts[k]..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

// -- case-file persistence ----------------------------------------------------
//
// Format `WPB1`: UTF-8 header terminated by a blank line, followed by
// IEEE-754 64-bit little-endian arrays in header order.
//
//   WPB1
//   id <case id>
//   spec <wall spec line>
//   dt <seconds>
//   array scattered <receivers> <steps>
//   array freespace <receivers> <steps>
//   <blank line>
//   <binary payload>

const CASE_MAGIC: &str = "WPB1";

pub fn write_case(path: &Path, case: &Case) -> Result<(), PipelineError> {
    let mut header = String::new();
    header.push_str(CASE_MAGIC);
    header.push('\n');
    header.push_str(&format!("id {}\n", case.id));
    header.push_str(&format!("spec {}\n", case.spec));
    header.push_str(&format!("dt {:e}\n", case.dt));
    header.push_str(&format!(
        "array scattered {} {}\n",
        case.scattered.len(),
        case.scattered.first().map_or(0, |s| s.len())
    ));
    header.push_str(&format!(
        "array freespace {} {}\n",
        case.freespace.len(),
        case.freespace.first().map_or(0, |s| s.len())
    ));
    header.push('\n');
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(header.as_bytes())?;
    for series in case.scattered.iter().chain(case.freespace.iter()) {
        for &v in series {
            f.write_all(&v.to_le_bytes())?;
        }
    }
    f.flush()?;
    Ok(())
}

pub fn read_case(path: &Path) -> Result<Case, PipelineError> {
    let bytes = std::fs::read(path)?;
    let ctx = path.display().to_string();
    // Header ends at the first blank line.
    let header_end = bytes
        .windows(2)
        .position(|w| w == b"\n\n")
        .ok_or_else(|| parse_err(&ctx, "missing header terminator"))?;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|e| parse_err(&ctx, format!("header is not UTF-8: {e}")))?;
    let mut lines = header.lines().enumerate();
    let (_, magic) = lines
        .next()
        .ok_or_else(|| parse_err(&ctx, "empty header"))?;
    if magic != CASE_MAGIC {
        return Err(PipelineError::UnsupportedVersion(magic.to_string()));
    }
    let mut id = None;
    let mut spec = None;
    let mut dt = None;
    let mut arrays: Vec<(String, usize, usize)> = Vec::new();
    for (ln, line) in lines {
        let at = format!("{ctx}:{}", ln + 1);
        let (key, rest) = line
            .split_once(' ')
            .ok_or_else(|| parse_err(&at, "malformed header line"))?;
        match key {
            "id" => id = Some(rest.to_string()),
            "spec" => {
                spec = Some(
                    rest.parse::<WallSpec>()
                        .map_err(|e| parse_err(&at, e.to_string()))?,
                )
            }
            "dt" => {
                dt = Some(
                    rest.parse::<f64>()
                        .map_err(|e| parse_err(&at, format!("bad dt: {e}")))?,
                )
            }
            "array" => {
                let fields: Vec<&str> = rest.split(' ').collect();
                if fields.len() != 3 {
                    return Err(parse_err(&at, "array descriptor needs name rows cols"));
                }
                let rows = fields[1]
                    .parse()
                    .map_err(|e| parse_err(&at, format!("bad row count: {e}")))?;
                let cols = fields[2]
                    .parse()
                    .map_err(|e| parse_err(&at, format!("bad col count: {e}")))?;
                arrays.push((fields[0].to_string(), rows, cols));
            }
            other => return Err(parse_err(&at, format!("unknown header key {other:?}"))),
        }
    }
    let id = id.ok_or_else(|| parse_err(&ctx, "missing id"))?;
    let spec = spec.ok_or_else(|| parse_err(&ctx, "missing spec"))?;
    let dt = dt.ok_or_else(|| parse_err(&ctx, "missing dt"))?;

    let mut payload = &bytes[header_end + 2..];
    let expected: usize = arrays.iter().map(|(_, r, c)| r * c * 8).sum();
    if payload.len() != expected {
        return Err(parse_err(
            &ctx,
            format!(
                "payload is {} bytes at offset {}, expected {expected}",
                payload.len(),
                header_end + 2
            ),
        ));
    }
    let mut read_array = |rows: usize, cols: usize| -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(rows);
        for _ in 0..rows {
            let mut row = Vec::with_capacity(cols);
            for _ in 0..cols {
                let mut buf = [0u8; 8];
                buf.copy_from_slice(&payload[..8]);
                payload = &payload[8..];
                row.push(f64::from_le_bytes(buf));
            }
            out.push(row);
        }
        out
    };
    let mut scattered = None;
    let mut freespace = None;
    for (name, rows, cols) in &arrays {
        let data = read_array(*rows, *cols);
        match name.as_str() {
            "scattered" => scattered = Some(data),
            "freespace" => freespace = Some(data),
            other => return Err(parse_err(&ctx, format!("unknown array {other:?}"))),
        }
    }
    Ok(Case {
        id,
        spec,
        dt,
        scattered: scattered.ok_or_else(|| parse_err(&ctx, "missing scattered array"))?,
        freespace: freespace.ok_or_else(|| parse_err(&ctx, "missing freespace array"))?,
    })
}

// -- dataset directory + manifest ---------------------------------------------

/// Manifest row: case id, wall type, spec line and split membership.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub spec: WallSpec,
    pub split: Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
}

impl Split {
    fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
        }
    }
}

/// Writes `manifest.csv` to the dataset directory.
pub fn write_manifest(dir: &Path, entries: &[ManifestEntry]) -> Result<(), PipelineError> {
    let mut out = String::from("id,type,split,spec\n");
    for e in entries {
        out.push_str(&format!(
            "{},{},{},\"{}\"\n",
            e.id,
            e.spec.type_tag(),
            e.split.as_str(),
            e.spec
        ));
    }
    std::fs::write(dir.join("manifest.csv"), out)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>, PipelineError> {
    let path = dir.join("manifest.csv");
    let text = std::fs::read_to_string(&path)?;
    let ctx = path.display().to_string();
    let mut entries = Vec::new();
    for (ln, line) in text.lines().enumerate().skip(1) {
        let at = format!("{ctx}:{}", ln + 1);
        let fields: Vec<&str> = line.splitn(4, ',').collect();
        if fields.len() != 4 {
            return Err(parse_err(&at, "expected 4 fields"));
        }
        let split = match fields[2] {
            "train" => Split::Train,
            "validation" => Split::Validation,
            other => return Err(parse_err(&at, format!("unknown split {other:?}"))),
        };
        let spec_line = fields[3].trim_matches('"');
        entries.push(ManifestEntry {
            id: fields[0].to_string(),
            spec: spec_line
                .parse()
                .map_err(|e: crate::wall::WallError| parse_err(&at, e.to_string()))?,
            split,
        });
    }
    Ok(entries)
}

/// Relative path of a case file inside a dataset directory.
pub fn case_rel_path(spec: &WallSpec, id: &str) -> std::path::PathBuf {
    Path::new(spec.type_tag()).join(format!("{id}.wpb"))
}

/// Reads every case listed in the manifest; returns (entry, case) pairs.
pub fn read_dataset(dir: &Path) -> Result<Vec<(ManifestEntry, Case)>, PipelineError> {
    let entries = read_manifest(dir)?;
    let mut out = Vec::with_capacity(entries.len());
    for e in entries {
        let case = read_case(&dir.join(case_rel_path(&e.spec, &e.id)))?;
        out.push((e, case));
    }
    Ok(out)
}
