//! Adversarial and plain-regression inversion networks: four GAN variants
//! plus FC-NN/CNN baselines mapping scattered-field vectors to 32x32
//! dielectric profiles.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::nn::{
    load_network, save_network, Activation, AdamState, LayerSpec, Mode, Network, NnError,
    ParamGrads, Scalar, Tensor,
};
use crate::pipeline::{make_latent, LATENT_FREQ, LATENT_TIME};
use crate::wall::{DielectricProfile, WallError, PROFILE_SIZE};

pub const PROFILE_LEN: usize = PROFILE_SIZE * PROFILE_SIZE;
/// Default affine map between relative permittivity and tanh range.
pub const EPS_MIN: f64 = 1.0;
pub const EPS_MAX: f64 = 8.0;
/// Sigmoid outputs are clamped into [CLAMP, 1-CLAMP] before any log.
pub const CLAMP: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum GanError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("training diverged (non-finite loss) at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Wall(#[from] WallError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Model selector: four adversarial variants and three regression baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GanVariant {
    GanAnnF,
    GanAnnT,
    GanCnnF,
    GanCnnT,
    FcnnF,
    FcnnT,
    CnnT,
}

impl GanVariant {
    pub const ALL: [GanVariant; 7] = [
        GanVariant::GanAnnF,
        GanVariant::GanAnnT,
        GanVariant::GanCnnF,
        GanVariant::GanCnnT,
        GanVariant::FcnnF,
        GanVariant::FcnnT,
        GanVariant::CnnT,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            GanVariant::GanAnnF => "gan-annf",
            GanVariant::GanAnnT => "gan-annt",
            GanVariant::GanCnnF => "gan-cnnf",
            GanVariant::GanCnnT => "gan-cnnt",
            GanVariant::FcnnF => "fcnn-f",
            GanVariant::FcnnT => "fcnn-t",
            GanVariant::CnnT => "cnn-t",
        }
    }

    /// True for the adversarial variants (a discriminator exists).
    pub fn is_gan(self) -> bool {
        matches!(
            self,
            GanVariant::GanAnnF | GanVariant::GanAnnT | GanVariant::GanCnnF | GanVariant::GanCnnT
        )
    }

    /// True for time-pipeline variants (520-length field vectors).
    pub fn is_time(self) -> bool {
        matches!(
            self,
            GanVariant::GanAnnT | GanVariant::GanCnnT | GanVariant::FcnnT | GanVariant::CnnT
        )
    }

    /// Length of the scattered-field part of the input vector.
    pub fn field_len(self) -> usize {
        if self.is_time() {
            520
        } else {
            20
        }
    }

    /// Latent noise length appended to the field input (0 for baselines).
    pub fn latent_len(self) -> usize {
        if !self.is_gan() {
            0
        } else if self.is_time() {
            LATENT_TIME
        } else {
            LATENT_FREQ
        }
    }

    /// Full generator input length (field + latent).
    pub fn input_len(self) -> usize {
        self.field_len() + self.latent_len()
    }
}

impl fmt::Display for GanVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for GanVariant {
    type Err = GanError;

    fn from_str(s: &str) -> Result<Self, GanError> {
        GanVariant::ALL
            .into_iter()
            .find(|v| v.tag() == s)
            .ok_or_else(|| GanError::InvalidArgument(format!("unknown model tag {s:?}")))
    }
}

const LEAKY: Activation = Activation::LeakyRelu(0.2);

fn dense(out: usize, activation: Activation, dropout: f64) -> LayerSpec {
    LayerSpec::Dense {
        out,
        activation,
        dropout,
    }
}

/// Layer stacks for a variant's generator and (for GANs) discriminator.
/// `dropout` applies to hidden layers only; output layers never drop.
pub fn build_networks(
    variant: GanVariant,
    dropout: f64,
) -> (Vec<LayerSpec>, Option<Vec<LayerSpec>>) {
    let ann_d = vec![
        dense(512, LEAKY, dropout),
        dense(256, LEAKY, dropout),
        dense(1, Activation::Sigmoid, 0.0),
    ];
    let cnn_d = vec![
        LayerSpec::Conv {
            filters: 128,
            kernel: (3, 3),
            stride: (2, 2),
            activation: LEAKY,
            dropout,
        },
        LayerSpec::Conv {
            filters: 128,
            kernel: (3, 3),
            stride: (2, 2),
            activation: LEAKY,
            dropout,
        },
        LayerSpec::Flatten,
        dense(1, Activation::Sigmoid, 0.0),
    ];
    let ann_f_g = vec![
        dense(256, LEAKY, dropout),
        dense(512, LEAKY, dropout),
        dense(PROFILE_LEN, Activation::Tanh, 0.0),
    ];
    let ann_t_g = vec![
        dense(512, LEAKY, dropout),
        dense(768, LEAKY, dropout),
        dense(PROFILE_LEN, Activation::Tanh, 0.0),
    ];
    let cnn_f_g = vec![
        dense(128 * 8 * 8, LEAKY, dropout),
        LayerSpec::Reshape {
            shape: vec![128, 8, 8],
        },
        LayerSpec::TConv {
            filters: 128,
            kernel: (4, 4),
            stride: (2, 2),
            activation: LEAKY,
            dropout,
        },
        LayerSpec::TConv {
            filters: 128,
            kernel: (4, 4),
            stride: (2, 2),
            activation: LEAKY,
            dropout,
        },
        LayerSpec::Conv {
            filters: 1,
            kernel: (3, 3),
            stride: (1, 1),
            activation: Activation::Tanh,
            dropout: 0.0,
        },
    ];
    let cnn_t_g = vec![
        dense(128 * 16 * 16, LEAKY, dropout),
        LayerSpec::Reshape {
            shape: vec![128, 16, 16],
        },
        LayerSpec::TConv {
            filters: 128,
            kernel: (5, 5),
            stride: (1, 1),
            activation: LEAKY,
            dropout,
        },
        LayerSpec::TConv {
            filters: 128,
            kernel: (3, 3),
            stride: (2, 2),
            activation: LEAKY,
            dropout,
        },
        LayerSpec::Conv {
            filters: 1,
            kernel: (3, 3),
            stride: (1, 1),
            activation: Activation::Tanh,
            dropout: 0.0,
        },
    ];
    match variant {
        GanVariant::GanAnnF => (ann_f_g, Some(ann_d)),
        GanVariant::GanAnnT => (ann_t_g, Some(ann_d)),
        GanVariant::GanCnnF => (cnn_f_g, Some(cnn_d)),
        GanVariant::GanCnnT => (cnn_t_g, Some(cnn_d)),
        GanVariant::FcnnF => (ann_f_g, None),
        GanVariant::FcnnT => (ann_t_g, None),
        GanVariant::CnnT => (cnn_t_g, None),
    }
}

/// Per-item discriminator input shape; CNN discriminators see the profile
/// as a one-channel image.
pub fn discriminator_input_shape(variant: GanVariant) -> Option<Vec<usize>> {
    match variant {
        GanVariant::GanAnnF | GanVariant::GanAnnT => Some(vec![PROFILE_LEN]),
        GanVariant::GanCnnF | GanVariant::GanCnnT => Some(vec![1, PROFILE_SIZE, PROFILE_SIZE]),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub dropout: f64,
    pub seed: u64,
    /// Literal minimax generator loss instead of the default
    /// non-saturating form.
    pub minimax_generator: bool,
    /// Weight of the pixel-MSE reconstruction term added to the generator
    /// loss (0 = pure adversarial game). The discriminator judges profiles
    /// without seeing the field input, so the adversarial term alone carries
    /// no per-sample correspondence pressure; the reconstruction term
    /// supplies it, with the discriminator shaping the output distribution.
    pub g_mse_weight: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1000,
            batch: 16,
            lr: 2e-4,
            dropout: 0.2,
            seed: 0,
            minimax_generator: false,
            g_mse_weight: 300.0,
        }
    }
}

/// One training example: unscaled field vector plus the 1024-value target
/// permittivity profile in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSample {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub d_loss: f64,
    pub g_loss: f64,
    pub val_nmse: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochStats>,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,d_loss,g_loss,val_nmse\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{:.17e},{:.17e},{:.17e}\n",
                e.epoch, e.d_loss, e.g_loss, e.val_nmse
            ));
        }
        out
    }
}

/// A trained model plus everything inference needs: normalization scale,
/// permittivity affine map, and the config it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub variant: GanVariant,
    pub generator: Network<f64>,
    pub discriminator: Option<Network<f64>>,
    /// Field inputs are divided by this before entering the generator.
    pub input_scale: f64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub config: TrainConfig,
}

fn eps_to_tanh(eps: f64, lo: f64, hi: f64) -> f64 {
    2.0 * (eps - lo) / (hi - lo) - 1.0
}

fn tanh_to_eps(t: f64, lo: f64, hi: f64) -> f64 {
    (lo + (t + 1.0) / 2.0 * (hi - lo)).max(1.0)
}

impl ModelBundle {
    /// Deterministic single-draw inference: scale the field vector, append
    /// latent noise from `latent_seed`, run the generator in eval mode and
    /// map the tanh output back to permittivities.
    pub fn infer(&self, field: &[f64], latent_seed: u64) -> Result<DielectricProfile, GanError> {
        // The generator may have been trained on truncated field vectors
        // (receiver subsets), so the expected length comes from its input
        // shape rather than the variant default.
        let expected = self.generator.input_shape().iter().product::<usize>()
            - self.variant.latent_len();
        if field.len() != expected {
            return Err(GanError::InvalidArgument(format!(
                "input length {} does not match {} (expects {})",
                field.len(),
                self.variant,
                expected
            )));
        }
        let mut v: Vec<f64> = field.iter().map(|&x| x / self.input_scale).collect();
        v.extend(make_latent(self.variant.latent_len(), latent_seed));
        let x = Tensor::from_vec(&[1, v.len()], v).map_err(GanError::from)?;
        let y = self.generator.infer(&x)?;
        let vals: Vec<f64> = y
            .data
            .iter()
            .map(|&t| tanh_to_eps(t, self.eps_min, self.eps_max))
            .collect();
        Ok(DielectricProfile::from_values(vals)?)
    }

    /// Mean profile over `k` latent draws seeded from `latent_seed`
    /// (off-by-default averaging mode).
    pub fn infer_mean(
        &self,
        field: &[f64],
        latent_seed: u64,
        k: usize,
    ) -> Result<DielectricProfile, GanError> {
        if k == 0 {
            return Err(GanError::InvalidArgument("k must be >= 1".into()));
        }
        let mut acc = vec![0.0f64; PROFILE_LEN];
        for d in 0..k as u64 {
            let p = self.infer(field, latent_seed.wrapping_add(d))?;
            for (a, &v) in acc.iter_mut().zip(p.values()) {
                *a += v;
            }
        }
        for a in &mut acc {
            *a /= k as f64;
        }
        Ok(DielectricProfile::from_values(acc)?)
    }

    pub fn save<W: Write>(&self, mut out: W) -> Result<(), GanError> {
        let mut g_buf = Vec::new();
        save_network(&self.generator, &mut g_buf)?;
        let mut d_buf = Vec::new();
        if let Some(d) = &self.discriminator {
            save_network(d, &mut d_buf)?;
        }
        let c = &self.config;
        write!(
            out,
            "WPM1\nvariant {}\ninput_scale {:.17e}\neps_map {:.17e} {:.17e}\n\
             config epochs={} batch={} lr={:.17e} dropout={:.17e} seed={} minimax={} mse_w={:.17e}\n\
             generator {}\ndiscriminator {}\n\n",
            self.variant,
            self.input_scale,
            self.eps_min,
            self.eps_max,
            c.epochs,
            c.batch,
            c.lr,
            c.dropout,
            c.seed,
            c.minimax_generator as u8,
            c.g_mse_weight,
            g_buf.len(),
            d_buf.len(),
        )?;
        out.write_all(&g_buf)?;
        out.write_all(&d_buf)?;
        Ok(())
    }

    pub fn save_to_path(&self, path: &std::path::Path) -> Result<(), GanError> {
        let f = std::fs::File::create(path)?;
        self.save(std::io::BufWriter::new(f))
    }

    pub fn load<R: Read>(src: R) -> Result<Self, GanError> {
        let mut r = BufReader::new(src);
        let mut line = String::new();
        let mut next = |r: &mut BufReader<R>| -> Result<String, GanError> {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(GanError::Parse("unexpected end of bundle header".into()));
            }
            Ok(line.trim_end_matches(['\r', '\n']).to_string())
        };
        if next(&mut r)? != "WPM1" {
            return Err(GanError::Parse("not a model bundle".into()));
        }
        let field = |l: &str, key: &str| -> Result<String, GanError> {
            l.strip_prefix(key)
                .and_then(|s| s.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| GanError::Parse(format!("expected `{key}` line, got {l:?}")))
        };
        let variant: GanVariant = field(&next(&mut r)?, "variant")?.parse()?;
        let input_scale: f64 = field(&next(&mut r)?, "input_scale")?
            .parse()
            .map_err(|e| GanError::Parse(format!("bad input_scale: {e}")))?;
        let eps_line = field(&next(&mut r)?, "eps_map")?;
        let mut it = eps_line.split_whitespace();
        let eps_min: f64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| GanError::Parse("bad eps_map".into()))?;
        let eps_max: f64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| GanError::Parse("bad eps_map".into()))?;
        let cfg_line = field(&next(&mut r)?, "config")?;
        let mut config = TrainConfig::default();
        for kv in cfg_line.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| GanError::Parse(format!("bad config field {kv:?}")))?;
            let bad = || GanError::Parse(format!("bad config value {kv:?}"));
            match k {
                "epochs" => config.epochs = v.parse().map_err(|_| bad())?,
                "batch" => config.batch = v.parse().map_err(|_| bad())?,
                "lr" => config.lr = v.parse().map_err(|_| bad())?,
                "dropout" => config.dropout = v.parse().map_err(|_| bad())?,
                "seed" => config.seed = v.parse().map_err(|_| bad())?,
                "minimax" => config.minimax_generator = v == "1",
                "mse_w" => config.g_mse_weight = v.parse().map_err(|_| bad())?,
                _ => return Err(GanError::Parse(format!("unknown config field {k:?}"))),
            }
        }
        let g_len: usize = field(&next(&mut r)?, "generator")?
            .parse()
            .map_err(|e| GanError::Parse(format!("bad generator length: {e}")))?;
        let d_len: usize = field(&next(&mut r)?, "discriminator")?
            .parse()
            .map_err(|e| GanError::Parse(format!("bad discriminator length: {e}")))?;
        if !next(&mut r)?.is_empty() {
            return Err(GanError::Parse("expected blank line after header".into()));
        }
        let mut g_buf = vec![0u8; g_len];
        r.read_exact(&mut g_buf)
            .map_err(|_| GanError::Parse("truncated generator checkpoint".into()))?;
        let mut d_buf = vec![0u8; d_len];
        r.read_exact(&mut d_buf)
            .map_err(|_| GanError::Parse("truncated discriminator checkpoint".into()))?;
        let generator = load_network::<f64, _>(&g_buf[..])?;
        let discriminator = if d_len > 0 {
            Some(load_network::<f64, _>(&d_buf[..])?)
        } else {
            None
        };
        Ok(ModelBundle {
            variant,
            generator,
            discriminator,
            input_scale,
            eps_min,
            eps_max,
            config,
        })
    }

    pub fn load_from_path(path: &std::path::Path) -> Result<Self, GanError> {
        Self::load(std::fs::File::open(path)?)
    }
}

/// Converts any-precision network weights to an f64 network via the
/// (lossless for f32) checkpoint representation.
fn to_f64_network<T: Scalar>(net: &Network<T>) -> Result<Network<f64>, NnError> {
    let mut buf = Vec::new();
    save_network(net, &mut buf)?;
    load_network::<f64, _>(&buf[..])
}

fn add_grads<T: Scalar>(into: &mut ParamGrads<T>, other: &ParamGrads<T>) {
    for (a, b) in into.iter_mut().zip(other) {
        for (ta, tb) in a.iter_mut().zip(b) {
            for (va, &vb) in ta.data.iter_mut().zip(&tb.data) {
                *va += vb;
            }
        }
    }
}

/// Binary cross-entropy pieces of the Eq.-style value function; returns
/// (loss contribution, d loss / d score) with probabilities clamped.
fn bce_terms(p: f64, real: bool, inv_batch: f64) -> (f64, f64) {
    let pc = p.clamp(CLAMP, 1.0 - CLAMP);
    if real {
        (-pc.ln() * inv_batch, -inv_batch / pc)
    } else {
        (-(1.0 - pc).ln() * inv_batch, inv_batch / (1.0 - pc))
    }
}

struct BatchData<T> {
    g_in: Tensor<T>,
    target_tanh: Tensor<T>,
}

fn gather_batch<T: Scalar>(
    variant: GanVariant,
    in_len: usize,
    samples: &[&TrainSample],
    scale: f64,
    latent_rng: &mut ChaCha8Rng,
    eps_lo: f64,
    eps_hi: f64,
) -> BatchData<T> {
    use rand::Rng;
    let b = samples.len();
    let mut g_in = Vec::with_capacity(b * in_len);
    let mut tgt = Vec::with_capacity(b * PROFILE_LEN);
    for s in samples {
        g_in.extend(s.input.iter().map(|&v| T::from_f64(v / scale)));
        if variant.latent_len() > 0 {
            let seed: u64 = latent_rng.gen();
            g_in.extend(
                make_latent(variant.latent_len(), seed)
                    .into_iter()
                    .map(T::from_f64),
            );
        }
        tgt.extend(
            s.target
                .iter()
                .map(|&e| T::from_f64(eps_to_tanh(e, eps_lo, eps_hi))),
        );
    }
    BatchData {
        g_in: Tensor::from_vec(&[b, in_len], g_in).expect("sized above"),
        target_tanh: Tensor::from_vec(&[b, PROFILE_LEN], tgt).expect("sized above"),
    }
}

/// Validates sample shapes and returns the shared field length. The
/// standard length is `variant.field_len()`, but shorter vectors are
/// accepted so receiver-subset studies can retrain on truncated inputs;
/// every sample must agree.
fn validate_sets(
    variant: GanVariant,
    train_set: &[TrainSample],
    val_set: &[TrainSample],
) -> Result<usize, GanError> {
    if train_set.is_empty() {
        return Err(GanError::InvalidArgument("empty training set".into()));
    }
    let field_len = train_set[0].input.len();
    if field_len == 0 || field_len > variant.field_len() {
        return Err(GanError::InvalidArgument(format!(
            "input length {field_len} outside 1..={} for {}",
            variant.field_len(),
            variant
        )));
    }
    for (name, set) in [("train", train_set), ("val", val_set)] {
        for (i, s) in set.iter().enumerate() {
            if s.input.len() != field_len {
                return Err(GanError::InvalidArgument(format!(
                    "{name} sample {i}: input length {} does not match the set's {field_len}",
                    s.input.len(),
                )));
            }
            if s.target.len() != PROFILE_LEN {
                return Err(GanError::InvalidArgument(format!(
                    "{name} sample {i}: target length {} != {PROFILE_LEN}",
                    s.target.len()
                )));
            }
        }
    }
    Ok(field_len)
}

/// Trains a variant. GANs play the two-network game (simultaneous SGD,
/// one D step then one G step per batch); baselines minimize pixel MSE.
/// The returned bundle holds the generator from the epoch with the lowest
/// validation NMSE (the full per-epoch curve is in the log). Heavy variants
/// should use `T = f32`; the bundle is always f64.
pub fn train<T: Scalar>(
    variant: GanVariant,
    train_set: &[TrainSample],
    val_set: &[TrainSample],
    config: &TrainConfig,
) -> Result<(ModelBundle, TrainLog), GanError> {
    let field_len = validate_sets(variant, train_set, val_set)?;
    let in_len = field_len + variant.latent_len();
    if config.batch == 0 || config.epochs == 0 {
        return Err(GanError::InvalidArgument(
            "batch and epochs must be >= 1".into(),
        ));
    }
    // Standardize field inputs to unit RMS over the training set so they
    // enter the first layer on the same scale as the unit-variance latent
    // draws; normalizing by the peak instead leaves the fields an order of
    // magnitude quieter than the noise channels.
    let n_vals = (train_set.len() * field_len).max(1) as f64;
    let scale = (train_set
        .iter()
        .flat_map(|s| s.input.iter())
        .map(|&v| v * v)
        .sum::<f64>()
        / n_vals)
        .sqrt()
        .max(1e-300);
    let (g_specs, d_specs) = build_networks(variant, config.dropout);
    let mut g = Network::<T>::new(&[in_len], &g_specs, config.seed ^ 0x11)?;
    let mut d = match &d_specs {
        Some(specs) => Some(Network::<T>::new(
            &discriminator_input_shape(variant).expect("gan variant"),
            specs,
            config.seed ^ 0x22,
        )?),
        None => None,
    };
    let mut g_opt = AdamState::new(&g, config.lr);
    let mut d_opt = d.as_ref().map(|d| AdamState::new(d, config.lr));

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x33);
    let mut latent_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x44);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut log = TrainLog::default();
    let mut best_nmse = f64::INFINITY;
    let mut best_g: Option<Network<T>> = None;
    let d_shape = discriminator_input_shape(variant);

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_d = 0.0;
        let mut epoch_g = 0.0;
        let mut batches = 0usize;
        for (batch_idx, chunk) in order.chunks(config.batch).enumerate() {
            let samples: Vec<&TrainSample> = chunk.iter().map(|&i| &train_set[i]).collect();
            let b = samples.len();
            let inv_b = 1.0 / b as f64;
            let data = gather_batch::<T>(
                variant,
                in_len,
                &samples,
                scale,
                &mut latent_rng,
                EPS_MIN,
                EPS_MAX,
            );
            let drop_seed = (config.seed ^ 0x55)
                .wrapping_add((epoch as u64) << 20)
                .wrapping_add(batch_idx as u64);
            let (fake, g_cache) = g.forward(&data.g_in, Mode::Train, drop_seed)?;
            // Per-item flat view of generator output and targets.
            let flat_fake = fake.clone().reshaped(&[b, PROFILE_LEN])?;

            let (d_loss, g_loss);
            if let (Some(d_net), Some(d_opt)) = (d.as_mut(), d_opt.as_mut()) {
                let shape = {
                    let mut s = vec![b];
                    s.extend_from_slice(d_shape.as_ref().unwrap());
                    s
                };
                let real_in = data.target_tanh.clone().reshaped(&shape)?;
                let fake_in = flat_fake.clone().reshaped(&shape)?;

                // Discriminator ascent step on log D(real) + log(1-D(fake)).
                let (p_real, c_real) =
                    d_net.forward(&real_in, Mode::Train, drop_seed ^ 0x66)?;
                let (p_fake, c_fake) =
                    d_net.forward(&fake_in, Mode::Train, drop_seed ^ 0x77)?;
                let mut loss = 0.0;
                let mut dp_real = vec![T::zero(); b];
                let mut dp_fake = vec![T::zero(); b];
                for i in 0..b {
                    let (l, dl) = bce_terms(p_real.data[i].to_f64(), true, inv_b);
                    loss += l;
                    dp_real[i] = T::from_f64(dl);
                    let (l, dl) = bce_terms(p_fake.data[i].to_f64(), false, inv_b);
                    loss += l;
                    dp_fake[i] = T::from_f64(dl);
                }
                let (mut grads, _) =
                    d_net.backward(&c_real, &Tensor::from_vec(&[b, 1], dp_real)?)?;
                let (g2, _) = d_net.backward(&c_fake, &Tensor::from_vec(&[b, 1], dp_fake)?)?;
                add_grads(&mut grads, &g2);
                d_opt.apply(d_net, &grads)?;
                d_loss = loss;

                // Generator step against the updated discriminator.
                let (p, c_g) = d_net.forward(&fake_in, Mode::Train, drop_seed ^ 0x88)?;
                let mut loss = 0.0;
                let mut dp = vec![T::zero(); b];
                for i in 0..b {
                    let pc = p.data[i].to_f64().clamp(CLAMP, 1.0 - CLAMP);
                    if config.minimax_generator {
                        loss += (1.0 - pc).ln() * inv_b;
                        dp[i] = T::from_f64(-inv_b / (1.0 - pc));
                    } else {
                        loss += -pc.ln() * inv_b;
                        dp[i] = T::from_f64(-inv_b / pc);
                    }
                }
                let (_, mut d_fake) = d_net.backward(&c_g, &Tensor::from_vec(&[b, 1], dp)?)?;
                if config.g_mse_weight > 0.0 {
                    let w = T::from_f64(2.0 * config.g_mse_weight * inv_b / PROFILE_LEN as f64);
                    let mut mse = 0.0;
                    for i in 0..d_fake.data.len() {
                        let diff = flat_fake.data[i] - data.target_tanh.data[i];
                        mse += (diff * diff).to_f64();
                        d_fake.data[i] += w * diff;
                    }
                    loss += config.g_mse_weight * mse * inv_b / PROFILE_LEN as f64;
                }
                let dy = d_fake.reshaped(&fake.shape)?;
                let (g_grads, _) = g.backward(&g_cache, &dy)?;
                g_opt.apply(&mut g, &g_grads)?;
                g_loss = loss;
            } else {
                // Baseline: plain pixel MSE regression.
                let mut loss = 0.0;
                let w = T::from_f64(2.0 * inv_b / PROFILE_LEN as f64);
                let mut dy = Tensor::zeros(&fake.shape);
                for i in 0..dy.data.len() {
                    let diff = flat_fake.data[i] - data.target_tanh.data[i];
                    loss += (diff * diff).to_f64();
                    dy.data[i] = w * diff;
                }
                loss *= inv_b / PROFILE_LEN as f64;
                let (g_grads, _) = g.backward(&g_cache, &dy)?;
                g_opt.apply(&mut g, &g_grads)?;
                d_loss = 0.0;
                g_loss = loss;
            }
            if !d_loss.is_finite() || !g_loss.is_finite() {
                return Err(GanError::Divergence {
                    epoch,
                    batch: batch_idx,
                });
            }
            epoch_d += d_loss;
            epoch_g += g_loss;
            batches += 1;
        }
        let val_nmse = if val_set.is_empty() {
            f64::NAN
        } else {
            validation_nmse(&g, variant, val_set, scale, config.seed)?
        };
        // Keep the generator from the best validation epoch: adversarial
        // validation curves oscillate, so the final epoch is a poor
        // estimator of the model actually learned.
        if val_nmse < best_nmse {
            best_nmse = val_nmse;
            best_g = Some(g.clone());
        }
        log.epochs.push(EpochStats {
            epoch,
            d_loss: epoch_d / batches as f64,
            g_loss: epoch_g / batches as f64,
            val_nmse,
        });
    }

    let bundle = ModelBundle {
        variant,
        generator: to_f64_network(best_g.as_ref().unwrap_or(&g))?,
        discriminator: match &d {
            Some(d) => Some(to_f64_network(d)?),
            None => None,
        },
        input_scale: scale,
        eps_min: EPS_MIN,
        eps_max: EPS_MAX,
        config: config.clone(),
    };
    Ok((bundle, log))
}

/// Single-latent-draw mean NMSE of a generator over a validation set.
fn validation_nmse<T: Scalar>(
    g: &Network<T>,
    variant: GanVariant,
    val_set: &[TrainSample],
    scale: f64,
    seed: u64,
) -> Result<f64, GanError> {
    let in_len = g.input_shape().iter().product();
    let mut data = Vec::with_capacity(val_set.len() * in_len);
    for (i, s) in val_set.iter().enumerate() {
        data.extend(s.input.iter().map(|&v| T::from_f64(v / scale)));
        if variant.latent_len() > 0 {
            data.extend(
                make_latent(variant.latent_len(), seed.wrapping_add(i as u64))
                    .into_iter()
                    .map(T::from_f64),
            );
        }
    }
    let x = Tensor::from_vec(&[val_set.len(), in_len], data)?;
    let y = g.infer(&x)?;
    let mut total = 0.0;
    for (i, s) in val_set.iter().enumerate() {
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, &truth) in s.target.iter().enumerate() {
            let est = tanh_to_eps(
                y.data[i * PROFILE_LEN + j].to_f64(),
                EPS_MIN,
                EPS_MAX,
            );
            num += (truth - est) * (truth - est);
            den += truth * truth;
        }
        total += num / den;
    }
    Ok(total / val_set.len() as f64)
}
