//! Deterministic latent diffusion toy.
//!
//! The data distribution is an affine map of standard normal noise,
//! `x = offset + scale * u` (elementwise scale), optionally shifted by a
//! prompt-dependent condition vector. Its noise predictor is the exact
//! posterior mean
//!
//! ```text
//! eps_hat(z, t) = sqrt(1 - a_t) (z - sqrt(a_t) mu) / (a_t scale^2 + 1 - a_t)
//! ```
//!
//! and sampling uses the deterministic DDIM update
//!
//! ```text
//! x0_hat  = (z - sqrt(1 - a_t) eps) / sqrt(a_t)
//! z_{t-1} = sqrt(a_{t-1}) x0_hat + sqrt(1 - a_{t-1}) eps
//! ```
//!
//! with `a_t` the cumulative alpha product and `a_0 = 1`.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result, UagError};
use crate::penalty::Embedder;

/// Training-time beta range and length of the scaled-linear schedule that the
/// inference steps subsample.
const BETA_START: f64 = 0.00085;
const BETA_END: f64 = 0.012;
const TRAIN_STEPS: usize = 1000;

/// Cumulative alpha products indexed by reverse-time step `0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DdimSchedule {
    alphas_bar: Vec<f64>,
}

impl DdimSchedule {
    /// Requires `alphas_bar[0] = 1` and every entry in `(0, 1]`.
    pub fn new(alphas_bar: Vec<f64>) -> Result<Self> {
        if alphas_bar.len() < 2 {
            return Err(UagError::InvalidConfig("schedule needs at least one step".into()));
        }
        if alphas_bar[0] != 1.0 {
            return Err(UagError::InvalidConfig("alphas_bar[0] must be 1".into()));
        }
        if alphas_bar.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
            return Err(UagError::InvalidConfig("alphas_bar entries must lie in (0, 1]".into()));
        }
        Ok(Self { alphas_bar })
    }

    /// `steps` evenly spaced points of the scaled-linear beta schedule.
    pub fn scaled_linear(steps: usize) -> Result<Self> {
        if steps == 0 || steps > TRAIN_STEPS {
            return Err(UagError::InvalidConfig(format!("steps must be in [1, {TRAIN_STEPS}]")));
        }
        let (lo, hi) = (BETA_START.sqrt(), BETA_END.sqrt());
        let mut cumulative = Vec::with_capacity(TRAIN_STEPS);
        let mut acc = 1.0;
        for i in 0..TRAIN_STEPS {
            let root = lo + (hi - lo) * i as f64 / (TRAIN_STEPS - 1) as f64;
            acc *= 1.0 - root * root;
            cumulative.push(acc);
        }
        let mut alphas_bar = vec![1.0];
        alphas_bar.extend((1..=steps).map(|k| cumulative[k * TRAIN_STEPS / steps - 1]));
        Self::new(alphas_bar)
    }

    pub fn steps(&self) -> usize {
        self.alphas_bar.len() - 1
    }

    pub fn alphas_bar(&self) -> &[f64] {
        &self.alphas_bar
    }

    fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps() {
            Err(UagError::StepOutOfRange { step: t, horizon: self.steps() })
        } else {
            Ok(())
        }
    }

    /// Clean-latent estimate implied by `predicted_noise` at step `t`.
    pub fn predict_x0(&self, z: &[f64], predicted_noise: &[f64], t: usize) -> Result<Vec<f64>> {
        self.check_step(t)?;
        check_len(z.len(), predicted_noise.len())?;
        let a = self.alphas_bar[t];
        let (sa, sb) = (a.sqrt(), (1.0 - a).sqrt());
        Ok(z.iter().zip(predicted_noise).map(|(z, e)| (z - sb * e) / sa).collect())
    }

    /// Deterministic DDIM update from step `t` to `t - 1`.
    pub fn step(&self, z: &[f64], predicted_noise: &[f64], t: usize) -> Result<Vec<f64>> {
        let x0 = self.predict_x0(z, predicted_noise, t)?;
        let prev = self.alphas_bar[t - 1];
        let (sa, sb) = (prev.sqrt(), (1.0 - prev).sqrt());
        Ok(x0.iter().zip(predicted_noise).map(|(x, e)| sa * x + sb * e).collect())
    }

    /// `d z_{t-1} / d eps`: the DDIM update is linear in the noise with this
    /// scalar coefficient.
    pub fn noise_sensitivity(&self, t: usize) -> Result<f64> {
        self.check_step(t)?;
        let (a, prev) = (self.alphas_bar[t], self.alphas_bar[t - 1]);
        Ok((1.0 - prev).sqrt() - (prev / a).sqrt() * (1.0 - a).sqrt())
    }

    /// `d x0_hat / d eps`.
    pub fn x0_sensitivity(&self, t: usize) -> Result<f64> {
        self.check_step(t)?;
        let a = self.alphas_bar[t];
        Ok(-((1.0 - a) / a).sqrt())
    }
}

/// Free-function form of [`DdimSchedule::step`].
pub fn ddim_step(z: &[f64], predicted_noise: &[f64], t: usize, schedule: &DdimSchedule) -> Result<Vec<f64>> {
    schedule.step(z, predicted_noise, t)
}

fn default_embed_dim() -> usize {
    8
}

fn default_data_spread() -> f64 {
    0.3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyDiffusionSpec {
    pub latent_size: usize,
    pub steps: usize,
    pub seed: u64,
    /// Output size of the embedding surrogate used by the global penalty.
    #[serde(default = "default_embed_dim")]
    pub embed_dim: usize,
    /// Typical per-coordinate spread of the data around its mean.
    #[serde(default = "default_data_spread")]
    pub data_spread: f64,
}

impl ToyDiffusionSpec {
    pub fn new(latent_size: usize, steps: usize, seed: u64) -> Self {
        Self { latent_size, steps, seed, embed_dim: default_embed_dim(), data_spread: default_data_spread() }
    }
}

/// Affine map from standard normal noise to data: `x = offset + scale * u`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMap {
    pub scale: Vec<f64>,
    pub offset: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ToyDiffusion {
    pub spec: ToyDiffusionSpec,
    pub schedule: DdimSchedule,
    pub score_weights: DataMap,
    pub embedder: Embedder,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// FNV-1a, used to derive stable per-word seeds for prompt conditioning.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

impl ToyDiffusion {
    /// Draws, in order from one ChaCha8 stream: offset, scale, embedder `U`, embedder `c`.
    pub fn new(spec: ToyDiffusionSpec) -> Result<Self> {
        let m = spec.latent_size;
        if m == 0 || spec.embed_dim == 0 {
            return Err(UagError::InvalidConfig("latent_size and embed_dim must be positive".into()));
        }
        if !(spec.data_spread > 0.0 && spec.data_spread.is_finite()) {
            return Err(UagError::InvalidConfig("data_spread must be > 0".into()));
        }
        let schedule = DdimSchedule::scaled_linear(spec.steps)?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let offset: Vec<f64> = (0..m).map(|_| gaussian(&mut rng)).collect();
        let scale: Vec<f64> = (0..m).map(|_| spec.data_spread * (0.5 + rng.random::<f64>())).collect();
        let inv_sqrt = 1.0 / (m as f64).sqrt();
        let u = Array2::from_shape_simple_fn((spec.embed_dim, m), || inv_sqrt * gaussian(&mut rng));
        let c: Vec<f64> = (0..spec.embed_dim).map(|_| 0.1 * gaussian(&mut rng)).collect();
        Self::from_parts(spec, schedule, DataMap { scale, offset }, Embedder::new(u, c)?)
    }

    pub fn from_parts(spec: ToyDiffusionSpec, schedule: DdimSchedule, score_weights: DataMap, embedder: Embedder) -> Result<Self> {
        let m = spec.latent_size;
        if schedule.steps() != spec.steps {
            return Err(UagError::InvalidConfig("schedule length does not match steps".into()));
        }
        if schedule.alphas_bar.windows(2).any(|w| w[1] >= w[0]) {
            return Err(UagError::InvalidConfig("alphas_bar must be strictly decreasing".into()));
        }
        check_len(m, score_weights.scale.len())?;
        check_len(m, score_weights.offset.len())?;
        check_len(m, embedder.input_dim())?;
        Ok(Self { spec, schedule, score_weights, embedder })
    }

    pub fn seeded(latent_size: usize, steps: usize, seed: u64) -> Result<Self> {
        Self::new(ToyDiffusionSpec::new(latent_size, steps, seed))
    }

    pub fn latent_size(&self) -> usize {
        self.spec.latent_size
    }

    pub fn steps(&self) -> usize {
        self.spec.steps
    }

    /// Prompt-dependent shift of the data mean: the average of per-word
    /// Gaussian vectors (seeded by the word and the model seed), scaled by 0.5.
    /// The empty prompt gives the zero vector.
    pub fn condition(&self, prompt: &str) -> Vec<f64> {
        let m = self.spec.latent_size;
        let words: Vec<&str> = prompt.split_whitespace().collect();
        let mut shift = vec![0.0; m];
        if words.is_empty() {
            return shift;
        }
        for w in &words {
            let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(w.as_bytes()) ^ self.spec.seed);
            shift.iter_mut().for_each(|s| *s += gaussian(&mut rng));
        }
        let k = 0.5 / words.len() as f64;
        shift.iter_mut().for_each(|s| *s *= k);
        shift
    }

    /// Exact posterior-mean noise prediction at reverse step `t`.
    pub fn predict_noise(&self, z: &[f64], t: usize, condition: &[f64]) -> Result<Vec<f64>> {
        self.schedule.check_step(t)?;
        check_len(self.spec.latent_size, z.len())?;
        check_len(self.spec.latent_size, condition.len())?;
        let a = self.schedule.alphas_bar[t];
        let (sa, sb) = (a.sqrt(), (1.0 - a).sqrt());
        let DataMap { scale, offset } = &self.score_weights;
        Ok(z.iter()
            .zip(scale)
            .zip(offset.iter().zip(condition))
            .map(|((z, s), (o, c))| sb * (z - sa * (o + c)) / (a * s * s + 1.0 - a))
            .collect())
    }

    pub fn ddim_step(&self, z: &[f64], predicted_noise: &[f64], t: usize) -> Result<Vec<f64>> {
        self.schedule.step(z, predicted_noise, t)
    }

    /// Operation count of one predict + DDIM update.
    pub fn step_flops(&self) -> u64 {
        9 * self.spec.latent_size as u64
    }
}
