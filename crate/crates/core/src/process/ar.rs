//! Autoregressive toy language models.

use std::path::Path;

use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::tokenizer::Tokenizer;
use crate::error::{Result, UagError};
use crate::penalty::{softmax, OutputProjection};

/// A step-wise language model: `(logits, hidden) = step(hidden, last_token)`,
/// with `logits = W hidden + b` through [`LanguageModel::projection`].
pub trait LanguageModel: Send + Sync {
    fn vocab_size(&self) -> usize;
    fn hidden_size(&self) -> usize;
    fn projection(&self) -> &OutputProjection;
    fn tokenizer(&self) -> &Tokenizer;
    fn initial_hidden(&self) -> Vec<f64>;
    /// Advance one token; returns the logits and the new hidden state.
    fn step(&self, hidden: &[f64], last_token: usize) -> Result<(Vec<f64>, Vec<f64>)>;
    /// Operation count of one [`LanguageModel::step`].
    fn step_flops(&self) -> u64;
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || scale * rng.sample::<f64, _>(StandardNormal))
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn default_logit_scale() -> f64 {
    4.0
}

fn default_recur_gain() -> f64 {
    1.0
}

fn default_bias_scale() -> f64 {
    1.0
}

/// Construction parameters for [`ToyArModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyArSpec {
    pub vocab_size: usize,
    pub hidden_size: usize,
    pub seed: u64,
    /// Gain on the output matrix; larger values give peakier next-token distributions.
    #[serde(default = "default_logit_scale")]
    pub logit_scale: f64,
    /// Gain on the recurrent matrix.
    #[serde(default = "default_recur_gain")]
    pub recur_gain: f64,
    /// Standard deviation of the output bias.
    #[serde(default = "default_bias_scale")]
    pub bias_scale: f64,
}

impl ToyArSpec {
    pub fn new(vocab_size: usize, hidden_size: usize, seed: u64) -> Self {
        Self {
            vocab_size,
            hidden_size,
            seed,
            logit_scale: default_logit_scale(),
            recur_gain: default_recur_gain(),
            bias_scale: default_bias_scale(),
        }
    }
}

/// Seeded recurrent model:
///
/// ```text
/// h' = tanh(R h + E[last_token])
/// y  = W h' + b
/// ```
///
/// `R` and `W` are Gaussian scaled by `1/sqrt(hidden_size)` (times their
/// gains), `E` is standard Gaussian. Everything is drawn from one ChaCha8
/// stream in the order `E, R, W, b, h0`, so the seed fully determines the model.
#[derive(Debug, Clone)]
pub struct ToyArModel {
    pub spec: ToyArSpec,
    pub token_embed: Array2<f64>,
    pub recur: Array2<f64>,
    pub proj: OutputProjection,
    pub init_hidden: Vec<f64>,
    tokenizer: Tokenizer,
}

impl ToyArModel {
    pub fn new(spec: ToyArSpec) -> Result<Self> {
        let (v, d) = (spec.vocab_size, spec.hidden_size);
        if v == 0 || d == 0 {
            return Err(UagError::InvalidConfig("vocab_size and hidden_size must be positive".into()));
        }
        if ![spec.logit_scale, spec.recur_gain, spec.bias_scale].iter().all(|x| x.is_finite()) {
            return Err(UagError::InvalidConfig("model gains must be finite".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let inv_sqrt = 1.0 / (d as f64).sqrt();
        let token_embed = gaussian_matrix(&mut rng, v, d, 1.0);
        let recur = gaussian_matrix(&mut rng, d, d, spec.recur_gain * inv_sqrt);
        let w = gaussian_matrix(&mut rng, v, d, spec.logit_scale * inv_sqrt);
        let b = gaussian_vec(&mut rng, v, spec.bias_scale);
        let init_hidden = gaussian_vec(&mut rng, d, 0.1);
        Ok(Self {
            spec,
            token_embed,
            recur,
            proj: OutputProjection::new(w, b)?,
            init_hidden,
            tokenizer: Tokenizer::synthetic(v),
        })
    }

    pub fn seeded(vocab_size: usize, hidden_size: usize, seed: u64) -> Result<Self> {
        Self::new(ToyArSpec::new(vocab_size, hidden_size, seed))
    }

    /// Model with explicit weights; the tokenizer is synthetic.
    pub fn from_parts(token_embed: Array2<f64>, recur: Array2<f64>, proj: OutputProjection, init_hidden: Vec<f64>) -> Result<Self> {
        let (v, d) = token_embed.dim();
        if recur.dim() != (d, d) || proj.hidden_size() != d || proj.output_size() != v || init_hidden.len() != d {
            return Err(UagError::InvalidConfig("inconsistent toy model dimensions".into()));
        }
        Ok(Self {
            spec: ToyArSpec { logit_scale: 1.0, recur_gain: 1.0, bias_scale: 0.0, ..ToyArSpec::new(v, d, 0) },
            token_embed,
            recur,
            proj,
            init_hidden,
            tokenizer: Tokenizer::synthetic(v),
        })
    }
}

impl LanguageModel for ToyArModel {
    fn vocab_size(&self) -> usize {
        self.spec.vocab_size
    }

    fn hidden_size(&self) -> usize {
        self.spec.hidden_size
    }

    fn projection(&self) -> &OutputProjection {
        &self.proj
    }

    fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    fn initial_hidden(&self) -> Vec<f64> {
        self.init_hidden.clone()
    }

    fn step(&self, hidden: &[f64], last_token: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        ar_step(self, hidden, last_token)
    }

    fn step_flops(&self) -> u64 {
        let (v, d) = (self.spec.vocab_size as u64, self.spec.hidden_size as u64);
        // R h, + E row, tanh, W h', + b
        2 * d * d + d + d + 2 * v * d + v
    }
}

/// One recurrence step of the toy model.
pub fn ar_step(model: &ToyArModel, hidden: &[f64], last_token: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let v = model.spec.vocab_size;
    if last_token >= v {
        return Err(UagError::TokenOutOfRange { token: last_token, vocab: v });
    }
    crate::error::check_len(model.spec.hidden_size, hidden.len())?;
    let pre = model.recur.dot(&ArrayView1::from(hidden)) + model.token_embed.row(last_token);
    let next: Vec<f64> = pre.iter().map(|x| x.tanh()).collect();
    let logits = model.proj.apply(&next)?;
    Ok((logits, next))
}

/// Draws a token from `softmax(logits / temperature)` with one uniform draw.
pub fn sample_token<R: Rng + ?Sized>(logits: &[f64], temperature: f64, rng: &mut R) -> Result<usize> {
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(UagError::InvalidConfig(format!("temperature must be > 0, got {temperature}")));
    }
    if logits.is_empty() {
        return Err(UagError::EmptySequence);
    }
    if !logits.iter().all(|x| x.is_finite()) {
        return Err(UagError::NonFinite("logits"));
    }
    let scaled: Vec<f64> = logits.iter().map(|x| x / temperature).collect();
    let probs = softmax(&scaled);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(i);
        }
    }
    // Rounding left the cumulative sum just below u; take the last nonzero entry.
    Ok(probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BigramFixture {
    vocab: Vec<String>,
    bigram: Vec<Vec<f64>>,
}

/// Log-probability floor for zero entries of a bigram table.
const BIGRAM_FLOOR: f64 = 1e-12;

/// Interpretable bigram table loaded from a fixture.
///
/// The hidden state is the one-hot encoding of the last token and the output
/// matrix holds the row-normalized log-probabilities (transposed), so logits
/// are `log P(next | last)` and the hidden-state penalty projects exactly
/// onto a previous branch's next-token log-probabilities.
#[derive(Debug, Clone)]
pub struct BigramModel {
    proj: OutputProjection,
    tokenizer: Tokenizer,
}

impl BigramModel {
    /// `table[i][j]` is a nonnegative weight for token `j` following token `i`.
    pub fn new(vocab: Vec<String>, table: Vec<Vec<f64>>) -> Result<Self> {
        let v = vocab.len();
        if v == 0 {
            return Err(UagError::InvalidConfig("bigram vocabulary is empty".into()));
        }
        if table.len() != v || table.iter().any(|row| row.len() != v) {
            return Err(UagError::InvalidConfig(format!("bigram table must be {v}x{v}")));
        }
        let mut w = Array2::zeros((v, v));
        for (prev, row) in table.iter().enumerate() {
            if row.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(UagError::InvalidConfig(format!("bigram row {prev} has a negative or non-finite weight")));
            }
            let sum: f64 = row.iter().sum();
            if sum <= 0.0 {
                return Err(UagError::InvalidConfig(format!("bigram row {prev} sums to zero")));
            }
            for (next, x) in row.iter().enumerate() {
                w[[next, prev]] = (x / sum).max(BIGRAM_FLOOR).ln();
            }
        }
        Ok(Self { proj: OutputProjection::new(w, vec![0.0; v])?, tokenizer: Tokenizer::new(vocab) })
    }

    /// Reads `{"vocab": [...], "bigram": [[...], ...]}`.
    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let fixture: BigramFixture = serde_json::from_str(text).map_err(|e| e.to_string())?;
        Self::new(fixture.vocab, fixture.bigram).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> std::result::Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_json(&text)
    }
}

impl LanguageModel for BigramModel {
    fn vocab_size(&self) -> usize {
        self.tokenizer.len()
    }

    fn hidden_size(&self) -> usize {
        self.tokenizer.len()
    }

    fn projection(&self) -> &OutputProjection {
        &self.proj
    }

    fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    fn initial_hidden(&self) -> Vec<f64> {
        vec![0.0; self.vocab_size()]
    }

    fn step(&self, hidden: &[f64], last_token: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let v = self.vocab_size();
        if last_token >= v {
            return Err(UagError::TokenOutOfRange { token: last_token, vocab: v });
        }
        crate::error::check_len(v, hidden.len())?;
        let mut next = vec![0.0; v];
        next[last_token] = 1.0;
        Ok((self.proj.w.column(last_token).to_vec(), next))
    }

    fn step_flops(&self) -> u64 {
        // column lookup
        self.vocab_size() as u64
    }
}
