//! Step-wise generation with avoidance guidance across branches.
//!
//! Every model exposes one step `(y_t, state) = step(...)`. Before `y_t` is
//! sampled from (language models) or handed to the scheduler (latent models),
//! the penalty gradients against the banks of earlier branches are subtracted
//! from it. Branches run sequentially; each branch is committed to the banks
//! only after it finishes.

mod ar;
mod bank;
mod diffusion;
mod tokenizer;

pub use ar::{ar_step, sample_token, BigramModel, LanguageModel, ToyArModel, ToyArSpec};
pub use bank::ReferenceBankSet;
pub use diffusion::{ddim_step, DataMap, DdimSchedule, ToyDiffusion, ToyDiffusionSpec};
pub use tokenizer::Tokenizer;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result, UagError};
use crate::penalty::{
    apply_uag, flops_estimate, hidden_gradient_projected, latent_cosine_gradient, normalize_gradient,
    repulsion_gradient_with, softmax, uag_loss_value, uag_loss_value_latent, PenaltyConfig, UagStepRecord,
};
use crate::schedule::{schedule_weights, ScheduleParams, StepWeights};

/// How penalty gradients on the latent are mapped onto the predicted noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseJacobian {
    /// Apply latent gradients to the noise unchanged.
    Identity,
    /// Scale by the scheduler's derivative of the penalized quantity with
    /// respect to the noise: `d z_{t-1} / d eps` for the local term and
    /// `d x0_hat / d eps` for the global term.
    #[default]
    Scheduler,
}

fn default_bank_capacity() -> usize {
    64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    pub schedule: ScheduleParams,
    #[serde(default)]
    pub penalty: PenaltyConfig,
    pub temperature: f64,
    pub max_steps: usize,
    pub branches: usize,
    pub seed: u64,
    pub uag_enabled: bool,
    #[serde(default = "default_bank_capacity")]
    pub bank_capacity: usize,
    #[serde(default)]
    pub noise_jacobian: NoiseJacobian,
}

impl GenerationConfig {
    /// Logistic schedule tuned for language models, horizon `max_steps`.
    pub fn language_model(max_steps: usize, branches: usize, seed: u64) -> Self {
        Self {
            schedule: ScheduleParams::logistic(0.3395, 1.3339, 5.0, 0.5479, max_steps),
            penalty: PenaltyConfig::language_model(),
            temperature: 1.0,
            max_steps,
            branches,
            seed,
            uag_enabled: true,
            bank_capacity: default_bank_capacity(),
            noise_jacobian: NoiseJacobian::default(),
        }
    }

    /// Latent-model defaults; the transition center sits at the middle step.
    pub fn latent(max_steps: usize, branches: usize, seed: u64) -> Self {
        Self {
            schedule: ScheduleParams::logistic(1.0, 1.0, max_steps as f64 / 2.0, 0.5, max_steps),
            penalty: PenaltyConfig::latent(),
            ..Self::language_model(max_steps, branches, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.penalty.validate()?;
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(UagError::InvalidConfig(format!("temperature must be > 0, got {}", self.temperature)));
        }
        if self.branches == 0 {
            return Err(UagError::InvalidConfig("branches must be >= 1".into()));
        }
        if self.max_steps == 0 {
            return Err(UagError::InvalidConfig("max_steps must be >= 1".into()));
        }
        if self.schedule.horizon != self.max_steps {
            return Err(UagError::InvalidConfig(format!(
                "schedule horizon {} differs from max_steps {}",
                self.schedule.horizon, self.max_steps
            )));
        }
        if self.bank_capacity == 0 {
            return Err(UagError::InvalidConfig("bank_capacity must be >= 1".into()));
        }
        Ok(())
    }

    fn weights(&self, step: usize) -> Result<StepWeights> {
        if self.uag_enabled {
            schedule_weights(step, &self.schedule)
        } else {
            Ok(StepWeights::ZERO)
        }
    }

    /// Random stream of branch `index`.
    pub fn branch_rng(&self, index: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(index as u64))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchOutput {
    Tokens(Vec<usize>),
    Latent(Vec<f64>),
}

/// Per-step values kept for bank insertion and offline checks.
#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    /// Unmodified model output: logits, or predicted noise.
    pub raw_output: Vec<f64>,
    /// Hidden state after the step, or the latent entering it.
    pub state: Vec<f64>,
    /// Entry for the output bank (language models) or latent bank.
    pub bank_output: Vec<f64>,
    /// Entry for the hidden bank: hidden state, or decoded embedding.
    pub bank_state: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub index: usize,
    pub output: BranchOutput,
    pub trace: Vec<UagStepRecord>,
    pub steps: Vec<StepState>,
    /// Seconds.
    pub wall_time: f64,
    pub total_flops: u64,
}

impl Branch {
    pub fn tokens(&self) -> Option<&[usize]> {
        match &self.output {
            BranchOutput::Tokens(t) => Some(t),
            BranchOutput::Latent(_) => None,
        }
    }

    pub fn latent(&self) -> Option<&[f64]> {
        match &self.output {
            BranchOutput::Latent(z) => Some(z),
            BranchOutput::Tokens(_) => None,
        }
    }
}

fn zeros_or<F: FnOnce() -> Result<Vec<f64>>>(n: usize, nonempty: bool, eps: f64, scale: f64, f: F) -> Result<Vec<f64>> {
    if !nonempty {
        return Ok(vec![0.0; n]);
    }
    let mut g = f()?;
    if scale != 1.0 {
        g.iter_mut().for_each(|x| *x *= scale);
    }
    Ok(normalize_gradient(&g, eps))
}

/// Generates one language-model branch against fixed banks.
///
/// All prompt tokens but the last advance the hidden state first; the last
/// one (or token 0 for an empty prompt) feeds generation step 1.
pub fn generate_branch<M: LanguageModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    prompt: &[usize],
    cfg: &GenerationConfig,
    banks: &ReferenceBankSet,
    rng: &mut R,
) -> Result<Branch> {
    cfg.validate()?;
    let start = Instant::now();
    let v = model.vocab_size();
    let mut hidden = model.initial_hidden();
    let mut last = 0;
    if let Some((&tail, head)) = prompt.split_last() {
        for &tok in head {
            hidden = model.step(&hidden, tok)?.1;
        }
        last = tail;
    }
    let eps = cfg.penalty.epsilon;
    let mut tokens = Vec::with_capacity(cfg.max_steps);
    let mut trace = Vec::with_capacity(cfg.max_steps);
    let mut steps = Vec::with_capacity(cfg.max_steps);
    for t in 1..=cfg.max_steps {
        let (logits, next) = model.step(&hidden, last)?;
        let weights = cfg.weights(t)?;
        let (out_refs, hid_refs) = (banks.out_at(t), banks.hid_at(t));
        let active = cfg.uag_enabled && !(out_refs.is_empty() && hid_refs.is_empty());
        let (guided, record) = if active {
            let g_local = zeros_or(v, !out_refs.is_empty(), eps, 1.0, || {
                repulsion_gradient_with(&logits, out_refs, cfg.penalty.gradient_aggregation)
            })?;
            let g_global = zeros_or(v, !hid_refs.is_empty(), eps, 1.0, || {
                hidden_gradient_projected(&next, hid_refs, model.projection())
            })?;
            let guided = apply_uag(&logits, &g_local, &g_global, weights)?;
            let mut record = uag_loss_value(t, &logits, &next, out_refs, hid_refs, &cfg.penalty, weights)?;
            let cost = flops_estimate(v, model.hidden_size(), out_refs.len(), hid_refs.len(), &cfg.penalty);
            record.flops = model.step_flops() + cost.total();
            (guided, record)
        } else {
            let mut record = UagStepRecord::inactive(t, weights);
            record.flops = model.step_flops();
            (logits.clone(), record)
        };
        let token = sample_token(&guided, cfg.temperature, rng)?;
        steps.push(StepState {
            raw_output: logits,
            state: next.clone(),
            bank_output: softmax(&guided),
            bank_state: next.clone(),
        });
        trace.push(record);
        tokens.push(token);
        hidden = next;
        last = token;
    }
    Ok(Branch {
        index: 0,
        output: BranchOutput::Tokens(tokens),
        total_flops: trace.iter().map(|r| r.flops).sum(),
        trace,
        steps,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Generates one latent-model branch from seeded initial noise.
///
/// Generation step `k` runs the reverse diffusion step `t = T - k + 1`. The
/// local penalty compares the incoming latent with the latent bank; the global
/// penalty compares the embedding of the clean-latent estimate with the
/// embedding bank.
pub fn generate_branch_latent<R: Rng + ?Sized>(
    model: &ToyDiffusion,
    condition: &[f64],
    cfg: &GenerationConfig,
    banks: &ReferenceBankSet,
    rng: &mut R,
) -> Result<Branch> {
    cfg.validate()?;
    let total = model.steps();
    if cfg.max_steps != total {
        return Err(UagError::InvalidConfig(format!("max_steps {} differs from model steps {total}", cfg.max_steps)));
    }
    let m = model.latent_size();
    check_len(m, condition.len())?;
    let start = Instant::now();
    let eps = cfg.penalty.epsilon;
    let embedder = &model.embedder;
    let mut z: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let mut trace = Vec::with_capacity(total);
    let mut steps = Vec::with_capacity(total);
    for k in 1..=total {
        let t = total - k + 1;
        let noise = model.predict_noise(&z, t, condition)?;
        let x0 = model.schedule.predict_x0(&z, &noise, t)?;
        let embedding = embedder.embed(&x0)?;
        let weights = cfg.weights(k)?;
        let (lat_refs, emb_refs) = (banks.latent_at(k), banks.hid_at(k));
        let active = cfg.uag_enabled && !(lat_refs.is_empty() && emb_refs.is_empty());
        let (guided, record) = if active {
            let (s_local, s_global) = match cfg.noise_jacobian {
                NoiseJacobian::Identity => (1.0, 1.0),
                NoiseJacobian::Scheduler => {
                    (model.schedule.noise_sensitivity(t)?, model.schedule.x0_sensitivity(t)?)
                }
            };
            let g_local = zeros_or(m, !lat_refs.is_empty(), eps, s_local, || latent_cosine_gradient(&z, lat_refs))?;
            let g_global = zeros_or(m, !emb_refs.is_empty(), eps, s_global, || embedder.gradient(&x0, emb_refs))?;
            let guided = apply_uag(&noise, &g_local, &g_global, weights)?;
            let mut record = uag_loss_value_latent(k, &z, &x0, lat_refs, emb_refs, embedder, &cfg.penalty, weights)?;
            let cost = flops_estimate(m, embedder.embed_dim(), lat_refs.len(), emb_refs.len(), &cfg.penalty);
            record.flops = model.step_flops() + cost.total();
            (guided, record)
        } else {
            let mut record = UagStepRecord::inactive(k, weights);
            record.flops = model.step_flops();
            (noise.clone(), record)
        };
        let next = model.ddim_step(&z, &guided, t)?;
        if !next.iter().all(|x| x.is_finite()) {
            return Err(UagError::NonFinite("latent"));
        }
        steps.push(StepState { raw_output: noise, state: z.clone(), bank_output: z, bank_state: embedding });
        trace.push(record);
        z = next;
    }
    Ok(Branch {
        index: 0,
        output: BranchOutput::Latent(z),
        total_flops: trace.iter().map(|r| r.flops).sum(),
        trace,
        steps,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn run_branches<F>(cfg: &GenerationConfig, mut one: F) -> Result<Vec<Branch>>
where
    F: FnMut(&ReferenceBankSet, &mut ChaCha8Rng) -> Result<Branch>,
{
    cfg.validate()?;
    let mut banks = ReferenceBankSet::new(cfg.bank_capacity);
    let mut out = Vec::with_capacity(cfg.branches);
    for i in 0..cfg.branches {
        let mut rng = cfg.branch_rng(i);
        let mut branch = one(&banks, &mut rng)?;
        branch.index = i;
        banks.commit(&branch);
        out.push(branch);
    }
    Ok(out)
}

/// Sequential branches for one prompt; branch `i` sees branches `0..i`.
pub fn multi_branch<M: LanguageModel + ?Sized>(model: &M, prompt: &[usize], cfg: &GenerationConfig) -> Result<Vec<Branch>> {
    run_branches(cfg, |banks, rng| generate_branch(model, prompt, cfg, banks, rng))
}

/// Latent-model counterpart of [`multi_branch`].
pub fn multi_branch_latent(model: &ToyDiffusion, condition: &[f64], cfg: &GenerationConfig) -> Result<Vec<Branch>> {
    run_branches(cfg, |banks, rng| generate_branch_latent(model, condition, cfg, banks, rng))
}
