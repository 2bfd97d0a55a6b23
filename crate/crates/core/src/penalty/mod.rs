//! Similarity losses, their closed-form gradients, and the combined update.
//!
//! A step's output `y` is pushed away from references cached from earlier
//! branches by subtracting weighted, normalized penalty gradients:
//!
//! ```text
//! y_hat = y - (w_local * Norm(g_local) + w_global * Norm(g_global))
//! Norm(g) = (g - mean(g)) / sqrt(var(g) + eps)
//! ```
//!
//! Language models use the softmax repulsion gradient for the local term and
//! the hidden-state argmax reference projected through the output matrix for
//! the global term. Latent models use cosine similarity on the latent for the
//! local term and an embedding-space cosine for the global term, both applied
//! to the predicted noise as if the Jacobian were the identity.

mod embed;
mod flops;

pub use embed::{embedding_penalty_gradient, Embedder};
pub use flops::{flops_estimate, FlopsBreakdown};

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result, UagError};
use crate::schedule::StepWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Max,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocalSimilarity {
    #[default]
    Dot,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlobalSimilarity {
    #[default]
    Dot,
    Embedding,
}

fn default_epsilon() -> f64 {
    1e-5
}

fn default_gradient_aggregation() -> Aggregation {
    Aggregation::Mean
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyConfig {
    /// Stabilizer inside the normalization square root.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Reduction over the output bank when reporting the local loss.
    #[serde(default)]
    pub local_aggregation: Aggregation,
    /// Reduction over the hidden/embedding bank when reporting the global loss.
    #[serde(default)]
    pub global_aggregation: Aggregation,
    /// Reduction over the output bank inside the repulsion gradient.
    #[serde(default = "default_gradient_aggregation")]
    pub gradient_aggregation: Aggregation,
    #[serde(default)]
    pub sim_local: LocalSimilarity,
    #[serde(default)]
    pub sim_global: GlobalSimilarity,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self::language_model()
    }
}

impl PenaltyConfig {
    /// Dot-product similarities for token distributions and hidden states.
    pub fn language_model() -> Self {
        Self {
            epsilon: default_epsilon(),
            local_aggregation: Aggregation::Max,
            global_aggregation: Aggregation::Max,
            gradient_aggregation: Aggregation::Mean,
            sim_local: LocalSimilarity::Dot,
            sim_global: GlobalSimilarity::Dot,
        }
    }

    /// Cosine on latents, embedding cosine for the global term.
    pub fn latent() -> Self {
        Self { sim_local: LocalSimilarity::Cosine, sim_global: GlobalSimilarity::Embedding, ..Self::language_model() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(UagError::InvalidConfig(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Output projection `y = W h + b`, `W` stored as `vocab x hidden`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputProjection {
    pub w: Array2<f64>,
    pub b: Vec<f64>,
}

impl OutputProjection {
    pub fn new(w: Array2<f64>, b: Vec<f64>) -> Result<Self> {
        check_len(w.nrows(), b.len())?;
        Ok(Self { w, b })
    }

    pub fn output_size(&self) -> usize {
        self.w.nrows()
    }

    pub fn hidden_size(&self) -> usize {
        self.w.ncols()
    }

    /// `W h + b`.
    pub fn apply(&self, h: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.project(h)?;
        y.iter_mut().zip(&self.b).for_each(|(y, b)| *y += b);
        Ok(y)
    }

    /// `W v`, no bias.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.hidden_size(), v.len())?;
        Ok(self.w.dot(&ArrayView1::from(v)).to_vec())
    }
}

/// One row of the per-step trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UagStepRecord {
    pub step: usize,
    pub loss_local: f64,
    pub loss_global: f64,
    pub loss_total: f64,
    pub w_local: f64,
    pub w_global: f64,
    pub flops: u64,
}

impl UagStepRecord {
    pub fn new(step: usize, loss_local: f64, loss_global: f64, weights: StepWeights) -> Self {
        Self {
            step,
            loss_local,
            loss_global,
            loss_total: weights.w_local * loss_local + weights.w_global * loss_global,
            w_local: weights.w_local,
            w_global: weights.w_global,
            flops: 0,
        }
    }

    /// Record for a step where no penalty was evaluated.
    pub fn inactive(step: usize, weights: StepWeights) -> Self {
        Self::new(step, 0.0, 0.0, weights)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(UagError::NonFinite(what))
    }
}

fn aggregate(values: impl Iterator<Item = f64>, how: Aggregation) -> f64 {
    let mut count = 0usize;
    let mut acc = match how {
        Aggregation::Max => f64::NEG_INFINITY,
        Aggregation::Mean => 0.0,
    };
    for v in values {
        count += 1;
        acc = match how {
            Aggregation::Max => acc.max(v),
            Aggregation::Mean => acc + v,
        };
    }
    match (count, how) {
        (0, _) => 0.0,
        (_, Aggregation::Max) => acc,
        (n, Aggregation::Mean) => acc / n as f64,
    }
}

/// Index of the largest score; the lowest index wins ties.
fn argmax(scores: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.enumerate() {
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

fn check_bank<T: AsRef<[f64]>>(dim: usize, bank: &[T]) -> Result<()> {
    bank.iter().try_for_each(|b| check_len(dim, b.as_ref().len()))
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
    out
}

/// Aggregated `softmax(logits) . q` over the output bank; zero for an empty bank.
pub fn local_loss_softmax<T: AsRef<[f64]>>(logits: &[f64], out_bank: &[T], cfg: &PenaltyConfig) -> Result<f64> {
    check_bank(logits.len(), out_bank)?;
    if out_bank.is_empty() {
        return Ok(0.0);
    }
    let p = softmax(logits);
    Ok(aggregate(out_bank.iter().map(|q| dot(&p, q.as_ref())), cfg.local_aggregation))
}

/// Gradient of the mean dot-product similarity w.r.t. the logits:
/// `(1/N) sum_r (p * q_r - (p . q_r) p)`.
pub fn repulsion_gradient<T: AsRef<[f64]>>(logits: &[f64], out_bank: &[T]) -> Result<Vec<f64>> {
    repulsion_gradient_with(logits, out_bank, Aggregation::Mean)
}

/// Repulsion gradient under either reduction. `Max` differentiates only the
/// most similar reference.
pub fn repulsion_gradient_with<T: AsRef<[f64]>>(logits: &[f64], out_bank: &[T], how: Aggregation) -> Result<Vec<f64>> {
    if out_bank.is_empty() {
        return Err(UagError::NoReferences);
    }
    check_bank(logits.len(), out_bank)?;
    let p = softmax(logits);
    let single = |q: &[f64]| -> Vec<f64> {
        let pq = dot(&p, q);
        p.iter().zip(q).map(|(pi, qi)| pi * qi - pq * pi).collect()
    };
    match how {
        Aggregation::Max => {
            let best = argmax(out_bank.iter().map(|q| dot(&p, q.as_ref()))).expect("bank is nonempty");
            Ok(single(out_bank[best].as_ref()))
        }
        Aggregation::Mean => {
            let n = out_bank.len() as f64;
            let mut grad = vec![0.0; p.len()];
            for q in out_bank {
                grad.iter_mut().zip(single(q.as_ref())).for_each(|(g, s)| *g += s / n);
            }
            Ok(grad)
        }
    }
}

/// Aggregated `<h, b>` over the hidden bank; zero for an empty bank.
pub fn global_loss_hidden<T: AsRef<[f64]>>(h: &[f64], hid_bank: &[T], cfg: &PenaltyConfig) -> Result<f64> {
    check_bank(h.len(), hid_bank)?;
    Ok(aggregate(hid_bank.iter().map(|b| dot(h, b.as_ref())), cfg.global_aggregation))
}

/// `W b*` with `b* = argmax_b <h, b>`: the hidden-state gradient carried into
/// logit space through the output matrix.
pub fn hidden_gradient_projected<T: AsRef<[f64]>>(h: &[f64], hid_bank: &[T], proj: &OutputProjection) -> Result<Vec<f64>> {
    if hid_bank.is_empty() {
        return Err(UagError::NoReferences);
    }
    check_bank(h.len(), hid_bank)?;
    let best = argmax(hid_bank.iter().map(|b| dot(h, b.as_ref()))).expect("bank is nonempty");
    proj.project(hid_bank[best].as_ref())
}

pub(crate) fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(UagError::ZeroNorm);
    }
    Ok(dot(a, b) / (na * nb))
}

fn cosines<T: AsRef<[f64]>>(z: &[f64], bank: &[T]) -> Result<Vec<f64>> {
    check_bank(z.len(), bank)?;
    bank.iter().map(|y| cosine(z, y.as_ref())).collect()
}

/// Aggregated cosine between `z` and each bank latent; zero for an empty bank.
pub fn latent_cosine_loss<T: AsRef<[f64]>>(z: &[f64], latent_bank: &[T], cfg: &PenaltyConfig) -> Result<f64> {
    if latent_bank.is_empty() {
        return Ok(0.0);
    }
    Ok(aggregate(cosines(z, latent_bank)?.into_iter(), cfg.local_aggregation))
}

/// `d cos(z, y*) / dz` at the most cosine-similar bank latent `y*`.
pub fn latent_cosine_gradient<T: AsRef<[f64]>>(z: &[f64], latent_bank: &[T]) -> Result<Vec<f64>> {
    if latent_bank.is_empty() {
        return Err(UagError::NoReferences);
    }
    let cos = cosines(z, latent_bank)?;
    let best = argmax(cos.iter().copied()).expect("bank is nonempty");
    Ok(cosine_gradient(z, latent_bank[best].as_ref(), cos[best]))
}

/// `y / (|z||y|) - cos(z, y) z / |z|^2`; norms are nonzero by construction.
pub(crate) fn cosine_gradient(z: &[f64], y: &[f64], cos: f64) -> Vec<f64> {
    let (nz, ny) = (norm(z), norm(y));
    let a = 1.0 / (nz * ny);
    let b = cos / (nz * nz);
    z.iter().zip(y).map(|(zi, yi)| a * yi - b * zi).collect()
}

/// `(g - mean(g)) / sqrt(var(g) + epsilon)` with population variance.
pub fn normalize_gradient(g: &[f64], epsilon: f64) -> Vec<f64> {
    if g.is_empty() {
        return Vec::new();
    }
    let n = g.len() as f64;
    let mean = g.iter().sum::<f64>() / n;
    let var = g.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let scale = 1.0 / (var + epsilon).sqrt();
    g.iter().map(|x| (x - mean) * scale).collect()
}

/// `y - (w_local * g_local + w_global * g_global)`.
pub fn apply_uag(y: &[f64], g_local: &[f64], g_global: &[f64], weights: StepWeights) -> Result<Vec<f64>> {
    check_len(y.len(), g_local.len())?;
    check_len(y.len(), g_global.len())?;
    Ok(y.iter()
        .zip(g_local)
        .zip(g_global)
        .map(|((y, l), g)| y - (weights.w_local * l + weights.w_global * g))
        .collect())
}

/// Evaluates the language-model step loss at unmodified logits and hidden state.
pub fn uag_loss_value<T: AsRef<[f64]>, U: AsRef<[f64]>>(
    step: usize,
    logits: &[f64],
    hidden: &[f64],
    out_bank: &[T],
    hid_bank: &[U],
    cfg: &PenaltyConfig,
    weights: StepWeights,
) -> Result<UagStepRecord> {
    check_finite(logits, "logits")?;
    check_finite(hidden, "hidden state")?;
    let local = local_loss_softmax(logits, out_bank, cfg)?;
    let global = global_loss_hidden(hidden, hid_bank, cfg)?;
    Ok(UagStepRecord::new(step, local, global, weights))
}

/// Latent-model counterpart of [`uag_loss_value`]: cosine on the latent and
/// embedding cosine on the decoded latent.
#[allow(clippy::too_many_arguments)]
pub fn uag_loss_value_latent<T: AsRef<[f64]>, U: AsRef<[f64]>>(
    step: usize,
    latent: &[f64],
    decoded: &[f64],
    latent_bank: &[T],
    embed_bank: &[U],
    embedder: &Embedder,
    cfg: &PenaltyConfig,
    weights: StepWeights,
) -> Result<UagStepRecord> {
    check_finite(latent, "latent")?;
    let local = latent_cosine_loss(latent, latent_bank, cfg)?;
    let global = embedder.loss(decoded, embed_bank, cfg)?;
    Ok(UagStepRecord::new(step, local, global, weights))
}

/// Smooth logit-space objective whose exact gradient is the raw (unnormalized)
/// combined penalty direction for a language-model step:
///
/// ```text
/// F(y) = w_local * mean_r softmax(y) . q_r + w_global * <y - b, W b*>
/// ```
///
/// `b*` is fixed at the argmax for the step's hidden state, so the global term
/// is linear in `y` with gradient `W b*`. Used to check that a small gradient
/// step lowers the penalty.
#[derive(Debug, Clone)]
pub struct LogitObjective {
    out_bank: Vec<Vec<f64>>,
    bias: Vec<f64>,
    projected_ref: Option<Vec<f64>>,
    weights: StepWeights,
}

impl LogitObjective {
    pub fn new<T: AsRef<[f64]>, U: AsRef<[f64]>>(
        hidden: &[f64],
        out_bank: &[T],
        hid_bank: &[U],
        proj: &OutputProjection,
        weights: StepWeights,
    ) -> Result<Self> {
        check_bank(proj.output_size(), out_bank)?;
        let projected_ref = if hid_bank.is_empty() {
            None
        } else {
            Some(hidden_gradient_projected(hidden, hid_bank, proj)?)
        };
        Ok(Self {
            out_bank: out_bank.iter().map(|q| q.as_ref().to_vec()).collect(),
            bias: proj.b.clone(),
            projected_ref,
            weights,
        })
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        let local = if self.out_bank.is_empty() {
            0.0
        } else {
            let p = softmax(y);
            self.out_bank.iter().map(|q| dot(&p, q)).sum::<f64>() / self.out_bank.len() as f64
        };
        let global = self.projected_ref.as_ref().map_or(0.0, |r| {
            y.iter().zip(&self.bias).zip(r).map(|((y, b), r)| (y - b) * r).sum::<f64>()
        });
        self.weights.w_local * local + self.weights.w_global * global
    }

    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let mut g = if self.out_bank.is_empty() {
            vec![0.0; y.len()]
        } else {
            repulsion_gradient(y, &self.out_bank).expect("dimensions checked at construction")
        };
        g.iter_mut().for_each(|x| *x *= self.weights.w_local);
        if let Some(r) = &self.projected_ref {
            g.iter_mut().zip(r).for_each(|(x, r)| *x += self.weights.w_global * r);
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    const EMPTY: [[f64; 2]; 0] = [];

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
        assert!(close(&softmax(&[7.5; 4]), &[0.25; 4], 1e-15));
        assert!(close(&softmax(&[1f64.ln(), 3f64.ln()]), &[0.25, 0.75], 1e-15));
        let big = softmax(&[1000.0, 0.0]);
        assert!(big.iter().all(|p| p.is_finite()));
    }

    #[test]
    fn local_loss_examples() {
        let cfg = PenaltyConfig::default();
        assert_eq!(local_loss_softmax(&[0.0, 0.0], &EMPTY, &cfg).unwrap(), 0.0);
        assert_eq!(local_loss_softmax(&[0.0, 0.0], &[[1.0, 0.0]], &cfg).unwrap(), 0.5);
        let bank = [[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(local_loss_softmax(&[0.0, 0.0], &bank, &cfg).unwrap(), 0.5);
        let mean = PenaltyConfig { local_aggregation: Aggregation::Mean, ..cfg };
        assert_eq!(local_loss_softmax(&[0.0, 0.0], &bank, &mean).unwrap(), 0.5);
        assert!(matches!(
            local_loss_softmax(&[0.0, 0.0], &[vec![1.0, 0.0, 0.0]], &cfg),
            Err(UagError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn repulsion_examples() {
        assert!(close(&repulsion_gradient(&[2.0; 3], &[[1.0 / 3.0; 3]]).unwrap(), &[0.0; 3], 1e-15));
        assert!(close(&repulsion_gradient(&[0.0, 0.0], &[[1.0, 0.0]]).unwrap(), &[0.25, -0.25], 1e-15));
        assert_eq!(repulsion_gradient(&[0.0, 0.0], &EMPTY), Err(UagError::NoReferences));

        let y = [0.3, -1.2, 0.8];
        let (q1, q2) = ([0.2, 0.5, 0.3], [0.6, 0.1, 0.3]);
        let g1 = repulsion_gradient(&y, &[q1]).unwrap();
        let g2 = repulsion_gradient(&y, &[q2]).unwrap();
        let avg: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| 0.5 * (a + b)).collect();
        assert!(close(&repulsion_gradient(&y, &[q1, q2]).unwrap(), &avg, 1e-15));
    }

    #[test]
    fn repulsion_max_uses_most_similar_reference() {
        let y = [0.3, -1.2, 0.8];
        let bank = [[0.9, 0.05, 0.05], [0.1, 0.1, 0.8]];
        let single = repulsion_gradient(&y, &bank[1..]).unwrap();
        assert_eq!(repulsion_gradient_with(&y, &bank, Aggregation::Max).unwrap(), single);
    }

    #[test]
    fn global_loss_examples() {
        let cfg = PenaltyConfig::default();
        assert_eq!(global_loss_hidden(&[1.0, 0.0], &EMPTY, &cfg).unwrap(), 0.0);
        assert_eq!(global_loss_hidden(&[1.0, 0.0], &[[0.0, 1.0], [1.0, 0.0]], &cfg).unwrap(), 1.0);
        assert_eq!(global_loss_hidden(&[2.0, 1.0], &[[1.0, 1.0], [0.0, 3.0]], &cfg).unwrap(), 3.0);
    }

    #[test]
    fn hidden_projection_examples() {
        let id = OutputProjection::new(Array2::eye(2), vec![0.0, 0.0]).unwrap();
        assert_eq!(hidden_gradient_projected(&[0.4, 0.1], &[[3.0, -2.0]], &id).unwrap(), vec![3.0, -2.0]);
        assert_eq!(hidden_gradient_projected(&[1.0, 0.0], &[[0.0, 1.0], [1.0, 0.0]], &id).unwrap(), vec![1.0, 0.0]);
        let twice = OutputProjection::new(array![[2.0, 0.0], [0.0, 2.0]], vec![0.0, 0.0]).unwrap();
        assert_eq!(hidden_gradient_projected(&[1.0, 1.0], &[[1.0, 0.0]], &twice).unwrap(), vec![2.0, 0.0]);
        // Tie between both references: the first one wins.
        assert_eq!(hidden_gradient_projected(&[2.0, 1.0], &[[1.0, 1.0], [0.0, 3.0]], &id).unwrap(), vec![1.0, 1.0]);
        assert_eq!(hidden_gradient_projected(&[1.0, 0.0], &EMPTY, &id), Err(UagError::NoReferences));
    }

    #[test]
    fn latent_cosine_examples() {
        let cfg = PenaltyConfig::latent();
        assert!((latent_cosine_loss(&[0.3, -0.7], &[[0.3, -0.7]], &cfg).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(latent_cosine_loss(&[1.0, 0.0], &[[0.0, 2.0]], &cfg).unwrap(), 0.0);
        let v = latent_cosine_loss(&[1.0, 1.0], &[[1.0, 0.0], [0.0, -1.0]], &cfg).unwrap();
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(latent_cosine_loss(&[1.0, 1.0], &EMPTY, &cfg).unwrap(), 0.0);
        assert_eq!(latent_cosine_loss(&[0.0, 0.0], &[[1.0, 0.0]], &cfg), Err(UagError::ZeroNorm));
        assert_eq!(latent_cosine_loss(&[1.0, 0.0], &[[0.0, 0.0]], &cfg), Err(UagError::ZeroNorm));
    }

    #[test]
    fn latent_gradient_examples() {
        // Orthogonal: only the first term survives.
        let g = latent_cosine_gradient(&[2.0, 0.0], &[[0.0, 3.0]]).unwrap();
        assert!(close(&g, &[0.0, 3.0 / 6.0], 1e-15));
        // Parallel: the gradient vanishes.
        let g = latent_cosine_gradient(&[1.5, -3.0], &[[0.5, -1.0]]).unwrap();
        assert!(close(&g, &[0.0, 0.0], 1e-15));
        let g = latent_cosine_gradient(&[1.0, 0.0], &[[1.0, 1.0]]).unwrap();
        assert!(close(&g, &[0.0, std::f64::consts::FRAC_1_SQRT_2], 1e-15));
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_gradient(&[3.0; 5], 1e-5), vec![0.0; 5]);
        assert!(close(&normalize_gradient(&[1.0, -1.0], 1e-300), &[1.0, -1.0], 1e-12));
        assert!(close(&normalize_gradient(&[2.0, 0.0], 1e-300), &[1.0, -1.0], 1e-12));
        assert!(normalize_gradient(&[], 1e-5).is_empty());
    }

    #[test]
    fn apply_examples() {
        let y = [1.0, 1.0];
        assert_eq!(apply_uag(&y, &[0.0; 2], &[0.0; 2], StepWeights::new(3.0, 2.0)).unwrap(), y.to_vec());
        assert_eq!(apply_uag(&y, &[5.0, -1.0], &[1.0, 2.0], StepWeights::ZERO).unwrap(), y.to_vec());
        assert_eq!(apply_uag(&y, &[1.0, -1.0], &[0.0, 0.0], StepWeights::new(0.5, 0.0)).unwrap(), vec![0.5, 1.5]);
        assert!(apply_uag(&y, &[1.0], &[0.0, 0.0], StepWeights::ZERO).is_err());
    }

    #[test]
    fn loss_value_examples() {
        let cfg = PenaltyConfig::default();
        let rec = uag_loss_value(3, &[0.1, 0.2], &[1.0], &EMPTY, &[[0.0; 1]; 0], &cfg, StepWeights::new(1.0, 1.0)).unwrap();
        assert_eq!((rec.loss_local, rec.loss_global, rec.loss_total), (0.0, 0.0, 0.0));

        let rec = uag_loss_value(1, &[0.0, 0.0], &[1.0], &[[1.0, 0.0]], &[[4.0]], &cfg, StepWeights::new(1.0, 0.0)).unwrap();
        assert_eq!(rec.loss_total, rec.loss_local);
        assert_eq!(rec.loss_local, 0.5);
        assert_eq!(rec.loss_global, 4.0);
    }

    #[test]
    fn logit_objective_gradient_matches_components() {
        let proj = OutputProjection::new(array![[1.0, 0.5], [-0.3, 0.2], [0.0, 1.0]], vec![0.1, 0.0, -0.2]).unwrap();
        let out_bank = [[0.2, 0.3, 0.5]];
        let hid_bank = [[1.0, -1.0], [0.5, 0.5]];
        let w = StepWeights::new(0.7, 0.2);
        let obj = LogitObjective::new(&[1.0, 2.0], &out_bank, &hid_bank, &proj, w).unwrap();
        let y = [0.4, -0.1, 0.9];
        let expected: Vec<f64> = repulsion_gradient(&y, &out_bank)
            .unwrap()
            .iter()
            .zip(hidden_gradient_projected(&[1.0, 2.0], &hid_bank, &proj).unwrap())
            .map(|(l, g)| 0.7 * l + 0.2 * g)
            .collect();
        assert!(close(&obj.gradient(&y), &expected, 1e-15));
    }
}
