use ndarray::{Array2, ArrayView1};

use super::{aggregate, argmax, check_bank, cosine, cosine_gradient, PenaltyConfig};
use crate::error::{check_len, Result, UagError};

/// Differentiable stand-in for an image encoder: `e(z) = tanh(U z + c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedder {
    /// `embed_dim x input_dim`.
    pub u: Array2<f64>,
    pub c: Vec<f64>,
}

impl Embedder {
    pub fn new(u: Array2<f64>, c: Vec<f64>) -> Result<Self> {
        check_len(u.nrows(), c.len())?;
        Ok(Self { u, c })
    }

    pub fn input_dim(&self) -> usize {
        self.u.ncols()
    }

    pub fn embed_dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn embed(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_len(self.input_dim(), z.len())?;
        let pre = self.u.dot(&ArrayView1::from(z));
        Ok(pre.iter().zip(&self.c).map(|(a, c)| (a + c).tanh()).collect())
    }

    /// Aggregated cosine between `e(z)` and each cached embedding; zero for an
    /// empty bank.
    pub fn loss<T: AsRef<[f64]>>(&self, z: &[f64], embed_bank: &[T], cfg: &PenaltyConfig) -> Result<f64> {
        if embed_bank.is_empty() {
            return Ok(0.0);
        }
        let e = self.embed(z)?;
        check_bank(e.len(), embed_bank)?;
        let cos: Vec<f64> = embed_bank.iter().map(|b| cosine(&e, b.as_ref())).collect::<Result<_>>()?;
        Ok(aggregate(cos.into_iter(), cfg.global_aggregation))
    }

    /// Gradient of `cos(e(z), e*)` w.r.t. `z`, `e*` the most similar cached
    /// embedding: `U^T diag(1 - e^2) grad_e cos`.
    pub fn gradient<T: AsRef<[f64]>>(&self, z: &[f64], embed_bank: &[T]) -> Result<Vec<f64>> {
        if embed_bank.is_empty() {
            return Err(UagError::NoReferences);
        }
        let e = self.embed(z)?;
        check_bank(e.len(), embed_bank)?;
        let cos: Vec<f64> = embed_bank.iter().map(|b| cosine(&e, b.as_ref())).collect::<Result<_>>()?;
        let best = argmax(cos.iter().copied()).expect("bank is nonempty");
        let grad_e = cosine_gradient(&e, embed_bank[best].as_ref(), cos[best]);
        let inner: Vec<f64> = grad_e.iter().zip(&e).map(|(g, e)| g * (1.0 - e * e)).collect();
        Ok(self.u.t().dot(&ArrayView1::from(&inner[..])).to_vec())
    }
}

/// Free-function form of [`Embedder::gradient`].
pub fn embedding_penalty_gradient<T: AsRef<[f64]>>(z: &[f64], embedder: &Embedder, embed_bank: &[T]) -> Result<Vec<f64>> {
    embedder.gradient(z, embed_bank)
}
