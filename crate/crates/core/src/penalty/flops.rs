//! Closed-form operation count for one penalty step.
//!
//! Every multiply, add, exp, tanh, divide or square root counts as one
//! operation; comparisons are free. With `v` the output size (vocabulary or
//! latent length), `d` the hidden or embedding size, and `n_out`, `n_hid` the
//! bank sizes:
//!
//! | term           | dot / dot (language model)        | cosine / embedding (latent)     |
//! |----------------|-----------------------------------|---------------------------------|
//! | softmax        | `4v`                              | `0`                             |
//! | local gradient | `7 v n_out`                       | `4 v n_out + 6v` if `n_out > 0` |
//! | global gradient| `2 d n_hid + 2 v d` if `n_hid > 0`| `4 d v + 11 d + 4 d n_hid` if `n_hid > 0` |
//! | normalization  | `6v` per active gradient          | same                            |
//! | combine        | `2v` per active gradient          | same                            |
//!
//! The repulsion term is `p.q` (2v), `p*q` (v), `(p.q) p` (v), their
//! difference (v) and a weighted accumulate (2v) per reference.

use serde::{Deserialize, Serialize};

use super::{GlobalSimilarity, LocalSimilarity, PenaltyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FlopsBreakdown {
    pub softmax: u64,
    pub local: u64,
    pub global: u64,
    pub normalization: u64,
    pub combine: u64,
}

impl FlopsBreakdown {
    pub fn total(&self) -> u64 {
        self.softmax + self.local + self.global + self.normalization + self.combine
    }
}

pub fn flops_estimate(v: usize, d: usize, n_out: usize, n_hid: usize, cfg: &PenaltyConfig) -> FlopsBreakdown {
    let (v, d, n_out, n_hid) = (v as u64, d as u64, n_out as u64, n_hid as u64);
    let softmax = match cfg.sim_local {
        LocalSimilarity::Dot => 4 * v,
        LocalSimilarity::Cosine => 0,
    };
    let local = match (cfg.sim_local, n_out) {
        (_, 0) => 0,
        (LocalSimilarity::Dot, n) => 7 * v * n,
        (LocalSimilarity::Cosine, n) => 4 * v * n + 6 * v,
    };
    let global = match (cfg.sim_global, n_hid) {
        (_, 0) => 0,
        (GlobalSimilarity::Dot, n) => 2 * d * n + 2 * v * d,
        (GlobalSimilarity::Embedding, n) => 4 * d * v + 11 * d + 4 * d * n,
    };
    let active = u64::from(n_out > 0) + u64::from(n_hid > 0);
    FlopsBreakdown { softmax, local, global, normalization: 6 * v * active, combine: 2 * v * active }
}
