//! Avoidance-guided multi-branch generation.
//!
//! When several outputs are drawn for the same prompt, each new branch is
//! pushed away from the branches before it. At every step the model output is
//! corrected by normalized gradients of two similarity penalties against a
//! per-step bank of earlier branches: a local term on the step's output and a
//! global term on its hidden state (or decoded latent). A logistic schedule
//! moves the weight from the local to the global term as generation proceeds.
//!
//! Runnable examples live in `examples/`:
//!
//! | example | shows |
//! |---|---|
//! | `schedule_shapes` | logistic, constant and linear weight schedules |
//! | `gradient_check` | closed-form penalty gradients against finite differences |
//! | `ar_multi_branch` | guided vs naive branches from the toy language model |
//! | `diffusion_multi_branch` | guided vs naive final latents from the toy diffusion model |
//! | `diversity_metrics` | self-BLEU, ROUGE-L, METEOR, distinct-n, repetition |
//! | `sweep_pareto` | a small hyperparameter sweep and its Pareto front |
//! | `judge_rubrics` | judge prompts and verdict parsing, offline |
//! | `flops_comparison` | per-step operation counts with and without guidance |

pub mod cli;
pub mod config;
pub mod error;
pub mod judge;
pub mod metrics;
pub mod penalty;
pub mod process;
pub mod schedule;
pub mod sweep;

pub use error::{Result, UagError};
pub use penalty::{PenaltyConfig, UagStepRecord};
pub use process::{multi_branch, multi_branch_latent, Branch, GenerationConfig};
pub use schedule::{schedule_weights, ScheduleParams, StepWeights};
