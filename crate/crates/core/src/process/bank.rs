use std::collections::BTreeMap;

use super::{Branch, BranchOutput};

type StepBank = BTreeMap<usize, Vec<Vec<f64>>>;

/// Per-step caches of earlier branches' representations.
///
/// Banks are keyed by the 1-based generation step. Entries are committed once
/// a branch finishes, so a running branch only ever sees earlier branches.
/// When a step is full the oldest entry is evicted.
#[derive(Debug, Clone)]
pub struct ReferenceBankSet {
    /// Output distributions (language models).
    pub out_bank: StepBank,
    /// Hidden states (language models) or decoded embeddings (latent models).
    pub hid_bank: StepBank,
    /// Latents (latent models).
    pub latent_bank: StepBank,
    capacity_per_step: usize,
}

fn push(bank: &mut StepBank, step: usize, entry: Vec<f64>, capacity: usize) {
    let list = bank.entry(step).or_default();
    list.push(entry);
    if list.len() > capacity {
        let excess = list.len() - capacity;
        list.drain(..excess);
    }
}

fn slice(bank: &StepBank, step: usize) -> &[Vec<f64>] {
    bank.get(&step).map_or(&[], Vec::as_slice)
}

impl ReferenceBankSet {
    pub fn new(capacity_per_step: usize) -> Self {
        Self {
            out_bank: BTreeMap::new(),
            hid_bank: BTreeMap::new(),
            latent_bank: BTreeMap::new(),
            capacity_per_step: capacity_per_step.max(1),
        }
    }

    pub fn capacity_per_step(&self) -> usize {
        self.capacity_per_step
    }

    pub fn out_at(&self, step: usize) -> &[Vec<f64>] {
        slice(&self.out_bank, step)
    }

    pub fn hid_at(&self, step: usize) -> &[Vec<f64>] {
        slice(&self.hid_bank, step)
    }

    pub fn latent_at(&self, step: usize) -> &[Vec<f64>] {
        slice(&self.latent_bank, step)
    }

    pub fn is_empty(&self) -> bool {
        self.out_bank.is_empty() && self.hid_bank.is_empty() && self.latent_bank.is_empty()
    }

    /// Appends a finished branch's per-step representations.
    pub fn commit(&mut self, branch: &Branch) {
        let cap = self.capacity_per_step;
        for (i, s) in branch.steps.iter().enumerate() {
            let step = i + 1;
            match branch.output {
                BranchOutput::Tokens(_) => push(&mut self.out_bank, step, s.bank_output.clone(), cap),
                BranchOutput::Latent(_) => push(&mut self.latent_bank, step, s.bank_output.clone(), cap),
            }
            push(&mut self.hid_bank, step, s.bank_state.clone(), cap);
        }
    }
}
