//! Diversity and degeneration metrics over token sequences.
//!
//! Tokens can be any ordered type (ids or strings). Counting uses ordered
//! maps so that every floating-point sum runs in a fixed order.
//!
//! METEOR here is the exact-match skeleton with `alpha = 0.9`, `beta = 3`,
//! `gamma = 0.5`:
//!
//! ```text
//! Fmean   = P R / (alpha P + (1 - alpha) R)
//! penalty = gamma (chunks / matches)^beta
//! score   = Fmean (1 - penalty)
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, UagError};

const METEOR_ALPHA: f64 = 0.9;
const METEOR_BETA: f64 = 3.0;
const METEOR_GAMMA: f64 = 0.5;

fn nonempty<T>(s: &[T]) -> Result<()> {
    if s.is_empty() {
        Err(UagError::EmptySequence)
    } else {
        Ok(())
    }
}

fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// LCS F1 with `P = LCS / |b|`, `R = LCS / |a|`.
pub fn rouge_l<T: PartialEq>(a: &[T], b: &[T]) -> Result<f64> {
    nonempty(a)?;
    nonempty(b)?;
    let lcs = lcs_len(a, b) as f64;
    if lcs == 0.0 {
        return Ok(0.0);
    }
    let (p, r) = (lcs / b.len() as f64, lcs / a.len() as f64);
    Ok(2.0 * p * r / (p + r))
}

fn ngram_counts<T: Ord>(text: &[T], n: usize) -> BTreeMap<&[T], usize> {
    let mut counts = BTreeMap::new();
    if n > 0 && text.len() >= n {
        for g in text.windows(n) {
            *counts.entry(g).or_insert(0) += 1;
        }
    }
    counts
}

/// Smoothed sentence BLEU of `hyp` against `refs`.
///
/// Unigram precision is unsmoothed (a hypothesis sharing no token scores 0);
/// higher orders use add-one smoothing. The brevity penalty uses the reference
/// length closest to the hypothesis length, preferring the shorter on ties.
pub fn sentence_bleu<T: Ord, R: AsRef<[T]>>(hyp: &[T], refs: &[R], max_n: usize) -> Result<f64> {
    nonempty(hyp)?;
    if refs.is_empty() {
        return Err(UagError::NoReferences);
    }
    if max_n == 0 {
        return Err(UagError::InvalidConfig("max_n must be >= 1".into()));
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let hyp_counts = ngram_counts(hyp, n);
        let mut max_ref: BTreeMap<&[T], usize> = BTreeMap::new();
        for r in refs {
            for (g, c) in ngram_counts(r.as_ref(), n) {
                let e = max_ref.entry(g).or_insert(0);
                *e = (*e).max(c);
            }
        }
        let total: usize = hyp_counts.values().sum();
        let clipped: usize = hyp_counts.iter().map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0))).sum();
        let p = if n == 1 {
            if clipped == 0 {
                return Ok(0.0);
            }
            clipped as f64 / total as f64
        } else {
            (clipped as f64 + 1.0) / (total as f64 + 1.0)
        };
        log_sum += p.ln();
    }
    let c = hyp.len();
    let r = refs
        .iter()
        .map(|r| r.as_ref().len())
        .min_by_key(|&len| (len.abs_diff(c), len))
        .expect("refs nonempty");
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    Ok(bp * (log_sum / max_n as f64).exp())
}

/// Mean BLEU of each text against all the others.
pub fn self_bleu<T: Ord, S: AsRef<[T]>>(corpus: &[S], max_n: usize) -> Result<f64> {
    if corpus.len() < 2 {
        return Err(UagError::CorpusTooSmall { needed: 2, found: corpus.len() });
    }
    let mut sum = 0.0;
    for (i, hyp) in corpus.iter().enumerate() {
        let refs: Vec<&[T]> = corpus.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, s)| s.as_ref()).collect();
        sum += sentence_bleu(hyp.as_ref(), &refs, max_n)?;
    }
    Ok(sum / corpus.len() as f64)
}

/// Exact-match METEOR of hypothesis `a` against reference `b`.
pub fn meteor_simple<T: PartialEq>(a: &[T], b: &[T]) -> Result<f64> {
    nonempty(a)?;
    nonempty(b)?;
    let mut used = vec![false; b.len()];
    let mut pairs = Vec::new();
    for (i, x) in a.iter().enumerate() {
        if let Some(j) = (0..b.len()).find(|&j| !used[j] && b[j] == *x) {
            used[j] = true;
            pairs.push((i, j));
        }
    }
    let m = pairs.len();
    if m == 0 {
        return Ok(0.0);
    }
    let chunks = 1 + pairs.windows(2).filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1)).count();
    let (p, r) = (m as f64 / a.len() as f64, m as f64 / b.len() as f64);
    let fmean = p * r / (METEOR_ALPHA * p + (1.0 - METEOR_ALPHA) * r);
    let penalty = METEOR_GAMMA * (chunks as f64 / m as f64).powf(METEOR_BETA);
    Ok(fmean * (1.0 - penalty))
}

/// Unique over total n-grams, pooled across the corpus.
pub fn distinct_n<T: Ord, S: AsRef<[T]>>(corpus: &[S], n: usize) -> Result<f64> {
    let mut unique: BTreeMap<&[T], ()> = BTreeMap::new();
    let mut total = 0usize;
    for text in corpus {
        let text = text.as_ref();
        if n > 0 && text.len() >= n {
            for g in text.windows(n) {
                unique.insert(g, ());
                total += 1;
            }
        }
    }
    if total == 0 {
        return Err(UagError::NoNgrams(n));
    }
    Ok(unique.len() as f64 / total as f64)
}

fn tf_cosine<T: Ord>(a: &[T], b: &[T]) -> f64 {
    let (ca, cb) = (ngram_counts(a, 1), ngram_counts(b, 1));
    let dot: f64 = ca.iter().map(|(g, &x)| (x * cb.get(g).copied().unwrap_or(0)) as f64).sum();
    let na: f64 = ca.values().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
    let nb: f64 = cb.values().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Mean cosine of term-frequency vectors over unordered pairs.
pub fn pairwise_cosine_bow<T: Ord, S: AsRef<[T]>>(corpus: &[S]) -> Result<f64> {
    if corpus.len() < 2 {
        return Err(UagError::CorpusTooSmall { needed: 2, found: corpus.len() });
    }
    corpus.iter().try_for_each(|t| nonempty(t.as_ref()))?;
    mean_over_pairs(corpus.len(), |i, j| Ok(tf_cosine(corpus[i].as_ref(), corpus[j].as_ref())))
}

/// `1 - distinct_n` of one text.
pub fn repetition_degen<T: Ord>(text: &[T], n: usize) -> Result<f64> {
    if n == 0 || text.len() < n {
        return Err(UagError::NoNgrams(n));
    }
    Ok(1.0 - distinct_n(&[text], n)?)
}

fn mean_over_pairs(n: usize, mut f: impl FnMut(usize, usize) -> Result<f64>) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            sum += f(i, j)?;
            count += 1;
        }
    }
    Ok(sum / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub self_bleu: f64,
    pub rouge_l_mean: f64,
    pub meteor_simple_mean: f64,
    pub distinct_1: f64,
    pub distinct_2: f64,
    pub pairwise_cosine: f64,
    /// Mean bigram repetition; texts shorter than two tokens count as 0.
    pub degeneration: f64,
}

impl DiversityReport {
    /// Needs at least two nonempty texts and at least one bigram overall.
    /// ROUGE-L is averaged over unordered pairs, METEOR over ordered pairs.
    pub fn compute<T: Ord, S: AsRef<[T]>>(corpus: &[S]) -> Result<Self> {
        let n = corpus.len();
        if n < 2 {
            return Err(UagError::CorpusTooSmall { needed: 2, found: n });
        }
        corpus.iter().try_for_each(|t| nonempty(t.as_ref()))?;
        let text = |i: usize| corpus[i].as_ref();
        let rouge_l_mean = mean_over_pairs(n, |i, j| rouge_l(text(i), text(j)))?;
        let meteor_simple_mean = mean_over_pairs(n, |i, j| {
            Ok((meteor_simple(text(i), text(j))? + meteor_simple(text(j), text(i))?) / 2.0)
        })?;
        let degeneration = corpus
            .iter()
            .map(|t| repetition_degen(t.as_ref(), 2).unwrap_or(0.0))
            .sum::<f64>()
            / n as f64;
        Ok(Self {
            self_bleu: self_bleu(corpus, 4)?,
            rouge_l_mean,
            meteor_simple_mean,
            distinct_1: distinct_n(corpus, 1)?,
            distinct_2: distinct_n(corpus, 2)?,
            pairwise_cosine: pairwise_cosine_bow(corpus)?,
            degeneration,
        })
    }

    /// `(name, value)` rows in a fixed order.
    pub fn rows(&self) -> [(&'static str, f64); 7] {
        [
            ("self_bleu", self.self_bleu),
            ("rouge_l_mean", self.rouge_l_mean),
            ("meteor_simple_mean", self.meteor_simple_mean),
            ("distinct_1", self.distinct_1),
            ("distinct_2", self.distinct_2),
            ("pairwise_cosine", self.pairwise_cosine),
            ("degeneration", self.degeneration),
        ]
    }
}

/// Mean cosine similarity between latents over unordered pairs.
pub fn latent_pairwise_cosine<S: AsRef<[f64]>>(latents: &[S]) -> Result<f64> {
    if latents.len() < 2 {
        return Err(UagError::CorpusTooSmall { needed: 2, found: latents.len() });
    }
    mean_over_pairs(latents.len(), |i, j| crate::penalty::cosine(latents[i].as_ref(), latents[j].as_ref()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentDiversityReport {
    pub pairwise_cosine: f64,
    /// Mean Euclidean distance over unordered pairs.
    pub pairwise_distance: f64,
}

impl LatentDiversityReport {
    pub fn compute<S: AsRef<[f64]>>(latents: &[S]) -> Result<Self> {
        let pairwise_cosine = latent_pairwise_cosine(latents)?;
        let pairwise_distance = mean_over_pairs(latents.len(), |i, j| {
            let (a, b) = (latents[i].as_ref(), latents[j].as_ref());
            crate::error::check_len(a.len(), b.len())?;
            Ok(a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
        })?;
        Ok(Self { pairwise_cosine, pairwise_distance })
    }

    pub fn rows(&self) -> [(&'static str, f64); 2] {
        [("pairwise_cosine", self.pairwise_cosine), ("pairwise_distance", self.pairwise_distance)]
    }
}

/// Whitespace split, for metrics over raw text.
pub fn words(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}
