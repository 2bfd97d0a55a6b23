//! Hyperparameter sweeps over `(alpha, beta, l0, delta, temperature)`.
//!
//! Each point runs [`multi_branch`](crate::process::multi_branch) on every
//! prompt and scores the branches with two objectives:
//! diversity `1 - self_bleu` (higher is better) and degeneration, the mean
//! bigram repetition (lower is better). Both are averaged over prompts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UagError};
use crate::metrics::{repetition_degen, self_bleu};
use crate::process::{multi_branch, GenerationConfig, LanguageModel};

/// Either a closed interval or an explicit list of values.
///
/// In grid mode an interval contributes its two endpoints (one value when
/// `min == max`); in random mode it is sampled uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ParamRange {
    Interval { min: f64, max: f64 },
    Grid { grid: Vec<f64> },
}

impl ParamRange {
    fn validate(&self, name: &str) -> Result<()> {
        match self {
            ParamRange::Interval { min, max } if min.is_nan() || max.is_nan() || min > max => {
                Err(UagError::InvalidConfig(format!("{name}: min must be <= max")))
            }
            ParamRange::Grid { grid } if grid.is_empty() => Err(UagError::InvalidConfig(format!("{name}: empty grid"))),
            _ => Ok(()),
        }
    }

    fn grid_values(&self) -> Vec<f64> {
        match self {
            ParamRange::Interval { min, max } if min == max => vec![*min],
            ParamRange::Interval { min, max } => vec![*min, *max],
            ParamRange::Grid { grid } => grid.clone(),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            ParamRange::Interval { min, max } => min + (max - min) * rng.random::<f64>(),
            ParamRange::Grid { grid } => grid[rng.random_range(0..grid.len())],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    #[default]
    Grid,
    Random,
}

/// Parameters left out stay at the base configuration's value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpace {
    pub alpha: Option<ParamRange>,
    pub beta: Option<ParamRange>,
    pub l0: Option<ParamRange>,
    pub delta: Option<ParamRange>,
    pub temperature: Option<ParamRange>,
    #[serde(default)]
    pub sampling: Sampling,
    pub budget: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub alpha: f64,
    pub beta: f64,
    pub l0: f64,
    pub delta: f64,
    pub temperature: f64,
}

impl SweepParams {
    pub fn from_config(cfg: &GenerationConfig) -> Self {
        let s = &cfg.schedule;
        Self { alpha: s.alpha, beta: s.beta, l0: s.l0, delta: s.delta, temperature: cfg.temperature }
    }

    pub fn apply(&self, base: &GenerationConfig) -> GenerationConfig {
        let mut cfg = *base;
        cfg.schedule.alpha = self.alpha;
        cfg.schedule.beta = self.beta;
        cfg.schedule.l0 = self.l0;
        cfg.schedule.delta = self.delta;
        cfg.temperature = self.temperature;
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub run_id: u64,
    pub params: SweepParams,
    pub diversity: f64,
    pub degeneration: f64,
}

impl SweepSpace {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(UagError::InvalidConfig("budget must be >= 1".into()));
        }
        for (name, r) in self.ranges() {
            if let Some(r) = r {
                r.validate(name)?;
            }
        }
        Ok(())
    }

    fn ranges(&self) -> [(&'static str, Option<&ParamRange>); 5] {
        [
            ("alpha", self.alpha.as_ref()),
            ("beta", self.beta.as_ref()),
            ("l0", self.l0.as_ref()),
            ("delta", self.delta.as_ref()),
            ("temperature", self.temperature.as_ref()),
        ]
    }

    /// Parameter vectors to evaluate, in run-id order.
    ///
    /// Grid mode enumerates the Cartesian product row-major with `alpha`
    /// outermost and `temperature` innermost, truncated to `budget`. Random
    /// mode draws `budget` vectors from a ChaCha8 stream seeded with `seed`.
    pub fn points(&self, base: &GenerationConfig, seed: u64) -> Result<Vec<SweepParams>> {
        self.validate()?;
        let fixed = SweepParams::from_config(base);
        let fixed_values = [fixed.alpha, fixed.beta, fixed.l0, fixed.delta, fixed.temperature];
        let build = |v: [f64; 5]| SweepParams { alpha: v[0], beta: v[1], l0: v[2], delta: v[3], temperature: v[4] };
        match self.sampling {
            Sampling::Grid => {
                let axes: Vec<Vec<f64>> = self
                    .ranges()
                    .iter()
                    .zip(fixed_values)
                    .map(|((_, r), f)| r.map_or(vec![f], ParamRange::grid_values))
                    .collect();
                let total: usize = axes.iter().map(Vec::len).product();
                Ok((0..total.min(self.budget))
                    .map(|mut idx| {
                        let mut v = [0.0; 5];
                        for k in (0..5).rev() {
                            v[k] = axes[k][idx % axes[k].len()];
                            idx /= axes[k].len();
                        }
                        build(v)
                    })
                    .collect())
            }
            Sampling::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok((0..self.budget)
                    .map(|_| {
                        let mut v = fixed_values;
                        for (k, (_, r)) in self.ranges().iter().enumerate() {
                            if let Some(r) = r {
                                v[k] = r.sample(&mut rng);
                            }
                        }
                        build(v)
                    })
                    .collect())
            }
        }
    }
}

/// Objectives `(diversity, degeneration)` of one configuration, averaged over
/// prompts. Needs at least two branches.
pub fn evaluate_config<M: LanguageModel + ?Sized>(model: &M, prompts: &[Vec<usize>], cfg: &GenerationConfig) -> Result<(f64, f64)> {
    if prompts.is_empty() {
        return Err(UagError::InvalidConfig("no prompts".into()));
    }
    let (mut diversity, mut degeneration) = (0.0, 0.0);
    for prompt in prompts {
        let branches = multi_branch(model, prompt, cfg)?;
        let texts: Vec<&[usize]> = branches.iter().filter_map(|b| b.tokens()).collect();
        diversity += 1.0 - self_bleu(&texts, 4)?;
        degeneration += texts.iter().map(|t| repetition_degen(t, 2).unwrap_or(0.0)).sum::<f64>() / texts.len() as f64;
    }
    let n = prompts.len() as f64;
    Ok((diversity / n, degeneration / n))
}

/// Evaluates every point of `space` in parallel; results are ordered by run id.
pub fn run_sweep<M: LanguageModel + ?Sized>(
    space: &SweepSpace,
    base: &GenerationConfig,
    model: &M,
    prompts: &[Vec<usize>],
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    let params = space.points(base, seed)?;
    params
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let (diversity, degeneration) = evaluate_config(model, prompts, &p.apply(base))?;
            Ok(SweepPoint { run_id: i as u64, params: *p, diversity, degeneration })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront {
    pub points: Vec<SweepPoint>,
    /// Positions of the front points in the input, ascending.
    pub indices: Vec<usize>,
}

fn dominates(a: &SweepPoint, b: &SweepPoint) -> bool {
    a.diversity >= b.diversity
        && a.degeneration <= b.degeneration
        && (a.diversity > b.diversity || a.degeneration < b.degeneration)
}

/// Non-dominated points under (maximize diversity, minimize degeneration).
/// Points with identical objectives are all kept.
pub fn pareto_front(points: &[SweepPoint]) -> ParetoFront {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&points[i], &points[j]);
        b.diversity.total_cmp(&a.diversity).then(a.degeneration.total_cmp(&b.degeneration))
    });
    let mut keep = Vec::new();
    // lowest degeneration among points with strictly higher diversity
    let mut best_higher = f64::INFINITY;
    let mut k = 0;
    while k < order.len() {
        let d = points[order[k]].diversity;
        let end = order[k..].iter().position(|&i| points[i].diversity != d).map_or(order.len(), |p| k + p);
        let group_min = points[order[k]].degeneration;
        if group_min < best_higher {
            keep.extend(order[k..end].iter().copied().filter(|&i| points[i].degeneration == group_min));
        }
        best_higher = best_higher.min(group_min);
        k = end;
    }
    keep.sort_unstable();
    debug_assert!(keep.iter().all(|&i| !points.iter().any(|p| dominates(p, &points[i]))));
    ParetoFront { points: keep.iter().map(|&i| points[i]).collect(), indices: keep }
}

/// Most diverse point with `degeneration <= max_degen`; ties go to lower
/// degeneration, then lower run id.
pub fn select_best(front: &[SweepPoint], max_degen: f64) -> Result<SweepPoint> {
    front
        .iter()
        .filter(|p| p.degeneration <= max_degen)
        .min_by(|a, b| {
            b.diversity
                .total_cmp(&a.diversity)
                .then(a.degeneration.total_cmp(&b.degeneration))
                .then(a.run_id.cmp(&b.run_id))
        })
        .copied()
        .ok_or(UagError::NoAdmissiblePoint(max_degen))
}

/// Default degeneration ceiling for [`select_best`].
pub const DEFAULT_MAX_DEGEN: f64 = 0.9;

/// CSV with one row per point and a final Pareto-membership column.
pub fn to_csv(points: &[SweepPoint], front: &ParetoFront) -> String {
    let mut out = String::from("run_id,alpha,beta,l0,delta,temperature,diversity,degeneration,pareto\n");
    for (i, p) in points.iter().enumerate() {
        let q = &p.params;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            p.run_id,
            q.alpha,
            q.beta,
            q.l0,
            q.delta,
            q.temperature,
            p.diversity,
            p.degeneration,
            front.indices.binary_search(&i).is_ok()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(run_id: u64, diversity: f64, degeneration: f64) -> SweepPoint {
        let params = SweepParams { alpha: 0.0, beta: 0.0, l0: 0.0, delta: 0.0, temperature: 1.0 };
        SweepPoint { run_id, params, diversity, degeneration }
    }

    #[test]
    fn pareto_examples() {
        let one = [pt(0, 0.3, 0.3)];
        assert_eq!(pareto_front(&one).indices, vec![0]);
        let two = [pt(0, 0.5, 0.1), pt(1, 0.4, 0.2)];
        assert_eq!(pareto_front(&two).indices, vec![0]);
        let dup = [pt(0, 0.5, 0.1), pt(1, 0.5, 0.1), pt(2, 0.5, 0.2), pt(3, 0.6, 0.1)];
        assert_eq!(pareto_front(&dup).indices, vec![3]);
        let tradeoff = [pt(0, 0.2, 0.0), pt(1, 0.9, 0.8), pt(2, 0.5, 0.5), pt(3, 0.5, 0.5)];
        assert_eq!(pareto_front(&tradeoff).indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn select_best_examples() {
        let front = [pt(0, 0.8, 0.5), pt(1, 0.8, 0.3), pt(2, 0.6, 0.1)];
        assert_eq!(select_best(&front, DEFAULT_MAX_DEGEN).unwrap().run_id, 1);
        let bad = [pt(0, 0.8, 0.95), pt(1, 0.9, 0.91)];
        assert_eq!(select_best(&bad, DEFAULT_MAX_DEGEN), Err(UagError::NoAdmissiblePoint(0.9)));
        let tie = [pt(7, 0.5, 0.2), pt(3, 0.5, 0.2)];
        assert_eq!(select_best(&tie, 0.9).unwrap().run_id, 3);
    }

    #[test]
    fn grid_is_row_major() {
        let space: SweepSpace = serde_json::from_str(
            r#"{"alpha": {"grid": [0.1, 0.2]}, "beta": {"min": 1.0, "max": 2.0}, "budget": 10}"#,
        )
        .unwrap();
        let base = GenerationConfig::language_model(4, 2, 0);
        let pts = space.points(&base, 0).unwrap();
        let ab: Vec<(f64, f64)> = pts.iter().map(|p| (p.alpha, p.beta)).collect();
        assert_eq!(ab, vec![(0.1, 1.0), (0.1, 2.0), (0.2, 1.0), (0.2, 2.0)]);
        assert!(pts.iter().all(|p| p.temperature == base.temperature && p.l0 == base.schedule.l0));
    }

    #[test]
    fn random_sampling_is_seeded() {
        let space: SweepSpace =
            serde_json::from_str(r#"{"alpha": {"min": 0.0, "max": 1.0}, "sampling": "random", "budget": 5}"#).unwrap();
        let base = GenerationConfig::language_model(4, 2, 0);
        assert_eq!(space.points(&base, 3).unwrap(), space.points(&base, 3).unwrap());
        assert_ne!(space.points(&base, 3).unwrap(), space.points(&base, 4).unwrap());
        assert!(space.points(&base, 3).unwrap().iter().all(|p| (0.0..=1.0).contains(&p.alpha)));
    }

    #[test]
    fn rejects_bad_space() {
        let space: SweepSpace = serde_json::from_str(r#"{"alpha": {"min": 2.0, "max": 1.0}, "budget": 1}"#).unwrap();
        assert!(space.validate().is_err());
        let space: SweepSpace = serde_json::from_str(r#"{"budget": 0}"#).unwrap();
        assert!(space.validate().is_err());
    }
}
