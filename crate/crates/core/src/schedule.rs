//! Step-dependent weights for the local and global penalties.
//!
//! The logistic kind blends from local-dominant early steps to
//! global-dominant late steps around a transition center `l0`:
//!
//! ```text
//! s_t      = 1 / (1 + exp(delta * (t - l0)))
//! w_local  = alpha * s_t
//! w_global = beta  * (1 - s_t)
//! ```
//!
//! `constant` returns `(alpha, beta)` at every step; `linear` ramps the local
//! fraction from 1 at `t = 1` to 0 at `t = horizon` while the global fraction
//! rises so the two fractions always sum to one.

use serde::{Deserialize, Serialize};

use crate::error::{Result, UagError};

/// Bound on `|delta * (t - l0)|` before exponentiation.
const EXPONENT_CLAMP: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    #[default]
    Logistic,
    Constant,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleParams {
    /// Maximum local weight.
    pub alpha: f64,
    /// Maximum global weight.
    pub beta: f64,
    /// Transition center, in steps.
    pub l0: f64,
    /// Transition sharpness.
    pub delta: f64,
    #[serde(default)]
    pub kind: ScheduleKind,
    /// Total number of steps.
    pub horizon: usize,
}

impl ScheduleParams {
    pub fn logistic(alpha: f64, beta: f64, l0: f64, delta: f64, horizon: usize) -> Self {
        Self { alpha, beta, l0, delta, kind: ScheduleKind::Logistic, horizon }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(UagError::InvalidConfig(format!("alpha must be finite and >= 0, got {}", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(UagError::InvalidConfig(format!("beta must be finite and >= 0, got {}", self.beta)));
        }
        if !self.l0.is_finite() || !self.delta.is_finite() {
            return Err(UagError::InvalidConfig("l0 and delta must be finite".into()));
        }
        if self.horizon == 0 {
            return Err(UagError::InvalidConfig("horizon must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepWeights {
    pub w_local: f64,
    pub w_global: f64,
}

impl StepWeights {
    pub const ZERO: StepWeights = StepWeights { w_local: 0.0, w_global: 0.0 };

    pub fn new(w_local: f64, w_global: f64) -> Self {
        Self { w_local, w_global }
    }
}

/// Logistic gate `1 / (1 + exp(delta * (t - l0)))`, saturating instead of
/// overflowing for large exponents.
pub fn logistic_gate(t: f64, delta: f64, l0: f64) -> f64 {
    let x = (delta * (t - l0)).clamp(-EXPONENT_CLAMP, EXPONENT_CLAMP);
    if x.is_nan() {
        // delta = 0 with an infinite offset; the gate is flat.
        return 0.5;
    }
    // Evaluate on the side where exp() cannot overflow.
    if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Penalty weights at generation step `t` (1-based).
pub fn schedule_weights(t: usize, params: &ScheduleParams) -> Result<StepWeights> {
    if t == 0 || t > params.horizon {
        return Err(UagError::StepOutOfRange { step: t, horizon: params.horizon });
    }
    let weights = match params.kind {
        ScheduleKind::Logistic => {
            let s = logistic_gate(t as f64, params.delta, params.l0);
            StepWeights::new(params.alpha * s, params.beta * (1.0 - s))
        }
        ScheduleKind::Constant => StepWeights::new(params.alpha, params.beta),
        ScheduleKind::Linear if params.horizon == 1 => StepWeights::new(params.alpha, params.beta),
        ScheduleKind::Linear => {
            let frac = (t - 1) as f64 / (params.horizon - 1) as f64;
            StepWeights::new(params.alpha * (1.0 - frac), params.beta * frac)
        }
    };
    Ok(weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_is_half_at_center() {
        assert_eq!(logistic_gate(5.0, 0.5479, 5.0), 0.5);
        assert_eq!(logistic_gate(1.0, 0.0, 123.0), 0.5);
    }

    #[test]
    fn gate_past_center() {
        // 1 / (1 + e^{2.7395}) evaluated at 30 digits.
        let expected = 0.060_682_397_078_034_26;
        assert!((logistic_gate(10.0, 0.5479, 5.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn gate_saturates() {
        let lo = logistic_gate(1e6, 1.0, 0.0);
        let hi = logistic_gate(-1e6, 1.0, 0.0);
        assert!(lo.is_finite() && (0.0..1e-300).contains(&lo));
        assert!(hi.is_finite() && (hi - 1.0).abs() < 1e-300);
    }

    #[test]
    fn logistic_weights_at_center() {
        let p = ScheduleParams::logistic(0.8, 1.2, 5.0, 0.5479, 20);
        let w = schedule_weights(5, &p).unwrap();
        assert_eq!(w, StepWeights::new(0.4, 0.6));
    }

    #[test]
    fn constant_kind_passes_magnitudes_through() {
        let p = ScheduleParams { kind: ScheduleKind::Constant, ..ScheduleParams::logistic(1.766, 1.077, 38.0, 0.8024, 200) };
        for t in [1, 38, 200] {
            assert_eq!(schedule_weights(t, &p).unwrap(), StepWeights::new(1.766, 1.077));
        }
    }

    #[test]
    fn linear_endpoints() {
        let p = ScheduleParams { kind: ScheduleKind::Linear, ..ScheduleParams::logistic(0.7, 0.3, 0.0, 1.0, 200) };
        assert_eq!(schedule_weights(1, &p).unwrap(), StepWeights::new(0.7, 0.0));
        assert_eq!(schedule_weights(200, &p).unwrap(), StepWeights::new(0.0, 0.3));
        let single = ScheduleParams { horizon: 1, ..p };
        assert_eq!(schedule_weights(1, &single).unwrap(), StepWeights::new(0.7, 0.3));
    }

    #[test]
    fn rejects_out_of_range_steps() {
        let p = ScheduleParams::logistic(1.0, 1.0, 5.0, 1.0, 10);
        assert!(matches!(schedule_weights(0, &p), Err(UagError::StepOutOfRange { .. })));
        assert!(matches!(schedule_weights(11, &p), Err(UagError::StepOutOfRange { .. })));
    }

    #[test]
    fn deserializes_from_run_config() {
        let json = r#"{"alpha":0.3395,"beta":1.3339,"l0":5,"delta":0.5479,"kind":"linear","horizon":40}"#;
        let p: ScheduleParams = serde_json::from_str(json).unwrap();
        assert_eq!(p.kind, ScheduleKind::Linear);
        assert_eq!(p.horizon, 40);
    }
}
