use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{LossTerms, LossWeights};
use crate::rasterizer::DistortionKind;

/// Schedules below are stated for this many iterations; [`TrainConfig::scaled_to`]
/// stretches them to other lengths.
pub const REFERENCE_ITERATIONS: usize = 30_000;

/// Per-group Adam learning rates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningRates {
    /// Center rate at step 0, multiplied by the scene extent.
    pub position_init: f64,
    /// Center rate at the last step, multiplied by the scene extent.
    pub position_final: f64,
    pub sh_dc: f64,
    pub sh_rest: f64,
    pub opacity: f64,
    pub scaling: f64,
    pub rotation: f64,
}

impl Default for LearningRates {
    fn default() -> Self {
        Self {
            position_init: 1.6e-4,
            position_final: 1.6e-6,
            sh_dc: 0.0025,
            sh_rest: 0.0025 / 20.0,
            opacity: 0.05,
            scaling: 0.005,
            rotation: 0.001,
        }
    }
}

impl LearningRates {
    pub const ZERO: Self = Self {
        position_init: 0.0,
        position_final: 0.0,
        sh_dc: 0.0,
        sh_rest: 0.0,
        opacity: 0.0,
        scaling: 0.0,
        rotation: 0.0,
    };

    /// Log-linear interpolation between the initial and final center rates.
    pub fn position_at(&self, step: usize, total: usize, extent: f64) -> f64 {
        if self.position_init == 0.0 || self.position_final == 0.0 {
            return self.position_init * extent;
        }
        let t = if total == 0 { 0.0 } else { (step as f64 / total as f64).clamp(0.0, 1.0) };
        (self.position_init.ln() * (1.0 - t) + self.position_final.ln() * t).exp() * extent
    }
}

/// Everything that controls a training run. Serialized as TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub iterations: usize,
    pub seed: u64,
    pub sh_degree: usize,
    /// One more SH band becomes active every this many steps.
    pub sh_interval: usize,
    pub lr: LearningRates,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub weights: LossWeights,
    pub terms: LossTerms,
    pub distortion_kind: DistortionKind,
    /// First step at which the distortion term is applied.
    pub distortion_from: usize,
    /// First step at which the normal term is applied.
    pub normal_from: usize,
    pub densify_grad_threshold: f64,
    pub densify_interval: usize,
    pub densify_from: usize,
    pub densify_until: usize,
    /// Splats with a larger maximum scale than this fraction of the scene
    /// extent are split rather than cloned.
    pub percent_dense: f64,
    pub split_factor: f64,
    pub split_children: usize,
    pub prune_opacity: f64,
    pub prune_interval: usize,
    /// Periodic opacity reset; `None` disables it.
    pub opacity_reset_interval: Option<usize>,
    pub max_splats: usize,
    pub init_opacity: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: REFERENCE_ITERATIONS,
            seed: 0,
            sh_degree: 3,
            sh_interval: 1000,
            lr: LearningRates::default(),
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-15,
            weights: LossWeights::default(),
            terms: LossTerms::default(),
            distortion_kind: DistortionKind::Squared,
            distortion_from: 3000,
            normal_from: 7000,
            densify_grad_threshold: 0.0002,
            densify_interval: 100,
            densify_from: 500,
            densify_until: 15_000,
            percent_dense: 0.01,
            split_factor: 1.6,
            split_children: 2,
            prune_opacity: 0.05,
            prune_interval: 3000,
            opacity_reset_interval: None,
            max_splats: 1_000_000,
            init_opacity: 0.1,
        }
    }
}

impl TrainConfig {
    /// Default schedule stretched to `iterations` steps. Step-based
    /// milestones scale proportionally; the densification interval stays
    /// fixed because it sets how many views feed each gradient average.
    pub fn scaled_to(iterations: usize) -> Self {
        let mut c = Self::default();
        c.rescale(iterations);
        c
    }

    /// Rescales the step milestones of `self` from its current length to
    /// `iterations`.
    pub fn rescale(&mut self, iterations: usize) {
        let from = self.iterations.max(1) as f64;
        let f = iterations as f64 / from;
        let s = |v: usize| ((v as f64 * f).round() as usize).max(1);
        self.sh_interval = s(self.sh_interval);
        self.distortion_from = (self.distortion_from as f64 * f).round() as usize;
        self.normal_from = (self.normal_from as f64 * f).round() as usize;
        self.densify_from = (self.densify_from as f64 * f).round() as usize;
        self.densify_until = (self.densify_until as f64 * f).round() as usize;
        self.prune_interval = s(self.prune_interval);
        self.opacity_reset_interval = self.opacity_reset_interval.map(s);
        self.iterations = iterations;
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let positive = [
            ("densify_grad_threshold", self.densify_grad_threshold),
            ("prune_opacity", self.prune_opacity),
            ("percent_dense", self.percent_dense),
            ("split_factor", self.split_factor),
            ("adam_eps", self.adam_eps),
            ("init_opacity", self.init_opacity),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.init_opacity < 1.0) || !(self.prune_opacity < 1.0) {
            return bad("opacities must lie in (0, 1)".into());
        }
        let lr = &self.lr;
        for (name, v) in [
            ("lr.position_init", lr.position_init),
            ("lr.position_final", lr.position_final),
            ("lr.sh_dc", lr.sh_dc),
            ("lr.sh_rest", lr.sh_rest),
            ("lr.opacity", lr.opacity),
            ("lr.scaling", lr.scaling),
            ("lr.rotation", lr.rotation),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("Adam betas must lie in [0, 1)".into());
        }
        let w = &self.weights;
        if !(w.alpha_d >= 0.0 && w.beta_n >= 0.0 && (0.0..=1.0).contains(&w.lambda_ssim)) {
            return bad(format!("invalid loss weights {w:?}"));
        }
        if self.sh_degree > crate::sh::MAX_SH_DEGREE {
            return bad(format!("sh_degree {} exceeds {}", self.sh_degree, crate::sh::MAX_SH_DEGREE));
        }
        if self.sh_interval == 0 || self.densify_interval == 0 || self.prune_interval == 0 {
            return bad("intervals must be positive".into());
        }
        if self.opacity_reset_interval == Some(0) {
            return bad("opacity_reset_interval must be positive".into());
        }
        if self.split_children < 1 || self.max_splats == 0 {
            return bad("split_children and max_splats must be positive".into());
        }
        if self.iterations > 0 && !(self.densify_from < self.densify_until && self.densify_until <= self.iterations) {
            return bad(format!(
                "need densify_from < densify_until <= iterations, got {} / {} / {}",
                self.densify_from, self.densify_until, self.iterations
            ));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::from_toml(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let c = TrainConfig::default();
        c.validate().unwrap();
        assert_eq!(TrainConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn partial_toml_fills_defaults() {
        let c = TrainConfig::from_toml("iterations = 30000\nseed = 7\n[weights]\nalpha_d = 100.0\nbeta_n = 0.05\nlambda_ssim = 0.2\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.weights.alpha_d, 100.0);
        assert_eq!(c.prune_interval, 3000);
        assert!(TrainConfig::from_toml("unknown_key = 1").is_err());
    }

    #[test]
    fn scaling_keeps_ordering_and_interval() {
        let c = TrainConfig::scaled_to(3000);
        c.validate().unwrap();
        assert_eq!((c.densify_from, c.densify_until, c.prune_interval, c.sh_interval), (50, 1500, 300, 100));
        assert_eq!(c.densify_interval, 100);
        assert_eq!((c.distortion_from, c.normal_from), (300, 700));
        TrainConfig::scaled_to(0).validate().unwrap();
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut c = TrainConfig::default();
        c.densify_grad_threshold = 0.0;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::default();
        c.densify_until = c.iterations + 1;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::default();
        c.lr.opacity = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn position_rate_decays_log_linearly() {
        let lr = LearningRates::default();
        assert!((lr.position_at(0, 100, 2.0) - 3.2e-4).abs() < 1e-18);
        assert!((lr.position_at(100, 100, 2.0) - 3.2e-6).abs() < 1e-18);
        let mid = lr.position_at(50, 100, 1.0);
        assert!((mid - (1.6e-4f64 * 1.6e-6).sqrt()).abs() < 1e-15);
    }
}
