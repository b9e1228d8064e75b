//! Optimization loop: initialization, Adam updates, density control and
//! checkpoints.

mod checkpoint;
mod config;
mod density;
mod optimizer;

pub use checkpoint::{decode, encode, load_checkpoint, save_checkpoint, Checkpoint, MAGIC, VERSION};
pub use config::{LearningRates, TrainConfig, REFERENCE_ITERATIONS};
pub use density::{adaptive_density_control, prune_transparent, reset_opacity, DensifyReport, DensifyStats};
pub use optimizer::{adam_step, Group, Moments, OptimizerState};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::gradients::render_backward;
use crate::imgbuf::RgbImage;
use crate::io::SceneDataset;
use crate::losses::{compute_losses, LossTerms};
use crate::meshing::PointGrid;
use crate::metrics::{psnr, ssim};
use crate::model::SplatModel;
use crate::rasterizer::{render, RenderSettings};
use crate::sh::{rgb_to_dc, MAX_SH_COEFFS};

/// Neighbors averaged for the initial splat size.
pub const INIT_NEIGHBORS: usize = 3;

/// One splat per point: isotropic scale equal to the mean distance to the
/// nearest neighbors (`extent / 100` for a lone point), seeded uniform
/// random orientation, opacity `init_opacity`, and a constant color from
/// `colors` or mid-gray.
pub fn init_from_points(
    points: &[Vec3],
    colors: Option<&[[f64; 3]]>,
    extent: f64,
    sh_degree: usize,
    init_opacity: f64,
    seed: u64,
) -> Result<SplatModel> {
    if points.is_empty() {
        return Err(Error::EmptyInput("no initialization points".into()));
    }
    if let Some(c) = colors {
        if c.len() != points.len() {
            return Err(Error::DimensionMismatch(format!("{} colors for {} points", c.len(), points.len())));
        }
    }
    let fallback = extent / 100.0;
    let grid = PointGrid::new(points)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = SplatModel::new(sh_degree);
    for (i, p) in points.iter().enumerate() {
        let d = grid.nearest_k(p, INIT_NEIGHBORS, Some(i));
        let mean = if d.is_empty() { 0.0 } else { d.iter().sum::<f64>() / d.len() as f64 };
        let s = if mean > 0.0 { mean } else { fallback };
        let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let rgb = colors.map_or([0.5; 3], |c| c[i]);
        let mut sh = [[0.0; 3]; MAX_SH_COEFFS];
        sh[0] = rgb.map(rgb_to_dc);
        model.push(*p, q, [s, s], init_opacity, sh);
    }
    model.normalize_rotations();
    model.validate()?;
    Ok(model)
}

/// Per-step record written to the metrics log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub step: usize,
    pub view: usize,
    pub splats: usize,
    pub photometric: f64,
    pub distortion: f64,
    pub normal: f64,
    pub total: f64,
    /// Terms that carried weight this step.
    pub distortion_active: bool,
    pub normal_active: bool,
    pub psnr: f64,
    pub position_lr: f64,
    pub sh_degree: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub densify: Option<DensifyRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensifyRecord {
    pub cloned: usize,
    pub split: usize,
    pub pruned: usize,
}

/// Training state for one dataset.
#[derive(Clone, Debug)]
pub struct Trainer {
    pub config: TrainConfig,
    pub settings: RenderSettings,
    pub model: SplatModel,
    pub optimizer: OptimizerState,
    pub stats: DensifyStats,
    /// Steps taken so far.
    pub step: usize,
    pub extent: f64,
    rng: ChaCha8Rng,
    queue: Vec<usize>,
}

impl Trainer {
    pub fn new(dataset: &SceneDataset, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        dataset.validate()?;
        let model = init_from_points(
            &dataset.init_points,
            dataset.init_colors.as_deref(),
            dataset.scene_extent,
            config.sh_degree,
            config.init_opacity,
            config.seed,
        )?;
        Self::from_model(dataset, config, model)
    }

    /// Starts from an existing model with fresh optimizer state.
    pub fn from_model(dataset: &SceneDataset, config: TrainConfig, model: SplatModel) -> Result<Self> {
        config.validate()?;
        model.validate()?;
        let settings = RenderSettings {
            background: dataset.background,
            distortion: config.distortion_kind,
            ..Default::default()
        };
        let n = model.len();
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1)),
            config,
            settings,
            model,
            optimizer: OptimizerState::new(n),
            stats: DensifyStats::new(n),
            step: 0,
            extent: dataset.scene_extent,
            queue: Vec::new(),
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint { model: self.model.clone(), step: self.step as u64, optimizer: Some(self.optimizer.clone()) }
    }

    /// Next training view: the training indices are reshuffled each epoch.
    fn next_view(&mut self, dataset: &SceneDataset) -> usize {
        if self.queue.is_empty() {
            self.queue = dataset.train.clone();
            self.queue.shuffle(&mut self.rng);
        }
        self.queue.pop().expect("non-empty training split")
    }

    /// Loss terms that carry weight at 1-based step `s`.
    pub fn active_terms(&self, s: usize) -> LossTerms {
        LossTerms {
            distortion: self.config.terms.distortion && s > self.config.distortion_from,
            normal: self.config.terms.normal && s > self.config.normal_from,
        }
    }

    pub fn training_step(&mut self, dataset: &SceneDataset) -> Result<StepMetrics> {
        let s = self.step + 1;
        let cfg = self.config.clone();
        if s % cfg.sh_interval == 0 && self.model.active_sh_degree < self.model.sh_degree {
            self.model.active_sh_degree += 1;
        }
        let view = self.next_view(dataset);
        let cam = &dataset.cameras[view];
        let target = &dataset.images[view];
        let (grid, out) = render(&self.model, cam, &self.settings)?;
        let terms = self.active_terms(s);
        let (loss, upstream) = compute_losses(&out, target, cam, &cfg.weights, terms, None)?;
        if !loss.total.is_finite() {
            return Err(Error::NonFinite(format!(
                "loss at step {s}, view {view}: {loss:?} with {} splats",
                self.model.len()
            )));
        }
        let grads = render_backward(&self.model, cam, &grid, &out, &upstream, &self.settings)?;
        if !grads.is_finite() {
            return Err(Error::NonFinite(format!("gradients at step {s}, view {view}")));
        }
        if s <= cfg.densify_until {
            self.stats.accumulate(&grid, &grads);
        }
        let position_lr = cfg.lr.position_at(s, cfg.iterations, self.extent);
        adam_step(&mut self.model, &grads, &mut self.optimizer, &cfg, position_lr)?;
        let in_window = s <= cfg.densify_until;
        let densify_now = in_window && s > cfg.densify_from && s % cfg.densify_interval == 0;
        let prune_now = in_window && s % cfg.prune_interval == 0;
        let mut densify = None;
        if densify_now {
            let r = adaptive_density_control(
                &mut self.model,
                &mut self.optimizer,
                &mut self.stats,
                &cfg,
                self.extent,
                prune_now,
                &mut self.rng,
            );
            densify = Some(DensifyRecord { cloned: r.cloned, split: r.split, pruned: r.pruned });
        } else if prune_now {
            let pruned = prune_transparent(&mut self.model, &mut self.optimizer, &mut self.stats, cfg.prune_opacity);
            densify = Some(DensifyRecord { cloned: 0, split: 0, pruned });
        }
        if let Some(k) = cfg.opacity_reset_interval {
            if in_window && s % k == 0 {
                reset_opacity(&mut self.model, &mut self.optimizer);
            }
        }
        self.step = s;
        let rendered = RgbImage::from_data(out.width, out.height, out.color)?;
        Ok(StepMetrics {
            step: s,
            view,
            splats: self.model.len(),
            photometric: loss.photometric,
            distortion: loss.distortion,
            normal: loss.normal,
            total: loss.total,
            distortion_active: terms.distortion,
            normal_active: terms.normal,
            psnr: psnr(&rendered, target)?,
            position_lr,
            sh_degree: self.model.active_sh_degree,
            densify,
        })
    }

    /// Runs until `config.iterations` steps have been taken, calling
    /// `on_step` after each one.
    pub fn run(&mut self, dataset: &SceneDataset, mut on_step: impl FnMut(&Self, &StepMetrics) -> Result<()>) -> Result<()> {
        while self.step < self.config.iterations {
            let m = self.training_step(dataset)?;
            on_step(self, &m)?;
        }
        Ok(())
    }
}

/// Image metrics of one rendered view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewScore {
    pub view: usize,
    pub name: String,
    pub psnr: f64,
    pub ssim: f64,
}

/// Renders `views` and scores them against the dataset images.
pub fn evaluate_views(
    model: &SplatModel,
    dataset: &SceneDataset,
    views: &[usize],
    settings: &RenderSettings,
) -> Result<Vec<ViewScore>> {
    views
        .iter()
        .map(|&v| {
            let (_, out) = render(model, &dataset.cameras[v], settings)?;
            let img = RgbImage::from_data(out.width, out.height, out.color)?;
            Ok(ViewScore {
                view: v,
                name: dataset.names[v].clone(),
                psnr: psnr(&img, &dataset.images[v])?,
                ssim: ssim(&img, &dataset.images[v])?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CameraModel;
    use crate::synthetic::{generate_synthetic_scene, SceneKind};

    #[test]
    fn lone_point_uses_the_extent_fallback() {
        let m = init_from_points(&[Vec3::new(1.0, 2.0, 3.0)], None, 5.0, 3, 0.1, 0).unwrap();
        assert_eq!(m.len(), 1);
        let [su, sv] = m.scales(0);
        assert!((su - 0.05).abs() < 1e-15 && (sv - 0.05).abs() < 1e-15);
        assert!((m.opacity(0) - 0.1).abs() < 1e-12);
        assert_eq!(m.sh[0][0], [0.0; 3]);
        assert_eq!(m.active_sh_degree, 0);
    }

    #[test]
    fn grid_spacing_sets_the_scale() {
        let d = 0.25;
        let pts: Vec<Vec3> = (0..6)
            .flat_map(|i| (0..6).flat_map(move |j| (0..6).map(move |k| Vec3::new(i as f64, j as f64, k as f64) * d)))
            .collect();
        let m = init_from_points(&pts, None, 1.0, 0, 0.1, 1).unwrap();
        for (i, p) in pts.iter().enumerate() {
            let mut dist: Vec<f64> = pts.iter().filter(|q| *q != p).map(|q| (q - p).norm()).collect();
            dist.sort_by(f64::total_cmp);
            let expected = dist[..3].iter().sum::<f64>() / 3.0;
            assert!((m.scales(i)[0] - expected).abs() < 1e-12);
            assert!((m.scales(i)[0] - d).abs() < 1e-12);
        }
        assert_eq!(m, init_from_points(&pts, None, 1.0, 0, 0.1, 1).unwrap());
        assert_ne!(m.rotations, init_from_points(&pts, None, 1.0, 0, 0.1, 2).unwrap().rotations);
        assert!(init_from_points(&[], None, 1.0, 0, 0.1, 1).is_err());
    }

    #[test]
    fn colors_become_the_dc_band() {
        let m = init_from_points(&[Vec3::zeros(), Vec3::x()], Some(&[[0.2, 0.5, 0.9], [1.0, 0.0, 0.5]]), 1.0, 1, 0.1, 0)
            .unwrap();
        let (rgb, _) = crate::sh::eval_color(&m.sh[0], 0, &Vec3::z());
        for (a, b) in rgb.iter().zip([0.2, 0.5, 0.9]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn constant_view() -> SceneDataset {
        let cams: Vec<CameraModel> = [-0.2, 0.2]
            .iter()
            .map(|&x| CameraModel::look_at(Vec3::new(x, -3.0, 0.0), Vec3::zeros(), Vec3::z(), 40.0, 16, 16).unwrap())
            .collect();
        let images = vec![RgbImage::filled(16, 16, [0.7, 0.3, 0.2]); 2];
        SceneDataset {
            names: vec!["a".into(), "b".into()],
            scene_extent: crate::io::scene_extent(&cams),
            cameras: cams,
            images,
            init_points: vec![Vec3::zeros()],
            init_colors: None,
            train: vec![0, 1],
            test: vec![],
            background: [0.0; 3],
            mesh_path: None,
            depth_paths: vec![None, None],
        }
    }

    fn single_splat_config(iterations: usize) -> TrainConfig {
        let mut cfg = TrainConfig::scaled_to(iterations);
        cfg.densify_grad_threshold = 1e9;
        cfg.sh_degree = 0;
        cfg
    }

    #[test]
    fn single_splat_photometric_loss_decreases() {
        let ds = constant_view();
        let mut model = SplatModel::new(0);
        model.push(Vec3::zeros(), [0.7071, 0.7071, 0.0, 0.0], [0.6, 0.6], 0.5, [[0.0; 3]; MAX_SH_COEFFS]);
        let mut t = Trainer::from_model(&ds, single_splat_config(100), model).unwrap();
        let mut losses = Vec::new();
        t.run(&ds, |_, m| {
            losses.push(m.photometric);
            Ok(())
        })
        .unwrap();
        // windowed means decrease monotonically
        let means: Vec<f64> = losses.chunks(20).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
        assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
        assert!(losses[99] < 0.8 * losses[0]);
    }

    #[test]
    fn zero_learning_rates_leave_the_model_unchanged() {
        let ds = constant_view();
        let mut cfg = single_splat_config(10);
        cfg.lr = LearningRates::ZERO;
        let mut t = Trainer::new(&ds, cfg).unwrap();
        let before = t.model.clone();
        t.run(&ds, |_, _| Ok(())).unwrap();
        assert_eq!(t.model, before);
    }

    #[test]
    fn seeded_runs_repeat_exactly() {
        let scene = generate_synthetic_scene(SceneKind::Sphere, 6, 24, 5).unwrap();
        let ds = scene.dataset;
        let run = || {
            let mut cfg = TrainConfig::scaled_to(50);
            cfg.densify_interval = 10;
            let mut t = Trainer::new(&ds, cfg).unwrap();
            let mut log = Vec::new();
            t.run(&ds, |_, m| {
                log.push(serde_json::to_string(m).unwrap());
                Ok(())
            })
            .unwrap();
            (log, encode(&t.checkpoint()).unwrap())
        };
        let (a, ca) = run();
        let (b, cb) = run();
        assert_eq!(a, b);
        assert_eq!(ca, cb);
        assert!(a.iter().any(|l| l.contains("densify")));
    }

    #[test]
    fn optimizer_tracks_model_length() {
        let scene = generate_synthetic_scene(SceneKind::Cube, 4, 24, 1).unwrap();
        let ds = scene.dataset;
        let mut cfg = TrainConfig::scaled_to(40);
        cfg.densify_interval = 5;
        cfg.prune_interval = 10;
        let mut t = Trainer::new(&ds, cfg).unwrap();
        t.run(&ds, |t, _| {
            t.optimizer.validate(t.model.len())?;
            assert_eq!(t.stats.len(), t.model.len());
            t.model.validate()?;
            Ok(())
        })
        .unwrap();
    }
}
