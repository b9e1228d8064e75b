//! Adaptive density control: clone, split and prune.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::geometry::rotation_from_quaternion;
use crate::gradients::ParamGrads;
use crate::model::{logit, SplatModel};
use crate::rasterizer::TileGrid;

use super::config::TrainConfig;
use super::optimizer::OptimizerState;

/// Running sums of the screen-space gradient norm per splat, counted over
/// the views in which the splat was visible.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DensifyStats {
    pub grad_sum: Vec<f64>,
    pub visible: Vec<u32>,
}

impl DensifyStats {
    pub fn new(n: usize) -> Self {
        Self { grad_sum: vec![0.0; n], visible: vec![0; n] }
    }

    pub fn len(&self) -> usize {
        self.grad_sum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grad_sum.is_empty()
    }

    pub fn accumulate(&mut self, grid: &TileGrid, grads: &ParamGrads) {
        for (i, p) in grid.projections.iter().enumerate() {
            if p.is_some() {
                self.grad_sum[i] += grads.screen_grad_norm[i];
                self.visible[i] += 1;
            }
        }
    }

    pub fn mean(&self, i: usize) -> f64 {
        if self.visible[i] == 0 {
            0.0
        } else {
            self.grad_sum[i] / self.visible[i] as f64
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DensifyReport {
    pub cloned: usize,
    pub split: usize,
    pub pruned: usize,
}

/// Clones small and splits large splats whose mean screen gradient exceeds
/// the threshold, then prunes transparent ones when `prune` is set. New
/// splats get zeroed optimizer moments; statistics are reset.
pub fn adaptive_density_control(
    model: &mut SplatModel,
    state: &mut OptimizerState,
    stats: &mut DensifyStats,
    config: &TrainConfig,
    extent: f64,
    prune: bool,
    rng: &mut impl Rng,
) -> DensifyReport {
    let n = model.len();
    let mut report = DensifyReport::default();
    let mut candidates: Vec<usize> = (0..n).filter(|&i| stats.mean(i) > config.densify_grad_threshold).collect();
    // Respect the splat budget, preferring the largest gradients.
    let budget = config.max_splats.saturating_sub(n);
    let large: Vec<bool> = (0..n)
        .map(|i| {
            let [su, sv] = model.scales(i);
            su.max(sv) > config.percent_dense * extent
        })
        .collect();
    let cost = |i: usize| if large[i] { config.split_children - 1 } else { 1 };
    if candidates.iter().map(|&i| cost(i)).sum::<usize>() > budget {
        candidates.sort_by(|&a, &b| stats.mean(b).total_cmp(&stats.mean(a)).then(a.cmp(&b)));
        let mut used = 0;
        candidates.retain(|&i| {
            let c = cost(i);
            let ok = used + c <= budget;
            if ok {
                used += c;
            }
            ok
        });
        candidates.sort_unstable();
    }
    let mut remove = vec![false; n];
    for &i in &candidates {
        if large[i] {
            let r = rotation_from_quaternion(model.rotations[i]);
            let scales = model.scales(i);
            for _ in 0..config.split_children {
                let u: f64 = rng.sample::<f64, _>(StandardNormal) * scales[0];
                let v: f64 = rng.sample::<f64, _>(StandardNormal) * scales[1];
                let offset = r.column(0) * u + r.column(1) * v;
                model.duplicate(i);
                let j = model.len() - 1;
                for k in 0..3 {
                    model.centers[j][k] += offset[k];
                }
                for k in 0..2 {
                    model.log_scales[j][k] = (scales[k] / config.split_factor).ln();
                }
            }
            remove[i] = true;
            report.split += 1;
        } else {
            model.duplicate(i);
            report.cloned += 1;
        }
    }
    let added = model.len() - n;
    state.push_zeros(added);
    remove.resize(model.len(), false);
    if prune {
        for (i, r) in remove.iter_mut().enumerate() {
            if model.opacity(i) < config.prune_opacity && !*r {
                *r = true;
                report.pruned += 1;
            }
        }
    }
    let keep: Vec<bool> = remove.iter().map(|r| !r).collect();
    model.retain(&keep);
    state.retain(&keep);
    model.normalize_rotations();
    *stats = DensifyStats::new(model.len());
    report
}

/// Removes splats with opacity below `threshold`. Returns how many went.
pub fn prune_transparent(
    model: &mut SplatModel,
    state: &mut OptimizerState,
    stats: &mut DensifyStats,
    threshold: f64,
) -> usize {
    let keep: Vec<bool> = (0..model.len()).map(|i| model.opacity(i) >= threshold).collect();
    let pruned = keep.iter().filter(|k| !**k).count();
    model.retain(&keep);
    state.retain(&keep);
    let mut kept = DensifyStats::new(0);
    for (i, k) in keep.iter().enumerate() {
        if *k {
            kept.grad_sum.push(stats.grad_sum[i]);
            kept.visible.push(stats.visible[i]);
        }
    }
    *stats = kept;
    pruned
}

/// Caps every opacity at `0.01`.
pub fn reset_opacity(model: &mut SplatModel, state: &mut OptimizerState) {
    let cap = logit(0.01);
    for o in &mut model.opacity_logits {
        *o = o.min(cap);
    }
    let mo = &mut state.moments[3];
    mo.m.iter_mut().for_each(|x| *x = 0.0);
    mo.v.iter_mut().for_each(|x| *x = 0.0);
}
