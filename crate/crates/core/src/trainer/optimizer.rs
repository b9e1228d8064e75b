//! Adam over the model's parameter arrays.

use crate::error::{Error, Result};
use crate::gradients::ParamGrads;
use crate::model::SplatModel;
use crate::sh::MAX_SH_COEFFS;

use super::config::{LearningRates, TrainConfig};

/// Parameter groups in storage order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Group {
    Center,
    Rotation,
    LogScale,
    Opacity,
    Sh,
}

impl Group {
    pub const ALL: [Group; 5] = [Group::Center, Group::Rotation, Group::LogScale, Group::Opacity, Group::Sh];

    /// Values per splat.
    pub fn stride(self) -> usize {
        match self {
            Group::Center => 3,
            Group::Rotation => 4,
            Group::LogScale => 2,
            Group::Opacity => 1,
            Group::Sh => 3 * MAX_SH_COEFFS,
        }
    }
}

/// First and second moments of one group, `stride` values per splat.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub step: u64,
    /// Indexed like [`Group::ALL`].
    pub moments: Vec<Moments>,
}

impl OptimizerState {
    pub fn new(n: usize) -> Self {
        let moments = Group::ALL
            .iter()
            .map(|g| Moments { m: vec![0.0; n * g.stride()], v: vec![0.0; n * g.stride()] })
            .collect();
        Self { step: 0, moments }
    }

    /// Number of splats the state covers.
    pub fn len(&self) -> usize {
        self.moments[0].m.len() / Group::Center.stride()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks that every array matches a model of `n` splats and is finite.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.moments.len() != Group::ALL.len() {
            return Err(Error::DimensionMismatch("optimizer group count".into()));
        }
        for (g, mo) in Group::ALL.iter().zip(&self.moments) {
            if mo.m.len() != n * g.stride() || mo.v.len() != n * g.stride() {
                return Err(Error::DimensionMismatch(format!("optimizer moments for {g:?} do not match {n} splats")));
            }
            if !mo.m.iter().chain(&mo.v).all(|x| x.is_finite()) {
                return Err(Error::NonFinite(format!("optimizer moments for {g:?}")));
            }
        }
        Ok(())
    }

    /// Keeps the entries of splats with `keep[i]`.
    pub fn retain(&mut self, keep: &[bool]) {
        for (g, mo) in Group::ALL.iter().zip(&mut self.moments) {
            let s = g.stride();
            for arr in [&mut mo.m, &mut mo.v] {
                let mut out = Vec::with_capacity(arr.len());
                for (i, chunk) in arr.chunks_exact(s).enumerate() {
                    if keep[i] {
                        out.extend_from_slice(chunk);
                    }
                }
                *arr = out;
            }
        }
    }

    /// Appends zeroed moments for `k` new splats.
    pub fn push_zeros(&mut self, k: usize) {
        for (g, mo) in Group::ALL.iter().zip(&mut self.moments) {
            let n = mo.m.len() + k * g.stride();
            mo.m.resize(n, 0.0);
            mo.v.resize(n, 0.0);
        }
    }
}

/// One Adam update of a flat array. `lr(j)` gives the rate of component `j`
/// within a splat's stride.
#[allow(clippy::too_many_arguments)]
fn adam(
    params: &mut [f64],
    grads: &[f64],
    mo: &mut Moments,
    stride: usize,
    lr: impl Fn(usize) -> f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: u64,
) {
    let bc1 = 1.0 - beta1.powi(step as i32);
    let bc2 = 1.0 - beta2.powi(step as i32);
    for (k, ((p, &g), (m, v))) in params.iter_mut().zip(grads).zip(mo.m.iter_mut().zip(mo.v.iter_mut())).enumerate() {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let rate = lr(k % stride);
        if rate != 0.0 {
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= rate * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

/// Applies one Adam step to every parameter group. The center rate is
/// passed in already scheduled.
pub fn adam_step(
    model: &mut SplatModel,
    grads: &ParamGrads,
    state: &mut OptimizerState,
    config: &TrainConfig,
    position_lr: f64,
) -> Result<()> {
    state.validate(model.len())?;
    if grads.len() != model.len() {
        return Err(Error::DimensionMismatch("gradients do not match the model".into()));
    }
    state.step += 1;
    let (b1, b2, eps, t) = (config.adam_beta1, config.adam_beta2, config.adam_eps, state.step);
    let LearningRates { sh_dc, sh_rest, opacity, scaling, rotation, .. } = config.lr;
    let [center, rot, scale, opac, sh] = &mut state.moments[..] else { unreachable!("five groups") };
    adam(model.centers.as_flattened_mut(), grads.d_center.as_flattened(), center, 3, |_| position_lr, b1, b2, eps, t);
    adam(model.rotations.as_flattened_mut(), grads.d_quaternion.as_flattened(), rot, 4, |_| rotation, b1, b2, eps, t);
    adam(model.log_scales.as_flattened_mut(), grads.d_log_scale.as_flattened(), scale, 2, |_| scaling, b1, b2, eps, t);
    adam(&mut model.opacity_logits, &grads.d_opacity_logit, opac, 1, |_| opacity, b1, b2, eps, t);
    adam(
        model.sh.as_flattened_mut().as_flattened_mut(),
        grads.d_sh.as_flattened().as_flattened(),
        sh,
        Group::Sh.stride(),
        |j| if j < 3 { sh_dc } else { sh_rest },
        b1,
        b2,
        eps,
        t,
    );
    if rotation != 0.0 {
        model.normalize_rotations();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    fn model(n: usize) -> SplatModel {
        let mut m = SplatModel::new(1);
        for i in 0..n {
            m.push(Vec3::new(i as f64, 0.0, 2.0), [1.0, 0.0, 0.0, 0.0], [0.1, 0.2], 0.5, [[0.1; 3]; MAX_SH_COEFFS]);
        }
        m
    }

    #[test]
    fn first_step_moves_by_the_learning_rate() {
        let mut m = model(2);
        let mut g = ParamGrads::zeros(2);
        g.d_center[1] = [2.0, -3.0, 0.0];
        g.d_opacity_logit[0] = 0.5;
        let mut s = OptimizerState::new(2);
        let cfg = TrainConfig::default();
        let before = m.clone();
        adam_step(&mut m, &g, &mut s, &cfg, 0.01).unwrap();
        // bias-corrected first step is lr * sign(g)
        assert!((m.centers[1][0] - (before.centers[1][0] - 0.01)).abs() < 1e-12);
        assert!((m.centers[1][1] - (before.centers[1][1] + 0.01)).abs() < 1e-12);
        assert_eq!(m.centers[1][2], before.centers[1][2]);
        assert!((m.opacity_logits[0] - (before.opacity_logits[0] - cfg.lr.opacity)).abs() < 1e-12);
        assert_eq!(m.centers[0], before.centers[0]);
    }

    #[test]
    fn zero_rates_leave_the_model_unchanged() {
        let mut m = model(3);
        let mut g = ParamGrads::zeros(3);
        g.d_center[2] = [1.0, 1.0, 1.0];
        g.d_sh[0][0] = [1.0; 3];
        let mut cfg = TrainConfig::default();
        cfg.lr = LearningRates::ZERO;
        let mut s = OptimizerState::new(3);
        let before = m.clone();
        adam_step(&mut m, &g, &mut s, &cfg, 0.0).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn retain_and_push_keep_lengths_in_sync() {
        let mut s = OptimizerState::new(4);
        s.moments[0].m[3] = 7.0;
        s.retain(&[false, true, false, true]);
        assert_eq!(s.len(), 2);
        assert_eq!(s.moments[0].m[0], 7.0);
        s.push_zeros(3);
        s.validate(5).unwrap();
        assert!(s.validate(4).is_err());
    }
}
