//! Adam optimizer with bias correction.

use crate::diff::matrix::Matrix;

#[derive(Clone, Copy, Debug)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..AdamConfig::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Per-parameter first and second moment estimates plus the step counter.
#[derive(Clone, Debug)]
pub struct AdamState {
    cfg: AdamConfig,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    step: u64,
}

impl AdamState {
    /// Moments start at zero, shaped like the parameters they track.
    pub fn new(cfg: AdamConfig, shapes: &[(usize, usize)]) -> Self {
        AdamState {
            cfg,
            m: shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
            v: shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
            step: 0,
        }
    }

    pub fn for_params(cfg: AdamConfig, params: &[&Matrix]) -> Self {
        let shapes: Vec<_> = params.iter().map(|p| (p.rows(), p.cols())).collect();
        AdamState::new(cfg, &shapes)
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn lr(&self) -> f64 {
        self.cfg.lr
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.cfg.lr = lr;
    }

    /// One Adam update over aligned parameter and gradient lists.
    pub fn step(&mut self, params: &mut [&mut Matrix], grads: &[Matrix]) {
        assert_eq!(params.len(), self.m.len(), "parameter count changed");
        assert_eq!(grads.len(), self.m.len(), "gradient count mismatch");
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.cfg.beta1.powi(t);
        let bc2 = 1.0 - self.cfg.beta2.powi(t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            assert!(p.same_shape(g), "gradient shape mismatch");
            let (ms, vs, ps, gs) = (
                m.as_mut_slice(),
                v.as_mut_slice(),
                p.as_mut_slice(),
                g.as_slice(),
            );
            for i in 0..gs.len() {
                let gi = gs[i];
                ms[i] = self.cfg.beta1 * ms[i] + (1.0 - self.cfg.beta1) * gi;
                vs[i] = self.cfg.beta2 * vs[i] + (1.0 - self.cfg.beta2) * gi * gi;
                let mhat = ms[i] / bc1;
                let vhat = vs[i] / bc2;
                ps[i] -= self.cfg.lr * mhat / (vhat.sqrt() + self.cfg.eps);
            }
        }
    }
}
