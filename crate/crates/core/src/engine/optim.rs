//! AdamW with decoupled weight decay, and the one-cycle learning-rate
//! schedule.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamW {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u32,
}

impl AdamW {
    pub fn new(params: usize, weight_decay: f64) -> Self {
        AdamW {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            m: vec![0.0; params],
            v: vec![0.0; params],
            step: 0,
        }
    }

    pub fn steps_taken(&self) -> u32 {
        self.step
    }

    /// One update: `p *= 1 - lr * wd`, then the bias-corrected Adam step.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        assert_eq!(params.len(), grad.len());
        assert_eq!(params.len(), self.m.len());
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        let decay = 1.0 - lr * self.weight_decay;
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] = params[i] * decay - lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Linear warm-up from `peak / div_factor` to `peak`, then cosine
/// annealing to `initial / final_div_factor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneCycle {
    pub peak: f64,
    pub total_steps: usize,
    pub warmup_fraction: f64,
    pub div_factor: f64,
    pub final_div_factor: f64,
}

impl OneCycle {
    pub fn new(peak: f64, total_steps: usize, warmup_fraction: f64) -> Self {
        OneCycle {
            peak,
            total_steps: total_steps.max(1),
            warmup_fraction,
            div_factor: 25.0,
            final_div_factor: 1e4,
        }
    }

    pub fn initial(&self) -> f64 {
        self.peak / self.div_factor
    }

    pub fn final_lr(&self) -> f64 {
        self.initial() / self.final_div_factor
    }

    /// Step at which the peak is reached.
    pub fn warm_end(&self) -> usize {
        ((self.warmup_fraction * (self.total_steps - 1) as f64).floor() as usize).min(self.total_steps - 1)
    }

    pub fn lr(&self, step: usize) -> f64 {
        let last = self.total_steps - 1;
        let step = step.min(last);
        let warm = self.warm_end();
        if step == warm {
            return self.peak;
        }
        if step < warm {
            let t = step as f64 / warm as f64;
            return self.initial() + (self.peak - self.initial()) * t;
        }
        let t = (step - warm) as f64 / (last - warm) as f64;
        let cos = (1.0 + (std::f64::consts::PI * t).cos()) / 2.0;
        self.final_lr() + (self.peak - self.final_lr()) * cos
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_step_only_decays() {
        let mut opt = AdamW::new(3, 0.01);
        let mut p = vec![1.0, -2.0, 0.5];
        let before = p.clone();
        opt.step(&mut p, &[0.0; 3], 1e-3);
        for (a, b) in p.iter().zip(&before) {
            assert_eq!(*a, b * (1.0 - 1e-3 * 0.01));
        }
    }

    #[test]
    fn schedule_shape() {
        let s = OneCycle::new(3e-4, 500, 0.3);
        let lrs: Vec<f64> = (0..500).map(|i| s.lr(i)).collect();
        assert!(lrs[0] < 3e-4);
        let max = lrs.iter().cloned().fold(0.0, f64::max);
        assert!((max - 3e-4).abs() < 1e-9);
        assert!(lrs[499] < 0.01 * 3e-4);
        assert!(lrs.windows(2).take(s.warm_end()).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn single_step_schedule_is_peak() {
        assert_eq!(OneCycle::new(1e-3, 1, 0.3).lr(0), 1e-3);
    }
}
