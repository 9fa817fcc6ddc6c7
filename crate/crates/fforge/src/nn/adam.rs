//! Adam optimizer over flat parameter slices.

/// Adam with optional L2 weight decay folded into the gradient.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    pub weight_decay: f32,
    t: i32,
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
}

impl Adam {
    pub fn new(lr: f32, weight_decay: f32) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay, t: 0, m: Vec::new(), v: Vec::new() }
    }

    /// Apply one step. `params` and `grads` must line up in a fixed order
    /// across calls; moment buffers are allocated lazily on the first step.
    pub fn step(&mut self, params: &mut [&mut [f32]], grads: &[Vec<f32>]) {
        assert_eq!(params.len(), grads.len(), "param/grad count mismatch");
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.v = params.iter().map(|p| vec![0.0; p.len()]).collect();
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        for (i, p) in params.iter_mut().enumerate() {
            let g = &grads[i];
            assert_eq!(p.len(), g.len(), "param {i} size changed");
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for j in 0..p.len() {
                let grad = g[j] + self.weight_decay * p[j];
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * grad;
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * grad * grad;
                let mh = m[j] / bc1;
                let vh = v[j] / bc2;
                p[j] -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_converges() {
        // Minimize (x - 3)^2 from 0.
        let mut x = vec![0.0f32];
        let mut opt = Adam::new(0.1, 0.0);
        for _ in 0..500 {
            let g = vec![2.0 * (x[0] - 3.0)];
            let mut refs: Vec<&mut [f32]> = vec![x.as_mut_slice()];
            opt.step(&mut refs, &[g]);
        }
        assert!((x[0] - 3.0).abs() < 1e-2, "got {}", x[0]);
    }
}
