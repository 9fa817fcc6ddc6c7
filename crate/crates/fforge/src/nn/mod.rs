//! Minimal convolutional network engine.
//!
//! Layers are plain parameter holders with functional `forward` / `backward`
//! methods (no stored activations), which keeps inference shareable across
//! threads and makes gradient flow explicit in the two network definitions
//! that use them. Convolutions lower to GEMM via im2col; everything is f32
//! with fixed iteration order, so results are reproducible on any host.

mod adam;
mod cols;
mod resample;

pub use adam::Adam;
pub use cols::{col2im, conv_out_len, im2col, pack_channels, unpack_channels};
pub use resample::{upsample2x, upsample2x_backward, ResampleMode};

use ndarray::{Array1, Array2, Array4};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Feature map layout used throughout: (batch, channels, height, width).
pub type Tensor = Array4<f32>;

/// Kaiming-uniform init over `[-sqrt(6/fan_in), sqrt(6/fan_in)]`.
fn kaiming(shape: usize, fan_in: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let bound = (6.0 / fan_in as f64).sqrt() as f32;
    (0..shape).map(|_| rng.gen_range(-bound..bound)).collect()
}

/// 2D convolution, square kernel, zero padding `k/2`.
#[derive(Debug, Clone)]
pub struct Conv2d {
    /// Weights `(out_c, in_c, k, k)`.
    pub w: Array4<f32>,
    pub b: Array1<f32>,
    pub stride: usize,
}

impl Conv2d {
    pub fn new(in_c: usize, out_c: usize, k: usize, stride: usize, rng: &mut ChaCha8Rng) -> Self {
        let fan_in = in_c * k * k;
        let w = Array4::from_shape_vec((out_c, in_c, k, k), kaiming(out_c * fan_in, fan_in, rng))
            .expect("shape");
        Self { w, b: Array1::zeros(out_c), stride }
    }

    pub fn forward(&self, x: &Tensor) -> Tensor {
        let (n, _, h, w) = x.dim();
        let (oc, ic, k, _) = self.w.dim();
        debug_assert_eq!(ic, x.dim().1);
        let pad = k / 2;
        let oh = conv_out_len(h, k, self.stride, pad);
        let ow = conv_out_len(w, k, self.stride, pad);
        let cols = im2col(x, k, self.stride, pad);
        let w2 = self.w.view().into_shape_with_order((oc, ic * k * k)).expect("contiguous");
        let mut y2 = w2.dot(&cols);
        for (mut row, &bias) in y2.rows_mut().into_iter().zip(self.b.iter()) {
            row.mapv_inplace(|v| v + bias);
        }
        unpack_channels(&y2, n, oh, ow)
    }

    /// Returns `(grad_input, grad_w, grad_b)`.
    pub fn backward(&self, x: &Tensor, gy: &Tensor) -> (Tensor, Array4<f32>, Array1<f32>) {
        let (n, _, h, w) = x.dim();
        let (oc, ic, k, _) = self.w.dim();
        let pad = k / 2;
        let cols = im2col(x, k, self.stride, pad);
        let gy2 = pack_channels(gy);
        let gw2 = gy2.dot(&cols.t());
        let gw = gw2.into_shape_with_order((oc, ic, k, k)).expect("shape");
        let gb = Array1::from_iter(gy2.rows().into_iter().map(|r| r.sum()));
        let w2 = self.w.view().into_shape_with_order((oc, ic * k * k)).expect("contiguous");
        let gcols = w2.t().dot(&gy2);
        let gx = col2im(&gcols, n, ic, h, w, k, self.stride, pad);
        (gx, gw, gb)
    }
}

/// Transposed convolution with stride 2: exact 2x spatial upsampling for odd
/// kernels (padding `k/2`, output padding 1). Weights are `(in_c, out_c, k, k)`.
#[derive(Debug, Clone)]
pub struct ConvTranspose2d {
    pub w: Array4<f32>,
    pub b: Array1<f32>,
}

impl ConvTranspose2d {
    pub fn new(in_c: usize, out_c: usize, k: usize, rng: &mut ChaCha8Rng) -> Self {
        let fan_in = in_c * k * k;
        let w = Array4::from_shape_vec((in_c, out_c, k, k), kaiming(out_c * fan_in, fan_in, rng))
            .expect("shape");
        Self { w, b: Array1::zeros(out_c) }
    }

    pub fn forward(&self, x: &Tensor) -> Tensor {
        let (n, ic, h, w) = x.dim();
        let (wic, oc, k, _) = self.w.dim();
        debug_assert_eq!(ic, wic);
        let pad = k / 2;
        let (oh, ow) = (2 * h, 2 * w);
        // Transposed conv is the adjoint of a stride-2 conv from y to x:
        // scatter W^T x through col2im.
        let x2 = pack_channels(x);
        let w2 = self.w.view().into_shape_with_order((ic, oc * k * k)).expect("contiguous");
        let t = w2.t().dot(&x2);
        let mut y = col2im(&t, n, oc, oh, ow, k, 2, pad);
        for ci in 0..oc {
            let bias = self.b[ci];
            y.index_axis_mut(ndarray::Axis(1), ci).mapv_inplace(|v| v + bias);
        }
        y
    }

    pub fn backward(&self, x: &Tensor, gy: &Tensor) -> (Tensor, Array4<f32>, Array1<f32>) {
        let (_, ic, _, _) = x.dim();
        let (_, oc, k, _) = self.w.dim();
        let pad = k / 2;
        // grad wrt input is the matching stride-2 convolution of gy.
        let gcols = im2col(gy, k, 2, pad);
        let w2 = self.w.view().into_shape_with_order((ic, oc * k * k)).expect("contiguous");
        let gx2 = w2.dot(&gcols);
        let (n, _, h, w) = x.dim();
        let gx = unpack_channels(&gx2, n, h, w);
        let x2 = pack_channels(x);
        let gw2 = x2.dot(&gcols.t());
        let gw = gw2.into_shape_with_order((ic, oc, k, k)).expect("shape");
        let gy2 = pack_channels(gy);
        let gb = Array1::from_iter(gy2.rows().into_iter().map(|r| r.sum()));
        (gx, gw, gb)
    }
}

/// Fully connected layer over `(n, in)` activations.
#[derive(Debug, Clone)]
pub struct Dense {
    /// `(out, in)`.
    pub w: Array2<f32>,
    pub b: Array1<f32>,
}

impl Dense {
    pub fn new(in_f: usize, out_f: usize, rng: &mut ChaCha8Rng) -> Self {
        let w = Array2::from_shape_vec((out_f, in_f), kaiming(out_f * in_f, in_f, rng))
            .expect("shape");
        Self { w, b: Array1::zeros(out_f) }
    }

    /// `x` is `(n, in)`; returns `(n, out)`.
    pub fn forward(&self, x: &Array2<f32>) -> Array2<f32> {
        x.dot(&self.w.t()) + &self.b
    }

    pub fn backward(&self, x: &Array2<f32>, gy: &Array2<f32>) -> (Array2<f32>, Array2<f32>, Array1<f32>) {
        let gx = gy.dot(&self.w);
        let gw = gy.t().dot(x);
        let gb = Array1::from_iter(gy.columns().into_iter().map(|col| col.sum()));
        (gx, gw, gb)
    }
}

pub fn relu(x: &Tensor) -> Tensor {
    x.mapv(|v| v.max(0.0))
}

/// `x` is the layer input that produced the activation.
pub fn relu_backward(x: &Tensor, gy: &Tensor) -> Tensor {
    let mut gx = gy.clone();
    gx.zip_mut_with(x, |g, &v| {
        if v <= 0.0 {
            *g = 0.0;
        }
    });
    gx
}

pub fn sigmoid(x: &Tensor) -> Tensor {
    x.mapv(sigmoid_scalar)
}

#[inline]
pub fn sigmoid_scalar(v: f32) -> f32 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// `y` is the sigmoid output.
pub fn sigmoid_backward(y: &Tensor, gy: &Tensor) -> Tensor {
    let mut gx = gy.clone();
    gx.zip_mut_with(y, |g, &s| *g *= s * (1.0 - s));
    gx
}

/// Global average pool `(n, c, h, w) -> (n, c)`.
pub fn global_avg_pool(x: &Tensor) -> Array2<f32> {
    let (n, c, h, w) = x.dim();
    let scale = 1.0 / (h * w) as f32;
    let mut out = Array2::<f32>::zeros((n, c));
    for ni in 0..n {
        for ci in 0..c {
            let mut acc = 0.0f32;
            for v in x.index_axis(ndarray::Axis(0), ni).index_axis(ndarray::Axis(0), ci).iter() {
                acc += v;
            }
            out[[ni, ci]] = acc * scale;
        }
    }
    out
}

pub fn global_avg_pool_backward(gy: &Array2<f32>, h: usize, w: usize) -> Tensor {
    let (n, c) = gy.dim();
    let scale = 1.0 / (h * w) as f32;
    let mut gx = Array4::<f32>::zeros((n, c, h, w));
    for ni in 0..n {
        for ci in 0..c {
            let g = gy[[ni, ci]] * scale;
            gx.index_axis_mut(ndarray::Axis(0), ni)
                .index_axis_mut(ndarray::Axis(0), ci)
                .fill(g);
        }
    }
    gx
}

/// Inverted dropout mask: entries are `0` or `1/(1-p)`.
pub fn dropout_mask(shape: (usize, usize), p: f32, rng: &mut ChaCha8Rng) -> Array2<f32> {
    let keep = 1.0 - p;
    Array2::from_shape_fn(shape, |_| if rng.gen::<f32>() < keep { 1.0 / keep } else { 0.0 })
}

/// Mean binary cross-entropy on logits; returns `(loss, dloss/dlogits)`.
pub fn bce_with_logits(logits: &Array1<f32>, targets: &Array1<f32>) -> (f32, Array1<f32>) {
    let n = logits.len() as f32;
    let mut loss = 0.0f64;
    let mut grad = Array1::<f32>::zeros(logits.len());
    for i in 0..logits.len() {
        let z = logits[i];
        let y = targets[i];
        loss += f64::from(z.max(0.0) - z * y + (-z.abs()).exp().ln_1p());
        grad[i] = (sigmoid_scalar(z) - y) / n;
    }
    ((loss / f64::from(n)) as f32, grad)
}

/// Mean absolute error over all elements; returns `(loss, dloss/dpred)`.
pub fn l1_loss(pred: &Tensor, target: &Tensor) -> (f32, Tensor) {
    let numel = pred.len() as f32;
    let mut loss = 0.0f64;
    let mut grad = pred.clone();
    grad.zip_mut_with(target, |p, &t| {
        let d = *p - t;
        loss += f64::from(d.abs());
        *p = if d > 0.0 {
            1.0 / numel
        } else if d < 0.0 {
            -1.0 / numel
        } else {
            0.0
        };
    });
    ((loss / f64::from(numel)) as f32, grad)
}

/// Mean squared error over all elements; returns `(loss, dloss/dpred)`.
pub fn l2_loss(pred: &Tensor, target: &Tensor) -> (f32, Tensor) {
    let numel = pred.len() as f32;
    let mut loss = 0.0f64;
    let mut grad = pred.clone();
    grad.zip_mut_with(target, |p, &t| {
        let d = *p - t;
        loss += f64::from(d * d);
        *p = 2.0 * d / numel;
    });
    ((loss / f64::from(numel)) as f32, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array;
    use rand_chacha::rand_core::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(42)
    }

    /// Finite-difference check of dLoss/dx for loss = sum(y * probe).
    fn fd_check_input<F: Fn(&Tensor) -> Tensor>(
        f: F,
        analytic: &Tensor,
        x: &Tensor,
        probe: &Tensor,
        samples: &[(usize, usize, usize, usize)],
        tol: f32,
    ) {
        let h = 1e-2f32;
        for &(n, c, i, j) in samples {
            let mut xp = x.clone();
            xp[[n, c, i, j]] += h;
            let mut xm = x.clone();
            xm[[n, c, i, j]] -= h;
            let lp: f32 = (&f(&xp) * probe).sum();
            let lm: f32 = (&f(&xm) * probe).sum();
            let fd = (lp - lm) / (2.0 * h);
            let an = analytic[[n, c, i, j]];
            let denom = fd.abs().max(an.abs()).max(1e-3);
            assert!(
                ((fd - an) / denom).abs() < tol,
                "fd {fd} vs analytic {an} at ({n},{c},{i},{j})"
            );
        }
    }

    #[test]
    fn conv2d_gradients_match_finite_differences() {
        let mut r = rng();
        for stride in [1usize, 2] {
            let conv = Conv2d::new(2, 3, 3, stride, &mut r);
            let x = Array::from_shape_fn((2, 2, 6, 6), |_| r.gen_range(-1.0f32..1.0));
            let y = conv.forward(&x);
            let probe = Array::from_shape_fn(y.dim(), |_| r.gen_range(-1.0f32..1.0));
            let (gx, gw, gb) = conv.backward(&x, &probe);
            fd_check_input(|t| conv.forward(t), &gx, &x, &probe, &[(0, 0, 0, 0), (1, 1, 3, 2), (0, 1, 5, 5)], 0.05);
            // Weight gradient at a couple of positions.
            let h = 1e-2f32;
            for &(o, c, ki, kj) in &[(0usize, 0usize, 0usize, 0usize), (2, 1, 2, 1)] {
                let mut cp = conv.clone();
                cp.w[[o, c, ki, kj]] += h;
                let mut cm = conv.clone();
                cm.w[[o, c, ki, kj]] -= h;
                let fd = ((&cp.forward(&x) * &probe).sum() - (&cm.forward(&x) * &probe).sum()) / (2.0 * h);
                let an = gw[[o, c, ki, kj]];
                assert!((fd - an).abs() / fd.abs().max(1.0) < 0.05, "gw fd {fd} vs {an}");
            }
            let mut cb = conv.clone();
            cb.b[1] += h;
            let fd = ((&cb.forward(&x) * &probe).sum() - (&conv.forward(&x) * &probe).sum()) / h;
            assert!((fd - gb[1]).abs() / fd.abs().max(1.0) < 0.05, "gb fd {fd} vs {}", gb[1]);
        }
    }

    #[test]
    fn conv_transpose_doubles_size_and_matches_fd() {
        let mut r = rng();
        for k in [3usize, 5] {
            let deconv = ConvTranspose2d::new(3, 2, k, &mut r);
            let x = Array::from_shape_fn((1, 3, 4, 4), |_| r.gen_range(-1.0f32..1.0));
            let y = deconv.forward(&x);
            assert_eq!(y.dim(), (1, 2, 8, 8));
            let probe = Array::from_shape_fn(y.dim(), |_| r.gen_range(-1.0f32..1.0));
            let (gx, gw, _gb) = deconv.backward(&x, &probe);
            fd_check_input(|t| deconv.forward(t), &gx, &x, &probe, &[(0, 0, 0, 0), (0, 2, 3, 1)], 0.05);
            let h = 1e-2f32;
            let mut dp = deconv.clone();
            dp.w[[1, 0, 1, 1]] += h;
            let mut dm = deconv.clone();
            dm.w[[1, 0, 1, 1]] -= h;
            let fd = ((&dp.forward(&x) * &probe).sum() - (&dm.forward(&x) * &probe).sum()) / (2.0 * h);
            assert!((fd - gw[[1, 0, 1, 1]]).abs() / fd.abs().max(1.0) < 0.05);
        }
    }

    #[test]
    fn dense_and_pool_gradients() {
        let mut r = rng();
        let dense = Dense::new(4, 2, &mut r);
        let x = Array::from_shape_fn((3, 4), |_| r.gen_range(-1.0f32..1.0));
        let probe = Array::from_shape_fn((3, 2), |_| r.gen_range(-1.0f32..1.0));
        let (gx, gw, gb) = dense.backward(&x, &probe);
        let h = 1e-2f32;
        let mut xp = x.clone();
        xp[[1, 2]] += h;
        let fd = ((&dense.forward(&xp) * &probe).sum() - (&dense.forward(&x) * &probe).sum()) / h;
        assert!((fd - gx[[1, 2]]).abs() < 0.02, "{fd} vs {}", gx[[1, 2]]);
        assert_eq!(gw.dim(), (2, 4));
        assert_eq!(gb.len(), 2);

        let t = Array::from_shape_fn((2, 3, 4, 4), |_| r.gen_range(-1.0f32..1.0));
        let pooled = global_avg_pool(&t);
        let gp = Array::from_shape_fn(pooled.dim(), |_| r.gen_range(-1.0f32..1.0));
        let gt = global_avg_pool_backward(&gp, 4, 4);
        let lhs: f32 = (&pooled * &gp).sum();
        let rhs: f32 = (&t * &gt).sum();
        assert!((lhs - rhs).abs() < 1e-3);
    }

    #[test]
    fn bce_matches_finite_differences() {
        let logits = Array1::from_vec(vec![0.3f32, -1.2, 2.0, 0.0]);
        let targets = Array1::from_vec(vec![1.0f32, 0.0, 0.0, 1.0]);
        let (_, grad) = bce_with_logits(&logits, &targets);
        let h = 1e-3f32;
        for i in 0..logits.len() {
            let mut lp = logits.clone();
            lp[i] += h;
            let mut lm = logits.clone();
            lm[i] -= h;
            let fd = (bce_with_logits(&lp, &targets).0 - bce_with_logits(&lm, &targets).0) / (2.0 * h);
            assert!((fd - grad[i]).abs() < 1e-3, "fd {fd} vs {}", grad[i]);
        }
    }

    #[test]
    fn recon_losses_match_finite_differences() {
        let mut r = rng();
        let pred = Array::from_shape_fn((1, 2, 3, 3), |_| r.gen_range(0.0f32..1.0));
        let target = Array::from_shape_fn((1, 2, 3, 3), |_| r.gen_range(0.0f32..1.0));
        for loss_fn in [l1_loss, l2_loss] {
            let (_, grad) = loss_fn(&pred, &target);
            let h = 1e-3f32;
            let mut pp = pred.clone();
            pp[[0, 1, 2, 2]] += h;
            let mut pm = pred.clone();
            pm[[0, 1, 2, 2]] -= h;
            let fd = (loss_fn(&pp, &target).0 - loss_fn(&pm, &target).0) / (2.0 * h);
            assert!((fd - grad[[0, 1, 2, 2]]).abs() < 1e-3);
        }
    }

    #[test]
    fn dropout_mask_is_seeded_and_scaled() {
        let mut r1 = rng();
        let mut r2 = rng();
        let m1 = dropout_mask((8, 16), 0.25, &mut r1);
        let m2 = dropout_mask((8, 16), 0.25, &mut r2);
        assert_eq!(m1, m2);
        for &v in m1.iter() {
            assert!(v == 0.0 || (v - 1.0 / 0.75).abs() < 1e-6);
        }
    }
}
