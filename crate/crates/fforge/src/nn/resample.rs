//! Fixed 2x feature-map resampling (nearest / bilinear / bicubic).
//!
//! All modes use the pixel-center (`align_corners = false`) convention, so a
//! 2x upsample has constant per-phase tap weights. Backward passes are exact
//! adjoints of the forward gathers.

use ndarray::Array4;
use serde::{Deserialize, Serialize};

/// Interpolation used by non-learned decoder upsampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResampleMode {
    Nearest,
    Bilinear,
    Bicubic,
}

/// One output position along an axis: source taps and weights.
#[derive(Debug, Clone)]
struct Taps {
    idx: [usize; 4],
    w: [f32; 4],
    len: usize,
}

/// Catmull-Rom style cubic kernel with a = -0.75 (the common image default).
fn cubic(x: f64) -> f64 {
    const A: f64 = -0.75;
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

fn up2_taps(len_in: usize, mode: ResampleMode) -> Vec<Taps> {
    let clamp = |i: isize| i.clamp(0, len_in as isize - 1) as usize;
    (0..2 * len_in)
        .map(|d| {
            let src = (d as f64 + 0.5) / 2.0 - 0.5;
            match mode {
                ResampleMode::Nearest => {
                    let i = clamp((d / 2) as isize);
                    Taps { idx: [i, 0, 0, 0], w: [1.0, 0.0, 0.0, 0.0], len: 1 }
                }
                ResampleMode::Bilinear => {
                    let i0 = src.floor() as isize;
                    let f = (src - i0 as f64) as f32;
                    Taps {
                        idx: [clamp(i0), clamp(i0 + 1), 0, 0],
                        w: [1.0 - f, f, 0.0, 0.0],
                        len: 2,
                    }
                }
                ResampleMode::Bicubic => {
                    let i0 = src.floor() as isize;
                    let f = src - i0 as f64;
                    let mut idx = [0usize; 4];
                    let mut w = [0f32; 4];
                    for t in 0..4 {
                        idx[t] = clamp(i0 - 1 + t as isize);
                        w[t] = cubic(f + 1.0 - t as f64) as f32;
                    }
                    Taps { idx, w, len: 4 }
                }
            }
        })
        .collect()
}

/// Upsample a feature map by exactly 2x in both spatial dimensions.
pub fn upsample2x(x: &Array4<f32>, mode: ResampleMode) -> Array4<f32> {
    let (n, c, h, w) = x.dim();
    let ty = up2_taps(h, mode);
    let tx = up2_taps(w, mode);
    let mut y = Array4::<f32>::zeros((n, c, 2 * h, 2 * w));
    for ni in 0..n {
        for ci in 0..c {
            let xp = x.index_axis(ndarray::Axis(0), ni);
            let xp = xp.index_axis(ndarray::Axis(0), ci);
            for (oy, tyo) in ty.iter().enumerate() {
                for (ox, txo) in tx.iter().enumerate() {
                    let mut acc = 0.0f32;
                    for a in 0..tyo.len {
                        for b in 0..txo.len {
                            acc += tyo.w[a] * txo.w[b] * xp[[tyo.idx[a], txo.idx[b]]];
                        }
                    }
                    y[[ni, ci, oy, ox]] = acc;
                }
            }
        }
    }
    y
}

/// Adjoint of [`upsample2x`]: scatter output-gradient energy onto the input.
pub fn upsample2x_backward(gy: &Array4<f32>, mode: ResampleMode) -> Array4<f32> {
    let (n, c, oh, ow) = gy.dim();
    let (h, w) = (oh / 2, ow / 2);
    let ty = up2_taps(h, mode);
    let tx = up2_taps(w, mode);
    let mut gx = Array4::<f32>::zeros((n, c, h, w));
    for ni in 0..n {
        for ci in 0..c {
            for (oy, tyo) in ty.iter().enumerate() {
                for (ox, txo) in tx.iter().enumerate() {
                    let g = gy[[ni, ci, oy, ox]];
                    for a in 0..tyo.len {
                        for b in 0..txo.len {
                            gx[[ni, ci, tyo.idx[a], txo.idx[b]]] += tyo.w[a] * txo.w[b] * g;
                        }
                    }
                }
            }
        }
    }
    gx
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array;

    #[test]
    fn nearest_replicates_blocks() {
        let x = Array::from_shape_vec((1, 1, 2, 2), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = upsample2x(&x, ResampleMode::Nearest);
        assert_eq!(y[[0, 0, 0, 0]], 1.0);
        assert_eq!(y[[0, 0, 0, 1]], 1.0);
        assert_eq!(y[[0, 0, 1, 1]], 1.0);
        assert_eq!(y[[0, 0, 2, 2]], 4.0);
        assert_eq!(y[[0, 0, 3, 3]], 4.0);
    }

    #[test]
    fn constant_maps_stay_constant() {
        let x = Array4::from_elem((1, 2, 4, 4), 0.7f32);
        for mode in [ResampleMode::Nearest, ResampleMode::Bilinear, ResampleMode::Bicubic] {
            let y = upsample2x(&x, mode);
            for v in y.iter() {
                assert!((v - 0.7).abs() < 1e-5, "{mode:?} broke constancy: {v}");
            }
        }
    }

    #[test]
    fn backward_is_adjoint() {
        let x = Array::from_shape_fn((1, 1, 3, 5), |(_, _, h, w)| (h * 5 + w) as f32 * 0.1 - 0.6);
        for mode in [ResampleMode::Nearest, ResampleMode::Bilinear, ResampleMode::Bicubic] {
            let y = upsample2x(&x, mode);
            let gy = Array::from_shape_fn(y.dim(), |(_, _, h, w)| ((h * 13 + w * 7) % 5) as f32 - 2.0);
            let gx = upsample2x_backward(&gy, mode);
            let lhs: f32 = (&y * &gy).sum();
            let rhs: f32 = (&x * &gx).sum();
            assert!((lhs - rhs).abs() < 1e-3, "{mode:?}: {lhs} vs {rhs}");
        }
    }
}
