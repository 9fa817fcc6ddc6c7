//! im2col / col2im and NCHW <-> GEMM packing.
//!
//! Convolutions are lowered to one GEMM per batch: patches are gathered into
//! a `(C*K*K, N*OH*OW)` matrix so `ndarray`'s matrix multiply does the heavy
//! lifting. All loops run in a fixed order, keeping results bit-reproducible.

use ndarray::{Array2, Array4};

/// Output spatial size of a convolution along one axis.
pub fn conv_out_len(input: usize, k: usize, stride: usize, pad: usize) -> usize {
    (input + 2 * pad - k) / stride + 1
}

/// Gather conv patches: result is `(c*k*k, n*oh*ow)`, zero-padded borders.
pub fn im2col(x: &Array4<f32>, k: usize, stride: usize, pad: usize) -> Array2<f32> {
    let (n, c, h, w) = x.dim();
    let oh = conv_out_len(h, k, stride, pad);
    let ow = conv_out_len(w, k, stride, pad);
    let mut cols = Array2::<f32>::zeros((c * k * k, n * oh * ow));
    let xs = x.as_slice().expect("contiguous input");
    let cs = cols.as_slice_mut().expect("contiguous cols");
    let row_len = n * oh * ow;
    for ci in 0..c {
        for ki in 0..k {
            for kj in 0..k {
                let row = (ci * k + ki) * k + kj;
                let out_row = &mut cs[row * row_len..(row + 1) * row_len];
                for ni in 0..n {
                    let x_base = (ni * c + ci) * h * w;
                    for oi in 0..oh {
                        let iy = (oi * stride + ki) as isize - pad as isize;
                        let col_base = (ni * oh + oi) * ow;
                        if iy < 0 || iy >= h as isize {
                            continue; // stays zero
                        }
                        let x_row = x_base + iy as usize * w;
                        for oj in 0..ow {
                            let ix = (oj * stride + kj) as isize - pad as isize;
                            if ix >= 0 && ix < w as isize {
                                out_row[col_base + oj] = xs[x_row + ix as usize];
                            }
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: scatter-add columns back into an `(n, c, h, w)` map.
pub fn col2im(
    cols: &Array2<f32>,
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    pad: usize,
) -> Array4<f32> {
    let oh = conv_out_len(h, k, stride, pad);
    let ow = conv_out_len(w, k, stride, pad);
    debug_assert_eq!(cols.dim(), (c * k * k, n * oh * ow));
    let mut x = Array4::<f32>::zeros((n, c, h, w));
    let xs = x.as_slice_mut().expect("contiguous output");
    let cs = cols.as_slice().expect("contiguous cols");
    let row_len = n * oh * ow;
    for ci in 0..c {
        for ki in 0..k {
            for kj in 0..k {
                let row = (ci * k + ki) * k + kj;
                let in_row = &cs[row * row_len..(row + 1) * row_len];
                for ni in 0..n {
                    let x_base = (ni * c + ci) * h * w;
                    for oi in 0..oh {
                        let iy = (oi * stride + ki) as isize - pad as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let x_row = x_base + iy as usize * w;
                        let col_base = (ni * oh + oi) * ow;
                        for oj in 0..ow {
                            let ix = (oj * stride + kj) as isize - pad as isize;
                            if ix >= 0 && ix < w as isize {
                                xs[x_row + ix as usize] += in_row[col_base + oj];
                            }
                        }
                    }
                }
            }
        }
    }
    x
}

/// Pack NCHW into `(c, n*h*w)` with column index `n*h*w + pos`.
pub fn pack_channels(x: &Array4<f32>) -> Array2<f32> {
    let (n, c, h, w) = x.dim();
    let hw = h * w;
    let mut out = Array2::<f32>::zeros((c, n * hw));
    let xs = x.as_slice().expect("contiguous input");
    let os = out.as_slice_mut().expect("contiguous output");
    for ci in 0..c {
        let o_row = ci * n * hw;
        for ni in 0..n {
            let src = (ni * c + ci) * hw;
            os[o_row + ni * hw..o_row + (ni + 1) * hw].copy_from_slice(&xs[src..src + hw]);
        }
    }
    out
}

/// Inverse of [`pack_channels`].
pub fn unpack_channels(x2: &Array2<f32>, n: usize, h: usize, w: usize) -> Array4<f32> {
    let (c, total) = x2.dim();
    let hw = h * w;
    debug_assert_eq!(total, n * hw);
    let mut out = Array4::<f32>::zeros((n, c, h, w));
    let os = out.as_slice_mut().expect("contiguous output");
    let xs = x2.as_slice().expect("contiguous input");
    for ci in 0..c {
        let i_row = ci * n * hw;
        for ni in 0..n {
            let dst = (ni * c + ci) * hw;
            os[dst..dst + hw].copy_from_slice(&xs[i_row + ni * hw..i_row + (ni + 1) * hw]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array;

    #[test]
    fn conv_out_sizes() {
        assert_eq!(conv_out_len(64, 3, 2, 1), 32);
        assert_eq!(conv_out_len(64, 5, 2, 2), 32);
        assert_eq!(conv_out_len(64, 7, 2, 3), 32);
        assert_eq!(conv_out_len(8, 3, 1, 1), 8);
    }

    #[test]
    fn pack_unpack_round_trip() {
        let x = Array::from_shape_fn((2, 3, 4, 5), |(n, c, h, w)| {
            (n * 1000 + c * 100 + h * 10 + w) as f32
        });
        let packed = pack_channels(&x);
        let back = unpack_channels(&packed, 2, 4, 5);
        assert_eq!(x, back);
    }

    #[test]
    fn im2col_known_patch() {
        // 1x1x3x3 ramp, k=3, stride=1, pad=1: center column equals the image.
        let x = Array::from_shape_vec((1, 1, 3, 3), (0..9).map(|v| v as f32).collect()).unwrap();
        let cols = im2col(&x, 3, 1, 1);
        assert_eq!(cols.dim(), (9, 9));
        // Kernel center row (ki=1, kj=1) reproduces the flattened image.
        let center = cols.row(4);
        let expect: Vec<f32> = (0..9).map(|v| v as f32).collect();
        assert_eq!(center.to_vec(), expect);
        // Top-left tap at output (0,0) reads the zero pad.
        assert_eq!(cols[[0, 0]], 0.0);
    }

    #[test]
    fn col2im_is_adjoint_of_im2col() {
        // <im2col(x), y> == <x, col2im(y)> for random-ish tensors.
        let x = Array::from_shape_fn((2, 2, 5, 4), |(n, c, h, w)| {
            ((n * 7 + c * 3 + h * 5 + w * 11) % 13) as f32 - 6.0
        });
        let cols = im2col(&x, 3, 2, 1);
        let y = Array::from_shape_fn(cols.dim(), |(r, cc)| ((r * 31 + cc * 17) % 7) as f32 - 3.0);
        let lhs: f32 = (&cols * &y).sum();
        let back = col2im(&y, 2, 2, 5, 4, 3, 2, 1);
        let rhs: f32 = (&x * &back).sum();
        assert!((lhs - rhs).abs() < 1e-3, "{lhs} vs {rhs}");
    }
}
