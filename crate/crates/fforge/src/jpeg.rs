//! Baseline-JPEG lossy round trip.
//!
//! Implements the lossy core of a baseline sequential codec: BT.601 full-range
//! YCbCr, 4:2:0 box subsampling, 8x8 float DCT, and quantization with the
//! Annex-K tables scaled by the IJG quality convention. Entropy coding is
//! lossless and therefore omitted; the operator returns the decoded image
//! directly. Chroma is restored with triangle (fancy) upsampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{clamp, Image};

/// Quality factor 1..=100; the study's canonical factors are
/// {10, 20, 30, 50, 80}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JpegSpec {
    pub quality: u8,
}

pub const CANONICAL_QUALITIES: [u8; 5] = [10, 20, 30, 50, 80];

impl JpegSpec {
    pub fn new(quality: u8) -> Result<Self> {
        if !(1..=100).contains(&quality) {
            return Err(Error::InvalidQuality(quality));
        }
        Ok(Self { quality })
    }
}

#[rustfmt::skip]
const BASE_LUMA: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61,
    12, 12, 14, 19, 26, 58, 60, 55,
    14, 13, 16, 24, 40, 57, 69, 56,
    14, 17, 22, 29, 51, 87, 80, 62,
    18, 22, 37, 56, 68, 109, 103, 77,
    24, 35, 55, 64, 81, 104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99,
];

#[rustfmt::skip]
const BASE_CHROMA: [u16; 64] = [
    17, 18, 24, 47, 99, 99, 99, 99,
    18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99,
    47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
];

/// Scale an Annex-K table by the IJG quality convention.
pub fn scaled_table(base: &[u16; 64], quality: u8) -> [u16; 64] {
    let q = u32::from(quality.clamp(1, 100));
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    let mut out = [0u16; 64];
    for (o, &b) in out.iter_mut().zip(base.iter()) {
        *o = ((u32::from(b) * scale + 50) / 100).clamp(1, 255) as u16;
    }
    out
}

/// Grayscale plane in the 0..255 domain.
struct Plane {
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl Plane {
    fn new(h: usize, w: usize) -> Self {
        Self { h, w, data: vec![0.0; h * w] }
    }

    #[inline]
    fn at(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.w + x]
    }

    #[inline]
    fn set(&mut self, y: usize, x: usize, v: f64) {
        self.data[y * self.w + x] = v;
    }

    /// Extend to `(nh, nw)` by replicating the last row/column.
    fn pad_replicate(&self, nh: usize, nw: usize) -> Plane {
        let mut out = Plane::new(nh, nw);
        for y in 0..nh {
            let sy = y.min(self.h - 1);
            for x in 0..nw {
                out.set(y, x, self.at(sy, x.min(self.w - 1)));
            }
        }
        out
    }

    /// 2x2 box downsample.
    fn downsample2(&self) -> Plane {
        let mut out = Plane::new(self.h / 2, self.w / 2);
        for y in 0..out.h {
            for x in 0..out.w {
                let s = self.at(2 * y, 2 * x)
                    + self.at(2 * y, 2 * x + 1)
                    + self.at(2 * y + 1, 2 * x)
                    + self.at(2 * y + 1, 2 * x + 1);
                out.set(y, x, s / 4.0);
            }
        }
        out
    }

    /// 2x triangle upsample (pixel-center convention; the 9-3-3-1 kernel).
    fn upsample2(&self) -> Plane {
        let mut out = Plane::new(self.h * 2, self.w * 2);
        let last_y = self.h as isize - 1;
        let last_x = self.w as isize - 1;
        for y in 0..out.h {
            let sy = (y as f64 + 0.5) / 2.0 - 0.5;
            let y0 = sy.floor() as isize;
            let fy = sy - y0 as f64;
            let y0c = y0.clamp(0, last_y) as usize;
            let y1c = (y0 + 1).clamp(0, last_y) as usize;
            for x in 0..out.w {
                let sx = (x as f64 + 0.5) / 2.0 - 0.5;
                let x0 = sx.floor() as isize;
                let fx = sx - x0 as f64;
                let x0c = x0.clamp(0, last_x) as usize;
                let x1c = (x0 + 1).clamp(0, last_x) as usize;
                let top = self.at(y0c, x0c) * (1.0 - fx) + self.at(y0c, x1c) * fx;
                let bot = self.at(y1c, x0c) * (1.0 - fx) + self.at(y1c, x1c) * fx;
                out.set(y, x, top * (1.0 - fy) + bot * fy);
            }
        }
        out
    }
}

/// Orthonormal 8-point DCT basis: `B[u][x] = c(u)/2 * cos((2x+1) u pi / 16)`.
fn dct_basis() -> [[f64; 8]; 8] {
    let mut b = [[0.0; 8]; 8];
    for (u, row) in b.iter_mut().enumerate() {
        let cu = if u == 0 { (0.5f64).sqrt() } else { 1.0 };
        for (x, v) in row.iter_mut().enumerate() {
            *v = 0.5 * cu * ((2.0 * x as f64 + 1.0) * u as f64 * std::f64::consts::PI / 16.0).cos();
        }
    }
    b
}

/// Quantize-dequantize every 8x8 block of a plane in place.
fn lossy_plane(plane: &mut Plane, table: &[u16; 64], basis: &[[f64; 8]; 8]) {
    debug_assert!(plane.h % 8 == 0 && plane.w % 8 == 0);
    let mut block = [[0.0f64; 8]; 8];
    let mut tmp = [[0.0f64; 8]; 8];
    let mut coef = [[0.0f64; 8]; 8];
    for by in (0..plane.h).step_by(8) {
        for bx in (0..plane.w).step_by(8) {
            for y in 0..8 {
                for x in 0..8 {
                    block[y][x] = plane.at(by + y, bx + x) - 128.0;
                }
            }
            // F = B f B^T, via tmp = B f.
            for u in 0..8 {
                for x in 0..8 {
                    tmp[u][x] = (0..8).map(|y| basis[u][y] * block[y][x]).sum();
                }
            }
            for u in 0..8 {
                for v in 0..8 {
                    let f: f64 = (0..8).map(|x| tmp[u][x] * basis[v][x]).sum();
                    let q = f64::from(table[u * 8 + v]);
                    coef[u][v] = (f / q).round() * q;
                }
            }
            // f = B^T F B.
            for y in 0..8 {
                for v in 0..8 {
                    tmp[y][v] = (0..8).map(|u| basis[u][y] * coef[u][v]).sum();
                }
            }
            for y in 0..8 {
                for x in 0..8 {
                    let f: f64 = (0..8).map(|v| tmp[y][v] * basis[v][x]).sum();
                    plane.set(by + y, bx + x, f + 128.0);
                }
            }
        }
    }
}

/// Encode-decode round trip at the given quality. Output matches the input
/// shape with intensities in `[0, 1]`.
pub fn jpeg_roundtrip(image: &Image, spec: &JpegSpec) -> Result<Image> {
    if !(1..=100).contains(&spec.quality) {
        return Err(Error::InvalidQuality(spec.quality));
    }
    let (h, w) = (image.height(), image.width());
    if h < 16 || w < 16 {
        return Err(Error::InvalidParams(format!("jpeg round trip needs >= 16x16, got {h}x{w}")));
    }

    // Reflect-pad odd dimensions to even before 4:2:0 subsampling.
    let (eh, ew) = (h + h % 2, w + w % 2);
    let mut yp = Plane::new(eh, ew);
    let mut cb = Plane::new(eh, ew);
    let mut cr = Plane::new(eh, ew);
    for y in 0..eh {
        let sy = if y < h { y } else { h.saturating_sub(2) };
        for x in 0..ew {
            let sx = if x < w { x } else { w.saturating_sub(2) };
            let p = image.pixel(sy, sx);
            let r = f64::from(p[0]) * 255.0;
            let g = f64::from(p[1]) * 255.0;
            let b = f64::from(p[2]) * 255.0;
            yp.set(y, x, 0.299 * r + 0.587 * g + 0.114 * b);
            cb.set(y, x, -0.168_735_892 * r - 0.331_264_108 * g + 0.5 * b + 128.0);
            cr.set(y, x, 0.5 * r - 0.418_687_589 * g - 0.081_312_411 * b + 128.0);
        }
    }

    // MCU alignment: luma to a multiple of 16 so subsampled chroma hits 8.
    let mh = eh.div_ceil(16) * 16;
    let mw = ew.div_ceil(16) * 16;
    let mut yp = yp.pad_replicate(mh, mw);
    let mut cb = cb.pad_replicate(mh, mw).downsample2();
    let mut cr = cr.pad_replicate(mh, mw).downsample2();

    let basis = dct_basis();
    let lt = scaled_table(&BASE_LUMA, spec.quality);
    let ct = scaled_table(&BASE_CHROMA, spec.quality);
    lossy_plane(&mut yp, &lt, &basis);
    lossy_plane(&mut cb, &ct, &basis);
    lossy_plane(&mut cr, &ct, &basis);

    let cb = cb.upsample2();
    let cr = cr.upsample2();

    let out = Image::from_fn(h, w, |y, x| {
        let yy = yp.at(y, x);
        let pb = cb.at(y, x) - 128.0;
        let pr = cr.at(y, x) - 128.0;
        let r = yy + 1.402 * pr;
        let g = yy - 0.344_136_286 * pb - 0.714_136_286 * pr;
        let b = yy + 1.772 * pb;
        [(r / 255.0) as f32, (g / 255.0) as f32, (b / 255.0) as f32]
    });
    clamp(&out)
}
