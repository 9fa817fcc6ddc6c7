//! Canonical image representation, arithmetic, and quality metrics.
//!
//! Images are H x W x 3 RGB with real intensities in `[0, 1]`, stored
//! row-major and channel-interleaved. 8-bit files are converted by `v / 255`
//! on load and `round(v * 255)` on save, so an L-infinity budget of `8/255`
//! is exact in this representation.

use std::path::Path;

use crate::error::{Error, Result};

/// RGB image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

/// Channel count is fixed across the whole pipeline.
pub const CHANNELS: usize = 3;

impl Image {
    /// Construct from raw interleaved data; `data.len()` must equal `h * w * 3`.
    pub fn from_raw(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != height * width * CHANNELS {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}x{} = {} values", height, width, CHANNELS, height * width * CHANNELS),
                actual: format!("{} values", data.len()),
            });
        }
        Ok(Self { height, width, data })
    }

    /// Constant-intensity image.
    pub fn filled(height: usize, width: usize, value: f32) -> Self {
        Self { height, width, data: vec![value; height * width * CHANNELS] }
    }

    /// Build per pixel; `f(y, x)` returns an RGB triple.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(height * width * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(y, x));
            }
        }
        Self { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * CHANNELS + c]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, v: f32) {
        self.data[(y * self.width + x) * CHANNELS + c] = v;
    }

    #[inline]
    pub fn pixel(&self, y: usize, x: usize) -> [f32; 3] {
        let i = (y * self.width + x) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.height == other.height && self.width == other.width
    }

    fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.height, self.width, CHANNELS)
    }

    /// Bilinear sample at continuous coordinates with clamp-to-edge.
    /// `(y, x)` are pixel-center coordinates; `(0, 0)` is the first pixel.
    pub fn sample_bilinear(&self, y: f64, x: f64, c: usize) -> f32 {
        let xc = x.clamp(0.0, (self.width - 1) as f64);
        let yc = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = xc.floor() as usize;
        let y0 = yc.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = xc - x0 as f64;
        let fy = yc - y0 as f64;
        let v00 = f64::from(self.get(y0, x0, c));
        let v01 = f64::from(self.get(y0, x1, c));
        let v10 = f64::from(self.get(y1, x0, c));
        let v11 = f64::from(self.get(y1, x1, c));
        let top = v00 * (1.0 - fx) + v01 * fx;
        let bot = v10 * (1.0 - fx) + v11 * fx;
        (top * (1.0 - fy) + bot * fy) as f32
    }

    /// Resize to `oh x ow` with bilinear interpolation (pixel-center convention).
    pub fn resize_bilinear(&self, oh: usize, ow: usize) -> Image {
        if oh == self.height && ow == self.width {
            return self.clone();
        }
        let sy = self.height as f64 / oh as f64;
        let sx = self.width as f64 / ow as f64;
        Image::from_fn(oh, ow, |y, x| {
            let src_y = (y as f64 + 0.5) * sy - 0.5;
            let src_x = (x as f64 + 0.5) * sx - 0.5;
            [
                self.sample_bilinear(src_y, src_x, 0),
                self.sample_bilinear(src_y, src_x, 1),
                self.sample_bilinear(src_y, src_x, 2),
            ]
        })
    }
}

/// Reconstruction quality between two images.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QualityStats {
    /// Mean absolute error, in `[0, 1]`.
    pub mae: f64,
    /// Mean squared error.
    pub mse: f64,
    /// Peak signal-to-noise ratio in decibels; `+inf` iff `mse == 0`.
    pub psnr: f64,
}

/// Clamp all intensities into `[0, 1]`.
///
/// Non-finite values are a hard error: a NaN anywhere usually means a
/// diverged training run, and clamping it away would hide that.
pub fn clamp(image: &Image) -> Result<Image> {
    for (i, &v) in image.data.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteInput { index: i, value: v });
        }
    }
    let data = image.data.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Ok(Image { height: image.height, width: image.width, data })
}

/// Mean absolute error over all elements.
pub fn mae(a: &Image, b: &Image) -> Result<f64> {
    check_shapes(a, b)?;
    let sum: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| (f64::from(x) - f64::from(y)).abs())
        .sum();
    Ok(sum / a.data.len() as f64)
}

/// Mean squared error over all elements.
pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    check_shapes(a, b)?;
    let sum: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum();
    Ok(sum / a.data.len() as f64)
}

/// Peak signal-to-noise ratio with peak 1.0.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(10.0 * (1.0 / m).log10())
    }
}

/// All three metrics in one pass-friendly bundle.
pub fn quality_stats(a: &Image, b: &Image) -> Result<QualityStats> {
    Ok(QualityStats { mae: mae(a, b)?, mse: mse(a, b)?, psnr: psnr(a, b)? })
}

fn check_shapes(a: &Image, b: &Image) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch { expected: a.shape_string(), actual: b.shape_string() });
    }
    Ok(())
}

/// Load an RGB PNG; intensities become `v / 255`.
pub fn load_png(path: &Path) -> Result<Image> {
    let img = image::ImageReader::open(path)
        .map_err(Error::io_at(path))?
        .decode()?
        .into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = img.as_raw().iter().map(|&v| f32::from(v) / 255.0).collect();
    Image::from_raw(h, w, data)
}

/// Save as 8-bit RGB PNG; intensities are `round(v * 255)`.
pub fn save_png(image: &Image, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = image
        .data
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let buf = image::RgbImage::from_raw(image.width as u32, image.height as u32, bytes)
        .expect("raw buffer matches dimensions");
    buf.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}
