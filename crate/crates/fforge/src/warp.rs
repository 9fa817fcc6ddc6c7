//! Inverse-map geometric warps with bilinear sampling and reflective fill.
//!
//! All warps map output pixel centers through an inverse transform and sample
//! the source bilinearly; coordinates outside the frame are folded back by
//! reflection (no edge repeat), so geometric perturbations never introduce
//! flat borders a detector could latch onto.

use crate::image::Image;

/// Fold a continuous coordinate into `[0, len-1]` by reflection about the
/// first and last pixel centers.
fn reflect_coord(mut t: f64, len: usize) -> f64 {
    if len <= 1 {
        return 0.0;
    }
    let period = 2.0 * (len as f64 - 1.0);
    t = t.rem_euclid(period);
    if t > len as f64 - 1.0 {
        period - t
    } else {
        t
    }
}

fn sample_reflect(img: &Image, y: f64, x: f64, c: usize) -> f32 {
    img.sample_bilinear(reflect_coord(y, img.height()), reflect_coord(x, img.width()), c)
}

/// Row-major 3x3 matrix.
pub type Mat3 = [f64; 9];

pub fn mat3_identity() -> Mat3 {
    [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]
}

pub fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut m = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            m[i * 3 + j] = (0..3).map(|k| a[i * 3 + k] * b[k * 3 + j]).sum();
        }
    }
    m
}

/// Analytic inverse via the adjugate; panics on a singular transform, which
/// the bounded parameter ranges cannot produce.
pub fn mat3_inverse(m: &Mat3) -> Mat3 {
    let det = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
        + m[2] * (m[3] * m[7] - m[4] * m[6]);
    assert!(det.abs() > 1e-12, "singular warp matrix");
    let inv_det = 1.0 / det;
    [
        (m[4] * m[8] - m[5] * m[7]) * inv_det,
        (m[2] * m[7] - m[1] * m[8]) * inv_det,
        (m[1] * m[5] - m[2] * m[4]) * inv_det,
        (m[5] * m[6] - m[3] * m[8]) * inv_det,
        (m[0] * m[8] - m[2] * m[6]) * inv_det,
        (m[2] * m[3] - m[0] * m[5]) * inv_det,
        (m[3] * m[7] - m[4] * m[6]) * inv_det,
        (m[1] * m[6] - m[0] * m[7]) * inv_det,
        (m[0] * m[4] - m[1] * m[3]) * inv_det,
    ]
}

/// Forward affine `(x, y) -> (x', y')` about the image center:
/// translate o rotate o shear o scale. Angles in degrees, translation in pixels.
pub fn affine_about_center(
    width: usize,
    height: usize,
    degrees: f64,
    translate: (f64, f64),
    scale: f64,
    shear_deg: (f64, f64),
) -> Mat3 {
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    let rad = degrees.to_radians();
    let (sin, cos) = (rad.sin(), rad.cos());
    let (shx, shy) = (shear_deg.0.to_radians().tan(), shear_deg.1.to_radians().tan());
    let to_origin: Mat3 = [1.0, 0.0, -cx, 0.0, 1.0, -cy, 0.0, 0.0, 1.0];
    let lin: Mat3 = [
        scale * (cos + sin * shy),
        scale * (cos * shx + sin),
        0.0,
        scale * (-sin + cos * shy),
        scale * (-sin * shx + cos),
        0.0,
        0.0,
        0.0,
        1.0,
    ];
    let back: Mat3 = [1.0, 0.0, cx + translate.0, 0.0, 1.0, cy + translate.1, 0.0, 0.0, 1.0];
    mat3_mul(&back, &mat3_mul(&lin, &to_origin))
}

/// Warp by the *inverse* transform: output pixel centers are mapped through
/// `inv` (projective) into source coordinates.
pub fn warp_projective(img: &Image, inv: &Mat3) -> Image {
    Image::from_fn(img.height(), img.width(), |y, x| {
        let xf = x as f64;
        let yf = y as f64;
        let w = inv[6] * xf + inv[7] * yf + inv[8];
        let sx = (inv[0] * xf + inv[1] * yf + inv[2]) / w;
        let sy = (inv[3] * xf + inv[4] * yf + inv[5]) / w;
        [
            sample_reflect(img, sy, sx, 0),
            sample_reflect(img, sy, sx, 1),
            sample_reflect(img, sy, sx, 2),
        ]
    })
}

/// Warp by a forward affine transform (inverted internally).
pub fn warp_affine(img: &Image, forward: &Mat3) -> Image {
    warp_projective(img, &mat3_inverse(forward))
}

/// Homography mapping `from` points onto `to` points (4 correspondences),
/// solved by Gaussian elimination with partial pivoting.
pub fn homography_from_points(from: &[(f64, f64); 4], to: &[(f64, f64); 4]) -> Mat3 {
    let mut a = [[0.0f64; 9]; 8];
    for i in 0..4 {
        let (x, y) = from[i];
        let (u, v) = to[i];
        a[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, u];
        a[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y, v];
    }
    // Solve A h = rhs where rhs is the last column.
    for col in 0..8 {
        let pivot = (col..8).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        assert!(p.abs() > 1e-12, "degenerate correspondence");
        for r in 0..8 {
            if r != col {
                let f = a[r][col] / p;
                for c in col..9 {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut h = [0.0f64; 9];
    for i in 0..8 {
        h[i] = a[i][8] / a[i][i];
    }
    h[8] = 1.0;
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_folds_symmetrically() {
        assert_eq!(reflect_coord(-1.0, 5), 1.0);
        assert_eq!(reflect_coord(4.5, 5), 3.5);
        assert_eq!(reflect_coord(2.0, 5), 2.0);
        assert_eq!(reflect_coord(-0.25, 5), 0.25);
    }

    #[test]
    fn identity_affine_is_bit_exact() {
        let img = Image::from_fn(9, 7, |y, x| [((y * 7 + x) % 5) as f32 / 5.0, 0.3, 0.9]);
        let m = affine_about_center(7, 9, 0.0, (0.0, 0.0), 1.0, (0.0, 0.0));
        let out = warp_affine(&img, &m);
        assert_eq!(out, img);
    }

    #[test]
    fn inverse_round_trips() {
        let m = affine_about_center(16, 16, 23.0, (1.5, -2.0), 1.1, (5.0, 0.0));
        let inv = mat3_inverse(&m);
        let prod = mat3_mul(&m, &inv);
        for (i, &v) in prod.iter().enumerate() {
            let want = if i % 4 == 0 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-9, "prod[{i}] = {v}");
        }
    }

    #[test]
    fn homography_hits_correspondences() {
        let from = [(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)];
        let to = [(1.0, 0.5), (9.0, -0.5), (11.0, 10.0), (-1.0, 9.0)];
        let h = homography_from_points(&from, &to);
        for i in 0..4 {
            let (x, y) = from[i];
            let w = h[6] * x + h[7] * y + h[8];
            let u = (h[0] * x + h[1] * y + h[2]) / w;
            let v = (h[3] * x + h[4] * y + h[5]) / w;
            assert!((u - to[i].0).abs() < 1e-9 && (v - to[i].1).abs() < 1e-9);
        }
    }
}
