//! Procedural texture standing in for a photographic image pair, and
//! keypoint sampling with a minimum separation.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use super::GrayImage;
use crate::error::{Error, Result};
use crate::rng;

/// Blur scale (pixels) of the bundled texture.
pub const BUNDLED_BLUR: f64 = 14.0;
/// Seed of the bundled texture.
pub const BUNDLED_SEED: u64 = 20_111;
/// Size of the bundled texture before rotation.
pub const BUNDLED_WIDTH: usize = 450;
pub const BUNDLED_HEIGHT: usize = 300;

const TEXTURE_MEAN: f64 = 128.0;
const TEXTURE_STD: f64 = 40.25;

/// Gaussian-blurred white noise (periodic boundary), standardized to mean
/// 128 and standard deviation 40.25.
pub fn synthetic_texture(width: usize, height: usize, blur: f64, seed: u64) -> Result<GrayImage> {
    if width == 0 || height == 0 {
        return Err(Error::invalid("texture dimensions must be positive"));
    }
    if !(blur >= 0.0 && blur.is_finite()) {
        return Err(Error::invalid("blur must be non-negative"));
    }
    let mut rng = rng::stream(seed, &[]);
    let noise: Vec<f64> = (0..width * height).map(|_| StandardNormal.sample(&mut rng)).collect();
    let kernel = gaussian_kernel(blur);
    let rows = convolve(&noise, width, height, &kernel, true);
    let both = convolve(&rows, width, height, &kernel, false);
    let n = both.len() as f64;
    let mean = both.iter().sum::<f64>() / n;
    let sd = (both.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let pixels = both.iter().map(|v| TEXTURE_MEAN + TEXTURE_STD * (v - mean) / sd).collect();
    GrayImage::new(width, height, pixels)
}

fn gaussian_kernel(blur: f64) -> Vec<f64> {
    if blur == 0.0 {
        return vec![1.0];
    }
    let half = (4.0 * blur).ceil() as i64;
    let k: Vec<f64> = (-half..=half).map(|i| (-(i * i) as f64 / (2.0 * blur * blur)).exp()).collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

fn convolve(src: &[f64], w: usize, h: usize, k: &[f64], along_x: bool) -> Vec<f64> {
    let half = (k.len() / 2) as i64;
    let mut out = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| {
                    let o = i as i64 - half;
                    let (xx, yy) = if along_x {
                        ((x as i64 + o).rem_euclid(w as i64) as usize, y)
                    } else {
                        (x, (y as i64 + o).rem_euclid(h as i64) as usize)
                    };
                    kv * src[yy * w + xx]
                })
                .sum();
        }
    }
    out
}

/// The bundled pair: the texture quantized to 8 bits as stored in the
/// fixtures, and its quarter-turn rotation.
pub fn bundled_texture_pair() -> (GrayImage, GrayImage) {
    let a = synthetic_texture(BUNDLED_WIDTH, BUNDLED_HEIGHT, BUNDLED_BLUR, BUNDLED_SEED)
        .expect("fixed parameters are valid")
        .quantized();
    let b = a.rot90();
    (a, b)
}

/// Up to `count` integer points in `[x_min, x_max] × [y_min, y_max]` with
/// pairwise Euclidean distance at least `min_sep`, visiting positions in a
/// seeded random order and accepting greedily. Returns fewer points when
/// the region saturates.
pub fn sample_keypoints(
    (x_min, x_max): (usize, usize),
    (y_min, y_max): (usize, usize),
    count: usize,
    min_sep: f64,
    seed: u64,
) -> Result<Vec<(usize, usize)>> {
    if x_min > x_max || y_min > y_max {
        return Err(Error::invalid("empty keypoint region"));
    }
    if !(min_sep >= 0.0 && min_sep.is_finite()) {
        return Err(Error::invalid("separation must be non-negative"));
    }
    let mut all: Vec<(usize, usize)> =
        (y_min..=y_max).flat_map(|y| (x_min..=x_max).map(move |x| (x, y))).collect();
    all.shuffle(&mut rng::stream(seed, &[]));
    let cell = min_sep.max(1.0);
    let key = |(x, y): (usize, usize)| ((x as f64 / cell) as i64, (y as f64 / cell) as i64);
    let mut grid: HashMap<(i64, i64), Vec<(usize, usize)>> = HashMap::new();
    let mut out = Vec::with_capacity(count);
    let sep2 = min_sep * min_sep;
    for p in all {
        if out.len() == count {
            break;
        }
        let (cx, cy) = key(p);
        let clash = (-1..=1).any(|dx| {
            (-1..=1).any(|dy| {
                grid.get(&(cx + dx, cy + dy)).is_some_and(|pts| {
                    pts.iter().any(|q| {
                        let (ddx, ddy) = (p.0 as f64 - q.0 as f64, p.1 as f64 - q.1 as f64);
                        ddx * ddx + ddy * ddy < sep2
                    })
                })
            })
        });
        if !clash {
            grid.entry((cx, cy)).or_default().push(p);
            out.push(p);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    #[test]
    fn texture_moments_and_determinism() {
        let t = synthetic_texture(90, 60, 2.0, 3).unwrap();
        let n = t.pixels().len() as f64;
        let mean = t.pixels().iter().sum::<f64>() / n;
        let sd = (t.pixels().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!((mean - 128.0).abs() < 1e-9 && (sd - 40.25).abs() < 1e-9);
        assert_eq!(t, synthetic_texture(90, 60, 2.0, 3).unwrap());
        assert_ne!(t, synthetic_texture(90, 60, 2.0, 4).unwrap());
    }

    #[test]
    fn kernel_is_normalized() {
        for b in [0.0, 0.7, 2.0, 5.5] {
            assert!((gaussian_kernel(b).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fixtures_match_generator() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
        let (a, b) = bundled_texture_pair();
        assert_eq!(std::fs::read(dir.join("texture_a.pgm")).unwrap(), a.to_pgm());
        assert_eq!(std::fs::read(dir.join("texture_b.pgm")).unwrap(), b.to_pgm());
        assert_eq!((b.width(), b.height()), (300, 450));
    }

    #[test]
    fn keypoints_respect_separation_and_region() {
        let pts = sample_keypoints((10, 60), (5, 40), 50, 5.0, 1).unwrap();
        assert_eq!(pts.len(), 50);
        for (i, p) in pts.iter().enumerate() {
            assert!((10..=60).contains(&p.0) && (5..=40).contains(&p.1));
            for q in &pts[..i] {
                let d2 = (p.0 as f64 - q.0 as f64).powi(2) + (p.1 as f64 - q.1 as f64).powi(2);
                assert!(d2 >= 25.0);
            }
        }
        assert_eq!(pts, sample_keypoints((10, 60), (5, 40), 50, 5.0, 1).unwrap());
    }

    #[test]
    fn keypoints_saturate() {
        let pts = sample_keypoints((0, 9), (0, 9), 1000, 5.0, 2).unwrap();
        assert!(pts.len() < 10 && pts.len() >= 4);
    }
}
