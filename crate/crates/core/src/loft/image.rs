//! Grayscale images: PGM input/output, additive noise and the Immerkær
//! noise estimator.

use std::fs;
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng;

/// Row-major real-valued grayscale image on the nominal `[0, 255]` scale.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("pixel intensities must be finite"));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let pixels = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Intensity at column `x`, row `y`.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Bilinear interpolation; the caller keeps `(x, y)` within
    /// `[0, width−1) × [0, height−1)`.
    #[inline]
    pub fn bilinear(&self, x: f64, y: f64) -> f64 {
        let (xf, yf) = (x.floor(), y.floor());
        let (fx, fy) = (x - xf, y - yf);
        let (xi, yi) = (xf as usize, yf as usize);
        let i = yi * self.width + xi;
        let p = &self.pixels;
        (1.0 - fy) * ((1.0 - fx) * p[i] + fx * p[i + 1])
            + fy * ((1.0 - fx) * p[i + self.width] + fx * p[i + self.width + 1])
    }

    /// Affine intensity map `a·I + b`.
    pub fn map_affine(&self, a: f64, b: f64) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|p| a * p + b).collect(),
        }
    }

    /// Rotation by a quarter turn on the pixel grid:
    /// `B(x′, y′) = A(W − 1 − y′, x′)`, so `B` is `H` wide and `W` high.
    ///
    /// The point `(x, y)` of `A` lands on `(y, W − 1 − x)` of `B`, and ring
    /// profiles around corresponding points satisfy `X_B(t) = X_A(t − π/2)`.
    pub fn rot90(&self) -> GrayImage {
        let (w, h) = (self.width, self.height);
        let pixels = (0..w)
            .flat_map(|yb| (0..h).map(move |xb| (xb, yb)))
            .map(|(xb, yb)| self.get(w - 1 - yb, xb))
            .collect();
        GrayImage { width: h, height: w, pixels }
    }

    /// Where `(x, y)` lands under [`GrayImage::rot90`].
    pub fn rot90_point(&self, (x, y): (usize, usize)) -> (usize, usize) {
        (y, self.width - 1 - x)
    }

    /// Rounds and clamps to the 8-bit grid, as stored by [`GrayImage::to_pgm`].
    pub fn quantized(&self) -> GrayImage {
        let pixels = self.pixels.iter().map(|p| p.round().clamp(0.0, 255.0)).collect();
        GrayImage { width: self.width, height: self.height, pixels }
    }

    /// 8-bit binary PGM, rounding and clamping to `[0, 255]`.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pixels.iter().map(|p| p.round().clamp(0.0, 255.0) as u8));
        out
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_pgm()).map_err(|e| Error::io(path, e))
    }
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes)
}

/// Parses P2 (ASCII) and P5 (binary) PGM data with `maxval ≤ 65535`.
/// Intensities are mapped to the 8-bit scale: 16-bit samples are divided
/// by 257.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut cursor = HeaderCursor { bytes, pos: 0 };
    let magic = cursor.token().ok_or_else(|| Error::Pgm("missing magic number".into()))?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        other => {
            return Err(Error::Pgm(format!(
                "unsupported magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = cursor.number("width")?;
    let height = cursor.number("height")?;
    let maxval = cursor.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Pgm("zero image dimension".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Pgm(format!("maxval {maxval} out of range")));
    }
    let scale = if maxval > 255 { 1.0 / 257.0 } else { 1.0 };
    let count = width * height;
    let pixels = if binary {
        // Exactly one whitespace byte separates the header from the raster.
        let start = cursor.pos + 1;
        let depth = if maxval > 255 { 2 } else { 1 };
        let raster = bytes
            .get(start..start + count * depth)
            .ok_or_else(|| Error::Pgm("truncated raster".into()))?;
        if depth == 1 {
            raster.iter().map(|&b| b as f64).collect()
        } else {
            raster
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale)
                .collect()
        }
    } else {
        let mut px = Vec::with_capacity(count);
        for _ in 0..count {
            let v = cursor
                .token()
                .ok_or_else(|| Error::Pgm("truncated raster".into()))?;
            let v: usize = std::str::from_utf8(v)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Pgm("non-numeric sample".into()))?;
            if v > maxval {
                return Err(Error::Pgm(format!("sample {v} exceeds maxval {maxval}")));
            }
            px.push(v as f64 * scale);
        }
        px
    };
    GrayImage::new(width, height, pixels)
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    /// Next whitespace-delimited token, skipping `#` comments.
    fn token(&mut self) -> Option<&'a [u8]> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.bytes.get(self.pos) == Some(&b'#') {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.token()
            .and_then(|t| std::str::from_utf8(t).ok())
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Pgm(format!("malformed header: bad {what}")))
    }
}

/// `I′ = I + σ g` with i.i.d. standard normal `g`; no clamping.
pub fn add_gaussian_noise(img: &GrayImage, sigma: f64, seed: u64) -> Result<GrayImage> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("noise level must be non-negative"));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let mut rng = rng::stream(seed, &[]);
    let pixels = img
        .pixels
        .iter()
        .map(|p| {
            let g: f64 = StandardNormal.sample(&mut rng);
            p + sigma * g
        })
        .collect();
    GrayImage::new(img.width, img.height, pixels)
}

/// Immerkær's estimator
/// `σ̂ = √(π/2) / (6(W−2)(H−2)) · Σ |I ∗ M|` over interior pixels, with
/// `M = [[1, −2, 1], [−2, 4, −2], [1, −2, 1]]`.
pub fn estimate_noise(img: &GrayImage) -> Result<f64> {
    let (w, h) = (img.width, img.height);
    if w < 3 || h < 3 {
        return Err(Error::invalid("noise estimation needs at least a 3x3 image"));
    }
    let mut total = 0.0;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let row = |yy: usize| img.get(x - 1, yy) - 2.0 * img.get(x, yy) + img.get(x + 1, yy);
            total += (row(y - 1) - 2.0 * row(y) + row(y + 1)).abs();
        }
    }
    Ok((std::f64::consts::FRAC_PI_2).sqrt() * total / (6.0 * ((w - 2) * (h - 2)) as f64))
}
