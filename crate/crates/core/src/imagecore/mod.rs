//! Grayscale image representation, file I/O, sub-pixel sampling, template
//! extraction and the distortions used for robustness testing.
//!
//! Coordinate convention: pixel `(i, j)` has its center at the continuous
//! coordinate `(i, j)`. The valid sampling domain of a `w x h` image is
//! therefore `[0, w-1] x [0, h-1]`; the half-integer coordinate 151.5 sits
//! exactly between pixel columns 151 and 152.

mod distort;
mod io;

pub use distort::{distort, DistortionSpec};
pub use io::{load_image, read_pgm, read_png, write_pgm};

use std::fmt;

/// A grayscale image with intensities stored as `f64` in `[0, 1]`,
/// row-major.
///
/// Immutable after construction; cheap to share by reference across
/// concurrent optimizer runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

/// Errors from image construction, file ingestion, or template extraction.
#[derive(Debug)]
pub enum ImageError {
    /// Width or height is zero.
    EmptyDimensions,
    /// Pixel buffer length does not match `width * height`.
    LengthMismatch { expected: usize, actual: usize },
    /// An intensity is outside `[0, 1]` or not finite.
    IntensityOutOfRange { index: usize, value: f64 },
    /// A template extraction sample fell outside the scene's valid domain.
    SampleOutOfDomain { x: f64, y: f64 },
    /// The file could not be read or written.
    Io(std::io::Error),
    /// The file is not a format this crate accepts.
    UnsupportedFormat(String),
    /// A header field is malformed or inconsistent with the payload.
    MalformedFile(String),
}

impl fmt::Display for ImageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImageError::EmptyDimensions => write!(f, "image dimensions must be at least 1x1"),
            ImageError::LengthMismatch { expected, actual } => {
                write!(f, "pixel buffer has {actual} values, expected {expected}")
            }
            ImageError::IntensityOutOfRange { index, value } => {
                write!(f, "intensity {value} at index {index} is outside [0, 1]")
            }
            ImageError::SampleOutOfDomain { x, y } => {
                write!(f, "sample coordinate ({x}, {y}) is outside the scene domain")
            }
            ImageError::Io(e) => write!(f, "i/o error: {e}"),
            ImageError::UnsupportedFormat(s) => write!(f, "unsupported format: {s}"),
            ImageError::MalformedFile(s) => write!(f, "malformed file: {s}"),
        }
    }
}

impl std::error::Error for ImageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ImageError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for ImageError {
    fn from(e: std::io::Error) -> Self {
        ImageError::Io(e)
    }
}

impl Image {
    /// Builds an image from a row-major buffer, validating that every
    /// intensity lies in `[0, 1]` and that the buffer length matches the
    /// dimensions.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyDimensions);
        }
        let expected = width * height;
        if data.len() != expected {
            return Err(ImageError::LengthMismatch {
                expected,
                actual: data.len(),
            });
        }
        for (index, &value) in data.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(ImageError::IntensityOutOfRange { index, value });
            }
        }
        Ok(Image {
            width,
            height,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel center.
    /// The result of `f` is clamped into `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "dimensions must be at least 1x1");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Image {
            width,
            height,
            data,
        }
    }

    /// A `width x height` image where every pixel holds `value`.
    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Row-major intensity buffer, length `width * height`.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Intensity at pixel `(x, y)`. Panics if out of range.
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> f64 {
        assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    /// Bilinear sample at the continuous coordinate `(px, py)`.
    ///
    /// Returns `None` when the coordinate falls outside the valid domain
    /// `[0, width-1] x [0, height-1]` (an out-of-domain query is legal, not
    /// an error). Inside the domain the result is the bilinear blend of the
    /// four surrounding pixel centers; queries exactly at a pixel center
    /// return that pixel's stored value.
    #[inline]
    pub fn sample_bilinear(&self, px: f64, py: f64) -> Option<f64> {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        if !(px >= 0.0 && px <= max_x && py >= 0.0 && py <= max_y) {
            return None;
        }
        let x0 = if self.width == 1 {
            0
        } else {
            (px.floor() as usize).min(self.width - 2)
        };
        let y0 = if self.height == 1 {
            0
        } else {
            (py.floor() as usize).min(self.height - 2)
        };
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = px - x0 as f64;
        let fy = py - y0 as f64;
        let v00 = self.data[y0 * self.width + x0];
        let v01 = self.data[y0 * self.width + x1];
        let v10 = self.data[y1 * self.width + x0];
        let v11 = self.data[y1 * self.width + x1];
        Some(
            v00 * (1.0 - fx) * (1.0 - fy)
                + v01 * fx * (1.0 - fy)
                + v10 * (1.0 - fx) * fy
                + v11 * fx * fy,
        )
    }
}

/// Cuts a `w x h` template out of `scene`, centered at `(cx, cy)` and
/// magnified by `sigma_extract` (template pixels per scene pixel).
///
/// Template pixel `(u, v)` samples the scene at
/// `(cx + (u - (w-1)/2) / sigma_extract, cy + (v - (h-1)/2) / sigma_extract)`,
/// so the sample lattice is symmetric around the center. By construction the
/// registration objective is exactly zero at the pose
/// `(cx, cy, 1 / sigma_extract)`.
///
/// Fails with the offending coordinate if any sample falls outside the
/// scene's valid bilinear domain; nothing is partially produced.
pub fn extract_template(
    scene: &Image,
    cx: f64,
    cy: f64,
    sigma_extract: f64,
    w: usize,
    h: usize,
) -> Result<Image, ImageError> {
    assert!(
        sigma_extract > 0.0,
        "extraction magnification must be positive"
    );
    if w == 0 || h == 0 {
        return Err(ImageError::EmptyDimensions);
    }
    let half_u = (w as f64 - 1.0) / 2.0;
    let half_v = (h as f64 - 1.0) / 2.0;
    let mut data = Vec::with_capacity(w * h);
    for v in 0..h {
        let sy = cy + (v as f64 - half_v) / sigma_extract;
        for u in 0..w {
            let sx = cx + (u as f64 - half_u) / sigma_extract;
            match scene.sample_bilinear(sx, sy) {
                Some(value) => data.push(value),
                None => return Err(ImageError::SampleOutOfDomain { x: sx, y: sy }),
            }
        }
    }
    Image::new(w, h, data)
}

/// Deterministic synthetic test scene: a multi-frequency intensity pattern
/// with repeated motifs (which induce local registration minima), a broad
/// illumination dome over the anchor region (which gives the error surface
/// the long-range slope real lighting produces), plus localized blobs that
/// keep the global basin distinctive.
///
/// Pure function of `(width, height)`; intensities are quantized to the
/// 8-bit grid `k/255` so that writing the scene to PGM and reading it back
/// is lossless.
pub fn synthetic_scene(width: usize, height: usize) -> Image {
    let w = width as f64;
    let h = height as f64;
    let blob = |x: f64, y: f64, bx: f64, by: f64, r: f64| -> f64 {
        let dx = x - bx;
        let dy = y - by;
        (-(dx * dx + dy * dy) / (2.0 * r * r)).exp()
    };
    let rmin = w.min(h);
    Image::from_fn(width, height, |xi, yi| {
        let x = xi as f64;
        let y = yi as f64;
        let tau = std::f64::consts::TAU;
        let mut value = 0.33
            + 0.12 * (tau * x / 16.3).sin() * (tau * y / 11.7).cos()
            + 0.07 * (tau * (x + 1.7 * y) / 37.0).cos()
            + 0.04 * (tau * x / 5.3).sin() * (tau * y / 7.1).sin();
        // Wide dome centered where the anchor sits, then a bright anchor
        // blob, a dark blob and a weaker same-polarity decoy blob.
        value += 0.30 * blob(x, y, 0.5234 * w, 0.4766 * h, 0.40 * rmin);
        value += 0.18 * blob(x, y, 0.5234 * w, 0.4766 * h, 0.085 * rmin);
        value -= 0.15 * blob(x, y, 0.22 * w, 0.72 * h, 0.06 * rmin);
        value += 0.10 * blob(x, y, 0.78 * w, 0.25 * h, 0.06 * rmin);
        value = value.clamp(0.0, 1.0);
        (value * 255.0).round() / 255.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn new_rejects_length_mismatch() {
        let err = Image::new(4, 4, vec![0.0; 8]).unwrap_err();
        assert!(matches!(
            err,
            ImageError::LengthMismatch {
                expected: 16,
                actual: 8
            }
        ));
    }

    #[test]
    fn new_rejects_out_of_range_intensity() {
        let err = Image::new(2, 1, vec![0.5, 1.5]).unwrap_err();
        assert!(matches!(
            err,
            ImageError::IntensityOutOfRange { index: 1, .. }
        ));
    }

    #[test]
    fn bilinear_center_of_four_pixels_is_their_mean() {
        // Raw byte values 0, 255, 128, 64 normalized by 255.
        let data = vec![0.0, 255.0 / 255.0, 128.0 / 255.0, 64.0 / 255.0];
        let img = Image::new(2, 2, data).unwrap();
        let got = img.sample_bilinear(0.5, 0.5).unwrap();
        let mean = (0.0 + 1.0 + 128.0 / 255.0 + 64.0 / 255.0) / 4.0;
        assert!((got - mean).abs() < 1e-15);
    }

    #[test]
    fn bilinear_is_exact_at_pixel_centers() {
        let img = Image::new(3, 2, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        for y in 0..2 {
            for x in 0..3 {
                let got = img.sample_bilinear(x as f64, y as f64).unwrap();
                assert_eq!(got, img.pixel(x, y));
            }
        }
    }

    #[test]
    fn bilinear_rejects_out_of_domain_queries() {
        let img = Image::constant(2, 2, 0.5);
        assert_eq!(img.sample_bilinear(-0.001, 0.5), None);
        assert_eq!(img.sample_bilinear(0.5, 1.0001), None);
        assert_eq!(img.sample_bilinear(f64::NAN, 0.5), None);
        // Domain corners are valid.
        assert!(img.sample_bilinear(0.0, 0.0).is_some());
        assert!(img.sample_bilinear(1.0, 1.0).is_some());
    }

    #[test]
    fn extract_identity_copies_the_scene() {
        let scene = synthetic_scene(17, 13);
        let cx = (scene.width() as f64 - 1.0) / 2.0;
        let cy = (scene.height() as f64 - 1.0) / 2.0;
        let copy = extract_template(&scene, cx, cy, 1.0, 17, 13).unwrap();
        assert_eq!(copy, scene);
    }

    #[test]
    fn extract_rejects_window_past_border() {
        let scene = synthetic_scene(16, 16);
        let err = extract_template(&scene, 2.0, 8.0, 1.0, 10, 4).unwrap_err();
        assert!(matches!(err, ImageError::SampleOutOfDomain { .. }));
    }

    #[test]
    fn synthetic_scene_is_quantized_and_deterministic() {
        let a = synthetic_scene(32, 24);
        let b = synthetic_scene(32, 24);
        assert_eq!(a, b);
        for &v in a.data() {
            let k = v * 255.0;
            assert!((k - k.round()).abs() < 1e-9, "intensity {v} not on k/255 grid");
        }
    }

    proptest! {
        // Continuity: queries 1e-9 apart differ by far less than 1e-6.
        #[test]
        fn bilinear_is_continuous(
            w in 2usize..8,
            h in 2usize..8,
            seed in 0u64..1000,
            tx in 0.0f64..1.0,
            ty in 0.0f64..1.0,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<f64> = (0..w * h).map(|_| rng.random::<f64>()).collect();
            let img = Image::new(w, h, data).unwrap();
            let px = tx * (w as f64 - 1.0 - 1e-9);
            let py = ty * (h as f64 - 1.0 - 1e-9);
            let a = img.sample_bilinear(px, py).unwrap();
            let b = img.sample_bilinear(px + 1e-9, py + 1e-9).unwrap();
            prop_assert!((a - b).abs() < 1e-6);
        }
    }
}
