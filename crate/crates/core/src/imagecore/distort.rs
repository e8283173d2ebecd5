//! Template distortions for robustness experiments: Gaussian blur and
//! additive Gaussian noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::Image;

/// A distortion to apply to a template before registration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistortionSpec {
    /// Separable Gaussian convolution with standard deviation `sigma`
    /// (pixels). Kernel truncated at radius `ceil(3 sigma)` with
    /// renormalized weights; borders handled by clamping coordinates.
    GaussianBlur { sigma: f64 },
    /// Adds `N(0, sigma^2)` (intensity units) to every pixel from the
    /// seeded generator, then clamps the result back into `[0, 1]`.
    GaussianNoise { sigma: f64, seed: u64 },
}

impl DistortionSpec {
    pub fn sigma(&self) -> f64 {
        match *self {
            DistortionSpec::GaussianBlur { sigma } => sigma,
            DistortionSpec::GaussianNoise { sigma, .. } => sigma,
        }
    }
}

/// Applies `spec` to `img`, producing a new image of the same dimensions
/// with all intensities still in `[0, 1]`. Deterministic: the same
/// `spec` on the same image always produces the same pixels.
///
/// Panics if `spec.sigma()` is not a positive finite number.
pub fn distort(img: &Image, spec: &DistortionSpec) -> Image {
    let sigma = spec.sigma();
    assert!(
        sigma.is_finite() && sigma > 0.0,
        "distortion sigma must be positive, got {sigma}"
    );
    match *spec {
        DistortionSpec::GaussianBlur { sigma } => gaussian_blur(img, sigma),
        DistortionSpec::GaussianNoise { sigma, seed } => gaussian_noise(img, sigma, seed),
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut weights: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    weights
}

fn gaussian_blur(img: &Image, sigma: f64) -> Image {
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;
    let (w, h) = (img.width(), img.height());
    let clamp = |i: i64, n: usize| i.clamp(0, n as i64 - 1) as usize;

    // Horizontal pass.
    let mut mid = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, &kw) in kernel.iter().enumerate() {
                let sx = clamp(x as i64 + ki as i64 - radius, w);
                acc += kw * img.pixel(sx, y);
            }
            mid[y * w + x] = acc;
        }
    }
    // Vertical pass.
    let mut out = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, &kw) in kernel.iter().enumerate() {
                let sy = clamp(y as i64 + ki as i64 - radius, h);
                acc += kw * mid[sy * w + x];
            }
            // Renormalized weights keep a convex combination, but guard
            // against last-ulp drift past the interval ends.
            out[y * w + x] = acc.clamp(0.0, 1.0);
        }
    }
    Image::new(w, h, out).expect("blur preserves the intensity invariant")
}

fn gaussian_noise(img: &Image, sigma: f64, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma checked positive");
    let data = img
        .data()
        .iter()
        .map(|&v| (v + normal.sample(&mut rng)).clamp(0.0, 1.0))
        .collect();
    Image::new(img.width(), img.height(), data).expect("noise output is clamped")
}
