//! Deterministic synthetic textures: stationary band-limited noise and the
//! same kind of noise carried by a chirp along the vertical axis.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::{bin_frequency, FilterBank};
use crate::grid::{chirp, ChirpSign, ComplexImage, Fft2, FractionalOrderPair, RealImage};
use crate::metrics::InstanceMask;
use crate::scattering::scatter;

/// Shape of the two texture classes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextureSpec {
    pub size: usize,
    /// Half-bandwidth of the base noise, radians per sample.
    pub cutoff: f64,
    /// Vertical fractional order whose chirp carries the second class.
    pub chirp_order: f64,
}

impl Default for TextureSpec {
    fn default() -> Self {
        Self { size: 64, cutoff: 0.1, chirp_order: 0.4 }
    }
}

impl TextureSpec {
    /// Largest instantaneous vertical frequency swept by the chirp.
    pub fn chirp_reach(&self) -> f64 {
        let cot = crate::grid::cot_of_order(self.chirp_order);
        let half = (self.size / 2) as f64 / (self.size as f64).sqrt();
        half * cot.abs() / (self.size as f64).sqrt()
    }
}

/// Complex white noise restricted to `|wx| <= cx`, `|wy| <= cy`.
pub fn band_limited_noise(w: usize, h: usize, cx: f64, cy: f64, rng: &mut ChaCha8Rng) -> ComplexImage {
    let white = ComplexImage::from_fn(w, h, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let fft = Fft2::shared(w, h);
    let mut spec = fft.forward(&white).into_data();
    for ky in 0..h {
        for kx in 0..w {
            if bin_frequency(kx, w).abs() > cx || bin_frequency(ky, h).abs() > cy {
                spec[ky * w + kx] = Complex64::new(0.0, 0.0);
            }
        }
    }
    fft.inverse(&ComplexImage::new(w, h, spec).expect("same size"))
}

fn unit_rms(img: RealImage) -> RealImage {
    let rms = (img.norm_sq() / img.data().len() as f64).sqrt();
    if rms == 0.0 {
        return img;
    }
    let (w, h) = img.dims();
    let data = img.into_data().into_iter().map(|v| v / rms).collect();
    RealImage::new(w, h, data).expect("same size")
}

/// Realizations averaged to estimate the chirped class's power spectrum.
const PSD_REALIZATIONS: u64 = 32;

/// Average power spectrum of the chirped class over a fixed set of seeds
/// disjoint from the ones used for fixtures.
pub fn chirped_power_spectrum(spec: &TextureSpec) -> Vec<f64> {
    let n = spec.size;
    let fft = Fft2::shared(n, n);
    let mut psd = vec![0.0; n * n];
    for i in 0..PSD_REALIZATIONS {
        let x = chirped_texture(spec, u64::MAX - i).to_complex();
        for (p, z) in psd.iter_mut().zip(fft.forward(&x).data()) {
            *p += z.norm_sqr() / PSD_REALIZATIONS as f64;
        }
    }
    psd
}

/// Stationary Gaussian noise with the chirped class's average power
/// spectrum: the two classes agree in global band energies and differ only
/// in how frequency content moves across the image.
pub fn stationary_texture(spec: &TextureSpec, seed: u64) -> RealImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.size;
    let fft = Fft2::shared(n, n);
    let white = ComplexImage::from_fn(n, n, |_, _| Complex64::new(StandardNormal.sample(&mut rng), 0.0));
    let mut shaped = fft.forward(&white).into_data();
    for (z, p) in shaped.iter_mut().zip(chirped_power_spectrum(spec)) {
        *z *= p.sqrt();
    }
    unit_rms(fft.inverse(&ComplexImage::new(n, n, shaped).expect("same size")).real_part())
}

/// Real part of low-pass noise multiplied by a downward vertical chirp.
pub fn chirped_texture(spec: &TextureSpec, seed: u64) -> RealImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.size;
    let noise = band_limited_noise(n, n, spec.cutoff, spec.cutoff, &mut rng);
    let orders = FractionalOrderPair { alpha1: 1.0, alpha2: spec.chirp_order };
    let carrier = chirp(n, n, orders, ChirpSign::Negative).expect("valid order");
    unit_rms(noise.hadamard(&carrier).expect("same size").real_part())
}

/// Maps values linearly into `[0, 1]` with 0 at 0.5, for 8-bit export.
pub fn to_unit_range(img: &RealImage) -> RealImage {
    let peak = img.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let s = if peak > 0.0 { 0.5 / peak } else { 0.0 };
    RealImage::from_fn(img.width(), img.height(), |x, y| 0.5 + s * img.get(x, y))
}

#[derive(Clone, Debug)]
pub struct FixtureImage {
    pub name: String,
    /// 0 stationary, 1 chirped.
    pub class: i32,
    pub image: RealImage,
    /// All background for stationary images, all foreground for chirped ones.
    pub mask: InstanceMask,
}

/// Eight images, alternating stationary and chirped, seeds derived from `seed`.
pub fn fixture_set(spec: &TextureSpec, seed: u64) -> Vec<FixtureImage> {
    (0..8u64)
        .map(|i| {
            let class = (i % 2) as i32;
            let s = seed.wrapping_mul(1000).wrapping_add(i);
            let (image, kind) = if class == 0 {
                (stationary_texture(spec, s), "stationary")
            } else {
                (chirped_texture(spec, s), "chirped")
            };
            let n = spec.size;
            FixtureImage {
                name: format!("{i:02}_{kind}"),
                class,
                mask: InstanceMask::new(n, n, vec![class as u32; n * n]).expect("sized"),
                image,
            }
        })
        .collect()
}

/// Spatial means of the order 0 and 1 coefficients of a zero-mean,
/// unit-norm copy of `x`.
pub fn low_order_signature(x: &RealImage, bank: &FilterBank, orders: FractionalOrderPair) -> Result<Vec<f64>> {
    let mean = x.mean();
    let centered = RealImage::from_fn(x.width(), x.height(), |i, j| x.get(i, j) - mean);
    let norm = centered.norm();
    if !(norm > 0.0) {
        return Err(Error::InvalidImage("constant image has no texture signature".into()));
    }
    let unit = RealImage::from_fn(x.width(), x.height(), |i, j| centered.get(i, j) / norm);
    let s = scatter(&unit, bank, orders)?;
    Ok(s.iter().filter(|(p, _)| p.order() <= 1).map(|(_, c)| c.mean()).collect())
}

/// Mean between-class Euclidean distance over mean within-class distance.
/// Each class needs at least two members.
pub fn separation_ratio(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidInput("separation needs two members per class".into()));
    }
    let d = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let between: Vec<f64> = a.iter().flat_map(|x| b.iter().map(move |y| d(x, y))).collect();
    let mut within = Vec::new();
    for set in [a, b] {
        for i in 0..set.len() {
            for j in i + 1..set.len() {
                within.push(d(&set[i], &set[j]));
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(mean(&between) / mean(&within))
}

/// Separation ratio of the two fixture classes under each order setting.
pub fn class_separation(
    images: &[(i32, RealImage)],
    bank: &FilterBank,
    order_grid: &[FractionalOrderPair],
) -> Result<Vec<f64>> {
    order_grid
        .iter()
        .map(|&o| {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for (class, img) in images {
                let f = low_order_signature(img, bank, o)?;
                if *class == 0 {
                    a.push(f);
                } else {
                    b.push(f);
                }
            }
            separation_ratio(&a, &b)
        })
        .collect()
}
