//! Two-dimensional sample grids and the elementwise machinery every other
//! module builds on: complex/real images, fractional order pairs, chirps,
//! modulus and unitary spectra.
//!
//! Images are stored row-major: sample `(x, y)` lives at `y * width + x`,
//! with `x` running along the width (first fractional axis) and `y` along
//! the height (second fractional axis).

mod chirp;
mod spectral;

pub use chirp::{chirp, chirp_pair, ChirpPair, ChirpSign};
pub use spectral::{inverse_spectrum, spectrum, Fft2};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A complex-valued image.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexImage {
    width: usize,
    height: usize,
    data: Vec<Complex64>,
}

/// A real-valued image.
#[derive(Clone, Debug, PartialEq)]
pub struct RealImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidImage(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::InvalidImage(format!(
            "{width}x{height} grid needs {} samples, got {len}",
            width.saturating_mul(height)
        )));
    }
    Ok(())
}

impl ComplexImage {
    pub fn new(width: usize, height: usize, data: Vec<Complex64>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        if let Some(i) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidImage(format!("non-finite sample at index {i}")));
        }
        Ok(Self { width, height, data })
    }

    /// Builds an image without the finiteness scan. Callers guarantee the
    /// length invariant.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(width * height, data.len());
        Self { width, height, data }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::from_raw(width, height, vec![Complex64::new(0.0, 0.0); width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_raw(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> Complex64 {
        self.data[y * self.width + x]
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Pointwise product.
    pub fn hadamard(&self, other: &ComplexImage) -> Result<ComplexImage> {
        ensure_same_dims(self.dims(), other.dims())?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect();
        Ok(Self::from_raw(self.width, self.height, data))
    }

    pub fn scale(&self, s: Complex64) -> ComplexImage {
        Self::from_raw(self.width, self.height, self.data.iter().map(|z| z * s).collect())
    }

    pub fn add(&self, other: &ComplexImage) -> Result<ComplexImage> {
        ensure_same_dims(self.dims(), other.dims())?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self::from_raw(self.width, self.height, data))
    }

    pub fn sub(&self, other: &ComplexImage) -> Result<ComplexImage> {
        ensure_same_dims(self.dims(), other.dims())?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self::from_raw(self.width, self.height, data))
    }

    pub fn real_part(&self) -> RealImage {
        RealImage::from_raw(self.width, self.height, self.data.iter().map(|z| z.re).collect())
    }
}

impl RealImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidImage(format!("non-finite sample at index {i}")));
        }
        Ok(Self { width, height, data })
    }

    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(width * height, data.len());
        Self { width, height, data }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::from_raw(width, height, vec![0.0; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_raw(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn to_complex(&self) -> ComplexImage {
        ComplexImage::from_raw(
            self.width,
            self.height,
            self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn sub(&self, other: &RealImage) -> Result<RealImage> {
        ensure_same_dims(self.dims(), other.dims())?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self::from_raw(self.width, self.height, data))
    }

    /// Circular shift by `(dx, dy)`: output `(x, y)` takes input `(x - dx, y - dy)`.
    pub fn circular_shift(&self, dx: isize, dy: isize) -> RealImage {
        let (w, h) = (self.width as isize, self.height as isize);
        Self::from_fn(self.width, self.height, |x, y| {
            let sx = (x as isize - dx).rem_euclid(w) as usize;
            let sy = (y as isize - dy).rem_euclid(h) as usize;
            self.get(sx, sy)
        })
    }

    /// Rectangular window starting at `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<RealImage> {
        if width == 0 || height == 0 || x0 + width > self.width || y0 + height > self.height {
            return Err(Error::InvalidImage(format!(
                "crop {width}x{height}+{x0}+{y0} outside {}x{}",
                self.width, self.height
            )));
        }
        Ok(Self::from_fn(width, height, |x, y| self.get(x0 + x, y0 + y)))
    }
}

pub(crate) fn ensure_same_dims(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Pointwise magnitude `|x| = sqrt(re^2 + im^2)`.
pub fn modulus(x: &ComplexImage) -> RealImage {
    RealImage::from_raw(x.width, x.height, x.data.iter().map(|z| z.norm()).collect())
}

/// The pair of fractional orders `(alpha1, alpha2)` applied along the width
/// and height axes. Rotation angles are `theta_i = alpha_i * pi / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionalOrderPair {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl FractionalOrderPair {
    pub fn new(alpha1: f64, alpha2: f64) -> Result<Self> {
        for a in [alpha1, alpha2] {
            if !(a > 0.0 && a < 2.0) {
                return Err(Error::InvalidOrder(a));
            }
        }
        Ok(Self { alpha1, alpha2 })
    }

    /// The classical (non-fractional) setting `(1, 1)`.
    pub const fn classical() -> Self {
        Self { alpha1: 1.0, alpha2: 1.0 }
    }

    pub fn is_classical(&self) -> bool {
        self.alpha1 == 1.0 && self.alpha2 == 1.0
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.alpha1, self.alpha2).map(|_| ())
    }

    pub fn angles(&self) -> (f64, f64) {
        (self.alpha1 * std::f64::consts::FRAC_PI_2, self.alpha2 * std::f64::consts::FRAC_PI_2)
    }

    /// `(cot theta1, cot theta2)`, exactly zero for an order of 1.
    pub fn cotangents(&self) -> (f64, f64) {
        (cot_of_order(self.alpha1), cot_of_order(self.alpha2))
    }
}

impl std::fmt::Display for FractionalOrderPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({:.2}, {:.2})", self.alpha1, self.alpha2)
    }
}

/// `cot(alpha * pi / 2)`. `cos(pi/2)` does not round to zero in floating
/// point, so the classical order is special-cased to keep its chirp exactly 1.
pub fn cot_of_order(alpha: f64) -> f64 {
    if alpha == 1.0 {
        return 0.0;
    }
    let theta = alpha * std::f64::consts::FRAC_PI_2;
    theta.cos() / theta.sin()
}
