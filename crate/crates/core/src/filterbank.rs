//! Morlet band-pass atoms, the Gaussian low-pass, and the Littlewood-Paley
//! frame check.
//!
//! Atoms are synthesized in the spatial domain on the periodic grid (summing
//! enough periodic images that truncation is negligible) and then moved to
//! the frequency domain, so every filter is exactly the DFT of a periodic
//! kernel. The band-pass DC term is removed by a Gaussian correction
//! computed from the same discrete sums, which makes `psi_hat(0)` vanish up
//! to rounding.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ensure_same_dims, ComplexImage, Fft2};

/// Center frequency of the finest Morlet atom, radians per sample.
pub const MORLET_XI: f64 = 3.0 * std::f64::consts::PI / 4.0;

/// Fraction of the Nyquist radius over which the frame bound is measured.
pub const LP_DISC_FRACTION: f64 = 7.0 / 8.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterBankSpec {
    pub num_scales: usize,
    pub num_angles: usize,
    pub sigma_phi: f64,
    pub sigma_psi: f64,
    pub grid_width: usize,
    pub grid_height: usize,
    pub max_order: usize,
}

impl Default for FilterBankSpec {
    fn default() -> Self {
        Self {
            num_scales: 5,
            num_angles: 8,
            sigma_phi: 0.7,
            sigma_psi: 0.5,
            grid_width: 64,
            grid_height: 64,
            max_order: 2,
        }
    }
}

impl FilterBankSpec {
    pub fn with_grid(mut self, width: usize, height: usize) -> Self {
        self.grid_width = width;
        self.grid_height = height;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_scales == 0 || self.num_angles == 0 {
            return Err(Error::InvalidSpec(format!(
                "need at least one scale and one angle, got S={} K={}",
                self.num_scales, self.num_angles
            )));
        }
        if !(self.sigma_phi > 0.0 && self.sigma_phi.is_finite()) {
            return Err(Error::InvalidSpec(format!("sigma_phi must be > 0, got {}", self.sigma_phi)));
        }
        if !(self.sigma_psi > 0.0 && self.sigma_psi.is_finite()) {
            return Err(Error::InvalidSpec(format!("sigma_psi must be > 0, got {}", self.sigma_psi)));
        }
        if self.grid_width == 0 || self.grid_height == 0 {
            return Err(Error::InvalidSpec("grid dimensions must be positive".into()));
        }
        if self.num_scales > 40 {
            return Err(Error::InvalidSpec(format!("{} scales is not a usable dyadic range", self.num_scales)));
        }
        let coarsest = 1usize << (self.num_scales - 1);
        if coarsest * 4 > self.grid_width.min(self.grid_height) {
            return Err(Error::GridTooSmall {
                width: self.grid_width,
                height: self.grid_height,
                scales: self.num_scales,
            });
        }
        Ok(())
    }

    /// Orientation selectivity of the atoms (minor/major axis ratio).
    pub fn slant(&self) -> f64 {
        4.0 / self.num_angles as f64
    }
}

/// Frequency-domain filters on one grid.
#[derive(Clone, Debug)]
pub struct FilterBank {
    phi_hat: ComplexImage,
    psi_hat: Vec<Vec<ComplexImage>>,
    spec: FilterBankSpec,
    gain: f64,
}

impl FilterBank {
    /// Wraps arbitrary frequency-domain filters. `psi_hat` is indexed
    /// `[scale][angle]` and may be empty.
    pub fn from_filters(
        phi_hat: ComplexImage,
        psi_hat: Vec<Vec<ComplexImage>>,
        max_order: usize,
    ) -> Result<Self> {
        let dims = phi_hat.dims();
        let angles = psi_hat.first().map_or(0, Vec::len);
        for row in &psi_hat {
            if row.len() != angles || angles == 0 {
                return Err(Error::InvalidSpec("band-pass filters must form a full scale x angle table".into()));
            }
            for f in row {
                ensure_same_dims(dims, f.dims())?;
            }
        }
        let spec = FilterBankSpec {
            num_scales: psi_hat.len(),
            num_angles: angles,
            grid_width: dims.0,
            grid_height: dims.1,
            max_order,
            ..FilterBankSpec::default()
        };
        Ok(Self { phi_hat, psi_hat, spec, gain: 1.0 })
    }

    pub fn spec(&self) -> &FilterBankSpec {
        &self.spec
    }

    pub fn phi_hat(&self) -> &ComplexImage {
        &self.phi_hat
    }

    pub fn psi_hat(&self, scale: usize, angle: usize) -> &ComplexImage {
        &self.psi_hat[scale][angle]
    }

    pub fn num_scales(&self) -> usize {
        self.psi_hat.len()
    }

    pub fn num_angles(&self) -> usize {
        self.psi_hat.first().map_or(0, Vec::len)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.phi_hat.dims()
    }

    /// Factor by which the raw atoms were divided during peak normalization.
    pub fn normalization(&self) -> f64 {
        self.gain
    }

    pub fn band_pass(&self) -> impl Iterator<Item = ((usize, usize), &ComplexImage)> {
        self.psi_hat
            .iter()
            .enumerate()
            .flat_map(|(j, row)| row.iter().enumerate().map(move |(k, f)| ((j, k), f)))
    }
}

/// Wrapped spatial coordinate in `[-N/2, N/2)`.
fn wrapped(n: usize, len: usize) -> f64 {
    ((n + len / 2) % len) as f64 - (len / 2) as f64
}

/// Periodized anisotropic Gaussian `g` and Gabor `g * exp(i xi x')` kernels.
fn periodic_gabor(
    width: usize,
    height: usize,
    sigma: f64,
    theta: f64,
    xi: f64,
    slant: f64,
) -> (Vec<f64>, Vec<Complex64>) {
    let reach = 5.0 * sigma / slant.min(1.0);
    let tiles_x = (reach / width as f64).ceil() as i64;
    let tiles_y = (reach / height as f64).ceil() as i64;
    let (sin_t, cos_t) = theta.sin_cos();
    let inv_two_var = 1.0 / (2.0 * sigma * sigma);
    let slant_sq = slant * slant;
    let mut gauss = vec![0.0; width * height];
    let mut gabor = vec![Complex64::new(0.0, 0.0); width * height];
    for y in 0..height {
        let y0 = wrapped(y, height);
        for x in 0..width {
            let x0 = wrapped(x, width);
            let (mut g_acc, mut w_acc) = (0.0, Complex64::new(0.0, 0.0));
            for ty in -tiles_y..=tiles_y {
                let yy = y0 + (ty * height as i64) as f64;
                for tx in -tiles_x..=tiles_x {
                    let xx = x0 + (tx * width as i64) as f64;
                    let xr = xx * cos_t + yy * sin_t;
                    let yr = -xx * sin_t + yy * cos_t;
                    let g = (-(xr * xr + slant_sq * yr * yr) * inv_two_var).exp();
                    g_acc += g;
                    if xi != 0.0 {
                        w_acc += Complex64::from_polar(g, xi * xr);
                    }
                }
            }
            gauss[y * width + x] = g_acc;
            gabor[y * width + x] = w_acc;
        }
    }
    (gauss, gabor)
}

fn to_frequency(fft: &Fft2, mut spatial: Vec<Complex64>) -> Vec<Complex64> {
    // Unitary transform times sqrt(N) is the plain DFT sum, so a unit-sum
    // kernel has unit DC gain.
    let root_n = ((spatial.len()) as f64).sqrt();
    fft.forward_in_place(&mut spatial);
    spatial.iter_mut().for_each(|z| *z *= root_n);
    spatial
}

/// Builds the `S x K` Morlet family plus the Gaussian low-pass and
/// peak-normalizes the whole bank so the one-sided Littlewood-Paley sum
/// never exceeds 1.
pub fn build_morlet_bank(spec: &FilterBankSpec) -> Result<FilterBank> {
    spec.validate()?;
    let (w, h) = (spec.grid_width, spec.grid_height);
    let fft = Fft2::new(w, h);
    let slant = spec.slant();

    let (gauss, _) = periodic_gabor(w, h, spec.sigma_phi * (1u64 << (spec.num_scales - 1)) as f64, 0.0, 0.0, 1.0);
    let total: f64 = gauss.iter().sum();
    let phi_spatial = gauss.iter().map(|&g| Complex64::new(g / total, 0.0)).collect();
    let mut phi = to_frequency(&fft, phi_spatial);

    let mut psi: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(spec.num_scales);
    for j in 0..spec.num_scales {
        let dilation = (1u64 << j) as f64;
        let sigma = spec.sigma_psi * dilation;
        let xi = MORLET_XI / dilation;
        let mut row = Vec::with_capacity(spec.num_angles);
        for k in 0..spec.num_angles {
            let theta = k as f64 * std::f64::consts::PI / spec.num_angles as f64;
            let (g, wave) = periodic_gabor(w, h, sigma, theta, xi, slant);
            let g_sum: f64 = g.iter().sum();
            let beta = wave.iter().sum::<Complex64>() / g_sum;
            let spatial = wave.iter().zip(&g).map(|(&wv, &gv)| (wv - beta * gv) / g_sum).collect();
            row.push(to_frequency(&fft, spatial));
        }
        psi.push(row);
    }

    let mut peak = 0.0f64;
    for i in 0..w * h {
        let mut a = phi[i].norm_sqr();
        for row in &psi {
            for f in row {
                a += f[i].norm_sqr();
            }
        }
        peak = peak.max(a);
    }
    let gain = peak.sqrt();
    let inv = 1.0 / gain;
    phi.iter_mut().for_each(|z| *z *= inv);
    let psi_hat = psi
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|mut f| {
                    f.iter_mut().for_each(|z| *z *= inv);
                    ComplexImage::from_raw(w, h, f)
                })
                .collect()
        })
        .collect();

    Ok(FilterBank {
        phi_hat: ComplexImage::from_raw(w, h, phi),
        psi_hat,
        spec: spec.clone(),
        gain,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LPReport {
    /// Minimum of the conjugate-symmetrized sum over the measurement disc.
    pub min_sum: f64,
    /// Maximum of the conjugate-symmetrized sum over all frequencies.
    pub max_sum: f64,
    /// `1 - min_sum`.
    pub epsilon: f64,
    /// Minimum of the one-sided sum `|phi|^2 + sum |psi(w)|^2` over the disc;
    /// this is the bound that applies to complex (chirp-modulated) inputs.
    pub one_sided_min_sum: f64,
    /// Maximum of the one-sided sum over all frequencies.
    pub one_sided_max_sum: f64,
}

/// Signed angular frequency of DFT bin `k` on an axis of length `len`.
pub(crate) fn bin_frequency(k: usize, len: usize) -> f64 {
    let signed = if k < len.div_ceil(2) { k as f64 } else { k as f64 - len as f64 };
    2.0 * std::f64::consts::PI * signed / len as f64
}

/// Evaluates the Littlewood-Paley sum of a bank.
///
/// The symmetrized sum is `|phi(w)|^2 + 1/2 sum (|psi(w)|^2 + |psi(-w)|^2)`,
/// the exact energy multiplier seen by real inputs; its minimum is taken
/// over the disc `|w| <= 7/8 pi`, since corner frequencies are not covered
/// by a finite rotation set.
pub fn littlewood_paley(bank: &FilterBank) -> LPReport {
    let (w, h) = bank.dims();
    let mut one_sided = vec![0.0; w * h];
    for (i, z) in bank.phi_hat().data().iter().enumerate() {
        one_sided[i] = z.norm_sqr();
    }
    for (_, f) in bank.band_pass() {
        for (acc, z) in one_sided.iter_mut().zip(f.data()) {
            *acc += z.norm_sqr();
        }
    }
    let phi = bank.phi_hat().data();
    let radius = LP_DISC_FRACTION * std::f64::consts::PI;
    let mut report = LPReport {
        min_sum: f64::INFINITY,
        max_sum: 0.0,
        epsilon: 0.0,
        one_sided_min_sum: f64::INFINITY,
        one_sided_max_sum: 0.0,
    };
    for ky in 0..h {
        let neg_y = (h - ky) % h;
        let wy = bin_frequency(ky, h);
        for kx in 0..w {
            let neg_x = (w - kx) % w;
            let i = ky * w + kx;
            let j = neg_y * w + neg_x;
            let pos_phi = phi[i].norm_sqr();
            let neg_phi = phi[j].norm_sqr();
            // Reflected band-pass energy without double counting the low-pass.
            let sym = pos_phi + 0.5 * ((one_sided[i] - pos_phi) + (one_sided[j] - neg_phi));
            report.max_sum = report.max_sum.max(sym);
            report.one_sided_max_sum = report.one_sided_max_sum.max(one_sided[i]);
            let wx = bin_frequency(kx, w);
            if wx.hypot(wy) <= radius {
                report.min_sum = report.min_sum.min(sym);
                report.one_sided_min_sum = report.one_sided_min_sum.min(one_sided[i]);
            }
        }
    }
    if !report.min_sum.is_finite() {
        report.min_sum = 0.0;
        report.one_sided_min_sum = 0.0;
    }
    report.epsilon = 1.0 - report.min_sum;
    report
}
