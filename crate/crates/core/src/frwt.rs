//! Fractional convolution and the fractional wavelet transform.
//!
//! `x Θα h = e^{-j/2 u² cot θ} · ((x · e^{j/2 u² cot θ}) * h)`, realized on
//! the periodic grid with one forward FFT of the modulated input and one
//! inverse FFT per filter.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::Result;
use crate::filterbank::FilterBank;
use crate::grid::{chirp_pair, ensure_same_dims, ComplexImage, Fft2, FractionalOrderPair};

/// Unitary spectrum of a chirp-modulated signal, ready to be filtered by
/// any number of frequency-domain kernels.
#[derive(Clone, Debug)]
pub struct ModulatedSpectrum {
    spectrum: ComplexImage,
    orders: FractionalOrderPair,
    fft: Arc<Fft2>,
}

impl ModulatedSpectrum {
    pub fn new(x: &ComplexImage, orders: FractionalOrderPair) -> Result<Self> {
        let (w, h) = x.dims();
        let chirps = chirp_pair(w, h, orders)?;
        let mut data = x.data().to_vec();
        if !chirps.is_identity() {
            for (z, c) in data.iter_mut().zip(chirps.positive.data()) {
                *z *= c;
            }
        }
        let fft = Fft2::shared(w, h);
        fft.forward_in_place(&mut data);
        Ok(Self { spectrum: ComplexImage::from_raw(w, h, data), orders, fft })
    }

    pub fn spectrum(&self) -> &ComplexImage {
        &self.spectrum
    }

    pub fn orders(&self) -> FractionalOrderPair {
        self.orders
    }

    /// Filters without the outgoing demodulation. The result differs from
    /// the full fractional convolution only by a unit-modulus factor.
    pub fn filter_undemodulated(&self, h_hat: &ComplexImage) -> Result<ComplexImage> {
        ensure_same_dims(self.spectrum.dims(), h_hat.dims())?;
        let (w, h) = self.spectrum.dims();
        let mut data: Vec<Complex64> =
            self.spectrum.data().iter().zip(h_hat.data()).map(|(a, b)| a * b).collect();
        self.fft.inverse_in_place(&mut data);
        Ok(ComplexImage::from_raw(w, h, data))
    }

    /// Full fractional convolution against `h_hat`.
    pub fn filter(&self, h_hat: &ComplexImage) -> Result<ComplexImage> {
        let mut out = self.filter_undemodulated(h_hat)?;
        let (w, h) = out.dims();
        let chirps = chirp_pair(w, h, self.orders)?;
        if !chirps.is_identity() {
            for (z, c) in out.data_mut().iter_mut().zip(chirps.negative.data()) {
                *z *= c;
            }
        }
        Ok(out)
    }

    /// `sum_w |X(w)|^2 |H(w)|^2`, the energy of the filtered signal.
    pub fn filtered_energy(&self, h_hat: &ComplexImage) -> Result<f64> {
        ensure_same_dims(self.spectrum.dims(), h_hat.dims())?;
        Ok(self
            .spectrum
            .data()
            .iter()
            .zip(h_hat.data())
            .map(|(a, b)| a.norm_sqr() * b.norm_sqr())
            .sum())
    }
}

/// Fractional convolution of `x` with the kernel whose transfer function
/// (plain DFT of the periodic kernel) is `h_hat`.
pub fn frac_convolve(x: &ComplexImage, h_hat: &ComplexImage, orders: FractionalOrderPair) -> Result<ComplexImage> {
    ensure_same_dims(x.dims(), h_hat.dims())?;
    ModulatedSpectrum::new(x, orders)?.filter(h_hat)
}

/// Classical circular convolution through the FFT.
pub fn plain_convolve(x: &ComplexImage, h_hat: &ComplexImage) -> Result<ComplexImage> {
    frac_convolve(x, h_hat, FractionalOrderPair::classical())
}

/// All channels of the fractional wavelet transform of one signal.
#[derive(Clone, Debug)]
pub struct FrwtOutput {
    pub lowpass: ComplexImage,
    /// Indexed `[scale][angle]`.
    pub bandpass: Vec<Vec<ComplexImage>>,
    pub orders: FractionalOrderPair,
}

impl FrwtOutput {
    pub fn energy(&self) -> f64 {
        self.lowpass.norm_sq() + self.bandpass.iter().flatten().map(ComplexImage::norm_sq).sum::<f64>()
    }

    pub fn channels(&self) -> impl Iterator<Item = &ComplexImage> {
        std::iter::once(&self.lowpass).chain(self.bandpass.iter().flatten())
    }
}

pub fn frwt(x: &ComplexImage, bank: &FilterBank, orders: FractionalOrderPair) -> Result<FrwtOutput> {
    ensure_same_dims(bank.dims(), x.dims())?;
    let spec = ModulatedSpectrum::new(x, orders)?;
    let lowpass = spec.filter(bank.phi_hat())?;
    let mut bandpass = Vec::with_capacity(bank.num_scales());
    for j in 0..bank.num_scales() {
        let row = (0..bank.num_angles())
            .map(|k| spec.filter(bank.psi_hat(j, k)))
            .collect::<Result<Vec<_>>>()?;
        bandpass.push(row);
    }
    Ok(FrwtOutput { lowpass, bandpass, orders })
}
