//! Patch extraction from labeled images, per-channel normalization and
//! assembly of the feature tensor over a grid of fractional orders.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::FilterBank;
use crate::grid::{FractionalOrderPair, RealImage};
use crate::metrics::InstanceMask;
use crate::scattering::scatter;

/// Fractional orders swept along one axis while the other is held at 1.
pub const ORDER_SWEEP: [f64; 9] = [0.05, 0.10, 0.40, 0.70, 1.00, 1.30, 1.60, 1.90, 1.95];

/// The 18-setting grid: `(1, a)` for every sweep value, then `(a, 1)`.
pub fn default_order_grid() -> Vec<FractionalOrderPair> {
    ORDER_SWEEP
        .iter()
        .map(|&a| FractionalOrderPair { alpha1: 1.0, alpha2: a })
        .chain(ORDER_SWEEP.iter().map(|&a| FractionalOrderPair { alpha1: a, alpha2: 1.0 }))
        .collect()
}

/// A stack of equally sized real channels (1 for gray, 3 for color).
#[derive(Clone, Debug, PartialEq)]
pub struct MultiImage {
    channels: Vec<RealImage>,
}

impl MultiImage {
    pub fn new(channels: Vec<RealImage>) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::InvalidImage("image needs at least one channel".into()))?;
        if channels.iter().any(|c| c.dims() != first.dims()) {
            return Err(Error::InvalidImage("channels differ in size".into()));
        }
        Ok(Self { channels })
    }

    pub fn gray(image: RealImage) -> Self {
        Self { channels: vec![image] }
    }

    pub fn channels(&self) -> &[RealImage] {
        &self.channels
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.channels[0].dims()
    }

    /// Channel average.
    pub fn to_gray(&self) -> RealImage {
        let (w, h) = self.dims();
        let n = self.channels.len() as f64;
        RealImage::from_fn(w, h, |x, y| self.channels.iter().map(|c| c.get(x, y)).sum::<f64>() / n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchSource {
    pub image_id: usize,
    /// Patch center in original image coordinates.
    pub x: usize,
    pub y: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPatch {
    pub channels: Vec<RealImage>,
    pub label: i32,
    pub source: PatchSource,
    /// Fraction of the window covered by foreground.
    pub overlap: f64,
}

impl LabeledPatch {
    pub fn dims(&self) -> (usize, usize) {
        self.channels[0].dims()
    }
}

pub const BACKGROUND_LABEL: i32 = 0;
pub const TARGET_LABEL: i32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatchConfig {
    pub window: usize,
    pub stride: usize,
    pub overlap_threshold: f64,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self { window: 32, stride: 16, overlap_threshold: 0.95 }
    }
}

/// Symmetric reflection of a possibly out-of-range index into `[0, len)`.
pub(crate) fn mirror_index(i: isize, len: usize) -> usize {
    let period = 2 * len as isize;
    let r = i.rem_euclid(period);
    if r < len as isize {
        r as usize
    } else {
        (period - 1 - r) as usize
    }
}

/// Cuts `window x window` patches centered on a regular stride grid
/// (first center at `stride / 2`). Pixels beyond the border are mirrored.
/// A patch is a target when its foreground fraction exceeds the
/// threshold, background when it is below `1 - threshold`, and is dropped
/// otherwise.
pub fn extract_patches(
    image: &MultiImage,
    mask: &InstanceMask,
    image_id: usize,
    config: &PatchConfig,
) -> Result<Vec<LabeledPatch>> {
    let (w, h) = image.dims();
    if mask.dims() != (w, h) {
        return Err(Error::DimensionMismatch { expected: (w, h), actual: mask.dims() });
    }
    if !(config.overlap_threshold > 0.0 && config.overlap_threshold <= 1.0) {
        return Err(Error::InvalidPatch(format!(
            "overlap threshold must lie in (0, 1], got {}",
            config.overlap_threshold
        )));
    }
    if config.window == 0 || config.stride == 0 {
        return Err(Error::InvalidPatch("window and stride must be positive".into()));
    }
    if config.window > w || config.window > h {
        return Err(Error::InvalidPatch(format!("window {} larger than image {w}x{h}", config.window)));
    }
    let win = config.window;
    let half = (win / 2) as isize;
    let area = (win * win) as f64;
    let mut patches = Vec::new();
    for cy in (config.stride / 2..h).step_by(config.stride) {
        for cx in (config.stride / 2..w).step_by(config.stride) {
            let (x0, y0) = (cx as isize - half, cy as isize - half);
            let at = |dx: usize, dy: usize| {
                (mirror_index(x0 + dx as isize, w), mirror_index(y0 + dy as isize, h))
            };
            let mut fg = 0usize;
            for dy in 0..win {
                for dx in 0..win {
                    let (sx, sy) = at(dx, dy);
                    if mask.get(sx, sy) != 0 {
                        fg += 1;
                    }
                }
            }
            let overlap = fg as f64 / area;
            let label = if overlap > config.overlap_threshold {
                TARGET_LABEL
            } else if overlap < 1.0 - config.overlap_threshold {
                BACKGROUND_LABEL
            } else {
                continue;
            };
            let channels = image
                .channels()
                .iter()
                .map(|c| {
                    RealImage::from_fn(win, win, |dx, dy| {
                        let (sx, sy) = at(dx, dy);
                        c.get(sx, sy)
                    })
                })
                .collect();
            patches.push(LabeledPatch { channels, label, source: PatchSource { image_id, x: cx, y: cy }, overlap });
        }
    }
    Ok(patches)
}

/// Zero mean, unit L2 norm per channel; constant channels become zero.
pub fn normalize_patch(patch: &LabeledPatch) -> LabeledPatch {
    let channels = patch
        .channels
        .iter()
        .map(|c| {
            let mean = c.mean();
            let centered: Vec<f64> = c.data().iter().map(|v| v - mean).collect();
            let spread = centered.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if spread <= 1e-12 * mean.abs().max(1.0) {
                return RealImage::zeros(c.width(), c.height());
            }
            let norm = centered.iter().map(|v| v * v).sum::<f64>().sqrt();
            RealImage::from_raw(c.width(), c.height(), centered.into_iter().map(|v| v / norm).collect())
        })
        .collect();
    LabeledPatch { channels, ..patch.clone() }
}

/// Characteristic tensor of shape `L x N x D`, stored with the order index
/// slowest and the feature index fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTensor {
    feature_len: usize,
    num_signals: usize,
    order_grid: Vec<FractionalOrderPair>,
    labels: Vec<i32>,
    values: Vec<f64>,
}

impl FeatureTensor {
    pub fn new(
        feature_len: usize,
        num_signals: usize,
        order_grid: Vec<FractionalOrderPair>,
        labels: Vec<i32>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let expected = feature_len
            .checked_mul(num_signals)
            .and_then(|v| v.checked_mul(order_grid.len()))
            .ok_or_else(|| Error::Tensor("dimensions overflow".into()))?;
        if values.len() != expected {
            return Err(Error::Tensor(format!(
                "{feature_len}x{num_signals}x{} tensor needs {expected} values, got {}",
                order_grid.len(),
                values.len()
            )));
        }
        if labels.len() != num_signals {
            return Err(Error::Tensor(format!("{} labels for {num_signals} signals", labels.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Tensor(format!("non-finite value at flat index {i}")));
        }
        Ok(Self { feature_len, num_signals, order_grid, labels, values })
    }

    /// `L`
    pub fn feature_len(&self) -> usize {
        self.feature_len
    }

    /// `N`
    pub fn num_signals(&self) -> usize {
        self.num_signals
    }

    /// `D`
    pub fn num_orders(&self) -> usize {
        self.order_grid.len()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.feature_len, self.num_signals, self.order_grid.len())
    }

    pub fn order_grid(&self) -> &[FractionalOrderPair] {
        &self.order_grid
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Feature vector of signal `n` under order setting `d`.
    pub fn feature(&self, d: usize, n: usize) -> &[f64] {
        let start = (d * self.num_signals + n) * self.feature_len;
        &self.values[start..start + self.feature_len]
    }

    /// Keeps only the signals at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<FeatureTensor> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.num_signals) {
            return Err(Error::Tensor(format!("signal index {bad} out of range")));
        }
        let mut values = Vec::with_capacity(indices.len() * self.feature_len * self.num_orders());
        for d in 0..self.num_orders() {
            for &n in indices {
                values.extend_from_slice(self.feature(d, n));
            }
        }
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        FeatureTensor::new(self.feature_len, indices.len(), self.order_grid.clone(), labels, values)
    }

    /// Copy with replaced labels.
    pub fn with_labels(&self, labels: Vec<i32>) -> Result<FeatureTensor> {
        FeatureTensor::new(self.feature_len, self.num_signals, self.order_grid.clone(), labels, self.values.clone())
    }
}

/// Places `channel` at the center of a `width x height` canvas, mirroring
/// it outward to fill the border.
pub(crate) fn mirror_pad(channel: &RealImage, width: usize, height: usize) -> RealImage {
    let (w, h) = channel.dims();
    let (ox, oy) = ((width - w) / 2, (height - h) / 2);
    RealImage::from_fn(width, height, |x, y| {
        channel.get(mirror_index(x as isize - ox as isize, w), mirror_index(y as isize - oy as isize, h))
    })
}

/// Scatters every patch channel under every order setting and reduces each
/// coefficient map to its mean over the patch footprint. Patches smaller
/// than the bank grid are mirror-padded to it. Features are laid out
/// path-major, channel-minor: index `path * channels + channel`.
pub fn assemble_q(
    patches: &[LabeledPatch],
    bank: &FilterBank,
    order_grid: &[FractionalOrderPair],
) -> Result<FeatureTensor> {
    let first = patches.first().ok_or_else(|| Error::InvalidInput("no patches to assemble".into()))?;
    if order_grid.is_empty() {
        return Err(Error::InvalidInput("empty order grid".into()));
    }
    for o in order_grid {
        o.validate()?;
    }
    let (pw, ph) = first.dims();
    let num_channels = first.channels.len();
    if num_channels == 0 {
        return Err(Error::InvalidInput("patch without channels".into()));
    }
    for p in patches {
        if p.channels.len() != num_channels || p.channels.iter().any(|c| c.dims() != (pw, ph)) {
            return Err(Error::InvalidInput("all patches must share shape and channel count".into()));
        }
    }
    let (gw, gh) = bank.dims();
    if pw > gw || ph > gh {
        return Err(Error::DimensionMismatch { expected: (gw, gh), actual: (pw, ph) });
    }
    let (ox, oy) = ((gw - pw) / 2, (gh - ph) / 2);
    let num_paths = crate::scattering::path_count(bank.num_scales(), bank.num_angles(), bank.spec().max_order);
    let feature_len = num_paths * num_channels;

    // [patch][order] -> feature vector
    let columns = patches
        .par_iter()
        .map(|patch| {
            let padded: Vec<RealImage> = patch.channels.iter().map(|c| mirror_pad(c, gw, gh)).collect();
            order_grid
                .iter()
                .map(|&orders| {
                    let mut column = vec![0.0; feature_len];
                    for (c, channel) in padded.iter().enumerate() {
                        let result = scatter(channel, bank, orders)?;
                        for (p, coeff) in result.coefficients().iter().enumerate() {
                            column[p * num_channels + c] = window_mean(coeff, ox, oy, pw, ph);
                        }
                    }
                    Ok(column)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut values = Vec::with_capacity(feature_len * patches.len() * order_grid.len());
    for d in 0..order_grid.len() {
        for col in &columns {
            values.extend_from_slice(&col[d]);
        }
    }
    let labels = patches.iter().map(|p| p.label).collect();
    FeatureTensor::new(feature_len, patches.len(), order_grid.to_vec(), labels, values)
}

fn window_mean(img: &RealImage, x0: usize, y0: usize, w: usize, h: usize) -> f64 {
    let mut sum = 0.0;
    for y in y0..y0 + h {
        let row = &img.data()[y * img.width() + x0..y * img.width() + x0 + w];
        sum += row.iter().sum::<f64>();
    }
    sum / (w * h) as f64
}
